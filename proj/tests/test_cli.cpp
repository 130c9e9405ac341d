#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mapflow/cli.hpp"

using namespace mapflow;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mapflow");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path temp_dir() {
  const fs::path d = fs::temp_directory_path() / "mapflow_cli_tests";
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::string column(const std::string& csv, const std::string& name) {
  std::istringstream in(csv);
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  const auto h = split(header), v = split(line);
  for (std::size_t i = 0; i < h.size(); ++i)
    if (h[i] == name) return v.at(i);
  return "<missing>";
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("verify") {
  const Run ok = run_cli({"verify", "--map", "lyness", "--a", "2", "--mu", "xy"});
  CHECK(ok.code == cli::kPass);
  CHECK(ok.out.find("verdict PASS") != std::string::npos);
  CHECK(ok.out.find("condition_mu    PASS") != std::string::npos);

  const Run todd = run_cli({"verify", "--map", "todd", "--a", "1", "--mu", "xyz", "--power", "1"});
  CHECK(todd.code == cli::kCheckFailed);
  CHECK(todd.out.find("sigma-") != std::string::npos);
  CHECK(todd.out.find("--power 2") != std::string::npos);

  const Run todd2 = run_cli({"verify", "--map", "todd", "--a", "1", "--mu", "xyz", "--power", "2", "--samples", "200"});
  CHECK(todd2.code == cli::kPass);

  const Run unknown = run_cli({"verify", "--map", "unknown"});
  CHECK(unknown.code == cli::kConfigError);
  CHECK(unknown.err.find("unknown") != std::string::npos);
}

TEST_CASE("config errors") {
  CHECK(run_cli({"verify"}).code == cli::kConfigError);
  CHECK(run_cli({"verify", "--map", "lyness", "--a", "abc"}).code == cli::kConfigError);
  CHECK(run_cli({"verify", "--map", "lyness", "--mu", "nope"}).code == cli::kConfigError);
  CHECK(run_cli({"verify", "--map", "lyness", "--B", "2"}).code == cli::kConfigError);
  CHECK(run_cli({"rotnum", "--map", "lyness"}).code == cli::kConfigError);
  CHECK(run_cli({"rotnum", "--map", "lyness", "--seed", "1,2,3"}).code == cli::kConfigError);
  CHECK(run_cli({"frobnicate"}).code == cli::kConfigError);
  CHECK(run_cli({"verify", "--map", "lyness", "--rel-tol", "-1"}).code == cli::kConfigError);
}

TEST_CASE("config file parsing") {
  std::istringstream good(
      "# comment\n"
      "map = lyness\n"
      "[params]\n"
      "a = 2   # trailing\n"
      "[integrator]\n"
      "rel_tol = 1e-11\n");
  const cli::Settings s = cli::parse_config(good, "x.cfg");
  CHECK(s.at("map").value == "lyness");
  CHECK(s.at("a").value == "2");
  CHECK(s.at("a").origin == "x.cfg:4");

  std::istringstream unknown("map = lyness\nfoo = 1\n");
  try {
    cli::parse_config(unknown, "y.cfg");
    FAIL("expected ConfigError");
  } catch (const cli::ConfigError& e) {
    CHECK(std::string(e.what()).find("y.cfg:2") != std::string::npos);
    CHECK(std::string(e.what()).find("foo") != std::string::npos);
  }
  std::istringstream wrong_section("[sweep]\na = 1\n");
  CHECK_THROWS_AS(cli::parse_config(wrong_section, "z"), cli::ConfigError);
  std::istringstream no_eq("map lyness\n");
  CHECK_THROWS_AS(cli::parse_config(no_eq, "z"), cli::ConfigError);
  std::istringstream dup("map = a\nmap = b\n");
  CHECK_THROWS_AS(cli::parse_config(dup, "z"), cli::ConfigError);

  // Bad values are reported with the line they came from.
  std::istringstream bad_value("map = lyness\n[params]\na = two\n");
  const cli::Settings bv = cli::parse_config(bad_value, "w.cfg");
  try {
    cli::make_run_config("verify", bv);
    FAIL("expected ConfigError");
  } catch (const cli::ConfigError& e) {
    CHECK(std::string(e.what()).find("w.cfg:3") != std::string::npos);
  }
}

TEST_CASE("config file and flags") {
  const fs::path cfg = temp_dir() / "run.cfg";
  {
    std::ofstream f(cfg);
    f << "map = lyness\n[params]\na = 1\n[run]\nseed = 1,1\n";
  }
  const Run from_file = run_cli({"rotnum", "--config", cfg.string()});
  CHECK(from_file.code == cli::kPass);
  CHECK(std::abs(std::stod(column(from_file.out, "rho")) - 0.2) <= 1e-6);

  // Flags win over the file.
  const Run flagged = run_cli({"rotnum", "--config", cfg.string(), "--a", "2"});
  CHECK(flagged.code == cli::kPass);
  CHECK(std::abs(std::stod(column(flagged.out, "rho")) - 0.2) > 1e-3);

  // The environment variable supplies the default path.
  setenv("MAPFLOW_CONFIG", cfg.string().c_str(), 1);
  const Run env = run_cli({"rotnum"});
  unsetenv("MAPFLOW_CONFIG");
  CHECK(env.code == cli::kPass);
  CHECK(env.out == from_file.out);

  CHECK(run_cli({"rotnum", "--config", (temp_dir() / "missing.cfg").string()}).code == cli::kConfigError);
}

TEST_CASE("rotnum") {
  const Run l1 = run_cli({"rotnum", "--map", "lyness", "--a", "1", "--seed", "1,1"});
  CHECK(l1.code == cli::kPass);
  CHECK(std::abs(std::stod(column(l1.out, "rho")) - 0.2) <= 1e-6);
  CHECK(column(l1.out, "m") == "1");
  CHECK(column(l1.out, "status") == "ok");
  CHECK(l1.out.rfind("h1,seed1,seed2,T,tau,rho,m,res_mu,res_X,res_V,status\n", 0) == 0);

  const Run td = run_cli({"rotnum", "--map", "todd", "--a", "1", "--seed", "1,2,3"});
  CHECK(td.code == cli::kPass);
  CHECK(column(td.out, "m") == "2");
  CHECK(td.out.rfind("h1,h2,seed1,seed2,seed3,T,", 0) == 0);

  const Run tl = run_cli({"rotnum", "--map", "tilde_lyness", "--seed", "0.5,1"});
  CHECK(tl.code == cli::kNotInvariant);
  CHECK(column(tl.out, "status") == "not_invariant");

  const Run outside = run_cli({"rotnum", "--map", "lyness", "--seed", "-1,1"});
  CHECK(outside.code == cli::kDomainExit);

  const Run short_horizon = run_cli({"rotnum", "--map", "lyness", "--seed", "1,1", "--horizon", "0.1"});
  CHECK(short_horizon.code == cli::kNonClosure);
}

TEST_CASE("sweep") {
  const fs::path out = temp_dir() / "sweep.csv";
  fs::remove(out);
  const Run r = run_cli({"sweep", "--map", "lyness", "--a", "2", "--count", "20", "--s-max", "4", "--out", out.string()});
  CHECK(r.code == cli::kPass);
  CHECK(r.out.find("# verdict decreasing violations 0") != std::string::npos);
  CHECK(r.out.find("# endpoint") != std::string::npos);
  const std::string csv = slurp(out);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 21);
  CHECK_FALSE(fs::exists(out.string() + ".tmp"));

  // Same config, same bytes.
  const fs::path again = temp_dir() / "sweep2.csv";
  run_cli({"sweep", "--map", "lyness", "--a", "2", "--count", "20", "--s-max", "4", "--out", again.string()});
  CHECK(slurp(again) == csv);

  const Run l1 = run_cli({"sweep", "--map", "lyness", "--a", "1", "--count", "10", "--s-max", "4"});
  CHECK(l1.code == cli::kPass);
  CHECK(l1.out.find("constant rho 0.200000000") != std::string::npos);

  const Run gm = run_cli({"sweep", "--map", "gumovski_mira", "--A", "1", "--B", "1.5", "--C", "0", "--count", "15",
                          "--s-max", "1"});
  CHECK(gm.code == cli::kPass);
  const auto pos = gm.out.find("# endpoint estimate ");
  REQUIRE(pos != std::string::npos);
  const double estimate = std::stod(gm.out.substr(pos + 20));
  CHECK(std::abs(estimate - std::acos(0.75) / (2 * M_PI)) <= 1e-3);

  // No fixed point to start from and no origin given.
  CHECK(run_cli({"sweep", "--map", "tilde_lyness"}).code == cli::kConfigError);
}

TEST_CASE("portrait") {
  const fs::path a = temp_dir() / "gm.svg";
  const fs::path b = temp_dir() / "gm_again.svg";
  CHECK(run_cli({"portrait", "--map", "gumovski_mira", "--A", "1", "--B", "3", "--C", "0", "--out", a.string()}).code ==
        cli::kPass);
  run_cli({"portrait", "--map", "gumovski_mira", "--A", "1", "--B", "3", "--C", "0", "--out", b.string()});
  const std::string svg = slurp(a);
  CHECK(svg == slurp(b));
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("<path") != std::string::npos);
  CHECK(svg.find("<circle") != std::string::npos);

  const Run annulus = run_cli({"portrait", "--map", "gumovski_mira", "--A", "-4", "--B", "-2", "--C", "0"});
  CHECK(annulus.code == cli::kPass);
  CHECK(annulus.out.find("skipped seeds") != std::string::npos);

  const Run todd = run_cli({"portrait", "--map", "todd", "--count", "4", "--axes", "0,2"});
  CHECK(todd.code == cli::kPass);
  CHECK(run_cli({"portrait", "--map", "todd", "--axes", "0,5"}).code == cli::kConfigError);
}

TEST_CASE("csv helpers") {
  CHECK(cli::csv_header(2) == std::vector<std::string>{"h1", "seed1", "seed2", "T", "tau", "rho", "m", "res_mu",
                                                       "res_X", "res_V", "status"});
  CHECK(cli::exit_code_for("ok") == 0);
  CHECK(cli::exit_code_for("domain_exit") == 3);
  CHECK(cli::exit_code_for("not_closed") == 4);
  CHECK(cli::exit_code_for("not_invariant") == 5);
  CHECK(cli::exit_code_for("residual") == 1);
}

}  // TEST_SUITE
