#include "doctest.h"

#include "qhyp/cli/commands.hpp"
#include "qhyp/cli/config.hpp"
#include "qhyp/cli/io.hpp"
#include "qhyp/cli/svg.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace qhyp;
using namespace qhyp::cli;
namespace fs = std::filesystem;

namespace {

const std::string kConfigDir = QHYP_CONFIG_DIR;

const char* kMinimal = R"({
  "hypotheses": [{"omega": 2.0}, {"omega": 4.0}],
  "run": {"t_final": 1.0, "n_grid": 11, "M": 5}
})";

std::string config_error(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("qhyp_test_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name, const std::string& text) const {
    const fs::path p = path / name;
    std::ofstream(p) << text;
    return p.string();
  }
};

struct Cli {
  int code = -1;
  std::string out, err;
};

Cli run(std::vector<std::string> args) {
  args.insert(args.begin(), "qhyp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Cli r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

using Table = std::vector<std::vector<std::string>>;

Table read_csv(const fs::path& p, std::string* header = nullptr) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  if (header) *header = line;
  Table rows;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("minimal configuration") {
  const ParsedConfig p = parse_config(kMinimal);
  CHECK(p.warnings.empty());
  const ExperimentSpec& s = p.config.spec;
  REQUIRE(s.set.size() == 2);
  CHECK(s.set.hypotheses[0].prior == 0.5);
  CHECK(s.set.hypotheses[1].label == "h1");
  CHECK(s.set.hypotheses[1].hamiltonian(0, 1) == cplx(2.0));
  CHECK(s.set.initial_state(0, 0) == cplx(1.0));
  CHECK(s.scheme.kind == DetectionKind::Counting);
  CHECK(s.scheme.dt == 1e-3);
  CHECK(s.trajectories == 5);
  CHECK(s.n_grid == 11);
  CHECK(p.config.output.prefix == p.config.experiment);
}

TEST_CASE("configuration errors name their location") {
  const std::string priors = config_error(R"({"hypotheses": [{"omega": 2, "prior": 0.5}, {"omega": 4, "prior": 0.4}]})");
  CHECK(priors.find("/hypotheses") != std::string::npos);
  CHECK(priors.find("0.9") != std::string::npos);

  const std::string unknown = config_error(R"({"hypotheses": [{"omega": 2}, {"omega": 4}], "scheme": {"etaa": 1}})");
  CHECK(unknown.find("/scheme/etaa") != std::string::npos);
  CHECK(config_error(R"({"hypotheses": [{"omega": 2}, {"omega": 4}], "bogus": 1})").find("/bogus") != std::string::npos);

  const std::string syntax = config_error("{\n  \"hypotheses\": [\n  }");
  CHECK(syntax.find("line 3") != std::string::npos);

  CHECK(config_error(R"({"hypotheses": [{"omega": 2, "prior": 1}, {"omega": 4}]})").find("/hypotheses/1/prior") !=
        std::string::npos);
  CHECK(config_error(R"({"hypotheses": [{"omega": "fast"}, {"omega": 4}]})").find("/hypotheses/0/omega") !=
        std::string::npos);
  CHECK(config_error(R"({"hypotheses": [{"omega": 2}, {"omega": 4}], "scheme": {"eta": 2}})").find("/scheme") !=
        std::string::npos);
  CHECK(config_error(R"({"hypotheses": [{"omega": 2}, {"omega": 4}], "scheme": {"kind": "heterodyne"}})")
            .find("/scheme/kind") != std::string::npos);
  CHECK(config_error(R"({"hypotheses": [{"omega": 2}, {"omega": 4}], "run": {"M": 0}})").find("/run") != std::string::npos);
  CHECK(config_error(R"({"hypotheses": [{"omega": 2}, {"omega": 4}], "run": {"M": 2.5}})").find("/run/M") !=
        std::string::npos);
  CHECK(config_error(R"({"hypotheses": [{"omega": 2}, {"omega": 4}], "initial_state": "plus"})").find("/initial_state") !=
        std::string::npos);
  CHECK(config_error(R"({"hypotheses": [{"omega": 2}]})").find("two") != std::string::npos);
}

TEST_CASE("ignored fields warn") {
  const ParsedConfig p = parse_config(R"({"hypotheses": [{"omega": 2}, {"omega": 4}], "scheme": {"kind": "counting", "phi": 1.0}})");
  REQUIRE(p.warnings.size() == 1);
  CHECK(p.warnings[0].find("/scheme/phi") != std::string::npos);
  CHECK(parse_config(R"({"hypotheses": [{"omega": 2}, {"omega": 4}], "scheme": {"kind": "homodyne", "beta": 0.2}})")
            .warnings.size() == 1);
}

TEST_CASE("explicit matrices") {
  const ParsedConfig p = parse_config(R"({
    "hypotheses": [
      {"hamiltonian": [[0, 1], [1, 0]], "collapse_ops": [[[0, 1], [0, 0]]]},
      {"hamiltonian": [[0, [0, -1]], [[0, 1], 0]], "collapse_ops": [[[0, 1], [0, 0]]]}
    ],
    "initial_state": [[0.5, 0.5], [0.5, 0.5]],
    "scheme": {"kind": "homodyne", "phi": 0.3}
  })");
  const auto& h = p.config.spec.set.hypotheses;
  CHECK(h[1].hamiltonian(0, 1) == cplx(0.0, -1.0));
  CHECK(h[1].hamiltonian(1, 0) == cplx(0.0, 1.0));
  CHECK(h[0].collapse_ops[0](0, 1) == cplx(1.0));
  CHECK(p.config.spec.set.initial_state(1, 0) == cplx(0.5));

  CHECK(config_error(R"({"hypotheses": [{"hamiltonian": [[0, [0, 1]], [[0, 1], 0]]}, {"omega": 1}]})").find("/hypotheses/0") !=
        std::string::npos);
}

TEST_CASE("serialized configurations read back unchanged") {
  Config c = parse_config(R"({
    "experiment": "round",
    "hypotheses": [{"omega": 0.1, "gamma": 0.3, "prior": 0.3}, {"omega": -2.7, "gamma": 1.9, "prior": 0.7, "label": "x"}],
    "initial_state": [[0.3, [0.1, 0.2]], [[0.1, -0.2], 0.7]],
    "scheme": {"kind": "hybrid", "eta": 0.7, "phi": 0.123456789, "beta": 0.1, "dt": 0.002, "eta_counting": 0.4},
    "run": {"t_final": 2.0, "n_grid": 7, "M": 13, "master_seed": 18446744073709551615, "with_projection": true},
    "output": {"dir": "somewhere", "prefix": "pre"}
  })").config;
  c.spec.set.hypotheses[0].hamiltonian(0, 1) = cplx(1.0 / 3.0, 1e-17);
  c.spec.set.hypotheses[0].hamiltonian(1, 0) = cplx(1.0 / 3.0, -1e-17);

  const Config back = parse_config(serialize_config(c)).config;
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& a = c.spec.set.hypotheses[i];
    const auto& b = back.spec.set.hypotheses[i];
    CHECK(max_abs_diff(a.hamiltonian, b.hamiltonian) <= 1e-15);
    CHECK(max_abs_diff(a.collapse_ops[0], b.collapse_ops[0]) <= 1e-15);
    CHECK(a.prior == b.prior);
    CHECK(a.label == b.label);
  }
  CHECK(max_abs_diff(c.spec.set.initial_state, back.spec.set.initial_state) <= 1e-15);
  CHECK(back.spec.scheme.kind == DetectionKind::Hybrid);
  CHECK(back.spec.scheme.phi == c.spec.scheme.phi);
  CHECK(back.spec.scheme.eta_counting == c.spec.scheme.eta_counting);
  CHECK_FALSE(back.spec.scheme.eta_homodyne.has_value());
  CHECK(back.spec.master_seed == 18446744073709551615ULL);
  CHECK(back.spec.trajectories == 13);
  CHECK(back.spec.with_projection);
  CHECK(back.output.dir == "somewhere");
  CHECK(back.output.prefix == "pre");
  CHECK(back.experiment == "round");
}

TEST_CASE("error curve CSV round trip") {
  ExperimentSpec spec = parse_config(kMinimal).config.spec;
  spec.with_projection = true;
  spec.compute_bound = true;
  const ErrorCurve c = run_experiment(spec, {1});
  std::stringstream s;
  write_error_curve_csv(s, c);
  std::string header;
  std::getline(s, header);
  CHECK(header == kErrorCurveHeader);
  s.seekg(0);
  const ErrorCurve back = read_error_curve_csv(s);
  CHECK(back.times == c.times);
  CHECK(back.qe_signal == c.qe_signal);
  CHECK(back.stderr_signal == c.stderr_signal);
  CHECK(back.qe_projection == c.qe_projection);
  CHECK(back.stderr_projection == c.stderr_projection);
  CHECK(back.qe_bound == c.qe_bound);
  CHECK(back.qe_unmonitored == c.qe_unmonitored);

  ErrorCurve partial = c;
  partial.qe_projection.clear();
  partial.stderr_projection.clear();
  partial.qe_bound.clear();
  std::stringstream p;
  write_error_curve_csv(p, partial);
  const ErrorCurve pb = read_error_curve_csv(p);
  CHECK(pb.qe_projection.empty());
  CHECK(pb.qe_bound.empty());
  CHECK(pb.qe_unmonitored == c.qe_unmonitored);

  for (double x : {0.1, 1.0 / 3.0, 5e-324, 1e300, -0.0}) CHECK(std::strtod(format_double(x).c_str(), nullptr) == x);
}

TEST_CASE("record CSV leaves the absent arm empty") {
  TrajectoryRecord r;
  r.steps = {{1, 0.0}, {0, 0.0}};
  DetectionScheme counting;
  r.scheme = counting;
  std::ostringstream a;
  write_record_csv(a, r);
  CHECK(a.str() == "step,dN,dY\n0,1,\n1,0,\n");

  r.scheme.kind = DetectionKind::Homodyne;
  r.steps = {{0, 0.25}};
  std::ostringstream b;
  write_record_csv(b, r);
  CHECK(b.str() == "step,dN,dY\n0,,0.25\n");
}

TEST_CASE("svg rendering") {
  Panel p;
  p.y_label = "Q";
  p.series.push_back({"signal", {0.0, 1.0, 2.0}, {0.5, 0.3, 0.2}, "blue", false, false});
  p.series.push_back({"bound", {0.0, 1.0, 2.0}, {0.5, 0.1, 0.0}, "black", true, false});
  const std::string svg = render_svg("t<&>", "t", {p});
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("width=\"800\"") != std::string::npos);
  CHECK(svg.find("height=\"500\"") != std::string::npos);
  CHECK(svg.find("signal") != std::string::npos);
  CHECK(svg.find("t&lt;&amp;&gt;") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("usage and configuration failures exit with 1") {
  TempDir dir;
  CHECK(run({}).code == kExitConfig);
  CHECK(run({"frobnicate"}).code == kExitConfig);
  CHECK(run({"bound"}).code == kExitConfig);
  CHECK(run({"bound", "--config", (dir.path / "missing.json").string()}).code == kExitConfig);
  const std::string bad = dir.file("bad.json", R"({"hypotheses": [{"omega": 2, "prior": 0.5}, {"omega": 4, "prior": 0.4}]})");
  const Cli r = run({"error-curve", "--config", bad});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("/hypotheses") != std::string::npos);
  CHECK(run({"bound", "--config", kConfigDir + "/three_rabi_counting.json", "--out", dir.path.string()}).code == kExitConfig);
  CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("unwritable output exits with 2") {
  TempDir dir;
  const std::string blocker = dir.file("blocker", "x");
  const Cli r = run({"bound", "--config", kConfigDir + "/rabi0_vs_4_counting.json", "--out", blocker + "/sub"});
  CHECK(r.code == kExitRuntime);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("bound command") {
  TempDir dir;
  const Cli r = run({"bound", "--config", kConfigDir + "/rabi0_vs_4_counting.json", "--out", dir.path.string()});
  REQUIRE(r.code == kExitOk);
  std::string header;
  const Table t = read_csv(dir.path / "rabi0_vs_4_counting_bound.csv", &header);
  CHECK(header == "t,qe_bound,qe_unmonitored");
  REQUIRE(t.size() == 101);
  CHECK(std::stod(t[0][1]) == 0.5);
  double min_bound = 1.0;
  for (const auto& row : t) {
    min_bound = std::min(min_bound, std::stod(row[1]));
    CHECK(std::stod(row[2]) >= std::stod(row[1]) - 1e-12);
  }
  CHECK(min_bound < 1e-3);
  CHECK(fs::exists(dir.path / "rabi0_vs_4_counting_bound.svg"));
}

TEST_CASE("error-curve command") {
  TempDir dir;
  const std::string cfg = dir.file("tiny.json", R"({
    "experiment": "tiny",
    "hypotheses": [{"omega": 0}, {"omega": 4}],
    "run": {"t_final": 1.0, "n_grid": 6, "M": 1, "with_projection": true, "compute_bound": true}
  })");
  const Cli r = run({"error-curve", "--config", cfg, "--out", dir.path.string(), "--workers", "2"});
  REQUIRE(r.code == kExitOk);
  std::string header;
  const Table t = read_csv(dir.path / "tiny_error_curve.csv", &header);
  CHECK(header == kErrorCurveHeader);
  REQUIRE(t.size() == 6);
  for (const auto& row : t) {
    REQUIRE(row.size() == 7);
    CHECK(std::stod(row[4]) == 0.0);  // one sample per hypothesis
    for (const auto& cell : row) CHECK_FALSE(cell.empty());
  }
  CHECK(fs::exists(dir.path / "tiny_summary.csv"));
  const std::string svg = slurp((dir.path / "tiny_error_curve.svg").string());
  for (const char* label : {"signal", "projection", "bound", "unmonitored"}) CHECK(svg.find(label) != std::string::npos);

  TempDir quiet;
  REQUIRE(run({"error-curve", "--config", cfg, "--out", quiet.path.string(), "--no-svg"}).code == kExitOk);
  CHECK_FALSE(fs::exists(quiet.path / "tiny_error_curve.svg"));
  CHECK(slurp((quiet.path / "tiny_error_curve.csv").string()) == slurp((dir.path / "tiny_error_curve.csv").string()));

  TempDir reseeded;
  const std::string many = dir.file("many.json", R"({
    "experiment": "tiny",
    "hypotheses": [{"omega": 0}, {"omega": 4}],
    "run": {"t_final": 1.0, "n_grid": 6, "M": 50}
  })");
  REQUIRE(run({"error-curve", "--config", many, "--out", quiet.path.string(), "--no-svg"}).code == kExitOk);
  REQUIRE(run({"error-curve", "--config", many, "--out", reseeded.path.string(), "--no-svg", "--seed", "99"}).code == kExitOk);
  CHECK(slurp((quiet.path / "tiny_error_curve.csv").string()) != slurp((reseeded.path / "tiny_error_curve.csv").string()));
}

TEST_CASE("three hypotheses with counting do not beat one third") {
  ParsedConfig p = load_config(kConfigDir + "/three_rabi_counting.json");
  p.config.spec.trajectories = 2000;
  const ErrorCurve c = run_experiment(p.config.spec);
  MESSAGE("late-time qe_signal " << c.qe_signal.back() << " +- " << c.stderr_signal.back());
  CHECK(std::abs(c.qe_signal.back() - 1.0 / 3.0) < 0.01 + 3.0 * c.stderr_signal.back());
}

TEST_CASE("trajectory command") {
  SUBCASE("counting") {
    TempDir dir;
    const Cli r = run({"trajectory", "--config", kConfigDir + "/rabi2_vs_4_counting.json", "--out", dir.path.string()});
    REQUIRE(r.code == kExitOk);
    std::string header;
    const Table t = read_csv(dir.path / "rabi2_vs_4_counting_trajectory.csv", &header);
    CHECK(header == "t,dN,P_h0,P_h1,bloch_x,bloch_y,bloch_z");
    REQUIRE(t.size() == 5001);
    CHECK(std::stod(t[0][0]) == 0.0);
    CHECK(std::stod(t[0][2]) == 0.5);
    int jumps = 0;
    double biggest_jump = 0.0, biggest_quiet = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      CHECK(std::abs(std::stod(t[i][2]) + std::stod(t[i][3]) - 1.0) < 1e-12);
      if (i == 0) continue;
      const double change = std::abs(std::stod(t[i][2]) - std::stod(t[i - 1][2]));
      if (t[i][1] == "1") {
        ++jumps;
        biggest_jump = std::max(biggest_jump, change);
      } else {
        CHECK(t[i][1] == "0");
        biggest_quiet = std::max(biggest_quiet, change);
      }
    }
    MESSAGE(jumps << " clicks, largest click update " << biggest_jump << ", largest quiet update " << biggest_quiet);
    CHECK(jumps > 0);
    CHECK(biggest_quiet < 1e-2);
    CHECK(biggest_jump > 10 * biggest_quiet);

    const Table rec = read_csv(dir.path / "rabi2_vs_4_counting_record.csv");
    REQUIRE(rec.size() == 5000);
    for (std::size_t i = 0; i < rec.size(); ++i) {
      CHECK(rec[i][1] == t[i + 1][1]);
      CHECK(rec[i][2].empty());
    }
    const std::string sidecar = slurp((dir.path / "rabi2_vs_4_counting_record.json").string());
    CHECK(sidecar.find("\"seed\"") != std::string::npos);
    CHECK(sidecar.find("counting") != std::string::npos);
    CHECK(fs::exists(dir.path / "rabi2_vs_4_counting_trajectory.svg"));
  }
  SUBCASE("no drive means no clicks") {
    TempDir dir;
    const std::string cfg = dir.file("dark.json", R"({
      "experiment": "dark",
      "hypotheses": [{"omega": 0}, {"omega": 4}],
      "run": {"t_final": 5.0, "master_seed": 3, "true_hypothesis": 0}
    })");
    REQUIRE(run({"trajectory", "--config", cfg, "--out", dir.path.string(), "--no-svg"}).code == kExitOk);
    for (const auto& row : read_csv(dir.path / "dark_trajectory.csv")) CHECK(row[1] == "0");
  }
  SUBCASE("homodyne keeps the observable in the y-z plane") {
    TempDir dir;
    REQUIRE(run({"trajectory", "--config", kConfigDir + "/rabi2_vs_4_homodyne.json", "--out", dir.path.string(), "--no-svg"}).code ==
            kExitOk);
    std::string header;
    const Table t = read_csv(dir.path / "rabi2_vs_4_homodyne_trajectory.csv", &header);
    CHECK(header == "t,dY,P_h0,P_h1,bloch_x,bloch_y,bloch_z");
    double worst = 0.0;
    for (const auto& row : t) {
      worst = std::max(worst, std::abs(std::stod(row[4])));
      CHECK(std::abs(std::stod(row[2]) + std::stod(row[3]) - 1.0) < 1e-12);
      const double norm = std::hypot(std::stod(row[4]), std::stod(row[5]), std::stod(row[6]));
      CHECK((norm == 0.0 || std::abs(norm - 1.0) < 1e-12));
    }
    CHECK(worst < 1e-8);
    for (const auto& row : read_csv(dir.path / "rabi2_vs_4_homodyne_record.csv")) CHECK(row[1].empty());
  }
  SUBCASE("run_trajectory matches the tracker") {
    const Config c = load_config(kConfigDir + "/rabi2_vs_4_counting.json").config;
    const TrajectoryRun a = run_trajectory(c.spec, 1);
    const TrajectoryRun b = run_trajectory(c.spec, 1);
    REQUIRE(a.rows.size() == b.rows.size());
    CHECK(a.rows.back().posteriors == b.rows.back().posteriors);
    BayesTracker tracker(c.spec.set, c.spec.scheme);
    for (const auto& s : a.record.steps) tracker.advance(s);
    CHECK(tracker.posteriors() == a.rows.back().posteriors);
  }
}
