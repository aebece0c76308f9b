#include "qhyp/cli/commands.hpp"

#include "qhyp/cli/svg.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <thread>

namespace qhyp::cli {

namespace {

namespace fs = std::filesystem;

void require_two_hypotheses(const Config& c, const char* command) {
  if (c.spec.set.size() != 2) throw ConfigError(std::string("/hypotheses: ") + command + " requires exactly two hypotheses");
}

const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

Config with_overrides(Config c, const CommandOptions& o) {
  if (o.seed) c.spec.master_seed = *o.seed;
  if (o.out_dir) c.output.dir = *o.out_dir;
  return c;
}

std::string output_path(const Config& c, const std::string& suffix) {
  fs::create_directories(c.output.dir);
  return (fs::path(c.output.dir) / (c.output.prefix + suffix)).string();
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f.exceptions(std::ios::badbit | std::ios::failbit);
  return f;
}

void write_text(const std::string& path, const std::string& text, WrittenFiles& written) {
  std::ofstream f = open_output(path);
  f << text;
  f.close();
  written.push_back(path);
}

Series series(std::string label, const std::vector<double>& x, const std::vector<double>& y, const char* color,
              bool dashed = false) {
  Series s;
  s.label = std::move(label);
  s.x = x;
  s.y = y;
  s.color = color;
  s.dashed = dashed;
  return s;
}

}  // namespace

WrittenFiles cmd_error_curve(const Config& config, const CommandOptions& options) {
  const Config c = with_overrides(config, options);
  const ErrorCurve curve = run_experiment(c.spec, RunOptions{options.workers});

  WrittenFiles written;
  {
    const std::string path = output_path(c, "_error_curve.csv");
    std::ofstream f = open_output(path);
    write_error_curve_csv(f, curve);
    f.close();
    written.push_back(path);
  }
  {
    const std::string path = output_path(c, "_summary.csv");
    std::ofstream f = open_output(path);
    write_summary_csv(f, summarize(curve));
    f.close();
    written.push_back(path);
  }
  if (options.svg) {
    Panel p;
    p.y_label = "Q_e";
    p.y_range = std::pair{0.0, 0.55};
    p.series.push_back(series("signal", curve.times, curve.qe_signal, "#1f77b4"));
    if (!curve.qe_projection.empty())
      p.series.push_back(series("projection", curve.times, curve.qe_projection, "#2ca02c"));
    if (!curve.qe_bound.empty()) p.series.push_back(series("bound", curve.times, curve.qe_bound, "black", true));
    if (!curve.qe_unmonitored.empty())
      p.series.push_back(series("unmonitored", curve.times, curve.qe_unmonitored, "#d62728", true));
    write_text(output_path(c, "_error_curve.svg"), render_svg(c.experiment, "t", {p}), written);
  }
  return written;
}

TrajectoryRun run_trajectory(const ExperimentSpec& spec, std::size_t true_hypothesis) {
  if (spec.set.size() != 2) throw std::invalid_argument("trajectory requires exactly two hypotheses");
  if (true_hypothesis >= spec.set.size()) throw std::invalid_argument("true hypothesis index out of range");
  if (const auto errors = validate(spec); !errors.empty()) throw std::invalid_argument(errors.front());

  const std::size_t n_steps = step_count(spec);
  const StreamId id{spec.master_seed, static_cast<std::uint32_t>(true_hypothesis), 0};

  TrajectoryRun run;
  run.record = simulate_record(spec.set.hypotheses[true_hypothesis], spec.set.initial_state, spec.scheme, n_steps, id);

  BayesTracker tracker(spec.set, spec.scheme);
  const bool two_level = spec.set.dim() == 2;
  auto row = [&](double t, const SignalStep& s) {
    TrajectoryRow r;
    r.t = t;
    r.signal = s;
    r.posteriors = tracker.posteriors();
    if (two_level) r.bloch = bloch_direction(optimal_observable(tracker).A);
    return r;
  };
  run.rows.reserve(n_steps + 1);
  run.rows.push_back(row(0.0, SignalStep{}));
  for (std::size_t k = 0; k < n_steps; ++k) {
    tracker.advance(run.record.steps[k]);
    run.rows.push_back(row(static_cast<double>(k + 1) * spec.scheme.dt, run.record.steps[k]));
  }
  return run;
}

WrittenFiles cmd_trajectory(const Config& config, const CommandOptions& options) {
  const Config c = with_overrides(config, options);
  require_two_hypotheses(c, "trajectory");
  if (c.true_hypothesis >= c.spec.set.size()) throw ConfigError("/run/true_hypothesis: out of range");
  const TrajectoryRun run = run_trajectory(c.spec, c.true_hypothesis);
  const DetectionScheme& scheme = c.spec.scheme;

  WrittenFiles written;
  {
    const std::string path = output_path(c, "_trajectory.csv");
    std::ofstream f = open_output(path);
    write_trajectory_csv(f, scheme, run.rows);
    f.close();
    written.push_back(path);
  }
  {
    const std::string path = output_path(c, "_record.csv");
    std::ofstream f = open_output(path);
    write_record_csv(f, run.record);
    f.close();
    written.push_back(path);
  }
  {
    nlohmann::json meta{{"experiment", c.experiment},
                        {"true_hypothesis", c.true_hypothesis},
                        {"kind", std::string(to_string(scheme.kind))},
                        {"eta", scheme.eta},
                        {"phi", scheme.phi},
                        {"beta", scheme.beta},
                        {"dt", scheme.dt},
                        {"n_steps", run.record.n_steps},
                        {"seed",
                         {{"master_seed", run.record.seed.seed},
                          {"hypothesis", run.record.seed.hypothesis},
                          {"trajectory", run.record.seed.trajectory}}}};
    write_text(output_path(c, "_record.json"), meta.dump(2) + "\n", written);
  }

  if (options.svg) {
    std::vector<double> t, signal, bx, by, bz;
    std::vector<std::vector<double>> post(c.spec.set.size());
    for (const auto& r : run.rows) {
      t.push_back(r.t);
      signal.push_back(scheme.has_counting() ? r.signal.dN : r.signal.dY);
      for (std::size_t i = 0; i < post.size(); ++i) post[i].push_back(r.posteriors[i]);
      if (r.bloch) {
        bx.push_back((*r.bloch)[0]);
        by.push_back((*r.bloch)[1]);
        bz.push_back((*r.bloch)[2]);
      }
    }
    Panel sig;
    sig.y_label = scheme.has_counting() ? "dN" : "dY";
    sig.series.push_back(series(sig.y_label, t, signal, "black"));
    sig.series.back().steps = scheme.has_counting();
    Panel pp;
    pp.y_label = "posterior";
    pp.y_range = std::pair{0.0, 1.0};
    for (std::size_t i = 0; i < post.size(); ++i)
      pp.series.push_back(series("P(" + c.spec.set.hypotheses[i].label + ")", t, post[i], kColors[i % 6]));
    std::vector<Panel> panels{sig, pp};
    if (!bx.empty()) {
      Panel bp;
      bp.y_label = "Bloch direction of A";
      bp.y_range = std::pair{-1.0, 1.0};
      bp.series.push_back(series("x", t, bx, "#ff7f0e"));
      bp.series.push_back(series("y", t, by, "#2ca02c"));
      bp.series.push_back(series("z", t, bz, "#9467bd"));
      panels.push_back(bp);
    }
    write_text(output_path(c, "_trajectory.svg"), render_svg(c.experiment, "t", panels), written);
  }
  return written;
}

WrittenFiles cmd_bound(const Config& config, const CommandOptions& options) {
  const Config c = with_overrides(config, options);
  const ExperimentSpec& spec = c.spec;
  require_two_hypotheses(c, "bound");
  if (const auto errors = validate(spec); !errors.empty()) throw std::invalid_argument(errors.front());

  std::vector<double> times;
  for (std::size_t g : grid_steps(spec)) times.push_back(static_cast<double>(g) * spec.scheme.dt);
  const Hypothesis& h0 = spec.set.hypotheses[0];
  const Hypothesis& h1 = spec.set.hypotheses[1];
  const std::vector<double> bound =
      quantum_bound_curve(h0, h1, spec.set.initial_state, times, std::min(1e-4, spec.scheme.dt));
  const std::vector<double> unmonitored = unmonitored_error_curve(spec.set, times);

  WrittenFiles written;
  {
    const std::string path = output_path(c, "_bound.csv");
    std::ofstream f = open_output(path);
    f << "t,qe_bound,qe_unmonitored\n";
    for (std::size_t i = 0; i < times.size(); ++i)
      f << format_double(times[i]) << ',' << format_double(bound[i]) << ',' << format_double(unmonitored[i]) << '\n';
    f.close();
    written.push_back(path);
  }
  if (options.svg) {
    Panel p;
    p.y_label = "Q_e";
    p.y_range = std::pair{0.0, 0.55};
    p.series.push_back(series("bound", times, bound, "black", true));
    p.series.push_back(series("unmonitored", times, unmonitored, "#d62728", true));
    write_text(output_path(c, "_bound.svg"), render_svg(c.experiment, "t", {p}), written);
  }
  return written;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hypothesis testing with continuously monitored quantum systems", "qhyp"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  std::string out_dir;
  bool no_svg = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON experiment configuration")->required();
    sub->add_option("--seed", seed, "override run.master_seed");
    sub->add_option("--workers", workers, "worker threads (default: available parallelism)");
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
    sub->add_flag("--no-svg", no_svg, "skip SVG plots");
  };
  CLI::App* traj = app.add_subcommand("trajectory", "simulate one record and its posterior trace");
  CLI::App* curve = app.add_subcommand("error-curve", "Monte Carlo error-probability curves");
  CLI::App* bound = app.add_subcommand("bound", "quantum bound and unmonitored error only");
  for (CLI::App* sub : {traj, curve, bound}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  CommandOptions options;
  CLI::App* active = app.get_subcommands().front();
  if (active->count("--seed") > 0) options.seed = seed;
  if (active->count("--out") > 0) options.out_dir = out_dir;
  options.workers = workers != 0 ? workers : std::max(1u, std::thread::hardware_concurrency());
  options.svg = !no_svg;

  ParsedConfig parsed;
  try {
    parsed = load_config(config_path);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  for (const auto& w : parsed.warnings) err << "warning: " << w << '\n';

  try {
    WrittenFiles files;
    if (active == traj) {
      files = cmd_trajectory(parsed.config, options);
    } else if (active == curve) {
      files = cmd_error_curve(parsed.config, options);
    } else {
      files = cmd_bound(parsed.config, options);
    }
    for (const auto& f : files) out << f << '\n';
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace qhyp::cli
