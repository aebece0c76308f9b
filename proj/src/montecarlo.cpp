#include "qhyp/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <stdexcept>
#include <string>
#include <thread>

namespace qhyp {

namespace {

struct KahanSum {
  double sum = 0.0;
  double c = 0.0;

  void add(double x) noexcept {
    const double y = x - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

// Output of one trajectory at every grid point.
struct TrajectoryResult {
  std::vector<std::uint16_t> assigned;
  std::vector<double> projection;  // per-record error, or 0/1 when sampled
  std::uint64_t degenerate = 0;
};

TrajectoryResult run_trajectory(const ExperimentSpec& spec, const BayesTracker::PropagatorSet& props,
                                std::span<const std::size_t> grid, std::uint32_t truth, std::uint32_t k) {
  const StreamId id{spec.master_seed, truth, k};
  BayesTracker tracker(spec.set, props);
  const RecordSampler sampler(*props[truth], id);
  const RandomStream projection_stream(id, Channel::Projection);

  TrajectoryResult out;
  out.assigned.reserve(grid.size());
  if (spec.with_projection) out.projection.reserve(grid.size());

  std::size_t step = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (; step < grid[g]; ++step) tracker.advance(sampler.sample(tracker.state(truth).rho, step));

    const std::vector<double> p = tracker.posteriors();
    out.assigned.push_back(static_cast<std::uint16_t>(assign_signal_only(p)));
    if (!spec.with_projection) continue;
    if (spec.sample_projection) {
      const ProjectionOutcome o = project_and_update(tracker, truth, projection_stream, g);
      out.projection.push_back(o.assigned == truth ? 0.0 : 1.0);
    } else {
      out.projection.push_back(helstrom_error_unchecked(p[0], tracker.state(0).rho, p[1], tracker.state(1).rho));
    }
  }
  out.degenerate = tracker.degenerate_steps();
  return out;
}

std::string describe_failure(const ExperimentSpec& spec, std::size_t truth, std::size_t k, const std::string& what) {
  return "trajectory failed (seed " + std::to_string(spec.master_seed) + ", hypothesis " + std::to_string(truth) +
         ", trajectory " + std::to_string(k) + "): " + what;
}

}  // namespace

std::vector<std::string> validate(const ExperimentSpec& spec) {
  std::vector<std::string> errors = validate(spec.set, spec.scheme);
  if (!(spec.t_final > 0.0) || !std::isfinite(spec.t_final)) errors.push_back("t_final must be positive");
  if (spec.n_grid < 2) errors.push_back("n_grid must be at least 2");
  if (spec.trajectories < 1) errors.push_back("trajectories must be at least 1");
  if (spec.trajectories > (std::size_t{1} << 32)) errors.push_back("trajectories exceeds 2^32");
  if (spec.set.size() > 0xFFFF) errors.push_back("too many hypotheses");
  if (spec.set.size() != 2 && spec.with_projection)
    errors.push_back("with_projection requires exactly two hypotheses");
  if (spec.set.size() != 2 && spec.compute_bound) errors.push_back("compute_bound requires exactly two hypotheses");
  if (spec.sample_projection && !spec.with_projection) errors.push_back("sample_projection requires with_projection");
  if (errors.empty()) {
    const double ratio = spec.t_final / spec.scheme.dt;
    const double n = std::round(ratio);
    if (n < 1.0 || std::abs(ratio - n) > 1e-9 * std::max(1.0, n))
      errors.push_back("t_final must be a whole number of dt steps");
  }
  return errors;
}

std::size_t step_count(const ExperimentSpec& spec) {
  return static_cast<std::size_t>(std::llround(spec.t_final / spec.scheme.dt));
}

std::vector<std::size_t> grid_steps(const ExperimentSpec& spec) {
  const std::size_t n = step_count(spec);
  std::vector<std::size_t> g(spec.n_grid);
  for (std::size_t i = 0; i < spec.n_grid; ++i)
    g[i] = static_cast<std::size_t>(
        std::llround(static_cast<double>(i) * static_cast<double>(n) / static_cast<double>(spec.n_grid - 1)));
  return g;
}

ErrorCurve run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  if (const auto errors = validate(spec); !errors.empty()) throw std::invalid_argument(errors.front());

  const std::size_t n_hyp = spec.set.size();
  const std::size_t m = spec.trajectories;
  const std::vector<std::size_t> grid = grid_steps(spec);
  const std::vector<double> priors = spec.set.priors();
  const BayesTracker::PropagatorSet props = BayesTracker::make_propagators(spec.set, spec.scheme);

  // A true hypothesis with zero prior never contributes and is not simulated.
  std::vector<std::size_t> truths;
  for (std::size_t j = 0; j < n_hyp; ++j)
    if (priors[j] > 0.0) truths.push_back(j);

  const std::size_t total = truths.size() * m;
  std::vector<TrajectoryResult> results(total);
  std::vector<std::exception_ptr> failures(total);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};

  auto work = [&] {
    for (;;) {
      if (abort.load(std::memory_order_relaxed)) return;
      const std::size_t item = next.fetch_add(1, std::memory_order_relaxed);
      if (item >= total) return;
      const std::size_t truth = truths[item / m];
      const std::size_t k = item % m;
      try {
        results[item] = run_trajectory(spec, props, grid, static_cast<std::uint32_t>(truth), static_cast<std::uint32_t>(k));
      } catch (...) {
        failures[item] = std::current_exception();
        abort.store(true, std::memory_order_relaxed);
      }
    }
  };

  unsigned workers = options.workers != 0 ? options.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(total, 1)));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  for (std::size_t item = 0; item < total; ++item) {
    if (!failures[item]) continue;
    const std::size_t truth = truths[item / m];
    const std::size_t k = item % m;
    try {
      std::rethrow_exception(failures[item]);
    } catch (const std::exception& e) {
      throw std::runtime_error(describe_failure(spec, truth, k, e.what()));
    } catch (...) {
      throw std::runtime_error(describe_failure(spec, truth, k, "unknown error"));
    }
  }

  ErrorCurve curve;
  curve.hypotheses = n_hyp;
  curve.trajectories = m;
  const double dt = spec.scheme.dt;
  for (std::size_t g : grid) curve.times.push_back(static_cast<double>(g) * dt);

  const std::size_t n_grid = grid.size();
  const double md = static_cast<double>(m);
  curve.counts.assign(n_grid, std::vector<std::uint64_t>(n_hyp * n_hyp, 0));
  for (std::size_t t = 0; t < truths.size(); ++t) {
    const std::size_t j = truths[t];
    for (std::size_t k = 0; k < m; ++k) {
      const TrajectoryResult& r = results[t * m + k];
      curve.degenerate_steps += r.degenerate;
      for (std::size_t g = 0; g < n_grid; ++g) ++curve.counts[g][r.assigned[g] * n_hyp + j];
    }
  }

  curve.qe_signal.assign(n_grid, 0.0);
  curve.stderr_signal.assign(n_grid, 0.0);
  for (std::size_t g = 0; g < n_grid; ++g) {
    double q = 0.0;
    double var = 0.0;
    for (std::size_t j : truths) {
      std::uint64_t wrong = 0;
      for (std::size_t i = 0; i < n_hyp; ++i)
        if (i != j) wrong += curve.counts[g][i * n_hyp + j];
      const double pj = static_cast<double>(wrong) / md;
      q += priors[j] * pj;
      var += priors[j] * priors[j] * pj * (1.0 - pj) / md;
    }
    curve.qe_signal[g] = q;
    curve.stderr_signal[g] = std::sqrt(var);
  }

  if (spec.with_projection) {
    curve.qe_projection.assign(n_grid, 0.0);
    curve.stderr_projection.assign(n_grid, 0.0);
    for (std::size_t g = 0; g < n_grid; ++g) {
      double q = 0.0;
      double var = 0.0;
      for (std::size_t t = 0; t < truths.size(); ++t) {
        const std::size_t j = truths[t];
        KahanSum sum;
        for (std::size_t k = 0; k < m; ++k) sum.add(results[t * m + k].projection[g]);
        const double mean = sum.sum / md;
        KahanSum sq;
        for (std::size_t k = 0; k < m; ++k) {
          const double d = results[t * m + k].projection[g] - mean;
          sq.add(d * d);
        }
        const double sample_var = m > 1 ? sq.sum / (md - 1.0) : 0.0;
        q += priors[j] * mean;
        var += priors[j] * priors[j] * sample_var / md;
      }
      curve.qe_projection[g] = q;
      curve.stderr_projection[g] = std::sqrt(var);
    }
  }

  if (n_hyp == 2) curve.qe_unmonitored = unmonitored_error_curve(spec.set, curve.times);
  if (spec.compute_bound)
    curve.qe_bound = quantum_bound_curve(spec.set.hypotheses[0], spec.set.hypotheses[1], spec.set.initial_state,
                                         curve.times, std::min(1e-4, dt));
  return curve;
}

std::vector<double> unmonitored_error_curve(const HypothesisSet& set, std::span<const double> t_grid, double max_dt) {
  if (set.size() != 2) throw std::invalid_argument("unmonitored_error_curve requires exactly two hypotheses");
  if (!(max_dt > 0.0)) throw std::invalid_argument("max_dt must be positive");
  const Hypothesis& h0 = set.hypotheses[0];
  const Hypothesis& h1 = set.hypotheses[1];

  std::map<double, std::pair<LindbladPropagator, LindbladPropagator>> cache;
  CMatrix rho0 = set.initial_state;
  CMatrix rho1 = set.initial_state;
  double t = 0.0;
  std::vector<double> out;
  out.reserve(t_grid.size());
  for (double target : t_grid) {
    if (!std::isfinite(target) || target < t) throw std::invalid_argument("time grid must be non-negative and ascending");
    const double span = target - t;
    if (span > 0.0) {
      const auto n = static_cast<std::size_t>(std::ceil(span / max_dt * (1.0 - 1e-12)));
      const double h = span / static_cast<double>(n);
      auto it = cache.find(h);
      if (it == cache.end())
        it = cache.emplace(std::piecewise_construct, std::forward_as_tuple(h),
                           std::forward_as_tuple(LindbladPropagator(h0, h), LindbladPropagator(h1, h)))
                 .first;
      for (std::size_t k = 0; k < n; ++k) {
        rho0 = it->second.first.step(rho0);
        rho1 = it->second.second.step(rho1);
      }
    }
    t = target;
    out.push_back(helstrom_error_unchecked(h0.prior, rho0, h1.prior, rho1));
  }
  return out;
}

Interval binomial_interval(double estimate, double stderr_, std::size_t m) {
  const double md = static_cast<double>(std::max<std::size_t>(m, 1));
  if (estimate <= 0.0) return {0.0, std::min(1.0, 3.0 / md)};
  if (estimate >= 1.0) return {std::max(0.0, 1.0 - 3.0 / md), 1.0};
  constexpr double z = 1.959963984540054;
  return {std::max(0.0, estimate - z * stderr_), std::min(1.0, estimate + z * stderr_)};
}

std::vector<SummaryRow> summarize(const ErrorCurve& curve) {
  std::vector<SummaryRow> rows;
  rows.reserve(curve.times.size());
  for (std::size_t g = 0; g < curve.times.size(); ++g) {
    SummaryRow r;
    r.t = curve.times[g];
    r.qe_signal = curve.qe_signal.at(g);
    r.stderr_signal = curve.stderr_signal.at(g);
    r.ci_signal = binomial_interval(r.qe_signal, r.stderr_signal, curve.trajectories);
    if (!curve.qe_projection.empty()) {
      r.qe_projection = curve.qe_projection[g];
      r.stderr_projection = curve.stderr_projection[g];
      r.ci_projection = binomial_interval(*r.qe_projection, *r.stderr_projection, curve.trajectories);
    }
    if (!curve.qe_bound.empty()) r.qe_bound = curve.qe_bound[g];
    if (!curve.qe_unmonitored.empty()) r.qe_unmonitored = curve.qe_unmonitored[g];
    rows.push_back(r);
  }
  return rows;
}

}  // namespace qhyp
