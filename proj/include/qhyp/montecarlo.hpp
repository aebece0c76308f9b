#pragma once

#include "qhyp/inference.hpp"
#include "qhyp/model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace qhyp {

struct ExperimentSpec {
  HypothesisSet set;
  DetectionScheme scheme;
  double t_final = 5.0;
  std::size_t n_grid = 100;
  std::size_t trajectories = 1000;  // per true hypothesis
  std::uint64_t master_seed = 0;
  bool with_projection = false;
  bool compute_bound = false;
  /// Draw the final projection outcome instead of using the analytic error.
  bool sample_projection = false;
};

/// Returns one message per violated precondition.
std::vector<std::string> validate(const ExperimentSpec& spec);

/// Number of integration steps of the spec; t_final must be a whole number of dt.
std::size_t step_count(const ExperimentSpec& spec);

/// Step indices of the output grid, from 0 to step_count inclusive.
std::vector<std::size_t> grid_steps(const ExperimentSpec& spec);

struct ErrorCurve {
  std::vector<double> times;
  std::vector<double> qe_signal;
  std::vector<double> stderr_signal;
  std::vector<double> qe_projection;      // empty unless computed
  std::vector<double> stderr_projection;  // empty unless computed
  std::vector<double> qe_bound;           // empty unless computed
  std::vector<double> qe_unmonitored;     // empty for more than two hypotheses
  /// counts[g][i * n + j]: records under true hypothesis j assigned to i at grid point g.
  std::vector<std::vector<std::uint64_t>> counts;
  std::size_t hypotheses = 0;
  std::size_t trajectories = 0;
  std::uint64_t degenerate_steps = 0;

  bool operator==(const ErrorCurve&) const = default;
};

struct RunOptions {
  unsigned workers = 0;  // 0: hardware concurrency
};

/// Monte Carlo estimate of the error probability curves.
///
/// Trajectory k under true hypothesis j draws its record from stream
/// (master_seed, j, k). Per-trajectory results are reduced in index order, so
/// the curve is bitwise identical for any worker count.
ErrorCurve run_experiment(const ExperimentSpec& spec, const RunOptions& options = {});

/// Helstrom error of the unconditioned (Lindblad-evolved) candidates.
std::vector<double> unmonitored_error_curve(const HypothesisSet& set, std::span<const double> t_grid,
                                            double max_dt = 1e-3);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// 95% interval of a binomial proportion estimated from m samples. Uses the
/// Wald interval, and the rule of three at the boundaries 0 and 1.
Interval binomial_interval(double estimate, double stderr_, std::size_t m);

struct SummaryRow {
  double t = 0.0;
  double qe_signal = 0.0;
  double stderr_signal = 0.0;
  Interval ci_signal;
  std::optional<double> qe_projection;
  std::optional<double> stderr_projection;
  std::optional<Interval> ci_projection;
  std::optional<double> qe_bound;
  std::optional<double> qe_unmonitored;
};

std::vector<SummaryRow> summarize(const ErrorCurve& curve);

}  // namespace qhyp
