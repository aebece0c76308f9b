#pragma once

#include "qhyp/dynamics.hpp"
#include "qhyp/model.hpp"
#include "qhyp/qmatrix.hpp"
#include "qhyp/rng.hpp"

#include <array>
#include <memory>
#include <span>
#include <vector>

namespace qhyp {

/// Runs one conditional state per hypothesis on a shared measurement record.
///
/// Each state starts at the initial density matrix with log_weight = log(prior);
/// the posterior of hypothesis i is then the softmax of the log weights.
class BayesTracker {
 public:
  using PropagatorSet = std::vector<std::shared_ptr<const ConditionalPropagator>>;

  BayesTracker(const HypothesisSet& set, const DetectionScheme& scheme);
  /// Reuses propagators prepared once for many trajectories.
  BayesTracker(const HypothesisSet& set, PropagatorSet propagators);

  static PropagatorSet make_propagators(const HypothesisSet& set, const DetectionScheme& scheme);

  /// Advances every hypothesis on the same signal step.
  void advance(const SignalStep& step);

  std::vector<double> posteriors() const;
  std::vector<double> log_weights() const;

  std::size_t size() const noexcept { return states_.size(); }
  const ConditionalState& state(std::size_t i) const { return states_.at(i); }
  const ConditionalPropagator& propagator(std::size_t i) const { return *propagators_.at(i); }
  double time() const noexcept { return static_cast<double>(steps_) * dt_; }
  std::size_t steps_taken() const noexcept { return steps_; }
  std::size_t degenerate_steps() const noexcept { return degenerate_; }

 private:
  PropagatorSet propagators_;
  std::vector<ConditionalState> states_;
  double dt_ = 0.0;
  std::size_t steps_ = 0;
  std::size_t degenerate_ = 0;
};

/// Softmax of log weights (log-sum-exp). Entries at -inf get posterior 0.
/// Throws std::runtime_error("record impossible under all hypotheses") if all are -inf.
std::vector<double> posteriors_from_log_weights(std::span<const double> log_weights);

/// Signal-only decision: largest posterior, ties to the lower index.
std::size_t assign_signal_only(std::span<const double> posteriors);

/// Optimal final projective measurement for two hypotheses,
/// A = P(h0|D) rho0 - P(h1|D) rho1 on normalized conditional states.
struct MeasurementObservable {
  CMatrix A;
  EigDecomposition decomposition;
};

MeasurementObservable optimal_observable(double p0, const CMatrix& rho0, double p1, const CMatrix& rho1);
MeasurementObservable optimal_observable(const BayesTracker& tracker);

/// Hypothesis favoured by eigenvalue `lambda` of the optimal observable:
/// h0 for lambda > 0, h1 for lambda < 0, and for lambda == 0 the larger of the
/// two posteriors with exact ties going to h0.
std::size_t assign_outcome(double lambda, double p0, double p1);

/// Unit vector along (Tr sigma_x A, Tr sigma_y A, Tr sigma_z A) of a two-level
/// observable; the zero vector when A has no traceless part.
std::array<double, 3> bloch_direction(const CMatrix& a);

/// Minimum error of discriminating rho0 and rho1 with priors p0, p1:
/// (1 - ||p0 rho0 - p1 rho1||_1) / 2. Symmetric in its two (p, rho) pairs.
double helstrom_error(double p0, const CMatrix& rho0, double p1, const CMatrix& rho1);

/// helstrom_error without argument validation, for states produced internally.
double helstrom_error_unchecked(double p0, const CMatrix& rho0, double p1, const CMatrix& rho1);

/// Pure-state bound (1 - sqrt(1 - 4 p0 p1 |overlap|^2)) / 2.
double pure_bound(double p0, double p1, cplx overlap);

/// Lower bound on the error of any measurement on emitter plus radiation field,
/// from the two-sided overlap integrated with steps no longer than `max_dt`.
std::vector<double> quantum_bound_curve(const Hypothesis& h0, const Hypothesis& h1, const CMatrix& initial,
                                        std::span<const double> t_grid, double max_dt = 1e-4);

/// |Tr rho_01(t)| on the grid, from rho_01(0) = initial.
std::vector<cplx> overlap_curve(const Hypothesis& h0, const Hypothesis& h1, const CMatrix& initial,
                                std::span<const double> t_grid, double max_dt = 1e-4);

struct ProjectionOutcome {
  std::size_t eigen_index = 0;
  double eigenvalue = 0.0;
  std::vector<double> posteriors;  // after the projection
  std::size_t assigned = 0;
};

/// Bayes update of two posteriors after observing projector `eigen_index` of `obs`.
std::vector<double> posteriors_after_outcome(const MeasurementObservable& obs, std::size_t eigen_index, double p0,
                                             const CMatrix& rho0, double p1, const CMatrix& rho1);

/// Performs the optimal final projection on a two-hypothesis tracker.
///
/// The outcome is drawn with the physical probabilities Tr(Pi_lambda rho_true)
/// of the true hypothesis' conditional state using `uniform` in (0, 1).
ProjectionOutcome project_and_update(const BayesTracker& tracker, std::size_t true_index, double uniform);
ProjectionOutcome project_and_update(const BayesTracker& tracker, std::size_t true_index, const RandomStream& stream,
                                     std::uint64_t draw);

}  // namespace qhyp
