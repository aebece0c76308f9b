#pragma once

#include "qhyp/model.hpp"
#include "qhyp/qmatrix.hpp"
#include "qhyp/rng.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace qhyp {

/// Conditioned state of one hypothesis.
///
/// `rho` is kept at unit trace; the trace it lost or gained along the record is
/// accumulated in `log_weight`, so the record likelihood times the prior is
/// exp(log_weight). A log_weight of -inf marks a record that is impossible
/// under the hypothesis.
struct ConditionalState {
  CMatrix rho;
  double log_weight = 0.0;

  /// Normalizes `rho_tilde` and folds its trace into the weight.
  static ConditionalState from_unnormalized(const CMatrix& rho_tilde, double log_weight = 0.0);

  bool impossible() const noexcept { return log_weight == -std::numeric_limits<double>::infinity(); }
};

/// One sampling interval of the measurement record. `dN` is meaningful when the
/// scheme has a counting arm, `dY` when it has a homodyne arm.
struct SignalStep {
  int dN = 0;
  double dY = 0.0;

  bool operator==(const SignalStep&) const = default;
};

struct TrajectoryRecord {
  DetectionScheme scheme;
  std::size_t n_steps = 0;
  std::vector<SignalStep> steps;
  StreamId seed;
};

/// Two-sided state rho_01 whose trace is the overlap <psi_0(t)|psi_1(t)> of the
/// joint emitter-plus-field states under two hypotheses.
struct OverlapState {
  CMatrix rho01;

  cplx overlap() const noexcept { return rho01.trace(); }
};

enum class StepStatus {
  Ok,
  Degenerate,  // trace collapsed at the requested dt; the step was re-run on halved sub-steps
  Impossible,  // zero likelihood, log_weight set to -inf
};

// Superoperators act on the row-major vectorization of a d x d matrix and are
// stored as d^2 x d^2 CMatrix values.

/// Superoperator of rho -> left * rho * right.
CMatrix superop_sandwich(const CMatrix& left, const CMatrix& right);

/// Generator of
///   d rho/dt = -i(H0 rho - rho H1)
///              + sum_j w_j c0j rho c1j^dag - (c0j^dag c0j rho + rho c1j^dag c1j)/2
/// with w_0 = `channel0_jump_weight` and w_j = 1 otherwise. With h0 == h1 and
/// unit weight this is the Lindblad generator; with weight (1 - eta) it is the
/// no-detection generator of a counting record.
CMatrix two_sided_generator(const Hypothesis& h0, const Hypothesis& h1, double channel0_jump_weight = 1.0);
CMatrix lindblad_generator(const Hypothesis& h);

/// out = S vec(rho). `out` must not alias `rho`.
void apply_superop(const CMatrix& s, const CMatrix& rho, CMatrix& out);

/// Deterministic Lindblad evolution over a fixed step.
///
/// Each step applies the exact propagator exp(L dt), then removes roundoff by
/// Hermitian symmetrization and renormalization.
class LindbladPropagator {
 public:
  LindbladPropagator(const Hypothesis& h, double dt);

  CMatrix step(const CMatrix& rho) const;
  double dt() const noexcept { return dt_; }

 private:
  double dt_;
  CMatrix propagator_;
};

CMatrix lindblad_step(const CMatrix& state, const Hypothesis& h, double dt);

/// Unique stationary state of the Lindblad generator.
/// Throws std::runtime_error("non-unique steady state") when the kernel is degenerate.
CMatrix steady_state(const Hypothesis& h);

inline constexpr double kMaxClickProbability = 0.1;

/// Stochastic update of a conditional state under one hypothesis and scheme.
///
/// The emission of channel 0 is split into a counting arm (jump operator
/// J = sqrt(eta_c (1 - beta)) C) and a homodyne arm (m = sqrt(eta_h beta) e^{-i phi} C).
/// One step does:
///   1. sigma = exp(K dt) (R rho R), with K the generator whose channel-0 refeeding
///      term carries the undetected fraction (1 - eta_c)(1 - beta) + (1 - eta_h) beta;
///   2. on dN = 1, sigma -> J sigma J^dag, adding log(dt) to the weight;
///   3. sigma -> M sigma M^dag with M = 1 + m dY for the homodyne arm;
///   4. renormalize, adding log(trace) to the weight.
/// R = S^{-1/2} is fixed per propagator, where S is the total effect of steps 1-3
/// (clicks summed, dY integrated against N(0, dt)). Each step is then a
/// normalized instrument: the weights are exact probabilities (clicks) and
/// densities relative to N(0, dt) (dY). R is the identity when nothing is detected.
/// Counting and homodyne monitoring are the beta = 0 and beta = 1 cases of the
/// same code path.
class ConditionalPropagator {
 public:
  ConditionalPropagator(const Hypothesis& h, const DetectionScheme& scheme);

  StepStatus step(ConditionalState& cond, const SignalStep& signal) const;

  /// Probability of a counting click in the next step from normalized `rho`.
  double jump_probability(const CMatrix& rho) const;
  /// Tr(X_phi rho): mean homodyne current of the homodyne arm.
  double homodyne_mean(const CMatrix& rho) const;
  /// Draws the signal of the next step from the law of this instrument, by
  /// inversion of the uniforms `u_click` and `u_signal`.
  /// Throws std::runtime_error("dt too coarse") if the click probability exceeds kMaxClickProbability.
  SignalStep sample(const CMatrix& rho, double u_click, double u_signal) const;

  const DetectionScheme& scheme() const noexcept { return scheme_; }
  bool counting() const noexcept { return counting_; }
  bool homodyne() const noexcept { return homodyne_; }

 private:
  // Returns false when the resulting trace is not positive.
  bool try_step(ConditionalState& cond, const CMatrix& no_click, double dY, bool with_jump, StepStatus& status) const;
  CMatrix step_map(double dt) const;
  CMatrix evolve(const CMatrix& rho) const;
  double click_weight(const CMatrix& sigma) const;

  DetectionScheme scheme_;
  bool counting_ = false;
  bool homodyne_ = false;
  bool measured_ = false;
  CMatrix generator_;
  CMatrix no_click_;  // exp(K dt) composed with R . R
  CMatrix jump_;
  CMatrix meas_;
  CMatrix meas_rate_;  // m^dag m
};

ConditionalState counting_step(const ConditionalState& cond, const Hypothesis& h, double eta, int dN, double dt);
ConditionalState homodyne_step(const ConditionalState& cond, const Hypothesis& h, double eta, double phi, double dY,
                               double dt);
ConditionalState hybrid_step(const ConditionalState& cond, const Hypothesis& h, const DetectionScheme& scheme,
                             const SignalStep& signal);

/// Draws the measurement signal of the next step given the true normalized state.
///
/// The click uses the counting stream and the homodyne increment the homodyne
/// stream, one uniform each per step. To first order in dt a click has
/// probability eta_c (1 - beta) Tr(C^dag C rho) dt and dY = Tr(X_phi rho) dt + dW.
/// Throws std::runtime_error("dt too coarse") if the click probability exceeds 0.1.
class RecordSampler {
 public:
  RecordSampler(const ConditionalPropagator& truth, StreamId id);

  SignalStep sample(const CMatrix& rho, std::uint64_t step_index) const;

 private:
  const ConditionalPropagator* truth_;
  RandomStream counting_;
  RandomStream homodyne_;
};

TrajectoryRecord simulate_record(const Hypothesis& true_hyp, const CMatrix& initial, const DetectionScheme& scheme,
                                 std::size_t n_steps, StreamId seed);
TrajectoryRecord simulate_record(const Hypothesis& true_hyp, const CMatrix& initial, const DetectionScheme& scheme,
                                 std::size_t n_steps, std::uint64_t seed);

/// Exact one-step propagator of the two-sided equation.
class TwoSidedPropagator {
 public:
  TwoSidedPropagator(const Hypothesis& h0, const Hypothesis& h1, double dt);

  OverlapState step(const OverlapState& ov) const;

 private:
  CMatrix propagator_;
};

OverlapState two_sided_step(const OverlapState& ov, const Hypothesis& h0, const Hypothesis& h1, double dt);

}  // namespace qhyp
