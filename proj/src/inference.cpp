#include "qhyp/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace qhyp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_two(std::size_t n, const char* what) {
  if (n != 2) throw std::invalid_argument(std::string(what) + " requires exactly two hypotheses");
}

// Strict weak order on (p, rho) used to put helstrom_error arguments in a fixed order.
bool pair_less(double pa, const CMatrix& a, double pb, const CMatrix& b) {
  if (pa != pb) return pa < pb;
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].real() != y[i].real()) return x[i].real() < y[i].real();
    if (x[i].imag() != y[i].imag()) return x[i].imag() < y[i].imag();
  }
  return false;
}

void check_pure(const CMatrix& initial) {
  if (!is_density_matrix(initial)) throw std::invalid_argument("initial state is not a density matrix");
  const double purity = (initial * initial).trace().real();
  if (purity < 1.0 - 1e-10) throw std::invalid_argument("bound requires pure initial state");
}

void check_grid(std::span<const double> t_grid) {
  double prev = 0.0;
  for (double t : t_grid) {
    if (!std::isfinite(t) || t < prev) throw std::invalid_argument("time grid must be non-negative and ascending");
    prev = t;
  }
}

}  // namespace

BayesTracker::BayesTracker(const HypothesisSet& set, const DetectionScheme& scheme)
    : BayesTracker(set, make_propagators(set, scheme)) {}

BayesTracker::BayesTracker(const HypothesisSet& set, PropagatorSet propagators) : propagators_(std::move(propagators)) {
  if (propagators_.size() != set.size()) throw std::invalid_argument("one propagator per hypothesis is required");
  if (set.size() == 0) throw std::invalid_argument("empty hypothesis set");
  dt_ = propagators_.front()->scheme().dt;
  states_.reserve(set.size());
  for (const auto& h : set.hypotheses) {
    if (h.dim() != set.initial_state.dim()) throw std::invalid_argument("dimension mismatch between hypothesis and initial state");
    ConditionalState s;
    s.rho = set.initial_state;
    s.log_weight = h.prior > 0.0 ? std::log(h.prior) : kNegInf;
    states_.push_back(std::move(s));
  }
}

BayesTracker::PropagatorSet BayesTracker::make_propagators(const HypothesisSet& set, const DetectionScheme& scheme) {
  PropagatorSet out;
  out.reserve(set.size());
  for (const auto& h : set.hypotheses) out.push_back(std::make_shared<const ConditionalPropagator>(h, scheme));
  return out;
}

void BayesTracker::advance(const SignalStep& step) {
  for (std::size_t i = 0; i < states_.size(); ++i)
    if (propagators_[i]->step(states_[i], step) == StepStatus::Degenerate) ++degenerate_;
  ++steps_;
}

std::vector<double> BayesTracker::log_weights() const {
  std::vector<double> w;
  w.reserve(states_.size());
  for (const auto& s : states_) w.push_back(s.log_weight);
  return w;
}

std::vector<double> BayesTracker::posteriors() const {
  const std::vector<double> w = log_weights();
  return posteriors_from_log_weights(w);
}

std::vector<double> posteriors_from_log_weights(std::span<const double> log_weights) {
  double top = kNegInf;
  for (double w : log_weights) {
    if (std::isnan(w)) throw std::runtime_error("log weight is NaN");
    top = std::max(top, w);
  }
  if (top == kNegInf) throw std::runtime_error("record impossible under all hypotheses");
  std::vector<double> p(log_weights.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(log_weights[i] - top);
    sum += p[i];
  }
  for (double& x : p) x /= sum;
  return p;
}

std::size_t assign_signal_only(std::span<const double> posteriors) {
  if (posteriors.empty()) throw std::invalid_argument("no posteriors");
  std::size_t best = 0;
  for (std::size_t i = 1; i < posteriors.size(); ++i)
    if (posteriors[i] > posteriors[best]) best = i;
  return best;
}

MeasurementObservable optimal_observable(double p0, const CMatrix& rho0, double p1, const CMatrix& rho1) {
  if (rho0.dim() != rho1.dim()) throw std::invalid_argument("optimal_observable: dimension mismatch");
  MeasurementObservable obs;
  obs.A = p0 * rho0 - p1 * rho1;
  obs.A.symmetrize();
  obs.decomposition = hermitian_eigs(obs.A);
  return obs;
}

MeasurementObservable optimal_observable(const BayesTracker& tracker) {
  require_two(tracker.size(), "optimal_observable");
  const std::vector<double> p = tracker.posteriors();
  return optimal_observable(p[0], tracker.state(0).rho, p[1], tracker.state(1).rho);
}

std::size_t assign_outcome(double lambda, double p0, double p1) {
  if (lambda > 0.0) return 0;
  if (lambda < 0.0) return 1;
  return p1 > p0 ? 1 : 0;
}

std::array<double, 3> bloch_direction(const CMatrix& a) {
  if (a.dim() != 2) throw std::invalid_argument("bloch_direction requires a two-level observable");
  std::array<double, 3> v{expect(qubit::sigma_x(), a).real(), expect(qubit::sigma_y(), a).real(),
                          expect(qubit::sigma_z(), a).real()};
  const double n = std::hypot(v[0], v[1], v[2]);
  if (n == 0.0) return {0.0, 0.0, 0.0};
  for (double& x : v) x /= n;
  return v;
}

double helstrom_error_unchecked(double p0, const CMatrix& rho0, double p1, const CMatrix& rho1) {
  if (pair_less(p1, rho1, p0, rho0)) return helstrom_error_unchecked(p1, rho1, p0, rho0);
  CMatrix d = p0 * rho0 - p1 * rho1;
  d.symmetrize();
  const double q = 0.5 * (1.0 - trace_norm(d));
  return std::clamp(q, 0.0, 0.5);
}

double helstrom_error(double p0, const CMatrix& rho0, double p1, const CMatrix& rho1) {
  if (!(p0 >= 0.0 && p1 >= 0.0) || std::abs(p0 + p1 - 1.0) > 1e-9)
    throw std::invalid_argument("helstrom_error: priors must be non-negative and sum to 1");
  if (rho0.dim() != rho1.dim()) throw std::invalid_argument("helstrom_error: dimension mismatch");
  if (!is_density_matrix(rho0, 1e-9, -1e-8) || !is_density_matrix(rho1, 1e-9, -1e-8))
    throw std::invalid_argument("helstrom_error: arguments must be normalized density matrices");
  return helstrom_error_unchecked(p0, rho0, p1, rho1);
}

double pure_bound(double p0, double p1, cplx overlap) {
  if (!(p0 >= 0.0 && p1 >= 0.0) || std::abs(p0 + p1 - 1.0) > 1e-9)
    throw std::invalid_argument("pure_bound: priors must be non-negative and sum to 1");
  double mag = std::abs(overlap);
  if (!(mag <= 1.0 + 1e-9)) throw std::invalid_argument("pure_bound: |overlap| exceeds 1");
  mag = std::min(mag, 1.0);
  const double q = 0.5 * (1.0 - std::sqrt(std::max(0.0, 1.0 - 4.0 * p0 * p1 * mag * mag)));
  return std::clamp(q, 0.0, 0.5);
}

std::vector<cplx> overlap_curve(const Hypothesis& h0, const Hypothesis& h1, const CMatrix& initial,
                                std::span<const double> t_grid, double max_dt) {
  if (!(max_dt > 0.0)) throw std::invalid_argument("max_dt must be positive");
  if (initial.dim() != h0.dim()) throw std::invalid_argument("initial state dimension mismatch");
  check_grid(t_grid);

  std::map<double, TwoSidedPropagator> cache;
  OverlapState ov{initial};
  double t = 0.0;
  std::vector<cplx> out;
  out.reserve(t_grid.size());
  for (double target : t_grid) {
    const double span = target - t;
    if (span > 0.0) {
      const auto n = static_cast<std::size_t>(std::ceil(span / max_dt * (1.0 - 1e-12)));
      const double h = span / static_cast<double>(n);
      auto it = cache.find(h);
      if (it == cache.end()) it = cache.emplace(h, TwoSidedPropagator(h0, h1, h)).first;
      for (std::size_t k = 0; k < n; ++k) ov = it->second.step(ov);
    }
    t = target;
    out.push_back(ov.overlap());
  }
  return out;
}

std::vector<double> quantum_bound_curve(const Hypothesis& h0, const Hypothesis& h1, const CMatrix& initial,
                                        std::span<const double> t_grid, double max_dt) {
  check_pure(initial);
  const std::vector<cplx> ov = overlap_curve(h0, h1, initial, t_grid, max_dt);
  std::vector<double> out;
  out.reserve(ov.size());
  for (cplx o : ov) out.push_back(pure_bound(h0.prior, h1.prior, o));
  return out;
}

std::vector<double> posteriors_after_outcome(const MeasurementObservable& obs, std::size_t eigen_index, double p0,
                                             const CMatrix& rho0, double p1, const CMatrix& rho1) {
  const CMatrix& proj = obs.decomposition.projectors.at(eigen_index);
  const double l0 = std::max(0.0, expect(proj, rho0).real()) * p0;
  const double l1 = std::max(0.0, expect(proj, rho1).real()) * p1;
  const double z = l0 + l1;
  if (!(z > 0.0)) return {p0, p1};
  return {l0 / z, l1 / z};
}

ProjectionOutcome project_and_update(const BayesTracker& tracker, std::size_t true_index, double uniform) {
  require_two(tracker.size(), "project_and_update");
  if (true_index >= 2) throw std::invalid_argument("true hypothesis index out of range");
  const std::vector<double> p = tracker.posteriors();
  const CMatrix& rho0 = tracker.state(0).rho;
  const CMatrix& rho1 = tracker.state(1).rho;
  const MeasurementObservable obs = optimal_observable(p[0], rho0, p[1], rho1);
  const CMatrix& truth = tracker.state(true_index).rho;

  const auto& projectors = obs.decomposition.projectors;
  std::size_t chosen = projectors.size() - 1;
  double cumulative = 0.0;
  for (std::size_t k = 0; k < projectors.size(); ++k) {
    cumulative += std::max(0.0, expect(projectors[k], truth).real());
    if (uniform < cumulative) {
      chosen = k;
      break;
    }
  }

  ProjectionOutcome out;
  out.eigen_index = chosen;
  out.eigenvalue = obs.decomposition.eigenvalues[chosen];
  out.posteriors = posteriors_after_outcome(obs, chosen, p[0], rho0, p[1], rho1);
  out.assigned = assign_outcome(out.eigenvalue, p[0], p[1]);
  return out;
}

ProjectionOutcome project_and_update(const BayesTracker& tracker, std::size_t true_index, const RandomStream& stream,
                                     std::uint64_t draw) {
  return project_and_update(tracker, true_index, stream.uniform(draw));
}

}  // namespace qhyp
