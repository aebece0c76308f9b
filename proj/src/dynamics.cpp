#include "qhyp/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qhyp {

namespace {

void require_compatible(const Hypothesis& h0, const Hypothesis& h1) {
  if (h0.dim() == 0) throw std::invalid_argument("hypothesis has an empty Hamiltonian");
  if (h0.dim() != h1.dim()) throw std::invalid_argument("dimension mismatch between hypotheses");
  if (h0.collapse_ops.size() != h1.collapse_ops.size())
    throw std::invalid_argument("hypotheses have different numbers of decay channels");
  for (const auto* h : {&h0, &h1})
    for (const auto& c : h->collapse_ops)
      if (c.dim() != h0.dim()) throw std::invalid_argument("dimension mismatch in collapse operator");
}

void add_scaled(CMatrix& acc, const CMatrix& term, cplx scale) {
  auto dst = acc.data();
  auto src = term.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
}

// Heisenberg dual of a row-major superoperator: Tr(A E(rho)) = Tr(E^dag(A) rho).
CMatrix dual_apply(const CMatrix& superop, const CMatrix& a) {
  const std::size_t d = a.dim();
  CMatrix out(d);
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t l = 0; l < d; ++l) {
      cplx acc{};
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) acc += a(j, i) * superop(i * d + j, k * d + l);
      out(l, k) = acc;
    }
  out.symmetrize();
  return out;
}

CMatrix inverse_sqrt(const CMatrix& s) {
  const EigDecomposition eig = hermitian_eigs(s);
  CMatrix out(s.dim());
  for (std::size_t k = 0; k < eig.eigenvalues.size(); ++k) {
    if (!(eig.eigenvalues[k] > 0.0)) throw std::runtime_error("step effect is not positive definite");
    add_scaled(out, eig.projectors[k], 1.0 / std::sqrt(eig.eigenvalues[k]));
  }
  return out;
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2); }

// Inverse CDF of phi(z) (1 + 2 a z + b z^2) / (1 + b), with a^2 <= b so the density is non-negative.
double tilted_normal_quantile(double u, double a, double b) {
  if (a == 0.0 && b == 0.0) return inverse_normal_cdf(u);
  const bool upper = u > 0.5;
  const double target = upper ? 1.0 - u : u;
  // Increasing residual in z; the upper tail is used for u > 1/2 to keep relative precision.
  auto residual = [&](double z) {
    const double tilt = normal_pdf(z) * (2.0 * a + b * z) / (1.0 + b);
    if (upper) return target - (0.5 * std::erfc(z * std::numbers::sqrt2 / 2.0) + tilt);
    return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0) - tilt - target;
  };
  auto density = [&](double z) { return normal_pdf(z) * (1.0 + 2.0 * a * z + b * z * z) / (1.0 + b); };

  double z = inverse_normal_cdf(u) + 2.0 * a / (1.0 + b);
  double lo = z - 0.5, hi = z + 0.5;
  while (residual(lo) > 0.0) lo -= 2.0 * (hi - lo);
  while (residual(hi) < 0.0) hi += 2.0 * (hi - lo);
  for (int it = 0; it < 200; ++it) {
    const double r = residual(z);
    if (r == 0.0) return z;
    (r < 0.0 ? lo : hi) = z;
    const double f = density(z);
    double next = f > 0.0 ? z - r / f : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - z) <= 1e-15 * std::max(1.0, std::abs(z))) return next;
    z = next;
  }
  return z;
}

}  // namespace

ConditionalState ConditionalState::from_unnormalized(const CMatrix& rho_tilde, double log_weight) {
  const double tr = rho_tilde.trace().real();
  if (!(tr > 0.0) || !std::isfinite(tr)) throw std::invalid_argument("conditional state needs a positive trace");
  ConditionalState s;
  s.rho = (1.0 / tr) * rho_tilde;
  s.rho.symmetrize();
  s.log_weight = log_weight + std::log(tr);
  return s;
}

CMatrix superop_sandwich(const CMatrix& left, const CMatrix& right) {
  const std::size_t d = left.dim();
  if (right.dim() != d) throw std::invalid_argument("superop_sandwich: dimension mismatch");
  CMatrix s(d * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = 0; k < d; ++k)
        for (std::size_t l = 0; l < d; ++l) s(i * d + j, k * d + l) = left(i, k) * right(l, j);
  return s;
}

CMatrix two_sided_generator(const Hypothesis& h0, const Hypothesis& h1, double channel0_jump_weight) {
  require_compatible(h0, h1);
  const std::size_t d = h0.dim();
  const CMatrix id = CMatrix::identity(d);
  const cplx i{0.0, 1.0};

  CMatrix g(d * d);
  add_scaled(g, superop_sandwich(h0.hamiltonian, id), -i);
  add_scaled(g, superop_sandwich(id, h1.hamiltonian), i);
  for (std::size_t j = 0; j < h0.collapse_ops.size(); ++j) {
    const CMatrix& c0 = h0.collapse_ops[j];
    const CMatrix& c1 = h1.collapse_ops[j];
    const double w = j == 0 ? channel0_jump_weight : 1.0;
    add_scaled(g, superop_sandwich(c0, c1.adjoint()), w);
    add_scaled(g, superop_sandwich(c0.adjoint() * c0, id), -0.5);
    add_scaled(g, superop_sandwich(id, c1.adjoint() * c1), -0.5);
  }
  return g;
}

CMatrix lindblad_generator(const Hypothesis& h) { return two_sided_generator(h, h, 1.0); }

void apply_superop(const CMatrix& s, const CMatrix& rho, CMatrix& out) {
  const std::size_t n = rho.size();
  if (s.dim() != n) throw std::invalid_argument("apply_superop: dimension mismatch");
  if (out.dim() != rho.dim()) out = CMatrix(rho.dim());
  // Explicit real arithmetic: std::complex multiplication carries NaN recovery
  // branches that dominate this hot loop.
  const double* sp = reinterpret_cast<const double*>(s.data().data());
  const double* in = reinterpret_cast<const double*>(rho.data().data());
  double* dst = reinterpret_cast<double*>(out.data().data());
  for (std::size_t a = 0; a < n; ++a) {
    const double* row = sp + 2 * a * n;
    double re = 0.0;
    double im = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      re += row[2 * b] * in[2 * b] - row[2 * b + 1] * in[2 * b + 1];
      im += row[2 * b] * in[2 * b + 1] + row[2 * b + 1] * in[2 * b];
    }
    dst[2 * a] = re;
    dst[2 * a + 1] = im;
  }
}

LindbladPropagator::LindbladPropagator(const Hypothesis& h, double dt)
    : dt_(dt), propagator_(expm(dt * lindblad_generator(h))) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
}

CMatrix LindbladPropagator::step(const CMatrix& rho) const {
  CMatrix out(rho.dim());
  apply_superop(propagator_, rho, out);
  out.symmetrize();
  const double tr = out.trace().real();
  out *= 1.0 / tr;
  return out;
}

CMatrix lindblad_step(const CMatrix& state, const Hypothesis& h, double dt) {
  if (state.dim() != h.dim()) throw std::invalid_argument("lindblad_step: dimension mismatch");
  return LindbladPropagator(h, dt).step(state);
}

CMatrix steady_state(const Hypothesis& h) {
  const std::size_t d = h.dim();
  const CMatrix gen = lindblad_generator(h);
  const std::size_t n = d * d;

  const EigDecomposition gram = hermitian_eigs(gen.adjoint() * gen);
  const double top = std::max(gram.eigenvalues.front(), 1e-300);
  int kernel = 0;
  for (double ev : gram.eigenvalues)
    if (ev <= 1e-10 * top) ++kernel;
  if (kernel != 1) throw std::runtime_error("non-unique steady state");

  // Tr(L rho) = 0 makes the (0,0) row redundant; trade it for the trace condition.
  CMatrix a = gen;
  for (std::size_t b = 0; b < n; ++b) a(0, b) = 0.0;
  for (std::size_t k = 0; k < d; ++k) a(0, k * d + k) = 1.0;
  std::vector<cplx> rhs(n, cplx{});
  rhs[0] = 1.0;
  const std::vector<cplx> x = solve(a, rhs);

  CMatrix rho(d);
  for (std::size_t b = 0; b < n; ++b) rho.data()[b] = x[b];
  rho.symmetrize();
  return rho;
}

ConditionalPropagator::ConditionalPropagator(const Hypothesis& h, const DetectionScheme& scheme) : scheme_(scheme) {
  if (const auto errors = validate(scheme); !errors.empty()) throw std::invalid_argument("invalid scheme: " + errors.front());
  const std::size_t d = h.dim();
  if (d == 0) throw std::invalid_argument("hypothesis has an empty Hamiltonian");
  const bool monitored = scheme.kind != DetectionKind::None;
  if (monitored && h.collapse_ops.empty()) throw std::invalid_argument("monitoring requires a collapse operator");

  const double beta = scheme.homodyne_fraction();
  const double eta_c = scheme.counting_efficiency();
  const double eta_h = scheme.homodyne_efficiency();
  const double refeed = monitored ? (1.0 - eta_c) * (1.0 - beta) + (1.0 - eta_h) * beta : 1.0;

  generator_ = two_sided_generator(h, h, refeed);

  counting_ = scheme.has_counting();
  const double jump_amp = monitored ? std::sqrt(eta_c * (1.0 - beta)) : 0.0;
  const double meas_amp = monitored ? std::sqrt(eta_h * beta) : 0.0;
  homodyne_ = scheme.has_homodyne() && meas_amp > 0.0;
  measured_ = homodyne_ || (counting_ && jump_amp > 0.0);

  const CMatrix c = monitored ? h.collapse_ops.front() : CMatrix(d);
  jump_ = jump_amp * c;
  meas_ = (meas_amp * std::polar(1.0, -scheme.phi)) * c;
  meas_rate_ = meas_.adjoint() * meas_;
  no_click_ = step_map(scheme.dt);
}

CMatrix ConditionalPropagator::step_map(double dt) const {
  const CMatrix evolve = expm(dt * generator_);
  if (!measured_) return evolve;
  // Total effect of one step, summed over clicks and integrated over dY against N(0, dt).
  const std::size_t d = jump_.dim();
  CMatrix homodyne_effect = CMatrix::identity(d);
  if (homodyne_) add_scaled(homodyne_effect, meas_rate_, dt);
  CMatrix effect = homodyne_effect;
  if (counting_) add_scaled(effect, jump_.adjoint() * homodyne_effect * jump_, dt);
  const CMatrix r = inverse_sqrt(dual_apply(evolve, effect));
  return evolve * superop_sandwich(r, r);
}

bool ConditionalPropagator::try_step(ConditionalState& cond, const CMatrix& no_click, double dY, bool with_jump,
                                     StepStatus& status) const {
  const std::size_t d = cond.rho.dim();
  CMatrix sigma(d);
  CMatrix tmp(d);
  apply_superop(no_click, cond.rho, sigma);

  double jump_log = 0.0;
  if (with_jump) {
    multiply_into(jump_, sigma, tmp);
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t col = 0; col < d; ++col) {
        cplx acc{};
        for (std::size_t k = 0; k < d; ++k) acc += tmp(r, k) * std::conj(jump_(col, k));
        sigma(r, col) = acc;
      }
    const double jt = sigma.trace().real();
    if (!(jt > 0.0)) {
      cond.log_weight = -std::numeric_limits<double>::infinity();
      status = StepStatus::Impossible;
      return true;
    }
    jump_log = std::log(scheme_.dt);
  }

  if (homodyne_) {
    // M sigma M^dag with M = 1 + m dY, expanded as sigma + dY (X + X^dag) + dY^2 X m^dag, X = m sigma.
    multiply_into(meas_, sigma, tmp);
    const double dy2 = dY * dY;
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t col = 0; col < d; ++col) {
        cplx xm{};
        for (std::size_t k = 0; k < d; ++k) xm += tmp(r, k) * std::conj(meas_(col, k));
        sigma(r, col) += dY * (tmp(r, col) + std::conj(tmp(col, r))) + dy2 * xm;
      }
  }

  sigma.symmetrize();
  const double tr = sigma.trace().real();
  if (!(tr > 0.0) || !std::isfinite(tr)) return false;
  sigma *= 1.0 / tr;
  cond.rho = sigma;
  cond.log_weight += std::log(tr) + jump_log;
  return true;
}

StepStatus ConditionalPropagator::step(ConditionalState& cond, const SignalStep& signal) const {
  if (cond.impossible()) return StepStatus::Impossible;
  if (signal.dN != 0 && signal.dN != 1) throw std::invalid_argument("dN must be 0 or 1");
  if (signal.dN == 1 && !counting_) throw std::invalid_argument("counting increment on a scheme without a counting arm");
  if (cond.rho.dim() != jump_.dim()) throw std::invalid_argument("conditional state dimension mismatch");

  StepStatus status = StepStatus::Ok;
  const bool jump = signal.dN == 1;
  if (try_step(cond, no_click_, signal.dY, jump, status)) return status;

  // Degenerate trace: re-run the interval on 2^k equal sub-steps sharing dY evenly.
  for (int k = 1; k <= 20; ++k) {
    const std::size_t parts = std::size_t{1} << k;
    const double sub_dt = scheme_.dt / static_cast<double>(parts);
    const CMatrix sub = step_map(sub_dt);
    ConditionalState trial = cond;
    bool ok = true;
    for (std::size_t s = 0; s < parts && ok; ++s) {
      StepStatus st = StepStatus::Degenerate;
      ok = try_step(trial, sub, signal.dY / static_cast<double>(parts), jump && s == 0, st);
      if (ok && st == StepStatus::Impossible) {
        cond = trial;
        return StepStatus::Impossible;
      }
    }
    if (ok) {
      cond = std::move(trial);
      return StepStatus::Degenerate;
    }
  }
  throw std::runtime_error("degenerate homodyne step: trace stayed non-positive after 20 halvings");
}

CMatrix ConditionalPropagator::evolve(const CMatrix& rho) const {
  CMatrix sigma(rho.dim());
  apply_superop(no_click_, rho, sigma);
  sigma.symmetrize();
  return sigma;
}

double ConditionalPropagator::click_weight(const CMatrix& sigma) const {
  if (!counting_) return 0.0;
  const CMatrix after = jump_ * sigma * jump_.adjoint();
  double w = after.trace().real();
  if (homodyne_) w += scheme_.dt * expect(meas_rate_, after).real();
  return std::max(w * scheme_.dt, 0.0);
}

double ConditionalPropagator::jump_probability(const CMatrix& rho) const { return click_weight(evolve(rho)); }

double ConditionalPropagator::homodyne_mean(const CMatrix& rho) const {
  return 2.0 * expect(meas_, rho).real();
}

ConditionalState counting_step(const ConditionalState& cond, const Hypothesis& h, double eta, int dN, double dt) {
  DetectionScheme scheme;
  scheme.kind = DetectionKind::Counting;
  scheme.eta = eta;
  scheme.dt = dt;
  ConditionalState out = cond;
  ConditionalPropagator(h, scheme).step(out, {dN, 0.0});
  return out;
}

ConditionalState homodyne_step(const ConditionalState& cond, const Hypothesis& h, double eta, double phi, double dY,
                               double dt) {
  DetectionScheme scheme;
  scheme.kind = DetectionKind::Homodyne;
  scheme.eta = eta;
  scheme.phi = phi;
  scheme.dt = dt;
  ConditionalState out = cond;
  ConditionalPropagator(h, scheme).step(out, {0, dY});
  return out;
}

ConditionalState hybrid_step(const ConditionalState& cond, const Hypothesis& h, const DetectionScheme& scheme,
                             const SignalStep& signal) {
  if (scheme.kind != DetectionKind::Hybrid) throw std::invalid_argument("hybrid_step requires a hybrid scheme");
  ConditionalState out = cond;
  ConditionalPropagator(h, scheme).step(out, signal);
  return out;
}

RecordSampler::RecordSampler(const ConditionalPropagator& truth, StreamId id)
    : truth_(&truth),
      counting_(id, Channel::Counting),
      homodyne_(id, Channel::Homodyne) {}

SignalStep ConditionalPropagator::sample(const CMatrix& rho, double u_click, double u_signal) const {
  SignalStep s;
  CMatrix branch = evolve(rho);
  if (counting_) {
    const double p = click_weight(branch);
    if (p > kMaxClickProbability)
      throw std::runtime_error("dt too coarse: click probability " + std::to_string(p) + " in one step");
    if (u_click < p) {
      s.dN = 1;
      branch = jump_ * branch * jump_.adjoint();
    }
  }
  if (scheme_.has_homodyne()) {
    const double sqrt_dt = std::sqrt(scheme_.dt);
    double a = 0.0, b = 0.0;
    const double tr = branch.trace().real();
    if (homodyne_ && tr > 0.0) {
      a = expect(meas_, branch).real() / tr * sqrt_dt;
      b = expect(meas_rate_, branch).real() / tr * scheme_.dt;
      a = std::clamp(a, -std::sqrt(b), std::sqrt(b));
    }
    s.dY = sqrt_dt * tilted_normal_quantile(u_signal, a, b);
  }
  return s;
}

SignalStep RecordSampler::sample(const CMatrix& rho, std::uint64_t step_index) const {
  return truth_->sample(rho, truth_->counting() ? counting_.uniform(step_index) : 1.0,
                        truth_->scheme().has_homodyne() ? homodyne_.uniform(step_index) : 0.5);
}

TrajectoryRecord simulate_record(const Hypothesis& true_hyp, const CMatrix& initial, const DetectionScheme& scheme,
                                 std::size_t n_steps, StreamId seed) {
  if (!is_density_matrix(initial)) throw std::invalid_argument("simulate_record: initial state is not a density matrix");
  const ConditionalPropagator prop(true_hyp, scheme);
  const RecordSampler sampler(prop, seed);
  ConditionalState state = ConditionalState::from_unnormalized(initial);

  TrajectoryRecord rec;
  rec.scheme = scheme;
  rec.n_steps = n_steps;
  rec.seed = seed;
  rec.steps.reserve(n_steps);
  for (std::size_t k = 0; k < n_steps; ++k) {
    const SignalStep s = sampler.sample(state.rho, k);
    prop.step(state, s);
    rec.steps.push_back(s);
  }
  return rec;
}

TrajectoryRecord simulate_record(const Hypothesis& true_hyp, const CMatrix& initial, const DetectionScheme& scheme,
                                 std::size_t n_steps, std::uint64_t seed) {
  return simulate_record(true_hyp, initial, scheme, n_steps, StreamId{seed, 0, 0});
}

TwoSidedPropagator::TwoSidedPropagator(const Hypothesis& h0, const Hypothesis& h1, double dt)
    : propagator_(expm(dt * two_sided_generator(h0, h1, 1.0))) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
}

OverlapState TwoSidedPropagator::step(const OverlapState& ov) const {
  OverlapState out;
  apply_superop(propagator_, ov.rho01, out.rho01);
  return out;
}

OverlapState two_sided_step(const OverlapState& ov, const Hypothesis& h0, const Hypothesis& h1, double dt) {
  if (ov.rho01.dim() != h0.dim()) throw std::invalid_argument("two_sided_step: dimension mismatch");
  return TwoSidedPropagator(h0, h1, dt).step(ov);
}

}  // namespace qhyp
