#include "qhyp/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qhyp {

std::vector<double> HypothesisSet::priors() const {
  std::vector<double> p;
  p.reserve(hypotheses.size());
  for (const auto& h : hypotheses) p.push_back(h.prior);
  return p;
}

std::string_view to_string(DetectionKind kind) {
  switch (kind) {
    case DetectionKind::None: return "none";
    case DetectionKind::Counting: return "counting";
    case DetectionKind::Homodyne: return "homodyne";
    case DetectionKind::Hybrid: return "hybrid";
  }
  return "unknown";
}

std::optional<DetectionKind> parse_detection_kind(std::string_view name) {
  if (name == "none") return DetectionKind::None;
  if (name == "counting") return DetectionKind::Counting;
  if (name == "homodyne") return DetectionKind::Homodyne;
  if (name == "hybrid") return DetectionKind::Hybrid;
  return std::nullopt;
}

double DetectionScheme::homodyne_fraction() const noexcept {
  switch (kind) {
    case DetectionKind::Homodyne: return 1.0;
    case DetectionKind::Hybrid: return beta;
    default: return 0.0;
  }
}

bool DetectionScheme::has_counting() const noexcept {
  return kind == DetectionKind::Counting || (kind == DetectionKind::Hybrid && beta < 1.0);
}

bool DetectionScheme::has_homodyne() const noexcept {
  return kind == DetectionKind::Homodyne || (kind == DetectionKind::Hybrid && beta > 0.0);
}

Hypothesis two_level_rabi(double omega, double gamma, double prior, std::string label) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("two_level_rabi: gamma must be non-negative");
  if (!std::isfinite(omega) || !std::isfinite(gamma))
    throw std::invalid_argument("two_level_rabi: non-finite rate");
  Hypothesis h;
  h.label = std::move(label);
  h.hamiltonian = CMatrix(2);
  h.hamiltonian(qubit::kGround, qubit::kExcited) = 0.5 * omega;
  h.hamiltonian(qubit::kExcited, qubit::kGround) = 0.5 * omega;
  h.collapse_ops.push_back(std::sqrt(gamma) * qubit::lowering());
  h.prior = prior;
  return h;
}

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

}  // namespace

std::vector<std::string> validate(const DetectionScheme& scheme) {
  std::vector<std::string> errors;
  auto check_unit = [&](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) errors.push_back(std::string(name) + " = " + fmt(v) + " outside [0, 1]");
  };
  if (!(scheme.dt > 0.0) || !std::isfinite(scheme.dt)) errors.push_back("dt must be positive");
  if (scheme.kind != DetectionKind::None) check_unit(scheme.eta, "eta");
  if (scheme.kind == DetectionKind::Hybrid) check_unit(scheme.beta, "beta");
  if (scheme.eta_counting) check_unit(*scheme.eta_counting, "eta_counting");
  if (scheme.eta_homodyne) check_unit(*scheme.eta_homodyne, "eta_homodyne");
  if (!std::isfinite(scheme.phi)) errors.push_back("phi must be finite");
  return errors;
}

std::vector<std::string> validate(const HypothesisSet& set) {
  std::vector<std::string> errors;
  if (set.hypotheses.size() < 2) errors.push_back("at least two hypotheses are required");

  const std::size_t dim = set.initial_state.dim();
  if (dim == 0) errors.push_back("initial state is empty");

  double prior_sum = 0.0;
  std::size_t channels = set.hypotheses.empty() ? 0 : set.hypotheses.front().collapse_ops.size();
  for (std::size_t i = 0; i < set.hypotheses.size(); ++i) {
    const Hypothesis& h = set.hypotheses[i];
    const std::string who = "hypothesis " + std::to_string(i) + (h.label.empty() ? "" : " (" + h.label + ")");
    prior_sum += h.prior;
    if (!(h.prior >= 0.0 && h.prior <= 1.0)) errors.push_back(who + ": prior " + fmt(h.prior) + " outside [0, 1]");
    if (h.hamiltonian.dim() != dim) {
      errors.push_back(who + ": dimension mismatch (hamiltonian " + std::to_string(h.hamiltonian.dim()) +
                       " vs initial state " + std::to_string(dim) + ")");
    } else if (!h.hamiltonian.all_finite() || !h.hamiltonian.is_hermitian(tol::kHermitian)) {
      errors.push_back(who + ": hamiltonian is not Hermitian");
    }
    for (std::size_t j = 0; j < h.collapse_ops.size(); ++j) {
      if (h.collapse_ops[j].dim() != dim) {
        errors.push_back(who + ": dimension mismatch (collapse operator " + std::to_string(j) + ")");
      } else if (!h.collapse_ops[j].all_finite()) {
        errors.push_back(who + ": collapse operator " + std::to_string(j) + " has non-finite entries");
      }
    }
    if (h.collapse_ops.size() != channels) {
      errors.push_back(who + ": channel count " + std::to_string(h.collapse_ops.size()) +
                       " differs from hypothesis 0 (" + std::to_string(channels) + ")");
    }
  }
  if (std::abs(prior_sum - 1.0) > tol::kPriorSum) errors.push_back("priors sum to " + fmt(prior_sum));

  if (dim > 0) {
    const CMatrix& rho = set.initial_state;
    if (!rho.all_finite() || !rho.is_hermitian(tol::kHermitian)) {
      errors.push_back("initial state is not Hermitian");
    } else {
      if (std::abs(rho.trace().real() - 1.0) > tol::kUnitTrace)
        errors.push_back("initial state trace is " + fmt(rho.trace().real()));
      if (min_eigenvalue(rho) < tol::kPositivity) errors.push_back("initial state is not positive semidefinite");
    }
  }
  return errors;
}

std::vector<std::string> validate(const HypothesisSet& set, const DetectionScheme& scheme) {
  auto errors = validate(set);
  auto more = validate(scheme);
  errors.insert(errors.end(), more.begin(), more.end());
  if (scheme.kind != DetectionKind::None) {
    for (std::size_t i = 0; i < set.hypotheses.size(); ++i) {
      if (set.hypotheses[i].collapse_ops.empty()) {
        errors.push_back("hypothesis " + std::to_string(i) + ": monitoring requires at least one collapse operator");
        break;
      }
    }
  }
  return errors;
}

}  // namespace qhyp
