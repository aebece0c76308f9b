#pragma once

#include "qhyp/qmatrix.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qhyp {

/// One candidate model: Hamiltonian (angular frequency, hbar = 1), collapse
/// operators (sqrt of rate) and prior probability. Channel 0 is the monitored
/// channel; any further channels decay into an unobserved environment.
struct Hypothesis {
  std::string label;
  CMatrix hamiltonian;
  std::vector<CMatrix> collapse_ops;
  double prior = 0.0;

  std::size_t dim() const noexcept { return hamiltonian.dim(); }
};

struct HypothesisSet {
  std::vector<Hypothesis> hypotheses;
  CMatrix initial_state;

  std::size_t size() const noexcept { return hypotheses.size(); }
  std::size_t dim() const noexcept { return initial_state.dim(); }
  std::vector<double> priors() const;
};

enum class DetectionKind { None, Counting, Homodyne, Hybrid };

std::string_view to_string(DetectionKind kind);
std::optional<DetectionKind> parse_detection_kind(std::string_view name);

/// How channel 0 is monitored.
///
/// `beta` is the fraction of the emission routed to the homodyne arm of a
/// hybrid setup; counting and homodyne are its beta = 0 and beta = 1 limits.
/// The optional per-arm efficiencies override `eta` for that arm.
struct DetectionScheme {
  DetectionKind kind = DetectionKind::Counting;
  double eta = 1.0;
  double phi = 0.0;
  double beta = 0.0;
  double dt = 1e-3;
  std::optional<double> eta_counting;
  std::optional<double> eta_homodyne;

  /// Homodyne fraction actually used by the propagators (0 for counting, 1 for homodyne).
  double homodyne_fraction() const noexcept;
  double counting_efficiency() const noexcept { return eta_counting.value_or(eta); }
  double homodyne_efficiency() const noexcept { return eta_homodyne.value_or(eta); }
  bool has_counting() const noexcept;
  bool has_homodyne() const noexcept;
};

/// Resonantly driven two-level emitter: H = (omega/2) sigma_x, C = sqrt(gamma)|g><e|.
Hypothesis two_level_rabi(double omega, double gamma, double prior, std::string label = {});

/// Every violated invariant as a readable message; empty means valid.
std::vector<std::string> validate(const HypothesisSet& set, const DetectionScheme& scheme);
std::vector<std::string> validate(const HypothesisSet& set);
std::vector<std::string> validate(const DetectionScheme& scheme);

}  // namespace qhyp
