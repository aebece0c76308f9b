#pragma once

#include "qhyp/dynamics.hpp"
#include "qhyp/montecarlo.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qhyp::cli {

/// Shortest text that reads back to the same double ("%.17g").
std::string format_double(double x);

inline constexpr const char* kErrorCurveHeader =
    "t,qe_signal,stderr_signal,qe_projection,stderr_projection,qe_bound,qe_unmonitored";

/// One row per grid time; columns that were not computed are left empty.
void write_error_curve_csv(std::ostream& out, const ErrorCurve& curve);
/// Reads the columns written by write_error_curve_csv; counts are not stored in the CSV.
ErrorCurve read_error_curve_csv(std::istream& in);

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

/// `step,dN,dY` per integration step; the column of an absent arm is left empty.
void write_record_csv(std::ostream& out, const TrajectoryRecord& record);

struct TrajectoryRow {
  double t = 0.0;
  SignalStep signal;  // increment over the step ending at t
  std::vector<double> posteriors;
  std::optional<std::array<double, 3>> bloch;
};

/// `t,dN|dY,P_h0,P_h1,...,bloch_x,bloch_y,bloch_z`; the signal columns present
/// follow the scheme's arms.
void write_trajectory_csv(std::ostream& out, const DetectionScheme& scheme, const std::vector<TrajectoryRow>& rows);

}  // namespace qhyp::cli
