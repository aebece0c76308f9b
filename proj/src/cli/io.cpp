#include "qhyp/cli/io.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace qhyp::cli {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::optional<double> parse_cell(const std::string& cell, std::size_t line) {
  if (cell.empty()) return std::nullopt;
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), x);
  if (ec != std::errc{} || ptr != cell.data() + cell.size())
    throw std::runtime_error("line " + std::to_string(line) + ": not a number: '" + cell + "'");
  return x;
}

void put(std::ostream& out, const std::vector<double>& column, std::size_t i) {
  out << ',';
  if (!column.empty()) out << format_double(column[i]);
}

void put(std::ostream& out, const std::optional<double>& x) {
  out << ',';
  if (x) out << format_double(*x);
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_error_curve_csv(std::ostream& out, const ErrorCurve& curve) {
  out << kErrorCurveHeader << '\n';
  for (std::size_t i = 0; i < curve.times.size(); ++i) {
    out << format_double(curve.times[i]);
    put(out, curve.qe_signal, i);
    put(out, curve.stderr_signal, i);
    put(out, curve.qe_projection, i);
    put(out, curve.stderr_projection, i);
    put(out, curve.qe_bound, i);
    put(out, curve.qe_unmonitored, i);
    out << '\n';
  }
}

ErrorCurve read_error_curve_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kErrorCurveHeader) throw std::runtime_error("line 1: unexpected header");
  ErrorCurve curve;
  std::vector<double>* columns[] = {&curve.times,          &curve.qe_signal, &curve.stderr_signal,
                                    &curve.qe_projection,  &curve.stderr_projection,
                                    &curve.qe_bound,       &curve.qe_unmonitored};
  std::size_t row = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line);
    if (cells.size() != 7) throw std::runtime_error("line " + std::to_string(line_no) + ": expected 7 fields");
    for (std::size_t c = 0; c < 7; ++c) {
      const std::optional<double> v = parse_cell(cells[c], line_no);
      std::vector<double>& col = *columns[c];
      if (v) {
        if (col.size() != row) throw std::runtime_error("line " + std::to_string(line_no) + ": column gap");
        col.push_back(*v);
      } else if (c < 3 || !col.empty()) {
        throw std::runtime_error("line " + std::to_string(line_no) + ": missing value");
      }
    }
    ++row;
  }
  return curve;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "t,qe_signal,stderr_signal,signal_lo95,signal_hi95,qe_projection,stderr_projection,projection_lo95,"
         "projection_hi95,qe_bound,qe_unmonitored\n";
  for (const auto& r : rows) {
    out << format_double(r.t) << ',' << format_double(r.qe_signal) << ',' << format_double(r.stderr_signal) << ','
        << format_double(r.ci_signal.lo) << ',' << format_double(r.ci_signal.hi);
    put(out, r.qe_projection);
    put(out, r.stderr_projection);
    put(out, r.ci_projection ? std::optional<double>(r.ci_projection->lo) : std::nullopt);
    put(out, r.ci_projection ? std::optional<double>(r.ci_projection->hi) : std::nullopt);
    put(out, r.qe_bound);
    put(out, r.qe_unmonitored);
    out << '\n';
  }
}

void write_record_csv(std::ostream& out, const TrajectoryRecord& record) {
  const bool counting = record.scheme.has_counting();
  const bool homodyne = record.scheme.has_homodyne();
  out << "step,dN,dY\n";
  for (std::size_t k = 0; k < record.steps.size(); ++k) {
    out << k << ',';
    if (counting) out << record.steps[k].dN;
    out << ',';
    if (homodyne) out << format_double(record.steps[k].dY);
    out << '\n';
  }
}

void write_trajectory_csv(std::ostream& out, const DetectionScheme& scheme, const std::vector<TrajectoryRow>& rows) {
  const std::size_t n_hyp = rows.empty() ? 0 : rows.front().posteriors.size();
  out << 't';
  if (scheme.has_counting()) out << ",dN";
  if (scheme.has_homodyne()) out << ",dY";
  for (std::size_t i = 0; i < n_hyp; ++i) out << ",P_h" << i;
  out << ",bloch_x,bloch_y,bloch_z\n";
  for (const auto& r : rows) {
    out << format_double(r.t);
    if (scheme.has_counting()) out << ',' << r.signal.dN;
    if (scheme.has_homodyne()) out << ',' << format_double(r.signal.dY);
    for (double p : r.posteriors) out << ',' << format_double(p);
    for (std::size_t a = 0; a < 3; ++a) {
      out << ',';
      if (r.bloch) out << format_double((*r.bloch)[a]);
    }
    out << '\n';
  }
}

}  // namespace qhyp::cli
