#include "qhyp/cli/config.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

namespace qhyp::cli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) fail(where.empty() ? "/" : where, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) fail(where + "/" + key, "unknown key");
  }
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(where, "expected a finite number");
  return x;
}

std::uint64_t unsigned_integer(const json& v, const std::string& where) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    if (v.get<std::int64_t>() < 0) fail(where, "expected a non-negative integer");
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (x >= 0.0 && x < 0x1p53 && x == std::floor(x)) return static_cast<std::uint64_t>(x);
  }
  fail(where, "expected a non-negative integer");
}

bool boolean(const json& v, const std::string& where) {
  if (!v.is_boolean()) fail(where, "expected true or false");
  return v.get<bool>();
}

std::string string(const json& v, const std::string& where) {
  if (!v.is_string()) fail(where, "expected a string");
  return v.get<std::string>();
}

cplx entry(const json& v, const std::string& where) {
  if (v.is_number()) return {number(v, where), 0.0};
  if (v.is_array() && v.size() == 2) return {number(v[0], where + "/0"), number(v[1], where + "/1")};
  fail(where, "expected a number or a [re, im] pair");
}

CMatrix matrix(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) fail(where, "expected a non-empty square matrix (array of rows)");
  const std::size_t d = v.size();
  CMatrix m(d);
  for (std::size_t r = 0; r < d; ++r) {
    const std::string row_at = where + "/" + std::to_string(r);
    if (!v[r].is_array() || v[r].size() != d) fail(row_at, "expected a row of " + std::to_string(d) + " entries");
    for (std::size_t c = 0; c < d; ++c) m(r, c) = entry(v[r][c], row_at + "/" + std::to_string(c));
  }
  return m;
}

json matrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.dim(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.dim(); ++c) row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

Hypothesis hypothesis(const json& v, const std::string& where, bool& has_prior) {
  check_keys(v, where, {"label", "omega", "gamma", "prior", "hamiltonian", "collapse_ops"});
  const bool shorthand = v.contains("omega") || v.contains("gamma");
  const bool explicit_form = v.contains("hamiltonian") || v.contains("collapse_ops");
  if (shorthand && explicit_form) fail(where, "use either omega/gamma or hamiltonian/collapse_ops, not both");
  if (!shorthand && !explicit_form) fail(where, "missing omega/gamma or hamiltonian");

  Hypothesis h;
  has_prior = v.contains("prior");
  const double prior = has_prior ? number(v["prior"], where + "/prior") : 0.0;
  if (shorthand) {
    if (!v.contains("omega")) fail(where + "/omega", "missing");
    const double gamma = v.contains("gamma") ? number(v["gamma"], where + "/gamma") : 1.0;
    if (gamma < 0.0) fail(where + "/gamma", "must be non-negative");
    h = two_level_rabi(number(v["omega"], where + "/omega"), gamma, prior);
  } else {
    if (!v.contains("hamiltonian")) fail(where + "/hamiltonian", "missing");
    h.hamiltonian = matrix(v["hamiltonian"], where + "/hamiltonian");
    h.prior = prior;
    if (v.contains("collapse_ops")) {
      const json& ops = v["collapse_ops"];
      if (!ops.is_array()) fail(where + "/collapse_ops", "expected an array of matrices");
      for (std::size_t j = 0; j < ops.size(); ++j)
        h.collapse_ops.push_back(matrix(ops[j], where + "/collapse_ops/" + std::to_string(j)));
    }
  }
  if (v.contains("label")) h.label = string(v["label"], where + "/label");
  return h;
}

DetectionScheme scheme(const json& v, std::vector<std::string>& warnings) {
  const std::string at = "/scheme";
  check_keys(v, at, {"kind", "eta", "phi", "beta", "dt", "eta_counting", "eta_homodyne"});
  DetectionScheme s;
  if (v.contains("kind")) {
    const std::string name = string(v["kind"], at + "/kind");
    const auto kind = parse_detection_kind(name);
    if (!kind) fail(at + "/kind", "unknown detection kind '" + name + "' (none, counting, homodyne, hybrid)");
    s.kind = *kind;
  }
  if (v.contains("eta")) s.eta = number(v["eta"], at + "/eta");
  if (v.contains("phi")) s.phi = number(v["phi"], at + "/phi");
  if (v.contains("beta")) s.beta = number(v["beta"], at + "/beta");
  if (v.contains("dt")) s.dt = number(v["dt"], at + "/dt");
  if (v.contains("eta_counting")) s.eta_counting = number(v["eta_counting"], at + "/eta_counting");
  if (v.contains("eta_homodyne")) s.eta_homodyne = number(v["eta_homodyne"], at + "/eta_homodyne");

  const std::string kind{to_string(s.kind)};
  auto ignored = [&](const char* key) {
    if (v.contains(key)) warnings.push_back(at + "/" + key + ": ignored for " + kind + " detection");
  };
  if (s.kind == DetectionKind::None) ignored("eta");
  if (s.kind != DetectionKind::Hybrid) ignored("beta");
  if (!s.has_homodyne()) {
    ignored("phi");
    ignored("eta_homodyne");
  }
  if (!s.has_counting()) ignored("eta_counting");
  return s;
}

void run_section(const json& v, Config& c) {
  const std::string at = "/run";
  check_keys(v, at,
             {"t_final", "n_grid", "M", "master_seed", "with_projection", "compute_bound", "sample_projection",
              "true_hypothesis"});
  ExperimentSpec& s = c.spec;
  if (v.contains("t_final")) s.t_final = number(v["t_final"], at + "/t_final");
  if (v.contains("n_grid")) s.n_grid = unsigned_integer(v["n_grid"], at + "/n_grid");
  if (v.contains("M")) s.trajectories = unsigned_integer(v["M"], at + "/M");
  if (v.contains("master_seed")) s.master_seed = unsigned_integer(v["master_seed"], at + "/master_seed");
  if (v.contains("with_projection")) s.with_projection = boolean(v["with_projection"], at + "/with_projection");
  if (v.contains("compute_bound")) s.compute_bound = boolean(v["compute_bound"], at + "/compute_bound");
  if (v.contains("sample_projection"))
    s.sample_projection = boolean(v["sample_projection"], at + "/sample_projection");
  if (v.contains("true_hypothesis")) c.true_hypothesis = unsigned_integer(v["true_hypothesis"], at + "/true_hypothesis");
}

std::string locate(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

// Anchors a validation message from the model layer to a config location.
std::string anchor(const std::string& message) {
  if (message.rfind("initial state", 0) == 0) return "/initial_state";
  if (message.rfind("hypothesis ", 0) == 0) {
    const std::size_t end = message.find_first_not_of("0123456789", 11);
    return "/hypotheses/" + message.substr(11, end - 11);
  }
  return "/hypotheses";
}

}  // namespace

ParsedConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(locate(text, e.byte) + ": malformed JSON (" + std::string(e.what()) + ")");
  }

  ParsedConfig out;
  Config& c = out.config;
  check_keys(root, "", {"experiment", "hypotheses", "initial_state", "scheme", "run", "output"});

  if (root.contains("experiment")) c.experiment = string(root["experiment"], "/experiment");

  if (!root.contains("hypotheses")) fail("/hypotheses", "missing");
  const json& hyps = root["hypotheses"];
  if (!hyps.is_array()) fail("/hypotheses", "expected an array");
  std::size_t with_prior = 0;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    bool has_prior = false;
    c.spec.set.hypotheses.push_back(hypothesis(hyps[i], "/hypotheses/" + std::to_string(i), has_prior));
    if (has_prior) ++with_prior;
  }
  if (with_prior == 0) {
    for (auto& h : c.spec.set.hypotheses) h.prior = 1.0 / static_cast<double>(c.spec.set.size());
  } else if (with_prior != c.spec.set.size()) {
    for (std::size_t i = 0; i < hyps.size(); ++i)
      if (!hyps[i].contains("prior")) fail("/hypotheses/" + std::to_string(i) + "/prior", "missing (give all priors or none)");
  }
  for (std::size_t i = 0; i < c.spec.set.size(); ++i)
    if (c.spec.set.hypotheses[i].label.empty()) c.spec.set.hypotheses[i].label = "h" + std::to_string(i);

  c.spec.set.initial_state = qubit::ground_state();
  if (root.contains("initial_state")) {
    const json& v = root["initial_state"];
    if (v.is_string()) {
      const std::string name = v.get<std::string>();
      if (name == "ground") {
        c.spec.set.initial_state = qubit::ground_state();
      } else if (name == "excited") {
        c.spec.set.initial_state = qubit::excited_state();
      } else {
        fail("/initial_state", "expected \"ground\", \"excited\" or a density matrix");
      }
    } else {
      c.spec.set.initial_state = matrix(v, "/initial_state");
    }
  }

  c.spec.scheme = scheme(root.contains("scheme") ? root["scheme"] : json::object(), out.warnings);
  if (root.contains("run")) run_section(root["run"], c);

  if (root.contains("output")) {
    check_keys(root["output"], "/output", {"dir", "prefix"});
    if (root["output"].contains("dir")) c.output.dir = string(root["output"]["dir"], "/output/dir");
    if (root["output"].contains("prefix")) c.output.prefix = string(root["output"]["prefix"], "/output/prefix");
  }
  if (c.output.prefix.empty()) c.output.prefix = c.experiment;

  for (const auto& e : validate(c.spec.set)) fail(anchor(e), e);
  for (const auto& e : validate(c.spec.scheme)) fail("/scheme", e);
  for (const auto& e : validate(c.spec)) fail(e.rfind("hypothesis", 0) == 0 ? anchor(e) : "/run", e);
  if (c.true_hypothesis >= c.spec.set.size()) fail("/run/true_hypothesis", "index out of range");
  return out;
}

ParsedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const Config& c) {
  json root;
  root["experiment"] = c.experiment;
  json hyps = json::array();
  for (const auto& h : c.spec.set.hypotheses) {
    json ops = json::array();
    for (const auto& op : h.collapse_ops) ops.push_back(matrix_to_json(op));
    hyps.push_back({{"label", h.label}, {"prior", h.prior}, {"hamiltonian", matrix_to_json(h.hamiltonian)},
                    {"collapse_ops", ops}});
  }
  root["hypotheses"] = hyps;
  root["initial_state"] = matrix_to_json(c.spec.set.initial_state);

  const DetectionScheme& s = c.spec.scheme;
  json sch{{"kind", std::string(to_string(s.kind))}, {"dt", s.dt}};
  if (s.kind != DetectionKind::None) sch["eta"] = s.eta;
  if (s.has_homodyne()) sch["phi"] = s.phi;
  if (s.kind == DetectionKind::Hybrid) sch["beta"] = s.beta;
  if (s.eta_counting && s.has_counting()) sch["eta_counting"] = *s.eta_counting;
  if (s.eta_homodyne && s.has_homodyne()) sch["eta_homodyne"] = *s.eta_homodyne;
  root["scheme"] = sch;

  root["run"] = {{"t_final", c.spec.t_final},
                 {"n_grid", c.spec.n_grid},
                 {"M", c.spec.trajectories},
                 {"master_seed", c.spec.master_seed},
                 {"with_projection", c.spec.with_projection},
                 {"compute_bound", c.spec.compute_bound},
                 {"sample_projection", c.spec.sample_projection},
                 {"true_hypothesis", c.true_hypothesis}};
  root["output"] = {{"dir", c.output.dir}, {"prefix", c.output.prefix}};
  return root.dump(2) + "\n";
}

}  // namespace qhyp::cli
