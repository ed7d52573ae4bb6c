#pragma once

// Scenario files: JSON in, validated ScenarioConfig out, and back.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kpc/errors.hpp"
#include "kpc/kinematics.hpp"
#include "kpc/regularization.hpp"
#include "kpc/types.hpp"

namespace kpc {

enum class Regularization { None, LogLog, Clipped };

inline const char* to_string(Regularization r) {
  switch (r) {
    case Regularization::None: return "none";
    case Regularization::LogLog: return "loglog";
    case Regularization::Clipped: return "clipped";
  }
  return "?";
}

/// Either an explicit increasing list or `steps` evenly spaced samples from
/// t_start to t_end inclusive.
struct TimeSpec {
  bool is_list = true;
  std::vector<double> list{0.0};
  double t_start = 0.0;
  double t_end = 0.0;
  std::size_t steps = 1;

  std::vector<double> values() const {
    if (is_list) return list;
    std::vector<double> out(steps);
    for (std::size_t i = 0; i < steps; ++i)
      out[i] = steps == 1 ? t_start
                          : t_start + (t_end - t_start) * static_cast<double>(i) /
                                          static_cast<double>(steps - 1);
    return out;
  }

  friend bool operator==(const TimeSpec&, const TimeSpec&) = default;
};

struct ExportRequest {
  std::string format = "csv";  // csv | pgm
  std::string field = "F";     // pgm only: F (display map) or f (raw)
  std::optional<std::pair<double, double>> range;

  friend bool operator==(const ExportRequest&, const ExportRequest&) = default;
};

struct ClipOptions {
  double cap = 10.0;
  ClipMode mode = ClipMode::Saturating;

  friend bool operator==(const ClipOptions&, const ClipOptions&) = default;
};

struct VerificationOptions {
  double fd_step = 5e-3;
  double exclusion_radius = 0.5;

  friend bool operator==(const VerificationOptions&, const VerificationOptions&) = default;
};

struct RogueOptions {
  double background_window = 2.0;
  double ratio_threshold = 3.0;
  double exclusion_radius = 0.5;
  double min_separation = 1.0;
  std::vector<double> trough_times;

  friend bool operator==(const RogueOptions&, const RogueOptions&) = default;
};

struct LimitOptions {
  std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
  std::vector<EvalPoint> probes{{1.0, 2.0, 0.0}, {-2.5, 1.5, 0.0}, {3.0, -1.0, 0.0},
                                {-1.0, -3.0, 0.0}};

  friend bool operator==(const LimitOptions&, const LimitOptions&) = default;
};

struct TransformOptions {
  std::vector<EvalPoint> points;
  std::vector<double> depths{0.0};  // physical z, 0 = still surface
  FxPath fx_path = FxPath::FiniteDifference;

  friend bool operator==(const TransformOptions&, const TransformOptions&) = default;
};

/// Display-only cut applied by `eval`: keep one side of a line (label 1, the
/// side the normal points to) or the sign component containing a point.
struct Restriction {
  enum class Kind { None, HalfPlane, Component };
  Kind kind = Kind::None;
  std::array<double, 2> point{0.0, 0.0};
  std::array<double, 2> normal{0.0, 1.0};

  friend bool operator==(const Restriction&, const Restriction&) = default;
};

struct ScenarioConfig {
  std::string name;
  Family family = Family::Trigonometric;
  double alpha = 1.0;
  std::vector<SpectralMode> spectral;
  std::vector<SolitonMode> solitons;
  GridSpec grid;
  TimeSpec times;
  std::optional<FluidParams> fluid;
  Regularization regularization = Regularization::LogLog;
  ClipOptions clip;
  Restriction restrict;
  std::vector<ExportRequest> outputs{ExportRequest{"csv", "F", {}}, ExportRequest{"pgm", "F", {}}};
  VerificationOptions verification;
  RogueOptions rogue;
  LimitOptions limit;
  TransformOptions transform;

  SolutionSpec solution() const {
    if (family == Family::Soliton) return SolutionSpec::soliton(solitons, alpha);
    if (family == Family::Trigonometric) return SolutionSpec::trigonometric(spectral, alpha);
    return SolutionSpec::hyperbolic(spectral, alpha);
  }

  FluidParams fluid_or_default() const { return fluid.value_or(FluidParams{}); }

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

namespace detail {

using nlohmann::json;

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline std::string item(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

inline const json& object_at(const json& j, const std::string& path) {
  if (!j.is_object()) throw ParseError(path.empty() ? "<root>" : path, "expected an object");
  return j;
}

inline void reject_unknown(const json& obj, const std::string& path,
                           std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(),
                                [&](const char* a) { return it.key() == a; });
    if (!ok) throw ParseError(join(path, it.key()), "unknown key");
  }
}

inline double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ParseError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ValidationError(path, "not finite");
  return v;
}

inline std::size_t as_count(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ParseError(path, "expected an integer");
  const auto v = j.get<long long>();
  if (v < 0) throw ValidationError(path, "must be non-negative");
  return static_cast<std::size_t>(v);
}

inline std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ParseError(path, "expected a string");
  return j.get<std::string>();
}

inline const json& as_array(const json& j, const std::string& path) {
  if (!j.is_array()) throw ParseError(path, "expected an array");
  return j;
}

inline double number_or(const json& obj, const std::string& path, const char* key, double fallback) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : as_number(*it, join(path, key));
}

inline double required_number(const json& obj, const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(join(path, key), "missing");
  return as_number(*it, join(path, key));
}

inline std::vector<double> number_list(const json& j, const std::string& path) {
  std::vector<double> out;
  for (std::size_t i = 0; i < as_array(j, path).size(); ++i) out.push_back(as_number(j[i], item(path, i)));
  return out;
}

inline std::vector<EvalPoint> point_list(const json& j, const std::string& path) {
  std::vector<EvalPoint> out;
  for (std::size_t i = 0; i < as_array(j, path).size(); ++i) {
    const std::string p = item(path, i);
    const auto v = number_list(j[i], p);
    if (v.size() != 3) throw ParseError(p, "expected [x, y, t]");
    out.push_back(EvalPoint{v[0], v[1], v[2]});
  }
  return out;
}

inline std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

inline Family parse_family(const std::string& s, const std::string& path) {
  if (s == "trigonometric") return Family::Trigonometric;
  if (s == "hyperbolic") return Family::Hyperbolic;
  if (s == "soliton") return Family::Soliton;
  throw ValidationError(path, "unknown family '" + s + "'");
}

inline void parse_modes(const json& j, ScenarioConfig& c) {
  const std::string path = "modes";
  as_array(j, path);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = item(path, i);
    const json& m = object_at(j[i], p);
    if (c.family == Family::Soliton) {
      reject_unknown(m, p, {"p_re", "p_im", "q_re", "q_im", "c_re", "c_im"});
      SolitonMode s;
      s.p = {required_number(m, p, "p_re"), number_or(m, p, "p_im", 0.0)};
      s.q = {required_number(m, p, "q_re"), number_or(m, p, "q_im", 0.0)};
      s.c = {required_number(m, p, "c_re"), number_or(m, p, "c_im", 0.0)};
      c.solitons.push_back(s);
    } else {
      reject_unknown(m, p, {"lambda", "mu", "chi", "gamma", "rho"});
      SpectralMode s;
      s.lambda = required_number(m, p, "lambda");
      s.mu = number_or(m, p, "mu", 0.0);
      s.chi = number_or(m, p, "chi", 0.0);
      s.gamma = number_or(m, p, "gamma", 0.0);
      s.rho = number_or(m, p, "rho", 0.0);
      c.spectral.push_back(s);
    }
  }
}

inline GridSpec parse_grid(const json& j) {
  const std::string path = "grid";
  reject_unknown(object_at(j, path), path, {"x_min", "x_max", "y_min", "y_max", "nx", "ny"});
  GridSpec g;
  g.x_min = required_number(j, path, "x_min");
  g.x_max = required_number(j, path, "x_max");
  g.y_min = required_number(j, path, "y_min");
  g.y_max = required_number(j, path, "y_max");
  for (const char* k : {"nx", "ny"})
    if (!j.contains(k)) throw ParseError(join(path, k), "missing");
  g.nx = as_count(j["nx"], "grid.nx");
  g.ny = as_count(j["ny"], "grid.ny");
  return g;
}

inline TimeSpec parse_times(const json& j) {
  const std::string path = "times";
  TimeSpec ts;
  if (j.is_array()) {
    ts.is_list = true;
    ts.list = number_list(j, path);
    return ts;
  }
  reject_unknown(object_at(j, path), path, {"t_start", "t_end", "steps"});
  ts.is_list = false;
  ts.list.clear();
  ts.t_start = required_number(j, path, "t_start");
  ts.t_end = required_number(j, path, "t_end");
  if (!j.contains("steps")) throw ParseError("times.steps", "missing");
  ts.steps = as_count(j["steps"], "times.steps");
  return ts;
}

inline FluidParams parse_fluid(const json& j) {
  const std::string path = "fluid";
  reject_unknown(object_at(j, path), path, {"g", "h", "epsilon", "rho_fluid", "S"});
  FluidParams f;
  f.g = number_or(j, path, "g", f.g);
  f.h = number_or(j, path, "h", f.h);
  f.epsilon = number_or(j, path, "epsilon", f.epsilon);
  f.rho_fluid = number_or(j, path, "rho_fluid", f.rho_fluid);
  f.S = number_or(j, path, "S", f.S);
  return f;
}

inline std::vector<ExportRequest> parse_outputs(const json& j) {
  const std::string path = "outputs";
  std::vector<ExportRequest> out;
  for (std::size_t i = 0; i < as_array(j, path).size(); ++i) {
    const std::string p = item(path, i);
    const json& o = object_at(j[i], p);
    reject_unknown(o, p, {"format", "field", "range"});
    ExportRequest r;
    if (!o.contains("format")) throw ParseError(join(p, "format"), "missing");
    r.format = as_string(o["format"], join(p, "format"));
    if (r.format != "csv" && r.format != "pgm")
      throw ValidationError(join(p, "format"), "expected csv or pgm");
    if (o.contains("field")) {
      r.field = as_string(o["field"], join(p, "field"));
      if (r.field != "F" && r.field != "f") throw ValidationError(join(p, "field"), "expected F or f");
    }
    if (o.contains("range")) {
      const auto v = number_list(o["range"], join(p, "range"));
      if (v.size() != 2) throw ParseError(join(p, "range"), "expected [lo, hi]");
      r.range = std::make_pair(v[0], v[1]);
    }
    out.push_back(r);
  }
  return out;
}

inline std::array<double, 2> pair_of(const json& j, const std::string& path) {
  const auto v = number_list(j, path);
  if (v.size() != 2) throw ParseError(path, "expected [x, y]");
  return {v[0], v[1]};
}

inline Restriction parse_restrict(const json& j) {
  const std::string path = "restrict";
  reject_unknown(object_at(j, path), path, {"kind", "point", "normal"});
  Restriction r;
  if (!j.contains("kind")) throw ParseError("restrict.kind", "missing");
  const auto kind = as_string(j["kind"], "restrict.kind");
  if (kind == "none") r.kind = Restriction::Kind::None;
  else if (kind == "half_plane") r.kind = Restriction::Kind::HalfPlane;
  else if (kind == "component") r.kind = Restriction::Kind::Component;
  else throw ValidationError("restrict.kind", "expected none, half_plane or component");
  if (j.contains("point")) r.point = pair_of(j["point"], "restrict.point");
  if (j.contains("normal")) r.normal = pair_of(j["normal"], "restrict.normal");
  if (r.kind == Restriction::Kind::HalfPlane && r.normal[0] == 0.0 && r.normal[1] == 0.0)
    throw ValidationError("restrict.normal", "must be nonzero");
  return r;
}

inline void validate(const ScenarioConfig& c) {
  if (c.alpha != 1.0) throw ValidationError("alpha", "only alpha = 1 is supported");
  (void)c.solution();
  if (c.grid.nx < 2) throw ValidationError("grid.nx", "must be at least 2");
  if (c.grid.ny < 2) throw ValidationError("grid.ny", "must be at least 2");
  c.grid.validate();
  if (c.times.is_list) {
    if (c.times.list.empty()) throw ValidationError("times", "must not be empty");
    for (std::size_t i = 1; i < c.times.list.size(); ++i)
      if (!(c.times.list[i] > c.times.list[i - 1]))
        throw ValidationError(item("times", i), "times must be strictly increasing");
  } else {
    if (c.times.steps < 1) throw ValidationError("times.steps", "must be at least 1");
    if (!(c.times.t_end >= c.times.t_start))
      throw ValidationError("times.t_end", "must not precede t_start");
  }
  if (c.fluid) {
    c.fluid->validate();
    (void)alpha_squared(*c.fluid);
  }
  if (!(c.clip.cap > 0.0)) throw ValidationError("clip.cap", "must be positive");
  for (std::size_t i = 0; i < c.outputs.size(); ++i)
    if (c.outputs[i].range && !(c.outputs[i].range->second >= c.outputs[i].range->first))
      throw ValidationError(item("outputs", i) + ".range", "hi must not be below lo");
  if (!(c.verification.fd_step > 0.0))
    throw ValidationError("verification.fd_step", "must be positive");
  if (!(c.verification.exclusion_radius >= 0.0))
    throw ValidationError("verification.exclusion_radius", "must be non-negative");
  if (!(c.rogue.background_window > 0.0))
    throw ValidationError("rogue.background_window", "must be positive");
  if (!(c.rogue.ratio_threshold > 0.0))
    throw ValidationError("rogue.ratio_threshold", "must be positive");
  if (!(c.rogue.exclusion_radius >= 0.0))
    throw ValidationError("rogue.exclusion_radius", "must be non-negative");
  if (!(c.rogue.min_separation >= 0.0))
    throw ValidationError("rogue.min_separation", "must be non-negative");
  for (std::size_t i = 0; i < c.limit.eps.size(); ++i)
    if (!(c.limit.eps[i] > 0.0)) throw ValidationError(item("limit.eps", i), "must be positive");
  const double h = c.fluid_or_default().h;
  for (std::size_t i = 0; i < c.transform.depths.size(); ++i)
    if (!(c.transform.depths[i] >= -h && c.transform.depths[i] <= 0.0))
      throw ValidationError(item("transform.depths", i), "must lie in [-h, 0]");
}

inline ScenarioConfig from_json(const json& root) {
  object_at(root, "");
  reject_unknown(root, "",
                 {"name", "family", "alpha", "modes", "grid", "times", "fluid", "regularization",
                  "clip", "restrict", "outputs", "verification", "rogue", "limit", "transform"});
  ScenarioConfig c;
  c.outputs.clear();
  if (root.contains("name")) c.name = as_string(root["name"], "name");
  if (!root.contains("family")) throw ParseError("family", "missing");
  c.family = parse_family(as_string(root["family"], "family"), "family");
  c.alpha = number_or(root, "", "alpha", 1.0);
  if (!root.contains("modes")) throw ParseError("modes", "missing");
  parse_modes(root["modes"], c);
  if (!root.contains("grid")) throw ParseError("grid", "missing");
  c.grid = parse_grid(root["grid"]);
  if (!root.contains("times")) throw ParseError("times", "missing");
  c.times = parse_times(root["times"]);
  if (root.contains("fluid")) c.fluid = parse_fluid(root["fluid"]);

  if (root.contains("regularization")) {
    const auto r = as_string(root["regularization"], "regularization");
    if (r == "none") c.regularization = Regularization::None;
    else if (r == "loglog") c.regularization = Regularization::LogLog;
    else if (r == "clipped") c.regularization = Regularization::Clipped;
    else throw ValidationError("regularization", "expected none, loglog or clipped");
  }
  if (root.contains("clip")) {
    const json& j = object_at(root["clip"], "clip");
    reject_unknown(j, "clip", {"cap", "mode"});
    c.clip.cap = number_or(j, "clip", "cap", c.clip.cap);
    if (j.contains("mode")) {
      const auto m = as_string(j["mode"], "clip.mode");
      if (m == "saturating") c.clip.mode = ClipMode::Saturating;
      else if (m == "literal") c.clip.mode = ClipMode::Literal;
      else throw ValidationError("clip.mode", "expected saturating or literal");
    }
  }
  if (root.contains("restrict")) c.restrict = parse_restrict(root["restrict"]);
  if (root.contains("outputs")) c.outputs = parse_outputs(root["outputs"]);
  else c.outputs = ScenarioConfig{}.outputs;

  if (root.contains("verification")) {
    const json& j = object_at(root["verification"], "verification");
    reject_unknown(j, "verification", {"fd_step", "exclusion_radius"});
    c.verification.fd_step = number_or(j, "verification", "fd_step", c.verification.fd_step);
    c.verification.exclusion_radius =
        number_or(j, "verification", "exclusion_radius", c.verification.exclusion_radius);
  }
  if (root.contains("rogue")) {
    const json& j = object_at(root["rogue"], "rogue");
    reject_unknown(j, "rogue", {"background_window", "ratio_threshold", "exclusion_radius",
                                "min_separation", "trough_times"});
    auto& r = c.rogue;
    r.background_window = number_or(j, "rogue", "background_window", r.background_window);
    r.ratio_threshold = number_or(j, "rogue", "ratio_threshold", r.ratio_threshold);
    r.exclusion_radius = number_or(j, "rogue", "exclusion_radius", r.exclusion_radius);
    r.min_separation = number_or(j, "rogue", "min_separation", r.min_separation);
    if (j.contains("trough_times")) r.trough_times = number_list(j["trough_times"], "rogue.trough_times");
  }
  if (root.contains("limit")) {
    const json& j = object_at(root["limit"], "limit");
    reject_unknown(j, "limit", {"eps", "probes"});
    if (j.contains("eps")) c.limit.eps = number_list(j["eps"], "limit.eps");
    if (j.contains("probes")) c.limit.probes = point_list(j["probes"], "limit.probes");
  }
  if (root.contains("transform")) {
    const json& j = object_at(root["transform"], "transform");
    reject_unknown(j, "transform", {"points", "depths", "fx_path"});
    if (j.contains("points")) c.transform.points = point_list(j["points"], "transform.points");
    if (j.contains("depths")) c.transform.depths = number_list(j["depths"], "transform.depths");
    if (j.contains("fx_path")) {
      const auto s = as_string(j["fx_path"], "transform.fx_path");
      if (s == "finite_difference") c.transform.fx_path = FxPath::FiniteDifference;
      else if (s == "analytic") c.transform.fx_path = FxPath::Analytic;
      else throw ValidationError("transform.fx_path", "expected finite_difference or analytic");
    }
  }
  validate(c);
  return c;
}

inline json points_json(const std::vector<EvalPoint>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back({p.x, p.y, p.t});
  return a;
}

}  // namespace detail

/// Parses and validates a scenario document. Malformed JSON raises ParseError
/// carrying "line N"; unknown keys and wrong types raise ParseError with the
/// key path; invariant violations raise ValidationError with the field path.
inline ScenarioConfig parse_config(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("line " + std::to_string(detail::line_of(text, e.byte)), e.what());
  }
  return detail::from_json(root);
}

/// Complete JSON form of a config, defaults included.
inline std::string serialize(const ScenarioConfig& c) {
  using nlohmann::json;
  json root;
  root["name"] = c.name;
  root["family"] = to_string(c.family);
  root["alpha"] = c.alpha;
  json modes = json::array();
  if (c.family == Family::Soliton) {
    for (const auto& m : c.solitons)
      modes.push_back({{"p_re", m.p.real()}, {"p_im", m.p.imag()}, {"q_re", m.q.real()},
                       {"q_im", m.q.imag()}, {"c_re", m.c.real()}, {"c_im", m.c.imag()}});
  } else {
    for (const auto& m : c.spectral)
      modes.push_back({{"lambda", m.lambda}, {"mu", m.mu}, {"chi", m.chi}, {"gamma", m.gamma},
                       {"rho", m.rho}});
  }
  root["modes"] = modes;
  root["grid"] = {{"x_min", c.grid.x_min}, {"x_max", c.grid.x_max}, {"y_min", c.grid.y_min},
                  {"y_max", c.grid.y_max}, {"nx", c.grid.nx},       {"ny", c.grid.ny}};
  if (c.times.is_list)
    root["times"] = c.times.list;
  else
    root["times"] = {{"t_start", c.times.t_start}, {"t_end", c.times.t_end}, {"steps", c.times.steps}};
  if (c.fluid)
    root["fluid"] = {{"g", c.fluid->g},
                     {"h", c.fluid->h},
                     {"epsilon", c.fluid->epsilon},
                     {"rho_fluid", c.fluid->rho_fluid},
                     {"S", c.fluid->S}};
  root["regularization"] = to_string(c.regularization);
  root["clip"] = {{"cap", c.clip.cap},
                  {"mode", c.clip.mode == ClipMode::Saturating ? "saturating" : "literal"}};
  const char* kinds[] = {"none", "half_plane", "component"};
  root["restrict"] = {{"kind", kinds[static_cast<int>(c.restrict.kind)]},
                      {"point", c.restrict.point},
                      {"normal", c.restrict.normal}};
  json outputs = json::array();
  for (const auto& o : c.outputs) {
    json e = {{"format", o.format}, {"field", o.field}};
    if (o.range) e["range"] = {o.range->first, o.range->second};
    outputs.push_back(e);
  }
  root["outputs"] = outputs;
  root["verification"] = {{"fd_step", c.verification.fd_step},
                          {"exclusion_radius", c.verification.exclusion_radius}};
  root["rogue"] = {{"background_window", c.rogue.background_window},
                   {"ratio_threshold", c.rogue.ratio_threshold},
                   {"exclusion_radius", c.rogue.exclusion_radius},
                   {"min_separation", c.rogue.min_separation},
                   {"trough_times", c.rogue.trough_times}};
  root["limit"] = {{"eps", c.limit.eps}, {"probes", detail::points_json(c.limit.probes)}};
  root["transform"] = {
      {"points", detail::points_json(c.transform.points)},
      {"depths", c.transform.depths},
      {"fx_path", c.transform.fx_path == FxPath::Analytic ? "analytic" : "finite_difference"}};
  return root.dump(2) + "\n";
}

}  // namespace kpc
