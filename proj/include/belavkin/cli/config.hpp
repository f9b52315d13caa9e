#pragma once

// JSON run configuration:
//
// {
//   "model":  {"omega": 1.0, "mu": 0.04, "omega0": 0.05, "dim": 64,
//              "phase_mode": "special" | "constant", "phase0": 0.0,
//              "f0_re": 0.0, "f0_im": 0.0},
//   "run":    {"filter": "linear" | "nonlinear" | "density" | "analytic",
//              "initial": "vacuum" | "coherent" | "squeezed",
//              "alpha0": 1.0, "gamma0": 0.8, "xi": 1.0986, "dt": 1e-3,
//              "t_final": 100.0, "seed": 7, "n_traj": 1, "record_every": 1,
//              "scheme": "milstein" | "exponential_euler" | "euler_maruyama"},
//   "output": {"format": "csv" | "json", "path": "out.csv",
//              "fields": ["meanX", "dX", ...]}
// }
//
// Complex values (alpha0, gamma0, xi) accept a number or a [re, im] pair.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "belavkin/ensemble.hpp"
#include "belavkin/error.hpp"
#include "belavkin/filters.hpp"
#include "belavkin/fock.hpp"
#include "belavkin/model.hpp"

namespace belavkin::cli {

/// All problems found in a configuration, in document order.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> errors) : Error(join(errors)), errors_(std::move(errors)) {}
  const std::vector<std::string>& errors() const noexcept { return errors_; }

 private:
  static std::string join(const std::vector<std::string>& e) {
    std::string s;
    for (const auto& x : e) s += (s.empty() ? "" : "\n") + x;
    return s;
  }
  std::vector<std::string> errors_;
};

inline const std::vector<std::string>& all_fields() {
  static const std::vector<std::string> f{"meanX", "meanY", "dX", "dY", "norm", "weight", "fidelity_to_asymptotic", "record_q"};
  return f;
}

struct RunConfig {
  enum class PhaseMode { special, constant };
  enum class Filter { linear, nonlinear, density, analytic };
  enum class Initial { vacuum, coherent, squeezed };
  enum class Format { csv, json };

  struct Model {
    double omega = 1.0;
    double mu = 0.0;
    double omega0 = 0.0;
    std::size_t dim = 64;
    PhaseMode phase_mode = PhaseMode::special;
    double phase0 = 0.0;
    cplx f0{};
  } model;

  struct Run {
    Filter filter = Filter::nonlinear;
    Initial initial = Initial::vacuum;
    cplx alpha0{};
    cplx gamma0{};
    double dt = 1e-3;
    double t_final = 1.0;
    std::uint64_t seed = 0;
    std::size_t n_traj = 1;
    std::size_t record_every = 1;
    Scheme scheme = Scheme::exponential_milstein;
  } run;

  struct Output {
    Format format = Format::csv;
    std::string path;
    std::vector<std::string> fields;
  } output;

  ModelParams model_params() const {
    ModelParams p;
    p.omega = model.omega;
    p.mu = model.mu;
    p.dim = model.dim;
    p.drive = Drive::constant(model.f0);
    p.phase = model.phase_mode == PhaseMode::special ? Phase::sweep(model.omega0) : Phase::constant(model.phase0);
    return p;
  }

  InitialState initial_state() const {
    switch (run.initial) {
      case Initial::vacuum: return InitialState::vacuum();
      case Initial::coherent: return InitialState::coherent(run.alpha0);
      case Initial::squeezed: return InitialState::squeezed(run.gamma0, run.alpha0);
    }
    return {};
  }

  std::size_t steps() const { return grid_steps(run.t_final, run.dt); }
};

namespace detail {

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

inline std::string nearest(const std::string& key, const std::vector<std::string>& valid) {
  std::string best;
  std::size_t d = static_cast<std::size_t>(-1);
  for (const auto& v : valid) {
    const std::size_t e = edit_distance(key, v);
    if (e < d) {
      d = e;
      best = v;
    }
  }
  return best;
}

inline std::string type_name(const nlohmann::json& j) {
  if (j.is_null()) return "null";
  if (j.is_boolean()) return "boolean";
  if (j.is_number_integer() || j.is_number_unsigned()) return "integer";
  if (j.is_number()) return "number";
  if (j.is_string()) return "string";
  if (j.is_array()) return "array";
  return "object";
}

/// Reads one section, collecting errors instead of stopping at the first.
class Section {
 public:
  Section(const nlohmann::json& root, std::string name, std::vector<std::string> keys, std::vector<std::string>& errors)
      : name_(std::move(name)), keys_(std::move(keys)), errors_(errors) {
    if (!root.is_object()) return;
    const auto it = root.find(name_);
    if (it == root.end()) return;
    if (!it->is_object()) {
      errors_.push_back(name_ + ": expected an object, got " + type_name(*it));
      return;
    }
    obj_ = &*it;
    for (const auto& [k, v] : obj_->items()) {
      if (std::find(keys_.begin(), keys_.end(), k) == keys_.end()) {
        errors_.push_back(name_ + "." + k + ": unknown key (did you mean '" + nearest(k, keys_) + "'?)");
      }
    }
  }

  bool has(const std::string& key) const { return obj_ && obj_->contains(key); }

  void missing(const std::string& key) { errors_.push_back(name_ + "." + key + ": missing required key"); }

  std::optional<double> number(const std::string& key, bool required) {
    if (!has(key)) {
      if (required) missing(key);
      return std::nullopt;
    }
    const auto& v = obj_->at(key);
    if (!v.is_number()) {
      errors_.push_back(name_ + "." + key + ": expected a number, got " + type_name(v));
      return std::nullopt;
    }
    return v.get<double>();
  }

  std::optional<std::uint64_t> integer(const std::string& key, bool required, std::uint64_t min = 0) {
    if (!has(key)) {
      if (required) missing(key);
      return std::nullopt;
    }
    const auto& v = obj_->at(key);
    if (!(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0))) {
      errors_.push_back(name_ + "." + key + ": expected a non-negative integer, got " + type_name(v));
      return std::nullopt;
    }
    const auto x = v.get<std::uint64_t>();
    if (x < min) {
      errors_.push_back(name_ + "." + key + ": must be >= " + std::to_string(min));
      return std::nullopt;
    }
    return x;
  }

  std::optional<cplx> complex(const std::string& key, bool required) {
    if (!has(key)) {
      if (required) missing(key);
      return std::nullopt;
    }
    const auto& v = obj_->at(key);
    if (v.is_number()) return cplx{v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
      return cplx{v[0].get<double>(), v[1].get<double>()};
    }
    errors_.push_back(name_ + "." + key + ": expected a number or [re, im], got " + type_name(v));
    return std::nullopt;
  }

  template <class E>
  std::optional<E> choice(const std::string& key, bool required, const std::vector<std::pair<std::string, E>>& options) {
    if (!has(key)) {
      if (required) missing(key);
      return std::nullopt;
    }
    const auto& v = obj_->at(key);
    std::vector<std::string> names;
    for (const auto& o : options) names.push_back(o.first);
    if (!v.is_string()) {
      errors_.push_back(name_ + "." + key + ": expected a string, got " + type_name(v));
      return std::nullopt;
    }
    const auto s = v.get<std::string>();
    for (const auto& o : options) {
      if (o.first == s) return o.second;
    }
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    errors_.push_back(name_ + "." + key + ": '" + s + "' is not one of {" + list + "} (did you mean '" +
                      nearest(s, names) + "'?)");
    return std::nullopt;
  }

  std::optional<std::string> string(const std::string& key, bool required) {
    if (!has(key)) {
      if (required) missing(key);
      return std::nullopt;
    }
    const auto& v = obj_->at(key);
    if (!v.is_string()) {
      errors_.push_back(name_ + "." + key + ": expected a string, got " + type_name(v));
      return std::nullopt;
    }
    return v.get<std::string>();
  }

  std::optional<std::vector<std::string>> strings(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const auto& v = obj_->at(key);
    if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const auto& x) { return x.is_string(); })) {
      errors_.push_back(name_ + "." + key + ": expected an array of strings");
      return std::nullopt;
    }
    return v.get<std::vector<std::string>>();
  }

  void error(const std::string& key, const std::string& msg) { errors_.push_back(name_ + "." + key + ": " + msg); }

 private:
  std::string name_;
  std::vector<std::string> keys_;
  std::vector<std::string>& errors_;
  const nlohmann::json* obj_ = nullptr;
};

inline std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

/// Parses and validates a configuration; throws ConfigError listing every
/// problem found.
inline RunConfig parse_config(const std::string& text) {
  std::vector<std::string> errors;
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({"invalid JSON at " + detail::line_col(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what()});
  }
  if (!root.is_object()) throw ConfigError({"top level: expected an object, got " + detail::type_name(root)});
  for (const auto& [k, v] : root.items()) {
    static const std::vector<std::string> top{"model", "run", "output"};
    if (std::find(top.begin(), top.end(), k) == top.end()) {
      errors.push_back(k + ": unknown section (did you mean '" + detail::nearest(k, top) + "'?)");
    }
  }

  using RC = RunConfig;
  RunConfig c;

  detail::Section model(root, "model", {"omega", "mu", "omega0", "dim", "phase_mode", "phase0", "f0_re", "f0_im"}, errors);
  if (auto v = model.number("omega", true)) {
    c.model.omega = *v;
    if (!(*v > 0.0) || !std::isfinite(*v)) model.error("omega", "must be > 0");
  }
  if (auto v = model.number("mu", true)) {
    c.model.mu = *v;
    if (!(*v >= 0.0) || !std::isfinite(*v)) model.error("mu", "must be >= 0");
  }
  if (auto v = model.integer("dim", true)) {
    c.model.dim = static_cast<std::size_t>(*v);
    if (*v < 2) model.error("dim", "must be >= 2");
  }
  const auto mode = model.choice<RC::PhaseMode>("phase_mode", true,
                                                {{"special", RC::PhaseMode::special}, {"constant", RC::PhaseMode::constant}});
  if (mode) c.model.phase_mode = *mode;
  if (auto v = model.number("omega0", mode == RC::PhaseMode::special)) c.model.omega0 = *v;
  if (auto v = model.number("phase0", false)) c.model.phase0 = *v;
  double f_re = model.number("f0_re", false).value_or(0.0);
  double f_im = model.number("f0_im", false).value_or(0.0);
  c.model.f0 = {f_re, f_im};

  detail::Section run(root, "run",
                      {"filter", "initial", "alpha0", "gamma0", "xi", "dt", "t_final", "seed", "n_traj", "record_every", "scheme"},
                      errors);
  const auto filter = run.choice<RC::Filter>("filter", true,
                                             {{"linear", RC::Filter::linear},
                                              {"nonlinear", RC::Filter::nonlinear},
                                              {"density", RC::Filter::density},
                                              {"analytic", RC::Filter::analytic}});
  if (filter) c.run.filter = *filter;
  const auto initial = run.choice<RC::Initial>("initial", true,
                                               {{"vacuum", RC::Initial::vacuum},
                                                {"coherent", RC::Initial::coherent},
                                                {"squeezed", RC::Initial::squeezed}});
  if (initial) c.run.initial = *initial;
  if (auto v = run.complex("alpha0", false)) c.run.alpha0 = *v;
  const auto gamma0 = run.complex("gamma0", false);
  const auto xi = run.complex("xi", false);
  if (gamma0 && xi) run.error("xi", "give either gamma0 or xi, not both");
  if (gamma0) {
    c.run.gamma0 = *gamma0;
    if (!(std::abs(*gamma0) < 1.0)) run.error("gamma0", "|gamma0| must be < 1");
  } else if (xi) {
    c.run.gamma0 = std::polar(std::tanh(std::abs(*xi)), std::arg(*xi));
  } else if (initial == RC::Initial::squeezed) {
    run.missing("gamma0");
  }
  const auto dt = run.number("dt", true);
  const auto t_final = run.number("t_final", true);
  if (dt) {
    c.run.dt = *dt;
    if (!(*dt > 0.0) || !std::isfinite(*dt)) run.error("dt", "must be > 0");
  }
  if (t_final) {
    c.run.t_final = *t_final;
    if (!(*t_final > 0.0) || !std::isfinite(*t_final)) run.error("t_final", "must be > 0");
  }
  if (auto v = run.integer("seed", true)) c.run.seed = *v;
  if (auto v = run.integer("n_traj", false, 1)) c.run.n_traj = static_cast<std::size_t>(*v);
  if (auto v = run.integer("record_every", false, 1)) c.run.record_every = static_cast<std::size_t>(*v);
  if (auto v = run.choice<Scheme>("scheme", false,
                                  {{"milstein", Scheme::exponential_milstein},
                                   {"exponential_euler", Scheme::exponential_euler},
                                   {"euler_maruyama", Scheme::euler_maruyama}})) {
    c.run.scheme = *v;
  }

  detail::Section output(root, "output", {"format", "path", "fields"}, errors);
  if (auto v = output.choice<RC::Format>("format", true, {{"csv", RC::Format::csv}, {"json", RC::Format::json}})) {
    c.output.format = *v;
  }
  if (auto v = output.string("path", true)) {
    c.output.path = *v;
    if (v->empty()) output.error("path", "must not be empty");
  }
  if (auto v = output.strings("fields")) {
    for (const auto& f : *v) {
      if (std::find(all_fields().begin(), all_fields().end(), f) == all_fields().end()) {
        output.error("fields", "unknown field '" + f + "' (did you mean '" + detail::nearest(f, all_fields()) + "'?)");
      }
    }
    c.output.fields = *v;
  } else {
    c.output.fields = all_fields();
  }

  // Cross-field checks, only on otherwise well-formed input.
  if (errors.empty()) {
    try {
      (void)c.steps();
      if (c.steps() % c.run.record_every != 0) errors.push_back("run.record_every: must divide the number of steps");
    } catch (const Error& e) {
      errors.push_back(std::string("run.dt: ") + e.what());
    }
    if (c.run.n_traj > 1 && c.run.filter == RC::Filter::analytic) {
      errors.push_back("run.n_traj: the analytic filter follows a single path; use n_traj = 1");
    }
    if (c.run.n_traj > 1 &&
        std::find(c.output.fields.begin(), c.output.fields.end(), "record_q") != c.output.fields.end()) {
      if (root["output"].contains("fields")) {
        errors.push_back("output.fields: record_q is only defined for a single trajectory");
      } else {
        c.output.fields.erase(std::find(c.output.fields.begin(), c.output.fields.end(), "record_q"));
      }
    }
    if (errors.empty()) {
      try {
        (void)c.initial_state().build(c.model.dim);
      } catch (const TruncationOverflow& e) {
        errors.push_back(std::string("model.dim: ") + e.what());
      } catch (const Error& e) {
        errors.push_back(std::string("run.initial: ") + e.what());
      }
    }
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return c;
}

}  // namespace belavkin::cli
