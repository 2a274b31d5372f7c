#ifndef SOUNDLAB_HARNESS_CONFIG_HPP
#define SOUNDLAB_HARNESS_CONFIG_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "soundlab/errors.hpp"
#include "soundlab/meanfield.hpp"
#include "soundlab/torus_grid.hpp"

namespace soundlab::harness {

using Json = nlohmann::json;

/// Any schema or value violation in an experiment configuration.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

enum class Experiment { dispersion, soundspeed, linearize, manybody_converge, instability, evolve };

inline const std::vector<std::pair<Experiment, std::string>>& experiment_names() {
  static const std::vector<std::pair<Experiment, std::string>> names{
      {Experiment::dispersion, "dispersion"},
      {Experiment::soundspeed, "soundspeed"},
      {Experiment::linearize, "linearize"},
      {Experiment::manybody_converge, "manybody-converge"},
      {Experiment::instability, "instability"},
      {Experiment::evolve, "evolve"}};
  return names;
}

inline std::string to_string(Experiment e) {
  for (const auto& [k, v] : experiment_names()) {
    if (k == e) return v;
  }
  return "unknown";
}

inline Experiment parse_experiment(const std::string& s) {
  for (const auto& [k, v] : experiment_names()) {
    if (v == s) return k;
  }
  throw ConfigError("unknown experiment '" + s + "'");
}

struct GridConfig {
  int dim = 1;
  std::optional<int> n;
  std::optional<double> points_per_length;
  std::vector<double> lengths;

  /// Grid for side length L: either fixed n or n = points_per_length * L.
  TorusGrid grid(double length) const {
    int points = 0;
    if (n) {
      points = *n;
    } else {
      const double p = *points_per_length * length;
      points = static_cast<int>(std::lround(p));
      if (std::abs(p - points) > 1e-9 * std::max(1.0, p)) {
        throw ConfigError("grid.points_per_length * L must be an integer (L=" +
                          std::to_string(length) + ")");
      }
    }
    return make_grid(dim, points, length);
  }
};

struct PotentialConfig {
  std::string kind = "bump";
  std::vector<double> strengths{1.0};
  double range = 1.0;
  int sign = 1;
};

struct ExcitationConfig {
  std::vector<double> amplitudes{0.0};
  double width = 1.0;
  ExcitationShape shape = ExcitationShape::smooth_bump;
  ReferenceMode mode = ReferenceMode::torus;
  double noise = 0.0;

  ExcitationSpec spec(double amplitude, std::uint64_t seed) const {
    return ExcitationSpec{amplitude, width, shape, noise, seed};
  }
};

/// Fully resolved configuration. Unused fields keep their defaults and are
/// not echoed for experiments that do not accept them.
struct ExperimentConfig {
  Experiment experiment = Experiment::evolve;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  GridConfig grid;
  PotentialConfig potential;
  ExcitationConfig excitation;
  KineticModel kinetic = KineticModel::spectral;
  std::optional<double> dt;
  double t_end = 1.0;
  double sample_interval = 0.1;
  int modes = 8;
  std::vector<double> rhos;
  std::vector<double> cutoffs{0.25, 0.5};
  std::vector<double> route_dts;
  double onset_threshold = 1.0;
  double blowup_threshold = 1e6;
  Json resolved;  // canonical echo of the above
};

namespace detail {

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline void allow_keys(const Json& obj, const std::set<std::string>& allowed,
                       const std::string& path) {
  if (!obj.is_object()) throw ConfigError((path.empty() ? "config" : path) + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ConfigError("unknown key '" + join(path, it.key()) + "'");
    }
  }
}

inline double number(const Json& obj, const std::string& key, const std::string& path,
                     std::optional<double> fallback = std::nullopt) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError("missing required key '" + join(path, key) + "'");
  }
  const Json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError("'" + join(path, key) + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError("'" + join(path, key) + "' must be finite");
  return d;
}

inline long long integer(const Json& obj, const std::string& key, const std::string& path,
                         std::optional<long long> fallback = std::nullopt) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError("missing required key '" + join(path, key) + "'");
  }
  const Json& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError("'" + join(path, key) + "' must be an integer");
  return v.get<long long>();
}

inline std::string text(const Json& obj, const std::string& key, const std::string& path,
                        const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError("'" + join(path, key) + "' must be a string");
  return v.get<std::string>();
}

/// A number or a non-empty list of numbers.
inline std::vector<double> number_list(const Json& obj, const std::string& key,
                                       const std::string& path,
                                       std::optional<std::vector<double>> fallback = std::nullopt) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError("missing required key '" + join(path, key) + "'");
  }
  const Json& v = obj.at(key);
  std::vector<double> out;
  if (v.is_number()) {
    out.push_back(v.get<double>());
  } else if (v.is_array() && !v.empty()) {
    for (const Json& e : v) {
      if (!e.is_number()) throw ConfigError("'" + join(path, key) + "' must hold numbers");
      out.push_back(e.get<double>());
    }
  } else {
    throw ConfigError("'" + join(path, key) + "' must be a number or a non-empty list");
  }
  for (double d : out) {
    if (!std::isfinite(d)) throw ConfigError("'" + join(path, key) + "' must be finite");
  }
  return out;
}

inline void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

inline Json list_json(const std::vector<double>& v) {
  return v.size() == 1 ? Json(v[0]) : Json(v);
}

}  // namespace detail

struct Schema {
  bool excitation = false;
  bool time = true;
  bool multi_length = false;
  bool multi_strength = false;
  std::set<std::string> extra;
};

inline Schema schema_for(Experiment e) {
  switch (e) {
    case Experiment::dispersion: return {false, true, false, false, {"modes"}};
    case Experiment::soundspeed: return {false, true, true, false, {"modes"}};
    case Experiment::linearize: return {true, true, true, false, {}};
    case Experiment::manybody_converge: return {true, true, false, false, {"rho"}};
    case Experiment::instability:
      return {true, true, false, true, {"onset_threshold", "blowup_threshold"}};
    case Experiment::evolve: return {true, true, true, false, {"cutoffs", "route_dt"}};
  }
  return {};
}

/// Validates a parsed document against the experiment's schema and fills in
/// defaults. Precedence: command-line overrides, then config keys, then
/// built-in defaults.
inline ExperimentConfig resolve_config(const Json& doc, Experiment expected,
                                       std::optional<std::string> out_override = std::nullopt,
                                       std::optional<std::uint64_t> seed_override = std::nullopt) {
  using namespace detail;
  const Schema sc = schema_for(expected);
  std::set<std::string> top{"experiment", "seed", "output_dir", "grid", "potential", "kinetic",
                            "dt", "t_end", "sample_interval"};
  if (sc.excitation) top.insert("excitation");
  top.insert(sc.extra.begin(), sc.extra.end());
  allow_keys(doc, top, "");

  ExperimentConfig c;
  c.experiment = expected;
  if (doc.contains("experiment")) {
    if (!doc.at("experiment").is_string()) throw ConfigError("'experiment' must be a string");
    const Experiment named = parse_experiment(doc.at("experiment").get<std::string>());
    require(named == expected, "config is for experiment '" + to_string(named) +
                                   "' but subcommand is '" + to_string(expected) + "'");
  }
  const long long seed = integer(doc, "seed", "", 0);
  require(seed >= 0, "'seed' must be >= 0");
  c.seed = seed_override ? *seed_override : static_cast<std::uint64_t>(seed);
  c.output_dir = out_override ? *out_override : text(doc, "output_dir", "", "out");

  // grid
  require(doc.contains("grid"), "missing required key 'grid'");
  const Json& g = doc.at("grid");
  allow_keys(g, {"dim", "n", "points_per_length", "L"}, "grid");
  c.grid.dim = static_cast<int>(integer(g, "dim", "grid", 1));
  require(c.grid.dim >= 1 && c.grid.dim <= 3, "'grid.dim' must be 1, 2 or 3");
  require(g.contains("n") != g.contains("points_per_length"),
          "grid needs exactly one of 'n' and 'points_per_length'");
  if (g.contains("n")) c.grid.n = static_cast<int>(integer(g, "n", "grid"));
  if (g.contains("points_per_length")) {
    c.grid.points_per_length = number(g, "points_per_length", "grid");
    require(*c.grid.points_per_length > 0.0, "'grid.points_per_length' must be > 0");
  }
  c.grid.lengths = number_list(g, "L", "grid");
  require(sc.multi_length || c.grid.lengths.size() == 1,
          "'grid.L' must be a single number for " + to_string(expected));
  if (expected == Experiment::manybody_converge) {
    require(c.grid.dim == 1, "manybody-converge needs grid.dim = 1");
  }

  // potential
  require(doc.contains("potential"), "missing required key 'potential'");
  const Json& p = doc.at("potential");
  allow_keys(p, {"kind", "strength", "range", "sign"}, "potential");
  c.potential.kind = text(p, "kind", "potential", "bump");
  require(c.potential.kind == "bump" || c.potential.kind == "zero",
          "'potential.kind' must be 'bump' or 'zero'");
  if (c.potential.kind == "bump") {
    c.potential.strengths = number_list(p, "strength", "potential");
    require(sc.multi_strength || c.potential.strengths.size() == 1,
            "'potential.strength' must be a single number for " + to_string(expected));
    for (double s : c.potential.strengths) require(s > 0.0, "'potential.strength' must be > 0");
    c.potential.range = number(p, "range", "potential");
    c.potential.sign = static_cast<int>(integer(p, "sign", "potential", 1));
    require(c.potential.sign == 1 || c.potential.sign == -1, "'potential.sign' must be +1 or -1");
  } else {
    require(p.size() == 1, "zero potential takes no parameters");
    c.potential.strengths = {0.0};
    c.potential.range = 0.0;
  }

  const std::string kin = text(doc, "kinetic", "", "spectral");
  require(kin == "spectral" || kin == "lattice", "'kinetic' must be 'spectral' or 'lattice'");
  c.kinetic = kin == "lattice" ? KineticModel::lattice : KineticModel::spectral;
  if (expected == Experiment::manybody_converge) {
    require(!doc.contains("kinetic") || kin == "lattice",
            "manybody-converge compares on the lattice; 'kinetic' must be 'lattice'");
    c.kinetic = KineticModel::lattice;
  }

  // time
  if (doc.contains("dt")) {
    c.dt = number(doc, "dt", "");
    require(*c.dt > 0.0, "'dt' must be > 0");
  }
  c.t_end = number(doc, "t_end", "");
  require(c.t_end > 0.0, "'t_end' must be > 0");
  c.sample_interval = number(doc, "sample_interval", "", c.t_end);
  require(c.sample_interval > 0.0 && c.sample_interval <= c.t_end,
          "'sample_interval' must lie in (0, t_end]");
  const double ratio = c.t_end / c.sample_interval;
  require(std::abs(ratio - std::round(ratio)) < 1e-9 * std::max(1.0, ratio),
          "'t_end' must be a whole multiple of 'sample_interval'");

  // excitation
  if (sc.excitation) {
    require(doc.contains("excitation"), "missing required key 'excitation'");
    const Json& e = doc.at("excitation");
    allow_keys(e, {"amplitude", "width", "shape", "mode", "noise"}, "excitation");
    c.excitation.amplitudes = number_list(e, "amplitude", "excitation");
    require(expected == Experiment::linearize || c.excitation.amplitudes.size() == 1,
            "'excitation.amplitude' must be a single number for " + to_string(expected));
    for (double a : c.excitation.amplitudes) require(a >= 0.0, "'excitation.amplitude' must be >= 0");
    c.excitation.width = number(e, "width", "excitation");
    for (double l : c.grid.lengths) {
      require(c.excitation.width > 0.0 && c.excitation.width < l / 8.0,
              "'excitation.width' must lie in (0, L/8) for every L");
    }
    const std::string shape = text(e, "shape", "excitation", "smooth-bump");
    require(shape == "smooth-bump" || shape == "gaussian-bump",
            "'excitation.shape' must be 'smooth-bump' or 'gaussian-bump'");
    c.excitation.shape =
        shape == "gaussian-bump" ? ExcitationShape::gaussian_bump : ExcitationShape::smooth_bump;
    const std::string mode = text(e, "mode", "excitation", "torus");
    require(mode == "torus" || mode == "plateau", "'excitation.mode' must be 'torus' or 'plateau'");
    c.excitation.mode = mode == "plateau" ? ReferenceMode::plateau : ReferenceMode::torus;
    require(expected == Experiment::evolve || c.excitation.mode == ReferenceMode::torus,
            "plateau mode is only available for evolve");
    c.excitation.noise = number(e, "noise", "excitation", 0.0);
    require(c.excitation.noise >= 0.0, "'excitation.noise' must be >= 0");
  }

  // experiment-specific
  if (sc.extra.count("modes")) {
    const long long m = integer(doc, "modes", "", expected == Experiment::soundspeed ? 3 : 8);
    require(m >= 1, "'modes' must be >= 1");
    c.modes = static_cast<int>(m);
  }
  if (sc.extra.count("rho")) {
    c.rhos = number_list(doc, "rho", "");
    for (double r : c.rhos) require(r > 0.0, "'rho' entries must be > 0");
  }
  if (sc.extra.count("cutoffs")) {
    c.cutoffs = number_list(doc, "cutoffs", "", std::vector<double>{0.25, 0.5});
    for (double r : c.cutoffs) require(r > 0.0 && r < 1.0, "'cutoffs' entries must lie in (0,1)");
  }
  if (sc.extra.count("route_dt")) {
    if (doc.contains("route_dt")) {
      c.route_dts = number_list(doc, "route_dt", "");
      require(c.route_dts.size() >= 2, "'route_dt' needs at least two step sizes");
      for (double d : c.route_dts) require(d > 0.0, "'route_dt' entries must be > 0");
    }
  }
  if (sc.extra.count("onset_threshold")) {
    c.onset_threshold = number(doc, "onset_threshold", "", 1.0);
    c.blowup_threshold = number(doc, "blowup_threshold", "", 1e6);
    require(c.onset_threshold > 0.0 && c.blowup_threshold > c.onset_threshold,
            "need 0 < onset_threshold < blowup_threshold");
  }

  // Canonical echo of everything that was resolved.
  Json r;
  r["experiment"] = to_string(expected);
  r["seed"] = c.seed;
  r["output_dir"] = c.output_dir;
  Json rg{{"dim", c.grid.dim}, {"L", list_json(c.grid.lengths)}};
  if (c.grid.n) rg["n"] = *c.grid.n;
  if (c.grid.points_per_length) rg["points_per_length"] = *c.grid.points_per_length;
  r["grid"] = rg;
  Json rp{{"kind", c.potential.kind}};
  if (c.potential.kind == "bump") {
    rp["strength"] = list_json(c.potential.strengths);
    rp["range"] = c.potential.range;
    rp["sign"] = c.potential.sign;
  }
  r["potential"] = rp;
  r["kinetic"] = c.kinetic == KineticModel::lattice ? "lattice" : "spectral";
  r["dt"] = c.dt ? Json(*c.dt) : Json("default");
  r["t_end"] = c.t_end;
  r["sample_interval"] = c.sample_interval;
  if (sc.excitation) {
    r["excitation"] = {
        {"amplitude", list_json(c.excitation.amplitudes)},
        {"width", c.excitation.width},
        {"shape", c.excitation.shape == ExcitationShape::gaussian_bump ? "gaussian-bump"
                                                                       : "smooth-bump"},
        {"mode", c.excitation.mode == ReferenceMode::plateau ? "plateau" : "torus"},
        {"noise", c.excitation.noise}};
  }
  if (sc.extra.count("modes")) r["modes"] = c.modes;
  if (sc.extra.count("rho")) r["rho"] = list_json(c.rhos);
  if (sc.extra.count("cutoffs")) r["cutoffs"] = c.cutoffs;
  if (sc.extra.count("route_dt")) r["route_dt"] = c.route_dts;
  if (sc.extra.count("onset_threshold")) {
    r["onset_threshold"] = c.onset_threshold;
    r["blowup_threshold"] = c.blowup_threshold;
  }
  c.resolved = std::move(r);
  return c;
}

inline Json parse_config_text(const std::string& text) {
  try {
    return Json::parse(text, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

inline Json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace soundlab::harness

#endif  // SOUNDLAB_HARNESS_CONFIG_HPP
