#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "gyrorotor/dynamics.hpp"
#include "gyrorotor/errors.hpp"
#include "gyrorotor/explosion.hpp"

namespace gyrorotor {

/// Named molecule presets.
inline std::optional<MoleculeParams> molecule_preset(const std::string& name) {
  if (name == "NO2+") return MoleculeParams::no2_plus();
  return std::nullopt;
}

struct LaserSection {
  double intensity_w_cm2 = 4.9e6;
  double phi_rad = 0.0;
  Envelope envelope;
  double detuning_mhz = 0.0;            // laser beat frequency minus resonance
  std::optional<double> duration_ns;    // overrides the quarter-Rabi-cycle duration
};

struct StateSection {
  int initial_J = 0;
  int j_max = 4;
};

struct ScanSection {
  double t_max_us = 8.0;
  int n_delays = 64;
  long shots = 10000;
  std::uint64_t seed = 1;
  std::optional<double> tau_us;
  FastPhase fast_phase = FastPhase::randomized;
  ShotModel shot_model = ShotModel::binomial;
  double detector_half_angle_deg = 20.0;
  unsigned threads = 1;
};

struct RunConfig {
  MoleculeParams molecule = MoleculeParams::no2_plus();
  LaserSection laser;
  StateSection state;
  MagneticField field{1.0};
  ScanSection scan;
  std::string output_directory = ".";

  ScanConfig scan_config() const {
    ScanConfig sc;
    sc.delays = uniform_delays(scan.t_max_us * 1e-6, scan.n_delays);
    sc.shots_per_delay = scan.shots;
    sc.rng_seed = scan.seed;
    if (scan.tau_us) sc.decoherence_tau = *scan.tau_us * 1e-6;
    sc.fast_phase = scan.fast_phase;
    sc.shot_model = scan.shot_model;
    sc.threads = scan.threads;
    return sc;
  }

  std::vector<DetectorGeometry> detectors() const {
    return default_detectors(scan.detector_half_angle_deg * pi / 180.0);
  }
};

namespace detail {

inline const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> schema{
      {"molecule", {"name", "B_rot_GHz", "delta_alpha_A3", "g_r"}},
      {"laser",
       {"intensity_W_cm2", "phi_rad", "envelope", "ramp_fraction", "detuning_MHz", "duration_ns"}},
      {"state", {"initial_J", "j_max"}},
      {"field", {"B_tesla", "axis"}},
      {"scan",
       {"t_max_us", "n_delays", "shots", "seed", "tau_us", "fast_phase", "shot_model",
        "detector_half_angle_deg", "threads"}},
      {"output", {"directory", "formats"}},
  };
  return schema;
}

class Section {
 public:
  Section(std::string name, const boost::property_tree::ptree* tree)
      : name_(std::move(name)), tree_(tree) {}

  std::optional<std::string> text(const std::string& key) const {
    if (!tree_) return std::nullopt;
    if (auto v = tree_->get_optional<std::string>(key)) return *v;
    return std::nullopt;
  }

  std::optional<double> number(const std::string& key) const {
    const auto t = text(key);
    if (!t) return std::nullopt;
    try {
      std::size_t used = 0;
      const double v = std::stod(*t, &used);
      if (used != t->size() || !std::isfinite(v)) throw std::invalid_argument(*t);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(qualified(key) + ": expected a number, got '" + *t + "'");
    }
  }

  std::optional<long long> integer(const std::string& key) const {
    const auto t = text(key);
    if (!t) return std::nullopt;
    try {
      std::size_t used = 0;
      const long long v = std::stoll(*t, &used);
      if (used != t->size()) throw std::invalid_argument(*t);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(qualified(key) + ": expected an integer, got '" + *t + "'");
    }
  }

  std::string qualified(const std::string& key) const { return name_ + "." + key; }

 private:
  std::string name_;
  const boost::property_tree::ptree* tree_;
};

inline Vector3 parse_axis(const std::string& s, const std::string& key) {
  if (s == "x") return Vector3::UnitX();
  if (s == "y") return Vector3::UnitY();
  if (s == "z") return Vector3::UnitZ();
  std::stringstream ss(s);
  Vector3 v;
  char comma;
  if (ss >> v.x() >> comma >> v.y() >> comma >> v.z() && v.norm() > 0.0) return v.normalized();
  throw ConfigError(key + ": expected x, y, z or 'ax,ay,az', got '" + s + "'");
}

}  // namespace detail

/// Parses an INI-style configuration. Unknown sections or keys are errors.
inline RunConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.message() + " (line " +
                      std::to_string(e.line()) + ")");
  }
  const auto& schema = detail::config_schema();
  for (const auto& [section, body] : tree) {
    const auto it = schema.find(section);
    if (it == schema.end()) throw ConfigError("unknown config section or key '" + section + "'");
    for (const auto& [key, value] : body)
      if (!it->second.count(key))
        throw ConfigError("unknown config key '" + section + "." + key + "'");
  }
  auto section = [&](const std::string& name) {
    const auto child = tree.get_child_optional(name);
    return detail::Section(name, child ? &*child : nullptr);
  };

  RunConfig cfg;

  const auto mol = section("molecule");
  std::optional<MoleculeParams> base;
  if (const auto name = mol.text("name")) {
    base = molecule_preset(*name);
    if (!base && !mol.text("B_rot_GHz"))
      throw ConfigError("molecule.B_rot_GHz: required (no preset named '" + *name + "')");
    if (!base) {
      base = MoleculeParams{};
      base->name = *name;
    }
  } else if (!tree.get_child_optional("molecule")) {
    base = MoleculeParams::no2_plus();  // no section at all: default preset
  } else {
    base = MoleculeParams{};
    for (const char* k : {"B_rot_GHz", "delta_alpha_A3", "g_r"})
      if (!mol.text(k)) throw ConfigError(std::string("molecule.") + k + ": required");
  }
  cfg.molecule = *base;
  if (auto v = mol.number("B_rot_GHz")) cfg.molecule.b_rot_hz = *v * 1e9;
  if (auto v = mol.number("delta_alpha_A3")) cfg.molecule.delta_alpha_a3 = *v;
  if (auto v = mol.number("g_r")) cfg.molecule.g_r = *v;
  if (!(cfg.molecule.b_rot_hz > 0.0)) throw ConfigError("molecule.B_rot_GHz: must be > 0");

  const auto laser = section("laser");
  if (auto v = laser.number("intensity_W_cm2")) cfg.laser.intensity_w_cm2 = *v;
  if (!(cfg.laser.intensity_w_cm2 > 0.0)) throw ConfigError("laser.intensity_W_cm2: must be > 0");
  if (auto v = laser.number("phi_rad")) cfg.laser.phi_rad = *v;
  if (auto v = laser.text("envelope")) {
    if (*v == "rectangular") cfg.laser.envelope.shape = Envelope::Shape::rectangular;
    else if (*v == "sin2_ramp") cfg.laser.envelope.shape = Envelope::Shape::sin2_ramp;
    else throw ConfigError("laser.envelope: expected rectangular or sin2_ramp, got '" + *v + "'");
  }
  if (auto v = laser.number("ramp_fraction")) {
    if (!(*v > 0.0 && *v <= 0.5)) throw ConfigError("laser.ramp_fraction: must lie in (0, 0.5]");
    cfg.laser.envelope.ramp_fraction = *v;
  }
  if (auto v = laser.number("detuning_MHz")) cfg.laser.detuning_mhz = *v;
  if (auto v = laser.number("duration_ns")) {
    if (!(*v > 0.0)) throw ConfigError("laser.duration_ns: must be > 0");
    cfg.laser.duration_ns = *v;
  }

  const auto st = section("state");
  if (auto v = st.integer("initial_J")) {
    if (*v < 0) throw ConfigError("state.initial_J: must be >= 0");
    cfg.state.initial_J = static_cast<int>(*v);
  }
  if (auto v = st.integer("j_max")) {
    if (*v < 0 || *v > 60) throw ConfigError("state.j_max: must lie in [0, 60]");
    cfg.state.j_max = static_cast<int>(*v);
  }
  if (cfg.state.j_max < cfg.state.initial_J + 2)
    throw ConfigError("state.j_max: must be at least initial_J + 2");

  const auto fld = section("field");
  if (auto v = fld.number("B_tesla")) {
    if (*v < 0.0) throw ConfigError("field.B_tesla: must be >= 0");
    cfg.field.magnitude_tesla = *v;
  }
  if (auto v = fld.text("axis")) cfg.field.axis = detail::parse_axis(*v, "field.axis");

  const auto sc = section("scan");
  if (auto v = sc.number("t_max_us")) {
    if (!(*v > 0.0)) throw ConfigError("scan.t_max_us: must be > 0");
    cfg.scan.t_max_us = *v;
  }
  if (auto v = sc.integer("n_delays")) {
    if (*v < 1) throw ConfigError("scan.n_delays: must be >= 1");
    cfg.scan.n_delays = static_cast<int>(*v);
  }
  if (auto v = sc.integer("shots")) {
    if (*v <= 0) throw ConfigError("scan.shots: must be > 0");
    cfg.scan.shots = static_cast<long>(*v);
  }
  if (auto v = sc.text("seed")) {
    try {
      std::size_t used = 0;
      cfg.scan.seed = std::stoull(*v, &used);
      if (used != v->size() || v->front() == '-') throw std::invalid_argument(*v);
    } catch (const std::exception&) {
      throw ConfigError("scan.seed: expected a non-negative 64-bit integer, got '" + *v + "'");
    }
  }
  if (auto v = sc.number("tau_us")) {
    if (!(*v > 0.0)) throw ConfigError("scan.tau_us: must be > 0");
    cfg.scan.tau_us = *v;
  }
  if (auto v = sc.text("fast_phase")) {
    if (*v == "exact") cfg.scan.fast_phase = FastPhase::exact;
    else if (*v == "randomized") cfg.scan.fast_phase = FastPhase::randomized;
    else throw ConfigError("scan.fast_phase: expected exact or randomized, got '" + *v + "'");
  }
  if (auto v = sc.text("shot_model")) {
    if (*v == "binomial") cfg.scan.shot_model = ShotModel::binomial;
    else if (*v == "per_shot") cfg.scan.shot_model = ShotModel::per_shot;
    else throw ConfigError("scan.shot_model: expected binomial or per_shot, got '" + *v + "'");
  }
  if (auto v = sc.number("detector_half_angle_deg")) {
    if (!(*v > 0.0 && *v < 90.0))
      throw ConfigError("scan.detector_half_angle_deg: must lie in (0, 90)");
    cfg.scan.detector_half_angle_deg = *v;
  }
  if (auto v = sc.integer("threads")) {
    if (*v < 0) throw ConfigError("scan.threads: must be >= 0");
    cfg.scan.threads = static_cast<unsigned>(*v);
  }

  const auto out = section("output");
  if (auto v = out.text("directory")) cfg.output_directory = *v;
  if (auto v = out.text("formats"); v && *v != "text")
    throw ConfigError("output.formats: only 'text' is supported, got '" + *v + "'");

  try {
    cfg.molecule.validate();
    cfg.field.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

}  // namespace gyrorotor
