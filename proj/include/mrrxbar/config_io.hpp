#pragma once

#include <fstream>
#include <initializer_list>
#include <string>

#include "json.hpp"
#include "mrrxbar/calibration.hpp"
#include "mrrxbar/crossbar.hpp"
#include "mrrxbar/onn.hpp"

namespace mrrxbar {

using nlohmann::json;

// Everything the CLI can configure from one JSON file. Group layout mirrors
// the construction order: ring -> couplers -> crossbar -> feedback -> train.
struct SimSettings {
  double ring_length = 62.8e-6;
  double group_index = 4.2;
  double eff_index = 2.35;
  double resonance_wavelength = 1.55e-6;

  double q_target = 9000.0;
  bool explicit_couplers = false;
  double r1 = 0.95, r2 = 0.95, a = 1.0;

  int size = 4;
  int bits = 8;
  double crossing_loss_db = 0.1;
  double waveguide_loss_db_per_cm = 2.0;
  double pitch = 100e-6;
  double kappa = 0.01;
  double responsivity = 1.0;
  double floor_current = 0.0;
  double noise_sigma = 0.0;
  std::string summation = "incoherent";
  bool spectral_leakage = true;
  std::string weight_law = "drop_physical";

  FeedbackParams feedback;
  TrainConfig train;
};

namespace detail {

inline void reject_unknown(const json& j, const std::string& scope,
                           std::initializer_list<const char*> keys) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known)
      throw ConfigError("config: unknown key '" +
                        (scope.empty() ? it.key() : scope + "." + it.key()) + "'");
  }
}

template <typename T>
void fetch(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

}  // namespace detail

inline SimSettings settings_from_json(const json& j) {
  SimSettings s;
  detail::reject_unknown(j, "", {"ring", "couplers", "crossbar", "feedback", "train"});
  if (j.contains("ring")) {
    const json& r = j.at("ring");
    detail::reject_unknown(r, "ring",
                           {"length", "group_index", "eff_index", "resonance_wavelength"});
    detail::fetch(r, "length", s.ring_length);
    detail::fetch(r, "group_index", s.group_index);
    detail::fetch(r, "eff_index", s.eff_index);
    detail::fetch(r, "resonance_wavelength", s.resonance_wavelength);
  }
  if (j.contains("couplers")) {
    const json& c = j.at("couplers");
    detail::reject_unknown(c, "couplers", {"q", "r1", "r2", "a"});
    const bool has_q = c.contains("q");
    const bool has_r = c.contains("r1") || c.contains("r2");
    if (has_q && has_r)
      throw ConfigError("config: couplers.q and couplers.r1/r2 are mutually exclusive");
    detail::fetch(c, "a", s.a);
    if (has_r) {
      s.explicit_couplers = true;
      detail::fetch(c, "r1", s.r1);
      detail::fetch(c, "r2", s.r2);
    } else {
      detail::fetch(c, "q", s.q_target);
    }
  }
  if (j.contains("crossbar")) {
    const json& c = j.at("crossbar");
    detail::reject_unknown(
        c, "crossbar",
        {"size", "bits", "crossing_loss_db", "waveguide_loss_db_per_cm", "pitch",
         "kappa", "responsivity", "floor_current", "noise_sigma", "summation",
         "spectral_leakage", "weight_law"});
    detail::fetch(c, "size", s.size);
    detail::fetch(c, "bits", s.bits);
    detail::fetch(c, "crossing_loss_db", s.crossing_loss_db);
    detail::fetch(c, "waveguide_loss_db_per_cm", s.waveguide_loss_db_per_cm);
    detail::fetch(c, "pitch", s.pitch);
    detail::fetch(c, "kappa", s.kappa);
    detail::fetch(c, "responsivity", s.responsivity);
    detail::fetch(c, "floor_current", s.floor_current);
    detail::fetch(c, "noise_sigma", s.noise_sigma);
    detail::fetch(c, "summation", s.summation);
    detail::fetch(c, "spectral_leakage", s.spectral_leakage);
    detail::fetch(c, "weight_law", s.weight_law);
  }
  if (j.contains("feedback")) {
    const json& f = j.at("feedback");
    detail::reject_unknown(f, "feedback", {"gain", "tolerance", "max_rounds"});
    detail::fetch(f, "gain", s.feedback.gain);
    detail::fetch(f, "tolerance", s.feedback.tolerance);
    detail::fetch(f, "max_rounds", s.feedback.max_rounds);
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    detail::reject_unknown(t, "train",
                           {"learning_rate", "rounds", "seed", "update_mode",
                            "target_rate", "weight_scale"});
    detail::fetch(t, "learning_rate", s.train.learning_rate);
    detail::fetch(t, "rounds", s.train.rounds);
    detail::fetch(t, "seed", s.train.seed);
    detail::fetch(t, "target_rate", s.train.target_rate);
    detail::fetch(t, "weight_scale", s.train.weight_scale);
    if (t.contains("update_mode")) {
      const std::string m = t.at("update_mode").get<std::string>();
      if (m == "weight_domain")
        s.train.update_mode = UpdateMode::weight_domain;
      else if (m == "phase_domain")
        s.train.update_mode = UpdateMode::phase_domain;
      else
        throw ConfigError("config: bad train.update_mode '" + m + "'");
    }
  }
  return s;
}

inline json settings_to_json(const SimSettings& s) {
  json j;
  j["ring"] = {{"length", s.ring_length},
               {"group_index", s.group_index},
               {"eff_index", s.eff_index},
               {"resonance_wavelength", s.resonance_wavelength}};
  if (s.explicit_couplers)
    j["couplers"] = {{"r1", s.r1}, {"r2", s.r2}, {"a", s.a}};
  else
    j["couplers"] = {{"q", s.q_target}, {"a", s.a}};
  j["crossbar"] = {{"size", s.size},
                   {"bits", s.bits},
                   {"crossing_loss_db", s.crossing_loss_db},
                   {"waveguide_loss_db_per_cm", s.waveguide_loss_db_per_cm},
                   {"pitch", s.pitch},
                   {"kappa", s.kappa},
                   {"responsivity", s.responsivity},
                   {"floor_current", s.floor_current},
                   {"noise_sigma", s.noise_sigma},
                   {"summation", s.summation},
                   {"spectral_leakage", s.spectral_leakage},
                   {"weight_law", s.weight_law}};
  j["feedback"] = {{"gain", s.feedback.gain},
                   {"tolerance", s.feedback.tolerance},
                   {"max_rounds", s.feedback.max_rounds}};
  j["train"] = {{"learning_rate", s.train.learning_rate},
                {"rounds", s.train.rounds},
                {"seed", s.train.seed},
                {"update_mode", s.train.update_mode == UpdateMode::phase_domain
                                    ? "phase_domain"
                                    : "weight_domain"},
                {"target_rate", s.train.target_rate},
                {"weight_scale", s.train.weight_scale}};
  return j;
}

inline SimSettings load_settings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  try {
    return settings_from_json(j);
  } catch (const json::exception& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
}

inline void save_settings(const std::string& path, const SimSettings& s) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write: " + path);
  f << settings_to_json(s).dump(2) << "\n";
}

inline MrrDevice make_device(const SimSettings& s) {
  const RingGeometry g = RingGeometry::make(s.ring_length, s.group_index,
                                            s.eff_index, s.resonance_wavelength);
  const CouplerSet c = s.explicit_couplers ? CouplerSet{s.r1, s.r2, s.a}
                                           : couplers_for_q(s.q_target, g, s.a);
  return MrrDevice::make(g, c);
}

inline CrossbarConfig make_crossbar(const SimSettings& s) {
  CrossbarConfig cfg;
  cfg.size_N = s.size;
  cfg.device_template = make_device(s);
  cfg.plan = plan_channels(s.size, cfg.device_template, s.bits);
  cfg.crossing_loss_db = s.crossing_loss_db;
  cfg.waveguide_loss_db_per_cm = s.waveguide_loss_db_per_cm;
  cfg.pitch = s.pitch;
  cfg.thermal_coupling_kappa = s.kappa;
  cfg.pd_responsivity = s.responsivity;
  cfg.pd_floor_current = s.floor_current;
  cfg.additive_noise_sigma = s.noise_sigma;
  if (s.summation == "incoherent")
    cfg.summation_mode = SummationMode::incoherent;
  else if (s.summation == "coherent")
    cfg.summation_mode = SummationMode::coherent;
  else
    throw ConfigError("config: bad crossbar.summation '" + s.summation + "'");
  cfg.spectral_leakage = s.spectral_leakage;
  if (s.weight_law == "drop_physical")
    cfg.weight_law = WeightLaw::drop_physical;
  else if (s.weight_law == "linear_ideal")
    cfg.weight_law = WeightLaw::linear_ideal;
  else
    throw ConfigError("config: bad crossbar.weight_law '" + s.weight_law + "'");
  cfg.validate();
  return cfg;
}

inline json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline Mat matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j.front().is_array())
    throw ConfigError(what + ": expected an array of arrays");
  const size_t cols = j.front().size();
  Mat m(j.size(), cols);
  for (size_t i = 0; i < j.size(); ++i) {
    if (j[i].size() != cols) throw ConfigError(what + ": ragged rows");
    for (size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          j[i][c].get<double>();
  }
  return m;
}

inline json vector_to_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

}  // namespace mrrxbar
