// SPDX-License-Identifier: Apache-2.0

#include "dualrot/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace dualrot {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t consumed = 0;
    const double parsed = std::stod(value, &consumed);
    if (trim(value.substr(consumed)).empty()) return parsed;
  } catch (const std::exception&) {
  }
  throw ConfigError(key, "expected a number, got '" + value + "'");
}

int parse_int(const std::string& key, const std::string& value) {
  const double parsed = parse_double(key, value);
  const int rounded = static_cast<int>(std::llround(parsed));
  if (std::abs(parsed - rounded) > 1e-9)
    throw ConfigError(key, "expected an integer, got '" + value + "'");
  return rounded;
}

std::uint64_t parse_seed(const std::string& key, const std::string& value) {
  try {
    std::size_t consumed = 0;
    const std::uint64_t parsed = std::stoull(value, &consumed);
    if (trim(value.substr(consumed)).empty()) return parsed;
  } catch (const std::exception&) {
  }
  throw ConfigError(key, "expected an unsigned integer, got '" + value + "'");
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(key, "expected true/false, got '" + value + "'");
}

vec3 parse_vec3(const std::string& key, std::string value) {
  for (char& c : value)
    if (c == ',') c = ' ';
  std::istringstream stream(value);
  vec3 parsed;
  if (!(stream >> parsed[0] >> parsed[1] >> parsed[2]))
    throw ConfigError(key, "expected three numbers, got '" + value + "'");
  std::string rest;
  if (stream >> rest) throw ConfigError(key, "trailing content '" + rest + "'");
  return parsed;
}

using Setter = std::function<void(ScenarioConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"wavelength", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.wavelength = parse_double(k, v); }},
      {"carrier_hz", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.wavelength = kSpeedOfLight / parse_double(k, v); }},
      {"bs_center", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.bs_center = parse_vec3(k, v); }},
      {"irs_center", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.irs_center = parse_vec3(k, v); }},
      {"bs_count_x", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.bs_count_x = parse_int(k, v); }},
      {"bs_count_z", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.bs_count_z = parse_int(k, v); }},
      {"irs_side_count", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.irs_side_count = parse_int(k, v); }},
      {"bs_spacing", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.bs_spacing = parse_double(k, v); }},
      {"irs_spacing", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.irs_spacing = parse_double(k, v); }},
      {"num_users", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.num_users = parse_int(k, v); }},
      {"user_power_dbm", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.user_power_dbm = parse_double(k, v); }},
      {"noise_dbm", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.noise_dbm = parse_double(k, v); }},
      {"direct_paths", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.direct_paths = parse_int(k, v); }},
      {"irs_paths", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.irs_paths = parse_int(k, v); }},
      {"nlos_amplitude", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.nlos_amplitude = parse_double(k, v); }},
      {"direct_attenuation_db", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.direct_attenuation_db = parse_double(k, v); }},
      {"bs_exponent", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.bs_exponent = parse_double(k, v); }},
      {"irs_exponent", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.irs_exponent = parse_double(k, v); }},
      {"max_elevation_deg", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.max_elevation_deg = parse_double(k, v); }},
      {"max_alpha_deg", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.max_alpha_deg = parse_double(k, v); }},
      {"max_beta_deg", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.max_beta_deg = parse_double(k, v); }},
      {"max_phi_deg", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.max_phi_deg = parse_double(k, v); }},
      {"user_distance_min", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.user_distance_min = parse_double(k, v); }},
      {"user_distance_max", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.user_distance_max = parse_double(k, v); }},
      {"user_height", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.user_height = parse_double(k, v); }},
      {"user_azimuth_deg", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.user_azimuth_deg = parse_double(k, v); }},
      {"scatterer_radius", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.scatterer_radius = parse_double(k, v); }},
      {"scatterer_height_min", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.scatterer_height_min = parse_double(k, v); }},
      {"scatterer_height_max", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.scatterer_height_max = parse_double(k, v); }},
      {"cascaded_los_only", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.cascaded_los_only = parse_bool(k, v); }},
      {"seed", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.seed = parse_seed(k, v); }},
      {"trials", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.trials = parse_int(k, v); }},
      {"ao_tol", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.solver.ao_tol = parse_double(k, v); }},
      {"ao_max_iters", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.solver.ao_max_iters = parse_int(k, v); }},
      {"rot_tol", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.solver.rot_tol = parse_double(k, v); }},
      {"rot_floor", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.solver.rot_floor = parse_double(k, v); }},
      {"rot_max_iters", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.solver.rot_max_iters = parse_int(k, v); }},
      {"step_max", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.solver.step_max = parse_double(k, v); }},
      {"step_min", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.solver.step_min = parse_double(k, v); }},
      {"backtrack", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.solver.backtrack = parse_double(k, v); }},
      {"bb_init", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.solver.bb_init = parse_double(k, v); }},
      {"bb_min", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.solver.bb_min = parse_double(k, v); }},
      {"bb_max", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.solver.bb_max = parse_double(k, v); }},
      {"fp_iters", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.solver.fp_iters = parse_int(k, v); }},
      {"rcg_max_iters", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.solver.rcg_max_iters = parse_int(k, v); }},
      {"rcg_tol_per_element", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.solver.rcg_tol_per_element = parse_double(k, v); }},
      {"bcd_max_sweeps", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.solver.bcd_max_sweeps = parse_int(k, v); }},
      {"bcd_tol", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.solver.bcd_tol = parse_double(k, v); }},
      {"su_tol", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.solver.su_tol = parse_double(k, v); }},
      {"su_max_iters", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.solver.su_max_iters = parse_int(k, v); }},
      {"nf_restarts", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.solver.nf_restarts = parse_int(k, v); }},
  };
  return table;
}

} // namespace

void apply_config_override(ScenarioConfig& config, const std::string& key,
                           const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError(key, "unknown configuration key");
  it->second(config, key, trim(value));
}

ScenarioConfig load_config(const std::string& path) {
  ScenarioConfig config;
  if (path.empty()) {
    config.validate();
    return config;
  }

  std::ifstream file(path);
  if (!file) throw ConfigError("config", "cannot open '" + path + "'");

  bool saw_wavelength = false, saw_carrier = false;
  double carrier_value = 0.0;

  std::string line;
  int line_number = 0;
  while (std::getline(file, line)) {
    ++line_number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;

    const auto eq = content.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config", "line " + std::to_string(line_number) + ": expected key = value");
    const std::string key = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));

    if (key == "wavelength") saw_wavelength = true;
    if (key == "carrier_hz") {
      saw_carrier = true;
      carrier_value = parse_double(key, value);
    }
    apply_config_override(config, key, value);
  }

  // Wavelength is authoritative; a carrier given alongside it must agree.
  if (saw_wavelength && saw_carrier) {
    throw ConfigError("carrier_hz", "set either wavelength or carrier_hz, not both");
  } else if (saw_carrier) {
    config.wavelength = kSpeedOfLight / carrier_value;
  }

  config.validate();
  return config;
}

void ScenarioConfig::validate() const {
  const auto require = [](bool ok, const char* field, const char* what) {
    if (!ok) throw ConfigError(field, what);
  };
  require(std::isfinite(wavelength) && wavelength > 0.0, "wavelength", "must be positive");
  require(bs_count_x >= 1, "bs_count_x", "must be at least 1");
  require(bs_count_z >= 1, "bs_count_z", "must be at least 1");
  require(irs_side_count >= 1, "irs_side_count", "must be at least 1");
  require(bs_spacing > 0.0, "bs_spacing", "must be positive");
  require(irs_spacing > 0.0, "irs_spacing", "must be positive");
  require((bs_center - irs_center).norm() > 0.0, "irs_center", "must differ from bs_center");
  require(num_users >= 1, "num_users", "must be at least 1");
  require(user_power_dbm >= -300.0 && user_power_dbm <= 300.0, "user_power_dbm",
          "out of range [-300, 300] dBm");
  require(noise_dbm >= -300.0 && noise_dbm <= 300.0, "noise_dbm", "out of range [-300, 300] dBm");
  require(direct_paths >= 1, "direct_paths", "must be at least 1");
  require(irs_paths >= 1, "irs_paths", "must be at least 1");
  require(nlos_amplitude > 0.0 && nlos_amplitude < 1.0, "nlos_amplitude", "must lie in (0, 1)");
  require(direct_attenuation_db >= 0.0, "direct_attenuation_db", "must be nonnegative");
  require(bs_exponent >= 0.5, "bs_exponent", "must be at least 1/2");
  require(irs_exponent >= 0.5, "irs_exponent", "must be at least 1/2");
  require(max_elevation_deg > 0.0 && max_elevation_deg <= 90.0, "max_elevation_deg",
          "must lie in (0, 90]");
  require(max_alpha_deg > 0.0 && max_alpha_deg < 90.0, "max_alpha_deg", "must lie in (0, 90)");
  require(max_beta_deg > 0.0 && max_beta_deg < 90.0, "max_beta_deg", "must lie in (0, 90)");
  require(max_phi_deg > 0.0 && max_phi_deg < 90.0, "max_phi_deg", "must lie in (0, 90)");
  require(user_distance_min > 0.0, "user_distance_min", "must be positive");
  require(user_distance_max >= user_distance_min, "user_distance_max",
          "must be at least user_distance_min");
  require(user_height > 0.0, "user_height", "must be positive");
  require(user_azimuth_deg > 0.0 && user_azimuth_deg <= 180.0, "user_azimuth_deg",
          "must lie in (0, 180]");
  require(scatterer_radius > 0.0, "scatterer_radius", "must be positive");
  require(scatterer_height_min > 0.0, "scatterer_height_min", "must be positive");
  require(scatterer_height_max >= scatterer_height_min, "scatterer_height_max",
          "must be at least scatterer_height_min");
  require(trials >= 1, "trials", "must be at least 1");
  require(solver.ao_max_iters >= 1, "ao_max_iters", "must be at least 1");
  require(solver.rot_max_iters >= 1, "rot_max_iters", "must be at least 1");
  require(solver.fp_iters >= 0, "fp_iters", "must be nonnegative");
  require(solver.rcg_max_iters >= 1, "rcg_max_iters", "must be at least 1");
  require(solver.bcd_max_sweeps >= 1, "bcd_max_sweeps", "must be at least 1");
  require(solver.su_max_iters >= 1, "su_max_iters", "must be at least 1");
  require(solver.nf_restarts >= 1, "nf_restarts", "must be at least 1");
  require(solver.step_max > 0.0 && solver.step_min > 0.0 && solver.step_min <= solver.step_max,
          "step_min", "requires 0 < step_min <= step_max");
  require(solver.backtrack > 0.0 && solver.backtrack < 1.0, "backtrack", "must lie in (0, 1)");
  require(solver.bb_min > 0.0 && solver.bb_init >= solver.bb_min &&
              solver.bb_max >= solver.bb_init,
          "bb_init", "requires 0 < bb_min <= bb_init <= bb_max");
}

} // namespace dualrot
