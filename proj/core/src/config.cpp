#include "msched/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "msched/errors.hpp"

namespace msched {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_number(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw ConfigError("config key '" + key + "': not a number: '" + text + "'");
  }
  return value;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

DGUnit parse_dg(const std::string& value) {
  std::vector<double> fields;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) fields.push_back(parse_number(item, "dg"));
  if (fields.size() != 7) {
    throw ConfigError(
        "config key 'dg' expects 7 comma-separated fields "
        "(a, b, c, p_min, p_max, ramp_up, ramp_down), got: " + value);
  }
  return DGUnit{fields[0], fields[1], fields[2], fields[3],
                fields[4], fields[5], fields[6]};
}

}  // namespace

void DGUnit::validate() const {
  require(p_min >= 0.0 && p_min <= p_max, "DG unit requires 0 <= p_min <= p_max");
  require(a >= 0.0, "DG unit requires a >= 0");
  require(ramp_up > 0.0 && ramp_down > 0.0, "DG unit requires positive ramp limits");
}

void ESSUnit::validate() const {
  require(e_min >= 0.0 && e_min < e_max, "ESS requires 0 <= e_min < e_max");
  require(efficiency > 0.0 && efficiency <= 1.0, "ESS requires 0 < efficiency <= 1");
  require(p_limit >= 0.0, "ESS requires p_limit >= 0");
}

void GridLink::validate() const {
  require(p_exchange_max > 0.0, "grid requires p_exchange_max > 0");
  require(sell_coefficient >= 0.0 && sell_coefficient <= 1.0,
          "grid requires sell_coefficient in [0, 1]");
}

void SystemConfig::validate() const {
  for (const auto& unit : dg_units) unit.validate();
  ess.validate();
  grid.validate();
  require(delta_t > 0.0, "delta_t must be positive");
  require(sigma1 > 0.0, "sigma1 must be positive");
  require(sigma2 >= 0.0, "sigma2 must be non-negative");
  require(horizon >= 1, "horizon must be at least 1");
  require(commit_threshold > -1.0 && commit_threshold < 1.0,
          "commit_threshold must lie in (-1, 1)");
  require(obs_scale.pv_max > 0.0 && obs_scale.load_max > 0.0,
          "observation scales must be positive");
}

SystemConfig SystemConfig::reference() {
  SystemConfig cfg;
  cfg.dg_units = {
      {0.0034, 3.0, 30.0, 10.0, 150.0, 100.0, 100.0},
      {0.001, 10.0, 40.0, 50.0, 375.0, 100.0, 100.0},
      {0.001, 15.0, 70.0, 100.0, 500.0, 200.0, 200.0},
  };
  return cfg;
}

KeyValueFile KeyValueFile::parse(const std::string& text) {
  KeyValueFile file;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    }
    file.entries_.emplace_back(std::move(key), std::move(value));
  }
  return file;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

bool KeyValueFile::contains(const std::string& key) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const auto& e) { return e.first == key; });
}

std::optional<std::string> KeyValueFile::get(const std::string& key) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->first == key) return it->second;
  }
  return std::nullopt;
}

std::vector<std::string> KeyValueFile::all(const std::string& key) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) {
    if (k == key) out.push_back(v);
  }
  return out;
}

std::optional<double> KeyValueFile::get_double(const std::string& key) const {
  auto v = get(key);
  if (!v) return std::nullopt;
  return parse_number(*v, key);
}

std::optional<long> KeyValueFile::get_int(const std::string& key) const {
  auto v = get(key);
  if (!v) return std::nullopt;
  long value = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), value);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    throw ConfigError("config key '" + key + "': not an integer: '" + *v + "'");
  }
  return value;
}

std::optional<bool> KeyValueFile::get_bool(const std::string& key) const {
  auto v = get(key);
  if (!v) return std::nullopt;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  throw ConfigError("config key '" + key + "': not a boolean: '" + *v + "'");
}

std::vector<std::string> KeyValueFile::keys() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& [k, v] : entries_) {
    if (seen.insert(k).second) out.push_back(k);
  }
  return out;
}

SystemConfig apply_system_config(const KeyValueFile& file, SystemConfig cfg) {
  static const std::set<std::string> known = {
      "delta_t",        "sigma1",          "sigma2",
      "horizon",        "commit_threshold", "include_time_feature",
      "ess.p_limit",    "ess.e_min",       "ess.e_max",
      "ess.efficiency", "ess.soc_mode",    "grid.p_exchange_max",
      "grid.sell_coefficient", "dg"};
  for (const auto& key : file.keys()) {
    const bool foreign = key.starts_with("algo.") || key.starts_with("oracle.") ||
                         key.starts_with("synth.");
    if (!foreign && !known.contains(key)) {
      throw ConfigError("unknown config key: " + key);
    }
  }

  if (auto v = file.get_double("delta_t")) cfg.delta_t = *v;
  if (auto v = file.get_double("sigma1")) cfg.sigma1 = *v;
  if (auto v = file.get_double("sigma2")) cfg.sigma2 = *v;
  if (auto v = file.get_int("horizon")) cfg.horizon = static_cast<int>(*v);
  if (auto v = file.get_double("commit_threshold")) cfg.commit_threshold = *v;
  if (auto v = file.get_bool("include_time_feature")) cfg.include_time_feature = *v;
  if (auto v = file.get_double("ess.p_limit")) cfg.ess.p_limit = *v;
  if (auto v = file.get_double("ess.e_min")) cfg.ess.e_min = *v;
  if (auto v = file.get_double("ess.e_max")) cfg.ess.e_max = *v;
  if (auto v = file.get_double("ess.efficiency")) cfg.ess.efficiency = *v;
  if (auto v = file.get("ess.soc_mode")) cfg.ess.soc_mode = parse_soc_mode(*v);
  if (auto v = file.get_double("grid.p_exchange_max")) cfg.grid.p_exchange_max = *v;
  if (auto v = file.get_double("grid.sell_coefficient")) cfg.grid.sell_coefficient = *v;

  const auto dg_lines = file.all("dg");
  if (!dg_lines.empty()) {
    cfg.dg_units.clear();
    for (const auto& line : dg_lines) cfg.dg_units.push_back(parse_dg(line));
  }
  cfg.validate();
  return cfg;
}

SystemConfig load_system_config(const std::filesystem::path& path) {
  return apply_system_config(KeyValueFile::load(path), SystemConfig::reference());
}

std::string to_string(SocMode mode) {
  return mode == SocMode::kLiteral ? "literal" : "physical";
}

SocMode parse_soc_mode(const std::string& text) {
  if (text == "literal") return SocMode::kLiteral;
  if (text == "physical") return SocMode::kPhysical;
  throw ConfigError("ess.soc_mode must be 'literal' or 'physical', got: " + text);
}

}  // namespace msched
