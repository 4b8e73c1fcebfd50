#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace msched {

// Controllable generator with a quadratic fuel cost a*p^2 + b*p + c.
struct DGUnit {
  double a = 0.0;          // $/kW^2h
  double b = 0.0;          // $/kWh
  double c = 0.0;          // $/h, charged only while committed
  double p_min = 0.0;      // kW
  double p_max = 0.0;      // kW
  double ramp_up = 0.0;    // kW per step
  double ramp_down = 0.0;  // kW per step

  void validate() const;
};

// How the storage efficiency enters the SOC update.
//  kLiteral:  soc += eta * p * dt for both signs.
//  kPhysical: soc += eta * p * dt when charging, p * dt / eta when discharging.
enum class SocMode { kLiteral, kPhysical };

struct ESSUnit {
  double p_limit = 100.0;   // kW, symmetric charge/discharge bound
  double e_min = 100.0;     // kWh
  double e_max = 500.0;     // kWh
  double efficiency = 0.9;  // (0, 1]
  SocMode soc_mode = SocMode::kLiteral;

  void validate() const;
};

struct GridLink {
  double p_exchange_max = 100.0;  // kW, import and export
  double sell_coefficient = 0.5;  // export price = coefficient * tariff

  void validate() const;
};

// Scale constants for observation features. pv/load maxima come from the
// profile the environment is driven by.
struct ObservationScale {
  double pv_max = 1.0;
  double load_max = 1.0;
};

struct SystemConfig {
  std::vector<DGUnit> dg_units;
  ESSUnit ess;
  GridLink grid;
  double delta_t = 1.0;   // hours per step
  double sigma1 = 0.01;   // cost scale in the reward
  double sigma2 = 50.0;   // unbalance penalty per kW
  int horizon = 24;
  double commit_threshold = -0.9;
  bool include_time_feature = true;
  ObservationScale obs_scale;

  void validate() const;

  size_t num_dg() const { return dg_units.size(); }
  // Dimension of RawAction: one entry per DG plus the ESS.
  size_t action_dim() const { return dg_units.size() + 1; }
  size_t observation_dim() const {
    return 3 + dg_units.size() + (include_time_feature ? 1 : 0);
  }

  // Three-unit system with 500 kWh storage and a 100 kW grid link.
  static SystemConfig reference();
};

// Plain-text `key = value` file. Blank lines and `#` comments are ignored.
// Keys may repeat (e.g. one `dg` line per generator); lookups return the last
// occurrence unless all() is used.
class KeyValueFile {
 public:
  static KeyValueFile parse(const std::string& text);
  static KeyValueFile load(const std::filesystem::path& path);

  bool contains(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;
  std::vector<std::string> all(const std::string& key) const;
  std::optional<double> get_double(const std::string& key) const;
  std::optional<long> get_int(const std::string& key) const;
  std::optional<bool> get_bool(const std::string& key) const;
  std::vector<std::string> keys() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// Overlays the `sigma1`, `ess.*`, `grid.*`, `dg` ... keys of a configuration
// file onto `base`. If any `dg` key is present the DG list is replaced.
SystemConfig apply_system_config(const KeyValueFile& file, SystemConfig base);
SystemConfig load_system_config(const std::filesystem::path& path);

std::string to_string(SocMode mode);
SocMode parse_soc_mode(const std::string& text);

}  // namespace msched
