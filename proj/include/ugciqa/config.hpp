#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ugciqa/model.hpp"
#include "ugciqa/psych.hpp"
#include "ugciqa/qmap.hpp"
#include "ugciqa/train.hpp"

namespace ugciqa {

/// Parameters of the simulated rating study run by the study command when no
/// ratings file is given.
struct StudySimulation {
  int contents = 50;
  int raters = 35;
  int spam_raters = 0;
  double noise_sigma = 5.0;
  double gain_min = 0.5;
  double gain_max = 2.0;
  double bias_min = -20.0;
  double bias_max = 20.0;
  double truth_min = 10.0;
  double truth_max = 90.0;
  double spam_constant = 50.0;
};

/// Everything the command-line driver can configure.
struct Settings {
  std::uint64_t seed = 0;
  nn::TrainConfig train;
  nn::ModelConfig model;
  RejectionPolicy policy;
  int hit_size = kHitSizeInitial;
  int consistency_splits = kConsistencySplits;
  StudySimulation simulation;
  int map_grid = kDefaultMapGrid;
  double map_alpha = kDefaultMapAlpha;
};

/// Flat "key = value" text; '#' starts a comment line, blank lines are
/// ignored, later keys override earlier ones.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const noexcept { return values_; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

 private:
  std::map<std::string, std::string> values_;
};

/// Overrides fields of settings from cfg. Unknown keys, unparsable values and
/// attempts to change the fixed study layout or RoI grid throw kConfig.
void apply_config(const KeyValueConfig& cfg, Settings& settings);

/// Every configurable key with its current value, in a stable order;
/// parse(settings_to_text(s)) applied to defaults reproduces s.
std::string settings_to_text(const Settings& settings);

/// Checks cross-field constraints (positive sizes, betas, alpha in [0, 1], ...).
void validate_settings(const Settings& settings);

}  // namespace ugciqa
