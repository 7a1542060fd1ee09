#pragma once

// Plain-text experiment configuration.
//
//   # comment
//   [agent]
//   algorithm = sac
//   hidden = 64, 64
//   [matrix]
//   tasks = point_maze_s
//   variants = Baseline [HER], HiER [HER]
//   seeds = 0-9
//
// Every key outside [matrix] addresses one TrainConfig field as
// "section.key"; the same names are accepted by --override.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "hierlab/trainer.hpp"

namespace hierlab {

struct Setting {
  std::string key;  // "section.key"
  std::string value;
  std::string origin;  // "file:line" or "--override"
};

struct KeyInfo {
  std::string key;
  std::string description;
};

/// Every accepted configuration key in documentation order.
std::vector<KeyInfo> config_keys();

/// Sets one field. Throws ConfigError naming the key for unknown keys or bad values.
void apply_setting(TrainConfig& cfg, const Setting& setting);

/// Canonical nested JSON view of every key (sections as objects).
nlohmann::json to_json(const TrainConfig& cfg);

/// Component toggles of a variant name of the form "Algorithm [Components]":
/// Algorithm is Baseline, HiER, HiER+ or E2H-ISE and the optional components
/// are HER, PER or "HER & PER". Also selects the default xi mode
/// (prioritized with PER, fixed 0.5 otherwise).
void apply_variant(TrainConfig& cfg, const std::string& name);
std::string variant_slug(const std::string& name);

struct ExperimentMatrix {
  std::vector<std::string> tasks;
  std::vector<std::string> variants;
  std::vector<std::uint64_t> seeds;
  std::vector<Setting> settings;  // file settings followed by overrides

  /// Config of one cell: defaults, then the variant preset, then settings.
  TrainConfig make_config(const std::string& task, const std::string& variant, std::uint64_t seed) const;
  /// Throws ConfigError when a list is empty, a variant repeats or a setting is invalid.
  void validate() const;
};

/// Parses configuration text; `source` names the file in diagnostics.
ExperimentMatrix parse_matrix(const std::string& text, const std::string& source);
ExperimentMatrix load_matrix(const std::string& path);

/// "k=v" -> Setting. Throws ConfigError when '=' is missing.
Setting parse_override(const std::string& arg);
/// "0-9", "1,4,7" or a mix such as "0-2,7".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace hierlab
