#ifndef COOLKWS_CONFIG_HPP
#define COOLKWS_CONFIG_HPP

#include "coolkws/dsp.hpp"
#include "coolkws/model.hpp"
#include "coolkws/online.hpp"
#include "coolkws/report.hpp"
#include "coolkws/stream.hpp"
#include "coolkws/trainer.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace coolkws {

/// Everything one experiment needs, stored as a single JSON document.
struct ExperimentConfig {
  std::string gsc_root;
  std::string validation_list;  // default: <gsc_root>/validation_list.txt
  std::string test_list;        // default: <gsc_root>/testing_list.txt
  std::map<std::string, std::string> noise;  // scenario name -> WAV file or directory

  DspConfig dsp;
  TrainConfig train;
  StreamConfig stream;
  OnlineConfig online;
  ModelShape model;
  std::vector<RunMode> modes{RunMode::frozen, RunMode::naive, RunMode::cool};
  std::vector<std::string> words = default_keywords();
  std::size_t holdout_size = 256;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  GainConvention gain = GainConvention::relative_to_cool;
  StdKind std_kind = StdKind::population;

  void validate() const;
  std::filesystem::path validation_list_path() const;
  std::filesystem::path test_list_path() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

/// Reads the config; COOLKWS_DATA, when set, replaces gsc_root.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Per-module seeds: derive_seed(root, "<module>:<key>").
std::uint64_t module_seed(std::uint64_t root, std::string_view module, std::string_view key);

/// One noise clip per scenario: a WAV file, or all WAVs of a directory
/// concatenated in name order.
AudioClip load_noise(const std::filesystem::path& path);

}  // namespace coolkws

#endif  // COOLKWS_CONFIG_HPP
