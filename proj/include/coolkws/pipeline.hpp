#ifndef COOLKWS_PIPELINE_HPP
#define COOLKWS_PIPELINE_HPP

#include "coolkws/config.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace coolkws {

/// Output tree under ExperimentConfig::output_dir.
struct OutputLayout {
  std::filesystem::path root;

  std::filesystem::path manifest() const { return root / "manifest.json"; }
  std::filesystem::path task(const std::string& word) const { return root / "tasks" / (word + ".json"); }
  std::filesystem::path checkpoint(const std::string& word) const { return root / "models" / (word + ".ckpt"); }
  std::filesystem::path history(const std::string& word) const {
    return root / "models" / (word + "_history.csv");
  }
  std::filesystem::path stream_wav(const std::string& word, const std::string& scenario) const {
    return root / "streams" / word / (scenario + ".wav");
  }
  std::filesystem::path stream_json(const std::string& word, const std::string& scenario) const {
    return root / "streams" / word / (scenario + ".json");
  }
  std::filesystem::path run_log(const std::string& word, const std::string& scenario, RunMode mode) const {
    return root / "runs" / word / (scenario + "_" + std::string(to_string(mode)) + ".jsonl");
  }
  std::filesystem::path report_dir() const { return root / "report"; }
};

inline constexpr const char* kSequential = "Sequential";

/// Clean, the noise scenarios, and Sequential.
std::vector<std::string> all_stream_names();

struct PipelineOptions {
  bool force = false;
  std::ostream* log = nullptr;  // progress messages
};

/// Manifest plus one task file per word.
void prepare_data(const ExperimentConfig& cfg, const std::vector<std::string>& words,
                  const PipelineOptions& opt);

/// Trains M0 for each word; writes the checkpoint and history CSV.
void pretrain_tasks(const ExperimentConfig& cfg, const std::vector<std::string>& words,
                    const PipelineOptions& opt);

/// Writes the requested streams (names from all_stream_names()) for each word.
void build_streams(const ExperimentConfig& cfg, const std::vector<std::string>& words,
                   const std::vector<std::string>& scenarios, const PipelineOptions& opt);

/// Runs every mode over every requested stream of every word.
void run_streams(const ExperimentConfig& cfg, const std::vector<std::string>& words,
                 const std::vector<std::string>& scenarios, const std::vector<RunMode>& modes,
                 const PipelineOptions& opt);

/// Tables and curves from whatever histories and run logs exist.
void write_report(const ExperimentConfig& cfg, const PipelineOptions& opt);

/// Hold-out windows of a task, unshifted.
std::vector<LabeledWindow> holdout_windows(const TaskSpec& task, const DspConfig& dsp);

}  // namespace coolkws

#endif  // COOLKWS_PIPELINE_HPP
