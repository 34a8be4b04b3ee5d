#ifndef COOLKWS_DATASET_HPP
#define COOLKWS_DATASET_HPP

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace coolkws {

inline constexpr int kSchemaVersion = 1;

enum class Partition { train, validation, test };
enum class BinaryLabel : int { non_target = 0, target = 1 };

std::string_view to_string(Partition p) noexcept;
Partition parse_partition(std::string_view text);

struct ManifestEntry {
  std::string source_path;  // relative to the corpus root, '/'-separated
  std::string word;
  Partition partition = Partition::train;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct Manifest {
  std::string corpus_root;
  std::vector<ManifestEntry> entries;  // sorted by source_path

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

struct TaskEntry {
  std::string source_path;
  BinaryLabel label = BinaryLabel::non_target;

  friend bool operator==(const TaskEntry&, const TaskEntry&) = default;
};

/// One binary keyword task. `holdout` is drawn from `validation`.
struct TaskSpec {
  std::string target_word;
  std::string corpus_root;
  std::vector<TaskEntry> train;
  std::vector<TaskEntry> validation;
  std::vector<TaskEntry> test;
  std::vector<TaskEntry> holdout;
  std::uint64_t seed = 0;

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

/// The eight keywords of the benchmark.
const std::vector<std::string>& default_keywords();

/// Scans `root/<word>/*.wav`. Directories starting with '_' (background
/// noise in Speech Commands) are skipped. Files listed in the validation or
/// test list go to that partition, everything else to train. An empty list
/// path means "no list".
Manifest ingest_corpus(const std::filesystem::path& root,
                       const std::filesystem::path& validation_list,
                       const std::filesystem::path& test_list);

/// Balanced binary task for `target_word`. Within each partition all target
/// clips are positives and an equal number of other-word clips, drawn
/// without replacement, are negatives. The holdout takes holdout_size/2 of
/// each class from the task's validation partition.
TaskSpec build_task(const Manifest& manifest, const std::string& target_word,
                    std::size_t holdout_size, std::uint64_t seed);

void to_json(nlohmann::json& j, const Manifest& m);
void from_json(const nlohmann::json& j, Manifest& m);
void to_json(nlohmann::json& j, const TaskSpec& t);
void from_json(const nlohmann::json& j, TaskSpec& t);

void save_json(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json load_json(const std::filesystem::path& path);

}  // namespace coolkws

#endif  // COOLKWS_DATASET_HPP
