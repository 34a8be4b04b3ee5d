#include "coolkws/dataset.hpp"

#include "coolkws/audio.hpp"
#include "coolkws/error.hpp"
#include "coolkws/random.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

namespace coolkws {
namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Partition p) noexcept {
  switch (p) {
    case Partition::train: return "train";
    case Partition::validation: return "validation";
    case Partition::test: return "test";
  }
  return "train";
}

Partition parse_partition(std::string_view text) {
  if (text == "train") return Partition::train;
  if (text == "validation") return Partition::validation;
  if (text == "test") return Partition::test;
  throw Error(Errc::format, "unknown partition '" + std::string(text) + "'");
}

const std::vector<std::string>& default_keywords() {
  static const std::vector<std::string> words{"down", "go",    "left", "no",
                                              "right", "stop", "up",   "yes"};
  return words;
}

namespace {

std::set<std::string> read_list(const fs::path& path) {
  std::set<std::string> out;
  if (path.empty()) return out;
  std::ifstream in(path);
  if (!in) throw Error(Errc::corpus_not_found, "list file " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.insert(line);
  }
  return out;
}

std::vector<TaskEntry> sample_partition(const Manifest& manifest, Partition part,
                                        const std::string& target, std::uint64_t seed) {
  std::vector<TaskEntry> positives;
  std::vector<TaskEntry> pool;
  for (const auto& e : manifest.entries) {
    if (e.partition != part) continue;
    if (e.word == target) {
      positives.push_back({e.source_path, BinaryLabel::target});
    } else {
      pool.push_back({e.source_path, BinaryLabel::non_target});
    }
  }
  if (pool.size() < positives.size()) {
    throw Error(Errc::capacity, std::string(to_string(part)) + " partition has " +
                                    std::to_string(pool.size()) + " negatives for " +
                                    std::to_string(positives.size()) + " positives of '" +
                                    target + "'");
  }
  auto rng = make_rng(seed, "task.negatives", static_cast<std::uint64_t>(part));
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(positives.size());

  std::vector<TaskEntry> out = std::move(positives);
  out.insert(out.end(), pool.begin(), pool.end());
  auto order = make_rng(seed, "task.order", static_cast<std::uint64_t>(part));
  std::shuffle(out.begin(), out.end(), order);
  return out;
}

}  // namespace

Manifest ingest_corpus(const fs::path& root, const fs::path& validation_list,
                       const fs::path& test_list) {
  if (!fs::is_directory(root)) throw Error(Errc::corpus_not_found, root.string());
  const auto validation = read_list(validation_list);
  const auto test = read_list(test_list);

  Manifest manifest;
  manifest.corpus_root = root.string();
  for (const auto& dir : fs::directory_iterator(root)) {
    if (!dir.is_directory()) continue;
    const std::string word = dir.path().filename().string();
    if (word.empty() || word.front() == '_' || word.front() == '.') continue;
    for (const auto& file : fs::directory_iterator(dir.path())) {
      if (!file.is_regular_file() || file.path().extension() != ".wav") continue;
      const WavInfo info = read_wav_info(file.path());
      if (info.sample_rate_hz != kSampleRate) {
        throw Error(Errc::sample_rate, file.path().string() + " is " +
                                           std::to_string(info.sample_rate_hz) + " Hz");
      }
      ManifestEntry entry;
      entry.source_path = word + "/" + file.path().filename().string();
      entry.word = word;
      if (test.contains(entry.source_path)) {
        entry.partition = Partition::test;
      } else if (validation.contains(entry.source_path)) {
        entry.partition = Partition::validation;
      }
      manifest.entries.push_back(std::move(entry));
    }
  }
  std::sort(manifest.entries.begin(), manifest.entries.end(),
            [](const auto& a, const auto& b) { return a.source_path < b.source_path; });
  return manifest;
}

TaskSpec build_task(const Manifest& manifest, const std::string& target_word,
                    std::size_t holdout_size, std::uint64_t seed) {
  const bool known = std::any_of(manifest.entries.begin(), manifest.entries.end(),
                                 [&](const auto& e) { return e.word == target_word; });
  if (!known) throw Error(Errc::unknown_keyword, "'" + target_word + "' not in manifest");
  if (holdout_size % 2 != 0) throw Error(Errc::config, "holdout size must be even");

  TaskSpec task;
  task.target_word = target_word;
  task.corpus_root = manifest.corpus_root;
  task.seed = seed;
  task.train = sample_partition(manifest, Partition::train, target_word, seed);
  task.validation = sample_partition(manifest, Partition::validation, target_word, seed);
  task.test = sample_partition(manifest, Partition::test, target_word, seed);

  const std::size_t per_class = holdout_size / 2;
  std::vector<TaskEntry> pos;
  std::vector<TaskEntry> neg;
  for (const auto& e : task.validation) {
    (e.label == BinaryLabel::target ? pos : neg).push_back(e);
  }
  if (pos.size() < per_class || neg.size() < per_class) {
    throw Error(Errc::capacity, "validation partition too small for a holdout of " +
                                    std::to_string(holdout_size));
  }
  auto rng = make_rng(seed, "task.holdout");
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  for (std::size_t i = 0; i < per_class; ++i) {
    task.holdout.push_back(pos[i]);
    task.holdout.push_back(neg[i]);
  }
  return task;
}

namespace {

json entries_to_json(const std::vector<TaskEntry>& entries) {
  json arr = json::array();
  for (const auto& e : entries) {
    arr.push_back({{"path", e.source_path}, {"label", static_cast<int>(e.label)}});
  }
  return arr;
}

std::vector<TaskEntry> entries_from_json(const json& arr) {
  std::vector<TaskEntry> out;
  for (const auto& item : arr) {
    const int label = item.at("label").get<int>();
    if (label != 0 && label != 1) throw Error(Errc::format, "binary label must be 0 or 1");
    out.push_back({item.at("path").get<std::string>(), static_cast<BinaryLabel>(label)});
  }
  return out;
}

void check_schema(const json& j, std::string_view kind) {
  if (j.value("schema_version", 0) != kSchemaVersion || j.value("kind", "") != kind) {
    throw Error(Errc::format, "expected " + std::string(kind) + " document with schema_version " +
                                  std::to_string(kSchemaVersion));
  }
}

}  // namespace

void to_json(json& j, const Manifest& m) {
  json entries = json::array();
  for (const auto& e : m.entries) {
    entries.push_back(
        {{"path", e.source_path}, {"word", e.word}, {"partition", to_string(e.partition)}});
  }
  j = {{"schema_version", kSchemaVersion},
       {"kind", "manifest"},
       {"corpus_root", m.corpus_root},
       {"entries", std::move(entries)}};
}

void from_json(const json& j, Manifest& m) {
  check_schema(j, "manifest");
  m.corpus_root = j.at("corpus_root").get<std::string>();
  m.entries.clear();
  for (const auto& e : j.at("entries")) {
    m.entries.push_back({e.at("path").get<std::string>(), e.at("word").get<std::string>(),
                         parse_partition(e.at("partition").get<std::string>())});
  }
}

void to_json(json& j, const TaskSpec& t) {
  j = {{"schema_version", kSchemaVersion},
       {"kind", "task"},
       {"target_word", t.target_word},
       {"corpus_root", t.corpus_root},
       {"seed", t.seed},
       {"train", entries_to_json(t.train)},
       {"validation", entries_to_json(t.validation)},
       {"test", entries_to_json(t.test)},
       {"holdout", entries_to_json(t.holdout)}};
}

void from_json(const json& j, TaskSpec& t) {
  check_schema(j, "task");
  t.target_word = j.at("target_word").get<std::string>();
  t.corpus_root = j.at("corpus_root").get<std::string>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.train = entries_from_json(j.at("train"));
  t.validation = entries_from_json(j.at("validation"));
  t.test = entries_from_json(j.at("test"));
  t.holdout = entries_from_json(j.at("holdout"));
}

void save_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << doc.dump(1) << '\n';
}

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(Errc::format, path.string() + ": " + e.what());
  }
}

}  // namespace coolkws
