#include "coolkws/pipeline.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace coolkws {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void say(const PipelineOptions& opt, const std::string& msg) {
  if (opt.log) *opt.log << msg << '\n';
}

void guard_overwrite(const std::vector<fs::path>& outputs, const PipelineOptions& opt) {
  if (opt.force) return;
  for (const auto& p : outputs) {
    if (fs::exists(p)) throw Error(Errc::config, p.string() + " already exists; pass --force to overwrite");
  }
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

TaskSpec load_task(const OutputLayout& out, const std::string& word) {
  const auto path = out.task(word);
  if (!fs::exists(path)) {
    throw Error(Errc::config, "no task file for '" + word + "' at " + path.string() + "; run prepare-data first");
  }
  const json doc = load_json(path);
  try {
    return doc.get<TaskSpec>();
  } catch (const json::exception& e) {
    throw Error(Errc::format, path.string() + ": " + e.what());
  }
}

ModelParams<float> load_model(const OutputLayout& out, const std::string& word) {
  const auto path = out.checkpoint(word);
  if (!fs::exists(path)) {
    throw Error(Errc::config, "no checkpoint for '" + word + "' at " + path.string() + "; run pretrain first");
  }
  return load_checkpoint(path);
}

bool is_known_stream(const std::string& name) {
  const auto names = all_stream_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

/// One scenario stream, built from the task's test clips.
class StreamFactory {
 public:
  StreamFactory(const ExperimentConfig& cfg, const TaskSpec& task) : cfg_(cfg), task_(task) {
    for (auto& c : load_task_clips(task, task.test)) {
      StreamClip sc;
      sc.extent = detect_word_extent(c.clip.samples);
      sc.clip = std::move(c.clip);
      sc.label = c.label;
      clips_.push_back(std::move(sc));
    }
    if (clips_.empty()) throw Error(Errc::config, "task '" + task.target_word + "' has no test clips");
  }

  const LabeledStream& get(const std::string& scenario, const PipelineOptions& opt) {
    if (auto it = cache_.find(scenario); it != cache_.end()) return it->second;
    LabeledStream s;
    if (scenario == kSequential) {
      std::vector<std::pair<std::string, LabeledStream>> parts;
      for (const auto& name : sequential_order()) parts.emplace_back(name, get(name, opt));
      s = build_sequential_stream(parts);
    } else if (scenario == "Clean") {
      s = concat_with_labels(clips_, cfg_.stream, "Clean");
    } else {
      const auto src = cfg_.noise.find(scenario);
      if (src == cfg_.noise.end()) {
        throw Error(Errc::config, "no noise source configured for scenario '" + scenario + "'");
      }
      const AudioClip noise = load_noise(src->second);
      const auto seed = module_seed(cfg_.seed, "noise", task_.target_word + "/" + scenario);
      auto mixed = mix_noise(concat_with_labels(clips_, cfg_.stream, scenario), noise, cfg_.stream.snr_db, seed);
      if (mixed.clipped > 0) {
        say(opt, "warning: " + task_.target_word + "/" + scenario + ": " + std::to_string(mixed.clipped) +
                     " samples clipped after mixing");
      }
      s = std::move(mixed.stream);
    }
    return cache_.emplace(scenario, std::move(s)).first->second;
  }

 private:
  const ExperimentConfig& cfg_;
  const TaskSpec& task_;
  std::vector<StreamClip> clips_;
  std::map<std::string, LabeledStream> cache_;
};

void write_text(const fs::path& path, const std::string& content) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << content;
}

}  // namespace

std::vector<std::string> all_stream_names() {
  std::vector<std::string> names{"Clean"};
  for (const auto& n : noise_scenarios()) names.push_back(n);
  names.emplace_back(kSequential);
  return names;
}

void prepare_data(const ExperimentConfig& cfg, const std::vector<std::string>& words,
                  const PipelineOptions& opt) {
  const OutputLayout out{cfg.output_dir};
  std::vector<fs::path> outputs{out.manifest()};
  for (const auto& w : words) outputs.push_back(out.task(w));
  guard_overwrite(outputs, opt);

  if (cfg.gsc_root.empty()) throw Error(Errc::config, "corpus.gsc_root is not set (or set COOLKWS_DATA)");
  auto list_or_none = [](const fs::path& p, bool explicit_path) -> fs::path {
    if (fs::exists(p)) return p;
    if (explicit_path) throw Error(Errc::corpus_not_found, "list file " + p.string() + " not found");
    return {};
  };
  const fs::path val = list_or_none(cfg.validation_list_path(), !cfg.validation_list.empty());
  const fs::path test = list_or_none(cfg.test_list_path(), !cfg.test_list.empty());

  const Manifest manifest = ingest_corpus(cfg.gsc_root, val, test);
  say(opt, "manifest: " + std::to_string(manifest.entries.size()) + " clips");
  std::vector<TaskSpec> tasks;
  for (const auto& w : words) {
    tasks.push_back(build_task(manifest, w, cfg.holdout_size, module_seed(cfg.seed, "task", w)));
  }
  ensure_parent(out.manifest());
  save_json(out.manifest(), manifest);
  for (const auto& t : tasks) {
    ensure_parent(out.task(t.target_word));
    save_json(out.task(t.target_word), t);
    say(opt, "task " + t.target_word + ": " + std::to_string(t.train.size()) + " train, " +
                 std::to_string(t.validation.size()) + " validation, " + std::to_string(t.test.size()) +
                 " test, " + std::to_string(t.holdout.size()) + " hold-out");
  }
}

void pretrain_tasks(const ExperimentConfig& cfg, const std::vector<std::string>& words,
                    const PipelineOptions& opt) {
  const OutputLayout out{cfg.output_dir};
  for (const auto& w : words) guard_overwrite({out.checkpoint(w), out.history(w)}, opt);
  for (const auto& w : words) {
    const TaskSpec task = load_task(out, w);
    TrainConfig train = cfg.train;
    train.seed = module_seed(cfg.seed, "train", w);
    const TrainResult r = pretrain(task, cfg.dsp, train, cfg.model);
    ensure_parent(out.checkpoint(w));
    save_checkpoint(r.params, out.checkpoint(w));
    write_history_csv(out.history(w), r.history);
    const auto& best = r.history.at(static_cast<std::size_t>(r.best_epoch - 1));
    std::ostringstream msg;
    msg << "pretrain " << w << ": " << r.history.size() << " epochs, best epoch " << r.best_epoch
        << " (val loss " << best.val_loss << ", val acc " << best.val_acc << ")";
    say(opt, msg.str());
  }
}

void build_streams(const ExperimentConfig& cfg, const std::vector<std::string>& words,
                   const std::vector<std::string>& scenarios, const PipelineOptions& opt) {
  const OutputLayout out{cfg.output_dir};
  for (const auto& s : scenarios) {
    if (!is_known_stream(s)) throw Error(Errc::config, "unknown scenario '" + s + "'");
  }
  for (const auto& w : words) {
    for (const auto& s : scenarios) guard_overwrite({out.stream_wav(w, s), out.stream_json(w, s)}, opt);
  }
  for (const auto& w : words) {
    const TaskSpec task = load_task(out, w);
    StreamFactory factory(cfg, task);
    for (const auto& s : scenarios) {
      const LabeledStream& stream = factory.get(s, opt);
      ensure_parent(out.stream_wav(w, s));
      save_stream(stream, cfg.stream, out.stream_wav(w, s), out.stream_json(w, s));
      say(opt, "stream " + w + "/" + s + ": " + std::to_string(stream.windows.size()) + " windows");
    }
  }
}

std::vector<LabeledWindow> holdout_windows(const TaskSpec& task, const DspConfig& dsp) {
  std::vector<LabeledWindow> out;
  for (const auto& c : load_task_clips(task, task.holdout)) {
    out.push_back({mfcc_window(c.clip.samples, dsp), c.label});
  }
  return out;
}

void run_streams(const ExperimentConfig& cfg, const std::vector<std::string>& words,
                 const std::vector<std::string>& scenarios, const std::vector<RunMode>& modes,
                 const PipelineOptions& opt) {
  const OutputLayout out{cfg.output_dir};
  for (const auto& s : scenarios) {
    if (!is_known_stream(s)) throw Error(Errc::config, "unknown scenario '" + s + "'");
  }
  for (const auto& w : words) {
    for (const auto& s : scenarios) {
      for (auto m : modes) guard_overwrite({out.run_log(w, s, m)}, opt);
    }
  }
  const bool need_holdout = std::find(modes.begin(), modes.end(), RunMode::cool) != modes.end();
  for (const auto& w : words) {
    const ModelParams<float> m0 = load_model(out, w);
    const auto crc = crc32_of(serialize_checkpoint(m0));
    const TaskSpec task = load_task(out, w);
    std::vector<LabeledWindow> holdout;
    if (need_holdout) {
      holdout = holdout_windows(task, cfg.dsp);
      if (holdout.empty()) throw Error(Errc::config, "mode cool needs a hold-out set but task '" + w + "' has none");
    }
    for (const auto& s : scenarios) {
      if (!fs::exists(out.stream_json(w, s))) {
        throw Error(Errc::config, "no stream " + out.stream_json(w, s).string() + "; run build-stream first");
      }
      const LabeledStream stream = load_stream(out.stream_wav(w, s), out.stream_json(w, s));
      const auto features = stream_features(stream, cfg.dsp);
      for (auto m : modes) {
        auto r = run_windows(m0, holdout, features, stream.scenarios, m, cfg.online);
        r.log.meta = {{"task", w},
                      {"scenario", s},
                      {"checkpoint_crc32", crc},
                      {"online", cfg.online},
                      {"seed", cfg.seed}};
        ensure_parent(out.run_log(w, s, m));
        save_runlog(r.log, out.run_log(w, s, m));
        std::size_t correct = 0, consolidated = 0;
        for (const auto& rec : r.log.records) correct += rec.correct ? 1 : 0;
        for (const auto& d : r.log.decisions) consolidated += d.consolidated ? 1 : 0;
        std::ostringstream msg;
        msg << "run " << w << "/" << s << "/" << to_string(m) << ": accuracy "
            << static_cast<double>(correct) / static_cast<double>(r.log.records.size());
        if (m != RunMode::frozen) msg << ", " << consolidated << "/" << r.log.decisions.size() << " updates kept";
        say(opt, msg.str());
      }
    }
  }
}

void write_report(const ExperimentConfig& cfg, const PipelineOptions& opt) {
  const OutputLayout out{cfg.output_dir};
  const fs::path dir = out.report_dir();
  bool anything = false;

  std::vector<TaskHistory> histories;
  for (const auto& w : cfg.words) {
    if (fs::exists(out.history(w))) histories.push_back({w, read_history_csv(out.history(w))});
  }
  if (!histories.empty()) {
    std::ostringstream text, csv;
    write_table1(text, csv, histories);
    write_text(dir / "table1.txt", text.str());
    write_text(dir / "table1.csv", csv.str());
    anything = true;
  }

  std::vector<std::string> warnings;
  Table2Input t2;
  std::vector<std::string> isolated{"Clean"};
  for (const auto& n : noise_scenarios()) isolated.push_back(n);
  for (const auto& s : isolated) {
    for (const auto& w : cfg.words) {
      const auto base = out.run_log(w, s, RunMode::frozen);
      const auto cool = out.run_log(w, s, RunMode::cool);
      if (!fs::exists(base) || !fs::exists(cool)) continue;
      for (auto& a : scenario_accuracy(load_runlog(base), &warnings)) t2.frozen.push_back(std::move(a));
      for (auto& a : scenario_accuracy(load_runlog(cool), &warnings)) t2.cool.push_back(std::move(a));
    }
  }
  if (!t2.frozen.empty()) {
    std::ostringstream text, csv;
    write_table2(text, csv, t2, cfg.gain, cfg.std_kind);
    write_text(dir / "table2.txt", text.str());
    write_text(dir / "table2.csv", csv.str());
    anything = true;
  }

  std::vector<std::vector<GainRow>> per_task;
  std::map<RunMode, std::vector<CumulativeCurve>> curves;
  for (const auto& w : cfg.words) {
    std::map<RunMode, RunLog> logs;
    for (auto m : {RunMode::frozen, RunMode::naive, RunMode::cool}) {
      const auto p = out.run_log(w, kSequential, m);
      if (!fs::exists(p)) continue;
      logs[m] = load_runlog(p);
      const auto curve = cumulative_curve(logs[m]);
      std::ostringstream csv;
      write_curve_csv(csv, curve);
      write_text(dir / "curves" / (w + "_" + std::string(to_string(m)) + ".csv"), csv.str());
      curves[m].push_back(curve);
      anything = true;
    }
    if (logs.count(RunMode::frozen) && logs.count(RunMode::cool)) {
      per_task.push_back(sequential_gains(logs[RunMode::frozen], logs[RunMode::cool], cfg.gain));
    }
  }
  if (!per_task.empty()) {
    const auto rows = average_gains(per_task, cfg.gain);
    std::ostringstream text, csv;
    write_table3(text, csv, rows, cfg.gain);
    write_text(dir / "table3.txt", text.str());
    write_text(dir / "table3.csv", csv.str());
  }
  for (auto& [mode, list] : curves) {
    // Streams differ in length across tasks; average over the common prefix.
    std::size_t shortest = list.front().accuracy.size();
    for (const auto& c : list) shortest = std::min(shortest, c.accuracy.size());
    for (auto& c : list) {
      c.accuracy.resize(shortest);
      c.scenario.resize(shortest);
    }
    std::ostringstream csv;
    write_curve_csv(csv, average_curves(list));
    write_text(dir / "curves" / ("average_" + std::string(to_string(mode)) + ".csv"), csv.str());
  }

  for (const auto& w : warnings) say(opt, "warning: " + w);
  if (!anything) {
    throw Error(Errc::config, "nothing to report under " + out.root.string() + "; run pretrain and run first");
  }
  say(opt, "report written to " + dir.string());
}

}  // namespace coolkws
