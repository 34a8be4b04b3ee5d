// coolkws: command-line front end for the keyword-spotting pipeline.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 data error.

#include "coolkws/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

using namespace coolkws;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool force = false;
  std::string task;
  std::string words;
  std::string scenario;
  std::string mode;
};

ExperimentConfig resolve(const Flags& f) {
  ExperimentConfig cfg = load_config(f.config);
  if (!f.out.empty()) cfg.output_dir = f.out;
  if (f.seed) cfg.seed = *f.seed;
  return cfg;
}

std::vector<std::string> tasks_of(const Flags& f, const ExperimentConfig& cfg) {
  return f.task.empty() ? cfg.words : split_list(f.task);
}

std::vector<std::string> scenarios_of(const Flags& f) {
  return f.scenario.empty() || f.scenario == "all" ? all_stream_names() : split_list(f.scenario);
}

std::vector<RunMode> modes_of(const Flags& f, const ExperimentConfig& cfg) {
  if (f.mode.empty()) return cfg.modes;
  std::vector<RunMode> out;
  for (const auto& m : split_list(f.mode)) out.push_back(parse_mode(m));
  if (out.empty()) throw Error(Errc::config, "--mode lists no modes");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Keyword spotting with conditional online learning"};
  app.require_subcommand(1);
  Flags f;

  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", f.config, "Experiment config (JSON)")->required();
    cmd->add_option("--out", f.out, "Output directory (overrides the config)");
    cmd->add_option("--seed", f.seed, "Root seed (overrides the config)");
  };
  auto writes = [&](CLI::App* cmd) { cmd->add_flag("--force", f.force, "Overwrite existing outputs"); };

  auto* prepare = app.add_subcommand("prepare-data", "Index the corpus and write one task file per keyword");
  common(prepare);
  writes(prepare);
  prepare->add_option("--words", f.words, "Comma-separated keywords (default: config words)");

  auto* train = app.add_subcommand("pretrain", "Train the base model of each task");
  common(train);
  writes(train);
  train->add_option("--task", f.task, "Comma-separated keywords (default: all)");

  auto* stream = app.add_subcommand("build-stream", "Build the labeled test streams");
  common(stream);
  writes(stream);
  stream->add_option("--task", f.task, "Comma-separated keywords (default: all)");
  stream->add_option("--scenario", f.scenario,
                     "Clean, BabyCrying, GlassBreak, GunShot, Sequential or all (comma-separated)");

  auto* run = app.add_subcommand("run", "Run the frozen, naive and COOL learners over the streams");
  common(run);
  writes(run);
  run->add_option("--task", f.task, "Comma-separated keywords (default: all)");
  run->add_option("--scenario", f.scenario, "Streams to run (default: all)");
  run->add_option("--mode", f.mode, "Comma-separated subset of frozen,naive,cool");

  auto* report = app.add_subcommand("report", "Write tables and cumulative accuracy curves");
  common(report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    const ExperimentConfig cfg = resolve(f);
    PipelineOptions opt;
    opt.force = f.force;
    opt.log = &std::cerr;
    if (*prepare) {
      prepare_data(cfg, f.words.empty() ? cfg.words : split_list(f.words), opt);
    } else if (*train) {
      pretrain_tasks(cfg, tasks_of(f, cfg), opt);
    } else if (*stream) {
      build_streams(cfg, tasks_of(f, cfg), scenarios_of(f), opt);
    } else if (*run) {
      run_streams(cfg, tasks_of(f, cfg), scenarios_of(f), modes_of(f, cfg), opt);
    } else if (*report) {
      write_report(cfg, opt);
    }
  } catch (const Error& e) {
    std::cerr << "coolkws: " << e.what() << '\n';
    return is_config_error(e.code()) ? kExitUsage : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "coolkws: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
