#include "coolkws/online.hpp"

#include <fstream>

namespace coolkws {
using nlohmann::json;

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or_nan(const json& v) {
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

}  // namespace

void save_runlog(const RunLog& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  json marks = json::array();
  for (const auto& m : log.scenarios) marks.push_back({{"name", m.name}, {"start_sample", m.start_sample}});
  const json header = {{"type", "header"},
                       {"schema_version", kSchemaVersion},
                       {"mode", to_string(log.mode)},
                       {"holdout_baseline", number_or_null(log.holdout_baseline)},
                       {"windows", log.records.size()},
                       {"scenarios", std::move(marks)},
                       {"warnings", log.warnings},
                       {"meta", log.meta}};
  out << header.dump() << '\n';
  for (const auto& r : log.records) {
    out << json{{"type", "window"},    {"index", r.index},         {"origin_sample", r.origin_sample},
                {"label", r.label},    {"predicted", r.predicted}, {"correct", r.correct},
                {"skipped", r.skipped}}.dump()
        << '\n';
  }
  for (const auto& d : log.decisions) {
    out << json{{"type", "decision"},
                {"step_index", d.step_index},
                {"window_index", d.window_index},
                {"attempted", d.attempted},
                {"consolidated", d.consolidated},
                {"l", number_or_null(d.l)},
                {"l_prime", number_or_null(d.l_prime)},
                {"l_v_prime", number_or_null(d.l_v_prime)},
                {"reason", to_string(d.reason)}}.dump()
        << '\n';
  }
  if (!out) throw Error(Errc::io, "short write to " + path.string());
}

RunLog load_runlog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  RunLog log;
  std::string line;
  bool have_header = false;
  std::size_t declared = 0;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(Errc::format, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    const std::string type = j.value("type", "");
    if (type == "header") {
      if (j.value("schema_version", 0) != kSchemaVersion)
        throw Error(Errc::format, path.string() + ": unsupported run log schema");
      log.mode = parse_mode(j.at("mode").get<std::string>());
      log.holdout_baseline = number_or_nan(j.at("holdout_baseline"));
      declared = j.at("windows").get<std::size_t>();
      for (const auto& m : j.at("scenarios")) {
        log.scenarios.push_back({m.at("name").get<std::string>(), m.at("start_sample").get<Eigen::Index>()});
      }
      log.warnings = j.value("warnings", std::vector<std::string>{});
      log.meta = j.value("meta", json::object());
      have_header = true;
    } else if (!have_header) {
      throw Error(Errc::format, path.string() + ": run log must start with a header line");
    } else if (type == "window") {
      WindowRecord r;
      r.index = j.at("index").get<std::size_t>();
      r.origin_sample = j.at("origin_sample").get<Eigen::Index>();
      r.label = j.at("label").get<int>();
      r.predicted = j.at("predicted").get<int>();
      r.correct = j.at("correct").get<bool>();
      r.skipped = j.value("skipped", false);
      log.records.push_back(r);
    } else if (type == "decision") {
      StepDecision d;
      d.step_index = j.at("step_index").get<std::size_t>();
      d.window_index = j.at("window_index").get<std::size_t>();
      d.attempted = j.at("attempted").get<bool>();
      d.consolidated = j.at("consolidated").get<bool>();
      d.l = number_or_nan(j.at("l"));
      d.l_prime = number_or_nan(j.at("l_prime"));
      d.l_v_prime = number_or_nan(j.at("l_v_prime"));
      d.reason = parse_reason(j.at("reason").get<std::string>());
      log.decisions.push_back(d);
    } else {
      throw Error(Errc::format, path.string() + ":" + std::to_string(line_no) + ": unknown record type");
    }
  }
  if (!have_header) throw Error(Errc::format, path.string() + ": empty run log");
  if (log.records.size() != declared) throw Error(Errc::format, path.string() + ": truncated run log");
  return log;
}

}  // namespace coolkws
