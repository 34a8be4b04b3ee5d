#include "coolkws/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace coolkws {

std::vector<Segment> segments(const RunLog& log) {
  std::vector<Segment> out;
  std::vector<ScenarioMark> marks = log.scenarios;
  if (marks.empty()) marks.push_back({"all", 0});
  std::size_t r = 0;
  for (std::size_t m = 0; m < marks.size(); ++m) {
    Segment seg;
    seg.scenario = marks[m].name;
    seg.begin = r;
    const bool last = m + 1 == marks.size();
    while (r < log.records.size() &&
           (last || log.records[r].origin_sample < marks[m + 1].start_sample)) {
      seg.correct += log.records[r].correct ? 1 : 0;
      ++r;
    }
    seg.end = r;
    out.push_back(seg);
  }
  return out;
}

std::vector<ScenarioAccuracy> scenario_accuracy(const RunLog& log, std::vector<std::string>* warnings) {
  const std::string task = log.meta.value("task", "");
  std::vector<ScenarioAccuracy> out;
  for (const auto& seg : segments(log)) {
    if (seg.size() == 0) {
      if (warnings) warnings->push_back("scenario '" + seg.scenario + "' has no windows; excluded");
      continue;
    }
    out.push_back({seg.scenario, task, log.mode,
                   static_cast<double>(seg.correct) / static_cast<double>(seg.size()), seg.correct,
                   seg.size()});
  }
  return out;
}

std::vector<AggregateRow> aggregate(std::span<const ScenarioAccuracy> rows, StdKind kind) {
  std::vector<AggregateRow> out;
  std::vector<std::vector<double>> values;
  for (const auto& row : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const AggregateRow& a) {
      return a.scenario == row.scenario && a.mode == row.mode;
    });
    if (it == out.end()) {
      AggregateRow fresh;
      fresh.scenario = row.scenario;
      fresh.mode = row.mode;
      out.push_back(fresh);
      values.emplace_back();
      it = out.end() - 1;
    }
    values[static_cast<std::size_t>(it - out.begin())].push_back(row.accuracy);
  }
  for (std::size_t g = 0; g < out.size(); ++g) {
    const auto& v = values[g];
    const auto n = static_cast<double>(v.size());
    double sum = 0.0;
    for (double a : v) sum += a;
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double mean = *lo == *hi ? *lo : sum / n;
    double ss = 0.0;
    for (double a : v) ss += (a - mean) * (a - mean);
    out[g].mean = mean;
    out[g].tasks = v.size();
    if (v.size() == 1) {
      out[g].std = 0.0;
      out[g].note = "single task";
    } else {
      out[g].std = std::sqrt(ss / (kind == StdKind::population ? n : n - 1.0));
    }
  }
  return out;
}

std::string format_mean_std(double mean, double std, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << mean << "±" << std;
  return s.str();
}

std::string_view to_string(GainConvention c) noexcept {
  switch (c) {
    case GainConvention::relative_to_cool: return "relative_to_cool";
    case GainConvention::relative_to_base: return "relative_to_base";
    case GainConvention::percentage_points: return "percentage_points";
  }
  return "relative_to_cool";
}

GainConvention parse_gain_convention(std::string_view text) {
  if (text == "relative_to_cool") return GainConvention::relative_to_cool;
  if (text == "relative_to_base") return GainConvention::relative_to_base;
  if (text == "percentage_points") return GainConvention::percentage_points;
  throw Error(Errc::config, "unknown gain convention '" + std::string(text) + "'");
}

std::string describe(GainConvention c) {
  switch (c) {
    case GainConvention::relative_to_cool: return "gain = 100 * (cool - base) / cool";
    case GainConvention::relative_to_base: return "gain = 100 * (cool - base) / base";
    case GainConvention::percentage_points: return "gain = 100 * (cool - base)";
  }
  return "";
}

double relative_gain(double base_acc, double cool_acc, GainConvention convention) {
  switch (convention) {
    case GainConvention::relative_to_cool:
      if (!(cool_acc > 0.0)) throw Error(Errc::undefined_gain, "COOL accuracy is zero");
      return 100.0 * (cool_acc - base_acc) / cool_acc;
    case GainConvention::relative_to_base:
      if (!(base_acc > 0.0)) throw Error(Errc::undefined_gain, "base accuracy is zero");
      return 100.0 * (cool_acc - base_acc) / base_acc;
    case GainConvention::percentage_points:
      return 100.0 * (cool_acc - base_acc);
  }
  return 0.0;
}

std::vector<GainRow> sequential_gains(const RunLog& base_log, const RunLog& cool_log,
                                      GainConvention convention) {
  if (!(base_log.scenarios == cool_log.scenarios) || base_log.records.size() != cool_log.records.size()) {
    throw Error(Errc::incompatible_logs, "logs cover different streams");
  }
  for (std::size_t i = 0; i < base_log.records.size(); ++i) {
    if (base_log.records[i].origin_sample != cool_log.records[i].origin_sample ||
        base_log.records[i].label != cool_log.records[i].label) {
      throw Error(Errc::incompatible_logs, "window " + std::to_string(i) + " differs between logs");
    }
  }
  const auto base_segs = segments(base_log);
  const auto cool_segs = segments(cool_log);
  std::vector<GainRow> out;
  std::size_t base_pool = 0;
  std::size_t cool_pool = 0;
  for (std::size_t s = 0; s < base_segs.size(); ++s) {
    const auto& b = base_segs[s];
    const auto& c = cool_segs[s];
    base_pool += b.correct;
    cool_pool += c.correct;
    if (b.size() == 0) continue;
    GainRow row;
    row.scenario = b.scenario;
    row.base_isolated = static_cast<double>(b.correct) / static_cast<double>(b.size());
    row.cool_isolated = static_cast<double>(c.correct) / static_cast<double>(c.size());
    row.base_cumulative = static_cast<double>(base_pool) / static_cast<double>(b.end);
    row.cool_cumulative = static_cast<double>(cool_pool) / static_cast<double>(c.end);
    row.isolated_gain = relative_gain(row.base_isolated, row.cool_isolated, convention);
    row.cumulative_gain = relative_gain(row.base_cumulative, row.cool_cumulative, convention);
    out.push_back(row);
  }
  return out;
}

std::vector<GainRow> average_gains(std::span<const std::vector<GainRow>> per_task,
                                   GainConvention convention) {
  if (per_task.empty()) return {};
  const std::size_t rows = per_task.front().size();
  for (const auto& t : per_task) {
    if (t.size() != rows) throw Error(Errc::incompatible_logs, "tasks have different scenario rows");
  }
  std::vector<GainRow> out(rows);
  const auto n = static_cast<double>(per_task.size());
  for (std::size_t r = 0; r < rows; ++r) {
    GainRow& row = out[r];
    row.scenario = per_task.front()[r].scenario;
    for (const auto& t : per_task) {
      if (t[r].scenario != row.scenario) throw Error(Errc::incompatible_logs, "scenario order differs");
      row.base_isolated += t[r].base_isolated / n;
      row.cool_isolated += t[r].cool_isolated / n;
      row.base_cumulative += t[r].base_cumulative / n;
      row.cool_cumulative += t[r].cool_cumulative / n;
    }
    row.isolated_gain = relative_gain(row.base_isolated, row.cool_isolated, convention);
    row.cumulative_gain = relative_gain(row.base_cumulative, row.cool_cumulative, convention);
  }
  return out;
}

CumulativeCurve cumulative_curve(const RunLog& log) {
  if (log.records.empty()) throw Error(Errc::config, "empty run log");
  CumulativeCurve c;
  std::size_t correct = 0;
  for (std::size_t k = 0; k < log.records.size(); ++k) {
    correct += log.records[k].correct ? 1 : 0;
    c.accuracy.push_back(static_cast<double>(correct) / static_cast<double>(k + 1));
  }
  c.scenario.resize(log.records.size());
  for (const auto& seg : segments(log)) {
    for (std::size_t k = seg.begin; k < seg.end; ++k) c.scenario[k] = seg.scenario;
    c.marks.push_back({seg.scenario, static_cast<Eigen::Index>(seg.begin)});
  }
  return c;
}

CumulativeCurve average_curves(std::span<const CumulativeCurve> curves) {
  if (curves.empty()) throw Error(Errc::config, "no curves to average");
  CumulativeCurve out = curves.front();
  for (const auto& c : curves) {
    if (c.accuracy.size() != out.accuracy.size())
      throw Error(Errc::incompatible_logs, "curves differ in length");
  }
  for (std::size_t k = 0; k < out.accuracy.size(); ++k) {
    double sum = 0.0;
    for (const auto& c : curves) sum += c.accuracy[k];
    out.accuracy[k] = sum / static_cast<double>(curves.size());
  }
  return out;
}

void write_curve_csv(std::ostream& out, const CumulativeCurve& curve) {
  out << "step,cumulative_accuracy,scenario\n";
  out << std::setprecision(10);
  for (std::size_t k = 0; k < curve.accuracy.size(); ++k) {
    out << k << ',' << curve.accuracy[k] << ',' << curve.scenario[k] << '\n';
  }
}

EpochMetrics final_metrics(std::span<const EpochMetrics> history) {
  if (history.empty()) throw Error(Errc::config, "empty training history");
  return *std::min_element(history.begin(), history.end(),
                           [](const auto& a, const auto& b) { return a.val_loss < b.val_loss; });
}

namespace {

std::string fixed(double v, int digits = 2) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string pad(const std::string& s, std::size_t width) {
  // "±" is two bytes in UTF-8 but one column.
  std::size_t columns = 0;
  for (unsigned char ch : s) columns += (ch & 0xC0) != 0x80 ? 1 : 0;
  return s + std::string(width > columns ? width - columns : 0, ' ');
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

void write_table1(std::ostream& text, std::ostream& csv, std::span<const TaskHistory> tasks) {
  csv << "target_word,train_loss,val_loss,train_acc,val_acc\n";
  text << pad("Target word", 14) << pad("Train loss", 12) << pad("Val. loss", 12)
       << pad("Train acc.", 12) << "Val. acc.\n";
  for (const auto& t : tasks) {
    const EpochMetrics m = final_metrics(t.history);
    csv << t.task << ',' << m.train_loss << ',' << m.val_loss << ',' << m.train_acc << ','
        << m.val_acc << '\n';
    text << pad(t.task, 14) << pad(fixed(m.train_loss), 12) << pad(fixed(m.val_loss), 12)
         << pad(fixed(m.train_acc), 12) << fixed(m.val_acc) << '\n';
  }
}

void write_table2(std::ostream& text, std::ostream& csv, const Table2Input& input,
                  GainConvention convention, StdKind kind) {
  const auto base = aggregate(input.frozen, kind);
  const auto cool = aggregate(input.cool, kind);

  // Per-task mean across scenarios feeds the Average row.
  auto per_task_mean = [](std::span<const ScenarioAccuracy> rows) {
    std::map<std::string, std::vector<double>> by_task;
    for (const auto& r : rows) by_task[r.task].push_back(r.accuracy);
    std::vector<ScenarioAccuracy> out;
    for (const auto& [task, v] : by_task) out.push_back({"Average", task, rows.front().mode, mean_of(v), 0, 0});
    return out;
  };

  text << "# " << describe(convention) << "; "
       << (kind == StdKind::population ? "population" : "sample") << " std across tasks\n";
  text << pad("Scenario", 14) << pad("Base model", 14) << pad("COOL", 14) << "Δ%\n";
  csv << "scenario,base_mean,base_std,cool_mean,cool_std,gain_percent,tasks\n";
  auto emit = [&](const std::string& name, const AggregateRow& b, const AggregateRow& c) {
    const double gain = relative_gain(b.mean, c.mean, convention);
    text << pad(name, 14) << pad(format_mean_std(b.mean, b.std), 14)
         << pad(format_mean_std(c.mean, c.std), 14) << fixed(gain) << "%"
         << (c.note.empty() ? "" : "  (" + c.note + ")") << '\n';
    csv << name << ',' << b.mean << ',' << b.std << ',' << c.mean << ',' << c.std << ',' << gain
        << ',' << c.tasks << '\n';
  };
  for (const auto& b : base) {
    auto c = std::find_if(cool.begin(), cool.end(), [&](const auto& r) { return r.scenario == b.scenario; });
    if (c == cool.end()) continue;
    emit(b.scenario, b, *c);
  }
  if (!input.frozen.empty() && !input.cool.empty()) {
    const auto b_avg = per_task_mean(input.frozen);
    const auto c_avg = per_task_mean(input.cool);
    const auto b = aggregate(b_avg, kind);
    const auto c = aggregate(c_avg, kind);
    text << std::string(44, '-') << '\n';
    emit("Average", b.front(), c.front());
  }
}

void write_table3(std::ostream& text, std::ostream& csv, std::span<const GainRow> rows,
                  GainConvention convention) {
  text << "# " << describe(convention) << '\n';
  text << pad("Scenario", 14) << pad("Isolated gain", 16) << "Cumulative gain\n";
  csv << "scenario,isolated_gain,cumulative_gain,base_isolated,cool_isolated,base_cumulative,cool_cumulative\n";
  for (const auto& r : rows) {
    text << pad(r.scenario, 14) << pad(fixed(r.isolated_gain) + "%", 16) << fixed(r.cumulative_gain)
         << "%\n";
    csv << r.scenario << ',' << r.isolated_gain << ',' << r.cumulative_gain << ',' << r.base_isolated
        << ',' << r.cool_isolated << ',' << r.base_cumulative << ',' << r.cool_cumulative << '\n';
  }
}

}  // namespace coolkws
