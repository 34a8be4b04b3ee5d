#ifndef COOLKWS_REPORT_HPP
#define COOLKWS_REPORT_HPP

#include "coolkws/online.hpp"
#include "coolkws/trainer.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace coolkws {

/// A contiguous run of window records under one scenario mark.
struct Segment {
  std::string scenario;
  std::size_t begin = 0;  // record indices, half-open
  std::size_t end = 0;
  std::size_t correct = 0;

  std::size_t size() const noexcept { return end - begin; }
};

/// Splits the records by scenario mark (a record belongs to the last mark
/// starting at or before its origin). Empty segments are kept.
std::vector<Segment> segments(const RunLog& log);

struct ScenarioAccuracy {
  std::string scenario;
  std::string task;
  RunMode mode = RunMode::frozen;
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t window_count = 0;
};

/// Accuracy per scenario segment. Empty segments are dropped and reported
/// through `warnings` when given.
std::vector<ScenarioAccuracy> scenario_accuracy(const RunLog& log,
                                                std::vector<std::string>* warnings = nullptr);

enum class StdKind { population, sample };

struct AggregateRow {
  std::string scenario;
  RunMode mode = RunMode::frozen;
  double mean = 0.0;
  double std = 0.0;
  std::size_t tasks = 0;
  std::string note;
};

/// Mean and standard deviation across tasks for every (scenario, mode),
/// in order of first appearance.
std::vector<AggregateRow> aggregate(std::span<const ScenarioAccuracy> rows,
                                    StdKind kind = StdKind::population);

std::string format_mean_std(double mean, double std, int digits = 2);

enum class GainConvention { relative_to_cool, relative_to_base, percentage_points };

std::string_view to_string(GainConvention c) noexcept;
GainConvention parse_gain_convention(std::string_view text);
std::string describe(GainConvention c);

/// Gain of `cool_acc` over `base_acc` in percent. The default divides by the
/// COOL accuracy: 100 * (cool - base) / cool.
double relative_gain(double base_acc, double cool_acc,
                     GainConvention convention = GainConvention::relative_to_cool);

struct GainRow {
  std::string scenario;
  double isolated_gain = 0.0;
  double cumulative_gain = 0.0;
  double base_isolated = 0.0;
  double cool_isolated = 0.0;
  double base_cumulative = 0.0;
  double cool_cumulative = 0.0;
};

/// Per segment: gain over that segment alone and over everything from the
/// stream start through the segment's end.
std::vector<GainRow> sequential_gains(const RunLog& base_log, const RunLog& cool_log,
                                      GainConvention convention = GainConvention::relative_to_cool);

/// Averages the accuracies of per-task gain tables row by row, then
/// recomputes the gains from the averaged accuracies.
std::vector<GainRow> average_gains(std::span<const std::vector<GainRow>> per_task,
                                   GainConvention convention = GainConvention::relative_to_cool);

struct CumulativeCurve {
  std::vector<double> accuracy;          // point k: correct among the first k+1 windows / (k+1)
  std::vector<std::string> scenario;     // scenario of each point
  std::vector<ScenarioMark> marks;       // start indices are window indices here
};

CumulativeCurve cumulative_curve(const RunLog& log);

/// Pointwise mean of equally long curves.
CumulativeCurve average_curves(std::span<const CumulativeCurve> curves);

void write_curve_csv(std::ostream& out, const CumulativeCurve& curve);

struct TaskHistory {
  std::string task;
  std::vector<EpochMetrics> history;
};

/// Metrics of the epoch with the lowest validation loss (first on ties).
EpochMetrics final_metrics(std::span<const EpochMetrics> history);

struct Table2Input {
  std::vector<ScenarioAccuracy> frozen;
  std::vector<ScenarioAccuracy> cool;
};

void write_table1(std::ostream& text, std::ostream& csv, std::span<const TaskHistory> tasks);
void write_table2(std::ostream& text, std::ostream& csv, const Table2Input& input,
                  GainConvention convention, StdKind kind);
void write_table3(std::ostream& text, std::ostream& csv, std::span<const GainRow> rows,
                  GainConvention convention);

}  // namespace coolkws

#endif  // COOLKWS_REPORT_HPP
