#pragma once

// Batch execution of adaptation tasks and the JSON report they produce.

#include <spl/data_model.hpp>
#include <spl/pipeline.hpp>

#include <json.hpp>

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace spl {

inline constexpr int kReportSchemaVersion = 1;

/// One source -> target task. `load` is called on a worker thread.
struct TaskInput {
  std::string source_name;
  std::string target_name;
  std::function<std::pair<DomainDataset<double>, DomainDataset<double>>()> load;
};

/// File-backed task.
TaskInput file_task(std::string source_name, std::string source_path, std::string target_name,
                    std::string target_path);

enum class BatchCommand { Adapt, Ablate, Baseline };

struct BatchOptions {
  int jobs = 1;
  bool timing = false;  // wall time makes reports non-reproducible
};

struct TaskRecord {
  std::string source;
  std::string target;
  std::string method;  // "spl" or "1nn"
  std::optional<RunConfig> config;
  bool ok = false;
  std::string error;
  std::vector<IterationSnapshot> iterations;
  std::optional<double> final_accuracy;
  std::optional<double> wall_time_s;
  std::vector<std::string> warnings;
};

struct BatchAverage {
  std::string method;
  std::optional<LabelingMode> labeling;
  std::optional<SelectionMode> selection;
  double final_accuracy = 0;
  int tasks = 0;
};

struct BatchReport {
  std::string command;
  std::vector<TaskRecord> tasks;

  bool all_ok() const;
  /// Arithmetic mean of final accuracies per (method, labeling, selection),
  /// over successful tasks that were scored. Ordered by first appearance.
  std::vector<BatchAverage> averages() const;
};

/// Runs every task, up to `options.jobs` at a time. A failing task yields a
/// failed record and does not stop the others. Records keep input order;
/// ablation emits nine records per task. Warnings are mirrored to
/// `warning_stream` when given.
BatchReport run_batch(const std::vector<TaskInput>& tasks, BatchCommand command, const RunConfig& config,
                      const BatchOptions& options = {}, std::ostream* warning_stream = nullptr);

nlohmann::json to_json(const BatchReport& report);

/// Pretty-printed JSON with a trailing newline.
std::string report_string(const BatchReport& report);

void write_report(const std::string& path, const BatchReport& report);

}  // namespace spl
