#include <spl/io.hpp>
#include <spl/report.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <ostream>
#include <thread>

namespace spl {

TaskInput file_task(std::string source_name, std::string source_path, std::string target_name,
                    std::string target_path) {
  TaskInput t;
  t.source_name = std::move(source_name);
  t.target_name = std::move(target_name);
  t.load = [src = std::move(source_path), tgt = std::move(target_path)] { return load_pair(src, tgt); };
  return t;
}

namespace {

TaskRecord blank_record(const TaskInput& task, std::string method) {
  TaskRecord r;
  r.source = task.source_name;
  r.target = task.target_name;
  r.method = std::move(method);
  return r;
}

TaskRecord spl_record(const TaskInput& task, const AdaptationResult<double>& result) {
  TaskRecord r = blank_record(task, "spl");
  r.config = result.config;
  r.ok = true;
  r.iterations = result.snapshots;
  r.final_accuracy = result.final_accuracy();
  r.warnings = result.warnings;
  return r;
}

std::vector<TaskRecord> execute(const TaskInput& task, BatchCommand command, const RunConfig& config) {
  const std::string method = command == BatchCommand::Baseline ? "1nn" : "spl";
  try {
    auto [src, tgt] = task.load();
    const ValidatedPair<double> pair = validate_pair(std::move(src), std::move(tgt));
    switch (command) {
      case BatchCommand::Adapt:
        return {spl_record(task, run(pair, config))};
      case BatchCommand::Ablate: {
        std::vector<TaskRecord> out;
        for (const auto& entry : run_ablation(pair, config)) out.push_back(spl_record(task, entry.result));
        return out;
      }
      case BatchCommand::Baseline: {
        TaskRecord r = blank_record(task, method);
        r.ok = true;
        r.final_accuracy = nn_baseline(pair).accuracy;
        return {r};
      }
    }
  } catch (const std::exception& e) {
    TaskRecord r = blank_record(task, method);
    if (command != BatchCommand::Baseline) r.config = config;
    r.error = e.what();
    return {r};
  }
  return {};
}

std::string averages_key(const TaskRecord& r) {
  std::string key = r.method;
  if (r.config) {
    key += "/";
    key += to_string(r.config->labeling);
    key += "/";
    key += to_string(r.config->selection);
  }
  return key;
}

nlohmann::json config_json(const RunConfig& c) {
  return {{"d1", c.d1},
          {"d2", c.d2},
          {"iterations", c.iterations},
          {"labeling", std::string(to_string(c.labeling))},
          {"selection", std::string(to_string(c.selection))},
          {"seed", c.seed}};
}

nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

const char* command_name(BatchCommand c) {
  switch (c) {
    case BatchCommand::Adapt: return "adapt";
    case BatchCommand::Ablate: return "ablate";
    case BatchCommand::Baseline: return "baseline-1nn";
  }
  return "?";
}

}  // namespace

bool BatchReport::all_ok() const {
  return std::all_of(tasks.begin(), tasks.end(), [](const TaskRecord& r) { return r.ok; });
}

std::vector<BatchAverage> BatchReport::averages() const {
  std::vector<std::string> keys;
  std::vector<BatchAverage> out;
  for (const auto& r : tasks) {
    const std::string key = averages_key(r);
    auto it = std::find(keys.begin(), keys.end(), key);
    if (it == keys.end()) {
      keys.push_back(key);
      BatchAverage a;
      a.method = r.method;
      if (r.config) {
        a.labeling = r.config->labeling;
        a.selection = r.config->selection;
      }
      out.push_back(a);
      it = keys.end() - 1;
    }
    if (!r.ok || !r.final_accuracy) continue;
    BatchAverage& a = out[static_cast<std::size_t>(it - keys.begin())];
    a.final_accuracy += *r.final_accuracy;
    ++a.tasks;
  }
  for (auto& a : out)
    if (a.tasks > 0) a.final_accuracy /= a.tasks;
  return out;
}

BatchReport run_batch(const std::vector<TaskInput>& tasks, BatchCommand command, const RunConfig& config,
                      const BatchOptions& options, std::ostream* warning_stream) {
  std::vector<std::vector<TaskRecord>> slots(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const auto start = std::chrono::steady_clock::now();
      slots[i] = execute(tasks[i], command, config);
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
      if (options.timing)
        for (auto& r : slots[i]) r.wall_time_s = elapsed.count();
    }
  };
  const auto jobs = static_cast<std::size_t>(std::max(1, options.jobs));
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < std::min(jobs, tasks.size()); ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  BatchReport report;
  report.command = command_name(command);
  for (auto& slot : slots) {
    for (auto& r : slot) {
      if (warning_stream != nullptr) {
        for (const auto& w : r.warnings) *warning_stream << "warning: " << r.source << "->" << r.target << ": " << w << "\n";
        if (!r.ok) *warning_stream << "error: " << r.source << "->" << r.target << ": " << r.error << "\n";
      }
      report.tasks.push_back(std::move(r));
    }
  }
  return report;
}

nlohmann::json to_json(const BatchReport& report) {
  nlohmann::json tasks = nlohmann::json::array();
  for (const auto& r : report.tasks) {
    nlohmann::json t;
    t["source"] = r.source;
    t["target"] = r.target;
    t["method"] = r.method;
    t["status"] = r.ok ? "ok" : "failed";
    if (!r.ok) t["error"] = r.error;
    t["config"] = r.config ? config_json(*r.config) : nlohmann::json(nullptr);
    nlohmann::json iters = nlohmann::json::array();
    for (const auto& s : r.iterations)
      iters.push_back({{"k", s.iteration}, {"selected", s.selected}, {"accuracy", optional_number(s.accuracy)}});
    t["iterations"] = std::move(iters);
    t["final_accuracy"] = optional_number(r.final_accuracy);
    if (r.wall_time_s) t["wall_time_s"] = *r.wall_time_s;
    t["warnings"] = r.warnings;
    tasks.push_back(std::move(t));
  }

  nlohmann::json averages = nlohmann::json::array();
  for (const auto& a : report.averages()) {
    nlohmann::json j;
    j["method"] = a.method;
    j["labeling"] = a.labeling ? nlohmann::json(std::string(to_string(*a.labeling))) : nlohmann::json(nullptr);
    j["selection"] = a.selection ? nlohmann::json(std::string(to_string(*a.selection))) : nlohmann::json(nullptr);
    j["final_accuracy"] = a.tasks > 0 ? nlohmann::json(a.final_accuracy) : nlohmann::json(nullptr);
    j["tasks"] = a.tasks;
    averages.push_back(std::move(j));
  }

  nlohmann::json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["command"] = report.command;
  doc["tasks"] = std::move(tasks);
  doc["averages"] = std::move(averages);
  return doc;
}

std::string report_string(const BatchReport& report) { return to_json(report).dump(2) + "\n"; }

void write_report(const std::string& path, const BatchReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write report " + path);
  out << report_string(report);
  if (!out) throw InputError("write failed for report " + path);
}

}  // namespace spl
