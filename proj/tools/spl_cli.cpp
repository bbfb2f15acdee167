// spl: command line front end for selective pseudo-labeling domain adaptation.
//
//   spl adapt --source a.txt --target b.txt --d1 128 --report out.json
//   spl adapt --domain A=amazon.txt --domain C=caltech.txt --all-pairs --d1 128
//   spl ablate ...          all labeling x selection combinations
//   spl baseline-1nn ...    nearest neighbour without adaptation
//   spl synth --shift 4 --out-source s.txt --out-target t.txt

#include <spl/io.hpp>
#include <spl/report.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace {

constexpr const char* kPresetHelp =
    "PCA dimensionality (required). Presets: office-caltech 128, office31 512, imageclef-da 128, office-home 1024";

struct TaskOptions {
  std::string source;
  std::string target;
  std::vector<std::string> domains;  // NAME=PATH
  std::vector<std::string> pairs;    // SRC:TGT
  bool all_pairs = false;
  std::string report;
  int jobs = 1;
  bool timing = false;
};

void add_task_options(CLI::App* cmd, TaskOptions& o) {
  cmd->add_option("--source", o.source, "Labeled source feature file");
  cmd->add_option("--target", o.target, "Target feature file (labels, if present, are used for scoring only)");
  cmd->add_option("--domain", o.domains, "Named domain NAME=PATH for batch runs (repeatable)");
  cmd->add_option("--task", o.pairs, "Batch task SRC:TGT over named domains (repeatable)");
  cmd->add_flag("--all-pairs", o.all_pairs, "Run every ordered pair of named domains");
  cmd->add_option("--report", o.report, "Write the JSON report here instead of stdout");
  cmd->add_option("--jobs", o.jobs, "Tasks run in parallel")->check(CLI::PositiveNumber);
  cmd->add_flag("--timing", o.timing, "Record per-task wall time in the report");
}

void add_run_options(CLI::App* cmd, spl::RunConfig& c, bool modes) {
  cmd->add_option("--d1", c.d1, kPresetHelp)->required()->check(CLI::PositiveNumber);
  cmd->add_option("--d2", c.d2, "SLPP dimensionality")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--iters", c.iterations, "Number of iterations T")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--seed", c.seed, "Seed echoed in the report")->capture_default_str();
  if (!modes) return;
  cmd->add_option_function<std::string>(
         "--labeling", [&c](const std::string& s) { c.labeling = spl::parse_labeling_mode(s); },
         "fused|ncp|sp (default fused)")
      ->check(CLI::IsMember({"fused", "ncp", "sp"}));
  cmd->add_option_function<std::string>(
         "--selection", [&c](const std::string& s) { c.selection = spl::parse_selection_mode(s); },
         "progressive|all|none (default progressive)")
      ->check(CLI::IsMember({"progressive", "all", "none"}));
}

std::string stem(const std::string& path) { return std::filesystem::path(path).stem().string(); }

std::vector<spl::TaskInput> build_tasks(const TaskOptions& o) {
  std::vector<spl::TaskInput> tasks;
  if (!o.source.empty() || !o.target.empty()) {
    if (o.source.empty() || o.target.empty()) throw CLI::ValidationError("--source and --target go together");
    tasks.push_back(spl::file_task(stem(o.source), o.source, stem(o.target), o.target));
  }

  std::vector<std::string> order;
  std::map<std::string, std::string> paths;
  for (const auto& d : o.domains) {
    const auto eq = d.find('=');
    if (eq == std::string::npos || eq == 0) throw CLI::ValidationError("--domain expects NAME=PATH, got " + d);
    const std::string name = d.substr(0, eq);
    if (paths.count(name)) throw CLI::ValidationError("duplicate domain " + name);
    paths[name] = d.substr(eq + 1);
    order.push_back(name);
  }
  auto path_of = [&](const std::string& name) {
    const auto it = paths.find(name);
    if (it == paths.end()) throw CLI::ValidationError("unknown domain " + name);
    return it->second;
  };
  for (const auto& p : o.pairs) {
    const auto colon = p.find(':');
    if (colon == std::string::npos) throw CLI::ValidationError("--task expects SRC:TGT, got " + p);
    const std::string s = p.substr(0, colon), t = p.substr(colon + 1);
    tasks.push_back(spl::file_task(s, path_of(s), t, path_of(t)));
  }
  if (o.all_pairs) {
    for (const auto& s : order)
      for (const auto& t : order)
        if (s != t) tasks.push_back(spl::file_task(s, paths[s], t, paths[t]));
  }
  if (tasks.empty()) throw CLI::ValidationError("no tasks: give --source/--target, --task or --all-pairs");
  return tasks;
}

int emit(const spl::BatchReport& report, const TaskOptions& o) {
  if (o.report.empty()) {
    std::cout << spl::report_string(report);
  } else {
    spl::write_report(o.report, report);
    for (const auto& r : report.tasks) {
      std::cout << r.source << "->" << r.target << " " << r.method;
      if (r.config && r.method == "spl")
        std::cout << " " << spl::to_string(r.config->labeling) << "/" << spl::to_string(r.config->selection);
      if (!r.ok) {
        std::cout << " FAILED\n";
        continue;
      }
      std::cout << " " << (r.final_accuracy ? spl::format_accuracy(*r.final_accuracy) : std::string("n/a")) << "\n";
    }
    for (const auto& a : report.averages()) {
      if (a.tasks == 0) continue;
      std::cout << "average " << a.method;
      if (a.labeling) std::cout << " " << spl::to_string(*a.labeling) << "/" << spl::to_string(*a.selection);
      std::cout << " " << spl::format_accuracy(a.final_accuracy) << " (" << a.tasks << " tasks)\n";
    }
  }
  return report.all_ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Selective pseudo-labeling for unsupervised domain adaptation"};
  app.require_subcommand(1);

  spl::RunConfig adapt_cfg, ablate_cfg;
  TaskOptions adapt_opts, ablate_opts, baseline_opts;

  auto* adapt = app.add_subcommand("adapt", "Adapt source to target and label the target samples");
  add_task_options(adapt, adapt_opts);
  add_run_options(adapt, adapt_cfg, true);

  auto* ablate = app.add_subcommand("ablate", "Run every labeling x selection combination");
  add_task_options(ablate, ablate_opts);
  add_run_options(ablate, ablate_cfg, false);

  auto* baseline = app.add_subcommand("baseline-1nn", "1-nearest-neighbour accuracy without adaptation");
  add_task_options(baseline, baseline_opts);

  spl::SyntheticSpec synth_spec;
  std::string out_source, out_target;
  auto* synth = app.add_subcommand("synth", "Write a synthetic shifted source/target pair");
  synth->add_option("--classes", synth_spec.classes)->capture_default_str()->check(CLI::Range(2, 1 << 20));
  synth->add_option("--per-class", synth_spec.per_class)->capture_default_str()->check(CLI::Range(2, 1 << 20));
  synth->add_option("--dim", synth_spec.dim)->capture_default_str()->check(CLI::Range(2, 1 << 20));
  synth->add_option("--shift", synth_spec.shift, "Target shift in units of sigma")->capture_default_str();
  synth->add_option("--separation", synth_spec.separation, "Class mean separation in units of sigma")
      ->capture_default_str();
  synth->add_option("--rotation", synth_spec.rotation_per_shift, "Target rotation (radians) per sigma of shift")
      ->capture_default_str();
  synth->add_option("--seed", synth_spec.seed)->capture_default_str();
  synth->add_option("--out-source", out_source)->required();
  synth->add_option("--out-target", out_target)->required();

  // Usage errors share exit code 2 with other fatal errors; 1 means a task failed.
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*synth) {
      const auto [src, tgt] = spl::gen_synthetic(synth_spec);
      auto widen = [](const spl::LabelVector& l) { return std::vector<long long>(l.begin(), l.end()); };
      spl::write_feature_file(out_source, src.features, widen(*src.labels));
      spl::write_feature_file(out_target, tgt.features, widen(*tgt.labels));
      return 0;
    }
    if (*adapt) {
      const auto tasks = build_tasks(adapt_opts);
      const auto report = spl::run_batch(tasks, spl::BatchCommand::Adapt, adapt_cfg,
                                         {adapt_opts.jobs, adapt_opts.timing}, &std::cerr);
      return emit(report, adapt_opts);
    }
    if (*ablate) {
      const auto tasks = build_tasks(ablate_opts);
      const auto report = spl::run_batch(tasks, spl::BatchCommand::Ablate, ablate_cfg,
                                         {ablate_opts.jobs, ablate_opts.timing}, &std::cerr);
      return emit(report, ablate_opts);
    }
    if (*baseline) {
      const auto tasks = build_tasks(baseline_opts);
      const auto report = spl::run_batch(tasks, spl::BatchCommand::Baseline, spl::RunConfig{},
                                         {baseline_opts.jobs, baseline_opts.timing}, &std::cerr);
      return emit(report, baseline_opts);
    }
  } catch (const CLI::Error& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
