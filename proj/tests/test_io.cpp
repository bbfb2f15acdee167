#include <spl/io.hpp>
#include <spl/pipeline.hpp>
#include <spl/report.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <locale>
#include <random>
#include <sstream>

#include <unistd.h>

namespace spl {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("spl_io_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }

  std::string file(const std::string& name, const std::string& contents = {}) const {
    const auto p = (path_ / name).string();
    if (!contents.empty()) std::ofstream(p, std::ios::binary) << contents;
    return p;
  }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int parse_error_line(const std::string& path) {
  try {
    read_feature_file(path);
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

TEST(FeatureFile, ReadsSmallLabeledFile) {
  TempDir dir;
  const auto f = read_feature_file(dir.file("a.txt", "# d=3 n=2 labeled=1\n0 1.0 2.0 3.0\n\n1 4 5 6e0\n"));
  ASSERT_EQ(f.features.rows(), 3);
  ASSERT_EQ(f.features.cols(), 2);
  EXPECT_EQ(f.features(2, 0), 3.0);
  EXPECT_EQ(f.features(0, 1), 4.0);
  ASSERT_TRUE(f.labels.has_value());
  EXPECT_EQ(*f.labels, (std::vector<long long>{0, 1}));
}

TEST(FeatureFile, UnlabeledFileUsesMinusOne) {
  TempDir dir;
  const auto f = read_feature_file(dir.file("u.txt", "# d=2 n=1 labeled=0\n-1 0.5 -0.5\n"));
  EXPECT_FALSE(f.labels.has_value());
  EXPECT_EQ(parse_error_line(dir.file("v.txt", "# d=2 n=1 labeled=0\n3 0.5 -0.5\n")), 2);
}

TEST(FeatureFile, ErrorsCarryLineNumbers) {
  TempDir dir;
  EXPECT_EQ(parse_error_line(dir.file("short.txt", "# d=3 n=2 labeled=1\n0 1 2 3\n1 4 5\n")), 3);
  EXPECT_EQ(parse_error_line(dir.file("nan.txt", "# d=2 n=1 labeled=1\n0 1 abc\n")), 2);
  EXPECT_EQ(parse_error_line(dir.file("inf.txt", "# d=2 n=1 labeled=1\n0 1 inf\n")), 2);
  EXPECT_EQ(parse_error_line(dir.file("dup.txt", "# d=2 n=1 labeled=1\n# d=2 n=1 labeled=1\n0 1 2\n")), 2);
  EXPECT_EQ(parse_error_line(dir.file("early.txt", "0 1 2\n# d=2 n=1 labeled=1\n")), 1);
  EXPECT_EQ(parse_error_line(dir.file("label.txt", "# d=1 n=1 labeled=1\n1.5 2\n")), 2);
  EXPECT_EQ(parse_error_line(dir.file("count.txt", "# d=1 n=3 labeled=1\n0 1\n1 2\n")), 3);
  EXPECT_EQ(parse_error_line(dir.file("hdr.txt", "# d=x n=1 labeled=1\n0 1\n")), 1);
  EXPECT_THROW(read_feature_file(dir.file("missing.txt")), ParseError);
  try {
    read_feature_file(dir.file("short2.txt", "# d=3 n=1 labeled=1\n0 1 2\n"));
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("short2.txt:2"), std::string::npos) << e.what();
  }
}

TEST(FeatureFile, RoundTripIsExact) {
  TempDir dir;
  std::mt19937_64 rng(91);
  std::normal_distribution<double> g(0.0, 1e3);
  Matrix<double> x(7, 13);
  for (Index j = 0; j < 13; ++j)
    for (Index i = 0; i < 7; ++i) x(i, j) = g(rng) * std::pow(10.0, static_cast<double>(i) - 3);
  std::vector<long long> labels;
  for (int i = 0; i < 13; ++i) labels.push_back(100 + i % 4);
  const auto path = dir.file("rt.txt");
  write_feature_file(path, x, labels);
  const auto back = read_feature_file(path);
  EXPECT_EQ(back.features, x);
  EXPECT_EQ(*back.labels, labels);
}

TEST(Labels, DictionaryFollowsSourceLabelSpace) {
  const LabelDictionary dict({10, 3, 7, 3});
  EXPECT_EQ(dict.size(), 3);
  EXPECT_EQ(dict.encode(3), 0);
  EXPECT_EQ(dict.encode(10), 2);
  EXPECT_EQ(dict.decode(1), 7);
  EXPECT_THROW(dict.encode(4), InputError);

  TempDir dir;
  const auto src = dir.file("s.txt", "# d=1 n=2 labeled=1\n5 0.1\n9 0.2\n");
  const auto [s, t] = load_pair(src, dir.file("t.txt", "# d=1 n=2 labeled=1\n9 0.3\n5 0.4\n"));
  EXPECT_EQ(*s.labels, (LabelVector{0, 1}));
  EXPECT_EQ(*t.labels, (LabelVector{1, 0}));
  EXPECT_THROW(load_pair(src, dir.file("bad.txt", "# d=1 n=1 labeled=1\n6 0.3\n")), InputError);
}

TEST(Synthetic, SameSeedSameBytes) {
  TempDir dir;
  SyntheticSpec spec;
  spec.shift = 3;
  spec.seed = 5;
  auto write = [&](const SyntheticSpec& s, const std::string& name) {
    const auto [src, tgt] = gen_synthetic(s);
    std::vector<long long> raw(src.labels->begin(), src.labels->end());
    write_feature_file(dir.file(name), src.features, raw);
    return slurp(dir.file(name));
  };
  EXPECT_EQ(write(spec, "a.txt"), write(spec, "b.txt"));
  SyntheticSpec other = spec;
  other.seed = 6;
  EXPECT_NE(write(spec, "a.txt"), write(other, "c.txt"));
}

TEST(Synthetic, ShiftMovesTheTargetByTheRequestedAmount) {
  for (double shift : {0.0, 4.0}) {
    SyntheticSpec spec;
    spec.shift = shift;
    spec.seed = 17;
    const auto [src, tgt] = gen_synthetic(spec);
    EXPECT_EQ(src.size(), 200);
    const double moved = (tgt.features.rowwise().mean() - src.features.rowwise().mean()).norm();
    EXPECT_NEAR(moved, shift, 1.0);
    if (shift != 0.0) continue;
    // Unshifted class means agree up to sampling noise.
    for (Index c = 0; c < spec.classes; ++c) {
      const Vector<double> ms = src.features.middleCols(c * 40, 40).rowwise().mean();
      const Vector<double> mt = tgt.features.middleCols(c * 40, 40).rowwise().mean();
      EXPECT_LE((ms - mt).norm(), 2.0);
    }
  }
}

TEST(Synthetic, LargeShiftHurtsOneNearestNeighbour) {
  auto accuracy = [](double shift) {
    SyntheticSpec spec;
    spec.shift = shift;
    spec.separation = 10;
    spec.seed = 23;
    auto [src, tgt] = gen_synthetic(spec);
    return *nn_baseline(validate_pair(std::move(src), std::move(tgt))).accuracy;
  };
  const double unshifted = accuracy(0.0), shifted = accuracy(10.0);
  EXPECT_LT(shifted, unshifted) << shifted << " vs " << unshifted;
}

TEST(Evaluate, Examples) {
  EXPECT_DOUBLE_EQ(evaluate({0, 1, 2}, {0, 1, 2}), 100.0);
  EXPECT_DOUBLE_EQ(evaluate({0, 1, 0, 1}, {0, 1, 1, 0}), 50.0);
  EXPECT_DOUBLE_EQ(evaluate({0, 0, 0, 0, 0, 1, 1, 1, 1, 1}, LabelVector(10, 0)), 50.0);
  EXPECT_THROW(evaluate({0}, {0, 1}), InputError);
  EXPECT_EQ(format_accuracy(93.04), "93.0");
  EXPECT_EQ(format_accuracy(100.0), "100.0");
}

TEST(Evaluate, RandomGuessingOverTwelveClasses) {
  std::mt19937_64 rng(92);
  std::uniform_int_distribution<int> cls(0, 11);
  LabelVector pred(12000), truth(12000);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred[i] = cls(rng);
    truth[i] = cls(rng);
  }
  EXPECT_NEAR(evaluate(pred, truth), 100.0 / 12.0, 1.0);
}

std::vector<TaskInput> synthetic_tasks() {
  std::vector<TaskInput> tasks;
  for (std::uint64_t seed : {1, 2}) {
    TaskInput t;
    t.source_name = "syn" + std::to_string(seed) + "s";
    t.target_name = "syn" + std::to_string(seed) + "t";
    t.load = [seed] {
      SyntheticSpec spec;
      spec.shift = 4;
      spec.separation = 6;
      spec.seed = seed;
      return gen_synthetic(spec);
    };
    tasks.push_back(t);
  }
  TaskInput broken;
  broken.source_name = "missing";
  broken.target_name = "nowhere";
  broken.load = [] { return load_pair("/nonexistent/a.txt", "/nonexistent/b.txt"); };
  tasks.insert(tasks.begin() + 1, broken);
  return tasks;
}

RunConfig batch_config() {
  RunConfig cfg;
  cfg.d1 = 20;
  cfg.d2 = 20;
  cfg.iterations = 4;
  return cfg;
}

TEST(Report, FailedTaskIsIsolated) {
  std::ostringstream log;
  const auto report = run_batch(synthetic_tasks(), BatchCommand::Adapt, batch_config(), {}, &log);
  ASSERT_EQ(report.tasks.size(), 3u);
  EXPECT_TRUE(report.tasks[0].ok);
  EXPECT_FALSE(report.tasks[1].ok);
  EXPECT_NE(report.tasks[1].error.find("cannot open"), std::string::npos);
  EXPECT_TRUE(report.tasks[2].ok);
  EXPECT_FALSE(report.all_ok());
  EXPECT_NE(log.str().find("missing"), std::string::npos);

  const auto json = to_json(report);
  EXPECT_EQ(json["schema_version"], kReportSchemaVersion);
  EXPECT_EQ(json["tasks"][1]["status"], "failed");
  EXPECT_EQ(json["tasks"][0]["status"], "ok");
  EXPECT_EQ(json["tasks"][0]["iterations"].size(), 5u);
  EXPECT_FALSE(json["tasks"][0].contains("wall_time_s"));
}

TEST(Report, AveragesRecomputeFromFinals) {
  const auto report = run_batch(synthetic_tasks(), BatchCommand::Ablate, batch_config());
  ASSERT_EQ(report.tasks.size(), 19u);  // 9 + 1 failure + 9
  const auto averages = report.averages();
  ASSERT_EQ(averages.size(), 9u);
  for (const auto& a : averages) {
    double sum = 0;
    int count = 0;
    for (const auto& t : report.tasks) {
      if (!t.ok || !t.config || t.config->labeling != *a.labeling || t.config->selection != *a.selection) continue;
      sum += *t.final_accuracy;
      ++count;
    }
    EXPECT_EQ(a.tasks, 2);
    EXPECT_EQ(count, 2);
    EXPECT_NEAR(a.final_accuracy, sum / count, 1e-12);
  }
}

TEST(Report, ParallelBatchMatchesSerialBytes) {
  BatchOptions serial, parallel;
  parallel.jobs = 3;
  const auto a = report_string(run_batch(synthetic_tasks(), BatchCommand::Adapt, batch_config(), serial));
  const auto b = report_string(run_batch(synthetic_tasks(), BatchCommand::Adapt, batch_config(), parallel));
  EXPECT_EQ(a, b);
  const auto c = report_string(run_batch(synthetic_tasks(), BatchCommand::Baseline, batch_config()));
  EXPECT_NE(c.find("\"1nn\""), std::string::npos);
}

// Decimal comma and thousands grouping, as many desktop locales use.
struct CommaPunct : std::numpunct<char> {
  char do_decimal_point() const override { return ','; }
  char do_thousands_sep() const override { return '.'; }
  std::string do_grouping() const override { return "\3"; }
};

TEST(Locale, OutputIgnoresGlobalLocale) {
  TempDir dir;
  Matrix<double> x(2, 1200);
  x.setConstant(1.25);
  const auto path_before = dir.file("before.txt");
  write_feature_file(path_before, x, std::nullopt);
  const auto report_before = report_string(run_batch(synthetic_tasks(), BatchCommand::Adapt, batch_config()));

  const std::locale saved = std::locale::global(std::locale(std::locale::classic(), new CommaPunct));
  const auto path_after = dir.file("after.txt");
  write_feature_file(path_after, x, std::nullopt);
  const auto back = read_feature_file(path_after);
  const auto report_after = report_string(run_batch(synthetic_tasks(), BatchCommand::Adapt, batch_config()));
  std::locale::global(saved);

  EXPECT_EQ(slurp(path_before), slurp(path_after));
  EXPECT_EQ(back.features, x);
  EXPECT_EQ(report_before, report_after);
}

}  // namespace
}  // namespace spl
