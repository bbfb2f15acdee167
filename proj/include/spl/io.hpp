#pragma once

// Feature files, label dictionaries, synthetic domain pairs and accuracy.
//
// Feature file layout (ASCII, '.' decimal point, space separated):
//
//   # d=<int> n=<int> labeled=<0|1>
//   <label> <f1> ... <fd>        one line per sample, label -1 when unlabeled

#include <spl/data_model.hpp>
#include <spl/types.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace spl {

/// Raised for unreadable or malformed feature files. Carries the 1-based
/// line number when the problem is tied to a line.
class ParseError : public InputError {
 public:
  ParseError(const std::string& path, int line, const std::string& message);

  int line() const { return line_; }

 private:
  int line_;
};

/// A feature file as stored: raw integer labels, not yet dictionary-encoded.
struct FeatureFile {
  Matrix<double> features;  // d x n
  std::optional<std::vector<long long>> labels;
};

FeatureFile read_feature_file(const std::string& path);
void write_feature_file(const std::string& path, const Matrix<double>& features,
                        const std::optional<std::vector<long long>>& labels);

/// Maps raw label values to dense class ids in ascending raw order.
class LabelDictionary {
 public:
  LabelDictionary() = default;
  explicit LabelDictionary(const std::vector<long long>& raw);

  /// Throws InputError for a label outside the dictionary.
  ClassId encode(long long raw) const;
  long long decode(ClassId id) const { return values_.at(static_cast<std::size_t>(id)); }
  Index size() const { return static_cast<Index>(values_.size()); }

 private:
  std::vector<long long> values_;
};

/// Loads one file with its own label dictionary.
DomainDataset<double> load_features(const std::string& path, DomainTag tag = DomainTag::Source);

/// Loads a source/target pair; target labels (kept for evaluation) are
/// encoded through the source dictionary.
std::pair<DomainDataset<double>, DomainDataset<double>> load_pair(const std::string& source_path,
                                                                  const std::string& target_path);

struct SyntheticSpec {
  int classes = 5;
  int per_class = 40;
  int dim = 20;
  double shift = 0.0;          // target translation, in units of sigma
  double separation = 10.0;    // distance between class means, in units of sigma
  double sigma = 1.0;          // per-coordinate noise standard deviation
  double rotation_per_shift = 0.02;  // radians of target rotation per sigma of shift
  std::uint64_t seed = 0;
};

/// Gaussian class blobs for a source domain and a shifted, slightly rotated
/// target domain. Both carry labels; the target's are for evaluation.
std::pair<DomainDataset<double>, DomainDataset<double>> gen_synthetic(const SyntheticSpec& spec);

/// 100 · correct / total.
double evaluate(const LabelVector& predictions, const LabelVector& truth);

/// One decimal place, as in accuracy tables.
std::string format_accuracy(double accuracy);

}  // namespace spl
