#pragma once

// Dataset containers, pseudo-label bookkeeping and run configuration.

#include <spl/types.hpp>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace spl {

enum class DomainTag { Source, Target };

enum class LabelingMode { Ncp, Sp, Fused };

enum class SelectionMode { None, All, Progressive };

inline std::string_view to_string(LabelingMode m) {
  switch (m) {
    case LabelingMode::Ncp: return "ncp";
    case LabelingMode::Sp: return "sp";
    case LabelingMode::Fused: return "fused";
  }
  return "?";
}

inline std::string_view to_string(SelectionMode m) {
  switch (m) {
    case SelectionMode::None: return "none";
    case SelectionMode::All: return "all";
    case SelectionMode::Progressive: return "progressive";
  }
  return "?";
}

inline LabelingMode parse_labeling_mode(std::string_view s) {
  if (s == "ncp") return LabelingMode::Ncp;
  if (s == "sp") return LabelingMode::Sp;
  if (s == "fused") return LabelingMode::Fused;
  throw ConfigError("unknown labeling mode '" + std::string(s) + "' (expected ncp|sp|fused)");
}

inline SelectionMode parse_selection_mode(std::string_view s) {
  if (s == "none") return SelectionMode::None;
  if (s == "all") return SelectionMode::All;
  if (s == "progressive") return SelectionMode::Progressive;
  throw ConfigError("unknown selection mode '" + std::string(s) + "' (expected none|all|progressive)");
}

/// One domain's samples as columns, with optional labels.
template <typename Scalar>
struct DomainDataset {
  Matrix<Scalar> features;  // d x n
  std::optional<LabelVector> labels;
  DomainTag tag = DomainTag::Source;

  Index dim() const { return features.rows(); }
  Index size() const { return features.cols(); }
};

/// Hyperparameters of one adaptation run.
struct RunConfig {
  Index d1 = 128;  // PCA dimensionality
  Index d2 = 128;  // SLPP dimensionality
  int iterations = 10;
  LabelingMode labeling = LabelingMode::Fused;
  SelectionMode selection = SelectionMode::Progressive;
  std::uint64_t seed = 0;

  void validate(Index feature_dim) const {
    std::ostringstream os;
    if (d2 < 1 || d1 < d2 || feature_dim < d1) {
      os << "invalid dimensions: need 1 <= d2 <= d1 <= d, got d2=" << d2 << " d1=" << d1
         << " d=" << feature_dim;
      throw ConfigError(os.str());
    }
    if (iterations < 1) {
      os << "iteration count must be >= 1, got " << iterations;
      throw ConfigError(os.str());
    }
  }
};

/// Suggested d1 per benchmark; d2 = 128 and T = 10 throughout.
struct DatasetPreset {
  std::string_view name;
  Index d1;
};

inline constexpr DatasetPreset kPresets[] = {
    {"office-caltech", 128},
    {"office31", 512},
    {"imageclef-da", 128},
    {"office-home", 1024},
};

template <typename Scalar>
struct PseudoLabel {
  Index index;  // target sample
  ClassId label;
  Scalar confidence;
};

template <typename Scalar>
using PseudoLabelSet = std::vector<PseudoLabel<Scalar>>;

/// Checks index uniqueness and confidence range.
template <typename Scalar>
void validate_pseudo_labels(const PseudoLabelSet<Scalar>& set, Index num_classes) {
  std::vector<Index> seen;
  seen.reserve(set.size());
  for (const auto& e : set) {
    if (!(e.confidence >= Scalar(0) && e.confidence <= Scalar(1)))
      throw InputError("pseudo-label confidence outside [0, 1]");
    if (e.label < 0 || e.label >= num_classes) throw InputError("pseudo-label class out of range");
    seen.push_back(e.index);
  }
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
    throw InputError("duplicate target index in pseudo-label set");
}

/// Target indices grouped by pseudo-label, in input order within each class.
struct ClassPartition {
  std::vector<std::vector<Index>> members;

  Index count(ClassId c) const { return static_cast<Index>(members[static_cast<std::size_t>(c)].size()); }
};

template <typename Scalar>
ClassPartition partition_by_class(const PseudoLabelSet<Scalar>& set, Index num_classes) {
  ClassPartition p;
  p.members.resize(static_cast<std::size_t>(num_classes));
  for (const auto& e : set) p.members[static_cast<std::size_t>(e.label)].push_back(e.index);
  return p;
}

/// Target ground truth, reachable only through scoring. The adaptation
/// stages never see the labels themselves.
class EvaluationChannel {
 public:
  explicit EvaluationChannel(LabelVector truth) : truth_(std::move(truth)) {}

  Index size() const { return static_cast<Index>(truth_.size()); }

  /// Percentage of predictions equal to the ground truth.
  double accuracy(const LabelVector& predictions) const {
    if (predictions.size() != truth_.size()) {
      std::ostringstream os;
      os << "evaluate: " << predictions.size() << " predictions for " << truth_.size() << " labels";
      throw InputError(os.str());
    }
    if (truth_.empty()) throw InputError("evaluate: no samples");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth_.size(); ++i) correct += predictions[i] == truth_[i] ? 1 : 0;
    return 100.0 * static_cast<double>(correct) / static_cast<double>(truth_.size());
  }

 private:
  LabelVector truth_;
};

/// A source/target pair whose shapes and labels satisfy every downstream
/// precondition. Only obtainable from validate_pair().
template <typename Scalar>
class ValidatedPair {
 public:
  const Matrix<Scalar>& source_features() const { return source_features_; }
  const LabelVector& source_labels() const { return source_labels_; }
  const Matrix<Scalar>& target_features() const { return target_features_; }
  Index num_classes() const { return num_classes_; }
  Index dim() const { return source_features_.rows(); }
  Index source_size() const { return source_features_.cols(); }
  Index target_size() const { return target_features_.cols(); }

  const EvaluationChannel* evaluation() const { return evaluation_ ? &*evaluation_ : nullptr; }

  /// Same pair with the evaluation channel removed.
  ValidatedPair without_evaluation() const {
    ValidatedPair copy = *this;
    copy.evaluation_.reset();
    return copy;
  }

 private:
  template <typename S>
  friend ValidatedPair<S> validate_pair(DomainDataset<S> src, DomainDataset<S> tgt, std::optional<Index> num_classes);

  ValidatedPair() = default;

  Matrix<Scalar> source_features_;
  LabelVector source_labels_;
  Matrix<Scalar> target_features_;
  Index num_classes_ = 0;
  std::optional<EvaluationChannel> evaluation_;
};

/// Confirms equal dimensionality, a fully labeled source covering every
/// class 0..K-1, and finite features. K is the given class count, or one
/// more than the largest source label. Target labels, if any, are moved into
/// the evaluation channel.
template <typename Scalar>
ValidatedPair<Scalar> validate_pair(DomainDataset<Scalar> src, DomainDataset<Scalar> tgt,
                                    std::optional<Index> num_classes = std::nullopt) {
  std::ostringstream os;
  if (src.size() < 1 || tgt.size() < 1) throw InputError("source and target must each hold at least one sample");
  if (src.dim() != tgt.dim()) {
    os << "dimension mismatch: source d=" << src.dim() << ", target d=" << tgt.dim();
    throw InputError(os.str());
  }
  if (!src.features.allFinite() || !tgt.features.allFinite()) throw InputError("non-finite feature values");
  if (!src.labels) throw InputError("source dataset must be labeled");
  const LabelVector& labels = *src.labels;
  if (static_cast<Index>(labels.size()) != src.size()) {
    os << "source has " << src.size() << " samples but " << labels.size() << " labels";
    throw InputError(os.str());
  }
  if (*std::min_element(labels.begin(), labels.end()) < 0) throw InputError("negative source label");
  const Index largest = *std::max_element(labels.begin(), labels.end());
  const Index k = num_classes.value_or(largest + 1);
  if (largest >= k) {
    os << "source label " << largest << " outside the declared " << k << " classes";
    throw InputError(os.str());
  }
  std::vector<Index> counts(static_cast<std::size_t>(k), 0);
  for (ClassId y : labels) ++counts[static_cast<std::size_t>(y)];
  for (Index c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) {
      os << "empty class in source: class " << c << " of " << k << " has no samples";
      throw InputError(os.str());
    }
  }

  ValidatedPair<Scalar> pair;
  if (tgt.labels) {
    const LabelVector& truth = *tgt.labels;
    if (static_cast<Index>(truth.size()) != tgt.size()) throw InputError("target label count mismatch");
    for (ClassId y : truth) {
      if (y < 0 || y >= k) {
        os << "target label " << y << " outside the source label space of size " << k;
        throw InputError(os.str());
      }
    }
    pair.evaluation_.emplace(std::move(*tgt.labels));
  }
  pair.source_features_ = std::move(src.features);
  pair.source_labels_ = std::move(*src.labels);
  pair.target_features_ = std::move(tgt.features);
  pair.num_classes_ = k;
  return pair;
}

}  // namespace spl
