#pragma once

// Iterative adaptation: PCA, source-only SLPP, then T rounds of selective
// pseudo-labeling and SLPP refitting on source plus selected target samples.

#include <spl/data_model.hpp>
#include <spl/labeling.hpp>
#include <spl/preprocess.hpp>
#include <spl/selection.hpp>
#include <spl/subspace.hpp>
#include <spl/types.hpp>

#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace spl {

/// An error raised inside a named pipeline stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message)
      : Error(stage + ": " + message), stage_(std::move(stage)) {}

  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct IterationSnapshot {
  int iteration = 0;
  Index selected = 0;               // target samples used to fit this iteration's projection
  std::optional<double> accuracy;   // only with an evaluation channel
};

template <typename Scalar>
struct AdaptationResult {
  LabelVector predictions;
  PseudoLabelSet<Scalar> pseudo_labels;    // final (index, class, confidence)
  std::vector<IterationSnapshot> snapshots;  // iterations 0..T
  SlppModel<Scalar> model;
  RunConfig config;
  std::vector<std::string> warnings;

  std::optional<double> final_accuracy() const {
    return snapshots.empty() ? std::nullopt : snapshots.back().accuracy;
  }
};

/// PCA-reduced, L2-normalized features shared by every run on one pair.
template <typename Scalar>
struct PreparedTask {
  Matrix<Scalar> source;  // d1 x ns
  Matrix<Scalar> target;  // d1 x nt
  Matrix<Scalar> all;     // [source | target]
  PcaModel<Scalar> pca;
  std::vector<std::string> warnings;
};

namespace detail {

template <typename F>
auto in_stage(const std::string& stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e.what());
  }
}

inline std::string iteration_stage(const char* name, int k) {
  std::ostringstream os;
  os << name << " (iteration " << k << ")";
  return os.str();
}

}  // namespace detail

template <typename Scalar>
PreparedTask<Scalar> prepare(const ValidatedPair<Scalar>& pair, Index d1) {
  PreparedTask<Scalar> task;
  Warnings warnings;
  task.pca = detail::in_stage("pca", [&] {
    return pca_fit(pair.source_features(), pair.target_features(), d1, &warnings);
  });
  task.source = l2_normalize_columns(pca_transform(task.pca, pair.source_features()), &warnings);
  task.target = l2_normalize_columns(pca_transform(task.pca, pair.target_features()), &warnings);
  task.all.resize(task.source.rows(), task.source.cols() + task.target.cols());
  task.all << task.source, task.target;
  task.warnings = std::move(warnings.messages);
  return task;
}

/// Pseudo-labels every target sample in the subspace of `model`.
template <typename Scalar>
PseudoLabelSet<Scalar> pseudo_label(const SlppModel<Scalar>& model, const Matrix<Scalar>& source,
                                    const LabelVector& source_labels, const Matrix<Scalar>& target,
                                    Index num_classes, LabelingMode mode, Warnings* warnings = nullptr) {
  const Matrix<Scalar> zs = embed(model, source, warnings);
  const Matrix<Scalar> zt = embed(model, target, warnings);
  const PrototypeSet<Scalar> protos = compute_prototypes(zs, source_labels, num_classes, warnings);

  ProbabilityTable<Scalar> p1, p2;
  if (mode != LabelingMode::Sp) p1 = ncp_probabilities(zt, protos);
  if (mode != LabelingMode::Ncp) p2 = sp_probabilities(zt, match_clusters(kmeans_clusters(zt, protos), protos));
  return fuse_and_label(p1, p2, mode);
}

template <typename Scalar>
LabelVector labels_of(const PseudoLabelSet<Scalar>& set) {
  LabelVector out(set.size());
  for (const auto& e : set) out[static_cast<std::size_t>(e.index)] = e.label;
  return out;
}

/// Runs the adaptation on an already prepared task. `evaluation`, when
/// given, is used only to score each iteration's labels.
template <typename Scalar>
AdaptationResult<Scalar> run_prepared(const PreparedTask<Scalar>& task, const LabelVector& source_labels,
                                      Index num_classes, const RunConfig& cfg,
                                      const EvaluationChannel* evaluation = nullptr) {
  if (cfg.iterations < 1) throw ConfigError("iteration count must be >= 1");
  AdaptationResult<Scalar> result;
  result.config = cfg;
  result.warnings = task.warnings;
  Warnings warnings;

  Index d2 = cfg.d2;
  if (d2 > task.source.rows()) {
    std::ostringstream os;
    os << "d2=" << d2 << " exceeds the PCA rank " << task.source.rows() << "; using " << task.source.rows();
    warnings.add(os.str());
    d2 = task.source.rows();
  }

  auto snapshot = [&](int k, Index selected) {
    IterationSnapshot s{k, selected, std::nullopt};
    if (evaluation != nullptr) s.accuracy = evaluation->accuracy(labels_of(result.pseudo_labels));
    result.snapshots.push_back(s);
  };

  result.model = detail::in_stage("slpp (iteration 0)", [&] {
    return slpp_fit(task.source, source_labels, d2, task.all);
  });
  result.pseudo_labels = detail::in_stage("labeling (iteration 0)", [&] {
    return pseudo_label(result.model, task.source, source_labels, task.target, num_classes, cfg.labeling, &warnings);
  });
  snapshot(0, 0);

  const Index ns = task.source.cols();
  for (int k = 1; k <= cfg.iterations; ++k) {
    const PseudoLabelSet<Scalar> chosen = select(result.pseudo_labels, k, cfg.iterations, cfg.selection);

    Matrix<Scalar> labeled(task.source.rows(), ns + static_cast<Index>(chosen.size()));
    labeled.leftCols(ns) = task.source;
    LabelVector labels = source_labels;
    labels.reserve(labels.size() + chosen.size());
    for (std::size_t j = 0; j < chosen.size(); ++j) {
      labeled.col(ns + static_cast<Index>(j)) = task.target.col(chosen[j].index);
      labels.push_back(chosen[j].label);
    }

    result.model = detail::in_stage(detail::iteration_stage("slpp", k), [&] {
      return slpp_fit(labeled, labels, d2, task.all);
    });
    result.pseudo_labels = detail::in_stage(detail::iteration_stage("labeling", k), [&] {
      return pseudo_label(result.model, task.source, source_labels, task.target, num_classes, cfg.labeling,
                          &warnings);
    });
    snapshot(k, static_cast<Index>(chosen.size()));
  }

  result.predictions = labels_of(result.pseudo_labels);
  result.warnings.insert(result.warnings.end(), warnings.messages.begin(), warnings.messages.end());
  return result;
}

/// Full adaptation of one validated source/target pair.
template <typename Scalar>
AdaptationResult<Scalar> run(const ValidatedPair<Scalar>& pair, const RunConfig& cfg) {
  cfg.validate(pair.dim());
  const PreparedTask<Scalar> task = prepare(pair, cfg.d1);
  return run_prepared(task, pair.source_labels(), pair.num_classes(), cfg, pair.evaluation());
}

template <typename Scalar>
struct AblationEntry {
  LabelingMode labeling;
  SelectionMode selection;
  AdaptationResult<Scalar> result;
};

/// Every (selection, labeling) combination, selection-major:
/// none/all/progressive × ncp/sp/fused. PCA is fitted once and shared.
template <typename Scalar>
std::vector<AblationEntry<Scalar>> run_ablation(const ValidatedPair<Scalar>& pair, const RunConfig& base) {
  base.validate(pair.dim());
  const PreparedTask<Scalar> task = prepare(pair, base.d1);
  std::vector<AblationEntry<Scalar>> table;
  for (SelectionMode s : {SelectionMode::None, SelectionMode::All, SelectionMode::Progressive}) {
    for (LabelingMode l : {LabelingMode::Ncp, LabelingMode::Sp, LabelingMode::Fused}) {
      RunConfig cfg = base;
      cfg.labeling = l;
      cfg.selection = s;
      table.push_back({l, s, run_prepared(task, pair.source_labels(), pair.num_classes(), cfg, pair.evaluation())});
    }
  }
  return table;
}

struct BaselineResult {
  LabelVector predictions;
  std::optional<double> accuracy;
};

/// 1-nearest-neighbour on L2-normalized raw features, no adaptation. Ties go
/// to the lower source index.
template <typename Scalar>
BaselineResult nn_baseline(const ValidatedPair<Scalar>& pair) {
  const Matrix<Scalar> src = l2_normalize_columns(pair.source_features());
  const Matrix<Scalar> tgt = l2_normalize_columns(pair.target_features());
  const Vector<Scalar> src_sq = src.colwise().squaredNorm().transpose();
  const Matrix<Scalar> cross = src.transpose() * tgt;  // ns x nt

  BaselineResult out;
  out.predictions.resize(static_cast<std::size_t>(tgt.cols()));
  for (Index t = 0; t < tgt.cols(); ++t) {
    Index best = 0;
    Scalar best_d = src_sq(0) - Scalar(2) * cross(0, t);
    for (Index s = 1; s < src.cols(); ++s) {
      const Scalar dist = src_sq(s) - Scalar(2) * cross(s, t);
      if (dist < best_d) {
        best_d = dist;
        best = s;
      }
    }
    out.predictions[static_cast<std::size_t>(t)] = pair.source_labels()[static_cast<std::size_t>(best)];
  }
  if (const EvaluationChannel* eval = pair.evaluation()) out.accuracy = eval->accuracy(out.predictions);
  return out;
}

}  // namespace spl
