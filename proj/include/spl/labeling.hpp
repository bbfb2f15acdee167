#pragma once

// Pseudo-labeling in the aligned subspace: nearest class prototype,
// structured prediction over prototype-initialized K-means clusters, and
// the max-fusion of both.

#include <spl/data_model.hpp>
#include <spl/linalg.hpp>
#include <spl/preprocess.hpp>
#include <spl/types.hpp>

#include <cmath>
#include <sstream>
#include <vector>

namespace spl {

/// One L2-normalized prototype column per class.
template <typename Scalar>
struct PrototypeSet {
  Matrix<Scalar> centers;  // d2 x K

  Index num_classes() const { return centers.cols(); }
};

/// K-means result. Before matching, column i is cluster i; after
/// match_clusters, column y is the cluster matched to class y.
template <typename Scalar>
struct ClusterSet {
  Matrix<Scalar> centers;          // d2 x K
  std::vector<Index> membership;   // target sample -> column of `centers`
  std::vector<Scalar> sse_history; // within-cluster SSE after each assignment pass
  Index iterations = 0;
  Matching matching;               // set by match_clusters: cluster -> class
};

/// Rows are target samples, columns classes.
template <typename Scalar>
using ProbabilityTable = Matrix<Scalar>;

inline constexpr int kMaxKMeansIterations = 100;

/// Class means of the embedded source samples, L2-normalized. A class whose
/// mean is exactly zero keeps the zero vector and raises a warning.
template <typename Derived>
PrototypeSet<typename Derived::Scalar> compute_prototypes(const Eigen::MatrixBase<Derived>& source_embedded,
                                                          const LabelVector& labels, Index num_classes,
                                                          Warnings* warnings = nullptr) {
  using Scalar = typename Derived::Scalar;
  if (static_cast<Index>(labels.size()) != source_embedded.cols())
    throw InputError("compute_prototypes: label count does not match sample count");
  PrototypeSet<Scalar> protos;
  protos.centers = Matrix<Scalar>::Zero(source_embedded.rows(), num_classes);
  Vector<Scalar> counts = Vector<Scalar>::Zero(num_classes);
  for (Index i = 0; i < source_embedded.cols(); ++i) {
    const ClassId y = labels[static_cast<std::size_t>(i)];
    protos.centers.col(y) += source_embedded.col(i);
    counts(y) += Scalar(1);
  }
  for (Index c = 0; c < num_classes; ++c) {
    if (counts(c) > Scalar(0)) protos.centers.col(c) /= counts(c);
  }
  const Index zeros = normalize_columns_in_place(protos.centers);
  if (zeros > 0) {
    std::ostringstream os;
    os << "compute_prototypes: " << zeros << " class prototype(s) have zero mean";
    warn(warnings, os.str());
  }
  return protos;
}

/// p(y|x) ∝ exp(−‖x − center_y‖) for every column x of `samples`.
template <typename DerivedX, typename DerivedC>
ProbabilityTable<typename DerivedX::Scalar> distance_softmax(const Eigen::MatrixBase<DerivedX>& samples,
                                                             const Eigen::MatrixBase<DerivedC>& centers) {
  using Scalar = typename DerivedX::Scalar;
  if (samples.rows() != centers.rows()) throw InputError("distance_softmax: dimensionality mismatch");
  const Index n = samples.cols();
  const Index k = centers.cols();
  ProbabilityTable<Scalar> table(n, k);
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < k; ++c) table(i, c) = (samples.col(i) - centers.col(c)).norm();
    // Shifting by the smallest distance leaves the ratio unchanged.
    const Scalar nearest = table.row(i).minCoeff();
    table.row(i) = (-(table.row(i).array() - nearest)).exp();
    table.row(i) /= table.row(i).sum();
  }
  return table;
}

template <typename Derived, typename Scalar>
ProbabilityTable<Scalar> ncp_probabilities(const Eigen::MatrixBase<Derived>& target_embedded,
                                           const PrototypeSet<Scalar>& protos) {
  return distance_softmax(target_embedded, protos.centers);
}

namespace detail {

// Nearest center per column; ties go to the smaller center index.
template <typename DerivedX, typename Scalar>
typename DerivedX::Scalar assign_nearest(const Eigen::MatrixBase<DerivedX>& x, const Matrix<Scalar>& centers,
                                         std::vector<Index>& membership) {
  Scalar sse(0);
  membership.resize(static_cast<std::size_t>(x.cols()));
  for (Index i = 0; i < x.cols(); ++i) {
    Index best = 0;
    Scalar best_d = (x.col(i) - centers.col(0)).squaredNorm();
    for (Index c = 1; c < centers.cols(); ++c) {
      const Scalar dist = (x.col(i) - centers.col(c)).squaredNorm();
      if (dist < best_d) {
        best_d = dist;
        best = c;
      }
    }
    membership[static_cast<std::size_t>(i)] = best;
    sse += best_d;
  }
  return sse;
}

}  // namespace detail

/// Lloyd iterations from the given initial centers until the assignment no
/// longer changes or 100 iterations pass. An empty cluster is re-seeded at
/// the sample farthest from its current center.
template <typename Derived, typename Scalar>
ClusterSet<Scalar> kmeans_clusters(const Eigen::MatrixBase<Derived>& target_embedded,
                                   const PrototypeSet<Scalar>& init,
                                   int max_iterations = kMaxKMeansIterations) {
  const Index n = target_embedded.cols();
  const Index k = init.num_classes();
  if (n < k) {
    std::ostringstream os;
    os << "kmeans: " << n << " samples cannot form " << k << " clusters";
    throw InputError(os.str());
  }
  if (target_embedded.rows() != init.centers.rows()) throw InputError("kmeans: dimensionality mismatch");

  ClusterSet<Scalar> out;
  out.centers = init.centers;
  out.sse_history.push_back(detail::assign_nearest(target_embedded, out.centers, out.membership));

  std::vector<Index> next;
  std::vector<char> reseeded(static_cast<std::size_t>(n), 0);
  for (int iter = 1; iter <= max_iterations; ++iter) {
    Matrix<Scalar> sums = Matrix<Scalar>::Zero(target_embedded.rows(), k);
    std::vector<Index> sizes(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < n; ++i) {
      const Index c = out.membership[static_cast<std::size_t>(i)];
      sums.col(c) += target_embedded.col(i);
      ++sizes[static_cast<std::size_t>(c)];
    }
    for (Index c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) {
        out.centers.col(c) = sums.col(c) / Scalar(sizes[static_cast<std::size_t>(c)]);
        continue;
      }
      Index far = -1;
      Scalar far_d(-1);
      for (Index i = 0; i < n; ++i) {
        if (reseeded[static_cast<std::size_t>(i)]) continue;
        const Index own = out.membership[static_cast<std::size_t>(i)];
        const Scalar dist = (target_embedded.col(i) - out.centers.col(own)).squaredNorm();
        if (dist > far_d) {
          far_d = dist;
          far = i;
        }
      }
      if (far >= 0) {
        reseeded[static_cast<std::size_t>(far)] = 1;
        out.centers.col(c) = target_embedded.col(far);
      }
    }
    std::fill(reseeded.begin(), reseeded.end(), 0);

    out.sse_history.push_back(detail::assign_nearest(target_embedded, out.centers, next));
    out.iterations = iter;
    const bool stable = next == out.membership;
    out.membership.swap(next);
    if (stable) break;
  }
  return out;
}

/// Matches clusters one-to-one to classes minimizing the summed Euclidean
/// distance between cluster centers and prototypes, and re-indexes the
/// clusters by their matched class.
template <typename Scalar>
ClusterSet<Scalar> match_clusters(const ClusterSet<Scalar>& clusters, const PrototypeSet<Scalar>& protos) {
  const Index k = clusters.centers.cols();
  if (k != protos.num_classes()) throw InputError("match_clusters: cluster and class counts differ");
  Matrix<Scalar> cost(k, k);
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < k; ++j) cost(i, j) = (clusters.centers.col(i) - protos.centers.col(j)).norm();

  ClusterSet<Scalar> out;
  out.matching = solve_assignment(cost);
  out.centers.resize(clusters.centers.rows(), k);
  for (Index i = 0; i < k; ++i) out.centers.col(out.matching.assignment[static_cast<std::size_t>(i)]) = clusters.centers.col(i);
  out.membership.reserve(clusters.membership.size());
  for (Index m : clusters.membership) out.membership.push_back(out.matching.assignment[static_cast<std::size_t>(m)]);
  out.sse_history = clusters.sse_history;
  out.iterations = clusters.iterations;
  return out;
}

template <typename Derived, typename Scalar>
ProbabilityTable<Scalar> sp_probabilities(const Eigen::MatrixBase<Derived>& target_embedded,
                                          const ClusterSet<Scalar>& matched) {
  return distance_softmax(target_embedded, matched.centers);
}

/// The table that drives labeling under `mode`: p1, p2 or their elementwise max.
template <typename Scalar>
ProbabilityTable<Scalar> fuse_probabilities(const ProbabilityTable<Scalar>& p1, const ProbabilityTable<Scalar>& p2,
                                            LabelingMode mode) {
  switch (mode) {
    case LabelingMode::Ncp: return p1;
    case LabelingMode::Sp: return p2;
    case LabelingMode::Fused:
      if (p1.rows() != p2.rows() || p1.cols() != p2.cols()) throw InputError("fuse: table shapes differ");
      return p1.cwiseMax(p2);
  }
  return p1;
}

/// Row-wise argmax (smallest class on ties) and its value.
template <typename Scalar>
PseudoLabelSet<Scalar> label_from_table(const ProbabilityTable<Scalar>& table) {
  PseudoLabelSet<Scalar> out;
  out.reserve(static_cast<std::size_t>(table.rows()));
  for (Index i = 0; i < table.rows(); ++i) {
    Index best = 0;
    for (Index c = 1; c < table.cols(); ++c)
      if (table(i, c) > table(i, best)) best = c;
    out.push_back({i, static_cast<ClassId>(best), table(i, best)});
  }
  return out;
}

template <typename Scalar>
PseudoLabelSet<Scalar> fuse_and_label(const ProbabilityTable<Scalar>& p1, const ProbabilityTable<Scalar>& p2,
                                      LabelingMode mode) {
  return label_from_table(fuse_probabilities(p1, p2, mode));
}

}  // namespace spl
