#pragma once

// Supervised locality preserving projection (SLPP) on class-equality
// similarity, and embedding into the aligned subspace.

#include <spl/linalg.hpp>
#include <spl/preprocess.hpp>
#include <spl/types.hpp>

#include <algorithm>
#include <sstream>

namespace spl {

/// Dense M, D and L = D − M for a label sequence.
template <typename Scalar>
struct SimilarityGraph {
  Matrix<Scalar> similarity;  // M, 0/1
  Vector<Scalar> degree;      // diag(D)
  Matrix<Scalar> laplacian;   // L
};

/// Largest graph build_graph will materialize.
inline constexpr Index kMaxDenseGraphSize = 16384;

/// M_ij = 1 iff labels i and j agree (diagonal included).
template <typename Scalar = double>
SimilarityGraph<Scalar> build_graph(const LabelVector& labels) {
  const auto n = static_cast<Index>(labels.size());
  if (n > kMaxDenseGraphSize) {
    std::ostringstream os;
    os << "build_graph: " << n << " samples exceed the dense graph limit of " << kMaxDenseGraphSize;
    throw ResourceError(os.str());
  }
  SimilarityGraph<Scalar> g;
  g.similarity.resize(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      g.similarity(i, j) = labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)] ? Scalar(1) : Scalar(0);
  g.degree = g.similarity.rowwise().sum();
  g.laplacian = Matrix<Scalar>(g.degree.asDiagonal()) - g.similarity;
  return g;
}

/// Left and right sides of the SLPP generalized eigenproblem,
/// A = X·D·Xᵀ and B = X·L·Xᵀ + I.
template <typename Scalar>
struct SlppProblem {
  Matrix<Scalar> a;
  Matrix<Scalar> b;
};

/// Builds A and B from per-class column sums: with s_c the sum of class-c
/// columns, X·M·Xᵀ = Σ_c s_c·s_cᵀ and D_ii is the size of sample i's class.
template <typename Derived>
SlppProblem<typename Derived::Scalar> slpp_problem(const Eigen::MatrixBase<Derived>& x,
                                                   const LabelVector& labels) {
  using Scalar = typename Derived::Scalar;
  if (static_cast<Index>(labels.size()) != x.cols()) {
    std::ostringstream os;
    os << "slpp: " << x.cols() << " columns but " << labels.size() << " labels";
    throw InputError(os.str());
  }
  if (labels.empty()) throw InputError("slpp: no labeled samples");
  const ClassId num_classes = *std::max_element(labels.begin(), labels.end()) + 1;

  Matrix<Scalar> class_sums = Matrix<Scalar>::Zero(x.rows(), num_classes);
  Vector<Scalar> class_sizes = Vector<Scalar>::Zero(num_classes);
  for (Index i = 0; i < x.cols(); ++i) {
    const ClassId y = labels[static_cast<std::size_t>(i)];
    if (y < 0) throw InputError("slpp: negative label");
    class_sums.col(y) += x.col(i);
    class_sizes(y) += Scalar(1);
  }
  Vector<Scalar> degree(x.cols());
  for (Index i = 0; i < x.cols(); ++i) degree(i) = class_sizes(labels[static_cast<std::size_t>(i)]);

  SlppProblem<Scalar> p;
  p.a = x * degree.asDiagonal() * x.transpose();
  p.b = p.a - class_sums * class_sums.transpose();
  p.b.diagonal().array() += Scalar(1);
  return p;
}

template <typename Scalar>
struct SlppModel {
  Matrix<Scalar> projection;      // P, d1 x d2
  Vector<Scalar> eigenvalues;     // λ for each column of P
  Vector<Scalar> embedding_mean;  // mean of Pᵀx over all source and target samples

  Index input_dim() const { return projection.rows(); }
  Index output_dim() const { return projection.cols(); }
};

/// Learns P from the labeled columns (source plus selected target), then
/// centers on the projections of every sample in `all_samples`.
template <typename DerivedL, typename DerivedA>
SlppModel<typename DerivedL::Scalar> slpp_fit(const Eigen::MatrixBase<DerivedL>& labeled,
                                              const LabelVector& labels, Index d2,
                                              const Eigen::MatrixBase<DerivedA>& all_samples) {
  using Scalar = typename DerivedL::Scalar;
  if (d2 < 1 || d2 > labeled.rows()) {
    std::ostringstream os;
    os << "slpp_fit: d2=" << d2 << " must lie in [1, d1=" << labeled.rows() << "]";
    throw ConfigError(os.str());
  }
  if (all_samples.rows() != labeled.rows()) throw InputError("slpp_fit: sample dimensionality differs");

  const SlppProblem<Scalar> problem = slpp_problem(labeled, labels);
  EigenPairs<Scalar> pairs = gen_eig(problem.a, problem.b, d2);

  SlppModel<Scalar> model;
  model.projection = std::move(pairs.vectors);
  model.eigenvalues = std::move(pairs.values);
  model.embedding_mean = (model.projection.transpose() * all_samples).rowwise().mean();
  return model;
}

/// Pᵀx − mean, then L2-normalized per column.
template <typename Scalar, typename Derived>
Matrix<Scalar> embed(const SlppModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x,
                     Warnings* warnings = nullptr) {
  if (x.rows() != model.input_dim()) {
    std::ostringstream os;
    os << "embed: expected " << model.input_dim() << " rows, got " << x.rows();
    throw InputError(os.str());
  }
  Matrix<Scalar> z = (model.projection.transpose() * x).colwise() - model.embedding_mean;
  return l2_normalize_columns(z, warnings);
}

}  // namespace spl
