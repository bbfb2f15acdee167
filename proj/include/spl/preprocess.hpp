#pragma once

// PCA on the concatenated source + target samples, and per-sample L2
// normalization.

#include <spl/linalg.hpp>
#include <spl/types.hpp>

#include <sstream>

namespace spl {

template <typename Scalar>
struct PcaModel {
  Vector<Scalar> mean;        // d
  Matrix<Scalar> components;  // d x d1, orthonormal columns
  Vector<Scalar> variances;   // scatter eigenvalues, descending

  Index input_dim() const { return components.rows(); }
  Index output_dim() const { return components.cols(); }
};

/// Scales every nonzero column to unit Euclidean norm in place. Zero columns
/// are left unchanged; their count is returned.
template <typename Derived>
Index normalize_columns_in_place(Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  Index zeros = 0;
  for (Index j = 0; j < x.cols(); ++j) {
    const Scalar norm = x.col(j).norm();
    if (norm > Scalar(0)) {
      x.col(j) /= norm;
    } else {
      ++zeros;
    }
  }
  return zeros;
}

template <typename Derived>
Matrix<typename Derived::Scalar> l2_normalize_columns(const Eigen::MatrixBase<Derived>& x,
                                                      Warnings* warnings = nullptr) {
  Matrix<typename Derived::Scalar> out = x;
  const Index zeros = normalize_columns_in_place(out);
  if (zeros > 0) {
    std::ostringstream os;
    os << "l2 normalization: " << zeros << " zero column(s) left unnormalized";
    warn(warnings, os.str());
  }
  return out;
}

/// X·H·Xᵀ with H the centering matrix, computed as the scatter of the
/// mean-subtracted columns.
template <typename Derived>
Matrix<typename Derived::Scalar> centered_scatter(const Eigen::MatrixBase<Derived>& x) {
  const Matrix<typename Derived::Scalar> centered = x.colwise() - x.rowwise().mean();
  return centered * centered.transpose();
}

/// Fits PCA on [source | target]. Uses the d x d scatter when d <= n and
/// the n x n Gram matrix otherwise. Components whose eigenvalue falls below
/// 1e-12 of the largest are dropped with a warning.
template <typename DerivedS, typename DerivedT>
PcaModel<typename DerivedS::Scalar> pca_fit(const Eigen::MatrixBase<DerivedS>& source,
                                            const Eigen::MatrixBase<DerivedT>& target, Index d1,
                                            Warnings* warnings = nullptr) {
  using Scalar = typename DerivedS::Scalar;
  const Index d = source.rows();
  if (target.rows() != d) throw InputError("pca_fit: source and target dimensionality differ");
  const Index n = source.cols() + target.cols();
  if (d1 < 1 || d1 > d || d1 > n) {
    std::ostringstream os;
    os << "pca_fit: d1=" << d1 << " must lie in [1, min(d=" << d << ", n=" << n << ")]";
    throw ConfigError(os.str());
  }

  Matrix<Scalar> x(d, n);
  x << source, target;
  if (!x.allFinite()) throw InputError("pca_fit: non-finite features");

  PcaModel<Scalar> model;
  model.mean = x.rowwise().mean();
  x.colwise() -= model.mean;

  EigenPairs<Scalar> pairs;
  const bool gram = d > n;
  if (!gram) {
    pairs = sym_eig(x * x.transpose(), d1);
  } else {
    pairs = sym_eig(x.transpose() * x, d1);
  }

  const Scalar top = pairs.values.size() > 0 ? pairs.values(0) : Scalar(0);
  Index rank = 0;
  while (rank < pairs.size() && top > Scalar(0) && pairs.values(rank) > Scalar(1e-12) * top) ++rank;
  if (rank == 0) throw InputError("pca_fit: data has zero variance");
  if (rank < d1) {
    std::ostringstream os;
    os << "pca_fit: requested d1=" << d1 << " exceeds numerical rank; truncated to " << rank;
    warn(warnings, os.str());
  }

  model.variances = pairs.values.head(rank);
  if (!gram) {
    model.components = pairs.vectors.leftCols(rank);
  } else {
    // Left singular vectors from the Gram eigenvectors: v = Xc·u / sqrt(λ).
    model.components = x * pairs.vectors.leftCols(rank);
    model.components.colwise().normalize();
    canonicalize_signs(model.components);
  }
  return model;
}

/// Vᵀ(x − mean) per column.
template <typename Scalar, typename Derived>
Matrix<Scalar> pca_transform(const PcaModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x) {
  if (x.rows() != model.input_dim()) {
    std::ostringstream os;
    os << "pca_transform: expected " << model.input_dim() << " rows, got " << x.rows();
    throw InputError(os.str());
  }
  return model.components.transpose() * (x.colwise() - model.mean);
}

}  // namespace spl
