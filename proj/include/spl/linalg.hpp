#pragma once

// Dense symmetric eigenproblems and the linear assignment problem.

#include <spl/types.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace spl {

/// Eigenvalues sorted descending with matching unit-norm column vectors.
template <typename Scalar>
struct EigenPairs {
  Vector<Scalar> values;
  Matrix<Scalar> vectors;

  Index size() const { return values.size(); }
};

/// A one-to-one assignment of rows (clusters) to columns (classes).
struct Matching {
  std::vector<Index> assignment;  // row i -> column assignment[i]

  Index size() const { return static_cast<Index>(assignment.size()); }
};

namespace detail {

template <typename Derived>
void require_square_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    std::ostringstream os;
    os << what << ": expected a non-empty square matrix, got " << m.rows() << "x" << m.cols();
    throw InputError(os.str());
  }
  if (!m.allFinite()) throw InputError(std::string(what) + ": non-finite entries");
}

// Symmetric within 1e-10 relative to the largest entry, then averaged.
template <typename Derived>
Matrix<typename Derived::Scalar> symmetrized(const Eigen::MatrixBase<Derived>& m, const char* what) {
  using Scalar = typename Derived::Scalar;
  const Matrix<Scalar> full = m;
  require_square_finite(full, what);
  const Scalar scale = std::max(Scalar(1), full.cwiseAbs().maxCoeff());
  const Scalar asym = (full - full.transpose()).cwiseAbs().maxCoeff();
  if (asym > Scalar(1e-10) * scale) {
    std::ostringstream os;
    os << what << ": matrix is not symmetric (max |m - m^T| = " << asym << ")";
    throw InputError(os.str());
  }
  return (full + full.transpose()) / Scalar(2);
}

inline void require_count(Index k, Index order, const char* what) {
  if (k < 1 || k > order) {
    std::ostringstream os;
    os << what << ": requested " << k << " eigenpairs from a matrix of order " << order;
    throw InputError(os.str());
  }
}

}  // namespace detail

/// Flips each column so its largest-magnitude component is positive. The
/// first such component wins when several share the maximum magnitude.
template <typename Derived>
void canonicalize_signs(Eigen::MatrixBase<Derived>& vectors) {
  for (Index j = 0; j < vectors.cols(); ++j) {
    Index arg = 0;
    vectors.col(j).cwiseAbs().maxCoeff(&arg);
    if (vectors(arg, j) < 0) vectors.col(j) = -vectors.col(j);
  }
}

/// The k largest eigenpairs of a symmetric matrix.
///
/// Householder tridiagonalization followed by implicit-shift symmetric QR;
/// deterministic for a given platform. Eigenvectors have unit norm and
/// canonical sign. Repeated eigenvalues yield an arbitrary orthonormal basis
/// of the eigenspace.
template <typename Derived>
EigenPairs<typename Derived::Scalar> sym_eig(const Eigen::MatrixBase<Derived>& m, Index k) {
  using Scalar = typename Derived::Scalar;
  const Matrix<Scalar> sym = detail::symmetrized(m, "sym_eig");
  detail::require_count(k, sym.rows(), "sym_eig");

  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(sym, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    std::ostringstream os;
    os << "sym_eig: QR iteration did not converge within " << 30 * sym.rows()
       << " iterations (order " << sym.rows() << ")";
    throw NumericalError(os.str());
  }

  // Eigen sorts ascending.
  EigenPairs<Scalar> out;
  out.values = solver.eigenvalues().tail(k).reverse();
  out.vectors = solver.eigenvectors().rightCols(k).rowwise().reverse();
  out.vectors.colwise().normalize();
  canonicalize_signs(out.vectors);
  return out;
}

/// Lower Cholesky factor of a symmetric positive definite matrix. Throws
/// NumericalError naming the first non-positive pivot.
template <typename Derived>
Matrix<typename Derived::Scalar> cholesky_lower(const Eigen::MatrixBase<Derived>& b) {
  using Scalar = typename Derived::Scalar;
  const Index n = b.rows();
  Matrix<Scalar> l = Matrix<Scalar>::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    const Scalar pivot = b(j, j) - l.row(j).head(j).squaredNorm();
    if (!(pivot > Scalar(0))) {
      std::ostringstream os;
      os << "cholesky: matrix is not positive definite (pivot " << j << " = " << pivot << ")";
      throw NumericalError(os.str());
    }
    const Scalar diag = std::sqrt(pivot);
    l(j, j) = diag;
    for (Index i = j + 1; i < n; ++i) {
      l(i, j) = (b(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / diag;
    }
  }
  return l;
}

/// The k largest eigenpairs of a·p = λ·b·p with b symmetric positive definite.
///
/// With b = L·Lᵀ the problem becomes C·y = λ·y for C = L⁻¹·a·L⁻ᵀ, and
/// p = L⁻ᵀ·y. Returned vectors are rescaled to unit Euclidean norm and given
/// canonical signs.
template <typename DerivedA, typename DerivedB>
EigenPairs<typename DerivedA::Scalar> gen_eig(const Eigen::MatrixBase<DerivedA>& a,
                                              const Eigen::MatrixBase<DerivedB>& b, Index k) {
  using Scalar = typename DerivedA::Scalar;
  const Matrix<Scalar> sa = detail::symmetrized(a, "gen_eig (a)");
  const Matrix<Scalar> sb = detail::symmetrized(b, "gen_eig (b)");
  if (sa.rows() != sb.rows()) {
    std::ostringstream os;
    os << "gen_eig: order mismatch " << sa.rows() << " vs " << sb.rows();
    throw InputError(os.str());
  }
  detail::require_count(k, sa.rows(), "gen_eig");

  const Matrix<Scalar> l = cholesky_lower(sb);
  const auto lower = l.template triangularView<Eigen::Lower>();
  const Matrix<Scalar> half = lower.solve(sa);                            // L⁻¹a
  const Matrix<Scalar> reduced = lower.solve(half.transpose()).transpose();  // L⁻¹aL⁻ᵀ

  EigenPairs<Scalar> standard = sym_eig((reduced + reduced.transpose()) / Scalar(2), k);
  EigenPairs<Scalar> out;
  out.values = std::move(standard.values);
  out.vectors = l.transpose().template triangularView<Eigen::Upper>().solve(standard.vectors);
  out.vectors.colwise().normalize();
  canonicalize_signs(out.vectors);
  return out;
}

template <typename Derived>
typename Derived::Scalar assignment_cost(const Eigen::MatrixBase<Derived>& cost, const Matching& m) {
  typename Derived::Scalar total(0);
  for (Index i = 0; i < m.size(); ++i) total += cost(i, m.assignment[static_cast<std::size_t>(i)]);
  return total;
}

namespace detail {

// Kuhn's augmenting path over the tight-edge graph, restricted to rows in
// [first_row, n) and columns not marked used.
class TightMatcher {
 public:
  TightMatcher(const std::vector<std::vector<Index>>& adjacency, Index n)
      : adjacency_(adjacency), n_(n) {}

  bool perfect(Index first_row, const std::vector<char>& used) {
    match_col_.assign(static_cast<std::size_t>(n_), -1);
    for (Index i = first_row; i < n_; ++i) {
      visited_.assign(static_cast<std::size_t>(n_), 0);
      if (!augment(i, used)) return false;
    }
    return true;
  }

 private:
  bool augment(Index row, const std::vector<char>& used) {
    for (Index col : adjacency_[static_cast<std::size_t>(row)]) {
      const auto c = static_cast<std::size_t>(col);
      if (used[c] || visited_[c]) continue;
      visited_[c] = 1;
      if (match_col_[c] < 0 || augment(match_col_[c], used)) {
        match_col_[c] = row;
        return true;
      }
    }
    return false;
  }

  const std::vector<std::vector<Index>>& adjacency_;
  Index n_;
  std::vector<Index> match_col_;
  std::vector<char> visited_;
};

}  // namespace detail

/// Minimum-cost perfect matching of a square cost matrix (Hungarian method,
/// O(n³)). Among optimal assignments the lexicographically smallest
/// assignment vector is returned.
template <typename Derived>
Matching solve_assignment(const Eigen::MatrixBase<Derived>& cost) {
  using Scalar = typename Derived::Scalar;
  detail::require_square_finite(cost, "solve_assignment");
  if ((cost.array() < Scalar(0)).any()) throw InputError("solve_assignment: negative cost entries");

  const Index n = cost.rows();
  const Scalar inf = std::numeric_limits<Scalar>::infinity();

  // Shortest augmenting paths with row potentials u and column potentials v,
  // 1-based with a virtual column 0.
  std::vector<Scalar> u(n + 1, 0), v(n + 1, 0), min_slack(n + 1);
  std::vector<Index> row_of(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (Index i = 1; i <= n; ++i) {
    row_of[0] = i;
    Index col0 = 0;
    std::fill(min_slack.begin(), min_slack.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[col0] = 1;
      const Index row = row_of[col0];
      Scalar delta = inf;
      Index next = 0;
      for (Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const Scalar slack = cost(row - 1, j - 1) - u[row] - v[j];
        if (slack < min_slack[j]) {
          min_slack[j] = slack;
          way[j] = col0;
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          next = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[row_of[j]] += delta;
          v[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      col0 = next;
    } while (row_of[col0] != 0);
    do {
      const Index prev = way[col0];
      row_of[col0] = row_of[prev];
      col0 = prev;
    } while (col0 != 0);
  }

  // Every optimal assignment uses only edges with zero reduced cost under the
  // optimal potentials. Pick the lexicographically smallest perfect matching
  // of that tight subgraph.
  const Scalar scale = std::max(Scalar(1), cost.cwiseAbs().maxCoeff());
  const Scalar tol = Scalar(64) * std::numeric_limits<Scalar>::epsilon() * scale * Scalar(n);
  std::vector<std::vector<Index>> tight(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (cost(i, j) - u[i + 1] - v[j + 1] <= tol) tight[static_cast<std::size_t>(i)].push_back(j);
    }
  }

  Matching out;
  out.assignment.assign(static_cast<std::size_t>(n), -1);
  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  detail::TightMatcher matcher(tight, n);
  for (Index i = 0; i < n; ++i) {
    bool placed = false;
    for (Index j : tight[static_cast<std::size_t>(i)]) {
      if (taken[static_cast<std::size_t>(j)]) continue;
      taken[static_cast<std::size_t>(j)] = 1;
      if (matcher.perfect(i + 1, taken)) {
        out.assignment[static_cast<std::size_t>(i)] = j;
        placed = true;
        break;
      }
      taken[static_cast<std::size_t>(j)] = 0;
    }
    if (!placed) {
      // Unreachable with exact potentials; fall back to the Hungarian matching.
      for (Index j = 1; j <= n; ++j) out.assignment[static_cast<std::size_t>(row_of[j] - 1)] = j - 1;
      break;
    }
  }
  return out;
}

}  // namespace spl
