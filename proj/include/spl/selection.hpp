#pragma once

// Class-wise progressive selection of confident pseudo-labels.

#include <spl/data_model.hpp>
#include <spl/types.hpp>

#include <algorithm>
#include <sstream>
#include <vector>

namespace spl {

/// floor(k·n_c / T), never more than n_c.
inline Index class_quota(Index class_size, int k, int total_iterations) {
  return std::min(class_size, class_size * k / total_iterations);
}

/// Pseudo-labels admitted to projection learning at iteration k of T.
///
/// Progressive: per class, the class_quota() most confident samples
/// (confidence descending, index ascending on ties). All: every entry.
/// None: nothing. The result is ordered by class, then by rank.
template <typename Scalar>
PseudoLabelSet<Scalar> select(const PseudoLabelSet<Scalar>& labels, int k, int total_iterations,
                              SelectionMode mode) {
  if (total_iterations < 1 || k < 1 || k > total_iterations) {
    std::ostringstream os;
    os << "select: iteration " << k << " outside [1, " << total_iterations << "]";
    throw ConfigError(os.str());
  }
  if (mode == SelectionMode::None) return {};

  ClassId max_label = -1;
  for (const auto& e : labels) max_label = std::max(max_label, e.label);
  std::vector<PseudoLabelSet<Scalar>> by_class(static_cast<std::size_t>(max_label + 1));
  for (const auto& e : labels) by_class[static_cast<std::size_t>(e.label)].push_back(e);

  PseudoLabelSet<Scalar> out;
  for (auto& members : by_class) {
    std::sort(members.begin(), members.end(), [](const PseudoLabel<Scalar>& a, const PseudoLabel<Scalar>& b) {
      if (a.confidence != b.confidence) return a.confidence > b.confidence;
      return a.index < b.index;
    });
    const auto n_c = static_cast<Index>(members.size());
    const Index take = mode == SelectionMode::All ? n_c : class_quota(n_c, k, total_iterations);
    out.insert(out.end(), members.begin(), members.begin() + take);
  }
  return out;
}

}  // namespace spl
