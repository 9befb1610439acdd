#include "setre/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace setre {

CostMatrix CostMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  CostMatrix m;
  m.size = static_cast<int>(rows.size());
  m.entries.reserve(static_cast<std::size_t>(m.size) * m.size);
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != m.size) {
      throw ValidationError("cost matrix must be square: " + std::to_string(rows.size()) +
                            " rows but a row of length " + std::to_string(row.size()));
    }
    m.entries.insert(m.entries.end(), row.begin(), row.end());
  }
  m.validate();
  return m;
}

void CostMatrix::validate() const {
  if (size <= 0) throw ValidationError("cost matrix must be non-empty");
  if (entries.size() != static_cast<std::size_t>(size) * size) {
    throw ValidationError("cost matrix entry count " + std::to_string(entries.size()) +
                          " does not match size " + std::to_string(size));
  }
  for (double v : entries) {
    if (!std::isfinite(v)) throw ValidationError("cost matrix entries must be finite");
  }
}

namespace {

double sum_along(const CostMatrix& costs, const std::vector<int>& permutation) {
  double total = 0.0;
  for (int i = 0; i < costs.size; ++i) total += costs.at(i, permutation[i]);
  return total;
}

}  // namespace

Assignment hungarian(const CostMatrix& costs) {
  costs.validate();
  const int m = costs.size;
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // Shortest-augmenting-path formulation with dual potentials u (rows) and
  // v (columns). Column index 0 is a virtual slot; real columns are 1..m.
  std::vector<double> u(m + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> matched_row(m + 1, 0);  // matched_row[j]: row occupying column j (1-based)
  std::vector<int> way(m + 1, 0);

  for (int i = 1; i <= m; ++i) {
    matched_row[0] = i;
    int j0 = 0;
    std::vector<double> min_reduced(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = matched_row[j0];
      double delta = kInf;
      int j1 = -1;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = costs.at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < min_reduced[j]) {
          min_reduced[j] = cur;
          way[j] = j0;
        }
        if (min_reduced[j] < delta) {
          delta = min_reduced[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[matched_row[j]] += delta;
          v[j] -= delta;
        } else {
          min_reduced[j] -= delta;
        }
      }
      j0 = j1;
    } while (matched_row[j0] != 0);
    // Walk the augmenting path backwards, flipping matches.
    do {
      const int j1 = way[j0];
      matched_row[j0] = matched_row[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Assignment result;
  result.permutation.assign(m, -1);
  for (int j = 1; j <= m; ++j) result.permutation[matched_row[j] - 1] = j - 1;
  result.total_cost = sum_along(costs, result.permutation);
  return result;
}

Assignment brute_force_assignment(const CostMatrix& costs) {
  costs.validate();
  const int m = costs.size;
  if (m > 9) {
    throw ValidationError("brute_force_assignment enumerates m! permutations; m = " +
                          std::to_string(m) + " exceeds the limit of 9");
  }
  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  Assignment best;
  best.permutation = perm;
  best.total_cost = sum_along(costs, perm);
  while (std::next_permutation(perm.begin(), perm.end())) {
    const double total = sum_along(costs, perm);
    if (total < best.total_cost) {
      best.total_cost = total;
      best.permutation = perm;
    }
  }
  return best;
}

}  // namespace setre
