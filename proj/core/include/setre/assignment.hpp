#pragma once

#include <vector>

#include "setre/errors.hpp"

namespace setre {

/// Square matrix of pairwise assignment costs; entry (i, j) is the cost of
/// pairing row i with column j. All entries must be finite; negative costs
/// are allowed.
struct CostMatrix {
  int size = 0;
  std::vector<double> entries;  // row-major, size*size

  static CostMatrix from_rows(const std::vector<std::vector<double>>& rows);

  double at(int row, int col) const {
    return entries[static_cast<std::size_t>(row) * size + col];
  }
  double& at(int row, int col) { return entries[static_cast<std::size_t>(row) * size + col]; }

  void validate() const;
};

/// permutation[i] is the column assigned to row i; total_cost is the sum of
/// the selected entries.
struct Assignment {
  std::vector<int> permutation;
  double total_cost = 0.0;
};

/// Exact minimum-cost assignment in O(m^3) by shortest augmenting paths with
/// dual potentials. Rows are processed in order and equal-cost alternatives
/// resolve by the scan order, so the result is deterministic; among tied
/// optima it prefers earlier columns but only the total cost is canonical.
Assignment hungarian(const CostMatrix& costs);

/// Exhaustive oracle: enumerates all m! permutations (m <= 9) in
/// lexicographic order and keeps the first minimum, i.e. the
/// lexicographically smallest optimal permutation.
Assignment brute_force_assignment(const CostMatrix& costs);

}  // namespace setre
