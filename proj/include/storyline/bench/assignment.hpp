#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace storyline {

// Dense rows x cols cost matrix, row-major.
class CostMatrix {
 public:
  // Throws std::invalid_argument when rows or cols is 0 or an entry is not finite.
  CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);
  static CostMatrix FromRows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> entries_;
};

// (row, col) pairs sorted by row; rows distinct, cols distinct,
// size == min(rows, cols).
using AssignmentPairs = std::vector<std::pair<std::size_t, std::size_t>>;

// Minimum-cost assignment (Hungarian method). Among minimum-cost assignments
// the lexicographically smallest row->col mapping wins; for rectangular
// matrices unmatched rows sort after every real column.
AssignmentPairs SolveAssignment(const CostMatrix& cost);

// Sum of the chosen entries, accumulated in row order.
double AssignmentCost(const CostMatrix& cost, const AssignmentPairs& pairs);

}  // namespace storyline
