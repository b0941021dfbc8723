#include "storyline/bench/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace storyline {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Square = std::vector<std::vector<double>>;

// Hungarian method with potentials on an n x n matrix; rows[i] = column.
// Entries may be +inf for forbidden cells as long as a finite assignment exists.
std::vector<int> Hungarian(const Square& a) {
  const int n = static_cast<int>(a.size());
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> rows(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] != 0) rows[p[j] - 1] = j - 1;
  }
  return rows;
}

double RowOrderSum(const Square& a, const std::vector<int>& rows) {
  double s = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) s += a[i][rows[i]];
  return s;
}

}  // namespace

CostMatrix::CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (rows_ == 0 || cols_ == 0) throw std::invalid_argument("cost matrix must be non-empty");
  if (entries_.size() != rows_ * cols_) throw std::invalid_argument("cost matrix entry count mismatch");
  for (double x : entries_) {
    if (!std::isfinite(x)) throw std::invalid_argument("cost matrix has a non-finite entry");
  }
}

CostMatrix CostMatrix::FromRows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || rows.front().empty()) throw std::invalid_argument("cost matrix must be non-empty");
  std::vector<double> flat;
  for (const auto& r : rows) {
    if (r.size() != rows.front().size()) throw std::invalid_argument("cost matrix rows differ in length");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return CostMatrix(rows.size(), rows.front().size(), std::move(flat));
}

AssignmentPairs SolveAssignment(const CostMatrix& cost) {
  const std::size_t n = std::max(cost.rows(), cost.cols());
  // Pad to square with zero-cost dummy rows/columns.
  Square a(n, std::vector<double>(n, 0.0));
  double scale = 0.0;
  for (std::size_t r = 0; r < cost.rows(); ++r) {
    for (std::size_t c = 0; c < cost.cols(); ++c) {
      a[r][c] = cost(r, c);
      scale = std::max(scale, std::abs(cost(r, c)));
    }
  }
  const double best = RowOrderSum(a, Hungarian(a));
  const double tol = 1e-12 * std::max(1.0, scale * static_cast<double>(n));

  // Lexicographic refinement: fix rows in order to the smallest column that
  // still admits an optimal completion.
  Square work = a;
  double fixed = 0.0;
  std::vector<int> chosen(n, -1);
  std::vector<char> col_used(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    bool placed = false;
    for (std::size_t c = 0; c < n && !placed; ++c) {
      if (col_used[c]) continue;
      Square trial = work;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != c) trial[r][j] = kInf;
      }
      for (std::size_t i = r + 1; i < n; ++i) trial[i][c] = kInf;
      const auto rows = Hungarian(trial);
      double total = 0.0;
      bool finite = true;
      for (std::size_t i = r; i < n; ++i) {
        const double x = trial[i][rows[i]];
        if (!std::isfinite(x)) {
          finite = false;
          break;
        }
        total += x;
      }
      if (finite && fixed + total <= best + tol) {
        chosen[r] = static_cast<int>(c);
        col_used[c] = 1;
        fixed += a[r][c];
        for (std::size_t j = 0; j < n; ++j) {
          if (j != c) work[r][j] = kInf;
        }
        for (std::size_t i = r + 1; i < n; ++i) work[i][c] = kInf;
        placed = true;
      }
    }
    if (!placed) throw std::logic_error("assignment refinement failed");
  }

  AssignmentPairs pairs;
  for (std::size_t r = 0; r < cost.rows(); ++r) {
    const auto c = static_cast<std::size_t>(chosen[r]);
    if (c < cost.cols()) pairs.emplace_back(r, c);
  }
  return pairs;
}

double AssignmentCost(const CostMatrix& cost, const AssignmentPairs& pairs) {
  double s = 0.0;
  for (const auto& [r, c] : pairs) s += cost(r, c);
  return s;
}

}  // namespace storyline
