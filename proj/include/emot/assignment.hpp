#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace emot {

/// Rows are tracks, columns detections. Forbidden entries never appear in a solution.
template <typename Scalar = double>
struct CostMatrix {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

  Matrix cost;
  Mask forbidden;

  CostMatrix() = default;
  explicit CostMatrix(Matrix c) : cost(std::move(c)), forbidden(Mask::Constant(cost.rows(), cost.cols(), false)) {}
  CostMatrix(Matrix c, Mask f) : cost(std::move(c)), forbidden(std::move(f)) {}

  Eigen::Index rows() const { return cost.rows(); }
  Eigen::Index cols() const { return cost.cols(); }
  bool admissible(Eigen::Index r, Eigen::Index c) const { return !forbidden(r, c); }

  /// One more than the largest admissible cost; stands in for every forbidden or padded slot.
  Scalar sentinel() const {
    Scalar hi = std::numeric_limits<Scalar>::lowest();
    for (Eigen::Index r = 0; r < rows(); ++r)
      for (Eigen::Index c = 0; c < cols(); ++c)
        if (!forbidden(r, c)) hi = std::max(hi, cost(r, c));
    return hi == std::numeric_limits<Scalar>::lowest() ? Scalar(1) : hi + Scalar(1);
  }
};

struct Assignment {
  std::vector<std::pair<int, int>> pairs;  // (row, col), ascending by row
  std::vector<int> unmatched_rows;
  std::vector<int> unmatched_cols;
};

/// Marks every entry strictly above `threshold` as forbidden.
template <typename Derived>
CostMatrix<typename Derived::Scalar> gate(const Eigen::MatrixBase<Derived>& costs,
                                          typename Derived::Scalar threshold) {
  using Scalar = typename Derived::Scalar;
  CostMatrix<Scalar> m{costs.eval()};
  m.forbidden = (m.cost.array() > threshold);
  return m;
}

namespace detail {

/// Minimum-cost perfect matching on a square matrix; returns row -> col plus dual potentials.
template <typename Scalar>
void hungarian_square(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& a,
                      std::vector<int>& row_to_col, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& u_out,
                      Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& v_out) {
  const int n = static_cast<int>(a.rows());
  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  // 1-based potentials; column 0 is the virtual root of each augmenting search.
  std::vector<Scalar> u(n + 1, 0), v(n + 1, 0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      Scalar delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const Scalar cur = a(i0 - 1, j - 1) - u[i0] - v[j];
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
    } while (j0);
  }
  row_to_col.assign(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j]) row_to_col[p[j] - 1] = j - 1;
  u_out.resize(n);
  v_out.resize(n);
  for (int k = 0; k < n; ++k) {
    u_out(k) = u[k + 1];
    v_out(k) = v[k + 1];
  }
}

/// Rewrites an optimal permutation into the lexicographically smallest optimal one by
/// rotating along alternating cycles of zero reduced cost.
template <typename Scalar>
void lexicographic_canonical(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& a,
                             const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& u,
                             const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& v,
                             std::vector<int>& row_to_col) {
  const int n = static_cast<int>(a.rows());
  const Scalar tol = Scalar(1e-9) * std::max<Scalar>(Scalar(1), a.cwiseAbs().maxCoeff()) * n;
  auto tight = [&](int r, int c) { return std::abs(a(r, c) - u(r) - v(c)) <= tol; };

  std::vector<int> col_to_row(n);
  for (int r = 0; r < n; ++r) col_to_row[row_to_col[r]] = r;
  std::vector<char> locked_col(n, 0);
  std::vector<int> parent(n);  // row -> column it would move to
  std::vector<char> reached_row(n), reached_col(n);
  std::vector<int> queue;

  for (int i = 0; i < n; ++i) {
    const int target = row_to_col[i];
    std::fill(reached_row.begin(), reached_row.end(), 0);
    std::fill(reached_col.begin(), reached_col.end(), 0);
    queue.assign(1, target);
    reached_col[target] = 1;
    // Reverse search: rows that can hand their column over and still end at `target`.
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const int col = queue[head];
      for (int r = i + 1; r < n; ++r) {
        if (reached_row[r] || !tight(r, col) || row_to_col[r] == col) continue;
        reached_row[r] = 1;
        parent[r] = col;
        const int freed = row_to_col[r];
        if (!reached_col[freed] && !locked_col[freed]) {
          reached_col[freed] = 1;
          queue.push_back(freed);
        }
      }
    }
    int best = target;
    for (int j = 0; j < target; ++j) {
      if (locked_col[j] || !tight(i, j)) continue;
      const int r = col_to_row[j];
      if (r > i && reached_row[r]) {
        best = j;
        break;
      }
    }
    if (best != target) {
      int r = col_to_row[best];
      row_to_col[i] = best;
      col_to_row[best] = i;
      while (true) {
        const int next = parent[r];
        const int prev_owner = col_to_row[next];
        row_to_col[r] = next;
        col_to_row[next] = r;
        if (next == target) break;
        r = prev_owner;
      }
    }
    locked_col[row_to_col[i]] = 1;
  }
}

}  // namespace detail

/// Minimum-cost assignment. Rectangular inputs are padded to square with the per-matrix
/// sentinel, so every row or column left unmatched (or matched only through a forbidden
/// slot) costs `sentinel()`. Among equal-cost optima the lexicographically smallest
/// (row, col) sequence is returned.
template <typename Scalar>
Assignment solve(const CostMatrix<Scalar>& m) {
  Assignment out;
  const int rows = static_cast<int>(m.rows());
  const int cols = static_cast<int>(m.cols());
  const int n = std::max(rows, cols);
  auto all_unmatched = [&] {
    for (int r = 0; r < rows; ++r) out.unmatched_rows.push_back(r);
    for (int c = 0; c < cols; ++c) out.unmatched_cols.push_back(c);
    return out;
  };
  if (rows == 0 || cols == 0 || (m.forbidden.all())) return all_unmatched();

  const Scalar sentinel = m.sentinel();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, sentinel);
  a.topLeftCorner(rows, cols) = m.forbidden.select(sentinel, m.cost);

  std::vector<int> row_to_col;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> u, v;
  detail::hungarian_square(a, row_to_col, u, v);
  detail::lexicographic_canonical(a, u, v, row_to_col);

  std::vector<char> col_used(cols, 0);
  for (int r = 0; r < rows; ++r) {
    const int c = row_to_col[r];
    if (c < cols && !m.forbidden(r, c)) {
      out.pairs.emplace_back(r, c);
      col_used[c] = 1;
    } else {
      out.unmatched_rows.push_back(r);
    }
  }
  for (int c = 0; c < cols; ++c)
    if (!col_used[c]) out.unmatched_cols.push_back(c);
  return out;
}

template <typename Derived>
Assignment solve(const Eigen::MatrixBase<Derived>& costs) {
  return solve(CostMatrix<typename Derived::Scalar>{costs.eval()});
}

/// Sum of the matched entries.
template <typename Scalar>
Scalar total_cost(const CostMatrix<Scalar>& m, const Assignment& a) {
  Scalar total{0};
  for (auto [r, c] : a.pairs) total += m.cost(r, c);
  return total;
}

}  // namespace emot
