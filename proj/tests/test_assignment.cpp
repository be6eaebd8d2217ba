#include <doctest.h>

#include <random>

#include "emot/assignment.hpp"
#include "support.hpp"

using namespace emot;
using Eigen::MatrixXd;

TEST_CASE("empty side leaves everything unmatched") {
  const auto a = solve(MatrixXd(0, 3));
  CHECK(a.pairs.empty());
  CHECK(a.unmatched_cols == std::vector<int>{0, 1, 2});
  const auto b = solve(MatrixXd(2, 0));
  CHECK(b.unmatched_rows == std::vector<int>{0, 1});
}

TEST_CASE("2x2 fixture picks the diagonal") {
  MatrixXd c(2, 2);
  c << 1, 2, 2, 1;
  const auto a = solve(c);
  CHECK(a.pairs == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}});
  CHECK(total_cost(CostMatrix<double>(c), a) == 2.0);
}

TEST_CASE("forbidden pairs are never returned") {
  MatrixXd c(2, 2);
  c << 5, 0, 0, 5;
  CostMatrix<double> m(c);
  m.forbidden(0, 1) = m.forbidden(1, 0) = true;
  CHECK(solve(m).pairs == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}});

  // Only one admissible pair: the other row stays unmatched rather than taking a gated slot.
  MatrixXd d(2, 2);
  d << 0.1, 0.9, 0.2, 0.9;
  const auto a = solve(gate(d, 0.5));
  CHECK(a.pairs == std::vector<std::pair<int, int>>{{0, 0}});
  CHECK(a.unmatched_rows == std::vector<int>{1});
  CHECK(a.unmatched_cols == std::vector<int>{1});
}

TEST_CASE("gate forbids exactly the entries above threshold") {
  MatrixXd one(1, 1);
  one << 0.3;
  CHECK(solve(gate(one, 0.5)).pairs.size() == 1);
  one << 0.9;
  const auto g = gate(one, 0.5);
  CHECK(g.forbidden(0, 0));
  CHECK(solve(g).pairs.empty());

  MatrixXd c(2, 2);
  c << 0.2, 0.7, 0.5, 0.51;
  const auto m = gate(c, 0.5);
  CHECK(!m.forbidden(0, 0));
  CHECK(m.forbidden(0, 1));
  CHECK(!m.forbidden(1, 0));  // equal to threshold stays admissible
  CHECK(m.forbidden(1, 1));
  CHECK(m.cost == c);
}

TEST_CASE("sentinel is one above the largest admissible cost") {
  MatrixXd c(1, 3);
  c << 2, 7, 100;
  CostMatrix<double> m(c);
  m.forbidden(0, 2) = true;
  CHECK(m.sentinel() == 8.0);
}

TEST_CASE("ties resolve lexicographically") {
  MatrixXd c = MatrixXd::Ones(3, 3);
  const auto a = solve(c);
  CHECK(a.pairs == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}, {2, 2}});
  MatrixXd r = MatrixXd::Zero(2, 4);
  CHECK(solve(r).pairs == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}});
  CHECK(solve(r).unmatched_cols == std::vector<int>{2, 3});
}

TEST_CASE("oracle: random 6x6 matrices match the permutation minimum") {
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> u(0, 10);
  for (int i = 0; i < 30; ++i) {
    MatrixXd c(6, 6);
    for (Eigen::Index k = 0; k < c.size(); ++k) c.data()[k] = u(rng);
    const auto a = solve(c);
    CHECK(a.pairs.size() == 6);
    CHECK(total_cost(CostMatrix<double>(c), a) == doctest::Approx(testing::brute_force_min(c)).epsilon(1e-12));
  }
}

TEST_CASE("oracle: rectangular integer matrices up to 8x8, exact") {
  std::mt19937 rng(8);
  std::uniform_int_distribution<int> dim(1, 8), val(0, 20);
  for (int i = 0; i < 100; ++i) {
    MatrixXd c(dim(rng), dim(rng));
    for (Eigen::Index k = 0; k < c.size(); ++k) c.data()[k] = val(rng);
    const auto a = solve(c);
    CHECK(a.pairs.size() == static_cast<std::size_t>(std::min(c.rows(), c.cols())));
    CHECK(total_cost(CostMatrix<double>(c), a) == testing::brute_force_min(c));
  }
}

TEST_CASE("property: result is a partial matching") {
  std::mt19937 rng(9);
  std::uniform_int_distribution<int> dim(0, 7);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 200; ++i) {
    MatrixXd c(dim(rng), dim(rng));
    for (Eigen::Index k = 0; k < c.size(); ++k) c.data()[k] = u(rng);
    const auto m = gate(c, 0.6);
    const auto a = solve(m);
    std::vector<int> rows(c.rows(), 0), cols(c.cols(), 0);
    for (auto [r, col] : a.pairs) {
      CHECK(!m.forbidden(r, col));
      ++rows[r];
      ++cols[col];
    }
    for (int r : a.unmatched_rows) ++rows[r];
    for (int col : a.unmatched_cols) ++cols[col];
    CHECK(std::all_of(rows.begin(), rows.end(), [](int v) { return v == 1; }));
    CHECK(std::all_of(cols.begin(), cols.end(), [](int v) { return v == 1; }));
  }
}

TEST_CASE("property: row permutation equivariance") {
  std::mt19937 rng(10);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 50; ++i) {
    MatrixXd c(5, 7);
    for (Eigen::Index k = 0; k < c.size(); ++k) c.data()[k] = u(rng);
    std::vector<int> perm{0, 1, 2, 3, 4};
    std::shuffle(perm.begin(), perm.end(), rng);
    MatrixXd p(5, 7);
    for (int r = 0; r < 5; ++r) p.row(r) = c.row(perm[r]);
    const auto a = solve(c), b = solve(p);
    std::vector<std::pair<int, int>> mapped;
    for (auto [r, col] : b.pairs) mapped.emplace_back(perm[r], col);
    std::sort(mapped.begin(), mapped.end());
    CHECK(mapped == a.pairs);
  }
}

TEST_CASE("property: constant shift keeps the matching") {
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 50; ++i) {
    MatrixXd c(4, 6);
    for (Eigen::Index k = 0; k < c.size(); ++k) c.data()[k] = u(rng);
    const auto a = solve(c);
    const auto b = solve(MatrixXd(c.array() + 3.0));
    CHECK(a.pairs == b.pairs);
    CHECK(total_cost(CostMatrix<double>(MatrixXd(c.array() + 3.0)), b) ==
          doctest::Approx(total_cost(CostMatrix<double>(c), a) + 3.0 * 4));
  }
}

TEST_CASE("float scalar instantiation") {
  Eigen::MatrixXf c(2, 2);
  c << 1, 2, 2, 1;
  CHECK(solve(c).pairs.size() == 2);
}
