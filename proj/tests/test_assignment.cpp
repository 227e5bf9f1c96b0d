#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <vector>

#include "dashf/assignment.hpp"
#include "dashf/scenario.hpp"

using namespace dashf;

namespace {

double best_permutation_cost(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  do {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += cost(i, perm[i]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_CASE("assignment on small known matrices") {
  Eigen::MatrixXd c(3, 3);
  c << 4, 1, 3,
       2, 0, 5,
       3, 2, 2;
  const auto cols = min_cost_assignment(c);
  CHECK(assignment_cost(c, cols) == doctest::Approx(5.0));
  // columns must form a permutation
  std::vector<int> seen(3, 0);
  for (int j : cols) ++seen[j];
  for (int s : seen) CHECK(s == 1);
}

TEST_CASE("assignment equals exhaustive permutation search, exactly") {
  // dyadic rational entries keep every partial sum exact in binary
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform01() * 6);  // 2..7
    Eigen::MatrixXd c(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) c(i, j) = static_cast<double>(rng.uniform_int(1024)) / 64.0;
    const auto cols = min_cost_assignment(c);
    CHECK(assignment_cost(c, cols) == best_permutation_cost(c));
  }
}

TEST_CASE("max weight assignment picks the heavy diagonal") {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(4, 4);
  for (int i = 0; i < 4; ++i) w(i, i) = 10.0 + i;
  w(0, 1) = 9.0;
  const auto cols = max_weight_assignment(w);
  for (int i = 0; i < 4; ++i) CHECK(cols[i] == i);
}

TEST_CASE("assignment rejects non-square input") {
  CHECK_THROWS_AS(min_cost_assignment(Eigen::MatrixXd::Zero(2, 3)), std::invalid_argument);
}
