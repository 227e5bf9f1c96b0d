#pragma once

#include <Eigen/Dense>
#include <vector>

namespace dashf {

// Exact linear assignment on a square cost matrix (Kuhn-Munkres with dual
// potentials, O(n^3)). Returns col[row] for the minimum-cost perfect matching.
std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost);

// Maximum-weight variant of the above.
std::vector<int> max_weight_assignment(const Eigen::MatrixXd& weight);

double assignment_cost(const Eigen::MatrixXd& cost, const std::vector<int>& cols);

}  // namespace dashf
