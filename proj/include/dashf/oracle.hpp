#pragma once

#include <Eigen/Dense>
#include <functional>

#include "dashf/model.hpp"
#include "dashf/resources.hpp"

// Desk-scale verification: exhaustive association search, grid search over
// the resource variables, and finite differences. Objectives here are
// recomputed from the cost formulas from scratch, independent of the solver
// code paths they check.
namespace dashf::oracle {

struct AssociationSearchResult {
  Eigen::MatrixXd assoc;
  Eigen::VectorXd split;
  double delay_bound = 0.0;
  double objective = 0.0;     // minimization form, matches the part-1 objective
  bool found = false;
  long enumerated = 0;
};

// Enumerates all M^N cap-feasible associations against the fixed resources in
// `res`, refitting the split and delay bound exactly for each. Refuses
// instances with M^N above `max_enumeration`.
AssociationSearchResult brute_force_association(const Scenario& scn, const Allocation& res,
                                                double y, long max_enumeration = 100000);

// Part-1 objective (minimization form) of a concrete point, recomputed from
// the cost formulas.
double part1_objective(const Scenario& scn, const Allocation& res, double y,
                       const Eigen::MatrixXd& assoc, const Eigen::VectorXd& split,
                       double delay_bound);

// Axes with steps >= 2 are swept over (0, cap]; the rest stay at the base
// point. The delay bound is set to the realized maximum delay per point.
struct GridSpec {
  int bandwidth_steps = 0;
  int user_power_steps = 0;
  int server_power_steps = 0;
  int user_speed_steps = 0;
  int server_speed_steps = 0;
  long max_points = 1000000;
};

struct GridSearchResult {
  resources::ResourceVars best;
  double objective = -1e300;
  bool found = false;
  long evaluated = 0;
};

GridSearchResult grid_resource_search(const Scenario& scn, const Eigen::MatrixXd& assoc,
                                      const Eigen::VectorXd& split, double y,
                                      const resources::ResourceVars& base, const GridSpec& grid);

// Part-2 objective of a concrete resource point, recomputed from scratch.
double part2_objective(const Scenario& scn, const Eigen::MatrixXd& assoc,
                       const Eigen::VectorXd& split, double y,
                       const resources::ResourceVars& vars);

// Central differences with per-coordinate relative step.
Eigen::VectorXd finite_diff_grad(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& point, double h_rel = 1e-6);

}  // namespace dashf::oracle
