#pragma once

#include <vector>

#include "tadell/environments.hpp"
#include "tadell/rng.hpp"
#include "tadell/types.hpp"

namespace tadell {

// Point estimate of a task's model and the curvature of its loss there.
// Iterative learners report convergence via the flag and still return the
// best iterate found.
struct SingleTaskSolution {
  Vector alpha;
  Matrix gamma;
  double loss_at_alpha = 0.0;
  bool converged = true;
  double grad_norm = 0.0;
};

// alpha = argmin (1/n)||y - X theta||^2 + reg ||theta||^2, closed form.
// gamma is the exact Hessian (2/n) X'X + 2 reg I.
SingleTaskSolution fit_linear_regression(const Matrix& X, const Vector& y,
                                         double reg);

struct LogisticOptions {
  double tol = 1e-8;   // gradient norm
  int max_iters = 200;
};

// Regularized logistic regression with labels in {+1, -1}, damped Newton.
// gamma = (1/n) sum sigma_i (1 - sigma_i) x_i x_i' + 2 reg I at alpha.
SingleTaskSolution fit_logistic_regression(const Matrix& X, const Vector& y,
                                           double reg,
                                           const LogisticOptions& opts = {});

// Linear-Gaussian controller a = theta' x + eps, eps ~ N(0, sigma^2).
struct GaussianLinearPolicy {
  Vector theta;
  double sigma = 0.3;
};

struct Trajectory {
  Matrix states;   // H x state_dim (rows may be fewer if the episode diverged)
  Vector actions;
  Vector rewards;
  int horizon = 0;  // requested horizon H; the return divides by this
};

// Mean reward over the requested horizon, (1/H) sum r_h.
double trajectory_return(const Trajectory& traj);

Trajectory rollout(const TaskSpec& task, const GaussianLinearPolicy& policy,
                   int horizon, Rng& rng);

struct PgOptions {
  int iters = 30;
  int n_traj = 20;
  int horizon = 100;
  double step_size = 0.2;
  double sigma = 0.3;
  double gamma_jitter = 1e-6;
  int max_backtracks = 8;
};

struct PgRunResult {
  SingleTaskSolution solution;
  std::vector<double> returns;  // batch mean return at the start of each iteration
};

// Episodic REINFORCE on a Gaussian linear policy. Batch returns are min-max
// normalized to [0,1] before weighting, which keeps the resulting curvature
// estimate positive semi-definite. Steps that do not improve the batch mean
// return are retried with a halved step size.
PgRunResult pg_single_task(const TaskSpec& task,
                           const GaussianLinearPolicy& policy0,
                           const PgOptions& opts, Rng& rng);

// Mean of (1/H) sum r_h over n_traj rollouts under the stochastic policy.
double evaluate_policy(const Vector& theta, const TaskSpec& task, int n_traj,
                       int horizon, double sigma, Rng& rng);

}  // namespace tadell
