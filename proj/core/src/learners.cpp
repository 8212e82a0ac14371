#include "tadell/learners.hpp"

#include <cmath>

namespace tadell {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double logistic_loss(const Matrix& X, const Vector& y, double reg,
                     const Vector& theta) {
  const Index n = X.rows();
  const Vector margins = y.cwiseProduct(X * theta);
  double sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double m = margins(i);
    // stable log(1 + exp(-m))
    sum += m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
  }
  return sum / static_cast<double>(n) + reg * theta.squaredNorm();
}

}  // namespace

SingleTaskSolution fit_linear_regression(const Matrix& X, const Vector& y,
                                         double reg) {
  const Index n = X.rows();
  const Index d = X.cols();
  require(n >= 1, "fit_linear_regression: need at least one sample");
  require(y.size() == n, "fit_linear_regression: label count");
  require_finite(X, "fit_linear_regression: X");
  require_finite(y, "fit_linear_regression: y");
  if (reg < 0.0) throw BadRange("fit_linear_regression: reg must be >= 0");

  const Matrix xtx = X.transpose() * X;
  const Vector xty = X.transpose() * y;
  Matrix system = xtx;
  system.diagonal().array() += static_cast<double>(n) * reg;

  Vector alpha;
  if (reg == 0.0) {
    Eigen::FullPivLU<Matrix> lu(system);
    if (!lu.isInvertible())
      throw SingularSystem("fit_linear_regression: X'X singular with reg = 0");
    alpha = lu.solve(xty);
  } else {
    alpha = Eigen::LLT<Matrix>(system).solve(xty);
  }

  SingleTaskSolution sol;
  sol.alpha = alpha;
  sol.gamma = (2.0 / static_cast<double>(n)) * xtx;
  sol.gamma.diagonal().array() += 2.0 * reg;
  sol.gamma = ((sol.gamma + sol.gamma.transpose()) * 0.5).eval();
  sol.loss_at_alpha = (y - X * alpha).squaredNorm() / static_cast<double>(n) +
                      reg * alpha.squaredNorm();
  (void)d;
  return sol;
}

SingleTaskSolution fit_logistic_regression(const Matrix& X, const Vector& y,
                                           double reg,
                                           const LogisticOptions& opts) {
  const Index n = X.rows();
  const Index d = X.cols();
  require(n >= 1, "fit_logistic_regression: need at least one sample");
  require(y.size() == n, "fit_logistic_regression: label count");
  require_finite(X, "fit_logistic_regression: X");
  for (Index i = 0; i < n; ++i)
    require(y(i) == 1.0 || y(i) == -1.0,
            "fit_logistic_regression: labels must be +1/-1");
  if (reg <= 0.0)
    throw BadRange("fit_logistic_regression: reg must be positive");

  Vector theta = Vector::Zero(d);
  double loss = logistic_loss(X, y, reg, theta);
  Vector grad(d);
  bool converged = false;
  int iter = 0;

  for (; iter < opts.max_iters; ++iter) {
    const Vector scores = X * theta;
    grad = 2.0 * reg * theta;
    Matrix hess = Matrix::Zero(d, d);
    for (Index i = 0; i < n; ++i) {
      const double p = sigmoid(scores(i));
      const double label01 = y(i) > 0.0 ? 1.0 : 0.0;
      grad += (p - label01) * X.row(i).transpose() / static_cast<double>(n);
      hess += p * (1.0 - p) * (X.row(i).transpose() * X.row(i)) /
              static_cast<double>(n);
    }
    hess.diagonal().array() += 2.0 * reg;

    if (grad.norm() <= opts.tol) {
      converged = true;
      break;
    }
    const Vector dir = Eigen::LLT<Matrix>(hess).solve(grad);
    double t = 1.0;
    const double slope = grad.dot(dir);
    for (int bt = 0; bt < 50; ++bt) {
      const Vector candidate = theta - t * dir;
      const double cand_loss = logistic_loss(X, y, reg, candidate);
      if (cand_loss <= loss - 1e-4 * t * slope) {
        theta = candidate;
        loss = cand_loss;
        break;
      }
      t *= 0.5;
    }
  }

  SingleTaskSolution sol;
  sol.alpha = theta;
  const Vector scores = X * theta;
  Matrix hess = Matrix::Zero(d, d);
  for (Index i = 0; i < n; ++i) {
    const double p = sigmoid(scores(i));
    hess += p * (1.0 - p) * (X.row(i).transpose() * X.row(i)) /
            static_cast<double>(n);
  }
  hess.diagonal().array() += 2.0 * reg;
  sol.gamma = ((hess + hess.transpose()) * 0.5).eval();
  sol.loss_at_alpha = loss;
  sol.converged = converged;
  sol.grad_norm = grad.norm();
  return sol;
}

double trajectory_return(const Trajectory& traj) {
  require(traj.horizon >= 1, "trajectory_return: horizon must be >= 1");
  return traj.rewards.sum() / static_cast<double>(traj.horizon);
}

Trajectory rollout(const TaskSpec& task, const GaussianLinearPolicy& policy,
                   int horizon, Rng& rng) {
  if (horizon < 1) throw BadRange("rollout: horizon must be >= 1");
  const Index dim = state_dim(task.domain);
  require(policy.theta.size() == dim, "rollout: policy dimension");

  Trajectory traj;
  traj.horizon = horizon;
  traj.states = Matrix(horizon, dim);
  traj.actions = Vector(horizon);
  traj.rewards = Vector(horizon);

  Vector state = initial_state(task, rng);
  int steps = 0;
  for (int h = 0; h < horizon; ++h) {
    const double action = policy.theta.dot(state) + policy.sigma * rng.normal();
    traj.states.row(h) = state.transpose();
    traj.actions(h) = action;
    ++steps;
    try {
      StepResult sr = step(task.params, state, action, kDefaultDt, task.goal);
      traj.rewards(h) = sr.reward;
      state = std::move(sr.state);
    } catch (const NonFinite&) {
      // diverged: record the floor reward and end the episode early
      traj.rewards(h) = -kStateBlowupLimit;
      break;
    }
  }
  if (steps < horizon) {
    traj.states.conservativeResize(steps, dim);
    traj.actions.conservativeResize(steps);
    traj.rewards.conservativeResize(steps);
  }
  return traj;
}

namespace {

struct Batch {
  std::vector<Trajectory> trajectories;
  Vector returns;
  double mean_return = 0.0;
};

Batch sample_batch(const TaskSpec& task, const GaussianLinearPolicy& policy,
                   int n_traj, int horizon, Rng& rng) {
  Batch batch;
  batch.trajectories.reserve(n_traj);
  batch.returns = Vector(n_traj);
  for (int i = 0; i < n_traj; ++i) {
    batch.trajectories.push_back(rollout(task, policy, horizon, rng));
    batch.returns(i) = trajectory_return(batch.trajectories.back());
  }
  batch.mean_return = batch.returns.mean();
  return batch;
}

// Min-max normalization of the batch returns onto [0,1]; a flat batch maps
// to all-ones so the curvature estimate stays nonzero.
Vector normalized_returns(const Vector& returns) {
  const double lo = returns.minCoeff();
  const double hi = returns.maxCoeff();
  if (hi - lo < 1e-12) return Vector::Ones(returns.size());
  return (returns.array() - lo) / (hi - lo);
}

}  // namespace

PgRunResult pg_single_task(const TaskSpec& task,
                           const GaussianLinearPolicy& policy0,
                           const PgOptions& opts, Rng& rng) {
  if (opts.iters < 1 || opts.n_traj < 1 || opts.horizon < 1)
    throw BadRange("pg_single_task: iters, n_traj, horizon must be >= 1");
  const Index dim = state_dim(task.domain);
  require(policy0.theta.size() == dim, "pg_single_task: policy dimension");

  GaussianLinearPolicy policy = policy0;
  const double inv_var = 1.0 / (policy.sigma * policy.sigma);
  PgRunResult result;
  result.returns.reserve(opts.iters);

  for (int iter = 0; iter < opts.iters; ++iter) {
    const Batch batch =
        sample_batch(task, policy, opts.n_traj, opts.horizon, rng);
    result.returns.push_back(batch.mean_return);

    // gradient weights are the normalized returns minus their batch mean; the
    // baseline leaves the estimate unbiased and cuts its variance
    const Vector weights = normalized_returns(batch.returns);
    const double baseline = weights.mean();
    Vector grad = Vector::Zero(dim);
    for (int i = 0; i < opts.n_traj; ++i) {
      const Trajectory& traj = batch.trajectories[i];
      Vector score = Vector::Zero(dim);
      for (Index h = 0; h < traj.states.rows(); ++h) {
        const double noise =
            traj.actions(h) - policy.theta.dot(traj.states.row(h));
        score += noise * inv_var * traj.states.row(h).transpose();
      }
      grad += (weights(i) - baseline) * score;
    }
    grad /= static_cast<double>(opts.n_traj);
    // step along the unit ascent direction; step_size is a parameter-space
    // length and the raw estimate's scale (which varies with horizon and
    // sigma) does not leak into the step
    const double grad_norm = grad.norm();
    if (grad_norm > 1e-12) grad /= grad_norm;

    // Step acceptance uses common random numbers: the candidate and the
    // current policy are rolled out under the same seed, so the comparison
    // reflects the parameter change rather than sampling noise.
    const std::uint64_t probe_seed = rng.next_u64();
    Rng ref_rng(probe_seed);
    const Batch reference =
        sample_batch(task, policy, opts.n_traj, opts.horizon, ref_rng);
    double eta = opts.step_size;
    for (int bt = 0; bt <= opts.max_backtracks; ++bt) {
      GaussianLinearPolicy candidate{policy.theta + eta * grad, policy.sigma};
      if (candidate.theta.cwiseAbs().maxCoeff() > 1e6)
        throw DivergedPolicy("pg_single_task: policy parameters exceeded 1e6");
      Rng probe_rng(probe_seed);
      const Batch probe =
          sample_batch(task, candidate, opts.n_traj, opts.horizon, probe_rng);
      if (probe.mean_return >= reference.mean_return) {
        policy = candidate;
        break;
      }
      eta *= 0.5;
      // all backtracks exhausted: keep the current policy
    }
  }

  // curvature of the reward-weighted trajectory log-likelihood at the final
  // policy, estimated from a fresh batch
  const Batch final_batch =
      sample_batch(task, policy, opts.n_traj, opts.horizon, rng);
  const Vector weights = normalized_returns(final_batch.returns);
  Matrix gamma = Matrix::Zero(dim, dim);
  for (int i = 0; i < opts.n_traj; ++i) {
    const Trajectory& traj = final_batch.trajectories[i];
    Matrix outer = Matrix::Zero(dim, dim);
    for (Index h = 0; h < traj.states.rows(); ++h)
      outer += traj.states.row(h).transpose() * traj.states.row(h);
    gamma += weights(i) * outer;
  }
  gamma *= inv_var / static_cast<double>(opts.n_traj);
  gamma.diagonal().array() += opts.gamma_jitter;

  result.solution.alpha = policy.theta;
  result.solution.gamma = ((gamma + gamma.transpose()) * 0.5).eval();
  result.solution.loss_at_alpha = -final_batch.mean_return;
  return result;
}

double evaluate_policy(const Vector& theta, const TaskSpec& task, int n_traj,
                       int horizon, double sigma, Rng& rng) {
  if (n_traj < 1) throw BadRange("evaluate_policy: n_traj must be >= 1");
  const GaussianLinearPolicy policy{theta, sigma};
  double sum = 0.0;
  for (int i = 0; i < n_traj; ++i)
    sum += trajectory_return(rollout(task, policy, horizon, rng));
  return sum / static_cast<double>(n_traj);
}

}  // namespace tadell
