#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "oracles.hpp"
#include "tadell/learners.hpp"

using namespace tadell;

namespace {

void check_curvature_contract(const Matrix& gamma) {
  CHECK((gamma - gamma.transpose()).norm() <=
        1e-10 * std::max(1.0, gamma.norm()));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gamma);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-8);
}

double logistic_objective(const Matrix& x, const Vector& y, double reg,
                          const Vector& theta) {
  double sum = 0.0;
  for (Index i = 0; i < x.rows(); ++i)
    sum += std::log1p(std::exp(-y(i) * x.row(i).dot(theta)));
  return sum / static_cast<double>(x.rows()) + reg * theta.squaredNorm();
}

Vector finite_difference_gradient(const Matrix& x, const Vector& y, double reg,
                                  const Vector& theta, double h) {
  Vector grad(theta.size());
  for (Index j = 0; j < theta.size(); ++j) {
    Vector up = theta, down = theta;
    up(j) += h;
    down(j) -= h;
    grad(j) = (logistic_objective(x, y, reg, up) -
               logistic_objective(x, y, reg, down)) /
              (2.0 * h);
  }
  return grad;
}

}  // namespace

TEST_CASE("linear regression closed-form examples") {
  Matrix x(2, 1);
  x << 1.0, 2.0;
  Vector y(2);
  y << 2.0, 4.0;
  const SingleTaskSolution sol = fit_linear_regression(x, y, 0.0);
  CHECK(sol.alpha(0) == doctest::Approx(2.0));
  CHECK(sol.gamma(0, 0) == doctest::Approx(5.0));
  check_curvature_contract(sol.gamma);

  const SingleTaskSolution zero = fit_linear_regression(x, Vector::Zero(2), 0.5);
  CHECK(zero.alpha.norm() <= 1e-12);
}

TEST_CASE("linear regression matches the normal equations on random data") {
  Rng rng(211);
  const Matrix x = rng.normal_matrix(20, 3);
  const Vector y = rng.normal_vector(20);
  const double reg = 0.1;
  const SingleTaskSolution sol = fit_linear_regression(x, y, reg);

  Matrix system = x.transpose() * x;
  system.diagonal().array() += 20.0 * reg;
  const Vector exact = system.inverse() * (x.transpose() * y);
  CHECK((sol.alpha - exact).norm() <= 1e-10 * exact.norm());
  check_curvature_contract(sol.gamma);
}

TEST_CASE("unregularized regression on rank-deficient inputs fails loudly") {
  Matrix x(2, 2);
  x << 1.0, 1.0, 2.0, 2.0;  // duplicated column
  Vector y(2);
  y << 1.0, 2.0;
  CHECK_THROWS_AS(fit_linear_regression(x, y, 0.0), SingularSystem);
  CHECK_NOTHROW(fit_linear_regression(x, y, 0.01));
}

TEST_CASE("logistic regression near-zero solution has the stated curvature") {
  Matrix x(2, 1);
  x << 2.0, -2.0;
  Vector y(2);
  y << 1.0, -1.0;
  const double reg = 100.0;
  const SingleTaskSolution sol = fit_logistic_regression(x, y, reg);
  CHECK(std::abs(sol.alpha(0)) < 0.01);
  // sigma(0)(1 - sigma(0)) = 1/4: gamma -> (1/4)(1/n) sum x^2 + 2 reg = 1 + 2 reg
  CHECK(sol.gamma(0, 0) == doctest::Approx(1.0 + 2.0 * reg).epsilon(1e-3));
  check_curvature_contract(sol.gamma);
}

TEST_CASE("logistic regression is symmetric under label flips") {
  Rng rng(223);
  const Matrix x = rng.normal_matrix(15, 3);
  Vector y(15);
  for (Index i = 0; i < 15; ++i) y(i) = rng.uniform() < 0.5 ? 1.0 : -1.0;
  const SingleTaskSolution pos = fit_logistic_regression(x, y, 0.05);
  const SingleTaskSolution neg = fit_logistic_regression(x, -y, 0.05);
  CHECK((pos.alpha + neg.alpha).norm() <= 1e-10 * std::max(1.0, pos.alpha.norm()));
}

TEST_CASE("logistic gradient vanishes at the solution (finite differences)") {
  Rng rng(227);
  const Matrix x = rng.normal_matrix(30, 4);
  Vector y(30);
  const Vector truth = rng.normal_vector(4);
  for (Index i = 0; i < 30; ++i) y(i) = x.row(i).dot(truth) > 0.0 ? 1.0 : -1.0;
  const double reg = 0.05;
  const SingleTaskSolution sol = fit_logistic_regression(x, y, reg);
  CHECK(sol.converged);

  // calibration: analytic and numeric gradients agree away from the optimum
  const Vector probe = 0.3 * truth;
  const Vector fd_probe = finite_difference_gradient(x, y, reg, probe, 1e-5);
  Vector analytic = 2.0 * reg * probe;
  for (Index i = 0; i < 30; ++i) {
    const double m = y(i) * x.row(i).dot(probe);
    analytic -= y(i) / (1.0 + std::exp(m)) * x.row(i).transpose() / 30.0;
  }
  CHECK((fd_probe - analytic).norm() <= 1e-4 * analytic.norm());

  const Vector fd = finite_difference_gradient(x, y, reg, sol.alpha, 1e-5);
  CHECK(fd.norm() <= 1e-6);
  check_curvature_contract(sol.gamma);
}

namespace {

TaskSpec action_cost_fixture() {
  TaskSpec task;
  task.id = 0;
  task.domain = Domain::sm;  // 2-dim state box
  task.params = NullSystemParams{Vector(), true};
  task.goal = Vector::Zero(2);
  return task;
}

TaskSpec frozen_state_fixture(const Vector& state) {
  TaskSpec task;
  task.id = 0;
  task.domain = Domain::sm;
  NullSystemParams params;
  params.fixed_state = state;
  params.action_cost = false;
  task.params = params;
  task.goal = Vector::Zero(state.size());
  return task;
}

TaskSpec sm_task(double mass, double spring, double damping) {
  TaskSpec task;
  task.id = 0;
  task.domain = Domain::sm;
  task.params = SmParams{mass, spring, damping};
  task.goal = Vector::Zero(2);
  return task;
}

}  // namespace

TEST_CASE("policy gradient shrinks theta on a pure action-cost task") {
  const TaskSpec task = action_cost_fixture();
  GaussianLinearPolicy policy0;
  policy0.theta = Vector(2);
  policy0.theta << 0.5, 0.3;
  PgOptions opts;
  opts.iters = 30;
  Rng rng(229);
  const PgRunResult run = pg_single_task(task, policy0, opts, rng);
  CHECK(run.solution.alpha.norm() < policy0.theta.norm());
  check_curvature_contract(run.solution.gamma);
}

TEST_CASE("curvature closed form on a frozen unit batch") {
  Vector e1 = Vector::Zero(2);
  e1(0) = 1.0;
  const TaskSpec task = frozen_state_fixture(e1);
  GaussianLinearPolicy policy0;
  policy0.theta = Vector::Zero(2);
  PgOptions opts;
  opts.iters = 1;
  opts.n_traj = 7;
  opts.horizon = 25;
  opts.sigma = 0.3;
  policy0.sigma = opts.sigma;
  Rng rng(233);
  const PgRunResult run = pg_single_task(task, policy0, opts, rng);

  // every state is e1 and the flat returns give unit weights, so the
  // curvature is (H / sigma^2) e1 e1' plus the jitter ridge
  Matrix expected = Matrix::Zero(2, 2);
  expected(0, 0) = opts.horizon / (opts.sigma * opts.sigma);
  expected.diagonal().array() += opts.gamma_jitter;
  CHECK((run.solution.gamma - expected).norm() <= 1e-9 * expected.norm());
}

TEST_CASE("policy gradient learning improves spring-mass returns on most seeds") {
  // start from a deliberately poor gain so the improvement clears the
  // sampling noise of single-batch curve estimates
  int improved = 0;
  for (int seed = 0; seed < 10; ++seed) {
    const TaskSpec task = sm_task(1.0 + 0.3 * seed, 2.0, 0.5);
    GaussianLinearPolicy policy0;
    policy0.theta = Vector(2);
    policy0.theta << 0.8, 0.8;
    PgOptions opts;
    opts.iters = 30;
    opts.n_traj = 20;
    opts.horizon = 100;
    Rng rng(1000 + seed);
    const PgRunResult run = pg_single_task(task, policy0, opts, rng);
    if (run.returns.back() > run.returns.front()) ++improved;
  }
  CHECK(improved >= 9);
}

TEST_CASE("evaluate_policy is seeded, horizon-exact, and sample-size aware") {
  Vector e1 = Vector::Zero(2);
  e1(0) = 1.0;
  const TaskSpec frozen = frozen_state_fixture(e1);
  Rng rng_a(241), rng_b(241);
  const double v1 = evaluate_policy(Vector::Zero(2), frozen, 4, 1, 0.3, rng_a);
  CHECK(v1 == doctest::Approx(-1.0));  // frozen unit distance, horizon 1

  const double v2 = evaluate_policy(Vector::Zero(2), frozen, 4, 1, 0.3, rng_b);
  CHECK(v1 == v2);  // same seed, same n_traj: bit-identical

  const TaskSpec sm = sm_task(1.0, 1.0, 0.5);
  Rng rng_c(241), rng_d(241);
  const double v3 = evaluate_policy(Vector::Zero(2), sm, 4, 50, 0.3, rng_c);
  const double v4 = evaluate_policy(Vector::Zero(2), sm, 8, 50, 0.3, rng_d);
  CHECK(v3 != v4);  // doubling n_traj consumes a different stream
}

TEST_CASE("a hand-tuned gain beats the passive policy on the unit spring-mass") {
  const TaskSpec task = sm_task(1.0, 1.0, 0.0);  // undamped
  Vector gain(2);
  gain << -1.0, -1.5;  // stiffness plus damping injection
  Rng rng_a(251), rng_b(251);
  const double active = evaluate_policy(gain, task, 20, 100, 0.3, rng_a);
  const double passive =
      evaluate_policy(Vector::Zero(2), task, 20, 100, 0.3, rng_b);
  CHECK(active > passive);
}

TEST_CASE("diverging policies are reported") {
  const TaskSpec task = sm_task(0.5, 5.0, 0.5);
  GaussianLinearPolicy policy0;
  policy0.theta = Vector(2);
  policy0.theta << 9e5, 9e5;  // close to the guard already
  PgOptions opts;
  opts.iters = 40;
  opts.step_size = 1e6;
  opts.max_backtracks = 0;
  Rng rng(257);
  CHECK_THROWS_AS(pg_single_task(task, policy0, opts, rng), DivergedPolicy);
}
