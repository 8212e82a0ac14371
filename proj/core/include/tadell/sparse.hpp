#pragma once

#include <vector>

#include "tadell/types.hpp"

namespace tadell {

// Numerical kernels shared by the dictionary learners: L1 coordinate
// descent, PSD whitening, and mutual coherence. All functions are pure.

struct LassoOptions {
  double tol = 1e-6;        // KKT residual threshold
  int max_sweeps = 50000;   // full cyclic coordinate passes
  bool track_objective = false;
};

struct LassoResult {
  Vector code;
  double kkt_residual = 0.0;
  int sweeps = 0;
  bool converged = false;
  std::vector<double> objective_trace;  // per sweep, when tracked
};

/// sign(v) * max(|v| - t, 0)
double soft_threshold(double v, double t);

// min_s ||target - Q s||^2 + mu ||s||_1 by cyclic coordinate descent in
// fixed ascending column order. Deterministic for fixed inputs; reports
// non-convergence through the result flag and returns the best iterate.
LassoResult lasso(const Matrix& Q, const Vector& target, double mu,
                  const LassoOptions& opts = {},
                  const Vector* warm_start = nullptr);

double lasso_objective(const Matrix& Q, const Vector& target, double mu,
                       const Vector& s);

// Max KKT violation of s for the objective above: nonzero coordinates check
// |2 q_j'(Qs - y) + mu sign(s_j)|, zero coordinates check |2 q_j'(Qs - y)| - mu.
double lasso_kkt_residual(const Matrix& Q, const Vector& target, double mu,
                          const Vector& s);

// Weight of a ||v||^2_A = v'Av norm. jitter is added to the diagonal before
// factoring; when factorization fails with the given jitter, a fallback of
// 1e-8 * mean(diag) is tried once.
struct WeightedQuadratic {
  Matrix weight;
  double jitter = 0.0;
};

struct WhitenResult {
  Matrix factor;       // upper triangular W with W'W = weight + jitter_used * I
  double jitter_used = 0.0;
};

WhitenResult whiten(const WeightedQuadratic& w);

// min_s ||beta - K s||^2_w + mu ||s||_1, reduced to standard lasso on the
// whitened system (W K, W beta).
LassoResult weighted_lasso(const Matrix& K, const Vector& beta,
                           const WeightedQuadratic& w, double mu,
                           const LassoOptions& opts = {},
                           const Vector* warm_start = nullptr);

// max_{i != j} |q_i' q_j| / (||q_i|| ||q_j||), in [0, 1].
double mutual_coherence(const Matrix& Q);

}  // namespace tadell
