#include "tadell/sparse.hpp"

#include <algorithm>
#include <cmath>

namespace tadell {

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

double lasso_objective(const Matrix& Q, const Vector& target, double mu,
                       const Vector& s) {
  return (target - Q * s).squaredNorm() + mu * s.lpNorm<1>();
}

double lasso_kkt_residual(const Matrix& Q, const Vector& target, double mu,
                          const Vector& s) {
  const Vector g = 2.0 * (Q.transpose() * (Q * s - target));
  double worst = 0.0;
  for (Index j = 0; j < s.size(); ++j) {
    double viol;
    if (s(j) != 0.0) {
      viol = std::abs(g(j) + mu * (s(j) > 0.0 ? 1.0 : -1.0));
    } else {
      viol = std::max(0.0, std::abs(g(j)) - mu);
    }
    worst = std::max(worst, viol);
  }
  return worst;
}

LassoResult lasso(const Matrix& Q, const Vector& target, double mu,
                  const LassoOptions& opts, const Vector* warm_start) {
  const Index d = Q.rows();
  const Index k = Q.cols();
  require(target.size() == d, "lasso: target length must equal Q rows");
  if (mu < 0.0) throw BadRange("lasso: mu must be nonnegative");
  require_finite(Q, "lasso: Q");
  require_finite(target, "lasso: target");

  LassoResult res;
  res.code = Vector::Zero(k);
  if (warm_start != nullptr) {
    require(warm_start->size() == k, "lasso: warm start length");
    res.code = *warm_start;
  }

  const Vector col_norms2 = Q.colwise().squaredNorm();
  const double half_mu = 0.5 * mu;

  Vector r = target - Q * res.code;  // maintained residual
  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    for (Index j = 0; j < k; ++j) {
      const double nj = col_norms2(j);
      if (nj < 1e-24) {
        // a dead column never enters the support
        if (res.code(j) != 0.0) {
          r += Q.col(j) * res.code(j);
          res.code(j) = 0.0;
        }
        continue;
      }
      const double c = Q.col(j).dot(r) + nj * res.code(j);
      const double updated = soft_threshold(c, half_mu) / nj;
      const double delta = updated - res.code(j);
      if (delta != 0.0) {
        r -= Q.col(j) * delta;
        res.code(j) = updated;
      }
    }
    // refresh the residual to keep the certificate honest over long runs
    r = target - Q * res.code;
    res.sweeps = sweep;
    res.kkt_residual = lasso_kkt_residual(Q, target, mu, res.code);
    if (opts.track_objective)
      res.objective_trace.push_back(lasso_objective(Q, target, mu, res.code));
    if (res.kkt_residual <= opts.tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

WhitenResult whiten(const WeightedQuadratic& w) {
  const Index p = w.weight.rows();
  require(w.weight.cols() == p, "whiten: weight must be square");
  require_finite(w.weight, "whiten: weight");
  if (w.jitter < 0.0) throw BadRange("whiten: jitter must be nonnegative");
  if ((w.weight - w.weight.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw NotPsd("whiten: weight is not symmetric");

  auto attempt = [&](double jitter) -> WhitenResult {
    Matrix m = w.weight;
    m.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) return {Matrix(), jitter};
    return {llt.matrixU(), jitter};
  };

  WhitenResult res = attempt(w.jitter);
  if (res.factor.size() == 0) {
    const double mean_diag = w.weight.trace() / static_cast<double>(p);
    const double fallback =
        std::max(w.jitter, mean_diag > 0.0 ? 1e-8 * mean_diag : 1e-12);
    res = attempt(fallback);
  }
  if (res.factor.size() == 0)
    throw NotPsd("whiten: factorization failed even after jitter");
  return res;
}

LassoResult weighted_lasso(const Matrix& K, const Vector& beta,
                           const WeightedQuadratic& w, double mu,
                           const LassoOptions& opts, const Vector* warm_start) {
  require(K.rows() == beta.size(),
          "weighted_lasso: K rows must equal beta length");
  require(w.weight.rows() == K.rows(),
          "weighted_lasso: weight dimension must equal K rows");
  const Matrix W = whiten(w).factor;
  return lasso(W * K, W * beta, mu, opts, warm_start);
}

double mutual_coherence(const Matrix& Q) {
  const Index k = Q.cols();
  require(k >= 2, "mutual_coherence: need at least two columns");
  require_finite(Q, "mutual_coherence: Q");
  const Vector norms = Q.colwise().norm();
  for (Index j = 0; j < k; ++j)
    if (norms(j) < 1e-12)
      throw ZeroColumn("mutual_coherence: column " + std::to_string(j) +
                       " has (near) zero norm");
  double worst = 0.0;
  for (Index i = 0; i < k; ++i)
    for (Index j = i + 1; j < k; ++j)
      worst = std::max(worst,
                       std::abs(Q.col(i).dot(Q.col(j))) / (norms(i) * norms(j)));
  return std::min(worst, 1.0);
}

}  // namespace tadell
