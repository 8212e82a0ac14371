#include "tadell/dictionary.hpp"

#include "tadell/rng.hpp"

namespace tadell {

CoupledDictionary init_dictionary(Index d, Index d_m, Index k,
                                  std::uint64_t seed) {
  if (d < 1 || d_m < 1 || k < 1)
    throw BadRange("init_dictionary: dimensions must be >= 1");
  Rng rng(seed);
  CoupledDictionary dict;
  dict.L = rng.normal_matrix(d, k);
  dict.D = rng.normal_matrix(d_m, k);
  return dict;
}

void accumulate(Accumulator& acc, const Vector& s, const Vector& target,
                const Matrix& weight, int sign) {
  const Index k = s.size();
  const Index p = acc.p;
  require(p > 0 && acc.A.rows() == k * p, "accumulate: accumulator shape");
  require(target.size() == p, "accumulate: target length");
  require(weight.rows() == p && weight.cols() == p, "accumulate: weight shape");
  require(sign == 1 || sign == -1, "accumulate: sign must be +1 or -1");

  const Vector wt = weight * target;
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < k; ++j) {
      const double c = sign * s(i) * s(j);
      if (c != 0.0) acc.A.block(i * p, j * p, p, p) += c * weight;
    }
    if (s(i) != 0.0) acc.b.segment(i * p, p) += (sign * s(i)) * wt;
  }
}

Matrix recompute_basis(const Accumulator& acc, int T, double lambda) {
  if (T < 1) throw BadRange("recompute_basis: T must be >= 1");
  const Index kp = acc.A.rows();
  const Index p = acc.p;
  const Index k = acc.k();

  Matrix m = acc.A / static_cast<double>(T);
  m.diagonal().array() += lambda;
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success)
    throw SingularSystem("recompute_basis: regularized system not positive definite");
  const Vector x = llt.solve(acc.b / static_cast<double>(T));
  (void)kp;
  return Eigen::Map<const Matrix>(x.data(), p, k);  // column-major mat()
}

void encounter_task(CoupledDictionary& dict, Accumulator& acc_model,
                    Accumulator& acc_descr, const TaskRecord& record,
                    const TaskRecord* prior, int T, double lambda) {
  require(record.alpha.size() == dict.d(), "encounter_task: alpha dimension");
  require(record.s.size() == dict.k(), "encounter_task: code dimension");
  const bool with_descriptors = record.phi.size() > 0;
  if (with_descriptors)
    require(record.phi.size() == dict.dm(), "encounter_task: phi dimension");

  if (prior != nullptr) {
    accumulate(acc_model, prior->s, prior->alpha, prior->gamma, -1);
    if (with_descriptors && prior->phi.size() > 0)
      accumulate(acc_descr, prior->s, prior->phi, prior->rho_weight, -1);
  }
  accumulate(acc_model, record.s, record.alpha, record.gamma, +1);
  dict.L = recompute_basis(acc_model, T, lambda);

  if (with_descriptors) {
    accumulate(acc_descr, record.s, record.phi, record.rho_weight, +1);
    dict.D = recompute_basis(acc_descr, T, lambda);
  }
}

double surrogate_objective(const std::vector<TaskRecord>& records,
                           const Matrix& L, double mu, double lambda) {
  if (records.empty()) return lambda * L.squaredNorm();
  double sum = 0.0;
  for (const TaskRecord& r : records) {
    const Vector resid = r.alpha - L * r.s;
    sum += resid.dot(r.gamma * resid) + mu * r.s.lpNorm<1>();
  }
  return sum / static_cast<double>(records.size()) + lambda * L.squaredNorm();
}

double coupled_surrogate_objective(const std::vector<TaskRecord>& records,
                                   const Matrix& L, const Matrix& D, double mu,
                                   double lambda) {
  double sum = 0.0;
  for (const TaskRecord& r : records) {
    const Vector resid = r.alpha - L * r.s;
    sum += resid.dot(r.gamma * resid) + mu * r.s.lpNorm<1>();
    if (r.phi.size() > 0) {
      const Vector dresid = r.phi - D * r.s;
      sum += dresid.dot(r.rho_weight * dresid);
    }
  }
  if (!records.empty()) sum /= static_cast<double>(records.size());
  return sum + lambda * (L.squaredNorm() + D.squaredNorm());
}

}  // namespace tadell
