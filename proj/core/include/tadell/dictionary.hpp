#pragma once

#include <cstdint>
#include <vector>

#include "tadell/types.hpp"

namespace tadell {

// Paired bases over model space (L, d x k) and descriptor space (D, d_m x k)
// that share per-task sparse codes.
struct CoupledDictionary {
  Matrix L;
  Matrix D;
  Index d() const { return L.rows(); }
  Index dm() const { return D.rows(); }
  Index k() const { return L.cols(); }
};

// Entries i.i.d. standard normal from a seeded stream; same seed, same bases.
CoupledDictionary init_dictionary(Index d, Index d_m, Index k,
                                  std::uint64_t seed);

// Running normal equations for one basis: A collects (s s') (x) weight
// rank-one Kronecker terms, b collects s (x) (weight * target).
struct Accumulator {
  Matrix A;  // kp x kp
  Vector b;  // kp
  Index p = 0;

  Accumulator() = default;
  Accumulator(Index k, Index p_dim)
      : A(Matrix::Zero(k * p_dim, k * p_dim)),
        b(Vector::Zero(k * p_dim)),
        p(p_dim) {}
  Index k() const { return p > 0 ? A.rows() / p : 0; }
};

// sign = +1 adds a task's contribution, sign = -1 removes a previously
// added identical triple (revisit bookkeeping).
void accumulate(Accumulator& acc, const Vector& s, const Vector& target,
                const Matrix& weight, int sign);

// Solves ((1/T) A + lambda I) vec(B) = (1/T) b and de-vectorizes column-major
// to p x k. Exact minimizer of the ridge-regularized weighted reconstruction
// objective over bases with the codes held fixed.
Matrix recompute_basis(const Accumulator& acc, int T, double lambda);

// Everything the learner keeps per task: the code, the single-task point
// estimate with its curvature, and the descriptor features with their weight.
// phi/rho_weight are empty when descriptors are not in play.
struct TaskRecord {
  int id = 0;
  Vector s;
  Vector alpha;
  Matrix gamma;
  Vector phi;
  Matrix rho_weight;
};

// One online update: removes the prior contribution of a revisited task,
// adds the new record, and recomputes L (and D when descriptors are present)
// via recompute_basis. T must count unique tasks only.
void encounter_task(CoupledDictionary& dict, Accumulator& acc_model,
                    Accumulator& acc_descr, const TaskRecord& record,
                    const TaskRecord* prior, int T, double lambda);

// Sparse-coded approximation of the multi-task objective with the codes
// frozen: (1/T) sum_t ||alpha - L s||^2_gamma + mu ||s||_1 + lambda ||L||_F^2.
// Diagnostic only; not on the update path.
double surrogate_objective(const std::vector<TaskRecord>& records,
                           const Matrix& L, double mu, double lambda);

// Coupled variant: adds the descriptor reconstruction terms and the D ridge.
double coupled_surrogate_objective(const std::vector<TaskRecord>& records,
                                   const Matrix& L, const Matrix& D, double mu,
                                   double lambda);

}  // namespace tadell
