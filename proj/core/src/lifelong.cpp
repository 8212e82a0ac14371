#include "tadell/lifelong.hpp"

#include <cmath>

namespace tadell {

Mode mode_from_tag(const std::string& tag) {
  if (tag == "ella") return Mode::ella;
  if (tag == "tadell") return Mode::tadell;
  throw BadRange("unknown mode tag: " + tag);
}

std::string mode_tag(Mode mode) {
  return mode == Mode::ella ? "ella" : "tadell";
}

Vector DescriptorTransform::apply(const Vector& raw) const {
  Vector out;
  if (mask.empty()) {
    out = raw;
  } else {
    out = Vector(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) {
      require(mask[i] >= 0 && mask[i] < raw.size(),
              "DescriptorTransform: mask index out of range");
      out(i) = raw(mask[i]);
    }
  }
  if (minmax) {
    const auto& [lo, hi] = *minmax;
    require(lo.size() == out.size() && hi.size() == out.size(),
            "DescriptorTransform: scaling dimension");
    for (Index i = 0; i < out.size(); ++i) {
      const double span = hi(i) - lo(i);
      out(i) = span > 0.0 ? (out(i) - lo(i)) / span : 0.0;
    }
  }
  return out;
}

Index DescriptorTransform::output_dim(Index raw_dim) const {
  return mask.empty() ? raw_dim : static_cast<Index>(mask.size());
}

LearnerState make_learner(Mode mode, const Hyper& hyper, Index d, Index d_m,
                          std::uint64_t seed, DescriptorTransform phi) {
  LearnerState state;
  state.mode = mode;
  state.hyper = hyper;
  state.dict = init_dictionary(d, d_m, hyper.k, seed);
  state.acc_model = Accumulator(hyper.k, d);
  state.acc_descr = Accumulator(hyper.k, d_m);
  state.phi = std::move(phi);
  return state;
}

namespace {

// Sparse-codes one task against the current bases. The weighted model block
// is whitened explicitly and the descriptor block enters with weight
// sqrt(rho); with rho = 0 the extra rows are exactly zero, so the solve is
// identical to the model-only system.
Vector solve_code(const CoupledDictionary& dict, const Vector& alpha,
                  const Matrix& gamma, const Vector* phi, double rho,
                  const Hyper& hyper, const Vector* warm = nullptr) {
  const Matrix w_model = whiten({gamma, hyper.jitter}).factor;
  const Index d = dict.d();
  const bool coupled = phi != nullptr;
  const Index rows = coupled ? d + dict.dm() : d;

  Matrix q(rows, dict.k());
  Vector target(rows);
  q.topRows(d) = w_model * dict.L;
  target.head(d) = w_model * alpha;
  if (coupled) {
    const double scale = std::sqrt(rho);
    q.bottomRows(dict.dm()) = scale * dict.D;
    target.tail(dict.dm()) = scale * (*phi);
  }
  LassoOptions opts;
  opts.tol = hyper.code_tol;
  return lasso(q, target, hyper.mu, opts, warm).code;
}

double rho_for(const Hyper& hyper, const Matrix& gamma) {
  if (hyper.rho) return *hyper.rho;
  return gamma.diagonal().mean();
}

}  // namespace

void tadell_encounter(LearnerState& state, const TaskSpec& task,
                      const SingleTaskSolution& solution) {
  require(solution.alpha.size() == state.dict.d(),
          "tadell_encounter: solution dimension");
  require_finite(solution.alpha, "tadell_encounter: alpha");
  require_finite(solution.gamma, "tadell_encounter: gamma");

  TaskRecord record;
  record.id = task.id;
  record.alpha = solution.alpha;
  record.gamma = solution.gamma;

  if (state.mode == Mode::tadell) {
    record.phi = state.phi.apply(task.descriptor_raw);
    require(record.phi.size() == state.dict.dm(),
            "tadell_encounter: descriptor dimension");
    const double rho = rho_for(state.hyper, solution.gamma);
    record.rho_weight =
        rho * Matrix::Identity(state.dict.dm(), state.dict.dm());
    record.s = solve_code(state.dict, record.alpha, record.gamma, &record.phi,
                          rho, state.hyper);
  } else {
    record.s = solve_code(state.dict, record.alpha, record.gamma, nullptr, 0.0,
                          state.hyper);
  }

  const auto it = state.registry.find(task.id);
  const TaskRecord* prior = it != state.registry.end() ? &it->second : nullptr;
  const int unique = prior != nullptr ? state.unique_tasks : state.unique_tasks + 1;
  encounter_task(state.dict, state.acc_model, state.acc_descr, record, prior,
                 unique, state.hyper.lambda);
  state.registry[task.id] = std::move(record);
  state.unique_tasks = unique;
}

Vector task_model(const LearnerState& state, int task_id) {
  const auto it = state.registry.find(task_id);
  require(it != state.registry.end(), "task_model: unknown task id");
  return state.dict.L * it->second.s;
}

ZeroShotPrediction zero_shot(const CoupledDictionary& dict, const Vector& phi_m,
                             double mu, const LassoOptions& opts) {
  require(phi_m.size() == dict.dm(), "zero_shot: descriptor dimension");
  ZeroShotPrediction pred;
  pred.s_tilde = lasso(dict.D, phi_m, mu, opts).code;
  pred.theta_tilde = dict.L * pred.s_tilde;
  return pred;
}

BatchResult batch_mtl(const std::vector<BatchTask>& tasks, const Hyper& hyper,
                      bool use_descriptors, Index d_m, int outer_iters,
                      double tol, std::uint64_t seed) {
  require(!tasks.empty(), "batch_mtl: need at least one task");
  const Index d = tasks.front().alpha.size();
  const Index n = static_cast<Index>(tasks.size());

  BatchResult res;
  res.dict = init_dictionary(d, std::max<Index>(d_m, 1), hyper.k, seed);
  if (!use_descriptors) res.dict.D.setZero();
  res.codes = Matrix::Zero(hyper.k, n);

  std::vector<TaskRecord> records(tasks.size());
  for (Index t = 0; t < n; ++t) {
    records[t].id = tasks[t].id;
    records[t].alpha = tasks[t].alpha;
    records[t].gamma = tasks[t].gamma;
    if (use_descriptors) {
      require(tasks[t].phi.size() == d_m, "batch_mtl: descriptor dimension");
      records[t].phi = tasks[t].phi;
      records[t].rho_weight = tasks[t].rho * Matrix::Identity(d_m, d_m);
    }
  }

  double prev_obj = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < outer_iters; ++iter) {
    // code step: per-task weighted lasso, warm started from the last codes
    for (Index t = 0; t < n; ++t) {
      const Vector warm = res.codes.col(t);
      const Vector* phi = use_descriptors ? &records[t].phi : nullptr;
      res.codes.col(t) = solve_code(res.dict, records[t].alpha,
                                    records[t].gamma, phi, tasks[t].rho, hyper,
                                    &warm);
      records[t].s = res.codes.col(t);
    }

    // basis step: exact ridge solve with all codes fixed
    Accumulator acc_model(hyper.k, d);
    Accumulator acc_descr(hyper.k, use_descriptors ? d_m : 1);
    for (Index t = 0; t < n; ++t) {
      accumulate(acc_model, records[t].s, records[t].alpha, records[t].gamma,
                 +1);
      if (use_descriptors)
        accumulate(acc_descr, records[t].s, records[t].phi,
                   records[t].rho_weight, +1);
    }
    res.dict.L = recompute_basis(acc_model, static_cast<int>(n), hyper.lambda);
    if (use_descriptors)
      res.dict.D = recompute_basis(acc_descr, static_cast<int>(n), hyper.lambda);

    const double obj = coupled_surrogate_objective(records, res.dict.L,
                                                   res.dict.D, hyper.mu,
                                                   hyper.lambda);
    res.objective_trace.push_back(obj);
    if (prev_obj - obj < tol && iter > 0) {
      res.converged = prev_obj - obj > -1e-10;  // flag a true stall, not a bug
      break;
    }
    prev_obj = obj;
  }
  return res;
}

std::vector<double> warm_start(const CoupledDictionary& dict,
                               const TaskSpec& task, const Vector& phi_m,
                               double mu, const PgOptions& opts,
                               std::uint64_t seed) {
  const ZeroShotPrediction pred = zero_shot(dict, phi_m, mu);
  Rng rng(seed);
  const PgRunResult run =
      pg_single_task(task, {pred.theta_tilde, opts.sigma}, opts, rng);
  return run.returns;
}

}  // namespace tadell
