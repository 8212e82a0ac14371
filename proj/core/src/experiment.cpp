#include "tadell/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace tadell {

Json config_to_json(const ExperimentConfig& cfg) {
  Json j = Json::object();
  j["schema_version"] = kSchemaVersion;
  j["domain"] = cfg.domain;
  j["algorithm"] = cfg.algorithm;
  j["n_tasks"] = cfg.n_tasks;
  j["n_heldout"] = cfg.n_heldout;
  j["seed"] = cfg.seed;
  Json hyper = Json::object();
  hyper["k"] = cfg.hyper.k;
  hyper["mu"] = cfg.hyper.mu;
  hyper["lambda"] = cfg.hyper.lambda;
  hyper["rho"] = cfg.hyper.rho ? Json(*cfg.hyper.rho) : Json(nullptr);
  hyper["jitter"] = cfg.hyper.jitter;
  hyper["code_tol"] = cfg.hyper.code_tol;
  j["hyper"] = std::move(hyper);
  Json pg = Json::object();
  pg["iters"] = cfg.pg.iters;
  pg["n_traj"] = cfg.pg.n_traj;
  pg["horizon"] = cfg.pg.horizon;
  pg["step_size"] = cfg.pg.step_size;
  pg["sigma"] = cfg.pg.sigma;
  j["pg"] = std::move(pg);
  j["reg"] = cfg.reg;
  j["n_points"] = cfg.n_points;
  j["n_test"] = cfg.n_test;
  j["descriptor_mask"] = Json(cfg.descriptor_mask);
  j["scale_descriptors"] = cfg.scale_descriptors;
  j["presentations"] = cfg.presentations;
  j["strict"] = cfg.strict;
  j["save_gamma"] = cfg.save_gamma;
  j["batch_outer_iters"] = cfg.batch_outer_iters;
  j["batch_tol"] = cfg.batch_tol;
  return j;
}

ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig cfg;
  cfg.domain = j.value("domain", cfg.domain);
  cfg.algorithm = j.value("algorithm", cfg.algorithm);
  cfg.n_tasks = j.value("n_tasks", cfg.n_tasks);
  cfg.n_heldout = j.value("n_heldout", cfg.n_heldout);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("hyper")) {
    const Json& h = j.at("hyper");
    cfg.hyper.k = h.value("k", cfg.hyper.k);
    cfg.hyper.mu = h.value("mu", cfg.hyper.mu);
    cfg.hyper.lambda = h.value("lambda", cfg.hyper.lambda);
    if (h.contains("rho") && !h.at("rho").is_null())
      cfg.hyper.rho = h.at("rho").get<double>();
    cfg.hyper.jitter = h.value("jitter", cfg.hyper.jitter);
    cfg.hyper.code_tol = h.value("code_tol", cfg.hyper.code_tol);
  }
  if (j.contains("pg")) {
    const Json& p = j.at("pg");
    cfg.pg.iters = p.value("iters", cfg.pg.iters);
    cfg.pg.n_traj = p.value("n_traj", cfg.pg.n_traj);
    cfg.pg.horizon = p.value("horizon", cfg.pg.horizon);
    cfg.pg.step_size = p.value("step_size", cfg.pg.step_size);
    cfg.pg.sigma = p.value("sigma", cfg.pg.sigma);
  }
  cfg.reg = j.value("reg", cfg.reg);
  cfg.n_points = j.value("n_points", cfg.n_points);
  cfg.n_test = j.value("n_test", cfg.n_test);
  if (j.contains("descriptor_mask"))
    cfg.descriptor_mask = j.at("descriptor_mask").get<std::vector<int>>();
  cfg.scale_descriptors = j.value("scale_descriptors", cfg.scale_descriptors);
  cfg.presentations = j.value("presentations", cfg.presentations);
  cfg.strict = j.value("strict", cfg.strict);
  cfg.save_gamma = j.value("save_gamma", cfg.save_gamma);
  cfg.batch_outer_iters = j.value("batch_outer_iters", cfg.batch_outer_iters);
  cfg.batch_tol = j.value("batch_tol", cfg.batch_tol);
  return cfg;
}

GenOptions gen_options_for(const ExperimentConfig& cfg) {
  GenOptions opts;
  opts.n_points = cfg.n_points;
  return opts;
}

namespace {

// Per-dimension bounds of descriptor_raw, in generation-range terms. Used
// only when min-max scaling is requested.
std::pair<Vector, Vector> descriptor_bounds(Domain domain) {
  const Ranges ranges = default_ranges(domain);
  auto at = [&](const std::string& name) { return ranges.at(name); };
  std::vector<Interval> dims;
  switch (domain) {
    case Domain::sm:
      dims = {at("mass"), at("spring"), at("damping")};
      break;
    case Domain::cp:
      dims = {at("cart_mass"), at("pole_mass"), at("pole_length"), at("damping")};
      break;
    case Domain::bk:
      dims = {at("mass"), at("com_x"),  at("com_z"),
              at("wheelbase"), at("trail"), at("head_angle")};
      break;
    case Domain::robot:
      for (int joint = 0; joint < 8; ++joint) {
        dims.push_back(at("twist"));
        dims.push_back(at("length"));
        dims.push_back(at("offset"));
      }
      break;
    case Domain::synth1:
      dims.assign(8, at("m"));
      break;
    case Domain::synth2:
      throw BadRange("descriptor scaling is undefined for synth2");
  }
  Vector lo(dims.size()), hi(dims.size());
  for (std::size_t i = 0; i < dims.size(); ++i) {
    lo(i) = dims[i].lo;
    hi(i) = dims[i].hi;
  }
  return {lo, hi};
}

}  // namespace

DescriptorTransform make_descriptor_transform(const ExperimentConfig& cfg,
                                              Domain domain) {
  DescriptorTransform phi;
  phi.mask = cfg.descriptor_mask;
  if (cfg.scale_descriptors) {
    auto [lo, hi] = descriptor_bounds(domain);
    if (!phi.mask.empty()) {
      Vector mlo(phi.mask.size()), mhi(phi.mask.size());
      for (std::size_t i = 0; i < phi.mask.size(); ++i) {
        mlo(i) = lo(phi.mask[i]);
        mhi(i) = hi(phi.mask[i]);
      }
      phi.minmax = {mlo, mhi};
    } else {
      phi.minmax = {lo, hi};
    }
  }
  return phi;
}

Index model_dim(const TaskSpec& task) {
  switch (task.domain) {
    case Domain::sm:
    case Domain::cp:
    case Domain::bk:
      return state_dim(task.domain);
    case Domain::robot:
      return 3 * 17;
    case Domain::synth1:
    case Domain::synth2:
      require(task.data.has_value(), "model_dim: supervised task without data");
      return task.data->X.cols();
  }
  throw BadRange("model_dim: unknown domain");
}

namespace {

// Three independent coordinate regressions sharing the input features,
// stacked into one 51-dim parameter vector with a block-diagonal curvature.
SingleTaskSolution solve_robot_task(const TaskSpec& task, double reg) {
  const SupervisedData& data = *task.data;
  const Index f = data.X.cols();
  SingleTaskSolution stacked;
  stacked.alpha = Vector(3 * f);
  stacked.gamma = Matrix::Zero(3 * f, 3 * f);
  stacked.loss_at_alpha = 0.0;
  for (Index c = 0; c < 3; ++c) {
    const SingleTaskSolution sol =
        fit_linear_regression(data.X, data.y.col(c), reg);
    stacked.alpha.segment(c * f, f) = sol.alpha;
    stacked.gamma.block(c * f, c * f, f, f) = sol.gamma;
    stacked.loss_at_alpha += sol.loss_at_alpha;
  }
  return stacked;
}

}  // namespace

SingleTaskSolution solve_single_task(const TaskSpec& task,
                                     const ExperimentConfig& cfg,
                                     std::vector<double>* curve_out) {
  switch (task.domain) {
    case Domain::sm:
    case Domain::cp:
    case Domain::bk: {
      PgOptions opts;
      opts.iters = cfg.pg.iters;
      opts.n_traj = cfg.pg.n_traj;
      opts.horizon = cfg.pg.horizon;
      opts.step_size = cfg.pg.step_size;
      opts.sigma = cfg.pg.sigma;
      Rng rng(derive_seed(cfg.seed, "stl-pg", task.id));
      const GaussianLinearPolicy policy0{
          Vector::Zero(state_dim(task.domain)), cfg.pg.sigma};
      PgRunResult run = pg_single_task(task, policy0, opts, rng);
      if (curve_out) *curve_out = run.returns;
      return std::move(run.solution);
    }
    case Domain::robot:
      require(task.data.has_value(), "solve_single_task: robot task without data");
      return solve_robot_task(task, cfg.reg);
    case Domain::synth1:
    case Domain::synth2: {
      require(task.data.has_value(), "solve_single_task: task without data");
      return fit_logistic_regression(task.data->X, task.data->y.col(0),
                                     cfg.reg);
    }
  }
  throw BadRange("solve_single_task: unknown domain");
}

std::string supervised_metric_name(Domain domain) {
  return domain == Domain::robot ? "mse" : "accuracy";
}

bool metric_higher_is_better(Domain domain) {
  return domain != Domain::robot;
}

double supervised_value(const Vector& theta, const TaskSpec& task,
                        const ExperimentConfig& cfg) {
  const SupervisedData test =
      make_test_data(task, cfg.n_test, derive_seed(cfg.seed, "test", task.id));
  if (task.domain == Domain::robot) {
    const Index f = test.X.cols();
    require(theta.size() == 3 * f, "supervised_value: robot model dimension");
    double sq = 0.0;
    for (Index c = 0; c < 3; ++c) {
      const Vector pred = test.X * theta.segment(c * f, f);
      sq += (pred - test.y.col(c)).squaredNorm();
    }
    return sq / static_cast<double>(3 * test.X.rows());
  }
  require(theta.size() == test.X.cols(), "supervised_value: model dimension");
  const Vector scores = test.X * theta;
  Index correct = 0;
  for (Index i = 0; i < scores.size(); ++i) {
    const double pred = scores(i) > 0.0 ? 1.0 : -1.0;
    if (pred == test.y(i, 0)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

double policy_value(const Vector& theta, const TaskSpec& task,
                    const ExperimentConfig& cfg, const std::string& eval_tag) {
  Rng rng(derive_seed(cfg.seed, eval_tag, task.id));
  return evaluate_policy(theta, task, cfg.pg.n_traj, cfg.pg.horizon,
                         cfg.pg.sigma, rng);
}

namespace {

std::vector<int> presentation_order(const ExperimentConfig& cfg, int n_tasks) {
  std::vector<int> order;
  if (cfg.presentations == "single") {
    order.resize(n_tasks);
    for (int i = 0; i < n_tasks; ++i) order[i] = i;
    return order;
  }
  if (cfg.presentations != "replacement")
    throw BadRange("presentations must be 'replacement' or 'single'");
  // uniform with replacement until every task has been seen at least once;
  // depends only on (seed, N), so compared methods share the same order
  Rng rng(derive_seed(cfg.seed, "order"));
  std::vector<bool> seen(n_tasks, false);
  int distinct = 0;
  while (distinct < n_tasks) {
    const int pick = rng.uniform_int(n_tasks);
    if (!seen[pick]) {
      seen[pick] = true;
      ++distinct;
    }
    order.push_back(pick);
  }
  return order;
}

double final_task_value(const Vector& theta, const TaskSpec& task,
                        const ExperimentConfig& cfg) {
  if (is_rl_domain(task.domain))
    return policy_value(theta, task, cfg, "final-eval");
  return supervised_value(theta, task, cfg);
}

std::string final_metric_name(Domain domain) {
  if (is_rl_domain(domain)) return "final_return";
  return std::string("final_") + supervised_metric_name(domain);
}

const SingleTaskSolution& solution_for(
    int id, const TaskSpec& task, const ExperimentConfig& cfg,
    std::map<int, SingleTaskSolution>& cache,
    const std::map<int, SingleTaskSolution>* precomputed,
    std::vector<MetricsRow>* metrics, long encounter_index,
    bool* any_nonconverged) {
  auto it = cache.find(id);
  if (it != cache.end()) return it->second;
  if (precomputed != nullptr) {
    auto pit = precomputed->find(id);
    if (pit != precomputed->end())
      return cache.emplace(id, pit->second).first->second;
  }
  std::vector<double> curve;
  SingleTaskSolution sol = solve_single_task(
      task, cfg, is_rl_domain(task.domain) ? &curve : nullptr);
  if (!sol.converged) {
    if (cfg.strict)
      throw SingularSystem("single-task solver did not converge (strict)");
    if (any_nonconverged) *any_nonconverged = true;
  }
  if (metrics != nullptr) {
    for (std::size_t i = 0; i < curve.size(); ++i)
      metrics->push_back({id, encounter_index, static_cast<int>(i), curve[i],
                          "stl_return"});
  }
  return cache.emplace(id, std::move(sol)).first->second;
}

}  // namespace

TrainResult run_training(const ExperimentConfig& cfg,
                         const std::vector<TaskSpec>& tasks,
                         const std::map<int, SingleTaskSolution>* precomputed) {
  require(!tasks.empty(), "run_training: empty task list");
  const Domain domain = tasks.front().domain;
  TrainResult result;
  result.model.mode = cfg.algorithm;
  result.model.hyper = cfg.hyper;
  result.model.phi = make_descriptor_transform(cfg, domain);

  const Index d = model_dim(tasks.front());
  const Index d_m =
      result.model.phi.output_dim(tasks.front().descriptor_raw.size());

  std::map<int, const TaskSpec*> by_id;
  for (const TaskSpec& t : tasks) {
    require(by_id.emplace(t.id, &t).second, "run_training: duplicate task id");
    require(model_dim(t) == d, "run_training: inconsistent model dimension");
  }

  const bool online =
      cfg.algorithm == "tadell" || cfg.algorithm == "ella";
  const bool batch = cfg.algorithm == "tademtl" || cfg.algorithm == "gomtl";

  if (online) {
    LearnerState state =
        make_learner(cfg.algorithm == "tadell" ? Mode::tadell : Mode::ella,
                     cfg.hyper, d, d_m, derive_seed(cfg.seed, "dict-init"),
                     result.model.phi);
    result.presentation_order =
        presentation_order(cfg, static_cast<int>(tasks.size()));
    long encounter = 0;
    for (int idx : result.presentation_order) {
      const TaskSpec& task = tasks[idx];
      const SingleTaskSolution& sol = solution_for(
          task.id, task, cfg, result.solutions, precomputed, &result.metrics,
          encounter, &result.any_nonconverged);
      const auto t0 = std::chrono::steady_clock::now();
      tadell_encounter(state, task, sol);
      const auto t1 = std::chrono::steady_clock::now();
      result.metrics.push_back(
          {task.id, encounter, 0,
           std::chrono::duration<double>(t1 - t0).count(), "update_seconds"});
      ++encounter;
    }
    for (const auto& [id, record] : state.registry) {
      const Vector theta = state.dict.L * record.s;
      result.metrics.push_back({id, -1, 0,
                                final_task_value(theta, *by_id.at(id), cfg),
                                final_metric_name(domain)});
    }
    result.model.dict = state.dict;
    result.model.unique_tasks = state.unique_tasks;
    for (const auto& [id, record] : state.registry)
      result.model.registry.push_back(record);
  } else if (batch) {
    const bool with_descriptors = cfg.algorithm == "tademtl";
    std::vector<BatchTask> inputs;
    for (const TaskSpec& task : tasks) {
      const SingleTaskSolution& sol = solution_for(
          task.id, task, cfg, result.solutions, precomputed, &result.metrics,
          0, &result.any_nonconverged);
      BatchTask bt;
      bt.id = task.id;
      bt.alpha = sol.alpha;
      bt.gamma = sol.gamma;
      if (with_descriptors) {
        bt.phi = result.model.phi.apply(task.descriptor_raw);
        bt.rho = cfg.hyper.rho ? *cfg.hyper.rho : sol.gamma.diagonal().mean();
      }
      inputs.push_back(std::move(bt));
    }
    const auto t0 = std::chrono::steady_clock::now();
    BatchResult batch_res =
        batch_mtl(inputs, cfg.hyper, with_descriptors, d_m,
                  cfg.batch_outer_iters, cfg.batch_tol,
                  derive_seed(cfg.seed, "dict-init"));
    const auto t1 = std::chrono::steady_clock::now();
    if (!batch_res.converged && cfg.strict)
      throw SingularSystem("batch optimization did not converge (strict)");
    result.any_nonconverged |= !batch_res.converged;
    result.metrics.push_back(
        {-1, 0, 0, std::chrono::duration<double>(t1 - t0).count(),
         "update_seconds"});
    for (std::size_t i = 0; i < batch_res.objective_trace.size(); ++i)
      result.metrics.push_back({-1, 0, static_cast<int>(i),
                                batch_res.objective_trace[i],
                                "batch_objective"});
    for (std::size_t t = 0; t < inputs.size(); ++t) {
      TaskRecord record;
      record.id = inputs[t].id;
      record.s = batch_res.codes.col(static_cast<Index>(t));
      record.alpha = inputs[t].alpha;
      record.gamma = inputs[t].gamma;
      record.phi = inputs[t].phi;
      if (with_descriptors)
        record.rho_weight = inputs[t].rho * Matrix::Identity(d_m, d_m);
      const Vector theta = batch_res.dict.L * record.s;
      result.metrics.push_back(
          {record.id, -1, 0, final_task_value(theta, *by_id.at(record.id), cfg),
           final_metric_name(domain)});
      result.model.registry.push_back(std::move(record));
    }
    result.model.dict = batch_res.dict;
    result.model.unique_tasks = static_cast<int>(tasks.size());
  } else if (cfg.algorithm == "stl") {
    for (const TaskSpec& task : tasks) {
      const SingleTaskSolution& sol = solution_for(
          task.id, task, cfg, result.solutions, precomputed, &result.metrics,
          0, &result.any_nonconverged);
      TaskRecord record;
      record.id = task.id;
      record.alpha = sol.alpha;
      record.gamma = sol.gamma;
      result.metrics.push_back(
          {task.id, -1, 0, final_task_value(sol.alpha, task, cfg),
           final_metric_name(domain)});
      result.model.registry.push_back(std::move(record));
    }
    result.model.dict.L = Matrix(d, 0);
    result.model.dict.D = Matrix(d_m, 0);
    result.model.unique_tasks = static_cast<int>(tasks.size());
  } else {
    throw BadRange("unknown algorithm: " + cfg.algorithm);
  }
  return result;
}

std::vector<ZeroShotRow> run_zeroshot(const ModelFile& model,
                                      const std::vector<TaskSpec>& heldout,
                                      const ExperimentConfig& cfg,
                                      std::optional<int> warmstart_iters) {
  if (model.mode != "tadell" && model.mode != "tademtl")
    throw DimensionMismatch(
        "zero-shot prediction needs a descriptor-coupled model (tadell or "
        "tademtl), got mode '" + model.mode + "'");
  std::vector<ZeroShotRow> rows;
  for (const TaskSpec& task : heldout) {
    const Vector phi = model.phi.apply(task.descriptor_raw);
    if (phi.size() != model.dict.dm())
      throw DimensionMismatch("task descriptor does not match model basis");
    const ZeroShotPrediction pred =
        zero_shot(model.dict, phi, model.hyper.mu);

    if (is_rl_domain(task.domain)) {
      rows.push_back({task.id, "zeroshot_return", 0,
                      policy_value(pred.theta_tilde, task, cfg, "zs-eval")});
      if (warmstart_iters) {
        PgOptions opts;
        opts.iters = *warmstart_iters;
        opts.n_traj = cfg.pg.n_traj;
        opts.horizon = cfg.pg.horizon;
        opts.step_size = cfg.pg.step_size;
        opts.sigma = cfg.pg.sigma;
        const std::vector<double> curve =
            warm_start(model.dict, task, phi, model.hyper.mu, opts,
                       derive_seed(cfg.seed, "warm", task.id));
        for (std::size_t i = 0; i < curve.size(); ++i)
          rows.push_back({task.id, "warmstart_return", static_cast<int>(i),
                          curve[i]});
      }
    } else {
      if (warmstart_iters)
        throw BadRange("warm start applies to RL domains only");
      rows.push_back(
          {task.id,
           std::string("zeroshot_") + supervised_metric_name(task.domain), 0,
           supervised_value(pred.theta_tilde, task, cfg)});
    }
  }
  return rows;
}

double jumpstart(const Vector& theta_init, const TaskSpec& task,
                 const Vector& reference_init, int n_traj,
                 const ExperimentConfig& cfg) {
  const std::uint64_t seed = derive_seed(cfg.seed, "jumpstart", task.id);
  Rng rng_a(seed);
  Rng rng_b(seed);  // identical rollout noise for both initializations
  const double v_init = evaluate_policy(theta_init, task, n_traj,
                                        cfg.pg.horizon, cfg.pg.sigma, rng_a);
  const double v_ref = evaluate_policy(reference_init, task, n_traj,
                                       cfg.pg.horizon, cfg.pg.sigma, rng_b);
  return v_init - v_ref;
}

std::vector<AblationRow> ablate_descriptors(const ExperimentConfig& cfg) {
  const Domain domain = domain_from_tag(cfg.domain);
  const auto groups = descriptor_groups(domain);
  const GenOptions gen = gen_options_for(cfg);
  const std::vector<TaskSpec> tasks =
      generate_domain(domain, cfg.n_tasks, cfg.seed, gen);
  const std::vector<TaskSpec> heldout = generate_domain(
      domain, cfg.n_heldout, derive_seed(cfg.seed, "heldout-gen"), gen);

  // single-task solutions do not depend on the descriptor subset
  std::map<int, SingleTaskSolution> solutions;
  for (const TaskSpec& task : tasks)
    solutions.emplace(task.id, solve_single_task(task, cfg));

  const int n_subsets = (1 << groups.size()) - 1;
  std::vector<AblationRow> rows(n_subsets);
  parallel_cells(n_subsets, [&](int cell) {
    const int bits = cell + 1;
    ExperimentConfig sub = cfg;
    sub.algorithm = "tadell";
    std::string name;
    sub.descriptor_mask.clear();
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (bits & (1 << g)) {
        name += groups[g].first;
        sub.descriptor_mask.insert(sub.descriptor_mask.end(),
                                   groups[g].second.begin(),
                                   groups[g].second.end());
      }
    }
    std::sort(sub.descriptor_mask.begin(), sub.descriptor_mask.end());

    const TrainResult trained = run_training(sub, tasks, &solutions);
    double sum = 0.0, sumsq = 0.0;
    int n = 0;
    for (const TaskSpec& task : heldout) {
      const Vector phi = trained.model.phi.apply(task.descriptor_raw);
      const ZeroShotPrediction pred =
          zero_shot(trained.model.dict, phi, sub.hyper.mu);
      double value;
      if (is_rl_domain(domain)) {
        const Vector reference = Vector::Zero(pred.theta_tilde.size());
        value = jumpstart(pred.theta_tilde, task, reference, sub.pg.n_traj, sub);
      } else {
        value = supervised_value(pred.theta_tilde, task, sub);
      }
      sum += value;
      sumsq += value * value;
      ++n;
    }
    const double mean = sum / n;
    const double var = std::max(0.0, sumsq / n - mean * mean);
    rows[cell] = {name,
                  is_rl_domain(domain) ? "jumpstart"
                                       : std::string("zeroshot_") +
                                             supervised_metric_name(domain),
                  mean, std::sqrt(var / std::max(1, n - 1)), n};
  });
  return rows;
}

std::vector<GridRow> grid_search(const ExperimentConfig& cfg,
                                 const std::vector<TaskSpec>& tasks,
                                 const std::vector<TaskSpec>& heldout,
                                 const std::vector<Hyper>& grid) {
  require(!grid.empty(), "grid_search: empty grid");
  const Domain domain = domain_from_tag(cfg.domain);

  std::map<int, SingleTaskSolution> solutions;
  for (const TaskSpec& task : tasks)
    solutions.emplace(task.id, solve_single_task(task, cfg));

  std::vector<GridRow> rows(grid.size());
  parallel_cells(static_cast<int>(grid.size()), [&](int cell) {
    ExperimentConfig sub = cfg;
    sub.hyper = grid[cell];
    const TrainResult trained = run_training(sub, tasks, &solutions);
    double sum = 0.0;
    for (const TaskSpec& task : heldout) {
      const Vector phi = trained.model.phi.apply(task.descriptor_raw);
      const ZeroShotPrediction pred =
          zero_shot(trained.model.dict, phi, sub.hyper.mu);
      sum += is_rl_domain(domain)
                 ? policy_value(pred.theta_tilde, task, sub, "zs-eval")
                 : supervised_value(pred.theta_tilde, task, sub);
    }
    rows[cell] = {grid[cell], sum / static_cast<double>(heldout.size()),
                  is_rl_domain(domain)
                      ? "zeroshot_return"
                      : std::string("zeroshot_") +
                            supervised_metric_name(domain)};
  });
  return rows;
}

std::vector<BenchRow> bench_runtime(const ExperimentConfig& cfg,
                                    const std::vector<TaskSpec>& tasks) {
  const TrainResult result = run_training(cfg, tasks);
  std::vector<BenchRow> rows;
  for (const MetricsRow& m : result.metrics)
    if (m.metric_name == "update_seconds")
      rows.push_back({m.encounter_index, m.value});
  return rows;
}

int thread_cap() {
  if (const char* env = std::getenv("LLL_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

void parallel_cells(int n, const std::function<void(int)>& fn) {
  const int workers = std::min(n, thread_cap());
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace tadell
