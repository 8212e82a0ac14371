#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tadell/lifelong.hpp"
#include "tadell/serialization.hpp"

namespace tadell {

struct PgBudget {
  int iters = 30;
  int n_traj = 20;
  int horizon = 100;
  double step_size = 0.2;
  double sigma = 0.3;
};

// Everything one experiment cell needs; (config, seed) pins every output
// byte except wall-clock columns.
struct ExperimentConfig {
  std::string domain = "sm";
  std::string algorithm = "tadell";  // tadell | ella | tademtl | gomtl | stl
  int n_tasks = 40;
  int n_heldout = 40;
  std::uint64_t seed = 1;
  Hyper hyper;
  PgBudget pg;
  double reg = 0.01;   // single-task ridge / logistic regularizer
  int n_points = 10;   // training samples per supervised task
  int n_test = 1000;   // evaluation samples per supervised task
  std::vector<int> descriptor_mask;  // empty = full descriptor
  bool scale_descriptors = false;
  std::string presentations = "replacement";  // or "single"
  bool strict = false;
  bool save_gamma = true;
  int batch_outer_iters = 100;
  double batch_tol = 1e-6;
};

Json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const Json& j);

GenOptions gen_options_for(const ExperimentConfig& cfg);

// Builds the descriptor feature map: configured index subset plus optional
// min-max scaling derived from the domain's generation ranges.
DescriptorTransform make_descriptor_transform(const ExperimentConfig& cfg,
                                              Domain domain);

// Model-parameter dimension of a task under this harness (state dimension
// for RL, feature dimension for classification, 3 stacked coordinate models
// for the robot arm).
Index model_dim(const TaskSpec& task);

struct MetricsRow {
  int task_id = 0;
  long encounter_index = 0;  // -1 marks end-of-run summary rows
  int iter = 0;
  double value = 0.0;
  std::string metric_name;
};

// Single-task baseline for one task; RL tasks run a PG session whose
// per-iteration returns can be captured through curve_out.
SingleTaskSolution solve_single_task(const TaskSpec& task,
                                     const ExperimentConfig& cfg,
                                     std::vector<double>* curve_out = nullptr);

struct TrainResult {
  ModelFile model;
  std::map<int, SingleTaskSolution> solutions;
  std::vector<MetricsRow> metrics;
  std::vector<int> presentation_order;
  bool any_nonconverged = false;
};

// Runs the configured algorithm over the task list: the online loop for
// tadell/ella, alternating batch optimization for tademtl/gomtl, or the
// independent baseline for stl. Precomputed solutions may be shared across
// cells that differ only in descriptor handling.
TrainResult run_training(
    const ExperimentConfig& cfg, const std::vector<TaskSpec>& tasks,
    const std::map<int, SingleTaskSolution>* precomputed = nullptr);

// Test-set value of a model vector on a supervised task: classification
// accuracy or end-effector MSE, with the evaluation set derived only from
// (config seed, task id).
double supervised_value(const Vector& theta, const TaskSpec& task,
                        const ExperimentConfig& cfg);
std::string supervised_metric_name(Domain domain);
bool metric_higher_is_better(Domain domain);

// Seeded policy return for RL tasks.
double policy_value(const Vector& theta, const TaskSpec& task,
                    const ExperimentConfig& cfg, const std::string& eval_tag);

struct ZeroShotRow {
  int task_id = 0;
  std::string metric_name;
  int iter = 0;
  double value = 0.0;
};

// Zero-shot prediction for every held-out task; optionally follows each
// prediction with a warm-started PG session (RL domains only).
std::vector<ZeroShotRow> run_zeroshot(const ModelFile& model,
                                      const std::vector<TaskSpec>& heldout,
                                      const ExperimentConfig& cfg,
                                      std::optional<int> warmstart_iters);

// evaluate_policy(theta_init) - evaluate_policy(reference_init) with the
// same rollout seed stream on both sides.
double jumpstart(const Vector& theta_init, const TaskSpec& task,
                 const Vector& reference_init, int n_traj,
                 const ExperimentConfig& cfg);

struct AblationRow {
  std::string subset;
  std::string metric_name;
  double mean = 0.0;
  double stderr_ = 0.0;
  int n_tasks = 0;
};

// Trains one model per non-empty subset of the domain's named descriptor
// groups and scores each on held-out tasks (jumpstart for RL, zero-shot MSE
// for the robot domain). Cells run in parallel up to the LLL_THREADS cap.
std::vector<AblationRow> ablate_descriptors(const ExperimentConfig& cfg);

struct GridRow {
  Hyper hyper;
  double value = 0.0;
  std::string metric_name;
};

// Evaluates each hyperparameter cell by training on the task list and
// scoring mean zero-shot value on the held-out tasks.
std::vector<GridRow> grid_search(const ExperimentConfig& cfg,
                                 const std::vector<TaskSpec>& tasks,
                                 const std::vector<TaskSpec>& heldout,
                                 const std::vector<Hyper>& grid);

struct BenchRow {
  long encounter_index = 0;
  double seconds = 0.0;
};

// Per-encounter wall-clock of the dictionary update alone (sparse coding +
// accumulator + basis refresh); single-task solution time is excluded.
std::vector<BenchRow> bench_runtime(const ExperimentConfig& cfg,
                                    const std::vector<TaskSpec>& tasks);

// Concurrency cap for independent experiment cells (LLL_THREADS, default
// hardware concurrency).
int thread_cap();
void parallel_cells(int n, const std::function<void(int)>& fn);

}  // namespace tadell
