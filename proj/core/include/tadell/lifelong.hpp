#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "tadell/dictionary.hpp"
#include "tadell/learners.hpp"
#include "tadell/sparse.hpp"
#include "tadell/types.hpp"

namespace tadell {

enum class Mode { ella, tadell };

Mode mode_from_tag(const std::string& tag);
std::string mode_tag(Mode mode);

struct Hyper {
  Index k = 6;
  double mu = 0.1;
  double lambda = 0.01;
  std::optional<double> rho;  // fixed descriptor weight; empty = mean(diag(gamma))
  double jitter = 0.0;        // passed to whiten; 0 = fall back on failure
  double code_tol = 1e-6;     // KKT tolerance of the per-task sparse solves
};

// Maps a raw task descriptor to features: optional index subset, then
// optional per-dimension min-max scaling derived from generation ranges
// (never from observed tasks, so unseen-task features stay well defined).
struct DescriptorTransform {
  std::vector<int> mask;                          // empty = keep all
  std::optional<std::pair<Vector, Vector>> minmax;  // lo/hi per masked dim

  Vector apply(const Vector& raw) const;
  Index output_dim(Index raw_dim) const;
};

// The single mutable object of the online loop.
struct LearnerState {
  Mode mode = Mode::tadell;
  Hyper hyper;
  CoupledDictionary dict;
  Accumulator acc_model;
  Accumulator acc_descr;
  std::map<int, TaskRecord> registry;
  int unique_tasks = 0;
  DescriptorTransform phi;
};

LearnerState make_learner(Mode mode, const Hyper& hyper, Index d, Index d_m,
                          std::uint64_t seed, DescriptorTransform phi = {});

// One online encounter: sparse-codes the single-task solution (jointly with
// the task descriptor in tadell mode), refreshes both bases, and stores the
// record. Revisits replace the task's previous contribution.
void tadell_encounter(LearnerState& state, const TaskSpec& task,
                      const SingleTaskSolution& solution);

// Model read-out for a seen task: L s.
Vector task_model(const LearnerState& state, int task_id);

struct ZeroShotPrediction {
  Vector s_tilde;
  Vector theta_tilde;
};

// Predicts a model for an unseen task from its descriptor features alone:
// sparse-code phi_m against D, then read the model column mix off L.
ZeroShotPrediction zero_shot(const CoupledDictionary& dict, const Vector& phi_m,
                             double mu, const LassoOptions& opts = {});

struct BatchTask {
  int id = 0;
  Vector alpha;
  Matrix gamma;
  Vector phi;   // empty when descriptors are unused
  double rho = 0.0;
};

struct BatchResult {
  CoupledDictionary dict;
  Matrix codes;                        // k x T
  std::vector<double> objective_trace;  // after each alternation
  bool converged = false;
};

// Alternating optimization of the shared bases and all task codes; with
// descriptors this is the coupled batch learner, without them it reduces to
// the classic shared-basis MTL. Each alternation exactly minimizes one
// block, so the tracked objective never increases.
BatchResult batch_mtl(const std::vector<BatchTask>& tasks, const Hyper& hyper,
                      bool use_descriptors, Index d_m, int outer_iters,
                      double tol, std::uint64_t seed);

// Zero-shot prediction followed by a PG session started from it; returns the
// per-iteration batch mean returns (index 0 is the zero-shot policy itself).
std::vector<double> warm_start(const CoupledDictionary& dict,
                               const TaskSpec& task, const Vector& phi_m,
                               double mu, const PgOptions& opts,
                               std::uint64_t seed);

}  // namespace tadell
