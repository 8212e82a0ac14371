#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tadell/rng.hpp"
#include "tadell/types.hpp"

namespace tadell {

enum class Domain { sm, cp, bk, robot, synth1, synth2 };

Domain domain_from_tag(const std::string& tag);
std::string domain_tag(Domain domain);
bool is_rl_domain(Domain domain);
Index state_dim(Domain domain);

// Spring-mass-damper: m x'' = -k x - c x' + u. State (position, velocity).
struct SmParams {
  double mass = 1.0;
  double spring = 1.0;
  double damping = 0.1;
};

// Cart-pole balancing, pole angle measured from upright. State
// (cart pos, cart vel, pole angle, pole angular vel); action is the cart
// force. pole_length is the pivot-to-center-of-mass distance.
struct CpParams {
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double pole_length = 0.5;
  double damping = 0.1;
};

// Bicycle tilt balance, linearized:
//   tilt'' = (g * mass * com_z * tilt + coupling * u) / (mass * com_z^2)
// with coupling = trail * sin(head_angle) / wheelbase. State (tilt,
// tilt rate); action is the handlebar torque. com_x is part of the task
// description but does not enter this reduced model.
struct BkParams {
  double mass = 10.0;
  double com_x = 0.3;
  double com_z = 0.8;
  double wheelbase = 1.0;
  double trail = 0.05;
  double head_angle = 1.2;
};

// 8-DOF serial arm, standard Denavit-Hartenberg parameters per joint.
struct RobotParams {
  std::array<double, 8> twist{};   // rad
  std::array<double, 8> length{};  // m, the DH "a"
  std::array<double, 8> offset{};  // m, the DH "d"
};

struct Synth1Params {
  Vector m;  // true separating direction; doubles as the descriptor
};

struct Synth2Params {
  Vector theta_true;   // planted model L* s*
  Vector descriptor;   // planted descriptor D* s*
};

// Diagnostic frozen system for policy-learner sanity checks: the state never
// changes. Reward is -action^2 when action_cost is set (the optimal policy
// is zero), otherwise the usual negative distance to the goal.
struct NullSystemParams {
  Vector fixed_state;  // empty = draw from the domain's initial-state box
  bool action_cost = true;
};

using SystemParams =
    std::variant<SmParams, CpParams, BkParams, RobotParams, Synth1Params,
                 Synth2Params, NullSystemParams>;

// Labeled sample set. y is n x 1 for scalar targets and classification,
// n x 3 for robot end-effector positions.
struct SupervisedData {
  Matrix X;
  Matrix y;
};

struct TaskSpec {
  int id = 0;
  Domain domain = Domain::sm;
  Vector descriptor_raw;
  SystemParams params;
  std::optional<SupervisedData> data;
  Vector goal;  // empty for supervised domains
};

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

using Ranges = std::map<std::string, Interval>;

// Parameter sampling intervals used by generate_domain; every generated
// task file records the resolved values.
Ranges default_ranges(Domain domain);

struct GenOptions {
  Ranges ranges;          // empty entries fall back to default_ranges
  int n_points = 10;      // training samples per supervised task
  Index synth_dim = 8;    // d for synth domains
  Index synth2_dm = 8;    // descriptor dimension of synth2
  Index synth2_latent = 6;
  int synth2_sparsity = 3;
};

std::vector<TaskSpec> generate_domain(Domain domain, int count,
                                      std::uint64_t seed,
                                      const GenOptions& opts = {});

// One semi-implicit Euler step of the named dynamical system; reward is
// the negative Euclidean distance of the next state to the goal. Throws
// NonFinite when the state leaves the representable range.
struct StepResult {
  Vector state;
  double reward = 0.0;
};
StepResult step(const SystemParams& params, const Vector& state, double action,
                double dt, const Vector& goal);

constexpr double kDefaultDt = 0.01;
constexpr double kStateBlowupLimit = 1e6;

// End-effector position of the 8-joint DH chain at the given joint angles.
Vector robot_fk(const RobotParams& params, const Vector& joint_angles);

// [sin(q), cos(q), 1] featurization of the 8 joint angles (17 features).
Vector robot_features(const Vector& joint_angles);

TaskSpec make_robot_task(int id, const RobotParams& params, int n_points,
                         std::uint64_t seed,
                         const Interval& angle_range = {-M_PI, M_PI});

// Initial state draw for RL rollouts (fixed per-domain box; a NullSystem
// fixture with a pinned state returns that state).
Vector initial_state(const TaskSpec& task, Rng& rng);

// Fresh evaluation data drawn from the task's generative model; n x d inputs
// with ground-truth targets. Supervised domains only.
SupervisedData make_test_data(const TaskSpec& task, int n_points,
                              std::uint64_t seed);

// Descriptor group labels for the ablation harness ("M"/"K"/"D" for sm,
// "t"/"l"/"o" for robot): name -> indices into descriptor_raw.
std::vector<std::pair<std::string, std::vector<int>>> descriptor_groups(
    Domain domain);

}  // namespace tadell
