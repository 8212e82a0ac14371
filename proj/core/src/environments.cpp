#include "tadell/environments.hpp"

#include <cmath>

namespace tadell {

namespace {

constexpr double kGravity = 9.81;

double sample_interval(Rng& rng, const Interval& iv) {
  if (!(iv.lo <= iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi))
    throw BadRange("generate_domain: empty or non-finite parameter interval");
  return rng.uniform(iv.lo, iv.hi);
}

Interval range_of(const Ranges& ranges, const Ranges& defaults,
                  const std::string& name) {
  auto it = ranges.find(name);
  if (it != ranges.end()) return it->second;
  auto dit = defaults.find(name);
  if (dit == defaults.end())
    throw BadRange("generate_domain: unknown parameter " + name);
  return dit->second;
}

int sign_label(double v) { return v > 0.0 ? 1 : -1; }

}  // namespace

Domain domain_from_tag(const std::string& tag) {
  if (tag == "sm") return Domain::sm;
  if (tag == "cp") return Domain::cp;
  if (tag == "bk") return Domain::bk;
  if (tag == "robot") return Domain::robot;
  if (tag == "synth1") return Domain::synth1;
  if (tag == "synth2") return Domain::synth2;
  throw BadRange("unknown domain tag: " + tag);
}

std::string domain_tag(Domain domain) {
  switch (domain) {
    case Domain::sm: return "sm";
    case Domain::cp: return "cp";
    case Domain::bk: return "bk";
    case Domain::robot: return "robot";
    case Domain::synth1: return "synth1";
    case Domain::synth2: return "synth2";
  }
  throw BadRange("unknown domain");
}

bool is_rl_domain(Domain domain) {
  return domain == Domain::sm || domain == Domain::cp || domain == Domain::bk;
}

Index state_dim(Domain domain) {
  switch (domain) {
    case Domain::sm: return 2;
    case Domain::cp: return 4;
    case Domain::bk: return 2;
    default: throw BadRange("state_dim: not a dynamical-system domain");
  }
}

Ranges default_ranges(Domain domain) {
  switch (domain) {
    case Domain::sm:
      return {{"mass", {0.5, 5.0}}, {"spring", {0.5, 5.0}}, {"damping", {0.5, 5.0}}};
    case Domain::cp:
      return {{"cart_mass", {0.5, 2.0}},
              {"pole_mass", {0.1, 0.5}},
              {"pole_length", {0.3, 1.0}},
              {"damping", {0.1, 1.0}}};
    case Domain::bk:
      return {{"mass", {5.0, 15.0}},   {"com_x", {0.2, 0.6}},
              {"com_z", {0.4, 1.2}},   {"wheelbase", {0.8, 1.4}},
              {"trail", {0.03, 0.1}},  {"head_angle", {0.2, 1.2}}};
    case Domain::robot:
      // "angle" is the joint-angle sampling box for training and test points
      return {{"twist", {-M_PI, M_PI}},
              {"length", {0.1, 1.0}},
              {"offset", {0.1, 1.0}},
              {"angle", {-M_PI, M_PI}}};
    case Domain::synth1:
      return {{"m", {-0.5, 0.5}}, {"x", {-0.5, 0.5}}};
    case Domain::synth2:
      return {};
  }
  throw BadRange("unknown domain");
}

namespace {

TaskSpec make_sm_task(int id, Rng& rng, const Ranges& ranges) {
  const Ranges defs = default_ranges(Domain::sm);
  SmParams p;
  p.mass = sample_interval(rng, range_of(ranges, defs, "mass"));
  p.spring = sample_interval(rng, range_of(ranges, defs, "spring"));
  p.damping = sample_interval(rng, range_of(ranges, defs, "damping"));
  TaskSpec task;
  task.id = id;
  task.domain = Domain::sm;
  task.params = p;
  task.descriptor_raw = Vector(3);
  task.descriptor_raw << p.mass, p.spring, p.damping;
  task.goal = Vector::Zero(2);
  return task;
}

TaskSpec make_cp_task(int id, Rng& rng, const Ranges& ranges) {
  const Ranges defs = default_ranges(Domain::cp);
  CpParams p;
  p.cart_mass = sample_interval(rng, range_of(ranges, defs, "cart_mass"));
  p.pole_mass = sample_interval(rng, range_of(ranges, defs, "pole_mass"));
  p.pole_length = sample_interval(rng, range_of(ranges, defs, "pole_length"));
  p.damping = sample_interval(rng, range_of(ranges, defs, "damping"));
  TaskSpec task;
  task.id = id;
  task.domain = Domain::cp;
  task.params = p;
  task.descriptor_raw = Vector(4);
  task.descriptor_raw << p.cart_mass, p.pole_mass, p.pole_length, p.damping;
  task.goal = Vector::Zero(4);
  return task;
}

TaskSpec make_bk_task(int id, Rng& rng, const Ranges& ranges) {
  const Ranges defs = default_ranges(Domain::bk);
  BkParams p;
  p.mass = sample_interval(rng, range_of(ranges, defs, "mass"));
  p.com_x = sample_interval(rng, range_of(ranges, defs, "com_x"));
  p.com_z = sample_interval(rng, range_of(ranges, defs, "com_z"));
  p.wheelbase = sample_interval(rng, range_of(ranges, defs, "wheelbase"));
  p.trail = sample_interval(rng, range_of(ranges, defs, "trail"));
  p.head_angle = sample_interval(rng, range_of(ranges, defs, "head_angle"));
  if (p.head_angle <= 0.0 || p.head_angle >= M_PI / 2.0)
    throw BadRange("bk head angle must lie in (0, pi/2)");
  TaskSpec task;
  task.id = id;
  task.domain = Domain::bk;
  task.params = p;
  task.descriptor_raw = Vector(6);
  task.descriptor_raw << p.mass, p.com_x, p.com_z, p.wheelbase, p.trail,
      p.head_angle;
  task.goal = Vector::Zero(2);
  return task;
}

TaskSpec make_synth1_task(int id, Rng& rng, const Ranges& ranges,
                          const GenOptions& opts) {
  const Ranges defs = default_ranges(Domain::synth1);
  const Interval m_iv = range_of(ranges, defs, "m");
  const Interval x_iv = range_of(ranges, defs, "x");
  const Index dim = opts.synth_dim;
  Synth1Params p;
  p.m = Vector(dim);
  for (Index i = 0; i < dim; ++i) p.m(i) = sample_interval(rng, m_iv);

  SupervisedData data;
  data.X = Matrix(opts.n_points, dim);
  data.y = Matrix(opts.n_points, 1);
  for (int n = 0; n < opts.n_points; ++n) {
    for (Index i = 0; i < dim; ++i) data.X(n, i) = sample_interval(rng, x_iv);
    data.y(n, 0) = sign_label(data.X.row(n).dot(p.m));
  }

  TaskSpec task;
  task.id = id;
  task.domain = Domain::synth1;
  task.descriptor_raw = p.m;
  task.params = p;
  task.data = std::move(data);
  return task;
}

TaskSpec make_synth2_task(int id, Rng& rng, const GenOptions& opts,
                          const Matrix& basis_model, const Matrix& basis_descr) {
  const Index k = basis_model.cols();
  Vector s = Vector::Zero(k);
  // planted sparse code: fixed number of nonzero entries
  std::vector<Index> idx(k);
  for (Index i = 0; i < k; ++i) idx[i] = i;
  for (int pick = 0; pick < opts.synth2_sparsity && pick < k; ++pick) {
    const int j = pick + rng.uniform_int(static_cast<int>(k) - pick);
    std::swap(idx[pick], idx[j]);
    s(idx[pick]) = rng.normal();
  }

  Synth2Params p;
  p.theta_true = basis_model * s;
  p.descriptor = basis_descr * s;

  SupervisedData data;
  data.X = Matrix(opts.n_points, basis_model.rows());
  data.y = Matrix(opts.n_points, 1);
  for (int n = 0; n < opts.n_points; ++n) {
    for (Index i = 0; i < basis_model.rows(); ++i) data.X(n, i) = rng.normal();
    data.y(n, 0) = sign_label(data.X.row(n).dot(p.theta_true));
  }

  TaskSpec task;
  task.id = id;
  task.domain = Domain::synth2;
  task.descriptor_raw = p.descriptor;
  task.params = p;
  task.data = std::move(data);
  return task;
}

RobotParams sample_robot_params(Rng& rng, const Ranges& ranges) {
  const Ranges defs = default_ranges(Domain::robot);
  const Interval twist_iv = range_of(ranges, defs, "twist");
  const Interval len_iv = range_of(ranges, defs, "length");
  const Interval off_iv = range_of(ranges, defs, "offset");
  RobotParams p;
  for (int j = 0; j < 8; ++j) {
    p.twist[j] = sample_interval(rng, twist_iv);
    p.length[j] = sample_interval(rng, len_iv);
    p.offset[j] = sample_interval(rng, off_iv);
  }
  return p;
}

}  // namespace

std::vector<TaskSpec> generate_domain(Domain domain, int count,
                                      std::uint64_t seed,
                                      const GenOptions& opts) {
  if (count < 1) throw BadRange("generate_domain: count must be >= 1");
  Rng rng(derive_seed(seed, "generate", static_cast<std::uint64_t>(domain)));
  std::vector<TaskSpec> tasks;
  tasks.reserve(count);

  // synth2 plants one latent factorization shared by every task in the suite
  Matrix basis_model, basis_descr;
  if (domain == Domain::synth2) {
    basis_model = rng.normal_matrix(opts.synth_dim, opts.synth2_latent);
    basis_descr = rng.normal_matrix(opts.synth2_dm, opts.synth2_latent);
  }

  for (int id = 0; id < count; ++id) {
    switch (domain) {
      case Domain::sm:
        tasks.push_back(make_sm_task(id, rng, opts.ranges));
        break;
      case Domain::cp:
        tasks.push_back(make_cp_task(id, rng, opts.ranges));
        break;
      case Domain::bk:
        tasks.push_back(make_bk_task(id, rng, opts.ranges));
        break;
      case Domain::robot: {
        const RobotParams params = sample_robot_params(rng, opts.ranges);
        const Interval angle_iv = range_of(opts.ranges,
                                           default_ranges(Domain::robot),
                                           "angle");
        tasks.push_back(make_robot_task(id, params, opts.n_points,
                                        rng.next_u64(), angle_iv));
        break;
      }
      case Domain::synth1:
        tasks.push_back(make_synth1_task(id, rng, opts.ranges, opts));
        break;
      case Domain::synth2:
        tasks.push_back(make_synth2_task(id, rng, opts, basis_model, basis_descr));
        break;
    }
  }
  return tasks;
}

StepResult step(const SystemParams& params, const Vector& state, double action,
                double dt, const Vector& goal) {
  Vector next;
  if (const auto* sm = std::get_if<SmParams>(&params)) {
    require(state.size() == 2, "step: sm state must be 2-dimensional");
    const double accel =
        (-sm->spring * state(0) - sm->damping * state(1) + action) / sm->mass;
    next = Vector(2);
    next(1) = state(1) + dt * accel;
    next(0) = state(0) + dt * next(1);
  } else if (const auto* cp = std::get_if<CpParams>(&params)) {
    require(state.size() == 4, "step: cp state must be 4-dimensional");
    const double total = cp->cart_mass + cp->pole_mass;
    const double sin_a = std::sin(state(2));
    const double cos_a = std::cos(state(2));
    const double temp = (action +
                         cp->pole_mass * cp->pole_length * state(3) * state(3) * sin_a -
                         cp->damping * state(1)) /
                        total;
    const double ang_accel =
        (kGravity * sin_a - cos_a * temp) /
        (cp->pole_length * (4.0 / 3.0 - cp->pole_mass * cos_a * cos_a / total));
    const double cart_accel =
        temp - cp->pole_mass * cp->pole_length * ang_accel * cos_a / total;
    next = Vector(4);
    next(1) = state(1) + dt * cart_accel;
    next(3) = state(3) + dt * ang_accel;
    next(0) = state(0) + dt * next(1);
    next(2) = state(2) + dt * next(3);
  } else if (const auto* bk = std::get_if<BkParams>(&params)) {
    require(state.size() == 2, "step: bk state must be 2-dimensional");
    const double coupling = bk->trail * std::sin(bk->head_angle) / bk->wheelbase;
    const double tilt_accel =
        (kGravity * bk->mass * bk->com_z * state(0) + coupling * action) /
        (bk->mass * bk->com_z * bk->com_z);
    next = Vector(2);
    next(1) = state(1) + dt * tilt_accel;
    next(0) = state(0) + dt * next(1);
  } else if (const auto* null_sys = std::get_if<NullSystemParams>(&params)) {
    if (null_sys->action_cost) return {state, -action * action};
    require(goal.size() == state.size(), "step: goal dimension");
    return {state, -(state - goal).norm()};
  } else {
    throw BadRange("step: params do not describe a dynamical system");
  }

  if (!next.allFinite() || next.cwiseAbs().maxCoeff() > kStateBlowupLimit)
    throw NonFinite("step: state diverged");
  require(goal.size() == next.size(), "step: goal dimension");
  return {next, -(next - goal).norm()};
}

Vector robot_fk(const RobotParams& params, const Vector& joint_angles) {
  require(joint_angles.size() == 8, "robot_fk: need 8 joint angles");
  require_finite(joint_angles, "robot_fk: joint angles");
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  for (int j = 0; j < 8; ++j) {
    const double ct = std::cos(joint_angles(j));
    const double st = std::sin(joint_angles(j));
    const double ca = std::cos(params.twist[j]);
    const double sa = std::sin(params.twist[j]);
    const double a = params.length[j];
    const double d = params.offset[j];
    Eigen::Matrix4d link;  // RotZ(theta) TransZ(d) TransX(a) RotX(twist)
    link << ct, -st * ca, st * sa, a * ct,
            st, ct * ca, -ct * sa, a * st,
            0.0, sa, ca, d,
            0.0, 0.0, 0.0, 1.0;
    t *= link;
  }
  return t.block<3, 1>(0, 3);
}

Vector robot_features(const Vector& joint_angles) {
  require(joint_angles.size() == 8, "robot_features: need 8 joint angles");
  Vector f(17);
  for (int j = 0; j < 8; ++j) {
    f(j) = std::sin(joint_angles(j));
    f(8 + j) = std::cos(joint_angles(j));
  }
  f(16) = 1.0;
  return f;
}

TaskSpec make_robot_task(int id, const RobotParams& params, int n_points,
                         std::uint64_t seed, const Interval& angle_range) {
  if (n_points < 1) throw BadRange("make_robot_task: n_points must be >= 1");
  Rng rng(seed);
  SupervisedData data;
  data.X = Matrix(n_points, 17);
  data.y = Matrix(n_points, 3);
  for (int n = 0; n < n_points; ++n) {
    const Vector angles =
        rng.uniform_vector(8, angle_range.lo, angle_range.hi);
    data.X.row(n) = robot_features(angles).transpose();
    data.y.row(n) = robot_fk(params, angles).transpose();
  }

  TaskSpec task;
  task.id = id;
  task.domain = Domain::robot;
  task.params = params;
  task.descriptor_raw = Vector(24);
  for (int j = 0; j < 8; ++j) {
    task.descriptor_raw(3 * j) = params.twist[j];
    task.descriptor_raw(3 * j + 1) = params.length[j];
    task.descriptor_raw(3 * j + 2) = params.offset[j];
  }
  task.data = std::move(data);
  return task;
}

Vector initial_state(const TaskSpec& task, Rng& rng) {
  if (const auto* fixture = std::get_if<NullSystemParams>(&task.params)) {
    if (fixture->fixed_state.size() > 0) return fixture->fixed_state;
  }
  switch (task.domain) {
    case Domain::sm: {
      Vector s(2);
      s << rng.uniform(-1.0, 1.0), rng.uniform(-0.5, 0.5);
      return s;
    }
    case Domain::cp: {
      Vector s(4);
      s << rng.uniform(-0.5, 0.5), rng.uniform(-0.1, 0.1),
          rng.uniform(-0.15, 0.15), rng.uniform(-0.1, 0.1);
      return s;
    }
    case Domain::bk: {
      Vector s(2);
      s << rng.uniform(-0.15, 0.15), rng.uniform(-0.1, 0.1);
      return s;
    }
    default:
      throw BadRange("initial_state: not a dynamical-system domain");
  }
}

SupervisedData make_test_data(const TaskSpec& task, int n_points,
                              std::uint64_t seed) {
  if (n_points < 1) throw BadRange("make_test_data: n_points must be >= 1");
  Rng rng(seed);
  SupervisedData data;
  if (const auto* p = std::get_if<Synth1Params>(&task.params)) {
    const Index dim = p->m.size();
    data.X = Matrix(n_points, dim);
    data.y = Matrix(n_points, 1);
    for (int n = 0; n < n_points; ++n) {
      for (Index i = 0; i < dim; ++i) data.X(n, i) = rng.uniform(-0.5, 0.5);
      data.y(n, 0) = sign_label(data.X.row(n).dot(p->m));
    }
  } else if (const auto* p2 = std::get_if<Synth2Params>(&task.params)) {
    const Index dim = p2->theta_true.size();
    data.X = Matrix(n_points, dim);
    data.y = Matrix(n_points, 1);
    for (int n = 0; n < n_points; ++n) {
      for (Index i = 0; i < dim; ++i) data.X(n, i) = rng.normal();
      data.y(n, 0) = sign_label(data.X.row(n).dot(p2->theta_true));
    }
  } else if (const auto* pr = std::get_if<RobotParams>(&task.params)) {
    const Interval angle_iv = default_ranges(Domain::robot).at("angle");
    data.X = Matrix(n_points, 17);
    data.y = Matrix(n_points, 3);
    for (int n = 0; n < n_points; ++n) {
      const Vector angles = rng.uniform_vector(8, angle_iv.lo, angle_iv.hi);
      data.X.row(n) = robot_features(angles).transpose();
      data.y.row(n) = robot_fk(*pr, angles).transpose();
    }
  } else {
    throw BadRange("make_test_data: task has no supervised generative model");
  }
  return data;
}

std::vector<std::pair<std::string, std::vector<int>>> descriptor_groups(
    Domain domain) {
  switch (domain) {
    case Domain::sm:
      return {{"M", {0}}, {"K", {1}}, {"D", {2}}};
    case Domain::robot: {
      std::vector<int> tw, len, off;
      for (int j = 0; j < 8; ++j) {
        tw.push_back(3 * j);
        len.push_back(3 * j + 1);
        off.push_back(3 * j + 2);
      }
      return {{"t", tw}, {"l", len}, {"o", off}};
    }
    default:
      throw BadRange("descriptor_groups: no named groups for this domain");
  }
}

}  // namespace tadell
