#include "tadell/serialization.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace tadell {

Json to_json(const Vector& v) {
  Json arr = Json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Json to_json_rowmajor(const Matrix& m) {
  Json arr = Json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
  return arr;
}

Vector vector_from_json(const Json& j) {
  Vector v(j.size());
  Index i = 0;
  for (const auto& x : j) v(i++) = x.get<double>();
  return v;
}

Matrix matrix_from_json_rowmajor(const Json& j, Index rows, Index cols) {
  if (static_cast<Index>(j.size()) != rows * cols)
    throw IoError("matrix payload has wrong length");
  Matrix m(rows, cols);
  Index flat = 0;
  for (const auto& x : j) {
    m(flat / cols, flat % cols) = x.get<double>();
    ++flat;
  }
  return m;
}

namespace {

Json nested_rows(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_nested(const Json& j) {
  const Index rows = static_cast<Index>(j.size());
  if (rows == 0) return Matrix(0, 0);
  const Index cols = static_cast<Index>(j.front().size());
  Matrix m(rows, cols);
  Index i = 0;
  for (const auto& row : j) {
    if (static_cast<Index>(row.size()) != cols)
      throw IoError("ragged matrix rows in task file");
    Index jj = 0;
    for (const auto& x : row) m(i, jj++) = x.get<double>();
    ++i;
  }
  return m;
}

Json params_to_json(const SystemParams& params) {
  Json j = Json::object();
  if (const auto* p = std::get_if<SmParams>(&params)) {
    j["mass"] = p->mass;
    j["spring"] = p->spring;
    j["damping"] = p->damping;
  } else if (const auto* p = std::get_if<CpParams>(&params)) {
    j["cart_mass"] = p->cart_mass;
    j["pole_mass"] = p->pole_mass;
    j["pole_length"] = p->pole_length;
    j["damping"] = p->damping;
  } else if (const auto* p = std::get_if<BkParams>(&params)) {
    j["mass"] = p->mass;
    j["com_x"] = p->com_x;
    j["com_z"] = p->com_z;
    j["wheelbase"] = p->wheelbase;
    j["trail"] = p->trail;
    j["head_angle"] = p->head_angle;
  } else if (const auto* p = std::get_if<RobotParams>(&params)) {
    j["twist"] = Json(p->twist);
    j["length"] = Json(p->length);
    j["offset"] = Json(p->offset);
  } else if (const auto* p = std::get_if<Synth1Params>(&params)) {
    j["m"] = to_json(p->m);
  } else if (const auto* p = std::get_if<Synth2Params>(&params)) {
    j["theta_true"] = to_json(p->theta_true);
    j["descriptor"] = to_json(p->descriptor);
  }
  return j;
}

SystemParams params_from_json(Domain domain, const Json& j) {
  switch (domain) {
    case Domain::sm: {
      SmParams p;
      p.mass = j.at("mass").get<double>();
      p.spring = j.at("spring").get<double>();
      p.damping = j.at("damping").get<double>();
      return p;
    }
    case Domain::cp: {
      CpParams p;
      p.cart_mass = j.at("cart_mass").get<double>();
      p.pole_mass = j.at("pole_mass").get<double>();
      p.pole_length = j.at("pole_length").get<double>();
      p.damping = j.at("damping").get<double>();
      return p;
    }
    case Domain::bk: {
      BkParams p;
      p.mass = j.at("mass").get<double>();
      p.com_x = j.at("com_x").get<double>();
      p.com_z = j.at("com_z").get<double>();
      p.wheelbase = j.at("wheelbase").get<double>();
      p.trail = j.at("trail").get<double>();
      p.head_angle = j.at("head_angle").get<double>();
      return p;
    }
    case Domain::robot: {
      RobotParams p;
      for (int i = 0; i < 8; ++i) {
        p.twist[i] = j.at("twist").at(i).get<double>();
        p.length[i] = j.at("length").at(i).get<double>();
        p.offset[i] = j.at("offset").at(i).get<double>();
      }
      return p;
    }
    case Domain::synth1: {
      Synth1Params p;
      p.m = vector_from_json(j.at("m"));
      return p;
    }
    case Domain::synth2: {
      Synth2Params p;
      p.theta_true = vector_from_json(j.at("theta_true"));
      p.descriptor = vector_from_json(j.at("descriptor"));
      return p;
    }
  }
  throw IoError("params_from_json: unknown domain");
}

}  // namespace

Json task_to_json(const TaskSpec& task) {
  Json j = Json::object();
  j["id"] = task.id;
  j["domain"] = domain_tag(task.domain);
  j["descriptor_raw"] = to_json(task.descriptor_raw);
  j["params"] = params_to_json(task.params);
  if (task.data) {
    Json data = Json::object();
    data["X"] = nested_rows(task.data->X);
    data["y"] = to_json_rowmajor(task.data->y);  // row-major flatten
    j["data"] = std::move(data);
  }
  j["goal"] = to_json(task.goal);
  return j;
}

TaskSpec task_from_json(const Json& j) {
  TaskSpec task;
  task.id = j.at("id").get<int>();
  task.domain = domain_from_tag(j.at("domain").get<std::string>());
  task.descriptor_raw = vector_from_json(j.at("descriptor_raw"));
  task.params = params_from_json(task.domain, j.at("params"));
  if (j.contains("data")) {
    SupervisedData data;
    data.X = matrix_from_nested(j.at("data").at("X"));
    const Json& y = j.at("data").at("y");
    const Index n = data.X.rows();
    const Index cols = n > 0 ? static_cast<Index>(y.size()) / n : 1;
    data.y = matrix_from_json_rowmajor(y, n, cols);
    task.data = std::move(data);
  }
  if (j.contains("goal")) task.goal = vector_from_json(j.at("goal"));
  return task;
}

void save_tasks(const std::string& path, const std::vector<TaskSpec>& tasks) {
  Json arr = Json::array();
  for (const TaskSpec& t : tasks) arr.push_back(task_to_json(t));
  save_json(path, arr);
}

std::vector<TaskSpec> load_tasks(const std::string& path) {
  const Json arr = load_json(path);
  if (!arr.is_array()) throw IoError("task file must be a JSON array: " + path);
  std::vector<TaskSpec> tasks;
  tasks.reserve(arr.size());
  for (const auto& j : arr) tasks.push_back(task_from_json(j));
  return tasks;
}

namespace {

Json hyper_to_json(const Hyper& h) {
  Json j = Json::object();
  j["k"] = h.k;
  j["mu"] = h.mu;
  j["lambda"] = h.lambda;
  j["rho"] = h.rho ? Json(*h.rho) : Json(nullptr);
  j["jitter"] = h.jitter;
  j["code_tol"] = h.code_tol;
  return j;
}

Hyper hyper_from_json(const Json& j) {
  Hyper h;
  h.k = j.at("k").get<Index>();
  h.mu = j.at("mu").get<double>();
  h.lambda = j.at("lambda").get<double>();
  if (!j.at("rho").is_null()) h.rho = j.at("rho").get<double>();
  h.jitter = j.at("jitter").get<double>();
  h.code_tol = j.value("code_tol", h.code_tol);
  return h;
}

Json phi_to_json(const DescriptorTransform& phi) {
  Json j = Json::object();
  j["mask"] = Json(phi.mask);
  if (phi.minmax) {
    Json mm = Json::object();
    mm["lo"] = to_json(phi.minmax->first);
    mm["hi"] = to_json(phi.minmax->second);
    j["minmax"] = std::move(mm);
  } else {
    j["minmax"] = nullptr;
  }
  return j;
}

DescriptorTransform phi_from_json(const Json& j) {
  DescriptorTransform phi;
  phi.mask = j.at("mask").get<std::vector<int>>();
  if (!j.at("minmax").is_null())
    phi.minmax = {vector_from_json(j.at("minmax").at("lo")),
                  vector_from_json(j.at("minmax").at("hi"))};
  return phi;
}

}  // namespace

void save_model(const std::string& path, const ModelFile& model,
                bool include_gamma) {
  Json j = Json::object();
  j["schema_version"] = kSchemaVersion;
  j["mode"] = model.mode;
  j["hyper"] = hyper_to_json(model.hyper);
  j["descriptor_transform"] = phi_to_json(model.phi);

  Json dict = Json::object();
  dict["d"] = model.dict.L.rows();
  dict["d_m"] = model.dict.D.rows();
  dict["k"] = model.dict.L.cols();
  dict["L"] = to_json_rowmajor(model.dict.L);
  dict["D"] = to_json_rowmajor(model.dict.D);
  dict["hyperparams"] = hyper_to_json(model.hyper);
  dict["T"] = model.unique_tasks;
  j["dictionary"] = std::move(dict);

  Json registry = Json::array();
  for (const TaskRecord& r : model.registry) {
    Json entry = Json::object();
    entry["id"] = r.id;
    entry["s"] = to_json(r.s);
    entry["alpha"] = to_json(r.alpha);
    if (include_gamma) entry["gamma"] = to_json_rowmajor(r.gamma);
    entry["phi_m"] = to_json(r.phi);
    registry.push_back(std::move(entry));
  }
  j["registry"] = std::move(registry);
  save_json(path, j);
}

ModelFile load_model(const std::string& path) {
  const Json j = load_json(path);
  ModelFile model;
  model.mode = j.at("mode").get<std::string>();
  model.hyper = hyper_from_json(j.at("hyper"));
  model.phi = phi_from_json(j.at("descriptor_transform"));
  const Json& dict = j.at("dictionary");
  const Index d = dict.at("d").get<Index>();
  const Index d_m = dict.at("d_m").get<Index>();
  const Index k = dict.at("k").get<Index>();
  model.dict.L = matrix_from_json_rowmajor(dict.at("L"), d, k);
  model.dict.D = matrix_from_json_rowmajor(dict.at("D"), d_m, k);
  model.unique_tasks = dict.at("T").get<int>();
  for (const auto& entry : j.at("registry")) {
    TaskRecord r;
    r.id = entry.at("id").get<int>();
    r.s = vector_from_json(entry.at("s"));
    r.alpha = vector_from_json(entry.at("alpha"));
    if (entry.contains("gamma"))
      r.gamma = matrix_from_json_rowmajor(entry.at("gamma"), r.alpha.size(),
                                          r.alpha.size());
    r.phi = vector_from_json(entry.at("phi_m"));
    model.registry.push_back(std::move(r));
  }
  return model;
}

struct CsvWriter::Impl {
  std::ofstream out;
};

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& header)
    : impl_(new Impl) {
  impl_->out.open(path);
  if (!impl_->out) {
    delete impl_;
    throw IoError("cannot open for writing: " + path);
  }
  impl_->out << "# schema_version=" << kSchemaVersion << "\n";
  for (std::size_t i = 0; i < header.size(); ++i)
    impl_->out << (i ? "," : "") << header[i];
  impl_->out << "\n";
}

CsvWriter::~CsvWriter() { delete impl_; }

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i)
    impl_->out << (i ? "," : "") << cells[i];
  impl_->out << "\n";
}

std::string CsvWriter::num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string CsvWriter::num(long v) { return std::to_string(v); }

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << contents;
  if (!out) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_json(const std::string& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

Json load_json(const std::string& path) {
  try {
    return Json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("failed to parse " + path + ": " + e.what());
  }
}

}  // namespace tadell
