#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "tadell/dictionary.hpp"
#include "tadell/environments.hpp"
#include "tadell/lifelong.hpp"

namespace tadell {

// All file schemas are versioned; bump when a format changes shape.
constexpr int kSchemaVersion = 1;

// Key order is part of the byte-for-byte reproducibility contract.
using Json = nlohmann::ordered_json;

Json to_json(const Vector& v);
Json to_json_rowmajor(const Matrix& m);
Vector vector_from_json(const Json& j);
Matrix matrix_from_json_rowmajor(const Json& j, Index rows, Index cols);

Json task_to_json(const TaskSpec& task);
TaskSpec task_from_json(const Json& j);

// Task list files are a plain JSON array of task objects.
void save_tasks(const std::string& path, const std::vector<TaskSpec>& tasks);
std::vector<TaskSpec> load_tasks(const std::string& path);

// Trained-model file: mode, hyperparameters, the coupled dictionary, and the
// per-task registry. gamma matrices are optional to bound file size.
struct ModelFile {
  std::string mode;  // tadell | ella | tademtl | gomtl | stl
  Hyper hyper;
  DescriptorTransform phi;
  CoupledDictionary dict;
  int unique_tasks = 0;
  std::vector<TaskRecord> registry;
};

void save_model(const std::string& path, const ModelFile& model,
                bool include_gamma = true);
ModelFile load_model(const std::string& path);

// Minimal CSV emitter: a "# schema_version=N" comment line, one header line,
// then rows. Numbers are printed with round-trip precision.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::vector<std::string>& cells);
  static std::string num(double v);
  static std::string num(long v);

 private:
  struct Impl;
  Impl* impl_;
};

void write_text_file(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);
void save_json(const std::string& path, const Json& j);
Json load_json(const std::string& path);

}  // namespace tadell
