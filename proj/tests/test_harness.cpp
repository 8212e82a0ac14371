#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "tadell/experiment.hpp"
#include "tadell/serialization.hpp"

using namespace tadell;
namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::path("harness_scratch");
    fs::create_directories(dir);
  }
  std::string operator()(const std::string& name) const {
    return (dir / name).string();
  }
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TADELL_CLI_PATH) + " " + args +
                          " >cli_stdout.txt 2>cli_stderr.txt";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::size_t count_data_lines(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::size_t rows = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    ++rows;
  }
  return rows;
}

}  // namespace

TEST_CASE("experiment config round trips through JSON with defaults") {
  ExperimentConfig cfg;
  cfg.domain = "synth1";
  cfg.algorithm = "ella";
  cfg.hyper.k = 9;
  cfg.hyper.rho = 0.25;
  cfg.descriptor_mask = {0, 2};
  const ExperimentConfig back = config_from_json(config_to_json(cfg));
  CHECK(back.domain == "synth1");
  CHECK(back.algorithm == "ella");
  CHECK(back.hyper.k == 9);
  CHECK(back.hyper.rho.has_value());
  CHECK(*back.hyper.rho == doctest::Approx(0.25));
  CHECK(back.descriptor_mask == std::vector<int>{0, 2});

  // missing keys fall back to defaults
  const ExperimentConfig defaults = config_from_json(Json::object());
  CHECK(defaults.algorithm == "tadell");
  CHECK(defaults.hyper.k == 6);
  CHECK_FALSE(defaults.hyper.rho.has_value());
}

TEST_CASE("task files round trip and regenerate byte-identically") {
  Scratch scratch;
  const auto tasks = generate_domain(Domain::synth2, 6, 19);
  save_tasks(scratch("tasks_a.json"), tasks);
  save_tasks(scratch("tasks_b.json"), generate_domain(Domain::synth2, 6, 19));
  CHECK(read_text_file(scratch("tasks_a.json")) ==
        read_text_file(scratch("tasks_b.json")));

  const auto loaded = load_tasks(scratch("tasks_a.json"));
  REQUIRE(loaded.size() == tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    CHECK(loaded[i].id == tasks[i].id);
    CHECK(loaded[i].domain == tasks[i].domain);
    CHECK((loaded[i].descriptor_raw - tasks[i].descriptor_raw).norm() == 0.0);
    CHECK((loaded[i].data->X - tasks[i].data->X).norm() == 0.0);
    CHECK((loaded[i].data->y - tasks[i].data->y).norm() == 0.0);
  }
}

TEST_CASE("robot task data survives the flat-y round trip") {
  Scratch scratch;
  const auto tasks = generate_domain(Domain::robot, 2, 23);
  save_tasks(scratch("robot_tasks.json"), tasks);
  const auto loaded = load_tasks(scratch("robot_tasks.json"));
  CHECK(loaded[0].data->y.cols() == 3);
  CHECK((loaded[0].data->y - tasks[0].data->y).norm() == 0.0);
  CHECK((loaded[1].data->X - tasks[1].data->X).norm() == 0.0);
}

TEST_CASE("model files round trip") {
  Scratch scratch;
  Rng rng(29);
  ModelFile model;
  model.mode = "tadell";
  model.hyper.k = 3;
  model.dict = init_dictionary(4, 2, 3, 11);
  model.unique_tasks = 2;
  for (int t = 0; t < 2; ++t) {
    TaskRecord rec;
    rec.id = t;
    rec.s = rng.normal_vector(3);
    rec.alpha = rng.normal_vector(4);
    rec.gamma = Matrix::Identity(4, 4);
    rec.phi = rng.normal_vector(2);
    model.registry.push_back(rec);
  }
  save_model(scratch("model.json"), model);
  const ModelFile loaded = load_model(scratch("model.json"));
  CHECK(loaded.mode == "tadell");
  CHECK((loaded.dict.L - model.dict.L).norm() == 0.0);
  CHECK((loaded.dict.D - model.dict.D).norm() == 0.0);
  CHECK(loaded.registry.size() == 2);
  CHECK((loaded.registry[1].gamma - Matrix::Identity(4, 4)).norm() == 0.0);

  const Json raw = load_json(scratch("model.json"));
  CHECK(raw.at("schema_version").get<int>() == kSchemaVersion);

  save_model(scratch("model_nogamma.json"), model, false);
  const ModelFile slim = load_model(scratch("model_nogamma.json"));
  CHECK(slim.registry[0].gamma.size() == 0);
}

TEST_CASE("training the stl baseline emits final metrics per task") {
  ExperimentConfig cfg;
  cfg.domain = "synth1";
  cfg.algorithm = "stl";
  cfg.seed = 3;
  cfg.n_test = 200;
  const auto tasks = generate_domain(Domain::synth1, 8, 3);
  const TrainResult result = run_training(cfg, tasks);
  int final_rows = 0;
  for (const MetricsRow& row : result.metrics)
    if (row.metric_name == "final_accuracy") {
      ++final_rows;
      CHECK(row.value >= 0.0);
      CHECK(row.value <= 1.0);
      CHECK(row.encounter_index == -1);
    }
  CHECK(final_rows == 8);
  CHECK(result.model.dict.k() == 0);
}

TEST_CASE("online training visits every task and reports update timings") {
  ExperimentConfig cfg;
  cfg.domain = "synth1";
  cfg.algorithm = "tadell";
  cfg.seed = 5;
  cfg.n_test = 100;
  cfg.hyper.k = 4;
  const auto tasks = generate_domain(Domain::synth1, 10, 5);
  const TrainResult result = run_training(cfg, tasks);
  CHECK(result.model.unique_tasks == 10);
  CHECK(result.model.registry.size() == 10);
  CHECK(result.presentation_order.size() >= 10);
  int timing_rows = 0;
  for (const MetricsRow& row : result.metrics)
    if (row.metric_name == "update_seconds") {
      CHECK(row.value > 0.0);
      ++timing_rows;
    }
  CHECK(timing_rows ==
        static_cast<int>(result.presentation_order.size()));

  // same seed, same presentation order across algorithms
  ExperimentConfig ella_cfg = cfg;
  ella_cfg.algorithm = "ella";
  const TrainResult ella_result = run_training(ella_cfg, tasks);
  CHECK(ella_result.presentation_order == result.presentation_order);
}

TEST_CASE("jumpstart of a policy against itself is exactly zero") {
  ExperimentConfig cfg;
  cfg.domain = "sm";
  const auto tasks = generate_domain(Domain::sm, 1, 7);
  Vector theta(2);
  theta << -0.3, -0.1;
  CHECK(jumpstart(theta, tasks[0], theta, 10, cfg) == 0.0);
}

TEST_CASE("zero-shot rows cover every held-out task") {
  ExperimentConfig cfg;
  cfg.domain = "synth1";
  cfg.algorithm = "tadell";
  cfg.seed = 11;
  cfg.n_test = 100;
  cfg.hyper.k = 6;
  const auto tasks = generate_domain(Domain::synth1, 12, 11);
  const TrainResult trained = run_training(cfg, tasks);
  const auto heldout = generate_domain(Domain::synth1, 5, 1234);
  const auto rows = run_zeroshot(trained.model, heldout, cfg, std::nullopt);
  CHECK(rows.size() == 5);
  for (const auto& row : rows) CHECK(row.metric_name == "zeroshot_accuracy");

  ModelFile ella_model = trained.model;
  ella_model.mode = "ella";
  CHECK_THROWS_AS(run_zeroshot(ella_model, heldout, cfg, std::nullopt),
                  DimensionMismatch);
}

TEST_CASE("cli: gen-tasks writes a deterministic suite plus resolved config") {
  Scratch scratch;
  const std::string out = scratch("sm_tasks.json");
  CHECK(run_cli("gen-tasks --domain sm --count 40 --seed 1 --out " + out) == 0);
  const auto tasks = load_tasks(out);
  CHECK(tasks.size() == 40);
  CHECK(tasks.front().descriptor_raw.size() == 3);
  CHECK(fs::exists(out + ".config.json"));

  const std::string again = scratch("sm_tasks_again.json");
  CHECK(run_cli("gen-tasks --domain sm --count 40 --seed 1 --out " + again) == 0);
  CHECK(read_text_file(out) == read_text_file(again));

  // single-task file
  const std::string tiny = scratch("tiny.json");
  CHECK(run_cli("gen-tasks --domain synth1 --count 1 --seed 2 --out " + tiny) == 0);
  CHECK(load_tasks(tiny).size() == 1);
}

TEST_CASE("cli: train then zeroshot on a small synth1 suite") {
  Scratch scratch;
  const std::string tasks = scratch("train_tasks.json");
  const std::string heldout = scratch("heldout_tasks.json");
  REQUIRE(run_cli("gen-tasks --domain synth1 --count 12 --seed 4 --out " +
                  tasks) == 0);
  REQUIRE(run_cli("gen-tasks --domain synth1 --count 4 --seed 5 --out " +
                  heldout) == 0);

  const std::string model = scratch("model.json");
  const std::string metrics = scratch("metrics.csv");
  CHECK(run_cli("train --algo tadell --tasks " + tasks +
                " --k 4 --mu 0.1 --lambda 0.01 --seed 9 --n-test 100 --out " +
                model + " --metrics " + metrics) == 0);
  CHECK(fs::exists(model));
  CHECK(fs::exists(model + ".config.json"));
  CHECK(count_data_lines(metrics) > 12);

  {
    std::ifstream in(metrics);
    std::string comment, header;
    std::getline(in, comment);
    std::getline(in, header);
    CHECK(comment.rfind("# schema_version=", 0) == 0);
    CHECK(header == "task_id,encounter_index,iter,value,metric_name");
  }

  const std::string zs = scratch("zeroshot.csv");
  CHECK(run_cli("zeroshot --model " + model + " --tasks " + heldout +
                " --n-test 100 --out " + zs) == 0);
  CHECK(count_data_lines(zs) == 4);
  {
    std::ifstream in(zs);
    std::string comment, header;
    std::getline(in, comment);
    std::getline(in, header);
    CHECK(header == "task_id,metric_name,iter,value");
  }

  // an empty held-out file produces a header-only table
  const std::string empty_tasks = scratch("empty.json");
  write_text_file(empty_tasks, "[]\n");
  const std::string zs_empty = scratch("zeroshot_empty.csv");
  CHECK(run_cli("zeroshot --model " + model + " --tasks " + empty_tasks +
                " --out " + zs_empty) == 0);
  CHECK(count_data_lines(zs_empty) == 0);
}

TEST_CASE("cli: exit codes distinguish flag, io, and dimension errors") {
  Scratch scratch;
  CHECK(run_cli("train --algo tadell") == 2);            // missing required flags
  CHECK(run_cli("gen-tasks --domain warp --count 3 --seed 1 --out " +
                scratch("x.json")) == 2);                // unknown domain
  CHECK(run_cli("train --algo tadell --tasks does_not_exist.json --out " +
                scratch("m.json")) == 3);                // unreadable input

  // model/task descriptor mismatch -> 5
  const std::string tasks = scratch("dim_tasks.json");
  REQUIRE(run_cli("gen-tasks --domain synth1 --count 6 --seed 6 --out " +
                  tasks) == 0);
  const std::string model = scratch("dim_model.json");
  REQUIRE(run_cli("train --algo tadell --tasks " + tasks +
                  " --k 3 --seed 6 --n-test 50 --out " + model) == 0);
  const std::string sm_tasks = scratch("dim_sm.json");
  REQUIRE(run_cli("gen-tasks --domain sm --count 2 --seed 6 --out " +
                  sm_tasks) == 0);
  CHECK(run_cli("zeroshot --model " + model + " --tasks " + sm_tasks +
                " --out " + scratch("dim_out.csv")) == 5);

  // ella models cannot answer zero-shot queries
  const std::string ella_model = scratch("dim_ella.json");
  REQUIRE(run_cli("train --algo ella --tasks " + tasks +
                  " --k 3 --seed 6 --n-test 50 --out " + ella_model) == 0);
  CHECK(run_cli("zeroshot --model " + ella_model + " --tasks " + tasks +
                " --out " + scratch("dim_out2.csv")) == 5);
}

TEST_CASE("cli: bench-runtime emits one timing row per encounter") {
  Scratch scratch;
  const std::string tasks = scratch("bench_tasks.json");
  REQUIRE(run_cli("gen-tasks --domain synth1 --count 20 --seed 8 --out " +
                  tasks) == 0);
  const std::string out = scratch("bench.csv");
  CHECK(run_cli("bench-runtime --tasks " + tasks +
                " --algo tadell --presentations single --out " + out) == 0);
  CHECK(count_data_lines(out) == 20);
}

TEST_CASE("cli: grid-search scores every cell") {
  Scratch scratch;
  const std::string tasks = scratch("grid_tasks.json");
  REQUIRE(run_cli("gen-tasks --domain synth1 --count 14 --seed 10 --out " +
                  tasks) == 0);
  const std::string out = scratch("grid.csv");
  CHECK(run_cli("grid-search --tasks " + tasks +
                " --k-grid 3,4 --mu-grid 0.1 --lambda-grid 0.01 --out " + out) ==
        0);
  CHECK(count_data_lines(out) == 2);
}
