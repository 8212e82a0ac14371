// Command-line front end: task generation, training, zero-shot prediction,
// descriptor ablation, hyperparameter grid search, and update-time
// benchmarking. Exit codes: 0 ok, 2 bad flags, 3 I/O failure, 4 solver
// non-convergence under --strict, 5 dimension mismatch.
#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <sstream>

#include "tadell/experiment.hpp"
#include "tadell/serialization.hpp"

namespace {

using namespace tadell;

constexpr int kExitBadFlags = 2;
constexpr int kExitIo = 3;
constexpr int kExitNonConvergence = 4;
constexpr int kExitDimension = 5;

Ranges ranges_from_file(const std::string& path) {
  const Json j = load_json(path);
  Ranges ranges;
  for (const auto& [name, iv] : j.items()) {
    if (!iv.is_array() || iv.size() != 2)
      throw BadRange("ranges file: '" + name + "' must be [lo, hi]");
    ranges[name] = {iv.at(0).get<double>(), iv.at(1).get<double>()};
  }
  return ranges;
}

void write_resolved_config(const std::string& out_path,
                           const ExperimentConfig& cfg) {
  save_json(out_path + ".config.json", config_to_json(cfg));
}

std::vector<double> parse_grid_values(const std::string& csv) {
  std::vector<double> values;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
  if (values.empty()) throw BadRange("empty grid: " + csv);
  return values;
}

int cmd_gen_tasks(const std::string& domain_tag_str, int count,
                  std::uint64_t seed, const std::string& out,
                  const std::string& ranges_path, int n_points) {
  const Domain domain = domain_from_tag(domain_tag_str);
  GenOptions opts;
  opts.n_points = n_points;
  if (!ranges_path.empty()) opts.ranges = ranges_from_file(ranges_path);

  const std::vector<TaskSpec> tasks = generate_domain(domain, count, seed, opts);
  save_tasks(out, tasks);

  ExperimentConfig cfg;
  cfg.domain = domain_tag_str;
  cfg.seed = seed;
  cfg.n_tasks = count;
  cfg.n_points = n_points;
  Json resolved = config_to_json(cfg);
  Json ranges_json = Json::object();
  Ranges resolved_ranges = default_ranges(domain);
  for (const auto& [name, iv] : opts.ranges) resolved_ranges[name] = iv;
  for (const auto& [name, iv] : resolved_ranges)
    ranges_json[name] = Json::array({iv.lo, iv.hi});
  resolved["ranges"] = std::move(ranges_json);
  save_json(out + ".config.json", resolved);

  std::cout << tasks.size() << " tasks written to " << out << "\n";
  return 0;
}

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows) {
  CsvWriter csv(path, {"task_id", "encounter_index", "iter", "value",
                       "metric_name"});
  for (const MetricsRow& m : rows)
    csv.row({CsvWriter::num(static_cast<long>(m.task_id)),
             CsvWriter::num(m.encounter_index),
             CsvWriter::num(static_cast<long>(m.iter)), CsvWriter::num(m.value),
             m.metric_name});
}

int cmd_train(ExperimentConfig cfg, const std::string& tasks_path,
              const std::string& model_out, const std::string& metrics_out) {
  const std::vector<TaskSpec> tasks = load_tasks(tasks_path);
  if (tasks.empty()) throw BadRange("task file is empty: " + tasks_path);
  cfg.domain = domain_tag(tasks.front().domain);
  cfg.n_tasks = static_cast<int>(tasks.size());

  const TrainResult result = run_training(cfg, tasks);
  if (result.any_nonconverged)
    std::cerr << "warning: a solver did not reach tolerance; kept best iterate\n";

  save_model(model_out, result.model, cfg.save_gamma);
  if (!metrics_out.empty()) write_metrics_csv(metrics_out, result.metrics);
  write_resolved_config(model_out, cfg);
  std::cout << "trained " << cfg.algorithm << " on " << tasks.size()
            << " tasks (" << result.presentation_order.size()
            << " presentations) -> " << model_out << "\n";
  return 0;
}

int cmd_zeroshot(const std::string& model_path, const std::string& tasks_path,
                 const std::string& out, std::optional<int> warmstart,
                 ExperimentConfig cfg) {
  const ModelFile model = load_model(model_path);
  const std::vector<TaskSpec> heldout = load_tasks(tasks_path);
  if (!heldout.empty()) cfg.domain = domain_tag(heldout.front().domain);

  const std::vector<ZeroShotRow> rows =
      run_zeroshot(model, heldout, cfg, warmstart);
  CsvWriter csv(out, {"task_id", "metric_name", "iter", "value"});
  for (const ZeroShotRow& r : rows)
    csv.row({CsvWriter::num(static_cast<long>(r.task_id)), r.metric_name,
             CsvWriter::num(static_cast<long>(r.iter)),
             CsvWriter::num(r.value)});
  write_resolved_config(out, cfg);
  std::cout << rows.size() << " rows written to " << out << "\n";
  return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& out) {
  ExperimentConfig cfg = config_from_json(load_json(config_path));
  const std::vector<AblationRow> rows = ablate_descriptors(cfg);
  CsvWriter csv(out, {"subset", "metric_name", "mean", "stderr", "n_tasks"});
  for (const AblationRow& r : rows)
    csv.row({r.subset, r.metric_name, CsvWriter::num(r.mean),
             CsvWriter::num(r.stderr_),
             CsvWriter::num(static_cast<long>(r.n_tasks))});
  write_resolved_config(out, cfg);
  std::cout << rows.size() << " descriptor subsets written to " << out << "\n";
  return 0;
}

int cmd_bench(ExperimentConfig cfg, const std::string& tasks_path,
              const std::string& out) {
  const std::vector<TaskSpec> tasks = load_tasks(tasks_path);
  cfg.domain = domain_tag(tasks.front().domain);
  cfg.n_tasks = static_cast<int>(tasks.size());
  const std::vector<BenchRow> rows = bench_runtime(cfg, tasks);
  CsvWriter csv(out, {"encounter_index", "seconds"});
  for (const BenchRow& r : rows)
    csv.row({CsvWriter::num(r.encounter_index), CsvWriter::num(r.seconds)});
  write_resolved_config(out, cfg);
  std::cout << rows.size() << " encounters timed -> " << out << "\n";
  return 0;
}

int cmd_grid(ExperimentConfig cfg, const std::string& tasks_path,
             const std::string& heldout_path, const std::string& k_grid,
             const std::string& mu_grid, const std::string& lambda_grid,
             const std::string& out) {
  std::vector<TaskSpec> tasks = load_tasks(tasks_path);
  std::vector<TaskSpec> heldout;
  if (!heldout_path.empty()) {
    heldout = load_tasks(heldout_path);
  } else {
    // default split: last 20 tasks held out for scoring
    const int n_hold = std::min<int>(20, static_cast<int>(tasks.size()) / 2);
    heldout.assign(tasks.end() - n_hold, tasks.end());
    tasks.resize(tasks.size() - n_hold);
  }
  cfg.domain = domain_tag(tasks.front().domain);

  std::vector<Hyper> grid;
  for (double k : parse_grid_values(k_grid))
    for (double mu : parse_grid_values(mu_grid))
      for (double lambda : parse_grid_values(lambda_grid)) {
        Hyper h = cfg.hyper;
        h.k = static_cast<Index>(k);
        h.mu = mu;
        h.lambda = lambda;
        grid.push_back(h);
      }

  const std::vector<GridRow> rows = grid_search(cfg, tasks, heldout, grid);
  CsvWriter csv(out, {"k", "mu", "lambda", "metric_name", "value"});
  for (const GridRow& r : rows)
    csv.row({CsvWriter::num(static_cast<long>(r.hyper.k)),
             CsvWriter::num(r.hyper.mu), CsvWriter::num(r.hyper.lambda),
             r.metric_name, CsvWriter::num(r.value)});
  write_resolved_config(out, cfg);
  std::cout << rows.size() << " grid cells written to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lifelong learning with coupled task-descriptor dictionaries"};
  app.require_subcommand(1);

  ExperimentConfig cfg;

  // gen-tasks
  auto* gen = app.add_subcommand("gen-tasks", "Generate a task suite file");
  std::string gen_domain = "sm", gen_out, gen_ranges;
  int gen_count = 40, gen_points = 10;
  std::uint64_t gen_seed = 1;
  gen->add_option("--domain", gen_domain, "sm|cp|bk|robot|synth1|synth2")
      ->required();
  gen->add_option("--count", gen_count, "number of tasks")->required();
  gen->add_option("--seed", gen_seed, "generation seed");
  gen->add_option("--out", gen_out, "output JSON path")->required();
  gen->add_option("--ranges", gen_ranges, "JSON file of parameter ranges");
  gen->add_option("--n-points", gen_points, "training samples per supervised task");

  // train
  auto* train = app.add_subcommand("train", "Train a model over a task suite");
  std::string train_tasks, train_out, train_metrics;
  double train_rho = -1.0;
  train->add_option("--algo", cfg.algorithm, "tadell|ella|tademtl|gomtl|stl")
      ->required();
  train->add_option("--tasks", train_tasks, "task suite JSON")->required();
  train->add_option("--k", cfg.hyper.k, "dictionary size");
  train->add_option("--mu", cfg.hyper.mu, "L1 penalty");
  train->add_option("--lambda", cfg.hyper.lambda, "basis ridge penalty");
  train->add_option("--rho", train_rho, "fixed descriptor weight (default: per-task mean curvature)");
  train->add_option("--seed", cfg.seed, "run seed");
  train->add_option("--out", train_out, "model JSON output")->required();
  train->add_option("--metrics", train_metrics, "metrics CSV output");
  train->add_option("--reg", cfg.reg, "single-task regularizer");
  train->add_option("--n-test", cfg.n_test, "evaluation samples per task");
  train->add_option("--pg-iters", cfg.pg.iters, "PG iterations per session");
  train->add_option("--pg-trajs", cfg.pg.n_traj, "trajectories per PG batch");
  train->add_option("--pg-horizon", cfg.pg.horizon, "rollout horizon");
  train->add_option("--presentations", cfg.presentations,
                    "replacement|single task presentation protocol");
  train->add_flag("--strict", cfg.strict, "exit 4 on solver non-convergence");
  train->add_flag("--scale-descriptors", cfg.scale_descriptors,
                  "min-max scale descriptor features by generation ranges");
  train->add_option("--mask", cfg.descriptor_mask,
                    "descriptor feature indices to keep");

  // zeroshot
  auto* zs = app.add_subcommand("zeroshot",
                                "Predict models for unseen tasks from descriptors");
  std::string zs_model, zs_tasks, zs_out;
  int zs_warm = -1;
  zs->add_option("--model", zs_model, "trained model JSON")->required();
  zs->add_option("--tasks", zs_tasks, "held-out task suite JSON")->required();
  zs->add_option("--out", zs_out, "results CSV")->required();
  zs->add_option("--warmstart", zs_warm, "PG iterations after the zero-shot start");
  zs->add_option("--seed", cfg.seed, "evaluation seed");
  zs->add_option("--n-test", cfg.n_test, "evaluation samples per task");
  zs->add_option("--pg-trajs", cfg.pg.n_traj, "trajectories per evaluation");
  zs->add_option("--pg-horizon", cfg.pg.horizon, "rollout horizon");

  // ablate-descriptors
  auto* ab = app.add_subcommand("ablate-descriptors",
                                "Score every named descriptor subset");
  std::string ab_domain, ab_config, ab_out;
  ab->add_option("--domain", ab_domain, "sm|robot")->required();
  ab->add_option("--model-config", ab_config, "experiment config JSON")
      ->required();
  ab->add_option("--out", ab_out, "subset table CSV")->required();

  // bench-runtime
  auto* bench = app.add_subcommand("bench-runtime",
                                   "Per-encounter dictionary update timings");
  std::string bench_tasks, bench_out;
  bench->add_option("--tasks", bench_tasks, "task suite JSON")->required();
  bench->add_option("--algo", cfg.algorithm, "tadell|ella");
  bench->add_option("--out", bench_out, "timings CSV")->required();
  bench->add_option("--seed", cfg.seed, "run seed");
  bench->add_option("--presentations", cfg.presentations,
                    "replacement|single task presentation protocol");

  // grid-search
  auto* grid = app.add_subcommand("grid-search",
                                  "Score hyperparameters on held-out tasks");
  std::string grid_tasks, grid_heldout, grid_out;
  std::string grid_k = "4,6,8", grid_mu = "0.05,0.1,0.2", grid_lambda = "0.001,0.01,0.1";
  grid->add_option("--tasks", grid_tasks, "training task suite JSON")->required();
  grid->add_option("--heldout", grid_heldout,
                   "held-out suite JSON (default: split last 20)");
  grid->add_option("--k-grid", grid_k, "comma-separated k values");
  grid->add_option("--mu-grid", grid_mu, "comma-separated mu values");
  grid->add_option("--lambda-grid", grid_lambda, "comma-separated lambda values");
  grid->add_option("--algo", cfg.algorithm, "algorithm to tune");
  grid->add_option("--seed", cfg.seed, "run seed");
  grid->add_option("--out", grid_out, "grid table CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitBadFlags;
  }

  try {
    if (train_rho >= 0.0) cfg.hyper.rho = train_rho;
    if (*gen)
      return cmd_gen_tasks(gen_domain, gen_count, gen_seed, gen_out, gen_ranges,
                           gen_points);
    if (*train) return cmd_train(cfg, train_tasks, train_out, train_metrics);
    if (*zs)
      return cmd_zeroshot(zs_model, zs_tasks, zs_out,
                          zs_warm >= 0 ? std::optional<int>(zs_warm)
                                       : std::nullopt,
                          cfg);
    if (*ab) {
      if (!ab_domain.empty()) {
        // the domain flag overrides whatever the config file carries
        Json j = load_json(ab_config);
        j["domain"] = ab_domain;
        save_json(ab_config + ".resolved", j);
        ExperimentConfig acfg = config_from_json(j);
        const std::vector<AblationRow> rows = ablate_descriptors(acfg);
        CsvWriter csv(ab_out, {"subset", "metric_name", "mean", "stderr", "n_tasks"});
        for (const AblationRow& r : rows)
          csv.row({r.subset, r.metric_name, CsvWriter::num(r.mean),
                   CsvWriter::num(r.stderr_),
                   CsvWriter::num(static_cast<long>(r.n_tasks))});
        save_json(ab_out + ".config.json", config_to_json(acfg));
        std::cout << rows.size() << " descriptor subsets written to " << ab_out
                  << "\n";
        return 0;
      }
      return cmd_ablate(ab_config, ab_out);
    }
    if (*bench) return cmd_bench(cfg, bench_tasks, bench_out);
    if (*grid)
      return cmd_grid(cfg, grid_tasks, grid_heldout, grid_k, grid_mu,
                      grid_lambda, grid_out);
  } catch (const DimensionMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDimension;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const SingularSystem& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const BadRange& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadFlags;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitBadFlags;
}
