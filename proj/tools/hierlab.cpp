// hierlab: run experiment matrices, aggregate run records, draw figures.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "hierlab/config.hpp"
#include "hierlab/envs.hpp"
#include "hierlab/error.hpp"
#include "hierlab/experiment.hpp"
#include "hierlab/kernels.hpp"
#include "hierlab/plot.hpp"
#include "hierlab/run_io.hpp"

using namespace hierlab;

namespace {

int cmd_train(const std::string& config_path, const std::string& seeds, const std::vector<std::string>& overrides,
              const std::vector<std::string>& tasks, const std::vector<std::string>& variants, int jobs,
              const std::string& out_dir) {
  ExperimentMatrix m = config_path.empty() ? parse_matrix("", "<defaults>") : load_matrix(config_path);
  if (!seeds.empty()) m.seeds = parse_seed_list(seeds);
  if (!tasks.empty()) m.tasks = tasks;
  if (!variants.empty()) m.variants = variants;
  for (const auto& o : overrides) {
    Setting s = parse_override(o);
    TrainConfig probe;
    apply_setting(probe, s);
    m.settings.push_back(s);
  }
  m.validate();
  std::cerr << "hierlab train: " << m.tasks.size() << " task(s) x " << m.variants.size() << " variant(s) x "
            << m.seeds.size() << " seed(s), jobs=" << jobs << ", kernels=" << kernels::backend_name(kernels::active().backend) << "\n";
  const auto outcome = run_matrix(m, out_dir, jobs, &std::cerr);
  if (!outcome.ok()) {
    std::cerr << outcome.failures.size() << " run(s) failed:\n";
    for (const auto& f : outcome.failures) std::cerr << "  " << f << "\n";
    return 1;
  }
  return 0;
}

int cmd_aggregate(const std::string& run_dir, const std::string& protocol, const std::string& out, std::size_t resamples,
                  std::uint64_t seed) {
  const auto records = read_run_dir(run_dir);
  if (records.empty()) throw InputError("no run records (*.jsonl) in " + run_dir);
  for (const auto& g : find_gaps(records)) std::cerr << "warning: " << g << "\n";
  AggregateOptions o;
  o.protocol = parse_protocol(protocol);
  o.bootstrap.n_resamples = resamples;
  o.seed = seed;
  const auto rows = aggregate_table(collect_scores(records, o.protocol), o);
  if (out.empty() || out == "-") {
    write_aggregate_csv(rows, std::cout);
  } else {
    std::ofstream os(out, std::ios::binary | std::ios::trunc);
    if (!os) throw InputError("cannot write " + out);
    write_aggregate_csv(rows, os);
  }
  return 0;
}

int cmd_plot(const std::string& run_dir, const std::string& kind, const std::string& out, const std::string& protocol,
             std::size_t resamples, std::uint64_t seed) {
  const auto records = read_run_dir(run_dir);
  for (const auto& g : find_gaps(records)) std::cerr << "warning: " << g << "\n";
  PlotOptions o;
  o.protocol = parse_protocol(protocol);
  o.n_resamples = resamples;
  o.seed = seed;
  const PlotKind k = parse_plot_kind(kind);
  const std::string path = out.empty() ? to_string(k) + ".svg" : out;
  const auto files = write_plot(records, k, path, o);
  std::cerr << "wrote " << files.svg.string() << " and " << files.csv.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierlab: highlight experience replay and curriculum experiments"};
  app.require_subcommand(1);

  std::string config_path, seeds, out_dir = "runs";
  std::vector<std::string> overrides, tasks, variants;
  int jobs = 1;
  auto* train = app.add_subcommand("train", "run an experiment matrix, one JSONL file per run");
  train->add_option("--config", config_path, "configuration file")->check(CLI::ExistingFile);
  train->add_option("--seeds,--seed", seeds, "seed list such as 0-9 or 1,3,5 (replaces matrix.seeds)");
  train->add_option("--task", tasks, "task id (replaces matrix.tasks, repeatable)");
  train->add_option("--variant", variants, "variant name (replaces matrix.variants, repeatable)");
  train->add_option("--override", overrides, "section.key=value, applied after the file (repeatable)");
  train->add_option("--jobs,-j", jobs, "concurrent runs")->check(CLI::PositiveNumber);
  train->add_option("--out-dir", out_dir, "directory for run records");

  std::string run_dir = "runs", protocol = "best_success", out;
  std::size_t resamples = 2000;
  std::uint64_t boot_seed = 0;
  auto* aggregate = app.add_subcommand("aggregate", "mean/median/IQM/OG with stratified bootstrap CIs as CSV");
  aggregate->add_option("--run-dir", run_dir, "directory of run records");
  aggregate->add_option("--protocol", protocol, "best_success or last_return");
  aggregate->add_option("--out", out, "CSV output path (default stdout)");
  aggregate->add_option("--resamples", resamples, "bootstrap resamples")->check(CLI::Range(100, 10000000));
  aggregate->add_option("--bootstrap-seed", boot_seed, "bootstrap RNG seed");

  std::string kind;
  auto* plot = app.add_subcommand("plot", "SVG figure plus sidecar CSV");
  plot->add_option("--run-dir", run_dir, "directory of run records");
  plot->add_option("--kind", kind, "learning_curve, profile, prob_improvement or agg_bars")->required();
  plot->add_option("--out", out, "SVG output path (default <kind>.svg)");
  plot->add_option("--protocol", protocol, "best_success or last_return");
  plot->add_option("--resamples", resamples, "bootstrap resamples")->check(CLI::Range(100, 10000000));
  plot->add_option("--bootstrap-seed", boot_seed, "bootstrap RNG seed");

  auto* list_tasks_cmd = app.add_subcommand("list-tasks", "built-in task ids");
  bool markdown = false;
  auto* list_keys = app.add_subcommand("list-keys", "every configuration key");
  list_keys->add_flag("--markdown", markdown, "emit a Markdown table");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(config_path, seeds, overrides, tasks, variants, jobs, out_dir);
    if (*aggregate) return cmd_aggregate(run_dir, protocol, out, resamples, boot_seed);
    if (*plot) return cmd_plot(run_dir, kind, out, protocol, resamples, boot_seed);
    if (*list_tasks_cmd) {
      for (const auto& t : list_tasks()) std::cout << t << "\n";
      std::cout << "maze:<layout file>\n";
      return 0;
    }
    if (*list_keys) {
      if (markdown) std::cout << "| key | meaning |\n|---|---|\n";
      for (const auto& k : config_keys())
        std::cout << (markdown ? "| `" + k.key + "` | " + k.description + " |" : k.key + "  " + k.description) << "\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
