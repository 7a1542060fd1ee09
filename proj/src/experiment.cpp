#include "hierlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#include "hierlab/error.hpp"
#include "hierlab/run_io.hpp"

namespace hierlab {

std::vector<TrainConfig> expand_matrix(const ExperimentMatrix& matrix) {
  matrix.validate();
  std::vector<TrainConfig> out;
  for (const auto& task : matrix.tasks)
    for (const auto& variant : matrix.variants)
      for (auto seed : matrix.seeds) out.push_back(matrix.make_config(task, variant, seed));
  return out;
}

MatrixOutcome run_matrix(const ExperimentMatrix& matrix, const std::filesystem::path& out_dir, int jobs,
                         std::ostream* log) {
  const auto configs = expand_matrix(matrix);
  std::set<std::string> names;
  for (const auto& c : configs)
    if (!names.insert(run_file_name(c)).second) throw ConfigError("matrix: two runs map to " + run_file_name(c));

  MatrixOutcome outcome;
  std::vector<std::filesystem::path> files(configs.size());
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::size_t finished = 0;

  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      const auto& cfg = configs[i];
      try {
        const RunRecord rec = train_run(cfg);
        files[i] = write_run_file(rec, cfg, out_dir);
        const auto bl = best_and_last(rec);
        std::lock_guard lock(mu);
        ++finished;
        if (log) {
          char buf[160];
          std::snprintf(buf, sizeof buf, "best_success=%.3f last_return=%.2f %.1fs", bl.best_success, bl.last_return,
                        rec.wall_clock_s);
          *log << "[" << finished << "/" << configs.size() << "] " << run_file_name(cfg) << " " << buf << std::endl;
        }
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        ++finished;
        outcome.failures.push_back(run_file_name(cfg) + ": " + e.what());
        if (log) *log << "[" << finished << "/" << configs.size() << "] " << run_file_name(cfg) << " FAILED: "
                      << e.what() << std::endl;
      }
    }
  };

  const auto n_threads = static_cast<std::size_t>(std::clamp(jobs, 1, static_cast<int>(configs.size())));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
  }
  for (auto& f : files)
    if (!f.empty()) outcome.files.push_back(f);
  std::sort(outcome.failures.begin(), outcome.failures.end());
  return outcome;
}

std::string to_string(Protocol protocol) {
  return protocol == Protocol::kBestSuccess ? "best_success" : "last_return";
}

Protocol parse_protocol(const std::string& name) {
  if (name == "best_success") return Protocol::kBestSuccess;
  if (name == "last_return") return Protocol::kLastReturn;
  throw InputError("unknown protocol '" + name + "' (expected best_success or last_return)");
}

double run_score(const RunRecord& record, Protocol protocol) {
  const auto bl = best_and_last(record);
  return protocol == Protocol::kBestSuccess ? bl.best_success : bl.last_return;
}

double og_target(Protocol protocol) { return protocol == Protocol::kBestSuccess ? 1.0 : 0.0; }

std::map<std::string, ScoreSet> collect_scores(const std::vector<RunRecord>& records, Protocol protocol) {
  std::vector<const RunRecord*> sorted;
  for (const auto& r : records) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const RunRecord* a, const RunRecord* b) { return a->seed < b->seed; });
  std::map<std::string, ScoreSet> out;
  for (const RunRecord* r : sorted) out[r->variant][r->task].push_back(run_score(*r, protocol));
  return out;
}

std::vector<std::string> find_gaps(const std::vector<RunRecord>& records) {
  std::set<std::string> variants, tasks;
  std::set<std::uint64_t> seeds;
  std::set<std::tuple<std::string, std::string, std::uint64_t>> have;
  std::vector<std::string> gaps;
  for (const auto& r : records) {
    variants.insert(r.variant);
    tasks.insert(r.task);
    seeds.insert(r.seed);
    if (!have.insert({r.variant, r.task, r.seed}).second)
      gaps.push_back("duplicate run: variant '" + r.variant + "', task " + r.task + ", seed " + std::to_string(r.seed));
  }
  for (const auto& v : variants)
    for (const auto& t : tasks) {
      std::string missing;
      for (auto s : seeds)
        if (!have.contains({v, t, s})) missing += (missing.empty() ? "" : ",") + std::to_string(s);
      if (!missing.empty()) gaps.push_back("missing runs: variant '" + v + "', task " + t + ", seeds " + missing);
    }
  return gaps;
}

std::vector<AggregateRow> aggregate_table(const std::map<std::string, ScoreSet>& scores, const AggregateOptions& o) {
  std::vector<AggregateRow> rows;
  BootstrapOptions bo = o.bootstrap;
  bo.target = og_target(o.protocol);
  for (const auto& [variant, set] : scores) {
    for (Metric m : {Metric::kMean, Metric::kMedian, Metric::kIqm, Metric::kOg}) {
      Rng rng(o.seed);
      const Interval ci = stratified_bootstrap_ci(set, m, bo, rng);
      rows.push_back({variant, to_string(m), pooled_aggregate(set, m, bo.target), ci.lo, ci.hi});
    }
  }
  return rows;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  return out + "\"";
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_aggregate_csv(const std::vector<AggregateRow>& rows, std::ostream& os) {
  os << "variant,metric,value,ci_lo,ci_hi\n";
  for (const auto& r : rows)
    os << csv_field(r.variant) << ',' << r.metric << ',' << num(r.value) << ',' << num(r.ci_lo) << ','
       << num(r.ci_hi) << '\n';
}

}  // namespace hierlab
