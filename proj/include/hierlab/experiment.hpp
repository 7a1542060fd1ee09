#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "hierlab/config.hpp"
#include "hierlab/stats.hpp"
#include "hierlab/trainer.hpp"

namespace hierlab {

/// One config per (task, variant, seed), in that nesting order.
std::vector<TrainConfig> expand_matrix(const ExperimentMatrix& matrix);

struct MatrixOutcome {
  std::vector<std::filesystem::path> files;
  std::vector<std::string> failures;  // "<run file>: <error>"
  bool ok() const { return failures.empty(); }
};

/// Runs every cell with up to `jobs` concurrent runs and writes one JSONL per
/// run into out_dir. Progress lines go to `log` when non-null.
MatrixOutcome run_matrix(const ExperimentMatrix& matrix, const std::filesystem::path& out_dir, int jobs,
                         std::ostream* log);

enum class Protocol { kBestSuccess, kLastReturn };
std::string to_string(Protocol protocol);
Protocol parse_protocol(const std::string& name);

/// Score of one run under the protocol (best success rate or final mean return).
double run_score(const RunRecord& record, Protocol protocol);

/// variant -> task -> per-seed scores, runs ordered by seed.
std::map<std::string, ScoreSet> collect_scores(const std::vector<RunRecord>& records, Protocol protocol);

/// Human-readable descriptions of missing (variant, task, seed) cells relative
/// to the union of tasks and seeds present in the records.
std::vector<std::string> find_gaps(const std::vector<RunRecord>& records);

struct AggregateRow {
  std::string variant;
  std::string metric;
  double value = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct AggregateOptions {
  Protocol protocol = Protocol::kBestSuccess;
  BootstrapOptions bootstrap;  // target is set from the protocol
  std::uint64_t seed = 0;      // bootstrap RNG, reseeded per (variant, metric)
};

/// Optimality-gap target: 1 for success rates, 0 for returns.
double og_target(Protocol protocol);

/// mean, median, iqm and og with stratified bootstrap intervals for every variant.
std::vector<AggregateRow> aggregate_table(const std::map<std::string, ScoreSet>& scores, const AggregateOptions& options);
void write_aggregate_csv(const std::vector<AggregateRow>& rows, std::ostream& os);

}  // namespace hierlab
