#pragma once

// Run records as JSON lines: a "config" line, one "eval" line per evaluation
// point and a closing "summary" line.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hierlab/trainer.hpp"

namespace hierlab {

/// 16 hex digits of FNV-1a over the canonical config JSON with the seed left out,
/// so every seed of one matrix cell shares a fingerprint.
std::string config_fingerprint(const TrainConfig& cfg);

/// <task>_<algorithm>_<variant-slug>_<seed>.jsonl
std::string run_file_name(const TrainConfig& cfg);

void write_run(const RunRecord& record, const TrainConfig& cfg, std::ostream& os);
std::filesystem::path write_run_file(const RunRecord& record, const TrainConfig& cfg, const std::filesystem::path& dir);

/// Throws InputError naming `source` and the line on malformed input.
RunRecord read_run(std::istream& is, const std::string& source);
RunRecord read_run_file(const std::filesystem::path& path);
/// Every *.jsonl file of a directory, sorted by file name.
std::vector<RunRecord> read_run_dir(const std::filesystem::path& dir);

}  // namespace hierlab
