#include "hierlab/run_io.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"

#include "hierlab/config.hpp"
#include "hierlab/error.hpp"

namespace hierlab {
namespace {

using nlohmann::json;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char ch : s) out.push_back(std::isalnum(static_cast<unsigned char>(ch)) ? ch : '-');
  return out;
}

}  // namespace

std::string config_fingerprint(const TrainConfig& cfg) {
  json j = to_json(cfg);
  j.erase("seed");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

std::string run_file_name(const TrainConfig& cfg) {
  std::string task = cfg.task;
  if (task.rfind("maze:", 0) == 0) task = "maze-" + std::filesystem::path(task.substr(5)).stem().string();
  return sanitize(task) + "_" + to_string(cfg.agent.algorithm) + "_" + variant_slug(cfg.variant) + "_" +
         std::to_string(cfg.seed) + ".jsonl";
}

void write_run(const RunRecord& r, const TrainConfig& cfg, std::ostream& os) {
  json head = {{"type", "config"},   {"fingerprint", r.fingerprint}, {"task", r.task},
               {"algorithm", r.algorithm}, {"variant", r.variant},   {"seed", r.seed},
               {"config", to_json(cfg)}};
  os << head.dump() << '\n';
  for (const auto& p : r.series) {
    json e = {{"type", "eval"},          {"t", p.t},   {"success_rate", p.success_rate},
              {"mean_return", p.mean_return}, {"c", p.c}, {"lambda", p.lambda},
              {"xi", p.xi},              {"hier_size", p.hier_size}, {"wall_clock_s", p.wall_clock_s}};
    os << e.dump() << '\n';
  }
  json tail = {{"type", "summary"},
               {"episodes", r.episodes},
               {"hier_episodes", r.hier_episodes},
               {"eval_points", r.series.size()},
               {"wall_clock_s", r.wall_clock_s}};
  os << tail.dump() << '\n';
}

std::filesystem::path write_run_file(const RunRecord& record, const TrainConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto path = dir / run_file_name(cfg);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + tmp);
    write_run(record, cfg, os);
    if (!os) throw std::runtime_error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
  return path;
}

RunRecord read_run(std::istream& is, const std::string& source) {
  RunRecord r;
  std::string line;
  int line_no = 0;
  bool have_config = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    try {
      const json j = json::parse(line);
      const std::string type = j.at("type");
      if (type == "config") {
        r.fingerprint = j.at("fingerprint");
        r.task = j.at("task");
        r.algorithm = j.at("algorithm");
        r.variant = j.at("variant");
        r.seed = j.at("seed");
        have_config = true;
      } else if (type == "eval") {
        EvalPoint p;
        p.t = j.at("t");
        p.success_rate = j.at("success_rate");
        p.mean_return = j.at("mean_return");
        p.c = j.at("c");
        p.lambda = j.at("lambda");
        p.xi = j.at("xi");
        p.hier_size = j.at("hier_size");
        p.wall_clock_s = j.at("wall_clock_s");
        r.series.push_back(p);
      } else if (type == "summary") {
        r.episodes = j.at("episodes");
        r.hier_episodes = j.at("hier_episodes");
        r.wall_clock_s = j.at("wall_clock_s");
      } else {
        throw InputError("unknown record type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw InputError(where + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError(where + ": " + e.what());
    }
  }
  if (!have_config) throw InputError(source + ": missing config line");
  return r;
}

RunRecord read_run_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return read_run(in, path.string());
}

std::vector<RunRecord> read_run_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw InputError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<RunRecord> out;
  for (const auto& f : files) out.push_back(read_run_file(f));
  return out;
}

}  // namespace hierlab
