#include "hierlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "hierlab/error.hpp"

namespace hierlab {
namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& v) {
  if (v == "auto") return std::numeric_limits<double>::quiet_NaN();
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) throw ConfigError("expected a number");
  return out;
}

std::int64_t to_int(const std::string& v) {
  std::int64_t out = 0;
  // Accept 1e6-style integers as well.
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec == std::errc() && p == v.data() + v.size()) return out;
  const double d = to_double(v);
  if (d != std::floor(d) || std::abs(d) > 9e15) throw ConfigError("expected an integer");
  return static_cast<std::int64_t>(d);
}

std::size_t to_size(const std::string& v) {
  const auto i = to_int(v);
  if (i < 0) throw ConfigError("expected a non-negative integer");
  return static_cast<std::size_t>(i);
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("expected true or false");
}

template <class E>
struct EnumName {
  E value;
  const char* name;
};

constexpr EnumName<LambdaMode> kLambdaModes[] = {
    {LambdaMode::kFix, "fix"}, {LambdaMode::kPredefined, "predefined"}, {LambdaMode::kAma, "ama"}};
constexpr EnumName<XiMode> kXiModes[] = {{XiMode::kFix, "fix"}, {XiMode::kPrioritized, "prioritized"}};
constexpr EnumName<CMode> kCModes[] = {{CMode::kPredefined, "predefined"},
                                       {CMode::kSelfPaced, "self_paced"},
                                       {CMode::kControl, "control"},
                                       {CMode::kControlAdaptive, "control_adaptive"}};
constexpr EnumName<HerStrategy> kHerStrategies[] = {{HerStrategy::kFinal, "final"}, {HerStrategy::kFuture, "future"}};

template <class E, std::size_t N>
E enum_from(const EnumName<E> (&table)[N], const std::string& v) {
  std::string choices;
  for (const auto& e : table) {
    if (v == e.name) return e.value;
    choices += choices.empty() ? e.name : std::string(", ") + e.name;
  }
  throw ConfigError("expected one of " + choices);
}

template <class E, std::size_t N>
std::string enum_name(const EnumName<E> (&table)[N], E value) {
  for (const auto& e : table)
    if (e.value == value) return e.name;
  return "?";
}

struct KeyDef {
  const char* key;
  const char* description;
  std::function<void(TrainConfig&, const std::string&)> set;
  std::function<json(const TrainConfig&)> get;
};

json maybe_auto(double v) { return std::isfinite(v) ? json(v) : json("auto"); }

#define HL_DOUBLE(k, field, desc) \
  {k, desc, [](TrainConfig& c, const std::string& v) { c.field = to_double(v); }, [](const TrainConfig& c) { return json(c.field); }}
#define HL_INT(k, field, desc) \
  {k, desc, [](TrainConfig& c, const std::string& v) { c.field = to_int(v); }, [](const TrainConfig& c) { return json(c.field); }}
#define HL_SIZE(k, field, desc) \
  {k, desc, [](TrainConfig& c, const std::string& v) { c.field = to_size(v); }, [](const TrainConfig& c) { return json(c.field); }}
#define HL_BOOL(k, field, desc) \
  {k, desc, [](TrainConfig& c, const std::string& v) { c.field = to_bool(v); }, [](const TrainConfig& c) { return json(c.field); }}
#define HL_ENUM(k, field, table, desc)                                                        \
  {k, desc, [](TrainConfig& c, const std::string& v) { c.field = enum_from(table, v); }, \
   [](const TrainConfig& c) { return json(enum_name(table, c.field)); }}

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      HL_INT("run.total_steps", total_steps, "environment steps per run"),
      HL_INT("run.eval_points", eval_points, "number of evaluations, evenly spaced over the run"),
      HL_INT("run.eval_episodes", eval_episodes, "episodes per evaluation (always reset with c = 1)"),
      HL_INT("run.warmup_steps", warmup_steps, "initial steps with uniform random actions and no updates"),
      HL_INT("run.update_every", update_every, "environment steps between update rounds"),
      HL_INT("run.gradient_steps", gradient_steps, "gradient steps per update round"),
      HL_BOOL("run.task_gamma", task_gamma, "use the task discount (0.95 reach, 1.0 mazes) instead of agent.gamma"),

      HL_BOOL("components.her", her, "hindsight relabelling into the standard buffer"),
      HL_BOOL("components.per", per, "prioritised sampling from the standard buffer"),
      HL_BOOL("components.hier", hier, "highlight buffer"),
      HL_BOOL("components.e2h", e2h, "initial-state curriculum (c controller)"),

      {"agent.algorithm", "sac, td3 or ddpg",
       [](TrainConfig& c, const std::string& v) { c.agent.algorithm = parse_algorithm(v); },
       [](const TrainConfig& c) { return json(to_string(c.agent.algorithm)); }},
      HL_DOUBLE("agent.gamma", agent.gamma, "discount when run.task_gamma is false"),
      HL_DOUBLE("agent.entropy_alpha", agent.entropy_alpha, "SAC entropy coefficient (fixed)"),
      HL_DOUBLE("agent.polyak_tau", agent.polyak_tau, "target network averaging rate"),
      HL_DOUBLE("agent.lr", agent.lr, "Adam learning rate of every network"),
      HL_SIZE("agent.batch_size", agent.batch_size, "transitions per update batch"),
      {"agent.hidden", "hidden layer widths, comma separated",
       [](TrainConfig& c, const std::string& v) {
         std::vector<std::size_t> h;
         for (const auto& item : split_list(v)) h.push_back(to_size(item));
         c.agent.hidden = h;
       },
       [](const TrainConfig& c) { return json(c.agent.hidden); }},
      HL_DOUBLE("agent.policy_noise", agent.policy_noise, "TD3 target smoothing noise"),
      HL_DOUBLE("agent.noise_clip", agent.noise_clip, "TD3 target smoothing clip"),
      HL_INT("agent.policy_delay", agent.policy_delay, "TD3 actor and target update delay"),
      HL_DOUBLE("agent.exploration_noise", agent.exploration_noise, "TD3/DDPG Gaussian exploration noise"),

      HL_SIZE("buffer.ser_capacity", ser_capacity, "standard buffer capacity"),
      HL_SIZE("buffer.hier_capacity", hier_capacity, "highlight buffer capacity"),

      HL_ENUM("her.strategy", her_spec.strategy, kHerStrategies, "future or final"),
      HL_INT("her.k_relabel", her_spec.k_relabel, "virtual goals per transition (future)"),

      HL_DOUBLE("per.alpha", per_params.alpha, "priority exponent"),
      HL_DOUBLE("per.beta0", per_params.beta0, "initial importance exponent, annealed to 1"),
      HL_DOUBLE("per.eps", per_params.eps, "priority floor added to the absolute TD error"),

      HL_ENUM("lambda.mode", lambda.mode, kLambdaModes, "fix, predefined or ama"),
      HL_DOUBLE("lambda.fix_value", lambda.fix_value, "fix: constant threshold"),
      HL_DOUBLE("lambda.z_sat", lambda.z_sat, "predefined: saturation point as a fraction of total_steps"),
      HL_DOUBLE("lambda.top_fraction", lambda_top_fraction, "predefined: saturated threshold is -top_fraction * T"),
      {"lambda.lambda_0", "ama: threshold for the first window episodes (auto = -T)",
       [](TrainConfig& c, const std::string& v) { c.lambda.lambda_0 = to_double(v); },
       [](const TrainConfig& c) { return maybe_auto(c.lambda.lambda_0); }},
      HL_DOUBLE("lambda.lambda_max", lambda.lambda_max, "ama: upper clip"),
      HL_SIZE("lambda.window", lambda.window, "ama: returns in the moving average"),
      HL_DOUBLE("lambda.shift", lambda.shift, "ama: constant added to the moving average"),

      HL_ENUM("xi.mode", xi.mode, kXiModes, "fix or prioritized"),
      HL_DOUBLE("xi.fix_value", xi.fix_value, "fix: highlight share of each batch"),
      HL_DOUBLE("xi.alpha_p", xi.alpha_p, "prioritized: exponent on the sub-batch TD errors"),
      HL_DOUBLE("xi.initial", xi.initial, "prioritized: share before the first mixed batch"),

      HL_ENUM("c.mode", c.mode, kCModes, "predefined, self_paced, control or control_adaptive"),
      HL_DOUBLE("c.c0", c.c0, "initial scale"),
      HL_DOUBLE("c.delta", c.delta, "step of c per update"),
      HL_DOUBLE("c.psi_high", c.psi_high, "self_paced: increase above this training success rate"),
      HL_DOUBLE("c.psi_low", c.psi_low, "self_paced: decrease below this training success rate"),
      HL_DOUBLE("c.psi", c.psi, "control: target training success rate"),
      HL_DOUBLE("c.psi_max", c.psi_max, "control_adaptive: upper clip of the target"),
      HL_DOUBLE("c.shift", c.shift, "control_adaptive: margin added to the mean eval success"),
      HL_SIZE("c.window", c.window, "episodes (or evaluations) per success window"),
      HL_DOUBLE("c.z_sat", c.z_sat, "predefined: saturation point as a fraction of total_steps"),
  };
  return table;
}

#undef HL_DOUBLE
#undef HL_INT
#undef HL_SIZE
#undef HL_BOOL
#undef HL_ENUM

const KeyDef* find_key(const std::string& key) {
  for (const auto& k : key_table())
    if (key == k.key) return &k;
  return nullptr;
}

std::string at(const std::string& origin) { return origin.empty() ? std::string() : origin + ": "; }

}  // namespace

std::vector<KeyInfo> config_keys() {
  std::vector<KeyInfo> out;
  for (const auto& k : key_table()) out.push_back({k.key, k.description});
  return out;
}

void apply_setting(TrainConfig& cfg, const Setting& s) {
  const KeyDef* def = find_key(s.key);
  if (def == nullptr) throw ConfigError(at(s.origin) + "unknown key '" + s.key + "'");
  try {
    def->set(cfg, s.value);
  } catch (const ConfigError& e) {
    throw ConfigError(at(s.origin) + "key '" + s.key + "' = '" + s.value + "': " + e.what());
  }
}

json to_json(const TrainConfig& cfg) {
  json out = json::object();
  out["task"] = cfg.task;
  out["variant"] = cfg.variant;
  out["seed"] = cfg.seed;
  for (const auto& k : key_table()) {
    const std::string key = k.key;
    const auto dot = key.find('.');
    out[key.substr(0, dot)][key.substr(dot + 1)] = k.get(cfg);
  }
  return out;
}

void apply_variant(TrainConfig& cfg, const std::string& name) {
  std::string base = trim(name);
  std::string comps;
  if (const auto open = base.find('['); open != std::string::npos) {
    const auto close = base.find(']', open);
    if (close == std::string::npos || trim(base.substr(close + 1)) != "")
      throw ConfigError("variant '" + name + "': malformed component list");
    comps = base.substr(open + 1, close - open - 1);
    base = trim(base.substr(0, open));
  }
  bool hier = false, e2h = false;
  if (base == "Baseline") {
  } else if (base == "HiER") {
    hier = true;
  } else if (base == "HiER+") {
    hier = e2h = true;
  } else if (base == "E2H-ISE") {
    e2h = true;
  } else {
    throw ConfigError("variant '" + name + "': algorithm must be Baseline, HiER, HiER+ or E2H-ISE");
  }
  bool her = false, per = false;
  for (const auto& c : split_list(comps, '&')) {
    if (c == "HER" && !her) {
      her = true;
    } else if (c == "PER" && !per) {
      per = true;
    } else {
      throw ConfigError("variant '" + name + "': unknown or repeated component '" + c + "'");
    }
  }
  cfg.variant = trim(name);
  cfg.her = her;
  cfg.per = per;
  cfg.hier = hier;
  cfg.e2h = e2h;
  if (per) {
    cfg.xi.mode = XiMode::kPrioritized;
  } else {
    cfg.xi.mode = XiMode::kFix;
    cfg.xi.fix_value = 0.5;
  }
}

std::string variant_slug(const std::string& name) {
  std::string out;
  for (char ch : name) {
    if (std::isalnum(static_cast<unsigned char>(ch))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    } else if (ch == '+') {
      out += "plus";
    } else if (!out.empty() && out.back() != '-') {
      out.push_back('-');
    }
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out;
}

TrainConfig ExperimentMatrix::make_config(const std::string& task, const std::string& variant,
                                          std::uint64_t seed) const {
  TrainConfig cfg;
  cfg.task = task;
  cfg.seed = seed;
  apply_variant(cfg, variant);
  for (const auto& s : settings) apply_setting(cfg, s);
  return cfg;
}

void ExperimentMatrix::validate() const {
  if (tasks.empty()) throw ConfigError("matrix: no tasks");
  if (variants.empty()) throw ConfigError("matrix: no variants");
  if (seeds.empty()) throw ConfigError("matrix: no seeds");
  std::set<std::string> names, slugs;
  for (const auto& v : variants) {
    if (!names.insert(v).second) throw ConfigError("matrix: variant '" + v + "' listed twice");
    if (!slugs.insert(variant_slug(v)).second) throw ConfigError("matrix: variant '" + v + "' collides with another");
  }
  for (const auto& t : tasks) make_env(t);
  for (const auto& v : variants) make_config(tasks.front(), v, seeds.front()).validate();
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(text)) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      out.push_back(to_size(item));
      continue;
    }
    const auto lo = to_size(trim(item.substr(0, dash)));
    const auto hi = to_size(trim(item.substr(dash + 1)));
    if (hi < lo) throw ConfigError("seed range '" + item + "' is empty");
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
  }
  if (out.empty()) throw ConfigError("empty seed list");
  return out;
}

Setting parse_override(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos) throw ConfigError("--override expects key=value, got '" + arg + "'");
  return {trim(arg.substr(0, eq)), trim(arg.substr(eq + 1)), "--override"};
}

ExperimentMatrix parse_matrix(const std::string& text, const std::string& source) {
  ExperimentMatrix m;
  m.seeds = parse_seed_list("0-9");
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string origin = source + ":" + std::to_string(line_no);
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(origin + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(origin + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigError(origin + ": key '" + key + "' outside any section");
    try {
      if (section == "matrix") {
        if (key == "tasks") {
          m.tasks = split_list(value);
        } else if (key == "variants") {
          m.variants = split_list(value);
        } else if (key == "seeds") {
          m.seeds = parse_seed_list(value);
        } else {
          throw ConfigError("unknown key 'matrix." + key + "'");
        }
        continue;
      }
    } catch (const ConfigError& e) {
      const std::string what = e.what();
      throw ConfigError(what.rfind(origin, 0) == 0 ? what : origin + ": " + what);
    }
    Setting s{section + "." + key, value, origin};
    TrainConfig probe;
    apply_setting(probe, s);  // reject unknown keys and bad values at their line
    m.settings.push_back(std::move(s));
  }
  return m;
}

ExperimentMatrix load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_matrix(ss.str(), path);
}

}  // namespace hierlab
