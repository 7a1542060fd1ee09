#include "hierlab/envs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "hierlab/error.hpp"

namespace hierlab {
namespace {

constexpr const char* kWallLayout =
    "########\n"
    "#......#\n"
    "#......#\n"
    "#####..#\n"
    "#......#\n"
    "#......#\n"
    "########\n";

constexpr const char* kSLayout =
    "#######\n"
    "#.....#\n"
    "#####.#\n"
    "#.....#\n"
    "#.#####\n"
    "#.....#\n"
    "#######\n";

void check_action(std::span<const double> action, std::size_t dim) {
  if (action.size() != dim) throw InputError("env step: action dimension mismatch");
  for (double a : action)
    if (!std::isfinite(a)) throw InputError("env step: non-finite action");
}

}  // namespace

// --- PointReach2D ----------------------------------------------------------

PointReach2D::PointReach2D() : PointReach2D(Params{}) {}

PointReach2D::PointReach2D(Params params)
    : params_(params), space_({-1.0, -1.0, -1.0, -1.0}, {1.0, 1.0, 1.0, 1.0}) {
  if (!(params_.max_speed > 0.0) || !(params_.tolerance > 0.0) || params_.horizon < 1)
    throw ConfigError("point_reach: invalid parameters");
}

GoalObservation PointReach2D::observe() const { return {pos_, pos_, goal_}; }

GoalObservation PointReach2D::reset(double c, Rng& rng) {
  const auto x = sample_initial(space_, c, rng);
  pos_ = {x[0], x[1]};
  goal_ = {x[2], x[3]};
  steps_ = 0;
  active_ = true;
  last_c_ = c;
  return observe();
}

EnvStepResult PointReach2D::step(std::span<const double> action) {
  if (!active_) throw UsageError("point_reach: step called outside an active episode");
  check_action(action, 2);
  for (int d = 0; d < 2; ++d)
    pos_[d] = std::clamp(pos_[d] + std::clamp(action[d], -1.0, 1.0) * params_.max_speed, -1.0, 1.0);
  ++steps_;
  EnvStepResult r;
  r.next_obs = observe();
  r.reward = sparse_reward(pos_, goal_, reward_spec());
  r.is_success = r.reward == 0.0;
  r.done = r.is_success || steps_ >= params_.horizon;
  active_ = !r.done;
  return r;
}

// --- MazeLayout ------------------------------------------------------------

MazeLayout MazeLayout::parse(const std::string& text) {
  MazeLayout m;
  std::istringstream in(text);
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (m.width_ == 0) m.width_ = static_cast<int>(line.size());
    if (static_cast<int>(line.size()) != m.width_)
      throw ConfigError("maze layout: row " + std::to_string(row + 1) + " has width " + std::to_string(line.size()) +
                        ", expected " + std::to_string(m.width_));
    for (char ch : line) {
      if (ch != '#' && ch != '.')
        throw ConfigError("maze layout: unexpected character '" + std::string(1, ch) + "' in row " +
                          std::to_string(row + 1));
      m.wall_.push_back(ch == '#');
    }
    ++row;
  }
  m.height_ = row;
  if (m.width_ < 3 || m.height_ < 3) throw ConfigError("maze layout: grid must be at least 3x3");
  if (std::count(m.wall_.begin(), m.wall_.end(), 0) < 2) throw ConfigError("maze layout: need at least two free cells");
  return m;
}

MazeLayout MazeLayout::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("maze layout: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

bool MazeLayout::is_wall(int cx, int cy) const {
  if (cx < 0 || cy < 0 || cx >= width_ || cy >= height_) return true;
  return wall_[static_cast<std::size_t>(cy * width_ + cx)] != 0;
}

bool MazeLayout::is_free_point(double x, double y) const {
  return !is_wall(static_cast<int>(std::floor(x)), static_cast<int>(std::floor(y)));
}

std::string MazeLayout::to_string() const {
  std::string out;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) out.push_back(is_wall(x, y) ? '#' : '.');
    out.push_back('\n');
  }
  return out;
}

MazeLayout builtin_layout(const std::string& name) {
  if (name == "wall") return MazeLayout::parse(kWallLayout);
  if (name == "s") return MazeLayout::parse(kSLayout);
  throw ConfigError("unknown built-in maze layout '" + name + "'");
}

// --- PointMaze -------------------------------------------------------------

PointMaze::PointMaze(std::string id, MazeLayout layout) : PointMaze(std::move(id), std::move(layout), Params{}) {}

PointMaze::PointMaze(std::string id, MazeLayout layout, Params params)
    : id_(std::move(id)), maze_(std::move(layout)), params_(params) {
  if (!(params_.max_speed > 0.0 && params_.max_speed < 1.0))
    throw ConfigError("point_maze: max_speed must lie in (0, 1) cells per step");
  if (!(params_.accel > 0.0) || !(params_.damping >= 0.0 && params_.damping <= 1.0) || !(params_.tolerance > 0.0) ||
      params_.horizon < 1 || params_.max_reset_attempts < 1)
    throw ConfigError("point_maze: invalid parameters");
  // Interior box, excluding the outer ring of cells.
  const double w = maze_.width(), h = maze_.height();
  space_ = InitSpace({1.0, 1.0, 1.0, 1.0}, {w - 1.0, h - 1.0, w - 1.0, h - 1.0});
}

ObsNormalizer PointMaze::normalizer() const {
  const double cx = 0.5 * maze_.width(), cy = 0.5 * maze_.height();
  const double sx = 2.0 / maze_.width(), sy = 2.0 / maze_.height();
  const double sv = 1.0 / params_.max_speed;
  return {{cx, cy, 0.0, 0.0, cx, cy, cx, cy}, {sx, sy, sv, sv, sx, sy, sx, sy}};
}

GoalObservation PointMaze::observe() const { return {{pos_[0], pos_[1], vel_[0], vel_[1]}, pos_, goal_}; }

GoalObservation PointMaze::reset(double c, Rng& rng) {
  for (int attempt = 0; attempt < params_.max_reset_attempts; ++attempt) {
    const auto x = sample_initial(space_, c, rng);
    if (!maze_.is_free_point(x[0], x[1]) || !maze_.is_free_point(x[2], x[3])) continue;
    if (std::floor(x[0]) == std::floor(x[2]) && std::floor(x[1]) == std::floor(x[3])) continue;
    pos_ = {x[0], x[1]};
    goal_ = {x[2], x[3]};
    vel_ = {0.0, 0.0};
    steps_ = 0;
    active_ = true;
    last_c_ = c;
    return observe();
  }
  throw ConfigError(id_ + ": no valid start/goal pair after " + std::to_string(params_.max_reset_attempts) +
                    " attempts at c = " + std::to_string(c) + " (region too small or inside walls)");
}

void PointMaze::set_state(std::span<const double> pos, std::span<const double> vel, std::span<const double> goal) {
  if (pos.size() != 2 || vel.size() != 2 || goal.size() != 2) throw InputError("point_maze: set_state expects 2-vectors");
  if (!maze_.is_free_point(pos[0], pos[1])) throw InputError("point_maze: set_state position inside a wall");
  pos_.assign(pos.begin(), pos.end());
  vel_.assign(vel.begin(), vel.end());
  goal_.assign(goal.begin(), goal.end());
  steps_ = 0;
  active_ = true;
}

void PointMaze::move_axis(int axis) {
  const double from = pos_[axis];
  const double to = from + vel_[axis];
  const double cell = std::floor(from);
  if (std::floor(to) == cell) {
    pos_[axis] = to;
    return;
  }
  // |v| < 1 so at most one boundary is crossed.
  const int other_cell = static_cast<int>(std::floor(pos_[1 - axis]));
  const int next_cell = static_cast<int>(std::floor(to));
  const bool blocked = axis == 0 ? maze_.is_wall(next_cell, other_cell) : maze_.is_wall(other_cell, next_cell);
  if (!blocked) {
    pos_[axis] = to;
    return;
  }
  pos_[axis] = vel_[axis] > 0.0 ? std::nextafter(cell + 1.0, -std::numeric_limits<double>::infinity()) : cell;
  vel_[axis] = 0.0;
}

EnvStepResult PointMaze::step(std::span<const double> action) {
  if (!active_) throw UsageError(id_ + ": step called outside an active episode");
  check_action(action, 2);
  for (int d = 0; d < 2; ++d)
    vel_[d] = params_.damping * vel_[d] + params_.accel * std::clamp(action[d], -1.0, 1.0);
  const double speed = std::hypot(vel_[0], vel_[1]);
  if (speed > params_.max_speed) {
    vel_[0] *= params_.max_speed / speed;
    vel_[1] *= params_.max_speed / speed;
  }
  move_axis(0);
  move_axis(1);
  ++steps_;
  EnvStepResult r;
  r.next_obs = observe();
  r.reward = sparse_reward(pos_, goal_, reward_spec());
  r.is_success = r.reward == 0.0;
  r.done = r.is_success || steps_ >= params_.horizon;
  active_ = !r.done;
  return r;
}

// --- factory ---------------------------------------------------------------

std::unique_ptr<Env> make_env(const std::string& id) {
  if (id == "point_reach") return std::make_unique<PointReach2D>();
  if (id == "point_maze_wall") return std::make_unique<PointMaze>(id, builtin_layout("wall"));
  if (id == "point_maze_s") return std::make_unique<PointMaze>(id, builtin_layout("s"));
  if (id.rfind("maze:", 0) == 0) return std::make_unique<PointMaze>(id, MazeLayout::from_file(id.substr(5)));
  throw ConfigError("unknown task '" + id + "'");
}

std::vector<std::string> list_tasks() { return {"point_reach", "point_maze_wall", "point_maze_s"}; }

}  // namespace hierlab
