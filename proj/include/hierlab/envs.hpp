#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hierlab/agents.hpp"
#include "hierlab/buffers.hpp"
#include "hierlab/core.hpp"
#include "hierlab/e2h_ise.hpp"
#include "hierlab/rng.hpp"

namespace hierlab {

struct EnvStepResult {
  GoalObservation next_obs;
  double reward = -1.0;
  bool done = false;        // episode over (success or horizon reached)
  bool is_success = false;  // reward == 0
};

/// Sparse-reward goal-conditioned environment whose initial state-goal
/// distribution is the c-scaled uniform box returned by init_space().
class Env {
 public:
  virtual ~Env() = default;

  virtual std::string id() const = 0;
  virtual TransitionLayout layout() const = 0;
  virtual int horizon() const = 0;
  /// Discount the benchmark protocol uses for this task family.
  virtual double default_gamma() const = 0;
  virtual RewardSpec reward_spec() const = 0;
  /// Box over [agent start | goal].
  virtual const InitSpace& init_space() const = 0;
  /// Fixed affine input scaling that maps observations to roughly [-1, 1].
  virtual ObsNormalizer normalizer() const = 0;
  virtual std::unique_ptr<Env> clone() const = 0;

  /// Draws start and goal from the c-scaled initial distribution.
  virtual GoalObservation reset(double c, Rng& rng) = 0;
  /// Throws UsageError when called before reset or after the episode ended.
  virtual EnvStepResult step(std::span<const double> action) = 0;

  int steps() const { return steps_; }
  bool active() const { return active_; }
  /// c used by the most recent reset.
  double last_reset_c() const { return last_c_; }

 protected:
  int steps_ = 0;
  bool active_ = false;
  double last_c_ = -1.0;
};

/// Kinematic point in [-1, 1]^2 moving at most max_speed per axis per step.
class PointReach2D final : public Env {
 public:
  struct Params {
    double max_speed = 0.1;
    double tolerance = 0.05;
    int horizon = 100;
  };

  PointReach2D();
  explicit PointReach2D(Params params);

  std::string id() const override { return "point_reach"; }
  TransitionLayout layout() const override { return {2, 2, 2}; }
  int horizon() const override { return params_.horizon; }
  double default_gamma() const override { return 0.95; }
  RewardSpec reward_spec() const override { return {params_.tolerance}; }
  const InitSpace& init_space() const override { return space_; }
  ObsNormalizer normalizer() const override { return {}; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<PointReach2D>(*this); }

  GoalObservation reset(double c, Rng& rng) override;
  EnvStepResult step(std::span<const double> action) override;

  std::span<const double> position() const { return pos_; }
  std::span<const double> goal() const { return goal_; }

 private:
  GoalObservation observe() const;

  Params params_;
  InitSpace space_;
  std::vector<double> pos_{0.0, 0.0};
  std::vector<double> goal_{0.0, 0.0};
};

/// Wall grid parsed from text: '#' wall, '.' free, any other character is an error.
/// Cell (cx, cy) covers [cx, cx+1) x [cy, cy+1); row 0 is the first line.
class MazeLayout {
 public:
  static MazeLayout parse(const std::string& text);
  static MazeLayout from_file(const std::string& path);

  int width() const { return width_; }
  int height() const { return height_; }
  /// Cells outside the grid count as walls.
  bool is_wall(int cx, int cy) const;
  bool is_free_point(double x, double y) const;
  std::string to_string() const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<char> wall_;
};

MazeLayout builtin_layout(const std::string& name);

/// Point mass in a maze driven by 2-D acceleration commands. Walls are
/// resolved by moving one axis at a time and clamping at the cell boundary.
class PointMaze final : public Env {
 public:
  struct Params {
    double accel = 0.06;
    double damping = 0.8;
    double max_speed = 0.2;
    double tolerance = 0.15;
    int horizon = 500;
    int max_reset_attempts = 10000;
  };

  PointMaze(std::string id, MazeLayout layout);
  PointMaze(std::string id, MazeLayout layout, Params params);

  std::string id() const override { return id_; }
  TransitionLayout layout() const override { return {4, 2, 2}; }
  int horizon() const override { return params_.horizon; }
  double default_gamma() const override { return 1.0; }
  RewardSpec reward_spec() const override { return {params_.tolerance}; }
  const InitSpace& init_space() const override { return space_; }
  ObsNormalizer normalizer() const override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<PointMaze>(*this); }

  GoalObservation reset(double c, Rng& rng) override;
  EnvStepResult step(std::span<const double> action) override;

  const MazeLayout& maze() const { return maze_; }
  std::span<const double> position() const { return pos_; }
  std::span<const double> velocity() const { return vel_; }
  std::span<const double> goal() const { return goal_; }
  /// Places the agent directly (tests and scripted rollouts).
  void set_state(std::span<const double> pos, std::span<const double> vel, std::span<const double> goal);

 private:
  GoalObservation observe() const;
  void move_axis(int axis);

  std::string id_;
  MazeLayout maze_;
  Params params_;
  InitSpace space_;
  std::vector<double> pos_{0.0, 0.0};
  std::vector<double> vel_{0.0, 0.0};
  std::vector<double> goal_{0.0, 0.0};
};

/// Built-in task ids: point_reach, point_maze_wall, point_maze_s; any
/// "maze:<path>" loads a layout file.
std::unique_ptr<Env> make_env(const std::string& id);
std::vector<std::string> list_tasks();

}  // namespace hierlab
