#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "taskdecomp/types.hpp"

namespace taskdecomp {

struct PlacementBox {
  Vec3 lo{};
  Vec3 hi{};
};

struct ObjectSpec {
  std::string name;
  PlacementBox placement;
  std::array<std::uint8_t, 3> color{200, 60, 60};
};

// Declarative waypoint rule for one FSM phase. ObjectRelative re-resolves
// against the object's current position every step; InitialObjectRelative
// freezes the object's start-of-trajectory position (for lift/pull motions of
// an attached object).
struct PhaseTarget {
  enum class Kind { Fixed, ObjectRelative, InitialObjectRelative };
  Kind kind = Kind::Fixed;
  std::string object;
  Vec3 offset{};
  Vec3 point{};

  static PhaseTarget fixed(Vec3 p) { return {Kind::Fixed, {}, {}, p}; }
  static PhaseTarget object_relative(std::string name, Vec3 offset) {
    return {Kind::ObjectRelative, std::move(name), offset, {}};
  }
  static PhaseTarget initial_object_relative(std::string name, Vec3 offset) {
    return {Kind::InitialObjectRelative, std::move(name), offset, {}};
  }
};

// One scripted controller state; emits exactly one ground-truth sub-task.
// Move phases run until the effector is within `tolerance` of the target;
// dwell phases (dwell_steps > 0) hold position for a fixed number of steps.
// Grasp effects fire when the phase completes.
struct FsmPhase {
  std::string description;
  PhaseTarget target;
  bool gripper_closed = false;
  int dwell_steps = 0;
  enum class GraspEffect { None, Attach, Release };
  GraspEffect grasp_effect = GraspEffect::None;
  std::string grasp_object;
  double tolerance = 0.01;
};

struct EnvSpec {
  std::string name;
  std::vector<ObjectSpec> objects;
  std::vector<FsmPhase> script;
  double step_speed = 0.02;  // max effector displacement per step, meters
  int target_extent = 40;    // approximate K, used for sanity checks and budgets
  Vec3 home{0.0, 0.0, 0.45};
  PlacementBox workspace{{-0.4, -0.4, 0.0}, {0.4, 0.4, 0.8}};
};

// Kinematic world: effector position, object positions (by EnvSpec object
// order) and the currently grasped object, if any.
struct WorldState {
  Vec3 effector{};
  std::vector<Vec3> objects;
  int attached = -1;
  Vec3 attach_offset{};
};

class GenerationError : public std::runtime_error {
 public:
  GenerationError(std::string phase, const std::string& message)
      : std::runtime_error(message), phase_(std::move(phase)) {}
  const std::string& phase() const { return phase_; }

 private:
  std::string phase_;
};

// Runs the environment's FSM script from a seeded random object placement.
// The returned decomposition is a contiguous partition of [0, K] whose
// descriptions are the script's phase descriptions in order. Identical
// (env, seed) inputs produce bit-identical output.
std::pair<TrajectoryData, SubTaskDecomposition> generate_trajectory(const EnvSpec& env,
                                                                    std::int64_t seed,
                                                                    bool with_frames);

// Top-down 256x256 schematic of the workspace: objects as colored squares,
// effector as a cross marker whose arm length tracks height, step number
// drawn top-left with the 5x7 digit font below.
Frame render_frame(const EnvSpec& env, const WorldState& world, int k);

// Door, Lift, PickPlace and Stack environment scripts.
std::vector<EnvSpec> builtin_envs();
std::optional<EnvSpec> builtin_env(const std::string& name);

// 5x7 digit glyphs in column-major bit layout: bit r of column byte c is the
// pixel at (c, r). Exposed so image consumers can locate and decode the
// burned-in step number.
const std::array<std::uint8_t, 5>& digit_glyph(int digit);

inline constexpr int kDigitOriginX = 4;
inline constexpr int kDigitOriginY = 4;
inline constexpr int kDigitScale = 2;
inline constexpr int kDigitSpacingPx = 2;  // between glyphs, after scaling

}  // namespace taskdecomp
