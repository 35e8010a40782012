#include "taskdecomp/simgen.hpp"

#include <algorithm>
#include <cmath>

#include "taskdecomp/util.hpp"

namespace taskdecomp {

namespace {

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

Vec3 add(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

int object_index(const EnvSpec& env, const std::string& name) {
  for (std::size_t i = 0; i < env.objects.size(); ++i)
    if (env.objects[i].name == name) return static_cast<int>(i);
  throw GenerationError("", "script references unknown object: " + name);
}

Vec3 resolve_target(const EnvSpec& env, const FsmPhase& phase, const WorldState& world,
                    const std::vector<Vec3>& initial_objects) {
  switch (phase.target.kind) {
    case PhaseTarget::Kind::Fixed:
      return add(phase.target.point, phase.target.offset);
    case PhaseTarget::Kind::ObjectRelative:
      return add(world.objects[object_index(env, phase.target.object)], phase.target.offset);
    case PhaseTarget::Kind::InitialObjectRelative:
      return add(initial_objects[object_index(env, phase.target.object)], phase.target.offset);
  }
  throw GenerationError(phase.description, "unknown target kind");
}

std::vector<double> observe(const WorldState& world) {
  std::vector<double> state;
  state.reserve(3 + 3 * world.objects.size());
  state.insert(state.end(), world.effector.begin(), world.effector.end());
  for (const Vec3& obj : world.objects) state.insert(state.end(), obj.begin(), obj.end());
  return state;
}

void move_effector(WorldState& world, const Vec3& target, double step_speed) {
  const Vec3 delta = sub(target, world.effector);
  const double dist = distance(target, world.effector);
  if (dist > 0.0) {
    const double scale = std::min(1.0, step_speed / dist);
    world.effector = add(world.effector, Vec3{delta[0] * scale, delta[1] * scale, delta[2] * scale});
  }
  if (world.attached >= 0)
    world.objects[world.attached] = add(world.effector, world.attach_offset);
}

constexpr std::array<std::array<std::uint8_t, 5>, 10> kDigitFont = {{
    {0x3e, 0x51, 0x49, 0x45, 0x3e},  // 0
    {0x00, 0x42, 0x7f, 0x40, 0x00},  // 1
    {0x42, 0x61, 0x51, 0x49, 0x46},  // 2
    {0x21, 0x41, 0x45, 0x4b, 0x31},  // 3
    {0x18, 0x14, 0x12, 0x7f, 0x10},  // 4
    {0x27, 0x45, 0x45, 0x45, 0x39},  // 5
    {0x3c, 0x4a, 0x49, 0x49, 0x30},  // 6
    {0x01, 0x71, 0x09, 0x05, 0x03},  // 7
    {0x36, 0x49, 0x49, 0x49, 0x36},  // 8
    {0x06, 0x49, 0x49, 0x29, 0x1e},  // 9
}};

struct Raster {
  Frame& frame;

  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    if (x < 0 || y < 0 || x >= frame.width || y >= frame.height) return;
    std::size_t i = (std::size_t(y) * frame.width + x) * 3;
    frame.pixels[i] = r;
    frame.pixels[i + 1] = g;
    frame.pixels[i + 2] = b;
  }

  void fill_rect(int x0, int y0, int x1, int y1, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) set(x, y, r, g, b);
  }
};

}  // namespace

const std::array<std::uint8_t, 5>& digit_glyph(int digit) { return kDigitFont.at(digit); }

Frame render_frame(const EnvSpec& env, const WorldState& world, int k) {
  Frame frame;
  frame.step_label = k;
  frame.pixels.assign(std::size_t(frame.width) * frame.height * 3, 0);

  Raster raster{frame};
  raster.fill_rect(0, 0, frame.width - 1, frame.height - 1, 235, 235, 235);

  const Vec3& lo = env.workspace.lo;
  const Vec3& hi = env.workspace.hi;
  auto to_px = [&](double x) {
    return int(std::lround((x - lo[0]) / (hi[0] - lo[0]) * (frame.width - 1)));
  };
  auto to_py = [&](double y) {
    return frame.height - 1 - int(std::lround((y - lo[1]) / (hi[1] - lo[1]) * (frame.height - 1)));
  };

  for (std::size_t i = 0; i < env.objects.size(); ++i) {
    const auto& color = env.objects[i].color;
    const int cx = to_px(world.objects[i][0]);
    const int cy = to_py(world.objects[i][1]);
    raster.fill_rect(cx - 6, cy - 6, cx + 6, cy + 6, color[0], color[1], color[2]);
  }

  // Cross marker; arm length tracks effector height so vertical motion is
  // visible in the top-down view.
  const double z_frac = std::clamp((world.effector[2] - lo[2]) / (hi[2] - lo[2]), 0.0, 1.0);
  const int arm = 4 + int(std::lround(z_frac * 8.0));
  const int ex = to_px(world.effector[0]);
  const int ey = to_py(world.effector[1]);
  raster.fill_rect(ex - arm, ey - 1, ex + arm, ey + 1, 20, 20, 20);
  raster.fill_rect(ex - 1, ey - arm, ex + 1, ey + arm, 20, 20, 20);

  // Step number, top-left.
  const std::string digits = std::to_string(k);
  int origin_x = kDigitOriginX;
  for (char c : digits) {
    const auto& glyph = kDigitFont[c - '0'];
    for (int col = 0; col < 5; ++col) {
      for (int row = 0; row < 7; ++row) {
        if (!(glyph[col] >> row & 1)) continue;
        const int x0 = origin_x + col * kDigitScale;
        const int y0 = kDigitOriginY + row * kDigitScale;
        raster.fill_rect(x0, y0, x0 + kDigitScale - 1, y0 + kDigitScale - 1, 0, 0, 0);
      }
    }
    origin_x += 5 * kDigitScale + kDigitSpacingPx;
  }
  return frame;
}

std::pair<TrajectoryData, SubTaskDecomposition> generate_trajectory(const EnvSpec& env,
                                                                    std::int64_t seed,
                                                                    bool with_frames) {
  if (env.script.empty()) throw GenerationError("", "environment script is empty");

  std::uint64_t stream = 0;
  for (char c : env.name) stream = stream * 131 + std::uint8_t(c);
  CounterRng rng(static_cast<std::uint64_t>(seed), stream);

  WorldState world;
  world.effector = env.home;
  for (const ObjectSpec& obj : env.objects) {
    Vec3 pos;
    for (int axis = 0; axis < 3; ++axis)
      pos[axis] = rng.uniform(obj.placement.lo[axis], obj.placement.hi[axis]);
    world.objects.push_back(pos);
  }
  const std::vector<Vec3> initial_objects = world.objects;

  TrajectoryData data;
  data.env_name = env.name;
  data.seed = seed;
  for (const ObjectSpec& obj : env.objects) data.object_names.push_back(obj.name);

  SubTaskDecomposition gt;
  gt.source = DecompositionSource::GroundTruth;

  const int budget = 10 * std::max(env.target_extent, 1);
  int k = 0;
  for (const FsmPhase& phase : env.script) {
    const int phase_start = k;
    int dwelled = 0;
    while (true) {
      const bool is_dwell = phase.dwell_steps > 0;
      const Vec3 target = is_dwell ? world.effector
                                   : resolve_target(env, phase, world, initial_objects);
      const bool done = is_dwell ? (dwelled + 1 >= phase.dwell_steps)
                                 : (distance(world.effector, target) <= phase.tolerance);

      StepRecord record;
      record.k = k;
      record.state = observe(world);
      record.control = {target[0], target[1], target[2], 0.0, 0.0, 0.0,
                        phase.gripper_closed ? 1.0 : 0.0};
      if (with_frames) {
        record.frame_id = k;
        data.frames.emplace(k, render_frame(env, world, k));
      }
      data.steps.push_back(std::move(record));
      ++k;
      ++dwelled;
      if (done) break;
      if (k - phase_start > budget)
        throw GenerationError(phase.description,
                              "phase step budget exceeded in phase \"" + phase.description + "\"");
      move_effector(world, target, env.step_speed);
    }
    gt.subtasks.push_back({phase_start, k - 1, phase.description});

    if (phase.grasp_effect == FsmPhase::GraspEffect::Attach) {
      world.attached = object_index(env, phase.grasp_object);
      world.attach_offset = sub(world.objects[world.attached], world.effector);
    } else if (phase.grasp_effect == FsmPhase::GraspEffect::Release) {
      world.attached = -1;
    }
  }
  return {std::move(data), std::move(gt)};
}

namespace {

FsmPhase move_phase(std::string description, PhaseTarget target, bool gripper_closed) {
  FsmPhase phase;
  phase.description = std::move(description);
  phase.target = std::move(target);
  phase.gripper_closed = gripper_closed;
  return phase;
}

FsmPhase grasp_phase(std::string description, std::string object) {
  FsmPhase phase;
  phase.description = std::move(description);
  phase.gripper_closed = true;
  phase.dwell_steps = 2;
  phase.grasp_effect = FsmPhase::GraspEffect::Attach;
  phase.grasp_object = std::move(object);
  return phase;
}

FsmPhase release_phase(std::string description) {
  FsmPhase phase;
  phase.description = std::move(description);
  phase.dwell_steps = 2;
  phase.grasp_effect = FsmPhase::GraspEffect::Release;
  return phase;
}

EnvSpec make_lift() {
  EnvSpec env;
  env.name = "Lift";
  env.step_speed = 0.02;
  env.target_extent = 40;
  env.objects = {{"cube", {{-0.25, -0.25, 0.02}, {0.25, 0.25, 0.02}}, {200, 60, 60}}};
  env.script = {
      move_phase("Move to cube", PhaseTarget::object_relative("cube", {0, 0, 0.015}), false),
      grasp_phase("Grasp Cube", "cube"),
      move_phase("Lift Cube", PhaseTarget::initial_object_relative("cube", {0, 0, 0.3}), true),
  };
  return env;
}

EnvSpec make_stack() {
  EnvSpec env;
  env.name = "Stack";
  env.step_speed = 0.025;
  env.target_extent = 75;
  env.objects = {{"cubeA", {{-0.28, -0.2, 0.02}, {-0.08, 0.2, 0.02}}, {200, 60, 60}},
                 {"cubeB", {{0.08, -0.2, 0.02}, {0.28, 0.2, 0.02}}, {60, 160, 60}}};
  env.script = {
      move_phase("Move to above Cube A", PhaseTarget::object_relative("cubeA", {0, 0, 0.23}),
                 false),
      move_phase("Move directly down to Cube A",
                 PhaseTarget::object_relative("cubeA", {0, 0, 0.015}), false),
      grasp_phase("Grasp Cube A", "cubeA"),
      move_phase("Vertically pick up Cube A",
                 PhaseTarget::initial_object_relative("cubeA", {0, 0, 0.25}), true),
      move_phase("Align Cube A with Cube B", PhaseTarget::object_relative("cubeB", {0, 0, 0.25}),
                 true),
      move_phase("Move Cube A vertically down to Cube B",
                 PhaseTarget::object_relative("cubeB", {0, 0, 0.055}), true),
      release_phase("Release Cube A onto Cube B"),
      move_phase("Return Home", PhaseTarget::fixed({0.0, 0.0, 0.45}), false),
  };
  return env;
}

EnvSpec make_door() {
  EnvSpec env;
  env.name = "Door";
  env.step_speed = 0.01;
  env.target_extent = 80;
  env.objects = {{"handle", {{0.1, 0.1, 0.3}, {0.3, 0.3, 0.45}}, {70, 90, 200}}};
  env.script = {
      move_phase("Move to door handle", PhaseTarget::object_relative("handle", {0, 0, 0}), false),
      grasp_phase("Grasp door handle", "handle"),
      move_phase("Rotate door handle",
                 PhaseTarget::initial_object_relative("handle", {0, 0, -0.08}), true),
      move_phase("Pull door open",
                 PhaseTarget::initial_object_relative("handle", {-0.22, -0.22, -0.08}), true),
      release_phase("Release door handle"),
  };
  return env;
}

EnvSpec make_pickplace() {
  EnvSpec env;
  env.name = "PickPlace";
  env.step_speed = 0.018;
  env.target_extent = 80;
  env.objects = {{"can", {{-0.3, -0.2, 0.03}, {-0.1, 0.2, 0.03}}, {230, 150, 40}},
                 {"bin", {{0.1, -0.2, 0.02}, {0.3, 0.2, 0.02}}, {70, 90, 200}}};
  env.script = {
      move_phase("Move to above can", PhaseTarget::object_relative("can", {0, 0, 0.22}), false),
      move_phase("Move down to can", PhaseTarget::object_relative("can", {0, 0, 0.01}), false),
      grasp_phase("Grasp can", "can"),
      move_phase("Lift can", PhaseTarget::initial_object_relative("can", {0, 0, 0.25}), true),
      move_phase("Move can to above bin", PhaseTarget::object_relative("bin", {0, 0, 0.26}), true),
      move_phase("Lower can into bin", PhaseTarget::object_relative("bin", {0, 0, 0.06}), true),
      release_phase("Release can"),
  };
  return env;
}

}  // namespace

std::vector<EnvSpec> builtin_envs() {
  return {make_door(), make_lift(), make_pickplace(), make_stack()};
}

std::optional<EnvSpec> builtin_env(const std::string& name) {
  for (EnvSpec& env : builtin_envs())
    if (env.name == name) return std::move(env);
  return std::nullopt;
}

}  // namespace taskdecomp
