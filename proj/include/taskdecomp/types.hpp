#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace taskdecomp {

using Vec3 = std::array<double, 3>;

// One step of trajectory data: step index, state vector, control vector and an
// optional reference into the owning trajectory's frame store.
//
// The state vector holds the end-effector x-y-z position in meters followed by
// one x-y-z triple per environment object. The control vector holds the six
// desired end-effector pose values plus a gripper flag (0 = open, 1 = closed).
struct StepRecord {
  int k = 0;
  std::vector<double> state;
  std::array<double, 7> control{};
  std::optional<int> frame_id;

  bool operator==(const StepRecord&) const = default;
};

// 256x256 RGB raster with the owning step's number burned into the image.
struct Frame {
  int width = 256;
  int height = 256;
  std::vector<std::uint8_t> pixels;  // row-major RGB
  int step_label = 0;

  bool operator==(const Frame&) const = default;
};

struct TrajectoryData {
  std::string env_name;
  std::int64_t seed = 0;
  std::vector<std::string> object_names;  // column naming for the state vector
  std::vector<StepRecord> steps;
  std::map<int, Frame> frames;

  bool operator==(const TrajectoryData&) const = default;
};

enum class DecompositionSource { GroundTruth, FmPrediction, HumanAnnotation };

std::string to_string(DecompositionSource source);
DecompositionSource decomposition_source_from_string(const std::string& name);

// An atomic motion bounded by inclusive step indices and described in natural
// language.
struct SubTask {
  int start = 0;
  int end = 0;
  std::string description;

  bool operator==(const SubTask&) const = default;
};

// Temporally ordered list of sub-tasks. Overlaps and gaps between sub-tasks are
// representable; only the ordering and per-interval rules below are enforced.
struct SubTaskDecomposition {
  std::vector<SubTask> subtasks;
  DecompositionSource source = DecompositionSource::GroundTruth;

  bool operator==(const SubTaskDecomposition&) const = default;
};

enum class ViolationKind {
  EmptyDecomposition,
  StartAfterEnd,
  OutOfOrder,
  NegativeStep,
  EmptyDescription,
  NonIntegerStep,  // produced by the response parser, never by validation
};

std::string to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  int index = -1;  // offending sub-task index; -1 for whole-decomposition rules

  bool operator==(const Violation&) const = default;
};

struct ValidationResult {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

// Checks every ordering and per-interval rule and reports all violations found,
// not just the first. Equal consecutive start values are permitted; the
// ordering rule is strictly start(n+1) < start(n).
ValidationResult validate_decomposition(const SubTaskDecomposition& d);

struct Extent {
  int steps = 0;          // K: max end over all sub-tasks
  int subtask_count = 0;  // N

  bool operator==(const Extent&) const = default;
};

// K and N for a non-empty decomposition. Throws std::invalid_argument when the
// decomposition is empty.
Extent derive_extent(const SubTaskDecomposition& d);

// Structural checks for trajectory data: contiguous step indices from 0,
// constant state dimension of 3 + 3*objects, gripper flag in {0,1}, and frame
// references resolvable when frames are present. Returns human-readable
// problems; empty means ok.
std::vector<std::string> validate_trajectory(const TrajectoryData& d);

}  // namespace taskdecomp
