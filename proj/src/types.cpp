#include "taskdecomp/types.hpp"

#include <stdexcept>

#include "taskdecomp/util.hpp"

namespace taskdecomp {

std::string to_string(DecompositionSource source) {
  switch (source) {
    case DecompositionSource::GroundTruth: return "ground_truth";
    case DecompositionSource::FmPrediction: return "fm_prediction";
    case DecompositionSource::HumanAnnotation: return "human_annotation";
  }
  return "unknown";
}

DecompositionSource decomposition_source_from_string(const std::string& name) {
  if (name == "ground_truth") return DecompositionSource::GroundTruth;
  if (name == "fm_prediction") return DecompositionSource::FmPrediction;
  if (name == "human_annotation") return DecompositionSource::HumanAnnotation;
  throw std::invalid_argument("unknown decomposition source: " + name);
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::EmptyDecomposition: return "EmptyDecomposition";
    case ViolationKind::StartAfterEnd: return "StartAfterEnd";
    case ViolationKind::OutOfOrder: return "OutOfOrder";
    case ViolationKind::NegativeStep: return "NegativeStep";
    case ViolationKind::EmptyDescription: return "EmptyDescription";
    case ViolationKind::NonIntegerStep: return "NonIntegerStep";
  }
  return "Unknown";
}

ValidationResult validate_decomposition(const SubTaskDecomposition& d) {
  ValidationResult result;
  if (d.subtasks.empty()) {
    result.violations.push_back({ViolationKind::EmptyDecomposition, -1});
    return result;
  }
  for (std::size_t n = 0; n < d.subtasks.size(); ++n) {
    const SubTask& s = d.subtasks[n];
    int idx = static_cast<int>(n);
    if (s.start < 0 || s.end < 0) result.violations.push_back({ViolationKind::NegativeStep, idx});
    if (s.start > s.end) result.violations.push_back({ViolationKind::StartAfterEnd, idx});
    if (n > 0 && s.start < d.subtasks[n - 1].start)
      result.violations.push_back({ViolationKind::OutOfOrder, idx});
    if (trim(s.description).empty())
      result.violations.push_back({ViolationKind::EmptyDescription, idx});
  }
  return result;
}

Extent derive_extent(const SubTaskDecomposition& d) {
  if (d.subtasks.empty()) throw std::invalid_argument("derive_extent: empty decomposition");
  Extent extent;
  extent.subtask_count = static_cast<int>(d.subtasks.size());
  for (const SubTask& s : d.subtasks) extent.steps = std::max(extent.steps, s.end);
  return extent;
}

std::vector<std::string> validate_trajectory(const TrajectoryData& d) {
  std::vector<std::string> problems;
  if (d.steps.empty()) {
    problems.push_back("trajectory has no steps");
    return problems;
  }
  const std::size_t want_dim = 3 + 3 * d.object_names.size();
  for (std::size_t i = 0; i < d.steps.size(); ++i) {
    const StepRecord& s = d.steps[i];
    if (s.k != static_cast<int>(i))
      problems.push_back("step index " + std::to_string(s.k) + " at position " + std::to_string(i) +
                         " breaks the contiguous 0..K sequence");
    if (s.state.size() != want_dim)
      problems.push_back("step " + std::to_string(s.k) + ": state dimension " +
                         std::to_string(s.state.size()) + " != " + std::to_string(want_dim));
    double g = s.control[6];
    if (g != 0.0 && g != 1.0)
      problems.push_back("step " + std::to_string(s.k) + ": gripper flag not in {0,1}");
    if (s.frame_id && !d.frames.count(*s.frame_id))
      problems.push_back("step " + std::to_string(s.k) + ": dangling frame reference " +
                         std::to_string(*s.frame_id));
  }
  return problems;
}

}  // namespace taskdecomp
