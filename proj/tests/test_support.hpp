#pragma once

// Shared fixtures and independent oracles for the test suites. The similarity
// oracle here is a deliberate from-scratch transcription of the scoring rules
// (no calls into the library's scoring path) so the engine can be checked
// against it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "taskdecomp/similarity.hpp"
#include "taskdecomp/types.hpp"
#include "taskdecomp/util.hpp"

namespace tdtest {

using taskdecomp::DecompositionSource;
using taskdecomp::Encoder;
using taskdecomp::SubTask;
using taskdecomp::SubTaskDecomposition;

inline SubTaskDecomposition make_decomposition(
    std::vector<std::tuple<int, int, std::string>> triples,
    DecompositionSource source = DecompositionSource::GroundTruth) {
  SubTaskDecomposition d;
  d.source = source;
  for (auto& [start, end, description] : triples)
    d.subtasks.push_back({start, end, std::move(description)});
  return d;
}

// Reference Stack decomposition used across tests: an 8-phase ground truth
// over a 62-step trajectory.
inline SubTaskDecomposition stack_reference_ground_truth() {
  return make_decomposition({{0, 10, "Move to above Cube A"},
                             {11, 23, "Move directly down to Cube A"},
                             {24, 25, "Grasp Cube A"},
                             {26, 39, "Vertically pick up Cube A"},
                             {40, 48, "Align Cube A with Cube B"},
                             {49, 54, "Move Cube A vertically down to Cube B"},
                             {55, 58, "Release Cube A onto Cube B"},
                             {59, 62, "Return Home"}});
}

// A high-quality prediction for the same trajectory: identical except the
// alignment and lowering phases are merged into one interval.
inline SubTaskDecomposition stack_reference_prediction() {
  return make_decomposition({{0, 10, "Move to above Cube A"},
                             {11, 23, "Move directly down to Cube A"},
                             {24, 25, "Grasp Cube A"},
                             {26, 39, "Vertically pick up Cube A"},
                             {40, 54, "Align Cube A with Cube B"},
                             {55, 58, "Release Cube A onto Cube B"},
                             {59, 62, "Return Home"}},
                            DecompositionSource::FmPrediction);
}

// A coarser human-style annotation of the same trajectory with different
// phrasing and boundaries.
inline SubTaskDecomposition stack_reference_human_annotation() {
  return make_decomposition({{0, 24, "robot arm moves over red block"},
                             {25, 27, "robot arm grips red block"},
                             {28, 40, "robot arm lifts red block"},
                             {41, 56, "robot arm moves red block over to the top of the green block"},
                             {57, 59, "robot arm releases grip of red block"},
                             {60, 62, "robot arm stows away"}},
                            DecompositionSource::HumanAnnotation);
}

// Independent scoring oracle: literal double loop, re-encoding descriptions on
// every pair, with its own interval arithmetic.
inline std::pair<double, double> naive_similarity(const SubTaskDecomposition& a,
                                                  const SubTaskDecomposition& b,
                                                  const Encoder& encoder) {
  int steps_a = 0, steps_b = 0;
  for (const SubTask& s : a.subtasks) steps_a = std::max(steps_a, s.end);
  for (const SubTask& s : b.subtasks) steps_b = std::max(steps_b, s.end);
  const double longest = std::max(std::max(steps_a, steps_b), 1);

  double iou_sum = 0.0, cs_sum = 0.0, w_sum = 0.0;
  for (const SubTask& s : a.subtasks) {
    for (const SubTask& p : b.subtasks) {
      const double lo = std::max(s.start, p.start);
      const double hi = std::min(s.end, p.end);
      const double union_lo = std::min(s.start, p.start);
      const double union_hi = std::max(s.end, p.end);
      double overlap;
      if (union_hi == union_lo)
        overlap = 1.0;  // both are the same single step
      else
        overlap = std::max(0.0, hi - lo) / (union_hi - union_lo);
      if (overlap <= 0.0) continue;

      const std::vector<double> v1 = encoder.encode(s.description);
      const std::vector<double> v2 = encoder.encode(p.description);
      double dot = 0.0, n1 = 0.0, n2 = 0.0;
      for (std::size_t i = 0; i < v1.size(); ++i) {
        dot += v1[i] * v2[i];
        n1 += v1[i] * v1[i];
        n2 += v2[i] * v2[i];
      }
      const double cs = dot / (std::sqrt(n1) * std::sqrt(n2));

      const double weight = (hi - lo + 1.0) / longest;
      iou_sum += overlap * weight;
      cs_sum += cs * weight;
      w_sum += weight;
    }
  }
  if (w_sum == 0.0) return {0.0, 0.0};
  return {iou_sum / w_sum, cs_sum / w_sum};
}

// Contiguous partition of [0, K]: the shape ground-truth generators emit.
inline SubTaskDecomposition random_partition(taskdecomp::CounterRng& rng,
                                             const std::vector<std::string>& descriptions) {
  const int n = static_cast<int>(rng.uniform_int(1, 6));
  SubTaskDecomposition d;
  int start = 0;
  for (int i = 0; i < n; ++i) {
    const int len = static_cast<int>(rng.uniform_int(1, 20));
    const std::string& desc = descriptions[std::size_t(
        rng.uniform_int(0, static_cast<std::int64_t>(descriptions.size()) - 1))];
    d.subtasks.push_back({start, start + len - 1, desc});
    start += len;
  }
  return d;
}

// Arbitrary valid decomposition: overlaps, gaps, point intervals and duplicate
// starts are all allowed; only the ordering rule is maintained.
inline SubTaskDecomposition random_wild(taskdecomp::CounterRng& rng,
                                        const std::vector<std::string>& descriptions) {
  const int n = static_cast<int>(rng.uniform_int(1, 6));
  const int k_cap = static_cast<int>(rng.uniform_int(4, 80));
  std::vector<int> starts;
  for (int i = 0; i < n; ++i) starts.push_back(static_cast<int>(rng.uniform_int(0, k_cap)));
  std::sort(starts.begin(), starts.end());
  SubTaskDecomposition d;
  for (int i = 0; i < n; ++i) {
    const int len = static_cast<int>(rng.uniform_int(0, k_cap / 2 + 1));
    const std::string& desc = descriptions[std::size_t(
        rng.uniform_int(0, static_cast<std::int64_t>(descriptions.size()) - 1))];
    d.subtasks.push_back({starts[i], starts[i] + len, desc});
  }
  return d;
}

inline const std::vector<std::string>& description_pool() {
  static const std::vector<std::string> pool = {
      "Move to the cube",       "Grasp the cube",     "Lift the cube",
      "Align with the target",  "Lower onto the bin", "Release the object",
      "Return home",            "Rotate the handle",  "Pull the door open",
  };
  return pool;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() / ("taskdecomp_" + tag);
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace tdtest
