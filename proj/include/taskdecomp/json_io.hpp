#pragma once

#include <filesystem>

#include <json.hpp>

#include "taskdecomp/types.hpp"

namespace taskdecomp {

// Decomposition document: {"meta": {"source": ...}, "subtasks": [{start, end,
// description}, ...]}. Loading also accepts a bare JSON array of sub-tasks, in
// which case the source falls back to `default_source`.
nlohmann::json decomposition_to_json(const SubTaskDecomposition& d);
SubTaskDecomposition decomposition_from_json(
    const nlohmann::json& j,
    DecompositionSource default_source = DecompositionSource::FmPrediction);

void save_decomposition(const std::filesystem::path& path, const SubTaskDecomposition& d);
SubTaskDecomposition load_decomposition(
    const std::filesystem::path& path,
    DecompositionSource default_source = DecompositionSource::FmPrediction);

// Trajectory document: {"env_name", "seed", "objects", "steps": [{"k", "x",
// "u", "frame"}]}. Frames live next to the document as frame_{k:05}.png files.
nlohmann::json trajectory_to_json(const TrajectoryData& d);
TrajectoryData trajectory_from_json(const nlohmann::json& j);

// Writes dir/trajectory.json plus one PNG per frame into `dir`.
void save_trajectory(const std::filesystem::path& dir, const TrajectoryData& d);
TrajectoryData load_trajectory(const std::filesystem::path& dir);

std::string frame_file_name(int step);

}  // namespace taskdecomp
