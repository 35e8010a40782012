#include "taskdecomp/json_io.hpp"

#include <cstdio>
#include <stdexcept>

#include "taskdecomp/png.hpp"
#include "taskdecomp/util.hpp"

namespace taskdecomp {

using nlohmann::json;

namespace {

json subtask_to_json(const SubTask& s) {
  return json{{"start", s.start}, {"end", s.end}, {"description", s.description}};
}

SubTask subtask_from_json(const json& j) {
  SubTask s;
  s.start = j.at("start").get<int>();
  s.end = j.at("end").get<int>();
  s.description = j.at("description").get<std::string>();
  return s;
}

}  // namespace

json decomposition_to_json(const SubTaskDecomposition& d) {
  json subtasks = json::array();
  for (const SubTask& s : d.subtasks) subtasks.push_back(subtask_to_json(s));
  return json{{"meta", {{"source", to_string(d.source)}}}, {"subtasks", subtasks}};
}

SubTaskDecomposition decomposition_from_json(const json& j, DecompositionSource default_source) {
  SubTaskDecomposition d;
  d.source = default_source;
  const json* subtasks = &j;
  if (j.is_object()) {
    if (j.contains("meta") && j["meta"].contains("source"))
      d.source = decomposition_source_from_string(j["meta"]["source"].get<std::string>());
    subtasks = &j.at("subtasks");
  }
  if (!subtasks->is_array()) throw std::runtime_error("decomposition document: expected an array");
  for (const json& item : *subtasks) d.subtasks.push_back(subtask_from_json(item));
  return d;
}

void save_decomposition(const std::filesystem::path& path, const SubTaskDecomposition& d) {
  write_text_file(path, decomposition_to_json(d).dump(2) + "\n");
}

SubTaskDecomposition load_decomposition(const std::filesystem::path& path,
                                        DecompositionSource default_source) {
  return decomposition_from_json(json::parse(read_text_file(path)), default_source);
}

json trajectory_to_json(const TrajectoryData& d) {
  json steps = json::array();
  for (const StepRecord& s : d.steps) {
    json step{{"k", s.k}, {"x", s.state}, {"u", s.control}};
    step["frame"] = s.frame_id ? json(*s.frame_id) : json(nullptr);
    steps.push_back(std::move(step));
  }
  return json{{"env_name", d.env_name},
              {"seed", d.seed},
              {"objects", d.object_names},
              {"steps", steps}};
}

TrajectoryData trajectory_from_json(const json& j) {
  TrajectoryData d;
  d.env_name = j.at("env_name").get<std::string>();
  d.seed = j.at("seed").get<std::int64_t>();
  d.object_names = j.at("objects").get<std::vector<std::string>>();
  for (const json& item : j.at("steps")) {
    StepRecord s;
    s.k = item.at("k").get<int>();
    s.state = item.at("x").get<std::vector<double>>();
    auto u = item.at("u").get<std::vector<double>>();
    if (u.size() != s.control.size())
      throw std::runtime_error("trajectory document: control vector must have 7 entries");
    std::copy(u.begin(), u.end(), s.control.begin());
    if (!item.at("frame").is_null()) s.frame_id = item.at("frame").get<int>();
    d.steps.push_back(std::move(s));
  }
  return d;
}

std::string frame_file_name(int step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%05d.png", step);
  return buf;
}

void save_trajectory(const std::filesystem::path& dir, const TrajectoryData& d) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "trajectory.json", trajectory_to_json(d).dump(2) + "\n");
  for (const auto& [id, frame] : d.frames)
    write_binary_file(dir / frame_file_name(id), png_encode(frame.width, frame.height, frame.pixels));
}

TrajectoryData load_trajectory(const std::filesystem::path& dir) {
  TrajectoryData d = trajectory_from_json(json::parse(read_text_file(dir / "trajectory.json")));
  for (const StepRecord& s : d.steps) {
    if (!s.frame_id) continue;
    auto png = png_decode(read_binary_file(dir / frame_file_name(*s.frame_id)));
    Frame frame;
    frame.width = png.width;
    frame.height = png.height;
    frame.pixels = std::move(png.rgb);
    frame.step_label = *s.frame_id;
    d.frames.emplace(*s.frame_id, std::move(frame));
  }
  return d;
}

}  // namespace taskdecomp
