#include "taskdecomp/prompt.hpp"

#include <map>
#include <stdexcept>

#include "taskdecomp/default_context.hpp"
#include "taskdecomp/png.hpp"
#include "taskdecomp/util.hpp"

namespace taskdecomp {

using nlohmann::json;

std::string to_string(Shot shot) { return shot == Shot::OneShot ? "one_shot" : "zero_shot"; }

std::string to_string(Modality modality) {
  switch (modality) {
    case Modality::TextOnly: return "text_only";
    case Modality::VisionOnly: return "vision_only";
    case Modality::Both: return "both";
  }
  return "unknown";
}

Shot shot_from_string(const std::string& name) {
  if (name == "one_shot") return Shot::OneShot;
  if (name == "zero_shot") return Shot::ZeroShot;
  throw std::invalid_argument("unknown shot context: " + name);
}

Modality modality_from_string(const std::string& name) {
  if (name == "text_only") return Modality::TextOnly;
  if (name == "vision_only") return Modality::VisionOnly;
  if (name == "both") return Modality::Both;
  throw std::invalid_argument("unknown modality: " + name);
}

namespace {

// Context templates are plain text. An optional "version: N" first line is
// followed by sections opened by a placeholder name alone on a line:
// {TASK_DESCRIPTION}, {TEXT_DATA_DESCRIPTION}, {VIDEO_DATA_DESCRIPTION} and
// optionally {IN_CONTEXT_EXAMPLE} for a static snippet override.
PromptContext context_from_template_text(const std::string& text) {
  PromptContext ctx;
  std::string current;
  std::map<std::string, std::string> sections;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    const std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;

    const std::string trimmed = trim(line);
    if (current.empty() && trimmed.rfind("version:", 0) == 0) {
      ctx.version = std::stoi(trimmed.substr(8));
      continue;
    }
    if (trimmed.size() > 2 && trimmed.front() == '{' && trimmed.back() == '}' &&
        trimmed.find(' ') == std::string::npos) {
      current = trimmed.substr(1, trimmed.size() - 2);
      continue;
    }
    if (!current.empty()) sections[current] += line + "\n";
  }

  auto section = [&](const char* name, bool required) {
    auto it = sections.find(name);
    if (it == sections.end()) {
      if (required)
        throw std::invalid_argument(std::string("context template misses the {") + name +
                                    "} section");
      return std::string();
    }
    return trim(it->second);
  };
  ctx.task_description = section("TASK_DESCRIPTION", true);
  ctx.text_data_description = section("TEXT_DATA_DESCRIPTION", true);
  ctx.video_data_description = section("VIDEO_DATA_DESCRIPTION", true);
  ctx.one_shot_snippet = section("IN_CONTEXT_EXAMPLE", false);
  return ctx;
}

std::string header_line(const TrajectoryData& data) {
  std::string header = "k,eef_x,eef_y,eef_z";
  for (const std::string& name : data.object_names)
    header += "," + name + "_x," + name + "_y," + name + "_z";
  for (int i = 0; i < 6; ++i) header += ",u_" + std::to_string(i);
  header += ",gripper";
  return header;
}

std::string row_line(const StepRecord& step) {
  std::string row = std::to_string(step.k);
  for (double x : step.state) row += "," + format_fixed(x, 3);
  for (int i = 0; i < 6; ++i) row += "," + format_fixed(step.control[i], 3);
  row += "," + format_fixed(step.control[6], 0);
  return row;
}

const StepRecord& step_at(const TrajectoryData& data, int k) {
  if (k >= 0 && k < static_cast<int>(data.steps.size()) && data.steps[k].k == k)
    return data.steps[k];
  for (const StepRecord& s : data.steps)
    if (s.k == k) return s;
  throw std::out_of_range("no step with index " + std::to_string(k));
}

}  // namespace

PromptContext default_prompt_context() {
  return context_from_template_text(detail::kDefaultContextTemplate);
}

PromptContext load_prompt_context(const std::filesystem::path& path) {
  return context_from_template_text(read_text_file(path));
}

std::string serialize_textual(const TrajectoryData& data) {
  std::string table = header_line(data) + "\n";
  for (const StepRecord& step : data.steps) table += row_line(step) + "\n";
  return table;
}

std::string make_one_shot_snippet(const TrajectoryData& data, const SubTaskDecomposition& gt) {
  if (gt.subtasks.size() < 2)
    throw std::invalid_argument(
        "make_one_shot_snippet: hold-out decomposition has no transitions");

  std::string snippet =
      "Example sub-task transitions from a different trajectory of the same kind. For each "
      "transition, the rows are the last step of one sub-task and the first step of the next.\n";
  snippet += "Columns: " + header_line(data) + "\n";
  for (std::size_t n = 0; n + 1 < gt.subtasks.size(); ++n) {
    const SubTask& a = gt.subtasks[n];
    const SubTask& b = gt.subtasks[n + 1];
    snippet += "\nTransition " + std::to_string(n + 1) + ": \"" + a.description + "\" (steps " +
               std::to_string(a.start) + "-" + std::to_string(a.end) + ") -> \"" + b.description +
               "\" (steps " + std::to_string(b.start) + "-" + std::to_string(b.end) + ")\n";
    snippet += row_line(step_at(data, a.end)) + "\n";
    snippet += row_line(step_at(data, b.start)) + "\n";
  }
  return snippet;
}

long estimate_text_tokens(std::string_view text) {
  return static_cast<long>((text.size() + 3) / 4);
}

Prompt build_prompt(const PromptContext& ctx, const TrajectoryData& data, Modality modality) {
  if (data.steps.empty()) throw std::invalid_argument("build_prompt: empty trajectory");

  const bool wants_images = modality != Modality::TextOnly;
  const bool wants_table = modality != Modality::VisionOnly;
  if (wants_images) {
    for (const StepRecord& step : data.steps)
      if (!step.frame_id || !data.frames.count(*step.frame_id))
        throw std::invalid_argument("build_prompt: step " + std::to_string(step.k) +
                                    " has no frame; vision modalities need one per step");
  }
  if (ctx.shot == Shot::OneShot && trim(ctx.one_shot_snippet).empty())
    throw std::invalid_argument("build_prompt: one-shot context without a snippet");

  Prompt prompt;
  prompt.modality = modality;
  prompt.env_name = data.env_name;
  prompt.seed = data.seed;
  prompt.step_count = static_cast<int>(data.steps.size());

  prompt.segments.push_back(TextSegment{ctx.task_description});
  std::string data_description;
  if (wants_table) data_description = ctx.text_data_description;
  if (wants_images) {
    if (!data_description.empty()) data_description += "\n\n";
    data_description += ctx.video_data_description;
  }
  prompt.segments.push_back(TextSegment{std::move(data_description)});
  if (ctx.shot == Shot::OneShot) prompt.segments.push_back(TextSegment{ctx.one_shot_snippet});
  if (wants_table) prompt.segments.push_back(TextSegment{serialize_textual(data)});
  if (wants_images) {
    for (const StepRecord& step : data.steps) {
      const Frame& frame = data.frames.at(*step.frame_id);
      ImageSegment segment;
      segment.step_label = frame.step_label;
      auto png = png_encode(frame.width, frame.height, frame.pixels);
      segment.base64_png = base64_encode(png.data(), png.size());
      prompt.segments.push_back(std::move(segment));
    }
  }

  long tokens = 0;
  for (const PromptSegment& segment : prompt.segments) {
    if (const auto* text = std::get_if<TextSegment>(&segment))
      tokens += estimate_text_tokens(text->content);
    else
      tokens += kTokensPerImage;
  }
  prompt.estimated_tokens = tokens;
  return prompt;
}

json prompt_to_json(const Prompt& prompt) {
  json segments = json::array();
  for (const PromptSegment& segment : prompt.segments) {
    if (const auto* text = std::get_if<TextSegment>(&segment)) {
      segments.push_back(json{{"type", "text"}, {"content", text->content}});
    } else {
      const auto& image = std::get<ImageSegment>(segment);
      segments.push_back(json{
          {"type", "image"}, {"step_label", image.step_label}, {"base64_png", image.base64_png}});
    }
  }
  return json{{"modality", to_string(prompt.modality)},
              {"env_name", prompt.env_name},
              {"seed", prompt.seed},
              {"step_count", prompt.step_count},
              {"estimated_tokens", prompt.estimated_tokens},
              {"segments", segments}};
}

Prompt prompt_from_json(const json& j) {
  Prompt prompt;
  prompt.modality = modality_from_string(j.at("modality").get<std::string>());
  prompt.env_name = j.at("env_name").get<std::string>();
  prompt.seed = j.at("seed").get<std::int64_t>();
  prompt.step_count = j.at("step_count").get<int>();
  prompt.estimated_tokens = j.at("estimated_tokens").get<long>();
  for (const json& item : j.at("segments")) {
    if (item.at("type") == "text") {
      prompt.segments.push_back(TextSegment{item.at("content").get<std::string>()});
    } else {
      ImageSegment image;
      image.step_label = item.at("step_label").get<int>();
      image.base64_png = item.at("base64_png").get<std::string>();
      prompt.segments.push_back(std::move(image));
    }
  }
  return prompt;
}

}  // namespace taskdecomp
