#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "taskdecomp/types.hpp"

namespace taskdecomp {

enum class Shot { ZeroShot, OneShot };
enum class Modality { TextOnly, VisionOnly, Both };

std::string to_string(Shot shot);
std::string to_string(Modality modality);
Shot shot_from_string(const std::string& name);
Modality modality_from_string(const std::string& name);

// Context pieces of a prompt: the model's tasking (which carries the required
// response format), the data-schema descriptions and the optional one-shot
// example snippet.
struct PromptContext {
  int version = 1;
  std::string task_description;
  std::string text_data_description;
  std::string video_data_description;
  Shot shot = Shot::ZeroShot;
  std::string one_shot_snippet;  // used when shot == OneShot
};

// The default context shipped with the repository (templates/prompt_context.txt),
// embedded at build time. `shot` defaults to ZeroShot.
PromptContext default_prompt_context();

// Loads a plain-text context template: an optional "version: N" first line,
// then sections opened by {TASK_DESCRIPTION}, {TEXT_DATA_DESCRIPTION},
// {VIDEO_DATA_DESCRIPTION} and optionally {IN_CONTEXT_EXAMPLE} on their own
// lines.
PromptContext load_prompt_context(const std::filesystem::path& path);

struct TextSegment {
  std::string content;
  bool operator==(const TextSegment&) const = default;
};

struct ImageSegment {
  std::string base64_png;
  int step_label = 0;
  bool operator==(const ImageSegment&) const = default;
};

using PromptSegment = std::variant<TextSegment, ImageSegment>;

// Assembled multi-modal prompt. Segments are ordered task description, data
// description, one-shot snippet (when present), then the trajectory data.
struct Prompt {
  std::vector<PromptSegment> segments;
  Modality modality = Modality::TextOnly;
  // Trajectory bookkeeping carried along for run artifacts and the stub provider.
  std::string env_name;
  std::int64_t seed = 0;
  int step_count = 0;
  long estimated_tokens = 0;
};

// Per-step table of (k, state, control) rows with a header naming every
// column; values carry 3 decimals.
std::string serialize_textual(const TrajectoryData& data);

// Builds the one-shot snippet from a hold-out pair: for each consecutive
// sub-task boundary, the serialized rows of the last step before and the first
// step after the transition, annotated with both descriptions and their step
// ranges. Throws when the hold-out decomposition has fewer than two sub-tasks.
std::string make_one_shot_snippet(const TrajectoryData& data, const SubTaskDecomposition& gt);

// Assembles the prompt for one trajectory under the chosen modality. Vision
// modalities require a frame for every step. A chars/4 text heuristic plus a
// flat 768 tokens per image feeds `estimated_tokens`.
Prompt build_prompt(const PromptContext& ctx, const TrajectoryData& data, Modality modality);

// Serialized form used for cassette hashing and run artifacts; covers every
// segment byte.
nlohmann::json prompt_to_json(const Prompt& prompt);
Prompt prompt_from_json(const nlohmann::json& j);

long estimate_text_tokens(std::string_view text);
inline constexpr long kTokensPerImage = 768;

}  // namespace taskdecomp
