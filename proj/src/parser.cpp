#include "taskdecomp/parser.hpp"

#include <cmath>
#include <optional>

#include <json.hpp>

#include "taskdecomp/util.hpp"

namespace taskdecomp {

using nlohmann::json;

namespace {

// Locates the extent of a balanced JSON array starting at `begin`, honoring
// strings and escapes. Returns one past the closing bracket, or npos.
std::size_t find_array_end(std::string_view text, std::size_t begin) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = begin; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\')
        ++i;
      else if (c == '"')
        in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '[' || c == '{') ++depth;
    else if (c == ']' || c == '}') {
      --depth;
      if (depth == 0) return i + 1;
      if (depth < 0) return std::string_view::npos;
    }
  }
  return std::string_view::npos;
}

// All parseable JSON arrays inside text, fenced blocks first, both groups in
// document order.
std::vector<json> candidate_arrays(std::string_view text) {
  std::vector<json> fenced, bare;

  std::size_t pos = 0;
  while ((pos = text.find("```", pos)) != std::string_view::npos) {
    std::size_t body_begin = pos + 3;
    std::size_t body_end = text.find("```", body_begin);
    if (body_end == std::string_view::npos) break;
    std::string_view body = text.substr(body_begin, body_end - body_begin);
    // Drop an optional language tag on the opening fence line.
    if (std::size_t nl = body.find('\n'); nl != std::string_view::npos) {
      std::string_view first_line = body.substr(0, nl);
      if (first_line.find('[') == std::string_view::npos) body = body.substr(nl + 1);
    }
    json parsed = json::parse(trim(body), nullptr, false);
    if (!parsed.is_discarded() && parsed.is_array()) fenced.push_back(std::move(parsed));
    pos = body_end + 3;
  }

  pos = 0;
  while ((pos = text.find('[', pos)) != std::string_view::npos) {
    std::size_t end = find_array_end(text, pos);
    if (end == std::string_view::npos) {
      ++pos;
      continue;
    }
    json parsed = json::parse(text.substr(pos, end - pos), nullptr, false);
    if (!parsed.is_discarded() && parsed.is_array()) {
      bare.push_back(std::move(parsed));
      pos = end;
    } else {
      ++pos;
    }
  }

  std::vector<json> all = std::move(fenced);
  for (json& j : bare) all.push_back(std::move(j));
  return all;
}

bool looks_like_subtask(const json& item) {
  if (item.is_object())
    return item.contains("start") && item["start"].is_number() && item.contains("end") &&
           item["end"].is_number() && item.contains("description") &&
           item["description"].is_string();
  if (item.is_array())
    return item.size() == 3 && item[0].is_number() && item[1].is_number() && item[2].is_string();
  return false;
}

bool array_type_checks(const json& array) {
  if (array.empty()) return false;  // no payload; keep scanning
  for (const json& item : array)
    if (!looks_like_subtask(item)) return false;
  return true;
}

std::optional<int> coerce_step(const json& number) {
  const double value = number.get<double>();
  if (!std::isfinite(value) || value != std::floor(value)) return std::nullopt;
  if (value < -2147483648.0 || value > 2147483647.0) return std::nullopt;
  return static_cast<int>(value);
}

ParseOutcome convert_array(const json& array) {
  ParseOutcome outcome;
  SubTaskDecomposition d;
  d.source = DecompositionSource::FmPrediction;
  for (std::size_t i = 0; i < array.size(); ++i) {
    const json& item = array[i];
    const json& start = item.is_object() ? item["start"] : item[0];
    const json& end = item.is_object() ? item["end"] : item[1];
    const json& description = item.is_object() ? item["description"] : item[2];
    auto start_step = coerce_step(start);
    auto end_step = coerce_step(end);
    if (!start_step || !end_step) {
      outcome.violations.push_back({ViolationKind::NonIntegerStep, static_cast<int>(i)});
      continue;
    }
    d.subtasks.push_back({*start_step, *end_step, description.get<std::string>()});
  }
  if (!outcome.violations.empty()) {
    outcome.status = ParseOutcome::Status::Invalid;
    return outcome;
  }
  ValidationResult check = validate_decomposition(d);
  if (check.ok()) {
    outcome.status = ParseOutcome::Status::Valid;
    outcome.decomposition = std::move(d);
  } else {
    outcome.status = ParseOutcome::Status::Invalid;
    outcome.violations = std::move(check.violations);
  }
  return outcome;
}

}  // namespace

std::string to_string(ParseOutcome::Status status) {
  switch (status) {
    case ParseOutcome::Status::Valid: return "valid";
    case ParseOutcome::Status::Invalid: return "invalid";
    case ParseOutcome::Status::Unparseable: return "unparseable";
  }
  return "unknown";
}

ParseOutcome extract_decomposition(std::string_view raw) noexcept {
  try {
    for (const json& array : candidate_arrays(raw)) {
      if (!array_type_checks(array)) continue;
      return convert_array(array);
    }
  } catch (...) {
    // fall through to Unparseable; extraction is a total function
  }
  ParseOutcome outcome;
  outcome.status = ParseOutcome::Status::Unparseable;
  outcome.reason = "NoDecompositionFound";
  return outcome;
}

nlohmann::json parse_outcome_to_json(const ParseOutcome& outcome) {
  json j{{"status", to_string(outcome.status)}};
  if (outcome.status == ParseOutcome::Status::Valid) {
    json subtasks = json::array();
    for (const SubTask& s : outcome.decomposition.subtasks)
      subtasks.push_back(json{{"start", s.start}, {"end", s.end}, {"description", s.description}});
    j["decomposition"] = subtasks;
  } else if (outcome.status == ParseOutcome::Status::Invalid) {
    json violations = json::array();
    for (const Violation& v : outcome.violations)
      violations.push_back(json{{"kind", to_string(v.kind)}, {"index", v.index}});
    j["violations"] = violations;
  } else {
    j["reason"] = outcome.reason;
  }
  return j;
}

ParseOutcome parse_outcome_from_json(const nlohmann::json& j) {
  ParseOutcome outcome;
  const std::string status = j.at("status").get<std::string>();
  if (status == "valid") {
    outcome.status = ParseOutcome::Status::Valid;
    outcome.decomposition.source = DecompositionSource::FmPrediction;
    for (const json& item : j.at("decomposition"))
      outcome.decomposition.subtasks.push_back({item.at("start").get<int>(),
                                                item.at("end").get<int>(),
                                                item.at("description").get<std::string>()});
  } else if (status == "invalid") {
    outcome.status = ParseOutcome::Status::Invalid;
    // Violation kinds round-trip by name.
    for (const json& item : j.at("violations")) {
      const std::string kind = item.at("kind").get<std::string>();
      Violation v{ViolationKind::EmptyDecomposition, item.at("index").get<int>()};
      if (kind == "StartAfterEnd") v.kind = ViolationKind::StartAfterEnd;
      else if (kind == "OutOfOrder") v.kind = ViolationKind::OutOfOrder;
      else if (kind == "NegativeStep") v.kind = ViolationKind::NegativeStep;
      else if (kind == "EmptyDescription") v.kind = ViolationKind::EmptyDescription;
      else if (kind == "NonIntegerStep") v.kind = ViolationKind::NonIntegerStep;
      outcome.violations.push_back(v);
    }
  } else {
    outcome.status = ParseOutcome::Status::Unparseable;
    outcome.reason = j.value("reason", "");
  }
  return outcome;
}

ValidityTally tally_validity(const std::vector<ParseOutcome>& outcomes) {
  ValidityTally tally;
  for (const ParseOutcome& outcome : outcomes) {
    switch (outcome.status) {
      case ParseOutcome::Status::Valid: ++tally.valid; break;
      case ParseOutcome::Status::Invalid: ++tally.invalid; break;
      case ParseOutcome::Status::Unparseable: ++tally.unparseable; break;
    }
  }
  return tally;
}

}  // namespace taskdecomp
