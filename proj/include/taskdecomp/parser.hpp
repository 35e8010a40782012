#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "taskdecomp/types.hpp"

namespace taskdecomp {

// Classification of one raw FM response. Valid implies the extracted
// decomposition passes validate_decomposition.
struct ParseOutcome {
  enum class Status { Valid, Invalid, Unparseable };

  Status status = Status::Unparseable;
  SubTaskDecomposition decomposition;  // populated when status == Valid
  std::vector<Violation> violations;   // populated when status == Invalid
  std::string reason;                  // populated when status == Unparseable

  bool valid() const { return status == Status::Valid; }
};

std::string to_string(ParseOutcome::Status status);

// Total function over arbitrary text; never throws. Scans fenced code blocks
// first, then bare JSON arrays, and takes the first array whose elements all
// look like sub-tasks — either {"start", "end", "description"} objects or
// [start, end, "description"] triples. Fractional or negative step indices
// make the response Invalid rather than being repaired.
ParseOutcome extract_decomposition(std::string_view raw) noexcept;

struct ValidityTally {
  int valid = 0;
  int invalid = 0;
  int unparseable = 0;

  int total() const { return valid + invalid + unparseable; }
};

ValidityTally tally_validity(const std::vector<ParseOutcome>& outcomes);

nlohmann::json parse_outcome_to_json(const ParseOutcome& outcome);
ParseOutcome parse_outcome_from_json(const nlohmann::json& j);

}  // namespace taskdecomp
