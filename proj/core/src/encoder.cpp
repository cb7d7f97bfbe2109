#include "skelsql/encoder.hpp"

#include "skelsql/error.hpp"

namespace skelsql {

std::string_view to_string(PosTag tag) noexcept {
  switch (tag) {
    case PosTag::kNoun: return "noun";
    case PosTag::kNumber: return "number";
    case PosTag::kOther: return "other";
  }
  return "other";
}

PosTag parse_pos_tag(std::string_view tag) {
  if (tag == "noun") return PosTag::kNoun;
  if (tag == "number") return PosTag::kNumber;
  if (tag == "other") return PosTag::kOther;
  throw Error(ErrorCode::kPreconditionViolation, "unknown POS tag '" + std::string(tag) + "'");
}

void validate_request(const EncodeRequest& request) {
  if (request.question_tokens.empty()) throw Error(ErrorCode::kPreconditionViolation, "empty question");
  if (request.schema_tokens.empty()) throw Error(ErrorCode::kPreconditionViolation, "empty schema");
  if (request.masked_question_index && *request.masked_question_index >= request.question_tokens.size()) {
    throw Error(ErrorCode::kPreconditionViolation,
                "masked index " + std::to_string(*request.masked_question_index) + " >= question length " +
                    std::to_string(request.question_tokens.size()));
  }
}

}  // namespace skelsql
