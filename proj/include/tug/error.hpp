#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tug {

enum class ErrorCode {
  parse_error,
  duplicate_word,
  insufficient_words,
  missing_embedding,
  zero_vector,
  dimension_mismatch,
  quota_violation,
  wrong_state,
  wrong_quota,
  word_not_in_matrix,
  duplicate_submission,
  word_was_matched,
  word_not_selected,
  wrong_round,
  unknown_session,
  not_in_session,
  already_in_session,
  already_queued,
  tag_occupied_by_self,
  invalid_tag,
  out_of_range,
  schema_violation,
  io_error,
  transport_error,
  unparseable_reply,
  insufficient_rounds,
  wrong_round_count,
  empty_dataset,
  invalid_split,
  non_finite_loss,
  length_mismatch,
  malformed_keying,
  bad_message,
  unknown_player,
  queue_timeout,
  invalid_argument,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::duplicate_word: return "duplicate_word";
    case ErrorCode::insufficient_words: return "insufficient_words";
    case ErrorCode::missing_embedding: return "missing_embedding";
    case ErrorCode::zero_vector: return "zero_vector";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::quota_violation: return "quota_violation";
    case ErrorCode::wrong_state: return "wrong_state";
    case ErrorCode::wrong_quota: return "wrong_quota";
    case ErrorCode::word_not_in_matrix: return "word_not_in_matrix";
    case ErrorCode::duplicate_submission: return "duplicate_submission";
    case ErrorCode::word_was_matched: return "word_was_matched";
    case ErrorCode::word_not_selected: return "word_not_selected";
    case ErrorCode::wrong_round: return "wrong_round";
    case ErrorCode::unknown_session: return "unknown_session";
    case ErrorCode::not_in_session: return "not_in_session";
    case ErrorCode::already_in_session: return "already_in_session";
    case ErrorCode::already_queued: return "already_queued";
    case ErrorCode::tag_occupied_by_self: return "tag_occupied_by_self";
    case ErrorCode::invalid_tag: return "invalid_tag";
    case ErrorCode::out_of_range: return "out_of_range";
    case ErrorCode::schema_violation: return "schema_violation";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::transport_error: return "transport_error";
    case ErrorCode::unparseable_reply: return "unparseable_reply";
    case ErrorCode::insufficient_rounds: return "insufficient_rounds";
    case ErrorCode::wrong_round_count: return "wrong_round_count";
    case ErrorCode::empty_dataset: return "empty_dataset";
    case ErrorCode::invalid_split: return "invalid_split";
    case ErrorCode::non_finite_loss: return "non_finite_loss";
    case ErrorCode::length_mismatch: return "length_mismatch";
    case ErrorCode::malformed_keying: return "malformed_keying";
    case ErrorCode::bad_message: return "bad_message";
    case ErrorCode::unknown_player: return "unknown_player";
    case ErrorCode::queue_timeout: return "queue_timeout";
    case ErrorCode::invalid_argument: return "invalid_argument";
  }
  return "unknown";
}

/// Every failure raised by the library carries a stable code; the server
/// forwards it verbatim in `error{code, message}` frames.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tug
