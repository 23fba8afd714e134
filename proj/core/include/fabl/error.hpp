#pragma once

#include <stdexcept>
#include <string>

namespace fabl {

/// Stable identifiers for every failure the library reports. Callers that
/// need to branch on a failure should match on the code, not the message.
enum class ErrorCode {
    // skeleton / body model
    joint_count_mismatch,
    non_finite_coordinate,
    too_short,
    model_mismatch,
    missing_mapping,
    index_out_of_range,
    invalid_body_model,
    // features
    empty_range,
    shape_mismatch,
    layout_mismatch,
    // solver
    empty_training_set,
    invalid_training_set,
    singular_system,
    non_finite_objective,
    // evaluation
    missing_subject_ids,
    single_subject,
    empty_test_set,
    out_of_range_label,
    // io
    parse_error,
    header_mismatch,
    frame_size_error,
    io_error,
    // generic
    invalid_argument,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code),
          message_(message) {}

    ErrorCode code() const { return code_; }

    /// The message without the code-name prefix, for rewrapping with context.
    const std::string& message() const { return message_; }

  private:
    ErrorCode code_;
    std::string message_;
};

} // namespace fabl
