#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace agritrace {

// Stable machine-readable codes. The string form is part of the HTTP API and
// the CLI --json output, so entries are only ever appended.
enum class ErrorCode {
  parse_error,
  unsupported_descriptor,
  validation_failed,
  invalid_key,
  bad_signature,
  stale_nonce,
  bad_nonce,
  unknown_operation,
  unauthorized,
  unknown_actor,
  unknown_kind,
  unknown_entity,
  unknown_event_kind,
  wrong_kind_class,
  not_applicable,
  invalidated,
  type_mismatch,
  unknown_parameter,
  missing_parameter,
  duplicate_name,
  illegal_type,
  malformed_payload,
  yield_exceeded,
  locked,
  sum_mismatch,
  zero_quantity,
  kind_mismatch,
  unit_mismatch,
  empty_document,
  role_missing,
  dangling_target,
  not_required_approver,
  already_consumed,
  insufficient_funds,
  invalid_amount,
  unknown_mode,
  unknown_format,
  unknown_target,
  not_found,
  integrity_error,
  io_error,
  invalid_argument,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace agritrace
