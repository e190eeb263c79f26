#include "agritrace/error.hpp"

namespace agritrace {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::unsupported_descriptor: return "unsupported_descriptor";
    case ErrorCode::validation_failed: return "validation_failed";
    case ErrorCode::invalid_key: return "invalid_key";
    case ErrorCode::bad_signature: return "bad_signature";
    case ErrorCode::stale_nonce: return "stale_nonce";
    case ErrorCode::bad_nonce: return "bad_nonce";
    case ErrorCode::unknown_operation: return "unknown_operation";
    case ErrorCode::unauthorized: return "unauthorized";
    case ErrorCode::unknown_actor: return "unknown_actor";
    case ErrorCode::unknown_kind: return "unknown_kind";
    case ErrorCode::unknown_entity: return "unknown_entity";
    case ErrorCode::unknown_event_kind: return "unknown_event_kind";
    case ErrorCode::wrong_kind_class: return "wrong_kind_class";
    case ErrorCode::not_applicable: return "not_applicable";
    case ErrorCode::invalidated: return "invalidated";
    case ErrorCode::type_mismatch: return "type_mismatch";
    case ErrorCode::unknown_parameter: return "unknown_parameter";
    case ErrorCode::missing_parameter: return "missing_parameter";
    case ErrorCode::duplicate_name: return "duplicate_name";
    case ErrorCode::illegal_type: return "illegal_type";
    case ErrorCode::malformed_payload: return "malformed_payload";
    case ErrorCode::yield_exceeded: return "yield_exceeded";
    case ErrorCode::locked: return "locked";
    case ErrorCode::sum_mismatch: return "sum_mismatch";
    case ErrorCode::zero_quantity: return "zero_quantity";
    case ErrorCode::kind_mismatch: return "kind_mismatch";
    case ErrorCode::unit_mismatch: return "unit_mismatch";
    case ErrorCode::empty_document: return "empty_document";
    case ErrorCode::role_missing: return "role_missing";
    case ErrorCode::dangling_target: return "dangling_target";
    case ErrorCode::not_required_approver: return "not_required_approver";
    case ErrorCode::already_consumed: return "already_consumed";
    case ErrorCode::insufficient_funds: return "insufficient_funds";
    case ErrorCode::invalid_amount: return "invalid_amount";
    case ErrorCode::unknown_mode: return "unknown_mode";
    case ErrorCode::unknown_format: return "unknown_format";
    case ErrorCode::unknown_target: return "unknown_target";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::integrity_error: return "integrity_error";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::invalid_argument: return "invalid_argument";
  }
  return "unknown";
}

}  // namespace agritrace
