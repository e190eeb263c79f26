#pragma once

// Typed event parameters. A record's parameters travel as one byte string:
//
//   name 0x1F type 0x1F value [0x1E name 0x1F type 0x1F value ...]
//
// Backslash escapes 0x1E, 0x1F and itself inside any field. Encoding is
// canonical: the same triples always produce the same bytes.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "agritrace/config.hpp"
#include "agritrace/crypto.hpp"

namespace agritrace::params {

inline constexpr char kRecordSeparator = '\x1E';
inline constexpr char kFieldSeparator = '\x1F';

struct Triple {
  std::string name;
  config::ParamType type = config::ParamType::string;
  std::string value;

  bool operator==(const Triple&) const = default;
};

// Throws Error{duplicate_name} when two triples share a name.
std::string encode_parameters(const std::vector<Triple>& triples);

// Throws Error{malformed_payload}, Error{illegal_type} or Error{duplicate_name}.
std::vector<Triple> decode_parameters(std::string_view payload);

// hashlink values are "uri" 0x1F "hexdigest".
std::string make_hashlink(std::string_view uri, const Digest& digest);
std::optional<std::pair<std::string, Digest>> split_hashlink(std::string_view value);

struct NamedValue {
  std::string name;
  std::string value;
};

// Checks user-supplied values against an event kind's parameter specs and
// returns the canonical triples in spec order. Every declared parameter is
// required. Throws Error{unknown_parameter, duplicate_name, missing_parameter,
// type_mismatch}.
std::vector<Triple> bind_parameters(const std::vector<config::ParamSpec>& specs,
                                    const std::vector<NamedValue>& values);

// Canonical text for one value, or nullopt when the value is not acceptable
// for the spec.
std::optional<std::string> canonical_value(const config::ParamSpec& spec, std::string_view raw);

}  // namespace agritrace::params
