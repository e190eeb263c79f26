#include "agritrace/params.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <set>

namespace agritrace::params {

using config::ParamSpec;
using config::ParamType;

namespace {

void append_escaped(std::string& out, std::string_view field) {
  for (char c : field) {
    if (c == '\\' || c == kRecordSeparator || c == kFieldSeparator) out.push_back('\\');
    out.push_back(c);
  }
}

bool is_hex_digest(std::string_view s) {
  return s.size() == 64 && std::all_of(s.begin(), s.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
         });
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

std::optional<std::string> canonical_int(std::string_view raw) {
  std::string_view digits = raw;
  bool negative = false;
  if (!digits.empty() && (digits[0] == '+' || digits[0] == '-')) {
    negative = digits[0] == '-';
    digits.remove_prefix(1);
  }
  if (digits.empty()) return std::nullopt;
  for (char c : digits)
    if (c < '0' || c > '9') return std::nullopt;
  std::string text = negative ? "-" + std::string(digits) : std::string(digits);
  long long v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) return std::nullopt;
  return std::to_string(v);
}

std::optional<std::string> canonical_float(std::string_view raw) {
  // Plain decimal or scientific notation; no hex floats, inf or nan.
  std::size_t i = 0;
  if (i < raw.size() && (raw[i] == '+' || raw[i] == '-')) ++i;
  std::size_t int_digits = 0, frac_digits = 0;
  while (i < raw.size() && raw[i] >= '0' && raw[i] <= '9') ++i, ++int_digits;
  if (i < raw.size() && raw[i] == '.') {
    ++i;
    while (i < raw.size() && raw[i] >= '0' && raw[i] <= '9') ++i, ++frac_digits;
  }
  if (int_digits + frac_digits == 0) return std::nullopt;
  if (i < raw.size() && (raw[i] == 'e' || raw[i] == 'E')) {
    ++i;
    if (i < raw.size() && (raw[i] == '+' || raw[i] == '-')) ++i;
    std::size_t exp_digits = 0;
    while (i < raw.size() && raw[i] >= '0' && raw[i] <= '9') ++i, ++exp_digits;
    if (exp_digits == 0) return std::nullopt;
  }
  if (i != raw.size()) return std::nullopt;
  std::string text(raw[0] == '+' ? raw.substr(1) : raw);
  char* end = nullptr;
  double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || !std::isfinite(v)) return std::nullopt;
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

bool is_uri(std::string_view s) {
  auto colon = s.find(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == s.size()) return false;
  auto is_alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); };
  if (!is_alpha(s[0])) return false;
  for (std::size_t i = 1; i < colon; ++i) {
    char c = s[i];
    if (!(is_alpha(c) || (c >= '0' && c <= '9') || c == '+' || c == '-' || c == '.')) return false;
  }
  for (char c : s)
    if (static_cast<unsigned char>(c) <= 0x20 || c == 0x7f) return false;
  return true;
}

}  // namespace

std::string encode_parameters(const std::vector<Triple>& triples) {
  std::set<std::string_view> names;
  std::string out;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const Triple& t = triples[i];
    if (!names.insert(t.name).second)
      throw Error(ErrorCode::duplicate_name, "duplicate parameter name \"" + t.name + "\"");
    if (i > 0) out.push_back(kRecordSeparator);
    append_escaped(out, t.name);
    out.push_back(kFieldSeparator);
    out += config::to_string(t.type);
    out.push_back(kFieldSeparator);
    append_escaped(out, t.value);
  }
  return out;
}

std::vector<Triple> decode_parameters(std::string_view payload) {
  std::vector<Triple> out;
  if (payload.empty()) return out;

  std::vector<std::string> fields(1);
  auto finish_record = [&] {
    if (fields.size() != 3)
      throw Error(ErrorCode::malformed_payload,
                  "parameter record " + std::to_string(out.size()) + " has " +
                      std::to_string(fields.size()) + " fields, expected 3");
    auto type = config::parse_param_type(fields[1]);
    if (!type) throw Error(ErrorCode::illegal_type, "illegal parameter type tag \"" + fields[1] + "\"");
    for (const auto& t : out)
      if (t.name == fields[0])
        throw Error(ErrorCode::duplicate_name, "duplicate parameter name \"" + fields[0] + "\"");
    out.push_back(Triple{std::move(fields[0]), *type, std::move(fields[2])});
    fields.assign(1, std::string());
  };

  for (std::size_t i = 0; i < payload.size(); ++i) {
    char c = payload[i];
    if (c == '\\') {
      if (i + 1 == payload.size())
        throw Error(ErrorCode::malformed_payload, "dangling escape at end of payload");
      char next = payload[++i];
      if (next != '\\' && next != kRecordSeparator && next != kFieldSeparator)
        throw Error(ErrorCode::malformed_payload, "invalid escape sequence");
      fields.back().push_back(next);
    } else if (c == kFieldSeparator) {
      fields.emplace_back();
    } else if (c == kRecordSeparator) {
      finish_record();
    } else {
      fields.back().push_back(c);
    }
  }
  finish_record();
  return out;
}

std::string make_hashlink(std::string_view uri, const Digest& digest) {
  std::string out(uri);
  out.push_back(kFieldSeparator);
  out += digest.hex();
  return out;
}

std::optional<std::pair<std::string, Digest>> split_hashlink(std::string_view value) {
  auto sep = value.rfind(kFieldSeparator);
  if (sep == std::string_view::npos) return std::nullopt;
  std::string_view uri = value.substr(0, sep);
  std::string_view hex = value.substr(sep + 1);
  if (!is_uri(uri) || !is_hex_digest(hex)) return std::nullopt;
  return std::pair{std::string(uri), Digest::from_hex(hex)};
}

std::optional<std::string> canonical_value(const ParamSpec& spec, std::string_view raw) {
  switch (spec.type) {
    case ParamType::int_:
      return canonical_int(raw);
    case ParamType::float_:
      return canonical_float(raw);
    case ParamType::string:
      if (raw.find('\n') != std::string_view::npos || raw.find('\r') != std::string_view::npos)
        return std::nullopt;
      return std::string(raw);
    case ParamType::text:
      return std::string(raw);
    case ParamType::enum_:
      if (std::find(spec.enum_options.begin(), spec.enum_options.end(), raw) ==
          spec.enum_options.end())
        return std::nullopt;
      return std::string(raw);
    case ParamType::link:
      if (!is_uri(raw)) return std::nullopt;
      return std::string(raw);
    case ParamType::hashlink: {
      auto parts = split_hashlink(raw);
      if (!parts) return std::nullopt;
      return make_hashlink(parts->first, parts->second);
    }
    case ParamType::upload:
    case ParamType::hashupload:
      if (!is_hex_digest(raw)) return std::nullopt;
      return lower(raw);
  }
  return std::nullopt;
}

std::vector<Triple> bind_parameters(const std::vector<ParamSpec>& specs,
                                    const std::vector<NamedValue>& values) {
  std::set<std::string_view> seen;
  for (const auto& v : values) {
    if (!seen.insert(v.name).second)
      throw Error(ErrorCode::duplicate_name, "parameter \"" + v.name + "\" given twice");
    bool known = std::any_of(specs.begin(), specs.end(),
                             [&](const ParamSpec& s) { return s.name == v.name; });
    if (!known) throw Error(ErrorCode::unknown_parameter, "unknown parameter \"" + v.name + "\"");
  }
  std::vector<Triple> out;
  for (const auto& spec : specs) {
    auto it = std::find_if(values.begin(), values.end(),
                           [&](const NamedValue& v) { return v.name == spec.name; });
    if (it == values.end())
      throw Error(ErrorCode::missing_parameter, "missing parameter \"" + spec.name + "\"");
    auto canonical = canonical_value(spec, it->value);
    if (!canonical)
      throw Error(ErrorCode::type_mismatch, "parameter \"" + spec.name + "\" is not a valid " +
                                                std::string(config::to_string(spec.type)));
    out.push_back(Triple{spec.name, spec.type, std::move(*canonical)});
  }
  return out;
}

}  // namespace agritrace::params
