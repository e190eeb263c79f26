#pragma once

// Hashing, addresses and signatures shared by the ledger, the contracts and
// the document store. One 32-byte hash function (SHA-256) is used everywhere
// so that notarization digests and content ids are directly comparable.

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace agritrace {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

Bytes to_bytes(std::string_view text);
ByteView as_bytes(std::string_view text);

std::string to_hex(ByteView bytes);
// Throws Error{invalid_argument} on odd length or non-hex characters.
Bytes from_hex(std::string_view hex);

struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  std::string hex() const { return to_hex(bytes); }
  static Digest from_hex(std::string_view hex);
  bool is_zero() const;

  auto operator<=>(const Digest&) const = default;
};

Digest sha256(ByteView data);
inline Digest sha256(std::string_view text) { return sha256(as_bytes(text)); }

// Incremental hashing for block and transaction digests.
class Hasher {
 public:
  Hasher();
  Hasher& update(ByteView data);
  Hasher& update(std::string_view text) { return update(as_bytes(text)); }
  Hasher& update_u64(std::uint64_t value);
  Digest finish();

 private:
  alignas(64) std::array<std::uint8_t, 128> state_{};
};

// Trailing 20 bytes of sha256(public key).
struct Address {
  std::array<std::uint8_t, 20> bytes{};

  std::string hex() const { return "0x" + to_hex(bytes); }
  // Accepts the value with or without a 0x prefix.
  static Address from_hex(std::string_view hex);
  bool is_zero() const;

  auto operator<=>(const Address&) const = default;
};

using PublicKey = std::array<std::uint8_t, 32>;
using Signature = std::array<std::uint8_t, 64>;

Address address_of(const PublicKey& public_key);

// Ed25519 key pair. Keys are derived from a 32-byte seed so test fixtures and
// keystores only need to hold the seed.
class KeyPair {
 public:
  static KeyPair from_seed(ByteView seed32);
  // Test-mode derivation: seed = sha256(label).
  static KeyPair from_label(std::string_view label);
  static KeyPair generate();

  const PublicKey& public_key() const { return public_key_; }
  Address address() const { return address_of(public_key_); }
  const std::array<std::uint8_t, 32>& seed() const { return seed_; }

  Signature sign(ByteView message) const;

 private:
  KeyPair() = default;

  std::array<std::uint8_t, 32> seed_{};
  PublicKey public_key_{};
  std::array<std::uint8_t, 64> secret_key_{};
};

bool verify_signature(const PublicKey& public_key, ByteView message,
                      const Signature& signature);

}  // namespace agritrace
