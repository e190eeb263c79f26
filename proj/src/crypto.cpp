#include "agritrace/crypto.hpp"

#include <sodium.h>

#include <cstring>
#include <new>

#include "agritrace/error.hpp"

namespace agritrace {

namespace {

struct SodiumInit {
  SodiumInit() {
    if (sodium_init() < 0) throw std::runtime_error("libsodium failed to initialize");
  }
};

void ensure_sodium() { static const SodiumInit init; }

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

static_assert(sizeof(crypto_hash_sha256_state) <= 128);

crypto_hash_sha256_state* sha_state(std::array<std::uint8_t, 128>& storage) {
  return std::launder(reinterpret_cast<crypto_hash_sha256_state*>(storage.data()));
}

}  // namespace

Bytes to_bytes(std::string_view text) { return Bytes(text.begin(), text.end()); }

ByteView as_bytes(std::string_view text) {
  return {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()};
}

std::string to_hex(ByteView bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0x0f]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw Error(ErrorCode::invalid_argument, "odd-length hex string");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = hex_value(hex[2 * i]);
    int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw Error(ErrorCode::invalid_argument, "invalid hex character");
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

Digest Digest::from_hex(std::string_view hex) {
  Bytes raw = agritrace::from_hex(hex);
  if (raw.size() != 32) throw Error(ErrorCode::invalid_argument, "digest must be 32 bytes");
  Digest d;
  std::memcpy(d.bytes.data(), raw.data(), 32);
  return d;
}

bool Digest::is_zero() const {
  for (auto b : bytes)
    if (b != 0) return false;
  return true;
}

Digest sha256(ByteView data) {
  ensure_sodium();
  Digest d;
  crypto_hash_sha256(d.bytes.data(), data.data(), data.size());
  return d;
}

Hasher::Hasher() {
  ensure_sodium();
  new (state_.data()) crypto_hash_sha256_state;
  crypto_hash_sha256_init(sha_state(state_));
}

Hasher& Hasher::update(ByteView data) {
  crypto_hash_sha256_update(sha_state(state_), data.data(), data.size());
  return *this;
}

Hasher& Hasher::update_u64(std::uint64_t value) {
  std::array<std::uint8_t, 8> be{};
  for (int i = 7; i >= 0; --i) {
    be[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(value & 0xff);
    value >>= 8;
  }
  return update(be);
}

Digest Hasher::finish() {
  Digest d;
  crypto_hash_sha256_final(sha_state(state_), d.bytes.data());
  return d;
}

Address Address::from_hex(std::string_view hex) {
  if (hex.starts_with("0x") || hex.starts_with("0X")) hex.remove_prefix(2);
  Bytes raw = agritrace::from_hex(hex);
  if (raw.size() != 20) throw Error(ErrorCode::invalid_argument, "address must be 20 bytes");
  Address a;
  std::memcpy(a.bytes.data(), raw.data(), 20);
  return a;
}

bool Address::is_zero() const {
  for (auto b : bytes)
    if (b != 0) return false;
  return true;
}

Address address_of(const PublicKey& public_key) {
  Digest d = sha256(public_key);
  Address a;
  std::memcpy(a.bytes.data(), d.bytes.data() + 12, 20);
  return a;
}

KeyPair KeyPair::from_seed(ByteView seed32) {
  ensure_sodium();
  if (seed32.size() != crypto_sign_SEEDBYTES)
    throw Error(ErrorCode::invalid_key, "key seed must be 32 bytes");
  KeyPair kp;
  std::memcpy(kp.seed_.data(), seed32.data(), 32);
  crypto_sign_seed_keypair(kp.public_key_.data(), kp.secret_key_.data(), kp.seed_.data());
  return kp;
}

KeyPair KeyPair::from_label(std::string_view label) {
  if (label.empty()) throw Error(ErrorCode::invalid_key, "empty key seed label");
  return from_seed(sha256(label).bytes);
}

KeyPair KeyPair::generate() {
  ensure_sodium();
  std::array<std::uint8_t, 32> seed{};
  randombytes_buf(seed.data(), seed.size());
  return from_seed(seed);
}

Signature KeyPair::sign(ByteView message) const {
  Signature sig{};
  crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), secret_key_.data());
  return sig;
}

bool verify_signature(const PublicKey& public_key, ByteView message, const Signature& signature) {
  ensure_sodium();
  return crypto_sign_verify_detached(signature.data(), message.data(), message.size(),
                                     public_key.data()) == 0;
}

}  // namespace agritrace
