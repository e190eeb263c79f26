#include "agritrace/keystore.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>
#include <sodium.h>

#include "agritrace/error.hpp"

namespace agritrace::keystore {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void ensure_sodium() {
  if (sodium_init() < 0) throw Error(ErrorCode::io_error, "libsodium failed to initialize");
}

std::array<std::uint8_t, crypto_secretbox_KEYBYTES> derive(std::string_view passphrase, const Bytes& salt,
                                                           std::uint64_t ops, std::size_t mem) {
  ensure_sodium();
  std::array<std::uint8_t, crypto_secretbox_KEYBYTES> key{};
  if (crypto_pwhash(key.data(), key.size(), passphrase.data(), passphrase.size(), salt.data(), ops, mem,
                    crypto_pwhash_ALG_ARGON2ID13) != 0)
    throw Error(ErrorCode::io_error, "key derivation ran out of memory");
  return key;
}

}  // namespace

KdfParams KdfParams::interactive() {
  return {crypto_pwhash_OPSLIMIT_INTERACTIVE, crypto_pwhash_MEMLIMIT_INTERACTIVE};
}

KdfParams KdfParams::fast() { return {crypto_pwhash_OPSLIMIT_MIN, crypto_pwhash_MEMLIMIT_MIN}; }

Keystore Keystore::load(const fs::path& file) {
  Keystore ks;
  if (!fs::exists(file)) return ks;
  std::ifstream in(file);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    json j = json::parse(buf.str());
    if (j.at("version").get<int>() != 1) throw Error(ErrorCode::parse_error, "unsupported keystore version");
    for (auto& [actor, e] : j.at("entries").items()) {
      Entry entry;
      entry.address = Address::from_hex(e.at("address").get<std::string>());
      entry.salt = from_hex(e.at("salt").get<std::string>());
      entry.opslimit = e.at("opslimit").get<std::uint64_t>();
      entry.memlimit = e.at("memlimit").get<std::size_t>();
      entry.nonce = from_hex(e.at("nonce").get<std::string>());
      entry.ciphertext = from_hex(e.at("ciphertext").get<std::string>());
      if (entry.salt.size() != crypto_pwhash_SALTBYTES || entry.nonce.size() != crypto_secretbox_NONCEBYTES)
        throw Error(ErrorCode::parse_error, "keystore entry for " + actor + " is malformed");
      ks.entries_.emplace(actor, std::move(entry));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, "keystore " + file.string() + ": " + e.what());
  }
  return ks;
}

void Keystore::save(const fs::path& file) const {
  json entries = json::object();
  for (const auto& [actor, e] : entries_)
    entries[actor] = json{{"address", e.address.hex()},   {"salt", to_hex(e.salt)},
                          {"opslimit", e.opslimit},        {"memlimit", e.memlimit},
                          {"nonce", to_hex(e.nonce)},      {"ciphertext", to_hex(e.ciphertext)}};
  json doc{{"version", 1}, {"entries", entries}};
  fs::path tmp = file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << doc.dump(2) << "\n";
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + tmp.string());
  }
  fs::rename(tmp, file);
}

void Keystore::add(const std::string& actor_id, const KeyPair& key, std::string_view passphrase, KdfParams kdf) {
  if (actor_id.empty()) throw Error(ErrorCode::invalid_argument, "empty actor id");
  ensure_sodium();
  Entry e;
  e.address = key.address();
  e.salt.resize(crypto_pwhash_SALTBYTES);
  randombytes_buf(e.salt.data(), e.salt.size());
  e.nonce.resize(crypto_secretbox_NONCEBYTES);
  randombytes_buf(e.nonce.data(), e.nonce.size());
  e.opslimit = kdf.opslimit;
  e.memlimit = kdf.memlimit;
  auto k = derive(passphrase, e.salt, e.opslimit, e.memlimit);
  const auto& seed = key.seed();
  e.ciphertext.resize(seed.size() + crypto_secretbox_MACBYTES);
  crypto_secretbox_easy(e.ciphertext.data(), seed.data(), seed.size(), e.nonce.data(), k.data());
  sodium_memzero(k.data(), k.size());
  entries_[actor_id] = std::move(e);
}

KeyPair Keystore::unlock(const std::string& actor_id, std::string_view passphrase) const {
  auto it = entries_.find(actor_id);
  if (it == entries_.end()) throw Error(ErrorCode::unknown_actor, "no key for actor \"" + actor_id + "\"");
  const Entry& e = it->second;
  if (e.ciphertext.size() != 32 + crypto_secretbox_MACBYTES)
    throw Error(ErrorCode::parse_error, "keystore entry for " + actor_id + " is malformed");
  auto k = derive(passphrase, e.salt, e.opslimit, e.memlimit);
  std::array<std::uint8_t, 32> seed{};
  int rc = crypto_secretbox_open_easy(seed.data(), e.ciphertext.data(), e.ciphertext.size(), e.nonce.data(), k.data());
  sodium_memzero(k.data(), k.size());
  if (rc != 0) throw Error(ErrorCode::unauthorized, "wrong passphrase for actor \"" + actor_id + "\"");
  KeyPair key = KeyPair::from_seed(seed);
  sodium_memzero(seed.data(), seed.size());
  if (key.address() != e.address) throw Error(ErrorCode::integrity_error, "keystore address mismatch");
  return key;
}

std::optional<Address> Keystore::address_of(const std::string& actor_id) const {
  auto it = entries_.find(actor_id);
  if (it == entries_.end()) return std::nullopt;
  return it->second.address;
}

std::vector<std::string> Keystore::actors() const {
  std::vector<std::string> out;
  for (const auto& [a, e] : entries_) out.push_back(a);
  return out;
}

}  // namespace agritrace::keystore
