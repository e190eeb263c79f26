#pragma once

// Encrypted operator keystore. Each actor's key seed is sealed with a key
// derived from that actor's passphrase (Argon2id + XSalsa20-Poly1305).
//
// File format (JSON):
//   {"version":1,"entries":{"<actor>":{"address","salt","opslimit",
//    "memlimit","nonce","ciphertext"}}}

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agritrace/crypto.hpp"

namespace agritrace::keystore {

struct KdfParams {
  std::uint64_t opslimit = 0;
  std::size_t memlimit = 0;

  static KdfParams interactive();
  // Minimum cost; for tests and throwaway chains only.
  static KdfParams fast();
};

class Keystore {
 public:
  // A missing file yields an empty keystore.
  static Keystore load(const std::filesystem::path& file);
  void save(const std::filesystem::path& file) const;

  void add(const std::string& actor_id, const KeyPair& key, std::string_view passphrase,
           KdfParams kdf = KdfParams::interactive());
  // Throws Error{unauthorized} on a wrong passphrase, Error{unknown_actor}
  // when the actor has no entry.
  KeyPair unlock(const std::string& actor_id, std::string_view passphrase) const;

  bool contains(const std::string& actor_id) const { return entries_.contains(actor_id); }
  std::optional<Address> address_of(const std::string& actor_id) const;
  std::vector<std::string> actors() const;

 private:
  struct Entry {
    Address address;
    Bytes salt;
    std::uint64_t opslimit = 0;
    std::size_t memlimit = 0;
    Bytes nonce;
    Bytes ciphertext;
  };
  std::map<std::string, Entry> entries_;
};

}  // namespace agritrace::keystore
