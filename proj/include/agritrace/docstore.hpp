#pragma once

// Content-addressed document store on the local filesystem.
//
// Layout:
//   <root>/objects/<64-hex id>   raw content
//   <root>/index.jsonl           one JSON line per stored object
//
// Objects are written to a temporary file and renamed into place, so a
// reader never sees a partial object. The store is append-only.

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "agritrace/crypto.hpp"

namespace agritrace::docstore {

struct StoredObject {
  Digest content_id;
  std::uint64_t size = 0;
  std::string media_type;
  std::int64_t created_ms = 0;
};

class DocStore {
 public:
  // Creates the directory layout if missing.
  explicit DocStore(std::filesystem::path root);

  // Throws Error{empty_document} for empty content. Idempotent.
  Digest put(ByteView content, std::string media_type = {});
  Digest put_file(const std::filesystem::path& file, std::string media_type = {});

  // Throws Error{not_found} for an unknown id and Error{integrity_error} when
  // the stored bytes no longer hash to the id.
  Bytes get(const Digest& content_id) const;

  bool contains(const Digest& content_id) const;
  std::optional<StoredObject> stat(const Digest& content_id) const;
  std::vector<StoredObject> list() const;

  std::filesystem::path object_path(const Digest& content_id) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  mutable std::mutex index_mutex_;
};

// Guesses a media type from a file extension; "application/octet-stream"
// otherwise.
std::string media_type_for(const std::filesystem::path& file);

}  // namespace agritrace::docstore
