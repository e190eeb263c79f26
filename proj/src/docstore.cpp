#include "agritrace/docstore.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "agritrace/error.hpp"

namespace agritrace::docstore {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

Bytes read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + path.string());
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return data;
}

std::int64_t now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

fs::path temp_name(const fs::path& dir) {
  static std::atomic<std::uint64_t> counter{0};
  std::ostringstream name;
  name << ".tmp-" << std::hash<std::thread::id>{}(std::this_thread::get_id()) << "-" << counter++;
  return dir / name.str();
}

std::map<std::string, StoredObject> read_index(const fs::path& index) {
  std::map<std::string, StoredObject> out;
  std::ifstream in(index);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      StoredObject o;
      o.content_id = Digest::from_hex(j.at("id").get<std::string>());
      o.size = j.at("size").get<std::uint64_t>();
      o.media_type = j.value("media_type", "");
      o.created_ms = j.value("created", std::int64_t{0});
      out.emplace(o.content_id.hex(), o);  // first entry wins
    } catch (const std::exception&) {
      // A torn trailing line from an interrupted append is ignored.
    }
  }
  return out;
}

}  // namespace

DocStore::DocStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_ / "objects", ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create store at " + root_.string() + ": " + ec.message());
}

fs::path DocStore::object_path(const Digest& content_id) const { return root_ / "objects" / content_id.hex(); }

Digest DocStore::put(ByteView content, std::string media_type) {
  if (content.empty()) throw Error(ErrorCode::empty_document, "refusing to store empty content");
  Digest id = sha256(content);
  fs::path target = object_path(id);

  std::lock_guard lock(index_mutex_);
  if (fs::exists(target)) return id;

  fs::path tmp = temp_name(root_ / "objects");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(content.data()), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      fs::remove(tmp);
      throw Error(ErrorCode::io_error, "cannot write " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorCode::io_error, "cannot move object into place: " + ec.message());
  }

  json entry{{"id", id.hex()}, {"size", content.size()}, {"media_type", media_type}, {"created", now_ms()}};
  std::ofstream index(root_ / "index.jsonl", std::ios::app);
  index << entry.dump() << "\n";
  if (!index) throw Error(ErrorCode::io_error, "cannot append to index");
  return id;
}

Digest DocStore::put_file(const fs::path& file, std::string media_type) {
  Bytes data = read_all(file);
  if (media_type.empty()) media_type = media_type_for(file);
  return put(data, std::move(media_type));
}

Bytes DocStore::get(const Digest& content_id) const {
  fs::path path = object_path(content_id);
  if (!fs::exists(path)) throw Error(ErrorCode::not_found, "no object " + content_id.hex());
  Bytes data = read_all(path);
  if (sha256(data) != content_id)
    throw Error(ErrorCode::integrity_error, "object " + content_id.hex() + " does not match its digest");
  return data;
}

bool DocStore::contains(const Digest& content_id) const { return fs::exists(object_path(content_id)); }

std::optional<StoredObject> DocStore::stat(const Digest& content_id) const {
  if (!contains(content_id)) return std::nullopt;
  std::lock_guard lock(index_mutex_);
  auto index = read_index(root_ / "index.jsonl");
  if (auto it = index.find(content_id.hex()); it != index.end()) return it->second;
  // Object without an index line (e.g. copied in by hand).
  return StoredObject{content_id, static_cast<std::uint64_t>(fs::file_size(object_path(content_id))), "", 0};
}

std::vector<StoredObject> DocStore::list() const {
  std::lock_guard lock(index_mutex_);
  auto index = read_index(root_ / "index.jsonl");
  std::vector<StoredObject> out;
  for (auto& [id, o] : index) out.push_back(o);
  return out;
}

std::string media_type_for(const fs::path& file) {
  static const std::map<std::string, std::string> kTypes = {
      {".jpg", "image/jpeg"}, {".jpeg", "image/jpeg"}, {".png", "image/png"},
      {".pdf", "application/pdf"}, {".txt", "text/plain"}, {".json", "application/json"},
      {".csv", "text/csv"}, {".xml", "application/xml"},
  };
  std::string ext = file.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  auto it = kTypes.find(ext);
  return it == kTypes.end() ? "application/octet-stream" : it->second;
}

}  // namespace agritrace::docstore
