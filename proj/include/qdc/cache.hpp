#pragma once

// Binary on-disk cache for operator matrices and adiabatic tables, keyed by a
// content hash of the generating configuration.  File layout:
//
//   bytes 0-7    magic "QDCCACHE"
//   u32          format version
//   u64          key hash (FNV-1a of the canonical key string)
//   u32          key string length, followed by the key string
//   u64          payload byte length
//   u64          payload FNV-1a hash
//   payload      n_matrices (u32), then per matrix: name length (u32), name,
//                rows (i64), cols (i64), column-major doubles
//
// Any mismatch (magic, version, key, length, hash) is treated as a miss; the
// caller rebuilds and overwrites.  Access is exclusive-locked per file.

#include <Eigen/Dense>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

namespace qdc {

inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

struct NamedMatrix {
  std::string name;
  Eigen::MatrixXd matrix;
};

namespace detail {

// RAII advisory lock on a sidecar .lock file.
class FileLock {
 public:
  explicit FileLock(const std::string& path) {
    fd_ = ::open((path + ".lock").c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ >= 0) ::flock(fd_, LOCK_EX);
  }
  ~FileLock() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

template <typename T>
void append_pod(std::string& buf, const T& v) {
  buf.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool read_pod(const std::string& buf, std::size_t& off, T& v) {
  if (off + sizeof(T) > buf.size()) return false;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  off += sizeof(T);
  return true;
}

}  // namespace detail

class Cache {
 public:
  static constexpr char kMagic[9] = "QDCCACHE";
  static constexpr std::uint32_t kVersion = 1;

  // Resolution order: explicit dir, QDC_CACHE_DIR, ./qdc-cache.
  explicit Cache(std::string dir = "") {
    if (dir.empty()) {
      if (const char* env = std::getenv("QDC_CACHE_DIR")) dir = env;
    }
    if (dir.empty()) dir = "qdc-cache";
    dir_ = dir;
    std::filesystem::create_directories(dir_);
  }

  const std::string& directory() const { return dir_; }

  std::string path_for(const std::string& name, const std::string& key) const {
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a(key)));
    return dir_ + "/" + name + "-" + hex + ".qdc";
  }

  // Returns true and fills `out` on a valid hit.
  bool load(const std::string& name, const std::string& key,
            std::vector<NamedMatrix>& out) const {
    const std::string path = path_for(name, key);
    detail::FileLock lock(path);
    std::ifstream f(path, std::ios::binary);
    if (!f) return false;
    std::string blob((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    std::size_t off = 0;
    char magic[8];
    if (blob.size() < 8) return corrupt(path);
    std::memcpy(magic, blob.data(), 8);
    off = 8;
    if (std::memcmp(magic, kMagic, 8) != 0) return corrupt(path);
    std::uint32_t version = 0, key_len = 0;
    std::uint64_t key_hash = 0, payload_len = 0, payload_hash = 0;
    if (!detail::read_pod(blob, off, version)) return corrupt(path);
    if (version != kVersion) return false;  // stale format: plain miss
    if (!detail::read_pod(blob, off, key_hash)) return corrupt(path);
    if (!detail::read_pod(blob, off, key_len)) return corrupt(path);
    if (off + key_len > blob.size()) return corrupt(path);
    const std::string stored_key = blob.substr(off, key_len);
    off += key_len;
    if (key_hash != fnv1a(key) || stored_key != key) return false;  // key miss
    if (!detail::read_pod(blob, off, payload_len)) return corrupt(path);
    if (!detail::read_pod(blob, off, payload_hash)) return corrupt(path);
    if (off + payload_len != blob.size()) return corrupt(path);
    if (fnv1a(blob.data() + off, payload_len) != payload_hash) return corrupt(path);

    std::uint32_t n = 0;
    if (!detail::read_pod(blob, off, n)) return corrupt(path);
    std::vector<NamedMatrix> result;
    for (std::uint32_t i = 0; i < n; ++i) {
      std::uint32_t name_len = 0;
      if (!detail::read_pod(blob, off, name_len) || off + name_len > blob.size())
        return corrupt(path);
      NamedMatrix nm;
      nm.name = blob.substr(off, name_len);
      off += name_len;
      std::int64_t rows = 0, cols = 0;
      if (!detail::read_pod(blob, off, rows) || !detail::read_pod(blob, off, cols))
        return corrupt(path);
      const std::size_t bytes = static_cast<std::size_t>(rows) * cols * sizeof(double);
      if (rows < 0 || cols < 0 || off + bytes > blob.size()) return corrupt(path);
      nm.matrix.resize(rows, cols);
      std::memcpy(nm.matrix.data(), blob.data() + off, bytes);
      off += bytes;
      result.push_back(std::move(nm));
    }
    out = std::move(result);
    return true;
  }

  void store(const std::string& name, const std::string& key,
             const std::vector<NamedMatrix>& matrices) const {
    std::string payload;
    detail::append_pod(payload, static_cast<std::uint32_t>(matrices.size()));
    for (const auto& nm : matrices) {
      detail::append_pod(payload, static_cast<std::uint32_t>(nm.name.size()));
      payload += nm.name;
      detail::append_pod(payload, static_cast<std::int64_t>(nm.matrix.rows()));
      detail::append_pod(payload, static_cast<std::int64_t>(nm.matrix.cols()));
      payload.append(reinterpret_cast<const char*>(nm.matrix.data()),
                     static_cast<std::size_t>(nm.matrix.size()) * sizeof(double));
    }
    std::string blob(kMagic, 8);
    detail::append_pod(blob, kVersion);
    detail::append_pod(blob, fnv1a(key));
    detail::append_pod(blob, static_cast<std::uint32_t>(key.size()));
    blob += key;
    detail::append_pod(blob, static_cast<std::uint64_t>(payload.size()));
    detail::append_pod(blob, fnv1a(payload.data(), payload.size()));
    blob += payload;

    const std::string path = path_for(name, key);
    detail::FileLock lock(path);
    const std::string tmp = path + ".tmp";
    {
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      if (!f) throw std::runtime_error("cache: cannot write " + tmp);
      f.write(blob.data(), static_cast<std::streamsize>(blob.size()));
      if (!f) throw std::runtime_error("cache: short write to " + tmp);
    }
    std::filesystem::rename(tmp, path);
  }

  struct Entry {
    std::string path;
    std::uintmax_t bytes;
  };

  std::vector<Entry> entries() const {
    std::vector<Entry> out;
    if (!std::filesystem::exists(dir_)) return out;
    for (const auto& e : std::filesystem::directory_iterator(dir_))
      if (e.is_regular_file() && e.path().extension() == ".qdc")
        out.push_back({e.path().string(), e.file_size()});
    std::sort(out.begin(), out.end(),
              [](const Entry& a, const Entry& b) { return a.path < b.path; });
    return out;
  }

  std::uintmax_t clear() const {
    std::uintmax_t n = 0;
    for (const auto& e : entries()) {
      std::filesystem::remove(e.path);
      ++n;
    }
    // drop stale lock files too
    if (std::filesystem::exists(dir_))
      for (const auto& e : std::filesystem::directory_iterator(dir_))
        if (e.path().extension() == ".lock") std::filesystem::remove(e.path());
    return n;
  }

 private:
  static bool corrupt(const std::string& path) {
    std::cerr << "warning: corrupt cache file " << path << ", rebuilding\n";
    return false;
  }

  std::string dir_;
};

}  // namespace qdc
