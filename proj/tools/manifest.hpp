#pragma once

// Run manifests and content hashes for CLI artifacts.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"

namespace transa::cli {

/// Hex SHA-1 of "blob <size>\0<content>", the id git gives the same bytes.
inline std::string git_blob_hash(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + std::string(1, '\0');
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  const bool ok = ctx && EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) && EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("sha1 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline std::string file_hash(const std::filesystem::path& p) { return git_blob_hash(read_file(p)); }

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

/// One manifest per command invocation. Artifacts are recorded with their
/// content hash at the time `write` is called.
class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> argv) {
    doc_["command"] = std::move(command);
    doc_["argv"] = std::move(argv);
    doc_["started"] = utc_timestamp();
    doc_["artifacts"] = nlohmann::json::array();
  }

  nlohmann::json& operator[](const std::string& key) { return doc_[key]; }

  void add_artifact(const std::filesystem::path& p) { artifacts_.push_back(p); }

  void write(const std::filesystem::path& path) {
    doc_["finished"] = utc_timestamp();
    auto& list = doc_["artifacts"];
    list = nlohmann::json::array();
    for (const auto& a : artifacts_) list.push_back({{"path", a.filename().string()}, {"sha1", file_hash(a)}});
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest " + path.string());
    out << doc_.dump(2) << "\n";
  }

 private:
  nlohmann::json doc_;
  std::vector<std::filesystem::path> artifacts_;
};

}  // namespace transa::cli
