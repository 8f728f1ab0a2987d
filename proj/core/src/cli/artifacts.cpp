#include "semstego/cli/artifacts.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "semstego/common/errors.hpp"

namespace semstego::cli {

namespace {

std::string to_hex(const unsigned char* d, unsigned n) {
  std::string out;
  out.reserve(n * 2);
  char buf[3];
  for (unsigned i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", d[i]);
    out += buf;
  }
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  return to_hex(md.data(), len);
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_text_file(path)); }

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << j.dump(2) << '\n';
  if (!out) throw FormatError("cannot write " + path.string());
}

std::vector<FileChecksum> directory_checksums(const std::filesystem::path& dir) {
  std::vector<FileChecksum> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    auto rel = std::filesystem::relative(e.path(), dir).generic_string();
    if (rel == "SHA256SUMS") continue;
    out.push_back({rel, sha256_file(e.path())});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.relative_path < b.relative_path; });
  return out;
}

void write_checksum_manifest(const std::filesystem::path& dir) {
  const auto sums = directory_checksums(dir);
  std::ofstream out(dir / "SHA256SUMS", std::ios::binary);
  for (const auto& s : sums) out << s.sha256 << "  " << s.relative_path << '\n';
  if (!out) throw FormatError("cannot write checksum manifest in " + dir.string());
}

}  // namespace semstego::cli
