#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace semstego::cli {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);
/// Two-space indented JSON with a trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

struct FileChecksum {
  std::string relative_path;
  std::string sha256;
};

/// Every regular file under `dir` except SHA256SUMS, sorted by path.
std::vector<FileChecksum> directory_checksums(const std::filesystem::path& dir);

/// `sha256  path` lines in sha256sum format, written to dir/SHA256SUMS.
void write_checksum_manifest(const std::filesystem::path& dir);

}  // namespace semstego::cli
