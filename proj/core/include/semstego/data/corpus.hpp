#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "semstego/data/manifest.hpp"
#include "semstego/data/subset.hpp"

namespace semstego::data {

/// Lowercase (ASCII), strip ASCII punctuation, collapse whitespace, trim.
std::string normalize_text(std::string_view text);

/// 64-bit FNV-1a of the normalized text.
std::uint64_t normalized_hash(std::string_view text);

struct ComposeResult {
  /// Canonical order: ascending (normalized hash, text).
  std::vector<TextRecord> records;
  /// Training candidates dropped because an eval manifest holds the same
  /// normalized text.
  std::size_t collisions = 0;
  /// Candidates dropped as normalized duplicates of another candidate.
  std::size_t duplicates = 0;
};

/// Merges the training parts and removes every record whose normalized text
/// occurs in any eval manifest. Insensitive to input order.
ComposeResult compose_training_corpus(const std::vector<std::vector<TextRecord>>& parts,
                                      const std::vector<std::vector<TextRecord>>& eval_manifests);

struct TrainingCorpusSpec {
  std::vector<SourceSpec> parts;
  std::vector<std::filesystem::path> eval_manifests;
};

void from_json(const nlohmann::json& j, TrainingCorpusSpec& s);

struct TrainingCorpusResult {
  ComposeResult composed;
  std::vector<Shortfall> shortfalls;
};

/// Reads every part (first `quota` texts each) and the eval manifests from disk.
TrainingCorpusResult compose_training_corpus(const TrainingCorpusSpec& spec);

}  // namespace semstego::data
