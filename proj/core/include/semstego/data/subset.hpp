#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "semstego/data/manifest.hpp"

namespace semstego::data {

enum class Granularity { S, M, L };

Granularity parse_granularity(std::string_view s);
std::string_view to_string(Granularity g);

/// Inclusive word bounds; max_words 0 means unbounded.
struct WordBounds {
  std::int64_t min_words = 0;
  std::int64_t max_words = 0;
  /// Minimum count of sentence-final marks (. ! ?), for paragraph subsets.
  std::int64_t min_sentences = 0;

  [[nodiscard]] bool admits(std::string_view text) const;
  /// S: 5–20 words; M: 50–100; L: at least 100 words over two or more sentences.
  static WordBounds defaults(Granularity g);
};

enum class SourceFormat { lines, jsonl, csv };

/// A local corpus file and how to read text out of it.
struct SourceSpec {
  std::filesystem::path path;
  SourceFormat format = SourceFormat::lines;
  /// JSONL key or CSV header column holding the text.
  std::string field = "text";
  std::string category;
  std::string source;
  /// Records to take; 0 takes every admitted record.
  std::size_t quota = 0;
};

struct IVTSubsetSpec {
  std::string name;
  Granularity granularity = Granularity::S;
  WordBounds bounds = WordBounds::defaults(Granularity::S);
  std::vector<SourceSpec> sources;
};

void from_json(const nlohmann::json& j, SourceSpec& s);
void from_json(const nlohmann::json& j, IVTSubsetSpec& s);

struct Shortfall {
  std::string category;
  std::string source;
  std::size_t wanted = 0;
  std::size_t got = 0;
};

struct SubsetResult {
  std::vector<TextRecord> records;
  std::vector<Shortfall> shortfalls;
  std::size_t rejected_by_bounds = 0;
};

/// Raw text items of one source, in file order. Missing file throws
/// PreconditionError naming the path.
std::vector<std::string> read_source(const SourceSpec& source);

/// Takes, per source, the first `quota` texts that pass the spec's bounds.
/// `texts[i]` feeds `spec.sources[i]`.
SubsetResult build_subset(const IVTSubsetSpec& spec, const std::vector<std::vector<std::string>>& texts);

/// Reads every source from disk, then builds.
SubsetResult build_subset(const IVTSubsetSpec& spec);

}  // namespace semstego::data
