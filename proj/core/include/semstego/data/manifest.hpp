#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace semstego::data {

struct TextRecord {
  std::string text;
  std::string category;
  std::string source;
  std::int64_t word_count = 0;
  /// 8 × UTF-8 byte length.
  std::int64_t bit_length = 0;

  friend bool operator==(const TextRecord&, const TextRecord&) = default;
};

/// Whitespace-separated token count.
std::int64_t count_words(std::string_view text);
std::int64_t bit_length_of(std::string_view text);
bool is_valid_utf8(std::string_view bytes);

/// Fills word_count and bit_length. Throws FormatError on invalid UTF-8.
TextRecord make_record(std::string text, std::string category, std::string source);

/// One JSON object per line: {text, category, source, word_count, bit_length}.
std::string to_jsonl_line(const TextRecord& r);
TextRecord from_jsonl_line(std::string_view line);

void write_manifest(std::ostream& out, const std::vector<TextRecord>& records);
void write_manifest(const std::filesystem::path& path, const std::vector<TextRecord>& records);
/// Blank lines are ignored. Missing statistics are recomputed; stored ones
/// that disagree with the text raise FormatError.
std::vector<TextRecord> read_manifest(const std::filesystem::path& path);
std::vector<TextRecord> read_manifest(std::istream& in, std::string_view name = "<stream>");

struct CorpusStats {
  double avg_words = 0.0;
  double avg_bits = 0.0;
  /// Case-folded whitespace tokens.
  std::int64_t unique_words = 0;
  std::int64_t samples = 0;
};

/// Throws PreconditionError on an empty manifest.
CorpusStats corpus_stats(const std::vector<TextRecord>& records);

struct StatsRow {
  std::string category;
  std::string source;
  CorpusStats stats;
};

/// One row per (category, source) in first-seen order, then an "overall" row.
std::vector<StatsRow> stats_table(const std::vector<TextRecord>& records);
void write_stats_csv(std::ostream& out, const std::vector<StatsRow>& rows);

}  // namespace semstego::data
