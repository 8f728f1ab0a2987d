#include "semstego/data/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "semstego/common/errors.hpp"

namespace semstego::data {

namespace {

bool is_ws(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

template <class F>
void for_each_word(std::string_view text, F&& f) {
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_ws(static_cast<unsigned char>(text[i]))) ++i;
    const auto start = i;
    while (i < text.size() && !is_ws(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) f(text.substr(start, i - start));
  }
}

std::string fold_case(std::string_view w) {
  std::string out(w);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

}  // namespace

std::int64_t count_words(std::string_view text) {
  std::int64_t n = 0;
  for_each_word(text, [&](std::string_view) { ++n; });
  return n;
}

std::int64_t bit_length_of(std::string_view text) { return 8 * static_cast<std::int64_t>(text.size()); }

bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    const std::uint32_t min_cp[] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < min_cp[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += len;
  }
  return true;
}

TextRecord make_record(std::string text, std::string category, std::string source) {
  if (!is_valid_utf8(text)) throw FormatError("record text is not valid UTF-8");
  TextRecord r;
  r.word_count = count_words(text);
  r.bit_length = bit_length_of(text);
  r.text = std::move(text);
  r.category = std::move(category);
  r.source = std::move(source);
  return r;
}

std::string to_jsonl_line(const TextRecord& r) {
  nlohmann::ordered_json j;
  j["text"] = r.text;
  j["category"] = r.category;
  j["source"] = r.source;
  j["word_count"] = r.word_count;
  j["bit_length"] = r.bit_length;
  try {
    return j.dump();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("cannot serialize record: ") + e.what());
  }
}

TextRecord from_jsonl_line(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad manifest line: ") + e.what());
  }
  if (!j.is_object() || !j.contains("text") || !j.at("text").is_string()) {
    throw FormatError("manifest line lacks a text field");
  }
  auto r = make_record(j.at("text").get<std::string>(), j.value("category", std::string()),
                       j.value("source", std::string()));
  if (j.contains("word_count") && j.at("word_count").get<std::int64_t>() != r.word_count) {
    throw FormatError("stored word_count disagrees with text");
  }
  if (j.contains("bit_length") && j.at("bit_length").get<std::int64_t>() != r.bit_length) {
    throw FormatError("stored bit_length disagrees with text");
  }
  return r;
}

void write_manifest(std::ostream& out, const std::vector<TextRecord>& records) {
  for (const auto& r : records) out << to_jsonl_line(r) << '\n';
}

void write_manifest(const std::filesystem::path& path, const std::vector<TextRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write manifest " + path.string());
  write_manifest(out, records);
}

std::vector<TextRecord> read_manifest(std::istream& in, std::string_view name) {
  std::vector<TextRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.push_back(from_jsonl_line(line));
    } catch (const FormatError& e) {
      throw FormatError(std::string(name) + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<TextRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionError("cannot open manifest " + path.string());
  return read_manifest(in, path.string());
}

CorpusStats corpus_stats(const std::vector<TextRecord>& records) {
  if (records.empty()) throw PreconditionError("corpus_stats needs a nonempty manifest");
  CorpusStats s;
  std::unordered_set<std::string> vocab;
  std::int64_t words = 0;
  std::int64_t bits = 0;
  for (const auto& r : records) {
    words += count_words(r.text);
    bits += bit_length_of(r.text);
    for_each_word(r.text, [&](std::string_view w) { vocab.insert(fold_case(w)); });
  }
  s.samples = static_cast<std::int64_t>(records.size());
  s.avg_words = static_cast<double>(words) / static_cast<double>(s.samples);
  s.avg_bits = static_cast<double>(bits) / static_cast<double>(s.samples);
  s.unique_words = static_cast<std::int64_t>(vocab.size());
  return s;
}

std::vector<StatsRow> stats_table(const std::vector<TextRecord>& records) {
  std::vector<std::pair<std::string, std::string>> keys;
  std::map<std::pair<std::string, std::string>, std::vector<TextRecord>> groups;
  for (const auto& r : records) {
    auto key = std::make_pair(r.category, r.source);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) keys.push_back(key);
    it->second.push_back(r);
  }
  std::vector<StatsRow> rows;
  for (const auto& k : keys) rows.push_back({k.first, k.second, corpus_stats(groups.at(k))});
  if (!records.empty()) rows.push_back({"overall", "-", corpus_stats(records)});
  return rows;
}

void write_stats_csv(std::ostream& out, const std::vector<StatsRow>& rows) {
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  out << "category,source,avg_word_number,avg_bit_length,unique_words,sample_number\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.4f,%.4f,%lld,%lld", r.stats.avg_words, r.stats.avg_bits,
                  static_cast<long long>(r.stats.unique_words), static_cast<long long>(r.stats.samples));
    out << quote(r.category) << ',' << quote(r.source) << ',' << buf << '\n';
  }
}

}  // namespace semstego::data
