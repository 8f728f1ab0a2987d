#include "semstego/data/subset.hpp"

#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "semstego/common/errors.hpp"
#include "semstego/textproto/protocol.hpp"

namespace semstego::data {

Granularity parse_granularity(std::string_view s) {
  if (s == "S" || s == "s") return Granularity::S;
  if (s == "M" || s == "m") return Granularity::M;
  if (s == "L" || s == "l") return Granularity::L;
  throw FormatError("unknown granularity '" + std::string(s) + "'");
}

std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::S: return "S";
    case Granularity::M: return "M";
    case Granularity::L: return "L";
  }
  return "?";
}

bool WordBounds::admits(std::string_view text) const {
  const auto n = count_words(text);
  if (n < min_words || (max_words > 0 && n > max_words)) return false;
  if (min_sentences > 0) {
    std::int64_t marks = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
      const char c = text[i];
      if ((c == '.' || c == '!' || c == '?') && (i + 1 == text.size() || text[i + 1] == ' ' || text[i + 1] == '\n')) {
        ++marks;
      }
    }
    if (marks < min_sentences) return false;
  }
  return true;
}

WordBounds WordBounds::defaults(Granularity g) {
  switch (g) {
    case Granularity::S: return {5, 20, 0};
    case Granularity::M: return {50, 100, 0};
    case Granularity::L: return {100, 0, 2};
  }
  return {};
}

void from_json(const nlohmann::json& j, SourceSpec& s) {
  s.path = j.at("path").get<std::string>();
  const auto fmt = j.value("format", std::string("lines"));
  if (fmt == "lines") {
    s.format = SourceFormat::lines;
  } else if (fmt == "jsonl") {
    s.format = SourceFormat::jsonl;
  } else if (fmt == "csv") {
    s.format = SourceFormat::csv;
  } else {
    throw FormatError("unknown source format '" + fmt + "'");
  }
  s.field = j.value("field", std::string("text"));
  s.category = j.value("category", std::string());
  s.source = j.value("source", s.path.stem().string());
  s.quota = j.value("quota", std::size_t{0});
}

void from_json(const nlohmann::json& j, IVTSubsetSpec& s) {
  s.name = j.value("name", std::string());
  s.granularity = parse_granularity(j.value("granularity", std::string("S")));
  s.bounds = WordBounds::defaults(s.granularity);
  s.bounds.min_words = j.value("min_words", s.bounds.min_words);
  s.bounds.max_words = j.value("max_words", s.bounds.max_words);
  s.bounds.min_sentences = j.value("min_sentences", s.bounds.min_sentences);
  s.sources = j.value("sources", std::vector<SourceSpec>{});
}

namespace {

/// RFC 4180 records: quoted fields may hold commas, quotes and newlines.
std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          field += '"';
          in.get();
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && in.peek() == '\n') in.get();
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else {
      field += c;
    }
  }
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::vector<std::string> read_source(const SourceSpec& source) {
  std::ifstream in(source.path, std::ios::binary);
  if (!in) throw PreconditionError("source not found: " + source.path.string());
  std::vector<std::string> out;
  switch (source.format) {
    case SourceFormat::lines: {
      std::string line;
      while (std::getline(in, line)) {
        auto t = textproto::trim(line);
        if (!t.empty()) out.push_back(std::move(t));
      }
      break;
    }
    case SourceFormat::jsonl: {
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (textproto::trim(line).empty()) continue;
        try {
          auto j = nlohmann::json::parse(line);
          if (j.contains(source.field) && j.at(source.field).is_string()) {
            auto t = textproto::trim(j.at(source.field).get<std::string>());
            if (!t.empty()) out.push_back(std::move(t));
          }
        } catch (const nlohmann::json::exception& e) {
          spdlog::warn("{}:{}: skipping malformed line ({})", source.path.string(), lineno, e.what());
        }
      }
      break;
    }
    case SourceFormat::csv: {
      auto rows = parse_csv(in);
      if (rows.empty()) break;
      const auto& header = rows.front();
      std::size_t col = header.size();
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == source.field) col = i;
      }
      if (col == header.size()) {
        throw FormatError(source.path.string() + ": no column named '" + source.field + "'");
      }
      for (std::size_t r = 1; r < rows.size(); ++r) {
        if (col < rows[r].size()) {
          auto t = textproto::trim(rows[r][col]);
          if (!t.empty()) out.push_back(std::move(t));
        }
      }
      break;
    }
  }
  return out;
}

SubsetResult build_subset(const IVTSubsetSpec& spec, const std::vector<std::vector<std::string>>& texts) {
  if (texts.size() != spec.sources.size()) throw PreconditionError("one text stream per source expected");
  SubsetResult result;
  for (std::size_t s = 0; s < spec.sources.size(); ++s) {
    const auto& src = spec.sources[s];
    std::size_t taken = 0;
    for (const auto& t : texts[s]) {
      if (src.quota != 0 && taken >= src.quota) break;
      if (!is_valid_utf8(t) || !spec.bounds.admits(t)) {
        ++result.rejected_by_bounds;
        continue;
      }
      result.records.push_back(make_record(t, src.category, src.source));
      ++taken;
    }
    if (texts[s].empty()) spdlog::warn("source {} ({}) yielded no records", src.source, src.path.string());
    if (src.quota != 0 && taken < src.quota) {
      result.shortfalls.push_back({src.category, src.source, src.quota, taken});
    }
  }
  return result;
}

SubsetResult build_subset(const IVTSubsetSpec& spec) {
  std::vector<std::vector<std::string>> texts;
  texts.reserve(spec.sources.size());
  for (const auto& src : spec.sources) texts.push_back(read_source(src));
  return build_subset(spec, texts);
}

}  // namespace semstego::data
