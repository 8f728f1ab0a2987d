#include "semstego/data/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace semstego::data {

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::ispunct(c)) continue;
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch;
  }
  return out;
}

std::uint64_t normalized_hash(std::string_view text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (char c : normalize_text(text)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

ComposeResult compose_training_corpus(const std::vector<std::vector<TextRecord>>& parts,
                                      const std::vector<std::vector<TextRecord>>& eval_manifests) {
  std::unordered_set<std::string> held_out;
  for (const auto& m : eval_manifests)
    for (const auto& r : m) held_out.insert(normalize_text(r.text));

  struct Keyed {
    std::uint64_t hash;
    std::string norm;
    const TextRecord* rec;
  };
  std::vector<Keyed> candidates;
  ComposeResult result;
  for (const auto& part : parts) {
    for (const auto& r : part) {
      auto norm = normalize_text(r.text);
      if (held_out.contains(norm)) {
        ++result.collisions;
        continue;
      }
      candidates.push_back({normalized_hash(r.text), std::move(norm), &r});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Keyed& a, const Keyed& b) {
    if (a.hash != b.hash) return a.hash < b.hash;
    if (a.norm != b.norm) return a.norm < b.norm;
    if (a.rec->text != b.rec->text) return a.rec->text < b.rec->text;
    if (a.rec->category != b.rec->category) return a.rec->category < b.rec->category;
    return a.rec->source < b.rec->source;
  });
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (i > 0 && candidates[i].norm == candidates[i - 1].norm) {
      ++result.duplicates;
      continue;
    }
    result.records.push_back(*candidates[i].rec);
  }
  return result;
}

void from_json(const nlohmann::json& j, TrainingCorpusSpec& s) {
  s.parts = j.value("parts", std::vector<SourceSpec>{});
  s.eval_manifests.clear();
  for (const auto& p : j.value("eval_manifests", std::vector<std::string>{})) s.eval_manifests.emplace_back(p);
}

TrainingCorpusResult compose_training_corpus(const TrainingCorpusSpec& spec) {
  TrainingCorpusResult out;
  std::vector<std::vector<TextRecord>> parts;
  for (const auto& src : spec.parts) {
    IVTSubsetSpec one;
    one.bounds = {};
    one.sources = {src};
    auto built = build_subset(one);
    out.shortfalls.insert(out.shortfalls.end(), built.shortfalls.begin(), built.shortfalls.end());
    parts.push_back(std::move(built.records));
  }
  std::vector<std::vector<TextRecord>> evals;
  for (const auto& p : spec.eval_manifests) evals.push_back(read_manifest(p));
  out.composed = compose_training_corpus(parts, evals);
  return out;
}

}  // namespace semstego::data
