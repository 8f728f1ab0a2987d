#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "semstego/data/corpus.hpp"
#include "semstego/data/covers.hpp"
#include "semstego/data/generator.hpp"
#include "semstego/data/manifest.hpp"
#include "semstego/data/subset.hpp"
#include "semstego/stegocore/image_io.hpp"

using namespace semstego;
using namespace semstego::data;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

TextRecord rec(const std::string& text, const std::string& cat = "c", const std::string& src = "s") {
  return make_record(text, cat, src);
}

/// Local chat-completion stub; `script` maps the request number to (status, body text).
class StubServer {
 public:
  using Script = std::function<std::pair<int, std::string>(int)>;

  explicit StubServer(Script script) : script_(std::move(script)) {
    server_.Post("/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mu_);
      const int k = count_++;
      auth_headers_.push_back(req.get_header_value("Authorization"));
      const auto [status, text] = script_(k);
      res.status = status;
      if (status == 200) {
        nlohmann::json j = {{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}}};
        res.set_content(j.dump(), "application/json");
      } else {
        res.set_content("{\"error\":\"scripted\"}", "application/json");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  [[nodiscard]] std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int requests() {
    std::lock_guard lock(mu_);
    return count_;
  }
  std::vector<std::string> auth_headers() {
    std::lock_guard lock(mu_);
    return auth_headers_;
  }

 private:
  Script script_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mu_;
  int count_ = 0;
  std::vector<std::string> auth_headers_;
};

GeneratorClientConfig stub_client(const StubServer& s) {
  GeneratorClientConfig c;
  c.base_url = s.url();
  c.credential_env = "SEMSTEGO_TEST_GENERATOR_KEY";
  c.rate_limit_per_s = 0.0;
  c.timeout_s = 5.0;
  return c;
}

const Sleeper no_sleep = [](double) {};
const char* kFakeCredential = "sk-test-0123456789abcdef";

std::string ten_words() { return "one two three four five six seven eight nine ten"; }

}  // namespace

// ---- records and manifests -----------------------------------------------------

TEST(Record, StatisticsOfSimpleText) {
  const auto r = rec("a b c");
  EXPECT_EQ(r.word_count, 3);
  EXPECT_EQ(r.bit_length, 40);
  EXPECT_EQ(bit_length_of("\xC3\xA9"), 16);
  EXPECT_THROW(make_record("bad \xC3", "c", "s"), FormatError);
}

TEST(Manifest, WriteReadIsByteIdentical) {
  std::vector<TextRecord> rs = {rec("hello world"), rec("caf\xC3\xA9 \"quoted\"\tx", "k", "z"), rec("  spaced  ")};
  std::ostringstream out;
  write_manifest(out, rs);
  std::istringstream in(out.str());
  const auto back = read_manifest(in);
  EXPECT_EQ(back, rs);
  std::ostringstream again;
  write_manifest(again, back);
  EXPECT_EQ(again.str(), out.str());
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')),
            R"({"text":"hello world","category":"c","source":"s","word_count":2,"bit_length":88})");
}

TEST(Manifest, DisagreeingStatsRejected) {
  std::istringstream in(R"({"text":"a b","category":"c","source":"s","word_count":5,"bit_length":24})");
  EXPECT_THROW(read_manifest(in), FormatError);
  std::istringstream ok("{\"text\":\"a b\"}\n\n");
  EXPECT_EQ(read_manifest(ok).at(0).word_count, 2);
}

TEST(Stats, AveragesAndUniqueWords) {
  const auto s = corpus_stats({rec("a b c"), rec("a b c d e")});
  EXPECT_DOUBLE_EQ(s.avg_words, 4.0);
  EXPECT_EQ(s.samples, 2);
  EXPECT_EQ(corpus_stats({rec("a b"), rec("b c")}).unique_words, 3);
  EXPECT_EQ(corpus_stats({rec("A b"), rec("a B")}).unique_words, 2);
  EXPECT_THROW(corpus_stats({}), PreconditionError);
}

TEST(Stats, TableHasOverallRowMatchingRecords) {
  std::vector<TextRecord> rs = {rec("a b", "x", "1"), rec("c d e", "y", "2"), rec("f", "x", "1")};
  const auto rows = stats_table(rs);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows.back().category, "overall");
  double words = 0;
  for (const auto& r : rs) words += static_cast<double>(r.word_count);
  EXPECT_DOUBLE_EQ(rows.back().stats.avg_words, words / 3.0);
  EXPECT_DOUBLE_EQ(rows[0].stats.avg_words, 1.5);
}

// ---- subsets -------------------------------------------------------------------

TEST(Subset, BoundsFilterAndShortfall) {
  IVTSubsetSpec spec;
  spec.name = "IVT-S";
  spec.sources = {SourceSpec{"a.txt", SourceFormat::lines, "text", "news", "A", 2},
                  SourceSpec{"b.txt", SourceFormat::lines, "text", "chat", "B", 3}};
  const std::vector<std::vector<std::string>> texts = {
      {"too short", "this one has exactly six words", "and another line that is fine here", "third valid line of text ok"},
      {"only one valid sentence in this source", "no"}};
  const auto res = build_subset(spec, texts);
  ASSERT_EQ(res.records.size(), 3u);
  for (const auto& r : res.records) EXPECT_TRUE(spec.bounds.admits(r.text));
  EXPECT_EQ(res.records[0].category, "news");
  ASSERT_EQ(res.shortfalls.size(), 1u);
  EXPECT_EQ(res.shortfalls[0].wanted, 3u);
  EXPECT_EQ(res.shortfalls[0].got, 1u);
  EXPECT_GE(res.rejected_by_bounds, 2u);
}

TEST(Subset, DefaultBands) {
  EXPECT_EQ(WordBounds::defaults(Granularity::S).min_words, 5);
  EXPECT_EQ(WordBounds::defaults(Granularity::S).max_words, 20);
  EXPECT_EQ(WordBounds::defaults(Granularity::M).min_words, 50);
  EXPECT_EQ(WordBounds::defaults(Granularity::M).max_words, 100);
  const auto l = WordBounds::defaults(Granularity::L);
  std::string para;
  for (int i = 0; i < 120; ++i) para += "w ";
  EXPECT_FALSE(l.admits(para));
  EXPECT_TRUE(l.admits(para + ". second sentence."));
}

TEST(Subset, ReadsLinesJsonlAndCsv) {
  const auto dir = fresh_dir("semstego_sources");
  std::ofstream(dir / "a.txt") << "first line\nsecond line\n";
  std::ofstream(dir / "b.jsonl") << "{\"body\":\"json text\"}\n{\"body\":\"more\"}\n";
  std::ofstream(dir / "c.csv") << "id,text\n1,\"quoted, with comma\"\n2,\"say \"\"hi\"\"\"\n";
  EXPECT_EQ(read_source({dir / "a.txt", SourceFormat::lines}), (std::vector<std::string>{"first line", "second line"}));
  EXPECT_EQ(read_source({dir / "b.jsonl", SourceFormat::jsonl, "body"}), (std::vector<std::string>{"json text", "more"}));
  EXPECT_EQ(read_source({dir / "c.csv", SourceFormat::csv, "text"}),
            (std::vector<std::string>{"quoted, with comma", "say \"hi\""}));
  try {
    read_source({dir / "missing.txt", SourceFormat::lines});
    FAIL();
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("missing.txt"), std::string::npos);
  }
}

// ---- training corpus -----------------------------------------------------------

TEST(Corpus, InjectedEvalRecordIsDropped) {
  const std::vector<TextRecord> eval = {rec("The quick brown fox.")};
  const std::vector<TextRecord> train = {rec("a fresh training line"), rec("the  QUICK brown fox"), rec("another one")};
  const auto res = compose_training_corpus({train}, {eval});
  EXPECT_EQ(res.collisions, 1u);
  EXPECT_EQ(res.records.size(), 2u);
  std::set<std::uint64_t> eval_hashes{normalized_hash(eval[0].text)};
  for (const auto& r : res.records) EXPECT_FALSE(eval_hashes.count(normalized_hash(r.text)));
}

TEST(Corpus, EmptySpecsGiveEmptyManifest) {
  const auto res = compose_training_corpus({}, {});
  EXPECT_TRUE(res.records.empty());
  EXPECT_EQ(res.collisions, 0u);
}

TEST(Corpus, OrderInsensitive) {
  std::vector<TextRecord> part;
  for (int i = 0; i < 30; ++i) part.push_back(rec("line number " + std::to_string(i % 25)));
  auto shuffled = part;
  std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(4));
  const auto a = compose_training_corpus({part}, {{rec("line number 3")}});
  const auto b = compose_training_corpus({std::vector<TextRecord>(shuffled.begin(), shuffled.begin() + 13),
                                          std::vector<TextRecord>(shuffled.begin() + 13, shuffled.end())},
                                         {{rec("line number 3")}});
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(a.records.size(), 24u);
  EXPECT_EQ(a.duplicates, 4u);
  EXPECT_EQ(a.collisions, 2u);
}

TEST(Corpus, NormalizationIgnoresCasePunctuationAndSpacing) {
  EXPECT_EQ(normalize_text("  Hello,   World! "), "hello world");
  EXPECT_EQ(normalized_hash("Hello, world"), normalized_hash("hello world"));
}

// ---- covers ----------------------------------------------------------------------

TEST(Covers, SortedOrderAndLimit) {
  const auto dir = fresh_dir("semstego_covers");
  for (int i = 9; i >= 0; --i) {
    stegocore::ImageTensor img(3, 8, 8, stegocore::ImageRole::cover, i / 10.0);
    stegocore::write_png(dir / ("img_" + std::to_string(i) + ".png"), img);
  }
  std::ofstream(dir / "zz_broken.png") << "not an image";
  CoverLoadReport report;
  const auto covers = load_covers(dir, 8, 8, 4, 3, &report);
  ASSERT_EQ(covers.size(), 4u);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(covers[static_cast<std::size_t>(i)].at(0, 0, 0), i / 10.0, 0.6 / 255);
  const auto all = load_covers(dir, 8, 8, 0, 3, &report);
  EXPECT_EQ(all.size(), 10u);
  EXPECT_EQ(report.skipped.size(), 1u);
}

TEST(Covers, BlackImageIsZeros) {
  const auto dir = fresh_dir("semstego_black");
  stegocore::write_png(dir / "black.png", stegocore::ImageTensor(3, 32, 32));
  const auto covers = load_covers(dir, 16, 16);
  ASSERT_EQ(covers.size(), 1u);
  for (double v : covers[0].values()) EXPECT_EQ(v, 0.0);
}

TEST(Covers, HalvingEqualsTwoByTwoBoxAverage) {
  const auto dir = fresh_dir("semstego_checker");
  stegocore::ImageTensor src(1, 512, 512);
  for (std::int64_t y = 0; y < 512; ++y)
    for (std::int64_t x = 0; x < 512; ++x) src.at(0, y, x) = ((x / 2 + y / 2) % 2 == 0) ? 1.0 : ((x + y) % 2) * (128.0 / 255.0);
  stegocore::write_png(dir / "checker.png", src);
  const auto covers = load_covers(dir, 256, 256, 0, 1);
  ASSERT_EQ(covers.size(), 1u);
  const auto png = stegocore::read_image_file(dir / "checker.png");
  double max_err = 0.0;
  for (std::int64_t y = 0; y < 256; ++y)
    for (std::int64_t x = 0; x < 256; ++x) {
      const double box = (png.at(0, 2 * y, 2 * x) + png.at(0, 2 * y, 2 * x + 1) + png.at(0, 2 * y + 1, 2 * x) +
                          png.at(0, 2 * y + 1, 2 * x + 1)) / 4.0;
      max_err = std::max(max_err, std::abs(covers[0].at(0, y, x) - box));
    }
  EXPECT_LT(max_err, 1e-6);
}

TEST(Covers, SyntheticAreDeterministicAndInRange) {
  const auto a = synthetic_covers(3, 3, 32, 32, 9);
  const auto b = synthetic_covers(3, 3, 32, 32, 9);
  EXPECT_EQ(a, b);
  for (const auto& c : a) EXPECT_TRUE(c.in_unit_range());
  EXPECT_FALSE(a[0] == a[1]);
}

// ---- synthetic generation --------------------------------------------------------

class GeneratorTest : public ::testing::Test {
 protected:
  void SetUp() override { setenv("SEMSTEGO_TEST_GENERATOR_KEY", kFakeCredential, 1); }
  void TearDown() override { unsetenv("SEMSTEGO_TEST_GENERATOR_KEY"); }
};

TEST_F(GeneratorTest, FixedTextGivesNIdenticalRecords) {
  StubServer stub([](int) { return std::pair{200, ten_words()}; });
  const auto res = generate_synthetic(stub_client(stub), 5, {5, 20}, 0, no_sleep);
  ASSERT_EQ(res.records.size(), 5u);
  for (const auto& r : res.records) EXPECT_EQ(r.text, ten_words());
  EXPECT_EQ(stub.requests(), 5);
  EXPECT_EQ(res.http_requests, 5u);
  for (const auto& h : stub.auth_headers()) EXPECT_EQ(h, std::string("Bearer ") + kFakeCredential);
}

TEST_F(GeneratorTest, RetriesAfterTooManyRequests) {
  StubServer stub([](int k) { return k < 2 ? std::pair{429, std::string()} : std::pair{200, ten_words()}; });
  std::vector<double> waits;
  const auto res = generate_synthetic(stub_client(stub), 1, {5, 20}, 0, [&](double s) { waits.push_back(s); });
  EXPECT_EQ(stub.requests(), 3);
  EXPECT_EQ(res.records.size(), 1u);
  ASSERT_EQ(waits.size(), 2u);
  EXPECT_DOUBLE_EQ(waits[0], 1.0);
  EXPECT_DOUBLE_EQ(waits[1], 2.0);
}

TEST_F(GeneratorTest, PersistentServerErrorSkipsRequest) {
  StubServer stub([](int k) { return k < 5 ? std::pair{503, std::string()} : std::pair{200, ten_words()}; });
  const auto res = generate_synthetic(stub_client(stub), 2, {5, 20}, 0, no_sleep);
  EXPECT_EQ(res.skipped, 1u);
  EXPECT_EQ(res.records.size(), 1u);
  EXPECT_EQ(stub.requests(), 6);
}

TEST_F(GeneratorTest, OutOfBandResponseRetriedWithNewPrompt) {
  StubServer stub([](int k) { return k == 0 ? std::pair{200, std::string("too short")} : std::pair{200, ten_words()}; });
  const auto res = generate_synthetic(stub_client(stub), 1, {5, 20}, 0, no_sleep);
  EXPECT_EQ(res.records.size(), 1u);
  EXPECT_EQ(stub.requests(), 2);
}

TEST_F(GeneratorTest, AuthFailureIsFatal) {
  StubServer stub([](int) { return std::pair{401, std::string()}; });
  EXPECT_THROW(generate_synthetic(stub_client(stub), 3, {5, 20}, 0, no_sleep), AuthError);
  EXPECT_EQ(stub.requests(), 1);
}

TEST_F(GeneratorTest, QuotaExhaustedReturnsPartialResult) {
  StubServer stub([](int k) { return k < 2 ? std::pair{200, ten_words()} : std::pair{402, std::string()}; });
  const auto res = generate_synthetic(stub_client(stub), 5, {5, 20}, 0, no_sleep);
  EXPECT_TRUE(res.quota_exhausted);
  EXPECT_EQ(res.records.size(), 2u);
}

TEST_F(GeneratorTest, ZeroRequestsOrMissingCredentialRejected) {
  StubServer stub([](int) { return std::pair{200, ten_words()}; });
  EXPECT_THROW(generate_synthetic(stub_client(stub), 0, {5, 20}, 0, no_sleep), PreconditionError);
  unsetenv("SEMSTEGO_TEST_GENERATOR_KEY");
  EXPECT_THROW(generate_synthetic(stub_client(stub), 1, {5, 20}, 0, no_sleep), AuthError);
  EXPECT_EQ(stub.requests(), 0);
}

TEST_F(GeneratorTest, ParallelWorkersKeepIndexOrder) {
  StubServer stub([](int) { return std::pair{200, ten_words()}; });
  auto client = stub_client(stub);
  client.max_in_flight = 3;
  const auto res = generate_synthetic(client, 7, {5, 20}, 0, no_sleep);
  EXPECT_EQ(res.records.size(), 7u);
}

TEST_F(GeneratorTest, CredentialNeverReachesArtifacts) {
  StubServer stub([](int) { return std::pair{200, ten_words()}; });
  const auto client = stub_client(stub);
  const auto res = generate_synthetic(client, 3, {5, 20}, 0, no_sleep);
  std::ostringstream manifest;
  write_manifest(manifest, res.records);
  const nlohmann::json cfg = client;
  for (const auto& blob : {manifest.str(), cfg.dump()}) EXPECT_EQ(blob.find(kFakeCredential), std::string::npos);
  EXPECT_EQ(cfg.at("credential_env"), "SEMSTEGO_TEST_GENERATOR_KEY");
  EXPECT_THROW((nlohmann::json{{"api_key", "x"}}.get<GeneratorClientConfig>()), FormatError);
}

TEST(GeneratorPrompts, TopicsAndAdjectivesFeedThePrompt) {
  const auto& topics = generator_topics();
  const auto& adjs = generator_adjectives();
  EXPECT_FALSE(topics.empty());
  EXPECT_FALSE(adjs.empty());
  const auto p = generator_prompt(1, 2, {100, 500});
  EXPECT_EQ(p, generator_prompt(1, 2, {100, 500}));
  EXPECT_NE(p.find("Generate a short English sentence about"), std::string::npos);
  bool has_topic = false;
  for (const auto& t : topics) has_topic |= p.find(t) != std::string::npos;
  EXPECT_TRUE(has_topic);
}
