#include "semstego/data/generator.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <random>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "semstego/textproto/protocol.hpp"

namespace semstego::data {

void to_json(nlohmann::json& j, const GeneratorClientConfig& c) {
  j = {{"base_url", c.base_url},
       {"endpoint", c.endpoint},
       {"credential_env", c.credential_env},
       {"model", c.model},
       {"temperature", c.temperature},
       {"max_tokens", c.max_tokens},
       {"retry",
        {{"max_attempts", c.retry.max_attempts},
         {"initial_backoff_s", c.retry.initial_backoff_s},
         {"multiplier", c.retry.multiplier},
         {"max_backoff_s", c.retry.max_backoff_s},
         {"max_length_retries", c.retry.max_length_retries}}},
       {"rate_limit_per_s", c.rate_limit_per_s},
       {"max_in_flight", c.max_in_flight},
       {"timeout_s", c.timeout_s}};
}

void from_json(const nlohmann::json& j, GeneratorClientConfig& c) {
  if (j.contains("api_key") || j.contains("credential")) {
    throw FormatError("client config must name an environment variable (credential_env), not hold a credential");
  }
  c.base_url = j.value("base_url", c.base_url);
  c.endpoint = j.value("endpoint", c.endpoint);
  c.credential_env = j.value("credential_env", c.credential_env);
  c.model = j.value("model", c.model);
  c.temperature = j.value("temperature", c.temperature);
  c.max_tokens = j.value("max_tokens", c.max_tokens);
  if (j.contains("retry")) {
    const auto& r = j.at("retry");
    c.retry.max_attempts = r.value("max_attempts", c.retry.max_attempts);
    c.retry.initial_backoff_s = r.value("initial_backoff_s", c.retry.initial_backoff_s);
    c.retry.multiplier = r.value("multiplier", c.retry.multiplier);
    c.retry.max_backoff_s = r.value("max_backoff_s", c.retry.max_backoff_s);
    c.retry.max_length_retries = r.value("max_length_retries", c.retry.max_length_retries);
  }
  c.rate_limit_per_s = j.value("rate_limit_per_s", c.rate_limit_per_s);
  c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
  c.timeout_s = j.value("timeout_s", c.timeout_s);
  if (c.max_in_flight < 1) throw FormatError("max_in_flight must be at least 1");
  if (c.retry.max_attempts < 1) throw FormatError("retry.max_attempts must be at least 1");
}

const std::vector<std::string>& generator_topics() {
  static const std::vector<std::string> topics = {
      "technology", "sports",        "food",           "travel",       "animals",     "weather",
      "history",    "music",         "movies",         "health",       "science",     "business",
      "education",  "art",           "space",          "space",        "environment", "literature",
      "music",      "film",          "psychology",     "politics",     "economics",   "food",
      "fashion",    "mathematics",   "engineering",    "architecture", "philosophy",  "geography",
      "biology",    "chemistry",     "physics",        "astronomy",    "medicine",    "language",
      "culture",    "society",       "religion",       "anthropology", "family",      "relationships",
      "hobbies",    "pets",          "home",           "work",         "money",       "shopping",
      "transportation", "holidays",  "AI",             "climate change", "sustainability", "social media",
      "mental health", "innovation", "future",         "data",         "privacy",     "globalization",
  };
  return topics;
}

const std::vector<std::string>& generator_adjectives() {
  static const std::vector<std::string> adjectives = {
      "interesting", "funny",         "serious",       "educational", "creative",
      "unusual",     "controversial", "inspirational", "practical",   "philosophical",
  };
  return adjectives;
}

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string prompt_for(std::uint64_t stream_seed, const LengthBand& band) {
  std::mt19937_64 rng(stream_seed);
  const auto& topics = generator_topics();
  const auto& adjectives = generator_adjectives();
  std::uniform_int_distribution<std::size_t> t(0, topics.size() - 1);
  std::uniform_int_distribution<std::size_t> a(0, adjectives.size() - 1);
  const auto& topic = topics[t(rng)];
  const auto& adjective = adjectives[a(rng)];
  return "Generate a short English sentence about " + topic + ". The sentence should be " + adjective +
         " and contain exactly between " + std::to_string(band.min_words) + " to " + std::to_string(band.max_words) +
         " words. Do NOT include any explanation or notes, just the sentence itself.";
}

class RateLimiter {
 public:
  RateLimiter(double per_s, const Sleeper& sleep) : interval_(per_s > 0 ? 1.0 / per_s : 0.0), sleep_(sleep) {}

  void acquire() {
    if (interval_ <= 0.0) return;
    double wait = 0.0;
    {
      std::lock_guard lock(mu_);
      const double now = clock();
      const double start = std::max(now, next_);
      wait = start - now;
      next_ = start + interval_;
    }
    if (wait > 0.0) sleep_(wait);
  }

 private:
  static double clock() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
  }
  double interval_;
  const Sleeper& sleep_;
  std::mutex mu_;
  double next_ = 0.0;
};

enum class Outcome { text, transient, skip, quota, auth };

struct Attempt {
  Outcome outcome;
  std::string text;
  std::string detail;
};

Attempt request_once(httplib::Client& cli, const GeneratorClientConfig& cfg, const std::string& bearer,
                     const std::string& system_prompt, const std::string& prompt) {
  nlohmann::json body = {{"model", cfg.model},
                         {"messages",
                          {{{"role", "system"}, {"content", system_prompt}}, {{"role", "user"}, {"content", prompt}}}},
                         {"max_tokens", cfg.max_tokens},
                         {"temperature", cfg.temperature}};
  httplib::Headers headers = {{"Authorization", "Bearer " + bearer}};
  auto res = cli.Post(cfg.endpoint, headers, body.dump(), "application/json");
  if (!res) return {Outcome::transient, {}, "transport error: " + httplib::to_string(res.error())};
  const int status = res->status;
  if (status == 401 || status == 403) return {Outcome::auth, {}, "HTTP " + std::to_string(status)};
  if (status == 402) return {Outcome::quota, {}, "HTTP 402"};
  if (status == 429 || status >= 500) return {Outcome::transient, {}, "HTTP " + std::to_string(status)};
  if (status != 200) return {Outcome::skip, {}, "HTTP " + std::to_string(status)};
  try {
    auto j = nlohmann::json::parse(res->body);
    auto text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    return {Outcome::text, textproto::trim(text), {}};
  } catch (const nlohmann::json::exception& e) {
    return {Outcome::transient, {}, std::string("malformed response: ") + e.what()};
  }
}

}  // namespace

std::string generator_system_prompt(const LengthBand& band) {
  return "You are a concise English text generator. Generate ONLY the requested sentence with exactly " +
         std::to_string(band.min_words) + " to " + std::to_string(band.max_words) +
         " words. Do NOT add any explanations, notes or punctuation outside the sentence.";
}

std::string generator_prompt(std::uint64_t seed, std::size_t index, const LengthBand& band) {
  return prompt_for(mix(seed, index), band);
}

GenerationResult generate_synthetic(const GeneratorClientConfig& client, std::size_t n, const LengthBand& band,
                                    std::uint64_t seed, const Sleeper& sleep_hook) {
  if (n == 0) throw PreconditionError("generate_synthetic needs n >= 1");
  if (band.min_words < 0 || (band.max_words > 0 && band.max_words < band.min_words)) {
    throw PreconditionError("invalid length band");
  }
  const char* credential = std::getenv(client.credential_env.c_str());
  if (credential == nullptr || *credential == '\0') {
    throw AuthError("environment variable " + client.credential_env + " is not set");
  }
  const std::string bearer = credential;
  const Sleeper sleep = sleep_hook ? sleep_hook : Sleeper([](double s) {
    std::this_thread::sleep_for(std::chrono::duration<double>(s));
  });

  RateLimiter limiter(client.rate_limit_per_s, sleep);
  const auto system_prompt = generator_system_prompt(band);
  std::vector<std::optional<std::string>> texts(n);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> requests{0};
  std::atomic<std::size_t> skipped{0};
  std::atomic<bool> stop{false};
  std::atomic<bool> quota{false};
  std::exception_ptr fatal;
  std::mutex fatal_mu;

  auto worker = [&] {
    httplib::Client cli(client.base_url);
    const auto secs = static_cast<time_t>(client.timeout_s);
    cli.set_connection_timeout(secs, 0);
    cli.set_read_timeout(secs, 0);
    cli.set_write_timeout(secs, 0);
    for (;;) {
      if (stop) return;
      const auto idx = next.fetch_add(1);
      if (idx >= n) return;
      bool done = false;
      for (int lt = 0; lt <= client.retry.max_length_retries && !done && !stop; ++lt) {
        const auto prompt = prompt_for(mix(mix(seed, idx), static_cast<std::uint64_t>(lt)), band);
        double backoff = client.retry.initial_backoff_s;
        for (int attempt = 0; attempt < client.retry.max_attempts && !stop; ++attempt) {
          limiter.acquire();
          ++requests;
          const auto a = request_once(cli, client, bearer, system_prompt, prompt);
          if (a.outcome == Outcome::auth) {
            std::lock_guard lock(fatal_mu);
            if (!fatal) fatal = std::make_exception_ptr(AuthError("generator service rejected the credential (" + a.detail + ")"));
            stop = true;
            return;
          }
          if (a.outcome == Outcome::quota) {
            spdlog::warn("generator quota exhausted at request {}", idx);
            quota = true;
            stop = true;
            return;
          }
          if (a.outcome == Outcome::transient) {
            spdlog::warn("request {} attempt {} failed ({}); backing off {:.2f}s", idx, attempt + 1, a.detail, backoff);
            if (attempt + 1 == client.retry.max_attempts) {
              done = true;
              break;
            }
            sleep(backoff);
            backoff = std::min(client.retry.max_backoff_s, backoff * client.retry.multiplier);
            continue;
          }
          if (a.outcome == Outcome::skip) {
            spdlog::warn("request {} rejected ({}); skipping", idx, a.detail);
            done = true;
            break;
          }
          const auto words = count_words(a.text);
          if (!a.text.empty() && is_valid_utf8(a.text) && words >= band.min_words &&
              (band.max_words == 0 || words <= band.max_words)) {
            texts[idx] = a.text;
            done = true;
          } else {
            spdlog::info("request {}: {} words outside [{}, {}]; new prompt", idx, words, band.min_words, band.max_words);
          }
          break;
        }
      }
      if (!texts[idx]) ++skipped;
    }
  };

  const auto workers = static_cast<std::size_t>(std::max(1, client.max_in_flight));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < std::min(workers, n); ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  GenerationResult result;
  result.http_requests = requests;
  result.quota_exhausted = quota;
  for (auto& t : texts) {
    if (t) result.records.push_back(make_record(std::move(*t), "generated", client.model));
  }
  result.skipped = quota ? skipped.load() : n - result.records.size();
  return result;
}

}  // namespace semstego::data
