#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "semstego/common/errors.hpp"
#include "semstego/data/manifest.hpp"

namespace semstego::data {

/// The service rejected the credential (HTTP 401/403) or none was provided.
class AuthError : public Error {
 public:
  using Error::Error;
};

struct RetryPolicy {
  /// Attempts per request for transient failures (429, 5xx, transport).
  int max_attempts = 5;
  double initial_backoff_s = 1.0;
  double multiplier = 2.0;
  double max_backoff_s = 30.0;
  /// Fresh prompts tried when a response falls outside the length band.
  int max_length_retries = 3;
};

/// Chat-completion client settings. Holds the *name* of the environment
/// variable with the bearer credential, never its value.
struct GeneratorClientConfig {
  std::string base_url = "https://api.deepseek.com";
  std::string endpoint = "/chat/completions";
  std::string credential_env = "SEMSTEGO_GENERATOR_KEY";
  std::string model = "deepseek-chat";
  double temperature = 0.8;
  int max_tokens = 500;
  RetryPolicy retry;
  /// Request starts per second across all workers; 0 disables the limit.
  double rate_limit_per_s = 1.0;
  int max_in_flight = 1;
  double timeout_s = 60.0;
};

void to_json(nlohmann::json& j, const GeneratorClientConfig& c);
void from_json(const nlohmann::json& j, GeneratorClientConfig& c);

struct LengthBand {
  std::int64_t min_words = 100;
  std::int64_t max_words = 500;
};

const std::vector<std::string>& generator_topics();
const std::vector<std::string>& generator_adjectives();

/// The user prompt for request `index` (topic and adjective drawn from a
/// generator seeded by seed and index).
std::string generator_prompt(std::uint64_t seed, std::size_t index, const LengthBand& band);
std::string generator_system_prompt(const LengthBand& band);

struct GenerationResult {
  /// In request-index order.
  std::vector<TextRecord> records;
  std::size_t http_requests = 0;
  /// Requests abandoned after exhausting retries.
  std::size_t skipped = 0;
  /// The service reported an exhausted quota (HTTP 402); generation stopped.
  bool quota_exhausted = false;
};

/// Sleep hook, seconds. Tests inject a no-op.
using Sleeper = std::function<void(double)>;

/// Generates `n` records. Throws PreconditionError for n = 0 and AuthError
/// on a missing or rejected credential.
GenerationResult generate_synthetic(const GeneratorClientConfig& client, std::size_t n, const LengthBand& band,
                                    std::uint64_t seed = 0, const Sleeper& sleep = {});

}  // namespace semstego::data
