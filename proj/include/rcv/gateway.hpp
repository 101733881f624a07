#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rcv/prompts.hpp"

namespace rcv {

struct EndpointConfig {
    std::string base_url;            // e.g. "http://127.0.0.1:8731" or "https://api.openai.com"
    std::string model;
    std::string api_key_env;         // name of the env var holding the key; empty = no auth header
    std::string cache_dir;           // empty disables caching
    double temperature = 0.0;
    int max_tokens = 2048;
    int max_in_flight = 4;
    int retry_budget = 5;            // total attempts, not extra retries
    int retry_initial_delay_ms = 200;
    int connect_timeout_s = 10;
    int read_timeout_s = 300;
};

struct GenRequest {
    PromptBundle bundle;
    std::string model;
    double temperature = 0.0;
    int max_tokens = 2048;
    std::string seed_tag;            // salts the cache key; distinct tags force distinct samples
};

enum class FinishReason { Stop, Length, Error };

struct TokenUsage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

struct GenResponse {
    std::string text;
    FinishReason finish = FinishReason::Error;
    TokenUsage usage;
    bool cached = false;
    int retries = 0;                 // failed attempts before the one that succeeded
    std::string error;               // non-empty iff finish == Error
};

// Configuration or auth problems (HTTP 4xx other than 429) abort the run:
// retrying cannot fix a bad key or a malformed request.
class GatewayError : public std::runtime_error {
public:
    explicit GatewayError(const std::string& what) : std::runtime_error(what) {}
};

class Gateway {
public:
    explicit Gateway(EndpointConfig config);

    GenRequest make_request(const PromptBundle& bundle, const std::string& seed_tag = "") const;

    GenResponse complete(const GenRequest& request);

    // Order-preserving; per-item failures are carried in the matching slot.
    std::vector<GenResponse> complete_batch(const std::vector<GenRequest>& requests);
    std::vector<GenResponse> complete_batch(const std::vector<GenRequest>& requests,
                                            int max_in_flight);

    const EndpointConfig& config() const { return config_; }

    static std::string cache_key(const GenRequest& request);

private:
    GenResponse complete_uncached(const GenRequest& request);
    std::optional<GenResponse> cache_lookup(const std::string& key) const;
    void cache_store(const std::string& key, const GenResponse& response) const;

    EndpointConfig config_;
    std::string host_;
    std::string path_prefix_;
    bool tls_ = false;
    int port_ = 0;
};

}  // namespace rcv
