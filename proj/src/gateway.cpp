#include "rcv/gateway.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "rcv/http.hpp"
#include "rcv/util.hpp"

namespace rcv {
namespace {

using nlohmann::json;

struct ParsedUrl {
    bool tls = false;
    std::string host;
    int port = 0;
    std::string path_prefix;
};

ParsedUrl parse_base_url(const std::string& url) {
    ParsedUrl out;
    std::string rest;
    if (url.rfind("https://", 0) == 0) {
        out.tls = true;
        rest = url.substr(8);
    } else if (url.rfind("http://", 0) == 0) {
        rest = url.substr(7);
    } else {
        throw GatewayError("endpoint URL must start with http:// or https://: " + url);
    }
    auto slash = rest.find('/');
    std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
    out.path_prefix = slash == std::string::npos ? "" : rest.substr(slash);
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') {
        out.path_prefix.pop_back();
    }
    auto colon = authority.find(':');
    if (colon == std::string::npos) {
        out.host = authority;
        out.port = out.tls ? 443 : 80;
    } else {
        out.host = authority.substr(0, colon);
        out.port = std::stoi(authority.substr(colon + 1));
    }
    if (out.host.empty()) {
        throw GatewayError("endpoint URL has no host: " + url);
    }
    return out;
}

bool retryable_status(int status) {
    return status == 429 || (status >= 500 && status < 600);
}

}  // namespace

Gateway::Gateway(EndpointConfig config) : config_(std::move(config)) {
    if (config_.model.empty()) {
        throw GatewayError("endpoint config has no model name");
    }
    auto parsed = parse_base_url(config_.base_url);
    tls_ = parsed.tls;
    host_ = parsed.host;
    port_ = parsed.port;
    path_prefix_ = parsed.path_prefix;
    if (!config_.cache_dir.empty()) {
        std::filesystem::create_directories(config_.cache_dir);
    }
}

GenRequest Gateway::make_request(const PromptBundle& bundle, const std::string& seed_tag) const {
    GenRequest req;
    req.bundle = bundle;
    req.model = config_.model;
    req.temperature = config_.temperature;
    req.max_tokens = config_.max_tokens;
    req.seed_tag = seed_tag;
    return req;
}

std::string Gateway::cache_key(const GenRequest& request) {
    json key = {
        {"model", request.model},
        {"messages", {{{"role", "system"}, {"content", request.bundle.system}},
                      {{"role", "user"}, {"content", request.bundle.user}}}},
        {"temperature", request.temperature},
        {"max_tokens", request.max_tokens},
        {"seed_tag", request.seed_tag},
    };
    return sha256_hex(key.dump());
}

std::optional<GenResponse> Gateway::cache_lookup(const std::string& key) const {
    if (config_.cache_dir.empty()) return std::nullopt;
    auto path = std::filesystem::path(config_.cache_dir) / (key + ".json");
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    json doc;
    try {
        doc = json::parse(read_file(path.string()));
    } catch (const std::exception&) {
        return std::nullopt;  // corrupt entry: treat as a miss, it will be rewritten
    }
    GenResponse resp;
    resp.text = doc.value("text", std::string{});
    std::string finish = doc.value("finish", std::string{"error"});
    resp.finish = finish == "stop"     ? FinishReason::Stop
                  : finish == "length" ? FinishReason::Length
                                       : FinishReason::Error;
    resp.usage.prompt_tokens = doc.value("prompt_tokens", std::int64_t{0});
    resp.usage.completion_tokens = doc.value("completion_tokens", std::int64_t{0});
    resp.cached = true;
    return resp;
}

void Gateway::cache_store(const std::string& key, const GenResponse& response) const {
    if (config_.cache_dir.empty()) return;
    json doc = {
        {"text", response.text},
        {"finish", response.finish == FinishReason::Stop     ? "stop"
                   : response.finish == FinishReason::Length ? "length"
                                                             : "error"},
        {"prompt_tokens", response.usage.prompt_tokens},
        {"completion_tokens", response.usage.completion_tokens},
    };
    auto path = std::filesystem::path(config_.cache_dir) / (key + ".json");
    write_file_atomic(path.string(), doc.dump());
}

GenResponse Gateway::complete(const GenRequest& request) {
    if (request.model.empty() || request.max_tokens < 1) {
        throw GatewayError("invalid request: model empty or max_tokens < 1");
    }
    const std::string key = cache_key(request);
    if (auto hit = cache_lookup(key)) {
        return *hit;
    }
    GenResponse resp = complete_uncached(request);
    if (resp.finish != FinishReason::Error) {
        cache_store(key, resp);
    }
    return resp;
}

GenResponse Gateway::complete_uncached(const GenRequest& request) {
    json body = {
        {"model", request.model},
        {"messages", {{{"role", "system"}, {"content", request.bundle.system}},
                      {{"role", "user"}, {"content", request.bundle.user}}}},
        {"temperature", request.temperature},
        {"max_tokens", request.max_tokens},
    };
    const std::string payload = body.dump();

    httplib::Headers headers = {{"Content-Type", "application/json"}};
    if (!config_.api_key_env.empty()) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw GatewayError("API key environment variable is unset: " + config_.api_key_env);
        }
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    // Tolerate base URLs given with or without the API version segment.
    const bool has_v1 = path_prefix_.size() >= 3 &&
                        path_prefix_.compare(path_prefix_.size() - 3, 3, "/v1") == 0;
    const std::string endpoint =
        path_prefix_ + (has_v1 ? "/chat/completions" : "/v1/chat/completions");
    std::string last_error;
    GenResponse resp;

    for (int attempt = 0; attempt < config_.retry_budget; ++attempt) {
        if (attempt > 0) {
            int delay = config_.retry_initial_delay_ms << (attempt - 1);
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }

        httplib::Result result;
        if (tls_) {
            httplib::SSLClient client(host_, port_);
            client.set_connection_timeout(config_.connect_timeout_s, 0);
            client.set_read_timeout(config_.read_timeout_s, 0);
            result = client.Post(endpoint, headers, payload, "application/json");
        } else {
            httplib::Client client(host_, port_);
            client.set_connection_timeout(config_.connect_timeout_s, 0);
            client.set_read_timeout(config_.read_timeout_s, 0);
            result = client.Post(endpoint, headers, payload, "application/json");
        }

        if (!result) {
            last_error = "transport error: " + httplib::to_string(result.error());
            resp.retries = attempt + 1;
            continue;
        }
        if (retryable_status(result->status)) {
            last_error = "HTTP " + std::to_string(result->status);
            resp.retries = attempt + 1;
            continue;
        }
        if (result->status >= 400) {
            throw GatewayError("endpoint rejected request with HTTP " +
                               std::to_string(result->status) + ": " + result->body);
        }

        json doc;
        try {
            doc = json::parse(result->body);
        } catch (const std::exception& e) {
            last_error = std::string("malformed response body: ") + e.what();
            resp.retries = attempt + 1;
            continue;
        }
        try {
            const auto& choice = doc.at("choices").at(0);
            resp.text = choice.at("message").at("content").get<std::string>();
            std::string finish = choice.value("finish_reason", std::string{"stop"});
            resp.finish = finish == "length" ? FinishReason::Length : FinishReason::Stop;
        } catch (const std::exception& e) {
            last_error = std::string("unexpected response shape: ") + e.what();
            resp.retries = attempt + 1;
            continue;
        }
        if (doc.contains("usage") && doc["usage"].is_object()) {
            resp.usage.prompt_tokens = doc["usage"].value("prompt_tokens", std::int64_t{0});
            resp.usage.completion_tokens = doc["usage"].value("completion_tokens", std::int64_t{0});
        }
        resp.retries = attempt;  // failed attempts before this successful one
        resp.error.clear();
        return resp;
    }

    resp.text.clear();
    resp.finish = FinishReason::Error;
    resp.error = "retry budget exhausted (" + std::to_string(config_.retry_budget) +
                 " attempts): " + last_error;
    return resp;
}

std::vector<GenResponse> Gateway::complete_batch(const std::vector<GenRequest>& requests) {
    return complete_batch(requests, config_.max_in_flight);
}

std::vector<GenResponse> Gateway::complete_batch(const std::vector<GenRequest>& requests,
                                                 int max_in_flight) {
    if (max_in_flight < 1) {
        throw GatewayError("max_in_flight must be >= 1");
    }
    std::vector<GenResponse> out(requests.size());
    if (requests.empty()) return out;

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= requests.size()) break;
            try {
                out[i] = complete(requests[i]);
            } catch (const std::exception& e) {
                // GatewayError (auth/4xx) or an infrastructure failure such as
                // a cache write error; either way it must stay in its slot —
                // an exception escaping the worker would kill the process.
                out[i].text.clear();
                out[i].finish = FinishReason::Error;
                out[i].error = e.what();
            }
        }
    };

    std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(max_in_flight),
                                                  requests.size());
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return out;
}

}  // namespace rcv
