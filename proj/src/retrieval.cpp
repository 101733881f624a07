#include "rcv/retrieval.hpp"

#include <cstdlib>
#include <filesystem>
#include <set>

#include <json.hpp>

#include "rcv/http.hpp"
#include "rcv/util.hpp"

namespace rcv {
namespace {

using nlohmann::json;

struct ParsedHost {
    bool tls = false;
    std::string host;
    int port = 0;
};

ParsedHost parse_host(const std::string& url) {
    ParsedHost out;
    std::string rest;
    if (url.rfind("https://", 0) == 0) {
        out.tls = true;
        rest = url.substr(8);
    } else if (url.rfind("http://", 0) == 0) {
        rest = url.substr(7);
    } else {
        throw std::runtime_error("search URL must start with http:// or https://: " + url);
    }
    auto slash = rest.find('/');
    std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
    auto colon = authority.find(':');
    if (colon == std::string::npos) {
        out.host = authority;
        out.port = out.tls ? 443 : 80;
    } else {
        out.host = authority.substr(0, colon);
        out.port = std::stoi(authority.substr(colon + 1));
    }
    return out;
}

}  // namespace

HttpSearchClient::HttpSearchClient(SearchConfig config) : config_(std::move(config)) {}

SearchHit HttpSearchClient::search(const std::string& query) {
    ParsedHost parsed = parse_host(config_.base_url);

    httplib::Headers headers = {{"Content-Type", "application/json"}};
    if (!config_.api_key_env.empty()) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw std::runtime_error("search API key environment variable is unset: " +
                                     config_.api_key_env);
        }
        headers.emplace("X-API-KEY", key);
    }
    const std::string payload = json{{"q", query}}.dump();

    for (int attempt = 0; attempt < config_.retry_budget; ++attempt) {
        httplib::Result result;
        if (parsed.tls) {
            httplib::SSLClient client(parsed.host, parsed.port);
            client.set_connection_timeout(config_.connect_timeout_s, 0);
            client.set_read_timeout(config_.read_timeout_s, 0);
            result = client.Post("/search", headers, payload, "application/json");
        } else {
            httplib::Client client(parsed.host, parsed.port);
            client.set_connection_timeout(config_.connect_timeout_s, 0);
            client.set_read_timeout(config_.read_timeout_s, 0);
            result = client.Post("/search", headers, payload, "application/json");
        }
        if (!result || result->status >= 500 || result->status == 429) continue;
        if (result->status >= 400) return {};  // bad request: no paragraph for this query

        json doc;
        try {
            doc = json::parse(result->body);
        } catch (const std::exception&) {
            return {};
        }
        SearchHit hit;
        if (doc.contains("organic") && doc["organic"].is_array() && !doc["organic"].empty()) {
            const auto& first = doc["organic"][0];
            hit.snippet = first.value("snippet", std::string{});
            hit.url = first.value("link", std::string{});
        }
        if (hit.snippet.empty() && doc.contains("answerBox") && doc["answerBox"].is_object()) {
            const auto& box = doc["answerBox"];
            hit.snippet = box.value("snippet", box.value("answer", std::string{}));
            hit.url = box.value("link", std::string{});
        }
        return hit;
    }
    return {};  // outage: empty slot, assembly continues
}

SearchHit FixtureSearchClient::search(const std::string& query) {
    ++calls_;
    auto it = fixture_.find(query);
    return it == fixture_.end() ? SearchHit{} : it->second;
}

CachingSearchClient::CachingSearchClient(std::unique_ptr<SearchClient> inner,
                                         std::string cache_dir)
    : inner_(std::move(inner)), cache_dir_(std::move(cache_dir)) {
    if (!cache_dir_.empty()) {
        std::filesystem::create_directories(cache_dir_);
    }
}

std::string CachingSearchClient::provider_name() const { return inner_->provider_name(); }

SearchHit CachingSearchClient::search(const std::string& query) {
    if (cache_dir_.empty()) return inner_->search(query);

    const std::string key =
        sha256_hex(query + "\x1f" + inner_->provider_name() + "\x1f" + utc_day_stamp());
    auto path = std::filesystem::path(cache_dir_) / (key + ".json");
    std::error_code ec;
    if (std::filesystem::exists(path, ec)) {
        try {
            json doc = json::parse(read_file(path.string()));
            return {doc.value("snippet", std::string{}), doc.value("url", std::string{})};
        } catch (const std::exception&) {
            // fall through to a fresh fetch
        }
    }
    SearchHit hit = inner_->search(query);
    json doc = {{"snippet", hit.snippet}, {"url", hit.url}};
    write_file_atomic(path.string(), doc.dump());
    return hit;
}

RetrievedEvidence retrieve_for_claim(const ClaimRecord& record, Gateway& decomposer,
                                     SearchClient& search, const DecomposePrompts& prompts) {
    RetrievedEvidence out;
    out.parent_id = record.id;

    Decomposition decomp = decompose(record, decomposer, prompts);
    std::set<std::string> seen;
    for (const auto& sub : decomp.subs) {
        RetrievedEvidence::PerSub slot;
        slot.query = sub.text;
        SearchHit hit = search.search(sub.text);
        slot.paragraph = hit.snippet;
        slot.source_url = hit.url;
        if (!slot.paragraph.empty() && seen.insert(slot.paragraph).second) {
            if (!out.assembled.empty()) out.assembled += "\n\n";
            out.assembled += slot.paragraph;
        }
        out.per_sub.push_back(std::move(slot));
    }
    out.empty_assembly = out.assembled.empty();
    return out;
}

ClaimRecord to_openbook_record(const ClaimRecord& record, const RetrievedEvidence& evidence) {
    if (evidence.assembled.empty()) {
        throw DomainError("open-book evidence is empty for record " + record.id);
    }
    ClaimRecord out = record;
    out.evidence = evidence.assembled;
    out.openbook_evidence = true;
    return out;
}

}  // namespace rcv
