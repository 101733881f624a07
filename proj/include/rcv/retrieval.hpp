#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "rcv/corpus.hpp"
#include "rcv/decompose.hpp"
#include "rcv/gateway.hpp"

namespace rcv {

struct SearchHit {
    std::string snippet;
    std::string url;
};

// One provider-shaped call: query in, best paragraph out. Empty snippet means
// the provider had nothing (or failed); retrieval treats that as a gap, not an
// abort.
class SearchClient {
public:
    virtual ~SearchClient() = default;
    virtual SearchHit search(const std::string& query) = 0;
    virtual std::string provider_name() const = 0;
};

struct SearchConfig {
    std::string base_url = "https://google.serper.dev";
    std::string api_key_env = "SERPER_API_KEY";
    std::string cache_dir;  // empty disables the day-stamped cache
    int connect_timeout_s = 10;
    int read_timeout_s = 60;
    int retry_budget = 3;
};

// Serper-style JSON wire: POST {"q": query}, response carries "organic" hits
// with "snippet"/"link" and optionally an "answerBox".
class HttpSearchClient : public SearchClient {
public:
    explicit HttpSearchClient(SearchConfig config);
    SearchHit search(const std::string& query) override;
    std::string provider_name() const override { return "serper"; }

private:
    SearchConfig config_;
};

// Replays recorded responses; queries missing from the fixture come back empty.
class FixtureSearchClient : public SearchClient {
public:
    explicit FixtureSearchClient(std::map<std::string, SearchHit> fixture)
        : fixture_(std::move(fixture)) {}
    SearchHit search(const std::string& query) override;
    std::string provider_name() const override { return "fixture"; }
    int call_count() const { return calls_; }

private:
    std::map<std::string, SearchHit> fixture_;
    int calls_ = 0;
};

// Caches by (query, provider, day stamp) so re-runs within a day replay.
class CachingSearchClient : public SearchClient {
public:
    CachingSearchClient(std::unique_ptr<SearchClient> inner, std::string cache_dir);
    SearchHit search(const std::string& query) override;
    std::string provider_name() const override;

private:
    std::unique_ptr<SearchClient> inner_;
    std::string cache_dir_;
};

struct RetrievedEvidence {
    std::string parent_id;
    struct PerSub {
        std::string query;
        std::string paragraph;  // empty = search gave nothing for this sub-claim
        std::string source_url;
    };
    std::vector<PerSub> per_sub;
    std::string assembled;  // deduplicated concatenation in sub-claim order
    bool empty_assembly = false;
};

RetrievedEvidence retrieve_for_claim(const ClaimRecord& record, Gateway& decomposer,
                                     SearchClient& search,
                                     const DecomposePrompts& prompts = default_decompose_prompts());

// Same record with the retrieved text in place of the original evidence. The
// original gold label is kept and the record is flagged: under open-book
// evidence the label may no longer match what the new evidence supports.
ClaimRecord to_openbook_record(const ClaimRecord& record, const RetrievedEvidence& evidence);

}  // namespace rcv
