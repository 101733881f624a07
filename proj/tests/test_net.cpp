#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>

#include <json.hpp>

#include "rcv/decompose.hpp"
#include "rcv/dpo.hpp"
#include "rcv/evaluator.hpp"
#include "rcv/gateway.hpp"
#include "rcv/pipeline.hpp"
#include "rcv/retrieval.hpp"
#include "rcv/sft.hpp"
#include "rcv/util.hpp"
#include "rcv/verdict.hpp"
#include "support/fixtures.hpp"
#include "support/mock_endpoint.hpp"
#include "support/oracles.hpp"

using namespace rcv;
using nlohmann::json;
using rcvtest::make_record;
using rcvtest::MockChatServer;
using rcvtest::MockSearchServer;

namespace {
namespace fs = std::filesystem;

constexpr VeracityLabel S = VeracityLabel::Support;
constexpr VeracityLabel R = VeracityLabel::Refute;
constexpr VeracityLabel N = VeracityLabel::NotEnoughInfo;

fs::path temp_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("rcv-net-" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

EndpointConfig mock_endpoint(const MockChatServer& server, const std::string& cache_dir = "") {
    EndpointConfig config;
    config.base_url = server.base_url();
    config.model = "mock-model";
    config.cache_dir = cache_dir;
    config.retry_initial_delay_ms = 1;
    return config;
}

PromptBundle simple_bundle(const std::string& user = "hello") {
    PromptBundle bundle;
    bundle.system = "system text";
    bundle.user = user;
    return bundle;
}

// A teacher that always obeys its conditioning: replies with the braced label
// it was asked to argue for, or {support} when unconditioned.
MockChatServer::Responder compliant_responder() {
    return [](const rcvtest::CapturedChatRequest& req) {
        auto target = conditioned_target(req.system);
        VeracityLabel label = target.value_or(S);
        return "## Reasoning Step 1: as instructed.\n\nTherefore: {" + label_to_string(label) +
               "}";
    };
}

}  // namespace

TEST_SUITE("gateway") {
    TEST_CASE("plain completion round-trips text, finish and usage") {
        MockChatServer server;
        Gateway gateway{mock_endpoint(server)};
        GenResponse resp = gateway.complete(gateway.make_request(simple_bundle()));
        CHECK(resp.text == "{support}");
        CHECK(resp.finish == FinishReason::Stop);
        CHECK(resp.usage.prompt_tokens == 7);
        CHECK(resp.usage.completion_tokens == 11);
        CHECK_FALSE(resp.cached);
        CHECK(resp.retries == 0);
        CHECK(resp.error.empty());
    }

    TEST_CASE("request carries model, temperature and max_tokens on the wire") {
        MockChatServer server;
        EndpointConfig config = mock_endpoint(server);
        config.temperature = 0.25;
        config.max_tokens = 99;
        Gateway gateway{config};
        gateway.complete(gateway.make_request(simple_bundle("probe")));
        auto seen = server.captured();
        REQUIRE(seen.size() == 1);
        CHECK(seen[0].model == "mock-model");
        CHECK(seen[0].temperature == doctest::Approx(0.25));
        CHECK(seen[0].max_tokens == 99);
        CHECK(seen[0].system == "system text");
        CHECK(seen[0].user == "probe");
    }

    TEST_CASE("authorization header comes from the configured environment variable") {
        MockChatServer server;
        EndpointConfig config = mock_endpoint(server);
        config.api_key_env = "RCV_TEST_API_KEY";
        setenv("RCV_TEST_API_KEY", "secret-123", 1);
        Gateway gateway{config};
        gateway.complete(gateway.make_request(simple_bundle()));
        auto seen = server.captured();
        REQUIRE(seen.size() == 1);
        CHECK(seen[0].authorization == "Bearer secret-123");

        unsetenv("RCV_TEST_API_KEY");
        Gateway no_key{config};
        CHECK_THROWS_AS(no_key.complete(no_key.make_request(simple_bundle())), GatewayError);
    }

    TEST_CASE("no auth header when no key variable is configured") {
        MockChatServer server;
        Gateway gateway{mock_endpoint(server)};
        gateway.complete(gateway.make_request(simple_bundle()));
        CHECK(server.captured()[0].authorization.empty());
    }

    TEST_CASE("cache replays without touching the endpoint") {
        MockChatServer server;
        fs::path cache = temp_dir("gw-cache");
        Gateway gateway{mock_endpoint(server, cache.string())};
        GenRequest request = gateway.make_request(simple_bundle());
        GenResponse first = gateway.complete(request);
        CHECK_FALSE(first.cached);
        CHECK(server.call_count() == 1);
        GenResponse second = gateway.complete(request);
        CHECK(second.cached);
        CHECK(second.text == first.text);
        CHECK(second.finish == FinishReason::Stop);
        CHECK(server.call_count() == 1);

        // A fresh gateway over the same directory also replays.
        Gateway rebuilt{mock_endpoint(server, cache.string())};
        CHECK(rebuilt.complete(request).cached);
        CHECK(server.call_count() == 1);
    }

    TEST_CASE("seed tags split the cache") {
        MockChatServer server;
        fs::path cache = temp_dir("gw-seeds");
        Gateway gateway{mock_endpoint(server, cache.string())};
        gateway.complete(gateway.make_request(simple_bundle(), "sample-1"));
        gateway.complete(gateway.make_request(simple_bundle(), "sample-2"));
        CHECK(server.call_count() == 2);
        CHECK(Gateway::cache_key(gateway.make_request(simple_bundle(), "sample-1")) !=
              Gateway::cache_key(gateway.make_request(simple_bundle(), "sample-2")));
        CHECK(Gateway::cache_key(gateway.make_request(simple_bundle(), "sample-1")) ==
              Gateway::cache_key(gateway.make_request(simple_bundle(), "sample-1")));
    }

    TEST_CASE("error responses are not cached") {
        MockChatServer server;
        fs::path cache = temp_dir("gw-err-cache");
        EndpointConfig config = mock_endpoint(server, cache.string());
        config.retry_budget = 1;
        Gateway gateway{config};
        server.script_statuses({500});
        GenResponse failed = gateway.complete(gateway.make_request(simple_bundle()));
        CHECK(failed.finish == FinishReason::Error);
        GenResponse ok = gateway.complete(gateway.make_request(simple_bundle()));
        CHECK(ok.finish == FinishReason::Stop);
        CHECK_FALSE(ok.cached);  // the failure must not have poisoned the cache
        CHECK(server.call_count() == 2);
    }

    TEST_CASE("transient server errors are retried with a counted tally") {
        MockChatServer server;
        server.script_statuses({500, 500, 500});
        Gateway gateway{mock_endpoint(server)};
        GenResponse resp = gateway.complete(gateway.make_request(simple_bundle()));
        CHECK(resp.finish == FinishReason::Stop);
        CHECK(resp.retries == 3);
        CHECK(server.call_count() == 4);
    }

    TEST_CASE("429 is retryable") {
        MockChatServer server;
        server.script_statuses({429});
        Gateway gateway{mock_endpoint(server)};
        GenResponse resp = gateway.complete(gateway.make_request(simple_bundle()));
        CHECK(resp.finish == FinishReason::Stop);
        CHECK(resp.retries == 1);
    }

    TEST_CASE("other 4xx aborts immediately") {
        MockChatServer server;
        server.script_statuses({403});
        Gateway gateway{mock_endpoint(server)};
        CHECK_THROWS_AS(gateway.complete(gateway.make_request(simple_bundle())), GatewayError);
        CHECK(server.call_count() == 1);  // no retry on a config/auth problem
    }

    TEST_CASE("exhausted retry budget degrades to an error response") {
        MockChatServer server;
        server.script_statuses({500, 500, 500, 500, 500});
        EndpointConfig config = mock_endpoint(server);
        config.retry_budget = 3;
        Gateway gateway{config};
        GenResponse resp = gateway.complete(gateway.make_request(simple_bundle()));
        CHECK(resp.finish == FinishReason::Error);
        CHECK_FALSE(resp.error.empty());
        CHECK(server.call_count() == 3);
    }

    TEST_CASE("batch preserves order under a single lane") {
        MockChatServer server;
        server.set_responder([](const rcvtest::CapturedChatRequest& req) {
            return "echo:" + req.user;
        });
        EndpointConfig config = mock_endpoint(server);
        config.max_in_flight = 1;
        Gateway gateway{config};
        std::vector<GenRequest> requests;
        for (int i = 0; i < 6; ++i) {
            requests.push_back(gateway.make_request(simple_bundle("item-" + std::to_string(i))));
        }
        auto responses = gateway.complete_batch(requests);
        REQUIRE(responses.size() == 6);
        for (int i = 0; i < 6; ++i) {
            CHECK(responses[i].text == "echo:item-" + std::to_string(i));
        }
        CHECK(server.max_in_flight_seen() == 1);
    }

    TEST_CASE("concurrent batch bounds in-flight requests and preserves order") {
        MockChatServer server;
        server.set_responder([](const rcvtest::CapturedChatRequest& req) {
            return "echo:" + req.user;
        });
        server.set_random_latency(15);
        Gateway gateway{mock_endpoint(server)};
        std::vector<GenRequest> requests;
        for (int i = 0; i < 12; ++i) {
            requests.push_back(gateway.make_request(simple_bundle("b-" + std::to_string(i))));
        }
        auto responses = gateway.complete_batch(requests, 4);
        REQUIRE(responses.size() == 12);
        for (int i = 0; i < 12; ++i) {
            CHECK(responses[i].text == "echo:b-" + std::to_string(i));
        }
        CHECK(server.max_in_flight_seen() <= 4);
        CHECK(server.call_count() == 12);
    }

    TEST_CASE("per-item failures stay in their slot") {
        MockChatServer server;
        server.script_statuses({500, 500, 500, 500, 500});  // first item eats the whole script
        EndpointConfig config = mock_endpoint(server);
        config.retry_budget = 5;
        config.max_in_flight = 1;
        Gateway gateway{config};
        std::vector<GenRequest> requests = {
            gateway.make_request(simple_bundle("first")),
            gateway.make_request(simple_bundle("second")),
        };
        auto responses = gateway.complete_batch(requests);
        REQUIRE(responses.size() == 2);
        CHECK(responses[0].finish == FinishReason::Error);
        CHECK(responses[1].finish == FinishReason::Stop);
    }

    TEST_CASE("empty batch is a no-op") {
        MockChatServer server;
        Gateway gateway{mock_endpoint(server)};
        CHECK(gateway.complete_batch({}).empty());
        CHECK(server.call_count() == 0);
    }

    TEST_CASE("unreachable endpoint degrades to an error response") {
        EndpointConfig config;
        config.base_url = "http://127.0.0.1:9";  // discard port; nothing listens
        config.model = "m";
        config.retry_budget = 2;
        config.retry_initial_delay_ms = 1;
        config.connect_timeout_s = 1;
        Gateway gateway{config};
        GenResponse resp = gateway.complete(gateway.make_request(simple_bundle()));
        CHECK(resp.finish == FinishReason::Error);
        CHECK_FALSE(resp.error.empty());
    }
}

TEST_SUITE("sft_net") {
    TEST_CASE("teacher sees the conditioning suffix; a compliant path concludes gold") {
        MockChatServer server;
        server.set_responder([](const rcvtest::CapturedChatRequest& req) -> std::string {
            if (req.system.find("Answer: {support}.") != std::string::npos) {
                return rcvtest::kSampleTeacherPath;
            }
            return "{refute}";
        });
        Gateway teacher{mock_endpoint(server)};
        auto record = make_record("t1", S, Dataset::Hover2, rcvtest::kSampleClaim,
                                  rcvtest::kSampleContext);
        ReasoningPath path = generate_teacher_path(record, Setting::WithoutNEI, teacher);
        CHECK(path.verdict == Verdict{S});
        CHECK(path.step_count == 7);
        auto seen = server.captured();
        REQUIRE(seen.size() == 1);
        CHECK(seen[0].system.find("The ground truth is") != std::string::npos);
        CHECK(seen[0].system.find("Answer: {support}.") != std::string::npos);
    }

    TEST_CASE("a defiant teacher is caught by cleaning, not by generation") {
        MockChatServer server;
        server.set_responder([](const rcvtest::CapturedChatRequest&) {
            return std::string{"I disagree: {refute}"};
        });
        Gateway teacher{mock_endpoint(server)};
        auto record = make_record("t2", S);
        ReasoningPath path = generate_teacher_path(record, Setting::WithoutNEI, teacher);
        CHECK(path.verdict == Verdict{R});
        auto [records, report] = clean_and_emit({{record, path}}, Setting::WithoutNEI);
        CHECK(records.empty());
        CHECK(report.dropped_by_verdict == 1);
    }

    TEST_CASE("gold outside the setting's domain is rejected before any call") {
        MockChatServer server;
        Gateway teacher{mock_endpoint(server)};
        auto record = make_record("t3", N, Dataset::Healthver);
        CHECK_THROWS_AS(generate_teacher_path(record, Setting::WithoutNEI, teacher),
                        DomainError);
        CHECK(server.call_count() == 0);
    }

    TEST_CASE("batch generation conditions every record on its own gold") {
        MockChatServer server;
        server.set_responder(compliant_responder());
        Gateway teacher{mock_endpoint(server)};
        std::vector<ClaimRecord> corpus = {make_record("b1", S), make_record("b2", R),
                                           make_record("b3", S)};
        TeacherBatch batch = generate_teacher_paths(corpus, teacher);
        CHECK(batch.errors.empty());
        REQUIRE(batch.paths.size() == 3);
        CHECK(concludes(batch.paths[0].second, S));
        CHECK(concludes(batch.paths[1].second, R));
        CHECK(concludes(batch.paths[2].second, S));
        auto [records, report] = clean_and_emit(batch.paths);
        CHECK(records.size() == 3);
        CHECK(report.retained == 3);
    }

    TEST_CASE("unconditioned sampling stops at the first gold-concluding sample") {
        MockChatServer server;
        auto counter = std::make_shared<std::atomic<int>>(0);
        server.set_responder([counter](const rcvtest::CapturedChatRequest&) -> std::string {
            int n = counter->fetch_add(1);
            return n == 0 ? "{refute}" : "{support}";
        });
        Gateway teacher{mock_endpoint(server)};
        auto record = make_record("u1", S);
        auto path = generate_teacher_path_unconditioned(record, Setting::WithoutNEI, teacher);
        REQUIRE(path.has_value());
        CHECK(path->verdict == Verdict{S});
        CHECK(server.call_count() == 2);  // second sample hit; later ones never requested
        // The request must not leak the answer.
        for (const auto& req : server.captured()) {
            CHECK(req.system.find("ground truth") == std::string::npos);
            CHECK(req.temperature == doctest::Approx(kAblationTemperature));
        }
    }

    TEST_CASE("unconditioned sampling exhausts its budget and reports failure") {
        MockChatServer server;
        server.set_responder(
            [](const rcvtest::CapturedChatRequest&) { return std::string{"{refute}"}; });
        Gateway teacher{mock_endpoint(server)};
        auto record = make_record("u2", S);
        auto path =
            generate_teacher_path_unconditioned(record, Setting::WithoutNEI, teacher, 5);
        CHECK_FALSE(path.has_value());
        CHECK(server.call_count() == 5);
    }

    TEST_CASE("unconditioned first-shot success costs one call") {
        MockChatServer server;
        Gateway teacher{mock_endpoint(server)};  // default responder answers {support}
        auto record = make_record("u3", S);
        auto path = generate_teacher_path_unconditioned(record, Setting::WithoutNEI, teacher);
        REQUIRE(path.has_value());
        CHECK(server.call_count() == 1);
    }
}

TEST_SUITE("dpo_net") {
    TEST_CASE("conditioned set fills one slot per admissible label") {
        MockChatServer server;
        server.set_responder(compliant_responder());
        Gateway generator{mock_endpoint(server)};

        auto two = generate_conditioned_set(make_record("c1", S), Setting::WithoutNEI, generator);
        CHECK(two.paths.size() == 2);
        REQUIRE(two.paths.at(S).has_value());
        REQUIRE(two.paths.at(R).has_value());
        CHECK(two.paths.at(S)->verdict == Verdict{S});
        CHECK(two.paths.at(R)->verdict == Verdict{R});
        CHECK(server.call_count() == 2);

        server.reset_counters();
        auto three = generate_conditioned_set(make_record("c2", N, Dataset::Healthver),
                                              Setting::WithNEI, generator);
        CHECK(three.paths.size() == 3);
        CHECK(server.call_count() == 3);
        CHECK(three.paths.at(N)->verdict == Verdict{N});
    }

    TEST_CASE("a fully compliant record yields the expected pair") {
        MockChatServer server;
        server.set_responder(compliant_responder());
        Gateway generator{mock_endpoint(server)};
        auto set = generate_conditioned_set(make_record("c3", S), Setting::WithoutNEI, generator);
        auto pairs = build_pairs(set);
        REQUIRE(pairs.size() == 1);
        CHECK(pairs[0].rule == "refute<support");
        CHECK(pairs[0].chosen == set.paths.at(S)->text);
        CHECK(pairs[0].rejected == set.paths.at(R)->text);

        std::map<VeracityLabel, Verdict> observed;
        for (const auto& [label, path] : set.paths) observed[label] = path->verdict;
        auto expected =
            rcvtest::oracle_pairs(S, observed, Setting::WithoutNEI, PairMode::Default);
        REQUIRE(expected.size() == 1);
        CHECK(expected[0].chosen == S);
        CHECK(expected[0].rejected == R);
    }

    TEST_CASE("a generator that ignores conditioning yields no default-mode pairs") {
        MockChatServer server;  // default responder: always {support}
        Gateway generator{mock_endpoint(server)};
        auto set = generate_conditioned_set(make_record("c4", S), Setting::WithoutNEI, generator);
        CHECK(build_pairs(set).empty());
    }

    TEST_CASE("run_round tallies rules and writes an honest manifest") {
        MockChatServer server;
        server.set_responder(compliant_responder());
        Gateway generator{mock_endpoint(server)};
        std::vector<ClaimRecord> corpus = {make_record("r1", S), make_record("r2", R)};
        RoundResult round = run_round(corpus, 1, generator);
        CHECK(round.pairs.size() == 2);
        CHECK(round.manifest.round_index == 1);
        CHECK(round.manifest.generator_model == "mock-model");
        CHECK(round.manifest.pair_count == 2);
        CHECK(round.manifest.records_processed == 2);
        CHECK(round.manifest.record_errors == 0);
        CHECK(round.manifest.per_rule.at("refute<support") == 1);
        CHECK(round.manifest.per_rule.at("support<refute") == 1);

        CHECK_THROWS_AS(run_round(corpus, 0, generator), DomainError);
    }

    TEST_CASE("endpoint failures during a round are counted, not fatal") {
        MockChatServer server;
        server.set_responder(compliant_responder());
        // Enough 403s to poison every label of the first record.
        server.script_statuses({403, 403});
        EndpointConfig config = mock_endpoint(server);
        config.max_in_flight = 1;
        Gateway generator{config};
        std::vector<ClaimRecord> corpus = {make_record("e1", S), make_record("e2", R)};
        RoundResult round = run_round(corpus, 1, generator);
        CHECK(round.manifest.records_processed == 2);
        CHECK(round.manifest.record_errors == 1);
        CHECK(round.pairs.size() == 1);
    }

    TEST_CASE("warm cache replays a round byte-identically") {
        MockChatServer server;
        server.set_responder(compliant_responder());
        fs::path cache = temp_dir("dpo-cache");
        Gateway generator{mock_endpoint(server, cache.string())};
        std::vector<ClaimRecord> corpus = {make_record("w1", S), make_record("w2", R)};
        RoundResult first = run_round(corpus, 1, generator);
        int calls_after_first = server.call_count();
        RoundResult second = run_round(corpus, 1, generator);
        CHECK(server.call_count() == calls_after_first);
        CHECK(dpo_to_jsonl(first.pairs) == dpo_to_jsonl(second.pairs));
    }

    TEST_CASE("unconditioned pairing needs exactly one gold-concluding sample") {
        auto record = make_record("p1", S);

        MockChatServer split;
        auto counter = std::make_shared<std::atomic<int>>(0);
        split.set_responder([counter](const rcvtest::CapturedChatRequest&) -> std::string {
            return counter->fetch_add(1) == 0 ? "path A {support}" : "path B {refute}";
        });
        Gateway split_gw{mock_endpoint(split)};
        auto pairs = build_pairs_unconditioned(record, Setting::WithoutNEI, split_gw);
        REQUIRE(pairs.size() == 1);
        CHECK(pairs[0].chosen == "path A {support}");
        CHECK(pairs[0].rejected == "path B {refute}");
        CHECK(pairs[0].rule == "refute<support");
        CHECK(split.call_count() == 2);

        MockChatServer agree;  // both samples conclude support
        Gateway agree_gw{mock_endpoint(agree)};
        CHECK(build_pairs_unconditioned(record, Setting::WithoutNEI, agree_gw).empty());

        MockChatServer invalid;
        auto counter2 = std::make_shared<std::atomic<int>>(0);
        invalid.set_responder([counter2](const rcvtest::CapturedChatRequest&) -> std::string {
            return counter2->fetch_add(1) == 0 ? "no verdict here" : "sure: {support}";
        });
        Gateway invalid_gw{mock_endpoint(invalid)};
        auto inv_pairs = build_pairs_unconditioned(record, Setting::WithoutNEI, invalid_gw);
        REQUIRE(inv_pairs.size() == 1);
        CHECK(inv_pairs[0].chosen == "sure: {support}");
        CHECK(inv_pairs[0].rejected == "no verdict here");
        CHECK(inv_pairs[0].rule == "invalid<support");
    }
}

TEST_SUITE("decompose_net") {
    TEST_CASE("two-pass decomposition with decontextualization") {
        MockChatServer server;
        server.set_responder([](const rcvtest::CapturedChatRequest& req) -> std::string {
            if (req.system.find("decomposes claims") != std::string::npos) {
                return "- he was born in 1970\n- he directed the film";
            }
            if (req.system.find("self-contained") != std::string::npos) {
                return "- John Doe was born in 1970\n- John Doe directed the film";
            }
            return "{support}";
        });
        Gateway decomposer{mock_endpoint(server)};
        auto record = make_record("d1", S, Dataset::Hover2,
                                  "John Doe, born 1970, directed the film.");
        Decomposition decomp = decompose(record, decomposer);
        CHECK_FALSE(decomp.fallback);
        REQUIRE(decomp.subs.size() == 2);
        CHECK(decomp.subs[0].text == "John Doe was born in 1970");
        CHECK(decomp.subs[1].text == "John Doe directed the film");
        CHECK(decomp.subs[0].parent_id == "d1");
        CHECK(decomp.subs[0].index == 0);
        CHECK(decomp.subs[1].index == 1);
        CHECK(server.call_count() == 2);

        // The decontextualize turn carried both the claim and the raw items.
        auto seen = server.captured();
        REQUIRE(seen.size() == 2);
        CHECK(seen[1].user.find(record.claim) != std::string::npos);
        CHECK(seen[1].user.find("- he was born in 1970") != std::string::npos);
    }

    TEST_CASE("decontextualization count mismatch keeps the raw items") {
        MockChatServer server;
        server.set_responder([](const rcvtest::CapturedChatRequest& req) -> std::string {
            if (req.system.find("decomposes claims") != std::string::npos) {
                return "- first fact\n- second fact";
            }
            return "- merged into one line";
        });
        Gateway decomposer{mock_endpoint(server)};
        Decomposition decomp = decompose(make_record("d2", S), decomposer);
        REQUIRE(decomp.subs.size() == 2);
        CHECK(decomp.subs[0].text == "first fact");
        CHECK_FALSE(decomp.fallback);
    }

    TEST_CASE("unparseable decomposition falls back to the whole claim") {
        MockChatServer server;
        server.set_responder(
            [](const rcvtest::CapturedChatRequest&) { return std::string{"\n\n"}; });
        Gateway decomposer{mock_endpoint(server)};
        auto record = make_record("d3", S, Dataset::Hover2, "claim stays whole");
        Decomposition decomp = decompose(record, decomposer);
        CHECK(decomp.fallback);
        REQUIRE(decomp.subs.size() == 1);
        CHECK(decomp.subs[0].text == "claim stays whole");
        CHECK(server.call_count() == 1);  // no second pass after a fallback
    }

    TEST_CASE("single-line output is a single sub-claim") {
        MockChatServer server;
        server.set_responder([](const rcvtest::CapturedChatRequest& req) -> std::string {
            if (req.system.find("decomposes claims") != std::string::npos) {
                return "- only fact";
            }
            return "- only fact";
        });
        Gateway decomposer{mock_endpoint(server)};
        Decomposition decomp = decompose(make_record("d4", S), decomposer);
        CHECK_FALSE(decomp.fallback);
        REQUIRE(decomp.subs.size() == 1);
        CHECK(decomp.subs[0].text == "only fact");
    }

    TEST_CASE("sub-claims are verified independently against shared evidence") {
        MockChatServer server;
        server.set_responder([](const rcvtest::CapturedChatRequest& req) -> std::string {
            if (req.user.find("alpha") != std::string::npos) return "{support}";
            return "{refute}";
        });
        Gateway verifier{mock_endpoint(server)};
        std::vector<SubClaim> subs = {{"alpha holds", "p", 0}, {"beta holds", "p", 1}};
        SubVerdictSet verdicts =
            verify_subclaims(subs, "shared evidence", Setting::WithoutNEI, verifier);
        CHECK(verdicts.parent_id == "p");
        REQUIRE(verdicts.verdicts.size() == 2);
        CHECK(verdicts.verdicts[0] == Verdict{S});
        CHECK(verdicts.verdicts[1] == Verdict{R});
        CHECK(aggregate(verdicts, Setting::WithoutNEI) == R);
        for (const auto& req : server.captured()) {
            CHECK(req.user.find("shared evidence") != std::string::npos);
        }
    }

    TEST_CASE("an endpoint failure leaves an invalid slot, not a crash") {
        MockChatServer server;
        server.script_statuses({403});
        EndpointConfig config = mock_endpoint(server);
        config.max_in_flight = 1;
        Gateway verifier{config};
        std::vector<SubClaim> subs = {{"first", "p", 0}, {"second", "p", 1}};
        SubVerdictSet verdicts = verify_subclaims(subs, "e", Setting::WithoutNEI, verifier);
        REQUIRE(verdicts.verdicts.size() == 2);
        CHECK(verdicts.verdicts[0] == std::nullopt);
        CHECK(verdicts.verdicts[1] == Verdict{S});
    }

    TEST_CASE("verifying no sub-claims asks nothing") {
        MockChatServer server;
        Gateway verifier{mock_endpoint(server)};
        SubVerdictSet verdicts = verify_subclaims({}, "e", Setting::WithoutNEI, verifier);
        CHECK(verdicts.verdicts.empty());
        CHECK(server.call_count() == 0);
    }
}

TEST_SUITE("retrieval") {
    TEST_CASE("fixture client replays and counts") {
        FixtureSearchClient client{{{"q1", {"snippet one", "http://a"}}}};
        SearchHit hit = client.search("q1");
        CHECK(hit.snippet == "snippet one");
        CHECK(client.search("missing").snippet.empty());
        CHECK(client.call_count() == 2);
    }

    TEST_CASE("one search per sub-claim, assembled in order") {
        MockChatServer chat;
        chat.set_responder([](const rcvtest::CapturedChatRequest& req) -> std::string {
            if (req.system.find("decomposes claims") != std::string::npos) {
                return "- fact one\n- fact two";
            }
            return "- fact one\n- fact two";
        });
        Gateway decomposer{mock_endpoint(chat)};
        FixtureSearchClient search{{{"fact one", {"para one", "u1"}},
                                    {"fact two", {"para two", "u2"}}}};
        RetrievedEvidence evidence =
            retrieve_for_claim(make_record("r1", S), decomposer, search);
        CHECK(search.call_count() == 2);
        REQUIRE(evidence.per_sub.size() == 2);
        CHECK(evidence.per_sub[0].query == "fact one");
        CHECK(evidence.per_sub[1].paragraph == "para two");
        CHECK(evidence.assembled == "para one\n\npara two");
        CHECK_FALSE(evidence.empty_assembly);
    }

    TEST_CASE("duplicate paragraphs are kept once") {
        MockChatServer chat;
        chat.set_responder([](const rcvtest::CapturedChatRequest& req) -> std::string {
            return req.system.find("decomposes claims") != std::string::npos
                       ? "- fact one\n- fact two"
                       : "- fact one\n- fact two";
        });
        Gateway decomposer{mock_endpoint(chat)};
        FixtureSearchClient search{{{"fact one", {"same para", "u1"}},
                                    {"fact two", {"same para", "u2"}}}};
        RetrievedEvidence evidence =
            retrieve_for_claim(make_record("r2", S), decomposer, search);
        CHECK(evidence.assembled == "same para");
    }

    TEST_CASE("a search outage yields an empty assembly, flagged") {
        MockChatServer chat;  // fallback decomposition: the claim itself
        chat.set_responder(
            [](const rcvtest::CapturedChatRequest&) { return std::string{""}; });
        Gateway decomposer{mock_endpoint(chat)};
        FixtureSearchClient search{{}};
        auto record = make_record("r3", S);
        RetrievedEvidence evidence = retrieve_for_claim(record, decomposer, search);
        CHECK(evidence.empty_assembly);
        CHECK(evidence.assembled.empty());
        CHECK_THROWS_AS(to_openbook_record(record, evidence), DomainError);
    }

    TEST_CASE("open-book records keep gold but flag the evidence swap") {
        auto record = make_record("r4", R);
        RetrievedEvidence evidence;
        evidence.parent_id = "r4";
        evidence.assembled = "retrieved text";
        ClaimRecord swapped = to_openbook_record(record, evidence);
        CHECK(swapped.id == "r4");
        CHECK(swapped.gold == R);
        CHECK(swapped.evidence == "retrieved text");
        CHECK(swapped.openbook_evidence);
        CHECK_FALSE(record.openbook_evidence);
    }

    TEST_CASE("http client speaks the provider wire format") {
        MockSearchServer server;
        server.add_result("test query", "wire snippet", "http://source");
        setenv("RCV_TEST_SEARCH_KEY", "sk-1", 1);
        SearchConfig config;
        config.base_url = server.base_url();
        config.api_key_env = "RCV_TEST_SEARCH_KEY";
        HttpSearchClient client{config};
        SearchHit hit = client.search("test query");
        CHECK(hit.snippet == "wire snippet");
        CHECK(hit.url == "http://source");
        CHECK(client.search("unknown query").snippet.empty());
    }

    TEST_CASE("answer box fills in when organic results are empty") {
        MockSearchServer server;
        server.add_answer_box("boxed query", "boxed snippet");
        setenv("RCV_TEST_SEARCH_KEY", "sk-1", 1);
        SearchConfig config;
        config.base_url = server.base_url();
        config.api_key_env = "RCV_TEST_SEARCH_KEY";
        HttpSearchClient client{config};
        CHECK(client.search("boxed query").snippet == "boxed snippet");
    }

    TEST_CASE("transient search failures are retried") {
        MockSearchServer server;
        server.add_result("flaky", "recovered", "u");
        server.script_failures({500});
        setenv("RCV_TEST_SEARCH_KEY", "sk-1", 1);
        SearchConfig config;
        config.base_url = server.base_url();
        config.api_key_env = "RCV_TEST_SEARCH_KEY";
        HttpSearchClient client{config};
        CHECK(client.search("flaky").snippet == "recovered");
        CHECK(server.call_count() == 2);
    }

    TEST_CASE("missing search key is a hard error") {
        unsetenv("RCV_MISSING_SEARCH_KEY");
        SearchConfig config;
        config.base_url = "http://127.0.0.1:1";
        config.api_key_env = "RCV_MISSING_SEARCH_KEY";
        HttpSearchClient client{config};
        CHECK_THROWS(client.search("anything"));
    }

    TEST_CASE("day-stamped cache short-circuits repeat queries") {
        fs::path cache = temp_dir("search-cache");
        auto inner = std::make_unique<FixtureSearchClient>(
            std::map<std::string, SearchHit>{{"q", {"cached snippet", "u"}}});
        FixtureSearchClient* raw = inner.get();
        CachingSearchClient client{std::move(inner), cache.string()};
        CHECK(client.search("q").snippet == "cached snippet");
        CHECK(client.search("q").snippet == "cached snippet");
        CHECK(raw->call_count() == 1);
        // A different query is its own entry.
        CHECK(client.search("other").snippet.empty());
        CHECK(raw->call_count() == 2);
    }
}

TEST_SUITE("pipeline_net") {
    RunConfig base_config(const MockChatServer& server, const fs::path& work,
                          const std::string& extra_endpoints = "",
                          const std::string& extra_top = "") {
        std::string doc = R"({
            "setting": "without_nei",
            "cache_dir": ")" + (work / "cache").string() + R"(",
            "output_dir": ")" + (work / "out").string() + R"(",
            "base_model": "base-7b",
            "corpus": [")" + (work / "corpus.jsonl").string() + R"("],
            "endpoints": {
                "teacher": {"base_url": ")" + server.base_url() + R"(", "model": "mock-teacher"},
                "verifier": {"base_url": ")" + server.base_url() + R"(", "model": "mock-verifier"},
                "decomposer": {"base_url": ")" + server.base_url() + R"(", "model": "mock-decomposer"})" +
            extra_endpoints + R"(
            })" + extra_top + R"(
        })";
        return parse_run_config(doc);
    }

    TEST_CASE("stage 1 produces a training-ready file and manifest") {
        MockChatServer server;
        server.set_responder(compliant_responder());
        fs::path work = temp_dir("stage1");
        std::vector<ClaimRecord> corpus = {make_record("s1", S), make_record("s2", R),
                                           make_record("s3", S)};
        write_canonical(work / "corpus.jsonl", corpus);
        RunConfig config = base_config(server, work);

        Stage1Result result = run_stage1(config);
        CHECK(result.report.generated == 3);
        CHECK(result.report.retained == 3);

        std::string bytes = read_file(result.sft_path);
        auto lines = split_lines(bytes);
        REQUIRE(lines.size() == 4);  // header + 3 records
        auto header = json::parse(lines[0]);
        CHECK(header["_header"]["stage"] == "stage1-sft");
        CHECK(header["_header"]["config_hash"] == run_config_hash(config));
        auto first = json::parse(lines[1]);
        CHECK(first.contains("instruction"));
        CHECK(first.contains("input"));
        CHECK(first.contains("output"));

        CHECK(result.manifest.stage == "SFT");
        CHECK(result.manifest.base_model == "base-7b");
        CHECK(result.manifest.lora_rank == 64);
        CHECK(result.manifest.learning_rate == 5e-5);
        CHECK(result.manifest.epochs == 3);
        CHECK(result.manifest.dataset_sha256 == sha256_hex(bytes));

        // The sibling manifest file round-trips.
        TrainingManifest from_disk =
            training_manifest_from_json(read_file(result.sft_path + ".manifest.json"));
        CHECK(from_disk.stage == "SFT");
        CHECK(from_disk.dataset_sha256 == result.manifest.dataset_sha256);
    }

    TEST_CASE("a warm cache makes stage 1 reproducible byte for byte") {
        MockChatServer server;
        server.set_responder(compliant_responder());
        fs::path work = temp_dir("stage1-redo");
        write_canonical(work / "corpus.jsonl",
                        {make_record("a", S), make_record("b", R)});
        RunConfig config = base_config(server, work);

        Stage1Result first = run_stage1(config);
        std::string bytes_first = read_file(first.sft_path);
        int calls = server.call_count();

        fs::remove_all(work / "out");
        Stage1Result second = run_stage1(config);
        CHECK(read_file(second.sft_path) == bytes_first);
        CHECK(server.call_count() == calls);  // every completion replayed from cache
    }

    TEST_CASE("defiant teacher paths are dropped, and the report says so") {
        MockChatServer server;  // default responder: {support} regardless of conditioning
        fs::path work = temp_dir("stage1-drop");
        write_canonical(work / "corpus.jsonl",
                        {make_record("a", S), make_record("b", R)});
        RunConfig config = base_config(server, work);
        Stage1Result result = run_stage1(config);
        CHECK(result.report.generated == 2);
        CHECK(result.report.retained == 1);  // the gold-refute record came back {support}
        CHECK(result.report.dropped_by_verdict == 1);
        auto lines = split_lines(read_file(result.sft_path));
        CHECK(lines.size() == 2);  // header + the one retained record
    }

    TEST_CASE("stage 2 walks rounds and demands each generator endpoint") {
        MockChatServer server;
        server.set_responder(compliant_responder());
        fs::path work = temp_dir("stage2");
        write_canonical(work / "corpus.jsonl",
                        {make_record("a", S), make_record("b", R)});
        std::string generators = R"(,
                "generator_round_1": {"base_url": ")" + server.base_url() +
                                 R"(", "model": "sft-model"},
                "generator_round_2": {"base_url": ")" + server.base_url() +
                                 R"(", "model": "dpo-r1-model"})";
        RunConfig config = base_config(server, work, generators);

        std::vector<Stage2Round> rounds = run_stage2(config);
        REQUIRE(rounds.size() == 2);
        CHECK(rounds[0].round_manifest.round_index == 1);
        CHECK(rounds[0].round_manifest.generator_model == "sft-model");
        CHECK(rounds[1].round_manifest.generator_model == "dpo-r1-model");
        CHECK(rounds[0].round_manifest.pair_count == 2);
        CHECK(rounds[0].training_manifest.stage == "DPO-round-1");
        CHECK(rounds[1].training_manifest.stage == "DPO-round-2");
        CHECK(rounds[0].training_manifest.learning_rate == 5e-6);
        CHECK(rounds[0].training_manifest.lora_rank == 64);

        auto lines = split_lines(read_file(rounds[0].dpo_path));
        REQUIRE(lines.size() == 3);  // header + one pair per record
        auto header = json::parse(lines[0]);
        CHECK(header["_header"]["stage"] == "stage2-dpo-round-1");
        auto pair = json::parse(lines[1]);
        CHECK(pair.contains("chosen"));
        CHECK(pair.contains("rejected"));

        // Round manifests land next to the pair files.
        CHECK(fs::exists(rounds[0].dpo_path + ".round.json"));
        CHECK(fs::exists(rounds[1].dpo_path + ".manifest.json"));
    }

    TEST_CASE("a missing generator endpoint names the training handshake") {
        MockChatServer server;
        server.set_responder(compliant_responder());
        fs::path work = temp_dir("stage2-missing");
        write_canonical(work / "corpus.jsonl", {make_record("a", S)});
        std::string generators = R"(,
                "generator_round_1": {"base_url": ")" + server.base_url() +
                                 R"(", "model": "sft-model"})";
        RunConfig config = base_config(server, work, generators);  // rounds defaults to 2
        CHECK_THROWS_WITH_AS(run_stage2(config), doctest::Contains("generator_round_2"),
                             PipelineError);
    }

    TEST_CASE("closed-book evaluation scores a fixed-answer verifier correctly") {
        MockChatServer server;  // always {support}
        fs::path work = temp_dir("eval-fixed");
        std::vector<ClaimRecord> corpus = {make_record("e1", S), make_record("e2", S),
                                           make_record("e3", R)};
        write_canonical(work / "corpus.jsonl", corpus);
        RunConfig config = base_config(server, work);

        EvalRunResult result =
            run_eval(config, corpus, EvalMode::CotVerify, EvidenceMode::Gold, "run.jsonl");
        // support: P=2/3, R=1 -> F1 0.8; refute: never predicted -> 0. Macro 40.00.
        CHECK(format_score(result.report.macro_f1_x100) == "40.00");
        CHECK(result.report.total == 3);

        auto lines = split_lines(read_file(result.run_path));
        REQUIRE(lines.size() == 4);
        auto row = json::parse(lines[1]);
        CHECK(row["id"] == "e1");
        CHECK(row["predicted"] == "support");
        CHECK(row["raw_path"] == "{support}");

        // The run file re-scores to the same number.
        EvalReport rescored = score_run_file(result.run_path, corpus, config.setting);
        CHECK(format_score(rescored.macro_f1_x100) == "40.00");
    }

    TEST_CASE("a verifier that reads the claim scores perfectly") {
        MockChatServer server;
        server.set_responder([](const rcvtest::CapturedChatRequest& req) -> std::string {
            return req.user.find("flag-refute") != std::string::npos ? "{refute}"
                                                                     : "{support}";
        });
        fs::path work = temp_dir("eval-echo");
        std::vector<ClaimRecord> corpus = {
            make_record("e1", S, Dataset::Hover2, "plain claim"),
            make_record("e2", R, Dataset::Hover2, "claim with flag-refute marker"),
        };
        write_canonical(work / "corpus.jsonl", corpus);
        RunConfig config = base_config(server, work);
        EvalRunResult result =
            run_eval(config, corpus, EvalMode::CotVerify, EvidenceMode::Gold, "run.jsonl");
        CHECK(format_score(result.report.macro_f1_x100) == "100.00");
    }

    TEST_CASE("endpoint failures surface as invalid predictions") {
        MockChatServer server;
        server.script_statuses({500, 500, 500, 500, 500});
        fs::path work = temp_dir("eval-fail");
        std::vector<ClaimRecord> corpus = {make_record("e1", S), make_record("e2", R)};
        write_canonical(work / "corpus.jsonl", corpus);
        RunConfig config = base_config(server, work);
        config.max_in_flight = 1;
        EvalRunResult result =
            run_eval(config, corpus, EvalMode::CotVerify, EvidenceMode::Gold, "run.jsonl");
        CHECK(result.report.invalid_count == 1);
    }

    TEST_CASE("decompose-verify evaluation leaves a full audit trail") {
        MockChatServer server;
        server.set_responder([](const rcvtest::CapturedChatRequest& req) -> std::string {
            if (req.system.find("decomposes claims") != std::string::npos) {
                return "- part one\n- part two";
            }
            if (req.system.find("self-contained") != std::string::npos) {
                return "- part one\n- part two";
            }
            return "{support}";
        });
        fs::path work = temp_dir("eval-decomp");
        std::vector<ClaimRecord> corpus = {make_record("e1", S), make_record("e2", S)};
        write_canonical(work / "corpus.jsonl", corpus);
        RunConfig config = base_config(server, work);
        EvalRunResult result = run_eval(config, corpus, EvalMode::DecomposeVerify,
                                        EvidenceMode::Gold, "baseline.jsonl");
        CHECK(format_score(result.report.macro_f1_x100) == "100.00");

        auto rows = read_baseline_run(result.run_path);
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].sub_claims == std::vector<std::string>{"part one", "part two"});
        CHECK(rows[0].sub_verdicts ==
              std::vector<Verdict>{Verdict{S}, Verdict{S}});
        CHECK(rows[0].aggregated == S);
        CHECK_FALSE(rows[0].decompose_fallback);

        // The same file doubles as a scoreable run file.
        EvalReport rescored = score_run_file(result.run_path, corpus, config.setting);
        CHECK(format_score(rescored.macro_f1_x100) == "100.00");
    }

    TEST_CASE("open-book evaluation verifies against retrieved text") {
        MockChatServer server;
        server.set_responder([](const rcvtest::CapturedChatRequest& req) -> std::string {
            if (req.system.find("decomposes claims") != std::string::npos) {
                return "- probe fact";
            }
            if (req.system.find("self-contained") != std::string::npos) {
                return "- probe fact";
            }
            // Verifier: support iff the fixture snippet actually arrived.
            return req.user.find("FIXTURE-EVIDENCE") != std::string::npos ? "{support}"
                                                                          : "{refute}";
        });
        fs::path work = temp_dir("eval-openbook");
        std::vector<ClaimRecord> corpus = {make_record("e1", S)};
        write_canonical(work / "corpus.jsonl", corpus);

        json fixture = {{"probe fact", {{"snippet", "FIXTURE-EVIDENCE"}, {"url", "u"}}}};
        write_file_atomic(work / "search.json", fixture.dump());
        std::string extra_top = R"(,
            "search": {"fixture_file": ")" + (work / "search.json").string() + R"("})";
        RunConfig config = base_config(server, work, "", extra_top);

        EvalRunResult result = run_eval(config, corpus, EvalMode::CotVerify,
                                        EvidenceMode::Openbook, "openbook.jsonl");
        CHECK(format_score(result.report.macro_f1_x100) == "100.00");

        // An empty fixture starves retrieval; the verifier then sees no
        // evidence and (here) refutes, so the score collapses.
        fs::path work2 = temp_dir("eval-openbook-empty");
        write_canonical(work2 / "corpus.jsonl", corpus);
        write_file_atomic(work2 / "search.json", "{}");
        std::string extra2 = R"(,
            "search": {"fixture_file": ")" + (work2 / "search.json").string() + R"("})";
        RunConfig config2 = base_config(server, work2, "", extra2);
        EvalRunResult starved = run_eval(config2, corpus, EvalMode::CotVerify,
                                         EvidenceMode::Openbook, "openbook.jsonl");
        CHECK(format_score(starved.report.macro_f1_x100) == "0.00");
    }
}
