#include "rcv/pipeline.hpp"

#include <filesystem>

#include <json.hpp>

#include "rcv/prompts.hpp"
#include "rcv/util.hpp"

namespace rcv {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

namespace fs = std::filesystem;

EndpointSpec parse_endpoint(const json& doc) {
    EndpointSpec spec;
    spec.base_url = doc.at("base_url").get<std::string>();
    spec.model = doc.at("model").get<std::string>();
    spec.api_key_env = doc.value("api_key_env", std::string{});
    if (doc.contains("temperature")) spec.temperature = doc["temperature"].get<double>();
    if (doc.contains("max_tokens")) spec.max_tokens = doc["max_tokens"].get<int>();
    return spec;
}

ordered_json endpoint_to_json(const EndpointSpec& spec) {
    ordered_json doc;
    doc["base_url"] = spec.base_url;
    doc["model"] = spec.model;
    doc["api_key_env"] = spec.api_key_env;
    if (spec.temperature) doc["temperature"] = *spec.temperature;
    if (spec.max_tokens) doc["max_tokens"] = *spec.max_tokens;
    return doc;
}

// Canonical serialization used for the config hash: std::map ordering makes
// endpoint enumeration deterministic, so equal configs hash equally.
ordered_json config_to_json(const RunConfig& config) {
    ordered_json doc;
    doc["setting"] = setting_to_string(config.setting);
    doc["cache_dir"] = config.cache_dir;
    doc["output_dir"] = config.output_dir;
    doc["max_in_flight"] = config.max_in_flight;
    doc["rounds"] = config.rounds;
    doc["stage2_sample_limit"] = config.stage2_sample_limit;
    doc["base_model"] = config.base_model;
    doc["corpus"] = config.corpus_files;
    ordered_json endpoints = ordered_json::object();
    for (const auto& [role, spec] : config.endpoints) endpoints[role] = endpoint_to_json(spec);
    doc["endpoints"] = endpoints;
    doc["ablations"] = {{"unconditioned_stage1", config.ablations.unconditioned_stage1},
                        {"unconditioned_stage2", config.ablations.unconditioned_stage2},
                        {"strict_paper_pairing", config.ablations.strict_paper_pairing}};
    doc["search"] = {{"base_url", config.search.base_url},
                     {"api_key_env", config.search.api_key_env},
                     {"cache_dir", config.search.cache_dir},
                     {"fixture_file", config.search.fixture_file}};
    return doc;
}

void write_output(const fs::path& path, const std::string& stage,
                  const std::string& config_hash, const std::string& body) {
    fs::create_directories(path.parent_path());
    write_file_atomic(path.string(), header_line(stage, config_hash) + body);
}

std::string stage_path(const RunConfig& config, const std::string& name) {
    return (fs::path(config.output_dir) / name).string();
}

}  // namespace

std::string header_line(const std::string& stage, const std::string& config_hash) {
    ordered_json header;
    header["_header"] = {{"stage", stage}, {"config_hash", config_hash}};
    return header.dump() + "\n";
}

RunConfig parse_run_config(const std::string& content) {
    json doc;
    try {
        doc = json::parse(content);
    } catch (const std::exception& e) {
        throw PipelineError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig config;
    if (doc.contains("setting")) {
        auto setting = setting_from_string(doc["setting"].get<std::string>());
        if (!setting) {
            throw PipelineError("config setting must be \"without_nei\" or \"with_nei\"");
        }
        config.setting = *setting;
    }
    config.cache_dir = doc.value("cache_dir", config.cache_dir);
    config.output_dir = doc.value("output_dir", config.output_dir);
    config.max_in_flight = doc.value("max_in_flight", config.max_in_flight);
    config.rounds = doc.value("rounds", config.rounds);
    config.stage2_sample_limit = doc.value("stage2_sample_limit", config.stage2_sample_limit);
    config.base_model = doc.value("base_model", std::string{});
    if (doc.contains("corpus")) {
        for (const auto& entry : doc["corpus"]) {
            config.corpus_files.push_back(entry.get<std::string>());
        }
    }
    if (doc.contains("endpoints")) {
        for (const auto& [role, spec] : doc["endpoints"].items()) {
            config.endpoints[role] = parse_endpoint(spec);
        }
    }
    if (doc.contains("ablations")) {
        const auto& ab = doc["ablations"];
        config.ablations.unconditioned_stage1 = ab.value("unconditioned_stage1", false);
        config.ablations.unconditioned_stage2 = ab.value("unconditioned_stage2", false);
        config.ablations.strict_paper_pairing = ab.value("strict_paper_pairing", false);
    }
    if (doc.contains("search")) {
        const auto& se = doc["search"];
        config.search.base_url = se.value("base_url", config.search.base_url);
        config.search.api_key_env = se.value("api_key_env", config.search.api_key_env);
        config.search.cache_dir = se.value("cache_dir", std::string{});
        config.search.fixture_file = se.value("fixture_file", std::string{});
    }
    if (config.rounds < 0) throw PipelineError("rounds must be >= 0");
    if (config.max_in_flight < 1) throw PipelineError("max_in_flight must be >= 1");
    return config;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config(read_file(path));
}

std::string run_config_hash(const RunConfig& config) {
    return sha256_hex(config_to_json(config).dump());
}

Gateway make_gateway(const RunConfig& config, const std::string& role) {
    auto it = config.endpoints.find(role);
    if (it == config.endpoints.end()) {
        throw PipelineError("no endpoint configured for role \"" + role +
                            "\"; add endpoints." + role + " to the config");
    }
    EndpointConfig ep;
    ep.base_url = it->second.base_url;
    ep.model = it->second.model;
    ep.api_key_env = it->second.api_key_env;
    ep.cache_dir = config.cache_dir.empty()
                       ? std::string{}
                       : (fs::path(config.cache_dir) / role).string();
    if (it->second.temperature) ep.temperature = *it->second.temperature;
    if (it->second.max_tokens) ep.max_tokens = *it->second.max_tokens;
    ep.max_in_flight = config.max_in_flight;
    return Gateway(ep);
}

std::unique_ptr<SearchClient> make_search_client(const RunConfig& config) {
    std::unique_ptr<SearchClient> inner;
    if (!config.search.fixture_file.empty()) {
        std::map<std::string, SearchHit> fixture;
        json doc = json::parse(read_file(config.search.fixture_file));
        for (const auto& [query, hit] : doc.items()) {
            fixture[query] = {hit.value("snippet", std::string{}),
                              hit.value("url", std::string{})};
        }
        inner = std::make_unique<FixtureSearchClient>(std::move(fixture));
    } else {
        SearchConfig sc;
        sc.base_url = config.search.base_url;
        sc.api_key_env = config.search.api_key_env;
        inner = std::make_unique<HttpSearchClient>(sc);
    }
    if (!config.search.cache_dir.empty()) {
        return std::make_unique<CachingSearchClient>(std::move(inner), config.search.cache_dir);
    }
    return inner;
}

std::vector<ClaimRecord> load_corpus(const RunConfig& config) {
    if (config.corpus_files.empty()) {
        throw PipelineError("config lists no corpus files");
    }
    std::vector<ClaimRecord> records;
    for (const auto& file : config.corpus_files) {
        auto part = read_canonical(file);
        records.insert(records.end(), part.begin(), part.end());
    }
    return records;
}

std::string training_manifest_to_json(const TrainingManifest& manifest) {
    ordered_json doc;
    doc["stage"] = manifest.stage;
    doc["dataset_file"] = manifest.dataset_file;
    doc["dataset_sha256"] = manifest.dataset_sha256;
    doc["base_model"] = manifest.base_model;
    doc["lora_rank"] = manifest.lora_rank;
    doc["learning_rate"] = manifest.learning_rate;
    doc["epochs"] = manifest.epochs;
    return doc.dump(2);
}

TrainingManifest training_manifest_from_json(const std::string& content) {
    json doc = json::parse(content);
    TrainingManifest manifest;
    manifest.stage = doc.at("stage").get<std::string>();
    manifest.dataset_file = doc.at("dataset_file").get<std::string>();
    manifest.dataset_sha256 = doc.at("dataset_sha256").get<std::string>();
    manifest.base_model = doc.value("base_model", std::string{});
    manifest.lora_rank = doc.at("lora_rank").get<int>();
    manifest.learning_rate = doc.at("learning_rate").get<double>();
    manifest.epochs = doc.at("epochs").get<int>();
    return manifest;
}

Stage1Result run_stage1(const RunConfig& config) {
    std::vector<ClaimRecord> records = load_corpus(config);
    Gateway teacher = make_gateway(config, "teacher");
    const std::string cfg_hash = run_config_hash(config);

    std::vector<std::pair<ClaimRecord, ReasoningPath>> paths;
    CleaningReport report;
    std::vector<SftRecord> sft;

    if (config.ablations.unconditioned_stage1) {
        report.generated = records.size();
        for (const auto& record : records) {
            Setting setting = dataset_setting(record.dataset);
            auto path = generate_teacher_path_unconditioned(record, setting, teacher);
            if (path) {
                paths.emplace_back(record, *path);
            } else {
                report.dropped_by_verdict += 1;  // no sample concluded gold
            }
        }
        auto [cleaned, sub_report] = clean_and_emit(paths);
        sft = std::move(cleaned);
        report.retained = sub_report.retained;
        report.dropped_invalid = sub_report.dropped_invalid;
    } else {
        TeacherBatch batch = generate_teacher_paths(records, teacher);
        if (!batch.errors.empty()) {
            throw PipelineError("stage 1 had " + std::to_string(batch.errors.size()) +
                                " generation failures (first: " + batch.errors.front() +
                                "); re-run to resume from cache");
        }
        auto [cleaned, batch_report] = clean_and_emit(batch.paths);
        sft = std::move(cleaned);
        report = batch_report;
    }

    Stage1Result result;
    result.sft_path = stage_path(config, "sft.jsonl");
    write_output(result.sft_path, "stage1-sft", cfg_hash, sft_to_jsonl(sft));
    result.report = report;

    result.manifest.stage = "SFT";
    result.manifest.dataset_file = result.sft_path;
    result.manifest.dataset_sha256 = sha256_file(result.sft_path);
    result.manifest.base_model = config.base_model;
    result.manifest.learning_rate = 5e-5;
    write_file_atomic(result.sft_path + ".manifest.json",
                      training_manifest_to_json(result.manifest));
    return result;
}

std::vector<Stage2Round> run_stage2(const RunConfig& config) {
    std::vector<Stage2Round> rounds;
    if (config.rounds == 0) return rounds;

    std::vector<ClaimRecord> records = load_corpus(config);
    if (config.stage2_sample_limit > 0 &&
        records.size() > static_cast<std::size_t>(config.stage2_sample_limit)) {
        records.resize(static_cast<std::size_t>(config.stage2_sample_limit));
    }
    const std::string cfg_hash = run_config_hash(config);
    const PairMode mode =
        config.ablations.strict_paper_pairing ? PairMode::StrictPaper : PairMode::Default;

    for (int i = 1; i <= config.rounds; ++i) {
        const std::string role = "generator_round_" + std::to_string(i);
        if (config.endpoints.find(role) == config.endpoints.end()) {
            throw PipelineError(
                "round " + std::to_string(i) + " generator endpoint is not registered; train on "
                "the previous round's output, then add endpoints." + role +
                " to the config and re-run (earlier rounds' files are kept)");
        }
        Gateway generator = make_gateway(config, role);

        RoundResult round;
        if (config.ablations.unconditioned_stage2) {
            round.manifest.round_index = i;
            round.manifest.generator_model = generator.config().model;
            for (const auto& record : records) {
                Setting setting = dataset_setting(record.dataset);
                auto pairs = build_pairs_unconditioned(record, setting, generator);
                round.manifest.records_processed += 1;
                for (auto& pair : pairs) {
                    round.manifest.per_rule[pair.rule] += 1;
                    round.pairs.push_back(std::move(pair));
                }
            }
            round.manifest.pair_count = round.pairs.size();
        } else {
            round = run_round(records, i, generator, mode);
        }

        Stage2Round out;
        out.dpo_path = stage_path(config, "dpo_round_" + std::to_string(i) + ".jsonl");
        write_output(out.dpo_path, "stage2-dpo-round-" + std::to_string(i), cfg_hash,
                     dpo_to_jsonl(round.pairs));
        out.round_manifest = round.manifest;
        write_file_atomic(out.dpo_path + ".round.json", manifest_to_json(round.manifest));

        out.training_manifest.stage = "DPO-round-" + std::to_string(i);
        out.training_manifest.dataset_file = out.dpo_path;
        out.training_manifest.dataset_sha256 = sha256_file(out.dpo_path);
        out.training_manifest.base_model = config.base_model;
        out.training_manifest.learning_rate = 5e-6;
        write_file_atomic(out.dpo_path + ".manifest.json",
                          training_manifest_to_json(out.training_manifest));
        rounds.push_back(std::move(out));
    }
    return rounds;
}

EvalRunResult run_eval(const RunConfig& config, const std::vector<ClaimRecord>& records,
                       EvalMode mode, EvidenceMode evidence, const std::string& run_name) {
    if (records.empty()) throw PipelineError("eval corpus is empty");
    Gateway verifier = make_gateway(config, "verifier");
    const std::string cfg_hash = run_config_hash(config);
    const Setting setting = config.setting;

    std::vector<ClaimRecord> working = records;
    if (evidence == EvidenceMode::Openbook) {
        Gateway decomposer = make_gateway(config, "decomposer");
        auto search = make_search_client(config);
        DecomposePrompts prompts = default_decompose_prompts();
        for (auto& record : working) {
            RetrievedEvidence retrieved =
                retrieve_for_claim(record, decomposer, *search, prompts);
            if (retrieved.empty_assembly) {
                record.evidence.clear();  // verified against nothing; parser yields Invalid
                record.openbook_evidence = true;
            } else {
                record = to_openbook_record(record, retrieved);
            }
        }
    }

    EvalRunResult result;
    result.run_path = stage_path(config, run_name);
    fs::create_directories(fs::path(result.run_path).parent_path());

    if (mode == EvalMode::CotVerify) {
        std::vector<GenRequest> requests;
        requests.reserve(working.size());
        for (const auto& record : working) {
            requests.push_back(verifier.make_request(build_verify_prompt(record, setting)));
        }
        std::vector<GenResponse> responses = verifier.complete_batch(requests);

        std::vector<RunPrediction> preds;
        preds.reserve(working.size());
        std::string body;
        for (std::size_t i = 0; i < working.size(); ++i) {
            RunPrediction p;
            p.id = working[i].id;
            if (responses[i].finish == FinishReason::Error) {
                p.predicted = std::nullopt;
            } else {
                p.predicted = parse_path(responses[i].text, setting).verdict;
                p.raw_path = responses[i].text;
            }
            ordered_json doc;
            doc["id"] = p.id;
            doc["predicted"] = verdict_to_string(p.predicted);
            if (!p.raw_path.empty()) doc["raw_path"] = p.raw_path;
            body += doc.dump();
            body += '\n';
            preds.push_back(std::move(p));
        }
        write_output(result.run_path, "eval-cot-verify", cfg_hash, body);
        result.report = score_run(preds, records, setting);
    } else {
        Gateway decomposer = make_gateway(config, "decomposer");
        DecomposePrompts prompts = default_decompose_prompts();
        std::vector<RunPrediction> preds;
        std::string body;
        for (const auto& record : working) {
            Decomposition decomp = decompose(record, decomposer, prompts);
            SubVerdictSet verdicts =
                verify_subclaims(decomp.subs, record.evidence, setting, verifier);
            VeracityLabel aggregated = aggregate(verdicts, setting);

            DecomposeVerifyRow row;
            row.id = record.id;
            for (const auto& sub : decomp.subs) row.sub_claims.push_back(sub.text);
            row.sub_verdicts = verdicts.verdicts;
            row.aggregated = aggregated;
            row.decompose_fallback = decomp.fallback;

            ordered_json doc;
            doc["id"] = row.id;
            doc["sub_claims"] = row.sub_claims;
            ordered_json vs = ordered_json::array();
            for (const auto& v : row.sub_verdicts) vs.push_back(verdict_to_string(v));
            doc["sub_verdicts"] = vs;
            doc["aggregate"] = label_to_string(row.aggregated);
            doc["predicted"] = label_to_string(row.aggregated);
            doc["decompose_fallback"] = row.decompose_fallback;
            body += doc.dump();
            body += '\n';

            preds.push_back({record.id, aggregated, std::string{}});
        }
        write_output(result.run_path, "eval-decompose-verify", cfg_hash, body);
        result.report = score_run(preds, records, setting);
    }
    return result;
}

}  // namespace rcv
