#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rcv/corpus.hpp"
#include "rcv/decompose.hpp"
#include "rcv/dpo.hpp"
#include "rcv/evaluator.hpp"
#include "rcv/gateway.hpp"
#include "rcv/retrieval.hpp"
#include "rcv/sft.hpp"

namespace rcv {

struct EndpointSpec {
    std::string base_url;
    std::string model;
    std::string api_key_env;
    std::optional<double> temperature;
    std::optional<int> max_tokens;
};

struct AblationFlags {
    bool unconditioned_stage1 = false;
    bool unconditioned_stage2 = false;
    bool strict_paper_pairing = false;
};

struct SearchSpec {
    std::string base_url = "https://google.serper.dev";
    std::string api_key_env = "SERPER_API_KEY";
    std::string cache_dir;
    std::string fixture_file;  // when set, search replays this fixture instead of going out
};

struct RunConfig {
    Setting setting = Setting::WithoutNEI;
    std::string cache_dir = ".rcv-cache";
    std::string output_dir = "out";
    int max_in_flight = 4;
    int rounds = 2;
    int stage2_sample_limit = 0;  // 0 = full corpus every round
    std::string base_model;
    std::vector<std::string> corpus_files;
    std::map<std::string, EndpointSpec> endpoints;  // role -> endpoint
    AblationFlags ablations;
    SearchSpec search;
};

class PipelineError : public std::runtime_error {
public:
    explicit PipelineError(const std::string& what) : std::runtime_error(what) {}
};

RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& content);
std::string run_config_hash(const RunConfig& config);

Gateway make_gateway(const RunConfig& config, const std::string& role);
std::unique_ptr<SearchClient> make_search_client(const RunConfig& config);

std::vector<ClaimRecord> load_corpus(const RunConfig& config);

// Handoff record for the external trainer; hyperparameters are fixed by the
// method and recorded verbatim.
struct TrainingManifest {
    std::string stage;  // "SFT" or "DPO-round-<i>"
    std::string dataset_file;
    std::string dataset_sha256;
    std::string base_model;
    int lora_rank = 64;
    double learning_rate = 0.0;
    int epochs = 3;
};

std::string training_manifest_to_json(const TrainingManifest& manifest);
TrainingManifest training_manifest_from_json(const std::string& content);

struct Stage1Result {
    std::string sft_path;
    CleaningReport report;
    TrainingManifest manifest;
};

Stage1Result run_stage1(const RunConfig& config);

struct Stage2Round {
    std::string dpo_path;
    RoundManifest round_manifest;
    TrainingManifest training_manifest;
};

std::vector<Stage2Round> run_stage2(const RunConfig& config);

enum class EvalMode { CotVerify, DecomposeVerify };
enum class EvidenceMode { Gold, Openbook };

struct EvalRunResult {
    std::string run_path;
    EvalReport report;
};

EvalRunResult run_eval(const RunConfig& config, const std::vector<ClaimRecord>& records,
                       EvalMode mode, EvidenceMode evidence, const std::string& run_name);

// First line of every pipeline output file: a JSON object under "_header"
// naming the stage and the config hash. Deliberately carries no timestamps so
// re-runs with a warm cache are byte-identical.
std::string header_line(const std::string& stage, const std::string& config_hash);

}  // namespace rcv
