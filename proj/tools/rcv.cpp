#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rcv/corpus.hpp"
#include "rcv/decompose.hpp"
#include "rcv/evaluator.hpp"
#include "rcv/pipeline.hpp"
#include "rcv/prompts.hpp"
#include "rcv/retrieval.hpp"
#include "rcv/util.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// Errors leave a machine-readable line on stderr so wrappers can parse them.
int fail(const std::string& command, const std::string& message) {
    ordered_json doc;
    doc["error"] = {{"command", command}, {"message", message}};
    std::cerr << doc.dump() << "\n";
    return 1;
}

rcv::Dataset require_dataset(const std::string& name) {
    auto dataset = rcv::dataset_from_string(name);
    if (!dataset) throw rcv::DomainError("unknown dataset: " + name);
    return *dataset;
}

rcv::Split require_split(const std::string& name) {
    auto split = rcv::split_from_string(name);
    if (!split) throw rcv::DomainError("unknown split: " + name);
    return *split;
}

std::vector<rcv::ClaimRecord> load_records_arg(const std::vector<std::string>& files) {
    std::vector<rcv::ClaimRecord> records;
    for (const auto& file : files) {
        auto part = rcv::read_canonical(file);
        records.insert(records.end(), part.begin(), part.end());
    }
    return records;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Claim-verification fine-tuning data pipeline"};
    app.require_subcommand(1);

    // ingest
    std::string in_file, in_dataset, in_split = "train", in_output;
    auto* ingest_cmd = app.add_subcommand("ingest", "Convert a published dataset file to canonical records");
    ingest_cmd->add_option("--input", in_file, "Published dataset file (JSON or JSONL)")->required();
    ingest_cmd->add_option("--dataset", in_dataset, "Dataset name (feverous, hover2, hover3, hover4, healthver, scifact, vitaminc, llm-aggrefact)")->required();
    ingest_cmd->add_option("--split", in_split, "Split name (train, dev, test)");
    ingest_cmd->add_option("--output", in_output, "Canonical JSONL output path")->required();

    // stats
    std::vector<std::string> stats_files;
    auto* stats_cmd = app.add_subcommand("stats", "Count canonical records per dataset/split/label");
    stats_cmd->add_option("--input", stats_files, "Canonical record files")->required();

    // stage1 / stage2
    std::string cfg_path;
    auto* stage1_cmd = app.add_subcommand("stage1", "Generate and clean teacher paths; emit the SFT file");
    stage1_cmd->add_option("--config", cfg_path, "Run config JSON")->required();
    auto* stage2_cmd = app.add_subcommand("stage2", "Conditional generation and preference pairing per round");
    stage2_cmd->add_option("--config", cfg_path, "Run config JSON")->required();

    // decompose
    std::string dc_claim, dc_id = "cli";
    auto* decompose_cmd = app.add_subcommand("decompose", "Decompose one claim into sub-claims");
    decompose_cmd->add_option("--config", cfg_path, "Run config JSON")->required();
    decompose_cmd->add_option("--claim", dc_claim, "Claim text")->required();

    // retrieve
    std::string rt_corpus, rt_output;
    auto* retrieve_cmd = app.add_subcommand("retrieve", "Assemble open-book evidence for canonical records");
    retrieve_cmd->add_option("--config", cfg_path, "Run config JSON")->required();
    retrieve_cmd->add_option("--input", rt_corpus, "Canonical record file")->required();
    retrieve_cmd->add_option("--output", rt_output, "Canonical JSONL with retrieved evidence")->required();

    // verify
    std::string vf_claim, vf_evidence, vf_setting = "without_nei";
    auto* verify_cmd = app.add_subcommand("verify", "Verify one claim against evidence");
    verify_cmd->add_option("--config", cfg_path, "Run config JSON")->required();
    verify_cmd->add_option("--claim", vf_claim, "Claim text")->required();
    verify_cmd->add_option("--evidence", vf_evidence, "Evidence text")->required();
    verify_cmd->add_option("--setting", vf_setting, "without_nei or with_nei");

    // eval
    std::vector<std::string> ev_corpus;
    std::string ev_mode = "cot-verify", ev_evidence = "gold", ev_run = "eval_run.jsonl";
    auto* eval_cmd = app.add_subcommand("eval", "Run verification over a corpus and score it");
    eval_cmd->add_option("--config", cfg_path, "Run config JSON")->required();
    eval_cmd->add_option("--input", ev_corpus, "Canonical record files")->required();
    eval_cmd->add_option("--mode", ev_mode, "cot-verify or decompose-verify");
    eval_cmd->add_option("--evidence", ev_evidence, "gold or openbook");
    eval_cmd->add_option("--run-name", ev_run, "Run file name under the output dir");

    // prompts dump
    auto* prompts_cmd = app.add_subcommand("prompts", "Prompt template utilities");
    prompts_cmd->require_subcommand(1);
    std::string pr_dir = "resources/prompts";
    auto* dump_cmd = prompts_cmd->add_subcommand("dump", "Write the embedded templates to a directory");
    dump_cmd->add_option("--dir", pr_dir, "Target directory");

    // report
    std::string rp_run;
    std::vector<std::string> rp_corpus;
    std::string rp_setting = "without_nei";
    auto* report_cmd = app.add_subcommand("report", "Score an existing run file");
    report_cmd->add_option("--run", rp_run, "Run file (JSONL with id, predicted)")->required();
    report_cmd->add_option("--input", rp_corpus, "Canonical record files with gold labels")->required();
    report_cmd->add_option("--setting", rp_setting, "without_nei or with_nei");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest_cmd) {
            rcv::IngestResult result =
                rcv::ingest(in_file, require_dataset(in_dataset), require_split(in_split));
            rcv::write_canonical(in_output, result.records);
            ordered_json summary;
            summary["records"] = result.records.size();
            summary["row_errors"] = result.errors.size();
            ordered_json skipped = ordered_json::object();
            for (const auto& [reason, count] : result.skipped) skipped[reason] = count;
            summary["skipped"] = skipped;
            std::cout << summary.dump(2) << "\n";
            return result.errors.empty() ? 0 : fail("ingest", std::to_string(result.errors.size()) +
                                                    " rows could not be converted (see summary)");
        }
        if (*stats_cmd) {
            auto records = load_records_arg(stats_files);
            rcv::CorpusStats st = rcv::stats(records);
            ordered_json doc;
            doc["total"] = st.total;
            ordered_json buckets = ordered_json::array();
            for (const auto& [key, bucket] : st.per_source) {
                ordered_json b;
                b["dataset"] = rcv::dataset_to_string(key.first);
                b["split"] = rcv::split_to_string(key.second);
                b["count"] = bucket.count;
                ordered_json hist = ordered_json::object();
                for (const auto& [label, n] : bucket.histogram) {
                    hist[rcv::label_to_string(label)] = n;
                }
                b["labels"] = hist;
                buckets.push_back(b);
            }
            doc["per_source"] = buckets;
            std::cout << doc.dump(2) << "\n";
            return 0;
        }
        if (*stage1_cmd) {
            rcv::RunConfig config = rcv::load_run_config(cfg_path);
            rcv::Stage1Result result = rcv::run_stage1(config);
            ordered_json doc;
            doc["sft_file"] = result.sft_path;
            doc["generated"] = result.report.generated;
            doc["retained"] = result.report.retained;
            doc["dropped_by_verdict"] = result.report.dropped_by_verdict;
            doc["dropped_invalid"] = result.report.dropped_invalid;
            doc["manifest"] = result.sft_path + ".manifest.json";
            std::cout << doc.dump(2) << "\n";
            return 0;
        }
        if (*stage2_cmd) {
            rcv::RunConfig config = rcv::load_run_config(cfg_path);
            std::vector<rcv::Stage2Round> rounds = rcv::run_stage2(config);
            ordered_json doc = ordered_json::array();
            for (const auto& round : rounds) {
                ordered_json r;
                r["round"] = round.round_manifest.round_index;
                r["dpo_file"] = round.dpo_path;
                r["pairs"] = round.round_manifest.pair_count;
                doc.push_back(r);
            }
            std::cout << doc.dump(2) << "\n";
            return 0;
        }
        if (*decompose_cmd) {
            rcv::RunConfig config = rcv::load_run_config(cfg_path);
            rcv::Gateway decomposer = rcv::make_gateway(config, "decomposer");
            rcv::ClaimRecord record;
            record.id = dc_id;
            record.claim = dc_claim;
            rcv::Decomposition decomp = rcv::decompose(record, decomposer);
            ordered_json doc;
            doc["fallback"] = decomp.fallback;
            ordered_json subs = ordered_json::array();
            for (const auto& sub : decomp.subs) subs.push_back(sub.text);
            doc["sub_claims"] = subs;
            std::cout << doc.dump(2) << "\n";
            return 0;
        }
        if (*retrieve_cmd) {
            rcv::RunConfig config = rcv::load_run_config(cfg_path);
            rcv::Gateway decomposer = rcv::make_gateway(config, "decomposer");
            auto search = rcv::make_search_client(config);
            auto records = rcv::read_canonical(rt_corpus);
            std::vector<rcv::ClaimRecord> out;
            std::size_t empty_count = 0;
            for (const auto& record : records) {
                rcv::RetrievedEvidence evidence =
                    rcv::retrieve_for_claim(record, decomposer, *search);
                if (evidence.empty_assembly) {
                    ++empty_count;
                    continue;
                }
                out.push_back(rcv::to_openbook_record(record, evidence));
            }
            rcv::write_canonical(rt_output, out);
            ordered_json doc;
            doc["retrieved"] = out.size();
            doc["empty_assembly"] = empty_count;
            std::cout << doc.dump(2) << "\n";
            return 0;
        }
        if (*verify_cmd) {
            rcv::RunConfig config = rcv::load_run_config(cfg_path);
            auto setting = rcv::setting_from_string(vf_setting);
            if (!setting) return fail("verify", "unknown setting: " + vf_setting);
            rcv::Gateway verifier = rcv::make_gateway(config, "verifier");
            rcv::PromptBundle bundle = rcv::build_verify_prompt(vf_claim, vf_evidence, *setting);
            rcv::GenResponse resp = verifier.complete(verifier.make_request(bundle));
            if (resp.finish == rcv::FinishReason::Error) return fail("verify", resp.error);
            rcv::ReasoningPath path = rcv::parse_path(resp.text, *setting);
            ordered_json doc;
            doc["verdict"] = rcv::verdict_to_string(path.verdict);
            doc["steps"] = path.step_count;
            doc["path"] = path.text;
            std::cout << doc.dump(2) << "\n";
            return 0;
        }
        if (*eval_cmd) {
            rcv::RunConfig config = rcv::load_run_config(cfg_path);
            auto records = load_records_arg(ev_corpus);
            rcv::EvalMode mode;
            if (ev_mode == "cot-verify") {
                mode = rcv::EvalMode::CotVerify;
            } else if (ev_mode == "decompose-verify") {
                mode = rcv::EvalMode::DecomposeVerify;
            } else {
                return fail("eval", "unknown mode: " + ev_mode);
            }
            rcv::EvidenceMode evidence;
            if (ev_evidence == "gold") {
                evidence = rcv::EvidenceMode::Gold;
            } else if (ev_evidence == "openbook") {
                evidence = rcv::EvidenceMode::Openbook;
            } else {
                return fail("eval", "unknown evidence mode: " + ev_evidence);
            }
            rcv::EvalRunResult result = rcv::run_eval(config, records, mode, evidence, ev_run);
            std::cout << rcv::render_report_table(result.report);
            std::cout << "run file: " << result.run_path << "\n";
            return 0;
        }
        if (*dump_cmd) {
            rcv::dump_template_resources(pr_dir);
            auto mismatches = rcv::verify_template_resources(pr_dir);
            if (!mismatches.empty()) {
                return fail("prompts dump", "dumped templates failed their hash check");
            }
            std::cout << "wrote " << rcv::all_template_kinds().size() << " templates to "
                      << pr_dir << "\n";
            return 0;
        }
        if (*report_cmd) {
            auto setting = rcv::setting_from_string(rp_setting);
            if (!setting) return fail("report", "unknown setting: " + rp_setting);
            auto records = load_records_arg(rp_corpus);
            rcv::EvalReport report = rcv::score_run_file(rp_run, records, *setting);
            std::cout << rcv::render_report_table(report);
            std::cout << rcv::report_to_json(report) << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        return fail(app.get_subcommands().empty() ? "rcv"
                                                  : app.get_subcommands().front()->get_name(),
                    e.what());
    }
    return fail("rcv", "no subcommand handled");
}
