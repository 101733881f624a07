#include "rcv/sft.hpp"

#include <json.hpp>

#include "rcv/prompts.hpp"
#include "rcv/util.hpp"

namespace rcv {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

SftRecord make_sft_record(const ClaimRecord& record, const ReasoningPath& path,
                          Setting setting) {
    PromptBundle plain = build_verify_prompt(record, setting);
    return {plain.system, plain.user, path.text};
}

std::pair<std::vector<SftRecord>, CleaningReport> clean_impl(
    const std::vector<std::pair<ClaimRecord, ReasoningPath>>& paths,
    std::optional<Setting> forced_setting) {
    std::vector<SftRecord> out;
    CleaningReport report;
    report.generated = paths.size();
    for (const auto& [record, path] : paths) {
        if (!path.verdict.has_value()) {
            report.dropped_invalid += 1;
            continue;
        }
        if (!concludes(path, record.gold)) {
            report.dropped_by_verdict += 1;
            continue;
        }
        report.retained += 1;
        Setting setting =
            forced_setting.has_value() ? *forced_setting : dataset_setting(record.dataset);
        out.push_back(make_sft_record(record, path, setting));
    }
    return {std::move(out), report};
}

}  // namespace

ReasoningPath generate_teacher_path(const ClaimRecord& record, Setting setting,
                                    Gateway& teacher) {
    if (!admits(setting, record.gold)) {
        throw DomainError("gold label not admissible under setting for record " + record.id);
    }
    PromptBundle bundle = build_conditioned_prompt(record, setting, record.gold);
    GenResponse resp = teacher.complete(teacher.make_request(bundle));
    if (resp.finish == FinishReason::Error) {
        throw GatewayError("teacher generation failed for record " + record.id + ": " +
                           resp.error);
    }
    return parse_path(resp.text, setting);
}

std::optional<ReasoningPath> generate_teacher_path_unconditioned(const ClaimRecord& record,
                                                                 Setting setting,
                                                                 Gateway& teacher,
                                                                 int max_samples) {
    if (!admits(setting, record.gold)) {
        throw DomainError("gold label not admissible under setting for record " + record.id);
    }
    PromptBundle bundle = build_verify_prompt(record, setting);
    for (int i = 1; i <= max_samples; ++i) {
        GenRequest req = teacher.make_request(bundle, "sample-" + std::to_string(i));
        req.temperature = kAblationTemperature;
        GenResponse resp = teacher.complete(req);
        if (resp.finish == FinishReason::Error) {
            continue;  // a failed sample does not forfeit the remaining budget
        }
        ReasoningPath path = parse_path(resp.text, setting);
        if (concludes(path, record.gold)) return path;
    }
    return std::nullopt;
}

TeacherBatch generate_teacher_paths(const std::vector<ClaimRecord>& records, Gateway& teacher) {
    TeacherBatch out;

    std::vector<GenRequest> requests;
    requests.reserve(records.size());
    for (const auto& record : records) {
        Setting setting = dataset_setting(record.dataset);
        requests.push_back(
            teacher.make_request(build_conditioned_prompt(record, setting, record.gold)));
    }
    std::vector<GenResponse> responses = teacher.complete_batch(requests);

    for (std::size_t i = 0; i < records.size(); ++i) {
        if (responses[i].finish == FinishReason::Error) {
            out.errors.push_back("record " + records[i].id + ": " + responses[i].error);
            continue;
        }
        Setting setting = dataset_setting(records[i].dataset);
        out.paths.emplace_back(records[i], parse_path(responses[i].text, setting));
    }
    return out;
}

std::pair<std::vector<SftRecord>, CleaningReport> clean_and_emit(
    const std::vector<std::pair<ClaimRecord, ReasoningPath>>& paths, Setting setting) {
    return clean_impl(paths, setting);
}

std::pair<std::vector<SftRecord>, CleaningReport> clean_and_emit(
    const std::vector<std::pair<ClaimRecord, ReasoningPath>>& paths) {
    return clean_impl(paths, std::nullopt);
}

std::string sft_to_jsonl(const std::vector<SftRecord>& records) {
    std::string body;
    for (const auto& rec : records) {
        ordered_json doc;
        doc["instruction"] = rec.instruction;
        doc["input"] = rec.input;
        doc["output"] = rec.output;
        body += doc.dump();
        body += '\n';
    }
    return body;
}

std::vector<SftRecord> sft_from_jsonl(const std::string& content) {
    std::vector<SftRecord> out;
    for (const std::string& line : split_lines(content)) {
        if (line.empty()) continue;
        json doc = json::parse(line);
        if (doc.contains("_header")) continue;
        out.push_back({doc.at("instruction").get<std::string>(),
                       doc.at("input").get<std::string>(),
                       doc.at("output").get<std::string>()});
    }
    return out;
}

}  // namespace rcv
