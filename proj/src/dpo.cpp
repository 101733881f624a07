#include "rcv/dpo.hpp"

#include <json.hpp>

#include "rcv/prompts.hpp"
#include "rcv/util.hpp"

namespace rcv {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string short_label(VeracityLabel l) {
    switch (l) {
        case VeracityLabel::Support: return "support";
        case VeracityLabel::Refute: return "refute";
        case VeracityLabel::NotEnoughInfo: return "nei";
    }
    return "?";
}

std::string rule_key(VeracityLabel rejected, VeracityLabel chosen) {
    return short_label(rejected) + "<" + short_label(chosen);
}

bool slot_concludes(const ConditionedSet& set, VeracityLabel slot, VeracityLabel label) {
    auto it = set.paths.find(slot);
    return it != set.paths.end() && it->second.has_value() && concludes(*it->second, label);
}

bool slot_present(const ConditionedSet& set, VeracityLabel slot) {
    auto it = set.paths.find(slot);
    return it != set.paths.end() && it->second.has_value();
}

const std::string& slot_text(const ConditionedSet& set, VeracityLabel slot) {
    return set.paths.at(slot)->text;
}

// A rule is "emit (path_rejected ≺ path_chosen) when path_indicator concludes
// the gold label". In every printed rule but the sixth, indicator == chosen.
struct PairRule {
    VeracityLabel indicator;
    VeracityLabel rejected;
    VeracityLabel chosen;
};

// Rejected-label order per gold label, which fixes pair order in the output:
// support → (refute, nei); nei → (refute, support); refute → (support, nei).
std::vector<VeracityLabel> rejected_order(VeracityLabel gold) {
    switch (gold) {
        case VeracityLabel::Support:
            return {VeracityLabel::Refute, VeracityLabel::NotEnoughInfo};
        case VeracityLabel::NotEnoughInfo:
            return {VeracityLabel::Refute, VeracityLabel::Support};
        case VeracityLabel::Refute:
            return {VeracityLabel::Support, VeracityLabel::NotEnoughInfo};
    }
    return {};
}

void append_pair(std::vector<PreferencePair>& out, const ConditionedSet& set,
                 VeracityLabel rejected, VeracityLabel chosen) {
    const std::string& chosen_text = slot_text(set, chosen);
    const std::string& rejected_text = slot_text(set, rejected);
    if (chosen_text == rejected_text) return;  // degenerate pair carries no preference
    PromptBundle plain = build_verify_prompt(set.record, set.setting);
    out.push_back({plain.system, plain.user, chosen_text, rejected_text,
                   rule_key(rejected, chosen)});
}

std::vector<PreferencePair> build_pairs_default(const ConditionedSet& set) {
    std::vector<PreferencePair> out;
    const VeracityLabel gold = set.record.gold;
    if (!slot_concludes(set, gold, gold)) return out;
    for (VeracityLabel rej : rejected_order(gold)) {
        if (!admits(set.setting, rej)) continue;
        if (!slot_concludes(set, rej, rej)) continue;  // rejected side must obey its conditioning
        append_pair(out, set, rej, gold);
    }
    return out;
}

std::vector<PreferencePair> build_pairs_strict(const ConditionedSet& set) {
    const VeracityLabel gold = set.record.gold;
    constexpr VeracityLabel S = VeracityLabel::Support;
    constexpr VeracityLabel R = VeracityLabel::Refute;
    constexpr VeracityLabel N = VeracityLabel::NotEnoughInfo;

    std::vector<PairRule> rules;
    if (set.setting == Setting::WithoutNEI) {
        rules = {{S, R, S}, {R, S, R}};
    } else {
        // The sixth rule is kept exactly as printed, indicator on the
        // support-conditioned path while the pair prefers the refute path.
        rules = {{S, R, S}, {S, N, S}, {N, R, N}, {N, S, N}, {R, S, R}, {S, N, R}};
    }

    std::vector<PreferencePair> out;
    for (const PairRule& rule : rules) {
        if (!slot_concludes(set, rule.indicator, gold)) continue;
        if (!slot_present(set, rule.rejected) || !slot_present(set, rule.chosen)) continue;
        append_pair(out, set, rule.rejected, rule.chosen);
    }
    return out;
}

}  // namespace

ConditionedSet generate_conditioned_set(const ClaimRecord& record, Setting setting,
                                        Gateway& generator) {
    ConditionedSet set;
    set.record = record;
    set.setting = setting;

    std::vector<VeracityLabel> labels = admissible_labels(setting);
    std::vector<GenRequest> requests;
    requests.reserve(labels.size());
    for (VeracityLabel label : labels) {
        requests.push_back(
            generator.make_request(build_conditioned_prompt(record, setting, label),
                                   "cond-" + short_label(label)));
    }
    std::vector<GenResponse> responses = generator.complete_batch(requests);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (responses[i].finish == FinishReason::Error) {
            set.paths[labels[i]] = std::nullopt;
        } else {
            set.paths[labels[i]] = parse_path(responses[i].text, setting);
        }
    }
    return set;
}

std::vector<PreferencePair> build_pairs(const ConditionedSet& set, PairMode mode) {
    return mode == PairMode::Default ? build_pairs_default(set) : build_pairs_strict(set);
}

RoundResult run_round(const std::vector<ClaimRecord>& records, int round_index,
                      Gateway& generator, PairMode mode) {
    if (round_index < 1) {
        throw DomainError("round_index must be >= 1");
    }
    RoundResult result;
    result.manifest.round_index = round_index;
    result.manifest.generator_model = generator.config().model;

    for (const auto& record : records) {
        Setting setting = dataset_setting(record.dataset);
        ConditionedSet set = generate_conditioned_set(record, setting, generator);
        result.manifest.records_processed += 1;
        bool any_failed = false;
        for (const auto& [label, path] : set.paths) {
            if (!path.has_value()) any_failed = true;
        }
        if (any_failed) result.manifest.record_errors += 1;
        for (auto& pair : build_pairs(set, mode)) {
            result.manifest.per_rule[pair.rule] += 1;
            result.pairs.push_back(std::move(pair));
        }
    }
    result.manifest.pair_count = result.pairs.size();
    return result;
}

std::vector<PreferencePair> build_pairs_unconditioned(const ClaimRecord& record, Setting setting,
                                                      Gateway& generator) {
    PromptBundle bundle = build_verify_prompt(record, setting);
    std::vector<GenRequest> requests;
    for (int i = 1; i <= 2; ++i) {
        GenRequest req = generator.make_request(bundle, "pair-sample-" + std::to_string(i));
        req.temperature = 0.7;
        requests.push_back(req);
    }
    std::vector<GenResponse> responses = generator.complete_batch(requests);

    std::vector<ReasoningPath> samples;
    for (const auto& resp : responses) {
        if (resp.finish == FinishReason::Error) {
            samples.push_back({std::string{}, std::nullopt, 0});
        } else {
            samples.push_back(parse_path(resp.text, setting));
        }
    }

    bool first_ok = concludes(samples[0], record.gold);
    bool second_ok = concludes(samples[1], record.gold);
    if (first_ok == second_ok) return {};  // no contrast: both right or both non-gold

    const ReasoningPath& chosen = first_ok ? samples[0] : samples[1];
    const ReasoningPath& rejected = first_ok ? samples[1] : samples[0];
    if (chosen.text == rejected.text) return {};

    std::string rule = std::string(rejected.verdict.has_value()
                                       ? short_label(*rejected.verdict)
                                       : "invalid") +
                       "<" + short_label(record.gold);
    return {{build_verify_prompt(record, setting).system, bundle.user, chosen.text,
             rejected.text, rule}};
}

std::string dpo_to_jsonl(const std::vector<PreferencePair>& pairs) {
    std::string body;
    for (const auto& pair : pairs) {
        ordered_json doc;
        doc["instruction"] = pair.instruction;
        doc["input"] = pair.input;
        doc["chosen"] = pair.chosen;
        doc["rejected"] = pair.rejected;
        body += doc.dump();
        body += '\n';
    }
    return body;
}

std::vector<PreferencePair> dpo_from_jsonl(const std::string& content) {
    std::vector<PreferencePair> out;
    for (const std::string& line : split_lines(content)) {
        if (line.empty()) continue;
        json doc = json::parse(line);
        if (doc.contains("_header")) continue;
        out.push_back({doc.at("instruction").get<std::string>(),
                       doc.at("input").get<std::string>(),
                       doc.at("chosen").get<std::string>(),
                       doc.at("rejected").get<std::string>(),
                       std::string{}});
    }
    return out;
}

std::string manifest_to_json(const RoundManifest& manifest) {
    ordered_json doc;
    doc["round_index"] = manifest.round_index;
    doc["generator_model"] = manifest.generator_model;
    doc["pair_count"] = manifest.pair_count;
    ordered_json rules = ordered_json::object();
    for (const auto& [rule, count] : manifest.per_rule) rules[rule] = count;
    doc["per_rule"] = rules;
    doc["records_processed"] = manifest.records_processed;
    doc["record_errors"] = manifest.record_errors;
    return doc.dump(2);
}

}  // namespace rcv
