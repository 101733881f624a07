#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rcv/corpus.hpp"
#include "rcv/gateway.hpp"
#include "rcv/verdict.hpp"

namespace rcv {

// One conditionally generated path per admissible label; a missing slot means
// the endpoint failed for that label and every pair touching it is skipped.
struct ConditionedSet {
    ClaimRecord record;
    Setting setting = Setting::WithoutNEI;
    std::map<VeracityLabel, std::optional<ReasoningPath>> paths;
};

struct PreferencePair {
    std::string instruction;  // unconditioned system text
    std::string input;
    std::string chosen;
    std::string rejected;
    std::string rule;  // tally key, "rejected<chosen" in label short form
};

enum class PairMode {
    // Chosen side must conclude the gold label AND the rejected side must
    // conclude its conditioned (incorrect) label, so a conditioning-defying
    // path that argues the truth is never punished. The sixth three-label
    // rule is applied in its symmetric form.
    Default,
    // The printed rules verbatim: indicator on one side only, no gate on the
    // rejected side, and the sixth three-label rule exactly as printed (its
    // chosen side need not conclude gold).
    StrictPaper,
};

struct RoundManifest {
    int round_index = 1;
    std::string generator_model;
    std::size_t pair_count = 0;
    std::map<std::string, std::size_t> per_rule;  // tally per PreferencePair::rule
    std::size_t records_processed = 0;
    std::size_t record_errors = 0;
};

ConditionedSet generate_conditioned_set(const ClaimRecord& record, Setting setting,
                                        Gateway& generator);

std::vector<PreferencePair> build_pairs(const ConditionedSet& set,
                                        PairMode mode = PairMode::Default);

struct RoundResult {
    std::vector<PreferencePair> pairs;
    RoundManifest manifest;
};

// One self-improvement round: conditional generation per record (in its
// dataset's label domain), pairing, manifest tallies. The gateway must point
// at the model produced by the previous round.
RoundResult run_round(const std::vector<ClaimRecord>& records, int round_index,
                      Gateway& generator, PairMode mode = PairMode::Default);

// Ablation: two unconditioned samples; a pair exists iff exactly one of them
// concludes gold.
std::vector<PreferencePair> build_pairs_unconditioned(const ClaimRecord& record, Setting setting,
                                                      Gateway& generator);

// JSON-lines, keys exactly "instruction","input","chosen","rejected" per line.
std::string dpo_to_jsonl(const std::vector<PreferencePair>& pairs);
std::vector<PreferencePair> dpo_from_jsonl(const std::string& content);

std::string manifest_to_json(const RoundManifest& manifest);

}  // namespace rcv
