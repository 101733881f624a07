#pragma once

#include <string>
#include <vector>

#include "rcv/corpus.hpp"
#include "rcv/gateway.hpp"
#include "rcv/labels.hpp"

namespace rcv {

struct SubClaim {
    std::string text;
    std::string parent_id;
    int index = 0;
};

struct Decomposition {
    std::vector<SubClaim> subs;
    bool fallback = false;  // decomposer output was unparseable; subs = [original claim]
};

struct SubVerdictSet {
    std::string parent_id;
    std::vector<Verdict> verdicts;  // one slot per sub-claim
};

// Templates are swappable; the embedded defaults follow the two-step
// decompose/decontextualize scheme of FactScore-style pipelines
// (see README for the upstream pointer). Placeholders: {CLAIM}, {SUBCLAIMS}.
struct DecomposePrompts {
    std::string decompose_template;
    std::string decontextualize_template;
};

DecomposePrompts default_decompose_prompts();
DecomposePrompts load_decompose_prompts(const std::string& dir);

// Splits list-formatted model output into items: numbered, dashed, or bulleted
// lines, one item per line; blank lines ignored.
std::vector<std::string> parse_list_output(const std::string& text);

Decomposition decompose(const ClaimRecord& record, Gateway& decomposer,
                        const DecomposePrompts& prompts = default_decompose_prompts());

SubVerdictSet verify_subclaims(const std::vector<SubClaim>& subs, const std::string& evidence,
                               Setting setting, Gateway& verifier);

// WithoutNEI: conjunction — Support iff every slot is Support, else Refute.
// WithNEI: priority fold Refute > NEI > Support.
// Invalid slots count as Refute (WithoutNEI) or NEI (WithNEI).
VeracityLabel aggregate(const SubVerdictSet& verdicts, Setting setting);

struct DecomposeVerifyRow {
    std::string id;
    std::vector<std::string> sub_claims;
    std::vector<Verdict> sub_verdicts;
    VeracityLabel aggregated = VeracityLabel::Support;
    bool decompose_fallback = false;
};

void write_baseline_run(const std::string& path, const std::vector<DecomposeVerifyRow>& rows);
std::vector<DecomposeVerifyRow> read_baseline_run(const std::string& path);

}  // namespace rcv
