#include "rcv/prompts.hpp"

#include "rcv/util.hpp"
#include "rcv/verdict.hpp"

namespace rcv {

namespace {

constexpr std::string_view kVerifyWithoutNei =
    R"(Task: Validate the following claim using the provided context.

Your goal is to determine whether the claim can be supported by the context. Choose between "support" or "refute".

Instructions:
1. Analyze the claim step by step, verifying each crucial component in the claim as they appear.

2. Structure your reasoning on crucial components in the claim in detailed steps, from 1 to a maximum of 10. Make sure each step is the smallest possible logical unit necessary for validation.

3. Ensure that your reasoning correlates consistently with your conclusion. Use "##" to format each step clearly, e.g., "## Reasoning Step 1".

4. Finally, conclude with either "support" or "refute" enclosed in a pair of curly braces, noting the overall judgment regarding the claim.)";

constexpr std::string_view kVerifyWithNei =
    R"(Task: Validate the following claim using the provided context.

Your goal is to determine whether the claim can be supported with the context. Choose between "support", "refute", or "not enough information".

Instructions:

1. Analyze the claim step by step, verifying each crucial component in the claim as they appear.

2. Structure your reasoning on crucial components in the claim in detailed steps, from 1 to a maximum of 10. Make sure each step is the smallest possible logical unit necessary for validation.

3. Ensure that your reasoning correlates consistently with your conclusion. Use "##" to format each step clearly, e.g., "## Reasoning Step 1".

4. Finally, conclude with "support", "refute", or "not enough information" enclosed in a pair of curly braces, noting the overall judgment regarding the claim.)";

constexpr std::string_view kConditionSuffix =
    R"(The ground truth is

---

Answer: {{TARGET}}. You must generate results that match ground truth.)";

constexpr std::string_view kUserTurn =
    R"(Context: {CONTEXT}

Claim: {CLAIM})";

struct TemplateInfo {
    TemplateKind kind;
    std::string_view name;
    std::string_view text;
    std::string_view sha256;
};

constexpr TemplateInfo kTemplates[] = {
    {TemplateKind::VerifyWithoutNei, "p_ce_without_nei.txt", kVerifyWithoutNei,
     "191cd3ad36d57f650ecf499db56ec85eaede6380fc95dcb28940010763c39705"},
    {TemplateKind::VerifyWithNei, "p_ce_with_nei.txt", kVerifyWithNei,
     "febba307c1dd754164f9c74a3e2aba79c2d5f02aff0a9e37a42815594d6b9898"},
    {TemplateKind::ConditionSuffix, "p_v_suffix.txt", kConditionSuffix,
     "f4ed92f827f71953ac9e879f2a2a9f1fb2538bd22039b8c3652116a498e57474"},
    {TemplateKind::UserTurn, "user_turn.txt", kUserTurn,
     "1b3c2e86db4a22d44ad07eee44fd0165e3a6b74cb8b8ac68681f0485acd0903f"},
};

const TemplateInfo& info(TemplateKind kind) {
    for (const auto& t : kTemplates) {
        if (t.kind == kind) return t;
    }
    throw DomainError("unknown template kind");
}

}  // namespace

std::string_view template_text(TemplateKind kind) { return info(kind).text; }

std::string_view template_expected_sha256(TemplateKind kind) { return info(kind).sha256; }

std::string_view template_resource_name(TemplateKind kind) { return info(kind).name; }

std::vector<TemplateKind> all_template_kinds() {
    std::vector<TemplateKind> kinds;
    for (const auto& t : kTemplates) kinds.push_back(t.kind);
    return kinds;
}

std::vector<std::string> verify_template_resources(const std::filesystem::path& dir) {
    std::vector<std::string> problems;
    for (const auto& t : kTemplates) {
        std::filesystem::path p = dir / t.name;
        if (!std::filesystem::exists(p)) {
            problems.push_back(std::string(t.name) + ": missing");
            continue;
        }
        std::string got = sha256_hex(read_file(p));
        if (got != t.sha256) {
            problems.push_back(std::string(t.name) + ": hash mismatch (" + got + ")");
        }
    }
    return problems;
}

void dump_template_resources(const std::filesystem::path& dir) {
    for (const auto& t : kTemplates) {
        write_file_atomic(dir / t.name, t.text);
    }
}

std::string substitute(std::string_view text, std::string_view token, std::string_view value) {
    std::string out(text);
    size_t pos = 0;
    while ((pos = out.find(token, pos)) != std::string::npos) {
        out.replace(pos, token.size(), value);
        pos += value.size();
    }
    return out;
}

PromptBundle build_verify_prompt(std::string_view claim, std::string_view evidence,
                                 Setting setting) {
    PromptBundle bundle;
    bundle.system = std::string(template_text(setting == Setting::WithoutNEI
                                                  ? TemplateKind::VerifyWithoutNei
                                                  : TemplateKind::VerifyWithNei));
    std::string user = substitute(template_text(TemplateKind::UserTurn), "{CONTEXT}", evidence);
    bundle.user = substitute(user, "{CLAIM}", claim);
    return bundle;
}

PromptBundle build_verify_prompt(const ClaimRecord& record, Setting setting) {
    return build_verify_prompt(record.claim, record.evidence, setting);
}

PromptBundle build_conditioned_prompt(std::string_view claim, std::string_view evidence,
                                      Setting setting, VeracityLabel target) {
    if (!admits(setting, target)) {
        throw DomainError("conditioning target " + label_to_string(target) +
                          " is not admissible under " + setting_to_string(setting));
    }
    PromptBundle bundle = build_verify_prompt(claim, evidence, setting);
    bundle.system += "\n\n";
    bundle.system += substitute(template_text(TemplateKind::ConditionSuffix), "{TARGET}",
                                label_to_string(target));
    return bundle;
}

PromptBundle build_conditioned_prompt(const ClaimRecord& record, Setting setting,
                                      VeracityLabel target) {
    return build_conditioned_prompt(record.claim, record.evidence, setting, target);
}

std::optional<VeracityLabel> conditioned_target(std::string_view system_text) {
    constexpr std::string_view marker = "Answer: {";
    size_t pos = system_text.rfind(marker);
    if (pos == std::string_view::npos) return std::nullopt;
    size_t start = pos + marker.size();
    size_t close = system_text.find('}', start);
    if (close == std::string_view::npos) return std::nullopt;
    return normalize_label_token(system_text.substr(start, close - start));
}

}  // namespace rcv
