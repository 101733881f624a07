#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rcv/corpus.hpp"
#include "rcv/labels.hpp"

namespace rcv {

/// A system/user message pair ready for a chat-completion request.
struct PromptBundle {
    std::string system;
    std::string user;

    bool operator==(const PromptBundle&) const = default;
};

enum class TemplateKind { VerifyWithoutNei, VerifyWithNei, ConditionSuffix, UserTurn };

/// Embedded template text. Placeholders {CONTEXT}, {CLAIM}, {TARGET} are
/// replaced verbatim; the suffix template writes {{TARGET}} so the
/// substituted label stays enclosed in literal braces.
std::string_view template_text(TemplateKind kind);

/// The SHA-256 pinned for each template at the time it was transcribed.
std::string_view template_expected_sha256(TemplateKind kind);

/// File name used for the template under resources/prompts/.
std::string_view template_resource_name(TemplateKind kind);

std::vector<TemplateKind> all_template_kinds();

/// Compare each resource file under `dir` against its pinned hash.
/// Returns a human-readable mismatch list; empty means all verified.
std::vector<std::string> verify_template_resources(const std::filesystem::path& dir);

/// Write the embedded templates out as resource files.
void dump_template_resources(const std::filesystem::path& dir);

/// Uniform placeholder substitution (every occurrence of `token` replaced).
std::string substitute(std::string_view text, std::string_view token, std::string_view value);

/// The plain verification prompt: task instructions in the system turn,
/// "Context: ... Claim: ..." in the user turn.
PromptBundle build_verify_prompt(const ClaimRecord& record, Setting setting);
PromptBundle build_verify_prompt(std::string_view claim, std::string_view evidence, Setting setting);

/// The verification prompt plus the appended ground-truth block naming
/// `target`. Rejects targets not admissible under the setting.
PromptBundle build_conditioned_prompt(const ClaimRecord& record, Setting setting,
                                      VeracityLabel target);
PromptBundle build_conditioned_prompt(std::string_view claim, std::string_view evidence,
                                      Setting setting, VeracityLabel target);

/// Recover the conditioning target from a conditioned system text by scanning
/// for the "Answer: {" block. Empty optional when the text is unconditioned.
std::optional<VeracityLabel> conditioned_target(std::string_view system_text);

}  // namespace rcv
