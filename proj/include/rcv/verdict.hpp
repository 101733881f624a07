#pragma once

#include <string>
#include <string_view>

#include "rcv/labels.hpp"

namespace rcv {

/// A generated chain-of-thought verification text plus its parsed terminal verdict.
struct ReasoningPath {
    std::string text;
    Verdict verdict;  // nullopt when no admissible brace-enclosed label is found
    int step_count = 0;
};

/// Normalize the content of one brace group to a label, if it names one.
/// Case-insensitive, whitespace-trimmed; "nei" and "not enough evidence"
/// are accepted as synonyms for "not enough information".
std::optional<VeracityLabel> normalize_label_token(std::string_view token);

/// Extract the terminal verdict from a generated path. Scans every {...}
/// group left to right; the last group naming a label admissible under the
/// setting wins. Inadmissible groups are skipped, not errors. Total on
/// arbitrary byte strings.
ReasoningPath parse_path(std::string_view text, Setting setting);

/// True iff the path's parsed verdict equals the label. Equality on the
/// parsed terminal verdict, never substring search over the raw text.
bool concludes(const ReasoningPath& path, VeracityLabel label);

int count_reasoning_steps(std::string_view text);

}  // namespace rcv
