#include "rcv/verdict.hpp"

#include "rcv/util.hpp"

namespace rcv {

std::optional<VeracityLabel> normalize_label_token(std::string_view token) {
    std::string k = to_lower(trim(token));
    if (k == "support") return VeracityLabel::Support;
    if (k == "refute") return VeracityLabel::Refute;
    if (k == "not enough information" || k == "nei" || k == "not enough evidence") {
        return VeracityLabel::NotEnoughInfo;
    }
    return std::nullopt;
}

ReasoningPath parse_path(std::string_view text, Setting setting) {
    ReasoningPath path;
    path.text = std::string(text);
    path.step_count = count_reasoning_steps(text);

    size_t pos = 0;
    while (pos < text.size()) {
        size_t open = text.find('{', pos);
        if (open == std::string_view::npos) break;
        size_t close = text.find('}', open + 1);
        if (close == std::string_view::npos) break;
        auto label = normalize_label_token(text.substr(open + 1, close - open - 1));
        if (label && admits(setting, *label)) {
            path.verdict = *label;  // last admissible group wins
        }
        pos = close + 1;
    }
    return path;
}

bool concludes(const ReasoningPath& path, VeracityLabel label) {
    return path.verdict == label;
}

int count_reasoning_steps(std::string_view text) {
    constexpr std::string_view marker = "## Reasoning Step";
    int count = 0;
    size_t pos = 0;
    while ((pos = text.find(marker, pos)) != std::string_view::npos) {
        ++count;
        pos += marker.size();
    }
    return count;
}

}  // namespace rcv
