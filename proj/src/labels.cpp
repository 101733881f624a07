#include "rcv/labels.hpp"

#include "rcv/util.hpp"

namespace rcv {

std::string label_to_string(VeracityLabel label) {
    switch (label) {
        case VeracityLabel::Support: return "support";
        case VeracityLabel::Refute: return "refute";
        case VeracityLabel::NotEnoughInfo: return "not enough information";
    }
    throw DomainError("unknown label");
}

std::optional<VeracityLabel> label_from_string(std::string_view s) {
    std::string k = to_lower(trim(s));
    if (k == "support") return VeracityLabel::Support;
    if (k == "refute") return VeracityLabel::Refute;
    if (k == "not enough information") return VeracityLabel::NotEnoughInfo;
    return std::nullopt;
}

std::string verdict_to_string(const Verdict& v) {
    return v ? label_to_string(*v) : "invalid";
}

Verdict verdict_from_string(std::string_view s) {
    return label_from_string(s);
}

std::string setting_to_string(Setting s) {
    return s == Setting::WithoutNEI ? "without_nei" : "with_nei";
}

std::optional<Setting> setting_from_string(std::string_view s) {
    std::string k = to_lower(trim(s));
    if (k == "without_nei" || k == "without-nei" || k == "wo_nei") return Setting::WithoutNEI;
    if (k == "with_nei" || k == "with-nei" || k == "w_nei") return Setting::WithNEI;
    return std::nullopt;
}

std::string dataset_to_string(Dataset d) {
    switch (d) {
        case Dataset::Feverous: return "feverous";
        case Dataset::Hover2: return "hover2";
        case Dataset::Hover3: return "hover3";
        case Dataset::Hover4: return "hover4";
        case Dataset::Healthver: return "healthver";
        case Dataset::SciFact: return "scifact";
        case Dataset::VitaminC: return "vitaminc";
        case Dataset::LlmAggreFact: return "llmaggrefact";
    }
    throw DomainError("unknown dataset");
}

std::optional<Dataset> dataset_from_string(std::string_view s) {
    std::string k = to_lower(trim(s));
    if (k == "feverous") return Dataset::Feverous;
    if (k == "hover2" || k == "hover-2hop") return Dataset::Hover2;
    if (k == "hover3" || k == "hover-3hop") return Dataset::Hover3;
    if (k == "hover4" || k == "hover-4hop") return Dataset::Hover4;
    if (k == "healthver") return Dataset::Healthver;
    if (k == "scifact") return Dataset::SciFact;
    if (k == "vitaminc") return Dataset::VitaminC;
    if (k == "llmaggrefact" || k == "llm-aggrefact") return Dataset::LlmAggreFact;
    return std::nullopt;
}

std::string split_to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Dev: return "dev";
        case Split::Test: return "test";
    }
    throw DomainError("unknown split");
}

std::optional<Split> split_from_string(std::string_view s) {
    std::string k = to_lower(trim(s));
    if (k == "train") return Split::Train;
    if (k == "dev") return Split::Dev;
    if (k == "test") return Split::Test;
    return std::nullopt;
}

bool admits(Setting setting, VeracityLabel label) {
    if (label == VeracityLabel::NotEnoughInfo) return setting == Setting::WithNEI;
    return true;
}

std::vector<VeracityLabel> admissible_labels(Setting setting) {
    if (setting == Setting::WithoutNEI) {
        return {VeracityLabel::Support, VeracityLabel::Refute};
    }
    return {VeracityLabel::Support, VeracityLabel::NotEnoughInfo, VeracityLabel::Refute};
}

VeracityLabel map_to_setting(VeracityLabel label, Setting setting) {
    if (setting == Setting::WithoutNEI && label == VeracityLabel::NotEnoughInfo) {
        return VeracityLabel::Refute;
    }
    return label;
}

bool dataset_is_three_label(Dataset d) {
    switch (d) {
        case Dataset::Healthver:
        case Dataset::SciFact:
        case Dataset::VitaminC:
            return true;
        default:
            return false;
    }
}

Setting dataset_setting(Dataset d) {
    return dataset_is_three_label(d) ? Setting::WithNEI : Setting::WithoutNEI;
}

}  // namespace rcv
