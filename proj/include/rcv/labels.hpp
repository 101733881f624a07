#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rcv {

/// The three-valued verdict domain for claim verification.
enum class VeracityLabel { Support, Refute, NotEnoughInfo };

/// Parsed verdict of a generated path; nullopt means no admissible verdict was found.
using Verdict = std::optional<VeracityLabel>;

/// The two evaluation regimes. WithoutNEI admits {support, refute};
/// WithNEI additionally admits "not enough information".
enum class Setting { WithoutNEI, WithNEI };

enum class Dataset { Feverous, Hover2, Hover3, Hover4, Healthver, SciFact, VitaminC, LlmAggreFact };

enum class Split { Train, Dev, Test };

/// Canonical lowercase serialization: "support", "refute", "not enough information".
std::string label_to_string(VeracityLabel label);
std::optional<VeracityLabel> label_from_string(std::string_view s);

std::string verdict_to_string(const Verdict& v);
Verdict verdict_from_string(std::string_view s);

std::string setting_to_string(Setting s);
std::optional<Setting> setting_from_string(std::string_view s);

std::string dataset_to_string(Dataset d);
std::optional<Dataset> dataset_from_string(std::string_view s);

std::string split_to_string(Split s);
std::optional<Split> split_from_string(std::string_view s);

bool admits(Setting setting, VeracityLabel label);

/// Labels admissible under a setting, in canonical order
/// (support, refute for WithoutNEI; support, not enough information, refute for WithNEI).
std::vector<VeracityLabel> admissible_labels(Setting setting);

/// Identity under WithNEI; under WithoutNEI, NEI collapses to Refute.
VeracityLabel map_to_setting(VeracityLabel label, Setting setting);

/// True for datasets whose declared label domain includes NEI.
bool dataset_is_three_label(Dataset d);

/// The setting matching a dataset's declared label domain.
Setting dataset_setting(Dataset d);

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace rcv
