#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rcv/corpus.hpp"
#include "rcv/gateway.hpp"
#include "rcv/verdict.hpp"

namespace rcv {

// One supervised fine-tuning example. The instruction is always the plain
// (unconditioned) task text: the student must verify without being told the
// answer, even though the teacher saw it.
struct SftRecord {
    std::string instruction;
    std::string input;
    std::string output;
};

struct CleaningReport {
    std::size_t generated = 0;
    std::size_t retained = 0;
    std::size_t dropped_by_verdict = 0;  // admissible verdict, but not the gold label
    std::size_t dropped_invalid = 0;     // no admissible verdict at all
};

// Sampling temperature for the ablation modes that need diverse samples.
inline constexpr double kAblationTemperature = 0.7;

ReasoningPath generate_teacher_path(const ClaimRecord& record, Setting setting,
                                    Gateway& teacher);

// Ablation: unconditioned sampling, first sample concluding gold wins.
// Samples lazily, so a first-shot success costs exactly one call.
std::optional<ReasoningPath> generate_teacher_path_unconditioned(const ClaimRecord& record,
                                                                 Setting setting,
                                                                 Gateway& teacher,
                                                                 int max_samples = 5);

struct TeacherBatch {
    std::vector<std::pair<ClaimRecord, ReasoningPath>> paths;  // source order
    std::vector<std::string> errors;                           // per-record failures
};

// Fans out one conditioned completion per record; each record is generated
// under its dataset's native label domain.
TeacherBatch generate_teacher_paths(const std::vector<ClaimRecord>& records, Gateway& teacher);

// Retains exactly the paths concluding their record's gold label. The
// instruction of each retained record is the unconditioned template for the
// given setting; the overload without a setting derives it per record from
// the dataset's label domain (what a mixed-corpus stage-1 run needs).
std::pair<std::vector<SftRecord>, CleaningReport> clean_and_emit(
    const std::vector<std::pair<ClaimRecord, ReasoningPath>>& paths, Setting setting);
std::pair<std::vector<SftRecord>, CleaningReport> clean_and_emit(
    const std::vector<std::pair<ClaimRecord, ReasoningPath>>& paths);

// JSON-lines, keys exactly "instruction","input","output" per line.
std::string sft_to_jsonl(const std::vector<SftRecord>& records);
std::vector<SftRecord> sft_from_jsonl(const std::string& content);

}  // namespace rcv
