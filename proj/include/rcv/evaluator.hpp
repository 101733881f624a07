#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "rcv/corpus.hpp"
#include "rcv/labels.hpp"
#include "rcv/verdict.hpp"

namespace rcv {

struct PredictionSet {
    std::vector<std::pair<VeracityLabel, Verdict>> pairs;  // (gold, predicted)
    std::string dataset;
    Setting setting = Setting::WithoutNEI;
};

struct ClassScores {
    VeracityLabel label;
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool included = false;  // part of the macro average
};

struct EvalReport {
    std::string dataset;
    Setting setting = Setting::WithoutNEI;
    std::size_t total = 0;
    std::size_t invalid_count = 0;
    double macro_f1_x100 = 0.0;
    std::vector<ClassScores> per_class;
    // confusion[gold][pred]; pred index 3 holds invalid predictions.
    std::array<std::array<std::int64_t, 4>, 3> confusion{};
};

class EvalError : public std::runtime_error {
public:
    explicit EvalError(const std::string& what) : std::runtime_error(what) {}
};

EvalReport score(const PredictionSet& preds);

// One prediction per corpus id, joined by id; gold is mapped into the setting
// first so a WithoutNEI run scores three-label gold as two-label.
struct RunPrediction {
    std::string id;
    Verdict predicted;
    std::string raw_path;  // optional; empty when absent
};

std::vector<RunPrediction> read_run_file(const std::string& path);
void write_run_file(const std::string& path, const std::vector<RunPrediction>& preds);

EvalReport score_run(const std::vector<RunPrediction>& run,
                     const std::vector<ClaimRecord>& corpus, Setting setting);
EvalReport score_run_file(const std::string& run_path,
                          const std::vector<ClaimRecord>& corpus, Setting setting);

std::string report_to_json(const EvalReport& report);
std::string render_report_table(const EvalReport& report);

// Fixed-point with two decimals, the form scores are reported in.
std::string format_score(double x100);

}  // namespace rcv
