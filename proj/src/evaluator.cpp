#include "rcv/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "rcv/util.hpp"

namespace rcv {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::size_t kInvalidCol = 3;

std::size_t label_index(VeracityLabel l) { return static_cast<std::size_t>(l); }

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

std::string format_score(double x100) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << x100;
    return os.str();
}

EvalReport score(const PredictionSet& preds) {
    if (preds.pairs.empty()) {
        throw EvalError("cannot score an empty prediction set");
    }

    EvalReport report;
    report.dataset = preds.dataset;
    report.setting = preds.setting;
    report.total = preds.pairs.size();

    for (const auto& [gold, pred] : preds.pairs) {
        if (!admits(preds.setting, gold)) {
            throw EvalError("gold label outside setting domain: " + label_to_string(gold));
        }
        if (pred.has_value() && !admits(preds.setting, *pred)) {
            throw EvalError("predicted label outside setting domain: " +
                            label_to_string(*pred));
        }
        std::size_t col = pred.has_value() ? label_index(*pred) : kInvalidCol;
        report.confusion[label_index(gold)][col] += 1;
        if (!pred.has_value()) report.invalid_count += 1;
    }

    // An invalid prediction adds a false negative to its gold class and a false
    // positive to nothing; it never forms a class of its own.
    double f1_sum = 0.0;
    std::size_t included = 0;
    for (VeracityLabel label : admissible_labels(preds.setting)) {
        ClassScores cls;
        cls.label = label;
        std::size_t li = label_index(label);
        cls.tp = report.confusion[li][li];
        std::int64_t gold_count = 0;
        for (std::size_t c = 0; c < 4; ++c) gold_count += report.confusion[li][c];
        std::int64_t pred_count = 0;
        for (VeracityLabel g : admissible_labels(preds.setting)) {
            pred_count += report.confusion[label_index(g)][li];
        }
        cls.fn = gold_count - cls.tp;
        cls.fp = pred_count - cls.tp;
        cls.precision = safe_div(static_cast<double>(cls.tp),
                                 static_cast<double>(cls.tp + cls.fp));
        cls.recall = safe_div(static_cast<double>(cls.tp),
                              static_cast<double>(cls.tp + cls.fn));
        cls.f1 = safe_div(2.0 * cls.precision * cls.recall, cls.precision + cls.recall);
        cls.included = gold_count > 0 || pred_count > 0;
        if (cls.included) {
            f1_sum += cls.f1;
            included += 1;
        }
        report.per_class.push_back(cls);
    }
    report.macro_f1_x100 = included == 0 ? 0.0 : 100.0 * f1_sum / static_cast<double>(included);
    return report;
}

std::vector<RunPrediction> read_run_file(const std::string& path) {
    std::vector<RunPrediction> out;
    for (const std::string& line : split_lines(read_file(path))) {
        if (line.empty()) continue;
        json doc = json::parse(line);
        if (doc.contains("_header")) continue;
        RunPrediction p;
        p.id = doc.at("id").get<std::string>();
        p.predicted = verdict_from_string(doc.at("predicted").get<std::string>());
        p.raw_path = doc.value("raw_path", std::string{});
        out.push_back(std::move(p));
    }
    return out;
}

void write_run_file(const std::string& path, const std::vector<RunPrediction>& preds) {
    std::string body;
    for (const auto& p : preds) {
        ordered_json doc;
        doc["id"] = p.id;
        doc["predicted"] = verdict_to_string(p.predicted);
        if (!p.raw_path.empty()) doc["raw_path"] = p.raw_path;
        body += doc.dump();
        body += '\n';
    }
    write_file_atomic(path, body);
}

EvalReport score_run(const std::vector<RunPrediction>& run,
                     const std::vector<ClaimRecord>& corpus, Setting setting) {
    std::unordered_map<std::string, VeracityLabel> gold_by_id;
    gold_by_id.reserve(corpus.size());
    for (const auto& rec : corpus) gold_by_id.emplace(rec.id, rec.gold);

    PredictionSet preds;
    preds.setting = setting;
    if (!corpus.empty()) preds.dataset = dataset_to_string(corpus.front().dataset);

    std::set<std::string> seen;
    for (const auto& p : run) {
        if (!seen.insert(p.id).second) {
            throw EvalError("duplicate prediction for id: " + p.id);
        }
        auto it = gold_by_id.find(p.id);
        if (it == gold_by_id.end()) {
            throw EvalError("prediction references unknown id: " + p.id);
        }
        preds.pairs.emplace_back(map_to_setting(it->second, setting), p.predicted);
    }
    return score(preds);
}

EvalReport score_run_file(const std::string& run_path,
                          const std::vector<ClaimRecord>& corpus, Setting setting) {
    return score_run(read_run_file(run_path), corpus, setting);
}

std::string report_to_json(const EvalReport& report) {
    ordered_json doc;
    doc["dataset"] = report.dataset;
    doc["setting"] = setting_to_string(report.setting);
    doc["total"] = report.total;
    doc["invalid_count"] = report.invalid_count;
    doc["macro_f1_x100"] = report.macro_f1_x100;
    doc["macro_f1_display"] = format_score(report.macro_f1_x100);
    ordered_json classes = ordered_json::array();
    for (const auto& cls : report.per_class) {
        ordered_json c;
        c["label"] = label_to_string(cls.label);
        c["tp"] = cls.tp;
        c["fp"] = cls.fp;
        c["fn"] = cls.fn;
        c["precision"] = cls.precision;
        c["recall"] = cls.recall;
        c["f1"] = cls.f1;
        c["included"] = cls.included;
        classes.push_back(c);
    }
    doc["per_class"] = classes;
    ordered_json confusion = ordered_json::array();
    for (std::size_t g = 0; g < 3; ++g) {
        confusion.push_back(report.confusion[g]);
    }
    doc["confusion"] = confusion;
    return doc.dump(2);
}

std::string render_report_table(const EvalReport& report) {
    std::ostringstream os;
    os << "dataset: " << (report.dataset.empty() ? "-" : report.dataset)
       << "  setting: " << setting_to_string(report.setting)
       << "  n: " << report.total
       << "  invalid: " << report.invalid_count << "\n";
    os << "  class                     P      R      F1\n";
    for (const auto& cls : report.per_class) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "  %-24s %5.3f  %5.3f  %5.3f%s\n",
                      label_to_string(cls.label).c_str(), cls.precision, cls.recall,
                      cls.f1, cls.included ? "" : "  (excluded)");
        os << buf;
    }
    os << "  macro-F1 x100: " << format_score(report.macro_f1_x100) << "\n";
    return os.str();
}

}  // namespace rcv
