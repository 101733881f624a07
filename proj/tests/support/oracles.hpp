#pragma once

// Independent reference implementations used to check the production code.
// Each is written directly from the rule statements, deliberately not sharing
// helpers with the library.

#include <map>
#include <optional>
#include <vector>

#include "rcv/dpo.hpp"
#include "rcv/labels.hpp"

namespace rcvtest {

using rcv::PairMode;
using rcv::Setting;
using rcv::VeracityLabel;
using rcv::Verdict;

struct OraclePair {
    VeracityLabel rejected;
    VeracityLabel chosen;
};

// Pairing rule table, spelled out case by case.
//   Default mode: a pair (R_M < R_L) for gold L exists iff the L-conditioned
//   path concludes L and the M-conditioned path concludes M.
//   Strict mode: the printed indicator rules — a pair exists iff the
//   indicator-named path concludes the gold label; no condition on the other
//   side. Two-label uses the two-term equation; three-label the six printed
//   rules, the sixth with its indicator on the support path.
inline std::vector<OraclePair> oracle_pairs(VeracityLabel gold,
                                            const std::map<VeracityLabel, Verdict>& v,
                                            Setting setting, PairMode mode) {
    constexpr VeracityLabel S = VeracityLabel::Support;
    constexpr VeracityLabel R = VeracityLabel::Refute;
    constexpr VeracityLabel N = VeracityLabel::NotEnoughInfo;

    auto is = [&v](VeracityLabel slot, VeracityLabel label) {
        auto it = v.find(slot);
        return it != v.end() && it->second.has_value() && *it->second == label;
    };

    std::vector<OraclePair> out;
    if (mode == PairMode::Default) {
        if (setting == Setting::WithoutNEI) {
            if (gold == S && is(S, S) && is(R, R)) out.push_back({R, S});
            if (gold == R && is(R, R) && is(S, S)) out.push_back({S, R});
        } else {
            if (gold == S && is(S, S) && is(R, R)) out.push_back({R, S});
            if (gold == S && is(S, S) && is(N, N)) out.push_back({N, S});
            if (gold == N && is(N, N) && is(R, R)) out.push_back({R, N});
            if (gold == N && is(N, N) && is(S, S)) out.push_back({S, N});
            if (gold == R && is(R, R) && is(S, S)) out.push_back({S, R});
            if (gold == R && is(R, R) && is(N, N)) out.push_back({N, R});
        }
        return out;
    }

    if (setting == Setting::WithoutNEI) {
        if (is(S, gold)) out.push_back({R, S});
        if (is(R, gold)) out.push_back({S, R});
    } else {
        if (is(S, gold)) out.push_back({R, S});
        if (is(S, gold)) out.push_back({N, S});
        if (is(N, gold)) out.push_back({R, N});
        if (is(N, gold)) out.push_back({S, N});
        if (is(R, gold)) out.push_back({S, R});
        if (is(S, gold)) out.push_back({N, R});  // printed sixth rule, as printed
    }
    return out;
}

// Brute-force macro-F1 (unscaled, 0..1): per-class counting straight from the
// definitions, one full pass per class.
inline double oracle_macro_f1(const std::vector<std::pair<VeracityLabel, Verdict>>& pairs,
                              Setting setting) {
    std::vector<VeracityLabel> classes;
    if (setting == Setting::WithoutNEI) {
        classes = {VeracityLabel::Support, VeracityLabel::Refute};
    } else {
        classes = {VeracityLabel::Support, VeracityLabel::Refute,
                   VeracityLabel::NotEnoughInfo};
    }

    double f1_sum = 0.0;
    int included = 0;
    for (VeracityLabel cls : classes) {
        long tp = 0, fp = 0, fn = 0;
        for (const auto& [gold, pred] : pairs) {
            bool pred_is_cls = pred.has_value() && *pred == cls;
            if (gold == cls && pred_is_cls) ++tp;
            if (gold != cls && pred_is_cls) ++fp;
            if (gold == cls && !pred_is_cls) ++fn;
        }
        if (tp + fn == 0 && tp + fp == 0) continue;  // class absent on both sides
        double precision = (tp + fp) == 0 ? 0.0 : double(tp) / double(tp + fp);
        double recall = (tp + fn) == 0 ? 0.0 : double(tp) / double(tp + fn);
        double f1 =
            (precision + recall) == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
        f1_sum += f1;
        ++included;
    }
    return included == 0 ? 0.0 : f1_sum / included;
}

// Aggregation reference, by counting rather than folding.
inline VeracityLabel oracle_aggregate(const std::vector<Verdict>& verdicts, Setting setting) {
    std::size_t support = 0, refute = 0, nei = 0, invalid = 0;
    for (const Verdict& v : verdicts) {
        if (!v.has_value()) {
            ++invalid;
        } else if (*v == VeracityLabel::Support) {
            ++support;
        } else if (*v == VeracityLabel::Refute) {
            ++refute;
        } else {
            ++nei;
        }
    }
    if (setting == Setting::WithoutNEI) {
        return support == verdicts.size() ? VeracityLabel::Support : VeracityLabel::Refute;
    }
    if (refute > 0) return VeracityLabel::Refute;
    if (nei + invalid > 0) return VeracityLabel::NotEnoughInfo;
    return VeracityLabel::Support;
}

}  // namespace rcvtest
