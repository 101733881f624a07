#include "rcv/corpus.hpp"

#include <json.hpp>

#include <set>

#include "rcv/util.hpp"

namespace rcv {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

// Candidate field names tried in order; official releases disagree on naming.
const std::vector<std::string> kClaimKeys = {"claim", "statement", "mutated"};
const std::vector<std::string> kEvidenceKeys = {"evidence", "gold_evidence", "evidence_text",
                                                "context", "doc", "document", "abstract"};
const std::vector<std::string> kLabelKeys = {"label", "gold", "gold_label", "verdict"};
const std::vector<std::string> kIdKeys = {"id", "uid", "claim_id", "example_id"};
const std::vector<std::string> kHopKeys = {"num_hops", "hops", "hop"};

const json* find_key(const json& row, const std::vector<std::string>& keys) {
    for (const auto& k : keys) {
        auto it = row.find(k);
        if (it != row.end() && !it->is_null()) return &*it;
    }
    return nullptr;
}

// Per-dataset raw label spellings; the published files never agree.
std::optional<VeracityLabel> normalize_raw_label(const json& raw, Dataset dataset) {
    if (raw.is_boolean()) return raw.get<bool>() ? VeracityLabel::Support : VeracityLabel::Refute;
    if (raw.is_number_integer()) {
        long v = raw.get<long>();
        if (v == 1) return VeracityLabel::Support;
        if (v == 0) return VeracityLabel::Refute;
        return std::nullopt;
    }
    if (!raw.is_string()) return std::nullopt;
    std::string k = to_lower(trim(raw.get<std::string>()));
    for (char& c : k) {
        if (c == '_' || c == '-') c = ' ';
    }
    if (k == "support" || k == "supports" || k == "supported" || k == "true" || k == "1") {
        return VeracityLabel::Support;
    }
    if (k == "refute" || k == "refutes" || k == "refuted" || k == "contradict" ||
        k == "contradiction" || k == "not supported" || k == "false" || k == "0") {
        return VeracityLabel::Refute;
    }
    if (k == "not enough information" || k == "not enough info" || k == "not enough evidence" ||
        k == "nei" || k == "neutral" || k == "unverifiable") {
        return VeracityLabel::NotEnoughInfo;
    }
    (void)dataset;
    return std::nullopt;
}

bool label_in_domain(VeracityLabel label, Dataset dataset) {
    if (label == VeracityLabel::NotEnoughInfo) return dataset_is_three_label(dataset);
    return true;
}

// FEVEROUS wiki element ids: "Page_sentence_4", "Page_cell_0_1_2", ...
bool is_table_element_id(const std::string& id) {
    return id.find("_cell_") != std::string::npos ||
           id.find("_header_cell_") != std::string::npos ||
           id.find("_table_caption_") != std::string::npos ||
           id.find("_table_") != std::string::npos;
}

bool looks_like_official_feverous_evidence(const json& ev) {
    if (!ev.is_array() || ev.empty()) return false;
    for (const auto& e : ev) {
        if (!e.is_object() || !e.contains("content")) return false;
    }
    return true;
}

// Extract evidence text from the shapes the published files use: a plain
// string, a list of paragraph strings, a list of [page, idx, text] triples,
// or a list of objects carrying a text-ish field.
std::optional<std::string> evidence_to_text(const json& ev) {
    if (ev.is_string()) {
        std::string s = trim(ev.get<std::string>());
        if (s.empty()) return std::nullopt;
        return s;
    }
    if (!ev.is_array()) return std::nullopt;
    std::vector<std::string> parts;
    for (const auto& e : ev) {
        if (e.is_string()) {
            std::string s = trim(e.get<std::string>());
            if (!s.empty()) parts.push_back(s);
        } else if (e.is_array()) {
            // [page, sentence_idx, text]: the text is the last string element
            std::string last;
            for (const auto& member : e) {
                if (member.is_string()) last = member.get<std::string>();
            }
            std::string s = trim(last);
            if (!s.empty()) parts.push_back(s);
        } else if (e.is_object()) {
            for (const char* key : {"text", "content", "sentence", "paragraph"}) {
                auto it = e.find(key);
                if (it != e.end() && it->is_string()) {
                    std::string s = trim(it->get<std::string>());
                    if (!s.empty()) parts.push_back(s);
                    break;
                }
            }
        }
    }
    if (parts.empty()) return std::nullopt;
    // Paragraphs joined with a blank line, source order preserved.
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += "\n\n";
        out += parts[i];
    }
    return out;
}

std::string id_to_string(const json& id) {
    if (id.is_string()) return id.get<std::string>();
    if (id.is_number_integer()) return std::to_string(id.get<long long>());
    if (id.is_number_unsigned()) return std::to_string(id.get<unsigned long long>());
    return id.dump();
}

std::optional<int> hop_count(const json& row) {
    const json* hops = find_key(row, kHopKeys);
    if (!hops) return std::nullopt;
    if (hops->is_number_integer()) return hops->get<int>();
    if (hops->is_string()) {
        try {
            return std::stoi(hops->get<std::string>());
        } catch (...) {
            return std::nullopt;
        }
    }
    return std::nullopt;
}

std::optional<int> required_hops(Dataset dataset) {
    switch (dataset) {
        case Dataset::Hover2: return 2;
        case Dataset::Hover3: return 3;
        case Dataset::Hover4: return 4;
        default: return std::nullopt;
    }
}

struct RowOutcome {
    std::optional<ClaimRecord> record;
    std::optional<std::string> error;
    std::optional<std::string> skip_reason;
};

RowOutcome convert_row(const json& row, Dataset dataset, Split split, size_t index) {
    RowOutcome out;
    if (!row.is_object()) {
        out.error = "row is not a JSON object";
        return out;
    }

    // HOVER hop subsets share one source file; filter when the row says its hop count.
    if (auto want = required_hops(dataset)) {
        if (auto hops = hop_count(row); hops && *hops != *want) {
            out.skip_reason = "hop count mismatch";
            return out;
        }
    }

    const json* claim = find_key(row, kClaimKeys);
    if (!claim || !claim->is_string() || trim(claim->get<std::string>()).empty()) {
        out.error = "missing claim";
        return out;
    }

    const json* label_raw = find_key(row, kLabelKeys);
    if (!label_raw) {
        out.error = "missing label";
        return out;
    }
    auto label = normalize_raw_label(*label_raw, dataset);
    if (!label) {
        out.error = "unrecognized label: " + label_raw->dump();
        return out;
    }
    if (!label_in_domain(*label, dataset)) {
        out.error = "label outside dataset domain: " + label_to_string(*label);
        return out;
    }

    const json* ev = find_key(row, kEvidenceKeys);
    if (!ev) {
        out.error = "missing evidence";
        return out;
    }
    if (dataset == Dataset::Feverous && looks_like_official_feverous_evidence(*ev)) {
        // Only claims that require sentence evidence are ingested; rows that
        // reference table elements are skipped with a counted reason.
        for (const auto& evset : *ev) {
            for (const auto& cid : evset.at("content")) {
                if (cid.is_string() && is_table_element_id(cid.get<std::string>())) {
                    out.skip_reason = "table evidence";
                    return out;
                }
            }
        }
        out.error = "evidence given as wiki element ids without inline text";
        return out;
    }
    auto evidence = evidence_to_text(*ev);
    if (!evidence) {
        out.error = "missing evidence";
        return out;
    }

    ClaimRecord rec;
    const json* id = find_key(row, kIdKeys);
    rec.id = id ? id_to_string(*id)
                : dataset_to_string(dataset) + "-" + split_to_string(split) + "-" + std::to_string(index);
    rec.claim = trim(claim->get<std::string>());
    rec.evidence = *evidence;
    rec.gold = *label;
    rec.dataset = dataset;
    rec.split = split;
    out.record = rec;
    return out;
}

std::vector<json> parse_rows(const std::string& content, std::vector<RowError>& errors) {
    std::vector<json> rows;
    std::string body = trim(content);
    if (body.empty()) return rows;
    if (body.front() == '[') {
        json arr = json::parse(body);  // malformed array is a file-level error
        if (!arr.is_array()) throw std::runtime_error("top-level JSON is not an array");
        for (auto& row : arr) rows.push_back(std::move(row));
        return rows;
    }
    size_t index = 0;
    for (const auto& line : split_lines(content)) {
        std::string t = trim(line);
        if (t.empty()) continue;
        json row = json::parse(t, nullptr, false);
        if (row.is_discarded()) {
            errors.push_back({index, "invalid JSON"});
            rows.emplace_back(nullptr);  // keep row indices aligned
        } else {
            rows.push_back(std::move(row));
        }
        ++index;
    }
    return rows;
}

}  // namespace

IngestResult ingest_content(const std::string& content, Dataset dataset, Split split) {
    IngestResult result;
    std::vector<json> rows = parse_rows(content, result.errors);

    std::set<std::string> seen_ids;
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].is_null()) continue;  // already reported as invalid JSON
        RowOutcome out = convert_row(rows[i], dataset, split, i);
        if (out.skip_reason) {
            result.skipped[*out.skip_reason]++;
            continue;
        }
        if (out.error) {
            result.errors.push_back({i, *out.error});
            continue;
        }
        if (!seen_ids.insert(out.record->id).second) {
            result.errors.push_back({i, "duplicate id: " + out.record->id});
            continue;
        }
        result.records.push_back(std::move(*out.record));
    }
    return result;
}

IngestResult ingest(const std::filesystem::path& source, Dataset dataset, Split split) {
    return ingest_content(read_file(source), dataset, split);
}

CorpusStats stats(const std::vector<ClaimRecord>& records) {
    CorpusStats s;
    for (const auto& r : records) {
        auto& bucket = s.per_source[{r.dataset, r.split}];
        bucket.count++;
        bucket.histogram[r.gold]++;
        s.total++;
    }
    return s;
}

std::string to_canonical_jsonl(const std::vector<ClaimRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        ordered_json j;
        j["id"] = r.id;
        j["claim"] = r.claim;
        j["evidence"] = r.evidence;
        j["gold"] = label_to_string(r.gold);
        j["dataset"] = dataset_to_string(r.dataset);
        j["split"] = split_to_string(r.split);
        out += j.dump();
        out += "\n";
    }
    return out;
}

std::vector<ClaimRecord> from_canonical_jsonl(const std::string& content) {
    std::vector<ClaimRecord> records;
    for (const auto& line : split_lines(content)) {
        std::string t = trim(line);
        if (t.empty()) continue;
        json j = json::parse(t);
        if (j.contains("_header")) continue;
        ClaimRecord r;
        r.id = j.at("id").get<std::string>();
        r.claim = j.at("claim").get<std::string>();
        r.evidence = j.at("evidence").get<std::string>();
        auto gold = label_from_string(j.at("gold").get<std::string>());
        auto dataset = dataset_from_string(j.at("dataset").get<std::string>());
        auto split = split_from_string(j.at("split").get<std::string>());
        if (!gold || !dataset || !split) {
            throw std::runtime_error("canonical record with unknown enum value: " + t);
        }
        r.gold = *gold;
        r.dataset = *dataset;
        r.split = *split;
        records.push_back(std::move(r));
    }
    return records;
}

void write_canonical(const std::filesystem::path& path, const std::vector<ClaimRecord>& records) {
    write_file_atomic(path, to_canonical_jsonl(records));
}

std::vector<ClaimRecord> read_canonical(const std::filesystem::path& path) {
    return from_canonical_jsonl(read_file(path));
}

}  // namespace rcv
