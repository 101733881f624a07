#include "rcv/decompose.hpp"

#include <cctype>
#include <filesystem>
#include <stdexcept>

#include <json.hpp>

#include "rcv/prompts.hpp"
#include "rcv/util.hpp"
#include "rcv/verdict.hpp"

namespace rcv {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr const char* kDecomposeDefault =
    R"(Please break down the following claim into a set of independent, atomic sub-claims. Each sub-claim must state exactly one fact from the claim. Output one sub-claim per line, each line starting with "- ". Do not add facts that are not in the claim.

Claim: {CLAIM})";

constexpr const char* kDecontextualizeDefault =
    R"(The following sub-claims were extracted from the claim below. Rewrite each sub-claim so that it is fully self-contained: resolve all pronouns and incomplete references using the original claim. Keep the meaning unchanged. Output exactly one rewritten sub-claim per line, each line starting with "- ", in the same order.

Claim: {CLAIM}

Sub-claims:
{SUBCLAIMS})";

// Strips a leading list marker ("1.", "2)", "-", "*", "•") plus surrounding space.
std::string strip_list_marker(const std::string& line) {
    std::string s = trim(line);
    if (s.empty()) return s;
    std::size_t i = 0;
    if (std::isdigit(static_cast<unsigned char>(s[0]))) {
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
        if (i < s.size() && (s[i] == '.' || s[i] == ')')) {
            return trim(s.substr(i + 1));
        }
        return s;  // a line that merely starts with a number is not a list item
    }
    if (s[0] == '-' || s[0] == '*') {
        return trim(s.substr(1));
    }
    if (s.size() >= 3 && s.compare(0, 3, "\xe2\x80\xa2") == 0) {  // U+2022 bullet
        return trim(s.substr(3));
    }
    return s;
}

}  // namespace

DecomposePrompts default_decompose_prompts() {
    return {kDecomposeDefault, kDecontextualizeDefault};
}

DecomposePrompts load_decompose_prompts(const std::string& dir) {
    DecomposePrompts prompts = default_decompose_prompts();
    auto base = std::filesystem::path(dir);
    auto dec = base / "decompose.txt";
    auto ctx = base / "decontextualize.txt";
    std::error_code ec;
    if (std::filesystem::exists(dec, ec)) prompts.decompose_template = read_file(dec.string());
    if (std::filesystem::exists(ctx, ec)) prompts.decontextualize_template = read_file(ctx.string());
    return prompts;
}

std::vector<std::string> parse_list_output(const std::string& text) {
    std::vector<std::string> items;
    for (const std::string& line : split_lines(text)) {
        std::string item = strip_list_marker(line);
        if (!item.empty()) items.push_back(std::move(item));
    }
    return items;
}

Decomposition decompose(const ClaimRecord& record, Gateway& decomposer,
                        const DecomposePrompts& prompts) {
    Decomposition out;

    PromptBundle dec_prompt;
    dec_prompt.system = "You are a careful assistant that decomposes claims into atomic facts.";
    dec_prompt.user = substitute(prompts.decompose_template, "{CLAIM}", record.claim);
    GenResponse dec_resp = decomposer.complete(decomposer.make_request(dec_prompt, "decompose"));

    std::vector<std::string> items;
    if (dec_resp.finish != FinishReason::Error) {
        items = parse_list_output(dec_resp.text);
    }
    if (items.empty()) {
        out.fallback = true;
        out.subs.push_back({record.claim, record.id, 0});
        return out;
    }

    // Second pass resolves pronouns/ellipses against the parent claim. If the
    // pass fails or changes the item count, keep the raw decomposition.
    std::string listed;
    for (const auto& item : items) {
        listed += "- " + item + "\n";
    }
    if (!listed.empty()) listed.pop_back();

    PromptBundle ctx_prompt;
    ctx_prompt.system = "You are a careful assistant that makes sub-claims self-contained.";
    ctx_prompt.user = substitute(
        substitute(prompts.decontextualize_template, "{CLAIM}", record.claim), "{SUBCLAIMS}",
        listed);
    GenResponse ctx_resp = decomposer.complete(decomposer.make_request(ctx_prompt, "decontext"));
    if (ctx_resp.finish != FinishReason::Error) {
        std::vector<std::string> rewritten = parse_list_output(ctx_resp.text);
        if (rewritten.size() == items.size()) items = std::move(rewritten);
    }

    for (std::size_t i = 0; i < items.size(); ++i) {
        out.subs.push_back({items[i], record.id, static_cast<int>(i)});
    }
    return out;
}

SubVerdictSet verify_subclaims(const std::vector<SubClaim>& subs, const std::string& evidence,
                               Setting setting, Gateway& verifier) {
    SubVerdictSet out;
    if (!subs.empty()) out.parent_id = subs.front().parent_id;
    if (subs.empty()) return out;

    std::vector<GenRequest> requests;
    requests.reserve(subs.size());
    for (const auto& sub : subs) {
        PromptBundle bundle = build_verify_prompt(sub.text, evidence, setting);
        requests.push_back(verifier.make_request(bundle, "sub-" + std::to_string(sub.index)));
    }
    std::vector<GenResponse> responses = verifier.complete_batch(requests);
    out.verdicts.reserve(responses.size());
    for (const auto& resp : responses) {
        if (resp.finish == FinishReason::Error) {
            out.verdicts.push_back(std::nullopt);
        } else {
            out.verdicts.push_back(parse_path(resp.text, setting).verdict);
        }
    }
    return out;
}

VeracityLabel aggregate(const SubVerdictSet& verdicts, Setting setting) {
    if (verdicts.verdicts.empty()) {
        throw DomainError("cannot aggregate an empty verdict set");
    }
    if (setting == Setting::WithoutNEI) {
        for (const Verdict& v : verdicts.verdicts) {
            if (!v.has_value() || *v != VeracityLabel::Support) return VeracityLabel::Refute;
        }
        return VeracityLabel::Support;
    }
    bool any_nei = false;
    for (const Verdict& v : verdicts.verdicts) {
        VeracityLabel slot = v.has_value() ? *v : VeracityLabel::NotEnoughInfo;
        if (slot == VeracityLabel::Refute) return VeracityLabel::Refute;
        if (slot == VeracityLabel::NotEnoughInfo) any_nei = true;
    }
    return any_nei ? VeracityLabel::NotEnoughInfo : VeracityLabel::Support;
}

void write_baseline_run(const std::string& path, const std::vector<DecomposeVerifyRow>& rows) {
    std::string body;
    for (const auto& row : rows) {
        ordered_json doc;
        doc["id"] = row.id;
        doc["sub_claims"] = row.sub_claims;
        ordered_json verdicts = ordered_json::array();
        for (const auto& v : row.sub_verdicts) verdicts.push_back(verdict_to_string(v));
        doc["sub_verdicts"] = verdicts;
        doc["aggregate"] = label_to_string(row.aggregated);
        doc["predicted"] = label_to_string(row.aggregated);
        doc["decompose_fallback"] = row.decompose_fallback;
        body += doc.dump();
        body += '\n';
    }
    write_file_atomic(path, body);
}

std::vector<DecomposeVerifyRow> read_baseline_run(const std::string& path) {
    std::vector<DecomposeVerifyRow> rows;
    for (const std::string& line : split_lines(read_file(path))) {
        if (line.empty()) continue;
        json doc = json::parse(line);
        if (doc.contains("_header")) continue;
        DecomposeVerifyRow row;
        row.id = doc.at("id").get<std::string>();
        for (const auto& s : doc.at("sub_claims")) row.sub_claims.push_back(s.get<std::string>());
        for (const auto& s : doc.at("sub_verdicts")) {
            row.sub_verdicts.push_back(verdict_from_string(s.get<std::string>()));
        }
        auto agg = label_from_string(doc.at("aggregate").get<std::string>());
        if (!agg) throw DomainError("bad aggregate label in " + path);
        row.aggregated = *agg;
        row.decompose_fallback = doc.value("decompose_fallback", false);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace rcv
