#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rcv/labels.hpp"

namespace rcv {

/// One claim with its evidence text, gold veracity and provenance.
struct ClaimRecord {
    std::string id;
    std::string claim;
    std::string evidence;
    VeracityLabel gold = VeracityLabel::Support;
    Dataset dataset = Dataset::Feverous;
    Split split = Split::Train;
    /// Set when the evidence was assembled by open-book retrieval; the gold
    /// label was assigned against the original evidence and may no longer be
    /// decidable from the retrieved text.
    bool openbook_evidence = false;
};

struct RowError {
    size_t row = 0;  // 0-based row index in the source file
    std::string reason;
};

struct IngestResult {
    std::vector<ClaimRecord> records;  // source order
    std::vector<RowError> errors;      // malformed rows
    std::map<std::string, size_t> skipped;  // counted skip reasons (e.g. table-only evidence)
};

/// Read a dataset's published file (JSON array or JSON-lines) into validated
/// records. Malformed rows become row errors, never an abort; an unreadable
/// file throws.
IngestResult ingest(const std::filesystem::path& source, Dataset dataset, Split split);

/// Same as ingest() but over in-memory bytes.
IngestResult ingest_content(const std::string& content, Dataset dataset, Split split);

struct CorpusStats {
    struct Bucket {
        size_t count = 0;
        std::map<VeracityLabel, size_t> histogram;
    };
    std::map<std::pair<Dataset, Split>, Bucket> per_source;
    size_t total = 0;
};

CorpusStats stats(const std::vector<ClaimRecord>& records);

/// Canonical record file: JSON-lines, one record per line, keys
/// id, claim, evidence, gold, dataset, split in that order, UTF-8.
std::string to_canonical_jsonl(const std::vector<ClaimRecord>& records);
std::vector<ClaimRecord> from_canonical_jsonl(const std::string& content);

void write_canonical(const std::filesystem::path& path, const std::vector<ClaimRecord>& records);
std::vector<ClaimRecord> read_canonical(const std::filesystem::path& path);

}  // namespace rcv
