#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "lclfqa/provider.hpp"
#include "lclfqa/retrieval.hpp"
#include "lclfqa/templates.hpp"

namespace lclfqa {

/// The original query plus its rewrites. Rewrites never repeat each other or the
/// original.
struct QuerySet {
    std::string original;
    std::vector<std::string> rewrites;
    std::vector<std::string> warnings;

    /// Original first, then rewrites.
    [[nodiscard]] std::vector<std::string> all() const;
};

struct RewriteOptions {
    std::size_t n = 3;           ///< 1 or 3
    std::string examples;        ///< few-shot block bound to {examples} of the passage prompt
};

/// Two provider calls: a passage answering `query`, then rewrites conditioned on
/// that passage (one per line). Enumerators like "1." or "-" are stripped. Throws
/// PreconditionError for n outside {1, 3} and GenerationError when a call fails.
QuerySet rewrite(const std::string& query, ChatModel& chat, const TemplateStore& templates,
                 const RewriteOptions& options = {});

/// Parses newline-separated rewrites: enumerators stripped, blank lines, repeats and
/// copies of `original` dropped.
std::vector<std::string> parse_rewrites(std::string_view response, std::string_view original);

struct RewritePair {
    std::string query;
    std::string rewrite;
    std::string source_doc_id;
    std::string origin;  ///< generation metadata, e.g. the synthetic item id

    friend bool operator==(const RewritePair&, const RewritePair&) = default;
};

inline constexpr std::size_t kUnranked = std::numeric_limits<std::size_t>::max();

struct DocumentRanks {
    std::size_t sparse = kUnranked;
    std::size_t dense = kUnranked;
};

/// Best (smallest) 1-based rank of any chunk of `doc_id` over a full-corpus scan.
/// kUnranked when no chunk of the document scores.
DocumentRanks document_ranks(const std::string& query, const std::string& doc_id, const RetrievalBundle& bundle,
                             Embedder& embedder);

struct PairDecision {
    RewritePair pair;
    DocumentRanks query_ranks;
    DocumentRanks rewrite_ranks;
    bool retained = false;
};

struct FilterReport {
    std::vector<RewritePair> retained;
    std::vector<PairDecision> decisions;  ///< one per resolvable input pair, input order
    std::vector<std::string> errors;      ///< one per skipped pair
};

/// A rewrite is kept iff it moves its source document strictly closer to the top in
/// both the sparse and the dense ranking.
[[nodiscard]] bool improves(const DocumentRanks& before, const DocumentRanks& after) noexcept;

FilterReport filter_rewrite_pairs(const std::vector<RewritePair>& pairs, const RetrievalBundle& bundle,
                                  Embedder& embedder, std::size_t max_workers = 1);

/// JSON lines of {query, rewrite, source_doc_id}. Throws PreconditionError for an
/// empty list and StoreError on I/O failure.
std::size_t export_training_pairs(const std::vector<RewritePair>& pairs, const std::filesystem::path& path);

/// Reads a pairs file. Extra keys are ignored; `origin` is read when present.
std::vector<RewritePair> read_pairs(const std::filesystem::path& path);

}  // namespace lclfqa
