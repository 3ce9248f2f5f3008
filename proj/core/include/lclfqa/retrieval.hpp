#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lclfqa/chunking.hpp"
#include "lclfqa/provider.hpp"

namespace lclfqa {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;

    friend bool operator==(const Bm25Params&, const Bm25Params&) = default;
};

/// Inverted index over child chunks. Document ids are positions in the bundle's
/// child list.
struct SparseIndex {
    struct Posting {
        std::uint32_t doc = 0;
        std::uint32_t tf = 0;
        friend bool operator==(const Posting&, const Posting&) = default;
    };

    std::map<std::string, std::vector<Posting>, std::less<>> postings;
    std::vector<std::uint32_t> doc_lengths;
    double avg_length = 0.0;

    static SparseIndex build(const std::vector<ChildChunk>& children);

    friend bool operator==(const SparseIndex&, const SparseIndex&) = default;
};

/// Row-major unit vectors, row i belonging to child i.
struct DenseIndex {
    std::size_t dimension = 0;
    std::vector<float> data;

    [[nodiscard]] std::size_t rows() const noexcept { return dimension == 0 ? 0 : data.size() / dimension; }
    [[nodiscard]] std::span<const float> row(std::size_t i) const {
        return {data.data() + i * dimension, dimension};
    }

    friend bool operator==(const DenseIndex&, const DenseIndex&) = default;
};

inline constexpr int kStoreVersion = 1;

struct StoreManifest {
    int version = kStoreVersion;
    std::string corpus_id;
    std::size_t parent_count = 0;
    std::size_t child_count = 0;
    std::size_t term_count = 0;
    std::size_t dimension = 0;
    std::string embedding_model;
    Bm25Params bm25;
    ChunkingOptions chunking;

    friend bool operator==(const StoreManifest&, const StoreManifest&) = default;
};

/// Chunk store plus sparse and dense indexes over one corpus. Immutable once built.
class RetrievalBundle {
public:
    RetrievalBundle() = default;
    RetrievalBundle(std::vector<ParentChunk> parents, std::vector<ChildChunk> children, SparseIndex sparse,
                    DenseIndex dense, StoreManifest manifest);

    [[nodiscard]] const std::vector<ParentChunk>& parents() const noexcept { return parents_; }
    [[nodiscard]] const std::vector<ChildChunk>& children() const noexcept { return children_; }
    [[nodiscard]] const SparseIndex& sparse() const noexcept { return sparse_; }
    [[nodiscard]] const DenseIndex& dense() const noexcept { return dense_; }
    [[nodiscard]] const StoreManifest& manifest() const noexcept { return manifest_; }

    [[nodiscard]] std::optional<std::size_t> child_position(std::string_view child_id) const;
    [[nodiscard]] std::optional<std::size_t> parent_position(std::string_view parent_id) const;
    [[nodiscard]] const ChildChunk& child(std::string_view child_id) const;
    [[nodiscard]] const ParentChunk& parent(std::string_view parent_id) const;

    /// Positions of every child belonging to `doc_id`, ascending.
    [[nodiscard]] std::vector<std::size_t> children_of_document(std::string_view doc_id) const;

    friend bool operator==(const RetrievalBundle& a, const RetrievalBundle& b);

private:
    void validate() const;

    std::vector<ParentChunk> parents_;
    std::vector<ChildChunk> children_;
    SparseIndex sparse_;
    DenseIndex dense_;
    StoreManifest manifest_;
    std::unordered_map<std::string, std::size_t> child_pos_;
    std::unordered_map<std::string, std::size_t> parent_pos_;
};

struct ScoredChunk {
    std::string child_id;
    double score = 0.0;

    friend bool operator==(const ScoredChunk&, const ScoredChunk&) = default;
};

/// Ordered retrieval list; entry i has rank i + 1. Scores are non-increasing and
/// equal scores are ordered by ascending child_id.
struct Ranking {
    std::string source;
    std::vector<ScoredChunk> entries;

    /// 1-based rank of `child_id`, if present.
    [[nodiscard]] std::optional<std::size_t> rank_of(std::string_view child_id) const;
};

struct BuildOptions {
    std::string corpus_id = "corpus";
    Bm25Params bm25;
    ChunkingOptions chunking;
    std::size_t embed_batch_size = 32;
    std::size_t max_in_flight = 4;
};

/// Builds both indexes and the chunk store. Throws PreconditionError for an empty
/// child list, IntegrityError for duplicate ids or dangling parent links, and
/// ProviderError naming the first chunk of a batch whose embedding failed.
RetrievalBundle build_indexes(std::vector<ParentChunk> parents, std::vector<ChildChunk> children,
                              Embedder& embedder, const BuildOptions& options = {});

/// Okapi BM25 with idf = ln(1 + (N - df + 0.5) / (df + 0.5)). Each distinct query
/// term contributes once. Zero-score chunks are omitted.
Ranking score_bm25(std::string_view query, const RetrievalBundle& bundle, std::size_t limit);

/// Exact cosine similarity against every stored vector.
Ranking search_dense(std::string_view query, const RetrievalBundle& bundle, Embedder& embedder,
                     std::size_t limit);
Ranking search_dense(std::span<const float> query_vector, const RetrievalBundle& bundle, std::size_t limit);

/// Reciprocal rank fusion: score(c) = sum over lists containing c of 1 / (lambda + rank).
Ranking fuse_rrf(const std::vector<Ranking>& rankings, double lambda, std::size_t k);

struct RetrieveOptions {
    std::size_t k = 8;
    double lambda = 60.0;
    std::size_t depth_multiplier = 4;  ///< per-retriever candidate depth = depth_multiplier * k
};

struct RetrievalResult {
    std::vector<ChildChunk> children;
    std::vector<ParentChunk> parents;
    Ranking fused;
    std::vector<Ranking> rankings;  ///< one sparse and one dense list per query
};

/// Hybrid multi-query retrieval: one sparse and one dense list per query, all fused
/// in a single RRF pass, then parents resolved through expand_and_enrich.
RetrievalResult retrieve(const std::vector<std::string>& queries, const RetrievalBundle& bundle,
                         Embedder& embedder, const RetrieveOptions& options = {});

/// Parents of the retrieved children in document order, each listed once. Parents
/// linked to a retrieved footnote chunk get that chunk's text appended as a
/// <footnote>...</footnote> line.
std::vector<ParentChunk> expand_and_enrich(const std::vector<ChildChunk>& children, const RetrievalBundle& bundle);

/// Writes manifest.json, parents.jsonl, children.jsonl, postings.json and vectors.f32.
StoreManifest persist_store(const RetrievalBundle& bundle, const std::filesystem::path& dir);

/// Reads a store written by persist_store. Throws StoreError for missing files,
/// unsupported versions and inconsistent lengths.
RetrievalBundle load_store(const std::filesystem::path& dir);

}  // namespace lclfqa
