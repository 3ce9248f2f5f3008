#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lclfqa/chunking.hpp"
#include "lclfqa/layout.hpp"
#include "lclfqa/random.hpp"
#include "lclfqa/retrieval.hpp"

namespace lclfqa::support {

/// Directory of the bundled fixture corpus.
std::filesystem::path fixture_dir();

/// Parsed mock_config.json of the fixture corpus.
nlohmann::json fixture_config();

/// Fixture corpus chunked with the fixture ingest settings and indexed with the
/// mock embedder of the fixture config.
RetrievalBundle fixture_bundle(ChunkingMode mode = ChunkingMode::Layout);

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& prefix = "lclfqa");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

void write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

// Random inputs ---------------------------------------------------------------

/// Random layout stream: 1-3 documents, running headers and footers on most
/// pages, sections of random length, footnotes on some pages. Page header and
/// footer texts contain the marker "RUNNING" and nothing else does.
std::vector<LayoutElement> random_layout(Rng& rng);

ChildChunk make_child(std::string id, std::string doc_id, std::string text);

/// Rankings over ids "c00".."c<n-1>" with random lengths and scores, the way
/// retrievers produce them (scores non-increasing, ties ordered by id).
std::vector<Ranking> random_rankings(Rng& rng, std::size_t ids, std::size_t lists);

// Oracles -----------------------------------------------------------------------

/// Okapi BM25 computed term by term from raw token lists.
std::map<std::string, double> bm25_oracle(const std::vector<std::pair<std::string, std::string>>& docs,
                                          const std::string& query, double k1, double b);

/// Reciprocal rank fusion by exhaustive per-id summation, sorted by (score desc, id asc).
std::vector<ScoredChunk> rrf_oracle(const std::vector<Ranking>& rankings, double lambda, std::size_t k);

/// Cosine of `query` against every row, sorted by (score desc, id asc).
std::vector<ScoredChunk> cosine_oracle(const RetrievalBundle& bundle, const std::vector<float>& query);

/// Best 1-based rank of any chunk of `doc_id` under `query`, recomputed from the
/// BM25 and cosine oracles; SIZE_MAX where no chunk of the document is ranked.
std::pair<std::size_t, std::size_t> oracle_document_ranks(const RetrievalBundle& bundle, const std::string& query,
                                                          const std::string& doc_id, const std::vector<float>& query_vector);

/// Minimum within-cluster sum of squares over every split of `points` into two
/// non-empty groups, together with the labels achieving it (point 0 labelled 0).
std::pair<double, std::vector<int>> best_bipartition(const std::vector<std::vector<double>>& points);

/// Checks every chunking invariant for `elements` chunked with `options` and
/// returns a description of each violation found.
std::vector<std::string> check_chunking_invariants(const std::vector<LayoutElement>& elements,
                                                   const ChunkingOptions& options, const ChunkedCorpus& corpus);

}  // namespace lclfqa::support
