#include "lclfqa/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "lclfqa/error.hpp"
#include "lclfqa/parallel.hpp"
#include "lclfqa/tags.hpp"
#include "lclfqa/text.hpp"

namespace lclfqa {

namespace {

bool ranks_before(const ScoredChunk& a, const ScoredChunk& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.child_id < b.child_id;
}

/// Keeps the best `limit` entries in ranking order.
void truncate_sorted(std::vector<ScoredChunk>& entries, std::size_t limit) {
    if (limit < entries.size()) {
        std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(limit), entries.end(),
                          ranks_before);
        entries.resize(limit);
    } else {
        std::sort(entries.begin(), entries.end(), ranks_before);
    }
}

}  // namespace

SparseIndex SparseIndex::build(const std::vector<ChildChunk>& children) {
    SparseIndex index;
    index.doc_lengths.reserve(children.size());
    std::uint64_t total = 0;
    for (std::size_t d = 0; d < children.size(); ++d) {
        const auto terms = text::tokenize_terms(children[d].text);
        std::map<std::string_view, std::uint32_t> tf;
        for (const auto& t : terms) ++tf[t];
        for (const auto& [term, count] : tf) {
            auto it = index.postings.find(term);
            if (it == index.postings.end()) it = index.postings.emplace(std::string(term), std::vector<Posting>{}).first;
            it->second.push_back({static_cast<std::uint32_t>(d), count});
        }
        index.doc_lengths.push_back(static_cast<std::uint32_t>(terms.size()));
        total += terms.size();
    }
    index.avg_length = children.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(children.size());
    return index;
}

std::optional<std::size_t> Ranking::rank_of(std::string_view child_id) const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].child_id == child_id) return i + 1;
    }
    return std::nullopt;
}

RetrievalBundle::RetrievalBundle(std::vector<ParentChunk> parents, std::vector<ChildChunk> children,
                                 SparseIndex sparse, DenseIndex dense, StoreManifest manifest)
    : parents_(std::move(parents)),
      children_(std::move(children)),
      sparse_(std::move(sparse)),
      dense_(std::move(dense)),
      manifest_(std::move(manifest)) {
    for (std::size_t i = 0; i < parents_.size(); ++i) {
        if (!parent_pos_.emplace(parents_[i].parent_id, i).second) {
            throw IntegrityError("duplicate parent_id " + parents_[i].parent_id);
        }
    }
    for (std::size_t i = 0; i < children_.size(); ++i) {
        if (!child_pos_.emplace(children_[i].child_id, i).second) {
            throw IntegrityError("duplicate child_id " + children_[i].child_id);
        }
    }
    validate();
}

void RetrievalBundle::validate() const {
    for (const auto& c : children_) {
        for (const auto& pid : c.parent_ids) {
            if (!parent_pos_.contains(pid)) {
                throw IntegrityError("child " + c.child_id + " links to unknown parent " + pid);
            }
        }
    }
    if (sparse_.doc_lengths.size() != children_.size()) {
        throw IntegrityError("sparse index covers " + std::to_string(sparse_.doc_lengths.size()) +
                             " chunks, store holds " + std::to_string(children_.size()));
    }
    for (const auto& [term, list] : sparse_.postings) {
        for (const auto& p : list) {
            if (p.doc >= children_.size()) throw IntegrityError("posting for term '" + term + "' is out of range");
        }
    }
    if (dense_.rows() != children_.size() || dense_.data.size() != dense_.dimension * children_.size()) {
        throw IntegrityError("dense index covers " + std::to_string(dense_.rows()) + " chunks, store holds " +
                             std::to_string(children_.size()));
    }
    if (manifest_.dimension != dense_.dimension) throw IntegrityError("manifest dimension disagrees with vectors");
}

std::optional<std::size_t> RetrievalBundle::child_position(std::string_view child_id) const {
    auto it = child_pos_.find(std::string(child_id));
    if (it == child_pos_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> RetrievalBundle::parent_position(std::string_view parent_id) const {
    auto it = parent_pos_.find(std::string(parent_id));
    if (it == parent_pos_.end()) return std::nullopt;
    return it->second;
}

const ChildChunk& RetrievalBundle::child(std::string_view child_id) const {
    const auto pos = child_position(child_id);
    if (!pos) throw IntegrityError("unknown child chunk " + std::string(child_id));
    return children_[*pos];
}

const ParentChunk& RetrievalBundle::parent(std::string_view parent_id) const {
    const auto pos = parent_position(parent_id);
    if (!pos) throw IntegrityError("unknown parent chunk " + std::string(parent_id));
    return parents_[*pos];
}

std::vector<std::size_t> RetrievalBundle::children_of_document(std::string_view doc_id) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < children_.size(); ++i) {
        if (children_[i].doc_id == doc_id) out.push_back(i);
    }
    return out;
}

bool operator==(const RetrievalBundle& a, const RetrievalBundle& b) {
    return a.parents_ == b.parents_ && a.children_ == b.children_ && a.sparse_ == b.sparse_ &&
           a.dense_ == b.dense_ && a.manifest_ == b.manifest_;
}

RetrievalBundle build_indexes(std::vector<ParentChunk> parents, std::vector<ChildChunk> children,
                              Embedder& embedder, const BuildOptions& options) {
    if (children.empty()) throw PreconditionError("build_indexes requires at least one child chunk");
    {
        std::unordered_set<std::string_view> seen;
        for (const auto& c : children) {
            if (!seen.insert(c.child_id).second) throw IntegrityError("duplicate child_id " + c.child_id);
        }
    }

    auto sparse = SparseIndex::build(children);

    DenseIndex dense;
    dense.dimension = embedder.dimension();
    dense.data.resize(children.size() * dense.dimension);
    const std::size_t batch = std::max<std::size_t>(1, options.embed_batch_size);
    const std::size_t batches = (children.size() + batch - 1) / batch;
    parallel_for(batches, options.max_in_flight, [&](std::size_t bi) {
        const std::size_t begin = bi * batch;
        const std::size_t end = std::min(children.size(), begin + batch);
        std::vector<std::string> texts;
        for (std::size_t i = begin; i < end; ++i) texts.push_back(children[i].text);
        std::vector<Embedding> vectors;
        try {
            vectors = embedder.embed(texts);
        } catch (const Error& e) {
            throw ProviderError("embedding failed for chunk " + children[begin].child_id +
                                (end - begin > 1 ? " (batch of " + std::to_string(end - begin) + ")" : "") +
                                ": " + e.what());
        }
        if (vectors.size() != texts.size()) {
            throw ProviderError("embedder returned " + std::to_string(vectors.size()) + " vectors for " +
                                std::to_string(texts.size()) + " chunks starting at " + children[begin].child_id);
        }
        for (std::size_t i = begin; i < end; ++i) {
            auto& v = vectors[i - begin];
            if (v.size() != dense.dimension) {
                throw ConfigError("embedding for chunk " + children[i].child_id + " has dimension " +
                                  std::to_string(v.size()) + ", expected " + std::to_string(dense.dimension));
            }
            normalize(v);
            std::copy(v.begin(), v.end(), dense.data.begin() + static_cast<std::ptrdiff_t>(i * dense.dimension));
        }
    });

    StoreManifest manifest;
    manifest.corpus_id = options.corpus_id;
    manifest.parent_count = parents.size();
    manifest.child_count = children.size();
    manifest.term_count = sparse.postings.size();
    manifest.dimension = dense.dimension;
    manifest.embedding_model = embedder.model_name();
    manifest.bm25 = options.bm25;
    manifest.chunking = options.chunking;

    spdlog::info("indexed {} child chunks ({} terms, dim {}) over {} parents", children.size(),
                 manifest.term_count, manifest.dimension, parents.size());
    return RetrievalBundle(std::move(parents), std::move(children), std::move(sparse), std::move(dense),
                           std::move(manifest));
}

Ranking score_bm25(std::string_view query, const RetrievalBundle& bundle, std::size_t limit) {
    const auto& index = bundle.sparse();
    const auto& params = bundle.manifest().bm25;
    const double n = static_cast<double>(bundle.children().size());

    auto terms = text::tokenize_terms(query);
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());

    std::vector<double> scores(bundle.children().size(), 0.0);
    for (const auto& term : terms) {
        auto it = index.postings.find(term);
        if (it == index.postings.end()) continue;
        const double df = static_cast<double>(it->second.size());
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        for (const auto& p : it->second) {
            const double tf = p.tf;
            const double norm = 1.0 - params.b + params.b * index.doc_lengths[p.doc] / index.avg_length;
            scores[p.doc] += idf * tf * (params.k1 + 1.0) / (tf + params.k1 * norm);
        }
    }

    Ranking ranking{"sparse", {}};
    for (std::size_t d = 0; d < scores.size(); ++d) {
        if (scores[d] > 0.0) ranking.entries.push_back({bundle.children()[d].child_id, scores[d]});
    }
    truncate_sorted(ranking.entries, limit);
    return ranking;
}

Ranking search_dense(std::span<const float> query_vector, const RetrievalBundle& bundle, std::size_t limit) {
    const auto& dense = bundle.dense();
    if (query_vector.size() != dense.dimension) {
        throw ConfigError("query embedding has dimension " + std::to_string(query_vector.size()) +
                          " but the store was built with " + std::to_string(dense.dimension));
    }
    double qnorm = 0.0;
    for (float x : query_vector) qnorm += static_cast<double>(x) * x;
    qnorm = std::sqrt(qnorm);
    if (!(qnorm > 0.0)) throw ProviderError("query embedding is the zero vector");

    Ranking ranking{"dense", {}};
    ranking.entries.reserve(dense.rows());
    for (std::size_t i = 0; i < dense.rows(); ++i) {
        const auto row = dense.row(i);
        double dot = 0.0;
        for (std::size_t j = 0; j < row.size(); ++j) dot += static_cast<double>(row[j]) * query_vector[j];
        ranking.entries.push_back({bundle.children()[i].child_id, dot / qnorm});
    }
    truncate_sorted(ranking.entries, limit);
    return ranking;
}

Ranking search_dense(std::string_view query, const RetrievalBundle& bundle, Embedder& embedder,
                     std::size_t limit) {
    if (embedder.dimension() != bundle.dense().dimension) {
        throw ConfigError("embedder dimension " + std::to_string(embedder.dimension()) +
                          " does not match store dimension " + std::to_string(bundle.dense().dimension));
    }
    const auto vectors = embedder.embed({std::string(query)});
    return search_dense(vectors.at(0), bundle, limit);
}

Ranking fuse_rrf(const std::vector<Ranking>& rankings, double lambda, std::size_t k) {
    if (!(lambda > 0.0)) throw PreconditionError("RRF lambda must be > 0");
    std::map<std::string, double, std::less<>> fused;
    for (const auto& ranking : rankings) {
        for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
            fused[ranking.entries[i].child_id] += 1.0 / (lambda + static_cast<double>(i + 1));
        }
    }
    Ranking out{"rrf", {}};
    out.entries.reserve(fused.size());
    for (auto& [id, score] : fused) out.entries.push_back({id, score});
    truncate_sorted(out.entries, k);
    return out;
}

RetrievalResult retrieve(const std::vector<std::string>& queries, const RetrievalBundle& bundle,
                         Embedder& embedder, const RetrieveOptions& options) {
    if (queries.empty()) throw PreconditionError("retrieve requires at least one query");
    if (options.k < 1) throw PreconditionError("retrieve requires k >= 1");
    if (embedder.dimension() != bundle.dense().dimension) {
        throw ConfigError("embedder dimension " + std::to_string(embedder.dimension()) +
                          " does not match store dimension " + std::to_string(bundle.dense().dimension));
    }
    const std::size_t depth = options.depth_multiplier * options.k;
    const auto query_vectors = embedder.embed(queries);
    if (query_vectors.size() != queries.size()) throw ProviderError("embedder dropped query vectors");

    RetrievalResult result;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        auto sparse = score_bm25(queries[i], bundle, depth);
        sparse.source = "sparse:q" + std::to_string(i);
        auto dense = search_dense(query_vectors[i], bundle, depth);
        dense.source = "dense:q" + std::to_string(i);
        result.rankings.push_back(std::move(sparse));
        result.rankings.push_back(std::move(dense));
    }
    result.fused = fuse_rrf(result.rankings, options.lambda, options.k);
    for (const auto& e : result.fused.entries) result.children.push_back(bundle.child(e.child_id));
    result.parents = expand_and_enrich(result.children, bundle);
    return result;
}

std::vector<ParentChunk> expand_and_enrich(const std::vector<ChildChunk>& children, const RetrievalBundle& bundle) {
    std::set<std::size_t> positions;
    std::map<std::size_t, std::vector<const ChildChunk*>> notes;
    for (const auto& c : children) {
        for (const auto& pid : c.parent_ids) {
            const auto pos = bundle.parent_position(pid);
            if (!pos) throw IntegrityError("child " + c.child_id + " links to unknown parent " + pid);
            positions.insert(*pos);
            if (c.kind == ChildKind::FootnoteBased) {
                auto& list = notes[*pos];
                if (std::none_of(list.begin(), list.end(), [&](const auto* n) { return n->child_id == c.child_id; })) {
                    list.push_back(&c);
                }
            }
        }
    }

    std::vector<ParentChunk> out;
    out.reserve(positions.size());
    for (const auto pos : positions) {
        ParentChunk p = bundle.parents()[pos];
        if (auto it = notes.find(pos); it != notes.end()) {
            auto list = it->second;
            std::sort(list.begin(), list.end(), [](const auto* a, const auto* b) {
                return std::tie(a->page, a->child_id) < std::tie(b->page, b->child_id);
            });
            for (const auto* n : list) {
                p.text.push_back('\n');
                p.text += wrap_tag(kFootnoteTag, n->text);
            }
        }
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace lclfqa
