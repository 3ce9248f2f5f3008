#include "lclfqa/rewriter.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "lclfqa/error.hpp"
#include "lclfqa/parallel.hpp"
#include "lclfqa/text.hpp"

namespace lclfqa {

using nlohmann::json;

std::vector<std::string> QuerySet::all() const {
    std::vector<std::string> out{original};
    out.insert(out.end(), rewrites.begin(), rewrites.end());
    return out;
}

namespace {

/// Drops a leading list marker such as "1.", "2)", "(3)", "-", "*" or a bullet.
std::string_view strip_enumerator(std::string_view line) {
    for (std::string_view bullet : {"-", "*", "\u2022"}) {
        if (line.starts_with(bullet)) return text::trim(line.substr(bullet.size()));
    }
    std::size_t i = line.starts_with('(') ? 1 : 0;
    const std::size_t digits = i;
    while (i < line.size() && line[i] >= '0' && line[i] <= '9') ++i;
    if (i > digits && i < line.size() && (line[i] == '.' || line[i] == ')')) {
        const auto rest = line.substr(i + 1);
        if (rest.empty() || rest.front() == ' ' || rest.front() == '\t') return text::trim(rest);
    }
    return line;
}

}  // namespace

std::vector<std::string> parse_rewrites(std::string_view response, std::string_view original) {
    const auto needle = text::trim(original);
    std::vector<std::string> out;
    std::set<std::string, std::less<>> seen;
    std::size_t pos = 0;
    while (pos < response.size()) {
        auto nl = response.find('\n', pos);
        if (nl == std::string_view::npos) nl = response.size();
        const auto line = strip_enumerator(text::trim(response.substr(pos, nl - pos)));
        pos = nl + 1;
        if (line.empty() || line == needle) continue;
        if (seen.insert(std::string(line)).second) out.emplace_back(line);
    }
    return out;
}

QuerySet rewrite(const std::string& query, ChatModel& chat, const TemplateStore& templates,
                 const RewriteOptions& options) {
    if (options.n != 1 && options.n != 3) {
        throw PreconditionError("rewrite count must be 1 or 3, got " + std::to_string(options.n));
    }
    QuerySet out;
    out.original = query;

    std::string passage;
    try {
        const auto raw = chat.complete(templates.render(templates::kRewritePassage,
                                                        {{"query", query}, {"examples", options.examples}}));
        passage = std::string(text::trim(raw));
    } catch (const ProviderError& e) {
        throw GenerationError(std::string("rewrite passage step failed: ") + e.what());
    }

    std::string listing;
    try {
        listing = chat.complete(templates.render(templates::kRewriteQueries, {{"query", query}, {"passage", passage}}));
    } catch (const ProviderError& e) {
        throw GenerationError(std::string("rewrite query step failed: ") + e.what());
    }

    auto parsed = parse_rewrites(listing, query);
    if (parsed.size() > options.n) parsed.resize(options.n);
    if (parsed.size() < options.n) {
        out.warnings.push_back("expected " + std::to_string(options.n) + " rewrites, parsed " +
                               std::to_string(parsed.size()));
        spdlog::warn("rewrite: {}", out.warnings.back());
    }
    out.rewrites = std::move(parsed);
    return out;
}

namespace {

using DocRankMap = std::map<std::string, DocumentRanks, std::less<>>;

/// Best rank per document for one query over the whole corpus.
DocRankMap rank_documents(const std::string& query, std::span<const float> query_vector,
                          const RetrievalBundle& bundle) {
    const std::size_t all = bundle.children().size();
    DocRankMap best;
    const auto sparse = score_bm25(query, bundle, all);
    for (std::size_t i = 0; i < sparse.entries.size(); ++i) {
        auto& r = best[bundle.child(sparse.entries[i].child_id).doc_id];
        r.sparse = std::min(r.sparse, i + 1);
    }
    const auto dense = search_dense(query_vector, bundle, all);
    for (std::size_t i = 0; i < dense.entries.size(); ++i) {
        auto& r = best[bundle.child(dense.entries[i].child_id).doc_id];
        r.dense = std::min(r.dense, i + 1);
    }
    return best;
}

DocumentRanks lookup(const DocRankMap& ranks, std::string_view doc_id) {
    auto it = ranks.find(doc_id);
    return it == ranks.end() ? DocumentRanks{} : it->second;
}

}  // namespace

DocumentRanks document_ranks(const std::string& query, const std::string& doc_id, const RetrievalBundle& bundle,
                             Embedder& embedder) {
    const auto vectors = embedder.embed({query});
    return lookup(rank_documents(query, vectors.at(0), bundle), doc_id);
}

bool improves(const DocumentRanks& before, const DocumentRanks& after) noexcept {
    return after.sparse < before.sparse && after.dense < before.dense;
}

FilterReport filter_rewrite_pairs(const std::vector<RewritePair>& pairs, const RetrievalBundle& bundle,
                                  Embedder& embedder, std::size_t max_workers) {
    FilterReport report;
    std::set<std::string, std::less<>> docs;
    for (const auto& c : bundle.children()) docs.insert(c.doc_id);

    std::vector<const RewritePair*> valid;
    std::vector<std::string> queries;
    std::map<std::string, std::size_t, std::less<>> query_index;
    for (const auto& p : pairs) {
        if (!docs.contains(p.source_doc_id)) {
            report.errors.push_back("unknown source_doc_id '" + p.source_doc_id + "' for query '" + p.query + "'");
            continue;
        }
        if (p.query == p.rewrite) {
            report.errors.push_back("rewrite equals query '" + p.query + "'");
            continue;
        }
        valid.push_back(&p);
        for (const auto* q : {&p.query, &p.rewrite}) {
            if (query_index.emplace(*q, queries.size()).second) queries.push_back(*q);
        }
    }

    std::vector<Embedding> vectors;
    if (!queries.empty()) vectors = embedder.embed(queries);
    if (vectors.size() != queries.size()) throw ProviderError("embedder dropped query vectors");

    std::vector<DocRankMap> ranks(queries.size());
    parallel_for(queries.size(), max_workers,
                 [&](std::size_t i) { ranks[i] = rank_documents(queries[i], vectors[i], bundle); });

    for (const auto* p : valid) {
        PairDecision d;
        d.pair = *p;
        d.query_ranks = lookup(ranks[query_index.at(p->query)], p->source_doc_id);
        d.rewrite_ranks = lookup(ranks[query_index.at(p->rewrite)], p->source_doc_id);
        d.retained = improves(d.query_ranks, d.rewrite_ranks);
        if (d.retained) report.retained.push_back(*p);
        report.decisions.push_back(std::move(d));
    }
    for (const auto& e : report.errors) spdlog::warn("filter-rewrites: {}", e);
    spdlog::info("filter-rewrites: kept {} of {} pairs", report.retained.size(), pairs.size());
    return report;
}

std::size_t export_training_pairs(const std::vector<RewritePair>& pairs, const std::filesystem::path& path) {
    if (pairs.empty()) throw PreconditionError("no rewrite pairs to export");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw StoreError("cannot write " + path.string());
    for (const auto& p : pairs) {
        json j{{"query", p.query}, {"rewrite", p.rewrite}, {"source_doc_id", p.source_doc_id}};
        if (!p.origin.empty()) j["origin"] = p.origin;
        out << j.dump() << '\n';
    }
    out.flush();
    if (!out) throw StoreError("failed writing " + path.string());
    return pairs.size();
}

std::vector<RewritePair> read_pairs(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw StoreError("cannot read " + path.string());
    std::vector<RewritePair> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            const auto j = json::parse(line);
            RewritePair p;
            p.query = j.at("query").get<std::string>();
            p.rewrite = j.at("rewrite").get<std::string>();
            p.source_doc_id = j.at("source_doc_id").get<std::string>();
            if (j.contains("origin")) p.origin = j.at("origin").get<std::string>();
            out.push_back(std::move(p));
        } catch (const json::exception& e) {
            throw ParseError(path.filename().string() + ": " + e.what() + " at line " + std::to_string(line_no));
        }
    }
    return out;
}

}  // namespace lclfqa
