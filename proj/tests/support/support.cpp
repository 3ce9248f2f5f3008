#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "lclfqa/tags.hpp"

namespace lclfqa::support {

namespace fs = std::filesystem;

fs::path fixture_dir() { return fs::path(LCLFQA_FIXTURE_DIR); }

nlohmann::json fixture_config() {
    std::ifstream in(fixture_dir() / "mock_config.json");
    return nlohmann::json::parse(in);
}

RetrievalBundle fixture_bundle(ChunkingMode mode) {
    const auto config = fixture_config();
    BuildOptions opts;
    opts.corpus_id = config["ingest"]["corpus_id"].get<std::string>();
    opts.chunking = {config["ingest"]["parent_size"].get<std::size_t>(), config["ingest"]["child_size"].get<std::size_t>(),
                     mode};
    const auto corpus = chunk_corpus(parse_layout(fixture_dir() / "layout.jsonl"), opts.chunking);
    HashEmbedder embedder(config["provider"]["embedding_dimension"].get<std::size_t>());
    return build_indexes(corpus.parents, corpus.children, embedder, opts);
}

TempDir::TempDir(const std::string& prefix) {
    static std::atomic<int> counter{0};
    Rng rng(std::random_device{}());
    path_ = fs::temp_directory_path() /
            (prefix + "-" + std::to_string(rng() % 1000000000) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------

namespace {

const std::vector<std::string>& vocabulary() {
    static const std::vector<std::string> words = {
        "tax",      "treaty",   "income",   "dividend", "withholding", "payment", "foreign",  "court",
        "section",  "royalty",  "swap",     "holder",   "agreement",   "rate",    "transfer", "pricing",
        "entity",   "source",   "partner",  "interest", "basis",       "credit",  "penalty",  "notice",
        "taxpayer", "benefit",  "property", "lease",    "contract",    "filing",  "return",   "audit"};
    return words;
}

std::string random_words(Rng& rng, std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out.push_back(' ');
        out += vocabulary()[uniform_below(rng, vocabulary().size())];
    }
    return out;
}

std::string random_sentence(Rng& rng) {
    // Occasionally far longer than any child budget used in the tests.
    const std::size_t n = uniform01(rng) < 0.1 ? 30 + uniform_below(rng, 40) : 1 + uniform_below(rng, 14);
    static const char kEnds[] = {'.', '.', '.', '?', '!'};
    auto s = random_words(rng, n);
    s.front() = static_cast<char>(std::toupper(static_cast<unsigned char>(s.front())));
    s.push_back(kEnds[uniform_below(rng, sizeof kEnds)]);
    return s;
}

}  // namespace

std::vector<LayoutElement> random_layout(Rng& rng) {
    std::vector<LayoutElement> out;
    const std::size_t docs = 1 + uniform_below(rng, 3);
    for (std::size_t d = 0; d < docs; ++d) {
        const std::string doc = "doc" + std::to_string(d);
        std::int64_t order = 0;
        int footnote_no = 1;
        auto add = [&](int page, ElementKind kind, std::string text) {
            out.push_back({doc + "-e" + std::to_string(order), doc, page, order, kind, std::move(text)});
            ++order;
        };
        const int pages = 1 + static_cast<int>(uniform_below(rng, 5));
        for (int page = 1; page <= pages; ++page) {
            if (uniform01(rng) < 0.8) add(page, ElementKind::PageHeader, "RUNNING head " + doc);
            const std::size_t items = uniform_below(rng, 6);
            for (std::size_t i = 0; i < items; ++i) {
                if (uniform01(rng) < 0.3) {
                    add(page, ElementKind::SectionHeader, "Part " + random_words(rng, 1 + uniform_below(rng, 3)));
                } else {
                    std::string para;
                    const std::size_t sentences = 1 + uniform_below(rng, 4);
                    for (std::size_t s = 0; s < sentences; ++s) {
                        if (s) para.push_back(' ');
                        para += random_sentence(rng);
                    }
                    add(page, ElementKind::Paragraph, para);
                }
            }
            const std::size_t notes = uniform01(rng) < 0.4 ? 1 + uniform_below(rng, 2) : 0;
            for (std::size_t f = 0; f < notes; ++f) {
                add(page, ElementKind::Footnote, std::to_string(footnote_no++) + " " + random_sentence(rng));
            }
            if (uniform01(rng) < 0.7) add(page, ElementKind::PageFooter, "RUNNING page " + std::to_string(page));
        }
    }
    return out;
}

ChildChunk make_child(std::string id, std::string doc_id, std::string text) {
    ChildChunk c;
    c.child_id = std::move(id);
    c.doc_id = std::move(doc_id);
    c.text = std::move(text);
    return c;
}

std::vector<Ranking> random_rankings(Rng& rng, std::size_t ids, std::size_t lists) {
    std::vector<Ranking> out;
    for (std::size_t l = 0; l < lists; ++l) {
        std::vector<std::string> pool;
        for (std::size_t i = 0; i < ids; ++i) {
            std::string id = std::to_string(i);
            if (id.size() < 2) id.insert(0, "0");
            pool.push_back("c" + id);
        }
        for (std::size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[uniform_below(rng, i)]);
        pool.resize(uniform_below(rng, ids + 1));
        Ranking r;
        r.source = "list" + std::to_string(l);
        for (const auto& id : pool) r.entries.push_back({id, static_cast<double>(uniform_below(rng, 5))});
        std::sort(r.entries.begin(), r.entries.end(), [](const ScoredChunk& a, const ScoredChunk& b) {
            return a.score != b.score ? a.score > b.score : a.child_id < b.child_id;
        });
        out.push_back(std::move(r));
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> oracle_terms(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        const auto u = static_cast<unsigned char>(ch);
        if (std::isalnum(u) || u >= 0x80) {
            cur.push_back(static_cast<char>(std::tolower(u)));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

bool by_score_then_id(const ScoredChunk& a, const ScoredChunk& b) {
    return a.score != b.score ? a.score > b.score : a.child_id < b.child_id;
}

}  // namespace

std::map<std::string, double> bm25_oracle(const std::vector<std::pair<std::string, std::string>>& docs,
                                          const std::string& query, double k1, double b) {
    std::vector<std::vector<std::string>> tokens;
    double total = 0;
    for (const auto& [id, text] : docs) {
        tokens.push_back(oracle_terms(text));
        total += static_cast<double>(tokens.back().size());
    }
    const double n = static_cast<double>(docs.size());
    const double avgdl = total / n;

    auto q = oracle_terms(query);
    std::sort(q.begin(), q.end());
    q.erase(std::unique(q.begin(), q.end()), q.end());

    std::map<std::string, double> scores;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        double score = 0;
        for (const auto& term : q) {
            const double tf = static_cast<double>(std::count(tokens[d].begin(), tokens[d].end(), term));
            if (tf == 0) continue;
            double df = 0;
            for (const auto& t : tokens) df += std::find(t.begin(), t.end(), term) != t.end() ? 1 : 0;
            const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
            const double dl = static_cast<double>(tokens[d].size());
            score += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl));
        }
        if (score > 0) scores[docs[d].first] = score;
    }
    return scores;
}

std::vector<ScoredChunk> rrf_oracle(const std::vector<Ranking>& rankings, double lambda, std::size_t k) {
    std::set<std::string> ids;
    for (const auto& r : rankings)
        for (const auto& e : r.entries) ids.insert(e.child_id);
    std::vector<ScoredChunk> out;
    for (const auto& id : ids) {
        double score = 0;
        for (const auto& r : rankings) {
            for (std::size_t pos = 0; pos < r.entries.size(); ++pos) {
                if (r.entries[pos].child_id == id) {
                    score += 1.0 / (lambda + static_cast<double>(pos + 1));
                    break;
                }
            }
        }
        out.push_back({id, score});
    }
    std::sort(out.begin(), out.end(), by_score_then_id);
    if (out.size() > k) out.resize(k);
    return out;
}

std::vector<ScoredChunk> cosine_oracle(const RetrievalBundle& bundle, const std::vector<float>& query) {
    std::vector<ScoredChunk> out;
    const auto& dense = bundle.dense();
    for (std::size_t i = 0; i < dense.rows(); ++i) {
        double dot = 0, nq = 0, nr = 0;
        for (std::size_t j = 0; j < dense.dimension; ++j) {
            const double a = query[j];
            const double r = dense.data[i * dense.dimension + j];
            dot += a * r;
            nq += a * a;
            nr += r * r;
        }
        out.push_back({bundle.children()[i].child_id, dot / std::sqrt(nq * nr)});
    }
    std::sort(out.begin(), out.end(), by_score_then_id);
    return out;
}

std::pair<std::size_t, std::size_t> oracle_document_ranks(const RetrievalBundle& bundle, const std::string& query,
                                                          const std::string& doc_id, const std::vector<float>& query_vector) {
    std::vector<std::pair<std::string, std::string>> docs;
    for (const auto& c : bundle.children()) docs.emplace_back(c.child_id, c.text);
    std::vector<ScoredChunk> sparse;
    for (const auto& [id, score] : bm25_oracle(docs, query, bundle.manifest().bm25.k1, bundle.manifest().bm25.b))
        sparse.push_back({id, score});
    std::sort(sparse.begin(), sparse.end(), by_score_then_id);
    const auto dense = cosine_oracle(bundle, query_vector);

    auto best = [&](const std::vector<ScoredChunk>& list) {
        for (std::size_t i = 0; i < list.size(); ++i)
            if (bundle.child(list[i].child_id).doc_id == doc_id) return i + 1;
        return std::numeric_limits<std::size_t>::max();
    };
    return {best(sparse), best(dense)};
}

std::pair<double, std::vector<int>> best_bipartition(const std::vector<std::vector<double>>& points) {
    const std::size_t n = points.size();
    const std::size_t dim = points.front().size();
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> best_labels;
    // Point 0 always in group 0; mask bits choose group 1 membership for points 1..n-1.
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << (n - 1)); ++mask) {
        std::vector<int> labels(n, 0);
        for (std::size_t i = 1; i < n; ++i) labels[i] = static_cast<int>((mask >> (i - 1)) & 1);
        double sse = 0;
        for (int g = 0; g < 2; ++g) {
            std::vector<double> mean(dim, 0.0);
            double count = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (labels[i] != g) continue;
                for (std::size_t j = 0; j < dim; ++j) mean[j] += points[i][j];
                ++count;
            }
            for (auto& m : mean) m /= count;
            for (std::size_t i = 0; i < n; ++i) {
                if (labels[i] != g) continue;
                for (std::size_t j = 0; j < dim; ++j) sse += (points[i][j] - mean[j]) * (points[i][j] - mean[j]);
            }
        }
        if (sse < best) {
            best = sse;
            best_labels = labels;
        }
    }
    return {best, best_labels};
}

// ---------------------------------------------------------------------------

namespace {

std::size_t count_words(std::string_view s) {
    std::size_t n = 0;
    bool in = false;
    for (char ch : s) {
        const bool space = std::isspace(static_cast<unsigned char>(ch)) != 0;
        if (!space && !in) ++n;
        in = !space;
    }
    return n;
}

std::string trimmed(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

bool all_space(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; });
}

struct ExpectedSection {
    std::optional<std::string> header;
    std::vector<std::string> paragraphs;
    int first_page = 0;
    int last_page = 0;

    [[nodiscard]] std::string text() const {
        std::string body;
        for (std::size_t i = 0; i < paragraphs.size(); ++i) {
            if (i) body += "\n\n";
            body += paragraphs[i];
        }
        if (!header) return body;
        return body.empty() ? *header : *header + "\n" + body;
    }
};

struct ExpectedDoc {
    std::vector<ExpectedSection> sections;
    std::map<int, std::vector<std::string>> footnotes;  // page -> texts in order
    std::vector<std::string> words;                     // paragraph and header words, for naive mode
};

std::map<std::string, ExpectedDoc> expected_docs(std::vector<LayoutElement> elements) {
    std::stable_sort(elements.begin(), elements.end(), [](const LayoutElement& a, const LayoutElement& b) {
        return a.doc_id != b.doc_id ? a.doc_id < b.doc_id : a.order < b.order;
    });
    std::map<std::string, ExpectedDoc> docs;
    for (const auto& e : elements) {
        auto& doc = docs[e.doc_id];
        switch (e.kind) {
            case ElementKind::PageHeader:
            case ElementKind::PageFooter:
                break;
            case ElementKind::Footnote:
                doc.footnotes[e.page].push_back(trimmed(e.text));
                break;
            case ElementKind::SectionHeader:
                doc.sections.push_back({trimmed(e.text), {}, e.page, e.page});
                break;
            case ElementKind::Paragraph:
                if (doc.sections.empty()) doc.sections.push_back({std::nullopt, {}, e.page, e.page});
                doc.sections.back().paragraphs.push_back(trimmed(e.text));
                doc.sections.back().first_page = std::min(doc.sections.back().first_page, e.page);
                doc.sections.back().last_page = std::max(doc.sections.back().last_page, e.page);
                break;
        }
        if (e.kind == ElementKind::Paragraph || e.kind == ElementKind::SectionHeader) {
            std::istringstream in(e.text);
            for (std::string w; in >> w;) doc.words.push_back(w);
        }
    }
    return docs;
}

// Words of the first sentence of parent text starting at `begin`, not crossing `limit`.
std::size_t first_unit_words(const std::string& text, std::size_t begin, std::size_t limit) {
    std::size_t end = limit;
    for (std::size_t i = begin; i < limit; ++i) {
        const char c = text[i];
        if ((c == '.' || c == '?' || c == '!') && i + 1 < limit &&
            std::isspace(static_cast<unsigned char>(text[i + 1]))) {
            end = i + 1;
            break;
        }
        if (c == '\n' && i + 1 < limit && text[i + 1] == '\n') {
            end = i;
            break;
        }
    }
    return count_words(std::string_view(text).substr(begin, end - begin));
}

bool has_internal_boundary(std::string_view body) {
    for (std::size_t i = 0; i + 1 < body.size(); ++i) {
        const char c = body[i];
        if ((c == '.' || c == '?' || c == '!') && std::isspace(static_cast<unsigned char>(body[i + 1]))) return true;
        if (c == '\n' && body[i + 1] == '\n') return true;
    }
    return false;
}

class Violations {
public:
    template <typename... Parts>
    void add(const Parts&... parts) {
        std::ostringstream os;
        (os << ... << parts);
        list.push_back(os.str());
    }
    std::vector<std::string> list;
};

void check_layout(const std::map<std::string, ExpectedDoc>& docs, const ChunkingOptions& options,
                  const ChunkedCorpus& corpus, Violations& v) {
    const std::size_t L = options.parent_size;
    std::size_t orphan_footnotes = 0;

    for (const auto& [doc_id, doc] : docs) {
        std::vector<const ParentChunk*> parents;
        for (const auto& p : corpus.parents)
            if (p.doc_id == doc_id) parents.push_back(&p);

        const auto& secs = doc.sections;
        std::vector<std::size_t> wc;
        for (const auto& s : secs) wc.push_back(count_words(s.text()));

        if (secs.empty() && !parents.empty()) v.add(doc_id, ": parents without sections");
        std::vector<std::pair<std::size_t, std::size_t>> ranges;
        for (std::size_t pi = 0; pi < parents.size(); ++pi) {
            const auto& p = *parents[pi];
            if (p.parent_id != doc_id + ":p" + std::to_string(pi)) v.add(p.parent_id, ": unexpected id");
            if (p.sections.empty()) {
                v.add(p.parent_id, ": no sections");
                return;
            }
            std::vector<std::size_t> idx;
            for (const auto& s : p.sections) {
                const auto prefix = doc_id + ":s";
                if (!s.section_id.starts_with(prefix)) {
                    v.add(p.parent_id, ": foreign section ", s.section_id);
                    return;
                }
                idx.push_back(std::stoul(s.section_id.substr(prefix.size())));
            }
            for (std::size_t i = 1; i < idx.size(); ++i)
                if (idx[i] != idx[i - 1] + 1) v.add(p.parent_id, ": sections not consecutive");
            if (idx.back() >= secs.size()) {
                v.add(p.parent_id, ": section index out of range");
                return;
            }
            ranges.emplace_back(idx.front(), idx.back());

            // Text is the exact join of the governed sections.
            std::string expect;
            std::size_t words = 0;
            int first_page = secs[idx.front()].first_page, last_page = secs[idx.front()].last_page;
            for (std::size_t i = 0; i < idx.size(); ++i) {
                const auto& s = secs[idx[i]];
                if (i) expect.push_back('\n');
                const auto begin = expect.size();
                expect += s.text();
                if (p.sections[i].span != text::Span{begin, expect.size()}) v.add(p.parent_id, ": bad section span");
                if (p.sections[i].header != s.header) v.add(p.parent_id, ": bad section header");
                words += wc[idx[i]];
                first_page = std::min(first_page, s.first_page);
                last_page = std::max(last_page, s.last_page);
            }
            if (p.text != expect) v.add(p.parent_id, ": text differs from its sections");
            if (p.word_count != words) v.add(p.parent_id, ": word_count ", p.word_count, " != ", words);
            if (p.pages != PageRange{first_page, last_page}) v.add(p.parent_id, ": page range wrong");
            if (p.text.find("RUNNING") != std::string::npos) v.add(p.parent_id, ": contains page header/footer");

            // Minimality: dropping the last section leaves the parent under budget,
            // and a non-final parent reaches the budget.
            if (words - wc[idx.back()] >= L && idx.size() > 1) v.add(p.parent_id, ": not minimal");
            const bool final_parent = pi + 1 == parents.size();
            if (!final_parent && words < L) v.add(p.parent_id, ": non-final parent under budget");
            if (final_parent && idx.back() + 1 != secs.size()) v.add(p.parent_id, ": final parent misses sections");
        }
        if (!secs.empty()) {
            if (parents.empty()) v.add(doc_id, ": sections but no parents");
            else if (ranges.front().first != 0) v.add(doc_id, ": first section not covered");
        }
        for (std::size_t i = 1; i < ranges.size(); ++i) {
            const auto last = ranges[i - 1].second;
            const bool overlaps = ranges[i].first == last;
            const bool expect_overlap = wc[last] < L;
            if (overlaps != expect_overlap) v.add(parents[i]->parent_id, ": overlap rule broken");
            if (!overlaps && ranges[i].first != last + 1) v.add(parents[i]->parent_id, ": gap between parents");
        }

        // Section-based children: exact cover of each parent's text.
        for (const auto* pp : parents) {
            const auto& p = *pp;
            std::vector<const ChildChunk*> kids;
            for (const auto& c : corpus.children)
                if (c.kind == ChildKind::SectionBased && !c.parent_ids.empty() && c.parent_ids.front() == p.parent_id)
                    kids.push_back(&c);
            const auto first_char = p.text.find_first_not_of(" \t\r\n");
            if (first_char == std::string::npos) {
                if (!kids.empty()) v.add(p.parent_id, ": children of blank parent");
                continue;
            }
            if (kids.empty()) {
                v.add(p.parent_id, ": no children");
                continue;
            }
            const auto last_char = p.text.find_last_not_of(" \t\r\n") + 1;
            std::size_t cursor = first_char;
            for (std::size_t ci = 0; ci < kids.size(); ++ci) {
                const auto& c = *kids[ci];
                if (c.child_id != p.parent_id + ":c" + std::to_string(ci)) v.add(c.child_id, ": unexpected id");
                if (c.parent_ids.size() != 1) v.add(c.child_id, ": more than one parent");
                if (!c.parent_span) {
                    v.add(c.child_id, ": no span");
                    continue;
                }
                const auto span = *c.parent_span;
                if (span.begin < cursor || span.end > p.text.size() || span.begin >= span.end) {
                    v.add(c.child_id, ": span out of order");
                    continue;
                }
                if (!all_space(std::string_view(p.text).substr(cursor, span.begin - cursor)))
                    v.add(c.child_id, ": text skipped before child");
                cursor = span.end;
                const auto body = std::string_view(p.text).substr(span.begin, span.size());

                std::string prefix;
                std::size_t home_end = 0;
                for (const auto& s : p.sections) {
                    const bool overlap = s.span.begin < span.end && span.begin < s.span.end;
                    if (overlap && s.header) prefix += "<section-header>" + *s.header + "</section-header>";
                    if (s.span.begin <= span.begin && span.begin < s.span.end) home_end = s.span.end;
                }
                if (!prefix.empty()) prefix += "\n";
                if (c.text != prefix + std::string(body)) v.add(c.child_id, ": text is not tags + parent slice");
                if (c.word_count != count_words(body)) v.add(c.child_id, ": word_count wrong");
                if (c.word_count > options.child_size) {
                    if (has_internal_boundary(body) || span.end > home_end)
                        v.add(c.child_id, ": over budget but not a single sentence");
                }
                if (ci + 1 < kids.size() && kids[ci + 1]->parent_span) {
                    const auto next = kids[ci + 1]->parent_span->begin;
                    std::size_t limit = p.text.size();
                    for (const auto& s : p.sections)
                        if (s.span.begin <= next && next < s.span.end) limit = s.span.end;
                    if (c.word_count + first_unit_words(p.text, next, limit) <= options.child_size)
                        v.add(c.child_id, ": packing not greedy");
                }
                if (c.text.find("RUNNING") != std::string::npos) v.add(c.child_id, ": contains page header/footer");
            }
            if (cursor != last_char) v.add(p.parent_id, ": children stop before the end of the parent");
        }

        // Footnote children and parent links, both directions.
        for (const auto& [page, texts] : doc.footnotes) {
            const auto id = doc_id + ":f" + std::to_string(page);
            const auto it = std::find_if(corpus.children.begin(), corpus.children.end(),
                                         [&](const ChildChunk& c) { return c.child_id == id; });
            if (it == corpus.children.end()) {
                v.add(id, ": missing footnote chunk");
                continue;
            }
            std::string joined;
            for (std::size_t i = 0; i < texts.size(); ++i) joined += (i ? "\n" : "") + texts[i];
            if (it->kind != ChildKind::FootnoteBased) v.add(id, ": wrong kind");
            if (it->text != joined) v.add(id, ": text differs from page footnotes");
            if (it->page != page) v.add(id, ": wrong page");
            if (it->footnote_ids.size() != texts.size()) v.add(id, ": footnote count wrong");
            std::vector<std::string> expect_parents;
            for (const auto* p : parents)
                if (p->pages.first <= page && page <= p->pages.last) expect_parents.push_back(p->parent_id);
            if (it->parent_ids != expect_parents) v.add(id, ": parent links differ from page coverage");
            if (expect_parents.empty()) ++orphan_footnotes;
            for (const auto* p : parents) {
                const bool linked = std::find(it->parent_ids.begin(), it->parent_ids.end(), p->parent_id) !=
                                    it->parent_ids.end();
                const bool lists_all = std::all_of(it->footnote_ids.begin(), it->footnote_ids.end(), [&](const auto& f) {
                    return std::find(p->footnote_ids.begin(), p->footnote_ids.end(), f) != p->footnote_ids.end();
                });
                const bool lists_any = std::any_of(it->footnote_ids.begin(), it->footnote_ids.end(), [&](const auto& f) {
                    return std::find(p->footnote_ids.begin(), p->footnote_ids.end(), f) != p->footnote_ids.end();
                });
                if (linked != lists_all || lists_all != lists_any) v.add(id, ": link asymmetric with ", p->parent_id);
            }
            for (const auto* p : parents)
                if (p->text.find(joined) != std::string::npos && !joined.empty())
                    v.add(p->parent_id, ": footnote text inlined");
        }
        for (const auto* p : parents) {
            std::size_t expected = 0;
            for (const auto& [page, texts] : doc.footnotes)
                if (p->pages.first <= page && page <= p->pages.last) expected += texts.size();
            if (p->footnote_ids.size() != expected) v.add(p->parent_id, ": footnote_ids count wrong");
        }
    }

    std::size_t footnote_children = 0;
    for (const auto& c : corpus.children) footnote_children += c.kind == ChildKind::FootnoteBased ? 1 : 0;
    std::size_t pages_with_notes = 0;
    for (const auto& [id, doc] : docs) pages_with_notes += doc.footnotes.size();
    if (footnote_children != pages_with_notes) v.add("footnote chunk count ", footnote_children, " != ", pages_with_notes);
    if (corpus.warnings.size() != orphan_footnotes) v.add("expected ", orphan_footnotes, " orphan footnote warnings");
}

void check_naive(const std::map<std::string, ExpectedDoc>& docs, const ChunkingOptions& options,
                 const ChunkedCorpus& corpus, Violations& v) {
    for (const auto& [doc_id, doc] : docs) {
        std::vector<std::string> words;
        std::size_t pi = 0;
        for (const auto& p : corpus.parents) {
            if (p.doc_id != doc_id) continue;
            if (p.parent_id != doc_id + ":p" + std::to_string(pi++)) v.add(p.parent_id, ": unexpected id");
            if (p.word_count > options.parent_size) v.add(p.parent_id, ": over budget");
            std::istringstream in(p.text);
            std::vector<std::string> pw;
            for (std::string w; in >> w;) pw.push_back(w);
            if (pw.size() != p.word_count) v.add(p.parent_id, ": word_count wrong");
            std::vector<std::string> cw;
            for (const auto& c : corpus.children) {
                if (c.parent_ids != std::vector<std::string>{p.parent_id}) continue;
                if (c.word_count > options.child_size) v.add(c.child_id, ": over budget");
                if (c.text.find("<section-header>") != std::string::npos) v.add(c.child_id, ": tagged in naive mode");
                std::istringstream cin(c.text);
                for (std::string w; cin >> w;) cw.push_back(w);
            }
            if (cw != pw) v.add(p.parent_id, ": children do not cover parent words");
            words.insert(words.end(), pw.begin(), pw.end());
        }
        if (words != doc.words) v.add(doc_id, ": parents do not cover the body words in order");
        for (const auto& [page, texts] : doc.footnotes)
            for (const auto& t : texts)
                for (const auto& p : corpus.parents)
                    if (p.doc_id == doc_id && p.text.find(t) != std::string::npos) v.add(p.parent_id, ": holds footnote");
    }
    for (const auto& c : corpus.children)
        if (c.kind == ChildKind::FootnoteBased) v.add(c.child_id, ": footnote chunk in naive mode");
}

}  // namespace

std::vector<std::string> check_chunking_invariants(const std::vector<LayoutElement>& elements,
                                                   const ChunkingOptions& options, const ChunkedCorpus& corpus) {
    Violations v;
    const auto docs = expected_docs(elements);

    std::set<std::string> ids;
    for (const auto& p : corpus.parents)
        if (!ids.insert(p.parent_id).second) v.add("duplicate parent id ", p.parent_id);
    ids.clear();
    for (const auto& c : corpus.children) {
        if (!ids.insert(c.child_id).second) v.add("duplicate child id ", c.child_id);
        if (c.text.find("RUNNING") != std::string::npos) v.add(c.child_id, ": contains page header/footer");
        for (const auto& pid : c.parent_ids) {
            const auto it = std::find_if(corpus.parents.begin(), corpus.parents.end(),
                                         [&](const ParentChunk& p) { return p.parent_id == pid; });
            if (it == corpus.parents.end()) v.add(c.child_id, ": dangling parent ", pid);
            else if (it->doc_id != c.doc_id) v.add(c.child_id, ": parent from another document");
        }
    }

    if (options.mode == ChunkingMode::Layout) check_layout(docs, options, corpus, v);
    else check_naive(docs, options, corpus, v);
    return v.list;
}

}  // namespace lclfqa::support
