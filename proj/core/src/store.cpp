#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "lclfqa/error.hpp"
#include "lclfqa/retrieval.hpp"

namespace lclfqa {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kParentsFile = "parents.jsonl";
constexpr const char* kChildrenFile = "children.jsonl";
constexpr const char* kPostingsFile = "postings.json";
constexpr const char* kVectorsFile = "vectors.f32";

json span_to_json(const text::Span& s) { return json::array({s.begin, s.end}); }

text::Span span_from_json(const json& j) { return {j.at(0).get<std::size_t>(), j.at(1).get<std::size_t>()}; }

json parent_to_json(const ParentChunk& p) {
    json sections = json::array();
    for (const auto& s : p.sections) {
        json js{{"section_id", s.section_id}, {"span", span_to_json(s.span)}};
        js["header"] = s.header ? json(*s.header) : json(nullptr);
        sections.push_back(std::move(js));
    }
    return {{"parent_id", p.parent_id},
            {"doc_id", p.doc_id},
            {"sections", std::move(sections)},
            {"text", p.text},
            {"word_count", p.word_count},
            {"pages", json::array({p.pages.first, p.pages.last})},
            {"footnote_ids", p.footnote_ids}};
}

ParentChunk parent_from_json(const json& j) {
    ParentChunk p;
    p.parent_id = j.at("parent_id").get<std::string>();
    p.doc_id = j.at("doc_id").get<std::string>();
    for (const auto& js : j.at("sections")) {
        ParentSection s;
        s.section_id = js.at("section_id").get<std::string>();
        if (!js.at("header").is_null()) s.header = js.at("header").get<std::string>();
        s.span = span_from_json(js.at("span"));
        p.sections.push_back(std::move(s));
    }
    p.text = j.at("text").get<std::string>();
    p.word_count = j.at("word_count").get<std::size_t>();
    p.pages = {j.at("pages").at(0).get<int>(), j.at("pages").at(1).get<int>()};
    p.footnote_ids = j.at("footnote_ids").get<std::vector<std::string>>();
    return p;
}

json child_to_json(const ChildChunk& c) {
    json j{{"child_id", c.child_id},
           {"doc_id", c.doc_id},
           {"kind", std::string(to_string(c.kind))},
           {"parent_ids", c.parent_ids},
           {"text", c.text},
           {"word_count", c.word_count},
           {"footnote_ids", c.footnote_ids}};
    j["page"] = c.page ? json(*c.page) : json(nullptr);
    j["parent_span"] = c.parent_span ? span_to_json(*c.parent_span) : json(nullptr);
    return j;
}

ChildChunk child_from_json(const json& j) {
    ChildChunk c;
    c.child_id = j.at("child_id").get<std::string>();
    c.doc_id = j.at("doc_id").get<std::string>();
    const auto kind = j.at("kind").get<std::string>();
    const auto parsed = parse_child_kind(kind);
    if (!parsed) throw StoreError("unknown child kind '" + kind + "'");
    c.kind = *parsed;
    c.parent_ids = j.at("parent_ids").get<std::vector<std::string>>();
    c.text = j.at("text").get<std::string>();
    c.word_count = j.at("word_count").get<std::size_t>();
    c.footnote_ids = j.at("footnote_ids").get<std::vector<std::string>>();
    if (!j.at("page").is_null()) c.page = j.at("page").get<int>();
    if (!j.at("parent_span").is_null()) c.parent_span = span_from_json(j.at("parent_span"));
    return c;
}

json manifest_to_json(const StoreManifest& m) {
    return {{"version", m.version},
            {"corpus_id", m.corpus_id},
            {"dimension", m.dimension},
            {"counts", {{"parents", m.parent_count}, {"children", m.child_count}, {"terms", m.term_count}}},
            {"parameters",
             {{"k1", m.bm25.k1},
              {"b", m.bm25.b},
              {"parent_size", m.chunking.parent_size},
              {"child_size", m.chunking.child_size},
              {"chunking", std::string(to_string(m.chunking.mode))},
              {"embedding_model", m.embedding_model}}}};
}

StoreManifest manifest_from_json(const json& j) {
    StoreManifest m;
    m.version = j.at("version").get<int>();
    if (m.version != kStoreVersion) throw StoreError("unsupported store version " + std::to_string(m.version));
    m.corpus_id = j.at("corpus_id").get<std::string>();
    m.dimension = j.at("dimension").get<std::size_t>();
    const auto& counts = j.at("counts");
    m.parent_count = counts.at("parents").get<std::size_t>();
    m.child_count = counts.at("children").get<std::size_t>();
    m.term_count = counts.at("terms").get<std::size_t>();
    const auto& params = j.at("parameters");
    m.bm25.k1 = params.at("k1").get<double>();
    m.bm25.b = params.at("b").get<double>();
    m.chunking.parent_size = params.at("parent_size").get<std::size_t>();
    m.chunking.child_size = params.at("child_size").get<std::size_t>();
    const auto mode = params.at("chunking").get<std::string>();
    const auto parsed = parse_chunking_mode(mode);
    if (!parsed) throw StoreError("unknown chunking mode '" + mode + "'");
    m.chunking.mode = *parsed;
    m.embedding_model = params.at("embedding_model").get<std::string>();
    return m;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode | std::ios::trunc);
    if (!out) throw StoreError("cannot write " + path.string());
    return out;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
    if (!fs::exists(path)) throw StoreError("store file missing: " + path.string());
    std::ifstream in(path, mode);
    if (!in) throw StoreError("cannot read " + path.string());
    return in;
}

template <typename T, typename F>
std::vector<T> read_jsonl(const fs::path& path, F&& from_json) {
    auto in = open_in(path);
    std::vector<T> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw StoreError(path.filename().string() + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void write_f32_le(std::ostream& out, const std::vector<float>& data) {
    std::vector<char> bytes(data.size() * 4);
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto bits = std::bit_cast<std::uint32_t>(data[i]);
        for (int b = 0; b < 4; ++b) bytes[i * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::vector<float> read_f32_le(const std::string& bytes) {
    std::vector<float> data(bytes.size() / 4);
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i * 4 + b])) << (8 * b);
        data[i] = std::bit_cast<float>(bits);
    }
    return data;
}

}  // namespace

StoreManifest persist_store(const RetrievalBundle& bundle, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw StoreError("cannot create store directory " + dir.string() + ": " + ec.message());

    {
        auto out = open_out(dir / kParentsFile);
        for (const auto& p : bundle.parents()) out << parent_to_json(p).dump() << '\n';
    }
    {
        auto out = open_out(dir / kChildrenFile);
        for (const auto& c : bundle.children()) out << child_to_json(c).dump() << '\n';
    }
    {
        const auto& sparse = bundle.sparse();
        json terms = json::object();
        for (const auto& [term, list] : sparse.postings) {
            json arr = json::array();
            for (const auto& p : list) arr.push_back(json::array({p.doc, p.tf}));
            terms[term] = std::move(arr);
        }
        json postings{{"doc_lengths", sparse.doc_lengths}, {"avg_length", sparse.avg_length}, {"terms", std::move(terms)}};
        auto out = open_out(dir / kPostingsFile);
        out << postings.dump();
    }
    {
        auto out = open_out(dir / kVectorsFile, std::ios::out | std::ios::binary);
        write_f32_le(out, bundle.dense().data);
    }
    {
        auto out = open_out(dir / kManifestFile);
        out << manifest_to_json(bundle.manifest()).dump(2) << '\n';
        if (!out) throw StoreError("failed writing " + (dir / kManifestFile).string());
    }
    spdlog::info("wrote store to {}", dir.string());
    return bundle.manifest();
}

RetrievalBundle load_store(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw StoreError("store directory not found: " + dir.string());

    StoreManifest manifest;
    try {
        auto in = open_in(dir / kManifestFile);
        manifest = manifest_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw StoreError(std::string("malformed manifest: ") + e.what());
    }

    auto parents = read_jsonl<ParentChunk>(dir / kParentsFile, parent_from_json);
    auto children = read_jsonl<ChildChunk>(dir / kChildrenFile, child_from_json);
    if (parents.size() != manifest.parent_count) {
        throw StoreError("manifest lists " + std::to_string(manifest.parent_count) + " parents, found " +
                         std::to_string(parents.size()));
    }
    if (children.size() != manifest.child_count) {
        throw StoreError("manifest lists " + std::to_string(manifest.child_count) + " children, found " +
                         std::to_string(children.size()));
    }

    SparseIndex sparse;
    try {
        auto in = open_in(dir / kPostingsFile);
        const auto j = json::parse(in);
        sparse.doc_lengths = j.at("doc_lengths").get<std::vector<std::uint32_t>>();
        for (const auto& [term, arr] : j.at("terms").items()) {
            auto& list = sparse.postings[term];
            for (const auto& p : arr) list.push_back({p.at(0).get<std::uint32_t>(), p.at(1).get<std::uint32_t>()});
        }
    } catch (const json::exception& e) {
        throw StoreError(std::string("malformed postings: ") + e.what());
    }
    std::uint64_t total = 0;
    for (auto len : sparse.doc_lengths) total += len;
    sparse.avg_length = sparse.doc_lengths.empty()
                            ? 0.0
                            : static_cast<double>(total) / static_cast<double>(sparse.doc_lengths.size());
    if (sparse.postings.size() != manifest.term_count) {
        throw StoreError("manifest lists " + std::to_string(manifest.term_count) + " terms, found " +
                         std::to_string(sparse.postings.size()));
    }

    DenseIndex dense;
    dense.dimension = manifest.dimension;
    {
        auto in = open_in(dir / kVectorsFile, std::ios::in | std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        const auto bytes = buf.str();
        const std::size_t expected = manifest.child_count * manifest.dimension * 4;
        if (bytes.size() != expected) {
            throw StoreError("vectors.f32 holds " + std::to_string(bytes.size()) + " bytes, expected " +
                             std::to_string(expected));
        }
        dense.data = read_f32_le(bytes);
    }

    try {
        return RetrievalBundle(std::move(parents), std::move(children), std::move(sparse), std::move(dense),
                               std::move(manifest));
    } catch (const IntegrityError& e) {
        throw StoreError(std::string("inconsistent store: ") + e.what());
    }
}

}  // namespace lclfqa
