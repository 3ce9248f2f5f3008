#include <gtest/gtest.h>

#include <fstream>

#include <nlohmann/json.hpp>

#include "lclfqa/error.hpp"
#include "lclfqa/retrieval.hpp"
#include "support.hpp"

using namespace lclfqa;
namespace fs = std::filesystem;

namespace {

RetrievalBundle fixture_bundle() {
    const auto elements = parse_layout(support::fixture_dir() / "layout.jsonl");
    BuildOptions opts;
    opts.corpus_id = "fixture";
    opts.chunking = {60, 30, ChunkingMode::Layout};
    auto corpus = chunk_corpus(elements, opts.chunking);
    HashEmbedder e(16);
    return build_indexes(corpus.parents, corpus.children, e, opts);
}

std::string message_of(const fs::path& dir) {
    try {
        load_store(dir);
    } catch (const StoreError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Store, RoundTripIsIdentity) {
    const auto b = fixture_bundle();
    support::TempDir dir;
    const auto manifest = persist_store(b, dir.path());
    EXPECT_EQ(manifest, b.manifest());
    const auto loaded = load_store(dir.path());
    EXPECT_EQ(loaded, b);
    EXPECT_EQ(loaded.manifest(), b.manifest());
    EXPECT_EQ(loaded.sparse().avg_length, b.sparse().avg_length);
    EXPECT_EQ(fs::file_size(dir / "vectors.f32"), b.children().size() * 16 * 4);
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& f : fs::directory_iterator(dir.path())) ++files;
    EXPECT_EQ(files, 5u);
}

TEST(Store, RandomBundlesRoundTrip) {
    Rng rng(99);
    for (int i = 0; i < 10; ++i) {
        const auto elements = support::random_layout(rng);
        BuildOptions opts;
        opts.chunking = {10 + uniform_below(rng, 50), 5 + uniform_below(rng, 20), ChunkingMode::Layout};
        const auto corpus = chunk_corpus(elements, opts.chunking);
        if (corpus.children.empty()) continue;
        HashEmbedder e(1 + uniform_below(rng, 24));
        const auto b = build_indexes(corpus.parents, corpus.children, e, opts);
        support::TempDir dir;
        persist_store(b, dir.path());
        EXPECT_EQ(load_store(dir.path()), b);
    }
}

TEST(Store, CorruptVectorLength) {
    support::TempDir dir;
    persist_store(fixture_bundle(), dir.path());
    fs::resize_file(dir / "vectors.f32", fs::file_size(dir / "vectors.f32") - 3);
    EXPECT_NE(message_of(dir.path()).find("vectors.f32"), std::string::npos);
}

TEST(Store, UnsupportedVersion) {
    support::TempDir dir;
    persist_store(fixture_bundle(), dir.path());
    auto m = nlohmann::json::parse(support::read_file(dir / "manifest.json"));
    m["version"] = 99;
    support::write_file(dir / "manifest.json", m.dump());
    EXPECT_NE(message_of(dir.path()).find("unsupported store version"), std::string::npos);
}

TEST(Store, MissingFile) {
    support::TempDir dir;
    persist_store(fixture_bundle(), dir.path());
    fs::remove(dir / "postings.json");
    EXPECT_NE(message_of(dir.path()).find("postings.json"), std::string::npos);
    EXPECT_THROW(load_store(dir / "absent"), StoreError);
}

TEST(Store, CountMismatch) {
    support::TempDir dir;
    persist_store(fixture_bundle(), dir.path());
    auto m = nlohmann::json::parse(support::read_file(dir / "manifest.json"));
    m["counts"]["children"] = 3;
    support::write_file(dir / "manifest.json", m.dump());
    EXPECT_THROW(load_store(dir.path()), StoreError);
}
