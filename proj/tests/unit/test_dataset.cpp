#include "oracles.hpp"

#include "gk/dataset.hpp"
#include "gk/error.hpp"
#include "gk/hash.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iterator>

#include <unistd.h>

#ifndef GK_TEST_DATA_DIR
#error "GK_TEST_DATA_DIR must be defined"
#endif

using namespace gk;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() / ("gk_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << bytes;
}

/// Rewrites one binary and refreshes its manifest hash so only the payload check can fail.
void replace_payload(const fs::path& dir, const std::string& file, const std::string& bytes) {
    spit(dir / file, bytes);
    auto meta = nlohmann::json::parse(slurp(dir / "meta.json"));
    meta["files"][file] = sha256_file(dir / file);
    spit(dir / "meta.json", meta.dump(1));
}

DatasetBundle graph_bundle() {
    std::mt19937_64 rng(127);
    DatasetBundle b;
    b.name = "synthetic";
    b.level = ItemLevel::Graph;
    std::vector<int> labels;
    for (int k = 0; k < 6; ++k) {
        Graph g = oracle::random_graph(rng, 2, 6, 3);
        b.graphs.push_back(g.with_features(g.features().cast<float>().cast<double>()));
        labels.push_back(k % 2);
    }
    b.labels = LabelVector::from(labels);
    return b;
}

DatasetBundle node_bundle(Index per_class, int classes) {
    const Index n = per_class * classes;
    std::vector<Edge> edges;
    for (Index i = 0; i + 1 < n; ++i) edges.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i + 1));
    DatasetBundle b;
    b.name = "chain";
    b.level = ItemLevel::Node;
    b.graphs.push_back(Graph(n, edges, Matrix::Ones(n, 2)));
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(i % classes);
    b.labels = LabelVector::from(labels);
    b.labels.num_classes = classes;
    return b;
}

DatasetErrorKind load_error(const fs::path& dir) {
    try {
        load_dataset(dir);
    } catch (const DatasetError& e) {
        return e.kind();
    }
    FAIL("expected a dataset error");
    return DatasetErrorKind::Malformed;
}

}  // namespace

TEST_CASE("canonical MUTAG directory") {
    const DatasetBundle b = load_dataset(fs::path(GK_TEST_DATA_DIR) / "mutag");
    CHECK(b.level == ItemLevel::Graph);
    CHECK(b.graphs.size() == 188);
    CHECK(b.labels.num_classes == 2);
    CHECK(b.feature_provenance == FeatureProvenance::OneHotDegree);
    CHECK(b.fingerprint.size() == 64);

    // Independent pass over the edges for the one-hot dimension and row sums.
    Index max_degree = 0;
    for (const auto& g : b.graphs) {
        std::vector<Index> deg(static_cast<std::size_t>(g.num_nodes()), 0);
        for (const auto& [u, v] : g.edges()) ++deg[u], ++deg[v];
        for (Index d : deg) max_degree = std::max(max_degree, d);
        CHECK((g.features().rowwise().sum().array() == 1.0).all());
        for (Index i = 0; i < g.num_nodes(); ++i) CHECK(g.features()(i, deg[static_cast<std::size_t>(i)]) == 1.0);
    }
    CHECK(b.feature_dim() == max_degree + 1);
}

TEST_CASE("one-hot degree examples") {
    SUBCASE("2-node path") {
        const auto out = one_hot_degree_features({Graph(2, {{0, 1}}, Matrix(2, 0))});
        Matrix expected(2, 2);
        expected << 0, 1, 0, 1;
        CHECK(out[0].features() == expected);
    }
    SUBCASE("triangle and isolated node") {
        const auto out = one_hot_degree_features({Graph(3, {{0, 1}, {1, 2}, {0, 2}}, Matrix(3, 0)), Graph(1, {}, Matrix(1, 0))});
        CHECK(out[0].feature_dim() == 3);
        CHECK(out[1].features() == (Matrix(1, 3) << 1, 0, 0).finished());
    }
}

TEST_CASE("row normalization") {
    Matrix x(2, 3);
    x << 1, 1, 2, 0, 0, 0;
    const Graph g = row_normalized(Graph(2, {}, x));
    CHECK(g.features().row(0).sum() == doctest::Approx(1.0));
    CHECK(g.features()(0, 2) == doctest::Approx(0.5));
    CHECK(g.features().row(1).isZero());
}

TEST_CASE("save and load round-trip") {
    for (bool node_level : {false, true}) {
        TempDir a, b;
        DatasetBundle bundle = node_level ? node_bundle(5, 2) : graph_bundle();
        if (node_level) bundle.splits = {{"train", {0, 1, 2}}, {"val", {3}}, {"test", {4, 5, 6}}};
        save_dataset(bundle, a.path);
        const DatasetBundle loaded = load_dataset(a.path);
        REQUIRE(loaded.graphs.size() == bundle.graphs.size());
        for (std::size_t k = 0; k < bundle.graphs.size(); ++k) {
            CHECK(loaded.graphs[k].edges() == bundle.graphs[k].edges());
            CHECK(loaded.graphs[k].features() == bundle.graphs[k].features());
        }
        CHECK(loaded.labels.labels == bundle.labels.labels);
        CHECK(loaded.splits == bundle.splits);
        save_dataset(loaded, b.path);
        for (const auto& entry : fs::directory_iterator(a.path))
            CHECK(slurp(entry.path()) == slurp(b.path / entry.path().filename()));
        CHECK(load_dataset(b.path).fingerprint == loaded.fingerprint);
    }
}

TEST_CASE("one-hot provenance omits features on disk") {
    TempDir dir;
    DatasetBundle b = graph_bundle();
    b.graphs = one_hot_degree_features(b.graphs);
    b.feature_provenance = FeatureProvenance::OneHotDegree;
    save_dataset(b, dir.path);
    CHECK(!fs::exists(dir.path / "features.bin"));
    const DatasetBundle loaded = load_dataset(dir.path);
    for (std::size_t k = 0; k < b.graphs.size(); ++k) CHECK(loaded.graphs[k].features() == b.graphs[k].features());
}

TEST_CASE("loader error kinds") {
    SUBCASE("missing directory") { CHECK(load_error("/nonexistent/gk") == DatasetErrorKind::Missing); }
    SUBCASE("empty directory") {
        TempDir dir;
        CHECK(load_error(dir.path) == DatasetErrorKind::Missing);
    }
    SUBCASE("hash mismatch names the file") {
        TempDir dir;
        save_dataset(graph_bundle(), dir.path);
        std::string bytes = slurp(dir.path / "features.bin");
        bytes[20] ^= 0x40;
        spit(dir.path / "features.bin", bytes);
        try {
            load_dataset(dir.path);
            FAIL("expected hash mismatch");
        } catch (const DatasetError& e) {
            CHECK(e.kind() == DatasetErrorKind::HashMismatch);
            CHECK(e.file() == "features.bin");
        }
    }
    SUBCASE("truncated binary") {
        TempDir dir;
        save_dataset(graph_bundle(), dir.path);
        std::string bytes = slurp(dir.path / "edges.bin");
        replace_payload(dir.path, "edges.bin", bytes.substr(0, bytes.size() - 3));
        try {
            load_dataset(dir.path);
            FAIL("expected truncation");
        } catch (const DatasetError& e) {
            CHECK(e.kind() == DatasetErrorKind::Truncated);
            CHECK(e.file() == "edges.bin");
            CHECK(std::string(e.what()).find("offset") != std::string::npos);
        }
    }
    SUBCASE("edge index out of range") {
        TempDir dir;
        save_dataset(graph_bundle(), dir.path);
        std::string bytes = slurp(dir.path / "edges.bin");
        bytes[12] = '\xff';
        bytes[13] = '\xff';
        replace_payload(dir.path, "edges.bin", bytes);
        CHECK(load_error(dir.path) == DatasetErrorKind::IndexOutOfRange);
    }
    SUBCASE("bad magic") {
        TempDir dir;
        save_dataset(graph_bundle(), dir.path);
        std::string bytes = slurp(dir.path / "graph_indicator.bin");
        bytes[0] = 'X';
        replace_payload(dir.path, "graph_indicator.bin", bytes);
        CHECK(load_error(dir.path) == DatasetErrorKind::Malformed);
    }
    SUBCASE("label count mismatch") {
        TempDir dir;
        save_dataset(graph_bundle(), dir.path);
        auto meta = nlohmann::json::parse(slurp(dir.path / "meta.json"));
        meta["labels"].push_back(0);
        spit(dir.path / "meta.json", meta.dump(1));
        CHECK(load_error(dir.path) == DatasetErrorKind::Inconsistent);
    }
    SUBCASE("overlapping splits") {
        TempDir dir;
        DatasetBundle b = node_bundle(5, 2);
        b.splits = {{"train", {0, 1}}, {"test", {1, 2}}};
        CHECK_THROWS_AS(save_dataset(b, dir.path), DatasetError);
    }
}

TEST_CASE("split rules") {
    SUBCASE("parse") {
        CHECK(SplitRule::parse("public").kind == SplitRule::Kind::Public);
        const auto r = SplitRule::parse("k_fold:5:7");
        CHECK(r.kind == SplitRule::Kind::KFold);
        CHECK(r.folds == 5);
        CHECK(r.seed == 7);
        CHECK_THROWS_AS(SplitRule::parse("random"), InputError);
    }
    SUBCASE("first20_last100") {
        const DatasetBundle b = node_bundle(130, 3);
        const Splits s = materialize_splits(b, SplitRule::parse("first20_last100"));
        CHECK(s.at("train").size() == 60);
        CHECK(s.at("test").size() == 300);
        CHECK(s.at("train").front() == 0);
        CHECK(s.at("test").back() == 389);
        CHECK_THROWS_AS(materialize_splits(node_bundle(100, 3), SplitRule::parse("first20_last100")), InputError);
    }
    SUBCASE("public pass-through") {
        DatasetBundle b = node_bundle(5, 2);
        CHECK_THROWS_AS(materialize_splits(b, SplitRule::parse("public")), InputError);
        b.splits = {{"train", {0, 1}}, {"test", {5, 6}}};
        CHECK(materialize_splits(b, SplitRule::parse("public")) == b.splits);
    }
    SUBCASE("k_fold is deterministic") {
        const DatasetBundle b = graph_bundle();
        const auto a = materialize_splits(b, SplitRule::parse("k_fold:3:7"));
        CHECK(a.size() == 3);
        CHECK(a == materialize_splits(b, SplitRule::parse("k_fold:3:7")));
    }
}
