#include "gk/dataset.hpp"

#include "gk/binary.hpp"
#include "gk/error.hpp"
#include "gk/hash.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace gk {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(FeatureProvenance p) { return p == FeatureProvenance::Native ? "native" : "one_hot_degree"; }

Index DatasetBundle::num_items() const {
    return level == ItemLevel::Node ? (graphs.empty() ? 0 : graphs.front().num_nodes())
                                    : static_cast<Index>(graphs.size());
}

Index DatasetBundle::total_nodes() const {
    Index n = 0;
    for (const auto& g : graphs) n += g.num_nodes();
    return n;
}

Index DatasetBundle::total_edges() const {
    Index e = 0;
    for (const auto& g : graphs) e += static_cast<Index>(g.edges().size());
    return e;
}

Index DatasetBundle::feature_dim() const { return graphs.empty() ? 0 : graphs.front().feature_dim(); }

namespace {

constexpr const char* kMeta = "meta.json";
constexpr const char* kEdges = "edges.bin";
constexpr const char* kFeatures = "features.bin";
constexpr const char* kIndicator = "graph_indicator.bin";

std::vector<char> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetError(DatasetErrorKind::Missing, path.filename().string(), "cannot open");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Bounds-checked little-endian reader over a file image.
class ByteReader {
  public:
    ByteReader(const std::vector<char>& bytes, std::string file) : bytes_(bytes), file_(std::move(file)) {}

    void expect_magic(const char* magic) {
        need(4);
        if (std::memcmp(bytes_.data() + pos_, magic, 4) != 0) {
            throw DatasetError(DatasetErrorKind::Malformed, file_, std::string("expected magic ") + magic);
        }
        pos_ += 4;
    }

    template <typename T>
    T read() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) {
            throw DatasetError(DatasetErrorKind::Truncated, file_,
                               "need " + std::to_string(n) + " bytes at offset " + std::to_string(pos_) +
                                   ", file has " + std::to_string(bytes_.size()));
        }
    }

    void expect_end() const {
        if (pos_ != bytes_.size()) {
            throw DatasetError(DatasetErrorKind::Malformed, file_,
                               std::to_string(bytes_.size() - pos_) + " trailing bytes at offset " + std::to_string(pos_));
        }
    }

  private:
    const std::vector<char>& bytes_;
    std::string file_;
    std::size_t pos_ = 0;
};

template <typename T>
T required(const json& meta, const char* key) {
    if (!meta.contains(key)) throw DatasetError(DatasetErrorKind::Malformed, kMeta, std::string("missing field '") + key + "'");
    try {
        return meta.at(key).get<T>();
    } catch (const json::exception& e) {
        throw DatasetError(DatasetErrorKind::Malformed, kMeta, std::string("field '") + key + "': " + e.what());
    }
}

void write_bytes(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DatasetError(DatasetErrorKind::Missing, path.filename().string(), "cannot open for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

std::vector<Graph> one_hot_degree_features(const std::vector<Graph>& graphs) {
    Index max_degree = 0;
    std::vector<std::vector<Index>> degrees;
    degrees.reserve(graphs.size());
    for (const auto& g : graphs) {
        degrees.push_back(g.degrees());
        for (Index d : degrees.back()) max_degree = std::max(max_degree, d);
    }
    std::vector<Graph> out;
    out.reserve(graphs.size());
    for (std::size_t k = 0; k < graphs.size(); ++k) {
        Matrix x = Matrix::Zero(graphs[k].num_nodes(), max_degree + 1);
        for (Index i = 0; i < graphs[k].num_nodes(); ++i) x(i, degrees[k][static_cast<std::size_t>(i)]) = 1.0;
        out.push_back(graphs[k].with_features(std::move(x)));
    }
    return out;
}

Graph row_normalized(const Graph& g) {
    Matrix x = g.features();
    for (Index i = 0; i < x.rows(); ++i) {
        const double s = x.row(i).sum();
        if (s != 0.0) x.row(i) /= s;
    }
    return g.with_features(std::move(x));
}

void validate_bundle(const DatasetBundle& b) {
    if (b.graphs.empty()) throw DatasetError(DatasetErrorKind::Inconsistent, kMeta, "dataset has no graphs");
    if (b.level == ItemLevel::Node && b.graphs.size() != 1) {
        throw DatasetError(DatasetErrorKind::Inconsistent, kMeta, "node-level dataset must hold exactly one graph");
    }
    for (std::size_t k = 0; k < b.graphs.size(); ++k) {
        if (b.graphs[k].num_nodes() == 0) {
            throw DatasetError(DatasetErrorKind::Inconsistent, kIndicator, "graph " + std::to_string(k) + " is empty");
        }
        if (b.graphs[k].feature_dim() != b.graphs.front().feature_dim()) {
            throw DatasetError(DatasetErrorKind::Inconsistent, kFeatures, "graphs disagree on feature dimension");
        }
    }
    if (b.labels.size() != b.num_items()) {
        throw DatasetError(DatasetErrorKind::Inconsistent, kMeta,
                           std::to_string(b.labels.size()) + " labels for " + std::to_string(b.num_items()) + " items");
    }
    for (int y : b.labels.labels) {
        if (y < 0 || y >= b.labels.num_classes) {
            throw DatasetError(DatasetErrorKind::IndexOutOfRange, kMeta, "label " + std::to_string(y) + " out of range");
        }
    }
    std::set<Index> seen;
    for (const auto& [name, idx] : b.splits) {
        std::set<Index> mine;
        for (Index i : idx) {
            if (i < 0 || i >= b.num_items()) {
                throw DatasetError(DatasetErrorKind::IndexOutOfRange, kMeta,
                                   "split '" + name + "' index " + std::to_string(i) + " out of range");
            }
            if (!mine.insert(i).second || !seen.insert(i).second) {
                throw DatasetError(DatasetErrorKind::Inconsistent, kMeta,
                                   "split '" + name + "' repeats or overlaps index " + std::to_string(i));
            }
        }
    }
}

DatasetBundle load_dataset(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DatasetError(DatasetErrorKind::Missing, dir.string(), "not a directory");
    const std::vector<char> meta_bytes = read_file(dir / kMeta);
    json meta;
    try {
        meta = json::parse(meta_bytes.begin(), meta_bytes.end());
    } catch (const json::exception& e) {
        throw DatasetError(DatasetErrorKind::Malformed, kMeta, e.what());
    }

    DatasetBundle b;
    b.name = required<std::string>(meta, "name");
    const auto level = required<std::string>(meta, "level");
    if (level != "node" && level != "graph") throw DatasetError(DatasetErrorKind::Malformed, kMeta, "level must be node or graph");
    b.level = level == "node" ? ItemLevel::Node : ItemLevel::Graph;
    const auto provenance = meta.value("feature_provenance", std::string("native"));
    if (provenance != "native" && provenance != "one_hot_degree") {
        throw DatasetError(DatasetErrorKind::Malformed, kMeta, "unknown feature_provenance '" + provenance + "'");
    }
    b.feature_provenance = provenance == "native" ? FeatureProvenance::Native : FeatureProvenance::OneHotDegree;

    const auto num_nodes = required<std::uint64_t>(meta, "num_nodes");
    const auto num_edges = required<std::uint64_t>(meta, "num_edges");
    const auto files = required<std::map<std::string, std::string>>(meta, "files");

    // Hash check before parsing anything.
    std::map<std::string, std::vector<char>> payload;
    for (const auto& [file, expected] : files) {
        if (file.find('/') != std::string::npos || file.find("..") != std::string::npos) {
            throw DatasetError(DatasetErrorKind::Malformed, kMeta, "file entry '" + file + "' is not a plain name");
        }
        payload[file] = read_file(dir / file);
        const std::string actual = sha256_hex(payload[file]);
        if (actual != expected) {
            throw DatasetError(DatasetErrorKind::HashMismatch, file, "expected sha256 " + expected + ", got " + actual);
        }
    }
    auto payload_of = [&](const char* file) -> const std::vector<char>& {
        auto it = payload.find(file);
        if (it == payload.end()) throw DatasetError(DatasetErrorKind::Missing, file, "not listed in manifest");
        return it->second;
    };

    // Edges.
    std::vector<Edge> edges;
    {
        ByteReader r(payload_of(kEdges), kEdges);
        r.expect_magic("GKE1");
        const auto count = r.read<std::uint64_t>();
        if (count != num_edges) {
            throw DatasetError(DatasetErrorKind::Inconsistent, kEdges,
                               "header says " + std::to_string(count) + " edges, manifest " + std::to_string(num_edges));
        }
        r.need(count * 8);
        edges.reserve(count);
        for (std::uint64_t e = 0; e < count; ++e) {
            const auto u = r.read<std::uint32_t>();
            const auto v = r.read<std::uint32_t>();
            if (u >= num_nodes || v >= num_nodes) {
                throw DatasetError(DatasetErrorKind::IndexOutOfRange, kEdges,
                                   "edge " + std::to_string(e) + " (" + std::to_string(u) + ", " + std::to_string(v) +
                                       ") exceeds node count " + std::to_string(num_nodes));
            }
            edges.emplace_back(u, v);
        }
        r.expect_end();
    }

    // Features, widened to double.
    Matrix features(static_cast<Index>(num_nodes), 0);
    if (files.count(kFeatures)) {
        ByteReader r(payload_of(kFeatures), kFeatures);
        r.expect_magic("GKF1");
        const auto rows = r.read<std::uint32_t>();
        const auto cols = r.read<std::uint32_t>();
        if (rows != num_nodes) {
            throw DatasetError(DatasetErrorKind::Inconsistent, kFeatures,
                               std::to_string(rows) + " feature rows for " + std::to_string(num_nodes) + " nodes");
        }
        if (meta.contains("feature_dim") && meta.at("feature_dim").get<std::uint64_t>() != cols) {
            throw DatasetError(DatasetErrorKind::Inconsistent, kFeatures, "column count disagrees with manifest feature_dim");
        }
        r.need(static_cast<std::size_t>(rows) * cols * 4);
        features.resize(rows, cols);
        for (Index i = 0; i < static_cast<Index>(rows); ++i)
            for (Index j = 0; j < static_cast<Index>(cols); ++j) features(i, j) = static_cast<double>(r.read<float>());
        r.expect_end();
    } else if (b.feature_provenance == FeatureProvenance::Native) {
        throw DatasetError(DatasetErrorKind::Missing, kFeatures, "native features declared but no features.bin listed");
    }

    // Graph membership.
    if (b.level == ItemLevel::Node) {
        b.graphs.emplace_back(static_cast<Index>(num_nodes), std::move(edges), std::move(features));
    } else {
        ByteReader r(payload_of(kIndicator), kIndicator);
        r.expect_magic("GKG1");
        r.need(num_nodes * 4);
        std::vector<std::uint32_t> gid(num_nodes);
        for (auto& g : gid) g = r.read<std::uint32_t>();
        r.expect_end();
        const auto num_graphs = required<std::uint64_t>(meta, "num_graphs");
        std::vector<Index> offset(num_graphs + 1, 0);
        for (std::uint64_t i = 0; i < num_nodes; ++i) {
            if (gid[i] >= num_graphs) {
                throw DatasetError(DatasetErrorKind::IndexOutOfRange, kIndicator,
                                   "node " + std::to_string(i) + " has graph id " + std::to_string(gid[i]));
            }
            if (i > 0 && gid[i] < gid[i - 1]) {
                throw DatasetError(DatasetErrorKind::Malformed, kIndicator, "graph ids decrease at node " + std::to_string(i));
            }
            ++offset[gid[i] + 1];
        }
        for (std::uint64_t g = 0; g < num_graphs; ++g) {
            if (offset[g + 1] == 0) throw DatasetError(DatasetErrorKind::Inconsistent, kIndicator, "graph " + std::to_string(g) + " has no nodes");
            offset[g + 1] += offset[g];
        }
        std::vector<std::vector<Edge>> per_graph(num_graphs);
        for (const auto& [u, v] : edges) {
            if (gid[u] != gid[v]) {
                throw DatasetError(DatasetErrorKind::Inconsistent, kEdges,
                                   "edge (" + std::to_string(u) + ", " + std::to_string(v) + ") crosses graphs");
            }
            const auto base = static_cast<std::uint32_t>(offset[gid[u]]);
            per_graph[gid[u]].emplace_back(u - base, v - base);
        }
        for (std::uint64_t g = 0; g < num_graphs; ++g) {
            const Index n = offset[g + 1] - offset[g];
            b.graphs.emplace_back(n, std::move(per_graph[g]), features.middleRows(offset[g], n));
        }
    }

    if (b.feature_provenance == FeatureProvenance::OneHotDegree && !files.count(kFeatures)) {
        b.graphs = one_hot_degree_features(b.graphs);
    }

    std::vector<int> labels = required<std::vector<int>>(meta, "labels");
    b.labels.labels = std::move(labels);
    b.labels.num_classes = required<int>(meta, "num_classes");
    if (meta.contains("splits")) {
        try {
            b.splits = meta.at("splits").get<Splits>();
        } catch (const json::exception& e) {
            throw DatasetError(DatasetErrorKind::Malformed, kMeta, std::string("splits: ") + e.what());
        }
    }
    validate_bundle(b);
    b.fingerprint = sha256_hex(meta_bytes);
    return b;
}

void save_dataset(const DatasetBundle& b, const fs::path& dir) {
    validate_bundle(b);
    fs::create_directories(dir);

    std::map<std::string, std::string> files;
    {
        std::ostringstream out;
        out.write("GKE1", 4);
        binary::write_u64(out, static_cast<std::uint64_t>(b.total_edges()));
        std::uint32_t base = 0;
        for (const auto& g : b.graphs) {
            for (const auto& [u, v] : g.edges()) {
                binary::write_u32(out, base + u);
                binary::write_u32(out, base + v);
            }
            base += static_cast<std::uint32_t>(g.num_nodes());
        }
        files[kEdges] = out.str();
    }
    if (b.feature_provenance == FeatureProvenance::Native) {
        std::ostringstream out;
        out.write("GKF1", 4);
        binary::write_u32(out, static_cast<std::uint32_t>(b.total_nodes()));
        binary::write_u32(out, static_cast<std::uint32_t>(b.feature_dim()));
        for (const auto& g : b.graphs)
            for (Index i = 0; i < g.num_nodes(); ++i)
                for (Index j = 0; j < g.feature_dim(); ++j) binary::write_f32(out, static_cast<float>(g.features()(i, j)));
        files[kFeatures] = out.str();
    }
    if (b.level == ItemLevel::Graph) {
        std::ostringstream out;
        out.write("GKG1", 4);
        for (std::size_t k = 0; k < b.graphs.size(); ++k)
            for (Index i = 0; i < b.graphs[k].num_nodes(); ++i) binary::write_u32(out, static_cast<std::uint32_t>(k));
        files[kIndicator] = out.str();
    }

    json meta;
    meta["format"] = "gk-dataset-1";
    meta["name"] = b.name;
    meta["level"] = to_string(b.level);
    meta["num_nodes"] = b.total_nodes();
    meta["num_edges"] = b.total_edges();
    if (b.level == ItemLevel::Graph) meta["num_graphs"] = b.graphs.size();
    meta["num_classes"] = b.labels.num_classes;
    meta["feature_dim"] = b.feature_dim();
    meta["feature_provenance"] = to_string(b.feature_provenance);
    meta["labels"] = b.labels.labels;
    if (!b.splits.empty()) meta["splits"] = b.splits;
    json hashes = json::object();
    for (const auto& [file, bytes] : files) {
        write_bytes(dir / file, bytes);
        hashes[file] = sha256_hex(bytes);
    }
    meta["files"] = hashes;
    write_bytes(dir / kMeta, meta.dump(1) + "\n");
}

SplitRule SplitRule::parse(const std::string& text) {
    SplitRule rule;
    if (text == "public") {
        rule.kind = Kind::Public;
    } else if (text == "first20_last100") {
        rule.kind = Kind::First20Last100;
    } else if (text.rfind("k_fold", 0) == 0) {
        // k_fold, k_fold:10 or k_fold:10:7 (folds, seed)
        rule.kind = Kind::KFold;
        std::istringstream in(text.substr(6));
        char sep = 0;
        if (in >> sep) {
            if (sep != ':' || !(in >> rule.folds)) throw InputError("bad split rule '" + text + "'");
            if (in >> sep) {
                if (sep != ':' || !(in >> rule.seed)) throw InputError("bad split rule '" + text + "'");
            }
        }
    } else {
        throw InputError("unknown split rule '" + text + "' (expected public, first20_last100 or k_fold[:folds[:seed]])");
    }
    return rule;
}

Splits materialize_splits(const DatasetBundle& b, const SplitRule& rule) {
    switch (rule.kind) {
    case SplitRule::Kind::Public: {
        if (!b.splits.count("train") || !b.splits.count("test")) {
            throw InputError("dataset '" + b.name + "' ships no public train/test split");
        }
        return b.splits;
    }
    case SplitRule::Kind::First20Last100: {
        if (b.level != ItemLevel::Node) throw InputError("first20_last100 applies to node-level datasets only");
        std::vector<std::vector<Index>> by_class(static_cast<std::size_t>(b.labels.num_classes));
        for (Index i = 0; i < b.labels.size(); ++i) by_class[static_cast<std::size_t>(b.labels.labels[static_cast<std::size_t>(i)])].push_back(i);
        Splits out;
        for (std::size_t c = 0; c < by_class.size(); ++c) {
            const auto& members = by_class[c];
            if (members.size() < 120) {
                throw InputError("first20_last100: class " + std::to_string(c) + " has only " +
                                 std::to_string(members.size()) + " instances (need 120)");
            }
            out["train"].insert(out["train"].end(), members.begin(), members.begin() + 20);
            out["test"].insert(out["test"].end(), members.end() - 100, members.end());
        }
        std::sort(out["train"].begin(), out["train"].end());
        std::sort(out["test"].begin(), out["test"].end());
        return out;
    }
    case SplitRule::Kind::KFold: {
        const auto folds = stratified_folds(b.labels, rule.folds, rule.seed);
        Splits out;
        for (std::size_t k = 0; k < folds.size(); ++k) out["fold" + std::to_string(k)] = folds[k];
        return out;
    }
    }
    throw InputError("unknown split rule");
}

}  // namespace gk
