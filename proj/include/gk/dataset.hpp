#pragma once

// Canonical on-disk dataset directory:
//
//   meta.json            manifest (counts, labels, splits, SHA-256 of every binary)
//   edges.bin            "GKE1" | u64 count | count x (u32 u, u32 v)
//   features.bin         "GKF1" | u32 rows | u32 cols | rows*cols f32, row-major
//   graph_indicator.bin  "GKG1" | u32 graph id per node (0-based, non-decreasing)   [graph level only]
//
// All integers and floats are little-endian. features.bin may be omitted when
// feature_provenance is "one_hot_degree"; features are then synthesized on load.

#include "gk/classifiers.hpp"
#include "gk/graph.hpp"
#include "gk/kernels.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace gk {

enum class FeatureProvenance { Native, OneHotDegree };

const char* to_string(FeatureProvenance p);

using Splits = std::map<std::string, std::vector<Index>>;

struct DatasetBundle {
    std::string name;
    ItemLevel level = ItemLevel::Graph;
    std::vector<Graph> graphs;  // exactly one at node level
    LabelVector labels;         // per node or per graph
    Splits splits;
    FeatureProvenance feature_provenance = FeatureProvenance::Native;
    /// SHA-256 of meta.json as loaded; empty for in-memory bundles.
    std::string fingerprint;

    Index num_items() const;
    Index total_nodes() const;
    Index total_edges() const;
    Index feature_dim() const;
};

DatasetBundle load_dataset(const std::filesystem::path& dir);

/// Writes the canonical files and a manifest with fresh hashes.
void save_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir);

/// Checks every bundle invariant; throws DatasetError on the first violation.
void validate_bundle(const DatasetBundle& bundle);

/// One-hot node degree (self-loops excluded); dimension = max degree over all graphs + 1.
std::vector<Graph> one_hot_degree_features(const std::vector<Graph>& graphs);

/// Rows divided by their sum; all-zero rows are left unchanged.
Graph row_normalized(const Graph& g);

struct SplitRule {
    enum class Kind { Public, First20Last100, KFold } kind = Kind::Public;
    int folds = 10;
    std::uint64_t seed = 0;

    static SplitRule parse(const std::string& text);
};

/// Public: pass-through of the shipped splits. First20Last100: per class, the
/// 20 lowest node ids train and the 100 highest test. KFold: "fold0".."foldN-1"
/// test sets, stratified.
Splits materialize_splits(const DatasetBundle& bundle, const SplitRule& rule);

}  // namespace gk
