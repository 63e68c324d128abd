#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstdint>
#include <utility>
#include <vector>

namespace gk {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Edge = std::pair<std::uint32_t, std::uint32_t>;

/// Undirected graph with dense node features.
///
/// Edges are canonicalized on construction: each pair is stored once as
/// (min, max), sorted, with duplicates and self-loops removed (the self-loop
/// of the normalized operator is added separately, exactly once).
/// A feature matrix with zero columns is allowed as a "no native features"
/// sentinel; kernels reject it.
class Graph {
  public:
    Graph() = default;
    Graph(Index num_nodes, std::vector<Edge> edges, Matrix features);

    Index num_nodes() const noexcept { return num_nodes_; }
    Index feature_dim() const noexcept { return features_.cols(); }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const Matrix& features() const noexcept { return features_; }

    /// Neighbor count of each node, self-loops excluded.
    std::vector<Index> degrees() const;

    Graph with_features(Matrix features) const;

  private:
    Index num_nodes_ = 0;
    std::vector<Edge> edges_;
    Matrix features_;
};

/// Canonical (u <= v) sorted, de-duplicated edge list without self-loops.
std::vector<Edge> canonicalize_edges(std::vector<Edge> edges);

/// D^{-1/2} (A + I) D^{-1/2}, stored row-compressed with sorted column indices.
class NormalizedAdjacency {
  public:
    NormalizedAdjacency() = default;
    explicit NormalizedAdjacency(SparseMatrix m) : matrix_(std::move(m)) {}

    Index size() const noexcept { return matrix_.rows(); }
    const SparseMatrix& matrix() const noexcept { return matrix_; }
    Matrix to_dense() const { return Matrix(matrix_); }

  private:
    SparseMatrix matrix_;
};

struct PropagationConfig {
    int K = 1;
};

NormalizedAdjacency normalize_adjacency(const Graph& g);

/// A^K X as K successive sparse-dense products. K = 0 returns a copy.
Matrix propagate(const NormalizedAdjacency& adj, const Eigen::Ref<const Matrix>& features,
                 PropagationConfig cfg);

/// A1^K S (A2^K)^T without forming either power.
Matrix propagate_covariance(const NormalizedAdjacency& adj1, const NormalizedAdjacency& adj2,
                            const Eigen::Ref<const Matrix>& sigma, PropagationConfig cfg);

/// Relabels nodes so that old node i becomes node perm[i].
Graph permute_nodes(const Graph& g, const std::vector<Index>& perm);

}  // namespace gk
