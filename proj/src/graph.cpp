#include "gk/graph.hpp"

#include "gk/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gk {

std::vector<Edge> canonicalize_edges(std::vector<Edge> edges) {
    std::vector<Edge> out;
    out.reserve(edges.size());
    for (auto [u, v] : edges) {
        if (u == v) continue;
        out.emplace_back(std::min(u, v), std::max(u, v));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

Graph::Graph(Index num_nodes, std::vector<Edge> edges, Matrix features)
    : num_nodes_(num_nodes), edges_(canonicalize_edges(std::move(edges))), features_(std::move(features)) {
    if (num_nodes_ < 0) throw InputError("graph: negative node count");
    if (features_.rows() != num_nodes_) {
        throw InputError("graph: feature matrix has " + std::to_string(features_.rows()) +
                         " rows for " + std::to_string(num_nodes_) + " nodes");
    }
    for (const auto& [u, v] : edges_) {
        if (static_cast<Index>(v) >= num_nodes_) {
            throw InputError("graph: edge endpoint " + std::to_string(v) + " out of range");
        }
    }
}

std::vector<Index> Graph::degrees() const {
    std::vector<Index> deg(static_cast<std::size_t>(num_nodes_), 0);
    for (const auto& [u, v] : edges_) {
        ++deg[u];
        ++deg[v];
    }
    return deg;
}

Graph Graph::with_features(Matrix features) const {
    Graph g = *this;
    if (features.rows() != num_nodes_) throw InputError("graph: feature row count mismatch");
    g.features_ = std::move(features);
    return g;
}

NormalizedAdjacency normalize_adjacency(const Graph& g) {
    const Index n = g.num_nodes();
    if (n == 0) throw InputError("normalize_adjacency: graph has no nodes");

    const auto deg = g.degrees();
    Vector inv_sqrt(n);
    for (Index i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(deg[i] + 1));

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(g.edges().size() * 2 + static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) triplets.emplace_back(i, i, inv_sqrt[i] * inv_sqrt[i]);
    for (const auto& [u, v] : g.edges()) {
        const double w = inv_sqrt[u] * inv_sqrt[v];
        triplets.emplace_back(u, v, w);
        triplets.emplace_back(v, u, w);
    }
    SparseMatrix m(n, n);
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.makeCompressed();
    return NormalizedAdjacency(std::move(m));
}

Matrix propagate(const NormalizedAdjacency& adj, const Eigen::Ref<const Matrix>& features,
                 PropagationConfig cfg) {
    if (cfg.K < 0) throw InputError("propagate: K must be non-negative");
    if (adj.size() != features.rows()) {
        throw InputError("propagate: adjacency is " + std::to_string(adj.size()) + "x" +
                         std::to_string(adj.size()) + " but features have " +
                         std::to_string(features.rows()) + " rows");
    }
    Matrix x = features;
    Matrix next(x.rows(), x.cols());
    for (int step = 0; step < cfg.K; ++step) {
        next.noalias() = adj.matrix() * x;
        x.swap(next);
    }
    return x;
}

Matrix propagate_covariance(const NormalizedAdjacency& adj1, const NormalizedAdjacency& adj2,
                            const Eigen::Ref<const Matrix>& sigma, PropagationConfig cfg) {
    if (cfg.K < 0) throw InputError("propagate_covariance: K must be non-negative");
    if (sigma.rows() != adj1.size() || sigma.cols() != adj2.size()) {
        throw InputError("propagate_covariance: sigma is " + std::to_string(sigma.rows()) + "x" +
                         std::to_string(sigma.cols()) + ", expected " + std::to_string(adj1.size()) +
                         "x" + std::to_string(adj2.size()));
    }
    // Left side: A1^K S. Right side via the transpose: (A2^K (A1^K S)^T)^T.
    Matrix left = propagate(adj1, sigma, cfg);
    Matrix right = propagate(adj2, left.transpose(), cfg);
    return right.transpose();
}

Graph permute_nodes(const Graph& g, const std::vector<Index>& perm) {
    const Index n = g.num_nodes();
    if (static_cast<Index>(perm.size()) != n) throw InputError("permute_nodes: permutation size mismatch");
    Matrix x(n, g.feature_dim());
    for (Index i = 0; i < n; ++i) x.row(perm[i]) = g.features().row(i);
    std::vector<Edge> edges;
    edges.reserve(g.edges().size());
    for (const auto& [u, v] : g.edges()) {
        edges.emplace_back(static_cast<std::uint32_t>(perm[u]), static_cast<std::uint32_t>(perm[v]));
    }
    return Graph(n, std::move(edges), std::move(x));
}

}  // namespace gk
