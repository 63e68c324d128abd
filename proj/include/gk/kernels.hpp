#pragma once

#include "gk/graph.hpp"
#include "gk/primitives.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gk {

enum class KernelKind : std::uint8_t { SGTK = 0, SGNK = 1, GNTK = 2 };
enum class ItemLevel : std::uint8_t { Node = 0, Graph = 1 };
enum class ReadoutMode : std::uint8_t { Sum = 0, Mean = 1 };

const char* to_string(KernelKind kind);
KernelKind parse_kernel_kind(const std::string& name);
const char* to_string(ItemLevel level);
const char* to_string(ReadoutMode mode);

struct PairKernel {
    Matrix node_kernel;
    double graph_value = 0.0;
};

/// Sum of all entries, accumulated in row-major order.
double readout(const Eigen::Ref<const Matrix>& node_kernel);
double readout(const Eigen::Ref<const Matrix>& node_kernel, ReadoutMode mode);

/// K-step covariance aggregation followed by a single NTK update.
/// Follows the covariance route literally: X1 X2^T and both self-covariances
/// are aggregated with propagate_covariance before the update.
PairKernel sgtk_pair(const Graph& g1, const Graph& g2, const KernelHyperParams& hp,
                     ReadoutMode mode = ReadoutMode::Sum);

/// Closed-form erf GP kernel on K-step propagated, bias-augmented features.
PairKernel sgnk_pair(const Graph& g1, const Graph& g2, const KernelHyperParams& hp,
                     ReadoutMode mode = ReadoutMode::Sum);

/// Layer-stacked baseline: hp.gntk_blocks rounds of (scaled sum aggregation,
/// one NTK iteration).
PairKernel gntk_pair(const Graph& g1, const Graph& g2, const KernelHyperParams& hp,
                     ReadoutMode mode = ReadoutMode::Sum);

PairKernel kernel_pair(KernelKind kind, const Graph& g1, const Graph& g2, const KernelHyperParams& hp,
                       ReadoutMode mode = ReadoutMode::Sum);

struct GramMatrix {
    Matrix values;
    KernelKind kind = KernelKind::SGNK;
    KernelHyperParams hyperparams;
    ItemLevel level = ItemLevel::Graph;
    ReadoutMode readout = ReadoutMode::Sum;
    std::string dataset_fingerprint;

    Index size() const noexcept { return values.rows(); }
};

struct GramOptions {
    ReadoutMode readout = ReadoutMode::Sum;
    /// <= 0 means the OpenMP default.
    int threads = 0;
};

/// Graph-level Gram matrix over a collection. Only the upper triangle is
/// evaluated; the lower triangle is an exact mirror. Results do not depend
/// on the thread count.
GramMatrix gram_matrix(std::span<const Graph> graphs, KernelKind kind, const KernelHyperParams& hp,
                       const GramOptions& opts = {});

/// Node-level Gram matrix over the nodes of one graph.
GramMatrix node_gram_matrix(const Graph& g, KernelKind kind, const KernelHyperParams& hp,
                            const GramOptions& opts = {});

/// Node-level kernel restricted to selected rows/columns, for graphs where
/// the full n x n matrix is not needed.
class NodeKernel {
  public:
    NodeKernel(const Graph& g, KernelKind kind, const KernelHyperParams& hp);

    Matrix block(std::span<const Index> rows, std::span<const Index> cols) const;
    Index num_nodes() const noexcept { return num_nodes_; }

  private:
    KernelKind kind_;
    KernelHyperParams hp_;
    Index num_nodes_ = 0;
    Matrix propagated_;  // SGTK / SGNK
    Vector self_;        // per-node self term
    Matrix full_;        // GNTK only
};

struct GramCheck {
    double max_asymmetry = 0.0;  // relative to max |entry|
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
    double min_diagonal = 0.0;

    bool symmetric(double tol = 1e-10) const { return max_asymmetry <= tol; }
    bool psd(double rel_tol = 1e-8) const { return min_eigenvalue >= -rel_tol * max_eigenvalue; }
};

GramCheck check_gram(const Eigen::Ref<const Matrix>& values);

/// Cosine normalization K_ij / sqrt(K_ii K_jj).
Matrix normalize_gram(const Eigen::Ref<const Matrix>& values);

}  // namespace gk
