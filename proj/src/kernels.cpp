#include "gk/kernels.hpp"

#include "gk/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gk {

const char* to_string(KernelKind kind) {
    switch (kind) {
    case KernelKind::SGTK: return "sgtk";
    case KernelKind::SGNK: return "sgnk";
    case KernelKind::GNTK: return "gntk";
    }
    return "?";
}

KernelKind parse_kernel_kind(const std::string& name) {
    std::string s = name;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (s == "sgtk") return KernelKind::SGTK;
    if (s == "sgnk") return KernelKind::SGNK;
    if (s == "gntk") return KernelKind::GNTK;
    throw InputError("unknown kernel kind '" + name + "' (expected sgtk, sgnk or gntk)");
}

const char* to_string(ItemLevel level) { return level == ItemLevel::Node ? "node" : "graph"; }
const char* to_string(ReadoutMode mode) { return mode == ReadoutMode::Sum ? "sum" : "mean"; }

double readout(const Eigen::Ref<const Matrix>& node_kernel) {
    double total = 0.0;
    for (Index i = 0; i < node_kernel.rows(); ++i)
        for (Index j = 0; j < node_kernel.cols(); ++j) total += node_kernel(i, j);
    return total;
}

double readout(const Eigen::Ref<const Matrix>& node_kernel, ReadoutMode mode) {
    const double total = readout(node_kernel);
    if (mode == ReadoutMode::Mean && node_kernel.size() > 0) return total / static_cast<double>(node_kernel.size());
    return total;
}

namespace {

void check_pair_inputs(const Graph& g1, const Graph& g2) {
    if (g1.num_nodes() == 0 || g2.num_nodes() == 0) throw InputError("kernel: empty graph");
    if (g1.feature_dim() != g2.feature_dim()) {
        throw InputError("kernel: feature dimension mismatch " + std::to_string(g1.feature_dim()) + " vs " +
                         std::to_string(g2.feature_dim()));
    }
    if (g1.feature_dim() == 0) throw InputError("kernel: graphs have no features");
}

/// Per-graph quantities that do not depend on the partner graph.
struct Prepared {
    Index n = 0;
    Matrix features;                 // propagated (SGTK/SGNK) or raw (GNTK)
    Vector self;                     // SGTK / SGNK self covariance diagonal
    SparseMatrix scaled_adjacency;   // GNTK: diag(c) (A + I)
    std::vector<Vector> block_diag;  // GNTK: aggregated self variances per block
};

SparseMatrix scaled_sum_adjacency(const Graph& g) {
    const Index n = g.num_nodes();
    std::vector<Eigen::Triplet<double>> triplets;
    for (Index i = 0; i < n; ++i) triplets.emplace_back(i, i, 1.0);
    for (const auto& [u, v] : g.edges()) {
        triplets.emplace_back(u, v, 1.0);
        triplets.emplace_back(v, u, 1.0);
    }
    SparseMatrix a(n, n);
    a.setFromTriplets(triplets.begin(), triplets.end());

    // c_i = 1 / || sum_{p in N(i) + i} x_p ||; zero neighbourhoods contribute nothing.
    const Matrix summed = a * g.features();
    Vector c(n);
    for (Index i = 0; i < n; ++i) {
        const double norm = summed.row(i).norm();
        c[i] = norm > 0.0 ? 1.0 / norm : 0.0;
    }
    SparseMatrix scaled = c.asDiagonal() * a;
    scaled.makeCompressed();
    return scaled;
}

/// B S B'^T for sparse B, B'.
Matrix aggregate(const SparseMatrix& left, const Matrix& s, const SparseMatrix& right) {
    Matrix tmp = left * s;
    Matrix out = right * tmp.transpose();
    return out.transpose();
}

Prepared prepare(const Graph& g, KernelKind kind, const KernelHyperParams& hp) {
    Prepared p;
    p.n = g.num_nodes();
    const PropagationConfig cfg{hp.K};
    switch (kind) {
    case KernelKind::SGNK: {
        p.features = propagate(normalize_adjacency(g), g.features(), cfg);
        p.self = p.features.rowwise().squaredNorm().array() + hp.sigma_b * hp.sigma_b;
        break;
    }
    case KernelKind::SGTK: {
        p.features = propagate(normalize_adjacency(g), g.features(), cfg);
        const double inv_d = 1.0 / static_cast<double>(g.feature_dim());
        p.self = (p.features.rowwise().squaredNorm() * inv_d).array() + hp.beta * hp.beta;
        break;
    }
    case KernelKind::GNTK: {
        p.features = g.features();
        p.scaled_adjacency = scaled_sum_adjacency(g);
        Matrix s = g.features() * g.features().transpose();
        for (int block = 0; block < hp.gntk_blocks; ++block) {
            s = aggregate(p.scaled_adjacency, s, p.scaled_adjacency);
            Vector diag = s.diagonal();
            Matrix next(p.n, p.n);
            for (Index j = 0; j < p.n; ++j)
                for (Index i = 0; i < p.n; ++i)
                    next(i, j) = activation_pair_expectation(hp.activation, CovTriple<double>{diag[i], diag[j], s(i, j)});
            p.block_diag.push_back(std::move(diag));
            s.swap(next);
        }
        break;
    }
    }
    return p;
}

Matrix sgnk_from_prepared(const Prepared& a, const Prepared& b, const KernelHyperParams& hp) {
    const double bias = hp.sigma_b * hp.sigma_b;
    const double add = hp.erf_add_beta2 ? hp.beta * hp.beta : 0.0;
    Matrix out = a.features * b.features.transpose();
    for (Index j = 0; j < out.cols(); ++j) {
        for (Index i = 0; i < out.rows(); ++i) {
            out(i, j) = erf_pair_expectation(CovTriple<double>{a.self[i], b.self[j], out(i, j) + bias}) + add;
        }
    }
    return out;
}

Matrix sgtk_entries(const Matrix& cross, const Vector& self1, const Vector& self2, const KernelHyperParams& hp) {
    const double beta2 = hp.beta * hp.beta;
    Matrix out(cross.rows(), cross.cols());
    for (Index j = 0; j < cross.cols(); ++j) {
        for (Index i = 0; i < cross.rows(); ++i) {
            const CovTriple<double> c{self1[i], self2[j], cross(i, j)};
            const double sigma_hat = activation_pair_expectation(hp.activation, c) + beta2;
            const double sigma_dot = activation_deriv_expectation(hp.activation, c);
            out(i, j) = cross(i, j) * sigma_dot + sigma_hat;
        }
    }
    return out;
}

Matrix sgtk_from_prepared(const Prepared& a, const Prepared& b, const KernelHyperParams& hp) {
    const double inv_d = 1.0 / static_cast<double>(a.features.cols());
    Matrix cross = (a.features * b.features.transpose()) * inv_d;
    cross.array() += hp.beta * hp.beta;
    return sgtk_entries(cross, a.self, b.self, hp);
}

Matrix gntk_from_prepared(const Prepared& a, const Prepared& b, const KernelHyperParams& hp) {
    Matrix sigma = a.features * b.features.transpose();
    Matrix theta = sigma;
    for (int block = 0; block < hp.gntk_blocks; ++block) {
        sigma = aggregate(a.scaled_adjacency, sigma, b.scaled_adjacency);
        theta = aggregate(a.scaled_adjacency, theta, b.scaled_adjacency);
        const Vector& d1 = a.block_diag[static_cast<std::size_t>(block)];
        const Vector& d2 = b.block_diag[static_cast<std::size_t>(block)];
        for (Index j = 0; j < sigma.cols(); ++j) {
            for (Index i = 0; i < sigma.rows(); ++i) {
                const CovTriple<double> c{d1[i], d2[j], sigma(i, j)};
                const double sigma_hat = activation_pair_expectation(hp.activation, c);
                const double sigma_dot = activation_deriv_expectation(hp.activation, c);
                theta(i, j) = theta(i, j) * sigma_dot + sigma_hat;
                sigma(i, j) = sigma_hat;
            }
        }
    }
    return theta;
}

Matrix pair_from_prepared(KernelKind kind, const Prepared& a, const Prepared& b, const KernelHyperParams& hp) {
    switch (kind) {
    case KernelKind::SGTK: return sgtk_from_prepared(a, b, hp);
    case KernelKind::SGNK: return sgnk_from_prepared(a, b, hp);
    case KernelKind::GNTK: return gntk_from_prepared(a, b, hp);
    }
    throw InputError("unknown kernel kind");
}

int resolve_threads(int requested) {
#ifdef _OPENMP
    return requested > 0 ? requested : omp_get_max_threads();
#else
    (void)requested;
    return 1;
#endif
}

}  // namespace

PairKernel sgtk_pair(const Graph& g1, const Graph& g2, const KernelHyperParams& hp, ReadoutMode mode) {
    hp.validate();
    check_pair_inputs(g1, g2);
    const auto adj1 = normalize_adjacency(g1);
    const auto adj2 = normalize_adjacency(g2);
    const PropagationConfig cfg{hp.K};
    const double inv_d = 1.0 / static_cast<double>(g1.feature_dim());
    const double beta2 = hp.beta * hp.beta;

    const Matrix& x1 = g1.features();
    const Matrix& x2 = g2.features();
    Matrix cross = propagate_covariance(adj1, adj2, x1 * x2.transpose(), cfg) * inv_d;
    cross.array() += beta2;
    const Matrix self1 = propagate_covariance(adj1, adj1, x1 * x1.transpose(), cfg) * inv_d;
    const Matrix self2 = propagate_covariance(adj2, adj2, x2 * x2.transpose(), cfg) * inv_d;
    const Vector diag1 = self1.diagonal().array() + beta2;
    const Vector diag2 = self2.diagonal().array() + beta2;

    PairKernel out;
    out.node_kernel = sgtk_entries(cross, diag1, diag2, hp);
    out.graph_value = readout(out.node_kernel, mode);
    return out;
}

PairKernel sgnk_pair(const Graph& g1, const Graph& g2, const KernelHyperParams& hp, ReadoutMode mode) {
    return kernel_pair(KernelKind::SGNK, g1, g2, hp, mode);
}

PairKernel gntk_pair(const Graph& g1, const Graph& g2, const KernelHyperParams& hp, ReadoutMode mode) {
    return kernel_pair(KernelKind::GNTK, g1, g2, hp, mode);
}

PairKernel kernel_pair(KernelKind kind, const Graph& g1, const Graph& g2, const KernelHyperParams& hp,
                       ReadoutMode mode) {
    if (kind == KernelKind::SGTK) return sgtk_pair(g1, g2, hp, mode);
    hp.validate();
    check_pair_inputs(g1, g2);
    const Prepared a = prepare(g1, kind, hp);
    const Prepared b = prepare(g2, kind, hp);
    PairKernel out;
    out.node_kernel = pair_from_prepared(kind, a, b, hp);
    out.graph_value = readout(out.node_kernel, mode);
    return out;
}

GramMatrix gram_matrix(std::span<const Graph> graphs, KernelKind kind, const KernelHyperParams& hp,
                       const GramOptions& opts) {
    hp.validate();
    if (graphs.empty()) throw InputError("gram_matrix: no graphs");
    for (const Graph& g : graphs) check_pair_inputs(graphs.front(), g);

    const Index p = static_cast<Index>(graphs.size());
    const int threads = resolve_threads(opts.threads);
    Eigen::setNbThreads(1);

    std::vector<Prepared> prepared(graphs.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (Index i = 0; i < p; ++i) prepared[static_cast<std::size_t>(i)] = prepare(graphs[static_cast<std::size_t>(i)], kind, hp);

    // Upper-triangle tiles; each entry is a pure function of its two graphs.
    constexpr Index tile = 16;
    const Index tiles = (p + tile - 1) / tile;
    std::vector<std::pair<Index, Index>> work;
    for (Index ti = 0; ti < tiles; ++ti)
        for (Index tj = ti; tj < tiles; ++tj) work.emplace_back(ti, tj);

    Matrix values = Matrix::Zero(p, p);
    const Index num_work = static_cast<Index>(work.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (Index w = 0; w < num_work; ++w) {
        const auto [ti, tj] = work[static_cast<std::size_t>(w)];
        const Index i_end = std::min(p, (ti + 1) * tile);
        const Index j_end = std::min(p, (tj + 1) * tile);
        for (Index i = ti * tile; i < i_end; ++i) {
            for (Index j = std::max(i, tj * tile); j < j_end; ++j) {
                const Matrix node = pair_from_prepared(kind, prepared[static_cast<std::size_t>(i)],
                                                       prepared[static_cast<std::size_t>(j)], hp);
                values(i, j) = readout(node, opts.readout);
            }
        }
    }
    for (Index j = 0; j < p; ++j)
        for (Index i = j + 1; i < p; ++i) values(i, j) = values(j, i);

    GramMatrix out;
    out.values = std::move(values);
    out.kind = kind;
    out.hyperparams = hp;
    out.level = ItemLevel::Graph;
    out.readout = opts.readout;
    return out;
}

GramMatrix node_gram_matrix(const Graph& g, KernelKind kind, const KernelHyperParams& hp, const GramOptions& opts) {
    hp.validate();
    check_pair_inputs(g, g);
    const Index n = g.num_nodes();
    std::vector<Index> all(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    Eigen::setNbThreads(1);

    NodeKernel nk(g, kind, hp);
    Matrix values = nk.block(all, all);
    for (Index j = 0; j < n; ++j)
        for (Index i = j + 1; i < n; ++i) values(i, j) = values(j, i);

    GramMatrix out;
    out.values = std::move(values);
    out.kind = kind;
    out.hyperparams = hp;
    out.level = ItemLevel::Node;
    out.readout = opts.readout;
    return out;
}

NodeKernel::NodeKernel(const Graph& g, KernelKind kind, const KernelHyperParams& hp)
    : kind_(kind), hp_(hp), num_nodes_(g.num_nodes()) {
    hp.validate();
    check_pair_inputs(g, g);
    Prepared p = prepare(g, kind, hp);
    if (kind == KernelKind::GNTK) {
        full_ = gntk_from_prepared(p, p, hp);
    } else {
        propagated_ = std::move(p.features);
        self_ = std::move(p.self);
    }
}

Matrix NodeKernel::block(std::span<const Index> rows, std::span<const Index> cols) const {
    const auto r = static_cast<Index>(rows.size());
    const auto c = static_cast<Index>(cols.size());
    for (auto idx : rows)
        if (idx < 0 || idx >= num_nodes_) throw InputError("node kernel: row index out of range");
    for (auto idx : cols)
        if (idx < 0 || idx >= num_nodes_) throw InputError("node kernel: column index out of range");

    Matrix out(r, c);
    if (kind_ == KernelKind::GNTK) {
        for (Index j = 0; j < c; ++j)
            for (Index i = 0; i < r; ++i) out(i, j) = full_(rows[i], cols[j]);
        return out;
    }

    Matrix a(r, propagated_.cols());
    Matrix b(c, propagated_.cols());
    Vector sa(r), sb(c);
    for (Index i = 0; i < r; ++i) {
        a.row(i) = propagated_.row(rows[i]);
        sa[i] = self_[rows[i]];
    }
    for (Index j = 0; j < c; ++j) {
        b.row(j) = propagated_.row(cols[j]);
        sb[j] = self_[cols[j]];
    }
    Prepared pa, pb;
    pa.features = std::move(a);
    pa.self = std::move(sa);
    pb.features = std::move(b);
    pb.self = std::move(sb);
    return kind_ == KernelKind::SGNK ? sgnk_from_prepared(pa, pb, hp_) : sgtk_from_prepared(pa, pb, hp_);
}

GramCheck check_gram(const Eigen::Ref<const Matrix>& values) {
    if (values.rows() != values.cols() || values.size() == 0) throw InputError("check_gram: need a nonempty square matrix");
    GramCheck out;
    const double scale = std::max(values.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    out.max_asymmetry = (values - values.transpose()).cwiseAbs().maxCoeff() / scale;
    const Matrix sym = 0.5 * (values + values.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
    out.min_eigenvalue = solver.eigenvalues().minCoeff();
    out.max_eigenvalue = solver.eigenvalues().maxCoeff();
    out.min_diagonal = values.diagonal().minCoeff();
    return out;
}

Matrix normalize_gram(const Eigen::Ref<const Matrix>& values) {
    const Vector diag = values.diagonal();
    if ((diag.array() <= 0.0).any()) throw NumericError("normalize_gram: non-positive diagonal entry");
    const Vector inv = diag.cwiseSqrt().cwiseInverse();
    return inv.asDiagonal() * values * inv.asDiagonal();
}

}  // namespace gk
