#include "gk/classifiers.hpp"

#include "gk/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace gk {

LabelVector LabelVector::from(std::vector<int> labels) {
    LabelVector out;
    out.num_classes = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    out.labels = std::move(labels);
    out.validate();
    return out;
}

LabelVector LabelVector::subset(std::span<const Index> indices) const {
    LabelVector out;
    out.num_classes = num_classes;
    out.labels.reserve(indices.size());
    for (Index i : indices) {
        if (i < 0 || i >= size()) throw InputError("labels: index out of range");
        out.labels.push_back(labels[static_cast<std::size_t>(i)]);
    }
    return out;
}

void LabelVector::validate() const {
    for (int y : labels) {
        if (y < 0 || y >= num_classes) {
            throw InputError("labels: label " + std::to_string(y) + " outside [0, " + std::to_string(num_classes) + ")");
        }
    }
}

int LabelVector::classes_present() const {
    std::vector<char> seen(static_cast<std::size_t>(std::max(num_classes, 0)), 0);
    for (int y : labels) seen[static_cast<std::size_t>(y)] = 1;
    return static_cast<int>(std::count(seen.begin(), seen.end(), 1));
}

std::vector<double> log_grid(double lo, double hi, double decades_per_step) {
    if (!(lo > 0.0) || !(hi >= lo) || !(decades_per_step > 0.0)) throw InputError("log_grid: bad range");
    std::vector<double> out;
    const double start = std::log10(lo);
    const double stop = std::log10(hi);
    const int steps = static_cast<int>(std::floor((stop - start) / decades_per_step + 1e-9));
    for (int s = 0; s <= steps; ++s) out.push_back(std::pow(10.0, start + s * decades_per_step));
    return out;
}

Matrix submatrix(const Eigen::Ref<const Matrix>& m, std::span<const Index> rows, std::span<const Index> cols) {
    Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j)
        for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Index>(i), static_cast<Index>(j)) = m(rows[i], cols[j]);
    return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size()) throw InputError("accuracy: length mismatch");
    if (truth.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

namespace {

std::vector<int> argmax_rows(const Matrix& scores) {
    std::vector<int> out(static_cast<std::size_t>(scores.rows()), 0);
    for (Index i = 0; i < scores.rows(); ++i) {
        Index best = 0;
        for (Index c = 1; c < scores.cols(); ++c)
            if (scores(i, c) > scores(i, best)) best = c;
        out[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return out;
}

}  // namespace

KrrResult krr_fit_predict(const Eigen::Ref<const Matrix>& train_gram, const LabelVector& train_labels,
                          const Eigen::Ref<const Matrix>& cross_gram, const RidgeConfig& cfg) {
    const Index t = train_gram.rows();
    if (train_gram.cols() != t) throw InputError("krr: training Gram must be square");
    if (train_labels.size() != t) throw InputError("krr: label count does not match training Gram");
    if (cross_gram.cols() != t) throw InputError("krr: cross Gram columns do not match training items");
    if (!(cfg.lambda > 0.0)) throw InputError("krr: lambda must be positive");
    train_labels.validate();

    Matrix y = Matrix::Zero(t, train_labels.num_classes);
    for (Index i = 0; i < t; ++i) y(i, train_labels.labels[static_cast<std::size_t>(i)]) = 1.0;

    Matrix system = train_gram;
    system.diagonal().array() += cfg.lambda;
    KrrResult out;
    Eigen::LLT<Matrix> llt(system);
    if (llt.info() != Eigen::Success) {
        const double jitter = 1e-10 * system.trace() / static_cast<double>(t);
        std::cerr << "warning: krr factorization failed; adding jitter " << jitter << " to the diagonal\n";
        system.diagonal().array() += jitter;
        out.jittered = true;
        llt.compute(system);
        if (llt.info() != Eigen::Success) {
            Eigen::SelfAdjointEigenSolver<Matrix> eig(system, Eigen::EigenvaluesOnly);
            throw NumericError("krr: (K + lambda I) is not positive definite; smallest eigenvalue estimate " +
                               std::to_string(eig.eigenvalues().minCoeff()));
        }
    }
    const Matrix alpha = llt.solve(y);
    out.scores = cross_gram * alpha;
    out.predictions = argmax_rows(out.scores);
    return out;
}

double svm_dual_objective(const Eigen::Ref<const Matrix>& gram, std::span<const int> y, const Vector& alpha) {
    const Index n = gram.rows();
    Vector ya(n);
    for (Index i = 0; i < n; ++i) ya[i] = alpha[i] * y[static_cast<std::size_t>(i)];
    return alpha.sum() - 0.5 * ya.dot(gram * ya);
}

BinarySvm solve_binary_svm(const Eigen::Ref<const Matrix>& gram, std::span<const int> y, double C,
                           const SvmConfig& cfg) {
    const Index n = gram.rows();
    if (gram.cols() != n || static_cast<Index>(y.size()) != n) throw InputError("svm: Gram/label size mismatch");
    if (!(C > 0.0)) throw InputError("svm: C must be positive");
    if (!(cfg.tol > 0.0)) throw InputError("svm: tol must be positive");
    bool has_pos = false, has_neg = false;
    for (int v : y) {
        if (v == 1) has_pos = true;
        else if (v == -1) has_neg = true;
        else throw InputError("svm: binary labels must be +1 or -1");
    }
    if (!has_pos || !has_neg) throw InputError("svm: training data contains a single class");

    constexpr double tau = 1e-12;
    auto yy = [&](Index i) { return static_cast<double>(y[static_cast<std::size_t>(i)]); };

    BinarySvm out;
    Vector alpha = Vector::Zero(n);
    Vector grad = Vector::Constant(n, -1.0);  // Q alpha - e
    auto upper = [&](Index t) { return alpha[t] >= C; };
    auto lower = [&](Index t) { return alpha[t] <= 0.0; };
    auto objective = [&]() { return -0.5 * alpha.dot(grad - Vector::Ones(n)); };

    double violation = std::numeric_limits<double>::infinity();
    long iter = 0;
    for (; iter < cfg.max_passes; ++iter) {
        // Second-order working-set selection.
        double gmax = -std::numeric_limits<double>::infinity();
        Index i = -1;
        for (Index t = 0; t < n; ++t) {
            if (yy(t) > 0) {
                if (!upper(t) && -grad[t] >= gmax) gmax = -grad[t], i = t;
            } else {
                if (!lower(t) && grad[t] >= gmax) gmax = grad[t], i = t;
            }
        }
        double gmax2 = -std::numeric_limits<double>::infinity();
        double best_obj = std::numeric_limits<double>::infinity();
        Index j = -1;
        for (Index t = 0; t < n; ++t) {
            const double kit = i >= 0 ? gram(i, t) : 0.0;
            const double kii = i >= 0 ? gram(i, i) : 0.0;
            if (yy(t) > 0) {
                if (lower(t)) continue;
                const double diff = gmax + grad[t];
                gmax2 = std::max(gmax2, grad[t]);
                if (diff > 0) {
                    double quad = kii + gram(t, t) - 2.0 * kit;
                    if (quad <= 0) quad = tau;
                    const double obj = -(diff * diff) / quad;
                    if (obj <= best_obj) best_obj = obj, j = t;
                }
            } else {
                if (upper(t)) continue;
                const double diff = gmax - grad[t];
                gmax2 = std::max(gmax2, -grad[t]);
                if (diff > 0) {
                    double quad = kii + gram(t, t) + 2.0 * kit;
                    if (quad <= 0) quad = tau;
                    const double obj = -(diff * diff) / quad;
                    if (obj <= best_obj) best_obj = obj, j = t;
                }
            }
        }
        violation = gmax + gmax2;
        if (violation < cfg.tol || j < 0 || i < 0) {
            out.converged = true;
            break;
        }

        const double old_ai = alpha[i];
        const double old_aj = alpha[j];
        const double qij = yy(i) * yy(j) * gram(i, j);
        if (yy(i) != yy(j)) {
            double quad = gram(i, i) + gram(j, j) + 2.0 * qij;
            if (quad <= 0) quad = tau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0) {
                if (alpha[j] < 0) alpha[j] = 0, alpha[i] = diff;
            } else {
                if (alpha[i] < 0) alpha[i] = 0, alpha[j] = -diff;
            }
            if (diff > 0) {
                if (alpha[i] > C) alpha[i] = C, alpha[j] = C - diff;
            } else {
                if (alpha[j] > C) alpha[j] = C, alpha[i] = C + diff;
            }
        } else {
            double quad = gram(i, i) + gram(j, j) - 2.0 * qij;
            if (quad <= 0) quad = tau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > C) {
                if (alpha[i] > C) alpha[i] = C, alpha[j] = sum - C;
            } else {
                if (alpha[j] < 0) alpha[j] = 0, alpha[i] = sum;
            }
            if (sum > C) {
                if (alpha[j] > C) alpha[j] = C, alpha[i] = sum - C;
            } else {
                if (alpha[i] < 0) alpha[i] = 0, alpha[j] = sum;
            }
        }
        const double dai = alpha[i] - old_ai;
        const double daj = alpha[j] - old_aj;
        for (Index t = 0; t < n; ++t) {
            grad[t] += yy(t) * (yy(i) * gram(t, i) * dai + yy(j) * gram(t, j) * daj);
        }
        if (cfg.record_objective) out.objective_trace.push_back(objective());
    }
    out.iterations = iter;
    out.kkt_violation = violation;

    // Bias from free variables, or the midpoint of the feasible interval.
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    int free_count = 0;
    for (Index t = 0; t < n; ++t) {
        const double yg = yy(t) * grad[t];
        if (upper(t)) {
            if (yy(t) < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (lower(t)) {
            if (yy(t) > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++free_count;
            sum_free += yg;
        }
    }
    out.rho = free_count > 0 ? sum_free / free_count : 0.5 * (ub + lb);

    out.signed_alpha.resize(n);
    for (Index t = 0; t < n; ++t) {
        out.signed_alpha[t] = alpha[t] * yy(t);
        if (alpha[t] > 0.0) out.support.push_back(t);
    }
    out.alpha = std::move(alpha);
    out.objective = svm_dual_objective(gram, y, out.alpha);
    return out;
}

Matrix SvmModel::decision_values(const Eigen::Ref<const Matrix>& cross_gram) const {
    Matrix out = Matrix::Constant(cross_gram.rows(), num_classes, -std::numeric_limits<double>::infinity());
    for (std::size_t m = 0; m < machines.size(); ++m) {
        const BinarySvm& svm = machines[m];
        if (cross_gram.cols() != svm.signed_alpha.size()) throw InputError("svm: cross Gram column count mismatch");
        Vector d = Vector::Constant(cross_gram.rows(), -svm.rho);
        for (Index s : svm.support) d += svm.signed_alpha[s] * cross_gram.col(s);
        out.col(machine_class[m]) = d;
    }
    return out;
}

std::vector<int> SvmModel::predict(const Eigen::Ref<const Matrix>& cross_gram) const {
    return argmax_rows(decision_values(cross_gram));
}

SvmModel svm_fit(const Eigen::Ref<const Matrix>& train_gram, const LabelVector& train_labels, const SvmConfig& cfg) {
    const Index t = train_gram.rows();
    if (train_gram.cols() != t || train_labels.size() != t) throw InputError("svm: Gram/label size mismatch");
    train_labels.validate();
    if (train_labels.classes_present() < 2) throw InputError("svm: training fold contains a single class");

    SvmModel model;
    model.num_classes = train_labels.num_classes;
    std::vector<int> y(static_cast<std::size_t>(t));
    for (int c = 0; c < train_labels.num_classes; ++c) {
        bool present = false;
        for (Index i = 0; i < t; ++i) {
            const bool mine = train_labels.labels[static_cast<std::size_t>(i)] == c;
            present |= mine;
            y[static_cast<std::size_t>(i)] = mine ? 1 : -1;
        }
        if (!present) continue;
        BinarySvm svm = solve_binary_svm(train_gram, y, cfg.C, cfg);
        if (!svm.converged) {
            model.warnings.push_back("svm: class " + std::to_string(c) + " did not converge after " +
                                     std::to_string(svm.iterations) + " iterations; KKT violation " +
                                     std::to_string(svm.kkt_violation));
            std::cerr << "warning: " << model.warnings.back() << '\n';
        }
        model.machine_class.push_back(c);
        model.machines.push_back(std::move(svm));
    }
    return model;
}

std::vector<std::vector<Index>> stratified_folds(const LabelVector& labels, int folds, std::uint64_t seed,
                                                 std::vector<std::string>* warnings) {
    if (folds < 2) throw InputError("folds must be >= 2");
    if (labels.size() < folds) throw InputError("need at least as many items as folds");
    std::mt19937_64 rng(seed);
    std::vector<std::vector<Index>> out(static_cast<std::size_t>(folds));

    std::map<int, std::vector<Index>> by_class;
    for (Index i = 0; i < labels.size(); ++i) by_class[labels.labels[static_cast<std::size_t>(i)]].push_back(i);
    const bool stratify = std::all_of(by_class.begin(), by_class.end(),
                                      [&](const auto& kv) { return static_cast<int>(kv.second.size()) >= folds; });
    if (!stratify) {
        const std::string msg = "some class has fewer members than folds; using unstratified folds";
        if (warnings) warnings->push_back(msg);
        std::cerr << "warning: " << msg << '\n';
        std::vector<Index> all(static_cast<std::size_t>(labels.size()));
        std::iota(all.begin(), all.end(), Index{0});
        std::shuffle(all.begin(), all.end(), rng);
        for (std::size_t k = 0; k < all.size(); ++k) out[k % static_cast<std::size_t>(folds)].push_back(all[k]);
    } else {
        // Deal each shuffled class round-robin, continuing where the previous class stopped.
        std::size_t next = 0;
        for (auto& [cls, members] : by_class) {
            std::shuffle(members.begin(), members.end(), rng);
            for (Index idx : members) {
                out[next % static_cast<std::size_t>(folds)].push_back(idx);
                ++next;
            }
        }
    }
    for (auto& f : out) std::sort(f.begin(), f.end());
    return out;
}

const char* to_string(ClassifierKind kind) { return kind == ClassifierKind::KRR ? "krr" : "svm"; }

ClassifierKind parse_classifier_kind(const std::string& name) {
    if (name == "krr") return ClassifierKind::KRR;
    if (name == "svm") return ClassifierKind::SVM;
    throw InputError("unknown classifier '" + name + "' (expected krr or svm)");
}

double fit_and_score(const Eigen::Ref<const Matrix>& gram, const LabelVector& labels, ClassifierKind classifier,
                     double hyperparam, std::span<const Index> train, std::span<const Index> test) {
    const Matrix k_train = submatrix(gram, train, train);
    const Matrix k_cross = submatrix(gram, test, train);
    const LabelVector y_train = labels.subset(train);
    const LabelVector y_test = labels.subset(test);
    std::vector<int> predicted;
    if (classifier == ClassifierKind::KRR) {
        RidgeConfig cfg;
        cfg.lambda = hyperparam;
        predicted = krr_fit_predict(k_train, y_train, k_cross, cfg).predictions;
    } else {
        SvmConfig cfg;
        cfg.C = hyperparam;
        predicted = svm_fit(k_train, y_train, cfg).predict(k_cross);
    }
    return accuracy(predicted, y_test.labels);
}

namespace {

std::vector<Index> complement(Index n, const std::vector<Index>& excluded) {
    std::vector<char> skip(static_cast<std::size_t>(n), 0);
    for (Index i : excluded) skip[static_cast<std::size_t>(i)] = 1;
    std::vector<Index> out;
    for (Index i = 0; i < n; ++i)
        if (!skip[static_cast<std::size_t>(i)]) out.push_back(i);
    return out;
}


}  // namespace

CvResult cross_validate(const Eigen::Ref<const Matrix>& gram, const LabelVector& labels, ClassifierKind classifier,
                        int folds, const CvGrids& grids, std::uint64_t seed, int threads) {
    const Index p = gram.rows();
    if (gram.cols() != p || labels.size() != p) throw InputError("cross_validate: Gram/label size mismatch");
    if (folds < 2) throw InputError("cross_validate: folds must be >= 2");
    if (p < folds) throw InputError("cross_validate: fewer items than folds");
    const std::vector<double>& grid = classifier == ClassifierKind::KRR ? grids.krr_lambdas : grids.svm_Cs;
    if (grid.empty()) throw InputError("cross_validate: empty hyperparameter grid");

    CvResult result;
    const auto outer = stratified_folds(labels, folds, seed, &result.warnings);
    result.fold_accuracies.assign(static_cast<std::size_t>(folds), 0.0);
    result.fold_hyperparams.assign(static_cast<std::size_t>(folds), 0.0);
    std::vector<std::vector<std::string>> fold_warnings(static_cast<std::size_t>(folds));

#pragma omp parallel for schedule(dynamic) num_threads(std::max(threads, 1))
    for (int f = 0; f < folds; ++f) {
        const std::vector<Index>& test = outer[static_cast<std::size_t>(f)];
        const std::vector<Index> train = complement(p, test);
        const LabelVector y_train = labels.subset(train);

        // Nested 3-fold selection on the training fold.
        const Matrix k_train = submatrix(gram, train, train);
        const auto inner = stratified_folds(y_train, 3, seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(f + 1),
                                            &fold_warnings[static_cast<std::size_t>(f)]);
        double best_score = -1.0;
        double best_value = grid.front();
        for (double value : grid) {
            double score = 0.0;
            for (const auto& inner_test : inner) {
                const std::vector<Index> inner_train = complement(y_train.size(), inner_test);
                score += fit_and_score(k_train, y_train, classifier, value, inner_train, inner_test);
            }
            if (score > best_score) best_score = score, best_value = value;
        }
        result.fold_hyperparams[static_cast<std::size_t>(f)] = best_value;
        result.fold_accuracies[static_cast<std::size_t>(f)] =
            fit_and_score(gram, labels, classifier, best_value, train, test);
    }
    for (auto& w : fold_warnings) result.warnings.insert(result.warnings.end(), w.begin(), w.end());

    const double n = static_cast<double>(folds);
    result.mean_accuracy = std::accumulate(result.fold_accuracies.begin(), result.fold_accuracies.end(), 0.0) / n;
    double var = 0.0;
    for (double a : result.fold_accuracies) var += (a - result.mean_accuracy) * (a - result.mean_accuracy);
    result.std_accuracy = std::sqrt(var / n);

    std::map<double, int> votes;
    for (double h : result.fold_hyperparams) ++votes[h];
    int best_votes = 0;
    for (const auto& [value, count] : votes) {
        if (count > best_votes) best_votes = count, result.best_hyperparam = value;
    }
    return result;
}

}  // namespace gk
