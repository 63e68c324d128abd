#pragma once

#include "gk/graph.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gk {

struct LabelVector {
    std::vector<int> labels;
    int num_classes = 0;

    Index size() const noexcept { return static_cast<Index>(labels.size()); }
    /// num_classes = max label + 1.
    static LabelVector from(std::vector<int> labels);
    LabelVector subset(std::span<const Index> indices) const;
    void validate() const;
    /// Number of distinct classes actually present.
    int classes_present() const;
};

/// Log-spaced grid lo, lo*10^step, ..., hi (inclusive).
std::vector<double> log_grid(double lo, double hi, double decades_per_step = 0.5);

struct RidgeConfig {
    double lambda = 1.0;
    std::vector<double> lambda_grid = log_grid(1e-2, 1e2);
};

struct SvmConfig {
    double C = 1.0;
    std::vector<double> C_grid = log_grid(1e-2, 1e4);
    double tol = 1e-3;
    long max_passes = 1'000'000;
    bool record_objective = false;
};

struct KrrResult {
    Matrix scores;  // q x num_classes
    std::vector<int> predictions;
    bool jittered = false;
};

/// Multiclass kernel ridge regression on one-hot targets:
/// scores = cross (K + lambda I)^{-1} Y, prediction = argmax (ties to the smaller id).
KrrResult krr_fit_predict(const Eigen::Ref<const Matrix>& train_gram, const LabelVector& train_labels,
                          const Eigen::Ref<const Matrix>& cross_gram, const RidgeConfig& cfg);

/// Soft-margin binary SVM in the dual, solved by SMO with second-order
/// working-set selection. Labels are +1 / -1.
struct BinarySvm {
    Vector alpha;          // dual variables in [0, C]
    Vector signed_alpha;   // alpha_i y_i
    double rho = 0.0;      // decision = sum_i alpha_i y_i K(i, .) - rho
    std::vector<Index> support;
    double objective = 0.0;  // dual objective (maximisation form)
    long iterations = 0;
    bool converged = false;
    double kkt_violation = 0.0;
    std::vector<double> objective_trace;
};

BinarySvm solve_binary_svm(const Eigen::Ref<const Matrix>& gram, std::span<const int> y, double C,
                           const SvmConfig& cfg);

/// Dual objective sum(alpha) - 1/2 alpha^T Q alpha with Q_ij = y_i y_j K_ij.
double svm_dual_objective(const Eigen::Ref<const Matrix>& gram, std::span<const int> y, const Vector& alpha);

struct SvmModel {
    int num_classes = 0;
    std::vector<int> machine_class;  // class id handled by each one-vs-rest machine
    std::vector<BinarySvm> machines;
    std::vector<std::string> warnings;

    /// q x num_classes; classes without a machine get -inf.
    Matrix decision_values(const Eigen::Ref<const Matrix>& cross_gram) const;
    std::vector<int> predict(const Eigen::Ref<const Matrix>& cross_gram) const;
};

/// One-vs-rest multiclass SVM over a precomputed Gram matrix.
SvmModel svm_fit(const Eigen::Ref<const Matrix>& train_gram, const LabelVector& train_labels, const SvmConfig& cfg);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

/// Test-fold index lists. Falls back to unstratified folds (with a warning)
/// if some class has fewer members than folds.
std::vector<std::vector<Index>> stratified_folds(const LabelVector& labels, int folds, std::uint64_t seed,
                                                 std::vector<std::string>* warnings = nullptr);

enum class ClassifierKind { KRR, SVM };

const char* to_string(ClassifierKind kind);
ClassifierKind parse_classifier_kind(const std::string& name);

struct CvGrids {
    std::vector<double> krr_lambdas = log_grid(1e-2, 1e2);
    std::vector<double> svm_Cs = log_grid(1e-2, 1e4);
};

struct CvResult {
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;  // population standard deviation over outer folds
    double best_hyperparam = 0.0;  // most frequently selected value (ties to the smaller)
    std::vector<double> fold_accuracies;
    std::vector<double> fold_hyperparams;
    std::vector<std::string> warnings;
};

/// Stratified outer k-fold; on each training fold the regularisation value is
/// chosen by a nested stratified 3-fold over the grid.
CvResult cross_validate(const Eigen::Ref<const Matrix>& gram, const LabelVector& labels, ClassifierKind classifier,
                        int folds, const CvGrids& grids, std::uint64_t seed, int threads = 1);

/// Fits on `train` and returns accuracy on `test`, both indexing into `gram`.
double fit_and_score(const Eigen::Ref<const Matrix>& gram, const LabelVector& labels, ClassifierKind classifier,
                     double hyperparam, std::span<const Index> train, std::span<const Index> test);

Matrix submatrix(const Eigen::Ref<const Matrix>& m, std::span<const Index> rows, std::span<const Index> cols);

}  // namespace gk
