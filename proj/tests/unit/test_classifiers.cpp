#include "oracles.hpp"

#include "gk/classifiers.hpp"
#include "gk/error.hpp"

#include <doctest.h>

#include <numeric>
#include <set>

using namespace gk;

namespace {

std::vector<Index> iota_indices(Index n) {
    std::vector<Index> v(static_cast<std::size_t>(n));
    std::iota(v.begin(), v.end(), Index{0});
    return v;
}

LabelVector random_labels(std::mt19937_64& rng, Index n, int classes) {
    std::uniform_int_distribution<int> pick(0, classes - 1);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = i < classes ? static_cast<int>(i) : pick(rng);
    LabelVector out;
    out.labels = y;
    out.num_classes = classes;
    return out;
}

Matrix block_gram(const std::vector<int>& y, double within = 1.0) {
    const Index n = static_cast<Index>(y.size());
    Matrix k = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            if (y[static_cast<std::size_t>(i)] == y[static_cast<std::size_t>(j)]) k(i, j) = i == j ? 1.0 : within;
    return k;
}

}  // namespace

TEST_CASE("log grid spans the requested decades") {
    const auto g = log_grid(1e-2, 1e2);
    REQUIRE(g.size() == 9);
    CHECK(g.front() == doctest::Approx(1e-2));
    CHECK(g.back() == doctest::Approx(1e2));
    CHECK(log_grid(1e-2, 1e4).size() == 13);
}

TEST_CASE("krr examples") {
    RidgeConfig cfg;
    cfg.lambda = 1.0;
    SUBCASE("single item") {
        LabelVector y;
        y.labels = {0};
        y.num_classes = 2;
        const auto r = krr_fit_predict(Matrix::Ones(1, 1), y, Matrix::Ones(1, 1), cfg);
        CHECK(r.scores(0, 0) == doctest::Approx(0.5));
        CHECK(r.scores(0, 1) == doctest::Approx(0.0));
        CHECK(r.predictions == std::vector<int>{0});
    }
    SUBCASE("identity gram") {
        const auto y = LabelVector::from({0, 1});
        const auto r = krr_fit_predict(Matrix::Identity(2, 2), y, Matrix::Identity(2, 2), cfg);
        CHECK(r.scores(0, 0) == doctest::Approx(0.5));
        CHECK(r.scores(1, 1) == doctest::Approx(0.5));
        CHECK(r.predictions == std::vector<int>{0, 1});
    }
    SUBCASE("ties go to the smaller class") {
        const auto y = LabelVector::from({0, 1});
        const auto r = krr_fit_predict(Matrix::Identity(2, 2), y, Matrix::Ones(1, 2), cfg);
        CHECK(r.predictions == std::vector<int>{0});
    }
}

TEST_CASE("krr matches explicit inverse oracle") {
    std::mt19937_64 rng(97);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix full = oracle::random_psd(rng, 11, 5);
        const Matrix k = full.topLeftCorner(8, 8);
        const Matrix cross = full.bottomLeftCorner(3, 8);
        const LabelVector y = random_labels(rng, 8, 3);
        RidgeConfig cfg;
        cfg.lambda = 0.3;
        const auto r = krr_fit_predict(k, y, cross, cfg);
        const Matrix expected = oracle::krr_scores_inverse(k, y.labels, 3, cross, 0.3);
        CHECK((r.scores - expected).cwiseAbs().maxCoeff() <= 1e-8);
    }
}

TEST_CASE("krr is invariant under joint scaling of gram and lambda") {
    std::mt19937_64 rng(101);
    const Matrix full = oracle::random_psd(rng, 14, 6);
    const Matrix k = full.topLeftCorner(10, 10);
    const Matrix cross = full.bottomLeftCorner(4, 10);
    const LabelVector y = random_labels(rng, 10, 3);
    RidgeConfig a, b;
    a.lambda = 0.2;
    b.lambda = 0.2 * 7.5;
    const auto ra = krr_fit_predict(k, y, cross, a);
    const auto rb = krr_fit_predict(7.5 * k, y, 7.5 * cross, b);
    CHECK((ra.scores - rb.scores).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(ra.predictions == rb.predictions);
}

TEST_CASE("krr rejects misaligned input") {
    const auto y = LabelVector::from({0, 1});
    RidgeConfig cfg;
    CHECK_THROWS_AS(krr_fit_predict(Matrix::Identity(2, 2), y, Matrix::Ones(1, 3), cfg), InputError);
    cfg.lambda = 0.0;
    CHECK_THROWS_AS(krr_fit_predict(Matrix::Identity(2, 2), y, Matrix::Ones(1, 2), cfg), InputError);
}

TEST_CASE("svm examples") {
    SvmConfig cfg;
    cfg.C = 1.0;
    SUBCASE("two items, identity gram") {
        const auto y = LabelVector::from({0, 1});
        const SvmModel m = svm_fit(Matrix::Identity(2, 2), y, cfg);
        for (const auto& machine : m.machines) CHECK(machine.support.size() == 2);
        const Matrix dv = m.decision_values(Matrix::Identity(2, 2));
        CHECK(dv(0, 0) > dv(0, 1));
        CHECK(dv(1, 1) > dv(1, 0));
        CHECK(m.predict(Matrix::Identity(2, 2)) == std::vector<int>{0, 1});
    }
    SUBCASE("separable block gram") {
        const std::vector<int> labels{0, 0, 1, 1};
        const Matrix k = block_gram(labels, 0.9);
        const SvmModel m = svm_fit(k, LabelVector::from(labels), cfg);
        CHECK(accuracy(m.predict(k), labels) == 1.0);
    }
}

TEST_CASE("svm dual matches projected-gradient oracle") {
    std::mt19937_64 rng(103);
    for (int trial = 0; trial < 3; ++trial) {
        const Matrix k = oracle::random_psd(rng, 20, 4) + 0.05 * Matrix::Identity(20, 20);
        std::vector<int> y(20);
        for (int i = 0; i < 20; ++i) y[static_cast<std::size_t>(i)] = (i % 2 == 0) ? 1 : -1;
        std::shuffle(y.begin(), y.end(), rng);
        SvmConfig cfg;
        cfg.tol = 1e-8;
        for (double C : {0.5, 5.0}) {
            const BinarySvm svm = solve_binary_svm(k, y, C, cfg);
            CHECK(svm.converged);
            const double expected = oracle::svm_dual_projected_gradient(k, y, C);
            CHECK(std::abs(svm.objective - expected) <= 1e-4);
            for (Index i = 0; i < 20; ++i) {
                CHECK(svm.alpha[i] >= 0.0);
                CHECK(svm.alpha[i] <= C);
            }
        }
    }
}

TEST_CASE("svm dual objective never decreases") {
    std::mt19937_64 rng(107);
    const Matrix k = oracle::random_psd(rng, 30, 5);
    std::vector<int> y(30);
    for (int i = 0; i < 30; ++i) y[static_cast<std::size_t>(i)] = i < 15 ? 1 : -1;
    SvmConfig cfg;
    cfg.record_objective = true;
    const BinarySvm svm = solve_binary_svm(k, y, 10.0, cfg);
    REQUIRE(!svm.objective_trace.empty());
    for (std::size_t t = 1; t < svm.objective_trace.size(); ++t)
        CHECK(svm.objective_trace[t] >= svm.objective_trace[t - 1] - 1e-12);
}

TEST_CASE("svm decisions depend only on support vectors") {
    std::mt19937_64 rng(109);
    const Matrix full = oracle::random_psd(rng, 40, 6);
    const Matrix k = full.topLeftCorner(30, 30);
    const Matrix cross = full.bottomLeftCorner(10, 30);
    std::vector<int> labels(30);
    for (int i = 0; i < 30; ++i) labels[static_cast<std::size_t>(i)] = i % 3;
    SvmConfig cfg;
    SvmModel m = svm_fit(k, LabelVector::from(labels), cfg);
    const auto before = m.predict(cross);
    for (auto& machine : m.machines) {
        std::set<Index> support(machine.support.begin(), machine.support.end());
        for (Index i = 0; i < machine.alpha.size(); ++i) {
            if (!support.count(i)) {
                machine.alpha[i] = 0.0;
                machine.signed_alpha[i] = 0.0;
            }
        }
    }
    CHECK(m.predict(cross) == before);
}

TEST_CASE("svm rejects degenerate problems") {
    SvmConfig cfg;
    const std::vector<int> same{1, 1};
    CHECK_THROWS_AS(solve_binary_svm(Matrix::Identity(2, 2), same, 1.0, cfg), InputError);
    const std::vector<int> bad{1, 0};
    CHECK_THROWS_AS(solve_binary_svm(Matrix::Identity(2, 2), bad, 1.0, cfg), InputError);
    CHECK_THROWS_AS(solve_binary_svm(Matrix::Identity(2, 2), std::vector<int>{1, -1}, 0.0, cfg), InputError);
}

TEST_CASE("stratified folds") {
    std::vector<int> labels;
    for (int i = 0; i < 30; ++i) labels.push_back(i < 20 ? 0 : 1);
    const auto y = LabelVector::from(labels);
    const auto folds = stratified_folds(y, 10, 5);
    REQUIRE(folds.size() == 10);
    std::vector<Index> all;
    for (const auto& f : folds) {
        CHECK(f.size() == 3);
        int ones = 0;
        for (Index i : f) ones += labels[static_cast<std::size_t>(i)];
        CHECK(ones == 1);
        all.insert(all.end(), f.begin(), f.end());
    }
    std::sort(all.begin(), all.end());
    CHECK(all == iota_indices(30));
    CHECK(stratified_folds(y, 10, 5) == folds);

    std::vector<std::string> warnings;
    const auto small = LabelVector::from({0, 0, 0, 0, 1});
    const auto f2 = stratified_folds(small, 3, 1, &warnings);
    CHECK(f2.size() == 3);
    CHECK(!warnings.empty());
}

TEST_CASE("cross validation examples") {
    SUBCASE("perfect block gram") {
        std::vector<int> labels;
        for (int i = 0; i < 40; ++i) labels.push_back(i % 2);
        const Matrix k = block_gram(labels);
        for (ClassifierKind c : {ClassifierKind::KRR, ClassifierKind::SVM}) {
            const CvResult r = cross_validate(k, LabelVector::from(labels), c, 10, {}, 3);
            CHECK(r.mean_accuracy == 1.0);
            CHECK(r.std_accuracy == 0.0);
            CHECK(r.fold_accuracies.size() == 10);
        }
    }
    SUBCASE("identity gram is at chance level") {
        std::vector<int> labels;
        for (int i = 0; i < 20; ++i) labels.push_back(i % 2);
        const CvResult r = cross_validate(Matrix::Identity(20, 20), LabelVector::from(labels), ClassifierKind::KRR, 10, {}, 3);
        CHECK(r.mean_accuracy <= 0.5 + 1e-12);
    }
    SUBCASE("fixed seed is bit-reproducible") {
        std::mt19937_64 rng(113);
        const Matrix k = oracle::random_psd(rng, 40, 6);
        const LabelVector y = random_labels(rng, 40, 2);
        const CvResult a = cross_validate(k, y, ClassifierKind::SVM, 5, {}, 9);
        const CvResult b = cross_validate(k, y, ClassifierKind::SVM, 5, {}, 9);
        CHECK(a.fold_accuracies == b.fold_accuracies);
        CHECK(a.fold_hyperparams == b.fold_hyperparams);
    }
    SUBCASE("bad arguments") {
        const auto y = LabelVector::from({0, 1, 0, 1});
        CHECK_THROWS_AS(cross_validate(Matrix::Identity(4, 4), y, ClassifierKind::KRR, 1, {}, 0), InputError);
        CHECK_THROWS_AS(cross_validate(Matrix::Identity(3, 3), y, ClassifierKind::KRR, 2, {}, 0), InputError);
    }
}

TEST_CASE("accuracy and label helpers") {
    CHECK(accuracy(std::vector<int>{0, 1, 1}, std::vector<int>{0, 1, 0}) == doctest::Approx(2.0 / 3.0));
    const auto y = LabelVector::from({2, 0, 1, 2});
    CHECK(y.num_classes == 3);
    const std::vector<Index> idx{0, 3};
    CHECK(y.subset(idx).labels == std::vector<int>{2, 2});
    CHECK(y.classes_present() == 3);
    CHECK(parse_classifier_kind("krr") == ClassifierKind::KRR);
    CHECK_THROWS_AS(parse_classifier_kind("knn"), InputError);
}
