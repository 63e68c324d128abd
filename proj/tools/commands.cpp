#include "commands.hpp"

#include "gk/bench.hpp"
#include "gk/classifiers.hpp"
#include "gk/dataset.hpp"
#include "gk/error.hpp"
#include "gk/gram_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gk::cli {

namespace {

std::string fmt(double v, const char* spec = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::string join(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) out += (i ? ";" : "") + fmt(values[i]);
    return out;
}

bool use_row_normalization(const Options& opt, const DatasetBundle& bundle) {
    if (opt.row_normalize == "on") return true;
    if (opt.row_normalize == "off") return false;
    if (opt.row_normalize != "auto") throw InputError("--row-normalize must be auto, on or off");
    return bundle.level == ItemLevel::Node;
}

std::vector<Graph> prepared_graphs(const Options& opt, const DatasetBundle& bundle) {
    if (!use_row_normalization(opt, bundle)) return bundle.graphs;
    std::vector<Graph> out;
    out.reserve(bundle.graphs.size());
    for (const auto& g : bundle.graphs) out.push_back(row_normalized(g));
    return out;
}

ReadoutMode parse_readout(const std::string& s) {
    if (s == "sum") return ReadoutMode::Sum;
    if (s == "mean") return ReadoutMode::Mean;
    throw InputError("--readout must be sum or mean");
}

KernelHyperParams make_hp(const Options& opt, KernelKind kind, int K, double beta) {
    KernelHyperParams hp;
    hp.K = K;
    hp.beta = beta;
    hp.sigma_b = opt.sigma_b;
    hp.activation = kind == KernelKind::SGNK ? ActivationKind::Erf : ActivationKind::ReLU;
    // The layer-stacked baseline uses K as its block count unless told otherwise.
    hp.gntk_blocks = kind == KernelKind::GNTK ? (opt.gntk_blocks > 0 ? opt.gntk_blocks : std::max(K, 1)) : 1;
    hp.erf_add_beta2 = opt.erf_add_beta2;
    hp.validate();
    return hp;
}

GramMatrix compute_gram(const DatasetBundle& bundle, const std::vector<Graph>& graphs, KernelKind kind,
                        const KernelHyperParams& hp, const GramOptions& gopts) {
    GramMatrix gram = bundle.level == ItemLevel::Node ? node_gram_matrix(graphs.front(), kind, hp, gopts)
                                                      : gram_matrix(graphs, kind, hp, gopts);
    gram.dataset_fingerprint = bundle.fingerprint;
    return gram;
}

std::map<std::string, std::string> base_provenance(const Options& opt, const DatasetBundle& bundle, int threads) {
    return {
        {"dataset", bundle.name},
        {"dataset_fingerprint", bundle.fingerprint},
        {"K", opt.K},
        {"beta", opt.beta},
        {"sigma_b", fmt(opt.sigma_b)},
        {"seed", std::to_string(opt.seed)},
        {"threads", std::to_string(threads)},
        {"readout", opt.readout},
        {"row_normalize", use_row_normalization(opt, bundle) ? "on" : "off"},
        {"normalize_gram", opt.normalize_gram && bundle.level == ItemLevel::Graph ? "on" : "off"},
        {"erf_add_beta2", opt.erf_add_beta2 ? "on" : "off"},
    };
}

struct ResultRow {
    std::string dataset, kernel, classifier;
    int K = 0;
    double beta = 0.0;
    double hyperparam = 0.0;
    double mean_acc = 0.0;
    double std_acc = 0.0;
    double wall_time_s = 0.0;
    std::string stage;
};

void write_rows(std::ostream& out, const std::map<std::string, std::string>& provenance,
                const std::vector<ResultRow>& rows) {
    for (const auto& [k, v] : provenance) out << "# " << k << '=' << v << '\n';
    out << "dataset,kernel,classifier,K,beta,hyperparam,mean_acc,std_acc,wall_time_s,stage\n";
    for (const auto& r : rows) {
        out << r.dataset << ',' << r.kernel << ',' << r.classifier << ',' << r.K << ',' << fmt(r.beta) << ','
            << fmt(r.hyperparam) << ',' << fmt(100.0 * r.mean_acc, "%.2f") << ',' << fmt(100.0 * r.std_acc, "%.2f") << ','
            << fmt(r.wall_time_s, "%.6g") << ',' << r.stage << '\n';
    }
}

void emit(const Options& opt, std::ostream& out, const std::string& text) {
    out << text;
    if (!opt.out.empty()) {
        std::ofstream f(opt.out, std::ios::trunc);
        if (!f) throw InputError("cannot open " + opt.out.string() + " for writing");
        f << text;
    }
}

std::vector<int> predict_with(ClassifierKind classifier, double hyperparam, const Matrix& k_train,
                              const LabelVector& y_train, const Matrix& k_query) {
    if (classifier == ClassifierKind::KRR) {
        RidgeConfig cfg;
        cfg.lambda = hyperparam;
        return krr_fit_predict(k_train, y_train, k_query, cfg).predictions;
    }
    SvmConfig cfg;
    cfg.C = hyperparam;
    return svm_fit(k_train, y_train, cfg).predict(k_query);
}

const std::vector<double>& grid_for(ClassifierKind classifier, const CvGrids& grids) {
    return classifier == ClassifierKind::KRR ? grids.krr_lambdas : grids.svm_Cs;
}

/// Fixed-split node classification over a kernel given as index blocks.
/// Picks the regularisation on the validation split, or by 3-fold CV on the
/// training split when no validation split exists.
struct NodeSelection {
    double hyperparam = 0.0;
    double score = -1.0;
};

template <typename BlockFn>
NodeSelection select_node_hyperparam(ClassifierKind classifier, const CvGrids& grids, const LabelVector& labels,
                                     const std::vector<Index>& train, const std::vector<Index>& val,
                                     std::uint64_t seed, BlockFn&& block) {
    NodeSelection best;
    const LabelVector y_train = labels.subset(train);
    const Matrix k_train = block(train, train);
    if (!val.empty()) {
        const Matrix k_val = block(val, train);
        const LabelVector y_val = labels.subset(val);
        for (double h : grid_for(classifier, grids)) {
            const double acc = accuracy(predict_with(classifier, h, k_train, y_train, k_val), y_val.labels);
            if (acc > best.score) best = {h, acc};
        }
        return best;
    }
    const auto inner = stratified_folds(y_train, 3, seed);
    for (double h : grid_for(classifier, grids)) {
        double acc = 0.0;
        for (const auto& test : inner) {
            std::vector<Index> rest;
            for (Index i = 0; i < y_train.size(); ++i)
                if (!std::binary_search(test.begin(), test.end(), i)) rest.push_back(i);
            acc += fit_and_score(k_train, y_train, classifier, h, rest, test) / static_cast<double>(inner.size());
        }
        if (acc > best.score) best = {h, acc};
    }
    return best;
}

struct NodeSplit {
    std::vector<Index> train, val, test;
};

NodeSplit node_split(const Options& opt, const DatasetBundle& bundle) {
    const SplitRule rule = SplitRule::parse(opt.split.empty() ? "public" : opt.split);
    if (rule.kind == SplitRule::Kind::KFold) throw InputError("node-level classification needs a fixed split rule");
    Splits splits = materialize_splits(bundle, rule);
    NodeSplit s;
    s.train = splits["train"];
    s.test = splits["test"];
    if (splits.count("val")) s.val = splits["val"];
    if (s.train.empty() || s.test.empty()) throw InputError("split has an empty train or test set");
    return s;
}

}  // namespace

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            const auto dash = part.find('-', 1);
            if (dash != std::string::npos) {
                const int lo = std::stoi(part.substr(0, dash));
                const int hi = std::stoi(part.substr(dash + 1));
                if (hi < lo) throw InputError("bad range '" + part + "'");
                for (int v = lo; v <= hi; ++v) out.push_back(v);
            } else {
                out.push_back(std::stoi(part));
            }
        } catch (const std::logic_error&) {
            throw InputError("cannot parse integer list '" + text + "'");
        }
    }
    if (out.empty()) throw InputError("empty integer list");
    return out;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            out.push_back(std::stod(part));
        } catch (const std::logic_error&) {
            throw InputError("cannot parse number list '" + text + "'");
        }
    }
    if (out.empty()) throw InputError("empty number list");
    return out;
}

int effective_threads(int flag) {
    int threads = flag;
    if (const char* env = std::getenv("GK_THREADS"); env && *env) {
        try {
            threads = std::stoi(env);
        } catch (const std::logic_error&) {
            throw InputError(std::string("GK_THREADS is not an integer: ") + env);
        }
    }
    if (threads < 0) throw InputError("thread count must be >= 0");
#ifdef _OPENMP
    if (threads == 0) threads = omp_get_max_threads();
    omp_set_num_threads(threads);
#else
    threads = 1;
#endif
    return threads;
}

int cmd_kernel(const Options& opt, std::ostream& out) {
    if (opt.out.empty()) throw InputError("kernel: --out is required");
    const int threads = effective_threads(opt.threads);
    const DatasetBundle bundle = load_dataset(opt.dataset);
    const auto graphs = prepared_graphs(opt, bundle);
    const KernelKind kind = parse_kernel_kind(opt.kind);
    const auto Ks = parse_int_list(opt.K);
    const auto betas = parse_double_list(opt.beta);
    if (Ks.size() != 1 || betas.size() != 1) throw InputError("kernel: --K and --beta take a single value");

    const KernelHyperParams hp = make_hp(opt, kind, Ks.front(), betas.front());
    GramOptions gopts;
    gopts.readout = parse_readout(opt.readout);
    gopts.threads = threads;

    GramMatrix gram;
    const double seconds = time_seconds([&] { gram = compute_gram(bundle, graphs, kind, hp, gopts); });
    if (!gram.values.allFinite()) throw NumericError("kernel: Gram matrix has non-finite entries");

    write_gram(opt.out, gram);
    write_gram_csv(opt.out.string() + ".csv", gram.values);
    out << "kernel=" << to_string(kind) << " K=" << hp.K << " items=" << gram.size() << " wall_time_s=" << fmt(seconds, "%.6f")
        << " out=" << opt.out.string() << '\n';
    return kOk;
}

int cmd_classify(const Options& opt, std::ostream& out) {
    const int threads = effective_threads(opt.threads);
    const DatasetBundle bundle = load_dataset(opt.dataset);
    const ClassifierKind classifier = parse_classifier_kind(opt.classifier);
    const CvGrids grids;
    auto provenance = base_provenance(opt, bundle, threads);
    provenance["classifier"] = to_string(classifier);
    provenance["grid"] = join(grid_for(classifier, grids));
    provenance["folds"] = std::to_string(opt.folds);
    provenance["split"] = opt.split.empty() ? (bundle.level == ItemLevel::Node ? "public" : "k_fold") : opt.split;

    std::vector<ResultRow> rows;

    auto classify_gram = [&](const Matrix& values, const std::string& kernel, int K, double beta, double gram_time) {
        const Matrix k = opt.normalize_gram && bundle.level == ItemLevel::Graph ? normalize_gram(values) : values;
        ResultRow row{bundle.name, kernel, to_string(classifier), K, beta, 0.0, 0.0, 0.0, 0.0, ""};
        if (bundle.level == ItemLevel::Graph) {
            CvResult cv;
            const double t = time_seconds([&] { cv = cross_validate(k, bundle.labels, classifier, opt.folds, grids, opt.seed, threads); });
            row.hyperparam = cv.best_hyperparam;
            row.mean_acc = cv.mean_accuracy;
            row.std_acc = cv.std_accuracy;
            row.wall_time_s = gram_time + t;
            row.stage = "cv";
        } else {
            const NodeSplit s = node_split(opt, bundle);
            auto block = [&](const std::vector<Index>& r, const std::vector<Index>& c) { return submatrix(k, r, c); };
            double acc = 0.0;
            NodeSelection sel;
            const double t = time_seconds([&] {
                sel = select_node_hyperparam(classifier, grids, bundle.labels, s.train, s.val, opt.seed, block);
                acc = accuracy(predict_with(classifier, sel.hyperparam, block(s.train, s.train), bundle.labels.subset(s.train),
                                            block(s.test, s.train)),
                               bundle.labels.subset(s.test).labels);
            });
            row.hyperparam = sel.hyperparam;
            row.mean_acc = acc;
            row.wall_time_s = gram_time + t;
            row.stage = "test";
        }
        return row;
    };

    if (!opt.gram.empty()) {
        const GramMatrix gram = read_gram(opt.gram);
        if (gram.size() != bundle.labels.size()) {
            throw InputError("Gram matrix has " + std::to_string(gram.size()) + " items but dataset has " +
                             std::to_string(bundle.labels.size()) + " labels");
        }
        provenance["gram_fingerprint"] = gram.dataset_fingerprint;
        rows.push_back(classify_gram(gram.values, to_string(gram.kind), gram.hyperparams.K, gram.hyperparams.beta, 0.0));
        std::ostringstream text;
        write_rows(text, provenance, rows);
        emit(opt, out, text.str());
        return kOk;
    }

    const KernelKind kind = parse_kernel_kind(opt.kind);
    const auto graphs = prepared_graphs(opt, bundle);
    GramOptions gopts;
    gopts.readout = parse_readout(opt.readout);
    gopts.threads = threads;

    if (bundle.level == ItemLevel::Graph) {
        ResultRow best;
        best.mean_acc = -1.0;
        for (int K : parse_int_list(opt.K)) {
            for (double beta : parse_double_list(opt.beta)) {
                const KernelHyperParams hp = make_hp(opt, kind, K, beta);
                GramMatrix gram;
                const double t = time_seconds([&] { gram = compute_gram(bundle, graphs, kind, hp, gopts); });
                ResultRow row = classify_gram(gram.values, to_string(kind), K, beta, t);
                rows.push_back(row);
                if (row.mean_acc > best.mean_acc) best = row;
            }
        }
        best.stage = "best";
        rows.push_back(best);
    } else {
        // Node level: select (K, beta, regularisation) on validation, report test.
        const NodeSplit s = node_split(opt, bundle);
        const Graph& g = graphs.front();
        struct Choice {
            int K;
            double beta;
            NodeSelection sel;
            double seconds;
        };
        std::optional<Choice> best;
        for (int K : parse_int_list(opt.K)) {
            for (double beta : parse_double_list(opt.beta)) {
                const KernelHyperParams hp = make_hp(opt, kind, K, beta);
                NodeSelection sel;
                const double t = time_seconds([&] {
                    const NodeKernel nk(g, kind, hp);
                    auto block = [&](const std::vector<Index>& r, const std::vector<Index>& c) { return nk.block(r, c); };
                    sel = select_node_hyperparam(classifier, grids, bundle.labels, s.train, s.val, opt.seed, block);
                });
                rows.push_back({bundle.name, to_string(kind), to_string(classifier), K, beta, sel.hyperparam, sel.score, 0.0, t,
                                s.val.empty() ? "select_cv" : "select_val"});
                if (!best || sel.score > best->sel.score) best = Choice{K, beta, sel, t};
            }
        }
        const KernelHyperParams hp = make_hp(opt, kind, best->K, best->beta);
        double acc = 0.0;
        const double t = time_seconds([&] {
            const NodeKernel nk(g, kind, hp);
            acc = accuracy(predict_with(classifier, best->sel.hyperparam, nk.block(s.train, s.train),
                                        bundle.labels.subset(s.train), nk.block(s.test, s.train)),
                           bundle.labels.subset(s.test).labels);
        });
        rows.push_back({bundle.name, to_string(kind), to_string(classifier), best->K, best->beta, best->sel.hyperparam, acc, 0.0,
                        t, "test"});
    }
    std::ostringstream text;
    write_rows(text, provenance, rows);
    emit(opt, out, text.str());
    return kOk;
}

int cmd_sweep_k(const Options& opt, std::ostream& out) {
    if (opt.out.empty()) throw InputError("sweep-k: --out is required (prefix for .csv and .svg)");
    if (opt.reps < 1) throw InputError("sweep-k: --reps must be >= 1");
    const int threads = effective_threads(opt.threads);
    const DatasetBundle bundle = load_dataset(opt.dataset);
    const auto graphs = prepared_graphs(opt, bundle);
    const auto Ks = parse_int_list(opt.K);
    const auto betas = parse_double_list(opt.beta);
    if (betas.size() != 1) throw InputError("sweep-k: --beta takes a single value");
    std::vector<KernelKind> kinds;
    {
        std::stringstream ss(opt.kinds);
        std::string part;
        while (std::getline(ss, part, ',')) kinds.push_back(parse_kernel_kind(part));
    }
    if (kinds.empty()) throw InputError("sweep-k: no kernel kinds");

    GramOptions gopts;
    gopts.readout = parse_readout(opt.readout);
    gopts.threads = threads;

    std::vector<BenchRecord> records;
    std::vector<Series> series;
    for (KernelKind kind : kinds) {
        Series s{to_string(kind), {}, {}};
        for (int K : Ks) {
            const KernelHyperParams hp = make_hp(opt, kind, K, betas.front());
            GramMatrix gram;
            const double t = median_time(opt.reps, [&] { gram = compute_gram(bundle, graphs, kind, hp, gopts); });
            if (!gram.values.allFinite()) throw NumericError("sweep-k: non-finite Gram entries");
            records.push_back({bundle.name, to_string(kind), K, "gram", t, std::nullopt, opt.reps});
            s.x.push_back(K);
            s.y.push_back(t);
            out << to_string(kind) << " K=" << K << " median_s=" << fmt(t, "%.6f") << '\n';
        }
        series.push_back(std::move(s));
    }

    auto provenance = base_provenance(opt, bundle, threads);
    provenance.erase("normalize_gram");
    provenance["kinds"] = opt.kinds;
    provenance["reps"] = std::to_string(opt.reps);
    provenance["timing"] = "median after one warm-up; gram_matrix call only";
    const std::string prefix = opt.out.string();
    {
        std::ofstream csv(prefix + ".csv", std::ios::trunc);
        if (!csv) throw InputError("cannot write " + prefix + ".csv");
        write_bench_csv(csv, records, provenance);
    }
    {
        std::ofstream svg(prefix + ".svg", std::ios::trunc);
        if (!svg) throw InputError("cannot write " + prefix + ".svg");
        write_line_chart_svg(svg, bundle.name + ": Gram time vs K", "K", "median wall time (s)", series, provenance);
    }
    return kOk;
}

int cmd_dataset_validate(const Options& opt, std::ostream& out) {
    const DatasetBundle b = load_dataset(opt.dataset);
    const nlohmann::json report = {
        {"name", b.name},
        {"level", to_string(b.level)},
        {"graphs", b.graphs.size()},
        {"nodes", b.total_nodes()},
        {"edges", b.total_edges()},
        {"classes", b.labels.num_classes},
        {"feature_dim", b.feature_dim()},
        {"feature_provenance", to_string(b.feature_provenance)},
        {"fingerprint", b.fingerprint},
        {"status", "ok"},
    };
    out << report.dump() << '\n';
    return kOk;
}

int guarded(const std::function<int()>& fn) {
    try {
        return fn();
    } catch (const DatasetError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kNumericError;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumericError;
    }
}

}  // namespace gk::cli
