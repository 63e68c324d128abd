#include "commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace gk::cli;
    CLI::App app{"gk: simplified graph kernels (SGTK, SGNK) and the GNTK baseline"};
    app.require_subcommand(1);
    Options opt;

    auto add_kernel_flags = [&](CLI::App* sub) {
        sub->add_option("--K", opt.K, "Propagation steps; list or range for classify/sweep-k");
        sub->add_option("--beta", opt.beta, "Bias scale beta; list for classify");
        sub->add_option("--sigma-b", opt.sigma_b, "Erf bias scale");
        sub->add_option("--gntk-blocks", opt.gntk_blocks, "GNTK block count (0: use K)");
        sub->add_option("--readout", opt.readout, "sum or mean")->check(CLI::IsMember({"sum", "mean"}));
        sub->add_option("--row-normalize", opt.row_normalize, "auto, on or off")->check(CLI::IsMember({"auto", "on", "off"}));
        sub->add_flag("--erf-add-beta2", opt.erf_add_beta2, "Add beta^2 to the SGNK value");
        sub->add_option("--threads", opt.threads, "Worker threads (0: default; GK_THREADS overrides)");
    };

    auto* kernel = app.add_subcommand("kernel", "Compute a Gram matrix");
    kernel->add_option("--dataset", opt.dataset, "Dataset directory")->required();
    kernel->add_option("--kind", opt.kind, "sgtk, sgnk or gntk");
    kernel->add_option("--out", opt.out, "Output path (.gkm; a .csv is written alongside)")->required();
    add_kernel_flags(kernel);

    auto* classify = app.add_subcommand("classify", "Cross-validated classification");
    classify->add_option("--dataset", opt.dataset, "Dataset directory (labels, splits)")->required();
    classify->add_option("--gram", opt.gram, "Precomputed Gram matrix");
    classify->add_option("--kind", opt.kind, "sgtk, sgnk or gntk");
    classify->add_option("--classifier", opt.classifier, "svm or krr");
    classify->add_option("--folds", opt.folds, "Outer folds for graph-level data");
    classify->add_option("--split", opt.split, "public, first20_last100 or k_fold[:folds[:seed]]");
    classify->add_option("--seed", opt.seed, "Fold seed");
    classify->add_flag("--normalize-gram,!--no-normalize-gram", opt.normalize_gram,
                      "Cosine-normalize graph-level Gram matrices (default on)");
    classify->add_option("--out", opt.out, "Also write the CSV here");
    add_kernel_flags(classify);

    auto* sweep = app.add_subcommand("sweep-k", "Time Gram computation across K");
    sweep->add_option("--dataset", opt.dataset, "Dataset directory")->required();
    sweep->add_option("--kinds", opt.kinds, "Comma-separated kernel kinds");
    sweep->add_option("--reps", opt.reps, "Timed repetitions (median reported)");
    sweep->add_option("--out", opt.out, "Output prefix for .csv and .svg")->required();
    add_kernel_flags(sweep);

    auto* validate = app.add_subcommand("dataset-validate", "Check a dataset directory");
    validate->add_option("dir", opt.dataset, "Dataset directory");
    validate->add_option("--dataset", opt.dataset, "Dataset directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kInputError;
    }

    std::ostream& out = std::cout;
    if (*kernel) return guarded([&] { return cmd_kernel(opt, out); });
    if (*classify) return guarded([&] { return cmd_classify(opt, out); });
    if (*sweep) return guarded([&] { return cmd_sweep_k(opt, out); });
    return guarded([&] {
        if (opt.dataset.empty()) throw gk::InputError("dataset-validate: a dataset directory is required");
        return cmd_dataset_validate(opt, out);
    });
}
