#pragma once

#include "gk/kernels.hpp"

#include <cstdint>
#include <functional>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace gk::cli {

enum ExitCode : int { kOk = 0, kInputError = 2, kNumericError = 3 };

struct Options {
    std::filesystem::path dataset;
    std::filesystem::path gram;
    std::string kind = "sgnk";
    std::string kinds = "sgtk,sgnk,gntk";
    std::string K = "2";
    std::string beta = "1";
    double sigma_b = 1.0;
    int gntk_blocks = 0;  // 0: use K
    std::string classifier = "svm";
    int folds = 10;
    std::string split;
    int reps = 3;
    int threads = 0;
    std::uint64_t seed = 0;
    std::filesystem::path out;
    std::string readout = "sum";
    std::string row_normalize = "auto";  // auto | on | off
    bool normalize_gram = true;  // graph level only
    bool erf_add_beta2 = false;
};

/// Parses "3", "1-5" or "1,2,4".
std::vector<int> parse_int_list(const std::string& text);
/// Parses "1" or "0.5,1,2".
std::vector<double> parse_double_list(const std::string& text);

/// GK_THREADS overrides the flag; 0 keeps the OpenMP default.
int effective_threads(int flag);

int cmd_kernel(const Options& opt, std::ostream& out);
int cmd_classify(const Options& opt, std::ostream& out);
int cmd_sweep_k(const Options& opt, std::ostream& out);
int cmd_dataset_validate(const Options& opt, std::ostream& out);

/// Runs `fn`, mapping exceptions to exit codes with a message on stderr.
int guarded(const std::function<int()>& fn);

}  // namespace gk::cli
