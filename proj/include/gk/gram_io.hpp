#pragma once

#include "gk/kernels.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>

namespace gk {

// GKM1 layout (little-endian):
//   "GKM1" | u32 p | u8 kind | p(p+1)/2 f64 (row-major upper triangle incl. diagonal) | JSON trailer to EOF

nlohmann::json to_json(const KernelHyperParams& hp);
KernelHyperParams hyperparams_from_json(const nlohmann::json& j);

void write_gram(std::ostream& out, const GramMatrix& gram);
void write_gram(const std::filesystem::path& path, const GramMatrix& gram);
GramMatrix read_gram(std::istream& in);
GramMatrix read_gram(const std::filesystem::path& path);

/// Plain CSV: p lines of p comma-separated values, full precision.
void write_gram_csv(const std::filesystem::path& path, const Eigen::Ref<const Matrix>& values);

}  // namespace gk
