#include "gk/gram_io.hpp"

#include "gk/binary.hpp"
#include "gk/error.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

namespace gk {

nlohmann::json to_json(const KernelHyperParams& hp) {
    return {
        {"K", hp.K},
        {"beta", hp.beta},
        {"sigma_b", hp.sigma_b},
        {"activation", hp.activation == ActivationKind::ReLU ? "relu" : "erf"},
        {"gntk_blocks", hp.gntk_blocks},
        {"erf_add_beta2", hp.erf_add_beta2},
    };
}

KernelHyperParams hyperparams_from_json(const nlohmann::json& j) {
    KernelHyperParams hp;
    hp.K = j.at("K").get<int>();
    hp.beta = j.at("beta").get<double>();
    hp.sigma_b = j.at("sigma_b").get<double>();
    hp.activation = j.at("activation").get<std::string>() == "erf" ? ActivationKind::Erf : ActivationKind::ReLU;
    hp.gntk_blocks = j.at("gntk_blocks").get<int>();
    hp.erf_add_beta2 = j.value("erf_add_beta2", false);
    return hp;
}

void write_gram(std::ostream& out, const GramMatrix& gram) {
    const Index p = gram.size();
    if (gram.values.cols() != p) throw InputError("write_gram: matrix is not square");
    out.write("GKM1", 4);
    binary::write_u32(out, static_cast<std::uint32_t>(p));
    binary::write_u8(out, static_cast<std::uint8_t>(gram.kind));
    for (Index i = 0; i < p; ++i)
        for (Index j = i; j < p; ++j) binary::write_f64(out, gram.values(i, j));
    const nlohmann::json trailer = {
        {"format", "GKM1"},
        {"kind", to_string(gram.kind)},
        {"item_level", to_string(gram.level)},
        {"readout", to_string(gram.readout)},
        {"hyperparams", to_json(gram.hyperparams)},
        {"dataset_fingerprint", gram.dataset_fingerprint},
    };
    const std::string text = trailer.dump();
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

void write_gram(const std::filesystem::path& path, const GramMatrix& gram) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot open " + path.string() + " for writing");
    write_gram(out, gram);
    if (!out) throw InputError("failed writing " + path.string());
}

GramMatrix read_gram(std::istream& in) {
    char magic[4] = {};
    in.read(magic, 4);
    if (in.gcount() != 4 || std::string(magic, 4) != "GKM1") throw InputError("read_gram: bad magic");
    const std::uint32_t p = binary::read_u32(in);
    const std::uint8_t kind = binary::read_u8(in);
    if (kind > 2) throw InputError("read_gram: unknown kernel kind code " + std::to_string(kind));

    GramMatrix gram;
    gram.kind = static_cast<KernelKind>(kind);
    gram.values.resize(p, p);
    for (Index i = 0; i < p; ++i) {
        for (Index j = i; j < p; ++j) {
            const double v = binary::read_f64(in);
            gram.values(i, j) = v;
            gram.values(j, i) = v;
        }
    }
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    nlohmann::json trailer;
    try {
        trailer = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("read_gram: bad JSON trailer: ") + e.what());
    }
    gram.hyperparams = hyperparams_from_json(trailer.at("hyperparams"));
    gram.level = trailer.value("item_level", "graph") == "node" ? ItemLevel::Node : ItemLevel::Graph;
    gram.readout = trailer.value("readout", "sum") == "mean" ? ReadoutMode::Mean : ReadoutMode::Sum;
    gram.dataset_fingerprint = trailer.value("dataset_fingerprint", "");
    return gram;
}

GramMatrix read_gram(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    return read_gram(in);
}

void write_gram_csv(const std::filesystem::path& path, const Eigen::Ref<const Matrix>& values) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw InputError("cannot open " + path.string() + " for writing");
    char buf[32];
    for (Index i = 0; i < values.rows(); ++i) {
        for (Index j = 0; j < values.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", values(i, j));
            if (j) out << ',';
            out << buf;
        }
        out << '\n';
    }
}

}  // namespace gk
