#include "gk/bench.hpp"
#include "gk/error.hpp"
#include "gk/gram_io.hpp"
#include "gk/hash.hpp"

#include <doctest.h>

#include <sstream>

using namespace gk;

TEST_CASE("sha256 known vectors") {
    const std::string empty;
    CHECK(sha256_hex(empty) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    const std::string abc = "abc";
    CHECK(sha256_hex(abc) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("gram file round-trip") {
    GramMatrix g;
    g.values = Matrix(3, 3);
    g.values << 2, 0.5, -1, 0.5, 3, 1e-300, -1, 1e-300, 4;
    g.kind = KernelKind::GNTK;
    g.hyperparams.K = 4;
    g.hyperparams.beta = 0.25;
    g.hyperparams.gntk_blocks = 3;
    g.hyperparams.erf_add_beta2 = true;
    g.readout = ReadoutMode::Mean;
    g.dataset_fingerprint = "abc123";

    std::stringstream buf;
    write_gram(buf, g);
    const std::string bytes = buf.str();
    CHECK(bytes.substr(0, 4) == "GKM1");
    const GramMatrix r = read_gram(buf);
    CHECK(r.values == g.values);
    CHECK(r.kind == g.kind);
    CHECK(r.hyperparams.K == 4);
    CHECK(r.hyperparams.beta == 0.25);
    CHECK(r.hyperparams.gntk_blocks == 3);
    CHECK(r.hyperparams.erf_add_beta2);
    CHECK(r.readout == ReadoutMode::Mean);
    CHECK(r.dataset_fingerprint == "abc123");

    std::stringstream again;
    write_gram(again, r);
    CHECK(again.str() == bytes);

    std::stringstream truncated(bytes.substr(0, 20));
    CHECK_THROWS_AS(read_gram(truncated), InputError);
    std::stringstream bad("XXXX" + bytes.substr(4));
    CHECK_THROWS_AS(read_gram(bad), InputError);
}

TEST_CASE("median and timing helpers") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
    int calls = 0;
    const double t = median_time(3, [&] { ++calls; });
    CHECK(calls == 4);
    CHECK(t >= 0.0);
}

TEST_CASE("bench csv carries provenance and one row per record") {
    std::vector<BenchRecord> records{{"MUTAG", "sgnk", 1, "gram", 0.5, std::nullopt, 3}, {"MUTAG", "sgnk", 2, "gram", 0.25, 0.9, 3}};
    std::ostringstream out;
    write_bench_csv(out, records, {{"seed", "0"}, {"dataset_fingerprint", "ff"}});
    const std::string s = out.str();
    CHECK(s.find("# seed=0") != std::string::npos);
    CHECK(s.find("# dataset_fingerprint=ff") != std::string::npos);
    CHECK(s.find("dataset,kernel,K,phase,wall_time_s,accuracy,repetitions\n") != std::string::npos);
    CHECK(s.find("MUTAG,sgnk,2,gram,0.25,0.9,3") != std::string::npos);
}

TEST_CASE("svg chart embeds provenance") {
    std::ostringstream out;
    write_line_chart_svg(out, "t", "K", "s", {{"sgnk", {1, 2, 3}, {0.1, 0.1, 0.1}}, {"gntk", {1, 2, 3}, {0.1, 0.2, 0.3}}},
                         {{"kinds", "sgnk,gntk"}});
    const std::string s = out.str();
    CHECK(s.find("<svg") != std::string::npos);
    CHECK(s.find("<desc>") != std::string::npos);
    CHECK(s.find("kinds=sgnk,gntk") != std::string::npos);
    CHECK(s.find("<polyline") != std::string::npos);
    CHECK(s.find("</svg>") != std::string::npos);
}
