#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace gk {

struct BenchRecord {
    std::string dataset;
    std::string kernel;
    int K = 0;
    std::string phase = "gram";  // gram | classify
    double wall_time_s = 0.0;    // median over repetitions
    std::optional<double> accuracy;
    int repetitions = 1;
};

/// Seconds on the monotonic clock.
template <typename F>
double time_seconds(F&& fn) {
    const auto start = std::chrono::steady_clock::now();
    std::forward<F>(fn)();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double median(std::vector<double> values);

/// One warm-up call, then the median of `reps` timed calls (reps >= 1).
double median_time(int reps, const std::function<void()>& fn);

/// CSV with '#'-prefixed provenance lines before the header row.
void write_bench_csv(std::ostream& out, const std::vector<BenchRecord>& records,
                     const std::map<std::string, std::string>& provenance);

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal line chart: axes with ticks, one polyline + markers per series, legend.
/// Provenance is embedded as an XML comment and a <desc> element.
void write_line_chart_svg(std::ostream& out, const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<Series>& series,
                          const std::map<std::string, std::string>& provenance);

}  // namespace gk
