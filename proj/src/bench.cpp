#include "gk/bench.hpp"

#include "gk/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace gk {

double median(std::vector<double> values) {
    if (values.empty()) throw InputError("median of empty sample");
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

double median_time(int reps, const std::function<void()>& fn) {
    if (reps < 1) throw InputError("repetitions must be >= 1");
    fn();
    std::vector<double> times;
    for (int r = 0; r < reps; ++r) times.push_back(time_seconds(fn));
    return median(std::move(times));
}

namespace {

std::string fmt(double v, const char* spec = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '-': out += "&#45;"; break;  // keeps "--" out of comments
        default: out += c;
        }
    }
    return out;
}

}  // namespace

void write_bench_csv(std::ostream& out, const std::vector<BenchRecord>& records,
                     const std::map<std::string, std::string>& provenance) {
    for (const auto& [k, v] : provenance) out << "# " << k << '=' << v << '\n';
    out << "dataset,kernel,K,phase,wall_time_s,accuracy,repetitions\n";
    for (const auto& r : records) {
        out << r.dataset << ',' << r.kernel << ',' << r.K << ',' << r.phase << ',' << fmt(r.wall_time_s, "%.9g") << ','
            << (r.accuracy ? fmt(*r.accuracy) : std::string()) << ',' << r.repetitions << '\n';
    }
}

void write_line_chart_svg(std::ostream& out, const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<Series>& series,
                          const std::map<std::string, std::string>& provenance) {
    constexpr double width = 640, height = 420;
    constexpr double left = 80, right = 150, top = 50, bottom = 60;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

    double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
    double y_max = 0.0;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size()) throw InputError("svg: series '" + s.name + "' has mismatched x/y");
        for (double v : s.x) x_min = std::min(x_min, v), x_max = std::max(x_max, v);
        for (double v : s.y) y_max = std::max(y_max, v);
    }
    if (!std::isfinite(x_min)) x_min = 0, x_max = 1;
    if (x_max == x_min) x_max = x_min + 1;
    if (y_max <= 0) y_max = 1;
    y_max *= 1.1;
    auto px = [&](double x) { return left + (x - x_min) / (x_max - x_min) * plot_w; };
    auto py = [&](double y) { return top + plot_h - y / y_max * plot_h; };

    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<!--";
    for (const auto& [k, v] : provenance) out << ' ' << xml_escape(k) << '=' << xml_escape(v) << ';';
    out << " -->\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<desc>";
    for (const auto& [k, v] : provenance) out << xml_escape(k) << '=' << xml_escape(v) << "; ";
    out << "</desc>\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title) << "</text>\n";

    // Axes and ticks.
    out << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\"" << top + plot_h
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
        << "\" stroke=\"black\"/>\n";
    constexpr int ticks = 5;
    for (int t = 0; t <= ticks; ++t) {
        const double xv = x_min + (x_max - x_min) * t / ticks;
        const double yv = y_max * t / ticks;
        out << "<line x1=\"" << px(xv) << "\" y1=\"" << top + plot_h << "\" x2=\"" << px(xv) << "\" y2=\"" << top + plot_h + 5
            << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << px(xv) << "\" y=\"" << top + plot_h + 18 << "\" text-anchor=\"middle\">" << fmt(xv, "%.3g") << "</text>\n";
        out << "<line x1=\"" << left - 5 << "\" y1=\"" << py(yv) << "\" x2=\"" << left << "\" y2=\"" << py(yv)
            << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << left - 8 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << fmt(yv, "%.3g") << "</text>\n";
    }
    out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\">" << xml_escape(x_label)
        << "</text>\n";
    out << "<text x=\"20\" y=\"" << top + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
        << top + plot_h / 2 << ")\">" << xml_escape(y_label) << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = colors[s % std::size(colors)];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < series[s].x.size(); ++i) out << px(series[s].x[i]) << ',' << py(series[s].y[i]) << ' ';
        out << "\"/>\n";
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            out << "<circle cx=\"" << px(series[s].x[i]) << "\" cy=\"" << py(series[s].y[i]) << "\" r=\"3\" fill=\"" << color
                << "\"/>\n";
        }
        const double ly = top + 10 + 20.0 * static_cast<double>(s);
        out << "<line x1=\"" << left + plot_w + 15 << "\" y1=\"" << ly << "\" x2=\"" << left + plot_w + 40 << "\" y2=\"" << ly
            << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << left + plot_w + 45 << "\" y=\"" << ly + 4 << "\">" << xml_escape(series[s].name) << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace gk
