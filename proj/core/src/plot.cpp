#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "bhtwa/error.hpp"
#include "bhtwa/run.hpp"
#include "csv.hpp"

namespace bhtwa {

namespace fs = std::filesystem;

PlotKind plot_kind_from_string(const std::string& s) {
    if (s == "dispersion") return PlotKind::dispersion;
    if (s == "heatmap") return PlotKind::heatmap;
    if (s == "spectrum") return PlotKind::spectrum;
    if (s == "entropy") return PlotKind::entropy;
    if (s == "all") return PlotKind::all;
    throw ConfigError("unknown plot kind '" + s + "' (dispersion|heatmap|spectrum|entropy|all)");
}

namespace {

constexpr double kW = 640, kH = 440, kLeft = 70, kRight = 20, kTop = 30, kBottom = 50;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

struct Line {
    std::vector<double> x, y;
    std::string color;
    std::string label;
    bool dashed = false;
};

struct Axes {
    bool logx = false, logy = false;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

    double tx(double x) const { return logx ? std::log10(x) : x; }
    double ty(double y) const { return logy ? std::log10(y) : y; }
    double px(double x) const { return kLeft + (tx(x) - x0) / (x1 - x0) * (kW - kLeft - kRight); }
    double py(double y) const { return kH - kBottom - (ty(y) - y0) / (y1 - y0) * (kH - kTop - kBottom); }
    bool usable(double x, double y) const {
        return std::isfinite(x) && std::isfinite(y) && (!logx || x > 0) && (!logy || y > 0);
    }
};

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(3) << v;
    return os.str();
}

Axes fit_axes(const std::vector<Line>& lines, bool logx, bool logy) {
    Axes a{logx, logy};
    double xl = std::numeric_limits<double>::infinity(), xh = -xl, yl = xl, yh = -xl;
    for (const auto& l : lines)
        for (std::size_t i = 0; i < l.x.size(); ++i)
            if (a.usable(l.x[i], l.y[i])) {
                xl = std::min(xl, a.tx(l.x[i]));
                xh = std::max(xh, a.tx(l.x[i]));
                yl = std::min(yl, a.ty(l.y[i]));
                yh = std::max(yh, a.ty(l.y[i]));
            }
    if (!std::isfinite(xl)) xl = 0, xh = 1, yl = 0, yh = 1;
    if (xh <= xl) xh = xl + 1;
    if (yh <= yl) yh = yl + 1;
    const double pad = 0.04 * (yh - yl);
    a.x0 = xl, a.x1 = xh, a.y0 = yl - pad, a.y1 = yh + pad;
    return a;
}

void header(std::ostream& os, const std::string& title) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << kW / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
}

void frame(std::ostream& os, const Axes& a, const std::string& xlabel, const std::string& ylabel) {
    const double l = kLeft, r = kW - kRight, t = kTop, b = kH - kBottom;
    os << "<rect x=\"" << l << "\" y=\"" << t << "\" width=\"" << r - l << "\" height=\"" << b - t
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double fx = a.x0 + (a.x1 - a.x0) * k / 4.0, fy = a.y0 + (a.y1 - a.y0) * k / 4.0;
        const double X = l + (r - l) * k / 4.0, Y = b - (b - t) * k / 4.0;
        os << "<text x=\"" << X << "\" y=\"" << b + 16 << "\" text-anchor=\"middle\">"
           << (a.logx ? "1e" + fmt(fx) : fmt(fx)) << "</text>\n";
        os << "<text x=\"" << l - 6 << "\" y=\"" << Y + 4 << "\" text-anchor=\"end\">"
           << (a.logy ? "1e" + fmt(fy) : fmt(fy)) << "</text>\n";
    }
    os << "<text x=\"" << (l + r) / 2 << "\" y=\"" << kH - 12 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
    os << "<text x=\"16\" y=\"" << (t + b) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << (t + b) / 2
       << ")\">" << ylabel << "</text>\n";
}

void polyline(std::ostream& os, const Axes& a, const Line& line) {
    os << "<polyline fill=\"none\" stroke=\"" << line.color << "\" stroke-width=\"1.2\""
       << (line.dashed ? " stroke-dasharray=\"5,4\"" : "") << " points=\"";
    for (std::size_t i = 0; i < line.x.size(); ++i)
        if (a.usable(line.x[i], line.y[i]))
            os << std::fixed << std::setprecision(2) << a.px(line.x[i]) << ',' << a.py(line.y[i]) << ' ';
    os.unsetf(std::ios::floatfield);
    os << "\"/>\n";
}

void legend(std::ostream& os, const std::vector<Line>& lines) {
    double y = kTop + 14;
    for (const auto& l : lines) {
        if (l.label.empty()) continue;
        os << "<line x1=\"" << kW - kRight - 110 << "\" y1=\"" << y - 4 << "\" x2=\"" << kW - kRight - 90 << "\" y2=\""
           << y - 4 << "\" stroke=\"" << l.color << "\"" << (l.dashed ? " stroke-dasharray=\"5,4\"" : "") << "/>\n";
        os << "<text x=\"" << kW - kRight - 86 << "\" y=\"" << y << "\">" << l.label << "</text>\n";
        y += 14;
    }
}

void line_plot(const fs::path& out, const std::string& title, const std::vector<Line>& lines, bool logx, bool logy,
               const std::string& xlabel, const std::string& ylabel, bool guides_set_range = false) {
    std::vector<Line> data;
    for (const auto& l : lines)
        if (!l.dashed || guides_set_range) data.push_back(l);
    const Axes a = fit_axes(data.empty() ? lines : data, logx, logy);
    std::ofstream os(out);
    if (!os) throw ConfigError("cannot write " + out.string());
    header(os, title);
    frame(os, a, xlabel, ylabel);
    os << "<clipPath id=\"c\"><rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kW - kLeft - kRight
       << "\" height=\"" << kH - kTop - kBottom << "\"/></clipPath>\n<g clip-path=\"url(#c)\">\n";
    for (const auto& l : lines) polyline(os, a, l);
    os << "</g>\n";
    legend(os, lines);
    os << "</svg>\n";
}

// t,site,value -> per-site series
std::map<int, Line> site_lines(const csv::Table& t) {
    std::map<int, Line> out;
    const auto ct = t.column("t"), cs = t.column("site"), cv = t.column("value");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        auto& l = out[std::stoi(t.rows[r][cs])];
        l.x.push_back(t.num(r, ct));
        l.y.push_back(t.num(r, cv));
    }
    return out;
}

void plot_dispersion(const fs::path& dir, PlotReport& rep) {
    const auto src = dir / "observables" / "dispersion.csv";
    if (!fs::exists(src)) {
        rep.missing.push_back("observables/dispersion.csv");
        return;
    }
    auto per_site = site_lines(csv::read(src));
    std::map<std::string, double> targets;
    if (fs::exists(dir / "fits.json")) {
        std::ifstream in(dir / "fits.json");
        const auto j = nlohmann::json::parse(in);
        for (const auto& f : j.at("fits"))
            if (f.at("target").is_number()) targets[f.at("series_id").get<std::string>()] = f.at("target").get<double>();
    }
    std::vector<Line> lines;
    std::size_t k = 0;
    for (auto& [site, l] : per_site) {
        l.color = kPalette[k++ % 10];
        l.label = "D_" + std::to_string(site);
        lines.push_back(l);
        const auto it = targets.find(l.label);
        if (it == targets.end() || it->second <= 0.0) continue;
        // guide t^l through the data at the start of its positive stretch
        std::size_t i0 = 0;
        while (i0 < l.x.size() && !(l.x[i0] > 0 && l.y[i0] > 0)) ++i0;
        if (i0 == l.x.size()) continue;
        Line g;
        g.color = l.color;
        g.dashed = true;
        g.x = {l.x[i0], l.x.back()};
        g.y = {l.y[i0], l.y[i0] * std::pow(l.x.back() / l.x[i0], it->second)};
        lines.push_back(g);
    }
    line_plot(dir / "plots" / "dispersion.svg", "dispersion D_nn (dashed: t^l guides)", lines, true, true, "t / t0",
              "D_nn");
    rep.written.push_back("plots/dispersion.svg");
}

void plot_heatmap(const fs::path& dir, PlotReport& rep) {
    const auto src = dir / "observables" / "occupation.csv";
    if (!fs::exists(src)) {
        rep.missing.push_back("observables/occupation.csv");
        return;
    }
    const auto per_site = site_lines(csv::read(src));
    if (per_site.empty()) {
        rep.missing.push_back("observables/occupation.csv (empty)");
        return;
    }
    const std::size_t L = per_site.size();
    const std::size_t M = per_site.begin()->second.x.size();
    const std::size_t cols = std::min<std::size_t>(M, 240);
    double vmax = 0.0;
    for (const auto& [s, l] : per_site)
        for (double v : l.y) vmax = std::max(vmax, v);
    if (vmax <= 0.0) vmax = 1.0;
    std::ofstream os(dir / "plots" / "heatmap.svg");
    header(os, "occupation <I_n>(t)");
    const double w = (kW - kLeft - kRight) / static_cast<double>(cols);
    const double h = (kH - kTop - kBottom) / static_cast<double>(L);
    std::size_t row = 0;
    for (const auto& [s, l] : per_site) {
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t m = c * (M - 1) / std::max<std::size_t>(1, cols - 1);
            const double f = std::clamp(l.y[m] / vmax, 0.0, 1.0);
            const int r = static_cast<int>(255 * f), b = static_cast<int>(255 * (1 - f));
            os << "<rect x=\"" << kLeft + c * w << "\" y=\"" << kTop + row * h << "\" width=\"" << w + 0.5
               << "\" height=\"" << h + 0.5 << "\" fill=\"rgb(" << r << ",40," << b << ")\"/>\n";
        }
        os << "<text x=\"" << kLeft - 6 << "\" y=\"" << kTop + (row + 0.6) * h << "\" text-anchor=\"end\">" << s
           << "</text>\n";
        ++row;
    }
    const auto& t = per_site.begin()->second.x;
    os << "<text x=\"" << kLeft << "\" y=\"" << kH - kBottom + 16 << "\">" << fmt(t.front()) << "</text>\n";
    os << "<text x=\"" << kW - kRight << "\" y=\"" << kH - kBottom + 16 << "\" text-anchor=\"end\">" << fmt(t.back())
       << "</text>\n";
    os << "<text x=\"" << (kLeft + kW - kRight) / 2 << "\" y=\"" << kH - 12 << "\" text-anchor=\"middle\">t / t0 (max "
       << fmt(vmax) << ")</text>\n</svg>\n";
    rep.written.push_back("plots/heatmap.svg");
}

void plot_spectrum(const fs::path& dir, PlotReport& rep) {
    const auto src = dir / "chaos" / "spectrum.csv";
    if (!fs::exists(src)) {
        rep.missing.push_back("chaos/spectrum.csv");
        return;
    }
    const auto t = csv::read(src);
    Line l{t.numbers("omega"), t.numbers("power"), kPalette[0], "S(omega)"};
    std::vector<Line> lines{l};
    const std::size_t mid = l.x.size() / 2;
    if (mid > 0 && l.y[mid] > 0) {
        Line g;
        g.color = "black";
        g.dashed = true;
        g.label = "omega^-2";
        g.x = {l.x.front(), l.x.back()};
        g.y = {l.y[mid] * std::pow(l.x.front() / l.x[mid], -2.0), l.y[mid] * std::pow(l.x.back() / l.x[mid], -2.0)};
        lines.push_back(g);
    }
    line_plot(dir / "plots" / "spectrum.svg", "power spectrum", lines, true, true, "omega t0", "S");
    rep.written.push_back("plots/spectrum.svg");
}

void plot_entropy(const fs::path& dir, PlotReport& rep) {
    const auto src = dir / "observables" / "mixing_entropy.csv";
    if (!fs::exists(src)) {
        rep.missing.push_back("observables/mixing_entropy.csv");
        return;
    }
    const auto t = csv::read(src);
    Line l{t.numbers("t"), t.numbers("value"), kPalette[0], "S_mix"};
    std::vector<Line> lines{l};
    std::size_t L = 0;
    if (fs::exists(dir / "manifest.json")) {
        std::ifstream in(dir / "manifest.json");
        const auto j = nlohmann::json::parse(in);
        if (j.contains("config") && j["config"].contains("L")) L = j["config"]["L"].get<std::size_t>();
    }
    if (L >= 2 && !l.x.empty()) {
        const double smax = std::log(static_cast<double>(L)) / static_cast<double>(L);
        lines.push_back(Line{{l.x.front(), l.x.back()}, {smax, smax}, "black", "log(L)/L", true});
    }
    line_plot(dir / "plots" / "entropy.svg", "mixing entropy", lines, false, false, "t / t0", "S_mix", true);
    rep.written.push_back("plots/entropy.svg");
}

}  // namespace

PlotReport cmd_plot(const fs::path& dir, PlotKind kind) {
    if (!fs::is_directory(dir)) throw ConfigError("not a directory: " + dir.string());
    fs::create_directories(dir / "plots");
    PlotReport rep;
    if (kind == PlotKind::dispersion || kind == PlotKind::all) plot_dispersion(dir, rep);
    if (kind == PlotKind::heatmap || kind == PlotKind::all) plot_heatmap(dir, rep);
    if (kind == PlotKind::spectrum || kind == PlotKind::all) plot_spectrum(dir, rep);
    if (kind == PlotKind::entropy || kind == PlotKind::all) plot_entropy(dir, rep);

    const bool empty = rep.written.empty();
    std::ofstream os(dir / "plots" / (empty ? "EMPTY_REPORT.txt" : "plot_report.txt"));
    if (empty) os << "no plottable series found in " << dir.string() << "\n";
    for (const auto& w : rep.written) os << "written " << w << "\n";
    for (const auto& m : rep.missing) os << "missing " << m << "\n";
    return rep;
}

}  // namespace bhtwa
