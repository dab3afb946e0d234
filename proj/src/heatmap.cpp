#include "crashprob/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>

#include "crashprob/csv.hpp"
#include "crashprob/types.hpp"

namespace crashprob {
namespace {

constexpr int kPanelTypes[3] = {1, 2, 3};  // Outcome::re, lc, ror
const char* const kPanelTitles[3] = {"Rear-end (RE)", "Lane-change (LC)", "Run-off-road (ROR)"};

std::string color_for(double t) {
    t = std::clamp(t, 0.0, 1.0);
    auto lerp = [t](double a, double b) {
        return static_cast<int>(std::lround(a + (b - a) * t));
    };
    return "rgb(" + format_int(lerp(247, 165)) + "," + format_int(lerp(251, 15)) + "," +
           format_int(lerp(255, 21)) + ")";
}

std::string fixed1(double v) {
    double r = std::round(v * 10.0) / 10.0;
    if (r == 0.0) r = 0.0;  // avoid negative zero
    return format_double(r);
}

}  // namespace

std::string render_heatmap_svg(const std::vector<HeatmapPoint>& points) {
    if (points.empty()) {
        throw ValidationError("no prediction points to render");
    }
    std::vector<double> xs;
    std::vector<double> ys;
    for (const HeatmapPoint& p : points) {
        xs.push_back(p.anchor_position);
        ys.push_back(p.anchor_time);
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
    const std::size_t nx = xs.size();
    const std::size_t ny = ys.size();

    // Mean probability per (position, time, type) bin.
    std::vector<std::array<double, 3>> sums(nx * ny, {0, 0, 0});
    std::vector<int> counts(nx * ny, 0);
    auto bin_of = [&](const HeatmapPoint& p) {
        std::size_t xi = static_cast<std::size_t>(
            std::lower_bound(xs.begin(), xs.end(), p.anchor_position) - xs.begin());
        std::size_t yi = static_cast<std::size_t>(
            std::lower_bound(ys.begin(), ys.end(), p.anchor_time) - ys.begin());
        return yi * nx + xi;
    };
    for (const HeatmapPoint& p : points) {
        std::size_t b = bin_of(p);
        counts[b] += 1;
        for (int panel = 0; panel < 3; ++panel) {
            sums[b][static_cast<std::size_t>(panel)] +=
                p.probs[static_cast<std::size_t>(kPanelTypes[panel])];
        }
    }
    double max_mean = 0;
    for (std::size_t b = 0; b < sums.size(); ++b) {
        if (counts[b] == 0) continue;
        for (int panel = 0; panel < 3; ++panel) {
            max_mean = std::max(max_mean, sums[b][static_cast<std::size_t>(panel)] / counts[b]);
        }
    }
    if (max_mean <= 0) max_mean = 1e-12;

    const double cw = std::clamp(640.0 / static_cast<double>(nx), 8.0, 48.0);
    const double ch = std::clamp(160.0 / static_cast<double>(ny), 14.0, 36.0);
    const double left = 86;
    const double top = 46;
    const double panel_gap = 46;
    const double plot_w = cw * static_cast<double>(nx);
    const double plot_h = ch * static_cast<double>(ny);
    const double panel_stride = plot_h + panel_gap + 18;
    const double legend_h = 54;
    const double width = left + plot_w + 32;
    const double height = top + 3 * panel_stride + legend_h;

    std::string svg;
    auto tag = [&svg](const std::string& s) {
        svg += s;
        svg += "\n";
    };
    tag("<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    tag("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_double(width) +
        "\" height=\"" + format_double(height) + "\" viewBox=\"0 0 " + format_double(width) + " " +
        format_double(height) + "\" font-family=\"sans-serif\" font-size=\"11\">");
    tag("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    tag("<text x=\"" + format_double(left) +
        "\" y=\"20\" font-size=\"14\">Mean predicted accident probability by location and "
        "period</text>");

    const std::size_t x_label_step = std::max<std::size_t>(1, (nx + 7) / 8);
    for (int panel = 0; panel < 3; ++panel) {
        const double py = top + panel * panel_stride;
        tag("<text x=\"" + format_double(left) + "\" y=\"" + format_double(py - 6) +
            "\" font-size=\"12\">" + kPanelTitles[panel] + "</text>");
        for (std::size_t yi = 0; yi < ny; ++yi) {
            for (std::size_t xi = 0; xi < nx; ++xi) {
                std::size_t b = yi * nx + xi;
                std::string fill = "rgb(236,236,236)";
                if (counts[b] > 0) {
                    double mean = sums[b][static_cast<std::size_t>(panel)] / counts[b];
                    fill = color_for(mean / max_mean);
                }
                tag("<rect x=\"" + format_double(left + cw * static_cast<double>(xi)) + "\" y=\"" +
                    format_double(py + ch * static_cast<double>(yi)) + "\" width=\"" +
                    format_double(cw) + "\" height=\"" + format_double(ch) + "\" fill=\"" + fill +
                    "\" stroke=\"white\" stroke-width=\"1\"/>");
            }
        }
        for (std::size_t yi = 0; yi < ny; ++yi) {
            tag("<text x=\"" + format_double(left - 8) + "\" y=\"" +
                format_double(py + ch * (static_cast<double>(yi) + 0.5) + 4) +
                "\" text-anchor=\"end\">" + fixed1(ys[yi]) + " s</text>");
        }
        for (std::size_t xi = 0; xi < nx; xi += x_label_step) {
            tag("<text x=\"" + format_double(left + cw * (static_cast<double>(xi) + 0.5)) +
                "\" y=\"" + format_double(py + plot_h + 14) + "\" text-anchor=\"middle\">" +
                fixed1(xs[xi]) + "</text>");
        }
    }
    tag("<text x=\"" + format_double(left + plot_w / 2) + "\" y=\"" +
        format_double(top + 3 * panel_stride - panel_gap + 32) +
        "\" text-anchor=\"middle\">anchor position (m)</text>");

    // Legend: 0 .. max, drawn as discrete steps of the ramp.
    const double ly = top + 3 * panel_stride + 8;
    const int steps = 24;
    const double lw = std::min(plot_w, 320.0);
    for (int i = 0; i < steps; ++i) {
        tag("<rect x=\"" + format_double(left + lw * i / steps) + "\" y=\"" + format_double(ly) +
            "\" width=\"" + format_double(lw / steps + 0.5) + "\" height=\"12\" fill=\"" +
            color_for((i + 0.5) / steps) + "\"/>");
    }
    tag("<text x=\"" + format_double(left) + "\" y=\"" + format_double(ly + 26) + "\">0</text>");
    tag("<text x=\"" + format_double(left + lw) + "\" y=\"" + format_double(ly + 26) +
        "\" text-anchor=\"end\">" + format_double(std::round(max_mean * 1e5 * 100.0) / 100.0) +
        "</text>");
    tag("<text x=\"" + format_double(left + lw + 12) + "\" y=\"" + format_double(ly + 26) +
        "\">probability, 1e-5 units</text>");
    tag("</svg>");
    return svg;
}

}  // namespace crashprob
