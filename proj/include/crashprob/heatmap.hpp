#pragma once

#include <array>
#include <string>
#include <vector>

namespace crashprob {

/// One predicted cell placed at its event anchor.
struct HeatmapPoint {
    double anchor_position = 0;
    double anchor_time = 0;
    std::array<double, 4> probs{};  // indexed by Outcome
};

/// Renders one SVG with a panel per accident type: mean predicted
/// probability on the grid of distinct anchor positions (columns) and
/// distinct anchor times (rows), shared linear color scale, legend in
/// units of 1e-5.
std::string render_heatmap_svg(const std::vector<HeatmapPoint>& points);

}  // namespace crashprob
