#pragma once

#include <string>
#include <vector>

#include "timeagg/interpret.hpp"

namespace timeagg {

/// Heatmap of relative differences on a symmetric diverging scale centered
/// at 0 (sign is the semantic content). Output carries no timestamps, so
/// identical inputs render byte-identical files.
std::string render_heatmap_svg(const ImportanceHeatmap& map);

/// Outcome-colored t-SNE scatter; one panel per cohort, shared legend.
std::string render_embedding_svg(const std::vector<EmbeddingPlot>& plots);

}  // namespace timeagg
