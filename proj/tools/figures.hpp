#pragma once

#include <string>

#include "lrpq/three_stage.hpp"

namespace lrpq::cli {

/// Line plot of the estimated factor paths for slope block j: one polyline
/// per combination and factor column, drawn over the time index.
void write_factor_figure(const EstimationResult& result, Index j,
                         const std::string& path);

}  // namespace lrpq::cli
