#pragma once

#include <string_view>

#include "zipem/panel.hpp"

namespace zipem {

/// Weekly larva counts on 24 maize plots over 9 weeks, three treatments of
/// 8 plots each, in the wide layout "We1..We9,Treat".
std::string_view corn_wide_csv();

/// The corn counts as a response grid and treatment codes.
Eigen::MatrixXi corn_counts();
std::vector<long> corn_treatments();

/// Corn panel with intercept, treatment dummies and week trend in both parts.
PanelData corn_panel(const TreatmentDesign& design = {});

}  // namespace zipem
