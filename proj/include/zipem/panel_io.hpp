#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "zipem/ancova_imputer.hpp"
#include "zipem/panel.hpp"

namespace zipem {

enum class PanelFormat { automatic, wide, long_ };

PanelFormat panel_format_from_string(const std::string& s);
const char* to_string(PanelFormat f);

/// Wide layout: header We1..WeT plus a Treat column, one row per unit, blank
/// cells missing. Treatment codes become dummies against the smallest code.
PanelData read_wide(std::string_view text, const TreatmentDesign& design = {});

/// Long layout: header unit,time,y followed by numeric covariate columns.
/// One row per (unit, time); a blank y is missing. Without covariates an
/// absent (unit, time) row also counts as missing.
PanelData read_long(std::string_view text, const TreatmentDesign& design = {});

/// `automatic` picks long when the header starts with unit,time,y.
PanelData read_panel_text(std::string_view text, PanelFormat format, const TreatmentDesign& design = {});
PanelData read_panel(const std::string& path, PanelFormat format, const TreatmentDesign& design = {});
PanelFormat detect_format(std::string_view text);

std::string write_wide(const PanelData& panel);
std::string write_long(const PanelData& panel);

/// unit,time,pi_hat,lambda_hat,p0,imputed with the panel's unit and time labels.
std::string write_trace(const PanelData& panel, const std::vector<ImputationDecision>& trace);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

long unit_label(const PanelData& panel, Index row);
long time_label(const PanelData& panel, Index t);

}  // namespace zipem
