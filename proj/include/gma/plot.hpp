#pragma once

#include "gma/eval.hpp"

#include <string>

namespace gma {

// Static SVG charts rendered straight from report rows.
void plot_lambda_sweep(const ExperimentReport& report,
                       const std::string& svg_path);
void plot_method_summary(const ExperimentReport& report,
                         const std::string& metric,
                         const std::string& svg_path);
void plot_baseline(const ExperimentReport& report,
                   const std::string& svg_path);
void plot_mapping(const ExperimentReport& report, const std::string& svg_path);

}  // namespace gma
