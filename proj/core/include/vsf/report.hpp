#pragma once

#include <string>

#include "vsf/experiment.hpp"

namespace vsf {

/// Self-contained SVG: per-output box plots of the paired scores for the
/// two variants, and a variant_b-vs-variant_a scatter with the identity
/// diagonal. Throws std::invalid_argument when the pair has no shared
/// repetitions.
std::string render_report_svg(const ExperimentResult& result,
                              const std::string& variant_a,
                              const std::string& variant_b);

void write_report_svg(const std::string& path, const ExperimentResult& result,
                      const std::string& variant_a,
                      const std::string& variant_b);

}  // namespace vsf
