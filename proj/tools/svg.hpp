#pragma once

#include <string>
#include <string_view>

#include "logitcalib/calibration.hpp"
#include "logitcalib/metrics.hpp"

namespace logitcalib::svg {

// Accuracy bars per confidence bin with the identity line for reference.
std::string reliability_plot(const ReliabilityDiagram& diagram, std::string_view title);

// Bar chart of counts per score bin.
std::string histogram_plot(const ScoreHistogram& histogram, std::string_view title);

}  // namespace logitcalib::svg
