#pragma once

// Static SVG figures. Each figure is written together with a CSV holding
// exactly the plotted numbers (same path, ".csv" instead of ".svg").

#include <filesystem>
#include <string>
#include <vector>

#include "hierlab/experiment.hpp"
#include "hierlab/trainer.hpp"

namespace hierlab {

enum class PlotKind { kLearningCurve, kProfile, kProbImprovement, kAggBars };
std::string to_string(PlotKind kind);
PlotKind parse_plot_kind(const std::string& name);

struct PlotOptions {
  Protocol protocol = Protocol::kBestSuccess;
  std::uint64_t seed = 0;  // bootstrap RNG
  std::size_t n_resamples = 2000;
};

struct PlotFiles {
  std::filesystem::path svg;
  std::filesystem::path csv;
};

/// Throws InputError naming what is missing when the records cannot support the figure.
PlotFiles write_plot(const std::vector<RunRecord>& records, PlotKind kind, const std::filesystem::path& svg_path,
                     const PlotOptions& options = {});

}  // namespace hierlab
