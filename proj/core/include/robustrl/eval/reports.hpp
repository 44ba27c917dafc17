#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "robustrl/eval/grid.hpp"
#include "robustrl/eval/llc.hpp"
#include "robustrl/eval/smoothness.hpp"

namespace robustrl::eval {

// Heatmap data: first row holds the axis-2 scales, then one row of cell
// means per axis-1 scale. Everything else lives in the JSON sidecar.
std::string grid_csv(const RobustnessReport& report);
std::string grid_meta_json(const RobustnessReport& report,
                           const std::string& config_hash);
std::string rho_csv(std::span<const double> rho);

struct ParsedGrid {
  int size = 0;
  std::vector<double> axis2_scales;
  std::vector<double> cell_means;  // row-major size x size
};
ParsedGrid parse_grid_csv(std::string_view text);
std::vector<double> parse_rho_csv(std::string_view text);

// Writes grid.csv, grid.meta.json, and rho.csv under dir (created first).
void write_grid_report(const std::filesystem::path& dir,
                       const RobustnessReport& report,
                       const std::string& config_hash);

struct EpisodeSmoothness {
  int episode = 0;
  double total_reward = 0.0;
  int length = 0;
  SmoothnessReport metrics;
};

// Per-episode rows with '#' aggregate lines on top. The trk column is
// emitted only when every row carries a tracking value.
std::string smoothness_csv(std::span<const EpisodeSmoothness> rows);

std::string llc_csv(std::span<const LlcEstimate> estimates);

struct CompareRow {
  std::string label;
  std::vector<double> rho;
};

// Table of rho-robustness per labeled run group; all rows must agree on the
// number of radii.
std::string compare_csv(std::span<const CompareRow> rows);

}  // namespace robustrl::eval
