#include "robustrl/eval/reports.hpp"

#include <json.hpp>

#include "robustrl/common/errors.hpp"
#include "robustrl/common/io.hpp"
#include "robustrl/version.hpp"

namespace robustrl::eval {

namespace {

std::span<const double> matrix_row(const RobustnessReport& report, int i) {
  const auto m = static_cast<std::size_t>(report.grid.size);
  return std::span<const double>(report.cell_means)
      .subspan(static_cast<std::size_t>(i) * m, m);
}

}  // namespace

std::string grid_csv(const RobustnessReport& report) {
  validate_grid(report.grid);
  std::string out = format_csv_row(report.grid.axis2_scales);
  out += '\n';
  for (int i = 0; i < report.grid.size; ++i) {
    out += format_csv_row(matrix_row(report, i));
    out += '\n';
  }
  return out;
}

std::string grid_meta_json(const RobustnessReport& report,
                           const std::string& config_hash) {
  nlohmann::json meta;
  meta["axis1"] = report.grid.axis1;
  meta["axis2"] = report.grid.axis2;
  meta["axis1_scales"] = report.grid.axis1_scales;
  meta["axis2_scales"] = report.grid.axis2_scales;
  meta["size"] = report.grid.size;
  meta["episodes_per_cell"] = report.grid.episodes_per_cell;
  meta["master_seed"] = report.master_seed;
  meta["seeds"] = report.seeds;
  meta["variant"] = report.variant;
  meta["epsilon"] = report.epsilon;
  meta["lambda_lips"] = report.lambda_lips;
  meta["rho_robustness"] = report.rho_robustness;
  nlohmann::json diverged = nlohmann::json::array();
  for (int i = 0; i < report.grid.size; ++i) {
    for (int j = 0; j < report.grid.size; ++j) {
      const std::size_t idx =
          static_cast<std::size_t>(i) * static_cast<std::size_t>(report.grid.size) +
          static_cast<std::size_t>(j);
      if (report.cell_diverged[idx]) diverged.push_back({i, j});
    }
  }
  meta["diverged_cells"] = diverged;
  meta["config_hash"] = config_hash;
  meta["library_version"] = kLibraryVersion;
  return meta.dump(2) + "\n";
}

std::string rho_csv(std::span<const double> rho) {
  std::string out = "rho,value\n";
  for (std::size_t r = 0; r < rho.size(); ++r) {
    out += std::to_string(r);
    out += ',';
    out += format_double(rho[r]);
    out += '\n';
  }
  return out;
}

ParsedGrid parse_grid_csv(std::string_view text) {
  const CsvTable table = parse_csv(text);
  ParsedGrid grid;
  grid.size = static_cast<int>(table.rows.size());
  if (grid.size < 1) throw InvalidInputError("grid csv: no matrix rows");
  if (table.header.size() != static_cast<std::size_t>(grid.size)) {
    throw InvalidInputError("grid csv: header width does not match row count");
  }
  for (const std::string& h : table.header) {
    grid.axis2_scales.push_back(parse_double(h));
  }
  for (const auto& row : table.rows) {
    if (row.size() != static_cast<std::size_t>(grid.size)) {
      throw InvalidInputError("grid csv: ragged matrix row");
    }
    for (const std::string& cell : row) grid.cell_means.push_back(parse_double(cell));
  }
  return grid;
}

std::vector<double> parse_rho_csv(std::string_view text) {
  const CsvTable table = parse_csv(text);
  if (table.header != std::vector<std::string>{"rho", "value"}) {
    throw InvalidInputError("rho csv: unexpected header");
  }
  std::vector<double> values;
  for (const auto& row : table.rows) {
    if (row.size() != 2) throw InvalidInputError("rho csv: malformed row");
    if (parse_double(row[0]) != static_cast<double>(values.size())) {
      throw InvalidInputError("rho csv: radii must be consecutive from 0");
    }
    values.push_back(parse_double(row[1]));
  }
  return values;
}

void write_grid_report(const std::filesystem::path& dir,
                       const RobustnessReport& report,
                       const std::string& config_hash) {
  std::filesystem::create_directories(dir);
  atomic_write_file(dir / "grid.csv", grid_csv(report));
  atomic_write_file(dir / "grid.meta.json", grid_meta_json(report, config_hash));
  atomic_write_file(dir / "rho.csv", rho_csv(report.rho_robustness));
}

std::string smoothness_csv(std::span<const EpisodeSmoothness> rows) {
  if (rows.empty()) throw InvalidInputError("smoothness csv: no episodes");
  bool with_trk = true;
  for (const EpisodeSmoothness& row : rows) {
    with_trk = with_trk && row.metrics.trk.has_value();
  }
  double sum_return = 0.0;
  double sum_length = 0.0;
  double sum_as = 0.0;
  double sum_sfr = 0.0;
  double sum_trk = 0.0;
  for (const EpisodeSmoothness& row : rows) {
    sum_return += row.total_reward;
    sum_length += static_cast<double>(row.length);
    sum_as += row.metrics.as;
    sum_sfr += row.metrics.sfr;
    if (with_trk) sum_trk += *row.metrics.trk;
  }
  const auto n = static_cast<double>(rows.size());
  std::string out;
  out += "# episodes=" + std::to_string(rows.size()) + "\n";
  out += "# mean_return=" + format_double(sum_return / n) + "\n";
  out += "# mean_length=" + format_double(sum_length / n) + "\n";
  out += "# mean_as=" + format_double(sum_as / n) + "\n";
  out += "# mean_sfr=" + format_double(sum_sfr / n) + "\n";
  if (with_trk) out += "# mean_trk=" + format_double(sum_trk / n) + "\n";
  out += with_trk ? "episode,return,length,as,sfr,trk\n"
                  : "episode,return,length,as,sfr\n";
  for (const EpisodeSmoothness& row : rows) {
    out += std::to_string(row.episode);
    out += ',';
    out += format_double(row.total_reward);
    out += ',';
    out += std::to_string(row.length);
    out += ',';
    out += format_double(row.metrics.as);
    out += ',';
    out += format_double(row.metrics.sfr);
    if (with_trk) {
      out += ',';
      out += format_double(*row.metrics.trk);
    }
    out += '\n';
  }
  return out;
}

std::string llc_csv(std::span<const LlcEstimate> estimates) {
  std::string out =
      "network,epsilon_probe,estimate,probe_estimate,gradient_estimate,"
      "n_states,n_probes\n";
  for (const LlcEstimate& est : estimates) {
    out += est.network;
    out += ',';
    out += format_double(est.epsilon_probe);
    out += ',';
    out += format_double(est.estimate);
    out += ',';
    out += format_double(est.probe_estimate);
    out += ',';
    out += format_double(est.gradient_estimate);
    out += ',';
    out += std::to_string(est.n_states);
    out += ',';
    out += std::to_string(est.n_probes);
    out += '\n';
  }
  return out;
}

std::string compare_csv(std::span<const CompareRow> rows) {
  if (rows.empty()) throw InvalidInputError("compare csv: no rows");
  const std::size_t radii = rows.front().rho.size();
  for (const CompareRow& row : rows) {
    if (row.rho.size() != radii) {
      throw InvalidInputError("compare csv: rows disagree on radius count");
    }
  }
  std::string out = "label";
  for (std::size_t r = 0; r < radii; ++r) out += ",rho_" + std::to_string(r);
  out += '\n';
  for (const CompareRow& row : rows) {
    out += row.label;
    for (double v : row.rho) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

}  // namespace robustrl::eval
