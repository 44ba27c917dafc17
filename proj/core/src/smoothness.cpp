#include "robustrl/eval/smoothness.hpp"

#include <cmath>
#include <cstddef>

#include "robustrl/common/errors.hpp"

namespace robustrl::eval {

SmoothnessReport smoothness(std::span<const double> actions, int act_dim,
                            std::span<const double> track_value,
                            std::span<const double> track_target, int track_dim) {
  if (act_dim < 1) throw InvalidInputError("smoothness: act_dim must be positive");
  const auto d = static_cast<std::size_t>(act_dim);
  if (actions.empty() || actions.size() % d != 0) {
    throw InvalidInputError("smoothness: action trace must be rows of act_dim");
  }
  const std::size_t steps = actions.size() / d;
  if (steps < 3) {
    throw InvalidInputError("smoothness: need at least 3 actions for second differences");
  }

  const auto a = [&](std::size_t t, std::size_t k) { return actions[t * d + k]; };
  double as_sum = 0.0;
  for (std::size_t t = 1; t < steps; ++t) {
    for (std::size_t k = 0; k < d; ++k) as_sum += std::abs(a(t, k) - a(t - 1, k));
  }
  double sfr_sum = 0.0;
  for (std::size_t t = 2; t < steps; ++t) {
    for (std::size_t k = 0; k < d; ++k) {
      sfr_sum += std::abs(a(t, k) - 2.0 * a(t - 1, k) + a(t - 2, k));
    }
  }

  SmoothnessReport report;
  report.as = as_sum / static_cast<double>(steps - 1);
  report.sfr = sfr_sum / static_cast<double>(steps - 2);

  if (!track_value.empty() || !track_target.empty()) {
    if (track_dim < 1) {
      throw InvalidInputError("smoothness: track_dim must be positive when tracking");
    }
    const auto td = static_cast<std::size_t>(track_dim);
    if (track_value.size() != track_target.size() || track_value.size() % td != 0) {
      throw InvalidInputError("smoothness: tracking spans must agree in shape");
    }
    const std::size_t rows = track_value.size() / td;
    double trk_sum = 0.0;
    for (std::size_t t = 0; t < rows; ++t) {
      double sq = 0.0;
      for (std::size_t k = 0; k < td; ++k) {
        const double diff = track_value[t * td + k] - track_target[t * td + k];
        sq += diff * diff;
      }
      trk_sum += std::sqrt(sq);
    }
    report.trk = trk_sum / static_cast<double>(rows);
  }
  return report;
}

SmoothnessReport smoothness(const envs::EpisodeResult& episode, int act_dim,
                            int track_dim) {
  if (episode.has_tracking) {
    return smoothness(episode.action_trace, act_dim, episode.tracking_value,
                      episode.tracking_target, track_dim);
  }
  return smoothness(episode.action_trace, act_dim);
}

}  // namespace robustrl::eval
