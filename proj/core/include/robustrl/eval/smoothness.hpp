#pragma once

#include <optional>
#include <span>

#include "robustrl/envs/env.hpp"

namespace robustrl::eval {

// Per-episode action-regularity metrics. AS is the mean L1 step between
// consecutive actions, SFR the mean L1 second difference, TRK the mean L2
// distance to a commanded target when the environment supplies one. Each
// mean runs over the differences that exist, so a constant sequence gives
// exactly 0, a unit ramp gives AS 1, and alternating +-1 gives AS 2, SFR 4.
struct SmoothnessReport {
  double as = 0.0;
  double sfr = 0.0;
  std::optional<double> trk;
};

// `actions` is T flattened rows of act_dim; T >= 3 required so both
// differences are defined. Tracking spans are optional and must agree in
// shape (rows of track_dim) when present.
SmoothnessReport smoothness(std::span<const double> actions, int act_dim,
                            std::span<const double> track_value = {},
                            std::span<const double> track_target = {},
                            int track_dim = 0);

SmoothnessReport smoothness(const envs::EpisodeResult& episode, int act_dim,
                            int track_dim);

}  // namespace robustrl::eval
