#pragma once

namespace robustrl {

inline constexpr const char* kLibraryVersion = "0.1.0";

// Bumped whenever the checkpoint layout changes incompatibly.
inline constexpr int kCheckpointFormatVersion = 1;

}  // namespace robustrl
