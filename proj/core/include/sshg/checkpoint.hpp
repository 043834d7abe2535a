#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sshg/nehari.hpp"

namespace sshg {

inline constexpr std::uint8_t kCheckpointVersion = 1;

/// Contents of one checkpoint file: the grid it was written on and a list of points.
struct CheckpointState {
  TorusGeometry geometry;
  double rho = 0.0;
  std::vector<NehariPoint> points;
};

/// Layout (all little-endian):
///   "SSHG0001", version byte,
///   side_length f64, grid_n u32, delta_1 f64, delta_2 f64, rho f64, point count u32,
///   then per point: u (n^2 f64), psi (2 n^2 complex as re, im f64 pairs), constraint_norm f64.
std::string encode_checkpoint(const CheckpointState& state);

/// Throws format error on bad magic, version or truncation.
CheckpointState decode_checkpoint(std::string_view bytes);

/// Written through a temporary file in the same directory and renamed into place.
std::filesystem::path checkpoint_save(const CheckpointState& state, const std::filesystem::path& path);

CheckpointState checkpoint_load(const std::filesystem::path& path);
/// As above; throws compatibility error when the stored grid differs from `expected`.
CheckpointState checkpoint_load(const std::filesystem::path& path, const TorusGeometry& expected);

/// Temp file plus rename; a crash never leaves a partial `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace sshg
