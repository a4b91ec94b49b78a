#pragma once

#include <cstdint>
#include <filesystem>

#include "dugks/grid.hpp"
#include "dugks/kinetics.hpp"

namespace dugks {

// Binary layout, all fields little-endian:
//   char[8]  magic "DUGKSCKP"
//   u8       format version
//   u8       dimension
//   u8       velocity set id (1 = D1Q3, 2 = D2Q9)
//   u8       reserved (0)
//   u32      cells per axis n
//   f64      rt0, epsilon, tau, time
//   u64      completed steps
//   u64      value count (= cells * velocities)
//   f64[]    values, velocity-major
inline constexpr std::uint8_t kCheckpointVersion = 1;

struct Checkpoint {
    DistributionField field;
    RelaxationModel model;
};

/// Writes through a temporary file and renames it into place.
void checkpoint_write(const DistributionField& field, const RelaxationModel& model,
                      const std::filesystem::path& path);

/// Throws CheckpointError (bad magic, version mismatch, extent mismatch,
/// truncation) or IoError when the file cannot be opened.
Checkpoint checkpoint_read(const std::filesystem::path& path);

}  // namespace dugks
