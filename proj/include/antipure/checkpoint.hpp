#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "antipure/denoiser.hpp"

// Denoiser checkpoint (.ckpt), little-endian:
//   8 bytes  magic "APDNCKPT"
//   u64      format version (1)
//   u64 x4   in_channels, base_channels, num_blocks, embed_dim
//   u64      schedule T
//   f64 x2   schedule beta_start, beta_end
//   u64      steps trained
//   f64      final training loss (NaN when untrained)
//   u64      parameter tensor count
//   per tensor:
//     u64 name length, name bytes (no terminator)
//     u64 rank, u64[rank] dims
//     f64[prod(dims)] values, row-major
namespace antipure {

struct ScheduleParams {
  int steps = 100;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  bool operator==(const ScheduleParams&) const = default;
};

NoiseSchedule make_schedule(const ScheduleParams& p);

struct Checkpoint {
  DenoiserModel model;
  ScheduleParams schedule;
};

std::string encode_checkpoint(const DenoiserModel& model, const ScheduleParams& schedule);
Checkpoint decode_checkpoint(std::string_view bytes, const std::string& source = "<memory>");
void save_checkpoint(const std::filesystem::path& path, const DenoiserModel& model, const ScheduleParams& schedule);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace antipure
