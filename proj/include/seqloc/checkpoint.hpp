#pragma once

#include <filesystem>
#include <optional>

#include "seqloc/net.hpp"
#include "seqloc/optim.hpp"

namespace seqloc {

// Versioned binary snapshot of a trained model. Layout (all little-endian):
//   magic "SQLC", u32 version, u32 input_dim, u32 hidden_dim, u32 flags
//   (bit0 peepholes, bit1 output peephole on c_t, bit2 Adam state present),
//   f64 resolved beta, parameter buffers in param_spans order, then when
//   present: u64 step count, f64 lr/beta1/beta2/eps, m buffers, v buffers.
struct Checkpoint {
  Model model;
  double beta = 1.0;  // resolved orientation weight used during training
  std::optional<AdamState> adam;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace seqloc
