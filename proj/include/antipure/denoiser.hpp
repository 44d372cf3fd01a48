#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "antipure/diffusion.hpp"
#include "antipure/tape.hpp"

namespace antipure {

using ImageSet = std::vector<Image>;

struct DenoiserSpec {
  std::size_t in_channels = 1;
  std::size_t base_channels = 8;
  std::size_t num_blocks = 2;  // down/up pairs; channels double per level
  std::size_t embed_dim = 16;

  void validate() const;
  // Throws unless the image matches the channel count and its sides divide by 2^num_blocks.
  void check_image(const Shape& shape) const;
  bool operator==(const DenoiserSpec&) const = default;
};

struct NamedTensor {
  std::string name;
  Tensor value;
  bool operator==(const NamedTensor&) const = default;
};

struct TrainingMeta {
  std::uint64_t steps = 0;
  double final_loss = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> loss_curve;  // per-step batch loss, not persisted
};

// Small UNet-style noise predictor: input conv, `num_blocks` down blocks
// (conv + SiLU + avg-pool), a mid block, mirrored up blocks (nearest upsample,
// skip concat, conv + SiLU) and an output conv. A sinusoidal timestep embedding
// passes through one SiLU MLP layer and is projected to a per-channel bias in
// every block.
class DenoiserModel : public NoisePredictor {
 public:
  DenoiserModel() = default;
  static DenoiserModel random(const DenoiserSpec& spec, std::uint64_t seed);
  static DenoiserModel zeros(const DenoiserSpec& spec);
  // Takes ownership of parameters in layout order; names and shapes are checked.
  static DenoiserModel from_params(const DenoiserSpec& spec, std::vector<NamedTensor> params);

  const DenoiserSpec& spec() const { return spec_; }
  const std::vector<NamedTensor>& params() const { return params_; }
  std::vector<NamedTensor>& params() { return params_; }
  const TrainingMeta& meta() const { return meta_; }
  TrainingMeta& meta() { return meta_; }
  std::size_t num_parameters() const;

  // Puts every parameter on `tape`, as leaves when `trainable`.
  std::vector<Var> bind(Tape& tape, bool trainable) const;

  // Forward pass with explicit parameter handles from bind(). When `block_outputs`
  // is given it receives the activation after each down, mid and up block.
  Var forward(Var x_t, int t, std::span<const Var> params, std::vector<Var>* block_outputs = nullptr) const;

  using NoisePredictor::predict;
  Var predict(Var x_t, int t) const override;

  bool all_finite() const;

 private:
  DenoiserSpec spec_;
  std::vector<NamedTensor> params_;
  TrainingMeta meta_;
};

// Parameter names and shapes in layout order.
std::vector<NamedTensor> denoiser_layout(const DenoiserSpec& spec);

Image forward(const DenoiserModel& model, const Image& x_t, int t);

struct TrainOptions {
  std::uint64_t steps = 2000;
  double lr = 0.05;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
};

// Plain SGD on ddpm_loss with per-sample t ~ U(1, T) and eps ~ N(0, I).
// Continues from `model`'s parameters; records the loss curve in meta.
void sgd_fit(DenoiserModel& model, const ImageSet& dataset, const NoiseSchedule& sched, const TrainOptions& opts);

DenoiserModel train(const DenoiserSpec& spec, const ImageSet& dataset, const NoiseSchedule& sched,
                    const TrainOptions& opts);

// MSE between the intermediate activations of x_a and x_b after each
// down, mid and up block, in network order (2 * num_blocks + 1 entries).
std::vector<double> block_probe(const DenoiserModel& model, const Image& x_a, const Image& x_b, int t);

}  // namespace antipure
