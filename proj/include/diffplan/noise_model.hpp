#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "diffplan/occupancy_map.hpp"
#include "diffplan/trajectory.hpp"

namespace diffplan {

/// Architecture of the noise predictor. Defaults mirror the usual
/// image-conditioned diffusion-policy CNN; every field is tunable so that
/// reduced configurations can be trained on a CPU.
struct ModelConfig {
  int input_resolution = 100;
  int keypoints = 32;
  /// Width of the first ResNet-18 stage; stages use w, 2w, 4w, 8w.
  int encoder_width = 64;
  /// Max-pool after the stem (standard ResNet); disable for small inputs.
  bool encoder_stem_pool = true;
  std::vector<int> channels{256, 512, 1024};
  int kernel_size = 5;
  int groups = 8;
  int timestep_dim = 128;
  /// Append normalized start/goal to the observation embedding.
  bool endpoint_conditioning = true;

  int visual_dim() const { return 2 * keypoints; }
  int obs_dim() const { return visual_dim() + (endpoint_conditioning ? 4 : 0); }
  int cond_dim() const { return obs_dim() + timestep_dim; }
  /// Sequence lengths must be a multiple of this (one halving per level).
  int length_multiple() const { return 1 << (static_cast<int>(channels.size()) - 1); }

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

class ModelInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Per-channel expected image coordinate of a softmax over each feature map.
/// Output is (B, 2C) laid out x0, y0, x1, y1, ... with coordinates in [-1, 1].
torch::Tensor spatial_softmax(const torch::Tensor& features);

/// Sinusoidal embedding of the diffusion iteration, (B) -> (B, dim).
torch::Tensor timestep_embedding(const torch::Tensor& k, int dim);

// --- visual encoder ------------------------------------------------------------

class BasicBlockImpl : public torch::nn::Module {
 public:
  BasicBlockImpl(int in, int out, int stride);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr}, down_conv_{nullptr};
  torch::nn::GroupNorm norm1_{nullptr}, norm2_{nullptr}, down_norm_{nullptr};
};
TORCH_MODULE(BasicBlock);

/// ResNet-18 topology (group norm in place of batch norm) followed by a 1x1
/// keypoint projection and spatial softmax.
class VisualEncoderImpl : public torch::nn::Module {
 public:
  explicit VisualEncoderImpl(const ModelConfig& cfg);
  /// images: (B, 1, R, R) in [0, 1] -> (B, 2 * keypoints)
  torch::Tensor forward(const torch::Tensor& images);

 private:
  bool stem_pool_;
  torch::nn::Conv2d stem_conv_{nullptr};
  torch::nn::GroupNorm stem_norm_{nullptr};
  torch::nn::Sequential stages_{nullptr};
  torch::nn::Conv2d keypoint_conv_{nullptr};
};
TORCH_MODULE(VisualEncoder);

// --- temporal U-Net ------------------------------------------------------------

class Conv1dBlockImpl : public torch::nn::Module {
 public:
  Conv1dBlockImpl(int in, int out, int kernel, int groups);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv1d conv_{nullptr};
  torch::nn::GroupNorm norm_{nullptr};
};
TORCH_MODULE(Conv1dBlock);

/// Two conv blocks with FiLM (per-channel scale and bias from the
/// conditioning vector) applied between them, plus a residual path.
class FilmResBlockImpl : public torch::nn::Module {
 public:
  FilmResBlockImpl(int in, int out, int cond_dim, int kernel, int groups);
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& cond);

 private:
  int out_;
  Conv1dBlock block1_{nullptr}, block2_{nullptr};
  torch::nn::Linear film_{nullptr};
  torch::nn::Conv1d residual_{nullptr};
};
TORCH_MODULE(FilmResBlock);

class TemporalUnetImpl : public torch::nn::Module {
 public:
  explicit TemporalUnetImpl(const ModelConfig& cfg);
  /// x: (B, L, 2), k: (B) int64, obs: (B, obs_dim) -> (B, L, 2)
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& k, const torch::Tensor& obs);

 private:
  int timestep_dim_;
  torch::nn::Sequential step_mlp_{nullptr};
  // down_blocks_ holds two blocks per level; up_blocks_ two per up level.
  std::vector<FilmResBlock> down_blocks_;
  std::vector<torch::nn::Conv1d> downsample_;
  std::vector<FilmResBlock> mid_blocks_;
  std::vector<FilmResBlock> up_blocks_;
  std::vector<torch::nn::ConvTranspose1d> upsample_;
  Conv1dBlock final_block_{nullptr};
  torch::nn::Conv1d final_conv_{nullptr};
};
TORCH_MODULE(TemporalUnet);

// --- full predictor --------------------------------------------------------------

/// The noise predictor: visual encoder + FiLM-conditioned temporal U-Net,
/// trained end to end.
class NoisePredictorImpl : public torch::nn::Module {
 public:
  explicit NoisePredictorImpl(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }

  /// images (B, 1, R, R), endpoints (B, 4) normalized start x,y, goal x,y.
  torch::Tensor encode(const torch::Tensor& images, const torch::Tensor& endpoints);
  /// noisy (B, L, 2), k (B) int64 in [1, K], obs from encode().
  torch::Tensor predict(const torch::Tensor& noisy, const torch::Tensor& k, const torch::Tensor& obs);

  /// Number of predict() calls since construction or the last reset.
  std::uint64_t evaluations() const { return evaluations_.load(); }
  void reset_evaluations() { evaluations_ = 0; }

 private:
  ModelConfig cfg_;
  VisualEncoder encoder_{nullptr};
  TemporalUnet unet_{nullptr};
  std::atomic<std::uint64_t> evaluations_{0};
};
TORCH_MODULE(NoisePredictor);

/// Map image tensor (1, 1, R, R): nearest-neighbour resize, free = 1, obstacle = 0.
torch::Tensor map_to_tensor(const OccupancyMap& map, int resolution);

/// Copies parameters of src into dst (same architecture).
void copy_parameters(NoisePredictor& dst, const NoisePredictor& src);

// --- checkpoints -----------------------------------------------------------------

constexpr int kCheckpointFormatVersion = 1;

struct CheckpointInfo {
  ModelConfig config;
  int schedule_steps = 1000;
  std::string schedule_kind = "squaredcos";
  int horizon = 180;
  std::int64_t step = 0;
  int format_version = kCheckpointFormatVersion;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes the evaluation weights (and optionally the raw training weights) with
/// the model config and schedule descriptor. Write-temp-then-rename.
void save_checkpoint(const std::filesystem::path& path, const CheckpointInfo& info,
                     NoisePredictor& eval_model, NoisePredictor* train_model = nullptr);

struct LoadedCheckpoint {
  CheckpointInfo info;
  NoisePredictor model{nullptr};
};

/// Rebuilds the model from the stored config and loads the evaluation weights.
/// Throws CheckpointError on version, schedule or parameter-shape mismatch.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Loads the raw training weights into an existing model, for resuming.
void load_training_weights(const std::filesystem::path& path, NoisePredictor& model);

}  // namespace diffplan
