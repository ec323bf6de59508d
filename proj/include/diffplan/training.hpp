#pragma once

#include <filesystem>
#include <functional>
#include <future>
#include <memory>
#include <optional>
#include <vector>

#include <torch/torch.h>

#include "diffplan/dataset.hpp"
#include "diffplan/diffusion.hpp"
#include "diffplan/noise_model.hpp"
#include "diffplan/random.hpp"

namespace diffplan {

struct TrainConfig {
  int horizon = kDefaultHorizon;
  int K = 1000;
  int batch_size = 64;
  double learning_rate = 1e-4;
  double weight_decay = 1e-6;
  /// Linear warm-up followed by cosine decay to zero at `steps`.
  std::int64_t warmup_steps = 500;
  bool cosine_decay = true;
  std::int64_t steps = 10000;
  double ema_decay = 0.995;
  std::uint64_t seed = 0;
  std::int64_t checkpoint_every = 1000;
  std::int64_t log_every = 50;
  std::filesystem::path dataset;
  std::filesystem::path out_dir = "run";
  ModelConfig model;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Model inputs for a batch of training samples.
struct TrainingBatch {
  torch::Tensor images;     // (B, 1, R, R)
  torch::Tensor endpoints;  // (B, 4)
  std::vector<ActionSeq> actions;
};

/// Noised actions for one loss evaluation. Endpoints of `noisy` carry the
/// clean start/goal (inpainted), never noise.
struct NoisedBatch {
  torch::Tensor noisy;  // (B, H, 2)
  torch::Tensor eps;    // (B, H, 2)
  torch::Tensor k;      // (B) int64
};

/// Per-map image tensors for a corpus, (N, 1, R, R).
torch::Tensor corpus_images(const TrainingCorpus& corpus, int resolution);

TrainingBatch make_batch(const TrainingCorpus& corpus, const torch::Tensor& images,
                         const std::vector<std::size_t>& sample_indices);

/// Draws one k uniform in [1, K] and standard-normal eps per sample, forms the
/// forward marginal and inpaints the endpoints.
NoisedBatch noise_batch(const std::vector<ActionSeq>& actions, const NoiseSchedule& sched, Rng& rng);

/// Mean squared error between prediction and injected noise over interior
/// waypoints (first and last excluded), averaged over the batch.
torch::Tensor denoising_loss(const torch::Tensor& predicted, const torch::Tensor& eps);

using NoisePredictionFn = std::function<torch::Tensor(const TrainingBatch&, const NoisedBatch&)>;

/// One evaluation of the training objective for a batch.
torch::Tensor loss_step(const TrainingBatch& batch, const NoisePredictionFn& predictor,
                        const NoiseSchedule& sched, Rng& rng);

/// Adapts a model to NoisePredictionFn.
NoisePredictionFn model_predictor(NoisePredictor& model);

/// Exponential moving average of model parameters, with the usual
/// (1 + n) / (10 + n) warm-up on the decay.
class EmaModel {
 public:
  EmaModel(const NoisePredictor& source, double decay);

  void update(const NoisePredictor& model);
  NoisePredictor& model() { return shadow_; }
  std::int64_t updates() const { return updates_; }
  double current_decay() const;

 private:
  NoisePredictor shadow_{nullptr};
  double decay_;
  std::int64_t updates_ = 0;
};

struct LossRecord {
  std::int64_t step = 0;
  double loss = 0.0;
  double wall_time_s = 0.0;
};

/// Owns the model, optimizer, EMA copy and data stream for one run. Batches
/// for step n+1 are assembled on a worker thread while step n optimizes.
/// Batches draw samples uniformly with replacement, except when batch_size
/// covers the whole corpus: then every batch is the full corpus in order.
class Trainer {
 public:
  Trainer(TrainConfig config, std::shared_ptr<const TrainingCorpus> corpus);
  ~Trainer();
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  /// Runs one optimization step and returns its loss.
  double step();
  std::int64_t steps_done() const { return step_; }

  NoisePredictor& model() { return model_; }
  NoisePredictor& ema_model() { return ema_.model(); }
  const NoiseSchedule& schedule() const { return sched_; }
  const TrainConfig& config() const { return cfg_; }
  CheckpointInfo checkpoint_info() const;
  void save(const std::filesystem::path& path);

  /// Deterministic objective on fixed samples and a fixed noise stream, for
  /// before/after comparisons. Uses the raw (non-EMA) weights by default.
  double evaluation_loss(const std::vector<std::size_t>& sample_indices, std::uint64_t noise_seed,
                         int draws, bool use_ema = false);

 private:
  struct Prepared {
    TrainingBatch batch;
    NoisedBatch noised;
  };
  Prepared prepare();
  double learning_rate_at(std::int64_t step) const;

  TrainConfig cfg_;
  std::shared_ptr<const TrainingCorpus> corpus_;
  NoiseSchedule sched_;
  torch::Tensor images_;
  NoisePredictor model_{nullptr};
  EmaModel ema_;
  std::unique_ptr<torch::optim::AdamW> optimizer_;
  Rng batch_rng_;
  Rng noise_rng_;
  std::int64_t step_ = 0;
  std::future<Prepared> next_;
};

struct TrainResult {
  std::filesystem::path checkpoint;
  std::vector<LossRecord> losses;
};

/// Full run: loads the corpus named by config.dataset, trains for
/// config.steps, appends `step,loss,wall_time_s` rows to out_dir/loss.csv,
/// checkpoints every checkpoint_every steps and at the end
/// (out_dir/checkpoint.pt). Aborts with TrainingError on a non-finite loss.
TrainResult train(const TrainConfig& config,
                  const std::function<void(const LossRecord&)>& on_log = {});

}  // namespace diffplan
