#include "diffplan/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <numbers>

namespace diffplan {

using json = nlohmann::json;

void TrainConfig::validate() const {
  if (horizon < 2) throw std::invalid_argument("TrainConfig.horizon must be >= 2");
  if (K < 1) throw std::invalid_argument("TrainConfig.K must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig.batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig.learning_rate must be > 0");
  if (steps < 0) throw std::invalid_argument("TrainConfig.steps must be >= 0");
  if (!(ema_decay >= 0.0 && ema_decay < 1.0)) {
    throw std::invalid_argument("TrainConfig.ema_decay must be in [0, 1)");
  }
  if (horizon % model.length_multiple() != 0) {
    throw std::invalid_argument("TrainConfig.horizon " + std::to_string(horizon) +
                                " must be a multiple of " + std::to_string(model.length_multiple()));
  }
  model.validate();
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"horizon", c.horizon},
           {"K", c.K},
           {"batch_size", c.batch_size},
           {"learning_rate", c.learning_rate},
           {"weight_decay", c.weight_decay},
           {"warmup_steps", c.warmup_steps},
           {"cosine_decay", c.cosine_decay},
           {"steps", c.steps},
           {"ema_decay", c.ema_decay},
           {"seed", c.seed},
           {"checkpoint_every", c.checkpoint_every},
           {"log_every", c.log_every},
           {"dataset", c.dataset.string()},
           {"out_dir", c.out_dir.string()},
           {"model", c.model}};
}

void from_json(const json& j, TrainConfig& c) {
  const TrainConfig d;
  c.horizon = j.value("horizon", d.horizon);
  c.K = j.value("K", d.K);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.learning_rate = j.value("learning_rate", d.learning_rate);
  c.weight_decay = j.value("weight_decay", d.weight_decay);
  c.warmup_steps = j.value("warmup_steps", d.warmup_steps);
  c.cosine_decay = j.value("cosine_decay", d.cosine_decay);
  c.steps = j.value("steps", d.steps);
  c.ema_decay = j.value("ema_decay", d.ema_decay);
  c.seed = j.value("seed", d.seed);
  c.checkpoint_every = j.value("checkpoint_every", d.checkpoint_every);
  c.log_every = j.value("log_every", d.log_every);
  c.dataset = j.value("dataset", d.dataset.string());
  c.out_dir = j.value("out_dir", d.out_dir.string());
  c.model = j.value("model", d.model);
}

// --- batches ---------------------------------------------------------------------

torch::Tensor corpus_images(const TrainingCorpus& corpus, int resolution) {
  std::vector<torch::Tensor> all;
  all.reserve(corpus.maps.size());
  for (const auto& m : corpus.maps) all.push_back(map_to_tensor(m, resolution));
  return torch::cat(all, 0);
}

namespace {

torch::Tensor actions_to_tensor(const std::vector<ActionSeq>& actions) {
  const auto b = static_cast<std::int64_t>(actions.size());
  const auto h = static_cast<std::int64_t>(actions.front().size());
  auto t = torch::empty({b, h, 2}, torch::kFloat32);
  auto acc = t.accessor<float, 3>();
  for (std::int64_t i = 0; i < b; ++i) {
    if (static_cast<std::int64_t>(actions[i].size()) != h) {
      throw std::invalid_argument("batch actions must share one horizon");
    }
    for (std::int64_t p = 0; p < h; ++p) {
      acc[i][p][0] = static_cast<float>(actions[i][p].x);
      acc[i][p][1] = static_cast<float>(actions[i][p].y);
    }
  }
  return t;
}

}  // namespace

TrainingBatch make_batch(const TrainingCorpus& corpus, const torch::Tensor& images,
                         const std::vector<std::size_t>& sample_indices) {
  if (sample_indices.empty()) throw std::invalid_argument("make_batch: empty batch");
  TrainingBatch batch;
  std::vector<std::int64_t> map_ids;
  auto endpoints = torch::empty({static_cast<std::int64_t>(sample_indices.size()), 4}, torch::kFloat32);
  auto acc = endpoints.accessor<float, 2>();
  for (std::size_t i = 0; i < sample_indices.size(); ++i) {
    const auto& s = corpus.samples.at(sample_indices[i]);
    map_ids.push_back(static_cast<std::int64_t>(s.map_index));
    const Point2 a = s.action.front();
    const Point2 b = s.action.back();
    acc[i][0] = static_cast<float>(a.x);
    acc[i][1] = static_cast<float>(a.y);
    acc[i][2] = static_cast<float>(b.x);
    acc[i][3] = static_cast<float>(b.y);
    batch.actions.push_back(s.action);
  }
  batch.images = images.index_select(0, torch::tensor(map_ids, torch::kInt64));
  batch.endpoints = endpoints;
  return batch;
}

NoisedBatch noise_batch(const std::vector<ActionSeq>& actions, const NoiseSchedule& sched, Rng& rng) {
  if (actions.empty()) throw std::invalid_argument("noise_batch: empty batch");
  std::normal_distribution<double> normal;
  std::vector<ActionSeq> noisy, eps;
  std::vector<std::int64_t> ks;
  for (const auto& a0 : actions) {
    if (a0.size() < 2) throw std::invalid_argument("noise_batch: actions need >= 2 waypoints");
    const int k = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(sched.K)));
    ActionSeq e(a0.size());
    for (auto& p : e) p = {normal(rng), normal(rng)};
    NoisyAction n = forward_diffuse(a0, k, e, sched);
    apply_inpainting(n.values, a0.front(), a0.back());
    noisy.push_back(std::move(n.values));
    eps.push_back(std::move(e));
    ks.push_back(k);
  }
  return {actions_to_tensor(noisy), actions_to_tensor(eps), torch::tensor(ks, torch::kInt64)};
}

torch::Tensor denoising_loss(const torch::Tensor& predicted, const torch::Tensor& eps) {
  if (!predicted.sizes().equals(eps.sizes()) || predicted.dim() != 3 || predicted.size(1) < 3) {
    throw std::invalid_argument("denoising_loss: prediction and noise must be (B, H>=3, 2) alike");
  }
  const auto h = predicted.size(1);
  const auto interior = torch::indexing::Slice(1, h - 1);
  using torch::indexing::Slice;
  const auto diff = predicted.index({Slice(), interior, Slice()}) -
                    eps.index({Slice(), interior, Slice()}).to(predicted.scalar_type());
  return diff.pow(2).mean();
}

torch::Tensor loss_step(const TrainingBatch& batch, const NoisePredictionFn& predictor,
                        const NoiseSchedule& sched, Rng& rng) {
  const NoisedBatch noised = noise_batch(batch.actions, sched, rng);
  return denoising_loss(predictor(batch, noised), noised.eps);
}

NoisePredictionFn model_predictor(NoisePredictor& model) {
  return [model](const TrainingBatch& batch, const NoisedBatch& noised) mutable {
    const auto obs = model->encode(batch.images, batch.endpoints);
    return model->predict(noised.noisy, noised.k, obs);
  };
}

// --- EMA -------------------------------------------------------------------------

EmaModel::EmaModel(const NoisePredictor& source, double decay)
    : shadow_(source->config()), decay_(decay) {
  copy_parameters(shadow_, source);
  shadow_->eval();
  for (auto& p : shadow_->parameters()) p.set_requires_grad(false);
}

double EmaModel::current_decay() const {
  const double n = static_cast<double>(updates_);
  return std::min(decay_, (1.0 + n) / (10.0 + n));
}

void EmaModel::update(const NoisePredictor& model) {
  torch::NoGradGuard no_grad;
  const double d = current_decay();
  const auto src = model->parameters();
  auto dst = shadow_->parameters();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i].mul_(d).add_(src[i].detach(), 1.0 - d);
  ++updates_;
}

// --- trainer ---------------------------------------------------------------------

namespace {

NoisePredictor seeded_model(const TrainConfig& cfg) {
  torch::manual_seed(cfg.seed);
  return NoisePredictor(cfg.model);
}

}  // namespace

Trainer::Trainer(TrainConfig config, std::shared_ptr<const TrainingCorpus> corpus)
    : cfg_((config.validate(), std::move(config))),
      corpus_(std::move(corpus)),
      sched_(make_cosine_schedule(cfg_.K)),
      images_(corpus_images(*corpus_, cfg_.model.input_resolution)),
      model_(seeded_model(cfg_)),
      ema_(model_, cfg_.ema_decay),
      batch_rng_(derive_seed(cfg_.seed, 1)),
      noise_rng_(derive_seed(cfg_.seed, 2)) {
  if (corpus_->samples.empty()) throw TrainingError("training corpus is empty");
  if (corpus_->manifest.horizon != cfg_.horizon) {
    throw TrainingError("config horizon " + std::to_string(cfg_.horizon) +
                        " does not match dataset horizon " + std::to_string(corpus_->manifest.horizon));
  }
  model_->train();
  optimizer_ = std::make_unique<torch::optim::AdamW>(
      model_->parameters(),
      torch::optim::AdamWOptions(cfg_.learning_rate).weight_decay(cfg_.weight_decay));
}

Trainer::~Trainer() {
  if (next_.valid()) next_.wait();
}

Trainer::Prepared Trainer::prepare() {
  const std::size_t n = corpus_->samples.size();
  std::vector<std::size_t> idx;
  if (static_cast<std::size_t>(cfg_.batch_size) >= n) {
    idx.resize(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
  } else {
    idx.resize(static_cast<std::size_t>(cfg_.batch_size));
    for (auto& i : idx) i = uniform_index(batch_rng_, n);
  }
  Prepared p;
  p.batch = make_batch(*corpus_, images_, idx);
  p.noised = noise_batch(p.batch.actions, sched_, noise_rng_);
  return p;
}

double Trainer::learning_rate_at(std::int64_t step) const {
  double lr = cfg_.learning_rate;
  if (cfg_.warmup_steps > 0 && step < cfg_.warmup_steps) {
    return lr * static_cast<double>(step + 1) / static_cast<double>(cfg_.warmup_steps);
  }
  if (cfg_.cosine_decay && cfg_.steps > cfg_.warmup_steps) {
    const double progress = static_cast<double>(step - cfg_.warmup_steps) /
                            static_cast<double>(cfg_.steps - cfg_.warmup_steps);
    lr *= 0.5 * (1.0 + std::cos(std::numbers::pi * std::clamp(progress, 0.0, 1.0)));
  }
  return lr;
}

double Trainer::step() {
  Prepared cur = next_.valid() ? next_.get() : prepare();
  next_ = std::async(std::launch::async, [this] { return prepare(); });

  const double lr = learning_rate_at(step_);
  for (auto& group : optimizer_->param_groups()) {
    static_cast<torch::optim::AdamWOptions&>(group.options()).lr(lr);
  }
  optimizer_->zero_grad();
  const auto obs = model_->encode(cur.batch.images, cur.batch.endpoints);
  const auto pred = model_->predict(cur.noised.noisy, cur.noised.k, obs);
  auto loss = denoising_loss(pred, cur.noised.eps);
  const double value = loss.item<double>();
  if (!std::isfinite(value)) {
    throw TrainingError("non-finite loss at step " + std::to_string(step_) + " (lr " +
                        std::to_string(lr) + ")");
  }
  loss.backward();
  optimizer_->step();
  ema_.update(model_);
  ++step_;
  return value;
}

double Trainer::evaluation_loss(const std::vector<std::size_t>& sample_indices,
                                std::uint64_t noise_seed, int draws, bool use_ema) {
  torch::NoGradGuard no_grad;
  NoisePredictor& m = use_ema ? ema_.model() : model_;
  const bool was_training = m->is_training();
  m->eval();
  Rng rng(noise_seed);
  const TrainingBatch batch = make_batch(*corpus_, images_, sample_indices);
  const auto predictor = model_predictor(m);
  double total = 0.0;
  for (int d = 0; d < draws; ++d) total += loss_step(batch, predictor, sched_, rng).item<double>();
  if (was_training) m->train();
  return total / draws;
}

CheckpointInfo Trainer::checkpoint_info() const {
  CheckpointInfo info;
  info.config = cfg_.model;
  info.schedule_steps = cfg_.K;
  info.horizon = cfg_.horizon;
  info.step = step_;
  return info;
}

void Trainer::save(const std::filesystem::path& path) {
  save_checkpoint(path, checkpoint_info(), ema_.model(), &model_);
}

TrainResult train(const TrainConfig& config, const std::function<void(const LossRecord&)>& on_log) {
  config.validate();
  auto corpus = std::make_shared<const TrainingCorpus>(load_corpus(config.dataset));
  Trainer trainer(config, corpus);

  std::filesystem::create_directories(config.out_dir);
  const auto log_path = config.out_dir / "loss.csv";
  const bool fresh = !std::filesystem::exists(log_path);
  std::ofstream log(log_path, std::ios::app);
  if (!log) throw TrainingError("cannot open " + log_path.string());
  if (fresh) log << "step,loss,wall_time_s\n";
  {
    std::ofstream cfg_out(config.out_dir / "train_config.json");
    cfg_out << json(config).dump(2) << '\n';
  }

  TrainResult result;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::int64_t s = 0; s < config.steps; ++s) {
    const double loss = trainer.step();
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const LossRecord rec{trainer.steps_done(), loss, elapsed};
    result.losses.push_back(rec);
    log << rec.step << ',' << rec.loss << ',' << rec.wall_time_s << '\n';
    if (on_log && config.log_every > 0 && rec.step % config.log_every == 0) on_log(rec);
    if (config.checkpoint_every > 0 && rec.step % config.checkpoint_every == 0) {
      log.flush();
      trainer.save(config.out_dir / "checkpoint.pt");
    }
  }
  result.checkpoint = config.out_dir / "checkpoint.pt";
  trainer.save(result.checkpoint);
  return result;
}

}  // namespace diffplan
