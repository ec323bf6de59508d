#include "diffplan/noise_model.hpp"

#include <cmath>

#include "diffplan/map_io.hpp"

namespace diffplan {

namespace F = torch::nn::functional;
using json = nlohmann::json;

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw std::invalid_argument(std::string("ModelConfig.") + name + " must be positive");
  };
  positive(input_resolution, "input_resolution");
  positive(keypoints, "keypoints");
  positive(encoder_width, "encoder_width");
  positive(kernel_size, "kernel_size");
  positive(groups, "groups");
  positive(timestep_dim, "timestep_dim");
  if (kernel_size % 2 == 0) throw std::invalid_argument("ModelConfig.kernel_size must be odd");
  if (timestep_dim % 2 != 0 || timestep_dim < 4) {
    throw std::invalid_argument("ModelConfig.timestep_dim must be even and >= 4");
  }
  if (channels.empty()) throw std::invalid_argument("ModelConfig.channels is empty");
  for (std::size_t i = 0; i < channels.size(); ++i) {
    positive(channels[i], "channels");
    if (channels[i] % groups != 0) {
      throw std::invalid_argument("ModelConfig.channels must be divisible by groups");
    }
    if (i > 0 && channels[i] < channels[i - 1]) {
      throw std::invalid_argument("ModelConfig.channels must be non-decreasing");
    }
  }
}

void to_json(json& j, const ModelConfig& c) {
  j = json{{"input_resolution", c.input_resolution},
           {"keypoints", c.keypoints},
           {"encoder_width", c.encoder_width},
           {"encoder_stem_pool", c.encoder_stem_pool},
           {"channels", c.channels},
           {"kernel_size", c.kernel_size},
           {"groups", c.groups},
           {"timestep_dim", c.timestep_dim},
           {"endpoint_conditioning", c.endpoint_conditioning}};
}

void from_json(const json& j, ModelConfig& c) {
  const ModelConfig d;
  c.input_resolution = j.value("input_resolution", d.input_resolution);
  c.keypoints = j.value("keypoints", d.keypoints);
  c.encoder_width = j.value("encoder_width", d.encoder_width);
  c.encoder_stem_pool = j.value("encoder_stem_pool", d.encoder_stem_pool);
  c.channels = j.value("channels", d.channels);
  c.kernel_size = j.value("kernel_size", d.kernel_size);
  c.groups = j.value("groups", d.groups);
  c.timestep_dim = j.value("timestep_dim", d.timestep_dim);
  c.endpoint_conditioning = j.value("endpoint_conditioning", d.endpoint_conditioning);
}

torch::Tensor spatial_softmax(const torch::Tensor& features) {
  TORCH_CHECK(features.dim() == 4, "spatial_softmax expects (B, C, H, W)");
  const auto b = features.size(0), c = features.size(1), h = features.size(2), w = features.size(3);
  const auto opts = features.options();
  const auto xs = w > 1 ? torch::linspace(-1.0, 1.0, w, opts) : torch::zeros({1}, opts);
  const auto ys = h > 1 ? torch::linspace(-1.0, 1.0, h, opts) : torch::zeros({1}, opts);
  const auto attention = torch::softmax(features.reshape({b, c, h * w}), -1).reshape({b, c, h, w});
  const auto ex = (attention.sum(2) * xs).sum(-1);  // (B, C)
  const auto ey = (attention.sum(3) * ys).sum(-1);
  return torch::stack({ex, ey}, -1).reshape({b, 2 * c});
}

torch::Tensor timestep_embedding(const torch::Tensor& k, int dim) {
  const int half = dim / 2;
  const double scale = std::log(10000.0) / (half - 1);
  const auto opts = torch::TensorOptions().dtype(torch::kFloat64).device(k.device());
  const auto freqs = torch::exp(torch::arange(half, opts) * -scale);
  const auto args = k.to(torch::kFloat64).unsqueeze(1) * freqs.unsqueeze(0);
  return torch::cat({args.sin(), args.cos()}, -1);
}

// --- visual encoder ------------------------------------------------------------

namespace {

int encoder_groups(int channels) { return std::max(1, channels / 16); }

torch::nn::Conv2d conv2d(int in, int out, int k, int stride, int pad) {
  return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, k).stride(stride).padding(pad).bias(false));
}

}  // namespace

BasicBlockImpl::BasicBlockImpl(int in, int out, int stride) {
  conv1_ = register_module("conv1", conv2d(in, out, 3, stride, 1));
  norm1_ = register_module("norm1", torch::nn::GroupNorm(encoder_groups(out), out));
  conv2_ = register_module("conv2", conv2d(out, out, 3, 1, 1));
  norm2_ = register_module("norm2", torch::nn::GroupNorm(encoder_groups(out), out));
  if (stride != 1 || in != out) {
    down_conv_ = register_module("down_conv", conv2d(in, out, 1, stride, 0));
    down_norm_ = register_module("down_norm", torch::nn::GroupNorm(encoder_groups(out), out));
  }
}

torch::Tensor BasicBlockImpl::forward(const torch::Tensor& x) {
  auto y = torch::relu(norm1_(conv1_(x)));
  y = norm2_(conv2_(y));
  const auto skip = down_conv_ ? down_norm_(down_conv_(x)) : x;
  return torch::relu(y + skip);
}

VisualEncoderImpl::VisualEncoderImpl(const ModelConfig& cfg) : stem_pool_(cfg.encoder_stem_pool) {
  const int w = cfg.encoder_width;
  stem_conv_ = register_module("stem_conv", conv2d(1, w, 7, 2, 3));
  stem_norm_ = register_module("stem_norm", torch::nn::GroupNorm(encoder_groups(w), w));
  torch::nn::Sequential stages;
  int in = w;
  for (int stage = 0; stage < 4; ++stage) {
    const int out = w << stage;
    stages->push_back(BasicBlock(in, out, stage == 0 ? 1 : 2));
    stages->push_back(BasicBlock(out, out, 1));
    in = out;
  }
  stages_ = register_module("stages", stages);
  keypoint_conv_ = register_module(
      "keypoint_conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(in, cfg.keypoints, 1)));
}

torch::Tensor VisualEncoderImpl::forward(const torch::Tensor& images) {
  auto x = torch::relu(stem_norm_(stem_conv_(images)));
  if (stem_pool_) x = F::max_pool2d(x, F::MaxPool2dFuncOptions(3).stride(2).padding(1));
  x = stages_->forward(x);
  return spatial_softmax(keypoint_conv_(x));
}

// --- temporal U-Net --------------------------------------------------------------

Conv1dBlockImpl::Conv1dBlockImpl(int in, int out, int kernel, int groups) {
  conv_ = register_module(
      "conv", torch::nn::Conv1d(torch::nn::Conv1dOptions(in, out, kernel).padding(kernel / 2)));
  norm_ = register_module("norm", torch::nn::GroupNorm(groups, out));
}

torch::Tensor Conv1dBlockImpl::forward(const torch::Tensor& x) {
  return torch::mish(norm_(conv_(x)));
}

FilmResBlockImpl::FilmResBlockImpl(int in, int out, int cond_dim, int kernel, int groups)
    : out_(out) {
  block1_ = register_module("block1", Conv1dBlock(in, out, kernel, groups));
  block2_ = register_module("block2", Conv1dBlock(out, out, kernel, groups));
  film_ = register_module("film", torch::nn::Linear(cond_dim, 2 * out));
  if (in != out) {
    residual_ = register_module("residual", torch::nn::Conv1d(torch::nn::Conv1dOptions(in, out, 1)));
  }
}

torch::Tensor FilmResBlockImpl::forward(const torch::Tensor& x, const torch::Tensor& cond) {
  auto y = block1_(x);
  const auto film = film_(torch::mish(cond)).reshape({cond.size(0), 2, out_, 1});
  y = film.select(1, 0) * y + film.select(1, 1);
  y = block2_(y);
  return y + (residual_ ? residual_(x) : x);
}

TemporalUnetImpl::TemporalUnetImpl(const ModelConfig& cfg) : timestep_dim_(cfg.timestep_dim) {
  const int tdim = cfg.timestep_dim;
  step_mlp_ = register_module(
      "step_mlp", torch::nn::Sequential(torch::nn::Linear(tdim, 4 * tdim), torch::nn::Mish(),
                                        torch::nn::Linear(4 * tdim, tdim)));
  const int cond = cfg.cond_dim();
  const int k = cfg.kernel_size;
  const int g = cfg.groups;
  const auto& ch = cfg.channels;
  const std::size_t levels = ch.size();

  int in = 2;
  for (std::size_t i = 0; i < levels; ++i) {
    const std::string n = std::to_string(i);
    down_blocks_.push_back(register_module("down" + n + "_a", FilmResBlock(in, ch[i], cond, k, g)));
    down_blocks_.push_back(register_module("down" + n + "_b", FilmResBlock(ch[i], ch[i], cond, k, g)));
    if (i + 1 < levels) {
      downsample_.push_back(register_module(
          "downsample" + n,
          torch::nn::Conv1d(torch::nn::Conv1dOptions(ch[i], ch[i], 3).stride(2).padding(1))));
    }
    in = ch[i];
  }
  const int deepest = ch.back();
  mid_blocks_.push_back(register_module("mid_a", FilmResBlock(deepest, deepest, cond, k, g)));
  mid_blocks_.push_back(register_module("mid_b", FilmResBlock(deepest, deepest, cond, k, g)));

  // Up path mirrors levels levels-2 .. 0: upsample the deeper features, concat
  // the matching skip, then two residual blocks.
  for (std::size_t u = 0; u + 1 < levels; ++u) {
    const std::size_t level = levels - 2 - u;
    const std::string n = std::to_string(level);
    const int from = ch[level + 1];
    const int to = ch[level];
    up_blocks_.push_back(register_module("up" + n + "_a", FilmResBlock(from + to, to, cond, k, g)));
    up_blocks_.push_back(register_module("up" + n + "_b", FilmResBlock(to, to, cond, k, g)));
    upsample_.push_back(register_module(
        "upsample" + n,
        torch::nn::ConvTranspose1d(torch::nn::ConvTranspose1dOptions(from, from, 4).stride(2).padding(1))));
  }
  final_block_ = register_module("final_block", Conv1dBlock(ch.front(), ch.front(), k, g));
  final_conv_ = register_module("final_conv", torch::nn::Conv1d(torch::nn::Conv1dOptions(ch.front(), 2, 1)));
}

torch::Tensor TemporalUnetImpl::forward(const torch::Tensor& x, const torch::Tensor& k,
                                        const torch::Tensor& obs) {
  const auto temb = timestep_embedding(k, timestep_dim_).to(obs.scalar_type());
  const auto cond = torch::cat({step_mlp_->forward(temb), obs}, -1);

  auto h = x.transpose(1, 2);  // (B, 2, L)
  std::vector<torch::Tensor> skips;
  const std::size_t levels = down_blocks_.size() / 2;
  for (std::size_t i = 0; i < levels; ++i) {
    h = down_blocks_[2 * i]->forward(h, cond);
    h = down_blocks_[2 * i + 1]->forward(h, cond);
    if (i + 1 < levels) {
      skips.push_back(h);
      h = downsample_[i](h);
    }
  }
  for (auto& block : mid_blocks_) h = block->forward(h, cond);
  for (std::size_t u = 0; u < upsample_.size(); ++u) {
    h = upsample_[u](h);
    h = torch::cat({h, skips.back()}, 1);
    skips.pop_back();
    h = up_blocks_[2 * u]->forward(h, cond);
    h = up_blocks_[2 * u + 1]->forward(h, cond);
  }
  h = final_conv_(final_block_(h));
  return h.transpose(1, 2);
}

// --- predictor -------------------------------------------------------------------

NoisePredictorImpl::NoisePredictorImpl(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  encoder_ = register_module("encoder", VisualEncoder(cfg_));
  unet_ = register_module("unet", TemporalUnet(cfg_));
}

torch::Tensor NoisePredictorImpl::encode(const torch::Tensor& images, const torch::Tensor& endpoints) {
  const int r = cfg_.input_resolution;
  if (images.dim() != 4 || images.size(1) != 1 || images.size(2) != r || images.size(3) != r) {
    throw ModelInputError("encode: expected images of shape (B, 1, " + std::to_string(r) + ", " +
                          std::to_string(r) + ")");
  }
  auto visual = encoder_(images);
  if (!cfg_.endpoint_conditioning) return visual;
  if (endpoints.dim() != 2 || endpoints.size(1) != 4 || endpoints.size(0) != images.size(0)) {
    throw ModelInputError("encode: endpoints must be (B, 4)");
  }
  return torch::cat({visual, endpoints.to(visual.scalar_type())}, -1);
}

torch::Tensor NoisePredictorImpl::predict(const torch::Tensor& noisy, const torch::Tensor& k,
                                          const torch::Tensor& obs) {
  if (noisy.dim() != 3 || noisy.size(2) != 2) throw ModelInputError("predict: noisy must be (B, L, 2)");
  const auto len = noisy.size(1);
  const int m = cfg_.length_multiple();
  if (len < m || len % m != 0) {
    throw ModelInputError("predict: sequence length " + std::to_string(len) +
                          " must be a positive multiple of " + std::to_string(m));
  }
  if (k.dim() != 1 || k.size(0) != noisy.size(0)) throw ModelInputError("predict: k must be (B)");
  if (obs.dim() != 2 || obs.size(0) != noisy.size(0) || obs.size(1) != cfg_.obs_dim()) {
    throw ModelInputError("predict: obs must be (B, " + std::to_string(cfg_.obs_dim()) + ")");
  }
  ++evaluations_;
  return unet_(noisy, k, obs);
}

torch::Tensor map_to_tensor(const OccupancyMap& map, int resolution) {
  const OccupancyMap scaled = resize_nearest(map, resolution, resolution);
  auto t = torch::empty({1, 1, resolution, resolution}, torch::kFloat32);
  auto acc = t.accessor<float, 4>();
  for (int y = 0; y < resolution; ++y) {
    for (int x = 0; x < resolution; ++x) acc[0][0][y][x] = scaled.is_free(x, y) ? 1.0f : 0.0f;
  }
  return t;
}

void copy_parameters(NoisePredictor& dst, const NoisePredictor& src) {
  torch::NoGradGuard no_grad;
  const auto from = src->parameters();
  auto to = dst->parameters();
  TORCH_CHECK(from.size() == to.size(), "copy_parameters: architecture mismatch");
  for (std::size_t i = 0; i < from.size(); ++i) to[i].copy_(from[i]);
}

// --- checkpoints -------------------------------------------------------------------

namespace {

json info_json(const CheckpointInfo& info) {
  return json{{"format_version", info.format_version},
              {"model", info.config},
              {"schedule", {{"kind", info.schedule_kind}, {"steps", info.schedule_steps}}},
              {"horizon", info.horizon},
              {"step", info.step}};
}

// Module::load swaps tensors in without a shape check, so compare afterwards.
void load_weights(torch::serialize::InputArchive& archive, NoisePredictor& model,
                  const std::filesystem::path& path) {
  std::vector<std::pair<std::string, std::vector<std::int64_t>>> expected;
  for (const auto& item : model->named_parameters()) expected.emplace_back(item.key(), item.value().sizes().vec());
  for (const auto& item : model->named_buffers()) expected.emplace_back(item.key(), item.value().sizes().vec());
  try {
    model->load(archive);
  } catch (const c10::Error& e) {
    throw CheckpointError(path.string() + ": weights do not match the model: " + e.what_without_backtrace());
  }
  const auto params = model->named_parameters();
  const auto buffers = model->named_buffers();
  for (const auto& [name, sizes] : expected) {
    const auto* t = params.find(name);
    if (!t) t = buffers.find(name);
    if (!t || t->sizes().vec() != sizes) {
      throw CheckpointError(path.string() + ": tensor '" + name + "' has the wrong shape for this model");
    }
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const CheckpointInfo& info,
                     NoisePredictor& eval_model, NoisePredictor* train_model) {
  torch::serialize::OutputArchive archive;
  archive.write("meta", c10::IValue(info_json(info).dump()));
  torch::serialize::OutputArchive eval_archive;
  eval_model->save(eval_archive);
  archive.write("eval", eval_archive);
  if (train_model) {
    torch::serialize::OutputArchive train_archive;
    (*train_model)->save(train_archive);
    archive.write("train", train_archive);
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  archive.save_to(tmp.string());
  std::filesystem::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw CheckpointError("checkpoint not found: " + path.string());
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(path.string());
  } catch (const c10::Error& e) {
    throw CheckpointError("cannot read checkpoint " + path.string() + ": " + e.what_without_backtrace());
  }
  c10::IValue meta;
  if (!archive.try_read("meta", meta) || !meta.isString()) {
    throw CheckpointError(path.string() + ": missing checkpoint metadata");
  }
  LoadedCheckpoint out;
  try {
    const json j = json::parse(meta.toStringRef());
    out.info.format_version = j.at("format_version").get<int>();
    if (out.info.format_version != kCheckpointFormatVersion) {
      throw CheckpointError("unsupported checkpoint format_version " +
                            std::to_string(out.info.format_version));
    }
    out.info.config = j.at("model").get<ModelConfig>();
    out.info.schedule_kind = j.at("schedule").at("kind").get<std::string>();
    out.info.schedule_steps = j.at("schedule").at("steps").get<int>();
    out.info.horizon = j.at("horizon").get<int>();
    out.info.step = j.at("step").get<std::int64_t>();
  } catch (const json::exception& e) {
    throw CheckpointError(path.string() + ": malformed metadata: " + e.what());
  }
  if (out.info.schedule_kind != "squaredcos") {
    throw CheckpointError("unknown noise schedule kind '" + out.info.schedule_kind + "'");
  }
  out.model = NoisePredictor(out.info.config);
  torch::serialize::InputArchive eval_archive;
  if (!archive.try_read("eval", eval_archive)) throw CheckpointError(path.string() + ": no weights");
  load_weights(eval_archive, out.model, path);
  out.model->eval();
  return out;
}

void load_training_weights(const std::filesystem::path& path, NoisePredictor& model) {
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(path.string());
  } catch (const c10::Error& e) {
    throw CheckpointError("cannot read checkpoint " + path.string() + ": " + e.what_without_backtrace());
  }
  torch::serialize::InputArchive train_archive;
  if (!archive.try_read("train", train_archive)) {
    throw CheckpointError(path.string() + ": checkpoint has no training weights");
  }
  load_weights(train_archive, model, path);
}

}  // namespace diffplan
