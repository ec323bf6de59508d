#include <doctest.h>

#include <fstream>

#include "diffplan/map_gen.hpp"
#include "diffplan/noise_model.hpp"
#include "helpers.hpp"
#include "torch_doctest.hpp"

using namespace diffplan;

namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.input_resolution = 16;
  c.keypoints = 4;
  c.encoder_width = 8;
  c.encoder_stem_pool = false;
  c.channels = {8, 16, 32};
  c.kernel_size = 3;
  c.groups = 4;
  c.timestep_dim = 8;
  return c;
}

torch::Tensor endpoints(float sx, float sy, float gx, float gy) {
  return torch::tensor({sx, sy, gx, gy}).reshape({1, 4});
}

}  // namespace

TEST_CASE("config defaults and validation") {
  const ModelConfig d;
  CHECK(d.obs_dim() == 68);
  CHECK(d.cond_dim() == 68 + 128);
  CHECK(d.length_multiple() == 4);
  ModelConfig no_ep = d;
  no_ep.endpoint_conditioning = false;
  CHECK(no_ep.obs_dim() == 64);
  ModelConfig bad = d;
  bad.channels = {};
  CHECK_THROWS(bad.validate());
  bad = d;
  bad.kernel_size = 4;
  CHECK_THROWS(bad.validate());
  bad = d;
  bad.groups = 7;
  CHECK_THROWS(bad.validate());
  nlohmann::json j = tiny_config();
  CHECK(j.get<ModelConfig>() == tiny_config());
}

TEST_CASE("spatial softmax expected coordinates") {
  auto f = torch::zeros({1, 2, 5, 5});
  CHECK(spatial_softmax(f).abs().max().item<double>() < 1e-6);
  f.index_put_({0, 1, 0, 4}, 100.0);  // row 0, column 4: top right
  const auto kp = spatial_softmax(f);
  REQUIRE(kp.sizes() == torch::IntArrayRef({1, 4}));
  CHECK(kp[0][2].item<double>() == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(kp[0][3].item<double>() == doctest::Approx(-1.0).epsilon(1e-4));
}

TEST_CASE("timestep embedding distinguishes iterations") {
  const auto e = timestep_embedding(torch::tensor({1, 2, 1000}, torch::kInt64), 16);
  CHECK(e.sizes() == torch::IntArrayRef({3, 16}));
  CHECK((e[0] - e[1]).abs().max().item<double>() > 1e-3);
  CHECK((e[0] - e[2]).abs().max().item<double>() > 1e-3);
}

TEST_CASE("default observation embedding has 68 dims") {
  torch::manual_seed(0);
  NoisePredictor model{ModelConfig{}};
  model->eval();
  torch::NoGradGuard ng;
  const auto map = generate_maze(MazeSpec::for_size(100, 1));
  const auto img = map_to_tensor(map, 100);
  const auto a = model->encode(img, endpoints(-1, -1, 0.5, 0.5));
  CHECK(a.sizes() == torch::IntArrayRef({1, 68}));
  CHECK(torch::equal(a, model->encode(img, endpoints(-1, -1, 0.5, 0.5))));
  const auto b = model->encode(img, endpoints(-1, -1, 0.25, 0.5));
  const auto diff = (a - b).abs().squeeze(0);
  CHECK(diff.slice(0, 0, 66).max().item<double>() == 0.0);
  CHECK(diff[66].item<double>() == doctest::Approx(0.25));
  CHECK(diff[67].item<double>() == 0.0);
  const auto visual = a.slice(1, 0, 64);
  CHECK(visual.abs().max().item<double>() <= 1.0);

  const auto obs = a;
  for (int len : {180, 200}) {
    const auto x = torch::randn({1, len, 2});
    CHECK(model->predict(x, torch::tensor({500}, torch::kInt64), obs).sizes() ==
          torch::IntArrayRef({1, len, 2}));
  }
}

TEST_CASE("predictor shape contract over lengths") {
  torch::manual_seed(1);
  NoisePredictor model{tiny_config()};
  model->eval();
  torch::NoGradGuard ng;
  const auto obs = model->encode(torch::rand({1, 1, 16, 16}), endpoints(0, 0, 1, 1));
  for (int len = 16; len <= 512; len += 4) {
    const auto x = torch::rand({1, len, 2}) * 6 - 3;
    const auto y = model->predict(x, torch::tensor({1 + len}, torch::kInt64), obs);
    CHECK(y.sizes() == x.sizes());
    CHECK(torch::isfinite(y).all().item<bool>());
  }
  CHECK_THROWS_AS(model->predict(torch::zeros({1, 18, 2}), torch::tensor({1}, torch::kInt64), obs), ModelInputError);
  CHECK_THROWS_AS(model->predict(torch::zeros({1, 16, 3}), torch::tensor({1}, torch::kInt64), obs), ModelInputError);
  CHECK_THROWS_AS(model->encode(torch::zeros({1, 1, 15, 16}), endpoints(0, 0, 0, 0)), ModelInputError);
  CHECK_THROWS_AS(model->encode(torch::zeros({1, 1, 16, 16}), torch::zeros({1, 3})), ModelInputError);
}

TEST_CASE("iteration index and determinism") {
  torch::manual_seed(2);
  NoisePredictor model{tiny_config()};
  model->eval();
  torch::NoGradGuard ng;
  const auto obs = model->encode(torch::rand({1, 1, 16, 16}), endpoints(0, 0, 1, 1));
  const auto x = torch::randn({1, 24, 2});
  const auto at1 = model->predict(x, torch::tensor({1}, torch::kInt64), obs);
  const auto atK = model->predict(x, torch::tensor({1000}, torch::kInt64), obs);
  CHECK((at1 - atK).abs().max().item<double>() > 1e-6);
  CHECK(torch::equal(at1, model->predict(x, torch::tensor({1}, torch::kInt64), obs)));
  model->reset_evaluations();
  model->predict(x, torch::tensor({3}, torch::kInt64), obs);
  CHECK(model->evaluations() == 1);
}

TEST_CASE("map tensor") {
  const auto m = test::ascii_map({"#.", ".."});
  const auto t = map_to_tensor(m, 4);
  CHECK(t.sizes() == torch::IntArrayRef({1, 1, 4, 4}));
  CHECK(t[0][0][0][0].item<float>() == 0.0f);
  CHECK(t[0][0][3][3].item<float>() == 1.0f);
}

TEST_CASE("checkpoint round trip") {
  test::TempDir dir("ckpt");
  torch::manual_seed(3);
  NoisePredictor eval_model{tiny_config()};
  NoisePredictor train_model{tiny_config()};
  CheckpointInfo info;
  info.config = tiny_config();
  info.schedule_steps = 50;
  info.horizon = 24;
  info.step = 7;
  save_checkpoint(dir / "c.pt", info, eval_model, &train_model);

  auto loaded = load_checkpoint(dir / "c.pt");
  CHECK(loaded.info.config == tiny_config());
  CHECK(loaded.info.schedule_steps == 50);
  CHECK(loaded.info.horizon == 24);
  CHECK(loaded.info.step == 7);
  const auto a = eval_model->named_parameters();
  const auto b = loaded.model->named_parameters();
  REQUIRE(a.size() == b.size());
  for (const auto& item : a) CHECK(torch::equal(item.value(), b[item.key()]));

  NoisePredictor resumed{tiny_config()};
  load_training_weights(dir / "c.pt", resumed);
  for (const auto& item : train_model->named_parameters()) {
    CHECK(torch::equal(item.value(), resumed->named_parameters()[item.key()]));
  }

  std::ofstream(dir / "junk.pt") << "not a checkpoint";
  CHECK_THROWS_AS(load_checkpoint(dir / "junk.pt"), CheckpointError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.pt"), CheckpointError);
  ModelConfig other = tiny_config();
  other.channels = {8, 16};
  NoisePredictor wrong{other};
  CHECK_THROWS_AS(load_training_weights(dir / "c.pt", wrong), CheckpointError);
}
