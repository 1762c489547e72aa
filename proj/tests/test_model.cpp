#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "dusev/checkpoint.hpp"
#include "dusev/error.hpp"
#include "dusev/gradcheck.hpp"
#include "dusev/model.hpp"
#include "dusev/rng.hpp"

using namespace dusev;

namespace {

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.d_model = 16;
  cfg.n_layers = 2;
  cfg.n_heads = 4;
  cfg.ffn_dim = 32;
  cfg.head_dim1 = 24;
  cfg.head_dim2 = 12;
  cfg.seed = 21;
  return cfg;
}

CueTokenSet random_tokens(Rng& rng) {
  CueTokenSet tokens;
  for (auto& t : tokens.tokens) {
    t.v = rng.uniform();
    t.c = rng.uniform();
  }
  return tokens;
}

bool params_equal(const ModelParams& a, const ModelParams& b) {
  bool equal = true;
  a.for_each_param([&](const std::string& name, const ParamTensor& ta) {
    b.for_each_param([&](const std::string& name_b, const ParamTensor& tb) {
      if (name == name_b && ta.value.data() != tb.value.data()) equal = false;
    });
  });
  return equal && a.bn1.running_mean.data() == b.bn1.running_mean.data() &&
         a.bn2.running_var.data() == b.bn2.running_var.data();
}

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("init_model: same seed gives bit-identical parameters") {
  const ModelConfig cfg = small_config();
  const ModelParams a = init_model(cfg);
  const ModelParams b = init_model(cfg);
  CHECK(params_equal(a, b));
}

TEST_CASE("init_model: rejects indivisible head partition") {
  ModelConfig cfg = small_config();
  cfg.d_model = 63;
  cfg.n_heads = 8;
  CHECK_THROWS_AS(init_model(cfg), ConfigError);
}

TEST_CASE("init_model: weights respect the Glorot bound, embeddings start at zero") {
  const ModelConfig cfg = small_config();
  const ModelParams params = init_model(cfg);
  auto check_bound = [](const Matrix& m, int fan_in, int fan_out) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    double max_abs = 0.0;
    for (double x : m.data()) max_abs = std::max(max_abs, std::abs(x));
    CHECK(max_abs <= bound);
    CHECK(max_abs > 0.0);
  };
  check_bound(params.embed_w.value, 2, cfg.d_model);
  check_bound(params.cls.value, 1, cfg.d_model);
  for (const auto& lp : params.layers) {
    check_bound(lp.wq.value, cfg.d_model, cfg.d_model);
    check_bound(lp.ff1_w.value, cfg.d_model, cfg.ffn_dim);
    check_bound(lp.ff2_w.value, cfg.ffn_dim, cfg.d_model);
  }
  check_bound(params.head1_w.value, cfg.d_model, cfg.head_dim1);
  check_bound(params.out_w.value, cfg.head_dim2, 1);
  for (double x : params.pos.value.data()) CHECK(x == 0.0);
  for (double x : params.cue_type.value.data()) CHECK(x == 0.0);
  for (double x : params.embed_b.value.data()) CHECK(x == 0.0);
}

TEST_CASE("embed_tokens: zero embedding weights leave only positional terms") {
  ModelParams params = init_model(small_config());
  params.embed_w.value.zero();
  params.embed_b.value.zero();
  Rng rng(3);
  for (double& x : params.pos.value.data()) x = rng.uniform(-1.0, 1.0);
  for (double& x : params.cue_type.value.data()) x = rng.uniform(-1.0, 1.0);

  CueTokenSet tokens = random_tokens(rng);
  const Matrix x = embed_tokens(tokens, params);
  CHECK(x.rows() == 6);
  CHECK(x.cols() == params.config.d_model);
  for (int i = 0; i < kNumCues; ++i) {
    for (int j = 0; j < params.config.d_model; ++j) {
      CHECK(x(1 + i, j) ==
            doctest::Approx(params.pos.value(i, j) + params.cue_type.value(i, j)).epsilon(1e-12));
    }
  }
  for (int j = 0; j < params.config.d_model; ++j) {
    CHECK(x(0, j) == params.cls.value(0, j));
  }
}

TEST_CASE("embed_tokens: linear in the token value") {
  const ModelParams params = init_model(small_config());
  Rng rng(4);
  CueTokenSet tokens = random_tokens(rng);
  CueTokenSet doubled = tokens;
  const double delta = 0.25;
  doubled.tokens[2].v += delta;
  const Matrix x0 = embed_tokens(tokens, params);
  const Matrix x1 = embed_tokens(doubled, params);
  for (int j = 0; j < params.config.d_model; ++j) {
    const double expected = delta * params.embed_w.value(0, j);
    CHECK(x1(3, j) - x0(3, j) == doctest::Approx(expected).epsilon(1e-10));
  }
  // every other row untouched
  for (int i = 0; i < 6; ++i) {
    if (i == 3) continue;
    for (int j = 0; j < params.config.d_model; ++j) CHECK(x0(i, j) == x1(i, j));
  }
}

TEST_CASE("encode: attention rows sum to one and output has the input shape") {
  const ModelParams params = init_model(small_config());
  Rng rng(5);
  const Matrix x = embed_tokens(random_tokens(rng), params);
  AttentionMaps maps;
  const Matrix z = encode(x, params, &maps);
  CHECK(z.rows() == 6);
  CHECK(z.cols() == params.config.d_model);
  REQUIRE(maps.size() == static_cast<std::size_t>(params.config.n_layers));
  for (const auto& layer : maps) {
    REQUIRE(layer.size() == static_cast<std::size_t>(params.config.n_heads));
    for (const auto& head : layer) {
      for (int i = 0; i < 6; ++i) {
        double sum = 0.0;
        for (int j = 0; j < 6; ++j) sum += head(i, j);
        CHECK(std::abs(sum - 1.0) <= 1e-10);
      }
    }
  }
}

TEST_CASE("encode: identical tokens produce identical cue rows") {
  ModelParams params = init_model(small_config());
  params.pos.value.zero();
  params.cue_type.value.zero();
  CueTokenSet tokens;
  for (auto& t : tokens.tokens) t = {0.42, 0.77};
  const Matrix z = encode(embed_tokens(tokens, params), params);
  for (int i = 2; i <= kNumCues; ++i) {
    for (int j = 0; j < params.config.d_model; ++j) {
      CHECK(std::abs(z(i, j) - z(1, j)) < 1e-10);
    }
  }
}

TEST_CASE("predict: output ranges, band consistency, and train-mode rejection") {
  const ModelParams params = init_model(small_config());
  Rng rng(6);
  for (int trial = 0; trial < 25; ++trial) {
    const RiskPrediction pred = predict(random_tokens(rng), params);
    CHECK(pred.normalized > 0.0);
    CHECK(pred.normalized < 1.0);
    CHECK(pred.score > 0.0);
    CHECK(pred.score < 10.0);
    CHECK(pred.band == quantize(pred.score));
  }
  CHECK_THROWS_AS(predict(random_tokens(rng), params, Mode::Train), ValidationError);
}

TEST_CASE("predict: zeroed head with zero output bias scores exactly 5") {
  ModelParams params = init_model(small_config());
  params.head1_w.value.zero();
  params.head1_b.value.zero();
  params.head2_w.value.zero();
  params.head2_b.value.zero();
  params.out_w.value.zero();
  params.out_b.value.zero();
  Rng rng(7);
  const RiskPrediction pred = predict(random_tokens(rng), params);
  CHECK(pred.normalized == 0.5);
  CHECK(pred.score == 5.0);
  CHECK(pred.band == RiskBand::Medium);
}

TEST_CASE("predict: CLS path alone still yields a finite score") {
  ModelParams params = init_model(small_config());
  params.pos.value.zero();
  params.cue_type.value.zero();
  CueTokenSet zero_tokens;  // all v = c = 0 with zero embeddings
  params.embed_b.value.zero();
  const RiskPrediction pred = predict(zero_tokens, params);
  CHECK(std::isfinite(pred.score));
  CHECK(pred.score > 0.0);
  CHECK(pred.score < 10.0);
}

TEST_CASE("predict_batch matches single-scene predictions bit for bit") {
  const ModelParams params = init_model(small_config());
  Rng rng(8);
  std::vector<CueTokenSet> scenes;
  for (int i = 0; i < 9; ++i) scenes.push_back(random_tokens(rng));
  const std::vector<double> batched = predict_batch(scenes, params);
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    CHECK(batched[i] == predict(scenes[i], params).normalized);
  }
}

TEST_CASE("loss_and_grads: exact targets give zero loss and zero gradients") {
  ModelParams params = init_model(small_config());
  Rng rng(9);
  std::vector<CueTokenSet> batch;
  for (int i = 0; i < 4; ++i) batch.push_back(random_tokens(rng));
  const std::vector<double> targets = predict_batch(batch, params);
  params.zero_grads();
  const double loss = loss_and_grads(batch, targets, params, Mode::Eval);
  CHECK(loss == doctest::Approx(0.0).epsilon(1e-15));
  params.for_each_param([](const std::string&, ParamTensor& t) {
    for (double g : t.grad.data()) CHECK(std::abs(g) < 1e-12);
  });
}

TEST_CASE("loss_and_grads: loss is non-negative and deterministic") {
  const ModelConfig cfg = small_config();
  Rng rng(10);
  std::vector<CueTokenSet> batch;
  std::vector<double> targets;
  for (int i = 0; i < 6; ++i) {
    batch.push_back(random_tokens(rng));
    targets.push_back(rng.uniform());
  }
  ModelParams a = init_model(cfg);
  ModelParams b = init_model(cfg);
  const double loss_a = loss_and_grads(batch, targets, a, Mode::Train);
  const double loss_b = loss_and_grads(batch, targets, b, Mode::Train);
  CHECK(loss_a >= 0.0);
  CHECK(loss_a == loss_b);
  bool grads_equal = true;
  a.for_each_param([&](const std::string& name, ParamTensor& ta) {
    b.for_each_param([&](const std::string& name_b, ParamTensor& tb) {
      if (name == name_b && ta.grad.data() != tb.grad.data()) grads_equal = false;
    });
  });
  CHECK(grads_equal);
}

TEST_CASE("loss_and_grads: full-model gradients pass the finite-difference check") {
  ModelConfig cfg = small_config();
  ModelParams params = init_model(cfg);
  Rng rng(11);
  std::vector<CueTokenSet> batch;
  std::vector<double> targets;
  for (int i = 0; i < 4; ++i) {
    batch.push_back(random_tokens(rng));
    targets.push_back(rng.uniform(0.1, 0.9));
  }

  params.zero_grads();
  loss_and_grads(batch, targets, params, Mode::Eval);

  std::vector<std::pair<std::string, ParamTensor*>> tensors;
  std::vector<Matrix> analytic;
  params.for_each_param([&](const std::string& name, ParamTensor& t) {
    tensors.emplace_back(name, &t);
    analytic.push_back(t.grad);
  });
  auto f = [&]() { return batch_loss_eval(batch, targets, params); };
  const GradCheckResult result = finite_diff_check(f, tensors, analytic);
  INFO("max relative error ", result.max_rel_error);
  CHECK(result.max_rel_error < 1e-4);
}

TEST_CASE("checkpoint: save/load/save round-trips byte-identically") {
  ModelParams params = init_model(small_config());
  // make the bn stats non-trivial so they are exercised by the round trip
  Rng rng(12);
  std::vector<CueTokenSet> batch;
  std::vector<double> targets;
  for (int i = 0; i < 8; ++i) {
    batch.push_back(random_tokens(rng));
    targets.push_back(rng.uniform());
  }
  loss_and_grads(batch, targets, params, Mode::Train);

  const auto path_a = temp_file("dusev_ckpt_a.json");
  const auto path_b = temp_file("dusev_ckpt_b.json");
  save_checkpoint(params, path_a.string());
  const ModelParams loaded = load_checkpoint(path_a.string());
  save_checkpoint(loaded, path_b.string());

  std::ifstream fa(path_a, std::ios::binary), fb(path_b, std::ios::binary);
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(params_equal(params, loaded));
  std::filesystem::remove(path_a);
  std::filesystem::remove(path_b);
}

TEST_CASE("checkpoint: version, truncation, and shape errors are distinct") {
  ModelParams params = init_model(small_config());
  const auto path = temp_file("dusev_ckpt_err.json");
  save_checkpoint(params, path.string());

  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  in.close();
  const std::string original = buf.str();

  SUBCASE("version mismatch") {
    std::string tampered = original;
    const auto pos = tampered.find("dusev-ckpt-1");
    REQUIRE(pos != std::string::npos);
    tampered.replace(pos, 12, "dusev-ckpt-0");
    std::ofstream out(path, std::ios::binary);
    out << tampered;
    out.close();
    CHECK_THROWS_AS(load_checkpoint(path.string()), CheckpointVersionError);
  }
  SUBCASE("truncated file") {
    std::ofstream out(path, std::ios::binary);
    out << original.substr(0, original.size() / 2);
    out.close();
    CHECK_THROWS_AS(load_checkpoint(path.string()), CheckpointParseError);
  }
  SUBCASE("config/tensor shape inconsistency") {
    std::string tampered = original;
    const auto pos = tampered.find("\"d_model\":16");
    REQUIRE(pos != std::string::npos);
    tampered.replace(pos, 12, "\"d_model\":32");
    std::ofstream out(path, std::ios::binary);
    out << tampered;
    out.close();
    CHECK_THROWS_AS(load_checkpoint(path.string()), ShapeError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/dusev.json"), IoError);
  }
  std::filesystem::remove(path);
}
