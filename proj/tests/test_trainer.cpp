#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "tloc/data.hpp"
#include "tloc/optim.hpp"
#include "tloc/runtime.hpp"
#include "tloc/trainer.hpp"

using namespace tloc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("tloc_train_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

SynthConfig tiny_corpus_config() {
  SynthConfig cfg;
  cfg.clips = 8;
  cfg.feature_dim = 6;
  cfg.concepts = 4;
  cfg.train_count = 48;
  cfg.val_count = 16;
  cfg.test_count = 16;
  cfg.seed = 11;
  return cfg;
}

TrainConfig tiny_train_config() {
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 16;
  cfg.h = 10;
  cfg.k = 10;
  cfg.d_r = 10;
  cfg.d_w = 8;
  cfg.clips = 8;
  cfg.seed = 1;
  return cfg;
}

bool params_equal(const ParamSet<float>& a, const ParamSet<float>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.name(i) != b.name(i)) return false;
    if (!(a.value(i).shape() == b.value(i).shape())) return false;
    for (std::int64_t j = 0; j < a.value(i).numel(); ++j)
      if (a.value(i)[j] != b.value(i)[j]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("gradient clipping") {
  std::vector<double> v = {3.0, 4.0};  // norm 5
  const double pre = clip_global_norm(std::span<double>(v), 2.5);
  CHECK(pre == doctest::Approx(5.0));
  CHECK(global_norm(std::span<const double>(v)) == doctest::Approx(2.5));

  std::vector<double> small = {0.3, 0.4};
  clip_global_norm(std::span<double>(small), 2.5);
  CHECK(small[0] == doctest::Approx(0.3));

  // max_norm <= 0 disables clipping.
  std::vector<double> keep = {30.0, 40.0};
  clip_global_norm(std::span<double>(keep), 0.0);
  CHECK(keep[0] == 30.0);
}

TEST_CASE("Adam leaves parameters untouched under zero gradients") {
  ParamSet<double> params;
  params.add("w", TensorD(Shape::vec(3), {1.0, -2.0, 3.0}));
  FlatLayout<double> layout(params);
  Adam<double> adam(layout.total, 0.1);
  std::vector<double> zero(static_cast<std::size_t>(layout.total), 0.0);
  adam.step(params, layout, std::span<const double>(zero));
  CHECK(adam.steps_taken() == 1);
  CHECK(params.at("w")[0] == 1.0);
  CHECK(params.at("w")[1] == -2.0);
  CHECK(params.at("w")[2] == 3.0);
}

TEST_CASE("Adam first step moves by roughly the learning rate against the gradient sign") {
  ParamSet<double> params;
  params.add("w", TensorD(Shape::vec(2), {0.0, 0.0}));
  FlatLayout<double> layout(params);
  Adam<double> adam(layout.total, 0.05);
  std::vector<double> grad = {0.7, -1.3};
  adam.step(params, layout, std::span<const double>(grad));
  CHECK(params.at("w")[0] == doctest::Approx(-0.05).epsilon(1e-4));
  CHECK(params.at("w")[1] == doctest::Approx(0.05).epsilon(1e-4));
}

TEST_CASE("Adam converges on a quadratic") {
  ParamSet<double> params;
  params.add("w", TensorD(Shape::vec(1), {5.0}));
  FlatLayout<double> layout(params);
  Adam<double> adam(layout.total, 0.3);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> grad = {2.0 * params.at("w")[0]};
    adam.step(params, layout, std::span<const double>(grad));
  }
  CHECK(std::abs(params.at("w")[0]) < 1e-2);
}

TEST_CASE("train config validation and variant resolution") {
  TrainConfig cfg = tiny_train_config();
  cfg.variant = Variant::kRegAf;
  TrainConfig resolved = cfg.resolved();
  CHECK(resolved.beta == 0.0);
  cfg.variant = Variant::kFullAw;
  CHECK(cfg.resolved().beta == 5.0);

  TrainConfig bad = tiny_train_config();
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = tiny_train_config();
  bad.learning_rate = -1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = tiny_train_config();
  bad.precision = "f16";
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = tiny_train_config();
  bad.dropout = 1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("corpus and config dimensions must agree") {
  Corpus corpus = generate_corpus(tiny_corpus_config());
  TrainConfig cfg = tiny_train_config();
  cfg.clips = 16;  // corpus has 8
  CHECK_THROWS_AS((void)dims_for(cfg, corpus), ValidationError);
  cfg.clips = 8;
  ModelDims dims = dims_for(cfg, corpus);
  CHECK(dims.M == 8);
  CHECK(dims.d_v == 6);
  CHECK(dims.vocab == corpus.vocab.size());
}

TEST_CASE("training runs, logs epochs, and is seed deterministic") {
  Corpus corpus = generate_corpus(tiny_corpus_config());
  TrainConfig cfg = tiny_train_config();

  std::ostringstream log_a;
  Checkpoint a = train(corpus, cfg, &log_a);
  Checkpoint b = train(corpus, cfg);
  CHECK(params_equal(a.params, b.params));
  REQUIRE(a.history.size() == 2);
  CHECK(a.history[0].epoch == 1);
  CHECK(a.epoch >= 1);
  CHECK(a.config.variant == Variant::kFullAw);

  // Two log lines, each parseable and carrying the loss fields.
  std::istringstream lines(log_a.str());
  int count = 0;
  for (std::string line; std::getline(lines, line);) {
    ++count;
    CHECK(line.find("\"epoch\"") != std::string::npos);
    CHECK(line.find("\"val_miou\"") != std::string::npos);
  }
  CHECK(count == 2);

  // A different seed changes the outcome.
  TrainConfig other = cfg;
  other.seed = 2;
  Checkpoint c = train(corpus, other);
  CHECK_FALSE(params_equal(a.params, c.params));
}

TEST_CASE("training is deterministic across worker thread counts") {
  Corpus corpus = generate_corpus(tiny_corpus_config());
  TrainConfig cfg = tiny_train_config();
  cfg.epochs = 1;

  const int old = runtime::threads();
  runtime::set_threads(1);
  Checkpoint serial = train(corpus, cfg);
  runtime::set_threads(4);
  Checkpoint parallel = train(corpus, cfg);
  runtime::set_threads(old);
  CHECK(params_equal(serial.params, parallel.params));
  CHECK(serial.history[0].total == parallel.history[0].total);
  CHECK(serial.history[0].val_miou == parallel.history[0].val_miou);
}

TEST_CASE("beta zero trains without calibration updates but still reports the term") {
  Corpus corpus = generate_corpus(tiny_corpus_config());
  TrainConfig cfg = tiny_train_config();
  cfg.variant = Variant::kRegAw;
  Checkpoint ckpt = train(corpus, cfg);
  CHECK(ckpt.config.beta == 0.0);
  // l_cal is recorded even though it does not drive updates.
  CHECK(ckpt.history[0].l_cal > 0.0);
  CHECK(ckpt.history[0].total == doctest::Approx(ckpt.history[0].l_reg).epsilon(1e-12));
}

TEST_CASE("64-bit training path works") {
  Corpus corpus = generate_corpus(tiny_corpus_config());
  TrainConfig cfg = tiny_train_config();
  cfg.epochs = 1;
  cfg.precision = "f64";
  Checkpoint ckpt = train(corpus, cfg);
  CHECK(ckpt.history.size() == 1);
  CHECK(std::isfinite(ckpt.history[0].total));
}

TEST_CASE("ablp trains on calibration alone and predicts from attention") {
  Corpus corpus = generate_corpus(tiny_corpus_config());
  TrainConfig cfg = tiny_train_config();
  cfg.variant = Variant::kAblp;
  Checkpoint ckpt = train(corpus, cfg);
  CHECK(ckpt.history[0].l_reg == 0.0);
  CHECK(ckpt.history[0].l_cal > 0.0);
  Prediction p = predict_sample(ckpt, corpus.test[0]);
  CHECK(p.span.valid());
}

TEST_CASE("prediction from a checkpoint is deterministic") {
  Corpus corpus = generate_corpus(tiny_corpus_config());
  TrainConfig cfg = tiny_train_config();
  cfg.epochs = 1;
  Checkpoint ckpt = train(corpus, cfg);
  Prediction p1 = predict_sample(ckpt, corpus.test[0]);
  Prediction p2 = predict_sample(ckpt, corpus.test[0]);
  CHECK(p1.span == p2.span);
  CHECK(p1.raw == p2.raw);
}

TEST_CASE("checkpoint round trip is bitwise exact") {
  Corpus corpus = generate_corpus(tiny_corpus_config());
  TrainConfig cfg = tiny_train_config();
  cfg.epochs = 1;
  Checkpoint ckpt = train(corpus, cfg);

  TempDir dir("ckpt");
  const std::string path = (dir.path / "model.bin").string();
  save_checkpoint(ckpt, path);
  Checkpoint loaded = load_checkpoint(path);

  CHECK(params_equal(ckpt.params, loaded.params));
  CHECK(loaded.config.variant == ckpt.config.variant);
  CHECK(loaded.config.seed == ckpt.config.seed);
  CHECK(loaded.dims.M == ckpt.dims.M);
  CHECK(loaded.epoch == ckpt.epoch);
  REQUIRE(loaded.history.size() == ckpt.history.size());
  CHECK(loaded.history[0].total == ckpt.history[0].total);

  // Identical predictions after the round trip.
  Prediction a = predict_sample(ckpt, corpus.test[1]);
  Prediction b = predict_sample(loaded, corpus.test[1]);
  CHECK(a.span == b.span);
  CHECK(a.raw == b.raw);

  // Saving the loaded checkpoint reproduces the file byte for byte.
  const std::string path2 = (dir.path / "model2.bin").string();
  save_checkpoint(loaded, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string bytes1((std::istreambuf_iterator<char>(f1)), {});
  std::string bytes2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(bytes1 == bytes2);
}

TEST_CASE("corrupted checkpoints are rejected") {
  Corpus corpus = generate_corpus(tiny_corpus_config());
  TrainConfig cfg = tiny_train_config();
  cfg.epochs = 1;
  Checkpoint ckpt = train(corpus, cfg);
  TempDir dir("corrupt");
  const std::string path = (dir.path / "model.bin").string();
  save_checkpoint(ckpt, path);

  auto slurp_bytes = [&](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };

  SUBCASE("bad magic") {
    std::string bytes = slurp_bytes(path);
    bytes[0] = 'X';
    std::ofstream(path, std::ios::binary | std::ios::trunc) << bytes;
    CHECK_THROWS_AS((void)load_checkpoint(path), ValidationError);
  }

  SUBCASE("tampered shape") {
    std::string bytes = slurp_bytes(path);
    // venc.fwd.W_i is [h x (d_v + h)] = [10 x 16]; transpose it in the header.
    const std::string needle = "\"shape\":[10,16]";
    auto pos = bytes.find(needle);
    REQUIRE(pos != std::string::npos);
    bytes.replace(pos, needle.size(), "\"shape\":[16,10]");
    std::ofstream(path, std::ios::binary | std::ios::trunc) << bytes;
    CHECK_THROWS((void)load_checkpoint(path));
  }

  SUBCASE("truncated payload") {
    std::string bytes = slurp_bytes(path);
    std::ofstream(path, std::ios::binary | std::ios::trunc) << bytes.substr(0, bytes.size() - 64);
    CHECK_THROWS_AS((void)load_checkpoint(path), ValidationError);
  }

  SUBCASE("trailing garbage") {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out << "extra";
    out.close();
    CHECK_THROWS_AS((void)load_checkpoint(path), ValidationError);
  }
}

TEST_CASE("checkpoints refuse a mismatched variant") {
  Corpus corpus = generate_corpus(tiny_corpus_config());
  TrainConfig cfg = tiny_train_config();
  cfg.epochs = 1;
  cfg.variant = Variant::kFullAw;
  Checkpoint ckpt = train(corpus, cfg);
  CHECK_NOTHROW(ckpt.expect_variant(Variant::kFullAw));
  CHECK_THROWS_AS(ckpt.expect_variant(Variant::kFullAf), UsageError);
}

TEST_CASE("training loss decreases on the planted corpus") {
  SynthConfig scfg = tiny_corpus_config();
  scfg.train_count = 96;
  Corpus corpus = generate_corpus(scfg);
  TrainConfig cfg = tiny_train_config();
  cfg.epochs = 5;
  cfg.dropout = 0.0;  // keep the per-epoch loss comparable across epochs
  int improved_seeds = 0;
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    cfg.seed = seed;
    Checkpoint ckpt = train(corpus, cfg);
    REQUIRE(ckpt.history.size() == 5);
    const bool improved = ckpt.history.back().total < ckpt.history.front().total;
    improved_seeds += improved ? 1 : 0;
  }
  CHECK(improved_seeds >= 4);
}
