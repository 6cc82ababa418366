#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "tloc/benchmark.hpp"
#include "tloc/metrics.hpp"
#include "tloc/serialize.hpp"
#include "tloc/trainer.hpp"

using namespace tloc;

TEST_CASE("enumerate_windows covers expected starts") {
  ScanConfig cfg;
  cfg.window_lengths = {4};
  cfg.stride = 2;
  const auto w = enumerate_windows(8, cfg);
  REQUIRE(w.size() == 3);
  CHECK(w[0] == ClipWindow{0, 4});
  CHECK(w[1] == ClipWindow{2, 6});
  CHECK(w[2] == ClipWindow{4, 8});
}

TEST_CASE("enumerate_windows with single full-length window") {
  ScanConfig cfg;
  cfg.window_lengths = {4};
  cfg.stride = 1;
  const auto w = enumerate_windows(4, cfg);
  REQUIRE(w.size() == 1);
  CHECK(w[0] == ClipWindow{0, 4});
}

TEST_CASE("enumerate_windows counts at scan scale") {
  ScanConfig cfg;
  cfg.window_lengths = {16, 32, 64};
  cfg.stride = 8;
  // per length: floor((256 - len) / 8) + 1 = 31, 29, 25
  CHECK(enumerate_windows(256, cfg).size() == 85);
}

TEST_CASE("enumerate_windows drops lengths longer than the video") {
  ScanConfig cfg;
  cfg.window_lengths = {4, 16};
  cfg.stride = 4;
  const auto w = enumerate_windows(8, cfg);
  REQUIRE(w.size() == 2);
  CHECK(w[0] == ClipWindow{0, 4});
  CHECK(w[1] == ClipWindow{4, 8});
}

TEST_CASE("scan config validation") {
  ScanConfig cfg;
  cfg.window_lengths = {};
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.window_lengths = {4, 0};
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.window_lengths = {4};
  cfg.stride = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.stride = 1;
  CHECK_NOTHROW(cfg.validate());
}

namespace {

SynthConfig tiny_synth() {
  SynthConfig cfg;
  cfg.clips = 8;
  cfg.feature_dim = 6;
  cfg.concepts = 4;
  cfg.train_count = 6;
  cfg.val_count = 4;
  cfg.test_count = 4;
  cfg.seed = 17;
  return cfg;
}

ModelDims tiny_dims(const Corpus& corpus) {
  TrainConfig cfg;
  cfg.h = 6;
  cfg.k = 5;
  cfg.d_r = 4;
  cfg.d_w = 5;
  cfg.clips = 8;
  return dims_for(cfg, corpus);
}

}  // namespace

TEST_CASE("init_scan_weights is seed deterministic") {
  const Corpus corpus = generate_corpus(tiny_synth());
  const ModelDims dims = tiny_dims(corpus);
  const ScanWeights a = init_scan_weights(dims, 5);
  const ScanWeights b = init_scan_weights(dims, 5);
  const ScanWeights c = init_scan_weights(dims, 6);
  REQUIRE(a.embed.numel() == b.embed.numel());
  bool equal = true, differs = false;
  for (std::int64_t i = 0; i < a.embed.numel(); ++i) {
    if (a.embed.data()[i] != b.embed.data()[i]) equal = false;
    if (a.embed.data()[i] != c.embed.data()[i]) differs = true;
  }
  CHECK(equal);
  CHECK(differs);
  CHECK(a.score_v.rows() == dims.h);
  CHECK(a.embed.cols() == dims.vocab);
}

TEST_CASE("scan_localize returns the only candidate when one window fits") {
  const Corpus corpus = generate_corpus(tiny_synth());
  const ScanWeights w = init_scan_weights(tiny_dims(corpus), 2);
  ScanConfig cfg;
  cfg.window_lengths = {8};
  cfg.stride = 1;
  const TemporalSpan span = scan_localize(corpus.test[0], w, cfg);
  CHECK(span.start == doctest::Approx(0.0));
  CHECK(span.end == doctest::Approx(1.0));
}

TEST_CASE("scan_localize is deterministic and lands on a window boundary") {
  const Corpus corpus = generate_corpus(tiny_synth());
  const ScanWeights w = init_scan_weights(tiny_dims(corpus), 3);
  ScanConfig cfg;
  cfg.window_lengths = {2, 4};
  cfg.stride = 1;
  const Sample& s = corpus.test[1];
  const TemporalSpan a = scan_localize(s, w, cfg);
  const TemporalSpan b = scan_localize(s, w, cfg);
  CHECK(a.start == b.start);
  CHECK(a.end == b.end);
  bool matched = false;
  for (const ClipWindow& win : enumerate_windows(8, cfg)) {
    if (std::abs(a.start - win.begin / 8.0) < 1e-12 && std::abs(a.end - win.end / 8.0) < 1e-12)
      matched = true;
  }
  CHECK(matched);
}

TEST_CASE("scan_localize rejects videos no window fits") {
  const Corpus corpus = generate_corpus(tiny_synth());
  const ScanWeights w = init_scan_weights(tiny_dims(corpus), 2);
  ScanConfig cfg;
  cfg.window_lengths = {64};
  CHECK_THROWS_AS((void)scan_localize(corpus.test[0], w, cfg), UsageError);
}

TEST_CASE("oracle scan checks the concept index") {
  const Corpus corpus = generate_corpus(tiny_synth());
  TensorF embeddings(Shape::mat(6, 4));
  ScanConfig cfg;
  cfg.window_lengths = {2, 4};
  CHECK_THROWS_AS((void)scan_localize_oracle(corpus.test[0], embeddings, 9, cfg), UsageError);
  CHECK_THROWS_AS((void)scan_localize_oracle(corpus.test[0], embeddings, -1, cfg), UsageError);
}

TEST_CASE("evaluate on perfect predictions") {
  std::vector<TemporalSpan> gts = {{0.1, 0.4}, {0.5, 0.9}, {0.0, 1.0}};
  const EvalReport r = evaluate(gts, gts);
  CHECK(r.miou == doctest::Approx(1.0));
  REQUIRE(r.recall_at.size() == 3);
  for (const auto& [sigma, frac] : r.recall_at) {
    (void)sigma;
    CHECK(frac == doctest::Approx(1.0));
  }
  CHECK(r.count == 3);
}

TEST_CASE("evaluate on disjoint predictions") {
  std::vector<TemporalSpan> preds = {{0.0, 0.2}, {0.0, 0.1}};
  std::vector<TemporalSpan> gts = {{0.5, 0.9}, {0.8, 1.0}};
  const EvalReport r = evaluate(preds, gts);
  CHECK(r.miou == doctest::Approx(0.0));
  for (const auto& [sigma, frac] : r.recall_at) {
    (void)sigma;
    CHECK(frac == doctest::Approx(0.0));
  }
}

TEST_CASE("evaluate recall thresholds by hand") {
  // IoUs against (0, 1): 0.2, 0.4, 0.6
  std::vector<TemporalSpan> preds = {{0.0, 0.2}, {0.0, 0.4}, {0.0, 0.6}};
  std::vector<TemporalSpan> gts = {{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}};
  const EvalReport r = evaluate(preds, gts);
  CHECK(r.miou == doctest::Approx(0.4));
  CHECK(r.recall_at[0].second == doctest::Approx(1.0));        // sigma 0.1
  CHECK(r.recall_at[1].second == doctest::Approx(2.0 / 3.0));  // sigma 0.3
  CHECK(r.recall_at[2].second == doctest::Approx(1.0 / 3.0));  // sigma 0.5
}

TEST_CASE("recall requires iou strictly above sigma") {
  std::vector<TemporalSpan> preds = {{0.0, 0.5}};
  std::vector<TemporalSpan> gts = {{0.0, 1.0}};
  const EvalReport r = evaluate(preds, gts);
  CHECK(r.recall_at[2].first == doctest::Approx(0.5));
  CHECK(r.recall_at[2].second == doctest::Approx(0.0));
}

TEST_CASE("evaluate sorts sigmas ascending") {
  std::vector<TemporalSpan> preds = {{0.0, 0.45}};
  std::vector<TemporalSpan> gts = {{0.0, 1.0}};
  const EvalReport r = evaluate(preds, gts, {0.5, 0.1});
  REQUIRE(r.recall_at.size() == 2);
  CHECK(r.recall_at[0].first == doctest::Approx(0.1));
  CHECK(r.recall_at[1].first == doctest::Approx(0.5));
  CHECK(r.recall_at[0].second == doctest::Approx(1.0));
  CHECK(r.recall_at[1].second == doctest::Approx(0.0));
}

TEST_CASE("evaluate rejects mismatched or empty inputs") {
  std::vector<TemporalSpan> one = {{0.0, 0.5}};
  std::vector<TemporalSpan> two = {{0.0, 0.5}, {0.5, 1.0}};
  CHECK_THROWS_AS((void)evaluate(one, two), UsageError);
  CHECK_THROWS_AS((void)evaluate({}, {}), UsageError);
}

TEST_CASE("eval_table lists every metric") {
  std::vector<TemporalSpan> gts = {{0.2, 0.6}};
  const std::string table = eval_table(evaluate(gts, gts));
  CHECK(table.find("R@1,IoU@0.10") != std::string::npos);
  CHECK(table.find("R@1,IoU@0.30") != std::string::npos);
  CHECK(table.find("R@1,IoU@0.50") != std::string::npos);
  CHECK(table.find("mIoU") != std::string::npos);
  CHECK(table.find("samples") != std::string::npos);
  CHECK(table.find("1.0000") != std::string::npos);
}

TEST_CASE("train config json roundtrip") {
  TrainConfig cfg;
  cfg.variant = Variant::kStvAf;
  cfg.alpha = 2.5;
  cfg.beta = 0.25;
  cfg.learning_rate = 3e-4;
  cfg.batch_size = 12;
  cfg.epochs = 7;
  cfg.h = 20;
  cfg.k = 18;
  cfg.d_r = 16;
  cfg.d_w = 9;
  cfg.dropout = 0.25;
  cfg.clips = 24;
  cfg.seed = 99;
  cfg.clip_norm = 2.0;
  cfg.precision = "f64";
  const TrainConfig back = train_config_from_json(to_json(cfg));
  CHECK(back.variant == cfg.variant);
  CHECK(back.alpha == cfg.alpha);
  CHECK(back.beta == cfg.beta);
  CHECK(back.learning_rate == cfg.learning_rate);
  CHECK(back.batch_size == cfg.batch_size);
  CHECK(back.epochs == cfg.epochs);
  CHECK(back.h == cfg.h);
  CHECK(back.k == cfg.k);
  CHECK(back.d_r == cfg.d_r);
  CHECK(back.d_w == cfg.d_w);
  CHECK(back.dropout == cfg.dropout);
  CHECK(back.clips == cfg.clips);
  CHECK(back.seed == cfg.seed);
  CHECK(back.clip_norm == cfg.clip_norm);
  CHECK(back.precision == cfg.precision);
}

TEST_CASE("unknown config keys are named in the error") {
  nlohmann::json j = to_json(TrainConfig{});
  j.erase("learning_rate");
  j["learnig_rate"] = 0.001;
  try {
    (void)train_config_from_json(j);
    FAIL("expected UsageError");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("learnig_rate") != std::string::npos);
  }
}

TEST_CASE("wrongly typed config values are rejected") {
  nlohmann::json j = to_json(TrainConfig{});
  j["epochs"] = "ten";
  CHECK_THROWS_AS((void)train_config_from_json(j), UsageError);
  CHECK_THROWS_AS((void)train_config_from_json(nlohmann::json::array()), UsageError);
}

TEST_CASE("absent config keys fall back to defaults") {
  nlohmann::json j = nlohmann::json::object();
  j["epochs"] = 3;
  const TrainConfig cfg = train_config_from_json(j);
  CHECK(cfg.epochs == 3);
  CHECK(cfg.beta == doctest::Approx(5.0));
  CHECK(cfg.variant == Variant::kFullAw);
}

TEST_CASE("synth config json roundtrip") {
  SynthConfig cfg;
  cfg.clips = 12;
  cfg.feature_dim = 7;
  cfg.concepts = 5;
  cfg.signal_strength = 1.5;
  cfg.noise_scale = 0.5;
  cfg.sentence_min = 4;
  cfg.sentence_max = 6;
  cfg.train_count = 11;
  cfg.val_count = 3;
  cfg.test_count = 2;
  cfg.duration_min = 10.0;
  cfg.duration_max = 20.0;
  cfg.seed = 123;
  const SynthConfig back = synth_config_from_json(to_json(cfg));
  CHECK(back.clips == cfg.clips);
  CHECK(back.feature_dim == cfg.feature_dim);
  CHECK(back.concepts == cfg.concepts);
  CHECK(back.signal_strength == cfg.signal_strength);
  CHECK(back.noise_scale == cfg.noise_scale);
  CHECK(back.sentence_min == cfg.sentence_min);
  CHECK(back.sentence_max == cfg.sentence_max);
  CHECK(back.train_count == cfg.train_count);
  CHECK(back.val_count == cfg.val_count);
  CHECK(back.test_count == cfg.test_count);
  CHECK(back.duration_min == cfg.duration_min);
  CHECK(back.duration_max == cfg.duration_max);
  CHECK(back.seed == cfg.seed);
  nlohmann::json j = to_json(cfg);
  j["clipz"] = 4;
  CHECK_THROWS_AS((void)synth_config_from_json(j), UsageError);
}

TEST_CASE("scan config json roundtrip") {
  ScanConfig cfg;
  cfg.window_lengths = {2, 4, 8};
  cfg.stride = 3;
  const ScanConfig back = scan_config_from_json(to_json(cfg));
  CHECK(back.window_lengths == cfg.window_lengths);
  CHECK(back.stride == cfg.stride);
  nlohmann::json j = to_json(cfg);
  j["step"] = 2;
  CHECK_THROWS_AS((void)scan_config_from_json(j), UsageError);
}

TEST_CASE("model dims json roundtrip") {
  ModelDims dims;
  dims.h = 5;
  dims.k = 4;
  dims.d_r = 3;
  dims.d_w = 6;
  dims.d_v = 7;
  dims.M = 9;
  dims.vocab = 11;
  const ModelDims back = dims_from_json(to_json(dims));
  CHECK(back.h == dims.h);
  CHECK(back.k == dims.k);
  CHECK(back.d_r == dims.d_r);
  CHECK(back.d_w == dims.d_w);
  CHECK(back.d_v == dims.d_v);
  CHECK(back.M == dims.M);
  CHECK(back.vocab == dims.vocab);
}

TEST_CASE("epoch record json roundtrip") {
  EpochRecord rec;
  rec.epoch = 4;
  rec.l_reg = 0.125;
  rec.l_cal = 1.75;
  rec.total = 8.875;
  rec.val_miou = 0.5625;
  const EpochRecord back = epoch_record_from_json(to_json(rec));
  CHECK(back.epoch == rec.epoch);
  CHECK(back.l_reg == rec.l_reg);
  CHECK(back.l_cal == rec.l_cal);
  CHECK(back.total == rec.total);
  CHECK(back.val_miou == rec.val_miou);
}

TEST_CASE("time_methods validates the query budget") {
  const Corpus corpus = generate_corpus(tiny_synth());
  const ModelDims dims = tiny_dims(corpus);
  Checkpoint ckpt;
  ckpt.dims = dims;
  ckpt.config.h = dims.h;
  ckpt.config.k = dims.k;
  ckpt.config.d_r = dims.d_r;
  ckpt.config.d_w = dims.d_w;
  ckpt.config.clips = dims.M;
  ckpt.params = init_params(Variant::kFullAw, dims, 1);
  const ScanWeights w = init_scan_weights(dims, 1);
  ScanConfig scfg;
  scfg.window_lengths = {2, 4};
  CHECK_THROWS_AS((void)time_methods(ckpt, w, scfg, corpus.test, 50, 0), UsageError);
  CHECK_THROWS_AS((void)time_methods(ckpt, w, scfg, corpus.test, 0, 0), UsageError);
}

TEST_CASE("time_methods reports positive timings") {
  const Corpus corpus = generate_corpus(tiny_synth());
  const ModelDims dims = tiny_dims(corpus);
  Checkpoint ckpt;
  ckpt.dims = dims;
  ckpt.config.variant = Variant::kFullAw;
  ckpt.config.h = dims.h;
  ckpt.config.k = dims.k;
  ckpt.config.d_r = dims.d_r;
  ckpt.config.d_w = dims.d_w;
  ckpt.config.clips = dims.M;
  ckpt.params = init_params(Variant::kFullAw, dims, 1);
  const ScanWeights w = init_scan_weights(dims, 1);
  ScanConfig scfg;
  scfg.window_lengths = {2, 4};
  const TimingReport r = time_methods(ckpt, w, scfg, corpus.test, 3, 1);
  CHECK(r.queries == 3);
  CHECK(r.warmup == 1);
  CHECK(r.window_count == 12);  // lengths 2 and 4 over 8 clips, stride 1
  CHECK(r.ablr_mean > 0.0);
  CHECK(r.ablr_median > 0.0);
  CHECK(r.scan_mean > 0.0);
  CHECK(r.scan_median > 0.0);
  CHECK(r.speedup == doctest::Approx(r.scan_mean / r.ablr_mean));
}
