#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tloc/data.hpp"
#include "tloc/model.hpp"
#include "tloc/params.hpp"

namespace tloc {

struct TrainConfig {
  Variant variant = Variant::kFullAw;
  double alpha = 1.0;
  double beta = 5.0;
  double learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 50;
  std::int64_t h = 64;
  std::int64_t k = 64;
  std::int64_t d_r = 64;
  std::int64_t d_w = 50;
  double dropout = 0.5;
  std::int64_t clips = 32;  // M; must match the corpus
  std::uint64_t seed = 1;
  double clip_norm = 5.0;   // gradient norm bound; <= 0 disables
  std::string precision = "f32";

  void validate() const;
  // Applies variant rules (reg-* runs with beta = 0).
  TrainConfig resolved() const;
};

struct EpochRecord {
  int epoch = 0;
  double l_reg = 0.0;    // mean per sample over the epoch
  double l_cal = 0.0;
  double total = 0.0;    // alpha * l_reg + beta * l_cal
  double val_miou = 0.0;
};

struct Checkpoint {
  ParamSet<float> params;
  TrainConfig config;      // resolved
  ModelDims dims;
  int epoch = 0;           // epoch whose parameters these are (best validation)
  std::vector<EpochRecord> history;

  // Structured refusal when a caller expects a different variant.
  void expect_variant(Variant v) const;
};

ModelDims dims_for(const TrainConfig& cfg, const Corpus& corpus);

// Mini-batch Adam training of the variant's full graph; per-epoch records go
// to `log` as line-delimited JSON when provided.  Returns the best-validation
// checkpoint.  Non-finite loss aborts with an error naming epoch and batch.
Checkpoint train(const Corpus& corpus, const TrainConfig& config, std::ostream* log = nullptr);

Prediction predict_sample(const Checkpoint& ckpt, const Sample& sample);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace tloc
