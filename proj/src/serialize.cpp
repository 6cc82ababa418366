#include "tloc/serialize.hpp"

#include <fstream>
#include <functional>
#include <unordered_set>

namespace tloc {

using nlohmann::json;

namespace {

// Pulls known keys out of j, complaining about anything left over.
class StrictReader {
 public:
  explicit StrictReader(const json& j) : j_(j) {
    if (!j.is_object()) throw UsageError("config must be a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw UsageError(std::string("config key \"") + key + "\" has the wrong type");
    }
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw UsageError("unknown config key: " + key);
  }

 private:
  const json& j_;
  std::unordered_set<std::string> seen_;
};

}  // namespace

json to_json(const TrainConfig& cfg) {
  return json{{"variant", variant_name(cfg.variant)},
              {"alpha", cfg.alpha},
              {"beta", cfg.beta},
              {"learning_rate", cfg.learning_rate},
              {"batch_size", cfg.batch_size},
              {"epochs", cfg.epochs},
              {"h", cfg.h},
              {"k", cfg.k},
              {"d_r", cfg.d_r},
              {"d_w", cfg.d_w},
              {"dropout", cfg.dropout},
              {"clips", cfg.clips},
              {"seed", cfg.seed},
              {"clip_norm", cfg.clip_norm},
              {"precision", cfg.precision}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig cfg;
  StrictReader r(j);
  std::string variant = variant_name(cfg.variant);
  r.get("variant", variant);
  cfg.variant = parse_variant(variant);
  r.get("alpha", cfg.alpha);
  r.get("beta", cfg.beta);
  r.get("learning_rate", cfg.learning_rate);
  r.get("batch_size", cfg.batch_size);
  r.get("epochs", cfg.epochs);
  r.get("h", cfg.h);
  r.get("k", cfg.k);
  r.get("d_r", cfg.d_r);
  r.get("d_w", cfg.d_w);
  r.get("dropout", cfg.dropout);
  r.get("clips", cfg.clips);
  r.get("seed", cfg.seed);
  r.get("clip_norm", cfg.clip_norm);
  r.get("precision", cfg.precision);
  r.finish();
  cfg.validate();
  return cfg;
}

json to_json(const SynthConfig& cfg) {
  return json{{"clips", cfg.clips},
              {"feature_dim", cfg.feature_dim},
              {"concepts", cfg.concepts},
              {"signal_strength", cfg.signal_strength},
              {"noise_scale", cfg.noise_scale},
              {"sentence_min", cfg.sentence_min},
              {"sentence_max", cfg.sentence_max},
              {"train_count", cfg.train_count},
              {"val_count", cfg.val_count},
              {"test_count", cfg.test_count},
              {"duration_min", cfg.duration_min},
              {"duration_max", cfg.duration_max},
              {"seed", cfg.seed}};
}

SynthConfig synth_config_from_json(const json& j) {
  SynthConfig cfg;
  StrictReader r(j);
  r.get("clips", cfg.clips);
  r.get("feature_dim", cfg.feature_dim);
  r.get("concepts", cfg.concepts);
  r.get("signal_strength", cfg.signal_strength);
  r.get("noise_scale", cfg.noise_scale);
  r.get("sentence_min", cfg.sentence_min);
  r.get("sentence_max", cfg.sentence_max);
  r.get("train_count", cfg.train_count);
  r.get("val_count", cfg.val_count);
  r.get("test_count", cfg.test_count);
  r.get("duration_min", cfg.duration_min);
  r.get("duration_max", cfg.duration_max);
  r.get("seed", cfg.seed);
  r.finish();
  cfg.validate();
  return cfg;
}

json to_json(const ScanConfig& cfg) {
  return json{{"window_lengths", cfg.window_lengths}, {"stride", cfg.stride}};
}

ScanConfig scan_config_from_json(const json& j) {
  ScanConfig cfg;
  StrictReader r(j);
  r.get("window_lengths", cfg.window_lengths);
  r.get("stride", cfg.stride);
  r.finish();
  cfg.validate();
  return cfg;
}

json to_json(const ModelDims& dims) {
  return json{{"h", dims.h},     {"k", dims.k}, {"d_r", dims.d_r},    {"d_w", dims.d_w},
              {"d_v", dims.d_v}, {"M", dims.M}, {"vocab", dims.vocab}};
}

ModelDims dims_from_json(const json& j) {
  ModelDims dims;
  StrictReader r(j);
  r.get("h", dims.h);
  r.get("k", dims.k);
  r.get("d_r", dims.d_r);
  r.get("d_w", dims.d_w);
  r.get("d_v", dims.d_v);
  r.get("M", dims.M);
  r.get("vocab", dims.vocab);
  r.finish();
  dims.validate();
  return dims;
}

json to_json(const EpochRecord& rec) {
  return json{{"epoch", rec.epoch},
              {"l_reg", rec.l_reg},
              {"l_cal", rec.l_cal},
              {"total", rec.total},
              {"val_miou", rec.val_miou}};
}

EpochRecord epoch_record_from_json(const json& j) {
  EpochRecord rec;
  StrictReader r(j);
  r.get("epoch", rec.epoch);
  r.get("l_reg", rec.l_reg);
  r.get("l_cal", rec.l_cal);
  r.get("total", rec.total);
  r.get("val_miou", rec.val_miou);
  r.finish();
  return rec;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read file: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw IoError("malformed JSON in " + path);
  return j;
}

}  // namespace tloc
