#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "tloc/span.hpp"
#include "tloc/tensor.hpp"

namespace tloc {

struct Sample {
  std::string video_id;
  double duration = 0.0;        // seconds
  TensorF clip_features;        // [d_v x M]
  std::vector<int> tokens;
  double gt_start = 0.0;        // seconds
  double gt_end = 0.0;          // seconds
  TemporalSpan gt_norm;         // gt seconds / duration
};

// Dense token ids; id 0 is reserved for unknown words.
class Vocabulary {
 public:
  Vocabulary() { add("<unk>"); }

  int add(const std::string& word);
  // 0 (<unk>) for out-of-vocabulary words.
  int id(const std::string& word) const;
  const std::string& word(int id) const;
  int size() const { return static_cast<int>(words_.size()); }

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

  bool operator==(const Vocabulary& o) const { return words_ == o.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

// Planted-interval corpus generator settings.  Each sample hides one concept
// signal inside a random span of its clip features; the sentence names the
// concept and a positional cue, so the span is recoverable from either
// modality.
struct SynthConfig {
  std::int64_t clips = 32;          // M
  std::int64_t feature_dim = 16;    // d_v
  int concepts = 12;
  double signal_strength = 2.0;
  double noise_scale = 1.0;
  int sentence_min = 5;
  int sentence_max = 10;
  int train_count = 2000;
  int val_count = 500;
  int test_count = 500;
  double duration_min = 30.0;
  double duration_max = 120.0;
  std::uint64_t seed = 7;

  void validate() const;
};

struct Corpus {
  Vocabulary vocab;
  std::vector<Sample> train, val, test;
};

const std::vector<Sample>& corpus_split(const Corpus& corpus, const std::string& name);

// Ground truth the corpus files do not carry: which concept was planted where,
// and the concept embeddings themselves.  Used by oracle tests and the
// recoverability check, never by the model.
struct SynthSidecar {
  TensorF concept_embeddings;  // [d_v x C], unit-norm columns
  std::vector<int> train_concept, val_concept, test_concept;
};

Corpus generate_corpus(const SynthConfig& cfg, SynthSidecar* sidecar = nullptr);

// Directory layout: vocab.txt plus one record-per-line file per split
// (train.jsonl, val.jsonl, test.jsonl).
void save_corpus(const Corpus& corpus, const std::string& dir);
Corpus load_corpus(const std::string& dir);

// Mean-pool T frame columns into M chronological clip groups of size
// floor(T/M) or ceil(T/M), larger groups first.
TensorF pool_clips(const TensorF& frames, std::int64_t clips);

}  // namespace tloc
