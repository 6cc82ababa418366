#include "tloc/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unordered_set>
#include <utility>

#include <json.hpp>

#include "tloc/rng.hpp"

namespace tloc {
namespace fs = std::filesystem;
using nlohmann::json;

int Vocabulary::add(const std::string& word) {
  auto it = index_.find(word);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(words_.size());
  words_.push_back(word);
  index_[word] = id;
  return id;
}

int Vocabulary::id(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? 0 : it->second;
}

const std::string& Vocabulary::word(int id) const {
  if (id < 0 || id >= size()) throw UsageError("vocabulary id out of range: " + std::to_string(id));
  return words_[static_cast<std::size_t>(id)];
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary file: " + path);
  for (const std::string& w : words_) out << w << '\n';
  if (!out) throw IoError("write failed: " + path);
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read vocabulary file: " + path);
  Vocabulary v;
  v.words_.clear();
  v.index_.clear();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (v.index_.count(line))
      throw ValidationError("duplicate vocabulary entry \"" + line + "\" in " + path);
    v.index_[line] = static_cast<int>(v.words_.size());
    v.words_.push_back(line);
  }
  if (v.words_.empty() || v.words_[0] != "<unk>")
    throw ValidationError("vocabulary file must start with <unk>: " + path);
  return v;
}

void SynthConfig::validate() const {
  if (clips < 4) throw ValidationError("synth config: clips must be >= 4");
  if (feature_dim < 1) throw ValidationError("synth config: feature_dim must be >= 1");
  if (concepts < 1 || concepts > 16)
    throw ValidationError("synth config: concepts must be in [1, 16]");
  if (!(signal_strength >= 0.0)) throw ValidationError("synth config: signal_strength must be >= 0");
  if (!(noise_scale >= 0.0)) throw ValidationError("synth config: noise_scale must be >= 0");
  if (sentence_min < 3 || sentence_max < sentence_min)
    throw ValidationError("synth config: need 3 <= sentence_min <= sentence_max");
  if (train_count < 1 || val_count < 1 || test_count < 1)
    throw ValidationError("synth config: all split counts must be >= 1");
  if (!(duration_min > 0.0) || duration_max < duration_min)
    throw ValidationError("synth config: need 0 < duration_min <= duration_max");
}

const std::vector<Sample>& corpus_split(const Corpus& corpus, const std::string& name) {
  if (name == "train") return corpus.train;
  if (name == "val") return corpus.val;
  if (name == "test") return corpus.test;
  throw UsageError("unknown split \"" + name + "\" (valid: train, val, test)");
}

namespace {

const std::vector<std::string>& action_words() {
  static const std::vector<std::string> words = {
      "running",  "cooking",  "jumping",  "dancing", "reading",  "swimming",
      "driving",  "singing",  "climbing", "painting", "typing",  "stretching",
      "throwing", "pouring",  "digging",  "washing"};
  return words;
}

const std::vector<std::string>& object_words() {
  static const std::vector<std::string> words = {
      "dog",    "pan",    "rope",  "stage", "book",   "pool",  "car",    "guitar",
      "ladder", "canvas", "keys",  "mat",   "ball",   "glass", "shovel", "dishes"};
  return words;
}

const std::array<std::vector<std::string>, 3>& cue_words() {
  static const std::array<std::vector<std::string>, 3> cues = {{
      {"beginning", "early", "opening", "first"},
      {"middle", "midway", "halfway", "center"},
      {"late", "ending", "final", "last"},
  }};
  return cues;
}

const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words = {"the",    "a",     "person", "video", "scene",
                                                 "shows",  "while", "then",   "being", "seen"};
  return words;
}

Vocabulary build_vocab(int concepts) {
  Vocabulary v;
  for (int c = 0; c < concepts; ++c) v.add(action_words()[static_cast<std::size_t>(c)]);
  for (int c = 0; c < concepts; ++c) v.add(object_words()[static_cast<std::size_t>(c)]);
  for (const auto& tercile : cue_words())
    for (const std::string& w : tercile) v.add(w);
  for (const std::string& w : filler_words()) v.add(w);
  return v;
}

constexpr std::uint64_t kTagConcepts = 0xC0;
constexpr std::uint64_t kTagTrain = 0x11;
constexpr std::uint64_t kTagVal = 0x22;
constexpr std::uint64_t kTagTest = 0x33;

Sample make_sample(const SynthConfig& cfg, const Vocabulary& vocab, const TensorF& embeddings,
                   const std::string& split, std::uint64_t split_tag, int index, int* concept_out) {
  Rng rng = make_rng(mix64(cfg.seed, split_tag, static_cast<std::uint64_t>(index)));
  const std::int64_t M = cfg.clips;

  const int concept_id = uniform_int(rng, 0, cfg.concepts - 1);
  const double len = uniform(rng, 2.0 / static_cast<double>(M), 0.5);
  const double start = uniform(rng, 0.0, 1.0 - len);
  const double end = start + len;
  const double duration = uniform(rng, cfg.duration_min, cfg.duration_max);

  Sample s;
  char id[32];
  std::snprintf(id, sizeof id, "%s-%06d", split.c_str(), index);
  s.video_id = id;
  s.duration = duration;
  s.gt_start = start * duration;
  s.gt_end = end * duration;
  s.gt_norm = normalize_span(s.gt_start, s.gt_end, duration, s.video_id);

  s.clip_features = TensorF(Shape::mat(cfg.feature_dim, M));
  for (std::int64_t j = 0; j < M; ++j) {
    const double mid = (static_cast<double>(j) + 0.5) / static_cast<double>(M);
    const bool inside = mid >= start && mid <= end;
    for (std::int64_t d = 0; d < cfg.feature_dim; ++d) {
      double v = cfg.noise_scale * normal(rng);
      if (inside) v += cfg.signal_strength * static_cast<double>(embeddings.at(d, concept_id));
      s.clip_features.at(d, j) = static_cast<float>(v);
    }
  }

  const double mid = 0.5 * (start + end);
  const std::size_t tercile = mid <= 1.0 / 3.0 ? 0 : (mid <= 2.0 / 3.0 ? 1 : 2);
  const auto& cues = cue_words()[tercile];
  const std::string cue =
      cues[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(cues.size()) - 1))];

  const int n_tokens = uniform_int(rng, cfg.sentence_min, cfg.sentence_max);
  std::vector<std::string> sentence = {action_words()[static_cast<std::size_t>(concept_id)],
                                       object_words()[static_cast<std::size_t>(concept_id)], cue};
  const auto& fillers = filler_words();
  while (static_cast<int>(sentence.size()) < n_tokens)
    sentence.push_back(fillers[static_cast<std::size_t>(
        uniform_int(rng, 0, static_cast<int>(fillers.size()) - 1))]);
  for (std::size_t i = sentence.size(); i > 1; --i)
    std::swap(sentence[i - 1],
              sentence[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(i) - 1))]);

  s.tokens.reserve(sentence.size());
  for (const std::string& w : sentence) s.tokens.push_back(vocab.id(w));

  if (concept_out) *concept_out = concept_id;
  return s;
}

}  // namespace

Corpus generate_corpus(const SynthConfig& cfg, SynthSidecar* sidecar) {
  cfg.validate();
  Corpus corpus;
  corpus.vocab = build_vocab(cfg.concepts);

  TensorF embeddings(Shape::mat(cfg.feature_dim, cfg.concepts));
  {
    Rng rng = make_rng(mix64(cfg.seed, kTagConcepts));
    for (std::int64_t c = 0; c < cfg.concepts; ++c) {
      double norm_sq = 0.0;
      std::vector<double> col(static_cast<std::size_t>(cfg.feature_dim));
      for (auto& x : col) {
        x = normal(rng);
        norm_sq += x * x;
      }
      const double inv = 1.0 / std::sqrt(std::max(norm_sq, 1e-30));
      for (std::int64_t d = 0; d < cfg.feature_dim; ++d)
        embeddings.at(d, c) = static_cast<float>(col[static_cast<std::size_t>(d)] * inv);
    }
  }

  struct SplitPlan {
    const char* name;
    std::uint64_t tag;
    int count;
    std::vector<Sample>* out;
    std::vector<int>* concepts;
  };
  const SplitPlan plans[] = {
      {"train", kTagTrain, cfg.train_count, &corpus.train, sidecar ? &sidecar->train_concept : nullptr},
      {"val", kTagVal, cfg.val_count, &corpus.val, sidecar ? &sidecar->val_concept : nullptr},
      {"test", kTagTest, cfg.test_count, &corpus.test, sidecar ? &sidecar->test_concept : nullptr},
  };
  for (const SplitPlan& plan : plans) {
    plan.out->reserve(static_cast<std::size_t>(plan.count));
    if (plan.concepts) plan.concepts->reserve(static_cast<std::size_t>(plan.count));
    for (int i = 0; i < plan.count; ++i) {
      int concept_id = -1;
      plan.out->push_back(make_sample(cfg, corpus.vocab, embeddings, plan.name, plan.tag, i, &concept_id));
      if (plan.concepts) plan.concepts->push_back(concept_id);
    }
  }
  if (sidecar) sidecar->concept_embeddings = std::move(embeddings);
  return corpus;
}

namespace {

json sample_to_json(const Sample& s) {
  json features = json::array();
  for (std::int64_t i = 0; i < s.clip_features.numel(); ++i)
    features.push_back(static_cast<double>(s.clip_features[i]));
  return json{{"video_id", s.video_id},
              {"duration", s.duration},
              {"feature_shape", {s.clip_features.rows(), s.clip_features.cols()}},
              {"features", std::move(features)},
              {"tokens", s.tokens},
              {"span_seconds", {s.gt_start, s.gt_end}}};
}

[[noreturn]] void record_error(const std::string& file, int line, const std::string& what) {
  throw ValidationError(file + ":" + std::to_string(line) + ": " + what);
}

Sample sample_from_json(const json& j, const std::string& file, int line, int vocab_size) {
  for (const char* key :
       {"video_id", "duration", "feature_shape", "features", "tokens", "span_seconds"})
    if (!j.contains(key)) record_error(file, line, std::string("missing field \"") + key + "\"");

  Sample s;
  try {
    s.video_id = j.at("video_id").get<std::string>();
    s.duration = j.at("duration").get<double>();
    const auto shape = j.at("feature_shape").get<std::vector<std::int64_t>>();
    if (shape.size() != 2 || shape[0] < 1 || shape[1] < 1)
      record_error(file, line, "feature_shape must be two positive integers");
    const auto features = j.at("features").get<std::vector<double>>();
    if (static_cast<std::int64_t>(features.size()) != shape[0] * shape[1])
      record_error(file, line, "features length does not match feature_shape");
    s.clip_features = TensorF(Shape::mat(shape[0], shape[1]));
    for (std::size_t i = 0; i < features.size(); ++i)
      s.clip_features[static_cast<std::int64_t>(i)] = static_cast<float>(features[i]);
    s.tokens = j.at("tokens").get<std::vector<int>>();
    const auto span = j.at("span_seconds").get<std::vector<double>>();
    if (span.size() != 2) record_error(file, line, "span_seconds must have two entries");
    s.gt_start = span[0];
    s.gt_end = span[1];
  } catch (const json::exception& e) {
    record_error(file, line, std::string("bad field type: ") + e.what());
  }

  if (s.tokens.empty()) record_error(file, line, "tokens must be nonempty");
  for (int tok : s.tokens)
    if (tok < 0 || tok >= vocab_size)
      record_error(file, line,
                   "token id " + std::to_string(tok) + " outside vocabulary of size " +
                       std::to_string(vocab_size));
  if (!(s.duration > 0.0)) record_error(file, line, "duration must be > 0");
  if (!(0.0 <= s.gt_start && s.gt_start < s.gt_end && s.gt_end <= s.duration))
    record_error(file, line, "span_seconds must satisfy 0 <= start < end <= duration");
  if (!s.clip_features.all_finite()) record_error(file, line, "features must be finite");
  s.gt_norm = normalize_span(s.gt_start, s.gt_end, s.duration, s.video_id);
  return s;
}

void save_split(const std::vector<Sample>& samples, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus file: " + path);
  for (const Sample& s : samples) out << sample_to_json(s).dump() << '\n';
  if (!out) throw IoError("write failed: " + path);
}

std::vector<Sample> load_split(const std::string& path, int vocab_size) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read corpus file: " + path);
  std::vector<Sample> samples;
  std::string line;
  int line_no = 0;
  Shape expected;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw IoError(path + ":" + std::to_string(line_no) + ": malformed record");
    samples.push_back(sample_from_json(j, path, line_no, vocab_size));
    const Shape& got = samples.back().clip_features.shape();
    if (samples.size() == 1)
      expected = got;
    else if (!(got == expected))
      record_error(path, line_no,
                   "feature_shape " + got.str() + " differs from earlier records " + expected.str());
  }
  return samples;
}

}  // namespace

void save_corpus(const Corpus& corpus, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create corpus directory " + dir + ": " + ec.message());
  corpus.vocab.save((fs::path(dir) / "vocab.txt").string());
  save_split(corpus.train, (fs::path(dir) / "train.jsonl").string());
  save_split(corpus.val, (fs::path(dir) / "val.jsonl").string());
  save_split(corpus.test, (fs::path(dir) / "test.jsonl").string());
}

Corpus load_corpus(const std::string& dir) {
  Corpus corpus;
  corpus.vocab = Vocabulary::load((fs::path(dir) / "vocab.txt").string());
  corpus.train = load_split((fs::path(dir) / "train.jsonl").string(), corpus.vocab.size());
  corpus.val = load_split((fs::path(dir) / "val.jsonl").string(), corpus.vocab.size());
  corpus.test = load_split((fs::path(dir) / "test.jsonl").string(), corpus.vocab.size());

  std::unordered_set<std::string> seen;
  for (const auto* split : {&corpus.train, &corpus.val, &corpus.test})
    for (const Sample& s : *split)
      if (!seen.insert(s.video_id).second)
        throw ValidationError("video_id \"" + s.video_id + "\" appears in more than one split");
  return corpus;
}

TensorF pool_clips(const TensorF& frames, std::int64_t clips) {
  if (frames.shape().rank != 2) throw UsageError("pool_clips: need a [d x T] matrix");
  const std::int64_t T = frames.cols();
  if (clips < 1 || T < clips)
    throw UsageError("pool_clips: need 1 <= clips <= frame count, got clips=" +
                     std::to_string(clips) + " frames=" + std::to_string(T));
  const std::int64_t base = T / clips;
  const std::int64_t rem = T % clips;
  TensorF out(Shape::mat(frames.rows(), clips));
  std::int64_t col = 0;
  for (std::int64_t g = 0; g < clips; ++g) {
    const std::int64_t size = base + (g < rem ? 1 : 0);
    for (std::int64_t d = 0; d < frames.rows(); ++d) {
      double acc = 0.0;
      for (std::int64_t t = 0; t < size; ++t) acc += static_cast<double>(frames.at(d, col + t));
      out.at(d, g) = static_cast<float>(acc / static_cast<double>(size));
    }
    col += size;
  }
  return out;
}

}  // namespace tloc
