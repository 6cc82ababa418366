// Command-line front end: corpus generation, training, evaluation, the
// timing benchmark, and multi-seed ablation sweeps.  Every run that produces
// artifacts also writes a manifest so it can be reproduced from the record.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tloc/benchmark.hpp"
#include "tloc/manifest.hpp"
#include "tloc/metrics.hpp"
#include "tloc/runtime.hpp"
#include "tloc/serialize.hpp"
#include "tloc/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using namespace tloc;

struct CommonOpts {
  std::string config;
  std::string out;
  std::int64_t seed = -1;  // < 0: keep the config file's seed
  std::string threads = "1";
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool out_required) {
  cmd->add_option("--config", opts.config, "configuration file (JSON)")->check(CLI::ExistingFile);
  auto* out = cmd->add_option("--out", opts.out, "output directory");
  if (out_required) out->required();
  cmd->add_option("--seed", opts.seed, "override the config seed");
  cmd->add_option("--threads", opts.threads, "worker threads")
      ->check(CLI::IsMember({"1", "auto"}));
}

void apply_threads(const CommonOpts& opts) {
  runtime::set_threads(opts.threads == "auto" ? 0 : 1);
}

RunManifest start_manifest(const std::string& command, int argc, char** argv) {
  RunManifest m;
  m.command = command;
  for (int i = 0; i < argc; ++i) m.argv.emplace_back(argv[i]);
  m.started_at = utc_timestamp();
  return m;
}

void finish_manifest(RunManifest& m, const std::string& dir) {
  m.finished_at = utc_timestamp();
  write_manifest(m, (fs::path(dir) / "manifest.json").string());
}

void hash_corpus_files(RunManifest& m, const std::string& dir) {
  for (const char* name : {"vocab.txt", "train.jsonl", "val.jsonl", "test.jsonl"})
    m.artifact_hashes[name] = file_hash_hex((fs::path(dir) / name).string());
}

json report_json(const EvalReport& report) {
  json j;
  for (const auto& [sigma, frac] : report.recall_at) {
    char key[32];
    std::snprintf(key, sizeof key, "recall_iou_%.1f", sigma);
    j[key] = frac;
  }
  j["miou"] = report.miou;
  j["samples"] = report.count;
  return j;
}

EvalReport evaluate_split(const Checkpoint& ckpt, const std::vector<Sample>& samples,
                          bool oracle, std::vector<std::string>* ids = nullptr) {
  std::vector<TemporalSpan> preds, gts;
  preds.reserve(samples.size());
  gts.reserve(samples.size());
  for (const Sample& s : samples) {
    preds.push_back(oracle ? s.gt_norm : predict_sample(ckpt, s).span);
    gts.push_back(s.gt_norm);
    if (ids) ids->push_back(s.video_id);
  }
  return evaluate(preds, gts);
}

// ---------------------------------------------------------------------------
// generate

int cmd_generate(const CommonOpts& opts, int argc, char** argv) {
  SynthConfig cfg;
  if (!opts.config.empty()) cfg = synth_config_from_json(load_json_file(opts.config));
  if (opts.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opts.seed);
  cfg.validate();

  RunManifest m = start_manifest("generate", argc, argv);
  m.config = to_json(cfg);
  m.seed = cfg.seed;

  Corpus corpus = generate_corpus(cfg);
  fs::create_directories(opts.out);
  save_corpus(corpus, opts.out);

  hash_corpus_files(m, opts.out);
  m.metrics = {{"train", corpus.train.size()},
               {"val", corpus.val.size()},
               {"test", corpus.test.size()},
               {"vocab", corpus.vocab.size()}};
  finish_manifest(m, opts.out);

  std::cout << "wrote " << corpus.train.size() << " train / " << corpus.val.size() << " val / "
            << corpus.test.size() << " test samples to " << opts.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

int cmd_train(const CommonOpts& opts, const std::string& corpus_dir, const std::string& variant,
              int argc, char** argv) {
  TrainConfig cfg;
  if (!opts.config.empty()) cfg = train_config_from_json(load_json_file(opts.config));
  if (!variant.empty()) cfg.variant = parse_variant(variant);
  if (opts.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opts.seed);
  cfg = cfg.resolved();
  cfg.validate();

  RunManifest m = start_manifest("train", argc, argv);
  m.config = to_json(cfg);
  m.seed = cfg.seed;
  m.artifact_hashes["corpus/train.jsonl"] =
      file_hash_hex((fs::path(corpus_dir) / "train.jsonl").string());

  Corpus corpus = load_corpus(corpus_dir);
  fs::create_directories(opts.out);
  std::ofstream log((fs::path(opts.out) / "epochs.jsonl").string());
  if (!log) throw IoError("cannot open epoch log in " + opts.out);

  Checkpoint ckpt = train(corpus, cfg, &log);
  log.close();

  const std::string ckpt_path = (fs::path(opts.out) / "checkpoint.bin").string();
  save_checkpoint(ckpt, ckpt_path);

  m.artifact_hashes["checkpoint.bin"] = file_hash_hex(ckpt_path);
  const EpochRecord& last = ckpt.history.back();
  m.metrics = {{"best_epoch", ckpt.epoch},
               {"best_val_miou", ckpt.history[static_cast<std::size_t>(ckpt.epoch - 1)].val_miou},
               {"final_train_loss", last.total},
               {"epochs_run", ckpt.history.size()}};
  finish_manifest(m, opts.out);

  std::cout << "variant " << variant_name(cfg.variant) << ", " << ckpt.history.size()
            << " epochs; best val mIoU "
            << ckpt.history[static_cast<std::size_t>(ckpt.epoch - 1)].val_miou << " at epoch "
            << ckpt.epoch << "\ncheckpoint: " << ckpt_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

int cmd_evaluate(const CommonOpts& opts, const std::string& ckpt_path,
                 const std::string& corpus_dir, const std::string& split, bool oracle, int argc,
                 char** argv) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  Corpus corpus = load_corpus(corpus_dir);
  const std::vector<Sample>& samples = corpus_split(corpus, split);
  if (samples.empty()) throw UsageError("evaluate: split '" + split + "' is empty");

  RunManifest m = start_manifest("evaluate", argc, argv);
  m.config = {{"checkpoint", ckpt_path}, {"corpus", corpus_dir}, {"split", split},
              {"oracle", oracle}};
  m.seed = ckpt.config.seed;
  m.artifact_hashes["checkpoint.bin"] = file_hash_hex(ckpt_path);

  std::vector<std::string> ids;
  EvalReport report = evaluate_split(ckpt, samples, oracle, &ids);
  std::cout << eval_table(report);

  if (!opts.out.empty()) {
    fs::create_directories(opts.out);
    std::ofstream rep((fs::path(opts.out) / "report.json").string());
    rep << report_json(report).dump(2) << "\n";
    std::ofstream rec((fs::path(opts.out) / "records.jsonl").string());
    for (std::size_t i = 0; i < report.records.size(); ++i) {
      const EvalRecord& r = report.records[i];
      const auto [ps, pe] = denormalize_span(r.pred, samples[i].duration);
      rec << json{{"video_id", ids[i]},
                  {"pred_seconds", {ps, pe}},
                  {"gt_seconds", {samples[i].gt_start, samples[i].gt_end}},
                  {"iou", r.iou}}
                 .dump()
          << "\n";
    }
    m.metrics = report_json(report);
    finish_manifest(m, opts.out);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// benchmark

int cmd_benchmark(const CommonOpts& opts, const std::string& ckpt_path,
                  const std::string& corpus_dir, const std::string& split, int queries, int warmup,
                  int argc, char** argv) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  Corpus corpus = load_corpus(corpus_dir);
  const std::vector<Sample>& samples = corpus_split(corpus, split);

  ScanConfig scan;
  if (!opts.config.empty()) scan = scan_config_from_json(load_json_file(opts.config));
  scan.validate();
  const std::uint64_t scan_seed =
      opts.seed >= 0 ? static_cast<std::uint64_t>(opts.seed) : ckpt.config.seed;
  ScanWeights weights = init_scan_weights(ckpt.dims, scan_seed);

  RunManifest m = start_manifest("benchmark", argc, argv);
  m.config = {{"checkpoint", ckpt_path}, {"corpus", corpus_dir}, {"split", split},
              {"scan", to_json(scan)}, {"queries", queries}, {"warmup", warmup}};
  m.seed = scan_seed;
  m.artifact_hashes["checkpoint.bin"] = file_hash_hex(ckpt_path);

  TimingReport t = time_methods(ckpt, weights, scan, samples, queries, warmup);

  char line[256];
  std::snprintf(line, sizeof line,
                "windows per video       %lld\n"
                "attention  mean/median  %.6f s / %.6f s\n"
                "scan       mean/median  %.6f s / %.6f s\n"
                "speedup (scan/attn)     %.2fx over %d queries\n",
                static_cast<long long>(t.window_count), t.ablr_mean, t.ablr_median, t.scan_mean,
                t.scan_median, t.speedup, t.queries);
  std::cout << line;

  if (!opts.out.empty()) {
    fs::create_directories(opts.out);
    json tj = {{"ablr_mean_s", t.ablr_mean},     {"ablr_median_s", t.ablr_median},
               {"scan_mean_s", t.scan_mean},     {"scan_median_s", t.scan_median},
               {"window_count", t.window_count}, {"queries", t.queries},
               {"warmup", t.warmup},             {"speedup", t.speedup}};
    std::ofstream rep((fs::path(opts.out) / "timing.json").string());
    rep << tj.dump(2) << "\n";
    m.metrics = tj;
    finish_manifest(m, opts.out);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// ablate

struct CellResult {
  Variant variant;
  std::uint64_t seed = 0;
  EvalReport report;
};

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  return {mean, std::sqrt(var)};
}

int cmd_ablate(const CommonOpts& opts, const std::string& corpus_dir,
               const std::vector<std::uint64_t>& seeds, const std::vector<std::string>& variants,
               int argc, char** argv) {
  TrainConfig base;
  if (!opts.config.empty()) base = train_config_from_json(load_json_file(opts.config));
  std::vector<Variant> sweep;
  if (variants.empty()) {
    sweep = all_variants();
  } else {
    for (const std::string& name : variants) sweep.push_back(parse_variant(name));
  }
  if (seeds.empty()) throw UsageError("ablate: need at least one --seeds value");

  RunManifest m = start_manifest("ablate", argc, argv);
  m.config = {{"base", to_json(base)}, {"corpus", corpus_dir}};
  m.seed = seeds.front();

  Corpus corpus = load_corpus(corpus_dir);
  if (corpus.test.empty()) throw UsageError("ablate: corpus has no test split");
  fs::create_directories(opts.out);
  std::ofstream cells((fs::path(opts.out) / "cells.jsonl").string());

  std::vector<CellResult> results;
  for (Variant v : sweep) {
    for (std::uint64_t seed : seeds) {
      TrainConfig cfg = base;
      cfg.variant = v;
      cfg.seed = seed;
      cfg = cfg.resolved();
      Checkpoint ckpt = train(corpus, cfg);
      CellResult cell{v, seed, evaluate_split(ckpt, corpus.test, false)};
      json cj = report_json(cell.report);
      cj["variant"] = variant_name(v);
      cj["seed"] = seed;
      cells << cj.dump() << "\n";
      cells.flush();
      std::cout << variant_name(v) << " seed " << seed << ": test mIoU " << cell.report.miou
                << "\n";
      results.push_back(std::move(cell));
    }
  }

  // Table-shaped summary: rows = variants, columns = R@1 at each sigma + mIoU,
  // mean +/- stddev over seeds.
  std::string table = "variant    ";
  for (double sigma : default_sigmas()) {
    char head[32];
    std::snprintf(head, sizeof head, "R@1,IoU@%.1f    ", sigma);
    table += head;
  }
  table += "mIoU\n";
  json summary = json::array();
  for (Variant v : sweep) {
    std::map<double, std::vector<double>> recalls;
    std::vector<double> mious;
    for (const CellResult& cell : results) {
      if (cell.variant != v) continue;
      for (const auto& [sigma, frac] : cell.report.recall_at) recalls[sigma].push_back(frac);
      mious.push_back(cell.report.miou);
    }
    char row[192];
    std::snprintf(row, sizeof row, "%-10s ", variant_name(v).c_str());
    table += row;
    json srow = {{"variant", variant_name(v)}, {"seeds", seeds.size()}};
    for (const auto& [sigma, vals] : recalls) {
      const auto [mean, sd] = mean_std(vals);
      std::snprintf(row, sizeof row, "%.3f+-%.3f  ", mean, sd);
      table += row;
      char key[32];
      std::snprintf(key, sizeof key, "recall_iou_%.1f", sigma);
      srow[key] = {{"mean", mean}, {"std", sd}};
    }
    const auto [mean, sd] = mean_std(mious);
    std::snprintf(row, sizeof row, "%.3f+-%.3f\n", mean, sd);
    table += row;
    srow["miou"] = {{"mean", mean}, {"std", sd}};
    summary.push_back(std::move(srow));
  }
  std::cout << table;

  std::ofstream tf((fs::path(opts.out) / "table.txt").string());
  tf << table;
  m.metrics = summary;
  finish_manifest(m, opts.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attention-based temporal sentence localization"};
  app.require_subcommand(1);

  CommonOpts gen_o, train_o, eval_o, bench_o, ablate_o;
  std::string corpus_dir, ckpt_path, variant, split = "test";
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> variants;
  bool oracle = false;
  int queries = 100, warmup = 5;

  auto* gen = app.add_subcommand("generate", "write a planted synthetic corpus");
  add_common(gen, gen_o, true);

  auto* tr = app.add_subcommand("train", "train one variant on a corpus");
  add_common(tr, train_o, true);
  tr->add_option("--corpus", corpus_dir, "corpus directory")->required();
  tr->add_option("--variant", variant, "model variant");

  auto* ev = app.add_subcommand("evaluate", "recall/mIoU report for a checkpoint");
  add_common(ev, eval_o, false);
  ev->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  ev->add_option("--corpus", corpus_dir, "corpus directory")->required();
  ev->add_option("--split", split, "corpus split to score");
  ev->add_flag("--oracle", oracle, "score ground truth against itself (harness self-test)");

  auto* be = app.add_subcommand("benchmark", "per-sentence timing, attention vs sliding scan");
  add_common(be, bench_o, false);
  be->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  be->add_option("--corpus", corpus_dir, "corpus directory")->required();
  be->add_option("--split", split, "corpus split to time");
  be->add_option("--queries", queries, "sentences to time");
  be->add_option("--warmup", warmup, "untimed warmup queries");

  auto* ab = app.add_subcommand("ablate", "train variants across seeds, summary table");
  add_common(ab, ablate_o, true);
  ab->add_option("--corpus", corpus_dir, "corpus directory")->required();
  ab->add_option("--seeds", seeds, "training seeds")->delimiter(',');
  ab->add_option("--variants", variants, "variants to sweep (default: all)")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      apply_threads(gen_o);
      return cmd_generate(gen_o, argc, argv);
    }
    if (tr->parsed()) {
      apply_threads(train_o);
      return cmd_train(train_o, corpus_dir, variant, argc, argv);
    }
    if (ev->parsed()) {
      apply_threads(eval_o);
      return cmd_evaluate(eval_o, ckpt_path, corpus_dir, split, oracle, argc, argv);
    }
    if (be->parsed()) {
      apply_threads(bench_o);
      return cmd_benchmark(bench_o, ckpt_path, corpus_dir, split, queries, warmup, argc, argv);
    }
    if (ab->parsed()) {
      apply_threads(ablate_o);
      if (seeds.empty()) seeds = {1, 2, 3};
      return cmd_ablate(ablate_o, corpus_dir, seeds, variants, argc, argv);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
