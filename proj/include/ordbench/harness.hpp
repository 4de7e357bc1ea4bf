#pragma once

// Experiment orchestration: within/cross-domain grids, learnability sweeps
// over bootstrap mini datasets, robustness sweeps over noise levels, a
// synthetic corpus generator for desk-scale runs, and report emission.
// Every cell's randomness derives from (master seed, cell tags); a run is a
// pure function of (spec, seed).

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ordbench/corpus.hpp"
#include "ordbench/metrics.hpp"
#include "ordbench/model.hpp"
#include "ordbench/noise.hpp"
#include "ordbench/sampler.hpp"

namespace ordbench {

struct SynthSpec {
  std::size_t n_docs = 20;
  std::size_t seq_lo = 3, seq_hi = 5;       // sequences per document
  std::size_t tok_lo = 4, tok_hi = 8;       // tokens per sequence
  std::size_t filler_vocab = 30;
  std::size_t chain_vocab = 8;
  std::uint64_t seed = 0;
};

// Documents whose gold order is recoverable by construction: sequence i
// carries a positional marker token p<i> and shares a chain token with its
// successor. A rule that sorts by marker achieves PMR 1.
Corpus synth_corpus(const SynthSpec& spec);

// The marker-sorting rule; used as the learnability oracle in tests.
Order marker_oracle_order(const std::vector<Sequence>& presentation);

struct DomainSpec {
  std::string name;
  Level level = Level::Sentence;
  // Either file paths for pre-split corpora...
  std::string train_path, dev_path, test_path;
  // ...or a generator plus split ratios.
  std::optional<SynthSpec> synth;
  SplitRatios ratios;
};

struct NoiseSweepSpec {
  std::string domain;                        // defaults to the first domain
  std::vector<double> levels = {0.2, 0.5, 0.8, 1.0};
  std::string slogans_path;
  double mode_weights[3] = {1.0, 1.0, 1.0};
  double modify_fraction = 0.5;
  bool corrupt_train = true, corrupt_dev = true, corrupt_test = true;
};

struct LearnabilitySpec {
  std::string domain;
  SamplePlan plan;
};

struct ExperimentSpec {
  std::vector<DomainSpec> domains;
  ModelConfig model;
  TrainConfig train;
  WlcsParams metrics;
  bool cross_domain = false;
  std::optional<NoiseSweepSpec> noise;
  std::optional<LearnabilitySpec> learnability;
  std::uint64_t seed = 0;

  static ExperimentSpec from_json(const std::string& text);
  static ExperimentSpec from_json_file(const std::string& path);
  std::string to_json() const;
};

struct CellResult {
  std::string train_domain;
  std::string test_domain;
  std::string tag;                           // "within", "cross", "noise@p", ...
  bool ok = false;
  std::string error;
  double pmr = 0, acc = 0, tau = 0, wlcs_f = 0;
  std::size_t parameter_count = 0;
  std::uint64_t train_seed = 0;
};

struct CurvePoint {
  double x = 0;                              // train size or noise level
  std::map<std::string, double> metric_mean;
  std::map<std::string, double> metric_std;
  std::size_t reps_ok = 0, reps_failed = 0;
  double realized_rate = 0;                  // noise sweeps only
};

struct SweepResult {
  std::vector<CellResult> within;
  std::vector<CellResult> cross;
  std::vector<CurvePoint> learnability;
  std::vector<CurvePoint> robustness;
  std::vector<std::vector<CellResult>> learnability_raw;  // per size, per rep
  std::string results_json;                  // canonical machine output
};

// Runs everything the spec asks for and writes results.json, tables/*.tsv,
// curves/*.tsv, audits/*.json, checkpoints/*.json and manifest.json under
// out_dir.
SweepResult run_sweep(const ExperimentSpec& spec, const std::string& out_dir);

// Reads the spec back out of a manifest.json produced by run_sweep.
ExperimentSpec spec_from_manifest(const std::string& manifest_path);

}  // namespace ordbench
