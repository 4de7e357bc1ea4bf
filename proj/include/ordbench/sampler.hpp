#pragma once

// Bootstrap mini-dataset construction: with-replacement samples of a parent
// train/dev pair at fixed train sizes, dev resized to keep the train:dev
// proportion.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ordbench/corpus.hpp"

namespace ordbench {

struct SamplePlan {
  std::vector<std::size_t> sizes = {1000, 3000, 5000, 8000, 10000};
  std::map<std::size_t, std::size_t> reps = {
      {1000, 20}, {3000, 10}, {5000, 5}, {8000, 5}, {10000, 5}};
  double train_fraction = 0.90;
  double dev_fraction = 0.05;
  std::uint64_t seed = 0;

  void validate() const;

  static SamplePlan from_json_file(const std::string& path);
  std::string to_json() const;
};

struct PlanEntry {
  std::size_t size = 0;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
};

struct BootstrapSample {
  Corpus train;
  Corpus dev;
};

// Samples train_size documents with replacement from parent_train and
// round(train_size * dev_fraction / train_fraction) from parent_dev.
// Repeated documents get "#k" id suffixes so corpus ids stay unique.
BootstrapSample bootstrap_sample(const Corpus& parent_train, const Corpus& parent_dev,
                                 std::size_t train_size, std::uint64_t seed,
                                 double train_fraction = 0.90, double dev_fraction = 0.05,
                                 bool with_replacement = true);

// One entry per (size, rep) with a seed derived from (plan.seed, size, rep).
std::vector<PlanEntry> expand_plan(const SamplePlan& plan);

}  // namespace ordbench
