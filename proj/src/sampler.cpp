#include "ordbench/sampler.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"
#include "ordbench/rng.hpp"

namespace ordbench {

using nlohmann::json;

void SamplePlan::validate() const {
  if (sizes.empty()) throw std::invalid_argument("sample plan: no sizes");
  for (std::size_t s : sizes) {
    if (s == 0) throw std::invalid_argument("sample plan: sizes must be positive");
    auto it = reps.find(s);
    if (it == reps.end() || it->second == 0)
      throw std::invalid_argument("sample plan: size " + std::to_string(s) +
                                  " needs a positive repetition count");
  }
  if (!(train_fraction > 0 && dev_fraction > 0))
    throw std::invalid_argument("sample plan: fractions must be positive");
}

SamplePlan SamplePlan::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open plan file: " + path);
  json j = json::parse(in);
  SamplePlan plan;
  if (j.contains("sizes")) plan.sizes = j.at("sizes").get<std::vector<std::size_t>>();
  if (j.contains("reps")) {
    plan.reps.clear();
    for (auto& [k, v] : j.at("reps").items())
      plan.reps[static_cast<std::size_t>(std::stoull(k))] = v.get<std::size_t>();
  }
  if (j.contains("dev_ratio_lock")) {
    auto lock = j.at("dev_ratio_lock");
    plan.train_fraction = lock.at(0).get<double>();
    plan.dev_fraction = lock.at(1).get<double>();
  }
  if (j.contains("seed")) plan.seed = j.at("seed").get<std::uint64_t>();
  plan.validate();
  return plan;
}

std::string SamplePlan::to_json() const {
  json j;
  j["sizes"] = sizes;
  json r = json::object();
  for (auto& [size, rep] : reps) r[std::to_string(size)] = rep;
  j["reps"] = std::move(r);
  j["dev_ratio_lock"] = {train_fraction, dev_fraction};
  j["seed"] = seed;
  return j.dump(2);
}

namespace {

Corpus draw(const Corpus& parent, std::size_t count, Pcg64& rng, bool with_replacement) {
  Corpus out;
  out.name = parent.name;
  out.level = parent.level;
  const std::size_t n = parent.documents.size();

  std::vector<std::size_t> picks;
  picks.reserve(count);
  if (with_replacement) {
    for (std::size_t i = 0; i < count; ++i)
      picks.push_back(static_cast<std::size_t>(rng.below(n)));
  } else {
    if (count > n)
      throw std::invalid_argument("sample: without-replacement size exceeds parent");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < count; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(idx[i], idx[j]);
    }
    picks.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count));
  }

  std::unordered_map<std::string, std::size_t> occurrences;
  for (std::size_t p : picks) {
    Document doc = parent.documents[p];
    std::size_t k = ++occurrences[doc.id];
    if (k > 1) doc.id += "#" + std::to_string(k);
    out.documents.push_back(std::move(doc));
  }
  return out;
}

}  // namespace

BootstrapSample bootstrap_sample(const Corpus& parent_train, const Corpus& parent_dev,
                                 std::size_t train_size, std::uint64_t seed,
                                 double train_fraction, double dev_fraction,
                                 bool with_replacement) {
  if (train_size == 0) throw std::invalid_argument("bootstrap: train_size must be >= 1");
  if (parent_train.documents.empty() || parent_dev.documents.empty())
    throw std::invalid_argument("bootstrap: parents must be non-empty");

  const std::size_t dev_size = static_cast<std::size_t>(std::lround(
      static_cast<double>(train_size) * dev_fraction / train_fraction));

  BootstrapSample out;
  Pcg64 train_rng(seed, hash_str("bootstrap-train"));
  out.train = draw(parent_train, train_size, train_rng, with_replacement);
  Pcg64 dev_rng(seed, hash_str("bootstrap-dev"));
  out.dev = draw(parent_dev, std::max<std::size_t>(dev_size, 1), dev_rng, with_replacement);
  return out;
}

std::vector<PlanEntry> expand_plan(const SamplePlan& plan) {
  plan.validate();
  std::vector<PlanEntry> out;
  for (std::size_t size : plan.sizes) {
    const std::size_t reps = plan.reps.at(size);
    for (std::size_t rep = 0; rep < reps; ++rep)
      out.push_back({size, rep, mix(mix(plan.seed, size), rep)});
  }
  return out;
}

}  // namespace ordbench
