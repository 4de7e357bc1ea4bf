#include "ordbench/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "ordbench/kernels.hpp"
#include "ordbench/rng.hpp"

namespace ordbench {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Synthetic corpus

Corpus synth_corpus(const SynthSpec& spec) {
  if (spec.n_docs == 0 || spec.seq_lo < 2 || spec.seq_hi < spec.seq_lo ||
      spec.tok_lo == 0 || spec.tok_hi < spec.tok_lo)
    throw std::invalid_argument("synth_corpus: bad ranges");

  Corpus corpus;
  corpus.name = "synth";
  corpus.level = Level::Sentence;
  for (std::size_t d = 0; d < spec.n_docs; ++d) {
    Pcg64 rng(spec.seed, d);
    Document doc;
    char idbuf[32];
    std::snprintf(idbuf, sizeof(idbuf), "synth-%05zu", d);
    doc.id = idbuf;
    char datebuf[32];
    std::snprintf(datebuf, sizeof(datebuf), "%04u-%02u-%02u",
                  static_cast<unsigned>(2000 + d / 360),
                  static_cast<unsigned>(1 + (d / 30) % 12),
                  static_cast<unsigned>(1 + d % 30));
    doc.date = datebuf;

    const std::size_t n = spec.seq_lo + rng.below(spec.seq_hi - spec.seq_lo + 1);
    std::vector<std::string> chain(n);
    for (std::size_t i = 0; i + 1 < n; ++i)
      chain[i] = "c" + std::to_string(rng.below(spec.chain_vocab));

    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t len = spec.tok_lo + rng.below(spec.tok_hi - spec.tok_lo + 1);
      std::vector<std::string> toks;
      toks.push_back("p" + std::to_string(i));
      if (i > 0) toks.push_back(chain[i - 1]);
      if (i + 1 < n) toks.push_back(chain[i]);
      while (toks.size() < len)
        toks.push_back("w" + std::to_string(rng.below(spec.filler_vocab)));
      std::string text;
      for (std::size_t t = 0; t < toks.size(); ++t) {
        if (t) text += " ";
        text += toks[t];
      }
      doc.sequences.push_back(Sequence::from_text(std::move(text)));
    }
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

Order marker_oracle_order(const std::vector<Sequence>& presentation) {
  const std::size_t n = presentation.size();
  std::vector<std::size_t> slot_of_marker(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (const std::string& tok : presentation[j].tokens) {
      if (tok.size() < 2 || tok[0] != 'p') continue;
      bool digits = std::all_of(tok.begin() + 1, tok.end(),
                                [](char c) { return c >= '0' && c <= '9'; });
      if (!digits) continue;
      std::size_t k = std::stoul(tok.substr(1));
      if (k < n && slot_of_marker[k] == n) slot_of_marker[k] = j;
    }
  }
  Order order;
  for (std::size_t t = 0; t < n; ++t) {
    if (slot_of_marker[t] == n)
      throw std::invalid_argument("marker_oracle_order: marker p" + std::to_string(t) +
                                  " not found");
    order.perm.push_back(slot_of_marker[t]);
  }
  return order;
}

// ---------------------------------------------------------------------------
// Spec (de)serialization

namespace {

json model_to_json(const ModelConfig& m) {
  json j;
  j["embed_dim"] = m.embed_dim;
  j["hidden_dim"] = m.hidden_dim;
  j["attention_dim"] = m.attention_dim;
  j["pointer_heads"] = m.pointer_heads;
  j["beam_width"] = m.beam_width;
  j["l2_lambda"] = m.l2_lambda;
  j["dropout"] = m.dropout;
  return j;
}

ModelConfig model_from_json(const json& j) {
  ModelConfig m;
  m.embed_dim = j.value("embed_dim", m.embed_dim);
  m.hidden_dim = j.value("hidden_dim", m.hidden_dim);
  m.attention_dim = j.value("attention_dim", m.attention_dim);
  m.pointer_heads = j.value("pointer_heads", m.pointer_heads);
  m.beam_width = j.value("beam_width", m.beam_width);
  m.l2_lambda = j.value("l2_lambda", m.l2_lambda);
  m.dropout = j.value("dropout", m.dropout);
  return m;
}

json train_to_json(const TrainConfig& t) {
  json j;
  j["batch_size"] = t.batch_size;
  j["patience"] = t.patience;
  j["max_epochs"] = t.max_epochs;
  j["learning_rate"] = t.learning_rate;
  j["optimizer"] = t.optimizer == OptimizerKind::Adam ? "adam" : "sgd";
  j["min_freq"] = t.min_freq;
  return j;
}

TrainConfig train_from_json(const json& j) {
  TrainConfig t;
  t.batch_size = j.value("batch_size", t.batch_size);
  t.patience = j.value("patience", t.patience);
  t.max_epochs = j.value("max_epochs", t.max_epochs);
  t.learning_rate = j.value("learning_rate", t.learning_rate);
  std::string opt = j.value("optimizer", std::string("adam"));
  if (opt == "adam") {
    t.optimizer = OptimizerKind::Adam;
  } else if (opt == "sgd") {
    t.optimizer = OptimizerKind::Sgd;
  } else {
    throw std::invalid_argument("spec: unknown optimizer '" + opt + "'");
  }
  t.min_freq = j.value("min_freq", t.min_freq);
  return t;
}

json synth_to_json(const SynthSpec& s) {
  json j;
  j["n_docs"] = s.n_docs;
  j["sequences"] = {s.seq_lo, s.seq_hi};
  j["tokens"] = {s.tok_lo, s.tok_hi};
  j["filler_vocab"] = s.filler_vocab;
  j["chain_vocab"] = s.chain_vocab;
  j["seed"] = s.seed;
  return j;
}

SynthSpec synth_from_json(const json& j) {
  SynthSpec s;
  s.n_docs = j.value("n_docs", s.n_docs);
  if (j.contains("sequences")) {
    s.seq_lo = j.at("sequences").at(0).get<std::size_t>();
    s.seq_hi = j.at("sequences").at(1).get<std::size_t>();
  }
  if (j.contains("tokens")) {
    s.tok_lo = j.at("tokens").at(0).get<std::size_t>();
    s.tok_hi = j.at("tokens").at(1).get<std::size_t>();
  }
  s.filler_vocab = j.value("filler_vocab", s.filler_vocab);
  s.chain_vocab = j.value("chain_vocab", s.chain_vocab);
  s.seed = j.value("seed", s.seed);
  return s;
}

}  // namespace

std::string ExperimentSpec::to_json() const {
  json j;
  j["seed"] = seed;
  j["model"] = model_to_json(model);
  j["train"] = train_to_json(train);
  j["metrics"] = {{"weight_exponent", metrics.weight_exponent}, {"f_alpha", metrics.f_alpha}};
  j["cross_domain"] = cross_domain;
  json ds = json::array();
  for (const DomainSpec& d : domains) {
    json jd;
    jd["name"] = d.name;
    jd["level"] = ordbench::to_string(d.level);
    if (d.synth) {
      jd["synth"] = synth_to_json(*d.synth);
      jd["ratios"] = {d.ratios.train, d.ratios.dev, d.ratios.test};
    } else {
      jd["train"] = d.train_path;
      jd["dev"] = d.dev_path;
      jd["test"] = d.test_path;
    }
    ds.push_back(std::move(jd));
  }
  j["domains"] = std::move(ds);
  if (noise) {
    json jn;
    jn["domain"] = noise->domain;
    jn["levels"] = noise->levels;
    jn["slogans"] = noise->slogans_path;
    jn["mode_weights"] = {noise->mode_weights[0], noise->mode_weights[1],
                          noise->mode_weights[2]};
    jn["modify_fraction"] = noise->modify_fraction;
    jn["corrupt"] = json::array();
    if (noise->corrupt_train) jn["corrupt"].push_back("train");
    if (noise->corrupt_dev) jn["corrupt"].push_back("dev");
    if (noise->corrupt_test) jn["corrupt"].push_back("test");
    j["noise"] = std::move(jn);
  }
  if (learnability) {
    json jl;
    jl["domain"] = learnability->domain;
    jl["plan"] = json::parse(learnability->plan.to_json());
    j["learnability"] = std::move(jl);
  }
  return j.dump(2);
}

ExperimentSpec ExperimentSpec::from_json(const std::string& text) {
  json j = json::parse(text);
  ExperimentSpec spec;
  spec.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("model")) spec.model = model_from_json(j.at("model"));
  if (j.contains("train")) spec.train = train_from_json(j.at("train"));
  if (j.contains("metrics")) {
    spec.metrics.weight_exponent =
        j.at("metrics").value("weight_exponent", spec.metrics.weight_exponent);
    spec.metrics.f_alpha = j.at("metrics").value("f_alpha", spec.metrics.f_alpha);
  }
  spec.cross_domain = j.value("cross_domain", false);
  if (!j.contains("domains") || j.at("domains").empty())
    throw std::invalid_argument("spec: at least one domain required");
  for (const json& jd : j.at("domains")) {
    DomainSpec d;
    d.name = jd.at("name").get<std::string>();
    d.level = level_from_string(jd.value("level", std::string("sentence")));
    if (jd.contains("synth")) {
      d.synth = synth_from_json(jd.at("synth"));
      if (jd.contains("ratios")) {
        d.ratios.train = jd.at("ratios").at(0).get<double>();
        d.ratios.dev = jd.at("ratios").at(1).get<double>();
        d.ratios.test = jd.at("ratios").at(2).get<double>();
      }
    } else {
      d.train_path = jd.at("train").get<std::string>();
      d.dev_path = jd.at("dev").get<std::string>();
      d.test_path = jd.at("test").get<std::string>();
    }
    spec.domains.push_back(std::move(d));
  }
  if (j.contains("noise")) {
    const json& jn = j.at("noise");
    NoiseSweepSpec n;
    n.domain = jn.value("domain", spec.domains.front().name);
    if (jn.contains("levels")) n.levels = jn.at("levels").get<std::vector<double>>();
    n.slogans_path = jn.value("slogans", std::string());
    if (jn.contains("mode_weights"))
      for (std::size_t i = 0; i < 3; ++i)
        n.mode_weights[i] = jn.at("mode_weights").at(i).get<double>();
    n.modify_fraction = jn.value("modify_fraction", 0.5);
    if (jn.contains("corrupt")) {
      n.corrupt_train = n.corrupt_dev = n.corrupt_test = false;
      for (const json& c : jn.at("corrupt")) {
        std::string s = c.get<std::string>();
        if (s == "train") n.corrupt_train = true;
        else if (s == "dev") n.corrupt_dev = true;
        else if (s == "test") n.corrupt_test = true;
        else throw std::invalid_argument("spec: unknown corrupt target '" + s + "'");
      }
    }
    spec.noise = std::move(n);
  }
  if (j.contains("learnability")) {
    const json& jl = j.at("learnability");
    LearnabilitySpec l;
    l.domain = jl.value("domain", spec.domains.front().name);
    if (jl.contains("plan")) {
      const json& jp = jl.at("plan");
      SamplePlan plan;
      if (jp.contains("sizes")) plan.sizes = jp.at("sizes").get<std::vector<std::size_t>>();
      if (jp.contains("reps")) {
        plan.reps.clear();
        for (auto& [k, v] : jp.at("reps").items())
          plan.reps[std::stoull(k)] = v.get<std::size_t>();
      }
      if (jp.contains("dev_ratio_lock")) {
        plan.train_fraction = jp.at("dev_ratio_lock").at(0).get<double>();
        plan.dev_fraction = jp.at("dev_ratio_lock").at(1).get<double>();
      }
      plan.seed = jp.value("seed", std::uint64_t{0});
      l.plan = std::move(plan);
    }
    spec.learnability = std::move(l);
  }
  return spec;
}

ExperimentSpec ExperimentSpec::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open spec file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

ExperimentSpec spec_from_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open manifest: " + manifest_path);
  json j = json::parse(in);
  if (!j.contains("spec")) throw std::runtime_error("manifest has no 'spec' entry");
  return ExperimentSpec::from_json(j.at("spec").dump());
}

// ---------------------------------------------------------------------------
// Sweep execution

namespace {

struct DomainData {
  std::string name;
  Corpus train, dev, test;
};

DomainData materialize(const DomainSpec& d) {
  DomainData data;
  data.name = d.name;
  if (d.synth) {
    Corpus whole = synth_corpus(*d.synth);
    whole.level = d.level;
    CorpusSplits splits = split_chronological(whole, d.ratios, true);
    data.train = std::move(splits.train);
    data.dev = std::move(splits.dev);
    data.test = std::move(splits.test);
  } else {
    data.train = load_corpus(d.train_path, d.level).corpus;
    data.dev = load_corpus(d.dev_path, d.level).corpus;
    data.test = load_corpus(d.test_path, d.level).corpus;
  }
  return data;
}

std::uint64_t train_seed_for(std::uint64_t master, const std::string& domain) {
  return mix(master, hash_str("train:" + domain));
}

std::uint64_t shuffle_seed_for(std::uint64_t master, const std::string& domain) {
  return mix(master, hash_str("shuffle:" + domain));
}

CellResult eval_cell(OrderModel& model, const Corpus& test, const WlcsParams& params,
                     std::uint64_t shuffle_seed) {
  std::vector<EvalPair> pairs = predict(model, test, model.config().beam_width, shuffle_seed);
  MetricReport report = aggregate(pairs, params);
  CellResult cell;
  cell.ok = true;
  cell.pmr = report.pmr;
  cell.acc = report.mean_acc;
  cell.tau = report.mean_tau;
  cell.wlcs_f = report.mean_wlcs_f;
  cell.parameter_count = model.parameter_count();
  return cell;
}

json cell_to_json(const CellResult& c) {
  json j;
  j["train"] = c.train_domain;
  j["test"] = c.test_domain;
  j["tag"] = c.tag;
  j["ok"] = c.ok;
  if (!c.ok) j["error"] = c.error;
  j["pmr"] = c.pmr;
  j["acc"] = c.acc;
  j["tau"] = c.tau;
  j["wlcs_f"] = c.wlcs_f;
  j["parameter_count"] = c.parameter_count;
  j["train_seed"] = c.train_seed;
  return j;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", x);
  return buf;
}

struct Accumulator {
  std::vector<double> pmr, acc, tau, wlcs_f;

  void add(const CellResult& c) {
    pmr.push_back(c.pmr);
    acc.push_back(c.acc);
    tau.push_back(c.tau);
    wlcs_f.push_back(c.wlcs_f);
  }
  static std::pair<double, double> mean_std(const std::vector<double>& v) {
    if (v.empty()) return {0, 0};
    double m = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    if (v.size() < 2) return {m, 0};
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return {m, std::sqrt(ss / static_cast<double>(v.size() - 1))};
  }
  void fill(CurvePoint& point) const {
    for (auto& [name, vals] : std::initializer_list<std::pair<const char*, const std::vector<double>*>>{
             {"pmr", &pmr}, {"acc", &acc}, {"tau", &tau}, {"wlcs_f", &wlcs_f}}) {
      auto [m, s] = mean_std(*vals);
      point.metric_mean[name] = m;
      point.metric_std[name] = s;
    }
  }
};

}  // namespace

SweepResult run_sweep(const ExperimentSpec& spec, const std::string& out_dir) {
  spec.model.validate();
  spec.train.validate();
  spec.metrics.validate();

  fs::create_directories(out_dir);
  fs::create_directories(fs::path(out_dir) / "tables");
  fs::create_directories(fs::path(out_dir) / "curves");
  fs::create_directories(fs::path(out_dir) / "audits");
  fs::create_directories(fs::path(out_dir) / "checkpoints");

  {
    json manifest;
    manifest["tool"] = "ordbench";
    manifest["version"] = "0.1.0";
    manifest["kernel_backend"] = kernels::backend_name();
    manifest["spec"] = json::parse(spec.to_json());
    write_file(fs::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");
  }

  std::vector<DomainData> domains;
  for (const DomainSpec& d : spec.domains) domains.push_back(materialize(d));

  SweepResult result;
  std::vector<std::optional<OrderModel>> models(domains.size());

  // Within-domain training (one model per domain), then the cross grid.
  for (std::size_t di = 0; di < domains.size(); ++di) {
    DomainData& d = domains[di];
    TrainConfig tcfg = spec.train;
    tcfg.seed = train_seed_for(spec.seed, d.name);

    CellResult cell;
    cell.train_domain = d.name;
    cell.test_domain = d.name;
    cell.tag = "within";
    cell.train_seed = tcfg.seed;
    try {
      TrainHistory hist;
      OrderModel model = train(d.train, d.dev, spec.model, tcfg, nullptr, &hist);
      model.save((fs::path(out_dir) / "checkpoints" / (d.name + ".json")).string());
      CellResult eval = eval_cell(model, d.test, spec.metrics,
                                  shuffle_seed_for(spec.seed, d.name));
      eval.train_domain = cell.train_domain;
      eval.test_domain = cell.test_domain;
      eval.tag = cell.tag;
      eval.train_seed = cell.train_seed;
      cell = std::move(eval);
      models[di] = std::move(model);
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
    result.within.push_back(std::move(cell));
  }

  if (spec.cross_domain) {
    for (std::size_t di = 0; di < domains.size(); ++di) {
      for (std::size_t ti = 0; ti < domains.size(); ++ti) {
        CellResult cell;
        cell.train_domain = domains[di].name;
        cell.test_domain = domains[ti].name;
        cell.tag = "cross";
        cell.train_seed = train_seed_for(spec.seed, domains[di].name);
        if (di == ti) {
          cell = result.within[di];
          cell.tag = "cross";
        } else if (models[di]) {
          try {
            CellResult eval = eval_cell(*models[di], domains[ti].test, spec.metrics,
                                        shuffle_seed_for(spec.seed, domains[ti].name));
            eval.train_domain = cell.train_domain;
            eval.test_domain = cell.test_domain;
            eval.tag = cell.tag;
            eval.train_seed = cell.train_seed;
            cell = std::move(eval);
          } catch (const std::exception& e) {
            cell.ok = false;
            cell.error = e.what();
          }
        } else {
          cell.ok = false;
          cell.error = "training failed for domain " + domains[di].name;
        }
        result.cross.push_back(std::move(cell));
      }
    }
  }

  // Learnability sweep: bootstrap mini datasets at each size.
  json j_learn;
  if (spec.learnability) {
    const LearnabilitySpec& l = *spec.learnability;
    auto it = std::find_if(domains.begin(), domains.end(),
                           [&](const DomainData& d) { return d.name == l.domain; });
    if (it == domains.end())
      throw std::invalid_argument("learnability domain '" + l.domain + "' not in spec");
    DomainData& dom = *it;

    SamplePlan plan = l.plan;
    plan.seed = mix(spec.seed, mix(hash_str("learnability"), plan.seed));
    std::vector<PlanEntry> entries = expand_plan(plan);

    json j_raw = json::array();
    std::map<std::size_t, Accumulator> by_size;
    std::map<std::size_t, std::size_t> failures;
    std::vector<std::vector<CellResult>> raw_by_size;
    for (const PlanEntry& entry : entries) {
      CellResult cell;
      cell.train_domain = dom.name;
      cell.test_domain = dom.name;
      cell.tag = "learnability@" + std::to_string(entry.size) + "#" +
                 std::to_string(entry.rep);
      cell.train_seed = mix(entry.seed, hash_str("train"));
      try {
        BootstrapSample sample =
            bootstrap_sample(dom.train, dom.dev, entry.size, entry.seed,
                             plan.train_fraction, plan.dev_fraction);
        TrainConfig tcfg = spec.train;
        tcfg.seed = cell.train_seed;
        OrderModel model = train(sample.train, sample.dev, spec.model, tcfg);
        CellResult eval = eval_cell(model, dom.test, spec.metrics,
                                    shuffle_seed_for(spec.seed, dom.name));
        eval.train_domain = cell.train_domain;
        eval.test_domain = cell.test_domain;
        eval.tag = cell.tag;
        eval.train_seed = cell.train_seed;
        cell = std::move(eval);
        by_size[entry.size].add(cell);
      } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = e.what();
        ++failures[entry.size];
      }
      json jc = cell_to_json(cell);
      jc["size"] = entry.size;
      jc["rep"] = entry.rep;
      jc["sample_seed"] = entry.seed;
      j_raw.push_back(std::move(jc));
      if (raw_by_size.empty() ||
          entry.rep == 0)  // new size group starts at rep 0
        raw_by_size.emplace_back();
      raw_by_size.back().push_back(cell);
    }
    for (auto& [size, acc] : by_size) {
      CurvePoint point;
      point.x = static_cast<double>(size);
      point.reps_ok = acc.pmr.size();
      point.reps_failed = failures.count(size) ? failures[size] : 0;
      acc.fill(point);
      result.learnability.push_back(std::move(point));
    }
    result.learnability_raw = std::move(raw_by_size);
    j_learn["domain"] = l.domain;
    j_learn["raw"] = std::move(j_raw);
  }

  // Robustness sweep: same train seed as the clean run at every level, so
  // the p=0 point reproduces the clean within-domain result.
  json j_robust;
  if (spec.noise) {
    const NoiseSweepSpec& nspec = *spec.noise;
    auto it = std::find_if(domains.begin(), domains.end(),
                           [&](const DomainData& d) { return d.name == nspec.domain; });
    if (it == domains.end())
      throw std::invalid_argument("noise domain '" + nspec.domain + "' not in spec");
    DomainData& dom = *it;

    NoiseConfig base;
    base.mode_weights[0] = nspec.mode_weights[0];
    base.mode_weights[1] = nspec.mode_weights[1];
    base.mode_weights[2] = nspec.mode_weights[2];
    base.modify_fraction = nspec.modify_fraction;
    if (base.mode_weights[0] > 0) base.slogans = load_slogans(nspec.slogans_path);
    base.seed = mix(spec.seed, hash_str("noise:" + dom.name));

    json j_points = json::array();
    for (std::size_t li = 0; li < nspec.levels.size(); ++li) {
      NoiseConfig cfg = base;
      cfg.p = nspec.levels[li];

      CurvePoint point;
      point.x = cfg.p;
      CellResult cell;
      cell.train_domain = dom.name;
      cell.test_domain = dom.name;
      cell.tag = "noise@" + fmt(cfg.p);
      cell.train_seed = train_seed_for(spec.seed, dom.name);
      std::size_t considered = 0, events = 0;
      try {
        Corpus train_c = dom.train, dev_c = dom.dev, test_c = dom.test;
        json j_audits = json::object();
        auto corrupt_into = [&](Corpus& c, const char* split) {
          CorruptResult r = corrupt_corpus(c, cfg);
          c = std::move(r.corpus);
          considered += r.audit.sequences_considered;
          events += r.audit.events.size();
          j_audits[split] = json::parse(r.audit.to_json());
        };
        if (nspec.corrupt_train) corrupt_into(train_c, "train");
        if (nspec.corrupt_dev) corrupt_into(dev_c, "dev");
        if (nspec.corrupt_test) corrupt_into(test_c, "test");
        write_file(fs::path(out_dir) / "audits" /
                       ("robustness_" + std::to_string(li) + ".json"),
                   j_audits.dump(2) + "\n");

        TrainConfig tcfg = spec.train;
        tcfg.seed = cell.train_seed;
        OrderModel model = train(train_c, dev_c, spec.model, tcfg);
        CellResult eval = eval_cell(model, test_c, spec.metrics,
                                    shuffle_seed_for(spec.seed, dom.name));
        eval.train_domain = cell.train_domain;
        eval.test_domain = cell.test_domain;
        eval.tag = cell.tag;
        eval.train_seed = cell.train_seed;
        cell = std::move(eval);
        Accumulator acc;
        acc.add(cell);
        acc.fill(point);
        point.reps_ok = 1;
      } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = e.what();
        point.reps_failed = 1;
      }
      point.realized_rate =
          considered == 0 ? 0.0
                          : static_cast<double>(events) / static_cast<double>(considered);
      json jp = cell_to_json(cell);
      jp["p"] = cfg.p;
      jp["realized_rate"] = point.realized_rate;
      j_points.push_back(std::move(jp));
      result.robustness.push_back(std::move(point));
    }
    j_robust["domain"] = nspec.domain;
    j_robust["points"] = std::move(j_points);
  }

  // ---- results.json ----
  json results;
  results["seed"] = spec.seed;
  json jw = json::array();
  for (const CellResult& c : result.within) jw.push_back(cell_to_json(c));
  results["within"] = std::move(jw);
  if (spec.cross_domain) {
    json jc = json::array();
    for (const CellResult& c : result.cross) jc.push_back(cell_to_json(c));
    results["cross"] = std::move(jc);
  }
  if (spec.learnability) {
    json curve = json::array();
    for (const CurvePoint& p : result.learnability) {
      json jp;
      jp["size"] = static_cast<std::size_t>(p.x);
      jp["reps_ok"] = p.reps_ok;
      jp["reps_failed"] = p.reps_failed;
      for (auto& [k, v] : p.metric_mean) jp[k + "_mean"] = v;
      for (auto& [k, v] : p.metric_std) jp[k + "_std"] = v;
      curve.push_back(std::move(jp));
    }
    j_learn["curve"] = std::move(curve);
    results["learnability"] = std::move(j_learn);
  }
  if (spec.noise) results["robustness"] = std::move(j_robust);
  result.results_json = results.dump(2) + "\n";
  write_file(fs::path(out_dir) / "results.json", result.results_json);

  // ---- TSV tables ----
  {
    std::string tsv = "dataset\tpmr\twlcs-l\t#pm\n";
    for (const CellResult& c : result.within)
      tsv += c.test_domain + "\t" + (c.ok ? fmt(c.pmr) : "failed") + "\t" +
             (c.ok ? fmt(c.wlcs_f) : "failed") + "\t" + std::to_string(c.parameter_count) +
             "\n";
    write_file(fs::path(out_dir) / "tables" / "within.tsv", tsv);
  }
  if (spec.cross_domain) {
    for (const char* metric : {"acc", "tau"}) {
      std::string tsv = "train";
      for (const DomainData& d : domains) tsv += "\t" + d.name;
      tsv += "\n";
      for (std::size_t di = 0; di < domains.size(); ++di) {
        tsv += domains[di].name;
        for (std::size_t ti = 0; ti < domains.size(); ++ti) {
          const CellResult& c = result.cross[di * domains.size() + ti];
          double v = std::string(metric) == "acc" ? c.acc : c.tau;
          tsv += "\t" + (c.ok ? fmt(v) : std::string("failed"));
        }
        tsv += "\n";
      }
      write_file(fs::path(out_dir) / "tables" / ("cross_" + std::string(metric) + ".tsv"),
                 tsv);
    }
  }
  if (!result.learnability.empty()) {
    std::string tsv =
        "size\treps_ok\treps_failed\tpmr_mean\tpmr_std\tacc_mean\tacc_std\ttau_mean\t"
        "tau_std\twlcs_f_mean\twlcs_f_std\n";
    for (const CurvePoint& p : result.learnability) {
      tsv += std::to_string(static_cast<std::size_t>(p.x)) + "\t" +
             std::to_string(p.reps_ok) + "\t" + std::to_string(p.reps_failed);
      for (const char* m : {"pmr", "acc", "tau", "wlcs_f"})
        tsv += "\t" + fmt(p.metric_mean.count(m) ? p.metric_mean.at(m) : 0.0) + "\t" +
               fmt(p.metric_std.count(m) ? p.metric_std.at(m) : 0.0);
      tsv += "\n";
    }
    write_file(fs::path(out_dir) / "curves" / "learnability.tsv", tsv);
  }
  if (!result.robustness.empty()) {
    std::string tsv = "p\trealized_rate\tpmr\tacc\ttau\twlcs_f\n";
    for (const CurvePoint& p : result.robustness) {
      tsv += fmt(p.x) + "\t" + fmt(p.realized_rate);
      for (const char* m : {"pmr", "acc", "tau", "wlcs_f"})
        tsv += "\t" + fmt(p.metric_mean.count(m) ? p.metric_mean.at(m) : 0.0);
      tsv += "\n";
    }
    write_file(fs::path(out_dir) / "curves" / "robustness.tsv", tsv);
  }

  return result;
}

}  // namespace ordbench
