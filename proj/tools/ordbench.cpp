// ordbench: benchmark toolkit for sentence- and paragraph-level text
// ordering. Subcommands cover the pipeline end to end: corpus preparation,
// statistics, noise corruption, bootstrap sampling, model training and
// inference, metric evaluation, experiment sweeps, and rating-agreement
// analysis.
//
// Exit status: 0 success, 1 invalid invocation or input validation failure,
// 2 runtime failure. Every successful run writes <out>/manifest.json with
// the resolved configuration.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ordbench/corpus.hpp"
#include "ordbench/harness.hpp"
#include "ordbench/humaneval.hpp"
#include "ordbench/kernels.hpp"
#include "ordbench/metrics.hpp"
#include "ordbench/model.hpp"
#include "ordbench/noise.hpp"
#include "ordbench/sampler.hpp"
#include "ordbench/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ordbench;

namespace {

void write_manifest(const std::string& out_dir, const std::string& subcommand,
                    json config) {
  json m;
  m["tool"] = "ordbench";
  m["version"] = kVersion;
  m["kernel_backend"] = kernels::backend_name();
  m["subcommand"] = subcommand;
  m["config"] = std::move(config);
  std::ofstream out(fs::path(out_dir) / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest under " + out_dir);
  out << m.dump(2) << "\n";
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

struct CommonOpts {
  std::string out;
  std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--out", opts.out, "output directory")->required();
  cmd->add_option("--seed", opts.seed, "master seed")->capture_default_str();
  // lets --config (a top-level option) appear after the subcommand name
  cmd->fallthrough(true);
}

Level parse_level(const std::string& s) { return level_from_string(s); }

// ---- prep ----

struct PrepOpts {
  CommonOpts common;
  std::string in;
  std::string level = "sentence";
  std::vector<double> ratios = {0.9, 0.05, 0.05};
  bool chronological = true;
  bool split = true;
};

int run_prep(const PrepOpts& o) {
  LoadResult loaded = load_corpus(o.in, parse_level(o.level));
  fs::create_directories(o.common.out);
  json cfg;
  cfg["in"] = o.in;
  cfg["level"] = o.level;
  cfg["dropped_short_documents"] = loaded.dropped_short_documents;
  if (o.split) {
    if (o.ratios.size() != 3)
      throw std::invalid_argument("--ratios needs exactly three values");
    SplitRatios ratios{o.ratios[0], o.ratios[1], o.ratios[2]};
    CorpusSplits splits = split_chronological(loaded.corpus, ratios, o.chronological);
    save_corpus(splits.train, (fs::path(o.common.out) / "train.jsonl").string());
    save_corpus(splits.dev, (fs::path(o.common.out) / "dev.jsonl").string());
    save_corpus(splits.test, (fs::path(o.common.out) / "test.jsonl").string());
    cfg["ratios"] = o.ratios;
    cfg["chronological"] = o.chronological;
    cfg["sizes"] = {splits.train.documents.size(), splits.dev.documents.size(),
                    splits.test.documents.size()};
  } else {
    save_corpus(loaded.corpus, (fs::path(o.common.out) / "corpus.jsonl").string());
    cfg["documents"] = loaded.corpus.documents.size();
  }
  write_manifest(o.common.out, "prep", std::move(cfg));
  std::cerr << "prep: kept " << loaded.corpus.documents.size() << " documents, dropped "
            << loaded.dropped_short_documents << " short ones\n";
  return 0;
}

// ---- stats ----

struct StatsOpts {
  CommonOpts common;
  std::string in;
  std::string level = "sentence";
};

int run_stats(const StatsOpts& o) {
  LoadResult loaded = load_corpus(o.in, parse_level(o.level));
  CorpusStats s = stats(loaded.corpus);
  std::string out_json = stats_to_json(s);
  fs::create_directories(o.common.out);
  write_text(fs::path(o.common.out) / "stats.json", out_json + "\n");
  json cfg;
  cfg["in"] = o.in;
  cfg["level"] = o.level;
  write_manifest(o.common.out, "stats", std::move(cfg));
  std::cout << out_json << "\n";
  return 0;
}

// ---- corrupt ----

struct CorruptOpts {
  CommonOpts common;
  std::string in;
  std::string level = "sentence";
  std::string slogans = "data/slogans.txt";
  double p = 0.0;
  std::vector<double> mode_weights = {1.0, 1.0, 1.0};
  double modify_fraction = 0.5;
};

int run_corrupt(const CorruptOpts& o) {
  LoadResult loaded = load_corpus(o.in, parse_level(o.level));
  NoiseConfig cfg;
  cfg.p = o.p;
  if (o.mode_weights.size() != 3)
    throw std::invalid_argument("--mode-weights needs exactly three values");
  for (std::size_t i = 0; i < 3; ++i) cfg.mode_weights[i] = o.mode_weights[i];
  cfg.modify_fraction = o.modify_fraction;
  cfg.seed = o.common.seed;
  if (cfg.mode_weights[0] > 0) cfg.slogans = load_slogans(o.slogans);

  CorruptResult result = corrupt_corpus(loaded.corpus, cfg);
  fs::create_directories(o.common.out);
  save_corpus(result.corpus, (fs::path(o.common.out) / "corrupted.jsonl").string());
  write_text(fs::path(o.common.out) / "audit.json", result.audit.to_json() + "\n");

  json jc;
  jc["in"] = o.in;
  jc["level"] = o.level;
  jc["p"] = o.p;
  jc["mode_weights"] = o.mode_weights;
  jc["modify_fraction"] = o.modify_fraction;
  jc["slogans"] = o.slogans;
  jc["seed"] = o.common.seed;
  jc["realized_rate"] = result.audit.realized_rate;
  write_manifest(o.common.out, "corrupt", std::move(jc));
  return 0;
}

// ---- sample ----

struct SampleOpts {
  CommonOpts common;
  std::string train, dev;
  std::string level = "sentence";
  std::string plan_path;
  std::size_t size = 0;
  double train_fraction = 0.90;
  double dev_fraction = 0.05;
  bool no_replacement = false;
  bool materialize = false;
};

int run_sample(const SampleOpts& o) {
  LoadResult train_c = load_corpus(o.train, parse_level(o.level));
  LoadResult dev_c = load_corpus(o.dev, parse_level(o.level));
  fs::create_directories(o.common.out);

  json cfg;
  cfg["train"] = o.train;
  cfg["dev"] = o.dev;
  cfg["seed"] = o.common.seed;
  if (!o.plan_path.empty()) {
    SamplePlan plan = SamplePlan::from_json_file(o.plan_path);
    if (plan.seed == 0) plan.seed = o.common.seed;
    std::vector<PlanEntry> entries = expand_plan(plan);
    json jes = json::array();
    for (const PlanEntry& e : entries)
      jes.push_back({{"size", e.size}, {"rep", e.rep}, {"seed", e.seed}});
    write_text(fs::path(o.common.out) / "plan_expansion.json", jes.dump(2) + "\n");
    cfg["plan"] = json::parse(plan.to_json());
    cfg["runs"] = entries.size();
    if (o.materialize) {
      for (const PlanEntry& e : entries) {
        BootstrapSample s =
            bootstrap_sample(train_c.corpus, dev_c.corpus, e.size, e.seed,
                             plan.train_fraction, plan.dev_fraction, !o.no_replacement);
        fs::path dir = fs::path(o.common.out) /
                       ("size_" + std::to_string(e.size) + "_rep_" + std::to_string(e.rep));
        fs::create_directories(dir);
        save_corpus(s.train, (dir / "train.jsonl").string());
        save_corpus(s.dev, (dir / "dev.jsonl").string());
      }
    }
  } else {
    if (o.size == 0)
      throw std::invalid_argument("sample: need --size or --plan");
    BootstrapSample s =
        bootstrap_sample(train_c.corpus, dev_c.corpus, o.size, o.common.seed,
                         o.train_fraction, o.dev_fraction, !o.no_replacement);
    save_corpus(s.train, (fs::path(o.common.out) / "train.jsonl").string());
    save_corpus(s.dev, (fs::path(o.common.out) / "dev.jsonl").string());
    cfg["size"] = o.size;
    cfg["dev_size"] = s.dev.documents.size();
    cfg["with_replacement"] = !o.no_replacement;
  }
  write_manifest(o.common.out, "sample", std::move(cfg));
  return 0;
}

// ---- train ----

struct TrainOpts {
  CommonOpts common;
  std::string train, dev;
  std::string level = "sentence";
  std::string embeddings;
  ModelConfig model;
  TrainConfig tcfg;
  std::string optimizer = "adam";
};

int run_train(const TrainOpts& o) {
  LoadResult train_c = load_corpus(o.train, parse_level(o.level));
  LoadResult dev_c = load_corpus(o.dev, parse_level(o.level));

  TrainConfig tcfg = o.tcfg;
  tcfg.seed = o.common.seed;
  if (o.optimizer == "adam") {
    tcfg.optimizer = OptimizerKind::Adam;
  } else if (o.optimizer == "sgd") {
    tcfg.optimizer = OptimizerKind::Sgd;
  } else {
    throw std::invalid_argument("--optimizer must be adam or sgd");
  }

  std::optional<EmbeddingMatrix> pretrained;
  if (!o.embeddings.empty()) {
    Vocabulary vocab = build_vocab(train_c.corpus, tcfg.min_freq);
    pretrained = load_embeddings(o.embeddings, vocab, o.model.embed_dim, o.common.seed);
    std::cerr << "embeddings: hit rate " << pretrained->hit_rate << "\n";
  }

  TrainHistory hist;
  OrderModel model = train(train_c.corpus, dev_c.corpus, o.model, tcfg,
                           pretrained ? &*pretrained : nullptr, &hist);

  fs::create_directories(o.common.out);
  model.save((fs::path(o.common.out) / "model.json").string());

  json jh;
  jh["best_epoch"] = hist.best_epoch;
  jh["stop_reason"] = hist.stop_reason;
  json epochs = json::array();
  for (const EpochStats& e : hist.epochs)
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"train_pmr", e.train_pmr},
                      {"dev_pmr", e.dev_pmr},
                      {"dev_acc", e.dev_acc}});
  jh["epochs"] = std::move(epochs);
  write_text(fs::path(o.common.out) / "history.json", jh.dump(2) + "\n");

  json cfg;
  cfg["train"] = o.train;
  cfg["dev"] = o.dev;
  cfg["level"] = o.level;
  cfg["embeddings"] = o.embeddings;
  cfg["seed"] = o.common.seed;
  cfg["optimizer"] = o.optimizer;
  cfg["model"] = {{"embed_dim", o.model.embed_dim},
                  {"hidden_dim", o.model.hidden_dim},
                  {"attention_dim", o.model.attention_dim},
                  {"pointer_heads", o.model.pointer_heads},
                  {"beam_width", o.model.beam_width},
                  {"l2_lambda", o.model.l2_lambda},
                  {"dropout", o.model.dropout}};
  cfg["train_cfg"] = {{"batch_size", o.tcfg.batch_size},
                      {"patience", o.tcfg.patience},
                      {"max_epochs", o.tcfg.max_epochs},
                      {"learning_rate", o.tcfg.learning_rate},
                      {"min_freq", o.tcfg.min_freq}};
  cfg["parameter_count"] = model.parameter_count();
  write_manifest(o.common.out, "train", std::move(cfg));
  std::cerr << "train: stopped (" << hist.stop_reason << ") best epoch "
            << hist.best_epoch << ", #pm " << model.parameter_count() << "\n";
  return 0;
}

// ---- order ----

struct OrderOpts {
  CommonOpts common;
  std::string model_path;
  std::string in;
  std::string level = "sentence";
  std::size_t beam = 0;  // 0: use the model's configured width
};

int run_order(const OrderOpts& o) {
  OrderModel model = OrderModel::load(o.model_path);
  LoadResult corpus = load_corpus(o.in, parse_level(o.level));
  const std::size_t beam = o.beam == 0 ? model.config().beam_width : o.beam;

  std::vector<EvalPair> pairs = predict(model, corpus.corpus, beam, o.common.seed);
  std::vector<PredictionRecord> records;
  for (const EvalPair& p : pairs) {
    PredictionRecord r;
    r.id = p.doc_id;
    r.gold = p.gold.perm;
    r.predicted = p.predicted.perm;
    r.shuffle_seed = o.common.seed;
    records.push_back(std::move(r));
  }
  fs::create_directories(o.common.out);
  save_predictions(records, (fs::path(o.common.out) / "predictions.jsonl").string());

  json cfg;
  cfg["model"] = o.model_path;
  cfg["in"] = o.in;
  cfg["beam_width"] = beam;
  cfg["shuffle_seed"] = o.common.seed;
  write_manifest(o.common.out, "order", std::move(cfg));
  return 0;
}

// ---- eval ----

struct EvalOpts {
  CommonOpts common;
  std::string pred;
  double weight_exponent = 1.2;
  double f_alpha = 0.5;
};

int run_eval(const EvalOpts& o) {
  std::vector<PredictionRecord> preds = load_predictions(o.pred);
  if (preds.empty()) throw std::invalid_argument("eval: no predictions in " + o.pred);
  WlcsParams params{o.weight_exponent, o.f_alpha};
  MetricReport report = aggregate(to_eval_pairs(preds), params);

  json j;
  j["corpus"] = {{"pmr", report.pmr},
                 {"mean_acc", report.mean_acc},
                 {"mean_tau", report.mean_tau},
                 {"mean_wlcs_f", report.mean_wlcs_f},
                 {"micro_acc", report.micro_acc},
                 {"documents", report.document_count}};
  json docs = json::array();
  for (const DocMetrics& d : report.per_document)
    docs.push_back({{"id", d.doc_id},
                    {"acc", d.acc},
                    {"tau", d.tau},
                    {"wlcs_p", d.wlcs_p},
                    {"wlcs_r", d.wlcs_r},
                    {"wlcs_f", d.wlcs_f}});
  j["per_document"] = std::move(docs);

  fs::create_directories(o.common.out);
  write_text(fs::path(o.common.out) / "report.json", j.dump(2) + "\n");

  char row[256];
  std::snprintf(row, sizeof(row), "%s\t%.6f\t%.6f\n",
                fs::path(o.pred).stem().string().c_str(), report.pmr, report.mean_wlcs_f);
  write_text(fs::path(o.common.out) / "report.tsv",
             std::string("dataset\tpmr\twlcs-l\n") + row);

  json cfg;
  cfg["pred"] = o.pred;
  cfg["weight_exponent"] = o.weight_exponent;
  cfg["f_alpha"] = o.f_alpha;
  write_manifest(o.common.out, "eval", std::move(cfg));
  std::cout << j["corpus"].dump(2) << "\n";
  return 0;
}

// ---- sweep ----

struct SweepOpts {
  CommonOpts common;
  std::string spec_path;
};

int run_sweep_cmd(const SweepOpts& o) {
  // Accept either a raw ExperimentSpec or a manifest.json from a prior run.
  std::ifstream in(o.spec_path);
  if (!in) throw std::runtime_error("cannot open spec: " + o.spec_path);
  json j = json::parse(in);
  ExperimentSpec spec = j.contains("spec") && j.contains("tool")
                            ? ExperimentSpec::from_json(j.at("spec").dump())
                            : ExperimentSpec::from_json(j.dump());
  run_sweep(spec, o.common.out);
  std::cerr << "sweep: results under " << o.common.out << "\n";
  return 0;
}

// ---- agree ----

struct AgreeOpts {
  CommonOpts common;
  std::string ratings;
  std::string metrics_path;
  bool leave_one_out = false;
};

int run_agree(const AgreeOpts& o) {
  RatingMatrix matrix = load_ratings(o.ratings);
  AgreementReport pearson_rep = interrater_pearson(matrix, o.leave_one_out);
  double alpha = krippendorff_alpha(matrix);

  json j;
  j["judges"] = matrix.judges().size();
  j["passages"] = matrix.passages().size();
  j["ratings"] = matrix.rating_count();
  j["missing"] = matrix.missing_count();
  j["krippendorff_alpha"] = alpha;
  json jp;
  jp["leave_one_out"] = pearson_rep.leave_one_out;
  if (pearson_rep.mean_r) jp["mean_r"] = *pearson_rep.mean_r;
  json per = json::array();
  for (const JudgeCorrelation& jc : pearson_rep.per_judge) {
    json e;
    e["judge"] = jc.judge;
    e["passages_used"] = jc.passages_used;
    if (jc.r) {
      e["r"] = *jc.r;
      e["p_value"] = pearson_p_value(*jc.r, jc.passages_used);
    }
    per.push_back(std::move(e));
  }
  jp["per_judge"] = std::move(per);
  j["pearson"] = std::move(jp);

  if (!o.metrics_path.empty()) {
    // TSV: header "passage<TAB>metric..<TAB>metric"; one row per passage.
    std::ifstream mf(o.metrics_path);
    if (!mf) throw std::runtime_error("cannot open metrics file: " + o.metrics_path);
    std::string header;
    std::getline(mf, header);
    std::vector<std::string> columns;
    {
      std::istringstream hs(header);
      std::string col;
      while (std::getline(hs, col, '\t')) columns.push_back(col);
    }
    if (columns.size() < 2 || columns[0] != "passage")
      throw std::invalid_argument("metrics file header must be 'passage<TAB>metric...'");

    std::map<std::string, std::vector<double>> values;  // passage -> columns
    std::string line;
    std::size_t row = 1;
    while (std::getline(mf, line)) {
      ++row;
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string passage, cell;
      std::getline(ls, passage, '\t');
      std::vector<double> vals;
      while (std::getline(ls, cell, '\t')) vals.push_back(std::stod(cell));
      if (vals.size() != columns.size() - 1)
        throw std::invalid_argument("metrics row " + std::to_string(row) +
                                    ": column count mismatch");
      values[passage] = std::move(vals);
    }

    const std::size_t no_judge = matrix.judges().size() + 1;
    json regressions = json::object();
    for (std::size_t c = 1; c < columns.size(); ++c) {
      std::vector<double> xs, ys;
      for (std::size_t p = 0; p < matrix.passages().size(); ++p) {
        auto it = values.find(matrix.passages()[p]);
        if (it == values.end()) continue;
        auto m = matrix.passage_mean(p, no_judge);
        if (!m) continue;
        xs.push_back(it->second[c - 1]);
        ys.push_back(*m);
      }
      Regression reg = regress_metric(xs, ys);
      regressions[columns[c]] = {{"slope", reg.slope},
                                 {"intercept", reg.intercept},
                                 {"r_squared", reg.r_squared},
                                 {"p_value", reg.p_value},
                                 {"n", reg.n}};
    }
    j["regressions"] = std::move(regressions);
  }

  fs::create_directories(o.common.out);
  write_text(fs::path(o.common.out) / "agreement.json", j.dump(2) + "\n");
  json cfg;
  cfg["ratings"] = o.ratings;
  cfg["metrics"] = o.metrics_path;
  cfg["leave_one_out"] = o.leave_one_out;
  write_manifest(o.common.out, "agree", std::move(cfg));
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ordbench: text ordering benchmark toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  // Precedence: explicit flags > config file > built-in defaults. Options of
  // a subcommand live in a section named after it, e.g. [corrupt].
  app.set_config("--config", "", "read options from an INI/TOML file");

  PrepOpts prep;
  CLI::App* cmd_prep = app.add_subcommand("prep", "filter, merge bullets and split a corpus");
  cmd_prep->add_option("--in", prep.in, "corpus JSONL")->required();
  cmd_prep->add_option("--level", prep.level, "sentence|paragraph")->capture_default_str();
  cmd_prep->add_option("--ratios", prep.ratios, "train,dev,test fractions")->expected(3);
  cmd_prep->add_flag("!--no-chronological", prep.chronological, "keep file order");
  cmd_prep->add_flag("!--no-split", prep.split, "only filter, no split");
  add_common(cmd_prep, prep.common);

  StatsOpts statso;
  CLI::App* cmd_stats = app.add_subcommand("stats", "corpus statistics");
  cmd_stats->add_option("--in", statso.in, "corpus JSONL")->required();
  cmd_stats->add_option("--level", statso.level, "sentence|paragraph")->capture_default_str();
  add_common(cmd_stats, statso.common);

  CorruptOpts corrupt;
  CLI::App* cmd_corrupt = app.add_subcommand("corrupt", "inject noise into a corpus");
  cmd_corrupt->add_option("--in", corrupt.in, "corpus JSONL")->required();
  cmd_corrupt->add_option("--level", corrupt.level, "sentence|paragraph")->capture_default_str();
  cmd_corrupt->add_option("--p", corrupt.p, "contamination probability")->required();
  cmd_corrupt->add_option("--slogans", corrupt.slogans, "slogan file")->capture_default_str();
  cmd_corrupt->add_option("--mode-weights", corrupt.mode_weights,
                          "insert,remove,modify weights")->expected(3);
  cmd_corrupt->add_option("--modify-fraction", corrupt.modify_fraction,
                          "fraction of tokens edited")->capture_default_str();
  add_common(cmd_corrupt, corrupt.common);

  SampleOpts sample;
  CLI::App* cmd_sample = app.add_subcommand("sample", "bootstrap mini datasets");
  cmd_sample->add_option("--train", sample.train, "parent train JSONL")->required();
  cmd_sample->add_option("--dev", sample.dev, "parent dev JSONL")->required();
  cmd_sample->add_option("--level", sample.level, "sentence|paragraph")->capture_default_str();
  cmd_sample->add_option("--size", sample.size, "train sample size");
  cmd_sample->add_option("--plan", sample.plan_path, "sample plan JSON");
  cmd_sample->add_option("--train-fraction", sample.train_fraction, "")->capture_default_str();
  cmd_sample->add_option("--dev-fraction", sample.dev_fraction, "")->capture_default_str();
  cmd_sample->add_flag("--no-replacement", sample.no_replacement,
                       "sample without replacement");
  cmd_sample->add_flag("--materialize", sample.materialize,
                       "write every planned sample");
  add_common(cmd_sample, sample.common);

  TrainOpts traino;
  CLI::App* cmd_train = app.add_subcommand("train", "train the ordering model");
  cmd_train->add_option("--train", traino.train, "train JSONL")->required();
  cmd_train->add_option("--dev", traino.dev, "dev JSONL")->required();
  cmd_train->add_option("--level", traino.level, "sentence|paragraph")->capture_default_str();
  cmd_train->add_option("--embeddings", traino.embeddings, "pretrained embedding file");
  cmd_train->add_option("--embed-dim", traino.model.embed_dim, "")->capture_default_str();
  cmd_train->add_option("--hidden-dim", traino.model.hidden_dim, "")->capture_default_str();
  cmd_train->add_option("--attention-dim", traino.model.attention_dim, "")->capture_default_str();
  cmd_train->add_option("--heads", traino.model.pointer_heads, "")->capture_default_str();
  cmd_train->add_option("--beam", traino.model.beam_width, "")->capture_default_str();
  cmd_train->add_option("--l2", traino.model.l2_lambda, "")->capture_default_str();
  cmd_train->add_option("--dropout", traino.model.dropout, "")->capture_default_str();
  cmd_train->add_option("--batch", traino.tcfg.batch_size, "")->capture_default_str();
  cmd_train->add_option("--patience", traino.tcfg.patience, "")->capture_default_str();
  cmd_train->add_option("--max-epochs", traino.tcfg.max_epochs, "")->capture_default_str();
  cmd_train->add_option("--lr", traino.tcfg.learning_rate, "")->capture_default_str();
  cmd_train->add_option("--min-freq", traino.tcfg.min_freq, "")->capture_default_str();
  cmd_train->add_option("--optimizer", traino.optimizer, "adam|sgd")->capture_default_str();
  add_common(cmd_train, traino.common);

  OrderOpts ordero;
  CLI::App* cmd_order = app.add_subcommand("order", "order documents with a trained model");
  cmd_order->add_option("--model", ordero.model_path, "model checkpoint")->required();
  cmd_order->add_option("--in", ordero.in, "corpus JSONL")->required();
  cmd_order->add_option("--level", ordero.level, "sentence|paragraph")->capture_default_str();
  cmd_order->add_option("--beam", ordero.beam, "beam width (0: model default)")->capture_default_str();
  add_common(cmd_order, ordero.common);

  EvalOpts evalo;
  CLI::App* cmd_eval = app.add_subcommand("eval", "score prediction files");
  cmd_eval->add_option("--pred", evalo.pred, "predictions JSONL")->required();
  cmd_eval->add_option("--weight-exponent", evalo.weight_exponent, "")->capture_default_str();
  cmd_eval->add_option("--f-alpha", evalo.f_alpha, "")->capture_default_str();
  add_common(cmd_eval, evalo.common);

  SweepOpts sweepo;
  CLI::App* cmd_sweep = app.add_subcommand("sweep", "run an experiment spec");
  cmd_sweep->add_option("--spec", sweepo.spec_path, "experiment spec or manifest JSON")
      ->required();
  add_common(cmd_sweep, sweepo.common);

  AgreeOpts agreeo;
  CLI::App* cmd_agree = app.add_subcommand("agree", "rating agreement analysis");
  cmd_agree->add_option("--ratings", agreeo.ratings, "ratings TSV")->required();
  cmd_agree->add_option("--metrics", agreeo.metrics_path, "per-passage metric TSV");
  cmd_agree->add_flag("--leave-one-out", agreeo.leave_one_out,
                      "exclude the judge from the passage mean");
  add_common(cmd_agree, agreeo.common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << "\n";
    return 1;
  }

  try {
    if (cmd_prep->parsed()) return run_prep(prep);
    if (cmd_stats->parsed()) return run_stats(statso);
    if (cmd_corrupt->parsed()) return run_corrupt(corrupt);
    if (cmd_sample->parsed()) return run_sample(sample);
    if (cmd_train->parsed()) return run_train(traino);
    if (cmd_order->parsed()) return run_order(ordero);
    if (cmd_eval->parsed()) return run_eval(evalo);
    if (cmd_sweep->parsed()) return run_sweep_cmd(sweepo);
    if (cmd_agree->parsed()) return run_agree(agreeo);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
