#include "ordbench/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "ordbench/rng.hpp"

namespace ordbench {

using nlohmann::json;

void ModelConfig::validate() const {
  if (embed_dim == 0 || hidden_dim == 0 || pointer_heads == 0 || beam_width == 0)
    throw std::invalid_argument("model config: dimensions must be positive");
  if (attn() % pointer_heads != 0)
    throw std::invalid_argument("model config: pointer_heads must divide attention_dim");
  if (l2_lambda < 0) throw std::invalid_argument("model config: l2_lambda must be >= 0");
  if (dropout < 0 || dropout >= 1)
    throw std::invalid_argument("model config: dropout must be in [0,1)");
}

void TrainConfig::validate() const {
  if (batch_size == 0 || patience == 0 || max_epochs == 0)
    throw std::invalid_argument("train config: counts must be positive");
  if (!(learning_rate > 0))
    throw std::invalid_argument("train config: learning_rate must be positive");
  if (min_freq == 0) throw std::invalid_argument("train config: min_freq must be >= 1");
}

namespace {

std::string head_name(const char* field, std::size_t head) {
  return "pointer.head" + std::to_string(head) + "." + std::string(field);
}

}  // namespace

OrderModel::OrderModel(ModelConfig cfg, Vocabulary vocab)
    : cfg_(std::move(cfg)), vocab_(std::move(vocab)) {}

OrderModel::OrderModel(ModelConfig cfg, Vocabulary vocab, const EmbeddingMatrix* pretrained,
                       std::uint64_t seed)
    : cfg_(std::move(cfg)), vocab_(std::move(vocab)) {
  cfg_.validate();
  const std::size_t v = vocab_.size();
  const std::size_t e = cfg_.embed_dim;
  const std::size_t h = cfg_.hidden_dim;
  const std::size_t a = cfg_.attn() / cfg_.pointer_heads;

  if (pretrained) {
    if (pretrained->dim != e)
      throw std::invalid_argument("embedding dim " + std::to_string(pretrained->dim) +
                                  " does not match embed_dim " + std::to_string(e));
    if (pretrained->rows() != v)
      throw std::invalid_argument("embedding rows do not match vocabulary size");
    Tensor emb = Tensor::zeros({v, e});
    for (std::size_t i = 0; i < emb.v.size(); ++i)
      emb.v[i] = static_cast<real>(pretrained->values[i]);
    params_.add("embedding", std::move(emb));
  } else {
    params_.add("embedding", uniform_init({v, e}, e, mix(seed, hash_str("embedding"))));
  }

  params_.add("seq.W", uniform_init({4 * h, e + h}, e + h, mix(seed, hash_str("seq.W"))));
  params_.add("seq.b", Tensor::zeros({4 * h}));
  params_.add("doc.W", uniform_init({4 * h, h + h}, h + h, mix(seed, hash_str("doc.W"))));
  params_.add("doc.b", Tensor::zeros({4 * h}));
  params_.add("dec.W", uniform_init({4 * h, h + h}, h + h, mix(seed, hash_str("dec.W"))));
  params_.add("dec.b", Tensor::zeros({4 * h}));
  for (std::size_t k = 0; k < cfg_.pointer_heads; ++k) {
    params_.add(head_name("W", k),
                uniform_init({a, 2 * h}, 2 * h, mix(seed, hash_str(head_name("W", k)))));
    params_.add(head_name("b", k), Tensor::zeros({a}));
    params_.add(head_name("w2", k),
                uniform_init({1, a}, a, mix(seed, hash_str(head_name("w2", k)))));
    params_.add(head_name("b2", k), Tensor::zeros({1}));
  }
}

std::vector<std::size_t> OrderModel::ids_for(const Sequence& seq) const {
  if (!seq.token_ids.empty()) {
    for (std::size_t id : seq.token_ids)
      if (id >= vocab_.size())
        throw std::invalid_argument("sequence token id exceeds model vocabulary");
    return seq.token_ids;
  }
  std::vector<std::size_t> ids;
  ids.reserve(seq.tokens.size());
  for (const std::string& t : seq.tokens) ids.push_back(vocab_.id_of(t));
  return ids;
}

Graph::Id OrderModel::encode_sequence(Graph& g, const std::vector<std::size_t>& token_ids) {
  if (token_ids.empty())
    throw std::invalid_argument("encode_sequence: empty sequence");
  const std::size_t h = cfg_.hidden_dim;
  Graph::Id emb = g.param(*params_.find("embedding"));
  Graph::Id w = g.param(*params_.find("seq.W"));
  Graph::Id b = g.param(*params_.find("seq.b"));
  Graph::Id hs = g.input(Tensor::zeros({h}));
  Graph::Id cs = g.input(Tensor::zeros({h}));
  for (std::size_t id : token_ids) {
    auto out = g.lstm_cell(g.row(emb, id), hs, cs, w, b, h);
    hs = out.h;
    cs = out.c;
  }
  return hs;
}

OrderModel::DocState OrderModel::encode_document(Graph& g,
                                                 const std::vector<Graph::Id>& seq_vecs) {
  if (seq_vecs.size() < 2)
    throw std::invalid_argument("encode_document: need at least 2 sequences");
  const std::size_t h = cfg_.hidden_dim;
  Graph::Id w = g.param(*params_.find("doc.W"));
  Graph::Id b = g.param(*params_.find("doc.b"));
  DocState state;
  state.seq_vecs = seq_vecs;
  state.h = g.input(Tensor::zeros({h}));
  state.c = g.input(Tensor::zeros({h}));
  for (Graph::Id s : seq_vecs) {
    auto out = g.lstm_cell(s, state.h, state.c, w, b, h);
    state.h = out.h;
    state.c = out.c;
  }
  return state;
}

Graph::Id OrderModel::pointer_score(Graph& g, Graph::Id seq_vec, Graph::Id dec_hidden) {
  Graph::Id sh = g.concat(seq_vec, dec_hidden);
  Graph::Id acc = -1;
  for (std::size_t k = 0; k < cfg_.pointer_heads; ++k) {
    Graph::Id u = g.add(g.matmul(g.param(*params_.find(head_name("W", k))), sh),
                        g.param(*params_.find(head_name("b", k))));
    Graph::Id e = g.add(g.matmul(g.param(*params_.find(head_name("w2", k))), u),
                        g.param(*params_.find(head_name("b2", k))));
    acc = (acc < 0) ? e : g.add(acc, e);
  }
  return g.scale(acc, real{1} / static_cast<real>(cfg_.pointer_heads));
}

Graph::Id OrderModel::decode_step(Graph& g, DecodeState& state, const DocState& doc) {
  const std::size_t n = doc.seq_vecs.size();
  if (state.visited.size() != n)
    throw std::invalid_argument("decode_step: visited mask size mismatch");
  bool any_live = false;
  for (std::size_t i = 0; i < n; ++i)
    if (!state.visited[i]) any_live = true;
  if (!any_live) throw std::invalid_argument("decode_step: all indices visited");

  Graph::Id x = state.order.empty()
                    ? g.input(Tensor::zeros({cfg_.hidden_dim}))
                    : doc.seq_vecs[state.order.back()];
  auto out = g.lstm_cell(x, state.h, state.c, g.param(*params_.find("dec.W")),
                         g.param(*params_.find("dec.b")), cfg_.hidden_dim);
  state.h = out.h;
  state.c = out.c;

  Graph::Id logits = -1;
  for (std::size_t i = 0; i < n; ++i) {
    Graph::Id e = pointer_score(g, doc.seq_vecs[i], state.h);
    logits = (logits < 0) ? e : g.concat(logits, e);
  }
  std::vector<std::uint8_t> live(n);
  for (std::size_t i = 0; i < n; ++i) live[i] = state.visited[i] ? 0 : 1;
  return g.masked_softmax(logits, std::move(live));
}

Graph::Id OrderModel::document_loss(Graph& g,
                                    const std::vector<std::vector<std::size_t>>& sequences,
                                    const std::vector<std::size_t>& gold_steps,
                                    Pcg64* dropout_rng) {
  const std::size_t n = sequences.size();
  if (gold_steps.size() != n)
    throw std::invalid_argument("document_loss: gold length mismatch");

  std::vector<Graph::Id> seq_vecs;
  seq_vecs.reserve(n);
  for (const auto& ids : sequences) {
    Graph::Id s = encode_sequence(g, ids);
    if (dropout_rng && cfg_.dropout > 0) {
      // Inverted dropout on the sequence vector.
      Tensor mask = Tensor::zeros({cfg_.hidden_dim});
      const real keep = real{1} - static_cast<real>(cfg_.dropout);
      for (real& m : mask.v)
        m = dropout_rng->next_double() < cfg_.dropout ? real{0} : real{1} / keep;
      s = g.mul(s, g.input(std::move(mask)));
    }
    seq_vecs.push_back(s);
  }

  DocState doc = encode_document(g, seq_vecs);
  DecodeState state;
  state.h = doc.h;
  state.c = doc.c;
  state.visited.assign(n, 0);

  Graph::Id total = -1;
  for (std::size_t t = 0; t < n; ++t) {
    Graph::Id dist = decode_step(g, state, doc);
    Graph::Id step_loss = g.pick_neg_log(dist, gold_steps[t]);
    total = (total < 0) ? step_loss : g.add(total, step_loss);
    state.visited[gold_steps[t]] = 1;  // teacher forcing
    state.order.push_back(gold_steps[t]);
  }
  return g.scale(total, real{1} / static_cast<real>(n));
}

OrderModel::BeamResult OrderModel::beam_search(
    const std::vector<std::vector<std::size_t>>& sequences, std::size_t beam_width) {
  if (beam_width == 0) throw std::invalid_argument("beam_search: beam_width must be >= 1");
  const std::size_t n = sequences.size();

  Graph g;
  std::vector<Graph::Id> seq_vecs;
  seq_vecs.reserve(n);
  for (const auto& ids : sequences) seq_vecs.push_back(encode_sequence(g, ids));
  DocState doc = encode_document(g, seq_vecs);

  DecodeState init;
  init.h = doc.h;
  init.c = doc.c;
  init.visited.assign(n, 0);
  std::vector<DecodeState> beams = {init};

  for (std::size_t t = 0; t < n; ++t) {
    std::vector<DecodeState> candidates;
    for (DecodeState& state : beams) {
      DecodeState advanced = state;  // h,c updated by decode_step
      Graph::Id d = decode_step(g, advanced, doc);
      const Tensor& probs = g.value(d);
      for (std::size_t i = 0; i < n; ++i) {
        if (advanced.visited[i]) continue;
        DecodeState next = advanced;
        next.visited[i] = 1;
        next.order.push_back(i);
        next.log_prob += std::log(static_cast<double>(probs.v[i]));
        candidates.push_back(std::move(next));
      }
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const DecodeState& a, const DecodeState& b) {
                if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
                return a.order < b.order;  // ties: smaller first-differing index
              });
    if (candidates.size() > beam_width) candidates.resize(beam_width);
    beams = std::move(candidates);
  }

  BeamResult result;
  result.order.perm = beams.front().order;
  result.log_prob = beams.front().log_prob;
  return result;
}

// ---------------------------------------------------------------------------
// Training

namespace {

struct EncodedDoc {
  std::string id;
  std::vector<std::vector<std::size_t>> sequences;  // token ids, gold order
};

std::vector<EncodedDoc> encode_docs(const Corpus& corpus, const OrderModel& model) {
  std::vector<EncodedDoc> out;
  out.reserve(corpus.documents.size());
  for (const Document& doc : corpus.documents) {
    EncodedDoc e;
    e.id = doc.id;
    for (const Sequence& s : doc.sequences) e.sequences.push_back(model.ids_for(s));
    out.push_back(std::move(e));
  }
  return out;
}

// Presentation permutation for one document; perm[j] = original index shown
// at presentation slot j.
std::vector<std::size_t> presentation(std::uint64_t seed, const std::string& doc_id,
                                      std::size_t n) {
  Pcg64 rng(seed, hash_str(doc_id));
  return rng.permutation(n);
}

std::vector<std::size_t> gold_steps_for(const std::vector<std::size_t>& perm) {
  // Step t must pick the presentation slot holding original sequence t.
  std::vector<std::size_t> gold(perm.size());
  for (std::size_t j = 0; j < perm.size(); ++j) gold[perm[j]] = j;
  return gold;
}

double corpus_pmr(OrderModel& model, const std::vector<EncodedDoc>& docs,
                  std::size_t beam_width, std::uint64_t shuffle_seed, double* acc_out) {
  std::size_t exact = 0;
  double acc_sum = 0;
  for (const EncodedDoc& doc : docs) {
    const std::size_t n = doc.sequences.size();
    std::vector<std::size_t> perm = presentation(shuffle_seed, doc.id, n);
    std::vector<std::vector<std::size_t>> shown(n);
    for (std::size_t j = 0; j < n; ++j) shown[j] = doc.sequences[perm[j]];
    OrderModel::BeamResult res = model.beam_search(shown, beam_width);
    std::vector<std::size_t> gold = gold_steps_for(perm);
    if (res.order.perm == gold) ++exact;
    std::size_t hits = 0;
    for (std::size_t t = 0; t < n; ++t)
      if (res.order.perm[t] == gold[t]) ++hits;
    acc_sum += static_cast<double>(hits) / static_cast<double>(n);
  }
  if (acc_out) *acc_out = acc_sum / static_cast<double>(docs.size());
  return static_cast<double>(exact) / static_cast<double>(docs.size());
}

}  // namespace

OrderModel train(const Corpus& train_corpus, const Corpus& dev_corpus,
                 const ModelConfig& mcfg, const TrainConfig& tcfg,
                 const EmbeddingMatrix* pretrained, TrainHistory* history) {
  mcfg.validate();
  tcfg.validate();
  if (train_corpus.documents.empty() || dev_corpus.documents.empty())
    throw std::invalid_argument("train: empty corpus");

  Vocabulary vocab = build_vocab(train_corpus, tcfg.min_freq);
  OrderModel model(mcfg, std::move(vocab), pretrained, tcfg.seed);

  std::vector<EncodedDoc> train_docs = encode_docs(train_corpus, model);
  std::vector<EncodedDoc> dev_docs = encode_docs(dev_corpus, model);

  std::unique_ptr<Optimizer> opt;
  if (tcfg.optimizer == OptimizerKind::Adam)
    opt = std::make_unique<AdamOptimizer>(AdamConfig{tcfg.learning_rate});
  else
    opt = std::make_unique<SgdOptimizer>(SgdConfig{tcfg.learning_rate});

  const std::uint64_t dev_shuffle = mix(tcfg.seed, hash_str("dev-shuffle"));
  const std::uint64_t train_shuffle = mix(tcfg.seed, hash_str("train-eval-shuffle"));

  TrainHistory local;
  TrainHistory& hist = history ? *history : local;
  hist.epochs.clear();
  hist.best_epoch = 0;
  double best_dev = -1;
  std::string best_checkpoint;
  Pcg64 dropout_rng(tcfg.seed, hash_str("dropout"));

  for (std::size_t epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
    Pcg64 order_rng(mix(tcfg.seed, hash_str("epoch-order")), epoch);
    std::vector<std::size_t> doc_order = order_rng.permutation(train_docs.size());
    const std::uint64_t pres_seed = mix(mix(tcfg.seed, hash_str("presentation")), epoch);

    double loss_sum = 0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < doc_order.size(); start += tcfg.batch_size) {
      const std::size_t end = std::min(start + tcfg.batch_size, doc_order.size());
      Graph g;
      Graph::Id batch_loss = -1;
      for (std::size_t b = start; b < end; ++b) {
        const EncodedDoc& doc = train_docs[doc_order[b]];
        const std::size_t n = doc.sequences.size();
        std::vector<std::size_t> perm = presentation(pres_seed, doc.id, n);
        std::vector<std::vector<std::size_t>> shown(n);
        for (std::size_t j = 0; j < n; ++j) shown[j] = doc.sequences[perm[j]];
        Graph::Id dl = model.document_loss(g, shown, gold_steps_for(perm),
                                           mcfg.dropout > 0 ? &dropout_rng : nullptr);
        batch_loss = (batch_loss < 0) ? dl : g.add(batch_loss, dl);
      }
      batch_loss = g.scale(batch_loss, real{1} / static_cast<real>(end - start));
      if (mcfg.l2_lambda > 0) {
        Graph::Id penalty = -1;
        for (Parameter& p : model.params()) {
          Graph::Id sq = g.sumsq(g.param(p));
          penalty = (penalty < 0) ? sq : g.add(penalty, sq);
        }
        batch_loss = g.add(batch_loss, g.scale(penalty, static_cast<real>(mcfg.l2_lambda)));
      }

      const double loss_value = static_cast<double>(g.value(batch_loss).v[0]);
      if (!std::isfinite(loss_value)) throw TrainingDiverged(epoch);
      loss_sum += loss_value;
      ++batches;

      model.params().zero_grads();
      g.backward(batch_loss);
      opt->step(model.params());
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(batches);
    stats.train_pmr = corpus_pmr(model, train_docs, mcfg.beam_width, train_shuffle, nullptr);
    stats.dev_pmr = corpus_pmr(model, dev_docs, mcfg.beam_width, dev_shuffle, &stats.dev_acc);
    hist.epochs.push_back(stats);

    if (stats.dev_pmr > best_dev) {
      best_dev = stats.dev_pmr;
      hist.best_epoch = epoch;
      best_checkpoint = model.params().to_json();
    } else if (epoch - hist.best_epoch >= tcfg.patience) {
      hist.stop_reason = "early_stop";
      break;
    }
  }
  if (hist.stop_reason.empty()) hist.stop_reason = "max_epochs";

  if (!best_checkpoint.empty()) {
    ParamStore best = ParamStore::from_json(best_checkpoint);
    for (Parameter& p : model.params()) {
      const Parameter* src = best.find(p.name);
      p.value = src->value;
    }
  }
  return model;
}

std::vector<EvalPair> predict(OrderModel& model, const Corpus& corpus,
                              std::size_t beam_width, std::uint64_t shuffle_seed) {
  std::vector<EvalPair> pairs;
  for (const Document& doc : corpus.documents) {
    const std::size_t n = doc.sequences.size();
    std::vector<std::size_t> perm = presentation(shuffle_seed, doc.id, n);
    std::vector<std::vector<std::size_t>> shown(n);
    for (std::size_t j = 0; j < n; ++j) shown[j] = model.ids_for(doc.sequences[perm[j]]);
    OrderModel::BeamResult res = model.beam_search(shown, beam_width);

    EvalPair pair;
    pair.doc_id = doc.id;
    pair.predicted = res.order;
    pair.gold.perm = gold_steps_for(perm);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

// ---------------------------------------------------------------------------
// Serialization

void OrderModel::save(const std::string& path) const {
  json j = json::parse(params_.to_json());
  json cfg;
  cfg["embed_dim"] = cfg_.embed_dim;
  cfg["hidden_dim"] = cfg_.hidden_dim;
  cfg["attention_dim"] = cfg_.attention_dim;
  cfg["pointer_heads"] = cfg_.pointer_heads;
  cfg["beam_width"] = cfg_.beam_width;
  cfg["l2_lambda"] = cfg_.l2_lambda;
  cfg["dropout"] = cfg_.dropout;
  j["config"] = std::move(cfg);
  json v;
  v["tokens"] = vocab_.id_to_token;
  v["unk_id"] = vocab_.unk_id;
  v["min_freq"] = vocab_.min_freq;
  j["vocab"] = std::move(v);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model checkpoint: " + path);
  out << j.dump() << "\n";
}

OrderModel OrderModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model checkpoint: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json j = json::parse(ss.str());

  ModelConfig cfg;
  const json& jc = j.at("config");
  cfg.embed_dim = jc.at("embed_dim").get<std::size_t>();
  cfg.hidden_dim = jc.at("hidden_dim").get<std::size_t>();
  cfg.attention_dim = jc.at("attention_dim").get<std::size_t>();
  cfg.pointer_heads = jc.at("pointer_heads").get<std::size_t>();
  cfg.beam_width = jc.at("beam_width").get<std::size_t>();
  cfg.l2_lambda = jc.at("l2_lambda").get<double>();
  cfg.dropout = jc.at("dropout").get<double>();

  Vocabulary vocab;
  const json& jv = j.at("vocab");
  vocab.id_to_token = jv.at("tokens").get<std::vector<std::string>>();
  vocab.unk_id = jv.at("unk_id").get<std::size_t>();
  vocab.min_freq = jv.at("min_freq").get<std::size_t>();
  for (std::size_t i = 0; i < vocab.id_to_token.size(); ++i)
    if (i != vocab.unk_id) vocab.token_to_id.emplace(vocab.id_to_token[i], i);

  OrderModel model(std::move(cfg), std::move(vocab));
  ParamStore loaded = ParamStore::from_json(ss.str());
  for (Parameter& p : loaded) model.params_.add(p.name, std::move(p.value));
  return model;
}

void save_predictions(const std::vector<PredictionRecord>& preds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write predictions: " + path);
  for (const PredictionRecord& p : preds) {
    json j;
    j["id"] = p.id;
    j["gold"] = p.gold;
    j["predicted"] = p.predicted;
    j["logprob"] = p.log_prob;
    j["shuffle_seed"] = p.shuffle_seed;
    out << j.dump() << "\n";
  }
}

std::vector<PredictionRecord> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open predictions: " + path);
  std::vector<PredictionRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      PredictionRecord p;
      p.id = j.at("id").get<std::string>();
      p.gold = j.at("gold").get<std::vector<std::size_t>>();
      p.predicted = j.at("predicted").get<std::vector<std::size_t>>();
      p.log_prob = j.value("logprob", 0.0);
      p.shuffle_seed = j.value("shuffle_seed", std::uint64_t{0});
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw std::runtime_error("predictions line " + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
  return out;
}

std::vector<EvalPair> to_eval_pairs(const std::vector<PredictionRecord>& preds) {
  std::vector<EvalPair> pairs;
  for (const PredictionRecord& p : preds) {
    EvalPair pair;
    pair.doc_id = p.id;
    pair.predicted.perm = p.predicted;
    pair.gold.perm = p.gold;
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

}  // namespace ordbench
