#pragma once

// Hierarchical LSTM + pointer-network ordering model: a sequence-level LSTM
// encoder, a document-level LSTM encoder whose final state seeds the decoder,
// and an LSTM decoder that points at the next sequence through a multi-head
// affine attention score, trained teacher-forced with L2 weight decay.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ordbench/corpus.hpp"
#include "ordbench/metrics.hpp"
#include "ordbench/rng.hpp"
#include "ordbench/tensor.hpp"

namespace ordbench {

struct ModelConfig {
  std::size_t embed_dim = 100;
  std::size_t hidden_dim = 64;
  std::size_t attention_dim = 0;  // 0 means hidden_dim
  std::size_t pointer_heads = 4;
  std::size_t beam_width = 32;
  double l2_lambda = 1e-5;
  double dropout = 0.0;           // 0 disables; applied to sequence vectors in training

  std::size_t attn() const { return attention_dim == 0 ? hidden_dim : attention_dim; }
  void validate() const;
};

enum class OptimizerKind { Sgd, Adam };

struct TrainConfig {
  std::size_t batch_size = 8;
  std::size_t patience = 5;       // non-improving dev epochs tolerated
  std::size_t max_epochs = 100;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::Adam;
  std::size_t min_freq = 1;       // vocabulary cutoff built from the train split

  void validate() const;
};

struct EpochStats {
  std::size_t epoch = 0;          // 1-based
  double train_loss = 0;
  double train_pmr = 0;
  double dev_pmr = 0;
  double dev_acc = 0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;
  std::string stop_reason;        // "early_stop" | "max_epochs"
};

// Thrown when the training loss goes non-finite.
struct TrainingDiverged : std::runtime_error {
  explicit TrainingDiverged(std::size_t at_epoch)
      : std::runtime_error("training diverged at epoch " + std::to_string(at_epoch)),
        epoch(at_epoch) {}
  std::size_t epoch;
};

class OrderModel {
 public:
  OrderModel(ModelConfig cfg, Vocabulary vocab, const EmbeddingMatrix* pretrained,
             std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  const Vocabulary& vocab() const { return vocab_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  std::size_t parameter_count() const { return params_.total_size(); }

  // Final hidden state of the sequence LSTM over the embedded tokens.
  Graph::Id encode_sequence(Graph& g, const std::vector<std::size_t>& token_ids);

  struct DocState {
    std::vector<Graph::Id> seq_vecs;
    Graph::Id h;
    Graph::Id c;
  };
  // Document LSTM over the sequence vectors in the given (presentation)
  // order; its final state seeds the decoder.
  //
  // This is the seam for alternative document encoders (set-to-sequence
  // read/process units, position-free self-attention, graph recurrent
  // encoders): anything producing per-sequence context vectors plus an
  // initial decoder state can replace it; the pointer decoder below is
  // encoder-agnostic.
  DocState encode_document(Graph& g, const std::vector<Graph::Id>& seq_vecs);

  // Affine pointer score w2 . (W [s;h] + b) + b2, averaged over heads.
  Graph::Id pointer_score(Graph& g, Graph::Id seq_vec, Graph::Id dec_hidden);

  struct DecodeState {
    Graph::Id h;
    Graph::Id c;
    std::vector<std::uint8_t> visited;
    std::vector<std::size_t> order;
    double log_prob = 0;
  };
  // Advances the decoder LSTM (input: previously selected sequence vector,
  // zero at the first step) and returns the masked-softmax distribution over
  // unvisited indices. The state is updated in place (h, c only).
  Graph::Id decode_step(Graph& g, DecodeState& state, const DocState& doc);

  struct BeamResult {
    Order order;
    double log_prob = 0;
  };
  BeamResult beam_search(const std::vector<std::vector<std::size_t>>& sequences,
                         std::size_t beam_width);

  // Teacher-forced mean step loss for one document presented in the given
  // order; gold_steps[t] is the presentation index decoded at step t.
  Graph::Id document_loss(Graph& g, const std::vector<std::vector<std::size_t>>& sequences,
                          const std::vector<std::size_t>& gold_steps,
                          Pcg64* dropout_rng = nullptr);

  // Token ids for a sequence through this model's vocabulary.
  std::vector<std::size_t> ids_for(const Sequence& seq) const;

  void save(const std::string& path) const;
  static OrderModel load(const std::string& path);

 private:
  OrderModel(ModelConfig cfg, Vocabulary vocab);  // params filled by load()

  ModelConfig cfg_;
  Vocabulary vocab_;
  ParamStore params_;
};

// Teacher-forced training with per-epoch presentation shuffles, dev-PMR
// early stopping, and best-checkpoint return. Throws TrainingDiverged on a
// non-finite loss.
OrderModel train(const Corpus& train_corpus, const Corpus& dev_corpus,
                 const ModelConfig& mcfg, const TrainConfig& tcfg,
                 const EmbeddingMatrix* pretrained = nullptr,
                 TrainHistory* history = nullptr);

// One EvalPair per document: sequences are shuffled by a per-document
// substream of shuffle_seed, the model orders the shuffled presentation, and
// gold is the permutation that restores the original order.
std::vector<EvalPair> predict(OrderModel& model, const Corpus& corpus,
                              std::size_t beam_width, std::uint64_t shuffle_seed);

struct PredictionRecord {
  std::string id;
  std::vector<std::size_t> gold;
  std::vector<std::size_t> predicted;
  double log_prob = 0;
  std::uint64_t shuffle_seed = 0;
};

void save_predictions(const std::vector<PredictionRecord>& preds, const std::string& path);
std::vector<PredictionRecord> load_predictions(const std::string& path);
std::vector<EvalPair> to_eval_pairs(const std::vector<PredictionRecord>& preds);

}  // namespace ordbench
