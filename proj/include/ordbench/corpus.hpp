#pragma once

// Corpus ingestion: JSONL documents, tokenization, vocabulary, chronological
// splits, pretrained-embedding loading, and summary statistics.
//
// Document JSONL schema, one document per line:
//   {"id": str, "date": "YYYY-MM-DD"|null, "sequences": [str, ...],
//    "kinds": ["plain"|"bullet", ...]?}
// sequences are in gold order; "kinds" is only consumed by merge_bullets.

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace ordbench {

struct Sequence {
  std::string text;
  std::vector<std::string> tokens;          // tokenizer output of text
  std::vector<std::size_t> token_ids;       // present after encode()

  static Sequence from_text(std::string text);
};

struct Document {
  std::string id;
  std::optional<std::string> date;          // ISO-8601 date
  std::vector<Sequence> sequences;          // list order is the gold order
};

enum class Level { Sentence, Paragraph };

std::string to_string(Level level);
Level level_from_string(const std::string& s);

struct Corpus {
  std::string name;
  Level level = Level::Sentence;
  std::vector<Document> documents;
};

struct LoadResult {
  Corpus corpus;
  std::size_t dropped_short_documents = 0;  // documents with < 2 sequences
};

struct Vocabulary {
  std::unordered_map<std::string, std::size_t> token_to_id;
  std::vector<std::string> id_to_token;     // includes the <UNK> entry
  std::size_t unk_id = 0;
  std::size_t min_freq = 1;

  std::size_t size() const { return id_to_token.size(); }
  std::size_t id_of(const std::string& token) const {
    auto it = token_to_id.find(token);
    return it == token_to_id.end() ? unk_id : it->second;
  }
};

struct EmbeddingMatrix {
  std::size_t dim = 0;
  std::vector<double> values;               // vocab_size x dim, row-major
  double hit_rate = 0;                      // fraction of vocab ids found in the file

  const double* row(std::size_t id) const { return values.data() + id * dim; }
  std::size_t rows() const { return dim == 0 ? 0 : values.size() / dim; }
};

struct CorpusStats {
  std::size_t documents = 0;
  double avg_sequences_per_document = 0;
  double avg_tokens_per_sequence = 0;
  std::size_t vocabulary_size = 0;          // distinct tokens at min_freq = 1
  std::optional<double> avg_sentences_per_paragraph;  // paragraph level only
};

struct SplitRatios {
  double train = 0.9;
  double dev = 0.05;
  double test = 0.05;
};

struct CorpusSplits {
  Corpus train;
  Corpus dev;
  Corpus test;
};

// Treebank-style word tokenizer: detaches punctuation, splits English
// contractions (n't 's 're 've 'll 'd 'm and the cannot/gonna family),
// normalizes double quotes to ``/''. Deterministic; "" yields {}.
// Validated against data/tokenizer_fixture.tsv.
std::vector<std::string> tokenize(const std::string& text);

enum class ParagraphKind { Plain, Bullet };

struct RawParagraph {
  ParagraphKind kind = ParagraphKind::Plain;
  std::string text;
};

// Appends every bullet/numbered item (space-joined, in order) to the nearest
// preceding plain paragraph. Throws if the first paragraph is a bullet.
std::vector<std::string> merge_bullets(const std::vector<RawParagraph>& paragraphs);

// Reads the JSONL schema above. Documents with fewer than 2 sequences are
// dropped and counted. Throws on malformed lines (message carries the line
// number) and when no document survives.
LoadResult load_corpus(const std::string& path, Level level);

void save_corpus(const Corpus& corpus, const std::string& path);

// Tokens with frequency >= min_freq keep ids 0..K-1 assigned by descending
// frequency, ties broken lexicographically; <UNK> takes id K.
Vocabulary build_vocab(const Corpus& corpus, std::size_t min_freq = 1);

// Sorts by (date, id) when chronological, keeps file order otherwise, then
// cuts at floor(N*train) and floor(N*(train+dev)); the remainder goes to
// test. Chronological mode requires a date on every document.
CorpusSplits split_chronological(const Corpus& corpus, const SplitRatios& ratios,
                                 bool chronological = true);

// Every sequence gains token_ids; out-of-vocabulary tokens map to unk_id.
Corpus encode(const Corpus& corpus, const Vocabulary& vocab);

// Text format: one "token v1 ... v_dim" line per word. Vocabulary ids
// missing from the file get seeded uniform values in [-0.05, 0.05].
EmbeddingMatrix load_embeddings(const std::string& path, const Vocabulary& vocab,
                                std::size_t dim, std::uint64_t seed = 0);

CorpusStats stats(const Corpus& corpus);

std::string stats_to_json(const CorpusStats& s);

}  // namespace ordbench
