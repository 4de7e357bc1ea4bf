#pragma once

// Corpus corruption: each sequence is independently contaminated with
// probability p, then one of Insert / Remove / Modify is applied.
//
// Draw order is fixed so corrupted corpora reproduce bit-exactly: documents
// derive independent substreams from (seed, document id); within a document,
// for each sequence in gold order, one uniform decides contamination, then
// one weighted draw picks the mode, then the mode's own draws follow.

#include <cstdint>
#include <string>
#include <vector>

#include "ordbench/corpus.hpp"
#include "ordbench/rng.hpp"

namespace ordbench {

enum class NoiseMode { Insert, Remove, Modify };

std::string to_string(NoiseMode mode);

struct NoiseConfig {
  double p = 0.0;                          // per-sequence contamination probability
  std::vector<std::string> slogans;
  double mode_weights[3] = {1.0, 1.0, 1.0};  // Insert, Remove, Modify
  double modify_fraction = 0.5;            // fraction of tokens edited by Modify
  std::uint64_t seed = 0;

  void validate() const;
};

struct NoiseEvent {
  std::string doc_id;
  std::size_t sequence_index = 0;          // index in the original document
  NoiseMode mode = NoiseMode::Insert;
  bool skipped = false;                    // drawn but no applicable mode/edit
};

struct NoiseAudit {
  std::vector<NoiseEvent> events;
  std::size_t sequences_considered = 0;
  double realized_rate = 0;                // applied events / sequences considered

  std::string to_json() const;
};

// Slogan prepended to the sequence text, result retokenized.
Sequence insert_ad(const Sequence& seq, const std::string& slogan);

// Drops sequence idx. Throws when the document would fall below 2 sequences
// (the caller re-draws the mode instead).
Document remove_sequence(const Document& doc, std::size_t idx);

enum class TokenEdit { Concatenate, Split, Replace, Skipped };

struct ModifyResult {
  Sequence sequence;
  std::vector<TokenEdit> edits;            // one entry per selected position
};

// Picks ceil(fraction * T) distinct token positions (at least one), then
// applies per position one uniformly drawn edit among those whose
// preconditions hold: concatenate with the next token (not at the tail),
// split at a random interior point (length >= 2), or replace one character
// with a draw from the 94 printable non-space ASCII characters.
ModifyResult modify_tokens(const Sequence& seq, Pcg64& rng, double fraction);

struct CorruptResult {
  Corpus corpus;
  NoiseAudit audit;
};

CorruptResult corrupt_corpus(const Corpus& corpus, const NoiseConfig& cfg);

std::vector<std::string> load_slogans(const std::string& path);

}  // namespace ordbench
