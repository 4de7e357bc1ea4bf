#include "ordbench/noise.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace ordbench {

using nlohmann::json;

namespace {

// Printable ASCII without space: '!' (33) through '~' (126), 94 characters.
constexpr char kSubstitutionFirst = '!';
constexpr int kSubstitutionCount = 94;

int weighted_mode(Pcg64& rng, const double* w, bool allow_remove) {
  double weights[3] = {w[0], allow_remove ? w[1] : 0.0, w[2]};
  double total = weights[0] + weights[1] + weights[2];
  if (total <= 0.0) return -1;
  double x = rng.next_double() * total;
  if (x < weights[0]) return 0;
  if (x < weights[0] + weights[1]) return 1;
  return 2;
}

}  // namespace

std::string to_string(NoiseMode mode) {
  switch (mode) {
    case NoiseMode::Insert: return "insert";
    case NoiseMode::Remove: return "remove";
    case NoiseMode::Modify: return "modify";
  }
  return "?";
}

void NoiseConfig::validate() const {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("noise: p must be in [0,1]");
  double total = 0;
  for (double w : mode_weights) {
    if (w < 0) throw std::invalid_argument("noise: mode weights must be non-negative");
    total += w;
  }
  if (total <= 0) throw std::invalid_argument("noise: mode weights must sum to > 0");
  if (mode_weights[0] > 0 && slogans.empty())
    throw std::invalid_argument("noise: Insert enabled but slogan list is empty");
  if (!(modify_fraction > 0.0 && modify_fraction <= 1.0))
    throw std::invalid_argument("noise: modify_fraction must be in (0,1]");
}

Sequence insert_ad(const Sequence& seq, const std::string& slogan) {
  if (slogan.empty()) throw std::invalid_argument("insert_ad: empty slogan");
  std::string text = slogan;
  if (!seq.text.empty()) text += " " + seq.text;
  return Sequence::from_text(std::move(text));
}

Document remove_sequence(const Document& doc, std::size_t idx) {
  const std::size_t n = doc.sequences.size();
  if (idx >= n) throw std::invalid_argument("remove_sequence: index out of range");
  if (n < 3)
    throw std::invalid_argument("remove_sequence: document '" + doc.id +
                                "' would fall below 2 sequences");
  Document out = doc;
  out.sequences.erase(out.sequences.begin() + static_cast<std::ptrdiff_t>(idx));
  return out;
}

ModifyResult modify_tokens(const Sequence& seq, Pcg64& rng, double fraction) {
  ModifyResult result;
  result.sequence = seq;
  const std::size_t t = seq.tokens.size();
  if (t == 0) return result;

  std::size_t k = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(t)));
  k = std::clamp<std::size_t>(k, 1, t);

  // Distinct positions via partial Fisher-Yates; edits run from the highest
  // position down so lower selected positions stay valid.
  std::vector<std::size_t> idx(t);
  for (std::size_t i = 0; i < t; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(t - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end(), std::greater<>());

  std::vector<std::string>& toks = result.sequence.tokens;
  for (std::size_t pos : idx) {
    TokenEdit choices[3];
    int nc = 0;
    if (pos + 1 < toks.size()) choices[nc++] = TokenEdit::Concatenate;
    if (toks[pos].size() >= 2) choices[nc++] = TokenEdit::Split;
    if (!toks[pos].empty()) choices[nc++] = TokenEdit::Replace;
    if (nc == 0) {
      result.edits.push_back(TokenEdit::Skipped);
      continue;
    }
    TokenEdit edit = choices[rng.below(static_cast<std::uint64_t>(nc))];
    switch (edit) {
      case TokenEdit::Concatenate:
        toks[pos] += toks[pos + 1];
        toks.erase(toks.begin() + static_cast<std::ptrdiff_t>(pos) + 1);
        break;
      case TokenEdit::Split: {
        std::size_t cut = 1 + static_cast<std::size_t>(rng.below(toks[pos].size() - 1));
        std::string tail = toks[pos].substr(cut);
        toks[pos].resize(cut);
        toks.insert(toks.begin() + static_cast<std::ptrdiff_t>(pos) + 1, std::move(tail));
        break;
      }
      case TokenEdit::Replace: {
        std::size_t at = static_cast<std::size_t>(rng.below(toks[pos].size()));
        toks[pos][at] = static_cast<char>(
            kSubstitutionFirst + static_cast<int>(rng.below(kSubstitutionCount)));
        break;
      }
      case TokenEdit::Skipped:
        break;
    }
    result.edits.push_back(edit);
  }

  std::string text;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) text += " ";
    text += toks[i];
  }
  result.sequence.text = std::move(text);
  result.sequence.token_ids.clear();
  return result;
}

CorruptResult corrupt_corpus(const Corpus& corpus, const NoiseConfig& cfg) {
  cfg.validate();
  CorruptResult out;
  out.corpus.name = corpus.name;
  out.corpus.level = corpus.level;

  for (const Document& doc : corpus.documents) {
    Pcg64 rng(cfg.seed, hash_str(doc.id));
    Document work = doc;
    // Position of each original sequence in the working document; -1 once
    // removed.
    std::vector<std::ptrdiff_t> pos(doc.sequences.size());
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = static_cast<std::ptrdiff_t>(i);

    for (std::size_t i = 0; i < doc.sequences.size(); ++i) {
      ++out.audit.sequences_considered;
      if (!(rng.next_double() < cfg.p)) continue;

      NoiseEvent event;
      event.doc_id = doc.id;
      event.sequence_index = i;

      bool allow_remove = work.sequences.size() > 2;
      int mode = weighted_mode(rng, cfg.mode_weights, true);
      if (mode == 1 && !allow_remove) {
        // Floor rule: re-draw among the remaining modes.
        mode = weighted_mode(rng, cfg.mode_weights, false);
        if (mode == -1) {
          event.mode = NoiseMode::Remove;
          event.skipped = true;
          out.audit.events.push_back(std::move(event));
          continue;
        }
      }
      std::size_t cur = static_cast<std::size_t>(pos[i]);
      switch (mode) {
        case 0: {
          event.mode = NoiseMode::Insert;
          const std::string& slogan =
              cfg.slogans[rng.below(cfg.slogans.size())];
          work.sequences[cur] = insert_ad(work.sequences[cur], slogan);
          break;
        }
        case 1: {
          event.mode = NoiseMode::Remove;
          work = remove_sequence(work, cur);
          pos[i] = -1;
          for (std::size_t j = i + 1; j < pos.size(); ++j) --pos[j];
          break;
        }
        default: {
          event.mode = NoiseMode::Modify;
          ModifyResult mr = modify_tokens(work.sequences[cur], rng, cfg.modify_fraction);
          work.sequences[cur] = std::move(mr.sequence);
          break;
        }
      }
      out.audit.events.push_back(std::move(event));
    }
    out.corpus.documents.push_back(std::move(work));
  }

  out.audit.realized_rate =
      out.audit.sequences_considered == 0
          ? 0.0
          : static_cast<double>(out.audit.events.size()) /
                static_cast<double>(out.audit.sequences_considered);
  return out;
}

std::string NoiseAudit::to_json() const {
  json j;
  j["sequences_considered"] = sequences_considered;
  j["realized_rate"] = realized_rate;
  json evs = json::array();
  for (const NoiseEvent& e : events) {
    json je;
    je["doc_id"] = e.doc_id;
    je["sequence_index"] = e.sequence_index;
    je["mode"] = to_string(e.mode);
    je["skipped"] = e.skipped;
    evs.push_back(std::move(je));
  }
  j["events"] = std::move(evs);
  return j.dump(2);
}

std::vector<std::string> load_slogans(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open slogan file: " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  if (out.empty()) throw std::runtime_error("slogan file '" + path + "' is empty");
  return out;
}

}  // namespace ordbench
