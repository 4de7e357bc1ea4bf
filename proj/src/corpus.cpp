#include "ordbench/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "ordbench/rng.hpp"

namespace ordbench {

using nlohmann::json;

Sequence Sequence::from_text(std::string text) {
  Sequence s;
  s.tokens = tokenize(text);
  s.text = std::move(text);
  return s;
}

std::string to_string(Level level) {
  return level == Level::Sentence ? "sentence" : "paragraph";
}

Level level_from_string(const std::string& s) {
  if (s == "sentence") return Level::Sentence;
  if (s == "paragraph") return Level::Paragraph;
  throw std::invalid_argument("unknown corpus level '" + s + "'");
}

// ---------------------------------------------------------------------------
// Tokenizer. A transcription of the Penn-Treebank tokenizer rules (the
// classic sed-script behavior): quote normalization to ``/'', punctuation
// detachment, contraction splitting, then whitespace split.

namespace {

struct Rule {
  std::regex re;
  std::string repl;
};

const std::vector<Rule>& starting_quotes() {
  static const std::vector<Rule> rules = {
      {std::regex(R"(^")"), "``"},
      {std::regex(R"((``))"), " $1 "},
      {std::regex(R"(([ \(\[{<])("|'{2}))"), "$1 `` "},
  };
  return rules;
}

const std::vector<Rule>& punctuation() {
  static const std::vector<Rule> rules = {
      {std::regex(R"(([:,])([^\d]))"), " $1 $2"},
      {std::regex(R"(([:,])$)"), " $1 "},
      {std::regex(R"(\.\.\.)"), " ... "},
      {std::regex(R"([;@#$%&])"), " $& "},
      {std::regex(R"(([^\.])(\.)([\]\)}>"']*)\s*$)"), "$1 $2$3 "},
      {std::regex(R"([?!])"), " $& "},
      {std::regex(R"(([^'])' )"), "$1 ' "},
  };
  return rules;
}

const std::vector<Rule>& parens_and_dashes() {
  static const std::vector<Rule> rules = {
      {std::regex(R"([\]\[\(\)\{\}\<\>])"), " $& "},
      {std::regex(R"(--)"), " -- "},
  };
  return rules;
}

const std::vector<Rule>& ending_quotes() {
  static const std::vector<Rule> rules = {
      {std::regex(R"(")"), " '' "},
      {std::regex(R"((\S)(''))"), "$1 $2 "},
      {std::regex(R"(([^' ])('[sS]|'[mM]|'[dD]|') )"), "$1 $2 "},
      {std::regex(R"(([^' ])('ll|'LL|'re|'RE|'ve|'VE|n't|N'T) )"), "$1 $2 "},
  };
  return rules;
}

const std::vector<Rule>& contractions() {
  static const std::vector<Rule> rules = [] {
    std::vector<Rule> r;
    for (const char* pat : {R"(\b(can)(not)\b)", R"(\b(d)('ye)\b)",
                            R"(\b(gim)(me)\b)", R"(\b(gon)(na)\b)",
                            R"(\b(got)(ta)\b)", R"(\b(lem)(me)\b)",
                            R"(\b(more)('n)\b)", R"(\b(wan)(na)(?=\s))",
                            R"( ('t)(is)\b)", R"( ('t)(was)\b)"})
      r.push_back({std::regex(pat, std::regex::icase), " $1 $2 "});
    return r;
  }();
  return rules;
}

std::string apply(const std::vector<Rule>& rules, std::string text) {
  for (const Rule& rule : rules) text = std::regex_replace(text, rule.re, rule.repl);
  return text;
}

std::vector<std::string> whitespace_split(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

bool valid_date(const std::string& d) {
  static const std::regex re(R"(^\d{4}-\d{2}-\d{2}$)");
  if (!std::regex_match(d, re)) return false;
  int month = std::stoi(d.substr(5, 2));
  int day = std::stoi(d.substr(8, 2));
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  if (text.empty()) return {};
  std::string t = apply(starting_quotes(), text);
  t = apply(punctuation(), t);
  t = apply(parens_and_dashes(), t);
  t = " " + t + " ";
  t = apply(ending_quotes(), t);
  t = apply(contractions(), t);
  return whitespace_split(t);
}

std::vector<std::string> merge_bullets(const std::vector<RawParagraph>& paragraphs) {
  if (!paragraphs.empty() && paragraphs.front().kind == ParagraphKind::Bullet)
    throw std::invalid_argument("merge_bullets: first paragraph must be plain");
  std::vector<std::string> out;
  for (const RawParagraph& p : paragraphs) {
    if (p.kind == ParagraphKind::Plain) {
      out.push_back(p.text);
    } else {
      out.back() += " " + p.text;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSONL IO

namespace {

Document parse_document(const json& j, std::size_t line_no) {
  if (!j.is_object() || !j.contains("id") || !j.contains("sequences"))
    throw std::runtime_error("line " + std::to_string(line_no) +
                             ": document needs 'id' and 'sequences'");
  Document doc;
  doc.id = j.at("id").get<std::string>();
  if (j.contains("date") && !j.at("date").is_null()) {
    std::string d = j.at("date").get<std::string>();
    if (!valid_date(d))
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": bad date '" + d + "' (want YYYY-MM-DD)");
    doc.date = d;
  }
  std::vector<std::string> texts = j.at("sequences").get<std::vector<std::string>>();
  if (j.contains("kinds") && !j.at("kinds").is_null()) {
    std::vector<std::string> kinds = j.at("kinds").get<std::vector<std::string>>();
    if (kinds.size() != texts.size())
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": 'kinds' length differs from 'sequences'");
    std::vector<RawParagraph> raw;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      ParagraphKind k;
      if (kinds[i] == "plain") {
        k = ParagraphKind::Plain;
      } else if (kinds[i] == "bullet") {
        k = ParagraphKind::Bullet;
      } else {
        throw std::runtime_error("line " + std::to_string(line_no) +
                                 ": unknown kind '" + kinds[i] + "'");
      }
      raw.push_back({k, std::move(texts[i])});
    }
    try {
      texts = merge_bullets(raw);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  for (std::string& t : texts) doc.sequences.push_back(Sequence::from_text(std::move(t)));
  return doc;
}

}  // namespace

LoadResult load_corpus(const std::string& path, Level level) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);

  LoadResult result;
  result.corpus.name = path;
  result.corpus.level = level;

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> seen_ids;
  for (; std::getline(in, line); ) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": JSON parse error: " + e.what());
    }
    Document doc = parse_document(j, line_no);
    if (doc.sequences.size() < 2) {
      ++result.dropped_short_documents;
      continue;
    }
    result.corpus.documents.push_back(std::move(doc));
  }
  if (result.corpus.documents.empty())
    throw std::runtime_error("corpus '" + path + "' has no documents with >= 2 sequences");

  std::unordered_map<std::string, std::size_t> id_count;
  for (const Document& d : result.corpus.documents)
    if (++id_count[d.id] == 2)
      throw std::runtime_error("duplicate document id '" + d.id + "' in " + path);
  return result;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path);
  for (const Document& doc : corpus.documents) {
    json j;
    j["id"] = doc.id;
    j["date"] = doc.date ? json(*doc.date) : json(nullptr);
    std::vector<std::string> texts;
    for (const Sequence& s : doc.sequences) texts.push_back(s.text);
    j["sequences"] = texts;
    out << j.dump() << "\n";
  }
}

Vocabulary build_vocab(const Corpus& corpus, std::size_t min_freq) {
  if (corpus.documents.empty())
    throw std::invalid_argument("build_vocab: empty corpus");
  if (min_freq < 1) throw std::invalid_argument("build_vocab: min_freq must be >= 1");

  std::unordered_map<std::string, std::size_t> freq;
  for (const Document& d : corpus.documents)
    for (const Sequence& s : d.sequences)
      for (const std::string& t : s.tokens) ++freq[t];

  std::vector<std::pair<std::string, std::size_t>> entries;
  for (auto& [tok, f] : freq)
    if (f >= min_freq) entries.emplace_back(tok, f);
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  v.min_freq = min_freq;
  for (auto& [tok, f] : entries) {
    v.token_to_id.emplace(tok, v.id_to_token.size());
    v.id_to_token.push_back(tok);
  }
  v.unk_id = v.id_to_token.size();
  v.id_to_token.push_back("<UNK>");
  return v;
}

CorpusSplits split_chronological(const Corpus& corpus, const SplitRatios& ratios,
                                 bool chronological) {
  if (!(ratios.train > 0 && ratios.dev > 0 && ratios.test > 0))
    throw std::invalid_argument("split: ratios must be positive");
  if (std::abs(ratios.train + ratios.dev + ratios.test - 1.0) > 1e-9)
    throw std::invalid_argument("split: ratios must sum to 1");

  std::vector<const Document*> docs;
  for (const Document& d : corpus.documents) {
    if (chronological && !d.date)
      throw std::invalid_argument("split: document '" + d.id +
                                  "' has no date in chronological mode");
    docs.push_back(&d);
  }
  if (chronological) {
    std::stable_sort(docs.begin(), docs.end(), [](const Document* a, const Document* b) {
      if (*a->date != *b->date) return *a->date < *b->date;
      return a->id < b->id;
    });
  }

  const std::size_t n = docs.size();
  const std::size_t train_end = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * ratios.train));
  const std::size_t dev_end = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * (ratios.train + ratios.dev)));

  CorpusSplits out;
  for (Corpus* c : {&out.train, &out.dev, &out.test}) {
    c->name = corpus.name;
    c->level = corpus.level;
  }
  for (std::size_t i = 0; i < n; ++i) {
    Corpus& target = i < train_end ? out.train : (i < dev_end ? out.dev : out.test);
    target.documents.push_back(*docs[i]);
  }
  return out;
}

Corpus encode(const Corpus& corpus, const Vocabulary& vocab) {
  Corpus out = corpus;
  for (Document& d : out.documents)
    for (Sequence& s : d.sequences) {
      s.token_ids.clear();
      s.token_ids.reserve(s.tokens.size());
      for (const std::string& t : s.tokens) s.token_ids.push_back(vocab.id_of(t));
    }
  return out;
}

EmbeddingMatrix load_embeddings(const std::string& path, const Vocabulary& vocab,
                                std::size_t dim, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file: " + path);

  EmbeddingMatrix m;
  m.dim = dim;
  m.values.assign(vocab.size() * dim, 0.0);
  std::vector<bool> matched(vocab.size(), false);

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    auto it = vocab.token_to_id.find(token);
    std::vector<double> vec;
    double x;
    while (ls >> x) vec.push_back(x);
    if (vec.size() != dim)
      throw std::runtime_error("embedding line " + std::to_string(line_no) + ": got " +
                               std::to_string(vec.size()) + " values, want " +
                               std::to_string(dim));
    if (it == vocab.token_to_id.end()) continue;
    std::copy(vec.begin(), vec.end(), m.values.begin() + it->second * dim);
    matched[it->second] = true;
  }

  // Unmatched ids (always including <UNK>) get seeded uniform init, drawn in
  // ascending id order.
  Pcg64 rng(seed, hash_str("embedding-init"));
  std::size_t hits = 0;
  for (std::size_t id = 0; id < vocab.size(); ++id) {
    if (matched[id]) {
      ++hits;
      continue;
    }
    for (std::size_t k = 0; k < dim; ++k)
      m.values[id * dim + k] = rng.uniform(-0.05, 0.05);
  }
  m.hit_rate = vocab.size() == 0 ? 0.0
                                 : static_cast<double>(hits) / static_cast<double>(vocab.size());
  return m;
}

CorpusStats stats(const Corpus& corpus) {
  if (corpus.documents.empty()) throw std::invalid_argument("stats: empty corpus");

  CorpusStats s;
  s.documents = corpus.documents.size();
  std::size_t sequences = 0, tokens = 0, terminators = 0;
  std::unordered_map<std::string, bool> vocab;
  for (const Document& d : corpus.documents) {
    sequences += d.sequences.size();
    for (const Sequence& seq : d.sequences) {
      tokens += seq.tokens.size();
      std::size_t enders = 0;
      for (const std::string& t : seq.tokens) {
        vocab.emplace(t, true);
        // Token-final terminators: the tokenizer detaches only the last
        // period of a paragraph, so mid-paragraph sentence ends look like
        // "word." tokens.
        char last = t.back();
        if (last == '.' || last == '!' || last == '?') ++enders;
      }
      terminators += std::max<std::size_t>(enders, 1);
    }
  }
  s.avg_sequences_per_document =
      static_cast<double>(sequences) / static_cast<double>(s.documents);
  s.avg_tokens_per_sequence =
      sequences == 0 ? 0.0 : static_cast<double>(tokens) / static_cast<double>(sequences);
  s.vocabulary_size = vocab.size();
  if (corpus.level == Level::Paragraph)
    // Sentence count approximated by terminator tokens, at least one per
    // paragraph (input paragraphs are not sentence-segmented).
    s.avg_sentences_per_paragraph =
        static_cast<double>(terminators) / static_cast<double>(sequences);
  return s;
}

std::string stats_to_json(const CorpusStats& s) {
  json j;
  j["documents"] = s.documents;
  j["avg_sequences_per_document"] = s.avg_sequences_per_document;
  j["avg_tokens_per_sequence"] = s.avg_tokens_per_sequence;
  j["vocabulary_size"] = s.vocabulary_size;
  if (s.avg_sentences_per_paragraph)
    j["avg_sentences_per_paragraph"] = *s.avg_sentences_per_paragraph;
  return j.dump(2);
}

}  // namespace ordbench
