/**
 * @file corpus.hpp
 * @brief Corpus ingestion: AG News CSV, the deterministic synthetic keyword
 *        corpus, and conversion to token-id examples.
 */
#pragma once

#include <array>
#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "advtext/common.hpp"
#include "advtext/vocab.hpp"

namespace advtext {

/// Token-id sequence (eos-terminated, never start-prefixed) with its
/// ground-truth class and the original text kept for reports.
struct LabeledExample {
  std::vector<int> tokens;
  int label = 0;
  std::string raw_text;
};

struct ClassSet {
  std::vector<std::string> names;

  int count() const { return static_cast<int>(names.size()); }
};

inline ClassSet agnews_classes() { return {{"World", "Sports", "Business", "Sci/Tech"}}; }
inline ClassSet toy_classes() { return {{"world", "sports", "business", "scitech"}}; }

using RawRecord = std::pair<std::string, int>;  // (raw_text, label)

namespace detail {

/// Splits one RFC-4180-style record. The input iterator sits on the first
/// character of the record; on return it sits past the record terminator.
inline bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  int ch = in.get();
  if (ch == EOF) return false;
  std::string field;
  bool quoted = false;
  bool any = false;
  while (true) {
    if (ch == EOF) {
      fields.push_back(field);
      return true;
    }
    char c = static_cast<char>(ch);
    if (quoted) {
      if (c == '"') {
        int next = in.peek();
        if (next == '"') {
          field.push_back('"');
          in.get();
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && field.empty() && !any) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(field);
      field.clear();
      any = false;
      ch = in.get();
      continue;
    } else if (c == '\r') {
      // swallow; record ends at the following \n
    } else if (c == '\n') {
      fields.push_back(field);
      return true;
    } else {
      field.push_back(c);
    }
    any = true;
    ch = in.get();
  }
}

inline std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace detail

/// Reads an AG News CSV (class_index,title,description; class indices 1-4).
/// raw_text = lowercased "title description", label = class_index - 1.
/// Keeps at most max_rows_per_class records per class, in file order.
inline std::vector<RawRecord> ingest_agnews(const std::string& path, const ClassSet& classes,
                                            int max_rows_per_class) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open corpus file: " + path);

  std::vector<RawRecord> records;
  std::vector<int> per_class(static_cast<std::size_t>(classes.count()), 0);
  std::vector<std::string> fields;
  long row = 0;
  while (detail::read_csv_record(in, fields)) {
    ++row;
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    if (fields.size() != 3)
      throw ParseError(path + " row " + std::to_string(row) + ": expected 3 fields, got " +
                       std::to_string(fields.size()));
    int class_index = 0;
    try {
      std::size_t used = 0;
      class_index = std::stoi(fields[0], &used);
      if (used != fields[0].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ParseError(path + " row " + std::to_string(row) + ": class index '" + fields[0] +
                       "' is not an integer");
    }
    if (class_index < 1 || class_index > classes.count())
      throw ParseError(path + " row " + std::to_string(row) + ": class index " +
                       std::to_string(class_index) + " out of range 1.." + std::to_string(classes.count()));
    int label = class_index - 1;
    if (per_class[static_cast<std::size_t>(label)] >= max_rows_per_class) continue;
    ++per_class[static_cast<std::size_t>(label)];
    records.emplace_back(detail::lowercase(fields[1] + " " + fields[2]), label);
  }
  return records;
}

inline constexpr int kToyNumClasses = 4;
inline constexpr int kToyKeywordsPerClass = 3;

/// Disjoint per-class keyword sets; exactly one keyword appears in every
/// generated sentence, which makes the label recoverable by lookup.
inline const std::array<std::array<const char*, kToyKeywordsPerClass>, kToyNumClasses>& toy_keyword_sets() {
  static const std::array<std::array<const char*, kToyKeywordsPerClass>, kToyNumClasses> sets = {{
      {{"war", "embassy", "treaty"}},
      {{"medal", "striker", "tournament"}},
      {{"stock", "profit", "merger"}},
      {{"software", "quantum", "rocket"}},
  }};
  return sets;
}

inline const std::array<const char*, 40>& toy_filler_words() {
  static const std::array<const char*, 40> pool = {
      {"the",   "a",     "an",    "of",    "to",    "and",  "in",   "on",   "for",  "with",
       "at",    "by",    "from",  "about", "into",  "over", "after", "before", "under", "again",
       "then",  "once",  "here",  "there", "when",  "where", "why",  "how",  "all",  "any",
       "both",  "each",  "few",   "more",  "most",  "other", "some", "such", "only", "very"}};
  return pool;
}

/// Deterministic per-seed corpus: for each class, samples_per_class
/// sentences of 5-12 filler words with one class keyword inserted at a
/// random position. Records are ordered class-major.
inline std::vector<RawRecord> generate_toy_corpus(std::uint64_t seed, int samples_per_class) {
  if (samples_per_class < 1) throw ConfigError("samples_per_class must be >= 1");
  const auto& fillers = toy_filler_words();
  const auto& keywords = toy_keyword_sets();
  Rng rng(mix_seed(seed, 0x7071));

  std::vector<RawRecord> records;
  records.reserve(static_cast<std::size_t>(kToyNumClasses) * static_cast<std::size_t>(samples_per_class));
  for (int cls = 0; cls < kToyNumClasses; ++cls) {
    for (int s = 0; s < samples_per_class; ++s) {
      const int len = static_cast<int>(rng.between(5, 12));
      std::vector<std::string> words;
      words.reserve(static_cast<std::size_t>(len) + 1);
      for (int i = 0; i < len; ++i)
        words.emplace_back(fillers[static_cast<std::size_t>(rng.below(fillers.size()))]);
      const char* keyword =
          keywords[static_cast<std::size_t>(cls)][static_cast<std::size_t>(rng.below(kToyKeywordsPerClass))];
      const auto pos = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(len) + 1));
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(pos), keyword);

      std::string text;
      for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) text.push_back(' ');
        text += words[i];
      }
      records.emplace_back(std::move(text), cls);
    }
  }
  return records;
}

struct ToySplit {
  std::vector<RawRecord> train;
  std::vector<RawRecord> val;
};

/// One generator pass yields both splits: within each class block the first
/// train_per_class records go to train, the next val_per_class to val.
inline ToySplit toy_split(std::uint64_t seed, int train_per_class, int val_per_class) {
  if (train_per_class < 1 || val_per_class < 1)
    throw ConfigError("toy split sizes must be >= 1");
  std::vector<RawRecord> all = generate_toy_corpus(seed, train_per_class + val_per_class);
  ToySplit split;
  const int per_class = train_per_class + val_per_class;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (static_cast<int>(i) % per_class < train_per_class)
      split.train.push_back(all[i]);
    else
      split.val.push_back(all[i]);
  }
  return split;
}

/// Encodes raw records against a vocabulary.
inline std::vector<LabeledExample> encode_corpus(const std::vector<RawRecord>& records,
                                                 const Vocabulary& vocab, int max_seq_len) {
  std::vector<LabeledExample> out;
  out.reserve(records.size());
  for (const auto& [text, label] : records)
    out.push_back({vocab.encode(text, max_seq_len), label, text});
  return out;
}

}  // namespace advtext
