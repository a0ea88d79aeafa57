/**
 * @file vocab.hpp
 * @brief Word-level vocabulary: corpus-frequency construction, text/id
 *        conversion, and the one-token-per-line persistence format.
 */
#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "advtext/common.hpp"

namespace advtext {

/// Lowercases and splits on whitespace, emitting punctuation characters as
/// standalone tokens ("google," -> ["google", ","]).
inline std::vector<std::string> tokenize_text(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  };
  for (char raw : text) {
    unsigned char c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c)) {
      flush();
      tokens.emplace_back(1, static_cast<char>(c));
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return tokens;
}

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kStart = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kNumSpecial = 4;

  /// Keeps the (max_size - 4) most frequent tokens, ties broken
  /// lexicographically; ids assigned in that order starting at 4.
  static Vocabulary build(const std::vector<std::string>& texts, int max_size) {
    if (max_size < kNumSpecial + 1) throw ConfigError("vocabulary max_size must be >= 5");
    std::unordered_map<std::string, std::int64_t> counts;
    for (const auto& text : texts)
      for (auto& tok : tokenize_text(text)) ++counts[tok];
    if (counts.empty()) throw ParseError("empty corpus");

    std::vector<std::pair<std::string, std::int64_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    const std::size_t keep = std::min(ranked.size(), static_cast<std::size_t>(max_size - kNumSpecial));

    Vocabulary v;
    for (std::size_t i = 0; i < keep; ++i) v.append_token(ranked[i].first);
    return v;
  }

  Vocabulary() {
    for (const char* tok : {"<pad>", "<start>", "<eos>", "<unk>"}) append_raw(tok);
  }

  int size() const { return static_cast<int>(id_to_token_.size()); }

  /// Id for a token string, or kUnk when absent.
  int id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnk : it->second;
  }

  bool contains(const std::string& token) const { return token_to_id_.count(token) != 0; }

  const std::string& token(int id) const {
    if (id < 0 || id >= size())
      throw ConfigError("token id " + std::to_string(id) + " out of range for vocabulary of size " +
                        std::to_string(size()));
    return id_to_token_[static_cast<std::size_t>(id)];
  }

  /// Tokenizes, truncates to max_seq_len - 1 tokens, and appends <eos>.
  std::vector<int> encode(const std::string& text, int max_seq_len) const {
    std::vector<int> ids;
    for (const auto& tok : tokenize_text(text)) {
      if (static_cast<int>(ids.size()) >= max_seq_len - 1) break;
      ids.push_back(id(tok));
    }
    ids.push_back(kEos);
    return ids;
  }

  /// Joins token strings with spaces, dropping pad/start/eos.
  std::string decode(const std::vector<int>& ids) const {
    std::string out;
    for (int i : ids) {
      const std::string& tok = token(i);  // validates range
      if (i == kPad || i == kStart || i == kEos) continue;
      if (!out.empty()) out.push_back(' ');
      out += tok;
    }
    return out;
  }

  /// One token per line, line number = id.
  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open vocabulary file for writing: " + path);
    for (const auto& tok : id_to_token_) out << tok << '\n';
    if (!out) throw ConfigError("error writing vocabulary file: " + path);
  }

  static Vocabulary load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open vocabulary file: " + path);
    Vocabulary v;
    v.id_to_token_.clear();
    v.token_to_id_.clear();
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      v.append_raw(line);
    }
    if (v.size() < kNumSpecial) throw ParseError("vocabulary file too short: " + path);
    const char* expected[] = {"<pad>", "<start>", "<eos>", "<unk>"};
    for (int i = 0; i < kNumSpecial; ++i) {
      if (v.id_to_token_[static_cast<std::size_t>(i)] != expected[i])
        throw ParseError("vocabulary file " + path + ": line " + std::to_string(i) +
                         " must be the special token " + expected[i]);
    }
    return v;
  }

 private:
  void append_token(const std::string& tok) { append_raw(tok); }

  void append_raw(const std::string& tok) {
    token_to_id_.emplace(tok, size());
    id_to_token_.push_back(tok);
  }

  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

}  // namespace advtext
