/*
 * Copyright 2026 The fneval Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Character n-gram TF-IDF similarity between test and train captions.
//
// Captions are lowercased (ASCII) and whitespace runs collapse to a single
// space; n-grams are taken over code points and cross word boundaries.
//   idf(t) = ln((1 + N) / (1 + df(t))) + 1
//   weight = raw count * idf, then L2-normalized.
// Dot products accumulate in increasing vocabulary order.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fneval/analysis.hpp"
#include "fneval/corpus.hpp"
#include "fneval/stats.hpp"

namespace fneval {

inline constexpr int kDefaultNgramSize = 5;
inline constexpr std::size_t kDefaultTopK = 10;

inline std::string normalize_caption(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_space = false;
  for (char c : text) {
    bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    if (space) {
      if (!in_space) out.push_back(' ');
      in_space = true;
    } else {
      out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
      in_space = false;
    }
  }
  return out;
}

// Every length-n code-point substring of an already normalized caption.
inline std::vector<std::string> char_ngrams(std::string_view normalized, int n) {
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    if ((static_cast<unsigned char>(normalized[i]) & 0xC0) != 0x80) starts.push_back(i);
  }
  std::vector<std::string> grams;
  auto width = static_cast<std::size_t>(n);
  if (starts.size() < width) return grams;
  starts.push_back(normalized.size());
  for (std::size_t i = 0; i + width < starts.size(); ++i) {
    grams.emplace_back(normalized.substr(starts[i], starts[i + width] - starts[i]));
  }
  return grams;
}

struct SparseVector {
  std::vector<std::pair<std::size_t, double>> terms;  // sorted by vocabulary index

  bool empty() const noexcept { return terms.empty(); }
  friend bool operator==(const SparseVector&, const SparseVector&) = default;
};

inline double dot(const SparseVector& a, const SparseVector& b) {
  double sum = 0.0;
  auto i = a.terms.begin(), j = b.terms.begin();
  while (i != a.terms.end() && j != b.terms.end()) {
    if (i->first < j->first) {
      ++i;
    } else if (j->first < i->first) {
      ++j;
    } else {
      sum += i->second * j->second;
      ++i;
      ++j;
    }
  }
  return sum;
}

// Cosine of two unit vectors, clamped to [0, 1]; exactly 1 for equal vectors
// and 0 when either is empty.
inline double cosine(const SparseVector& a, const SparseVector& b) {
  if (a.empty() || b.empty()) return 0.0;
  if (a == b) return 1.0;
  return std::clamp(dot(a, b), 0.0, 1.0);
}

class NgramTfidfEncoder {
 public:
  static NgramTfidfEncoder fit(std::span<const std::string> corpus, int n = kDefaultNgramSize,
                               std::vector<std::string>* warnings = nullptr) {
    require(n >= 1, "n-gram size must be >= 1");
    require(!corpus.empty(), "cannot fit an encoder on an empty corpus");
    NgramTfidfEncoder encoder;
    encoder.n_ = n;
    encoder.documents_ = corpus.size();
    std::map<std::string, std::size_t> df;
    for (std::size_t d = 0; d < corpus.size(); ++d) {
      auto grams = char_ngrams(normalize_caption(corpus[d]), n);
      if (grams.empty() && warnings != nullptr) {
        warnings->push_back("caption " + std::to_string(d) + " is shorter than " + std::to_string(n) +
                            " characters and yields no n-grams");
      }
      std::set<std::string> unique(grams.begin(), grams.end());
      for (const auto& gram : unique) ++df[gram];
    }
    std::size_t index = 0;
    double docs = static_cast<double>(corpus.size());
    for (const auto& [gram, count] : df) {
      encoder.vocabulary_.emplace(gram, index++);
      encoder.df_.push_back(count);
      encoder.idf_.push_back(std::log((1.0 + docs) / (1.0 + static_cast<double>(count))) + 1.0);
    }
    return encoder;
  }

  // Unit-length TF-IDF vector; out-of-vocabulary n-grams are ignored.
  SparseVector transform(std::string_view caption) const {
    std::map<std::size_t, std::size_t> counts;
    for (const auto& gram : char_ngrams(normalize_caption(caption), n_)) {
      if (auto it = vocabulary_.find(gram); it != vocabulary_.end()) ++counts[it->second];
    }
    SparseVector vec;
    double norm = 0.0;
    for (const auto& [index, count] : counts) {
      double weight = static_cast<double>(count) * idf_[index];
      vec.terms.emplace_back(index, weight);
      norm += weight * weight;
    }
    norm = std::sqrt(norm);
    for (auto& term : vec.terms) term.second /= norm;
    return vec;
  }

  int ngram_size() const noexcept { return n_; }
  std::size_t documents() const noexcept { return documents_; }
  std::size_t vocabulary_size() const noexcept { return vocabulary_.size(); }
  const std::map<std::string, std::size_t>& vocabulary() const noexcept { return vocabulary_; }

  std::optional<std::size_t> document_frequency(const std::string& gram) const {
    auto it = vocabulary_.find(gram);
    if (it == vocabulary_.end()) return std::nullopt;
    return df_[it->second];
  }

  std::optional<double> idf(const std::string& gram) const {
    auto it = vocabulary_.find(gram);
    if (it == vocabulary_.end()) return std::nullopt;
    return idf_[it->second];
  }

 private:
  int n_ = kDefaultNgramSize;
  std::size_t documents_ = 0;
  std::map<std::string, std::size_t> vocabulary_;
  std::vector<std::size_t> df_;
  std::vector<double> idf_;
};

struct ProfileRow {
  QueryId query;
  double mean_top_k = 0.0;
  std::size_t word_len = 0;
  std::size_t char_len = 0;
};

struct SimilarityProfile {
  std::size_t k = kDefaultTopK;
  std::vector<ProfileRow> rows;  // in test-caption order
};

// Mean of each test caption's k highest cosine similarities to the train
// captions (all of them when fewer than k).
inline SimilarityProfile similarity_profile(const NgramTfidfEncoder& encoder, std::span<const Query> test,
                                            std::span<const Query> train, std::size_t k = kDefaultTopK) {
  require(k >= 1, "top-k must be >= 1");
  require(!train.empty(), "similarity profile needs at least one train caption");

  std::vector<SparseVector> train_vectors;
  train_vectors.reserve(train.size());
  std::vector<std::vector<std::pair<std::size_t, double>>> postings(encoder.vocabulary_size());
  for (std::size_t d = 0; d < train.size(); ++d) {
    train_vectors.push_back(encoder.transform(train[d].text));
    for (const auto& [index, weight] : train_vectors.back().terms) postings[index].emplace_back(d, weight);
  }

  SimilarityProfile profile;
  profile.k = k;
  std::size_t take = std::min(k, train.size());
  std::vector<double> sims(train.size());
  for (const auto& query : test) {
    SparseVector vec = encoder.transform(query.text);
    std::fill(sims.begin(), sims.end(), 0.0);
    // Terms visited in increasing index order, matching dot().
    for (const auto& [index, weight] : vec.terms) {
      for (const auto& [doc, train_weight] : postings[index]) sims[doc] += weight * train_weight;
    }
    for (std::size_t d = 0; d < sims.size(); ++d) {
      if (sims[d] > 1.0 - 1e-9 && vec == train_vectors[d]) sims[d] = 1.0;
      sims[d] = std::clamp(sims[d], 0.0, 1.0);
    }
    std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(take), sims.end(),
                      std::greater<>());
    double sum = 0.0;
    for (std::size_t i = 0; i < take; ++i) sum += sims[i];
    profile.rows.push_back(ProfileRow{query.id, sum / static_cast<double>(take), word_count(query.text),
                                      char_count(query.text)});
  }
  return profile;
}

// Fits on the test captions, then profiles each test caption against train.
inline SimilarityProfile train_test_profile(std::span<const Query> queries, int n = kDefaultNgramSize,
                                            std::size_t k = kDefaultTopK, std::vector<std::string>* warnings = nullptr) {
  std::vector<Query> test, train;
  for (const auto& query : queries) (query.split == Split::kTest ? test : train).push_back(query);
  require(!test.empty(), "no test captions");
  std::vector<std::string> fit_corpus;
  for (const auto& query : test) fit_corpus.push_back(query.text);
  auto encoder = NgramTfidfEncoder::fit(fit_corpus, n, warnings);
  return similarity_profile(encoder, test, train, k);
}

struct LengthCorrelation {
  std::optional<double> spearman_word;
  std::optional<double> kendall_word;
  std::optional<double> spearman_char;
  std::optional<double> kendall_char;
};

// Rank correlations between mean top-k similarity and caption length.
inline LengthCorrelation length_similarity_correlation(const SimilarityProfile& profile) {
  require(profile.rows.size() >= 2, "need at least two profiled captions");
  std::vector<double> sim, words, chars;
  for (const auto& row : profile.rows) {
    sim.push_back(row.mean_top_k);
    words.push_back(static_cast<double>(row.word_len));
    chars.push_back(static_cast<double>(row.char_len));
  }
  return LengthCorrelation{spearman(sim, words), kendall(sim, words), spearman(sim, chars), kendall(sim, chars)};
}

// Lengths are taken from `queries` (matched by id) rather than the profile.
inline LengthCorrelation length_similarity_correlation(const SimilarityProfile& profile,
                                                       std::span<const Query> queries) {
  std::map<QueryId, const Query*> by_id;
  for (const auto& query : queries) by_id.emplace(query.id, &query);
  SimilarityProfile relengthed = profile;
  for (auto& row : relengthed.rows) {
    auto it = by_id.find(row.query);
    if (it == by_id.end()) throw Error(ErrorKind::kUnknownReference, "no caption for query " + row.query.str());
    row.word_len = word_count(it->second->text);
    row.char_len = char_count(it->second->text);
  }
  return length_similarity_correlation(relengthed);
}

inline void write_csv(std::ostream& out, const SimilarityProfile& profile) {
  out << "query_id,mean_top_k_sim,word_len,char_len\n";
  for (const auto& row : profile.rows) {
    out << row.query.str() << ',' << format_double(row.mean_top_k) << ',' << row.word_len << ',' << row.char_len
        << '\n';
  }
}

inline nlohmann::ordered_json to_json(const LengthCorrelation& corr, const SimilarityProfile& profile) {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  nlohmann::ordered_json doc;
  doc["format"] = "fneval.textsim_report";
  doc["version"] = 1;
  doc["k"] = profile.k;
  doc["num_test"] = profile.rows.size();
  doc["spearman_word"] = opt(corr.spearman_word);
  doc["kendall_word"] = opt(corr.kendall_word);
  doc["spearman_char"] = opt(corr.spearman_char);
  doc["kendall_char"] = opt(corr.kendall_char);
  return doc;
}

}  // namespace fneval
