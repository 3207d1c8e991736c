#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "storyweave/common.hpp"
#include "storyweave/story_model.hpp"

namespace storyweave {

// Lowercase, split on non-alphanumeric bytes. '#' is a separator, so hashtags
// survive as their bare word. No stemming, no stopwords.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (detail::is_word_byte(static_cast<unsigned char>(c))) {
      current.push_back(detail::ascii_lower(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;

  void validate() const {
    if (!(k1 >= 0.0) || !std::isfinite(k1)) throw ValidationError("bm25: k1 must be >= 0");
    if (!(b >= 0.0 && b <= 1.0)) throw ValidationError("bm25: b must lie in [0, 1]");
  }
};

struct Posting {
  std::size_t doc;  // dense document number, see InvertedIndex::doc_id
  std::uint32_t term_frequency;
};

class InvertedIndex {
 public:
  InvertedIndex() = default;

  std::size_t doc_count() const { return doc_ids_.size(); }
  double avg_doc_length() const { return avg_doc_length_; }
  const std::string& doc_id(std::size_t doc) const { return doc_ids_.at(doc); }
  std::size_t doc_length(std::size_t doc) const { return doc_lengths_.at(doc); }

  std::optional<std::size_t> find(std::string_view doc_id) const {
    auto it = doc_numbers_.find(std::string(doc_id));
    if (it == doc_numbers_.end()) return std::nullopt;
    return it->second;
  }

  // Empty list for unknown terms.
  const std::vector<Posting>& postings(const std::string& term) const {
    static const std::vector<Posting> none;
    auto it = postings_.find(term);
    return it == postings_.end() ? none : it->second;
  }

  std::size_t document_frequency(const std::string& term) const { return postings(term).size(); }
  const std::unordered_map<std::string, std::vector<Posting>>& all_postings() const { return postings_; }

  friend InvertedIndex build_index(const Corpus& corpus);

 private:
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::vector<std::string> doc_ids_;
  std::vector<std::size_t> doc_lengths_;
  std::unordered_map<std::string, std::size_t> doc_numbers_;
  double avg_doc_length_ = 0.0;
};

// Postings within each list are in corpus order.
inline InvertedIndex build_index(const Corpus& corpus) {
  InvertedIndex index;
  std::size_t total = 0;
  for (const auto& doc : corpus.documents()) {
    const std::size_t number = index.doc_ids_.size();
    index.doc_ids_.push_back(doc.doc_id);
    index.doc_numbers_.emplace(doc.doc_id, number);
    auto tokens = tokenize(doc.text);
    index.doc_lengths_.push_back(tokens.size());
    total += tokens.size();
    std::map<std::string, std::uint32_t> counts;
    for (auto& t : tokens) ++counts[t];
    for (auto& [term, tf] : counts) index.postings_[term].push_back({number, tf});
  }
  if (!index.doc_ids_.empty()) index.avg_doc_length_ = static_cast<double>(total) / static_cast<double>(index.doc_ids_.size());
  return index;
}

namespace detail {

inline std::vector<std::string> distinct_terms(const std::vector<std::string>& query_tokens) {
  std::vector<std::string> terms = query_tokens;
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
  return terms;
}

inline double bm25_idf(std::size_t doc_count, std::size_t df) {
  const double n = static_cast<double>(doc_count);
  const double f = static_cast<double>(df);
  return std::log((n - f + 0.5) / (f + 0.5) + 1.0);
}

inline double bm25_term(const InvertedIndex& index, const Bm25Params& p, double idf, std::uint32_t tf, std::size_t doc) {
  const double len = static_cast<double>(index.doc_length(doc));
  const double avg = index.avg_doc_length();
  const double norm = avg > 0.0 ? len / avg : 1.0;
  const double f = static_cast<double>(tf);
  return idf * f * (p.k1 + 1.0) / (f + p.k1 * (1.0 - p.b + p.b * norm));
}

}  // namespace detail

// Repeated query tokens count once.
inline double bm25_score(const InvertedIndex& index, const Bm25Params& params,
                         const std::vector<std::string>& query_tokens, std::string_view doc_id) {
  auto doc = index.find(doc_id);
  if (!doc) throw NotFoundError(fmt::format("bm25: unknown doc_id '{}'", doc_id));
  double score = 0.0;
  for (const auto& term : detail::distinct_terms(query_tokens)) {
    const auto& list = index.postings(term);
    auto it = std::find_if(list.begin(), list.end(), [&](const Posting& p) { return p.doc == *doc; });
    if (it == list.end()) continue;
    score += detail::bm25_term(index, params, detail::bm25_idf(index.doc_count(), list.size()), it->term_frequency, *doc);
  }
  return score;
}

struct ScoredDocument {
  std::string doc_id;
  double score;
};

// Descending score, ascending doc_id on ties. Zero-score documents are omitted.
inline std::vector<ScoredDocument> rank_documents(const InvertedIndex& index, const Bm25Params& params,
                                                  std::string_view query, std::size_t k) {
  if (k < 1) throw ValidationError("rank_documents: k must be >= 1");
  std::unordered_map<std::size_t, double> acc;
  for (const auto& term : detail::distinct_terms(tokenize(query))) {
    const auto& list = index.postings(term);
    if (list.empty()) continue;
    const double idf = detail::bm25_idf(index.doc_count(), list.size());
    for (const auto& p : list) acc[p.doc] += detail::bm25_term(index, params, idf, p.term_frequency, p.doc);
  }
  std::vector<ScoredDocument> ranked;
  ranked.reserve(acc.size());
  for (const auto& [doc, score] : acc) {
    if (score > 0.0) ranked.push_back({index.doc_id(doc), score});
  }
  std::sort(ranked.begin(), ranked.end(), [](const ScoredDocument& a, const ScoredDocument& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
  });
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

}  // namespace storyweave
