#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "binary_io.hpp"
#include "corpus.hpp"
#include "error.hpp"
#include "ranked_list.hpp"
#include "text.hpp"

namespace hopir {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;

    void validate() const
    {
        if (!(k1 >= 0.0) || !(b >= 0.0 && b <= 1.0)) {
            throw InvalidArgument("bm25 parameters require k1 >= 0 and 0 <= b <= 1");
        }
    }
};

struct DirichletParams {
    double mu = 1500.0;

    void validate() const
    {
        if (!(mu > 0.0)) {
            throw InvalidArgument("dirichlet mu must be > 0");
        }
    }
};

enum class Scorer { bm25, ql, tfidf };

struct RetrievalParams {
    Bm25Params bm25;
    DirichletParams dirichlet;
    TokenizerConfig tokenizer;
};

struct Posting {
    std::uint32_t doc = 0;
    std::uint32_t tf = 0;

    bool operator==(const Posting&) const = default;
};

/// Term-at-a-time inverted index. Documents are addressed by ordinal (corpus
/// order); terms are stored in lexicographic order so serialization is
/// canonical.
class InvertedIndex {
  public:
    InvertedIndex() = default;

    [[nodiscard]] std::size_t doc_count() const noexcept { return doc_ids_.size(); }
    [[nodiscard]] double avg_doc_len() const noexcept
    {
        return doc_ids_.empty() ? 0.0 : static_cast<double>(total_tokens_) / static_cast<double>(doc_ids_.size());
    }
    [[nodiscard]] std::uint64_t total_tokens() const noexcept { return total_tokens_; }
    [[nodiscard]] std::size_t term_count() const noexcept { return terms_.size(); }

    [[nodiscard]] const std::string& doc_id(std::uint32_t doc) const { return doc_ids_.at(doc); }
    [[nodiscard]] std::uint32_t doc_length(std::uint32_t doc) const { return doc_lengths_.at(doc); }

    [[nodiscard]] std::optional<std::uint32_t> doc_ordinal(std::string_view id) const
    {
        auto it = doc_lookup_.find(std::string(id));
        if (it == doc_lookup_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    [[nodiscard]] std::uint32_t require_doc(std::string_view id) const
    {
        auto d = doc_ordinal(id);
        if (!d) {
            throw InvalidArgument("passage id '" + std::string(id) + "' is not indexed");
        }
        return *d;
    }

    [[nodiscard]] std::optional<std::uint32_t> term_id(std::string_view term) const
    {
        auto it = term_lookup_.find(std::string(term));
        if (it == term_lookup_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    [[nodiscard]] const std::string& term(std::uint32_t id) const { return terms_.at(id); }
    [[nodiscard]] const std::vector<Posting>& postings(std::uint32_t term) const { return postings_.at(term); }
    [[nodiscard]] std::uint64_t collection_freq(std::uint32_t term) const { return cf_.at(term); }
    [[nodiscard]] std::size_t doc_freq(std::uint32_t term) const { return postings_.at(term).size(); }

    [[nodiscard]] std::uint64_t collection_freq(std::string_view term) const
    {
        auto t = term_id(term);
        return t ? cf_[*t] : 0;
    }

    [[nodiscard]] std::size_t doc_freq(std::string_view term) const
    {
        auto t = term_id(term);
        return t ? postings_[*t].size() : 0;
    }

    /// (term id, tf) pairs of a document, ascending by term id.
    [[nodiscard]] const std::vector<std::pair<std::uint32_t, std::uint32_t>>& doc_terms(std::uint32_t doc) const
    {
        return forward_.at(doc);
    }

    [[nodiscard]] std::uint32_t tf(std::uint32_t term, std::uint32_t doc) const
    {
        const auto& list = postings_.at(term);
        auto it = std::lower_bound(list.begin(), list.end(), doc,
                                   [](const Posting& p, std::uint32_t d) { return p.doc < d; });
        return (it != list.end() && it->doc == doc) ? it->tf : 0;
    }

    /// Euclidean norm of the document's tf-idf vector.
    [[nodiscard]] double tfidf_norm(std::uint32_t doc) const { return tfidf_norms_.at(doc); }

    [[nodiscard]] double idf_tfidf(std::uint32_t term) const
    {
        return std::log(static_cast<double>(doc_count()) / static_cast<double>(postings_.at(term).size()));
    }

    [[nodiscard]] double p_collection(std::uint32_t term) const
    {
        return static_cast<double>(cf_.at(term)) / static_cast<double>(total_tokens_);
    }

    friend InvertedIndex build_index(const Corpus& corpus);
    friend std::string serialize_index(const InvertedIndex& index);
    friend InvertedIndex deserialize_index(std::string_view bytes);

  private:
    void finalize()
    {
        doc_lookup_.clear();
        for (std::uint32_t d = 0; d < doc_ids_.size(); ++d) {
            doc_lookup_.emplace(doc_ids_[d], d);
        }
        term_lookup_.clear();
        for (std::uint32_t t = 0; t < terms_.size(); ++t) {
            term_lookup_.emplace(terms_[t], t);
        }
        forward_.assign(doc_ids_.size(), {});
        for (std::uint32_t t = 0; t < terms_.size(); ++t) {
            for (const auto& p : postings_[t]) {
                forward_[p.doc].emplace_back(t, p.tf);
            }
        }
        tfidf_norms_.assign(doc_ids_.size(), 0.0);
        for (std::uint32_t d = 0; d < doc_ids_.size(); ++d) {
            double sq = 0.0;
            for (auto [t, f] : forward_[d]) {
                double w = f * idf_tfidf(t);
                sq += w * w;
            }
            tfidf_norms_[d] = std::sqrt(sq);
        }
    }

    std::vector<std::string> doc_ids_;
    std::vector<std::uint32_t> doc_lengths_;
    std::uint64_t total_tokens_ = 0;
    std::vector<std::string> terms_;
    std::vector<std::uint64_t> cf_;
    std::vector<std::vector<Posting>> postings_;

    // Derived on build/load; not serialized.
    std::unordered_map<std::string, std::uint32_t> doc_lookup_;
    std::unordered_map<std::string, std::uint32_t> term_lookup_;
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> forward_;
    std::vector<double> tfidf_norms_;
};

inline InvertedIndex build_index(const Corpus& corpus)
{
    InvertedIndex index;
    std::map<std::string, std::vector<Posting>, std::less<>> by_term;
    for (std::uint32_t d = 0; d < corpus.size(); ++d) {
        const auto& p = corpus[d];
        index.doc_ids_.push_back(p.id);
        auto tokens = tokenize(p.text);
        index.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
        index.total_tokens_ += tokens.size();
        std::sort(tokens.begin(), tokens.end());
        for (std::size_t i = 0; i < tokens.size();) {
            std::size_t j = i;
            while (j < tokens.size() && tokens[j] == tokens[i]) {
                ++j;
            }
            by_term[tokens[i]].push_back({d, static_cast<std::uint32_t>(j - i)});
            i = j;
        }
    }
    for (auto& [term, list] : by_term) {
        std::uint64_t cf = 0;
        for (const auto& p : list) {
            cf += p.tf;
        }
        index.terms_.push_back(term);
        index.cf_.push_back(cf);
        index.postings_.push_back(std::move(list));
    }
    index.finalize();
    return index;
}

inline constexpr std::string_view index_magic = "HOPIRIDX";
inline constexpr std::uint32_t index_format_version = 1;

/// Layout (little-endian): magic[8] | u32 version | u64 N | N x (str id, u32 len)
/// | u64 total_tokens | u64 T | T x (str term, u64 cf, u64 n, n x (u32 doc, u32 tf)).
/// Strings are u64 length + bytes.
inline std::string serialize_index(const InvertedIndex& index)
{
    binary::Writer w;
    w.raw(index_magic);
    w.u32(index_format_version);
    w.u64(index.doc_ids_.size());
    for (std::size_t d = 0; d < index.doc_ids_.size(); ++d) {
        w.str(index.doc_ids_[d]);
        w.u32(index.doc_lengths_[d]);
    }
    w.u64(index.total_tokens_);
    w.u64(index.terms_.size());
    for (std::size_t t = 0; t < index.terms_.size(); ++t) {
        w.str(index.terms_[t]);
        w.u64(index.cf_[t]);
        w.u64(index.postings_[t].size());
        for (const auto& p : index.postings_[t]) {
            w.u32(p.doc);
            w.u32(p.tf);
        }
    }
    return w.bytes();
}

inline InvertedIndex deserialize_index(std::string_view bytes)
{
    binary::Reader r(bytes);
    if (r.raw(index_magic.size()) != index_magic) {
        throw DataError("not an index file");
    }
    if (auto v = r.u32(); v != index_format_version) {
        throw DataError("unsupported index format version " + std::to_string(v));
    }
    InvertedIndex index;
    auto n = r.u64();
    for (std::uint64_t d = 0; d < n; ++d) {
        index.doc_ids_.push_back(r.str());
        index.doc_lengths_.push_back(r.u32());
    }
    index.total_tokens_ = r.u64();
    auto terms = r.u64();
    for (std::uint64_t t = 0; t < terms; ++t) {
        index.terms_.push_back(r.str());
        index.cf_.push_back(r.u64());
        std::vector<Posting> list(r.u64());
        for (auto& p : list) {
            p.doc = r.u32();
            p.tf = r.u32();
            if (p.doc >= n) {
                throw DataError("index posting references unknown document");
            }
        }
        index.postings_.push_back(std::move(list));
    }
    if (!r.at_end()) {
        throw DataError("trailing bytes in index file");
    }
    index.finalize();
    return index;
}

inline void save_index(const InvertedIndex& index, const std::string& path)
{
    binary::write_file(path, serialize_index(index));
}

inline InvertedIndex load_index(const std::string& path) { return deserialize_index(binary::read_file(path)); }

// ---------------------------------------------------------------------------
// Scoring

/// Okapi idf with the +1 inside the log, so it is never negative.
inline double bm25_idf(std::size_t doc_count, std::size_t df)
{
    auto n = static_cast<double>(doc_count);
    auto f = static_cast<double>(df);
    return std::log(1.0 + (n - f + 0.5) / (f + 0.5));
}

inline double bm25_term_weight(double tf, double doc_len, double avg_len, const Bm25Params& params)
{
    double norm = params.k1 * (1.0 - params.b + params.b * doc_len / avg_len);
    return tf * (params.k1 + 1.0) / (tf + norm);
}

inline double bm25_score(const InvertedIndex& index, const std::vector<std::string>& query_terms,
                         std::string_view passage_id, const Bm25Params& params = {})
{
    auto doc = index.require_doc(passage_id);
    double score = 0.0;
    for (const auto& term : query_terms) {
        auto t = index.term_id(term);
        if (!t) {
            continue;
        }
        auto f = index.tf(*t, doc);
        if (f == 0) {
            continue;
        }
        score += bm25_idf(index.doc_count(), index.doc_freq(*t))
                 * bm25_term_weight(f, index.doc_length(doc), index.avg_doc_len(), params);
    }
    return score;
}

struct QlScore {
    double score = 0.0;
    /// Query terms skipped because they never occur in the collection.
    std::size_t skipped_terms = 0;
};

inline QlScore ql_dirichlet_score(const InvertedIndex& index, const std::vector<std::string>& query_terms,
                                  std::string_view passage_id, const DirichletParams& params = {})
{
    auto doc = index.require_doc(passage_id);
    QlScore out;
    const double len = index.doc_length(doc);
    for (const auto& term : query_terms) {
        auto t = index.term_id(term);
        if (!t) {
            ++out.skipped_terms;
            continue;
        }
        double pc = index.p_collection(*t);
        out.score += std::log((index.tf(*t, doc) + params.mu * pc) / (len + params.mu));
    }
    return out;
}

/// Smoothed log P(term | doc); the term must occur in the collection.
inline double ql_log_prob(const InvertedIndex& index, std::uint32_t term, std::uint32_t doc,
                          const DirichletParams& params)
{
    double pc = index.p_collection(term);
    return std::log((index.tf(term, doc) + params.mu * pc) / (index.doc_length(doc) + params.mu));
}

using TermWeights = std::map<std::string, double, std::less<>>;

/// tf(t) * ln(N / df(t)) over tokens that occur in the index.
inline TermWeights tfidf_vector(const InvertedIndex& index, const std::vector<std::string>& tokens)
{
    std::map<std::string, std::uint32_t, std::less<>> counts;
    for (const auto& tok : tokens) {
        ++counts[tok];
    }
    TermWeights out;
    for (const auto& [term, count] : counts) {
        if (auto t = index.term_id(term)) {
            out[term] = count * index.idf_tfidf(*t);
        }
    }
    return out;
}

inline TermWeights tfidf_vector(const InvertedIndex& index, std::string_view text)
{
    return tfidf_vector(index, tokenize(text));
}

inline TermWeights tfidf_vector_of_doc(const InvertedIndex& index, std::string_view passage_id)
{
    auto doc = index.require_doc(passage_id);
    TermWeights out;
    for (auto [t, f] : index.doc_terms(doc)) {
        out[index.term(t)] = f * index.idf_tfidf(t);
    }
    return out;
}

namespace detail {

struct QueryTerm {
    std::uint32_t id;
    double weight;
};

/// Resolves tokens to term ids, merging duplicates into a multiplicity weight.
inline std::vector<QueryTerm> resolve_terms(const InvertedIndex& index, const std::vector<std::string>& tokens)
{
    std::map<std::uint32_t, double> merged;
    for (const auto& tok : tokens) {
        if (auto t = index.term_id(tok)) {
            merged[*t] += 1.0;
        }
    }
    std::vector<QueryTerm> out;
    for (auto [id, w] : merged) {
        out.push_back({id, w});
    }
    return out;
}

inline RankedList collect_positive(const InvertedIndex& index, const std::vector<double>& scores,
                                   const std::vector<bool>& touched, std::size_t k)
{
    RankedList out;
    for (std::uint32_t d = 0; d < scores.size(); ++d) {
        if (touched[d] && scores[d] > 0.0) {
            out.push_back({index.doc_id(d), scores[d]});
        }
    }
    return top_k(std::move(out), k);
}

}  // namespace detail

inline RankedList retrieve_bm25(const InvertedIndex& index, const std::vector<std::string>& query_terms,
                                std::size_t k, const Bm25Params& params = {})
{
    const auto n = index.doc_count();
    std::vector<double> scores(n, 0.0);
    std::vector<bool> touched(n, false);
    const double avg = index.avg_doc_len();
    // Accumulate per query token so repeated terms count like in bm25_score.
    for (const auto& term : query_terms) {
        auto t = index.term_id(term);
        if (!t) {
            continue;
        }
        double idf = bm25_idf(n, index.doc_freq(*t));
        for (const auto& p : index.postings(*t)) {
            scores[p.doc] += idf * bm25_term_weight(p.tf, index.doc_length(p.doc), avg, params);
            touched[p.doc] = true;
        }
    }
    return detail::collect_positive(index, scores, touched, k);
}

/// Weighted query likelihood over every document:
///   sum_t w_t * log((tf + mu*pc) / (len + mu))
/// computed as a per-document background term plus corrections on postings.
inline RankedList retrieve_weighted_ql(const InvertedIndex& index, const std::vector<std::pair<std::uint32_t, double>>& terms,
                                       std::size_t k, const DirichletParams& params = {})
{
    if (terms.empty() || index.doc_count() == 0) {
        return {};
    }
    const auto n = index.doc_count();
    double weight_sum = 0.0;
    double background = 0.0;
    for (auto [t, w] : terms) {
        weight_sum += w;
        background += w * std::log(params.mu * index.p_collection(t));
    }
    std::vector<double> scores(n);
    for (std::uint32_t d = 0; d < n; ++d) {
        scores[d] = background - weight_sum * std::log(index.doc_length(d) + params.mu);
    }
    for (auto [t, w] : terms) {
        double mu_pc = params.mu * index.p_collection(t);
        for (const auto& p : index.postings(t)) {
            scores[p.doc] += w * std::log1p(p.tf / mu_pc);
        }
    }
    RankedList out;
    out.reserve(n);
    for (std::uint32_t d = 0; d < n; ++d) {
        out.push_back({index.doc_id(d), scores[d]});
    }
    return top_k(std::move(out), k);
}

inline RankedList retrieve_ql(const InvertedIndex& index, const std::vector<std::string>& query_terms, std::size_t k,
                              const DirichletParams& params = {})
{
    std::vector<std::pair<std::uint32_t, double>> terms;
    for (const auto& qt : detail::resolve_terms(index, query_terms)) {
        terms.emplace_back(qt.id, qt.weight);
    }
    return retrieve_weighted_ql(index, terms, k, params);
}

/// Cosine between a weighted query vector and document tf-idf vectors.
inline RankedList retrieve_tfidf_cosine(const InvertedIndex& index, const TermWeights& query, std::size_t k)
{
    const auto n = index.doc_count();
    std::vector<double> dots(n, 0.0);
    std::vector<bool> touched(n, false);
    double qnorm_sq = 0.0;
    for (const auto& [term, w] : query) {
        qnorm_sq += w * w;
        auto t = index.term_id(term);
        if (!t || w == 0.0) {
            continue;
        }
        double idf = index.idf_tfidf(*t);
        for (const auto& p : index.postings(*t)) {
            dots[p.doc] += w * p.tf * idf;
            touched[p.doc] = true;
        }
    }
    if (qnorm_sq <= 0.0) {
        return {};
    }
    double qnorm = std::sqrt(qnorm_sq);
    std::vector<double> scores(n, 0.0);
    for (std::uint32_t d = 0; d < n; ++d) {
        double dn = index.tfidf_norm(d);
        if (touched[d] && dn > 0.0) {
            scores[d] = dots[d] / (qnorm * dn);
        }
    }
    return detail::collect_positive(index, scores, touched, k);
}

inline RankedList retrieve(const InvertedIndex& index, const std::vector<std::string>& query_terms, Scorer scorer,
                           std::size_t k, const RetrievalParams& params = {})
{
    if (k == 0) {
        throw InvalidArgument("retrieve requires k >= 1");
    }
    switch (scorer) {
    case Scorer::bm25:
        return retrieve_bm25(index, query_terms, k, params.bm25);
    case Scorer::ql:
        return retrieve_ql(index, query_terms, k, params.dirichlet);
    case Scorer::tfidf:
        return retrieve_tfidf_cosine(index, tfidf_vector(index, query_terms), k);
    }
    return {};
}

inline RankedList retrieve(const InvertedIndex& index, std::string_view query, Scorer scorer, std::size_t k,
                           const RetrievalParams& params = {})
{
    return retrieve(index, tokenize_query(query, params.tokenizer), scorer, k, params);
}

}  // namespace hopir
