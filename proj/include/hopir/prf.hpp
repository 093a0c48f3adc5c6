#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "error.hpp"
#include "index.hpp"
#include "ranked_list.hpp"

namespace hopir {

// Pseudo-relevance feedback. Both methods take the first-pass ranking as the
// feedback set and return a weighted query; no negative feedback is used.

struct RocchioParams {
    double alpha = 1.0;
    double beta = 0.75;
    std::size_t fb_docs = 10;
    std::size_t fb_terms = 10;

    void validate() const
    {
        if (!(alpha >= 0.0) || !(beta >= 0.0) || fb_docs < 1 || fb_terms < 1) {
            throw InvalidArgument("rocchio requires alpha, beta >= 0 and fb_docs, fb_terms >= 1");
        }
    }
};

struct Rm3Params {
    /// Weight of the original query model.
    double lambda = 0.5;
    std::size_t fb_docs = 10;
    std::size_t fb_terms = 10;
    DirichletParams dirichlet;

    void validate() const
    {
        if (!(lambda >= 0.0 && lambda <= 1.0) || fb_docs < 1 || fb_terms < 1) {
            throw InvalidArgument("rm3 requires 0 <= lambda <= 1 and fb_docs, fb_terms >= 1");
        }
        dirichlet.validate();
    }
};

using WeightedQuery = TermWeights;

enum class WeightedScorer { tfidf_cosine, ql };

namespace detail {

/// Top `n` entries by weight (descending, then term) among those accepted by `keep`.
template <typename Pred>
std::vector<std::pair<std::string, double>> top_terms(const TermWeights& weights, std::size_t n, Pred keep)
{
    std::vector<std::pair<std::string, double>> items;
    for (const auto& [term, w] : weights) {
        if (keep(term, w)) {
            items.emplace_back(term, w);
        }
    }
    auto cmp = [](const auto& a, const auto& b) {
        if (a.second != b.second) {
            return a.second > b.second;
        }
        return a.first < b.first;
    };
    if (items.size() > n) {
        std::partial_sort(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(n), items.end(), cmp);
        items.resize(n);
    } else {
        std::sort(items.begin(), items.end(), cmp);
    }
    return items;
}

inline void require_feedback(const RankedList& first_pass)
{
    if (first_pass.empty()) {
        throw InvalidArgument("no feedback documents");
    }
}

}  // namespace detail

/// q' = alpha * tfidf(q) + beta / |Dr| * sum_{d in Dr} tfidf(d), keeping the
/// original query terms plus the `fb_terms` strongest positive expansion terms.
inline WeightedQuery rocchio_expand(const InvertedIndex& index, const std::vector<std::string>& query_terms,
                                    const RankedList& first_pass, const RocchioParams& params = {})
{
    params.validate();
    detail::require_feedback(first_pass);
    auto query_vec = tfidf_vector(index, query_terms);
    std::size_t n_fb = std::min(params.fb_docs, first_pass.size());

    TermWeights centroid;
    for (std::size_t i = 0; i < n_fb; ++i) {
        auto doc = index.require_doc(first_pass[i].id);
        for (auto [t, f] : index.doc_terms(doc)) {
            centroid[index.term(t)] += f * index.idf_tfidf(t);
        }
    }

    WeightedQuery out;
    for (const auto& [term, w] : query_vec) {
        out[term] = params.alpha * w;
    }
    const double scale = params.beta / static_cast<double>(n_fb);
    for (const auto& [term, w] : centroid) {
        if (query_vec.contains(term)) {
            out[term] += scale * w;
        }
    }
    auto expansion = detail::top_terms(centroid, params.fb_terms, [&](const std::string& term, double w) {
        return !query_vec.contains(term) && scale * w > 0.0;
    });
    for (const auto& [term, w] : expansion) {
        out[term] = scale * w;
    }
    return out;
}

inline WeightedQuery rocchio_expand(const InvertedIndex& index, std::string_view query, const RankedList& first_pass,
                                    const RocchioParams& params = {}, const TokenizerConfig& tokenizer = {})
{
    return rocchio_expand(index, tokenize_query(query, tokenizer), first_pass, params);
}

/// Maximum-likelihood query model over the query tokens.
inline WeightedQuery query_mle(const std::vector<std::string>& query_terms)
{
    WeightedQuery out;
    for (const auto& t : query_terms) {
        out[t] += 1.0;
    }
    for (auto& [t, w] : out) {
        w /= static_cast<double>(query_terms.size());
    }
    return out;
}

/// Relevance model P(w|R) ~ sum_d P(w|d) P(q|d) over the feedback documents,
/// truncated to `fb_terms` and renormalized, then interpolated with the
/// query model: lambda * MLE(q) + (1 - lambda) * P(w|R).
inline WeightedQuery rm3_expand(const InvertedIndex& index, const std::vector<std::string>& query_terms,
                                const RankedList& first_pass, const Rm3Params& params = {})
{
    params.validate();
    detail::require_feedback(first_pass);
    std::size_t n_fb = std::min(params.fb_docs, first_pass.size());

    double max_score = first_pass[0].score;
    for (std::size_t i = 1; i < n_fb; ++i) {
        max_score = std::max(max_score, first_pass[i].score);
    }

    TermWeights relevance;
    for (std::size_t i = 0; i < n_fb; ++i) {
        auto doc = index.require_doc(first_pass[i].id);
        // exp(score - max) keeps the largest document weight at 1.
        double doc_weight = std::exp(first_pass[i].score - max_score);
        double denom = index.doc_length(doc) + params.dirichlet.mu;
        for (auto [t, f] : index.doc_terms(doc)) {
            double p = (f + params.dirichlet.mu * index.p_collection(t)) / denom;
            relevance[index.term(t)] += p * doc_weight;
        }
    }
    auto kept = detail::top_terms(relevance, params.fb_terms, [](const std::string&, double w) { return w > 0.0; });
    double mass = 0.0;
    for (const auto& [t, w] : kept) {
        mass += w;
    }

    double lambda = query_terms.empty() ? 0.0 : params.lambda;
    WeightedQuery out;
    if (lambda > 0.0) {
        for (const auto& [t, w] : query_mle(query_terms)) {
            out[t] += lambda * w;
        }
    }
    if (lambda < 1.0 && mass > 0.0) {
        for (const auto& [t, w] : kept) {
            out[t] += (1.0 - lambda) * (w / mass);
        }
    }
    return out;
}

inline WeightedQuery rm3_expand(const InvertedIndex& index, std::string_view query, const RankedList& first_pass,
                                const Rm3Params& params = {}, const TokenizerConfig& tokenizer = {})
{
    return rm3_expand(index, tokenize_query(query, tokenizer), first_pass, params);
}

/// Second-pass retrieval with an expanded query: cosine over tf-idf for
/// Rocchio queries, weighted smoothed log-likelihood for RM3 queries.
inline RankedList retrieve_weighted(const InvertedIndex& index, const WeightedQuery& wq, WeightedScorer scorer,
                                    std::size_t k, const DirichletParams& dirichlet = {})
{
    if (wq.empty()) {
        throw InvalidArgument("weighted query is empty");
    }
    if (k == 0) {
        throw InvalidArgument("retrieve requires k >= 1");
    }
    if (scorer == WeightedScorer::tfidf_cosine) {
        return retrieve_tfidf_cosine(index, wq, k);
    }
    std::vector<std::pair<std::uint32_t, double>> terms;
    for (const auto& [term, w] : wq) {
        if (auto t = index.term_id(term); t && w > 0.0) {
            terms.emplace_back(*t, w);
        }
    }
    return retrieve_weighted_ql(index, terms, k, dirichlet);
}

}  // namespace hopir
