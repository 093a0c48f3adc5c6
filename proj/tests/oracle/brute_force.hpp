#pragma once

// Direct, unoptimized evaluations of the scoring formulas over raw token
// lists. Nothing here touches the index; statistics are recounted by scanning
// every document on every call.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

struct Docs {
    std::vector<std::string> ids;
    std::vector<std::vector<std::string>> tokens;

    [[nodiscard]] std::size_t n() const { return ids.size(); }

    [[nodiscard]] std::size_t tf(const std::string& t, std::size_t d) const
    {
        return static_cast<std::size_t>(std::count(tokens[d].begin(), tokens[d].end(), t));
    }

    [[nodiscard]] std::size_t df(const std::string& t) const
    {
        std::size_t c = 0;
        for (std::size_t d = 0; d < n(); ++d) {
            c += tf(t, d) > 0 ? 1 : 0;
        }
        return c;
    }

    [[nodiscard]] std::size_t cf(const std::string& t) const
    {
        std::size_t c = 0;
        for (std::size_t d = 0; d < n(); ++d) {
            c += tf(t, d);
        }
        return c;
    }

    [[nodiscard]] std::size_t total() const
    {
        std::size_t c = 0;
        for (const auto& d : tokens) {
            c += d.size();
        }
        return c;
    }

    [[nodiscard]] std::set<std::string> vocabulary() const
    {
        std::set<std::string> v;
        for (const auto& d : tokens) {
            v.insert(d.begin(), d.end());
        }
        return v;
    }
};

using Weights = std::map<std::string, double>;
using Ranking = std::vector<std::pair<std::string, double>>;

inline double bm25(const Docs& c, const std::vector<std::string>& q, std::size_t d, double k1 = 1.2, double b = 0.75)
{
    double avg = static_cast<double>(c.total()) / static_cast<double>(c.n());
    double dl = static_cast<double>(c.tokens[d].size());
    double s = 0.0;
    for (const auto& t : q) {
        double tf = static_cast<double>(c.tf(t, d));
        if (tf == 0.0) {
            continue;
        }
        double df = static_cast<double>(c.df(t));
        double N = static_cast<double>(c.n());
        double idf = std::log(1.0 + (N - df + 0.5) / (df + 0.5));
        s += idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * dl / avg));
    }
    return s;
}

/// log P_smoothed(t | d); t must occur in the collection.
inline double log_p(const Docs& c, const std::string& t, std::size_t d, double mu)
{
    double pc = static_cast<double>(c.cf(t)) / static_cast<double>(c.total());
    return std::log((static_cast<double>(c.tf(t, d)) + mu * pc) / (static_cast<double>(c.tokens[d].size()) + mu));
}

inline double ql(const Docs& c, const std::vector<std::string>& q, std::size_t d, double mu = 1500.0)
{
    double s = 0.0;
    for (const auto& t : q) {
        if (c.cf(t) > 0) {
            s += log_p(c, t, d, mu);
        }
    }
    return s;
}

inline Weights tfidf(const Docs& c, const std::vector<std::string>& tokens)
{
    Weights w;
    for (const auto& t : std::set<std::string>(tokens.begin(), tokens.end())) {
        auto df = c.df(t);
        if (df == 0) {
            continue;
        }
        auto tf = static_cast<double>(std::count(tokens.begin(), tokens.end(), t));
        w[t] = tf * std::log(static_cast<double>(c.n()) / static_cast<double>(df));
    }
    return w;
}

inline double cosine(const Weights& a, const Weights& b)
{
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (const auto& [t, w] : a) {
        na += w * w;
        if (auto it = b.find(t); it != b.end()) {
            dot += w * it->second;
        }
    }
    for (const auto& [t, w] : b) {
        nb += w * w;
    }
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// Sorted by score descending then id; entries failing `keep` dropped.
template <class Keep>
Ranking rank(const Docs& c, const std::vector<double>& scores, std::size_t k, Keep keep)
{
    Ranking out;
    for (std::size_t d = 0; d < c.n(); ++d) {
        if (keep(d, scores[d])) {
            out.emplace_back(c.ids[d], scores[d]);
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
        return x.second != y.second ? x.second > y.second : x.first < y.first;
    });
    if (out.size() > k) {
        out.resize(k);
    }
    return out;
}

inline Ranking rank_bm25(const Docs& c, const std::vector<std::string>& q, std::size_t k)
{
    std::vector<double> s;
    for (std::size_t d = 0; d < c.n(); ++d) {
        s.push_back(bm25(c, q, d));
    }
    return rank(c, s, k, [](std::size_t, double v) { return v > 0.0; });
}

inline Ranking rank_weighted_ql(const Docs& c, const Weights& wq, std::size_t k, double mu)
{
    bool any = false;
    for (const auto& [t, w] : wq) {
        any = any || (w > 0.0 && c.cf(t) > 0);
    }
    if (!any) {
        return {};
    }
    std::vector<double> s;
    for (std::size_t d = 0; d < c.n(); ++d) {
        double v = 0.0;
        for (const auto& [t, w] : wq) {
            if (w > 0.0 && c.cf(t) > 0) {
                v += w * log_p(c, t, d, mu);
            }
        }
        s.push_back(v);
    }
    return rank(c, s, k, [](std::size_t, double) { return true; });
}

inline Ranking rank_ql(const Docs& c, const std::vector<std::string>& q, std::size_t k, double mu = 1500.0)
{
    Weights counts;
    for (const auto& t : q) {
        counts[t] += 1.0;
    }
    return rank_weighted_ql(c, counts, k, mu);
}

inline Ranking rank_cosine(const Docs& c, const Weights& wq, std::size_t k)
{
    std::vector<double> s;
    for (std::size_t d = 0; d < c.n(); ++d) {
        s.push_back(cosine(wq, tfidf(c, c.tokens[d])));
    }
    return rank(c, s, k, [](std::size_t, double v) { return v > 0.0; });
}

inline std::size_t position(const Docs& c, const std::string& id)
{
    return static_cast<std::size_t>(std::find(c.ids.begin(), c.ids.end(), id) - c.ids.begin());
}

/// Highest-weight `n` entries (ties by term) out of `w`.
inline std::vector<std::pair<std::string, double>> strongest(const Weights& w, std::size_t n)
{
    std::vector<std::pair<std::string, double>> items(w.begin(), w.end());
    std::sort(items.begin(), items.end(), [](const auto& x, const auto& y) {
        return x.second != y.second ? x.second > y.second : x.first < y.first;
    });
    if (items.size() > n) {
        items.resize(n);
    }
    return items;
}

inline Weights rocchio(const Docs& c, const std::vector<std::string>& q, const Ranking& first, double alpha,
                       double beta, std::size_t fb_docs, std::size_t fb_terms)
{
    std::size_t n = std::min(fb_docs, first.size());
    auto qv = tfidf(c, q);
    Weights centroid;
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& [t, w] : tfidf(c, c.tokens[position(c, first[i].first)])) {
            centroid[t] += w;
        }
    }
    double scale = beta / static_cast<double>(n);
    Weights out;
    for (const auto& [t, w] : qv) {
        out[t] = alpha * w + (centroid.count(t) != 0 ? scale * centroid[t] : 0.0);
    }
    Weights candidates;
    for (const auto& [t, w] : centroid) {
        if (qv.count(t) == 0 && scale * w > 0.0) {
            candidates[t] = w;
        }
    }
    for (const auto& [t, w] : strongest(candidates, fb_terms)) {
        out[t] = scale * w;
    }
    return out;
}

inline Weights rm3(const Docs& c, const std::vector<std::string>& q, const Ranking& first, double lambda,
                   std::size_t fb_docs, std::size_t fb_terms, double mu)
{
    std::size_t n = std::min(fb_docs, first.size());
    double top = first[0].second;
    for (std::size_t i = 0; i < n; ++i) {
        top = std::max(top, first[i].second);
    }
    Weights rel;
    for (std::size_t i = 0; i < n; ++i) {
        auto d = position(c, first[i].first);
        double pq = std::exp(first[i].second - top);
        for (const auto& t : std::set<std::string>(c.tokens[d].begin(), c.tokens[d].end())) {
            double pc = static_cast<double>(c.cf(t)) / static_cast<double>(c.total());
            double p = (static_cast<double>(c.tf(t, d)) + mu * pc) / (static_cast<double>(c.tokens[d].size()) + mu);
            rel[t] += p * pq;
        }
    }
    auto kept = strongest(rel, fb_terms);
    double mass = 0.0;
    for (const auto& [t, w] : kept) {
        mass += w;
    }
    Weights out;
    if (!q.empty() && lambda > 0.0) {
        for (const auto& t : q) {
            out[t] += lambda / static_cast<double>(q.size());
        }
    }
    double rest = q.empty() ? 1.0 : 1.0 - lambda;
    if (rest > 0.0) {
        for (const auto& [t, w] : kept) {
            out[t] += rest * w / mass;
        }
    }
    return out;
}

/// Average precision: each gold hit contributes (gold items at or above its
/// rank, counted by rescanning) / rank.
inline double average_precision(const std::vector<std::string>& ranked, const std::set<std::string>& gold)
{
    double sum = 0.0;
    for (std::size_t r = 0; r < ranked.size(); ++r) {
        if (gold.count(ranked[r]) == 0) {
            continue;
        }
        std::size_t above = 0;
        for (std::size_t i = 0; i <= r; ++i) {
            for (const auto& g : gold) {
                above += ranked[i] == g ? 1 : 0;
            }
        }
        sum += static_cast<double>(above) / static_cast<double>(r + 1);
    }
    return sum / static_cast<double>(gold.size());
}

inline int accuracy(const std::vector<std::string>& ranked, const std::set<std::string>& gold, std::size_t k)
{
    for (const auto& g : gold) {
        auto it = std::find(ranked.begin(), ranked.end(), g);
        if (it == ranked.end() || static_cast<std::size_t>(it - ranked.begin()) >= k) {
            return 0;
        }
    }
    return 1;
}

}  // namespace oracle
