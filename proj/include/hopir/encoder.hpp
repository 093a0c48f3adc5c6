#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "corpus.hpp"
#include "error.hpp"
#include "index.hpp"

namespace hopir {

enum class EncoderProvider { lexical, remote };

inline std::string to_string(EncoderProvider p) { return p == EncoderProvider::lexical ? "lexical" : "remote"; }

/// A query-conditioned passage vector.
struct QueryAwareRepr {
    std::vector<double> values;
    EncoderProvider provenance = EncoderProvider::lexical;

    bool operator==(const QueryAwareRepr&) const = default;
};

inline constexpr std::size_t lexical_dim = 8;

struct EncoderConfig {
    EncoderProvider provider = EncoderProvider::lexical;
    std::size_t dim = lexical_dim;
    /// host:port of the embedding service.
    std::string endpoint;
    /// Bit i enables lexical feature i; disabled features encode as 0.
    std::uint32_t lexical_features = 0xFF;
    Bm25Params bm25;
    DirichletParams dirichlet;
    TokenizerConfig tokenizer;

    void validate() const
    {
        if (dim < 1) {
            throw InvalidArgument("encoder dimension must be >= 1");
        }
        if (provider == EncoderProvider::lexical && dim != lexical_dim) {
            throw InvalidArgument("lexical encoder dimension is fixed at 8");
        }
        if (provider == EncoderProvider::remote && endpoint.empty()) {
            throw InvalidArgument("remote encoder requires an endpoint");
        }
    }

    /// Identifies everything that changes the produced vectors.
    [[nodiscard]] std::string fingerprint() const
    {
        std::ostringstream out;
        out.precision(17);
        out << to_string(provider) << ";dim=" << dim;
        if (provider == EncoderProvider::lexical) {
            out << ";features=" << lexical_features << ";k1=" << bm25.k1 << ";b=" << bm25.b
                << ";mu=" << dirichlet.mu << ";stop_queries=" << tokenizer.stop_queries;
        }
        return out.str();
    }
};

class Encoder {
  public:
    virtual ~Encoder() = default;

    [[nodiscard]] virtual std::size_t dim() const = 0;
    virtual QueryAwareRepr encode(std::string_view query, const Passage& passage) = 0;

    /// Element-wise identical to `encode`, order preserved.
    virtual std::vector<QueryAwareRepr> encode_batch(std::string_view query, const std::vector<const Passage*>& passages)
    {
        std::vector<QueryAwareRepr> out;
        out.reserve(passages.size());
        for (std::size_t i = 0; i < passages.size(); ++i) {
            try {
                out.push_back(encode(query, *passages[i]));
            } catch (const RemoteError&) {
                throw;
            } catch (const std::exception& e) {
                throw InvalidArgument("batch element " + std::to_string(i) + ": " + e.what());
            }
        }
        return out;
    }
};

/// Eight lexical relevance features of a passage against the query, using
/// collection statistics from the index:
///   0 fraction of distinct query terms present in the passage
///   1 BM25 s, mapped to s / (1 + s)
///   2 tf-idf cosine(query, passage)
///   3 Dirichlet QL per-term geometric mean likelihood, exp(QL / |q|)
///   4 fraction of the passage's mentions sharing a term with the query
///   5 log(1 + passage length)
///   6 fraction of distinct query bigrams occurring in the passage
///   7 bias, always 1
class LexicalEncoder final : public Encoder {
  public:
    LexicalEncoder(const InvertedIndex& index, EncoderConfig config) : index_(&index), config_(std::move(config))
    {
        config_.validate();
        if (config_.provider != EncoderProvider::lexical) {
            throw InvalidArgument("LexicalEncoder requires the lexical provider");
        }
    }

    [[nodiscard]] std::size_t dim() const override { return lexical_dim; }

    QueryAwareRepr encode(std::string_view query, const Passage& passage) override
    {
        if (passage.text.empty()) {
            throw InvalidArgument("passage '" + passage.id + "' has empty text");
        }
        const auto query_tokens = tokenize_query(query, config_.tokenizer);
        const auto doc_tokens = tokenize(passage.text);
        std::unordered_map<std::string, std::uint32_t> doc_tf;
        for (const auto& t : doc_tokens) {
            ++doc_tf[t];
        }
        const std::set<std::string> query_set(query_tokens.begin(), query_tokens.end());
        const double doc_len = static_cast<double>(doc_tokens.size());
        auto tf_of = [&](const std::string& t) -> double {
            auto it = doc_tf.find(t);
            return it == doc_tf.end() ? 0.0 : it->second;
        };

        std::vector<double> f(lexical_dim, 0.0);

        if (!query_set.empty()) {
            std::size_t present = 0;
            for (const auto& t : query_set) {
                present += doc_tf.contains(t) ? 1 : 0;
            }
            f[0] = static_cast<double>(present) / static_cast<double>(query_set.size());
        }

        const auto n_docs = index_->doc_count();
        if (n_docs > 0) {
            double bm25 = 0.0;
            for (const auto& t : query_tokens) {
                double tf = tf_of(t);
                if (tf == 0.0) {
                    continue;
                }
                auto df = index_->doc_freq(t);
                bm25 += bm25_idf(n_docs, df)
                        * bm25_term_weight(tf, doc_len, index_->avg_doc_len(), config_.bm25);
            }
            f[1] = bm25 / (1.0 + bm25);
        }

        {
            auto qv = tfidf_vector(*index_, query_tokens);
            double dot = 0.0;
            double qn = 0.0;
            double dn = 0.0;
            for (const auto& [term, w] : qv) {
                qn += w * w;
                dot += w * tf_of(term) * idf_of(term);
            }
            for (const auto& [term, tf] : doc_tf) {
                double w = tf * idf_of(term);
                dn += w * w;
            }
            if (qn > 0.0 && dn > 0.0) {
                f[2] = dot / (std::sqrt(qn) * std::sqrt(dn));
            }
        }

        {
            double ql = 0.0;
            std::size_t scored = 0;
            for (const auto& t : query_tokens) {
                auto id = index_->term_id(t);
                if (!id) {
                    continue;
                }
                double pc = index_->p_collection(*id);
                ql += std::log((tf_of(t) + config_.dirichlet.mu * pc) / (doc_len + config_.dirichlet.mu));
                ++scored;
            }
            if (scored > 0) {
                f[3] = std::exp(ql / static_cast<double>(scored));
            }
        }

        if (!passage.mentions.empty()) {
            std::size_t sharing = 0;
            for (const auto& m : passage.mentions) {
                for (const auto& t : tokenize(m.surface)) {
                    if (query_set.contains(t)) {
                        ++sharing;
                        break;
                    }
                }
            }
            f[4] = static_cast<double>(sharing) / static_cast<double>(passage.mentions.size());
        }

        f[5] = std::log1p(doc_len);

        {
            std::set<std::pair<std::string, std::string>> query_bigrams;
            for (std::size_t i = 0; i + 1 < query_tokens.size(); ++i) {
                query_bigrams.emplace(query_tokens[i], query_tokens[i + 1]);
            }
            if (!query_bigrams.empty()) {
                std::set<std::pair<std::string, std::string>> doc_bigrams;
                for (std::size_t i = 0; i + 1 < doc_tokens.size(); ++i) {
                    doc_bigrams.emplace(doc_tokens[i], doc_tokens[i + 1]);
                }
                std::size_t hit = 0;
                for (const auto& bg : query_bigrams) {
                    hit += doc_bigrams.contains(bg) ? 1 : 0;
                }
                f[6] = static_cast<double>(hit) / static_cast<double>(query_bigrams.size());
            }
        }

        f[7] = 1.0;

        for (std::size_t i = 0; i < lexical_dim; ++i) {
            if ((config_.lexical_features & (1u << i)) == 0) {
                f[i] = 0.0;
            }
        }
        return {std::move(f), EncoderProvider::lexical};
    }

  private:
    [[nodiscard]] double idf_of(const std::string& term) const
    {
        auto id = index_->term_id(term);
        return id ? index_->idf_tfidf(*id) : 0.0;
    }

    const InvertedIndex* index_;
    EncoderConfig config_;
};

}  // namespace hopir
