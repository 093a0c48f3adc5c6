#pragma once

#include <set>
#include <string>
#include <vector>

#include <hopir/corpus.hpp>
#include <hopir/random.hpp>

#include "brute_force.hpp"

namespace testutil {

/// Random corpus of up to `max_docs` passages over a `vocab`-word alphabet.
inline oracle::Docs random_docs(hopir::Rng& rng, std::size_t max_docs = 10, std::size_t vocab = 12,
                                std::size_t max_len = 15)
{
    oracle::Docs c;
    std::size_t n = 1 + rng.below(max_docs);
    for (std::size_t d = 0; d < n; ++d) {
        c.ids.push_back("d" + std::to_string(d));
        std::vector<std::string> toks;
        std::size_t len = 1 + rng.below(max_len);
        for (std::size_t i = 0; i < len; ++i) {
            toks.push_back("w" + std::to_string(rng.below(vocab)));
        }
        c.tokens.push_back(std::move(toks));
    }
    return c;
}

inline std::vector<std::string> random_query(hopir::Rng& rng, std::size_t vocab = 14, std::size_t max_len = 5)
{
    std::vector<std::string> q;
    std::size_t len = 1 + rng.below(max_len);
    for (std::size_t i = 0; i < len; ++i) {
        q.push_back("w" + std::to_string(rng.below(vocab)));
    }
    return q;
}

inline hopir::Corpus to_corpus(const oracle::Docs& c)
{
    std::vector<hopir::Passage> ps;
    for (std::size_t d = 0; d < c.n(); ++d) {
        ps.push_back({c.ids[d], c.ids[d], hopir::join(c.tokens[d]), {}});
    }
    return hopir::Corpus(std::move(ps));
}

inline hopir::Corpus corpus_of(const std::vector<std::pair<std::string, std::string>>& id_text)
{
    std::vector<hopir::Passage> ps;
    for (const auto& [id, text] : id_text) {
        ps.push_back({id, id, text, {}});
    }
    return hopir::Corpus(std::move(ps));
}

}  // namespace testutil

