#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "corpus.hpp"
#include "error.hpp"
#include "linker.hpp"
#include "ranked_list.hpp"

namespace hopir {

/// Why a chain moves from `first` to `last`: a self-link, or a linked mention.
struct Hop {
    std::optional<MentionSpan> mention;  // empty for a self-link

    [[nodiscard]] bool is_self_link() const noexcept { return !mention.has_value(); }
    bool operator==(const Hop&) const = default;
};

/// A length-2 evidence chain (D, E).
struct Chain {
    std::string first;
    std::string last;
    Hop hop;

    bool operator==(const Chain&) const = default;
};

struct ChainCaps {
    std::size_t per_mention = 8;
    std::size_t per_question = 4096;
};

struct ChainSet {
    std::string qid;
    std::vector<Chain> chains;
    std::size_t initial_k = 0;
    std::string linker_mode = "alias";
};

/// Enumerates (D, D) and (D, E) for every linked candidate E of every mention
/// in every initial passage D. Pairs are unique; a mention landing back on D
/// is absorbed by the self-link.
inline ChainSet enumerate_chains(const RankedList& initial, const Corpus& corpus, const AliasTable& table,
                                 const ChainCaps& caps = {})
{
    if (initial.empty()) {
        throw InvalidArgument("enumerate_chains requires a non-empty initial ranking");
    }
    ChainSet out;
    out.initial_k = initial.size();
    std::set<std::pair<std::string, std::string>> seen;

    auto emit = [&](const std::string& first, const std::string& last, Hop hop) {
        if (out.chains.size() >= caps.per_question) {
            return false;
        }
        if (seen.emplace(first, last).second) {
            out.chains.push_back({first, last, std::move(hop)});
        }
        return true;
    };

    for (const auto& hit : initial) {
        const auto& passage = corpus.at(hit.id);
        if (!emit(passage.id, passage.id, Hop{})) {
            return out;
        }
        for (const auto& mention : passage.mentions) {
            const auto& candidates = link(table, mention);
            std::size_t n = std::min(caps.per_mention, candidates.size());
            for (std::size_t i = 0; i < n; ++i) {
                if (!emit(passage.id, candidates[i], Hop{mention})) {
                    return out;
                }
            }
        }
    }
    return out;
}

enum class Label { negative = 0, positive = 1 };

/// Positive iff the chain ends in a supporting passage.
inline Label gold_label(const Chain& chain, const Question& question)
{
    return question.supporting_ids.contains(chain.last) ? Label::positive : Label::negative;
}

inline nlohmann::json chain_to_json(const std::string& qid, const Chain& chain, std::optional<Label> label)
{
    nlohmann::json hop;
    if (chain.hop.is_self_link()) {
        hop = "self";
    } else {
        const auto& m = *chain.hop.mention;
        hop = {{"surface", m.surface}, {"start", m.start}, {"end", m.end}};
    }
    nlohmann::json obj{{"qid", qid}, {"first", chain.first}, {"last", chain.last}, {"hop", hop}};
    if (label) {
        obj["label"] = static_cast<int>(*label);
    }
    return obj;
}

}  // namespace hopir
