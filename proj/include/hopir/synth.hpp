#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "corpus.hpp"
#include "error.hpp"
#include "linker.hpp"
#include "random.hpp"

namespace hopir {

/// Synthetic bridge-entity corpus parameters.
///
/// Every question gets its own entity passages. A two-hop question draws
/// `round(overlap * question_terms)` of its terms from the bridge (answer)
/// passage and the rest from a source passage that mentions the bridge
/// entity. Distractors receive random subsets of each question's terms so
/// that lexical matching alone ranks the bridge passage poorly.
struct SynthConfig {
    std::size_t n_entities = 1000;
    std::size_t n_distractors = 1000;
    std::size_t n_questions = 200;
    /// Questions planted for training, on the same corpus, disjoint from the
    /// evaluation questions.
    std::size_t n_train_questions = 200;
    std::size_t vocab_size = 5000;
    double overlap = 0.3;
    double single_hop_fraction = 0.0;
    std::uint64_t seed = 1;

    std::size_t question_terms = 10;
    /// Content length of every passage, drawn uniformly; planted and injected
    /// terms count toward it.
    std::size_t passage_min_terms = 16;
    std::size_t passage_max_terms = 40;
    std::size_t confounders_per_question = 20;
    std::size_t confounder_min_terms = 2;
    std::size_t confounder_max_terms = 5;
    std::size_t extra_mentions = 2;

    void validate() const
    {
        if (n_entities < 1 || n_questions < 1 || vocab_size < 1 || question_terms < 1
            || passage_min_terms < 1 || passage_min_terms > passage_max_terms) {
            throw InvalidArgument("synth counts must be >= 1");
        }
        if (!(overlap >= 0.0 && overlap <= 1.0) || !(single_hop_fraction >= 0.0 && single_hop_fraction <= 1.0)) {
            throw InvalidArgument("overlap and single_hop_fraction must lie in [0, 1]");
        }
        if (confounder_min_terms > confounder_max_terms || confounder_max_terms > question_terms) {
            throw InvalidArgument("confounder term range must satisfy min <= max <= question_terms");
        }
        if (vocab_size < 4 * (question_terms + passage_max_terms)) {
            throw InvalidArgument("infeasible config: vocab_size " + std::to_string(vocab_size)
                                  + " is too small for distinct question and passage terms (need >= "
                                  + std::to_string(4 * (question_terms + passage_max_terms)) + ")");
        }
        if (vocab_size > 100000) {
            throw InvalidArgument("infeasible config: vocab_size above 100000 exceeds the synthetic word space");
        }
    }

    [[nodiscard]] nlohmann::json to_json() const
    {
        return {{"n_entities", n_entities},
                {"n_distractors", n_distractors},
                {"n_questions", n_questions},
                {"n_train_questions", n_train_questions},
                {"vocab_size", vocab_size},
                {"overlap", overlap},
                {"single_hop_fraction", single_hop_fraction},
                {"seed", seed},
                {"question_terms", question_terms},
                {"passage_min_terms", passage_min_terms},
                {"passage_max_terms", passage_max_terms},
                {"confounders_per_question", confounders_per_question},
                {"confounder_min_terms", confounder_min_terms},
                {"confounder_max_terms", confounder_max_terms},
                {"extra_mentions", extra_mentions}};
    }
};

struct PlantedQuestion {
    std::string qid;
    bool two_hop = true;
    std::string source;
    std::string bridge;  // empty for single-hop
    std::string answer;
    std::vector<std::string> source_terms;
    std::vector<std::string> bridge_terms;
};

struct SynthBundle {
    Corpus corpus;
    std::vector<LinkAnnotation> links;
    std::vector<Question> questions;
    std::vector<Question> train_questions;
    std::vector<PlantedQuestion> planted;        // evaluation questions
    std::vector<PlantedQuestion> train_planted;  // training questions
    SynthConfig config;

    [[nodiscard]] nlohmann::json manifest() const
    {
        auto gold = [](const std::vector<PlantedQuestion>& items) {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& p : items) {
                arr.push_back({{"qid", p.qid},
                               {"kind", p.two_hop ? "two_hop" : "single_hop"},
                               {"source", p.source},
                               {"bridge", p.bridge},
                               {"answer", p.answer}});
            }
            return arr;
        };
        return {{"generator", "hopir-synth"},
                {"version", 1},
                {"seed", config.seed},
                {"config", config.to_json()},
                {"passages", corpus.size()},
                {"gold", gold(planted)},
                {"train_gold", gold(train_planted)}};
    }
};

namespace detail {

class WordFactory {
  public:
    explicit WordFactory(Rng& rng) : rng_(&rng) {}

    std::string make(std::size_t syllables, bool capitalized)
    {
        static constexpr std::string_view consonants = "bdfgklmnprstvz";
        static constexpr std::string_view vowels = "aeiou";
        for (;;) {
            std::string w;
            for (std::size_t i = 0; i < syllables; ++i) {
                w.push_back(consonants[rng_->below(consonants.size())]);
                w.push_back(vowels[rng_->below(vowels.size())]);
            }
            if (used_.insert(w).second) {
                if (capitalized) {
                    w[0] = static_cast<char>(w[0] - 'a' + 'A');
                }
                return w;
            }
        }
    }

  private:
    Rng* rng_;
    std::unordered_set<std::string> used_;
};

/// Zipf(1) sampler over vocabulary ranks.
class ZipfSampler {
  public:
    explicit ZipfSampler(std::size_t n)
    {
        cdf_.resize(n);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += 1.0 / static_cast<double>(i + 1);
            cdf_[i] = acc;
        }
        for (auto& c : cdf_) {
            c /= acc;
        }
    }

    std::size_t operator()(Rng& rng) const
    {
        double u = rng.uniform();
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
    }

  private:
    std::vector<double> cdf_;
};

struct PassageDraft {
    std::string id;
    std::string name;
    std::vector<std::string> content;
    std::vector<std::size_t> mentioned;  // entity indices
};

}  // namespace detail

/// Builds a deterministic bundle for `config.seed`.
inline SynthBundle generate(const SynthConfig& config)
{
    config.validate();
    const std::size_t total_questions = config.n_questions + config.n_train_questions;
    auto single_count = [&](std::size_t n) {
        return static_cast<std::size_t>(std::llround(config.single_hop_fraction * static_cast<double>(n)));
    };
    const std::size_t eval_single = single_count(config.n_questions);
    const std::size_t train_single = single_count(config.n_train_questions);
    const std::size_t entities_needed = 2 * total_questions - eval_single - train_single;
    if (config.n_entities < entities_needed) {
        throw InvalidArgument("infeasible config: " + std::to_string(total_questions) + " questions need "
                              + std::to_string(entities_needed) + " entities but n_entities is "
                              + std::to_string(config.n_entities));
    }

    Rng rng(config.seed);
    detail::WordFactory words(rng);
    std::vector<std::string> vocab;
    for (std::size_t i = 0; i < config.vocab_size; ++i) {
        vocab.push_back(words.make(i < 3000 ? 2 + rng.below(2) : 3, false));
    }
    detail::ZipfSampler zipf(vocab.size());

    auto pad = [](std::size_t i) {
        std::ostringstream out;
        out.width(5);
        out.fill('0');
        out << i;
        return out.str();
    };

    std::vector<detail::PassageDraft> entities(config.n_entities);
    for (std::size_t i = 0; i < entities.size(); ++i) {
        entities[i].id = "ent-" + pad(i);
        entities[i].name = words.make(3, true);
    }
    std::vector<detail::PassageDraft> distractors(config.n_distractors);
    for (std::size_t i = 0; i < distractors.size(); ++i) {
        distractors[i].id = "dis-" + pad(i);
        distractors[i].name = words.make(3, true);
    }

    std::vector<std::size_t> entity_order(config.n_entities);
    for (std::size_t i = 0; i < entity_order.size(); ++i) {
        entity_order[i] = i;
    }
    rng.shuffle(entity_order);
    std::size_t next_entity = 0;

    // Question kinds: exact single-hop counts, positions shuffled.
    auto kinds = [&](std::size_t n, std::size_t singles) {
        std::vector<bool> two_hop(n, true);
        for (std::size_t i = 0; i < singles && i < n; ++i) {
            two_hop[i] = false;
        }
        rng.shuffle(two_hop);
        return two_hop;
    };
    auto eval_kinds = kinds(config.n_questions, eval_single);
    auto train_kinds = kinds(config.n_train_questions, train_single);

    // Informative terms come from the less frequent part of the vocabulary.
    const std::size_t informative_floor = vocab.size() / 10;
    auto sample_question_terms = [&]() {
        std::vector<std::string> terms;
        std::set<std::size_t> picked;
        while (terms.size() < config.question_terms) {
            auto r = informative_floor + rng.below(vocab.size() - informative_floor);
            if (picked.insert(r).second) {
                terms.push_back(vocab[r]);
            }
        }
        return terms;
    };
    auto top_up = [&](std::vector<std::string>& content, const std::set<std::string>& avoid) {
        auto span = config.passage_max_terms - config.passage_min_terms + 1;
        auto target = config.passage_min_terms + rng.below(span);
        while (content.size() < target) {
            const auto& w = vocab[zipf(rng)];
            if (!avoid.contains(w)) {
                content.push_back(w);
            }
        }
    };
    auto random_entity_except = [&](std::size_t self) {
        if (config.n_entities == 1) {
            return self;
        }
        for (;;) {
            auto e = rng.below(config.n_entities);
            if (e != self) {
                return static_cast<std::size_t>(e);
            }
        }
    };

    SynthBundle bundle;
    bundle.config = config;
    std::vector<bool> entity_assigned(config.n_entities, false);

    auto plant = [&](bool two_hop, const std::string& qid) {
        PlantedQuestion pq;
        pq.qid = qid;
        pq.two_hop = two_hop;
        auto terms = sample_question_terms();
        const std::set<std::string> avoid(terms.begin(), terms.end());
        pq.answer = words.make(4, false);

        std::size_t source = entity_order[next_entity++];
        entity_assigned[source] = true;
        pq.source = entities[source].id;
        auto& src = entities[source];

        std::size_t n_bridge = two_hop ? static_cast<std::size_t>(std::llround(config.overlap * static_cast<double>(terms.size()))) : 0;
        pq.bridge_terms.assign(terms.begin(), terms.begin() + static_cast<std::ptrdiff_t>(n_bridge));
        pq.source_terms.assign(terms.begin() + static_cast<std::ptrdiff_t>(n_bridge), terms.end());

        src.content = pq.source_terms;

        if (two_hop) {
            std::size_t bridge = entity_order[next_entity++];
            entity_assigned[bridge] = true;
            pq.bridge = entities[bridge].id;
            auto& br = entities[bridge];
            br.content = pq.bridge_terms;
            br.content.push_back(pq.answer);
            top_up(br.content, avoid);
            src.mentioned.push_back(bridge);
        } else {
            src.content.push_back(pq.answer);
        }
        top_up(src.content, avoid);

        if (!distractors.empty() && config.confounders_per_question > 0) {
            auto picks = rng.sample_indices(distractors.size(), config.confounders_per_question);
            for (auto d : picks) {
                auto span = config.confounder_max_terms - config.confounder_min_terms + 1;
                auto c = config.confounder_min_terms + rng.below(span);
                for (auto t : rng.sample_indices(terms.size(), c)) {
                    distractors[d].content.push_back(terms[t]);
                }
            }
        }

        Question q;
        q.qid = qid;
        auto shuffled = terms;
        rng.shuffle(shuffled);
        q.text = join(shuffled) + "?";
        q.answer = pq.answer;
        q.supporting_ids.insert(pq.source);
        if (two_hop) {
            q.supporting_ids.insert(pq.bridge);
        }
        return std::make_pair(q, pq);
    };

    for (std::size_t i = 0; i < config.n_questions; ++i) {
        auto [q, pq] = plant(eval_kinds[i], "q-" + pad(i));
        bundle.questions.push_back(std::move(q));
        bundle.planted.push_back(std::move(pq));
    }
    for (std::size_t i = 0; i < config.n_train_questions; ++i) {
        auto [q, pq] = plant(train_kinds[i], "t-" + pad(i));
        bundle.train_questions.push_back(std::move(q));
        bundle.train_planted.push_back(std::move(pq));
    }

    // Remaining content and mentions.
    for (std::size_t i = 0; i < entities.size(); ++i) {
        auto& e = entities[i];
        if (!entity_assigned[i]) {
            top_up(e.content, {});
        }
        for (std::size_t m = 0; m < config.extra_mentions; ++m) {
            e.mentioned.push_back(random_entity_except(i));
        }
    }
    for (auto& d : distractors) {
        top_up(d.content, {});
        for (std::size_t m = 0; m < config.extra_mentions; ++m) {
            d.mentioned.push_back(rng.below(config.n_entities));
        }
    }

    // Render: "<Name> w w w ... w. <Mention> and <Mention> and <Mention>."
    std::vector<Passage> passages;
    auto render = [&](detail::PassageDraft& draft) {
        rng.shuffle(draft.content);
        std::set<std::size_t> seen;
        std::vector<std::size_t> mentioned;
        for (auto e : draft.mentioned) {
            if (seen.insert(e).second && entities[e].id != draft.id) {
                mentioned.push_back(e);
            }
        }
        rng.shuffle(mentioned);

        Passage p;
        p.id = draft.id;
        p.title = draft.name;
        p.text = draft.name;
        p.mentions.push_back({0, draft.name.size(), draft.name});
        for (const auto& w : draft.content) {
            p.text += ' ';
            p.text += w;
        }
        p.text += '.';
        for (std::size_t i = 0; i < mentioned.size(); ++i) {
            p.text += i == 0 ? " " : " and ";
            const auto& name = entities[mentioned[i]].name;
            p.mentions.push_back({p.text.size(), p.text.size() + name.size(), name});
            p.text += name;
        }
        if (!mentioned.empty()) {
            p.text += '.';
        }
        passages.push_back(std::move(p));
    };
    for (auto& e : entities) {
        render(e);
    }
    for (auto& d : distractors) {
        render(d);
    }

    std::unordered_map<std::string, std::string> entity_by_name;
    for (const auto& e : entities) {
        entity_by_name.emplace(e.name, e.id);
    }
    for (const auto& d : distractors) {
        entity_by_name.emplace(d.name, d.id);
    }
    for (const auto& p : passages) {
        for (const auto& m : p.mentions) {
            bundle.links.push_back({p.id, m, entity_by_name.at(m.surface)});
        }
    }
    bundle.corpus = Corpus(std::move(passages));
    return bundle;
}

/// Writes corpus.jsonl, links.jsonl, questions.jsonl, train_questions.jsonl
/// and manifest.json into `dir`.
inline void write_bundle(const SynthBundle& bundle, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw DataError("cannot write " + (dir / name).string());
        }
        return out;
    };
    {
        auto out = open("corpus.jsonl");
        write_corpus_jsonl(out, bundle.corpus);
    }
    {
        auto out = open("links.jsonl");
        write_links_jsonl(out, bundle.links);
    }
    {
        auto out = open("questions.jsonl");
        write_questions_jsonl(out, bundle.questions);
    }
    {
        auto out = open("train_questions.jsonl");
        write_questions_jsonl(out, bundle.train_questions);
    }
    {
        auto out = open("manifest.json");
        out << bundle.manifest().dump(1) << '\n';
    }
}

}  // namespace hopir
