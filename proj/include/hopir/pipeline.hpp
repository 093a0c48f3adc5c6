#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "chains.hpp"
#include "corpus.hpp"
#include "encoder.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "index.hpp"
#include "linker.hpp"
#include "prf.hpp"
#include "ranked_list.hpp"
#include "reranker.hpp"

namespace hopir {

/// One retrieval system per comparison row.
enum class Mode { bm25, ql, prf_rocchio, prf_rm3, pointwise, entity_hop };

inline std::string to_string(Mode m)
{
    switch (m) {
    case Mode::bm25:
        return "bm25";
    case Mode::ql:
        return "ql";
    case Mode::prf_rocchio:
        return "prf-rocchio";
    case Mode::prf_rm3:
        return "prf-rm3";
    case Mode::pointwise:
        return "pointwise";
    case Mode::entity_hop:
        return "entity-hop";
    }
    return "bm25";
}

inline Mode mode_from_string(std::string_view s)
{
    for (auto m : {Mode::bm25, Mode::ql, Mode::prf_rocchio, Mode::prf_rm3, Mode::pointwise, Mode::entity_hop}) {
        if (to_string(m) == s) {
            return m;
        }
    }
    throw InvalidArgument("unknown retrieval mode '" + std::string(s) + "'");
}

struct PipelineConfig {
    RetrievalParams retrieval;
    /// Initial BM25 depth feeding chain enumeration.
    std::size_t initial_k = 25;
    /// Initial BM25 depth re-ranked by the pointwise baseline.
    std::size_t pointwise_initial_k = 200;
    ChainCaps caps;
    RocchioParams rocchio;
    Rm3Params rm3;
    /// First pass for Rocchio: query likelihood, or tf-idf cosine.
    Scorer rocchio_first_pass = Scorer::ql;
    std::size_t threads = 1;
};

/// Applies `fn(i)` for i in [0, n) on up to `threads` workers. Results must be
/// written to per-index slots, so output is independent of scheduling.
inline void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn)
{
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < threads; ++w) {
        workers.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += threads) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) {
                        error = std::current_exception();
                    }
                    return;
                }
            }
        });
    }
    for (auto& t : workers) {
        t.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

inline RankedList initial_retrieval(const InvertedIndex& index, const Question& question, std::size_t k,
                                    const RetrievalParams& params)
{
    return retrieve(index, question.text, Scorer::bm25, k, params);
}

inline ChainSet question_chains(const InvertedIndex& index, const Corpus& corpus, const AliasTable& table,
                                const Question& question, const PipelineConfig& config)
{
    auto initial = initial_retrieval(index, question, config.initial_k, config.retrieval);
    if (initial.empty()) {
        ChainSet empty;
        empty.qid = question.qid;
        return empty;
    }
    auto chains = enumerate_chains(initial, corpus, table, config.caps);
    chains.qid = question.qid;
    return chains;
}

/// Labeled examples for one head. Chain-level heads are trained on the chains
/// enumerated from the initial BM25 set; the pointwise head on the deeper
/// pointwise initial set.
inline std::vector<TrainingExample> build_training_set(Head head, Encoder& encoder, const Corpus& corpus,
                                                       const InvertedIndex& index, const AliasTable& table,
                                                       const std::vector<Question>& questions,
                                                       const PipelineConfig& config)
{
    std::vector<TrainingExample> out;
    for (std::size_t qi = 0; qi < questions.size(); ++qi) {
        const auto& q = questions[qi];
        QuestionEncodings enc(encoder, corpus, q.text);
        if (head == Head::pointwise) {
            auto initial = initial_retrieval(index, q, config.pointwise_initial_k, config.retrieval);
            enc.prefetch(ids_of(initial));
            for (const auto& hit : initial) {
                out.push_back({qi, enc.get(hit.id), q.supporting_ids.contains(hit.id) ? 1.0 : 0.0});
            }
            continue;
        }
        auto chains = question_chains(index, corpus, table, q, config);
        enc.prefetch(chains);
        for (const auto& chain : chains.chains) {
            auto x = head_input(head, enc.get(chain.first), enc.get(chain.last));
            out.push_back({qi, std::move(x), gold_label(chain, q) == Label::positive ? 1.0 : 0.0});
        }
    }
    return out;
}

/// Everything a run needs; model and table are only read by the modes that use them.
struct SystemInputs {
    const Corpus* corpus = nullptr;
    const InvertedIndex* index = nullptr;
    const AliasTable* table = nullptr;
    const RerankModel* model = nullptr;
    Encoder* encoder = nullptr;
};

inline RankedList run_question(Mode mode, const SystemInputs& in, const Question& q, std::size_t k,
                               const PipelineConfig& config)
{
    const auto& index = *in.index;
    const auto& params = config.retrieval;
    switch (mode) {
    case Mode::bm25:
        return retrieve(index, q.text, Scorer::bm25, k, params);
    case Mode::ql:
        return retrieve(index, q.text, Scorer::ql, k, params);
    case Mode::prf_rocchio: {
        auto terms = tokenize_query(q.text, params.tokenizer);
        auto first = retrieve(index, terms, config.rocchio_first_pass, std::max(k, config.rocchio.fb_docs), params);
        if (first.empty()) {
            return {};
        }
        auto wq = rocchio_expand(index, terms, first, config.rocchio);
        if (wq.empty()) {
            return {};
        }
        return retrieve_weighted(index, wq, WeightedScorer::tfidf_cosine, k);
    }
    case Mode::prf_rm3: {
        auto terms = tokenize_query(q.text, params.tokenizer);
        auto rm3 = config.rm3;
        rm3.dirichlet = params.dirichlet;
        auto first = retrieve(index, terms, Scorer::ql, std::max(k, rm3.fb_docs), params);
        if (first.empty()) {
            return {};
        }
        auto wq = rm3_expand(index, terms, first, rm3);
        return retrieve_weighted(index, wq, WeightedScorer::ql, k, rm3.dirichlet);
    }
    case Mode::pointwise: {
        if (in.model == nullptr || in.encoder == nullptr || in.model->head != Head::pointwise) {
            throw InvalidArgument("pointwise mode requires a pointwise model");
        }
        auto initial = initial_retrieval(index, q, config.pointwise_initial_k, params);
        QuestionEncodings enc(*in.encoder, *in.corpus, q.text);
        enc.prefetch(ids_of(initial));
        std::vector<std::pair<std::string, double>> logits;
        for (const auto& hit : initial) {
            logits.emplace_back(hit.id, score_pointwise(*in.model, enc, hit.id).logit);
        }
        return rank_by_max(logits, k);
    }
    case Mode::entity_hop: {
        if (in.model == nullptr || in.encoder == nullptr || in.table == nullptr) {
            throw InvalidArgument("entity-hop mode requires a model and an alias table");
        }
        auto chains = question_chains(index, *in.corpus, *in.table, q, config);
        if (chains.chains.empty()) {
            return {};
        }
        QuestionEncodings enc(*in.encoder, *in.corpus, q.text);
        return rank_passages(*in.model, enc, chains, k);
    }
    }
    return {};
}

/// Rankings for every question, in question order.
inline std::vector<RankedList> run_system(Mode mode, const SystemInputs& in, const std::vector<Question>& questions,
                                          std::size_t k, const PipelineConfig& config)
{
    std::vector<RankedList> out(questions.size());
    std::size_t threads = (in.encoder != nullptr && dynamic_cast<LexicalEncoder*>(in.encoder) == nullptr)
                              ? 1
                              : config.threads;
    parallel_for(questions.size(), threads,
                 [&](std::size_t i) { out[i] = run_question(mode, in, questions[i], k, config); });
    return out;
}

inline SystemOutputs as_outputs(const std::vector<Question>& questions, const std::vector<RankedList>& rankings)
{
    SystemOutputs out;
    for (std::size_t i = 0; i < questions.size(); ++i) {
        out[questions[i].qid] = rankings[i];
    }
    return out;
}

}  // namespace hopir
