#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "chains.hpp"
#include "corpus.hpp"
#include "encoder.hpp"
#include "error.hpp"
#include "ffn.hpp"
#include "random.hpp"
#include "ranked_list.hpp"

namespace hopir {

/// Which representation the feed-forward head sees.
///   chain:       [d; e], the initial passage and the hop target
///   entity_only: e alone (the hop target without its source)
///   pointwise:   a single passage, no chain structure
enum class Head { chain, entity_only, pointwise };

inline std::string to_string(Head h)
{
    switch (h) {
    case Head::chain:
        return "chain";
    case Head::entity_only:
        return "entity_only";
    case Head::pointwise:
        return "pointwise";
    }
    return "chain";
}

inline Head head_from_string(std::string_view s)
{
    if (s == "chain") {
        return Head::chain;
    }
    if (s == "entity_only") {
        return Head::entity_only;
    }
    if (s == "pointwise") {
        return Head::pointwise;
    }
    throw DataError("unknown head '" + std::string(s) + "'");
}

inline std::size_t head_input_dim(Head head, std::size_t encoder_dim)
{
    return head == Head::chain ? 2 * encoder_dim : encoder_dim;
}

inline std::vector<double> head_input(Head head, std::span<const double> d, std::span<const double> e)
{
    if (head == Head::chain) {
        std::vector<double> x(d.begin(), d.end());
        x.insert(x.end(), e.begin(), e.end());
        return x;
    }
    return {e.begin(), e.end()};
}

inline constexpr std::uint32_t model_format_version = 1;

struct RerankModel {
    Head head = Head::chain;
    FfnParams ffn;
    EncoderProvider encoder_provider = EncoderProvider::lexical;
    std::size_t encoder_dim = lexical_dim;
    std::string encoder_fingerprint;

    [[nodiscard]] nlohmann::json to_json() const
    {
        return {{"format", "hopir-rerank-model"},
                {"version", model_format_version},
                {"head", to_string(head)},
                {"encoder", {{"provider", to_string(encoder_provider)},
                             {"dim", encoder_dim},
                             {"fingerprint", encoder_fingerprint}}},
                {"ffn", ffn.to_json()}};
    }

    static RerankModel from_json(const nlohmann::json& j)
    {
        try {
            if (j.value("format", "") != "hopir-rerank-model") {
                throw DataError("not a rerank model file");
            }
            if (j.at("version").get<std::uint32_t>() != model_format_version) {
                throw DataError("unsupported model format version");
            }
            RerankModel m;
            m.head = head_from_string(j.at("head").get<std::string>());
            const auto& enc = j.at("encoder");
            m.encoder_provider =
                enc.at("provider").get<std::string>() == "remote" ? EncoderProvider::remote : EncoderProvider::lexical;
            m.encoder_dim = enc.at("dim").get<std::size_t>();
            m.encoder_fingerprint = enc.at("fingerprint").get<std::string>();
            m.ffn = FfnParams::from_json(j.at("ffn"));
            if (m.ffn.input_dim() != head_input_dim(m.head, m.encoder_dim)) {
                throw DataError("model input dimension does not match its head and encoder");
            }
            return m;
        } catch (const nlohmann::json::exception& e) {
            throw DataError(std::string("malformed model file: ") + e.what());
        }
    }

    /// Rejects scoring with an encoder other than the one the model was trained on.
    void check_encoder(const EncoderConfig& config) const
    {
        if (config.fingerprint() != encoder_fingerprint) {
            throw InvalidArgument("model was trained with encoder '" + encoder_fingerprint + "' but '"
                                  + config.fingerprint() + "' is configured");
        }
    }

    bool operator==(const RerankModel&) const = default;
};

inline void save_model(const RerankModel& model, const std::string& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write " + path);
    }
    out << model.to_json().dump(1) << '\n';
}

inline RerankModel load_model(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path);
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
    return RerankModel::from_json(j);
}

/// Memoized query-aware representations of passages for one question.
class QuestionEncodings {
  public:
    QuestionEncodings(Encoder& encoder, const Corpus& corpus, std::string query)
        : encoder_(&encoder), corpus_(&corpus), query_(std::move(query))
    {}

    const std::vector<double>& get(const std::string& id)
    {
        auto it = memo_.find(id);
        if (it != memo_.end()) {
            return it->second;
        }
        auto repr = encoder_->encode(query_, corpus_->at(id));
        return memo_.emplace(id, std::move(repr.values)).first->second;
    }

    /// Encodes all not-yet-seen ids in one batch call.
    void prefetch(const std::vector<std::string>& ids)
    {
        std::vector<std::string> missing;
        std::vector<const Passage*> passages;
        for (const auto& id : ids) {
            if (!memo_.contains(id) && std::find(missing.begin(), missing.end(), id) == missing.end()) {
                missing.push_back(id);
                passages.push_back(&corpus_->at(id));
            }
        }
        if (missing.empty()) {
            return;
        }
        auto reprs = encoder_->encode_batch(query_, passages);
        for (std::size_t i = 0; i < missing.size(); ++i) {
            memo_.emplace(missing[i], std::move(reprs[i].values));
        }
    }

    void prefetch(const ChainSet& chains)
    {
        std::vector<std::string> ids;
        for (const auto& c : chains.chains) {
            ids.push_back(c.first);
            ids.push_back(c.last);
        }
        prefetch(ids);
    }

  private:
    Encoder* encoder_;
    const Corpus* corpus_;
    std::string query_;
    std::unordered_map<std::string, std::vector<double>> memo_;
};

struct ChainScore {
    Chain chain;
    double logit = 0.0;
    double probability = 0.5;
};

inline ChainScore make_score(Chain chain, double logit) { return {std::move(chain), logit, sigmoid(logit)}; }

/// logit = w2 . relu(W1 [d; e] + b1) + b2 with d, e the query-aware
/// representations of the chain's first and last passages.
inline ChainScore score_chain(const RerankModel& model, QuestionEncodings& enc, const Chain& chain)
{
    if (model.head != Head::chain) {
        throw InvalidArgument("score_chain requires a chain head");
    }
    auto x = head_input(Head::chain, enc.get(chain.first), enc.get(chain.last));
    return make_score(chain, model.ffn.logit(x));
}

inline ChainScore score_chain(const RerankModel& model, Encoder& encoder, const Question& question, const Chain& chain,
                              const Corpus& corpus)
{
    QuestionEncodings enc(encoder, corpus, question.text);
    return score_chain(model, enc, chain);
}

/// Scores a chain from its hop target alone; `chain.first` is ignored.
inline ChainScore score_entity_only(const RerankModel& model, QuestionEncodings& enc, const Chain& chain)
{
    if (model.head != Head::entity_only) {
        throw InvalidArgument("score_entity_only requires an entity-only head");
    }
    return make_score(chain, model.ffn.logit(enc.get(chain.last)));
}

inline ChainScore score_entity_only(const RerankModel& model, Encoder& encoder, const Question& question,
                                    const Chain& chain, const Corpus& corpus)
{
    QuestionEncodings enc(encoder, corpus, question.text);
    return score_entity_only(model, enc, chain);
}

inline ChainScore score_pointwise(const RerankModel& model, QuestionEncodings& enc, const std::string& passage_id)
{
    if (model.head != Head::pointwise) {
        throw InvalidArgument("score_pointwise requires a pointwise head");
    }
    Chain self{passage_id, passage_id, Hop{}};
    return make_score(self, model.ffn.logit(enc.get(passage_id)));
}

inline ChainScore score_pointwise(const RerankModel& model, Encoder& encoder, const Question& question,
                                  const Passage& passage)
{
    Corpus single({passage});
    QuestionEncodings enc(encoder, single, question.text);
    return score_pointwise(model, enc, passage.id);
}

/// Scores with whichever chain-level head the model carries.
inline ChainScore score_any(const RerankModel& model, QuestionEncodings& enc, const Chain& chain)
{
    switch (model.head) {
    case Head::chain:
        return score_chain(model, enc, chain);
    case Head::entity_only:
        return score_entity_only(model, enc, chain);
    case Head::pointwise:
        break;
    }
    throw InvalidArgument("pointwise models score passages, not chains");
}

/// Orders passages by the best logit among (passage, score) pairs and reports
/// the corresponding probability. Ordering on the logit keeps distinct scores
/// distinct where the sigmoid saturates.
inline RankedList rank_by_max(const std::vector<std::pair<std::string, double>>& logits, std::size_t k)
{
    std::map<std::string, double> best;
    for (const auto& [id, z] : logits) {
        auto [it, fresh] = best.emplace(id, z);
        if (!fresh && z > it->second) {
            it->second = z;
        }
    }
    std::vector<std::pair<std::string, double>> items(best.begin(), best.end());
    std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (items.size() > k) {
        items.resize(k);
    }
    RankedList out;
    out.reserve(items.size());
    for (const auto& [id, z] : items) {
        out.push_back({id, sigmoid(z)});
    }
    return out;
}

/// Each passage ending some chain gets the maximum probability over those
/// chains; passages are ranked by it (ties by id) and truncated to k.
inline RankedList rank_passages(const RerankModel& model, QuestionEncodings& enc, const ChainSet& chain_set,
                                std::size_t k)
{
    if (chain_set.chains.empty()) {
        throw InvalidArgument("rank_passages requires a non-empty chain set");
    }
    enc.prefetch(chain_set);
    std::vector<std::pair<std::string, double>> logits;
    logits.reserve(chain_set.chains.size());
    for (const auto& chain : chain_set.chains) {
        logits.emplace_back(chain.last, score_any(model, enc, chain).logit);
    }
    return rank_by_max(logits, k);
}

inline RankedList rank_passages(const RerankModel& model, Encoder& encoder, const Question& question,
                                const ChainSet& chain_set, const Corpus& corpus, std::size_t k)
{
    QuestionEncodings enc(encoder, corpus, question.text);
    return rank_passages(model, enc, chain_set, k);
}

// ---------------------------------------------------------------------------
// Training

struct TrainingExample {
    std::size_t group = 0;  // question index; negatives are subsampled per group
    std::vector<double> x;
    double y = 0.0;
};

struct TrainConfig {
    double learning_rate = 1e-2;
    std::size_t epochs = 200;
    std::size_t batch_size = 32;
    /// Negatives kept per positive within a question; 0 keeps all.
    std::size_t neg_per_pos = 10;
    std::uint64_t seed = 1;
    Optimizer optimizer = Optimizer::adaptive_moment;
    std::size_t hidden = 32;

    void validate() const
    {
        if (!(learning_rate > 0.0) || batch_size < 1 || hidden < 1) {
            throw InvalidArgument("training requires learning_rate > 0, batch_size >= 1 and hidden >= 1");
        }
    }
};

struct TrainResult {
    FfnParams params;
    double initial_loss = 0.0;
    std::vector<double> epoch_loss;
    /// Mean BCE over the whole (unsubsampled) dataset after training.
    double final_loss = 0.0;
};

/// Mini-batch BCE training of a fresh feed-forward head. Every random choice
/// (initialization, negative subsampling, shuffling) draws from `config.seed`.
inline TrainResult train(const std::vector<TrainingExample>& dataset, const TrainConfig& config)
{
    config.validate();
    std::size_t positives = 0;
    for (const auto& ex : dataset) {
        positives += ex.y > 0.5 ? 1 : 0;
    }
    if (positives == 0 || positives == dataset.size()) {
        throw DataError("degenerate training set");
    }
    const std::size_t input_dim = dataset.front().x.size();

    std::map<std::size_t, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> groups;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (dataset[i].x.size() != input_dim) {
            throw InvalidArgument("training examples have inconsistent dimensions");
        }
        auto& g = groups[dataset[i].group];
        (dataset[i].y > 0.5 ? g.first : g.second).push_back(i);
    }

    Rng rng(config.seed);
    TrainResult result;
    result.params = FfnParams::random(input_dim, config.hidden, rng.next());

    std::vector<Sample> all;
    all.reserve(dataset.size());
    for (const auto& ex : dataset) {
        all.push_back({ex.x, ex.y});
    }
    result.initial_loss = mean_loss(result.params, all);

    OptimizerState opt(config.optimizer, result.params.size(), config.learning_rate);
    std::vector<double> grad(result.params.size());
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::vector<std::size_t> order;
        for (const auto& [gid, g] : groups) {
            const auto& [pos, neg] = g;
            order.insert(order.end(), pos.begin(), pos.end());
            if (config.neg_per_pos == 0) {
                order.insert(order.end(), neg.begin(), neg.end());
            } else {
                for (auto i : rng.sample_indices(neg.size(), config.neg_per_pos * pos.size())) {
                    order.push_back(neg[i]);
                }
            }
        }
        rng.shuffle(order);

        double epoch_total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            std::size_t end = std::min(order.size(), start + config.batch_size);
            std::fill(grad.begin(), grad.end(), 0.0);
            double scale = 1.0 / static_cast<double>(end - start);
            for (std::size_t i = start; i < end; ++i) {
                const auto& ex = dataset[order[i]];
                epoch_total += result.params.accumulate_gradient(ex.x, ex.y, scale, grad);
            }
            opt.step(result.params.flat(), grad);
        }
        result.epoch_loss.push_back(order.empty() ? 0.0 : epoch_total / static_cast<double>(order.size()));
    }
    result.final_loss = mean_loss(result.params, all);
    return result;
}

inline void write_training_log(std::ostream& out, const TrainResult& result)
{
    out << "epoch,mean_loss\n";
    out.precision(17);
    for (std::size_t i = 0; i < result.epoch_loss.size(); ++i) {
        out << (i + 1) << ',' << result.epoch_loss[i] << '\n';
    }
}

}  // namespace hopir
