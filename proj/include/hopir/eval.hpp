#pragma once

#include <array>
#include <cstddef>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "corpus.hpp"
#include "error.hpp"
#include "ranked_list.hpp"
#include "text.hpp"

namespace hopir {

// Strict multi-evidence metrics: a question only counts as answered at k when
// every supporting passage is in the top k.

inline constexpr std::array<std::size_t, 4> accuracy_cutoffs{2, 5, 10, 20};

inline void require_gold(const std::set<std::string>& gold)
{
    if (gold.empty()) {
        throw InvalidArgument("gold set is empty");
    }
}

inline int accuracy_at_k(const RankedList& ranked, const std::set<std::string>& gold, std::size_t k)
{
    require_gold(gold);
    if (k < 1) {
        throw InvalidArgument("accuracy_at_k requires k >= 1");
    }
    std::size_t found = 0;
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
        found += gold.contains(ranked[i].id) ? 1 : 0;
    }
    return found == gold.size() ? 1 : 0;
}

/// Precision at each rank holding a gold passage, summed and divided by
/// |gold|; gold passages never retrieved contribute zero.
inline double average_precision(const RankedList& ranked, const std::set<std::string>& gold)
{
    require_gold(gold);
    std::size_t hits = 0;
    double sum = 0.0;
    std::set<std::string> counted;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (gold.contains(ranked[i].id) && counted.insert(ranked[i].id).second) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(gold.size());
}

enum class HopClass { single_hop, multi_hop, unclassified };

inline std::string to_string(HopClass c)
{
    switch (c) {
    case HopClass::single_hop:
        return "single_hop";
    case HopClass::multi_hop:
        return "multi_hop";
    case HopClass::unclassified:
        return "unclassified";
    }
    return "unclassified";
}

/// True when `needle` occurs as a contiguous run of tokens in `haystack`.
inline bool contains_token_run(const std::vector<std::string>& haystack, const std::vector<std::string>& needle)
{
    if (needle.empty() || needle.size() > haystack.size()) {
        return false;
    }
    for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
        if (std::equal(needle.begin(), needle.end(), haystack.begin() + static_cast<std::ptrdiff_t>(i))) {
            return true;
        }
    }
    return false;
}

/// Answer present in every supporting passage: single-hop. Present in exactly
/// one of several: multi-hop. Anything else is left unclassified.
inline HopClass classify_hop(const Question& question, const Corpus& corpus)
{
    auto answer = tokenize(question.answer);
    if (answer.empty() || question.supporting_ids.empty()) {
        return HopClass::unclassified;
    }
    std::size_t containing = 0;
    for (const auto& id : question.supporting_ids) {
        if (contains_token_run(tokenize(corpus.at(id).text), answer)) {
            ++containing;
        }
    }
    if (containing == question.supporting_ids.size()) {
        return HopClass::single_hop;
    }
    if (containing == 1) {
        return HopClass::multi_hop;
    }
    return HopClass::unclassified;
}

struct QuestionMetrics {
    std::string qid;
    std::array<int, accuracy_cutoffs.size()> accuracy{};
    double average_precision = 0.0;
};

struct SystemMetrics {
    std::array<double, accuracy_cutoffs.size()> accuracy{};
    double map = 0.0;
    std::size_t questions = 0;
};

struct EvalResult {
    SystemMetrics overall;
    std::vector<QuestionMetrics> rows;  // in question order

    [[nodiscard]] double acc_at(std::size_t k) const
    {
        for (std::size_t i = 0; i < accuracy_cutoffs.size(); ++i) {
            if (accuracy_cutoffs[i] == k) {
                return overall.accuracy[i];
            }
        }
        throw InvalidArgument("no accuracy cutoff " + std::to_string(k));
    }
};

using SystemOutputs = std::map<std::string, RankedList, std::less<>>;

inline SystemMetrics aggregate(const std::vector<const QuestionMetrics*>& rows)
{
    SystemMetrics m;
    m.questions = rows.size();
    if (rows.empty()) {
        return m;
    }
    for (const auto* r : rows) {
        for (std::size_t i = 0; i < accuracy_cutoffs.size(); ++i) {
            m.accuracy[i] += r->accuracy[i];
        }
        m.map += r->average_precision;
    }
    for (auto& a : m.accuracy) {
        a /= static_cast<double>(rows.size());
    }
    m.map /= static_cast<double>(rows.size());
    return m;
}

/// Per-question metrics and their means. Every question needs a ranking.
inline EvalResult evaluate(const SystemOutputs& outputs, const std::vector<Question>& questions)
{
    EvalResult result;
    for (const auto& q : questions) {
        auto it = outputs.find(q.qid);
        if (it == outputs.end()) {
            throw DataError("no ranking for question '" + q.qid + "'");
        }
        QuestionMetrics row;
        row.qid = q.qid;
        for (std::size_t i = 0; i < accuracy_cutoffs.size(); ++i) {
            row.accuracy[i] = accuracy_at_k(it->second, q.supporting_ids, accuracy_cutoffs[i]);
        }
        row.average_precision = average_precision(it->second, q.supporting_ids);
        result.rows.push_back(std::move(row));
    }
    std::vector<const QuestionMetrics*> ptrs;
    for (const auto& r : result.rows) {
        ptrs.push_back(&r);
    }
    result.overall = aggregate(ptrs);
    return result;
}

/// Metrics restricted to the questions whose id is in `qids`.
inline SystemMetrics subset_metrics(const EvalResult& result, const std::set<std::string>& qids)
{
    std::vector<const QuestionMetrics*> ptrs;
    for (const auto& r : result.rows) {
        if (qids.contains(r.qid)) {
            ptrs.push_back(&r);
        }
    }
    return aggregate(ptrs);
}

/// One line per question: {"qid": ..., "ranking": [{"id": ..., "score": ...}, ...]}.
inline void write_rankings_jsonl(std::ostream& out, const std::vector<Question>& questions,
                                 const std::vector<RankedList>& rankings)
{
    if (questions.size() != rankings.size()) {
        throw InvalidArgument("one ranking per question is required");
    }
    for (std::size_t i = 0; i < questions.size(); ++i) {
        nlohmann::json ranking = nlohmann::json::array();
        for (const auto& hit : rankings[i]) {
            ranking.push_back({{"id", hit.id}, {"score", hit.score}});
        }
        out << nlohmann::json{{"qid", questions[i].qid}, {"ranking", ranking}}.dump() << '\n';
    }
}

inline SystemOutputs read_rankings_jsonl(std::istream& in)
{
    SystemOutputs out;
    detail::for_each_json_line(in, [&](const nlohmann::json& j, std::size_t lineno) {
        auto qid = j.at("qid").get<std::string>();
        RankedList ranking;
        for (const auto& hit : j.at("ranking")) {
            ranking.push_back({hit.at("id").get<std::string>(), hit.at("score").get<double>()});
        }
        if (!out.emplace(qid, std::move(ranking)).second) {
            throw DataError("line " + std::to_string(lineno) + ": duplicate ranking for question '" + qid + "'");
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Reports

struct ReportRow {
    std::string system;
    std::string slice = "all";
    SystemMetrics metrics;
    bool reference = false;
};

/// Published full-scale figures (5.23M-passage corpus, pretrained encoder).
/// They are echoed for comparison only; desk-scale runs cannot reproduce them.
inline std::vector<ReportRow> full_scale_reference_rows()
{
    auto row = [](std::string name, double a2, double a5, double a10, double a20, double map) {
        ReportRow r;
        r.system = std::move(name);
        r.metrics.accuracy = {a2, a5, a10, a20};
        r.metrics.map = map;
        r.reference = true;
        return r;
    };
    return {row("BM25", 0.093, 0.191, 0.259, 0.324, 0.412),
            row("PRF-tfidf", 0.088, 0.157, 0.204, 0.258, 0.317),
            row("PRF-rm", 0.083, 0.175, 0.242, 0.296, 0.406),
            row("PRF-task", 0.097, 0.198, 0.267, 0.330, 0.420),
            row("Pointwise re-ranker", 0.146, 0.271, 0.347, 0.409, 0.470),
            row("Query+E-doc", 0.101, 0.223, 0.301, 0.367, 0.568),
            row("Entity hop", 0.230, 0.482, 0.612, 0.674, 0.654)};
}

inline constexpr std::string_view reference_label = "reference (published, full-scale)";

inline std::string fixed(double v)
{
    std::ostringstream out;
    out << std::fixed << std::setprecision(4) << v;
    return out.str();
}

inline void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows)
{
    out << "system,slice,questions,acc@2,acc@5,acc@10,acc@20,map,source\n";
    for (const auto& r : rows) {
        out << r.system << ',' << r.slice << ',' << r.metrics.questions;
        for (double a : r.metrics.accuracy) {
            out << ',' << fixed(a);
        }
        out << ',' << fixed(r.metrics.map) << ',' << (r.reference ? reference_label : "measured") << '\n';
    }
}

inline nlohmann::json report_json(const std::vector<ReportRow>& rows)
{
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json acc = nlohmann::json::object();
        for (std::size_t i = 0; i < accuracy_cutoffs.size(); ++i) {
            acc["@" + std::to_string(accuracy_cutoffs[i])] = r.metrics.accuracy[i];
        }
        arr.push_back({{"system", r.system},
                       {"slice", r.slice},
                       {"questions", r.metrics.questions},
                       {"accuracy", acc},
                       {"map", r.metrics.map},
                       {"source", r.reference ? std::string(reference_label) : std::string("measured")}});
    }
    return {{"systems", arr}};
}

inline void write_report_markdown(std::ostream& out, const std::vector<ReportRow>& rows)
{
    out << "| Model | Slice | @2 | @5 | @10 | @20 | MAP |\n";
    out << "|---|---|---|---|---|---|---|\n";
    for (const auto& r : rows) {
        out << "| " << r.system << (r.reference ? ", " + std::string(reference_label) : "") << " | " << r.slice;
        for (double a : r.metrics.accuracy) {
            out << " | " << fixed(a);
        }
        out << " | " << fixed(r.metrics.map) << " |\n";
    }
}

}  // namespace hopir
