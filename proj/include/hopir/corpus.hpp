#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "error.hpp"
#include "text.hpp"

namespace hopir {

/// Byte-offset span over a passage's raw text; `end` is exclusive.
struct MentionSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    std::string surface;

    bool operator==(const MentionSpan&) const = default;
};

struct Passage {
    std::string id;
    std::string title;
    std::string text;
    std::vector<MentionSpan> mentions;

    bool operator==(const Passage&) const = default;
};

struct Question {
    std::string qid;
    std::string text;
    std::string answer;
    std::set<std::string> supporting_ids;

    bool operator==(const Question&) const = default;
};

struct CorpusStats {
    std::uint64_t total_tokens = 0;
    std::map<std::string, std::uint64_t, std::less<>> collection_freq;

    bool operator==(const CorpusStats&) const = default;
};

/// Sorts spans and drops overlaps: longer spans win, then earlier ones.
inline std::vector<MentionSpan> resolve_overlaps(std::vector<MentionSpan> spans)
{
    std::sort(spans.begin(), spans.end(), [](const MentionSpan& a, const MentionSpan& b) {
        auto la = a.end - a.start;
        auto lb = b.end - b.start;
        if (la != lb) {
            return la > lb;
        }
        return a.start < b.start;
    });
    std::vector<MentionSpan> kept;
    for (auto& span : spans) {
        bool clash = std::any_of(kept.begin(), kept.end(), [&](const MentionSpan& k) {
            return span.start < k.end && k.start < span.end;
        });
        if (!clash) {
            kept.push_back(std::move(span));
        }
    }
    std::sort(kept.begin(), kept.end(), [](const MentionSpan& a, const MentionSpan& b) { return a.start < b.start; });
    return kept;
}

inline void validate_mention(const Passage& p, const MentionSpan& m)
{
    if (m.start >= m.end || m.end > p.text.size()) {
        throw DataError("passage '" + p.id + "': mention span [" + std::to_string(m.start) + ","
                        + std::to_string(m.end) + ") out of bounds");
    }
    if (std::string_view(p.text).substr(m.start, m.end - m.start) != m.surface) {
        throw DataError("passage '" + p.id + "': mention surface '" + m.surface + "' does not match text at ["
                        + std::to_string(m.start) + "," + std::to_string(m.end) + ")");
    }
}

/// Immutable, id-indexed passage collection with collection statistics.
class Corpus {
  public:
    Corpus() = default;

    explicit Corpus(std::vector<Passage> passages) : passages_(std::move(passages))
    {
        for (std::size_t i = 0; i < passages_.size(); ++i) {
            auto& p = passages_[i];
            if (p.id.empty()) {
                throw DataError("passage " + std::to_string(i) + " has an empty id");
            }
            if (!by_id_.emplace(p.id, i).second) {
                throw DataError("duplicate passage id '" + p.id + "'");
            }
            for (const auto& m : p.mentions) {
                validate_mention(p, m);
            }
            p.mentions = resolve_overlaps(std::move(p.mentions));
            for (auto& tok : tokenize(p.text)) {
                ++stats_.collection_freq[tok];
                ++stats_.total_tokens;
            }
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return passages_.size(); }
    [[nodiscard]] bool empty() const noexcept { return passages_.empty(); }
    [[nodiscard]] const std::vector<Passage>& passages() const noexcept { return passages_; }
    [[nodiscard]] const Passage& operator[](std::size_t ordinal) const { return passages_.at(ordinal); }
    [[nodiscard]] const CorpusStats& stats() const noexcept { return stats_; }

    [[nodiscard]] std::optional<std::size_t> ordinal(std::string_view id) const
    {
        auto it = by_id_.find(std::string(id));
        if (it == by_id_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    [[nodiscard]] bool contains(std::string_view id) const { return ordinal(id).has_value(); }

    [[nodiscard]] const Passage& at(std::string_view id) const
    {
        auto ord = ordinal(id);
        if (!ord) {
            throw InvalidArgument("unknown passage id '" + std::string(id) + "'");
        }
        return passages_[*ord];
    }

    bool operator==(const Corpus& other) const
    {
        return passages_ == other.passages_ && stats_ == other.stats_;
    }

  private:
    std::vector<Passage> passages_;
    std::unordered_map<std::string, std::size_t> by_id_;
    CorpusStats stats_;
};

namespace detail {

template <typename Fn>
void for_each_json_line(std::istream& in, Fn&& fn)
{
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError("line " + std::to_string(lineno) + ": malformed JSON (" + e.what() + ")");
        }
        if (!obj.is_object()) {
            throw DataError("line " + std::to_string(lineno) + ": expected a JSON object");
        }
        try {
            fn(obj, lineno);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
}

inline std::ifstream open_input(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path);
    }
    return in;
}

}  // namespace detail

inline Corpus read_corpus_jsonl(std::istream& in)
{
    std::vector<Passage> passages;
    std::unordered_map<std::string, std::size_t> first_line;
    detail::for_each_json_line(in, [&](const nlohmann::json& obj, std::size_t lineno) {
        Passage p;
        p.id = obj.at("id").get<std::string>();
        p.title = obj.value("title", std::string{});
        p.text = obj.at("text").get<std::string>();
        if (p.id.empty()) {
            throw DataError("line " + std::to_string(lineno) + ": empty passage id");
        }
        if (auto [it, fresh] = first_line.emplace(p.id, lineno); !fresh) {
            throw DataError("line " + std::to_string(lineno) + ": duplicate passage id '" + p.id
                            + "' (first seen on line " + std::to_string(it->second) + ")");
        }
        if (auto m = obj.find("mentions"); m != obj.end() && !m->is_null()) {
            for (const auto& jm : *m) {
                auto start = jm.at("start").get<std::int64_t>();
                auto end = jm.at("end").get<std::int64_t>();
                if (start < 0 || end < 0) {
                    throw DataError("passage '" + p.id + "': negative mention offset");
                }
                MentionSpan span{static_cast<std::size_t>(start), static_cast<std::size_t>(end),
                                 jm.at("surface").get<std::string>()};
                validate_mention(p, span);
                p.mentions.push_back(std::move(span));
            }
        }
        passages.push_back(std::move(p));
    });
    return Corpus(std::move(passages));
}

inline void write_corpus_jsonl(std::ostream& out, const Corpus& corpus)
{
    for (const auto& p : corpus.passages()) {
        nlohmann::json mentions = nlohmann::json::array();
        for (const auto& m : p.mentions) {
            mentions.push_back({{"start", m.start}, {"end", m.end}, {"surface", m.surface}});
        }
        nlohmann::json obj{{"id", p.id}, {"title", p.title}, {"text", p.text}, {"mentions", mentions}};
        out << obj.dump() << '\n';
    }
}

inline constexpr std::string_view corpus_magic = "HOPIRCRP";
inline constexpr std::uint32_t corpus_format_version = 1;

inline std::string serialize_corpus(const Corpus& corpus)
{
    binary::Writer w;
    w.raw(corpus_magic);
    w.u32(corpus_format_version);
    w.u64(corpus.size());
    for (const auto& p : corpus.passages()) {
        w.str(p.id);
        w.str(p.title);
        w.str(p.text);
        w.u64(p.mentions.size());
        for (const auto& m : p.mentions) {
            w.u64(m.start);
            w.u64(m.end);
            w.str(m.surface);
        }
    }
    return w.bytes();
}

inline Corpus deserialize_corpus(std::string_view bytes)
{
    binary::Reader r(bytes);
    if (r.raw(corpus_magic.size()) != corpus_magic) {
        throw DataError("not a corpus file");
    }
    if (auto v = r.u32(); v != corpus_format_version) {
        throw DataError("unsupported corpus format version " + std::to_string(v));
    }
    std::vector<Passage> passages(r.u64());
    for (auto& p : passages) {
        p.id = r.str();
        p.title = r.str();
        p.text = r.str();
        p.mentions.resize(r.u64());
        for (auto& m : p.mentions) {
            m.start = r.u64();
            m.end = r.u64();
            m.surface = r.str();
        }
    }
    return Corpus(std::move(passages));
}

/// Loads either the binary corpus format or line-delimited JSON.
inline Corpus ingest_corpus(const std::string& path, const TokenizerConfig& config = {})
{
    (void)config;
    auto bytes = binary::read_file(path);
    if (bytes.starts_with(corpus_magic)) {
        return deserialize_corpus(bytes);
    }
    std::istringstream in(std::move(bytes));
    return read_corpus_jsonl(in);
}

inline std::vector<Question> read_questions_jsonl(std::istream& in)
{
    std::vector<Question> out;
    std::set<std::string> seen;
    detail::for_each_json_line(in, [&](const nlohmann::json& obj, std::size_t lineno) {
        Question q;
        q.qid = obj.at("qid").get<std::string>();
        q.text = obj.at("question").get<std::string>();
        q.answer = obj.value("answer", std::string{});
        for (const auto& id : obj.value("supporting_ids", nlohmann::json::array())) {
            q.supporting_ids.insert(id.get<std::string>());
        }
        if (!seen.insert(q.qid).second) {
            throw DataError("line " + std::to_string(lineno) + ": duplicate qid '" + q.qid + "'");
        }
        out.push_back(std::move(q));
    });
    return out;
}

inline std::vector<Question> load_questions(const std::string& path)
{
    auto in = detail::open_input(path);
    return read_questions_jsonl(in);
}

inline void write_questions_jsonl(std::ostream& out, const std::vector<Question>& questions)
{
    for (const auto& q : questions) {
        nlohmann::json obj{{"qid", q.qid},
                           {"question", q.text},
                           {"answer", q.answer},
                           {"supporting_ids", std::vector<std::string>(q.supporting_ids.begin(), q.supporting_ids.end())}};
        out << obj.dump() << '\n';
    }
}

/// Gold sets must be non-empty and resolve in `corpus`.
inline void validate_questions(const std::vector<Question>& questions, const Corpus& corpus)
{
    for (const auto& q : questions) {
        if (q.supporting_ids.empty()) {
            throw DataError("question '" + q.qid + "' has no supporting passages");
        }
        for (const auto& id : q.supporting_ids) {
            if (!corpus.contains(id)) {
                throw DataError("question '" + q.qid + "': supporting id '" + id + "' not in corpus");
            }
        }
    }
}

/// Fallback tagger: maximal runs of capitalized tokens joined by spaces or
/// hyphens. A sentence-initial capitalized stopword never starts a run.
inline Passage heuristic_tag_mentions(Passage passage, const TokenizerConfig& config = {})
{
    const std::string_view text = passage.text;
    auto tokens = tokenize_spans(text);
    std::vector<MentionSpan> mentions;
    constexpr std::size_t no_run = std::string_view::npos;
    std::size_t run_start = no_run;
    std::size_t run_end = 0;

    auto close_run = [&] {
        if (run_start != no_run) {
            mentions.push_back({run_start, run_end, std::string(text.substr(run_start, run_end - run_start))});
            run_start = no_run;
        }
    };

    std::size_t prev_end = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto& tok = tokens[i];
        auto gap = text.substr(prev_end, tok.start - prev_end);
        bool sentence_initial = i == 0 || gap.find_first_of(".!?") != std::string_view::npos;
        bool joins = !sentence_initial && gap.find_first_not_of(" -") == std::string_view::npos;
        if (!joins) {
            close_run();
        }
        bool taggable = tok.capitalized && !(sentence_initial && config.is_stopword(tok.token));
        if (taggable) {
            if (run_start == no_run) {
                run_start = tok.start;
            }
            run_end = tok.end;
        } else {
            close_run();
        }
        prev_end = tok.end;
    }
    close_run();
    passage.mentions = std::move(mentions);
    return passage;
}

}  // namespace hopir
