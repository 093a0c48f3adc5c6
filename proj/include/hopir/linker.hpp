#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "corpus.hpp"
#include "error.hpp"
#include "index.hpp"

namespace hopir {

/// A hyperlink: the anchor span in `source` points at passage `target`.
struct LinkAnnotation {
    std::string source;
    MentionSpan mention;
    std::string target;

    bool operator==(const LinkAnnotation&) const = default;
};

/// Reads the links file. Source passages and spans are validated against the
/// corpus; targets are not (dangling targets are counted at table build).
inline std::vector<LinkAnnotation> read_links_jsonl(std::istream& in, const Corpus& corpus)
{
    std::vector<LinkAnnotation> out;
    detail::for_each_json_line(in, [&](const nlohmann::json& obj, std::size_t lineno) {
        LinkAnnotation link;
        link.source = obj.at("source").get<std::string>();
        link.target = obj.at("target").get<std::string>();
        auto start = obj.at("start").get<std::int64_t>();
        auto end = obj.at("end").get<std::int64_t>();
        link.mention.surface = obj.at("surface").get<std::string>();
        const auto where = "line " + std::to_string(lineno) + ": ";
        auto src = corpus.ordinal(link.source);
        if (!src) {
            throw DataError(where + "link source '" + link.source + "' not in corpus");
        }
        if (start < 0 || end < 0) {
            throw DataError(where + "negative link offset");
        }
        link.mention.start = static_cast<std::size_t>(start);
        link.mention.end = static_cast<std::size_t>(end);
        try {
            validate_mention(corpus[*src], link.mention);
        } catch (const DataError& e) {
            throw DataError(where + e.what());
        }
        out.push_back(std::move(link));
    });
    return out;
}

inline std::vector<LinkAnnotation> load_links(const std::string& path, const Corpus& corpus)
{
    auto in = detail::open_input(path);
    return read_links_jsonl(in, corpus);
}

inline void write_links_jsonl(std::ostream& out, const std::vector<LinkAnnotation>& links)
{
    for (const auto& l : links) {
        nlohmann::json obj{{"source", l.source},
                           {"start", l.mention.start},
                           {"end", l.mention.end},
                           {"surface", l.mention.surface},
                           {"target", l.target}};
        out << obj.dump() << '\n';
    }
}

/// Normalized surface string -> candidate passage ids, most-linked first.
class AliasTable {
  public:
    using Entries = std::map<std::string, std::vector<std::string>, std::less<>>;

    AliasTable() = default;
    explicit AliasTable(Entries entries, std::size_t dangling = 0)
        : entries_(std::move(entries)), dangling_(dangling)
    {}

    [[nodiscard]] const std::vector<std::string>& candidates(std::string_view surface) const
    {
        static const std::vector<std::string> none;
        auto it = entries_.find(normalize(surface));
        return it == entries_.end() ? none : it->second;
    }

    [[nodiscard]] const Entries& entries() const noexcept { return entries_; }
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    /// Links whose target did not resolve in the corpus.
    [[nodiscard]] std::size_t dangling_links() const noexcept { return dangling_; }

    [[nodiscard]] nlohmann::json to_json() const
    {
        nlohmann::json obj = nlohmann::json::object();
        for (const auto& [surface, ids] : entries_) {
            obj[surface] = ids;
        }
        return obj;
    }

    static AliasTable from_json(const nlohmann::json& obj)
    {
        Entries entries;
        for (const auto& [surface, ids] : obj.items()) {
            entries[surface] = ids.get<std::vector<std::string>>();
        }
        return AliasTable(std::move(entries));
    }

    bool operator==(const AliasTable& other) const { return entries_ == other.entries_; }

  private:
    Entries entries_;
    std::size_t dangling_ = 0;
};

struct AliasOptions {
    /// Map each passage title to its own passage.
    bool include_titles = true;
};

/// Builds the alias table from link anchors (and titles). Any candidate in
/// `exclude` is dropped, so excluded passages can never be hop targets.
inline AliasTable build_alias_table(const Corpus& corpus, const std::vector<LinkAnnotation>& links,
                                    const std::set<std::string>& exclude, const AliasOptions& options = {})
{
    std::map<std::string, std::map<std::string, std::size_t>, std::less<>> counts;
    std::size_t dangling = 0;
    for (const auto& link : links) {
        if (!corpus.contains(link.target)) {
            ++dangling;
            continue;
        }
        if (exclude.contains(link.target)) {
            continue;
        }
        auto key = normalize(link.mention.surface);
        if (!key.empty()) {
            ++counts[key][link.target];
        }
    }
    if (options.include_titles) {
        for (const auto& p : corpus.passages()) {
            auto key = normalize(p.title);
            if (!key.empty() && !exclude.contains(p.id)) {
                ++counts[key][p.id];
            }
        }
    }
    AliasTable::Entries entries;
    for (auto& [surface, by_target] : counts) {
        std::vector<std::pair<std::string, std::size_t>> ranked(by_target.begin(), by_target.end());
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        auto& ids = entries[surface];
        for (auto& [id, n] : ranked) {
            ids.push_back(id);
        }
    }
    return AliasTable(std::move(entries), dangling);
}

/// Union of the top-`top_n` BM25 passages over `questions`.
inline std::set<std::string> build_exclusion_set(const InvertedIndex& index, const std::vector<Question>& questions,
                                                 std::size_t top_n = 40, const RetrievalParams& params = {})
{
    std::set<std::string> out;
    if (top_n == 0) {
        return out;
    }
    for (const auto& q : questions) {
        for (const auto& hit : retrieve(index, q.text, Scorer::bm25, top_n, params)) {
            out.insert(hit.id);
        }
    }
    return out;
}

/// Exact lookup of the normalized surface; no fuzzy matching.
inline std::vector<std::string> link(const AliasTable& table, const MentionSpan& mention)
{
    return table.candidates(mention.surface);
}

using EntityDescriptions = std::map<std::string, std::string, std::less<>>;

/// Each passage's first mention names the entity the passage describes.
/// Competing passages resolve to the lowest id.
inline EntityDescriptions first_mention_descriptions(const Corpus& corpus)
{
    EntityDescriptions out;
    for (const auto& p : corpus.passages()) {
        if (p.mentions.empty()) {
            continue;
        }
        auto key = normalize(p.mentions.front().surface);
        if (key.empty()) {
            continue;
        }
        auto [it, fresh] = out.emplace(key, p.id);
        if (!fresh && p.id < it->second) {
            it->second = p.id;
        }
    }
    return out;
}

inline std::vector<std::string> string_match_link(const EntityDescriptions& descriptions, const MentionSpan& mention)
{
    auto it = descriptions.find(normalize(mention.surface));
    if (it == descriptions.end()) {
        return {};
    }
    return {it->second};
}

/// Wraps first-mention descriptions as a single-candidate alias table.
inline AliasTable alias_table_from_descriptions(const EntityDescriptions& descriptions,
                                                const std::set<std::string>& exclude = {})
{
    AliasTable::Entries entries;
    for (const auto& [surface, id] : descriptions) {
        if (!exclude.contains(id)) {
            entries[surface] = {id};
        }
    }
    return AliasTable(std::move(entries));
}

}  // namespace hopir
