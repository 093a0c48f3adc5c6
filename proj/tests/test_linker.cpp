#include <sstream>

#include <gtest/gtest.h>

#include <hopir/linker.hpp>
#include <hopir/random.hpp>

#include "test_util.hpp"

using namespace hopir;

namespace {

Corpus bills()
{
    std::vector<Passage> ps{{"Bill_Clinton", "Bill Clinton", "Bill Clinton was president.", {}},
                            {"Billy_Joel", "Billy Joel", "Billy Joel sings.", {}},
                            {"src", "", "Bill spoke. Bill sang. Bill again. Bill here.", {}}};
    return Corpus(std::move(ps));
}

LinkAnnotation bill_link(std::size_t at, const std::string& target) { return {"src", {at, at + 4, "Bill"}, target}; }

std::vector<LinkAnnotation> bill_links()
{
    return {bill_link(0, "Bill_Clinton"), bill_link(12, "Billy_Joel"), bill_link(23, "Bill_Clinton"),
            bill_link(35, "Bill_Clinton")};
}

MentionSpan surface(const std::string& s) { return {0, s.size(), s}; }

}  // namespace

TEST(AliasTable, CountOrdering)
{
    auto t = build_alias_table(bills(), bill_links(), {}, {false});
    EXPECT_EQ(t.candidates("bill"), (std::vector<std::string>{"Bill_Clinton", "Billy_Joel"}));
    EXPECT_EQ(link(t, surface("Bill")), (std::vector<std::string>{"Bill_Clinton", "Billy_Joel"}));
    EXPECT_EQ(link(t, surface("BILL")), link(t, surface("Bill")));
    EXPECT_TRUE(link(t, surface("Xyzzy")).empty());
}

TEST(AliasTable, TiesByAscendingId)
{
    auto links = bill_links();
    links.push_back(bill_link(12, "Billy_Joel"));
    links.push_back(bill_link(12, "Billy_Joel"));
    auto t = build_alias_table(bills(), links, {}, {false});
    EXPECT_EQ(t.candidates("bill"), (std::vector<std::string>{"Bill_Clinton", "Billy_Joel"}));
    links.push_back(bill_link(12, "Billy_Joel"));
    t = build_alias_table(bills(), links, {}, {false});
    EXPECT_EQ(t.candidates("bill"), (std::vector<std::string>{"Billy_Joel", "Bill_Clinton"}));
}

TEST(AliasTable, Exclusion)
{
    auto t = build_alias_table(bills(), bill_links(), {"Bill_Clinton"});
    EXPECT_EQ(t.candidates("bill"), std::vector<std::string>{"Billy_Joel"});
    EXPECT_TRUE(t.candidates("bill clinton").empty());
    EXPECT_EQ(t.candidates("billy joel"), std::vector<std::string>{"Billy_Joel"});
}

TEST(AliasTable, TitleSelfMapping)
{
    Corpus c(std::vector<Passage>{{"p7", "Mumbai", "A city.", {}}});
    auto t = build_alias_table(c, {}, {});
    EXPECT_EQ(t.candidates("mumbai"), std::vector<std::string>{"p7"});
    EXPECT_TRUE(build_alias_table(c, {}, {}, {false}).candidates("mumbai").empty());
}

TEST(AliasTable, DanglingLinksCounted)
{
    auto links = bill_links();
    links.push_back(bill_link(0, "Nowhere"));
    auto t = build_alias_table(bills(), links, {}, {false});
    EXPECT_EQ(t.dangling_links(), 1u);
    EXPECT_EQ(t.candidates("bill").size(), 2u);
}

TEST(AliasTable, JsonRoundTripIsStable)
{
    auto t = build_alias_table(bills(), bill_links(), {});
    auto back = AliasTable::from_json(nlohmann::json::parse(t.to_json().dump()));
    EXPECT_EQ(back, t);
    EXPECT_EQ(back.to_json().dump(), t.to_json().dump());
}

TEST(AliasTable, RandomLinkSetsNeverFabricateOrLeak)
{
    Rng rng(21);
    std::vector<Passage> ps;
    for (int i = 0; i < 12; ++i) {
        ps.push_back({"p" + std::to_string(i), "T" + std::to_string(i % 5), "Aa Bb Cc Dd", {}});
    }
    Corpus c(std::move(ps));
    const std::vector<MentionSpan> spans{{0, 2, "Aa"}, {3, 5, "Bb"}, {6, 8, "Cc"}, {0, 5, "Aa Bb"}};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<LinkAnnotation> links;
        std::map<std::string, std::set<std::string>> targets;
        auto n = rng.below(30);
        for (std::size_t i = 0; i < n; ++i) {
            auto m = spans[rng.below(spans.size())];
            auto tgt = "p" + std::to_string(rng.below(14));
            links.push_back({"p" + std::to_string(rng.below(12)), m, tgt});
            targets[normalize(m.surface)].insert(tgt);
        }
        std::set<std::string> exclude;
        for (int i = 0; i < 12; ++i) {
            if (rng.below(4) == 0) {
                exclude.insert("p" + std::to_string(i));
            }
        }
        auto t = build_alias_table(c, links, exclude, {false});
        for (const auto& [key, ids] : t.entries()) {
            EXPECT_FALSE(ids.empty());
            EXPECT_EQ(std::set<std::string>(ids.begin(), ids.end()).size(), ids.size());
            for (const auto& id : ids) {
                EXPECT_TRUE(c.contains(id));
                EXPECT_FALSE(exclude.contains(id));
                EXPECT_TRUE(targets[key].contains(id));
            }
        }
    }
}

TEST(Exclusion, Examples)
{
    auto corpus = testutil::corpus_of({{"a", "red fox"}, {"b", "red red hen"}, {"c", "blue hen"}, {"d", "green"}});
    auto idx = build_index(corpus);
    EXPECT_TRUE(build_exclusion_set(idx, {}, 40).empty());
    Question q1{"q1", "red", "", {}};
    Question q2{"q2", "hen", "", {}};
    auto top2 = retrieve(idx, q1.text, Scorer::bm25, 2);
    std::set<std::string> want;
    for (const auto& h : top2) {
        want.insert(h.id);
    }
    EXPECT_EQ(build_exclusion_set(idx, {q1}, 2), want);
    EXPECT_EQ(build_exclusion_set(idx, {q1, q2}, 2), (std::set<std::string>{"a", "b", "c"}));
}

TEST(FirstMention, DescriptionsAndStringMatch)
{
    std::vector<Passage> ps{{"p7", "", "Mumbai is big.", {{0, 6, "Mumbai"}}},
                            {"p2", "", "Paris again.", {{0, 5, "Paris"}}},
                            {"p1", "", "Paris first.", {{0, 5, "Paris"}}},
                            {"p3", "", "nothing here", {}}};
    Corpus c(std::move(ps));
    auto d = first_mention_descriptions(c);
    EXPECT_EQ(d.at("mumbai"), "p7");
    EXPECT_EQ(d.at("paris"), "p1");
    EXPECT_EQ(d.size(), 2u);
    EXPECT_EQ(string_match_link(d, surface("mumbai")), std::vector<std::string>{"p7"});
    EXPECT_EQ(string_match_link(d, surface("MUMBAI")), std::vector<std::string>{"p7"});
    EXPECT_TRUE(string_match_link(d, surface("Delhi")).empty());
    auto t = alias_table_from_descriptions(d, {"p1"});
    EXPECT_EQ(t.candidates("Mumbai"), std::vector<std::string>{"p7"});
    EXPECT_TRUE(t.candidates("paris").empty());
}

TEST(Links, ReadValidatesSourceAndSpan)
{
    auto c = bills();
    std::istringstream ok(R"({"source":"src","start":0,"end":4,"surface":"Bill","target":"Bill_Clinton"})");
    auto links = read_links_jsonl(ok, c);
    ASSERT_EQ(links.size(), 1u);
    std::ostringstream out;
    write_links_jsonl(out, links);
    std::istringstream again(out.str());
    EXPECT_EQ(read_links_jsonl(again, c), links);

    std::istringstream bad_src("\n{\"source\":\"zz\",\"start\":0,\"end\":4,\"surface\":\"Bill\",\"target\":\"x\"}");
    try {
        (void)read_links_jsonl(bad_src, c);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
    std::istringstream bad_span(R"({"source":"src","start":0,"end":4,"surface":"Bob","target":"x"})");
    EXPECT_THROW((void)read_links_jsonl(bad_span, c), DataError);
}
