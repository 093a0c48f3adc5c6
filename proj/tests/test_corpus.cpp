#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include <hopir/corpus.hpp>

using namespace hopir;

namespace {

Corpus parse(const std::string& s)
{
    std::istringstream in(s);
    return read_corpus_jsonl(in);
}

std::string error_of(const std::string& s)
{
    try {
        (void)parse(s);
    } catch (const DataError& e) {
        return e.what();
    }
    return "";
}

const std::string three = R"({"id":"p1","title":"A","text":"Ann met Bob Ray.","mentions":[{"start":8,"end":15,"surface":"Bob Ray"}]}
{"id":"p2","title":"B","text":"bob ray is here"}
{"id":"p3","title":"C","text":"c c"}
)";

}  // namespace

TEST(Ingest, ThreeLines)
{
    auto c = parse(three);
    ASSERT_EQ(c.size(), 3u);
    EXPECT_EQ(c[0].mentions.size(), 1u);
    EXPECT_EQ(c.stats().total_tokens, 10u);
    EXPECT_EQ(c.stats().collection_freq.at("bob"), 2u);
    std::uint64_t sum = 0;
    for (const auto& [t, f] : c.stats().collection_freq) {
        sum += f;
    }
    EXPECT_EQ(sum, c.stats().total_tokens);
}

TEST(Ingest, EmptyInput)
{
    auto c = parse("");
    EXPECT_TRUE(c.empty());
    EXPECT_EQ(c.stats().total_tokens, 0u);
    EXPECT_TRUE(c.stats().collection_freq.empty());
}

TEST(Ingest, MalformedLineNamesLine)
{
    auto e = error_of(three + "{not json\n");
    EXPECT_NE(e.find("line 4"), std::string::npos) << e;
    e = error_of("{\"id\":\"p1\",\"text\":\"a\"}\n[1,2]\n");
    EXPECT_NE(e.find("line 2"), std::string::npos) << e;
    e = error_of("{\"id\":\"p1\"}\n");
    EXPECT_NE(e.find("line 1"), std::string::npos) << e;
}

TEST(Ingest, DuplicateIdNamed)
{
    std::string s = R"({"id":"p1","text":"a"}
{"id":"p2","text":"b"}
{"id":"p3","text":"c"}
{"id":"p1","text":"d"}
)";
    auto e = error_of(s);
    EXPECT_NE(e.find("'p1'"), std::string::npos) << e;
    EXPECT_NE(e.find("line 4"), std::string::npos) << e;
    EXPECT_NE(e.find("line 1"), std::string::npos) << e;
}

TEST(Ingest, BadSpanNamesPassage)
{
    auto e = error_of(R"({"id":"px","text":"short","mentions":[{"start":2,"end":40,"surface":"ort"}]})");
    EXPECT_NE(e.find("px"), std::string::npos) << e;
    e = error_of(R"({"id":"py","text":"short","mentions":[{"start":0,"end":3,"surface":"xyz"}]})");
    EXPECT_NE(e.find("py"), std::string::npos) << e;
    e = error_of(R"({"id":"pz","text":"short","mentions":[{"start":-1,"end":3,"surface":"sho"}]})");
    EXPECT_NE(e.find("pz"), std::string::npos) << e;
}

TEST(Ingest, OverlapsKeepLongestThenEarliest)
{
    std::vector<MentionSpan> spans{{0, 4, "Bill"}, {0, 10, "Bill Smith"}, {5, 10, "Smith"}, {11, 14, "Jo "},
                                   {12, 15, "o A"}, {20, 23, "Zed"}};
    auto kept = resolve_overlaps(spans);
    ASSERT_EQ(kept.size(), 3u);
    EXPECT_EQ(kept[0].surface, "Bill Smith");
    EXPECT_EQ(kept[1].surface, "Jo ");
    EXPECT_EQ(kept[2].surface, "Zed");
}

TEST(Ingest, RoundTrip)
{
    auto c = parse(three);
    std::ostringstream out;
    write_corpus_jsonl(out, c);
    auto back = parse(out.str());
    EXPECT_EQ(back.passages(), c.passages());
    EXPECT_EQ(back.stats(), c.stats());
    auto bin = deserialize_corpus(serialize_corpus(c));
    EXPECT_EQ(bin.passages(), c.passages());
    EXPECT_EQ(bin.stats(), c.stats());
}

TEST(Questions, ParseAndValidate)
{
    std::istringstream in(R"({"qid":"q1","question":"who?","answer":"Ann","supporting_ids":["p1","p2"]}
{"qid":"q2","question":"what?","answer":"","supporting_ids":["p9"]}
)");
    auto qs = read_questions_jsonl(in);
    ASSERT_EQ(qs.size(), 2u);
    EXPECT_EQ(qs[0].supporting_ids, (std::set<std::string>{"p1", "p2"}));
    auto c = parse(three);
    EXPECT_NO_THROW(validate_questions({qs[0]}, c));
    EXPECT_THROW(validate_questions(qs, c), DataError);

    std::ostringstream out;
    write_questions_jsonl(out, qs);
    std::istringstream again(out.str());
    EXPECT_EQ(read_questions_jsonl(again), qs);
}

TEST(Questions, DuplicateQid)
{
    std::istringstream in("{\"qid\":\"q\",\"question\":\"a\"}\n{\"qid\":\"q\",\"question\":\"b\"}\n");
    EXPECT_THROW((void)read_questions_jsonl(in), DataError);
}

TEST(Ingest, MissingFile)
{
    EXPECT_THROW((void)ingest_corpus("/nonexistent/corpus.jsonl"), DataError);
}
