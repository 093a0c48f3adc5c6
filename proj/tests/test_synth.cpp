#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include <hopir/eval.hpp>
#include <hopir/index.hpp>
#include <hopir/linker.hpp>
#include <hopir/synth.hpp>

using namespace hopir;

namespace {

SynthConfig small(std::uint64_t seed = 1)
{
    SynthConfig c;
    c.n_entities = 300;
    c.n_distractors = 300;
    c.n_questions = 60;
    c.n_train_questions = 60;
    c.confounders_per_question = 12;
    c.seed = seed;
    return c;
}

std::string read(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST(Synth, SingleQuestionSingleHop)
{
    auto c = small();
    c.n_questions = 1;
    c.n_train_questions = 0;
    c.single_hop_fraction = 1.0;
    auto b = generate(c);
    ASSERT_EQ(b.questions.size(), 1u);
    const auto& q = b.questions[0];
    ASSERT_EQ(q.supporting_ids.size(), 1u);
    EXPECT_FALSE(b.planted[0].two_hop);
    auto text = tokenize(b.corpus.at(*q.supporting_ids.begin()).text);
    EXPECT_TRUE(contains_token_run(text, tokenize(q.answer)));
    EXPECT_EQ(classify_hop(q, b.corpus), HopClass::single_hop);
}

TEST(Synth, ZeroOverlapAnswerPassageSharesNoQuestionTerms)
{
    auto c = small();
    c.overlap = 0.0;
    auto b = generate(c);
    for (std::size_t i = 0; i < b.questions.size(); ++i) {
        const auto& pq = b.planted[i];
        ASSERT_TRUE(pq.two_hop);
        auto qt = tokenize(b.questions[i].text);
        std::set<std::string> qs(qt.begin(), qt.end());
        for (const auto& t : tokenize(b.corpus.at(pq.bridge).text)) {
            EXPECT_FALSE(qs.contains(t)) << pq.qid << " " << t;
        }
    }
}

TEST(Synth, OverlapSplitsQuestionTerms)
{
    auto c = small();
    c.overlap = 0.3;
    auto b = generate(c);
    for (const auto& pq : b.planted) {
        EXPECT_EQ(pq.bridge_terms.size(), 3u);
        EXPECT_EQ(pq.source_terms.size(), 7u);
        auto bridge = tokenize(b.corpus.at(pq.bridge).text);
        for (const auto& t : pq.bridge_terms) {
            EXPECT_NE(std::find(bridge.begin(), bridge.end(), t), bridge.end());
        }
    }
}

TEST(Synth, DeterministicBundle)
{
    auto dir = std::filesystem::temp_directory_path() / "hopir_synth_det";
    std::filesystem::remove_all(dir);
    write_bundle(generate(small(7)), dir / "a");
    write_bundle(generate(small(7)), dir / "b");
    for (const char* f : {"corpus.jsonl", "links.jsonl", "questions.jsonl", "train_questions.jsonl", "manifest.json"}) {
        auto a = read(dir / "a" / f);
        EXPECT_FALSE(a.empty()) << f;
        EXPECT_EQ(a, read(dir / "b" / f)) << f;
    }
    write_bundle(generate(small(8)), dir / "c");
    EXPECT_NE(read(dir / "a" / "corpus.jsonl"), read(dir / "c" / "corpus.jsonl"));
    std::ifstream in(dir / "a" / "corpus.jsonl");
    auto back = read_corpus_jsonl(in);
    EXPECT_EQ(back.passages(), generate(small(7)).corpus.passages());
    std::filesystem::remove_all(dir);
}

TEST(Synth, InfeasibleConfigs)
{
    auto c = small();
    c.vocab_size = 50;
    try {
        (void)generate(c);
        FAIL();
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("infeasible"), std::string::npos);
    }
    c = small();
    c.n_entities = 10;
    EXPECT_THROW((void)generate(c), InvalidArgument);
    c = small();
    c.overlap = 1.5;
    EXPECT_THROW((void)generate(c), InvalidArgument);
}

TEST(Synth, PlantedChainReachableThroughLinks)
{
    auto b = generate(small(3));
    auto table = build_alias_table(b.corpus, b.links, {});
    std::set<std::pair<std::string, std::string>> edges;
    for (const auto& l : b.links) {
        edges.emplace(l.source, l.target);
    }
    for (std::size_t i = 0; i < b.questions.size(); ++i) {
        const auto& pq = b.planted[i];
        const auto& q = b.questions[i];
        EXPECT_TRUE(q.supporting_ids.contains(pq.source));
        if (!pq.two_hop) {
            continue;
        }
        EXPECT_EQ(q.supporting_ids, (std::set<std::string>{pq.source, pq.bridge}));
        EXPECT_TRUE(edges.contains({pq.source, pq.bridge}));
        const auto& bridge = b.corpus.at(pq.bridge);
        bool linked = false;
        for (const auto& m : b.corpus.at(pq.source).mentions) {
            const auto& cands = link(table, m);
            linked = linked || (m.surface == bridge.title && std::find(cands.begin(), cands.end(), pq.bridge) != cands.end());
        }
        EXPECT_TRUE(linked) << pq.qid;
    }
    EXPECT_EQ(table.dangling_links(), 0u);
}

TEST(Synth, ClassifyHopAgreesWithIntent)
{
    auto c = small(4);
    c.single_hop_fraction = 0.5;
    auto b = generate(c);
    std::size_t agree = 0;
    for (std::size_t i = 0; i < b.questions.size(); ++i) {
        auto want = b.planted[i].two_hop ? HopClass::multi_hop : HopClass::single_hop;
        agree += classify_hop(b.questions[i], b.corpus) == want ? 1 : 0;
    }
    EXPECT_GE(static_cast<double>(agree), 0.95 * static_cast<double>(b.questions.size()));
    std::size_t singles = 0;
    for (const auto& pq : b.planted) {
        singles += pq.two_hop ? 0 : 1;
    }
    EXPECT_EQ(singles, 30u);
}

TEST(Synth, TaggerRecoversEntityNames)
{
    auto b = generate(small(5));
    for (const auto& p : b.corpus.passages()) {
        auto stripped = p;
        stripped.mentions.clear();
        auto tagged = heuristic_tag_mentions(stripped);
        EXPECT_EQ(tagged.mentions, p.mentions) << p.id;
    }
}

TEST(Synth, ManifestRecordsGold)
{
    auto b = generate(small(6));
    auto m = b.manifest();
    EXPECT_EQ(m["seed"], 6);
    EXPECT_EQ(m["config"]["overlap"], 0.3);
    EXPECT_EQ(m["gold"].size(), b.questions.size());
    EXPECT_EQ(m["gold"][0]["bridge"], b.planted[0].bridge);
}

TEST(Synth, LowerOverlapDegradesBm25)
{
    const double levels[] = {0.0, 0.3, 0.6};
    double mean[3] = {0, 0, 0};
    for (int li = 0; li < 3; ++li) {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            auto c = small(seed);
            c.n_train_questions = 0;
            c.overlap = levels[li];
            auto b = generate(c);
            auto idx = build_index(b.corpus);
            SystemOutputs out;
            for (const auto& q : b.questions) {
                out[q.qid] = retrieve(idx, q.text, Scorer::bm25, 20);
            }
            mean[li] += evaluate(out, b.questions).acc_at(10) / 5.0;
        }
    }
    EXPECT_LT(mean[0], mean[1]);
    EXPECT_LT(mean[1], mean[2]);
}
