#include <cmath>

#include <gtest/gtest.h>

#include <hopir/prf.hpp>

#include "test_util.hpp"

using namespace hopir;

namespace {

oracle::Ranking as_oracle(const RankedList& r)
{
    oracle::Ranking out;
    for (const auto& h : r) {
        out.emplace_back(h.id, h.score);
    }
    return out;
}

void expect_same_weights(const WeightedQuery& got, const oracle::Weights& want)
{
    ASSERT_EQ(got.size(), want.size());
    for (const auto& [t, w] : want) {
        ASSERT_TRUE(got.contains(t)) << t;
        EXPECT_NEAR(got.at(t), w, 1e-9) << t;
    }
}

double total(const WeightedQuery& wq)
{
    double s = 0.0;
    for (const auto& [t, w] : wq) {
        s += w;
    }
    return s;
}

}  // namespace

TEST(Rocchio, MatchesBruteForce)
{
    Rng rng(71);
    for (int trial = 0; trial < 250; ++trial) {
        auto docs = testutil::random_docs(rng);
        auto idx = build_index(testutil::to_corpus(docs));
        auto q = testutil::random_query(rng);
        auto first = retrieve(idx, q, trial % 2 == 0 ? Scorer::ql : Scorer::tfidf, 10);
        if (first.empty()) {
            EXPECT_THROW((void)rocchio_expand(idx, q, first, {}), InvalidArgument);
            continue;
        }
        RocchioParams p;
        p.alpha = static_cast<double>(rng.below(4)) * 0.5;
        p.beta = static_cast<double>(rng.below(4)) * 0.25;
        p.fb_docs = 1 + rng.below(5);
        p.fb_terms = 1 + rng.below(6);
        auto wq = rocchio_expand(idx, q, first, p);
        auto want = oracle::rocchio(docs, q, as_oracle(first), p.alpha, p.beta, p.fb_docs, p.fb_terms);
        expect_same_weights(wq, want);
        if (!wq.empty()) {
            testutil::expect_same_ranking(retrieve_weighted(idx, wq, WeightedScorer::tfidf_cosine, 10),
                                          oracle::rank_cosine(docs, want, 10));
        }
    }
}

TEST(Rm3, MatchesBruteForce)
{
    Rng rng(72);
    for (int trial = 0; trial < 250; ++trial) {
        auto docs = testutil::random_docs(rng);
        auto idx = build_index(testutil::to_corpus(docs));
        auto q = testutil::random_query(rng);
        Rm3Params p;
        p.lambda = static_cast<double>(rng.below(5)) * 0.25;
        p.fb_docs = 1 + rng.below(5);
        p.fb_terms = 1 + rng.below(6);
        p.dirichlet.mu = trial % 2 == 0 ? 1500.0 : 1.0 + static_cast<double>(rng.below(20));
        RetrievalParams rp;
        rp.dirichlet = p.dirichlet;
        auto first = retrieve(idx, q, Scorer::ql, 10, rp);
        if (first.empty()) {
            EXPECT_THROW((void)rm3_expand(idx, q, first, p), InvalidArgument);
            continue;
        }
        testutil::expect_same_ranking(first, oracle::rank_ql(docs, q, 10, p.dirichlet.mu));
        auto wq = rm3_expand(idx, q, first, p);
        auto want = oracle::rm3(docs, q, as_oracle(first), p.lambda, p.fb_docs, p.fb_terms, p.dirichlet.mu);
        expect_same_weights(wq, want);
        oracle::Weights owq(wq.begin(), wq.end());
        testutil::expect_same_ranking(retrieve_weighted(idx, wq, WeightedScorer::ql, 10, p.dirichlet),
                                      oracle::rank_weighted_ql(docs, owq, 10, p.dirichlet.mu));
    }
}

TEST(Rm3, SumsToOne)
{
    Rng rng(73);
    int checked = 0;
    while (checked < 100) {
        auto docs = testutil::random_docs(rng);
        auto idx = build_index(testutil::to_corpus(docs));
        auto q = testutil::random_query(rng);
        auto first = retrieve(idx, q, Scorer::ql, 10);
        if (first.empty()) {
            continue;
        }
        Rm3Params p;
        p.lambda = rng.uniform();
        p.fb_docs = 1 + rng.below(10);
        p.fb_terms = 1 + rng.below(12);
        EXPECT_NEAR(total(rm3_expand(idx, q, first, p)), 1.0, 1e-9);
        ++checked;
    }
}

TEST(Rm3, LambdaOneIsQueryModel)
{
    Rng rng(74);
    for (int trial = 0; trial < 100; ++trial) {
        auto docs = testutil::random_docs(rng);
        auto idx = build_index(testutil::to_corpus(docs));
        auto q = testutil::random_query(rng);
        auto first = retrieve(idx, q, Scorer::ql, 10);
        if (first.empty()) {
            continue;
        }
        Rm3Params p;
        p.lambda = 1.0;
        EXPECT_EQ(rm3_expand(idx, q, first, p), query_mle(q));
    }
}

TEST(Rm3, QueryModelHandExample)
{
    auto mle = query_mle({"a", "b", "a"});
    ASSERT_EQ(mle.size(), 2u);
    EXPECT_DOUBLE_EQ(mle.at("a"), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(mle.at("b"), 1.0 / 3.0);
}

TEST(Rm3, LambdaZeroSingleDocIsSmoothedDocModel)
{
    auto idx = build_index(testutil::corpus_of({{"d1", "a a b"}, {"d2", "c"}}));
    Rm3Params p;
    p.lambda = 0.0;
    p.fb_docs = 1;
    p.fb_terms = 10;
    p.dirichlet.mu = 2.0;
    auto first = retrieve(idx, "a", Scorer::ql, 1, {{}, p.dirichlet, {}});
    ASSERT_EQ(first.size(), 1u);
    EXPECT_EQ(first[0].id, "d1");
    auto wq = rm3_expand(idx, std::vector<std::string>{"a"}, first, p);
    // P(w|d1) with mu=2, |C|=4: a (2+1)/5, b (1+0.5)/5, c (0+0.5)/5; c is not in d1.
    ASSERT_EQ(wq.size(), 2u);
    EXPECT_NEAR(wq.at("a"), 0.6 / 0.9, 1e-12);
    EXPECT_NEAR(wq.at("b"), 0.3 / 0.9, 1e-12);
}

TEST(Rm3, EmptyQueryUsesFeedbackOnly)
{
    auto idx = build_index(testutil::corpus_of({{"d1", "a b"}}));
    RankedList first{{"d1", -1.0}};
    Rm3Params p;
    p.lambda = 0.9;
    auto wq = rm3_expand(idx, std::vector<std::string>{}, first, p);
    EXPECT_NEAR(total(wq), 1.0, 1e-12);
    EXPECT_NEAR(wq.at("a"), 0.5, 1e-12);
}

TEST(Rm3, ScoreShiftInvariance)
{
    auto idx = build_index(testutil::corpus_of({{"d1", "a a b"}, {"d2", "a c c"}, {"d3", "b c d"}}));
    RankedList first{{"d1", -3.0}, {"d2", -4.5}, {"d3", -6.0}};
    RankedList shifted{{"d1", 97.0}, {"d2", 95.5}, {"d3", 94.0}};
    Rm3Params p;
    auto a = rm3_expand(idx, std::vector<std::string>{"a"}, first, p);
    auto b = rm3_expand(idx, std::vector<std::string>{"a"}, shifted, p);
    ASSERT_EQ(a.size(), b.size());
    for (const auto& [t, w] : a) {
        EXPECT_NEAR(b.at(t), w, 1e-12);
    }
}

TEST(Rocchio, BetaZeroIsOriginalQuery)
{
    Rng rng(75);
    for (int trial = 0; trial < 100; ++trial) {
        auto docs = testutil::random_docs(rng);
        auto idx = build_index(testutil::to_corpus(docs));
        auto q = testutil::random_query(rng);
        auto first = retrieve(idx, q, Scorer::tfidf, 10);
        if (first.empty()) {
            continue;
        }
        RocchioParams p;
        p.beta = 0.0;
        auto wq = rocchio_expand(idx, q, first, p);
        EXPECT_EQ(wq, tfidf_vector(idx, q));
        EXPECT_EQ(retrieve_weighted(idx, wq, WeightedScorer::tfidf_cosine, 10), first);
    }
}

TEST(Rocchio, AlphaZeroSingleDocIsScaledDocVector)
{
    auto idx = build_index(testutil::corpus_of({{"d1", "a b b"}, {"d2", "c"}, {"d3", "c d"}}));
    RankedList first{{"d1", 1.0}};
    RocchioParams p;
    p.alpha = 0.0;
    p.beta = 2.0;
    p.fb_docs = 1;
    auto wq = rocchio_expand(idx, std::vector<std::string>{"a"}, first, p);
    auto dv = tfidf_vector_of_doc(idx, "d1");
    ASSERT_EQ(wq.size(), dv.size());
    for (const auto& [t, w] : dv) {
        EXPECT_NEAR(wq.at(t), 2.0 * w, 1e-12);
    }
}

TEST(Rocchio, ExpansionOrderAndLimit)
{
    // d1 contributes b (ln 3 * 2) and c (ln 3); with fb_terms 1 only b is added.
    auto idx = build_index(testutil::corpus_of({{"d1", "a b b c"}, {"d2", "x"}, {"d3", "y"}}));
    RankedList first{{"d1", 1.0}};
    RocchioParams p;
    p.fb_docs = 1;
    p.fb_terms = 1;
    auto wq = rocchio_expand(idx, std::vector<std::string>{"a"}, first, p);
    ASSERT_EQ(wq.size(), 2u);
    EXPECT_TRUE(wq.contains("a"));
    EXPECT_NEAR(wq.at("b"), 0.75 * 2.0 * std::log(3.0), 1e-12);
}

TEST(Prf, RejectsEmptyFeedbackAndBadParams)
{
    auto idx = build_index(testutil::corpus_of({{"d1", "a"}}));
    EXPECT_THROW((void)rocchio_expand(idx, std::vector<std::string>{"a"}, {}, {}), InvalidArgument);
    EXPECT_THROW((void)rm3_expand(idx, std::vector<std::string>{"a"}, {}, {}), InvalidArgument);
    Rm3Params bad;
    bad.lambda = 1.5;
    EXPECT_THROW((void)rm3_expand(idx, std::vector<std::string>{"a"}, {{"d1", 0.0}}, bad), InvalidArgument);
    RocchioParams neg;
    neg.beta = -1.0;
    EXPECT_THROW((void)rocchio_expand(idx, std::vector<std::string>{"a"}, {{"d1", 0.0}}, neg), InvalidArgument);
}
