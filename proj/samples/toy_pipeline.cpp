// Walks the library API end to end: the hand-written toy bundle first, then a
// small synthetic bundle where the trained entity-hop re-ranker is compared
// against BM25.
//
//   toy_pipeline [samples/toy]

#include <iostream>
#include <string>

#include <hopir/hopir.hpp>

using namespace hopir;

namespace {

void toy(const std::string& dir)
{
    auto corpus = ingest_corpus(dir + "/corpus.jsonl");
    auto questions = load_questions(dir + "/questions.jsonl");
    auto links = load_links(dir + "/links.jsonl", corpus);
    auto index = build_index(corpus);
    auto table = build_alias_table(corpus, links, {});

    for (const auto& q : questions) {
        std::cout << q.qid << ": " << q.text << '\n';
        auto hits = retrieve(index, q.text, Scorer::bm25, 3, {});
        for (const auto& h : hits) {
            std::cout << "  bm25 " << h.id << ' ' << h.score << '\n';
        }
        auto chains = enumerate_chains(hits, corpus, table, {});
        for (const auto& c : chains.chains) {
            std::cout << "  chain " << c.first << " -> " << c.last
                      << (c.hop.is_self_link() ? " (self)" : " via '" + c.hop.mention->surface + "'")
                      << (gold_label(c, q) == Label::positive ? "  +" : "") << '\n';
        }
    }
}

void synthetic()
{
    SynthConfig sc;
    sc.n_entities = 300;
    sc.n_distractors = 300;
    sc.n_questions = 60;
    sc.n_train_questions = 60;
    sc.confounders_per_question = 12;
    auto bundle = generate(sc);
    auto index = build_index(bundle.corpus);
    auto table = build_alias_table(bundle.corpus, bundle.links, {});
    EncoderConfig ec;
    LexicalEncoder encoder(index, ec);
    PipelineConfig pc;

    auto data = build_training_set(Head::chain, encoder, bundle.corpus, index, table, bundle.train_questions, pc);
    TrainConfig tc;
    tc.epochs = 50;
    auto trained = train(data, tc);
    RerankModel model{Head::chain, trained.params, ec.provider, ec.dim, ec.fingerprint()};

    SystemInputs in{&bundle.corpus, &index, &table, &model, &encoder};
    for (auto mode : {Mode::bm25, Mode::entity_hop}) {
        auto rankings = run_system(mode, in, bundle.questions, 20, pc);
        auto result = evaluate(as_outputs(bundle.questions, rankings), bundle.questions);
        std::cout << to_string(mode) << ": acc@10 " << fixed(result.acc_at(10)) << "  map "
                  << fixed(result.overall.map) << '\n';
    }
}

}  // namespace

int main(int argc, char** argv)
{
    try {
        toy(argc > 1 ? argv[1] : "samples/toy");
        synthetic();
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }
    return 0;
}
