// hopir: command-line driver for indexing, linking, retrieval, training,
// evaluation and synthetic data generation.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <hopir/hopir.hpp>

namespace {

using namespace hopir;
using nlohmann::json;

constexpr const char* tool_version = "hopir 0.1.0";

enum Exit { ok = 0, usage = 1, data = 2, remote = 3 };

std::string fnv1a_hex(std::string_view bytes)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Runs `fn`, prefixing data errors with the file they came from.
template <class Fn>
auto with_file(const std::string& path, Fn&& fn)
{
    try {
        return fn();
    } catch (const DataError& e) {
        std::string msg = e.what();
        if (msg.rfind(path, 0) == 0) {
            throw;
        }
        throw DataError(path + ": " + msg);
    }
}

void require_artifact(const std::string& path, const std::string& what, const std::string& flag,
                      const std::string& producer)
{
    if (path.empty()) {
        throw InvalidArgument("missing " + what + ": pass " + flag + " (produce it with `hopir " + producer + "`)");
    }
    if (!std::filesystem::exists(path)) {
        throw DataError("missing " + what + " '" + path + "' (" + flag + "; produce it with `hopir " + producer
                        + "`)");
    }
}

void write_text(const std::string& path, const std::string& text)
{
    if (auto parent = std::filesystem::path(path).parent_path(); !parent.empty()) {
        std::filesystem::create_directories(parent);
    }
    binary::write_file(path, text);
}

/// Shared state for one subcommand invocation: option registry for the
/// manifest, input digests and outputs.
struct Run {
    CLI::App* app = nullptr;
    std::string name;
    std::string manifest_path;
    std::map<std::string, std::string> inputs;
    std::vector<std::string> outputs;
    json extra = json::object();

    void input(const std::string& path)
    {
        if (!path.empty()) {
            inputs[path] = fnv1a_hex(binary::read_file(path));
        }
    }

    void output(const std::string& path) { outputs.push_back(path); }

    [[nodiscard]] json resolved_config() const
    {
        json cfg = json::object();
        for (const auto* opt : app->get_options()) {
            auto key = opt->get_single_name();
            if (key.empty() || key == "help" || key == "config" || key == "manifest") {
                continue;
            }
            if (opt->count() > 0) {
                auto results = opt->results();
                if (results.size() == 1) {
                    cfg[key] = results.front();
                } else {
                    cfg[key] = results;
                }
            } else if (opt->get_expected_min() == 0) {
                cfg[key] = "false";
            } else {
                cfg[key] = opt->get_default_str();
            }
        }
        return cfg;
    }

    void write_manifest() const
    {
        std::string path = manifest_path;
        if (path.empty()) {
            if (outputs.empty()) {
                return;
            }
            path = outputs.front() + ".manifest.json";
        }
        json m = {{"subcommand", name},
                  {"tool_version", tool_version},
                  {"config", resolved_config()},
                  {"inputs", inputs},
                  {"outputs", outputs}};
        for (auto& [k, v] : extra.items()) {
            m[k] = v;
        }
        write_text(path, m.dump(1) + "\n");
    }
};

struct RetrievalOpts {
    double k1 = 1.2;
    double b = 0.75;
    double mu = 1500.0;
    bool stop_queries = false;

    void add(CLI::App* sub)
    {
        sub->add_option("--k1", k1, "BM25 term-frequency saturation");
        sub->add_option("--b", b, "BM25 length normalization");
        sub->add_option("--mu", mu, "Dirichlet smoothing mass");
        sub->add_flag("--stop-queries", stop_queries, "Drop stopwords from queries");
    }

    [[nodiscard]] RetrievalParams params() const
    {
        RetrievalParams p;
        p.bm25 = {k1, b};
        p.dirichlet = {mu};
        p.tokenizer.stop_queries = stop_queries;
        p.bm25.validate();
        p.dirichlet.validate();
        return p;
    }
};

struct EncoderOpts {
    std::string provider = "lexical";
    std::string endpoint;
    std::size_t dim = lexical_dim;
    std::uint32_t features = 0xFF;

    void add(CLI::App* sub)
    {
        sub->add_option("--encoder", provider, "Passage encoder")->check(CLI::IsMember({"lexical", "remote"}));
        sub->add_option("--endpoint", endpoint,
                        "host:port of the remote encoder (HOPIR_ENCODER_ENDPOINT overrides)");
        sub->add_option("--encoder-dim", dim, "Vector width expected from the remote encoder");
        sub->add_option("--lexical-features", features, "Bit mask of enabled lexical features");
    }

    [[nodiscard]] EncoderConfig config(const RetrievalParams& rp, Run& run) const
    {
        EncoderConfig c;
        c.provider = provider == "remote" ? EncoderProvider::remote : EncoderProvider::lexical;
        c.dim = c.provider == EncoderProvider::lexical ? lexical_dim : dim;
        c.endpoint = endpoint;
        if (const char* env = std::getenv("HOPIR_ENCODER_ENDPOINT"); env != nullptr && *env != '\0') {
            c.endpoint = env;
        }
        c.lexical_features = features;
        c.bm25 = rp.bm25;
        c.dirichlet = rp.dirichlet;
        c.tokenizer = rp.tokenizer;
        c.validate();
        run.extra["encoder"] = {{"provider", to_string(c.provider)},
                                {"dim", c.dim},
                                {"endpoint", c.endpoint},
                                {"fingerprint", c.fingerprint()}};
        return c;
    }
};

Corpus load_corpus_file(Run& run, const std::string& path)
{
    require_artifact(path, "corpus", "--corpus", "ingest");
    run.input(path);
    return with_file(path, [&] { return ingest_corpus(path); });
}

InvertedIndex load_index_file(Run& run, const std::string& path)
{
    require_artifact(path, "index", "--index", "index");
    run.input(path);
    return with_file(path, [&] { return load_index(path); });
}

AliasTable load_alias_file(Run& run, const std::string& path)
{
    require_artifact(path, "alias table", "--alias", "alias");
    run.input(path);
    return with_file(path, [&] {
        try {
            return AliasTable::from_json(json::parse(binary::read_file(path)));
        } catch (const json::exception& e) {
            throw DataError(std::string("malformed alias table: ") + e.what());
        }
    });
}

std::vector<Question> load_questions_file(Run& run, const std::string& path)
{
    require_artifact(path, "questions", "--questions", "synth");
    run.input(path);
    return with_file(path, [&] { return load_questions(path); });
}

RerankModel load_model_file(Run& run, const std::string& path)
{
    require_artifact(path, "model", "--model", "train");
    run.input(path);
    return with_file(path, [&] { return load_model(path); });
}

// ---------------------------------------------------------------------------

void setup_ingest(CLI::App& app, std::vector<std::function<void()>>& actions)
{
    auto* sub = app.add_subcommand("ingest", "Validate a JSONL corpus and write the binary corpus");
    struct Opts {
        std::string corpus, out;
        bool tag = false;
    };
    auto o = std::make_shared<Opts>();
    sub->add_option("--corpus", o->corpus, "Input corpus (JSONL)")->required();
    sub->add_option("--out", o->out, "Output binary corpus")->required();
    sub->add_flag("--tag", o->tag, "Tag capitalized mentions in passages that carry none");
    auto run = std::make_shared<Run>();
    run->app = sub;
    run->name = "ingest";
    sub->add_option("--manifest", run->manifest_path, "Manifest path (default <out>.manifest.json)");
    actions.push_back([sub, o, run] {
        if (!sub->parsed()) {
            return;
        }
        auto corpus = load_corpus_file(*run, o->corpus);
        if (o->tag) {
            std::vector<Passage> tagged;
            for (const auto& p : corpus.passages()) {
                tagged.push_back(p.mentions.empty() ? heuristic_tag_mentions(p) : p);
            }
            corpus = Corpus(std::move(tagged));
        }
        write_text(o->out, serialize_corpus(corpus));
        run->output(o->out);
        run->extra["passages"] = corpus.size();
        run->write_manifest();
    });
}

void setup_tag(CLI::App& app, std::vector<std::function<void()>>& actions)
{
    auto* sub = app.add_subcommand("tag", "Add heuristic capitalized-run mentions to a corpus");
    struct Opts {
        std::string corpus, out;
        bool replace = false;
    };
    auto o = std::make_shared<Opts>();
    sub->add_option("--corpus", o->corpus, "Input corpus (JSONL or binary)")->required();
    sub->add_option("--out", o->out, "Output corpus (JSONL)")->required();
    sub->add_flag("--replace", o->replace, "Re-tag passages that already carry mentions");
    auto run = std::make_shared<Run>();
    run->app = sub;
    run->name = "tag";
    sub->add_option("--manifest", run->manifest_path, "Manifest path (default <out>.manifest.json)");
    actions.push_back([sub, o, run] {
        if (!sub->parsed()) {
            return;
        }
        auto corpus = load_corpus_file(*run, o->corpus);
        std::vector<Passage> tagged;
        std::size_t mentions = 0;
        for (const auto& p : corpus.passages()) {
            if (o->replace || p.mentions.empty()) {
                auto q = p;
                q.mentions.clear();
                tagged.push_back(heuristic_tag_mentions(std::move(q)));
            } else {
                tagged.push_back(p);
            }
            mentions += tagged.back().mentions.size();
        }
        std::ostringstream out;
        write_corpus_jsonl(out, Corpus(std::move(tagged)));
        write_text(o->out, out.str());
        run->output(o->out);
        run->extra["mentions"] = mentions;
        run->write_manifest();
    });
}

void setup_index(CLI::App& app, std::vector<std::function<void()>>& actions)
{
    auto* sub = app.add_subcommand("index", "Build the inverted index");
    struct Opts {
        std::string corpus, out;
    };
    auto o = std::make_shared<Opts>();
    sub->add_option("--corpus", o->corpus, "Corpus (JSONL or binary)")->required();
    sub->add_option("--out", o->out, "Output index file")->required();
    auto run = std::make_shared<Run>();
    run->app = sub;
    run->name = "index";
    sub->add_option("--manifest", run->manifest_path, "Manifest path (default <out>.manifest.json)");
    actions.push_back([sub, o, run] {
        if (!sub->parsed()) {
            return;
        }
        auto corpus = load_corpus_file(*run, o->corpus);
        auto index = build_index(corpus);
        write_text(o->out, serialize_index(index));
        run->output(o->out);
        run->extra["documents"] = index.doc_count();
        run->extra["terms"] = index.term_count();
        run->write_manifest();
    });
}

void setup_alias(CLI::App& app, std::vector<std::function<void()>>& actions)
{
    auto* sub = app.add_subcommand("alias", "Build the alias table from link annotations");
    struct Opts {
        std::string corpus, links, exclude_from, index, out;
        std::string linker = "alias";
        std::size_t top_n = 40;
        bool no_titles = false;
        RetrievalOpts retrieval;
    };
    auto o = std::make_shared<Opts>();
    sub->add_option("--corpus", o->corpus, "Corpus (JSONL or binary)")->required();
    sub->add_option("--links", o->links, "Link annotations (JSONL; alias linker)");
    sub->add_option("--linker", o->linker,
                    "alias: anchors and titles; first-mention: each passage's first mention names it, exact string match")
        ->check(CLI::IsMember({"alias", "first-mention"}));
    sub->add_option("--exclude-from", o->exclude_from,
                    "Questions whose top BM25 passages are removed as link targets");
    sub->add_option("--top-n", o->top_n, "BM25 depth of the exclusion set");
    sub->add_option("--index", o->index, "Index used for the exclusion set (built in memory if omitted)");
    sub->add_flag("--no-titles", o->no_titles, "Do not map titles to their own passages");
    sub->add_option("--out", o->out, "Output alias table (JSON)")->required();
    o->retrieval.add(sub);
    auto run = std::make_shared<Run>();
    run->app = sub;
    run->name = "alias";
    sub->add_option("--manifest", run->manifest_path, "Manifest path (default <out>.manifest.json)");
    actions.push_back([sub, o, run] {
        if (!sub->parsed()) {
            return;
        }
        auto corpus = load_corpus_file(*run, o->corpus);
        std::vector<LinkAnnotation> links;
        if (o->linker == "alias") {
            require_artifact(o->links, "links", "--links", "synth");
            run->input(o->links);
            links = with_file(o->links, [&] { return load_links(o->links, corpus); });
        }
        std::set<std::string> exclude;
        if (!o->exclude_from.empty()) {
            auto questions = load_questions_file(*run, o->exclude_from);
            auto index = o->index.empty() ? build_index(corpus) : load_index_file(*run, o->index);
            exclude = build_exclusion_set(index, questions, o->top_n, o->retrieval.params());
        }
        AliasOptions opts;
        opts.include_titles = !o->no_titles;
        auto table = o->linker == "alias"
                         ? build_alias_table(corpus, links, exclude, opts)
                         : alias_table_from_descriptions(first_mention_descriptions(corpus), exclude);
        write_text(o->out, table.to_json().dump(1) + "\n");
        run->output(o->out);
        run->extra["surfaces"] = table.size();
        run->extra["excluded"] = exclude.size();
        run->extra["dangling_links"] = table.dangling_links();
        run->write_manifest();
    });
}

struct ChainOpts {
    std::size_t initial_k = 25;
    std::size_t per_mention = 8;
    std::size_t per_question = 4096;

    void add(CLI::App* sub)
    {
        sub->add_option("--per-mention", per_mention, "Alias candidates kept per mention");
        sub->add_option("--per-question", per_question, "Chains kept per question");
    }
};

void setup_chains(CLI::App& app, std::vector<std::function<void()>>& actions)
{
    auto* sub = app.add_subcommand("chains", "Enumerate labeled two-passage chains per question");
    struct Opts {
        std::string corpus, index, alias, questions, out;
        ChainOpts chains;
        RetrievalOpts retrieval;
    };
    auto o = std::make_shared<Opts>();
    sub->add_option("--corpus", o->corpus, "Corpus (JSONL or binary)")->required();
    sub->add_option("--index", o->index, "Index file")->required();
    sub->add_option("--alias", o->alias, "Alias table")->required();
    sub->add_option("--questions", o->questions, "Questions (JSONL)")->required();
    sub->add_option("--out", o->out, "Output chains (JSONL)")->required();
    sub->add_option("--initial-k", o->chains.initial_k, "Initial BM25 depth");
    o->chains.add(sub);
    o->retrieval.add(sub);
    auto run = std::make_shared<Run>();
    run->app = sub;
    run->name = "chains";
    sub->add_option("--manifest", run->manifest_path, "Manifest path (default <out>.manifest.json)");
    actions.push_back([sub, o, run] {
        if (!sub->parsed()) {
            return;
        }
        auto corpus = load_corpus_file(*run, o->corpus);
        auto index = load_index_file(*run, o->index);
        auto table = load_alias_file(*run, o->alias);
        auto questions = load_questions_file(*run, o->questions);
        PipelineConfig pc;
        pc.retrieval = o->retrieval.params();
        pc.initial_k = o->chains.initial_k;
        pc.caps = {o->chains.per_mention, o->chains.per_question};
        std::ostringstream out;
        std::size_t total = 0;
        for (const auto& q : questions) {
            auto set = question_chains(index, corpus, table, q, pc);
            for (const auto& chain : set.chains) {
                std::optional<Label> label;
                if (!q.supporting_ids.empty()) {
                    label = gold_label(chain, q);
                }
                out << chain_to_json(q.qid, chain, label).dump() << '\n';
                ++total;
            }
        }
        write_text(o->out, out.str());
        run->output(o->out);
        run->extra["chains"] = total;
        run->write_manifest();
    });
}

void setup_train(CLI::App& app, std::vector<std::function<void()>>& actions)
{
    auto* sub = app.add_subcommand("train", "Train a feed-forward re-ranking head with binary cross-entropy");
    struct Opts {
        std::string corpus, index, alias, questions, out, log;
        std::string head = "chain";
        std::string optimizer = "adam";
        std::size_t threads = 1;
        std::size_t pointwise_initial_k = 200;
        TrainConfig train;
        ChainOpts chains;
        RetrievalOpts retrieval;
        EncoderOpts encoder;
    };
    auto o = std::make_shared<Opts>();
    sub->add_option("--corpus", o->corpus, "Corpus (JSONL or binary)")->required();
    sub->add_option("--index", o->index, "Index file")->required();
    sub->add_option("--alias", o->alias, "Alias table (chain heads)");
    sub->add_option("--questions", o->questions, "Training questions with supporting ids (JSONL)")->required();
    sub->add_option("--out", o->out, "Output model (JSON)")->required();
    sub->add_option("--log", o->log, "Per-epoch loss log (CSV; default <out>.log.csv)");
    sub->add_option("--head", o->head, "Scoring head")->check(CLI::IsMember({"chain", "entity_only", "pointwise"}));
    sub->add_option("--epochs", o->train.epochs, "Training epochs");
    sub->add_option("--lr", o->train.learning_rate, "Learning rate");
    sub->add_option("--batch-size", o->train.batch_size, "Mini-batch size");
    sub->add_option("--neg-per-pos", o->train.neg_per_pos, "Negatives sampled per positive (0 keeps all)");
    sub->add_option("--hidden", o->train.hidden, "Hidden units");
    sub->add_option("--seed", o->train.seed, "Random seed");
    sub->add_option("--optimizer", o->optimizer, "Optimizer")->check(CLI::IsMember({"adam", "sgd"}));
    sub->add_option("--initial-k", o->chains.initial_k, "Initial BM25 depth for chain heads");
    sub->add_option("--pointwise-initial-k", o->pointwise_initial_k, "Initial BM25 depth for the pointwise head");
    sub->add_option("--threads", o->threads, "Worker threads (reserved; training is sequential)");
    o->chains.add(sub);
    o->retrieval.add(sub);
    o->encoder.add(sub);
    auto run = std::make_shared<Run>();
    run->app = sub;
    run->name = "train";
    sub->add_option("--manifest", run->manifest_path, "Manifest path (default <out>.manifest.json)");
    actions.push_back([sub, o, run] {
        if (!sub->parsed()) {
            return;
        }
        Head head = head_from_string(o->head);
        auto corpus = load_corpus_file(*run, o->corpus);
        auto index = load_index_file(*run, o->index);
        AliasTable table{AliasTable::Entries{}};
        if (head != Head::pointwise) {
            table = load_alias_file(*run, o->alias);
        }
        auto questions = load_questions_file(*run, o->questions);
        PipelineConfig pc;
        pc.retrieval = o->retrieval.params();
        pc.initial_k = o->chains.initial_k;
        pc.pointwise_initial_k = o->pointwise_initial_k;
        pc.caps = {o->chains.per_mention, o->chains.per_question};
        auto ec = o->encoder.config(pc.retrieval, *run);
        auto encoder = make_encoder(ec, index);

        auto dataset = build_training_set(head, *encoder, corpus, index, table, questions, pc);
        auto tc = o->train;
        tc.optimizer = o->optimizer == "sgd" ? Optimizer::plain_gradient : Optimizer::adaptive_moment;
        auto result = train(dataset, tc);

        RerankModel model;
        model.head = head;
        model.ffn = result.params;
        model.encoder_provider = ec.provider;
        model.encoder_dim = ec.dim;
        model.encoder_fingerprint = ec.fingerprint();
        save_model(model, o->out);
        run->output(o->out);

        std::string log_path = o->log.empty() ? o->out + ".log.csv" : o->log;
        std::ostringstream log;
        write_training_log(log, result);
        write_text(log_path, log.str());
        run->output(log_path);
        run->extra["examples"] = dataset.size();
        run->extra["final_loss"] = result.final_loss;
        run->write_manifest();
    });
}

void setup_retrieve(CLI::App& app, std::vector<std::function<void()>>& actions)
{
    auto* sub = app.add_subcommand("retrieve", "Rank passages for every question");
    struct Opts {
        std::string mode = "bm25";
        std::string corpus, index, alias, model, questions, out;
        std::size_t k = 20;
        std::optional<std::size_t> initial_k;
        std::string ablation = "none";
        std::size_t threads = 1;
        std::string rocchio_first_pass = "ql";
        RocchioParams rocchio;
        Rm3Params rm3;
        ChainOpts chains;
        RetrievalOpts retrieval;
        EncoderOpts encoder;
    };
    auto o = std::make_shared<Opts>();
    sub->add_option("--mode", o->mode, "Retrieval mode")
        ->check(CLI::IsMember({"bm25", "ql", "prf-rocchio", "prf-rm3", "pointwise", "entity-hop"}));
    sub->add_option("--corpus", o->corpus, "Corpus (pointwise, entity-hop)");
    sub->add_option("--index", o->index, "Index file")->required();
    sub->add_option("--alias", o->alias, "Alias table (entity-hop)");
    sub->add_option("--model", o->model, "Trained model (pointwise, entity-hop)");
    sub->add_option("--questions", o->questions, "Questions (JSONL)")->required();
    sub->add_option("--out", o->out, "Output rankings (JSONL)")->required();
    sub->add_option("--k", o->k, "Passages returned per question");
    sub->add_option("--initial-k", o->initial_k, "Initial BM25 depth (default 25; 200 for pointwise)");
    sub->add_option("--ablation", o->ablation, "entity-only scores the hop target alone")
        ->check(CLI::IsMember({"none", "entity-only"}));
    sub->add_option("--threads", o->threads, "Worker threads (lexical encoder only)");
    sub->add_option("--fb-docs", o->rocchio.fb_docs, "Feedback documents (Rocchio and RM3)");
    sub->add_option("--fb-terms", o->rocchio.fb_terms, "Expansion terms (Rocchio and RM3)");
    sub->add_option("--alpha", o->rocchio.alpha, "Rocchio original-query weight");
    sub->add_option("--beta", o->rocchio.beta, "Rocchio feedback weight");
    sub->add_option("--lambda", o->rm3.lambda, "RM3 original-query interpolation weight");
    sub->add_option("--rocchio-first-pass", o->rocchio_first_pass, "Rocchio first-pass scorer")
        ->check(CLI::IsMember({"ql", "tfidf"}));
    o->chains.add(sub);
    o->retrieval.add(sub);
    o->encoder.add(sub);
    auto run = std::make_shared<Run>();
    run->app = sub;
    run->name = "retrieve";
    sub->add_option("--manifest", run->manifest_path, "Manifest path (default <out>.manifest.json)");
    actions.push_back([sub, o, run] {
        if (!sub->parsed()) {
            return;
        }
        Mode mode = mode_from_string(o->mode);
        if (o->ablation != "none" && mode != Mode::entity_hop) {
            throw InvalidArgument("--ablation applies to --mode entity-hop only");
        }
        if (o->k < 1) {
            throw InvalidArgument("--k must be >= 1");
        }
        PipelineConfig pc;
        pc.retrieval = o->retrieval.params();
        pc.initial_k = o->initial_k.value_or(25);
        pc.pointwise_initial_k = o->initial_k.value_or(200);
        pc.caps = {o->chains.per_mention, o->chains.per_question};
        pc.rocchio = o->rocchio;
        pc.rocchio.validate();
        pc.rm3.lambda = o->rm3.lambda;
        pc.rm3.fb_docs = o->rocchio.fb_docs;
        pc.rm3.fb_terms = o->rocchio.fb_terms;
        pc.rm3.validate();
        pc.rocchio_first_pass = o->rocchio_first_pass == "tfidf" ? Scorer::tfidf : Scorer::ql;
        pc.threads = o->threads;

        auto index = load_index_file(*run, o->index);
        auto questions = load_questions_file(*run, o->questions);
        std::optional<Corpus> corpus;
        std::optional<AliasTable> table;
        std::optional<RerankModel> model;
        std::unique_ptr<Encoder> encoder;
        SystemInputs in;
        in.index = &index;
        if (mode == Mode::pointwise || mode == Mode::entity_hop) {
            corpus = load_corpus_file(*run, o->corpus);
            model = load_model_file(*run, o->model);
            if (mode == Mode::entity_hop) {
                table = load_alias_file(*run, o->alias);
                Head want = o->ablation == "entity-only" ? Head::entity_only : Head::chain;
                if (model->head != want) {
                    throw InvalidArgument("model head is '" + to_string(model->head) + "' but this run needs '"
                                          + to_string(want) + "' (train with --head " + to_string(want) + ")");
                }
                in.table = &*table;
            } else if (model->head != Head::pointwise) {
                throw InvalidArgument("pointwise mode needs a model trained with --head pointwise");
            }
            auto ec = o->encoder.config(pc.retrieval, *run);
            model->check_encoder(ec);
            encoder = make_encoder(ec, index);
            in.corpus = &*corpus;
            in.model = &*model;
            in.encoder = encoder.get();
        }
        auto rankings = run_system(mode, in, questions, o->k, pc);
        std::ostringstream out;
        write_rankings_jsonl(out, questions, rankings);
        write_text(o->out, out.str());
        run->output(o->out);
        run->extra["initial_k"] = mode == Mode::pointwise ? pc.pointwise_initial_k : pc.initial_k;
        run->write_manifest();
    });
}

void setup_eval(CLI::App& app, std::vector<std::function<void()>>& actions)
{
    auto* sub = app.add_subcommand("eval", "Score ranking files against gold supporting passages");
    struct Opts {
        std::vector<std::string> runs;
        std::string questions, corpus, csv, json_out, md;
        bool hop_split = false;
        bool reference = false;
    };
    auto o = std::make_shared<Opts>();
    sub->add_option("--run", o->runs, "System rankings as NAME=PATH (repeatable; row order follows)")->required();
    sub->add_option("--questions", o->questions, "Questions with supporting ids (JSONL)")->required();
    sub->add_option("--corpus", o->corpus, "Corpus, needed by --hop-split");
    sub->add_flag("--hop-split", o->hop_split, "Add rows per single-hop / multi-hop slice");
    sub->add_flag("--reference", o->reference, "Append published full-scale reference rows");
    sub->add_option("--csv", o->csv, "CSV report path");
    sub->add_option("--json", o->json_out, "JSON report path");
    sub->add_option("--md", o->md, "Markdown report path");
    auto run = std::make_shared<Run>();
    run->app = sub;
    run->name = "eval";
    sub->add_option("--manifest", run->manifest_path, "Manifest path (default <first report>.manifest.json)");
    actions.push_back([sub, o, run] {
        if (!sub->parsed()) {
            return;
        }
        if (o->csv.empty() && o->json_out.empty() && o->md.empty()) {
            throw InvalidArgument("eval needs at least one of --csv, --json, --md");
        }
        auto questions = load_questions_file(*run, o->questions);
        std::map<std::string, std::set<std::string>> slices;
        if (o->hop_split) {
            if (o->corpus.empty()) {
                throw InvalidArgument("--hop-split needs --corpus");
            }
            auto corpus = load_corpus_file(*run, o->corpus);
            for (const auto& q : questions) {
                slices[to_string(classify_hop(q, corpus))].insert(q.qid);
            }
        }
        std::vector<ReportRow> rows;
        for (const auto& arg : o->runs) {
            auto eq = arg.find('=');
            if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size()) {
                throw InvalidArgument("--run expects NAME=PATH, got '" + arg + "'");
            }
            auto name = arg.substr(0, eq);
            auto path = arg.substr(eq + 1);
            require_artifact(path, "rankings", "--run", "retrieve");
            run->input(path);
            auto outputs = with_file(path, [&] {
                auto in = detail::open_input(path);
                return read_rankings_jsonl(in);
            });
            auto result = with_file(path, [&] { return evaluate(outputs, questions); });
            rows.push_back({name, "all", result.overall, false});
            for (const auto& [slice, qids] : slices) {
                rows.push_back({name, slice, subset_metrics(result, qids), false});
            }
        }
        if (o->reference) {
            for (auto& r : full_scale_reference_rows()) {
                rows.push_back(std::move(r));
            }
        }
        if (!o->csv.empty()) {
            std::ostringstream out;
            write_report_csv(out, rows);
            write_text(o->csv, out.str());
            run->output(o->csv);
        }
        if (!o->json_out.empty()) {
            write_text(o->json_out, report_json(rows).dump(1) + "\n");
            run->output(o->json_out);
        }
        if (!o->md.empty()) {
            std::ostringstream out;
            write_report_markdown(out, rows);
            write_text(o->md, out.str());
            run->output(o->md);
        }
        run->write_manifest();
    });
}

void setup_synth(CLI::App& app, std::vector<std::function<void()>>& actions)
{
    auto* sub = app.add_subcommand("synth", "Generate a synthetic bridge-entity bundle");
    struct Opts {
        std::string out;
        SynthConfig config;
    };
    auto o = std::make_shared<Opts>();
    auto& c = o->config;
    sub->add_option("--out", o->out, "Output directory")->required();
    sub->add_option("--seed", c.seed, "Random seed");
    sub->add_option("--entities", c.n_entities, "Entity passages");
    sub->add_option("--distractors", c.n_distractors, "Distractor passages");
    sub->add_option("--questions", c.n_questions, "Evaluation questions");
    sub->add_option("--train-questions", c.n_train_questions, "Training questions");
    sub->add_option("--vocab", c.vocab_size, "Vocabulary size");
    sub->add_option("--overlap", c.overlap, "Share of question terms found in the answer passage");
    sub->add_option("--single-hop-fraction", c.single_hop_fraction, "Share of single-hop questions");
    sub->add_option("--question-terms", c.question_terms, "Content terms per question");
    sub->add_option("--confounders", c.confounders_per_question, "Distractors seeded with each question's terms");
    auto run = std::make_shared<Run>();
    run->app = sub;
    run->name = "synth";
    sub->add_option("--manifest", run->manifest_path, "Run manifest path (default <out>/run.manifest.json)");
    actions.push_back([sub, o, run] {
        if (!sub->parsed()) {
            return;
        }
        auto bundle = generate(o->config);
        write_bundle(bundle, o->out);
        for (const char* f : {"corpus.jsonl", "links.jsonl", "questions.jsonl", "train_questions.jsonl",
                              "manifest.json"}) {
            run->output((std::filesystem::path(o->out) / f).string());
        }
        if (run->manifest_path.empty()) {
            run->manifest_path = (std::filesystem::path(o->out) / "run.manifest.json").string();
        }
        run->write_manifest();
    });
}

/// Splices `key = value` lines from the subcommand's --config file into the
/// argument list. Keys are long option names; explicit flags are left alone.
std::vector<std::string> expand_config(CLI::App& app, std::vector<std::string> args)
{
    CLI::App* sub = nullptr;
    std::size_t config_at = 0;
    std::string config_path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (sub == nullptr) {
            sub = app.get_subcommand_no_throw(args[i]);
            continue;
        }
        if (args[i] == "--config" && i + 1 < args.size()) {
            config_at = i;
            config_path = args[i + 1];
        } else if (args[i].rfind("--config=", 0) == 0) {
            config_at = i;
            config_path = args[i].substr(9);
        }
    }
    if (sub == nullptr || config_path.empty()) {
        return args;
    }
    auto given = [&](const std::string& flag) {
        for (const auto& a : args) {
            if (a == flag || a.rfind(flag + "=", 0) == 0) {
                return true;
            }
        }
        return false;
    };
    auto trim = [](std::string s) {
        auto b = s.find_first_not_of(" \t\r");
        auto e = s.find_last_not_of(" \t\r");
        s = b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
            s = s.substr(1, s.size() - 2);
        }
        return s;
    };
    std::ifstream in(config_path);
    if (!in) {
        throw DataError("cannot open config file " + config_path);
    }
    std::vector<std::string> extra;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';' || t[0] == '[') {
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw InvalidArgument(config_path + ": line " + std::to_string(lineno) + ": expected key = value");
        }
        auto key = trim(t.substr(0, eq));
        auto value = trim(t.substr(eq + 1));
        auto flag = "--" + key;
        const auto* opt = sub->get_option_no_throw(flag);
        if (opt == nullptr || key == "config") {
            throw InvalidArgument(config_path + ": line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
        if (given(flag)) {
            continue;
        }
        if (opt->get_expected_min() == 0) {
            if (value == "true" || value == "1" || value == "yes") {
                extra.push_back(flag);
            }
            continue;
        }
        extra.push_back(flag);
        extra.push_back(value);
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(config_at),
               args.begin() + static_cast<std::ptrdiff_t>(config_at) + (args[config_at] == "--config" ? 2 : 1));
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"hopir: entity-hop multi-passage retrieval"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tool_version);
    app.option_defaults()->always_capture_default();
    std::vector<std::function<void()>> actions;
    setup_ingest(app, actions);
    setup_tag(app, actions);
    setup_index(app, actions);
    setup_alias(app, actions);
    setup_chains(app, actions);
    setup_train(app, actions);
    setup_retrieve(app, actions);
    setup_eval(app, actions);
    setup_synth(app, actions);
    for (auto* sub : app.get_subcommands({})) {
        sub->add_option("--config", "key=value settings file; command-line flags take precedence");
    }

    std::vector<std::string> args(argv, argv + argc);
    try {
        args = expand_config(app, std::move(args));
    } catch (const std::exception& e) {
        std::cerr << "hopir: " << e.what() << '\n';
        return Exit::usage;
    }
    std::vector<char*> cargs;
    for (auto& a : args) {
        cargs.push_back(a.data());
    }
    try {
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? Exit::ok : Exit::usage;
    }
    try {
        for (auto& action : actions) {
            action();
        }
    } catch (const RemoteError& e) {
        std::cerr << "hopir: remote encoder error: " << e.what() << '\n';
        return Exit::remote;
    } catch (const InvalidArgument& e) {
        std::cerr << "hopir: " << e.what() << '\n';
        return Exit::usage;
    } catch (const DataError& e) {
        std::cerr << "hopir: " << e.what() << '\n';
        return Exit::data;
    } catch (const std::exception& e) {
        std::cerr << "hopir: " << e.what() << '\n';
        return Exit::data;
    }
    return Exit::ok;
}
