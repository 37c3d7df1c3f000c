// s2v: self-supervised code embeddings over ASTs.
// Subcommands cover the full pipeline: parse -> vocab -> pretrain -> embed ->
// cluster/clone/search, plus finetune/name for supervised reuse and explain
// for attention/perturbation reports.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "s2v/ast_json.hpp"
#include "s2v/corpus.hpp"
#include "s2v/downstream.hpp"
#include "s2v/interpret.hpp"
#include "s2v/minilang.hpp"
#include "s2v/parallel.hpp"
#include "s2v/trainer.hpp"

namespace fs = std::filesystem;
using namespace s2v;

namespace {

struct RunConfig {
    TrainConfig train;
    std::string corpus_dir;
    std::string vocab;       // vocabulary file stem
    std::string ckpt;        // checkpoint path
    std::string index;       // embedding index file
    std::string report_dir;  // unused by most commands; kept for config files
};

// flat key=value config file; '#' comments and blank lines allowed;
// unknown keys are errors
void apply_config_file(const std::string& path, RunConfig& cfg) {
    std::istringstream in(read_file(path));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string trimmed = line;
        trimmed.erase(0, trimmed.find_first_not_of(" \t"));
        if (trimmed.empty() || trimmed[0] == '#') continue;
        std::size_t eq = trimmed.find('=');
        if (eq == std::string::npos)
            throw UsageError(path + ":" + std::to_string(lineno) +
                             ": expected key=value");
        std::string key = trimmed.substr(0, eq);
        std::string value = trimmed.substr(eq + 1);
        auto num = [&]() -> double {
            try {
                return std::stod(value);
            } catch (const std::exception&) {
                throw UsageError(path + ":" + std::to_string(lineno) +
                                 ": bad number for " + key);
            }
        };
        if (key == "learning_rate") cfg.train.learning_rate = num();
        else if (key == "adam_beta1") cfg.train.adam_beta1 = num();
        else if (key == "adam_beta2") cfg.train.adam_beta2 = num();
        else if (key == "adam_eps") cfg.train.adam_eps = num();
        else if (key == "epochs") cfg.train.epochs = int(num());
        else if (key == "batch_size") cfg.train.batch_size = int(num());
        else if (key == "seed") cfg.train.seed = std::uint64_t(num());
        else if (key == "dim") cfg.train.dim = std::size_t(num());
        else if (key == "num_conv_layers") cfg.train.num_conv_layers = int(num());
        else if (key == "init_mode") cfg.train.init_mode = parse_init_mode(value);
        else if (key == "label_mode") cfg.train.label_mode = parse_label_mode(value);
        else if (key == "aggregate_mode")
            cfg.train.aggregate_mode = parse_aggregate_mode(value);
        else if (key == "min_count") cfg.train.min_count = std::uint64_t(num());
        else if (key == "deterministic")
            cfg.train.deterministic = value == "true" || value == "1";
        else if (key == "jobs") cfg.train.jobs = int(num());
        else if (key == "include_operator_tokens")
            cfg.train.include_operator_tokens = value == "true" || value == "1";
        else if (key == "init_scale") cfg.train.init_scale = num();
        else if (key == "corpus_dir") cfg.corpus_dir = value;
        else if (key == "vocab") cfg.vocab = value;
        else if (key == "ckpt") cfg.ckpt = value;
        else if (key == "index") cfg.index = value;
        else if (key == "report_dir") cfg.report_dir = value;
        else
            throw UsageError(path + ":" + std::to_string(lineno) +
                             ": unknown config key '" + key + "'");
    }
}

struct LoadedVocabs {
    Vocab type_vocab, token_vocab, label_vocab;
    std::map<std::string, std::string> hashes;
};

std::string vocab_file(const std::string& stem, const std::string& kind) {
    return stem + "." + kind + ".tsv";
}

LoadedVocabs load_vocabs(const std::string& stem, LabelMode label_mode) {
    if (stem.empty()) throw UsageError("--vocab is required");
    LoadedVocabs v;
    v.type_vocab = load_vocab(vocab_file(stem, "type"));
    v.token_vocab = load_vocab(vocab_file(stem, "token"));
    v.hashes["type"] = sha256_file(vocab_file(stem, "type"));
    v.hashes["token"] = sha256_file(vocab_file(stem, "token"));
    v.hashes["subtree"] = sha256_file(vocab_file(stem, "subtree"));
    switch (label_mode) {
        case LabelMode::subtree:
            v.label_vocab = load_vocab(vocab_file(stem, "subtree"));
            break;
        case LabelMode::token:
            v.label_vocab = load_vocab(vocab_file(stem, "token"));
            break;
        case LabelMode::method_name:
            v.label_vocab = load_vocab(vocab_file(stem, "names"));
            v.hashes["names"] = sha256_file(vocab_file(stem, "names"));
            break;
    }
    return v;
}

Model load_model(const std::string& ckpt_path, const std::string& vocab_stem) {
    if (ckpt_path.empty()) throw UsageError("--ckpt is required");
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    LoadedVocabs v = load_vocabs(vocab_stem, ckpt.config.label_mode);
    verify_fingerprints(ckpt, v.hashes);
    return model_from_checkpoint(ckpt, std::move(v.type_vocab),
                                 std::move(v.token_vocab),
                                 std::move(v.label_vocab));
}

void write_report(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
    } else {
        write_file(out_path, text);
        std::cout << "wrote " << out_path << "\n";
    }
}

std::map<std::string, int> truth_to_ints(
    const std::map<std::string, std::string>& labels) {
    std::map<std::string, int> class_ids;
    std::map<std::string, int> out;
    for (const auto& [id, label] : labels) {
        auto [it, fresh] = class_ids.emplace(label, int(class_ids.size()));
        out[id] = it->second;
    }
    return out;
}

// --- subcommands ---

int cmd_parse(const std::vector<std::string>& files,
              const std::string& out_dir) {
    if (!out_dir.empty()) fs::create_directories(out_dir);
    for (const auto& file : files) {
        Ast ast = parse_minilang(read_file(file), fs::path(file).stem().string());
        fs::path out = out_dir.empty()
                           ? fs::path(file).replace_extension(".json")
                           : fs::path(out_dir) /
                                 (fs::path(file).stem().string() + ".json");
        save_ast_file(ast, out.string());
        std::cout << "parsed " << file << " -> " << out.string() << " ("
                  << ast.size() << " nodes)\n";
    }
    return 0;
}

int cmd_gen(const std::string& out_dir, std::uint64_t seed, int per_class,
            const std::string& kind) {
    std::vector<SyntheticProgram> programs;
    if (kind == "synthetic") programs = synthetic_corpus(seed, per_class);
    else if (kind == "discriminative")
        programs = discriminative_corpus(seed, per_class);
    else
        throw UsageError("gen: kind must be synthetic or discriminative");
    fs::create_directories(out_dir);
    std::ostringstream labels;
    for (const auto& p : programs) {
        write_file((fs::path(out_dir) / (p.source_id + ".mini")).string(),
                   p.source);
        labels << p.source_id << "\t" << p.label << "\n";
    }
    write_file((fs::path(out_dir) / "labels.tsv").string(), labels.str());
    std::cout << "generated " << programs.size() << " programs in " << out_dir
              << "\n";
    return 0;
}

int cmd_vocab(const RunConfig& cfg, const std::string& out_stem) {
    std::vector<Ast> corpus = load_corpus_dir(cfg.corpus_dir);
    Vocab subtree = build_subtree_vocab(corpus, cfg.train.min_count,
                                        cfg.train.include_operator_tokens);
    Vocab token = build_token_vocab(corpus, cfg.train.min_count);
    Vocab type = build_type_vocab(corpus);
    save_vocab(subtree, vocab_file(out_stem, "subtree"));
    save_vocab(token, vocab_file(out_stem, "token"));
    save_vocab(type, vocab_file(out_stem, "type"));
    std::cout << "subtree vocabulary: " << subtree.size() << " entries\n"
              << "token vocabulary: " << token.size() << " entries\n"
              << "type vocabulary: " << type.size() << " entries\n";
    try {
        Vocab names = build_name_vocab(corpus, cfg.train.min_count);
        save_vocab(names, vocab_file(out_stem, "names"));
        std::cout << "name vocabulary: " << names.size() << " entries\n";
    } catch (const DataError&) {
        std::cout << "name vocabulary: skipped (no function names survive "
                     "min_count)\n";
    }
    return 0;
}

int cmd_pretrain(const RunConfig& cfg) {
    std::vector<Ast> corpus = load_corpus_dir(cfg.corpus_dir);
    LoadedVocabs v = load_vocabs(cfg.vocab, cfg.train.label_mode);
    TrainStats stats;
    Model model = train(corpus, v.type_vocab, v.token_vocab, v.label_vocab,
                        cfg.train, &stats);
    for (std::size_t e = 0; e < stats.epoch_mean_loss.size(); ++e)
        std::cout << "epoch " << e << " loss "
                  << format_double(stats.epoch_mean_loss[e]) << "\n";
    std::cout << "trained " << stats.trained_asts << " snippets ("
              << stats.skipped_asts << " skipped label-free) in "
              << stats.steps << " steps\n";
    if (cfg.ckpt.empty()) throw UsageError("--ckpt is required");
    Checkpoint ckpt = checkpoint_from_model(
        model, stats.steps, stats.epoch_mean_loss.back(), v.hashes);
    save_checkpoint(ckpt, cfg.ckpt);
    std::cout << "wrote " << cfg.ckpt << "\n";
    return 0;
}

int cmd_embed(const RunConfig& cfg, const std::string& out_path,
              const std::string& language, const std::string& manifest_path) {
    std::vector<Ast> corpus = load_corpus_dir(cfg.corpus_dir);
    Model model = load_model(cfg.ckpt, cfg.vocab);
    std::map<std::string, std::pair<std::string, std::string>> manifest;
    if (!manifest_path.empty()) {
        std::istringstream in(read_file(manifest_path));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::size_t t1 = line.find('\t');
            if (t1 == std::string::npos) continue;
            std::size_t t2 = line.find('\t', t1 + 1);
            std::string id = line.substr(0, t1);
            std::string lang = t2 == std::string::npos
                                   ? line.substr(t1 + 1)
                                   : line.substr(t1 + 1, t2 - t1 - 1);
            std::string task =
                t2 == std::string::npos ? "" : line.substr(t2 + 1);
            manifest[id] = {lang, task};
        }
    }
    std::vector<IndexEntry> rows(corpus.size());
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) num_threads(par::threads())
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        try {
            EncodeResult enc = model.encode_ast(corpus[i]);
            IndexEntry e;
            e.source_id = enc.source_id;
            e.language = language;
            e.vec = enc.code_vector.values;
            auto it = manifest.find(enc.source_id);
            if (it != manifest.end()) {
                e.language = it->second.first;
                e.task_id = it->second.second;
            }
            rows[i] = std::move(e);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    EmbeddingIndex index;
    for (auto& e : rows) index.add(std::move(e));
    std::string out = out_path.empty() ? cfg.index : out_path;
    if (out.empty()) throw UsageError("--out (or index=) is required");
    write_file(out, index_to_tsv(index));
    std::cout << "wrote " << index.entries.size() << " embeddings to " << out
              << "\n";
    return 0;
}

int cmd_cluster(const std::string& index_path, int k, std::uint64_t seed,
                int max_iters, const std::string& truth_path,
                const std::string& out_path) {
    EmbeddingIndex index = index_from_tsv(read_file(index_path));
    std::vector<int> assignment = kmeans(index, k, seed, max_iters);
    std::ostringstream out;
    out << "# cluster k=" << k << " seed=" << seed;
    if (!truth_path.empty()) {
        auto labels = load_labels_tsv(truth_path);
        auto ids = truth_to_ints(labels);
        std::vector<int> truth;
        for (const auto& e : index.entries) {
            auto it = ids.find(e.source_id);
            if (it == ids.end())
                throw DataError("no truth label for " + e.source_id);
            truth.push_back(it->second);
        }
        double ari = adjusted_rand_index(assignment, truth);
        out << " ari=" << format_double(ari);
        std::cout << "ari " << format_double(ari) << "\n";
    }
    out << "\n";
    for (std::size_t i = 0; i < index.entries.size(); ++i)
        out << index.entries[i].source_id << "\t" << assignment[i] << "\n";
    write_report(out_path, out.str());
    return 0;
}

int cmd_clone(const std::string& index_path, double threshold,
              const std::string& truth_path, const std::string& out_path) {
    EmbeddingIndex index = index_from_tsv(read_file(index_path));
    std::size_t n = index.entries.size(), d = index.dim;
    std::vector<double> flat(n * d);
    for (std::size_t i = 0; i < n; ++i)
        std::copy(index.entries[i].vec.begin(), index.entries[i].vec.end(),
                  flat.begin() + i * d);
    std::vector<double> sims(n * n);
    kern::pairwise_cosine_omp(flat.data(), n, d, sims.data());

    std::map<std::string, std::string> labels;
    if (!truth_path.empty()) labels = load_labels_tsv(truth_path);
    std::vector<std::pair<bool, bool>> outcomes;
    std::ostringstream out;
    out << "# clone threshold=" << format_double(threshold);
    std::ostringstream body;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double sim = sims[i * n + j];
            bool predicted = sim >= threshold;
            body << index.entries[i].source_id << "\t"
                 << index.entries[j].source_id << "\t" << format_double(sim)
                 << "\t" << (predicted ? 1 : 0) << "\n";
            if (!labels.empty()) {
                auto li = labels.find(index.entries[i].source_id);
                auto lj = labels.find(index.entries[j].source_id);
                if (li == labels.end() || lj == labels.end())
                    throw DataError("missing truth label for a clone pair");
                outcomes.emplace_back(predicted, li->second == lj->second);
            }
        }
    }
    if (!outcomes.empty()) {
        Prf m = clone_metrics(outcomes);
        out << " precision=" << format_double(m.precision)
            << " recall=" << format_double(m.recall)
            << " f1=" << format_double(m.f1);
        std::cout << "precision " << format_double(m.precision) << "\n"
                  << "recall " << format_double(m.recall) << "\n"
                  << "f1 " << format_double(m.f1) << "\n";
    }
    out << "\n" << body.str();
    write_report(out_path, out.str());
    return 0;
}

int cmd_search(const std::string& index_path, const std::string& query_path,
               int k, const std::string& exclude_lang,
               const std::string& out_path) {
    EmbeddingIndex index = index_from_tsv(read_file(index_path));
    EmbeddingIndex queries = index_from_tsv(read_file(query_path));
    if (queries.entries.empty()) throw DataError("empty query file");
    std::ostringstream out;
    std::ostringstream body;
    std::vector<std::pair<std::vector<std::string>, std::string>> mrr_queries;
    for (const auto& q : queries.entries) {
        auto hits = search(q.vec, index, k,
                           exclude_lang == "query" ? q.language : exclude_lang);
        std::vector<std::string> ranked;
        for (std::size_t r = 0; r < hits.size(); ++r) {
            body << q.source_id << "\t" << (r + 1) << "\t"
                 << hits[r].source_id << "\t" << format_double(hits[r].score)
                 << "\n";
            ranked.push_back(hits[r].source_id);
        }
        if (!q.task_id.empty()) {
            // the relevant result shares the query's task id
            for (const auto& e : index.entries) {
                if (e.source_id != q.source_id && e.task_id == q.task_id) {
                    mrr_queries.emplace_back(ranked, e.source_id);
                    break;
                }
            }
        }
    }
    out << "# search k=" << k;
    if (!exclude_lang.empty()) out << " exclude_lang=" << exclude_lang;
    if (!mrr_queries.empty()) {
        double mrr = mean_reciprocal_rank(mrr_queries);
        out << " mrr=" << format_double(mrr);
        std::cout << "mrr " << format_double(mrr) << "\n";
    }
    out << "\n" << body.str();
    write_report(out_path, out.str());
    return 0;
}

int cmd_finetune(const RunConfig& cfg, const std::string& labels_path,
                 double fraction, const std::string& init, int epochs,
                 double lr, double test_fraction, const std::string& out_ckpt,
                 bool name_task) {
    std::vector<Ast> asts = load_corpus_dir(cfg.corpus_dir);
    LabeledCorpus corpus;
    if (name_task) {
        corpus = name_corpus(std::move(asts));
    } else {
        if (labels_path.empty()) throw UsageError("--labels is required");
        corpus = labeled_corpus(std::move(asts), load_labels_tsv(labels_path));
    }
    Model base = load_model(cfg.ckpt, cfg.vocab);
    FinetuneConfig fcfg;
    fcfg.fraction = fraction;
    if (init == "pretrained") fcfg.pretrained_init = true;
    else if (init == "random") fcfg.pretrained_init = false;
    else throw UsageError("--init must be pretrained or random");
    fcfg.epochs = epochs;
    fcfg.learning_rate = lr;
    fcfg.seed = cfg.train.seed;
    fcfg.test_fraction = test_fraction;
    fcfg.jobs = cfg.train.jobs;
    FinetuneReport report;
    Classifier cls = finetune(base, corpus, fcfg,
                              name_task ? TaskKind::name_prediction
                                        : TaskKind::classification,
                              &report);
    std::cout << "# " << (name_task ? "name" : "finetune")
              << " fraction=" << format_double(fraction) << " init=" << init
              << " train=" << report.train_count
              << " test=" << report.test_count << "\n";
    std::cout << "accuracy " << format_double(report.test_accuracy) << "\n";
    if (name_task) {
        std::cout << "subword_precision "
                  << format_double(report.name_scores.precision) << "\n"
                  << "subword_recall "
                  << format_double(report.name_scores.recall) << "\n"
                  << "subword_f1 " << format_double(report.name_scores.f1)
                  << "\n";
    }
    if (!out_ckpt.empty()) {
        LoadedVocabs v = load_vocabs(cfg.vocab, base.config.label_mode);
        save_classifier(cls, out_ckpt, v.hashes);
        std::cout << "wrote " << out_ckpt << "\n";
    }
    return 0;
}

int cmd_explain(const RunConfig& cfg, const std::string& file,
                const std::string& class_name, const std::string& out_path,
                const std::string& svg_path) {
    if (cfg.ckpt.empty()) throw UsageError("--ckpt is required");
    Checkpoint ckpt = load_checkpoint(cfg.ckpt);
    LoadedVocabs v = load_vocabs(cfg.vocab, ckpt.config.label_mode);
    verify_fingerprints(ckpt, v.hashes);
    Classifier cls = load_classifier(cfg.ckpt, v.type_vocab, v.token_vocab,
                                     v.label_vocab);
    std::string source;
    Ast ast;
    if (fs::path(file).extension() == ".json") {
        ast = load_ast_file(file);
    } else {
        source = read_file(file);
        ast = parse_minilang(source, fs::path(file).stem().string());
    }
    int cls_index = -1;
    for (std::size_t i = 0; i < cls.classes.size(); ++i)
        if (cls.classes[i] == class_name) cls_index = int(i);
    if (cls_index < 0) {
        try {
            cls_index = std::stoi(class_name);
        } catch (const std::exception&) {
            std::string all;
            for (const auto& c : cls.classes) all += c + " ";
            throw UsageError("--class must name a known class (one of: " +
                             all + ")");
        }
    }
    ExplanationReport report = explain(cls, ast, cls_index);
    std::cout << render_heat_text(ast, report.display_scores,
                                  source.empty() ? nullptr : &source);
    if (report.correlation.defined)
        std::cout << "# spearman(delta, attention_mass) = "
                  << format_double(report.correlation.value) << "\n";
    else
        std::cout << "# spearman(delta, attention_mass) undefined\n";
    if (!out_path.empty()) {
        write_file(out_path, report_to_json(report));
        std::cout << "wrote " << out_path << "\n";
    }
    if (!svg_path.empty()) {
        write_file(svg_path, render_heat_svg(ast, report.display_scores));
        std::cout << "wrote " << svg_path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig cfg;

    // config file first (S2V_CONFIG or --config), flags override
    try {
        std::string config_path;
        if (const char* env = std::getenv("S2V_CONFIG")) config_path = env;
        for (int i = 1; i + 1 < argc; ++i)
            if (std::string(argv[i]) == "--config") config_path = argv[i + 1];
        if (!config_path.empty()) apply_config_file(config_path, cfg);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    CLI::App app{"self-supervised code embeddings over ASTs"};
    app.require_subcommand(1);
    std::string config_flag;
    app.add_option("--config", config_flag,
                   "key=value config file (S2V_CONFIG names a default)");
    app.add_option("--jobs", cfg.train.jobs, "worker cap (0 = all cores)");

    std::string init_mode_s, label_mode_s, aggregate_mode_s;

    auto add_train_flags = [&](CLI::App* sub) {
        sub->add_option("--lr", cfg.train.learning_rate, "Adam learning rate");
        sub->add_option("--epochs", cfg.train.epochs, "training epochs");
        sub->add_option("--batch-size", cfg.train.batch_size, "batch size");
        sub->add_option("--seed", cfg.train.seed, "RNG seed");
        sub->add_option("--dim", cfg.train.dim, "embedding dimension");
        sub->add_option("--layers", cfg.train.num_conv_layers,
                        "convolution layers");
        sub->add_option("--init-mode", init_mode_s, "type|token|combine");
        sub->add_option("--label-mode", label_mode_s,
                        "subtree|token|method_name");
        sub->add_option("--aggregate-mode", aggregate_mode_s, "attention|max");
        sub->add_flag("--deterministic,!--no-deterministic",
                      cfg.train.deterministic,
                      "bitwise-reproducible training");
    };

    // parse
    auto* parse_cmd = app.add_subcommand("parse", "MiniLang -> AST JSON");
    std::vector<std::string> parse_files;
    std::string parse_out_dir;
    parse_cmd->add_option("files", parse_files, "MiniLang source files")
        ->required();
    parse_cmd->add_option("--out-dir", parse_out_dir, "output directory");

    // gen
    auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic corpus");
    std::string gen_dir, gen_kind = "synthetic";
    std::uint64_t gen_seed = 1;
    int gen_per_class = 50;
    gen_cmd->add_option("out_dir", gen_dir, "output directory")->required();
    gen_cmd->add_option("--seed", gen_seed, "generator seed");
    gen_cmd->add_option("--per-class", gen_per_class, "programs per class");
    gen_cmd->add_option("--kind", gen_kind, "synthetic|discriminative");

    // vocab
    auto* vocab_cmd = app.add_subcommand("vocab", "build vocabularies");
    std::string vocab_out;
    vocab_cmd->add_option("corpus", cfg.corpus_dir, "corpus directory")
        ->required();
    vocab_cmd->add_option("--min-count", cfg.train.min_count,
                          "occurrence threshold");
    vocab_cmd->add_option("--out", vocab_out, "output file stem")->required();
    vocab_cmd->add_flag("--include-op-tokens",
                        cfg.train.include_operator_tokens,
                        "binop operator tokens join the subtree identity");

    // pretrain
    auto* pre_cmd = app.add_subcommand("pretrain", "train the encoder");
    pre_cmd->add_option("corpus", cfg.corpus_dir, "corpus directory")
        ->required();
    pre_cmd->add_option("--vocab", cfg.vocab, "vocabulary stem");
    pre_cmd->add_option("--ckpt", cfg.ckpt, "checkpoint output path");
    add_train_flags(pre_cmd);

    // embed
    auto* embed_cmd = app.add_subcommand("embed", "write code vectors");
    std::string embed_out, embed_lang = "mini", embed_manifest;
    embed_cmd->add_option("corpus", cfg.corpus_dir, "corpus directory")
        ->required();
    embed_cmd->add_option("--ckpt", cfg.ckpt, "checkpoint path");
    embed_cmd->add_option("--vocab", cfg.vocab, "vocabulary stem");
    embed_cmd->add_option("--out", embed_out, "embedding TSV path");
    embed_cmd->add_option("--language", embed_lang, "language tag");
    embed_cmd->add_option("--manifest", embed_manifest,
                          "source_id/language/task_id metadata TSV");

    // cluster
    auto* cluster_cmd = app.add_subcommand("cluster", "k-means over vectors");
    std::string cluster_truth, cluster_out;
    int cluster_k = 0, cluster_iters = 100;
    std::uint64_t cluster_seed = 1;
    cluster_cmd->add_option("embeddings", cfg.index, "embedding TSV")
        ->required();
    cluster_cmd->add_option("--k", cluster_k, "cluster count")->required();
    cluster_cmd->add_option("--seed", cluster_seed, "seeding RNG");
    cluster_cmd->add_option("--max-iters", cluster_iters, "iteration cap");
    cluster_cmd->add_option("--truth", cluster_truth, "labels.tsv for ARI");
    cluster_cmd->add_option("--out", cluster_out, "report path");

    // clone
    auto* clone_cmd = app.add_subcommand("clone", "pairwise clone detection");
    std::string clone_truth, clone_out;
    double clone_threshold = 0.8;
    clone_cmd->add_option("embeddings", cfg.index, "embedding TSV")
        ->required();
    clone_cmd->add_option("--threshold", clone_threshold,
                          "cosine clone threshold");
    clone_cmd->add_option("--truth", clone_truth, "labels.tsv for P/R/F1");
    clone_cmd->add_option("--out", clone_out, "report path");

    // search
    auto* search_cmd = app.add_subcommand("search", "top-K similar snippets");
    std::string search_query, search_exclude, search_out;
    int search_k = 10;
    search_cmd->add_option("embeddings", cfg.index, "embedding TSV")
        ->required();
    search_cmd->add_option("--query", search_query, "query embedding TSV")
        ->required();
    search_cmd->add_option("--k", search_k, "results per query");
    search_cmd->add_option("--exclude-lang", search_exclude,
                           "filter candidates of this language "
                           "('query' = each query's own)");
    search_cmd->add_option("--out", search_out, "report path");

    // finetune
    auto* ft_cmd = app.add_subcommand("finetune", "supervised classification");
    std::string ft_labels, ft_init = "pretrained", ft_out_ckpt;
    double ft_fraction = 1.0, ft_lr = 0.001, ft_test_fraction = 0.3;
    int ft_epochs = 15;
    ft_cmd->add_option("corpus", cfg.corpus_dir, "labeled corpus directory")
        ->required();
    ft_cmd->add_option("--labels", ft_labels, "labels.tsv");
    ft_cmd->add_option("--ckpt", cfg.ckpt, "pretrained checkpoint");
    ft_cmd->add_option("--vocab", cfg.vocab, "vocabulary stem");
    ft_cmd->add_option("--fraction", ft_fraction, "train-pool fraction");
    ft_cmd->add_option("--init", ft_init, "pretrained|random");
    ft_cmd->add_option("--epochs", ft_epochs, "fine-tuning epochs");
    ft_cmd->add_option("--lr", ft_lr, "fine-tuning learning rate");
    ft_cmd->add_option("--test-fraction", ft_test_fraction, "held-out share");
    ft_cmd->add_option("--seed", cfg.train.seed, "RNG seed");
    ft_cmd->add_option("--out-ckpt", ft_out_ckpt, "classifier checkpoint");

    // name
    auto* name_cmd = app.add_subcommand("name", "method-name prediction");
    std::string name_init = "pretrained", name_out_ckpt;
    double name_fraction = 1.0, name_lr = 0.001, name_test_fraction = 0.3;
    int name_epochs = 15;
    name_cmd->add_option("corpus", cfg.corpus_dir, "corpus directory")
        ->required();
    name_cmd->add_option("--ckpt", cfg.ckpt, "pretrained checkpoint");
    name_cmd->add_option("--vocab", cfg.vocab, "vocabulary stem");
    name_cmd->add_option("--fraction", name_fraction, "train-pool fraction");
    name_cmd->add_option("--init", name_init, "pretrained|random");
    name_cmd->add_option("--epochs", name_epochs, "fine-tuning epochs");
    name_cmd->add_option("--lr", name_lr, "fine-tuning learning rate");
    name_cmd->add_option("--test-fraction", name_test_fraction,
                         "held-out share");
    name_cmd->add_option("--seed", cfg.train.seed, "RNG seed");
    name_cmd->add_option("--out-ckpt", name_out_ckpt,
                         "classifier checkpoint");

    // explain
    auto* explain_cmd =
        app.add_subcommand("explain", "attention/perturbation report");
    std::string explain_file, explain_class, explain_out, explain_svg;
    explain_cmd->add_option("file", explain_file, ".mini or .json snippet")
        ->required();
    explain_cmd->add_option("--ckpt", cfg.ckpt, "classifier checkpoint");
    explain_cmd->add_option("--vocab", cfg.vocab, "vocabulary stem");
    explain_cmd->add_option("--class", explain_class,
                            "correct class name or index")
        ->required();
    explain_cmd->add_option("--out", explain_out, "JSON report path");
    explain_cmd->add_option("--svg", explain_svg, "SVG rendering path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!init_mode_s.empty())
            cfg.train.init_mode = parse_init_mode(init_mode_s);
        if (!label_mode_s.empty())
            cfg.train.label_mode = parse_label_mode(label_mode_s);
        if (!aggregate_mode_s.empty())
            cfg.train.aggregate_mode = parse_aggregate_mode(aggregate_mode_s);
        par::set_max_jobs(cfg.train.jobs);

        if (parse_cmd->parsed()) return cmd_parse(parse_files, parse_out_dir);
        if (gen_cmd->parsed())
            return cmd_gen(gen_dir, gen_seed, gen_per_class, gen_kind);
        if (vocab_cmd->parsed()) return cmd_vocab(cfg, vocab_out);
        if (pre_cmd->parsed()) return cmd_pretrain(cfg);
        if (embed_cmd->parsed())
            return cmd_embed(cfg, embed_out, embed_lang, embed_manifest);
        if (cluster_cmd->parsed())
            return cmd_cluster(cfg.index, cluster_k, cluster_seed,
                               cluster_iters, cluster_truth, cluster_out);
        if (clone_cmd->parsed())
            return cmd_clone(cfg.index, clone_threshold, clone_truth,
                             clone_out);
        if (search_cmd->parsed())
            return cmd_search(cfg.index, search_query, search_k,
                              search_exclude, search_out);
        if (ft_cmd->parsed())
            return cmd_finetune(cfg, ft_labels, ft_fraction, ft_init,
                                ft_epochs, ft_lr, ft_test_fraction,
                                ft_out_ckpt, false);
        if (name_cmd->parsed())
            return cmd_finetune(cfg, "", name_fraction, name_init,
                                name_epochs, name_lr, name_test_fraction,
                                name_out_ckpt, true);
        if (explain_cmd->parsed())
            return cmd_explain(cfg, explain_file, explain_class, explain_out,
                               explain_svg);
        std::cerr << "error: no subcommand\n";
        return 1;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
