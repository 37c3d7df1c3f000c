#include "s2v/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "s2v/ast_json.hpp"
#include "s2v/minilang.hpp"

namespace fs = std::filesystem;

namespace s2v {

std::vector<Ast> load_corpus_dir(const std::string& dir) {
    if (!fs::is_directory(dir))
        throw DataError("corpus directory not found: " + dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        if (ext == ".json" || ext == ".mini") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<Ast> corpus;
    for (const auto& path : files) {
        if (path.extension() == ".json") {
            corpus.push_back(load_ast_file(path.string()));
        } else {
            corpus.push_back(
                parse_minilang(read_file(path.string()), path.stem().string()));
        }
    }
    if (corpus.empty())
        throw DataError("corpus directory has no .json/.mini files: " + dir);
    return corpus;
}

std::map<std::string, std::string> load_labels_tsv(const std::string& path) {
    std::istringstream in(read_file(path));
    std::map<std::string, std::string> labels;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw DataError("labels file: missing tab at line " +
                            std::to_string(lineno));
        labels[line.substr(0, tab)] = line.substr(tab + 1);
    }
    if (labels.empty()) throw DataError("labels file is empty: " + path);
    return labels;
}

LabeledCorpus labeled_corpus(std::vector<Ast> asts,
                             const std::map<std::string, std::string>& labels) {
    LabeledCorpus corpus;
    for (auto& ast : asts) {
        auto it = labels.find(ast.source_id);
        if (it == labels.end())
            throw DataError("no label for snippet " + ast.source_id);
        corpus.labels.push_back(it->second);
        corpus.asts.push_back(std::move(ast));
    }
    return corpus;
}

LabeledCorpus name_corpus(std::vector<Ast> asts) {
    LabeledCorpus corpus;
    for (auto& ast : asts) {
        NodeId fn = find_function_node(ast);
        if (fn < 0)
            throw DataError("snippet " + ast.source_id +
                            " has no function node for name prediction");
        corpus.labels.push_back(*ast.node(fn).token);
        corpus.asts.push_back(std::move(ast));
    }
    return corpus;
}

// --- generator ---

namespace {

const std::vector<std::string>& ident_pool() {
    static const std::vector<std::string> pool = {
        "a",   "b",   "c",   "n",   "m",    "i",    "j",    "k",
        "r",   "s",   "t",   "u",   "v",    "w",    "x",    "y",
        "z",   "acc", "tmp", "val", "sum",  "cnt",  "idx",  "len",
        "buf", "arr", "data", "item"};
    return pool;
}

struct NamePicker {
    Rng& rng;
    std::vector<std::string> taken;

    std::string fresh() {
        const auto& pool = ident_pool();
        for (int tries = 0; tries < 64; ++tries) {
            const std::string& cand = pool[rng.index(pool.size())];
            if (std::find(taken.begin(), taken.end(), cand) == taken.end()) {
                taken.push_back(cand);
                return cand;
            }
        }
        // pool exhausted: suffix a counter
        std::string cand = pool[rng.index(pool.size())] +
                           std::to_string(taken.size());
        taken.push_back(cand);
        return cand;
    }
};

std::string pick(Rng& rng, const std::vector<std::string>& options) {
    return options[rng.index(options.size())];
}

int lit(Rng& rng, int lo, int hi) {
    return lo + int(rng.index(std::size_t(hi - lo + 1)));
}

std::string method_name(Rng& rng, const std::string& cls) {
    static const std::map<std::string, std::vector<std::string>> verbs = {
        {"loop", {"sort", "scan", "fold", "total"}},
        {"branch", {"grade", "pick", "judge", "rank"}},
        {"call", {"combine", "blend", "compose", "chain"}},
        {"looped", {"cycle", "repeat"}},
        {"straight", {"settle", "finish"}}};
    static const std::map<std::string, std::vector<std::string>> nouns = {
        {"loop", {"Items", "Values", "Array", "Slots"}},
        {"branch", {"Score", "Level", "Cases", "Flags"}},
        {"call", {"Parts", "Results", "Words", "Pieces"}},
        {"looped", {"Steps", "Rounds"}},
        {"straight", {"Work", "Plan"}}};
    return pick(rng, verbs.at(cls)) + pick(rng, nouns.at(cls));
}

// array-loop heavy programs
std::string gen_loop(Rng& rng) {
    NamePicker names{rng, {}};
    std::string arr = names.fresh();
    std::string n = names.fresh();
    std::string acc = names.fresh();
    std::ostringstream out;
    out << "int " << method_name(rng, "loop") << "(int " << arr << ", int "
        << n << ") {\n";
    out << "    int " << acc << " = " << lit(rng, 0, 3) << ";\n";
    int loops = 1 + int(rng.index(2));
    for (int l = 0; l < loops; ++l) {
        std::string i = names.fresh();
        const char* cmp = rng.index(2) ? "<" : "<=";
        out << "    for (int " << i << " = 0; " << i << " " << cmp << " " << n;
        if (rng.index(2)) out << " - 1";
        out << "; " << i << " = " << i << " + 1) {\n";
        int body = 1 + int(rng.index(2));
        for (int s = 0; s < body; ++s) {
            switch (rng.index(3)) {
                case 0:
                    out << "        " << acc << " = " << acc << " + " << arr
                        << "[" << i << "];\n";
                    break;
                case 1:
                    out << "        " << arr << "[" << i << "] = " << arr
                        << "[" << i << " + 1] % " << lit(rng, 2, 9) << ";\n";
                    break;
                default:
                    out << "        if (" << arr << "[" << i << "] > " << arr
                        << "[" << i << " + 1]) {\n"
                        << "            " << arr << "[" << i << "] = " << acc
                        << ";\n        }\n";
                    break;
            }
        }
        out << "    }\n";
    }
    if (rng.index(2)) {
        out << "    while (" << acc << " > " << lit(rng, 10, 99) << ") {\n"
            << "        " << acc << " = " << acc << " - " << lit(rng, 2, 9)
            << ";\n    }\n";
    }
    out << "    return " << acc << ";\n}\n";
    return out.str();
}

// if/else ladders over scalars
std::string gen_branch(Rng& rng) {
    NamePicker names{rng, {}};
    std::string a = names.fresh();
    std::string b = names.fresh();
    std::string r = names.fresh();
    std::ostringstream out;
    out << "int " << method_name(rng, "branch") << "(int " << a << ", int "
        << b << ") {\n";
    out << "    int " << r << " = " << lit(rng, 0, 5) << ";\n";
    int ladder = 2 + int(rng.index(3));
    for (int s = 0; s < ladder; ++s) {
        std::string lhs = rng.index(2) ? a : b;
        std::string cmp = pick(rng, {">", "<", "==", ">=", "!="});
        out << "    if (" << lhs << " " << cmp << " " << lit(rng, 0, 99)
            << ") {\n"
            << "        " << r << " = " << r << " "
            << pick(rng, {"+", "-", "*"}) << " " << lit(rng, 1, 9) << ";\n"
            << "    }";
        if (rng.index(2)) {
            out << " else {\n        " << r << " = " << r << " "
                << pick(rng, {"+", "-"}) << " " << lit(rng, 1, 9)
                << ";\n    }";
        }
        out << "\n";
    }
    out << "    return " << r << ";\n}\n";
    return out.str();
}

// straight-line call chains
std::string gen_call(Rng& rng) {
    NamePicker names{rng, {}};
    std::string a = names.fresh();
    std::string b = names.fresh();
    static const std::vector<std::string> callees = {
        "scale", "shift", "mix", "clip", "wrap", "fuse"};
    std::ostringstream out;
    out << "int " << method_name(rng, "call") << "(int " << a << ", int " << b
        << ") {\n";
    std::vector<std::string> live = {a, b};
    int chain = 3 + int(rng.index(3));
    for (int s = 0; s < chain; ++s) {
        std::string next = names.fresh();
        std::string arg1 = live[rng.index(live.size())];
        std::string arg2 = rng.index(2)
                               ? live[rng.index(live.size())]
                               : std::to_string(lit(rng, 1, 9));
        out << "    int " << next << " = " << pick(rng, callees) << "(" << arg1
            << ", " << arg2 << ");\n";
        live.push_back(next);
    }
    out << "    return " << pick(rng, callees) << "(" << live[live.size() - 2]
        << ", " << live.back() << ");\n}\n";
    return out.str();
}

// shared filler for the two discriminative classes
void gen_filler(Rng& rng, NamePicker& names, std::vector<std::string>& live,
                std::ostringstream& out) {
    int decls = 2 + int(rng.index(2));
    for (int s = 0; s < decls; ++s) {
        std::string next = names.fresh();
        out << "    int " << next << " = " << live[rng.index(live.size())]
            << " " << pick(rng, {"+", "-", "*"}) << " " << lit(rng, 1, 9)
            << ";\n";
        live.push_back(next);
    }
}

std::string gen_discriminative(Rng& rng, bool looped) {
    NamePicker names{rng, {}};
    std::string a = names.fresh();
    std::string b = names.fresh();
    std::vector<std::string> live = {a, b};
    std::ostringstream out;
    out << "int " << method_name(rng, looped ? "looped" : "straight")
        << "(int " << a << ", int " << b << ") {\n";
    gen_filler(rng, names, live, out);
    if (looped) {
        const std::string& w = live[2];
        out << "    while (" << w << " > " << lit(rng, 1, 9) << ") {\n"
            << "        " << w << " = " << w << " - " << lit(rng, 1, 3)
            << ";\n    }\n";
    }
    gen_filler(rng, names, live, out);
    out << "    return " << live.back() << ";\n}\n";
    return out.str();
}

}  // namespace

std::vector<SyntheticProgram> synthetic_corpus(std::uint64_t seed,
                                               int per_class) {
    Rng rng(seed);
    std::vector<SyntheticProgram> out;
    const char* classes[] = {"loop", "branch", "call"};
    for (const char* cls : classes) {
        for (int i = 0; i < per_class; ++i) {
            SyntheticProgram p;
            p.label = cls;
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%s_%03d", cls, i);
            p.source_id = buf;
            if (p.label == "loop") p.source = gen_loop(rng);
            else if (p.label == "branch") p.source = gen_branch(rng);
            else p.source = gen_call(rng);
            out.push_back(std::move(p));
        }
    }
    return out;
}

std::vector<SyntheticProgram> discriminative_corpus(std::uint64_t seed,
                                                    int per_class) {
    Rng rng(seed);
    std::vector<SyntheticProgram> out;
    for (int looped = 0; looped < 2; ++looped) {
        for (int i = 0; i < per_class; ++i) {
            SyntheticProgram p;
            p.label = looped ? "looped" : "straight";
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%s_%03d", p.label.c_str(), i);
            p.source_id = buf;
            p.source = gen_discriminative(rng, looped != 0);
            out.push_back(std::move(p));
        }
    }
    return out;
}

std::vector<Ast> parse_synthetic(
    const std::vector<SyntheticProgram>& programs) {
    std::vector<Ast> asts;
    asts.reserve(programs.size());
    for (const auto& p : programs)
        asts.push_back(parse_minilang(p.source, p.source_id));
    return asts;
}

LabeledCorpus labeled_synthetic(const std::vector<SyntheticProgram>& programs) {
    LabeledCorpus corpus;
    corpus.asts = parse_synthetic(programs);
    for (const auto& p : programs) corpus.labels.push_back(p.label);
    return corpus;
}

Ast permute_identifiers(const Ast& ast, std::uint64_t seed) {
    const auto& pool = ident_pool();
    std::vector<std::string> shuffled = pool;
    Rng rng(seed);
    rng.shuffle(shuffled);
    std::map<std::string, std::string> mapping;
    for (std::size_t i = 0; i < pool.size(); ++i)
        mapping[pool[i]] = shuffled[i];
    return rename_identifiers(ast, [&](const std::string& name) {
        auto it = mapping.find(name);
        return it == mapping.end() ? name : it->second;
    });
}

}  // namespace s2v
