#include "s2v/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "s2v/subtrees.hpp"

namespace s2v {

std::vector<double> node_attention_scores(const std::vector<double>& alpha) {
    if (alpha.empty()) throw DataError("node_attention_scores: no alpha");
    double mx = *std::max_element(alpha.begin(), alpha.end());
    std::vector<double> out(alpha.size());
    for (std::size_t i = 0; i < alpha.size(); ++i) out[i] = alpha[i] / mx;
    return out;
}

std::map<NodeId, double> node_attention_scores(const Ast& ast,
                                               const Model& model) {
    if (model.config.aggregate_mode != AggregateMode::attention)
        throw DataError(
            "node_attention_scores: max aggregation has no attention weights");
    EncodeResult enc = model.encode_ast(ast);
    std::vector<double> scores = node_attention_scores(*enc.alpha);
    std::map<NodeId, double> out;
    for (std::size_t i = 0; i < enc.order.size(); ++i)
        out[enc.order[i]] = scores[i];
    return out;
}

bool is_deletable_component(const std::string& type) {
    return is_structural_label_type(type) || is_keyword_label_type(type);
}

std::vector<std::pair<NodeId, Ast>> perturb_all(const Ast& ast) {
    std::vector<std::pair<NodeId, Ast>> out;
    for (const auto& [id, node] : ast.nodes) {
        if (id == ast.root || !is_deletable_component(node.type)) continue;
        out.emplace_back(id, delete_component(ast, id));
    }
    return out;  // std::map iteration: already node-id order
}

double confidence_delta(const Classifier& cls, const Ast& original,
                        const Ast& perturbed, int correct_class) {
    if (correct_class < 0 || std::size_t(correct_class) >= cls.classes.size())
        throw DataError("confidence_delta: class index out of range");
    std::vector<double> p0 = classifier_probs(cls, original);
    std::vector<double> p1 = classifier_probs(cls, perturbed);
    return p0[std::size_t(correct_class)] - p1[std::size_t(correct_class)];
}

namespace {

// average ranks, 1-based
std::vector<double> ranks_of(const std::vector<double>& xs) {
    std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        double avg = (double(i) + double(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    std::size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= double(n);
    mb /= double(n);
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    return cov / std::sqrt(va * vb);
}

}  // namespace

Correlation delta_attention_correlation(
    const std::vector<PerturbationRecord>& records) {
    if (records.size() < 3)
        throw DataError(
            "delta_attention_correlation: need at least 3 records");
    std::vector<double> deltas, masses;
    for (const auto& r : records) {
        deltas.push_back(r.delta);
        masses.push_back(r.attention_mass);
    }
    auto constant = [](const std::vector<double>& xs) {
        for (double v : xs)
            if (v != xs[0]) return false;
        return true;
    };
    Correlation c;
    if (constant(deltas) || constant(masses)) {
        c.defined = false;
        return c;
    }
    c.defined = true;
    c.value = std::clamp(pearson(ranks_of(deltas), ranks_of(masses)), -1.0, 1.0);
    return c;
}

ExplanationReport explain(const Classifier& cls, const Ast& ast,
                          int correct_class) {
    if (correct_class < 0 || std::size_t(correct_class) >= cls.classes.size())
        throw DataError("explain: class index out of range");
    if (cls.model.config.aggregate_mode != AggregateMode::attention)
        throw DataError("explain: classifier must use attention aggregation");
    ExplanationReport rep;
    rep.source_id = ast.source_id;
    rep.correct_class = correct_class;
    rep.correct_class_name = cls.classes[std::size_t(correct_class)];

    EncodeResult enc = cls.model.encode_ast(ast);
    std::map<NodeId, double> alpha_by_node;
    for (std::size_t i = 0; i < enc.order.size(); ++i)
        alpha_by_node[enc.order[i]] = (*enc.alpha)[i];
    rep.raw_alpha = alpha_by_node;
    std::vector<double> display = node_attention_scores(*enc.alpha);
    for (std::size_t i = 0; i < enc.order.size(); ++i)
        rep.display_scores[enc.order[i]] = display[i];

    for (auto& [node_id, perturbed] : perturb_all(ast)) {
        PerturbationRecord r;
        r.node_id = node_id;
        r.type = ast.node(node_id).type;
        r.delta = confidence_delta(cls, ast, perturbed, correct_class);
        r.attention_mass = 0.0;
        for (NodeId sub : subtree_ids(ast, node_id))
            r.attention_mass += alpha_by_node.at(sub);
        rep.records.push_back(std::move(r));
    }
    if (rep.records.size() >= 3)
        rep.correlation = delta_attention_correlation(rep.records);
    return rep;
}

namespace {

const char* shade_for(double score) {
    if (score >= 0.8) return "█";  // █
    if (score >= 0.6) return "▓";  // ▓
    if (score >= 0.4) return "▒";  // ▒
    if (score >= 0.2) return "░";  // ░
    return " ";
}

void render_tree_lines(const Ast& ast, NodeId id,
                       const std::map<NodeId, double>& scores, int depth,
                       std::ostringstream& out) {
    const AstNode& n = ast.node(id);
    double s = 0.0;
    auto it = scores.find(id);
    if (it != scores.end()) s = it->second;
    for (int i = 0; i < depth; ++i) out << "  ";
    out << n.type;
    if (n.token) out << ":" << *n.token;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", s);
    out << "  [" << buf << "] " << shade_for(s) << "\n";
    for (NodeId c : n.children)
        render_tree_lines(ast, c, scores, depth + 1, out);
}

}  // namespace

std::string render_heat_text(const Ast& ast,
                             const std::map<NodeId, double>& scores,
                             const std::string* source_text) {
    for (const auto& [id, s] : scores)
        if (!ast.has(id))
            throw DataError("render_heat_text: score for unknown node " +
                            std::to_string(id));
    std::ostringstream out;
    if (source_text && !ast.spans.empty()) {
        const std::string& src = *source_text;
        // per-byte shade: strongest covering node wins
        std::vector<double> byte_score(src.size(), 0.0);
        for (const auto& [id, span] : ast.spans) {
            auto it = scores.find(id);
            if (it == scores.end()) continue;
            for (std::size_t b = span.begin;
                 b < span.end && b < src.size(); ++b)
                byte_score[b] = std::max(byte_score[b], it->second);
        }
        std::size_t line_start = 0;
        while (line_start <= src.size()) {
            std::size_t line_end = src.find('\n', line_start);
            if (line_end == std::string::npos) line_end = src.size();
            if (line_start < line_end || line_end < src.size()) {
                out << src.substr(line_start, line_end - line_start) << "\n";
                std::string gutter;
                for (std::size_t b = line_start; b < line_end; ++b)
                    gutter += shade_for(byte_score[b]);
                // trim trailing blanks
                while (gutter.size() && gutter.back() == ' ')
                    gutter.pop_back();
                out << gutter << "\n";
            }
            if (line_end >= src.size()) break;
            line_start = line_end + 1;
        }
    } else {
        render_tree_lines(ast, ast.root, scores, 0, out);
    }
    return out.str();
}

namespace {

struct SvgLayout {
    std::map<NodeId, std::pair<double, double>> pos;  // x, y
    double width = 0.0, height = 0.0;
    double next_x = 0.0;

    void place(const Ast& ast, NodeId id, int depth) {
        const AstNode& n = ast.node(id);
        double x;
        if (n.children.empty()) {
            x = next_x;
            next_x += 90.0;
        } else {
            double lo = 1e18, hi = -1e18;
            for (NodeId c : n.children) {
                place(ast, c, depth + 1);
                lo = std::min(lo, pos[c].first);
                hi = std::max(hi, pos[c].first);
            }
            x = (lo + hi) / 2.0;
        }
        pos[id] = {x, depth * 70.0};
        width = std::max(width, x + 90.0);
        height = std::max(height, depth * 70.0 + 60.0);
    }
};

}  // namespace

std::string render_heat_svg(const Ast& ast,
                            const std::map<NodeId, double>& scores) {
    SvgLayout layout;
    layout.place(ast, ast.root, 0);
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
        << int(layout.width + 20) << "\" height=\"" << int(layout.height + 20)
        << "\">\n";
    for (const auto& [id, n] : ast.nodes) {
        for (NodeId c : n.children) {
            auto [x1, y1] = layout.pos[id];
            auto [x2, y2] = layout.pos[c];
            out << "  <line x1=\"" << int(x1 + 40) << "\" y1=\""
                << int(y1 + 40) << "\" x2=\"" << int(x2 + 40) << "\" y2=\""
                << int(y2 + 20) << "\" stroke=\"#888\"/>\n";
        }
    }
    for (const auto& [id, n] : ast.nodes) {
        double s = 0.0;
        auto it = scores.find(id);
        if (it != scores.end()) s = it->second;
        int gray = int(std::lround(255.0 * (1.0 - s)));
        const char* text_color = s >= 0.5 ? "#fff" : "#000";
        auto [x, y] = layout.pos[id];
        out << "  <rect x=\"" << int(x) << "\" y=\"" << int(y + 20)
            << "\" width=\"80\" height=\"20\" rx=\"4\" fill=\"rgb(" << gray
            << "," << gray << "," << gray << ")\" stroke=\"#444\"/>\n";
        out << "  <text x=\"" << int(x + 40) << "\" y=\"" << int(y + 34)
            << "\" font-size=\"10\" text-anchor=\"middle\" fill=\""
            << text_color << "\">" << n.type << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

std::string report_to_json(const ExplanationReport& report) {
    nlohmann::ordered_json j;
    j["source_id"] = report.source_id;
    j["correct_class"] = report.correct_class;
    j["correct_class_name"] = report.correct_class_name;
    nlohmann::ordered_json records = nlohmann::ordered_json::array();
    for (const auto& r : report.records) {
        nlohmann::ordered_json jr;
        jr["node_id"] = r.node_id;
        jr["type"] = r.type;
        jr["delta"] = r.delta;
        jr["attention_mass"] = r.attention_mass;
        records.push_back(std::move(jr));
    }
    j["records"] = std::move(records);
    j["correlation"]["method"] = report.correlation.method;
    if (report.correlation.defined)
        j["correlation"]["value"] = report.correlation.value;
    else
        j["correlation"]["value"] = nullptr;
    nlohmann::ordered_json ds;
    for (const auto& [id, s] : report.display_scores)
        ds[std::to_string(id)] = s;
    j["display_scores"] = std::move(ds);
    return j.dump(2) + "\n";
}

}  // namespace s2v
