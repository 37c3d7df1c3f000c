#pragma once

#include <map>
#include <string>
#include <vector>

#include "s2v/downstream.hpp"

namespace s2v {

// One deletion experiment: remove a component, measure how much the correct
// class's confidence drops.
struct PerturbationRecord {
    NodeId node_id = 0;
    std::string type;
    double delta = 0.0;           // original confidence - perturbed confidence
    double attention_mass = 0.0;  // summed alpha over the deleted subtree
};

struct Correlation {
    std::string method = "spearman";
    bool defined = false;
    double value = 0.0;
};

struct ExplanationReport {
    std::string source_id;
    int correct_class = 0;
    std::string correct_class_name;
    std::vector<PerturbationRecord> records;  // node-id order
    Correlation correlation;
    std::map<NodeId, double> display_scores;  // max-normalized alpha
    std::map<NodeId, double> raw_alpha;
};

// Max-normalized display scores in [0, 1]; at least one entry equals 1.
std::vector<double> node_attention_scores(const std::vector<double>& alpha);

// Per-node scores for one AST. Errors: model aggregation mode is max
// (no alpha available).
std::map<NodeId, double> node_attention_scores(const Ast& ast,
                                               const Model& model);

// Node types the perturbation engine may delete.
bool is_deletable_component(const std::string& type);

// One perturbed AST per deletable non-root component, in node-id order.
std::vector<std::pair<NodeId, Ast>> perturb_all(const Ast& ast);

// Softmax confidence of `correct_class` on the original minus on the
// perturbed program. Errors: class index out of range.
double confidence_delta(const Classifier& cls, const Ast& original,
                        const Ast& perturbed, int correct_class);

// Spearman rank correlation between delta and attention mass, average ranks
// on ties. Errors: fewer than 3 records. A constant vector on either side is
// reported as undefined, not 0.
Correlation delta_attention_correlation(
    const std::vector<PerturbationRecord>& records);

ExplanationReport explain(const Classifier& cls, const Ast& ast,
                          int correct_class);

// Text rendering: with source text, each line gets a shade gutter built from
// five buckets (blank, ░, ▒, ▓, █) of the strongest covering node's score;
// without source, an indented tree listing with one score per node.
std::string render_heat_text(const Ast& ast,
                             const std::map<NodeId, double>& scores,
                             const std::string* source_text = nullptr);

// Grayscale SVG of the tree, darker fill for higher scores.
std::string render_heat_svg(const Ast& ast,
                            const std::map<NodeId, double>& scores);

std::string report_to_json(const ExplanationReport& report);

}  // namespace s2v
