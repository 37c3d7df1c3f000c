#include "s2v/encoder.hpp"

#include <unordered_map>

namespace s2v {

InitMode parse_init_mode(const std::string& s) {
    if (s == "type") return InitMode::type;
    if (s == "token") return InitMode::token;
    if (s == "combine") return InitMode::combine;
    throw UsageError("unknown init mode: " + s);
}

AggregateMode parse_aggregate_mode(const std::string& s) {
    if (s == "attention") return AggregateMode::attention;
    if (s == "max") return AggregateMode::max;
    throw UsageError("unknown aggregate mode: " + s);
}

std::string to_string(InitMode m) {
    switch (m) {
        case InitMode::type: return "type";
        case InitMode::token: return "token";
        case InitMode::combine: return "combine";
    }
    return "?";
}

std::string to_string(AggregateMode m) {
    return m == AggregateMode::attention ? "attention" : "max";
}

EncoderParams EncoderParams::init(std::size_t dim, int num_conv_layers,
                                  int type_vocab_size, int token_vocab_size,
                                  Rng& rng, double scale) {
    EncoderParams p;
    p.dim = dim;
    p.num_conv_layers = num_conv_layers;
    auto u = [&](std::vector<std::size_t> shape) {
        Tensor t = Tensor::uniform(std::move(shape), -scale, scale, rng);
        t.requires_grad = true;
        return t;
    };
    p.type_embed = u({std::size_t(type_vocab_size) + 1, dim});
    p.token_embed = u({std::size_t(token_vocab_size) + 1, dim});
    p.fuse_weight = u({2 * dim, dim});
    p.fuse_bias = u({1, dim});
    p.conv_top = u({dim, dim});
    p.conv_left = u({dim, dim});
    p.conv_right = u({dim, dim});
    p.conv_bias = u({1, dim});
    p.attention = u({dim, 1});
    return p;
}

std::vector<std::pair<std::string, Tensor*>> EncoderParams::named_tensors() {
    return {{"type_embed", &type_embed},   {"token_embed", &token_embed},
            {"fuse_weight", &fuse_weight}, {"fuse_bias", &fuse_bias},
            {"conv_top", &conv_top},       {"conv_left", &conv_left},
            {"conv_right", &conv_right},   {"conv_bias", &conv_bias},
            {"attention", &attention}};
}

std::vector<std::pair<std::string, const Tensor*>> EncoderParams::named_tensors()
    const {
    auto mut = const_cast<EncoderParams*>(this)->named_tensors();
    std::vector<std::pair<std::string, const Tensor*>> out;
    out.reserve(mut.size());
    for (auto& [name, t] : mut) out.emplace_back(name, t);
    return out;
}

AstLayout build_layout(const Ast& ast, const Vocab& type_vocab,
                       const Vocab& token_vocab) {
    AstLayout layout;
    layout.order = preorder(ast);
    std::size_t n = layout.order.size();
    std::unordered_map<NodeId, int> pos;
    pos.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pos[layout.order[i]] = int(i);

    layout.type_rows.resize(n);
    layout.token_rows.resize(n);
    auto windows = std::make_shared<ConvWindows>();
    windows->children.resize(n);
    windows->parent.assign(n, {});
    for (std::size_t i = 0; i < n; ++i) {
        const AstNode& node = ast.node(layout.order[i]);
        layout.type_rows[i] = type_vocab.index(node.type) + 1;
        layout.token_rows[i] = node.token ? token_vocab.index(*node.token) + 1 : 0;
        std::size_t m = node.children.size();
        auto& kids = windows->children[i];
        kids.reserve(m);
        for (std::size_t c = 0; c < m; ++c) {
            double eta_r =
                m == 1 ? 0.5 : double(c) / double(m - 1);  // (pos-1)/(m-1)
            double eta_l = m == 1 ? 0.5 : 1.0 - eta_r;
            int child_pos = pos.at(node.children[c]);
            kids.push_back({child_pos, eta_l, eta_r});
            windows->parent[child_pos] = {int(i), eta_l, eta_r};
        }
    }
    layout.windows = std::move(windows);
    return layout;
}

EncoderLeaves push_encoder_leaves(Tape& tape, const EncoderParams& p,
                                  bool requires_grad) {
    auto put = [&](const Tensor& t) {
        Tensor copy = t;
        copy.requires_grad = requires_grad;
        return tape.leaf(copy);
    };
    EncoderLeaves l;
    l.type_embed = put(p.type_embed);
    l.token_embed = put(p.token_embed);
    l.fuse_weight = put(p.fuse_weight);
    l.fuse_bias = put(p.fuse_bias);
    l.conv_top = put(p.conv_top);
    l.conv_left = put(p.conv_left);
    l.conv_right = put(p.conv_right);
    l.conv_bias = put(p.conv_bias);
    l.attention = put(p.attention);
    return l;
}

EncodedGraph encode_on_tape(Tape& tape, const AstLayout& layout,
                            const EncoderLeaves& leaves, std::size_t dim,
                            int num_conv_layers, InitMode init,
                            AggregateMode aggregate) {
    (void)dim;
    Tape::Id x;
    switch (init) {
        case InitMode::type:
            x = tape.embedding_lookup(leaves.type_embed, layout.type_rows);
            break;
        case InitMode::token:
            x = tape.embedding_lookup(leaves.token_embed, layout.token_rows);
            break;
        case InitMode::combine: {
            Tape::Id ty =
                tape.embedding_lookup(leaves.type_embed, layout.type_rows);
            Tape::Id tok =
                tape.embedding_lookup(leaves.token_embed, layout.token_rows);
            Tape::Id cat = tape.concat_cols(ty, tok);
            Tape::Id lin = tape.add_rowvec(
                tape.matmul(cat, leaves.fuse_weight), leaves.fuse_bias);
            x = tape.tanh(lin);
            break;
        }
        default: throw UsageError("bad init mode");
    }
    for (int layer = 0; layer < num_conv_layers; ++layer)
        x = tape.tree_conv(x, leaves.conv_top, leaves.conv_left,
                           leaves.conv_right, leaves.conv_bias,
                           layout.windows);
    EncodedGraph g;
    g.states = x;
    if (aggregate == AggregateMode::attention) {
        Tape::Id scores = tape.matmul(x, leaves.attention);  // n x 1
        g.alpha = tape.softmax(scores, 0);
        g.code_vector = tape.weighted_sum(g.alpha, x);
    } else {
        g.code_vector = tape.max(x, 0);
    }
    return g;
}

NodeStates init_node_embeddings(const Ast& ast, const EncoderParams& p,
                                const Vocab& type_vocab,
                                const Vocab& token_vocab, InitMode mode) {
    AstLayout layout = build_layout(ast, type_vocab, token_vocab);
    Tape tape;
    EncoderLeaves leaves = push_encoder_leaves(tape, p, false);
    Tape::Id x;
    switch (mode) {
        case InitMode::type:
            x = tape.embedding_lookup(leaves.type_embed, layout.type_rows);
            break;
        case InitMode::token:
            x = tape.embedding_lookup(leaves.token_embed, layout.token_rows);
            break;
        case InitMode::combine: {
            Tape::Id ty =
                tape.embedding_lookup(leaves.type_embed, layout.type_rows);
            Tape::Id tok =
                tape.embedding_lookup(leaves.token_embed, layout.token_rows);
            x = tape.tanh(tape.add_rowvec(
                tape.matmul(tape.concat_cols(ty, tok), leaves.fuse_weight),
                leaves.fuse_bias));
            break;
        }
        default: throw UsageError("bad init mode");
    }
    return NodeStates{layout.order, tape.value(x)};
}

NodeStates tbcnn_conv_layer(const Ast& ast, const NodeStates& states,
                            const EncoderParams& p) {
    if (states.order.size() != states.states.rows())
        throw TensorError("tbcnn_conv_layer: state rows not aligned");
    // rebuild windows from the AST against the given ordering
    std::unordered_map<NodeId, int> pos;
    for (std::size_t i = 0; i < states.order.size(); ++i)
        pos[states.order[i]] = int(i);
    auto windows = std::make_shared<ConvWindows>();
    std::size_t n = states.order.size();
    windows->children.resize(n);
    windows->parent.assign(n, {});
    for (std::size_t i = 0; i < n; ++i) {
        const AstNode& node = ast.node(states.order[i]);
        std::size_t m = node.children.size();
        for (std::size_t c = 0; c < m; ++c) {
            double eta_r = m == 1 ? 0.5 : double(c) / double(m - 1);
            double eta_l = m == 1 ? 0.5 : 1.0 - eta_r;
            int child_pos = pos.at(node.children[c]);
            windows->children[i].push_back({child_pos, eta_l, eta_r});
            windows->parent[child_pos] = {int(i), eta_l, eta_r};
        }
    }
    Tape tape;
    Tensor in = states.states;
    in.requires_grad = false;
    Tape::Id x = tape.leaf(in);
    EncoderLeaves leaves = push_encoder_leaves(tape, p, false);
    Tape::Id y = tape.tree_conv(x, leaves.conv_top, leaves.conv_left,
                                leaves.conv_right, leaves.conv_bias, windows);
    return NodeStates{states.order, tape.value(y)};
}

AttentionResult attention_aggregate(const NodeStates& states,
                                    const EncoderParams& p) {
    Tape tape;
    Tensor in = states.states;
    in.requires_grad = false;
    Tape::Id x = tape.leaf(in);
    Tensor a = p.attention;
    a.requires_grad = false;
    Tape::Id alpha = tape.softmax(tape.matmul(x, tape.leaf(a)), 0);
    Tape::Id v = tape.weighted_sum(alpha, x);
    return AttentionResult{tape.value(alpha).values, tape.value(v)};
}

EncodeResult encode(const Ast& ast, const EncoderParams& p,
                    const Vocab& type_vocab, const Vocab& token_vocab,
                    InitMode init, AggregateMode aggregate) {
    AstLayout layout = build_layout(ast, type_vocab, token_vocab);
    Tape tape;
    EncoderLeaves leaves = push_encoder_leaves(tape, p, false);
    EncodedGraph g = encode_on_tape(tape, layout, leaves, p.dim,
                                    p.num_conv_layers, init, aggregate);
    EncodeResult r;
    r.source_id = ast.source_id;
    r.code_vector = tape.value(g.code_vector);
    r.order = layout.order;
    if (g.alpha >= 0) r.alpha = tape.value(g.alpha).values;
    return r;
}

}  // namespace s2v
