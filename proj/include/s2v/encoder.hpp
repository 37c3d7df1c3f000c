#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "s2v/ast.hpp"
#include "s2v/tensor.hpp"
#include "s2v/vocab.hpp"

namespace s2v {

enum class InitMode { type, token, combine };
enum class AggregateMode { attention, max };

InitMode parse_init_mode(const std::string& s);
AggregateMode parse_aggregate_mode(const std::string& s);
std::string to_string(InitMode m);
std::string to_string(AggregateMode m);

// Every learnable tensor of the encoder. Embedding matrices reserve row 0
// for unknown entries; vocabulary index i lives at row i + 1.
struct EncoderParams {
    std::size_t dim = 0;
    int num_conv_layers = 2;
    Tensor type_embed;   // (|type vocab| + 1) x D
    Tensor token_embed;  // (|token vocab| + 1) x D
    Tensor fuse_weight;  // 2D x D
    Tensor fuse_bias;    // 1 x D
    Tensor conv_top;     // D x D
    Tensor conv_left;    // D x D
    Tensor conv_right;   // D x D
    Tensor conv_bias;    // 1 x D
    Tensor attention;    // D x 1

    static EncoderParams init(std::size_t dim, int num_conv_layers,
                              int type_vocab_size, int token_vocab_size,
                              Rng& rng, double scale = 0.05);

    std::vector<std::pair<std::string, Tensor*>> named_tensors();
    std::vector<std::pair<std::string, const Tensor*>> named_tensors() const;
};

// Fixed node ordering (pre-order) plus everything the encoder needs per
// node: embedding rows and convolution windows.
struct AstLayout {
    std::vector<NodeId> order;            // position -> node id
    std::vector<int> type_rows;           // per position; 0 = UNK
    std::vector<int> token_rows;          // per position; 0 = UNK
    std::shared_ptr<const ConvWindows> windows;
};

AstLayout build_layout(const Ast& ast, const Vocab& type_vocab,
                       const Vocab& token_vocab);

// n x D node state matrix aligned to `order`.
struct NodeStates {
    std::vector<NodeId> order;
    Tensor states;
};

// Tape node handles for one encoded snippet, reused by the trainer.
struct EncoderLeaves {
    Tape::Id type_embed, token_embed, fuse_weight, fuse_bias;
    Tape::Id conv_top, conv_left, conv_right, conv_bias, attention;
};

EncoderLeaves push_encoder_leaves(Tape& tape, const EncoderParams& p,
                                  bool requires_grad);

struct EncodedGraph {
    Tape::Id code_vector;  // 1 x D
    Tape::Id alpha = -1;   // n x 1, attention mode only
    Tape::Id states;       // n x D after the conv stack
};

EncodedGraph encode_on_tape(Tape& tape, const AstLayout& layout,
                            const EncoderLeaves& leaves, std::size_t dim,
                            int num_conv_layers, InitMode init,
                            AggregateMode aggregate);

// --- standalone forward operations ---

// Initial node states: combine fuses type and token embeddings through a
// tanh linear layer; type/token use one embedding directly (absent tokens
// and out-of-vocabulary entries hit the UNK row).
NodeStates init_node_embeddings(const Ast& ast, const EncoderParams& p,
                                const Vocab& type_vocab,
                                const Vocab& token_vocab, InitMode mode);

// One convolution layer over depth-2 windows (node plus direct children).
NodeStates tbcnn_conv_layer(const Ast& ast, const NodeStates& states,
                            const EncoderParams& p);

struct AttentionResult {
    std::vector<double> alpha;  // softmax over nodes, sums to 1
    Tensor code_vector;         // 1 x D
};

AttentionResult attention_aggregate(const NodeStates& states,
                                    const EncoderParams& p);

struct EncodeResult {
    std::string source_id;
    Tensor code_vector;                        // 1 x D
    std::optional<std::vector<double>> alpha;  // attention mode only
    std::vector<NodeId> order;                 // node id per alpha position
};

EncodeResult encode(const Ast& ast, const EncoderParams& p,
                    const Vocab& type_vocab, const Vocab& token_vocab,
                    InitMode init, AggregateMode aggregate);

}  // namespace s2v
