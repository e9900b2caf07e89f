#pragma once

#include "lil/linalg.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace lil {

/// Shape of a LIL network: input dimension, tanh hidden widths, and the
/// number of classes at each hierarchy level (coarse to fine).
struct NetworkConfig {
    /// [D, n_1, ..., n_L]: input width followed by the hidden widths.
    std::vector<std::size_t> layer_widths;
    std::vector<std::size_t> num_classes_per_level;

    std::size_t input_dim() const { return layer_widths.front(); }
    std::size_t representation_dim() const { return layer_widths.back(); }

    /// Throws std::invalid_argument unless there is at least one hidden layer,
    /// every width is >= 1 and every level has at least one class.
    void validate() const;
};

/// Affine map z = a * W^T + b with W stored n_out x n_in.
struct DenseLayer {
    Matrix weight;
    Matrix bias;  // 1 x n_out

    std::size_t fan_in() const { return weight.cols(); }
    std::size_t fan_out() const { return weight.rows(); }
};

struct MlpParams {
    std::vector<DenseLayer> layers;
};

/// One locally isometric layer: tanh MLP body whose last hidden activation
/// is the representation, plus a linear classification head.
struct LilBlock {
    MlpParams body;
    DenseLayer head;

    std::size_t input_dim() const { return body.layers.front().fan_in(); }
    std::size_t representation_dim() const { return body.layers.back().fan_out(); }
    std::size_t num_classes() const { return head.fan_out(); }

    void validate() const;
};

/// Gradients share the parameter layout.
using BlockGradients = LilBlock;

/// Blocks applied in sequence. Block k > 0 consumes block k-1's
/// representation; gradients never cross block boundaries during training.
struct StackedLilNetwork {
    NetworkConfig config;
    /// Hierarchy level each block's head classifies.
    std::vector<std::size_t> block_levels;
    std::vector<LilBlock> blocks;

    void validate() const;
    /// Index of the block whose head classifies `level`, or throws.
    std::size_t block_for_level(std::size_t level) const;
};

struct ForwardTrace {
    Matrix input;
    /// Per hidden layer, in order.
    std::vector<Matrix> pre_activations;
    std::vector<Matrix> activations;
    Matrix logits;

    const Matrix& representation() const { return activations.back(); }
};

/// Glorot-uniform body for widths [in, hidden...] with zero biases.
MlpParams init_params(std::span<const std::size_t> widths, Rng& rng);
LilBlock init_block(std::size_t input_dim, std::span<const std::size_t> hidden,
                    std::size_t num_classes, Rng& rng);
/// Block k has input width D for k = 0 and the representation width
/// afterwards; its head width is num_classes_per_level[levels[k]].
StackedLilNetwork init_stacked(const NetworkConfig& config, std::vector<std::size_t> levels,
                               Rng& rng);

ForwardTrace forward(const LilBlock& block, const Matrix& x);

struct BackwardResult {
    BlockGradients grads;
    Matrix input_grad;
};

/// Reverse-mode gradients for a loss whose upstream gradients are given at
/// the logits and at the representation. Either may be an empty Matrix,
/// which is treated as zero.
BackwardResult backward(const LilBlock& block, const ForwardTrace& trace, const Matrix& dlogits,
                        const Matrix& dphi);

std::vector<ForwardTrace> stacked_forward(const StackedLilNetwork& net, const Matrix& x);

/// Gradient with respect to the network input of a loss attached to block
/// `block_index`, chained back through all earlier blocks. Used by attacks;
/// training never propagates across blocks.
Matrix stacked_input_gradient(const StackedLilNetwork& net, const std::vector<ForwardTrace>& traces,
                              std::size_t block_index, const Matrix& dlogits, const Matrix& dphi);

/// Per-sample Jacobians of the representation with respect to that sample's
/// input, n_L x D each, by forward-mode tangent propagation.
std::vector<Matrix> representation_jacobians(const LilBlock& block, const ForwardTrace& trace);

/// Same Jacobians assembled from reverse passes seeded with one-hot
/// representation gradients. Used to cross-check the forward-mode route.
std::vector<Matrix> representation_jacobians_reverse(const LilBlock& block,
                                                     const ForwardTrace& trace);

/// Mutable/const views over every parameter matrix, in a fixed order
/// (body weights and biases layer by layer, then head weight and bias).
std::vector<Matrix*> parameter_views(LilBlock& block);
std::vector<const Matrix*> parameter_views(const LilBlock& block);

/// Zero-valued gradient container shaped like `block`.
BlockGradients zeros_like(const LilBlock& block);

/// Arg-max of each logit row, ties broken by the lowest class index.
std::vector<int> predict_classes(const Matrix& logits);

}  // namespace lil
