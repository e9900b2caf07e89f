#include "lil/network.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lil {

namespace {

DenseLayer glorot_layer(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    DenseLayer layer{Matrix(fan_out, fan_in), Matrix(1, fan_out)};
    for (double& w : layer.weight.values()) w = rng.uniform(-bound, bound);
    return layer;
}

Matrix affine(const Matrix& a, const DenseLayer& layer) {
    Matrix z = matmul_nt(a, layer.weight);
    add_row_broadcast(z, layer.bias);
    return z;
}

void accumulate_layer_grads(DenseLayer& grad, const Matrix& dz, const Matrix& a_in) {
    grad.weight = matmul_tn(dz, a_in);
    grad.bias = col_sums(dz);
}

void check_layer(const DenseLayer& layer, const char* what) {
    if (layer.weight.rows() == 0 || layer.weight.cols() == 0)
        throw std::invalid_argument(std::string(what) + ": empty weight matrix");
    if (layer.bias.rows() != 1 || layer.bias.cols() != layer.weight.rows())
        throw std::invalid_argument(std::string(what) + ": bias shape does not match weight rows");
}

}  // namespace

void NetworkConfig::validate() const {
    if (layer_widths.size() < 2)
        throw std::invalid_argument("network config: need an input width and at least one hidden layer");
    for (std::size_t w : layer_widths)
        if (w == 0) throw std::invalid_argument("network config: layer widths must be >= 1");
    if (num_classes_per_level.empty())
        throw std::invalid_argument("network config: at least one hierarchy level is required");
    for (std::size_t c : num_classes_per_level)
        if (c == 0) throw std::invalid_argument("network config: class counts must be >= 1");
}

void LilBlock::validate() const {
    if (body.layers.empty()) throw std::invalid_argument("LIL block: body has no hidden layers");
    for (std::size_t l = 0; l < body.layers.size(); ++l) {
        check_layer(body.layers[l], "LIL block body");
        if (l > 0 && body.layers[l].fan_in() != body.layers[l - 1].fan_out())
            throw std::invalid_argument("LIL block: layer " + std::to_string(l) +
                                        " input width does not chain");
    }
    check_layer(head, "LIL block head");
    if (head.fan_in() != representation_dim())
        throw std::invalid_argument("LIL block: head input width " + std::to_string(head.fan_in()) +
                                    " != representation width " +
                                    std::to_string(representation_dim()));
}

void StackedLilNetwork::validate() const {
    config.validate();
    if (blocks.empty()) throw std::invalid_argument("stacked network: no blocks");
    if (block_levels.size() != blocks.size())
        throw std::invalid_argument("stacked network: one hierarchy level per block required");
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        blocks[k].validate();
        const std::size_t expected = k == 0 ? config.input_dim() : blocks[k - 1].representation_dim();
        if (blocks[k].input_dim() != expected)
            throw std::invalid_argument("stacked network: block " + std::to_string(k) +
                                        " input width " + std::to_string(blocks[k].input_dim()) +
                                        " != " + std::to_string(expected));
        if (block_levels[k] >= config.num_classes_per_level.size())
            throw std::invalid_argument("stacked network: block " + std::to_string(k) +
                                        " refers to missing level " + std::to_string(block_levels[k]));
        if (blocks[k].num_classes() != config.num_classes_per_level[block_levels[k]])
            throw std::invalid_argument("stacked network: block " + std::to_string(k) +
                                        " head width does not match its level's class count");
    }
}

std::size_t StackedLilNetwork::block_for_level(std::size_t level) const {
    for (std::size_t k = 0; k < block_levels.size(); ++k)
        if (block_levels[k] == level) return k;
    throw std::invalid_argument("no block classifies hierarchy level " + std::to_string(level));
}

MlpParams init_params(std::span<const std::size_t> widths, Rng& rng) {
    if (widths.size() < 2) throw std::invalid_argument("init_params: need at least two widths");
    MlpParams params;
    for (std::size_t l = 1; l < widths.size(); ++l) {
        if (widths[l - 1] == 0 || widths[l] == 0)
            throw std::invalid_argument("init_params: widths must be >= 1");
        params.layers.push_back(glorot_layer(widths[l - 1], widths[l], rng));
    }
    return params;
}

LilBlock init_block(std::size_t input_dim, std::span<const std::size_t> hidden,
                    std::size_t num_classes, Rng& rng) {
    if (hidden.empty()) throw std::invalid_argument("init_block: at least one hidden layer");
    if (num_classes == 0) throw std::invalid_argument("init_block: num_classes must be >= 1");
    std::vector<std::size_t> widths{input_dim};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    LilBlock block;
    block.body = init_params(widths, rng);
    block.head = glorot_layer(hidden.back(), num_classes, rng);
    return block;
}

StackedLilNetwork init_stacked(const NetworkConfig& config, std::vector<std::size_t> levels,
                               Rng& rng) {
    config.validate();
    if (levels.empty()) throw std::invalid_argument("init_stacked: at least one block required");
    StackedLilNetwork net{config, std::move(levels), {}};
    const std::span<const std::size_t> hidden(config.layer_widths.data() + 1,
                                              config.layer_widths.size() - 1);
    for (std::size_t k = 0; k < net.block_levels.size(); ++k) {
        const std::size_t level = net.block_levels[k];
        if (level >= config.num_classes_per_level.size())
            throw std::invalid_argument("init_stacked: block " + std::to_string(k) +
                                        " refers to missing level " + std::to_string(level));
        const std::size_t in = k == 0 ? config.input_dim() : config.representation_dim();
        net.blocks.push_back(init_block(in, hidden, config.num_classes_per_level[level], rng));
    }
    return net;
}

ForwardTrace forward(const LilBlock& block, const Matrix& x) {
    if (x.cols() != block.input_dim())
        throw std::invalid_argument("forward: input width " + std::to_string(x.cols()) +
                                    " != block input width " + std::to_string(block.input_dim()));
    ForwardTrace trace;
    trace.input = x;
    trace.pre_activations.reserve(block.body.layers.size());
    trace.activations.reserve(block.body.layers.size());
    for (const DenseLayer& layer : block.body.layers) {
        const Matrix& a = trace.activations.empty() ? trace.input : trace.activations.back();
        trace.pre_activations.push_back(affine(a, layer));
        Matrix act = trace.pre_activations.back();
        for (double& v : act.values()) v = std::tanh(v);
        trace.activations.push_back(std::move(act));
    }
    trace.logits = affine(trace.representation(), block.head);
    return trace;
}

BackwardResult backward(const LilBlock& block, const ForwardTrace& trace, const Matrix& dlogits,
                        const Matrix& dphi) {
    const std::size_t n = trace.input.rows();
    const std::size_t depth = block.body.layers.size();
    if (trace.activations.size() != depth)
        throw std::invalid_argument("backward: trace depth does not match block");

    BackwardResult out{zeros_like(block), Matrix()};
    Matrix da(n, block.representation_dim());

    if (!dlogits.empty()) {
        if (dlogits.rows() != n || dlogits.cols() != block.num_classes())
            throw std::invalid_argument("backward: dL/dlogits has wrong shape");
        accumulate_layer_grads(out.grads.head, dlogits, trace.representation());
        da = matmul(dlogits, block.head.weight);
    }
    if (!dphi.empty()) {
        if (dphi.rows() != n || dphi.cols() != block.representation_dim())
            throw std::invalid_argument("backward: dL/dPhi has wrong shape");
        da += dphi;
    }

    for (std::size_t l = depth; l-- > 0;) {
        const Matrix& act = trace.activations[l];
        Matrix dz = da;
        auto dzv = dz.values();
        auto av = act.values();
        for (std::size_t i = 0; i < dzv.size(); ++i) dzv[i] *= 1.0 - av[i] * av[i];
        const Matrix& a_in = l == 0 ? trace.input : trace.activations[l - 1];
        accumulate_layer_grads(out.grads.body.layers[l], dz, a_in);
        da = matmul(dz, block.body.layers[l].weight);
    }
    out.input_grad = std::move(da);
    return out;
}

std::vector<ForwardTrace> stacked_forward(const StackedLilNetwork& net, const Matrix& x) {
    if (net.blocks.empty()) throw std::invalid_argument("stacked_forward: no blocks");
    std::vector<ForwardTrace> traces;
    traces.reserve(net.blocks.size());
    for (std::size_t k = 0; k < net.blocks.size(); ++k) {
        const Matrix& in = k == 0 ? x : traces.back().representation();
        if (in.cols() != net.blocks[k].input_dim())
            throw std::invalid_argument("stacked_forward: block " + std::to_string(k) +
                                        " input width mismatch");
        traces.push_back(forward(net.blocks[k], in));
    }
    return traces;
}

Matrix stacked_input_gradient(const StackedLilNetwork& net, const std::vector<ForwardTrace>& traces,
                              std::size_t block_index, const Matrix& dlogits, const Matrix& dphi) {
    if (block_index >= net.blocks.size() || traces.size() != net.blocks.size())
        throw std::invalid_argument("stacked_input_gradient: block index or trace count mismatch");
    Matrix grad = backward(net.blocks[block_index], traces[block_index], dlogits, dphi).input_grad;
    for (std::size_t k = block_index; k-- > 0;)
        grad = backward(net.blocks[k], traces[k], Matrix(), grad).input_grad;
    return grad;
}

std::vector<Matrix> representation_jacobians(const LilBlock& block, const ForwardTrace& trace) {
    const std::size_t n = trace.input.rows();
    const std::size_t d = trace.input.cols();
    std::vector<Matrix> out;
    out.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        Matrix tangent = Matrix::identity(d);
        for (std::size_t l = 0; l < block.body.layers.size(); ++l) {
            tangent = matmul(block.body.layers[l].weight, tangent);
            const auto act = trace.activations[l].row(s);
            for (std::size_t r = 0; r < tangent.rows(); ++r) {
                const double slope = 1.0 - act[r] * act[r];
                for (double& v : tangent.row(r)) v *= slope;
            }
        }
        out.push_back(std::move(tangent));
    }
    return out;
}

std::vector<Matrix> representation_jacobians_reverse(const LilBlock& block,
                                                     const ForwardTrace& trace) {
    const std::size_t n = trace.input.rows();
    const std::size_t d = trace.input.cols();
    const std::size_t m = block.representation_dim();
    std::vector<Matrix> out(n, Matrix(m, d));
    for (std::size_t unit = 0; unit < m; ++unit) {
        Matrix seed(n, m);
        for (std::size_t s = 0; s < n; ++s) seed(s, unit) = 1.0;
        const Matrix dx = backward(block, trace, Matrix(), seed).input_grad;
        for (std::size_t s = 0; s < n; ++s)
            for (std::size_t c = 0; c < d; ++c) out[s](unit, c) = dx(s, c);
    }
    return out;
}

std::vector<Matrix*> parameter_views(LilBlock& block) {
    std::vector<Matrix*> views;
    for (DenseLayer& layer : block.body.layers) {
        views.push_back(&layer.weight);
        views.push_back(&layer.bias);
    }
    views.push_back(&block.head.weight);
    views.push_back(&block.head.bias);
    return views;
}

std::vector<const Matrix*> parameter_views(const LilBlock& block) {
    std::vector<const Matrix*> views;
    for (const DenseLayer& layer : block.body.layers) {
        views.push_back(&layer.weight);
        views.push_back(&layer.bias);
    }
    views.push_back(&block.head.weight);
    views.push_back(&block.head.bias);
    return views;
}

BlockGradients zeros_like(const LilBlock& block) {
    BlockGradients g;
    for (const DenseLayer& layer : block.body.layers)
        g.body.layers.push_back({Matrix(layer.weight.rows(), layer.weight.cols()),
                                 Matrix(1, layer.bias.cols())});
    g.head = {Matrix(block.head.weight.rows(), block.head.weight.cols()),
              Matrix(1, block.head.bias.cols())};
    return g;
}

std::vector<int> predict_classes(const Matrix& logits) {
    std::vector<int> out(logits.rows());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        const auto row = logits.row(r);
        std::size_t best = 0;
        for (std::size_t c = 1; c < row.size(); ++c)
            if (row[c] > row[best]) best = c;
        out[r] = static_cast<int>(best);
    }
    return out;
}

}  // namespace lil
