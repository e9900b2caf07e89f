#include "lil/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lil {

void AdamHyperparams::validate() const {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("adam: lr must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("adam: beta1 must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw std::invalid_argument("adam: beta2 must be in [0, 1)");
    if (!(eps > 0.0)) throw std::invalid_argument("adam: eps must be > 0");
}

void adam_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads,
               AdamState& state) {
    if (params.size() != grads.size())
        throw std::invalid_argument("adam_step: " + std::to_string(params.size()) +
                                    " parameters but " + std::to_string(grads.size()) + " gradients");
    for (std::size_t p = 0; p < params.size(); ++p)
        if (params[p]->rows() != grads[p]->rows() || params[p]->cols() != grads[p]->cols())
            throw std::invalid_argument("adam_step: gradient " + std::to_string(p) +
                                        " shape mismatch");

    if (state.m.empty()) {
        for (const Matrix* p : params) {
            state.m.emplace_back(p->rows(), p->cols());
            state.v.emplace_back(p->rows(), p->cols());
        }
    } else if (state.m.size() != params.size()) {
        throw std::invalid_argument("adam_step: state was built for a different parameter set");
    }

    const AdamHyperparams& h = state.hyper;
    state.t += 1;
    const double t = static_cast<double>(state.t);
    const double correct1 = 1.0 - std::pow(h.beta1, t);
    const double correct2 = 1.0 - std::pow(h.beta2, t);

    for (std::size_t p = 0; p < params.size(); ++p) {
        auto w = params[p]->values();
        auto g = grads[p]->values();
        auto m = state.m[p].values();
        auto v = state.v[p].values();
        if (m.size() != w.size())
            throw std::invalid_argument("adam_step: state shape mismatch for parameter " +
                                        std::to_string(p));
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
            v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
            const double m_hat = m[i] / correct1;
            const double v_hat = v[i] / correct2;
            w[i] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
        }
    }
}

}  // namespace lil
