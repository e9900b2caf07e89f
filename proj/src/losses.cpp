#include "lil/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lil {

namespace {

void check_square(const Matrix& m, std::size_t n, const char* what) {
    if (m.rows() != n || m.cols() != n)
        throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(n) + "x" +
                                    std::to_string(n) + ", got " + std::to_string(m.rows()) + "x" +
                                    std::to_string(m.cols()));
}

}  // namespace

IndexingMatrix build_indexing_matrix(std::span<const int> labels, bool global_mode) {
    const std::size_t n = labels.size();
    IndexingMatrix out{Matrix(n, n)};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && (global_mode || labels[i] == labels[j])) out.g(i, j) = 1.0;
    return out;
}

void LossWeights::validate() const {
    if (!std::isfinite(alpha) || alpha < 0.0)
        throw std::invalid_argument("loss weights: alpha must be finite and >= 0");
    if (!std::isfinite(beta) || beta < 0.0)
        throw std::invalid_argument("loss weights: beta must be finite and >= 0");
}

LossAndGrad softmax_cross_entropy(const Matrix& logits, std::span<const int> targets) {
    const std::size_t n = logits.rows();
    const std::size_t c = logits.cols();
    if (targets.size() != n)
        throw std::invalid_argument("softmax_cross_entropy: " + std::to_string(targets.size()) +
                                    " targets for " + std::to_string(n) + " rows");
    if (n == 0) throw std::invalid_argument("softmax_cross_entropy: empty batch");

    LossAndGrad out{0.0, Matrix(n, c)};
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
        const int t = targets[r];
        if (t < 0 || static_cast<std::size_t>(t) >= c)
            throw std::invalid_argument("softmax_cross_entropy: target " + std::to_string(t) +
                                        " outside [0, " + std::to_string(c) + ")");
        const auto z = logits.row(r);
        const double zmax = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (double v : z) sum += std::exp(v - zmax);
        const double log_sum = std::log(sum);
        out.loss += (log_sum - (z[static_cast<std::size_t>(t)] - zmax)) * inv_n;
        auto g = out.grad.row(r);
        for (std::size_t k = 0; k < c; ++k) g[k] = std::exp(z[k] - zmax - log_sum) * inv_n;
        g[static_cast<std::size_t>(t)] -= inv_n;
    }
    return out;
}

LossAndGrad isometric_loss(const Matrix& input_distances, const Matrix& phi,
                           const IndexingMatrix& g) {
    const std::size_t n = phi.rows();
    if (n == 0) throw std::invalid_argument("isometric_loss: empty batch");
    check_square(input_distances, n, "isometric_loss: input distances");
    check_square(g.g, n, "isometric_loss: indexing matrix");

    const std::size_t dim = phi.cols();
    const double inv_n2 = 1.0 / static_cast<double>(n * n);
    LossAndGrad out{0.0, Matrix(n, dim)};
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto pi = phi.row(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            if (g.g(i, j) == 0.0) continue;
            const auto pj = phi.row(j);
            const double d_phi = euclidean_distance(pi, pj);
            const double h = input_distances(i, j) - d_phi;
            // (i,j) and (j,i) both appear in the Frobenius norm.
            sum_sq += 2.0 * h * h;
            if (d_phi < kDegeneratePairDistance) continue;
            // d/dphi_i of 2h^2 = -4 h (phi_i - phi_j) / d_phi, mirrored for phi_j.
            const double coef = -4.0 * h * inv_n2 / d_phi;
            auto gi = out.grad.row(i);
            auto gj = out.grad.row(j);
            for (std::size_t k = 0; k < dim; ++k) {
                const double diff = coef * (pi[k] - pj[k]);
                gi[k] += diff;
                gj[k] -= diff;
            }
        }
    }
    out.loss = sum_sq * inv_n2;
    return out;
}

CombinedLoss combined_loss(const ForwardTrace& trace, const Matrix& input_distances,
                           const IndexingMatrix& g, std::span<const int> targets,
                           const LossWeights& weights) {
    weights.validate();
    CombinedLoss out;
    LossAndGrad cse = softmax_cross_entropy(trace.logits, targets);
    out.cse = cse.loss;
    out.dlogits = std::move(cse.grad);
    out.dlogits *= weights.alpha;
    if (weights.beta != 0.0) {
        LossAndGrad iso = isometric_loss(input_distances, trace.representation(), g);
        out.iso = iso.loss;
        out.dphi = std::move(iso.grad);
        out.dphi *= weights.beta;
    }
    out.total = weights.alpha * out.cse + weights.beta * out.iso;
    return out;
}

IsoGradTerms iso_grad_terms(const Matrix& input_distances, const Matrix& phi,
                            const IndexingMatrix& g) {
    const std::size_t n = phi.rows();
    check_square(input_distances, n, "iso_grad_terms: input distances");
    check_square(g.g, n, "iso_grad_terms: indexing matrix");
    IsoGradTerms terms{Matrix(n, n), {}};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            const double d_phi = euclidean_distance(phi.row(i), phi.row(j));
            const double h = input_distances(i, j) - d_phi;
            terms.residual(i, j) = h;
            terms.residual(j, i) = h;
            if (g.g(i, j) == 0.0 || d_phi < kDegeneratePairDistance) continue;
            IsoGradTerms::Pair pair{i, j, std::vector<double>(phi.cols())};
            for (std::size_t k = 0; k < phi.cols(); ++k)
                pair.direction[k] = (phi(i, k) - phi(j, k)) / d_phi;
            terms.pairs.push_back(std::move(pair));
        }
    }
    return terms;
}

Matrix closed_form_input_gradient(const Matrix& input_distances, const ForwardTrace& trace,
                                  const IndexingMatrix& g, double beta,
                                  const std::vector<Matrix>& jacobians) {
    const Matrix& phi = trace.representation();
    const std::size_t n = phi.rows();
    const std::size_t d = trace.input.cols();
    if (jacobians.size() != n)
        throw std::invalid_argument("closed_form_input_gradient: one Jacobian per sample required");
    for (const Matrix& jac : jacobians)
        if (jac.rows() != phi.cols() || jac.cols() != d)
            throw std::invalid_argument("closed_form_input_gradient: Jacobian shape mismatch");

    Matrix grad(n, d);
    if (beta == 0.0) return grad;
    const IsoGradTerms terms = iso_grad_terms(input_distances, phi, g);
    // Sum over unordered pairs of H_ij * J_ij^T * (dphi_j/dx - dphi_i/dx). Each
    // unordered pair stands for both orderings of the Frobenius norm, hence 4.
    const double scale = 4.0 * beta / static_cast<double>(n * n);
    for (const auto& pair : terms.pairs) {
        const double coef = scale * terms.residual(pair.i, pair.j);
        const Matrix& jac_i = jacobians[pair.i];
        const Matrix& jac_j = jacobians[pair.j];
        auto row_i = grad.row(pair.i);
        auto row_j = grad.row(pair.j);
        for (std::size_t u = 0; u < pair.direction.size(); ++u) {
            const double w = coef * pair.direction[u];
            if (w == 0.0) continue;
            const auto ji = jac_i.row(u);
            const auto jj = jac_j.row(u);
            for (std::size_t c = 0; c < d; ++c) {
                row_j[c] += w * jj[c];
                row_i[c] -= w * ji[c];
            }
        }
    }
    return grad;
}

}  // namespace lil
