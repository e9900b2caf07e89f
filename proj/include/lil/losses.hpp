#pragma once

#include "lil/linalg.hpp"
#include "lil/network.hpp"

#include <span>
#include <vector>

namespace lil {

/// Binary pair selector: G(i,j) = 1 iff i != j and samples i and j share a
/// class (or unconditionally in global mode). The diagonal is always zero.
struct IndexingMatrix {
    Matrix g;

    std::size_t size() const { return g.rows(); }
};

IndexingMatrix build_indexing_matrix(std::span<const int> labels, bool global_mode = false);

struct LossWeights {
    double alpha = 1.0;
    double beta = 0.0;

    void validate() const;
};

struct LossAndGrad {
    double loss = 0.0;
    Matrix grad;
};

/// Mean negative log-likelihood of softmax(logits) over the batch.
/// Gradient is (softmax - onehot) / N.
LossAndGrad softmax_cross_entropy(const Matrix& logits, std::span<const int> targets);

/// Pairs whose representation distance falls below this are left out of
/// the isometric gradient.
inline constexpr double kDegeneratePairDistance = 1e-12;

/// (1/N^2) * || G o D_in - G o D_phi ||_F^2 and its gradient with respect to
/// the representation rows. D_in is held constant.
LossAndGrad isometric_loss(const Matrix& input_distances, const Matrix& phi,
                           const IndexingMatrix& g);

struct CombinedLoss {
    double total = 0.0;
    double cse = 0.0;
    double iso = 0.0;
    Matrix dlogits;
    /// Empty when beta == 0.
    Matrix dphi;
};

/// alpha * CSE(logits) + beta * ISO(representation). The isometric term is
/// not evaluated at all when beta is zero.
CombinedLoss combined_loss(const ForwardTrace& trace, const Matrix& input_distances,
                           const IndexingMatrix& g, std::span<const int> targets,
                           const LossWeights& weights);

/// Per-pair building blocks of the closed-form input gradient.
struct IsoGradTerms {
    struct Pair {
        std::size_t i = 0;
        std::size_t j = 0;
        /// Unit vector (phi_i - phi_j) / d(phi_i, phi_j).
        std::vector<double> direction;
    };

    /// d(x_i, x_j) - d(phi_i, phi_j).
    Matrix residual;
    /// Selected, non-degenerate pairs with i > j.
    std::vector<Pair> pairs;
};

IsoGradTerms iso_grad_terms(const Matrix& input_distances, const Matrix& phi,
                            const IndexingMatrix& g);

/// Input-space gradient of beta * ISO assembled from residuals, unit
/// difference directions and per-sample representation Jacobians
/// (n_L x D each), pair by pair. Independent of reverse-mode backprop.
Matrix closed_form_input_gradient(const Matrix& input_distances, const ForwardTrace& trace,
                                  const IndexingMatrix& g, double beta,
                                  const std::vector<Matrix>& jacobians);

}  // namespace lil
