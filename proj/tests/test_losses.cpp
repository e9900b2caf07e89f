#include "lil/losses.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

using namespace lil;

TEST(IndexingMatrix, SameClassPairsOnly) {
    const std::vector<int> labels{0, 0, 1};
    EXPECT_EQ(build_indexing_matrix(labels).g, (Matrix{{0, 1, 0}, {1, 0, 0}, {0, 0, 0}}));
}

TEST(IndexingMatrix, DistinctLabelsGiveZero) {
    const std::vector<int> labels{0, 1, 2, 3};
    EXPECT_EQ(build_indexing_matrix(labels).g, Matrix(4, 4, 0.0));
}

TEST(IndexingMatrix, GlobalModeOffDiagonalOnes) {
    const std::vector<int> labels{0, 1, 2};
    EXPECT_EQ(build_indexing_matrix(labels, true).g, (Matrix{{0, 1, 1}, {1, 0, 1}, {1, 1, 0}}));
}

TEST(SoftmaxCrossEntropy, UniformLogitsGiveLogC) {
    const std::vector<int> t{0, 3, 2};
    EXPECT_NEAR(softmax_cross_entropy(Matrix(3, 5, 0.7), t).loss, std::log(5.0), 1e-15);
}

TEST(SoftmaxCrossEntropy, LargeLogitsStable) {
    const std::vector<int> t{0};
    const LossAndGrad r = softmax_cross_entropy(Matrix{{1000, 0}}, t);
    EXPECT_TRUE(std::isfinite(r.loss));
    EXPECT_NEAR(r.loss, 0.0, 1e-300);
    EXPECT_TRUE(r.grad.all_finite());
}

TEST(SoftmaxCrossEntropy, HandValue) {
    const std::vector<int> t{2};
    const double expected = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0)) - 3.0;
    EXPECT_NEAR(expected, 0.407606, 1e-6);
    EXPECT_NEAR(softmax_cross_entropy(Matrix{{1, 2, 3}}, t).loss, expected, 1e-14);
}

TEST(SoftmaxCrossEntropy, OutOfRangeTargetThrows) {
    const std::vector<int> bad{2};
    EXPECT_THROW(softmax_cross_entropy(Matrix{{0, 0}}, bad), std::invalid_argument);
    const std::vector<int> neg{-1};
    EXPECT_THROW(softmax_cross_entropy(Matrix{{0, 0}}, neg), std::invalid_argument);
}

TEST(SoftmaxCrossEntropy, GradientRowsSumToZeroAndMatchDifferences) {
    Rng rng(1);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix logits = oracle::random_matrix(rng, 6, 4, -3, 3);
        const auto targets = oracle::random_labels(rng, 6, 4);
        const LossAndGrad r = softmax_cross_entropy(logits, targets);
        EXPECT_NEAR(r.loss, oracle::naive_cse(logits, targets), 1e-13);
        const Matrix sums = row_sums(r.grad);
        for (double s : sums.values()) EXPECT_NEAR(s, 0.0, 1e-12);
        auto f = [&] { return oracle::naive_cse(logits, targets); };
        EXPECT_LT(oracle::relative_error(r.grad, oracle::numeric_gradient(f, logits)), 1e-6);
    }
}

TEST(IsometricLoss, ExactIsometryIsZero) {
    Rng rng(2);
    const Matrix x = oracle::random_matrix(rng, 5, 3);
    const std::vector<int> labels{0, 0, 1, 1, 1};
    const LossAndGrad r = isometric_loss(pairwise_distances(x), x, build_indexing_matrix(labels));
    EXPECT_EQ(r.loss, 0.0);
    EXPECT_LT(max_abs(r.grad), 1e-15);
}

TEST(IsometricLoss, ThreePointScaling) {
    const Matrix x{{0, 0}, {1, 0}, {0, 1}};
    const std::vector<int> labels{0, 0, 0};
    const LossAndGrad r = isometric_loss(pairwise_distances(x), x * 2.0, build_indexing_matrix(labels));
    EXPECT_NEAR(r.loss, 8.0 / 9.0, 1e-15);
    EXPECT_NEAR(r.loss, oracle::brute_force_iso(x, x * 2.0, labels), 1e-15);
}

TEST(IsometricLoss, OneDimensionalPair) {
    const Matrix x{{0}, {1}};
    const std::vector<int> labels{0, 0};
    const LossAndGrad r = isometric_loss(pairwise_distances(x), Matrix{{0}, {2}}, build_indexing_matrix(labels));
    EXPECT_NEAR(r.loss, 0.5, 1e-15);
    EXPECT_NEAR(r.grad(1, 0), 1.0, 1e-15);
    EXPECT_NEAR(r.grad(0, 0), -1.0, 1e-15);
}

TEST(IsometricLoss, ShapeMismatchThrows) {
    const std::vector<int> labels{0, 0};
    EXPECT_THROW(isometric_loss(Matrix(3, 3), Matrix(2, 2), build_indexing_matrix(labels)),
                 std::invalid_argument);
}

TEST(IsometricLoss, BruteForceDoubleLoop) {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.below(5);
        const Matrix x = oracle::random_matrix(rng, n, 1 + rng.below(4), -2, 2);
        const Matrix phi = oracle::random_matrix(rng, n, 1 + rng.below(4), -2, 2);
        const auto labels = oracle::random_labels(rng, n, 2);
        for (bool global : {false, true}) {
            const double got = isometric_loss(pairwise_distances(x), phi, build_indexing_matrix(labels, global)).loss;
            EXPECT_NEAR(got, oracle::brute_force_iso(x, phi, labels, global), 1e-12);
        }
    }
}

TEST(IsometricLoss, GradientMatchesDifferences) {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + rng.below(5);
        const Matrix x = oracle::random_matrix(rng, n, 3);
        Matrix phi = oracle::random_matrix(rng, n, 2);
        const auto labels = oracle::random_labels(rng, n, 2);
        const Matrix d = pairwise_distances(x);
        const IndexingMatrix g = build_indexing_matrix(labels);
        const LossAndGrad r = isometric_loss(d, phi, g);
        auto f = [&] { return oracle::brute_force_iso(x, phi, labels); };
        EXPECT_LT(oracle::relative_error(r.grad, oracle::numeric_gradient(f, phi)), 1e-6);
    }
}

TEST(IsometricLoss, RigidMotionInvariance) {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix x = oracle::random_matrix(rng, 6, 3);
        const Matrix phi = oracle::random_matrix(rng, 6, 4);
        const auto labels = oracle::random_labels(rng, 6, 2);
        const Matrix d = pairwise_distances(x);
        const IndexingMatrix g = build_indexing_matrix(labels);
        Matrix moved = matmul(phi, oracle::random_rotation(rng, 4));
        add_row_broadcast(moved, oracle::random_matrix(rng, 1, 4, -5, 5));
        EXPECT_NEAR(isometric_loss(d, moved, g).loss, isometric_loss(d, phi, g).loss, 1e-9);
    }
}

TEST(IsometricLoss, GlobalModeUpperBoundsClassMode) {
    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix x = oracle::random_matrix(rng, 6, 3);
        const Matrix phi = oracle::random_matrix(rng, 6, 3);
        const auto labels = oracle::random_labels(rng, 6, 3);
        const Matrix d = pairwise_distances(x);
        EXPECT_GE(isometric_loss(d, phi, build_indexing_matrix(labels, true)).loss,
                  isometric_loss(d, phi, build_indexing_matrix(labels)).loss);
    }
}

TEST(IsometricLoss, DegeneratePairsSkippedInGradient) {
    const Matrix x{{0, 0}, {1, 0}};
    const std::vector<int> labels{0, 0};
    const LossAndGrad r = isometric_loss(pairwise_distances(x), Matrix{{0.5, 0.5}, {0.5, 0.5}},
                                         build_indexing_matrix(labels));
    EXPECT_NEAR(r.loss, 0.5, 1e-15);
    EXPECT_EQ(max_abs(r.grad), 0.0);
    EXPECT_TRUE(r.grad.all_finite());
}

namespace {

ForwardTrace trace_with(const Matrix& phi, const Matrix& logits) {
    ForwardTrace t;
    t.activations.push_back(phi);
    t.logits = logits;
    return t;
}

}  // namespace

TEST(CombinedLoss, BetaZeroIsPureCse) {
    Rng rng(7);
    const Matrix x = oracle::random_matrix(rng, 4, 3);
    const std::vector<int> labels{0, 1, 0, 1};
    const ForwardTrace t = trace_with(oracle::random_matrix(rng, 4, 2), oracle::random_matrix(rng, 4, 2));
    const CombinedLoss l = combined_loss(t, pairwise_distances(x), build_indexing_matrix(labels), labels, {2.0, 0.0});
    EXPECT_EQ(l.total, 2.0 * softmax_cross_entropy(t.logits, labels).loss);
    EXPECT_EQ(l.iso, 0.0);
    EXPECT_TRUE(l.dphi.empty());
}

TEST(CombinedLoss, AlphaZeroIsometricEmbeddingIsZero) {
    const Matrix x{{0, 0}, {1, 0}, {0, 1}};
    const std::vector<int> labels{0, 0, 0};
    const CombinedLoss l = combined_loss(trace_with(x, Matrix(3, 2, 0.0)), pairwise_distances(x),
                                         build_indexing_matrix(labels), labels, {0.0, 1.0});
    EXPECT_EQ(l.total, 0.0);
}

TEST(CombinedLoss, SumOfComponents) {
    const Matrix x{{0, 0}, {1, 0}, {0, 1}};
    const std::vector<int> labels{0, 0, 0};
    const CombinedLoss l = combined_loss(trace_with(x * 2.0, Matrix(3, 2, 0.0)), pairwise_distances(x),
                                         build_indexing_matrix(labels), labels, {1.0, 1.0});
    EXPECT_NEAR(l.total, std::numbers::ln2 + 8.0 / 9.0, 1e-15);
    EXPECT_NEAR(l.total, 1.582036, 1e-6);
}

TEST(CombinedLoss, WeightValidation) {
    EXPECT_THROW((LossWeights{-1.0, 0.0}).validate(), std::invalid_argument);
    EXPECT_THROW((LossWeights{1.0, -0.5}).validate(), std::invalid_argument);
    EXPECT_THROW((LossWeights{1.0, std::nan("")}).validate(), std::invalid_argument);
}

TEST(CombinedLoss, GradientsMatchDifferences) {
    Rng rng(8);
    for (int trial = 0; trial < 5; ++trial) {
        LilBlock b = oracle::random_block(rng, 3, {4, 4}, 2);
        Matrix x = oracle::random_matrix(rng, 5, 3);
        const auto labels = oracle::random_labels(rng, 5, 2);
        for (const LossWeights w : {LossWeights{1.0, 0.0}, LossWeights{0.0, 1.0}, LossWeights{0.7, 2.5}})
            EXPECT_LT(oracle::combined_gradient_fd_error(b, x, labels, w), 1e-6);
    }
}

TEST(ClosedForm, ExactIsometryAndBetaZeroGiveZero) {
    Rng rng(9);
    LilBlock b = oracle::random_block(rng, 2, {2}, 2);
    const Matrix x = oracle::random_matrix(rng, 4, 2);
    const ForwardTrace t = forward(b, x);
    const std::vector<int> labels{0, 0, 0, 0};
    const IndexingMatrix g = build_indexing_matrix(labels);
    const auto jac = representation_jacobians(b, t);
    EXPECT_EQ(max_abs(closed_form_input_gradient(pairwise_distances(x), t, g, 0.0, jac)), 0.0);
    // D_in taken from the representation itself leaves every residual at zero.
    EXPECT_LT(max_abs(closed_form_input_gradient(pairwise_distances(t.representation()), t, g, 1.0, jac)), 1e-16);
}

TEST(ClosedForm, MatchesBackprop) {
    Rng rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        const LilBlock b = oracle::random_block(rng, 3, {4, 4}, 2);
        const Matrix x = oracle::random_matrix(rng, 4, 3);
        const std::vector<int> labels{0, 0, 0, 0};
        const ForwardTrace t = forward(b, x);
        const Matrix d = pairwise_distances(x);
        const IndexingMatrix g = build_indexing_matrix(labels);
        const double beta = 0.5 + trial;
        const Matrix closed = closed_form_input_gradient(d, t, g, beta, representation_jacobians(b, t));
        const Matrix dphi = isometric_loss(d, t.representation(), g).grad * beta;
        const Matrix back = backward(b, t, Matrix(), dphi).input_grad;
        EXPECT_LT(oracle::relative_error(closed, back), 1e-8);
    }
}

TEST(IsoGradTerms, PairsAndDirections) {
    const Matrix x{{0, 0}, {3, 0}, {0, 4}};
    const Matrix phi{{0, 0}, {1, 0}, {5, 5}};
    const std::vector<int> labels{0, 0, 1};
    const IsoGradTerms terms = iso_grad_terms(pairwise_distances(x), phi, build_indexing_matrix(labels));
    ASSERT_EQ(terms.pairs.size(), 1u);
    EXPECT_EQ(terms.pairs[0].i, 1u);
    EXPECT_EQ(terms.pairs[0].j, 0u);
    EXPECT_EQ(terms.pairs[0].direction, (std::vector<double>{1.0, 0.0}));
    EXPECT_DOUBLE_EQ(terms.residual(1, 0), 2.0);
}
