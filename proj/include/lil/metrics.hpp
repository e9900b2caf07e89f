#pragma once

#include "lil/datasets.hpp"
#include "lil/linalg.hpp"
#include "lil/network.hpp"

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace lil {

/// Fraction of argmax-correct predictions of the block classifying `level`.
double accuracy(const StackedLilNetwork& net, const LabeledDataset& ds, std::size_t level);

/// Representation produced by the block that classifies `level`.
Matrix representation_at_level(const StackedLilNetwork& net, const Matrix& x, std::size_t level);

struct ClassIsometry {
    int label = 0;
    std::size_t n_pairs = 0;
    /// Within-class pair distances, input space then representation space.
    std::vector<double> input_distances;
    std::vector<double> repr_distances;
    /// NaN when either distance set has zero variance.
    double pearson_r = 0.0;
    double mean_abs_residual = 0.0;
    /// Max d(phi_i, phi_j) / d(x_i, x_j) over pairs with input distance > 1e-9.
    double empirical_k = 0.0;
};

struct IsometryReport {
    /// Ordered by class label.
    std::vector<ClassIsometry> classes;
    std::vector<std::string> warnings;

    const ClassIsometry* find(int label) const;
};

IsometryReport isometry_report(const Matrix& x, const Matrix& phi, std::span<const int> labels);

/// class,pearson_r,mean_abs_residual,empirical_K,n_pairs
void write_isometry_csv(std::ostream& out, const IsometryReport& report);

struct HistogramRow {
    int label = 0;
    std::string space;  // "input" or "repr"
    double bin_lo = 0.0;
    double bin_hi = 0.0;
    std::size_t count = 0;
};

/// Per class, counts of input and representation pairwise distances over
/// `n_bins` shared equal-width bins spanning both sets. The last bin is
/// closed on the right.
std::vector<HistogramRow> distance_histograms(const Matrix& x, const Matrix& phi,
                                              std::span<const int> labels, std::size_t n_bins);

/// class,space,bin_lo,bin_hi,count
void write_histogram_csv(std::ostream& out, const std::vector<HistogramRow>& rows);

/// Up to `n_pairs` same-class index pairs (i < j). All pairs are returned
/// when there are no more than n_pairs; otherwise pairs are drawn with
/// replacement.
std::vector<std::pair<std::size_t, std::size_t>> sample_same_class_pairs(std::span<const int> labels,
                                                                         std::size_t n_pairs, Rng& rng);

/// Max d(y_i, y_j) / d(x_i, x_j) over the pairs with d(x_i, x_j) > 1e-9.
double lipschitz_ratio(const Matrix& x, const Matrix& y,
                       std::span<const std::pair<std::size_t, std::size_t>> pairs);

/// Empirical within-class Lipschitz estimate of `map` on sampled pairs.
double empirical_lipschitz(const std::function<Matrix(const Matrix&)>& map, const Matrix& x,
                           std::span<const int> labels, std::size_t n_pairs, Rng& rng);

/// Same, for the representation of the block classifying `level`.
double empirical_lipschitz(const StackedLilNetwork& net, const LabeledDataset& ds,
                           std::size_t level, std::size_t n_pairs, Rng& rng);

double pearson_correlation(std::span<const double> a, std::span<const double> b);

}  // namespace lil
