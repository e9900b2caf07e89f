#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace lil {

/// Dense row-major matrix of doubles. The numeric carrier for inputs,
/// representations, weights, distance matrices and gradients.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    const std::vector<double>& data() const { return data_; }

    void fill(double v);
    bool all_finite() const;

    /// Copy of the listed rows, in the given order.
    Matrix select_rows(std::span<const std::size_t> indices) const;

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double s);

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);

Matrix matmul(const Matrix& a, const Matrix& b);
/// a * b^T without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// a^T * b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix hadamard(const Matrix& a, const Matrix& b);

/// Sum over columns: N x C -> N x 1.
Matrix row_sums(const Matrix& a);
/// Sum over rows: N x C -> 1 x C.
Matrix col_sums(const Matrix& a);
/// Adds a 1 x C row vector to every row of an N x C matrix.
void add_row_broadcast(Matrix& a, const Matrix& row);

double max_abs(const Matrix& a);
double frobenius_norm(const Matrix& a);

/// Euclidean distance between two equally sized vectors, computed as the
/// square root of a squared norm clamped at zero.
double euclidean_distance(std::span<const double> a, std::span<const double> b);

/// N x N matrix of Euclidean distances between the rows of `points`.
Matrix pairwise_distances(const Matrix& points);

/// Seedable random source. Every stochastic operation takes one explicitly.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. Uniform and Gaussian draws are derived from raw 64-bit outputs
/// here rather than through <random> distributions, whose algorithms differ
/// between standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 bits of mantissa.
    double uniform();
    double uniform(double lo, double hi);
    /// Uniform integer in [0, bound), rejection-sampled.
    std::uint64_t below(std::uint64_t bound);
    /// Standard normal via the Marsaglia polar method.
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// rows x cols i.i.d. N(mean, variance) draws.
Matrix gaussian_sample(Rng& rng, std::size_t rows, std::size_t cols, double mean, double variance);

}  // namespace lil
