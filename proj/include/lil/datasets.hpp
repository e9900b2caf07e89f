#pragma once

#include "lil/linalg.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace lil {

enum class Split : std::uint8_t { Train, Test };

const char* to_string(Split s);
Split parse_split(const std::string& s);

/// Points with one label vector per hierarchy level (coarse to fine) and a
/// per-row train/test tag.
struct LabeledDataset {
    Matrix points;
    std::vector<std::vector<int>> labels;
    std::vector<Split> split;

    std::size_t size() const { return points.rows(); }
    std::size_t dim() const { return points.cols(); }
    std::size_t levels() const { return labels.size(); }

    /// Row counts agree and every finer level refines the one above it.
    void validate() const;
    /// Rows with the given tag, in order.
    LabeledDataset subset(Split s) const;
    LabeledDataset select(std::span<const std::size_t> rows) const;
    std::size_t num_classes(std::size_t level) const;
};

/// Tags a `test_fraction` share of rows (rounded) as test, chosen by a
/// seeded permutation.
void assign_random_split(LabeledDataset& ds, double test_fraction, Rng& rng);

/// Two linked unit circles: ring A (cos t, sin t, 0) labelled 0 and ring B
/// (1 + cos t, 0, sin t) labelled 1, t uniform on [0, 2pi). Each ring passes
/// through the other's disc. Rows are split 80/20 train/test.
LabeledDataset gen_entangled_rings(std::size_t n_per_ring, double noise_variance, Rng& rng);

/// Torus ((R + r cos th) cos ph, (R + r cos th) sin ph, r sin th) with angles
/// uniform on [0, 2pi). Level 0 splits ph into two halves, level 1 into four
/// quarters. Rows are split 80/20 train/test.
LabeledDataset gen_torus(std::size_t n, double major_radius, double minor_radius,
                         double noise_variance, Rng& rng);

/// Raw contents of an IDX image/label file pair.
struct IdxImages {
    std::uint32_t count = 0;
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<std::uint8_t> pixels;
};

struct IdxLabels {
    std::uint32_t count = 0;
    std::vector<std::uint8_t> labels;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes);
IdxLabels parse_idx_labels(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> serialize_idx_images(const IdxImages& images);
std::vector<std::uint8_t> serialize_idx_labels(const IdxLabels& labels);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// MNIST-style loader: pixels scaled to [0, 1], one row per image, one label
/// level with classes 0-9. Every row is tagged `split`.
LabeledDataset load_mnist_idx(const std::filesystem::path& images_path,
                              const std::filesystem::path& labels_path, Split split = Split::Train);

/// Epoch-wise shuffled partition of 0..n-1 into batches of `batch_size`; the
/// last batch may be short.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, Rng& rng);

/// CSV with columns x_0..x_{D-1}, label_0..label_{K-1}, split.
void write_dataset_csv(std::ostream& out, const LabeledDataset& ds);
LabeledDataset read_dataset_csv(std::istream& in);
void save_dataset_csv(const std::filesystem::path& path, const LabeledDataset& ds);
LabeledDataset load_dataset_csv(const std::filesystem::path& path);

}  // namespace lil
