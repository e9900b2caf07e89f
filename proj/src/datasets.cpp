#include "lil/datasets.hpp"

#include "lil/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

namespace lil {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset,
                        const char* field) {
    if (bytes.size() < offset + 4)
        throw FormatError(field, "file truncated before byte " + std::to_string(offset + 4));
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::string hex32(std::uint32_t v) {
    std::ostringstream s;
    s << "0x" << std::hex << v;
    return s.str();
}

void add_noise(Matrix& points, double noise_variance, Rng& rng) {
    if (noise_variance == 0.0) return;
    points += gaussian_sample(rng, points.rows(), points.cols(), 0.0, noise_variance);
}

void append_double(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream s(line);
    while (std::getline(s, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

const char* to_string(Split s) { return s == Split::Train ? "train" : "test"; }

Split parse_split(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "test") return Split::Test;
    throw FormatError("split", "expected 'train' or 'test', got '" + s + "'");
}

void LabeledDataset::validate() const {
    const std::size_t n = points.rows();
    if (split.size() != n)
        throw std::invalid_argument("dataset: split tags length " + std::to_string(split.size()) +
                                    " != " + std::to_string(n));
    for (std::size_t k = 0; k < labels.size(); ++k) {
        if (labels[k].size() != n)
            throw std::invalid_argument("dataset: label level " + std::to_string(k) + " has length " +
                                        std::to_string(labels[k].size()) + ", expected " +
                                        std::to_string(n));
        for (int l : labels[k])
            if (l < 0) throw std::invalid_argument("dataset: negative label at level " + std::to_string(k));
    }
    for (std::size_t k = 1; k < labels.size(); ++k) {
        std::vector<int> parent(num_classes(k), -1);
        for (std::size_t i = 0; i < n; ++i) {
            int& p = parent[static_cast<std::size_t>(labels[k][i])];
            if (p == -1) p = labels[k - 1][i];
            if (p != labels[k - 1][i])
                throw std::invalid_argument("dataset: level " + std::to_string(k) + " class " +
                                            std::to_string(labels[k][i]) +
                                            " does not refine a single level " +
                                            std::to_string(k - 1) + " class");
        }
    }
}

LabeledDataset LabeledDataset::select(std::span<const std::size_t> rows) const {
    LabeledDataset out;
    out.points = points.select_rows(rows);
    out.labels.resize(labels.size());
    for (std::size_t k = 0; k < labels.size(); ++k) {
        out.labels[k].reserve(rows.size());
        for (std::size_t r : rows) out.labels[k].push_back(labels[k][r]);
    }
    for (std::size_t r : rows) out.split.push_back(split[r]);
    return out;
}

LabeledDataset LabeledDataset::subset(Split s) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < split.size(); ++i)
        if (split[i] == s) rows.push_back(i);
    return select(rows);
}

std::size_t LabeledDataset::num_classes(std::size_t level) const {
    if (level >= labels.size())
        throw std::invalid_argument("dataset: no label level " + std::to_string(level));
    int m = -1;
    for (int l : labels[level]) m = std::max(m, l);
    return static_cast<std::size_t>(m + 1);
}

void assign_random_split(LabeledDataset& ds, double test_fraction, Rng& rng) {
    if (!(test_fraction >= 0.0 && test_fraction < 1.0))
        throw std::invalid_argument("test fraction must be in [0, 1)");
    const std::size_t n = ds.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
    ds.split.assign(n, Split::Train);
    for (std::size_t i = 0; i < n_test; ++i) ds.split[order[i]] = Split::Test;
}

LabeledDataset gen_entangled_rings(std::size_t n_per_ring, double noise_variance, Rng& rng) {
    if (n_per_ring < 3)
        throw std::invalid_argument("rings: n_per_ring must be >= 3, got " + std::to_string(n_per_ring));
    if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance))
        throw std::invalid_argument("rings: noise variance must be finite and >= 0");
    LabeledDataset ds;
    ds.points = Matrix(2 * n_per_ring, 3);
    ds.labels.assign(1, std::vector<int>(2 * n_per_ring));
    for (std::size_t i = 0; i < n_per_ring; ++i) {
        const double t = rng.uniform(0.0, kTwoPi);
        ds.points(i, 0) = std::cos(t);
        ds.points(i, 1) = std::sin(t);
        ds.points(i, 2) = 0.0;
        ds.labels[0][i] = 0;
    }
    for (std::size_t i = n_per_ring; i < 2 * n_per_ring; ++i) {
        const double t = rng.uniform(0.0, kTwoPi);
        ds.points(i, 0) = 1.0 + std::cos(t);
        ds.points(i, 1) = 0.0;
        ds.points(i, 2) = std::sin(t);
        ds.labels[0][i] = 1;
    }
    add_noise(ds.points, noise_variance, rng);
    assign_random_split(ds, 0.2, rng);
    return ds;
}

LabeledDataset gen_torus(std::size_t n, double major_radius, double minor_radius,
                         double noise_variance, Rng& rng) {
    if (n < 1) throw std::invalid_argument("torus: n must be >= 1");
    if (!(minor_radius > 0.0) || !(major_radius > minor_radius))
        throw std::invalid_argument("torus: need R > r > 0");
    if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance))
        throw std::invalid_argument("torus: noise variance must be finite and >= 0");
    LabeledDataset ds;
    ds.points = Matrix(n, 3);
    ds.labels.assign(2, std::vector<int>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const double theta = rng.uniform(0.0, kTwoPi);
        const double phi = rng.uniform(0.0, kTwoPi);
        const double ring = major_radius + minor_radius * std::cos(theta);
        ds.points(i, 0) = ring * std::cos(phi);
        ds.points(i, 1) = ring * std::sin(phi);
        ds.points(i, 2) = minor_radius * std::sin(theta);
        const int quarter = std::min(3, static_cast<int>(phi / (kTwoPi / 4.0)));
        ds.labels[1][i] = quarter;
        ds.labels[0][i] = quarter / 2;
    }
    add_noise(ds.points, noise_variance, rng);
    assign_random_split(ds, 0.2, rng);
    return ds;
}

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes) {
    const std::uint32_t magic = read_be32(bytes, 0, "image magic");
    if (magic != kIdxImageMagic)
        throw FormatError("image magic", "expected 0x803, got " + hex32(magic));
    IdxImages out;
    out.count = read_be32(bytes, 4, "image count");
    out.rows = read_be32(bytes, 8, "image rows");
    out.cols = read_be32(bytes, 12, "image cols");
    const std::size_t expected =
        std::size_t{out.count} * std::size_t{out.rows} * std::size_t{out.cols};
    if (bytes.size() - 16 < expected)
        throw FormatError("image data", "declared " + std::to_string(out.count) + " images of " +
                                            std::to_string(out.rows) + "x" + std::to_string(out.cols) +
                                            " but only " + std::to_string(bytes.size() - 16) +
                                            " pixel bytes present");
    if (bytes.size() - 16 > expected)
        throw FormatError("image data", "trailing bytes after declared images");
    out.pixels.assign(bytes.begin() + 16, bytes.end());
    return out;
}

IdxLabels parse_idx_labels(std::span<const std::uint8_t> bytes) {
    const std::uint32_t magic = read_be32(bytes, 0, "label magic");
    if (magic != kIdxLabelMagic)
        throw FormatError("label magic", "expected 0x801, got " + hex32(magic));
    IdxLabels out;
    out.count = read_be32(bytes, 4, "label count");
    if (bytes.size() - 8 < out.count)
        throw FormatError("label data", "declared " + std::to_string(out.count) + " labels but only " +
                                            std::to_string(bytes.size() - 8) + " present");
    if (bytes.size() - 8 > out.count)
        throw FormatError("label data", "trailing bytes after declared labels");
    out.labels.assign(bytes.begin() + 8, bytes.end());
    for (std::size_t i = 0; i < out.labels.size(); ++i)
        if (out.labels[i] > 9)
            throw FormatError("label value", "label " + std::to_string(out.labels[i]) + " at index " +
                                                 std::to_string(i) + " is outside 0-9");
    return out;
}

std::vector<std::uint8_t> serialize_idx_images(const IdxImages& images) {
    std::vector<std::uint8_t> out;
    out.reserve(16 + images.pixels.size());
    write_be32(out, kIdxImageMagic);
    write_be32(out, images.count);
    write_be32(out, images.rows);
    write_be32(out, images.cols);
    out.insert(out.end(), images.pixels.begin(), images.pixels.end());
    return out;
}

std::vector<std::uint8_t> serialize_idx_labels(const IdxLabels& labels) {
    std::vector<std::uint8_t> out;
    out.reserve(8 + labels.labels.size());
    write_be32(out, kIdxLabelMagic);
    write_be32(out, labels.count);
    out.insert(out.end(), labels.labels.begin(), labels.labels.end());
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

LabeledDataset load_mnist_idx(const std::filesystem::path& images_path,
                              const std::filesystem::path& labels_path, Split split) {
    const IdxImages images = parse_idx_images(read_file_bytes(images_path));
    const IdxLabels labels = parse_idx_labels(read_file_bytes(labels_path));
    if (images.count != labels.count)
        throw FormatError("count", "image file declares " + std::to_string(images.count) +
                                       " items but label file declares " +
                                       std::to_string(labels.count));
    const std::size_t dim = std::size_t{images.rows} * images.cols;
    LabeledDataset ds;
    ds.points = Matrix(images.count, dim);
    auto values = ds.points.values();
    for (std::size_t i = 0; i < images.pixels.size(); ++i)
        values[i] = static_cast<double>(images.pixels[i]) / 255.0;
    ds.labels.assign(1, std::vector<int>(labels.labels.begin(), labels.labels.end()));
    ds.split.assign(images.count, split);
    return ds;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, Rng& rng) {
    if (batch_size < 1 || batch_size > n)
        throw std::invalid_argument("make_batches: batch size " + std::to_string(batch_size) +
                                    " must be in [1, " + std::to_string(n) + "]");
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(n, start + batch_size);
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

void write_dataset_csv(std::ostream& out, const LabeledDataset& ds) {
    ds.validate();
    std::string line;
    for (std::size_t c = 0; c < ds.dim(); ++c) line += "x_" + std::to_string(c) + ",";
    for (std::size_t k = 0; k < ds.levels(); ++k) line += "label_" + std::to_string(k) + ",";
    line += "split\n";
    out << line;
    for (std::size_t r = 0; r < ds.size(); ++r) {
        line.clear();
        for (double v : ds.points.row(r)) {
            append_double(line, v);
            line += ',';
        }
        for (std::size_t k = 0; k < ds.levels(); ++k) line += std::to_string(ds.labels[k][r]) + ",";
        line += to_string(ds.split[r]);
        line += '\n';
        out << line;
    }
}

LabeledDataset read_dataset_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("csv header", "empty file");
    const auto header = split_csv_line(line);
    std::size_t dim = 0, levels = 0;
    bool has_split = false;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string& h = header[c];
        if (h == "x_" + std::to_string(dim) && levels == 0 && !has_split) {
            ++dim;
        } else if (h == "label_" + std::to_string(levels) && !has_split) {
            ++levels;
        } else if (h == "split" && c + 1 == header.size()) {
            has_split = true;
        } else {
            throw FormatError("csv header", "unexpected column '" + h + "'");
        }
    }
    if (dim == 0) throw FormatError("csv header", "no x_ columns");
    if (!has_split) throw FormatError("csv header", "missing split column");

    std::vector<double> values;
    LabeledDataset ds;
    ds.labels.resize(levels);
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++row;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw FormatError("csv row " + std::to_string(row),
                              "expected " + std::to_string(header.size()) + " cells, got " +
                                  std::to_string(cells.size()));
        for (std::size_t c = 0; c < dim; ++c) {
            double v = 0.0;
            const auto& s = cells[c];
            auto res = std::from_chars(s.data(), s.data() + s.size(), v);
            if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
                throw FormatError("csv row " + std::to_string(row), "bad number '" + s + "'");
            values.push_back(v);
        }
        for (std::size_t k = 0; k < levels; ++k) {
            int l = 0;
            const auto& s = cells[dim + k];
            auto res = std::from_chars(s.data(), s.data() + s.size(), l);
            if (res.ec != std::errc() || res.ptr != s.data() + s.size() || l < 0)
                throw FormatError("csv row " + std::to_string(row), "bad label '" + s + "'");
            ds.labels[k].push_back(l);
        }
        ds.split.push_back(parse_split(cells.back()));
    }
    ds.points = Matrix(row, dim, std::move(values));
    ds.validate();
    return ds;
}

void save_dataset_csv(const std::filesystem::path& path, const LabeledDataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    write_dataset_csv(out, ds);
    if (!out) throw IoError("write failed for " + path.string());
}

LabeledDataset load_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_dataset_csv(in);
}

}  // namespace lil
