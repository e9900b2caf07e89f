#include "lil/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

namespace lil {

namespace {

constexpr double kMinInputDistance = 1e-9;

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::map<int, std::vector<std::size_t>> group_by_label(std::span<const int> labels) {
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
    return groups;
}

void check_rows(const Matrix& x, const Matrix& phi, std::span<const int> labels, const char* what) {
    if (x.rows() != phi.rows() || x.rows() != labels.size())
        throw std::invalid_argument(std::string(what) + ": row counts of inputs, representation and labels differ");
}

}  // namespace

Matrix representation_at_level(const StackedLilNetwork& net, const Matrix& x, std::size_t level) {
    const std::size_t block = net.block_for_level(level);
    auto traces = stacked_forward(net, x);
    return std::move(traces[block].activations.back());
}

double accuracy(const StackedLilNetwork& net, const LabeledDataset& ds, std::size_t level) {
    const std::size_t block = net.block_for_level(level);
    if (level >= ds.levels())
        throw std::invalid_argument("accuracy: dataset has no label level " + std::to_string(level));
    if (ds.size() == 0) throw std::invalid_argument("accuracy: empty dataset");
    const auto traces = stacked_forward(net, ds.points);
    const auto pred = predict_classes(traces[block].logits);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == ds.labels[level][i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(pred.size());
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

const ClassIsometry* IsometryReport::find(int label) const {
    for (const auto& c : classes)
        if (c.label == label) return &c;
    return nullptr;
}

IsometryReport isometry_report(const Matrix& x, const Matrix& phi, std::span<const int> labels) {
    check_rows(x, phi, labels, "isometry_report");
    IsometryReport report;
    for (const auto& [label, rows] : group_by_label(labels)) {
        if (rows.size() < 2) {
            report.warnings.push_back("class " + std::to_string(label) + " has fewer than 2 points; skipped");
            continue;
        }
        ClassIsometry c;
        c.label = label;
        double residual_sum = 0.0;
        for (std::size_t a = 0; a < rows.size(); ++a) {
            for (std::size_t b = a + 1; b < rows.size(); ++b) {
                const double dx = euclidean_distance(x.row(rows[a]), x.row(rows[b]));
                const double dp = euclidean_distance(phi.row(rows[a]), phi.row(rows[b]));
                c.input_distances.push_back(dx);
                c.repr_distances.push_back(dp);
                residual_sum += std::abs(dx - dp);
                if (dx > kMinInputDistance) c.empirical_k = std::max(c.empirical_k, dp / dx);
            }
        }
        c.n_pairs = c.input_distances.size();
        c.mean_abs_residual = residual_sum / static_cast<double>(c.n_pairs);
        c.pearson_r = pearson_correlation(c.input_distances, c.repr_distances);
        if (std::isnan(c.pearson_r))
            report.warnings.push_back("class " + std::to_string(label) +
                                      ": correlation undefined (zero variance)");
        report.classes.push_back(std::move(c));
    }
    return report;
}

void write_isometry_csv(std::ostream& out, const IsometryReport& report) {
    out << "class,pearson_r,mean_abs_residual,empirical_K,n_pairs\n";
    for (const auto& c : report.classes)
        out << c.label << ',' << format_double(c.pearson_r) << ',' << format_double(c.mean_abs_residual)
            << ',' << format_double(c.empirical_k) << ',' << c.n_pairs << '\n';
}

std::vector<HistogramRow> distance_histograms(const Matrix& x, const Matrix& phi,
                                              std::span<const int> labels, std::size_t n_bins) {
    if (n_bins < 1) throw std::invalid_argument("distance_histograms: n_bins must be >= 1");
    const IsometryReport report = isometry_report(x, phi, labels);
    std::vector<HistogramRow> rows;
    for (const auto& c : report.classes) {
        const auto [in_lo, in_hi] = std::minmax_element(c.input_distances.begin(), c.input_distances.end());
        const auto [re_lo, re_hi] = std::minmax_element(c.repr_distances.begin(), c.repr_distances.end());
        const double lo = std::min(*in_lo, *re_lo);
        const double hi = std::max(*in_hi, *re_hi);
        const double width = (hi - lo) / static_cast<double>(n_bins);
        auto bin_of = [&](double d) -> std::size_t {
            if (width <= 0.0) return 0;
            const auto b = static_cast<std::size_t>((d - lo) / width);
            return std::min(b, n_bins - 1);
        };
        std::vector<std::size_t> in_counts(n_bins, 0), re_counts(n_bins, 0);
        for (double d : c.input_distances) ++in_counts[bin_of(d)];
        for (double d : c.repr_distances) ++re_counts[bin_of(d)];
        for (const auto* space : {"input", "repr"}) {
            const auto& counts = std::string(space) == "input" ? in_counts : re_counts;
            for (std::size_t b = 0; b < n_bins; ++b) {
                const double b_lo = lo + width * static_cast<double>(b);
                const double b_hi = b + 1 == n_bins ? hi : lo + width * static_cast<double>(b + 1);
                rows.push_back({c.label, space, b_lo, b_hi, counts[b]});
            }
        }
    }
    return rows;
}

void write_histogram_csv(std::ostream& out, const std::vector<HistogramRow>& rows) {
    out << "class,space,bin_lo,bin_hi,count\n";
    for (const auto& r : rows)
        out << r.label << ',' << r.space << ',' << format_double(r.bin_lo) << ','
            << format_double(r.bin_hi) << ',' << r.count << '\n';
}

std::vector<std::pair<std::size_t, std::size_t>> sample_same_class_pairs(std::span<const int> labels,
                                                                         std::size_t n_pairs, Rng& rng) {
    if (n_pairs < 1) throw std::invalid_argument("sample_same_class_pairs: n_pairs must be >= 1");
    const auto groups = group_by_label(labels);
    std::size_t total = 0;
    std::vector<const std::vector<std::size_t>*> usable;
    std::vector<std::size_t> cumulative;
    for (const auto& [label, rows] : groups) {
        if (rows.size() < 2) continue;
        total += rows.size() * (rows.size() - 1) / 2;
        usable.push_back(&rows);
        cumulative.push_back(total);
    }
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    if (total <= n_pairs) {
        for (const auto* rows : usable)
            for (std::size_t a = 0; a < rows->size(); ++a)
                for (std::size_t b = a + 1; b < rows->size(); ++b)
                    pairs.emplace_back((*rows)[a], (*rows)[b]);
        return pairs;
    }
    // Pick a class proportionally to its pair count, then a uniform pair in it.
    pairs.reserve(n_pairs);
    for (std::size_t s = 0; s < n_pairs; ++s) {
        const std::size_t ticket = rng.below(total);
        const std::size_t g = static_cast<std::size_t>(
            std::upper_bound(cumulative.begin(), cumulative.end(), ticket) - cumulative.begin());
        const auto& rows = *usable[g];
        const std::size_t a = rng.below(rows.size());
        std::size_t b = rng.below(rows.size() - 1);
        if (b >= a) ++b;
        pairs.emplace_back(std::min(rows[a], rows[b]), std::max(rows[a], rows[b]));
    }
    return pairs;
}

double lipschitz_ratio(const Matrix& x, const Matrix& y,
                       std::span<const std::pair<std::size_t, std::size_t>> pairs) {
    if (x.rows() != y.rows()) throw std::invalid_argument("lipschitz_ratio: row counts differ");
    double best = 0.0;
    bool any = false;
    for (const auto& [i, j] : pairs) {
        const double dx = euclidean_distance(x.row(i), x.row(j));
        if (dx <= kMinInputDistance) continue;
        any = true;
        best = std::max(best, euclidean_distance(y.row(i), y.row(j)) / dx);
    }
    if (!any) throw std::invalid_argument("lipschitz_ratio: no pair with positive input distance");
    return best;
}

double empirical_lipschitz(const std::function<Matrix(const Matrix&)>& map, const Matrix& x,
                           std::span<const int> labels, std::size_t n_pairs, Rng& rng) {
    if (labels.size() != x.rows())
        throw std::invalid_argument("empirical_lipschitz: label count differs from row count");
    const auto pairs = sample_same_class_pairs(labels, n_pairs, rng);
    if (pairs.empty()) throw std::invalid_argument("empirical_lipschitz: no same-class pairs");
    return lipschitz_ratio(x, map(x), pairs);
}

double empirical_lipschitz(const StackedLilNetwork& net, const LabeledDataset& ds,
                           std::size_t level, std::size_t n_pairs, Rng& rng) {
    if (level >= ds.levels())
        throw std::invalid_argument("empirical_lipschitz: dataset has no label level " + std::to_string(level));
    return empirical_lipschitz(
        [&](const Matrix& x) { return representation_at_level(net, x, level); }, ds.points,
        ds.labels[level], n_pairs, rng);
}

}  // namespace lil
