#include "lil/attacks.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace lil {

namespace {

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

IndexingMatrix attack_indexing(std::span<const int> targets, const LossContext& ctx) {
    return build_indexing_matrix(targets, ctx.global_isometry);
}

bool iso_active(const LossContext& ctx) { return ctx.include_iso && ctx.weights.beta != 0.0; }

void clip_in_place(Matrix& x, double lo, double hi) {
    for (double& v : x.values()) v = std::clamp(v, lo, hi);
}

}  // namespace

const char* to_string(AttackKind k) { return k == AttackKind::Fgsm ? "fgsm" : "pgd"; }

AttackKind parse_attack_kind(const std::string& s) {
    if (s == "fgsm") return AttackKind::Fgsm;
    if (s == "pgd") return AttackKind::Pgd;
    throw std::invalid_argument("attack kind must be 'fgsm' or 'pgd', got '" + s + "'");
}

void AttackConfig::validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
        throw std::invalid_argument("attack: epsilon must be finite and >= 0");
    if (!(ball_radius >= 0.0)) throw std::invalid_argument("attack: ball radius must be >= 0");
    if (!(clip_min <= clip_max)) throw std::invalid_argument("attack: clip_min must be <= clip_max");
}

double sign_or_zero(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

Matrix attack_loss_input_gradient(const StackedLilNetwork& net, const Matrix& x,
                                  std::span<const int> targets, const Matrix& reference_distances,
                                  const LossContext& ctx) {
    const auto traces = stacked_forward(net, x);
    const std::size_t last = traces.size() - 1;
    Matrix dlogits;
    Matrix dphi;
    if (ctx.weights.alpha != 0.0) {
        dlogits = softmax_cross_entropy(traces[last].logits, targets).grad;
        dlogits *= ctx.weights.alpha;
    }
    if (iso_active(ctx)) {
        dphi = isometric_loss(reference_distances, traces[last].representation(),
                              attack_indexing(targets, ctx))
                   .grad;
        dphi *= ctx.weights.beta;
    }
    if (dlogits.empty() && dphi.empty()) return Matrix(x.rows(), x.cols());
    return stacked_input_gradient(net, traces, last, dlogits, dphi);
}

Matrix fgsm(const StackedLilNetwork& net, const Matrix& x, std::span<const int> targets,
            const LossContext& ctx, double epsilon, double clip_min, double clip_max) {
    if (!(epsilon >= 0.0)) throw std::invalid_argument("fgsm: epsilon must be >= 0");
    const Matrix ref = iso_active(ctx) ? pairwise_distances(x) : Matrix();
    const Matrix grad = attack_loss_input_gradient(net, x, targets, ref, ctx);
    Matrix out = x;
    auto o = out.values();
    auto g = grad.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += epsilon * sign_or_zero(g[i]);
    clip_in_place(out, clip_min, clip_max);
    return out;
}

Matrix pgd(const StackedLilNetwork& net, const Matrix& x, std::span<const int> targets,
           const LossContext& ctx, const AttackConfig& config) {
    config.validate();
    const Matrix ref = iso_active(ctx) ? pairwise_distances(x) : Matrix();
    Matrix current = x;
    const auto clean = x.values();
    for (std::size_t step = 0; step < config.n_steps; ++step) {
        const Matrix grad = attack_loss_input_gradient(net, current, targets, ref, ctx);
        auto c = current.values();
        auto g = grad.values();
        for (std::size_t i = 0; i < c.size(); ++i) {
            double v = c[i] + config.epsilon * sign_or_zero(g[i]);
            v = std::clamp(v, config.clip_min, config.clip_max);
            c[i] = std::clamp(v, clean[i] - config.ball_radius, clean[i] + config.ball_radius);
        }
    }
    return current;
}

std::vector<SweepRow> robust_accuracy_sweep(const StackedLilNetwork& net, const LabeledDataset& ds,
                                            const AttackConfig& base,
                                            std::span<const double> epsilons,
                                            const LossContext& ctx, std::size_t batch_size) {
    if (ds.size() == 0) throw std::invalid_argument("robust_accuracy_sweep: empty dataset");
    if (batch_size == 0) throw std::invalid_argument("robust_accuracy_sweep: batch size must be >= 1");
    const std::size_t level = net.block_levels.back();
    if (level >= ds.levels())
        throw std::invalid_argument("robust_accuracy_sweep: dataset lacks label level " +
                                    std::to_string(level));
    const std::vector<int>& labels = ds.labels[level];

    std::vector<SweepRow> rows;
    for (double eps : epsilons) {
        AttackConfig cfg = base;
        cfg.epsilon = eps;
        cfg.validate();
        std::size_t correct = 0;
        for (std::size_t start = 0; start < ds.size(); start += batch_size) {
            const std::size_t end = std::min(ds.size(), start + batch_size);
            std::vector<std::size_t> idx;
            for (std::size_t i = start; i < end; ++i) idx.push_back(i);
            const Matrix x = ds.points.select_rows(idx);
            const std::span<const int> t(labels.data() + start, end - start);
            const Matrix adv = cfg.kind == AttackKind::Fgsm
                                   ? fgsm(net, x, t, ctx, eps, cfg.clip_min, cfg.clip_max)
                                   : pgd(net, x, t, ctx, cfg);
            const auto pred = predict_classes(stacked_forward(net, adv).back().logits);
            for (std::size_t i = 0; i < pred.size(); ++i)
                if (pred[i] == t[i]) ++correct;
        }
        rows.push_back({eps, static_cast<double>(correct) / static_cast<double>(ds.size()), ds.size()});
    }
    return rows;
}

std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
    if (n == 0) throw std::invalid_argument("log_spaced: need at least one point");
    if (!(lo > 0.0) || !(hi >= lo)) throw std::invalid_argument("log_spaced: need 0 < lo <= hi");
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = lo;
        return out;
    }
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    out.front() = lo;
    out.back() = hi;
    return out;
}

std::vector<double> default_epsilon_sweep() { return log_spaced(0.01, 1.0, 20); }

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, const AttackConfig& base,
                     const LossContext& ctx) {
    out << "# attack=" << to_string(base.kind);
    if (base.kind == AttackKind::Pgd)
        out << " ball=" << format_double(base.ball_radius) << " steps=" << base.n_steps;
    out << " loss=" << (ctx.include_iso ? "combined" : "cse")
        << " alpha=" << format_double(ctx.weights.alpha) << " clip_min=" << format_double(base.clip_min)
        << " clip_max=" << format_double(base.clip_max) << "\n";
    out << "beta,attack,epsilon,robust_accuracy,n_samples\n";
    for (const SweepRow& r : rows)
        out << format_double(ctx.weights.beta) << ',' << to_string(base.kind) << ','
            << format_double(r.epsilon) << ',' << format_double(r.robust_accuracy) << ','
            << r.n_samples << '\n';
}

}  // namespace lil
