#pragma once

#include "lil/datasets.hpp"
#include "lil/linalg.hpp"
#include "lil/losses.hpp"
#include "lil/network.hpp"

#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace lil {

enum class AttackKind { Fgsm, Pgd };

const char* to_string(AttackKind k);
AttackKind parse_attack_kind(const std::string& s);

/// Which loss the attacker differentiates. The isometric reference set is
/// the attacked batch itself, with distances taken on the clean inputs.
struct LossContext {
    LossWeights weights;
    /// false: cross-entropy only (alpha still applies).
    bool include_iso = true;
    bool global_isometry = false;
};

struct AttackConfig {
    AttackKind kind = AttackKind::Fgsm;
    /// FGSM step, or PGD per-step size.
    double epsilon = 0.0;
    /// L-infinity radius around the clean input (PGD only).
    double ball_radius = 0.5;
    std::size_t n_steps = 10;
    double clip_min = -std::numeric_limits<double>::infinity();
    double clip_max = std::numeric_limits<double>::infinity();

    void validate() const;
};

/// sign(v) with sign(0) = 0.
double sign_or_zero(double v);

/// Gradient of the attack loss at the network's last block with respect to
/// `x`, chained through every block. `reference_distances` are the clean
/// batch distances used by the isometric term.
Matrix attack_loss_input_gradient(const StackedLilNetwork& net, const Matrix& x,
                                  std::span<const int> targets, const Matrix& reference_distances,
                                  const LossContext& ctx);

/// x' = clip(x + epsilon * sign(grad)).
Matrix fgsm(const StackedLilNetwork& net, const Matrix& x, std::span<const int> targets,
            const LossContext& ctx, double epsilon, double clip_min, double clip_max);

/// n_steps of x <- project_ball(clip(x + epsilon * sign(grad))), starting
/// from the clean input.
Matrix pgd(const StackedLilNetwork& net, const Matrix& x, std::span<const int> targets,
           const LossContext& ctx, const AttackConfig& config);

struct SweepRow {
    double epsilon = 0.0;
    double robust_accuracy = 0.0;
    std::size_t n_samples = 0;
};

/// Robust accuracy at each epsilon, attacking `ds` in consecutive batches of
/// `batch_size`. Labels are taken at the last block's hierarchy level.
/// For PGD, `base` supplies ball radius and step count.
std::vector<SweepRow> robust_accuracy_sweep(const StackedLilNetwork& net, const LabeledDataset& ds,
                                            const AttackConfig& base,
                                            std::span<const double> epsilons,
                                            const LossContext& ctx, std::size_t batch_size = 100);

/// n values log-spaced from lo to hi inclusive.
std::vector<double> log_spaced(double lo, double hi, std::size_t n);

/// 20 points log-spaced over [0.01, 1].
std::vector<double> default_epsilon_sweep();

/// Columns beta,attack,epsilon,robust_accuracy,n_samples preceded by `#`
/// metadata lines echoing the attack settings.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, const AttackConfig& base,
                     const LossContext& ctx);

}  // namespace lil
