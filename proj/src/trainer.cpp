#include "lil/trainer.hpp"

#include "lil/errors.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

namespace lil {

namespace {

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void check_plan(const StackedLilNetwork& net, std::size_t dataset_levels, const TrainConfig& cfg) {
    if (cfg.hierarchy_plan.size() != net.blocks.size())
        throw std::invalid_argument("train: hierarchy plan has " + std::to_string(cfg.hierarchy_plan.size()) +
                                    " entries for " + std::to_string(net.blocks.size()) + " blocks");
    for (std::size_t k = 0; k < cfg.hierarchy_plan.size(); ++k) {
        if (cfg.hierarchy_plan[k] != net.block_levels[k])
            throw std::invalid_argument("train: plan level for block " + std::to_string(k) +
                                        " differs from the level its head was built for");
        if (cfg.hierarchy_plan[k] >= dataset_levels)
            throw std::invalid_argument("train: dataset has no label level " +
                                        std::to_string(cfg.hierarchy_plan[k]));
    }
}

}  // namespace

void TrainConfig::validate() const {
    weights.validate();
    adam.validate();
    if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
    if (hierarchy_plan.empty()) throw std::invalid_argument("train config: empty hierarchy plan");
}

std::size_t TrainReport::records_for_block(std::size_t block) const {
    std::size_t n = 0;
    for (const auto& r : losses)
        if (r.block == block) ++n;
    return n;
}

StepLosses train_step(StackedLilNetwork& net, std::vector<AdamState>& states, const Matrix& x,
                      const std::vector<std::vector<int>>& labels, const TrainConfig& cfg,
                      bool reverse_block_order) {
    if (states.size() != net.blocks.size())
        throw std::invalid_argument("train_step: one optimizer state per block required");
    const bool use_iso = cfg.weights.beta != 0.0;
    const Matrix input_distances = use_iso ? pairwise_distances(x) : Matrix();
    const auto traces = stacked_forward(net, x);

    const std::size_t n_blocks = net.blocks.size();
    StepLosses out;
    out.blocks.resize(n_blocks);
    std::vector<BlockGradients> grads(n_blocks);
    for (std::size_t k = 0; k < n_blocks; ++k) {
        const std::vector<int>& targets = labels[cfg.hierarchy_plan[k]];
        const IndexingMatrix g =
            use_iso ? build_indexing_matrix(targets, cfg.global_isometry) : IndexingMatrix{};
        out.blocks[k] = combined_loss(traces[k], input_distances, g, targets, cfg.weights);
        grads[k] = backward(net.blocks[k], traces[k], out.blocks[k].dlogits, out.blocks[k].dphi).grads;
    }
    for (std::size_t step = 0; step < n_blocks; ++step) {
        const std::size_t k = reverse_block_order ? n_blocks - 1 - step : step;
        const auto params = parameter_views(net.blocks[k]);
        const auto g = parameter_views(std::as_const(grads[k]));
        adam_step(params, g, states[k]);
    }
    return out;
}

TrainReport train(StackedLilNetwork& net, const LabeledDataset& ds, const TrainConfig& cfg, Rng& rng,
                  const EpochCallback& on_epoch) {
    const auto started = std::chrono::steady_clock::now();
    cfg.validate();
    net.validate();
    ds.validate();
    check_plan(net, ds.levels(), cfg);
    if (ds.size() == 0) throw std::invalid_argument("train: empty dataset");
    if (ds.dim() != net.config.input_dim())
        throw std::invalid_argument("train: dataset dimension " + std::to_string(ds.dim()) +
                                    " != network input width " + std::to_string(net.config.input_dim()));
    for (std::size_t k = 0; k < net.blocks.size(); ++k)
        if (ds.num_classes(cfg.hierarchy_plan[k]) > net.blocks[k].num_classes())
            throw std::invalid_argument("train: dataset has more classes at level " +
                                        std::to_string(cfg.hierarchy_plan[k]) + " than block " +
                                        std::to_string(k) + " has logits");
    const std::size_t batch_size = cfg.batch_size == 0 ? ds.size() : cfg.batch_size;
    if (batch_size > ds.size())
        throw std::invalid_argument("train: batch size " + std::to_string(batch_size) +
                                    " exceeds dataset size " + std::to_string(ds.size()));

    TrainReport report;
    report.config = cfg;
    std::vector<AdamState> states(net.blocks.size(), AdamState{cfg.adam, {}, {}, 0});

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto batches = make_batches(ds.size(), batch_size, rng);
        double epoch_loss = 0.0;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const LabeledDataset batch = ds.select(batches[b]);
            const StepLosses step = train_step(net, states, batch.points, batch.labels, cfg);
            for (std::size_t k = 0; k < step.blocks.size(); ++k) {
                const CombinedLoss& l = step.blocks[k];
                if (!std::isfinite(l.total))
                    throw NumericError("non-finite loss in block " + std::to_string(k), epoch);
                report.losses.push_back({epoch, b, k, l.total, l.cse, l.iso});
            }
            for (std::size_t k = 0; k < net.blocks.size(); ++k)
                for (const Matrix* p : parameter_views(std::as_const(net.blocks[k])))
                    if (!p->all_finite())
                        throw NumericError("non-finite parameters in block " + std::to_string(k), epoch);
            epoch_loss += step.blocks.back().total;
        }
        if (on_epoch) on_epoch(epoch, epoch_loss / static_cast<double>(batches.size()));
    }

    for (std::size_t k = 0; k < net.blocks.size(); ++k)
        report.final_accuracy.push_back(accuracy(net, ds, cfg.hierarchy_plan[k]));
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

Evaluation evaluate(const StackedLilNetwork& net, const LabeledDataset& ds, std::size_t level) {
    if (level >= ds.levels())
        throw std::invalid_argument("evaluate: dataset has no label level " + std::to_string(level));
    Evaluation e;
    e.accuracy = accuracy(net, ds, level);
    e.isometry = isometry_report(ds.points, representation_at_level(net, ds.points, level),
                                 ds.labels[level]);
    return e;
}

void write_loss_csv(std::ostream& out, const TrainReport& report) {
    out << "epoch,batch,block,loss_total,loss_cse,loss_iso\n";
    for (const auto& r : report.losses)
        out << r.epoch << ',' << r.batch << ',' << r.block << ',' << format_double(r.total) << ','
            << format_double(r.cse) << ',' << format_double(r.iso) << '\n';
}

}  // namespace lil
