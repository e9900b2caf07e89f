#pragma once

#include "lil/datasets.hpp"
#include "lil/losses.hpp"
#include "lil/metrics.hpp"
#include "lil/network.hpp"
#include "lil/optim.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

namespace lil {

struct TrainConfig {
    LossWeights weights;
    std::size_t epochs = 1;
    /// 0 means one batch holding the whole training set.
    std::size_t batch_size = 0;
    AdamHyperparams adam;
    std::uint64_t seed = 0;
    /// Label level each block trains against; one entry per block.
    std::vector<std::size_t> hierarchy_plan{0};
    bool global_isometry = false;

    void validate() const;
};

struct LossRecord {
    std::size_t epoch = 0;
    std::size_t batch = 0;
    std::size_t block = 0;
    double total = 0.0;
    double cse = 0.0;
    double iso = 0.0;
};

struct TrainReport {
    TrainConfig config;
    /// One record per (epoch, batch, block), in training order.
    std::vector<LossRecord> losses;
    /// Accuracy on the training data at each block's level, block order.
    std::vector<double> final_accuracy;
    double wall_seconds = 0.0;

    std::size_t records_for_block(std::size_t block) const;
};

/// Called after every epoch with the epoch index and the mean total loss of
/// the last block over that epoch's batches.
using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

/// Per-block losses of one optimisation step.
struct StepLosses {
    std::vector<CombinedLoss> blocks;
};

/// One step on one batch: forward through every block, then for each block
/// its own combined loss against its level's labels and the batch's input
/// distances, backprop inside the block only and an Adam update.
/// `reverse_block_order` applies the block updates last-to-first.
StepLosses train_step(StackedLilNetwork& net, std::vector<AdamState>& states, const Matrix& x,
                      const std::vector<std::vector<int>>& labels, const TrainConfig& cfg,
                      bool reverse_block_order = false);

/// Full training run on every row of `ds`. Throws NumericError on a
/// non-finite loss and std::invalid_argument on an inconsistent plan before
/// any update.
TrainReport train(StackedLilNetwork& net, const LabeledDataset& ds, const TrainConfig& cfg, Rng& rng,
                  const EpochCallback& on_epoch = {});

struct Evaluation {
    double accuracy = 0.0;
    IsometryReport isometry;
};

/// Accuracy and within-class isometry of the block classifying `level`,
/// measured against the original inputs.
Evaluation evaluate(const StackedLilNetwork& net, const LabeledDataset& ds, std::size_t level);

/// epoch,batch,block,loss_total,loss_cse,loss_iso
void write_loss_csv(std::ostream& out, const TrainReport& report);

}  // namespace lil
