#include "lil/trainer.hpp"
#include "lil/errors.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <sstream>
#include <utility>
#include <stdexcept>

using namespace lil;

namespace {

LabeledDataset small_torus(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    return gen_torus(n, 2.0, 1.0, 0.001, rng);
}

}  // namespace

TEST(TrainStep, BetaZeroMatchesCseOnlyLoop) {
    Rng rng(1);
    const LabeledDataset ds = small_torus(40, 2);
    StackedLilNetwork net = init_stacked(NetworkConfig{{3, 6, 6}, {2, 4}}, {0}, rng);
    LilBlock reference = net.blocks[0];
    TrainConfig cfg;
    cfg.weights = {1.0, 0.0};
    std::vector<AdamState> states(1, AdamState{cfg.adam, {}, {}, 0});
    AdamState ref_state{cfg.adam, {}, {}, 0};
    for (int step = 0; step < 5; ++step) {
        train_step(net, states, ds.points, ds.labels, cfg);

        const ForwardTrace t = forward(reference, ds.points);
        const LossAndGrad cse = softmax_cross_entropy(t.logits, ds.labels[0]);
        const BackwardResult r = backward(reference, t, cse.grad, Matrix());
        adam_step(parameter_views(reference), parameter_views(std::as_const(r.grads)), ref_state);

        const auto a = parameter_views(std::as_const(net.blocks[0]));
        const auto b = parameter_views(std::as_const(reference));
        for (std::size_t p = 0; p < a.size(); ++p) ASSERT_EQ(*a[p], *b[p]) << "step " << step << " param " << p;
    }
}

TEST(TrainStep, AllDistinctClassesAndAlphaZeroGiveNoUpdate) {
    Rng rng(3);
    StackedLilNetwork net = init_stacked(NetworkConfig{{2, 4}, {4}}, {0}, rng);
    const StackedLilNetwork before = net;
    TrainConfig cfg;
    cfg.weights = {0.0, 1.0};
    std::vector<AdamState> states(1, AdamState{cfg.adam, {}, {}, 0});
    const Matrix x = oracle::random_matrix(rng, 4, 2);
    const std::vector<std::vector<int>> labels{{0, 1, 2, 3}};
    const StepLosses l = train_step(net, states, x, labels, cfg);
    EXPECT_EQ(l.blocks[0].total, 0.0);
    const auto a = parameter_views(std::as_const(net.blocks[0]));
    const auto b = parameter_views(std::as_const(before.blocks[0]));
    for (std::size_t p = 0; p < a.size(); ++p) EXPECT_EQ(*a[p], *b[p]);
}

TEST(TrainStep, ReversedBlockOrderGivesSameTrajectory) {
    Rng rng(4);
    const LabeledDataset ds = small_torus(30, 5);
    StackedLilNetwork a = init_stacked(NetworkConfig{{3, 5, 5}, {2, 4}}, {0, 1}, rng);
    StackedLilNetwork b = a;
    TrainConfig cfg;
    cfg.weights = {1.0, 2.0};
    cfg.hierarchy_plan = {0, 1};
    std::vector<AdamState> sa(2, AdamState{cfg.adam, {}, {}, 0}), sb = sa;
    for (int step = 0; step < 5; ++step) {
        train_step(a, sa, ds.points, ds.labels, cfg, false);
        train_step(b, sb, ds.points, ds.labels, cfg, true);
    }
    for (std::size_t k = 0; k < 2; ++k) {
        const auto pa = parameter_views(std::as_const(a.blocks[k]));
        const auto pb = parameter_views(std::as_const(b.blocks[k]));
        for (std::size_t p = 0; p < pa.size(); ++p) EXPECT_EQ(*pa[p], *pb[p]);
    }
}

TEST(TrainStep, EarlierBlockIgnoresLaterBlocksLoss) {
    Rng rng(6);
    const LabeledDataset ds = small_torus(30, 7);
    StackedLilNetwork stacked = init_stacked(NetworkConfig{{3, 5, 5}, {2, 4}}, {0, 1}, rng);
    StackedLilNetwork alone;
    alone.config = stacked.config;
    alone.block_levels = {0};
    alone.blocks = {stacked.blocks[0]};
    TrainConfig cfg;
    cfg.weights = {1.0, 1.0};
    cfg.hierarchy_plan = {0, 1};
    TrainConfig cfg_alone = cfg;
    cfg_alone.hierarchy_plan = {0};
    std::vector<AdamState> s2(2, AdamState{cfg.adam, {}, {}, 0}), s1(1, AdamState{cfg.adam, {}, {}, 0});
    for (int step = 0; step < 3; ++step) {
        train_step(stacked, s2, ds.points, ds.labels, cfg);
        train_step(alone, s1, ds.points, ds.labels, cfg_alone);
    }
    const auto a = parameter_views(std::as_const(stacked.blocks[0]));
    const auto b = parameter_views(std::as_const(alone.blocks[0]));
    for (std::size_t p = 0; p < a.size(); ++p) EXPECT_EQ(*a[p], *b[p]);
}

TEST(TrainStep, LaterBlockAnchorsToOriginalInputs) {
    Rng rng(8);
    const LabeledDataset ds = small_torus(12, 9);
    StackedLilNetwork net = init_stacked(NetworkConfig{{3, 5}, {2, 4}}, {0, 1}, rng);
    TrainConfig cfg;
    cfg.weights = {0.0, 1.0};
    cfg.hierarchy_plan = {0, 1};
    std::vector<AdamState> states(2, AdamState{cfg.adam, {}, {}, 0});
    const auto traces = stacked_forward(net, ds.points);
    const double expected = isometric_loss(pairwise_distances(ds.points), traces[1].representation(),
                                           build_indexing_matrix(ds.labels[1]))
                                .loss;
    const StepLosses l = train_step(net, states, ds.points, ds.labels, cfg);
    EXPECT_EQ(l.blocks[1].iso, expected);
}

TEST(Train, DeterministicReports) {
    const LabeledDataset ds = small_torus(60, 10);
    TrainConfig cfg;
    cfg.weights = {1.0, 1.0};
    cfg.epochs = 4;
    cfg.batch_size = 16;
    cfg.hierarchy_plan = {0, 1};
    auto run = [&] {
        Rng rng(11);
        StackedLilNetwork net = init_stacked(NetworkConfig{{3, 6, 6}, {2, 4}}, cfg.hierarchy_plan, rng);
        const TrainReport r = train(net, ds, cfg, rng);
        std::stringstream s;
        write_loss_csv(s, r);
        return std::pair{s.str(), net.blocks[1].head.weight};
    };
    const auto a = run();
    const auto b = run();
    EXPECT_EQ(a.first, b.first);
    EXPECT_EQ(a.second, b.second);
}

TEST(Train, RecordsEveryBatchAndBlock) {
    const LabeledDataset ds = small_torus(50, 12);
    Rng rng(13);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 20;
    cfg.hierarchy_plan = {0, 1};
    StackedLilNetwork net = init_stacked(NetworkConfig{{3, 4}, {2, 4}}, cfg.hierarchy_plan, rng);
    std::vector<std::size_t> epochs_seen;
    const TrainReport r = train(net, ds, cfg, rng, [&](std::size_t e, double) { epochs_seen.push_back(e); });
    EXPECT_EQ(r.losses.size(), 3u * 3u * 2u);
    EXPECT_EQ(r.records_for_block(1), 9u);
    EXPECT_EQ(epochs_seen, (std::vector<std::size_t>{0, 1, 2}));
    EXPECT_EQ(r.final_accuracy.size(), 2u);
    std::stringstream s;
    write_loss_csv(s, r);
    EXPECT_EQ(s.str().substr(0, s.str().find('\n')), "epoch,batch,block,loss_total,loss_cse,loss_iso");
}

TEST(Train, InconsistentPlanRejectedBeforeAnyUpdate) {
    const LabeledDataset ds = small_torus(20, 14);
    Rng rng(15);
    StackedLilNetwork net = init_stacked(NetworkConfig{{3, 4}, {2, 4}}, {0, 1}, rng);
    const StackedLilNetwork before = net;
    TrainConfig cfg;
    cfg.hierarchy_plan = {0};
    EXPECT_THROW(train(net, ds, cfg, rng), std::invalid_argument);
    cfg.hierarchy_plan = {1, 0};
    EXPECT_THROW(train(net, ds, cfg, rng), std::invalid_argument);
    LabeledDataset one_level = ds;
    one_level.labels.pop_back();
    cfg.hierarchy_plan = {0, 1};
    EXPECT_THROW(train(net, one_level, cfg, rng), std::invalid_argument);
    EXPECT_EQ(net.blocks[0].head.weight, before.blocks[0].head.weight);
}

TEST(Train, NonFiniteLossRaisesNumericError) {
    const LabeledDataset ds = small_torus(20, 16);
    Rng rng(17);
    StackedLilNetwork net = init_stacked(NetworkConfig{{3, 4}, {2}}, {0}, rng);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.adam.lr = 1e308;
    try {
        train(net, ds, cfg, rng);
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_GE(e.epoch(), 1u);
        EXPECT_LT(e.epoch(), 5u);
    }
}

TEST(Evaluate, ZeroNetworkPredictsClassZero) {
    LabeledDataset ds;
    ds.points = Matrix{{0, 1}, {1, 0}, {2, 2}, {3, 1}};
    ds.labels = {{0, 1, 1, 0}};
    ds.split.assign(4, Split::Train);
    Rng rng(1);
    StackedLilNetwork net = init_stacked(NetworkConfig{{2, 3}, {2}}, {0}, rng);
    for (Matrix* p : parameter_views(net.blocks[0])) p->fill(0.0);
    EXPECT_EQ(evaluate(net, ds, 0).accuracy, 0.5);
}

TEST(Evaluate, MatchesDirectMetricCalls) {
    const LabeledDataset ds = small_torus(40, 18);
    Rng rng(19);
    const StackedLilNetwork net = init_stacked(NetworkConfig{{3, 5}, {2, 4}}, {0, 1}, rng);
    const Evaluation e = evaluate(net, ds, 1);
    EXPECT_EQ(e.accuracy, accuracy(net, ds, 1));
    const IsometryReport direct =
        isometry_report(ds.points, representation_at_level(net, ds.points, 1), ds.labels[1]);
    ASSERT_EQ(e.isometry.classes.size(), direct.classes.size());
    for (std::size_t c = 0; c < direct.classes.size(); ++c) {
        EXPECT_EQ(e.isometry.classes[c].pearson_r, direct.classes[c].pearson_r);
        EXPECT_EQ(e.isometry.classes[c].empirical_k, direct.classes[c].empirical_k);
    }
}
