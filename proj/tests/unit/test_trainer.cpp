#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dbtrisk/errors.hpp"
#include "dbtrisk/trainer.hpp"

using namespace dbtrisk;

namespace {

/// Event year is a deterministic step function of x . u, so a linear head can fit it.
Dataset separable(std::size_t n, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<double> u(dim);
    double norm = 0;
    for (auto& v : u) norm += (v = g(rng)) * v;
    for (auto& v : u) v /= std::sqrt(norm);
    const double cut[5] = {1.5, 1.0, 0.5, 0.0, -0.5};
    Dataset out;
    for (std::size_t i = 0; i < n; ++i) {
        Example e;
        e.study_id = "s" + std::to_string(i);
        e.patient_id = "p" + std::to_string(i);
        e.x.resize(dim);
        double s = 0;
        for (std::size_t d = 0; d < dim; ++d) s += (e.x[d] = g(rng)) * u[d];
        int year = 0;
        for (int k = 0; k < 5 && !year; ++k)
            if (s > cut[k]) year = k + 1;
        e.w.fill(1);
        if (year) {
            for (int k = year - 1; k < 5; ++k) e.y[k] = 1;
            e.cohort_kind = CohortKind::pre_cancer;
        } else {
            e.cohort_kind = CohortKind::healthy;
            const int observed = 1 + static_cast<int>(i % 5);
            for (int k = observed; k < 5; ++k) e.w[k] = 0;
        }
        out.push_back(std::move(e));
    }
    return out;
}

TrainConfig quick() {
    TrainConfig c;
    c.learning_rate = 0.02;
    c.batch_size = 32;
    c.max_epochs = 20;
    c.patience = 5;
    c.seed = 7;
    return c;
}

}  // namespace

TEST(TrainConfig, Validation) {
    TrainConfig c;
    EXPECT_NO_THROW(c.validate());
    c.learning_rate = 0;
    EXPECT_THROW(c.validate(), ContractViolation);
    c = {};
    c.batch_size = 0;
    EXPECT_THROW(c.validate(), ContractViolation);
    c = {};
    c.adam_beta1 = 1.0;
    EXPECT_THROW(c.validate(), ContractViolation);
    EXPECT_EQ(TrainConfig{}.learning_rate, 1e-4);
    EXPECT_EQ(TrainConfig{}.batch_size, 256u);
    EXPECT_EQ(TrainConfig{}.max_epochs, 100u);
    EXPECT_EQ(TrainConfig{}.patience, 10u);
    EXPECT_EQ(TrainConfig{}.optimizer, Optimizer::adam);
    EXPECT_FALSE(TrainConfig{}.standardize_features);
}

TEST(Train, BitIdenticalReruns) {
    auto data = separable(300, 8, 1);
    Dataset tr(data.begin(), data.begin() + 200), va(data.begin() + 200, data.end());
    auto a = train(quick(), tr, va);
    auto b = train(quick(), tr, va);
    EXPECT_EQ(a.head, b.head);
    ASSERT_EQ(a.report.epochs.size(), b.report.epochs.size());
    for (std::size_t i = 0; i < a.report.epochs.size(); ++i)
        EXPECT_EQ(a.report.epochs[i].val_loss, b.report.epochs[i].val_loss);
    auto c = quick();
    c.seed = 8;
    EXPECT_NE(train(c, tr, va).head, a.head);
}

TEST(Train, BestEpochHasMinimalValidationLoss) {
    auto data = separable(300, 8, 2);
    Dataset tr(data.begin(), data.begin() + 200), va(data.begin() + 200, data.end());
    auto c = quick();
    c.learning_rate = 0.2;  // noisy enough for validation loss to go up and down
    c.max_epochs = 40;
    c.patience = 40;
    auto r = train(c, tr, va);
    const auto& ep = r.report.epochs;
    ASSERT_GE(r.report.best_epoch, 1u);
    const double best = ep[r.report.best_epoch - 1].val_loss;
    for (const auto& e : ep) EXPECT_LE(best, e.val_loss);
    EXPECT_NEAR(dataset_loss(r.head, va), best, 1e-12);
}

TEST(Train, PatienceStopsEarly) {
    auto tr = separable(200, 4, 3);
    auto va = tr;
    for (auto& e : va)
        for (auto& v : e.x) v = -v;  // the signal points the other way
    auto c = quick();
    c.max_epochs = 400;
    c.patience = 3;
    auto r = train(c, tr, va);
    EXPECT_EQ(r.report.stop_reason, StopReason::patience);
    EXPECT_EQ(r.report.epochs.size(), r.report.best_epoch + 3);
}

TEST(Train, BalancedDraws) {
    auto data = separable(12000, 2, 4);
    std::size_t pre = 0;
    for (const auto& e : data) pre += e.cohort_kind == CohortKind::pre_cancer;
    ASSERT_GT(std::abs(double(pre) / data.size() - 0.5), 0.15);  // imbalanced input
    Dataset va(data.begin(), data.begin() + 100);
    auto c = quick();
    c.max_epochs = 3;
    c.batch_size = 1024;
    auto r = train(c, data, va);
    for (const auto& e : r.report.epochs) EXPECT_NEAR(e.positive_fraction, 0.5, 0.02);
}

TEST(Train, OverfitsSmallSubset) {
    auto data = separable(64, 16, 5);
    TrainConfig c;
    c.learning_rate = 0.05;
    c.batch_size = 64;
    c.max_epochs = 500;
    c.patience = 500;
    c.seed = 1;
    auto r = train(c, data, data);
    EXPECT_EQ(r.report.epochs.size(), 500u);
    EXPECT_LT(r.report.epochs.back().train_loss, 0.05);
    EXPECT_LT(dataset_loss(r.head, data), 0.05);
}

TEST(Train, StandardizationFoldsBackToRawInputs) {
    auto data = separable(300, 6, 6);
    for (auto& e : data)
        for (std::size_t d = 0; d < e.x.size(); ++d) e.x[d] = e.x[d] * (d + 1) * 3.0 + 10.0 * d;
    Dataset tr(data.begin(), data.begin() + 200), va(data.begin() + 200, data.end());
    auto c = quick();
    c.standardize_features = true;
    auto r = train(c, tr, va);
    const auto& best = r.report.epochs[r.report.best_epoch - 1];
    EXPECT_NEAR(dataset_loss(r.head, va), best.val_loss, 1e-9);
}

TEST(Train, ErrorsOnBadInput) {
    auto data = separable(50, 4, 7);
    EXPECT_THROW(train(quick(), Dataset{}, data), ContractViolation);
    EXPECT_THROW(train(quick(), data, Dataset{}), ContractViolation);
    Dataset one_kind;
    for (const auto& e : data)
        if (e.cohort_kind == CohortKind::healthy) one_kind.push_back(e);
    EXPECT_THROW(train(quick(), one_kind, data), DegenerateSampler);
    auto bad = data;
    bad[3].x.pop_back();
    EXPECT_THROW(train(quick(), bad, data), ContractViolation);
}

TEST(Train, DivergenceIsReported) {
    auto data = separable(100, 4, 8);
    for (auto& e : data)
        for (auto& v : e.x) v *= 1e154;
    auto c = quick();
    c.optimizer = Optimizer::sgd;
    c.learning_rate = 1e10;
    EXPECT_THROW(train(c, data, data), Divergence);
}

TEST(Predict, ClosedFormAndMonotone) {
    auto data = separable(40, 3, 9);
    HazardHead zero(3);
    auto t = predict_dataset(zero, data);
    ASSERT_EQ(t.size(), 40u);
    const double want[5] = {0.5, 0.75, 0.875, 0.9375, 0.96875};
    for (const auto& row : t)
        for (int k = 0; k < 5; ++k) EXPECT_NEAR(row.p[k], want[k], 1e-12);
    auto h = HazardHead::random_init(3, 2);
    for (const auto& row : predict_dataset(h, data, 3))
        for (int k = 1; k < 5; ++k) EXPECT_LE(row.p[k - 1], row.p[k]);
    EXPECT_EQ(predict_dataset(h, data, 1)[7].p, predict_dataset(h, data, 4)[7].p);
    EXPECT_TRUE(predict_dataset(h, Dataset{}).empty());
    EXPECT_THROW(predict_dataset(HazardHead(5), data), ContractViolation);
}
