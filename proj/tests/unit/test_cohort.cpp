#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "dbtrisk/cohort.hpp"
#include "dbtrisk/errors.hpp"
#include "oracles.hpp"

using namespace dbtrisk;

namespace {

StudyRecord pre(int d, std::string id = "s") {
    StudyRecord r;
    r.patient_id = "p";
    r.study_id = std::move(id);
    r.study_date = "2015-01-01";
    r.cohort_kind = CohortKind::pre_cancer;
    r.days_to_diagnosis = d;
    return r;
}

StudyRecord healthy(int f, std::string id = "s") {
    StudyRecord r;
    r.patient_id = "p";
    r.study_id = std::move(id);
    r.study_date = "2015-01-01";
    r.cohort_kind = CohortKind::healthy;
    r.followup_days = f;
    return r;
}

LabelVector L(std::initializer_list<int> v) {
    LabelVector out{};
    std::size_t i = 0;
    for (int x : v) out[i++] = static_cast<std::uint8_t>(x);
    return out;
}

}  // namespace

TEST(LabelStudy, PreCancerAfterFirstYear) {
    auto o = label_study(pre(400), Split::train);
    ASSERT_TRUE(o);
    EXPECT_EQ(o->labels, L({0, 1, 1, 1, 1}));
    EXPECT_EQ(o->mask, L({1, 1, 1, 1, 1}));
}

TEST(LabelStudy, HealthyPartialFollowup) {
    auto o = label_study(healthy(800), Split::test);
    ASSERT_TRUE(o);
    EXPECT_EQ(o->labels, L({0, 0, 0, 0, 0}));
    EXPECT_EQ(o->mask, L({1, 1, 0, 0, 0}));
}

TEST(LabelStudy, NearDiagnosisExcludedOnlyOutsideTrain) {
    EXPECT_FALSE(label_study(pre(150), Split::val));
    EXPECT_FALSE(label_study(pre(150), Split::test));
    auto o = label_study(pre(150), Split::train);
    ASSERT_TRUE(o);
    EXPECT_EQ(o->labels, L({1, 1, 1, 1, 1}));
    EXPECT_EQ(o->mask, L({1, 1, 1, 1, 1}));
    EXPECT_FALSE(label_study(pre(182), Split::val));
    EXPECT_TRUE(label_study(pre(183), Split::val));
}

TEST(LabelStudy, ShortFollowupExcluded) {
    EXPECT_FALSE(label_study(healthy(300), Split::train));
    EXPECT_FALSE(label_study(healthy(364), Split::val));
    EXPECT_TRUE(label_study(healthy(365), Split::val));
}

TEST(LabelStudy, YearBoundary) {
    EXPECT_EQ(label_study(pre(365), Split::train)->labels, L({1, 1, 1, 1, 1}));
    EXPECT_EQ(label_study(pre(366), Split::train)->labels, L({0, 1, 1, 1, 1}));
    EXPECT_EQ(label_study(pre(1825), Split::train)->labels, L({0, 0, 0, 0, 1}));
    auto late = label_study(pre(1826), Split::test);
    ASSERT_TRUE(late);
    EXPECT_EQ(late->labels, L({0, 0, 0, 0, 0}));
    EXPECT_EQ(late->mask, L({1, 1, 1, 1, 1}));
}

TEST(LabelStudy, MatchesDayOracleEverywhere) {
    for (int d = 0; d <= 2000; ++d) {
        for (Split role : {Split::train, Split::val, Split::test}) {
            const bool tr = role == Split::train;
            for (bool is_pre : {true, false}) {
                auto got = label_study(is_pre ? pre(d) : healthy(d), role);
                auto want = oracle::label_by_days(is_pre, d, tr);
                ASSERT_EQ(got.has_value(), want.has_value()) << d;
                if (!got) continue;
                EXPECT_EQ(got->labels, want->y) << d;
                EXPECT_EQ(got->mask, want->w) << d;
            }
        }
    }
}

TEST(LabelStudy, MonotoneVectors) {
    for (int d = 0; d <= 2000; d += 7) {
        for (bool is_pre : {true, false}) {
            auto o = label_study(is_pre ? pre(d) : healthy(d), Split::train);
            if (!o) continue;
            for (std::size_t k = 1; k < kYears; ++k) {
                EXPECT_LE(o->labels[k - 1], o->labels[k]);
                EXPECT_GE(o->mask[k - 1], o->mask[k]);
            }
        }
    }
}

TEST(ValidateRecord, RejectsMissingOrNegativeDays) {
    StudyRecord r = pre(10);
    r.days_to_diagnosis.reset();
    EXPECT_THROW(validate_record(r), MalformedRecord);
    EXPECT_THROW(validate_record(pre(-1)), MalformedRecord);
    EXPECT_THROW(validate_record(healthy(-5)), MalformedRecord);
    StudyRecord h = healthy(400);
    h.followup_days.reset();
    EXPECT_THROW(label_study(h, Split::train), MalformedRecord);
}

TEST(SplitCohort, PatientLevelAndDeterministic) {
    std::vector<StudyRecord> recs;
    for (int i = 0; i < 6; ++i) {
        auto r = healthy(800, "a" + std::to_string(i));
        r.patient_id = "alice";
        recs.push_back(r);
    }
    for (int i = 0; i < 200; ++i) {
        auto r = healthy(800, "b" + std::to_string(i));
        r.patient_id = "p" + std::to_string(i / 2);
        recs.push_back(r);
    }
    auto s1 = split_cohort(recs, {}, 42);
    auto s2 = split_cohort(recs, {}, 42);
    EXPECT_EQ(s1, s2);
    for (int i = 1; i < 6; ++i) EXPECT_EQ(s1[i], s1[0]);
    std::map<std::string, Split> seen;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        auto [it, fresh] = seen.emplace(recs[i].patient_id, s1[i]);
        if (!fresh) EXPECT_EQ(it->second, s1[i]);
    }
}

TEST(SplitCohort, ProportionsForThousandPatients) {
    std::vector<StudyRecord> recs;
    for (int i = 0; i < 1000; ++i) {
        auto r = healthy(800, "s" + std::to_string(i));
        r.patient_id = "p" + std::to_string(i);
        recs.push_back(r);
    }
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto s = split_cohort(recs, {}, seed);
        std::map<Split, int> n;
        for (auto x : s) ++n[x];
        EXPECT_GE(n[Split::train], 680);
        EXPECT_LE(n[Split::train], 720);
        EXPECT_GE(n[Split::val], 130);
        EXPECT_LE(n[Split::val], 170);
        EXPECT_GE(n[Split::test], 130);
        EXPECT_LE(n[Split::test], 170);
    }
    EXPECT_NE(split_cohort(recs, {}, 1), split_cohort(recs, {}, 2));
}

TEST(SplitCohort, RejectsBadRatios) {
    std::vector<StudyRecord> recs{healthy(800)};
    EXPECT_THROW(split_cohort(recs, {0.5, 0.2, 0.2}, 1), ContractViolation);
    EXPECT_THROW(split_cohort(std::vector<StudyRecord>{}, {}, 1), ContractViolation);
}

TEST(BuildCohort, DropsExcludedStudies) {
    std::vector<StudyRecord> recs{healthy(100, "x"), healthy(900, "y")};
    recs[1].patient_id = "q";
    auto out = build_cohort(recs, {}, 3);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].record.study_id, "y");
}

TEST(SamplerWeights, ImbalancedRatio) {
    std::vector<CohortKind> k(10, CohortKind::pre_cancer);
    k.insert(k.end(), 90, CohortKind::healthy);
    auto w = sampler_weights(k);
    EXPECT_NEAR(w[0] / w[50], 9.0, 1e-12);
    double pre_total = 0, total = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        total += w[i];
        if (k[i] == CohortKind::pre_cancer) pre_total += w[i];
    }
    EXPECT_NEAR(pre_total / total, 0.5, 1e-12);
}

TEST(SamplerWeights, BalancedIsUniform) {
    std::vector<CohortKind> k(50, CohortKind::pre_cancer);
    k.insert(k.end(), 50, CohortKind::healthy);
    auto w = sampler_weights(k);
    for (double x : w) EXPECT_DOUBLE_EQ(x, w[0]);
}

TEST(SamplerWeights, MonteCarloFraction) {
    std::vector<CohortKind> k(10, CohortKind::pre_cancer);
    k.insert(k.end(), 90, CohortKind::healthy);
    auto w = sampler_weights(k);
    std::mt19937_64 rng(11);
    std::discrete_distribution<std::size_t> dist(w.begin(), w.end());
    int hits = 0;
    for (int i = 0; i < 100000; ++i) hits += k[dist(rng)] == CohortKind::pre_cancer;
    EXPECT_NEAR(hits / 100000.0, 0.5, 0.01);
}

TEST(SamplerWeights, SingleKindIsDegenerate) {
    std::vector<CohortKind> k(5, CohortKind::healthy);
    EXPECT_THROW(sampler_weights(k), DegenerateSampler);
}
