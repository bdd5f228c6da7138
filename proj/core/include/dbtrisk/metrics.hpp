#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dbtrisk/cohort.hpp"
#include "dbtrisk/common.hpp"
#include "dbtrisk/hazard.hpp"

namespace dbtrisk {

/// One row of a prediction table.
struct PredictionRow {
    std::string study_id;
    YearArray p{};
    LabelVector y{};
    MaskVector w{};
    Density density = Density::unknown;
    Split split = Split::test;
    // Not part of the on-disk table; filled by joining a manifest when available.
    std::optional<std::string> patient_id;
    std::optional<CohortKind> cohort_kind;
};

using PredictionTable = std::vector<PredictionRow>;

/// Area under the ROC curve via the Mann-Whitney U statistic with mid-ranks,
/// i.e. P(score+ > score-) + P(tie)/2. Throws UndefinedMetric on single-class input.
double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct YearAuroc {
    std::optional<double> value;  // absent when a class is empty
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

using YearlyAuroc = std::array<YearAuroc, kYears>;

/// Year k uses rows with w_k = 1, scoring p_k against y_k.
YearlyAuroc yearly_auroc(std::span<const PredictionRow> table);

struct YoudenResult {
    double threshold = 0.0;
    double j = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
};

/// Scans the distinct observed scores as thresholds (positive means score >= threshold)
/// and returns the maximal J = sensitivity + specificity - 1; ties go to the smallest threshold.
YoudenResult youden_threshold(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Youden threshold over every observed (study, year) pair of `table`.
YoudenResult pooled_youden_threshold(std::span<const PredictionRow> table);

/// 0 = low risk, k in 1..5 = first year with p_k >= threshold.
struct RiskGroup {
    int first_positive_year = 0;

    bool is_low_risk() const noexcept { return first_positive_year == 0; }
    std::string name() const;
    friend auto operator<=>(const RiskGroup&, const RiskGroup&) = default;
};

struct RiskGroupAssignment {
    std::string study_id;
    RiskGroup group;
};

RiskGroup risk_group(const YearArray& p, double threshold);
std::vector<RiskGroupAssignment> assign_risk_groups(std::span<const PredictionRow> table, double threshold);

/// Discrete-time observation derived from (y, w).
struct SurvivalObservation {
    int time = 0;       // event year, or last observed year for event-free studies
    bool event = false;
};

/// Event year = first k with y_k = w_k = 1; otherwise censored at the last k with w_k = 1.
SurvivalObservation survival_observation(const LabelVector& y, const MaskVector& w);

struct KmYear {
    std::size_t at_risk = 0;
    std::size_t events = 0;
    std::size_t censored = 0;
    double survival = 1.0;
};

struct KmCurve {
    std::array<KmYear, kYears> years{};
    bool empty = true;

    double survival(int t) const { return t == 0 ? 1.0 : years[static_cast<std::size_t>(t - 1)].survival; }
};

/// Product-limit estimate over years 1..5. Studies censored at year t leave the risk
/// set after year t.
KmCurve kaplan_meier(std::span<const SurvivalObservation> observations);

/// Curves for low risk and high risk years 1..5; groups without studies are flagged empty.
std::map<RiskGroup, KmCurve> kaplan_meier_by_group(std::span<const PredictionRow> table,
                                                   std::span<const RiskGroupAssignment> groups);

struct SubgroupResult {
    std::size_t studies = 0;
    std::size_t positive_studies = 0;  // any observed positive year
    std::optional<std::size_t> patients;
    std::optional<std::size_t> pre_cancer_patients;
    std::optional<std::size_t> healthy_patients;
    YearlyAuroc auroc{};
};

/// Yearly AUROC per density class a-d. Unknown density is excluded everywhere;
/// classes without rows are absent from the result.
std::map<Density, SubgroupResult> subgroup_analysis(std::span<const PredictionRow> table);

}  // namespace dbtrisk
