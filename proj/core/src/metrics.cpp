#include "dbtrisk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "dbtrisk/errors.hpp"

namespace dbtrisk {

namespace {

void check_scored(std::span<const double> scores, std::span<const std::uint8_t> labels, const char* who) {
    if (scores.size() != labels.size())
        throw ContractViolation(std::string(who) + ": scores and labels differ in length");
    for (double s : scores)
        if (std::isnan(s)) throw ContractViolation(std::string(who) + ": NaN score");
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const std::uint8_t> labels) {
    const auto pos = static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](auto v) { return v != 0; }));
    return {pos, labels.size() - pos};
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    check_scored(scores, labels, "auroc");
    const auto [n_pos, n_neg] = class_counts(labels);
    if (n_pos == 0 || n_neg == 0)
        throw UndefinedMetric("auroc: needs both classes (positives=" + std::to_string(n_pos) +
                              ", negatives=" + std::to_string(n_neg) + ")");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double pos_rank_sum = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i + 1;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        // ranks i+1 .. j share the mid-rank
        const double mid = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]]) pos_rank_sum += mid;
        i = j;
    }
    const double p = static_cast<double>(n_pos), n = static_cast<double>(n_neg);
    const double u = pos_rank_sum - p * (p + 1.0) / 2.0;
    return u / (p * n);
}

YearlyAuroc yearly_auroc(std::span<const PredictionRow> table) {
    YearlyAuroc out;
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    for (std::size_t k = 0; k < kYears; ++k) {
        scores.clear();
        labels.clear();
        for (const auto& row : table) {
            if (!row.w[k]) continue;
            scores.push_back(row.p[k]);
            labels.push_back(row.y[k]);
        }
        const auto [pos, neg] = class_counts(labels);
        out[k].positives = pos;
        out[k].negatives = neg;
        if (pos > 0 && neg > 0) out[k].value = auroc(scores, labels);
    }
    return out;
}

YoudenResult youden_threshold(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    check_scored(scores, labels, "youden_threshold");
    const auto [n_pos, n_neg] = class_counts(labels);
    if (n_pos == 0 || n_neg == 0) throw UndefinedMetric("youden_threshold: needs both classes");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    const auto P = static_cast<long long>(n_pos), N = static_cast<long long>(n_neg);
    // At threshold scores[order[i]]: everything before i is called negative.
    long long tp = P, tn = 0;
    long long best_num = std::numeric_limits<long long>::min();
    long long best_tp = 0, best_tn = 0;
    double best_threshold = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        const double t = scores[order[i]];
        // J * P * N, compared exactly so ties resolve to the smallest threshold
        const long long num = tp * N + tn * P - P * N;
        if (num > best_num) {
            best_num = num;
            best_threshold = t;
            best_tp = tp;
            best_tn = tn;
        }
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == t) {
            if (labels[order[j]]) --tp;
            else ++tn;
            ++j;
        }
        i = j;
    }
    YoudenResult r;
    r.threshold = best_threshold;
    r.sensitivity = static_cast<double>(best_tp) / static_cast<double>(P);
    r.specificity = static_cast<double>(best_tn) / static_cast<double>(N);
    r.j = static_cast<double>(best_num) / (static_cast<double>(P) * static_cast<double>(N));
    return r;
}

YoudenResult pooled_youden_threshold(std::span<const PredictionRow> table) {
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    for (const auto& row : table) {
        for (std::size_t k = 0; k < kYears; ++k) {
            if (!row.w[k]) continue;
            scores.push_back(row.p[k]);
            labels.push_back(row.y[k]);
        }
    }
    return youden_threshold(scores, labels);
}

std::string RiskGroup::name() const {
    return is_low_risk() ? "low_risk" : "high_risk_year_" + std::to_string(first_positive_year);
}

RiskGroup risk_group(const YearArray& p, double threshold) {
    for (std::size_t k = 0; k < kYears; ++k)
        if (p[k] >= threshold) return RiskGroup{static_cast<int>(k) + 1};
    return RiskGroup{0};
}

std::vector<RiskGroupAssignment> assign_risk_groups(std::span<const PredictionRow> table, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0))
        throw ContractViolation("assign_risk_groups: threshold must lie in (0, 1)");
    std::vector<RiskGroupAssignment> out;
    out.reserve(table.size());
    for (const auto& row : table) out.push_back({row.study_id, risk_group(row.p, threshold)});
    return out;
}

SurvivalObservation survival_observation(const LabelVector& y, const MaskVector& w) {
    int last_observed = 0;
    for (std::size_t k = 0; k < kYears; ++k) {
        if (!w[k]) continue;
        if (y[k]) return {static_cast<int>(k) + 1, true};
        last_observed = static_cast<int>(k) + 1;
    }
    if (last_observed == 0) throw ContractViolation("survival_observation: study has no observed year");
    return {last_observed, false};
}

KmCurve kaplan_meier(std::span<const SurvivalObservation> observations) {
    KmCurve curve;
    curve.empty = observations.empty();
    for (const auto& o : observations)
        if (o.time < 1 || o.time > static_cast<int>(kYears))
            throw ContractViolation("kaplan_meier: observation time outside 1..5");

    std::size_t at_risk = observations.size();
    double s = 1.0;
    for (std::size_t k = 0; k < kYears; ++k) {
        const int t = static_cast<int>(k) + 1;
        auto& yr = curve.years[k];
        yr.at_risk = at_risk;
        for (const auto& o : observations) {
            if (o.time != t) continue;
            if (o.event) ++yr.events;
            else ++yr.censored;
        }
        if (at_risk > 0) s *= 1.0 - static_cast<double>(yr.events) / static_cast<double>(at_risk);
        yr.survival = s;
        at_risk -= yr.events + yr.censored;
    }
    return curve;
}

std::map<RiskGroup, KmCurve> kaplan_meier_by_group(std::span<const PredictionRow> table,
                                                   std::span<const RiskGroupAssignment> groups) {
    if (table.size() != groups.size())
        throw ContractViolation("kaplan_meier_by_group: table and group assignment differ in length");
    std::map<RiskGroup, std::vector<SurvivalObservation>> by_group;
    for (int g = 0; g <= static_cast<int>(kYears); ++g) by_group[RiskGroup{g}];
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (groups[i].study_id != table[i].study_id)
            throw ContractViolation("kaplan_meier_by_group: group assignment out of order at " + table[i].study_id);
        by_group[groups[i].group].push_back(survival_observation(table[i].y, table[i].w));
    }
    std::map<RiskGroup, KmCurve> out;
    for (const auto& [g, obs] : by_group) out.emplace(g, kaplan_meier(obs));
    return out;
}

std::map<Density, SubgroupResult> subgroup_analysis(std::span<const PredictionRow> table) {
    std::map<Density, std::vector<PredictionRow>> rows;
    for (const auto& r : table)
        if (r.density != Density::unknown) rows[r.density].push_back(r);

    std::map<Density, SubgroupResult> out;
    for (const auto& [density, sub] : rows) {
        SubgroupResult res;
        res.studies = sub.size();
        for (const auto& r : sub) {
            for (std::size_t k = 0; k < kYears; ++k) {
                if (r.w[k] && r.y[k]) {
                    ++res.positive_studies;
                    break;
                }
            }
        }
        const bool have_patients = std::all_of(sub.begin(), sub.end(), [](const auto& r) { return r.patient_id.has_value(); });
        if (have_patients) {
            std::set<std::string> all, pre, healthy;
            bool have_kinds = true;
            for (const auto& r : sub) {
                all.insert(*r.patient_id);
                if (!r.cohort_kind) {
                    have_kinds = false;
                    continue;
                }
                (*r.cohort_kind == CohortKind::pre_cancer ? pre : healthy).insert(*r.patient_id);
            }
            res.patients = all.size();
            if (have_kinds) {
                res.pre_cancer_patients = pre.size();
                res.healthy_patients = healthy.size();
            }
        }
        res.auroc = yearly_auroc(sub);
        out.emplace(density, std::move(res));
    }
    return out;
}

}  // namespace dbtrisk
