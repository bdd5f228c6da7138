#include "dbtrisk/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "dbtrisk/errors.hpp"

namespace dbtrisk {

void validate_record(const StudyRecord& record) {
    if (record.cohort_kind == CohortKind::pre_cancer) {
        if (!record.days_to_diagnosis)
            throw MalformedRecord("study " + record.study_id + ": pre_cancer without days_to_diagnosis");
        if (*record.days_to_diagnosis < 0)
            throw MalformedRecord("study " + record.study_id + ": negative days_to_diagnosis");
    } else {
        if (!record.followup_days)
            throw MalformedRecord("study " + record.study_id + ": healthy without followup_days");
        if (*record.followup_days < 0)
            throw MalformedRecord("study " + record.study_id + ": negative followup_days");
    }
}

std::optional<YearlyOutcome> label_study(const StudyRecord& record, Split split_role) {
    validate_record(record);
    YearlyOutcome out;

    if (record.cohort_kind == CohortKind::pre_cancer) {
        const int d = *record.days_to_diagnosis;
        if (d < kNearDiagnosisDays && split_role != Split::train) return std::nullopt;
        out.mask.fill(1);
        if (d <= kHorizonDays) {
            // ceil(d / 365), with a same-day diagnosis counted in year 1
            const int year = std::max(1, (d + kDaysPerYear - 1) / kDaysPerYear);
            for (int j = year; j <= static_cast<int>(kYears); ++j) out.labels[j - 1] = 1;
        }
        return out;
    }

    const int f = *record.followup_days;
    if (f < kDaysPerYear) return std::nullopt;
    const int observed = std::min<int>(kYears, f / kDaysPerYear);
    for (int j = 0; j < observed; ++j) out.mask[j] = 1;
    return out;
}

std::uint64_t seeded_hash(std::string_view text, std::uint64_t seed) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    // splitmix64 finalizer over hash ^ seed
    std::uint64_t z = h ^ (seed + 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<Split> split_cohort(std::span<const StudyRecord> records, const SplitRatios& ratios,
                                std::uint64_t seed) {
    if (records.empty()) throw ContractViolation("split_cohort: empty record list");
    if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 ||
        std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9)
        throw ContractViolation("split_cohort: ratios must be non-negative and sum to 1");

    std::vector<std::string_view> patients;
    std::unordered_map<std::string_view, std::size_t> index;
    for (const auto& r : records) {
        if (index.emplace(r.patient_id, patients.size()).second) patients.push_back(r.patient_id);
    }

    std::vector<std::pair<std::uint64_t, std::string_view>> keyed;
    keyed.reserve(patients.size());
    for (auto p : patients) keyed.emplace_back(seeded_hash(p, seed), p);
    // Hash collisions fall back to the id so the order is total.
    std::sort(keyed.begin(), keyed.end());

    const auto n = static_cast<double>(keyed.size());
    const auto train_end = static_cast<std::size_t>(std::llround(n * ratios.train));
    const auto val_end = std::min(keyed.size(),
                                  static_cast<std::size_t>(std::llround(n * (ratios.train + ratios.val))));

    std::unordered_map<std::string_view, Split> assigned;
    for (std::size_t i = 0; i < keyed.size(); ++i) {
        const Split s = i < train_end ? Split::train : (i < val_end ? Split::val : Split::test);
        assigned.emplace(keyed[i].second, s);
    }

    std::vector<Split> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(assigned.at(r.patient_id));
    return out;
}

std::vector<LabeledStudy> build_cohort(std::span<const StudyRecord> records,
                                       const SplitRatios& ratios, std::uint64_t seed) {
    const auto splits = split_cohort(records, ratios, seed);
    std::vector<LabeledStudy> out;
    out.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto outcome = label_study(records[i], splits[i]);
        if (!outcome) continue;
        out.push_back(LabeledStudy{records[i], outcome->labels, outcome->mask, splits[i]});
    }
    return out;
}

std::vector<double> sampler_weights(std::span<const CohortKind> kinds) {
    const auto n_pre = static_cast<std::size_t>(
        std::count(kinds.begin(), kinds.end(), CohortKind::pre_cancer));
    const std::size_t n_healthy = kinds.size() - n_pre;
    if (n_pre == 0 || n_healthy == 0)
        throw DegenerateSampler("sampler_weights: need at least one pre_cancer and one healthy study (got " +
                                std::to_string(n_pre) + " and " + std::to_string(n_healthy) + ")");
    const double w_pre = 1.0 / static_cast<double>(n_pre);
    const double w_healthy = 1.0 / static_cast<double>(n_healthy);
    std::vector<double> out;
    out.reserve(kinds.size());
    for (auto k : kinds) out.push_back(k == CohortKind::pre_cancer ? w_pre : w_healthy);
    return out;
}

std::vector<double> sampler_weights(std::span<const LabeledStudy> studies) {
    std::vector<CohortKind> kinds;
    kinds.reserve(studies.size());
    for (const auto& s : studies) kinds.push_back(s.record.cohort_kind);
    return sampler_weights(kinds);
}

}  // namespace dbtrisk
