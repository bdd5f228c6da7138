#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dbtrisk/common.hpp"

namespace dbtrisk {

/// One screening exam of one patient on one date.
struct StudyRecord {
    std::string patient_id;
    std::string study_id;
    std::string study_date;  // ISO-8601 YYYY-MM-DD
    CohortKind cohort_kind = CohortKind::healthy;
    std::optional<int> days_to_diagnosis;  // pre_cancer only
    std::optional<int> followup_days;      // healthy only
    Density density = Density::unknown;
    std::array<std::string, 4> view_paths;  // indexed by View

    const std::string& view_path(View v) const { return view_paths[static_cast<std::size_t>(v)]; }
};

/// y: once positive, stays positive.
using LabelVector = std::array<std::uint8_t, kYears>;
/// w: once a year is unobserved, every later year is too.
using MaskVector = std::array<std::uint8_t, kYears>;

struct LabeledStudy {
    StudyRecord record;
    LabelVector labels{};
    MaskVector mask{};
    Split split = Split::train;
};

struct YearlyOutcome {
    LabelVector labels{};
    MaskVector mask{};
};

/// Throws MalformedRecord when the kind-specific day field is missing or negative.
void validate_record(const StudyRecord& record);

/// Yearly labels and observability mask for one study, or nullopt when the study
/// is excluded under `split_role`.
///
/// Year j covers days (365(j-1), 365j] after the study date; a diagnosis on day d
/// falls in year max(1, ceil(d/365)). Diagnoses later than day 1825 yield a fully
/// observed negative. Healthy studies observe floor(F/365) complete years.
/// Excluded: pre-cancer studies diagnosed within 183 days when the role is val or
/// test, and healthy studies with less than 365 days of follow-up.
std::optional<YearlyOutcome> label_study(const StudyRecord& record, Split split_role);

/// Days that count as "within six months of diagnosis".
inline constexpr int kNearDiagnosisDays = 183;

struct SplitRatios {
    double train = 0.70;
    double val = 0.15;
    double test = 0.15;
};

/// Patient-level split assignment, one entry per record (same order as `records`).
///
/// Each distinct patient_id gets a seeded 64-bit hash key; patients are ranked by
/// that key and the ranked list is cut at round(P*train) and round(P*(train+val)).
/// All studies of a patient therefore share a split, and patient-count proportions
/// are exact up to rounding.
std::vector<Split> split_cohort(std::span<const StudyRecord> records, const SplitRatios& ratios,
                                std::uint64_t seed);

/// Labels every record under its assigned split and drops excluded studies.
std::vector<LabeledStudy> build_cohort(std::span<const StudyRecord> records,
                                       const SplitRatios& ratios, std::uint64_t seed);

/// Per-study sampling weights that draw both cohort kinds in equal proportion.
std::vector<double> sampler_weights(std::span<const CohortKind> kinds);
std::vector<double> sampler_weights(std::span<const LabeledStudy> studies);

/// Seeded 64-bit hash of a string (FNV-1a folded through a splitmix64 finalizer).
std::uint64_t seeded_hash(std::string_view text, std::uint64_t seed);

}  // namespace dbtrisk
