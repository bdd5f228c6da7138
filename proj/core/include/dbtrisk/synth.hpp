#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dbtrisk/cohort.hpp"
#include "dbtrisk/features.hpp"
#include "dbtrisk/hazard.hpp"
#include "dbtrisk/metrics.hpp"

namespace dbtrisk::synth {

/// Generator settings. The planted model is the hazard layer itself:
/// x ~ N(0, I), z = W* x + b*, h* = softplus(z), p* = 1 - exp(-cumsum(h*)).
struct SynthConfig {
    std::size_t n_patients = 2000;
    std::size_t studies_min = 1;
    std::size_t studies_max = 9;
    std::size_t feature_dim = 16;  // must be a multiple of 4 (one block per view)

    /// Norm of every row of W* when true_weights is not given. Rows share one random
    /// unit direction, so the planted direction is well defined. 0 gives no signal.
    double signal_scale = 1.5;
    std::optional<std::vector<double>> true_weights;  // 5 x feature_dim, row-major
    /// When absent, a common bias is calibrated so the mean p*_5 equals pre_cancer_fraction.
    std::optional<YearArray> true_bias;
    double pre_cancer_fraction = 0.5;

    /// Probability that follow-up ends after each of years 1..4.
    double censor_rate = 0.15;

    // Token geometry for raw embedding output.
    TokenKind token_kind = TokenKind::patch;
    std::uint32_t frames_min = 2;
    std::uint32_t frames_max = 4;
    std::uint32_t patches = 16;
    double token_noise = 0.5;

    std::uint64_t seed = 0;

    void validate() const;
};

struct TruthRow {
    std::string study_id;
    std::string patient_id;
    YearArray hazards{};
    YearArray probabilities{};
    int event_year = 0;   // 0 when no event within five years
    int censor_year = 5;  // last year of follow-up, 1..5
    bool event_observed = false;
};

struct SynthCohort {
    std::vector<StudyRecord> records;
    std::vector<std::vector<double>> features;  // aligned with records
    std::vector<TruthRow> truth;                // aligned with records
    HazardHead planted;
};

/// Deterministic per seed. Each patient draws from its own counter-derived stream,
/// so results do not depend on generation order.
SynthCohort generate_cohort(const SynthConfig& config);

/// Token tensors for the four views of study `index`; patch means reproduce the
/// study's feature vector split into four view blocks, plus token noise.
std::array<EmbeddingSeries, 4> synth_embeddings(const SynthConfig& config, const SynthCohort& cohort,
                                                std::size_t index);

/// Yearly AUROC scored by the generator's true probabilities p* over the studies
/// present in `table` (its y and w are used as-is).
YearlyAuroc bayes_oracle_auroc(std::span<const TruthRow> truth, std::span<const PredictionRow> table);

enum class EmitMode : std::uint8_t { features, raw };

/// Writes manifest.csv, truth.csv, planted_head.hzh and either features/<study>.dbtf
/// or embeddings/<study>_<view>.dbte under `dir`. Manifest view paths are relative to `dir`.
void emit_cohort(const SynthConfig& config, const SynthCohort& cohort, const std::filesystem::path& dir,
                 EmitMode mode, unsigned workers = 1);

std::string format_truth_csv(std::span<const TruthRow> truth);
std::vector<TruthRow> parse_truth_csv(std::string_view text);

/// Cosine similarity of two heads' weight matrices, flattened.
double weight_cosine(const HazardHead& a, const HazardHead& b);

}  // namespace dbtrisk::synth
