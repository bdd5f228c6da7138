#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dbtrisk/cohort.hpp"
#include "dbtrisk/hazard.hpp"
#include "dbtrisk/metrics.hpp"

namespace dbtrisk {

enum class Optimizer : std::uint8_t { sgd, adam };

struct TrainConfig {
    double learning_rate = 1e-4;
    std::size_t batch_size = 256;
    std::size_t max_epochs = 100;
    std::size_t patience = 10;
    std::uint64_t seed = 0;
    Optimizer optimizer = Optimizer::adam;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    bool standardize_features = false;
    unsigned workers = 1;

    /// Throws ContractViolation when a field is out of range.
    void validate() const;
};

/// A labeled study together with its aggregated feature vector.
struct Example {
    std::string study_id;
    std::string patient_id;
    std::vector<double> x;
    LabelVector y{};
    MaskVector w{};
    CohortKind cohort_kind = CohortKind::healthy;
    Density density = Density::unknown;
    Split split = Split::train;
};

using Dataset = std::vector<Example>;

/// Pairs labeled studies with their feature vectors.
Dataset make_examples(std::span<const LabeledStudy> studies,
                      const std::function<std::vector<double>(const StudyRecord&)>& features);

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    YearlyAuroc val_auroc{};
    double positive_fraction = 0.0;  // share of pre_cancer draws this epoch
};

enum class StopReason : std::uint8_t { max_epochs, patience };
std::string_view to_string(StopReason r);

struct TrainReport {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;  // 1-based, into epochs
    StopReason stop_reason = StopReason::max_epochs;
};

struct TrainResult {
    HazardHead head;
    TrainReport report;
};

/// Mini-batch training of a hazard head with class-balanced sampling.
///
/// Each epoch draws |train| studies with replacement, weighted so that both cohort
/// kinds are equally likely. The head from the epoch with the lowest validation loss
/// is returned; training stops after `patience` epochs without improvement.
/// With `standardize_features` the head is trained on z-scored inputs and folded back
/// so the returned head applies to raw features. Throws Divergence on a non-finite loss.
TrainResult train(const TrainConfig& config, std::span<const Example> train_set, std::span<const Example> val_set);

/// Mean masked BCE of `head` over a dataset.
double dataset_loss(const HazardHead& head, std::span<const Example> data);

/// One row per example; rows are monotone in p.
PredictionTable predict_dataset(const HazardHead& head, std::span<const Example> data, unsigned workers = 1);

}  // namespace dbtrisk
