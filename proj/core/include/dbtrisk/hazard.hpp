#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "dbtrisk/cohort.hpp"
#include "dbtrisk/common.hpp"

namespace dbtrisk {

using YearArray = std::array<double, kYears>;

/// Linear map from a study feature vector to five yearly hazard logits.
class HazardHead {
public:
    HazardHead() = default;
    explicit HazardHead(std::size_t input_dim);
    HazardHead(std::size_t input_dim, std::vector<double> weights, YearArray bias);

    /// Uniform(-1/sqrt(dim), 1/sqrt(dim)) weights, zero bias.
    static HazardHead random_init(std::size_t input_dim, std::uint64_t seed);

    std::size_t input_dim() const noexcept { return input_dim_; }

    /// Row-major kYears x input_dim.
    std::span<double> weights() noexcept { return weights_; }
    std::span<const double> weights() const noexcept { return weights_; }
    std::span<double> row(std::size_t year) noexcept { return weights().subspan(year * input_dim_, input_dim_); }
    std::span<const double> row(std::size_t year) const noexcept {
        return weights().subspan(year * input_dim_, input_dim_);
    }

    YearArray& bias() noexcept { return bias_; }
    const YearArray& bias() const noexcept { return bias_; }

    bool is_finite() const noexcept;

    friend bool operator==(const HazardHead&, const HazardHead&) = default;

private:
    std::size_t input_dim_ = 0;
    std::vector<double> weights_;
    YearArray bias_{};
};

/// Per-study output of the cumulative hazard layer.
struct PredictionVector {
    YearArray logits{};
    YearArray hazards{};             // softplus(logits)
    YearArray cumulative_hazard{};   // prefix sums of hazards
    YearArray probabilities{};       // 1 - exp(-H), evaluated as -expm1(-H), capped at kMaxProbability

    /// log(1 - p_k); exactly -H_k.
    double log_survival(std::size_t k) const noexcept { return -cumulative_hazard[k]; }
};

/// log(1 + e^x) without overflow.
double softplus(double x) noexcept;
/// 1 / (1 + e^-x), the derivative of softplus.
double logistic(double x) noexcept;
/// log(1 - e^-h) for h > 0.
double log1mexp(double h) noexcept;

/// Lower clamp on H before the positive-label term log(1 - e^-H).
inline constexpr double kMinCumulativeHazard = 1e-12;

/// Largest double below 1; probabilities saturate here once H exceeds about 37.
inline constexpr double kMaxProbability = 1.0 - 0x1p-53;

/// Hazard layer applied to precomputed logits.
PredictionVector predict_from_logits(const YearArray& logits) noexcept;
PredictionVector forward(const HazardHead& head, std::span<const double> x);

/// Row-major batch of feature vectors with labels and masks.
struct BatchView {
    std::span<const double> features;  // n x dim
    std::size_t dim = 0;
    std::span<const LabelVector> labels;
    std::span<const MaskVector> masks;

    std::size_t size() const noexcept { return labels.size(); }
    std::span<const double> x(std::size_t i) const noexcept { return features.subspan(i * dim, dim); }
};

/// Mask-weighted binary cross-entropy averaged over the batch.
///
/// Each study contributes -sum_j w_j [y_j log p_j + (1 - y_j) log(1 - p_j)] / sum_j w_j.
/// Masked years are skipped outright, so their labels are never read.
double masked_bce(std::span<const PredictionVector> predictions, std::span<const LabelVector> labels,
                  std::span<const MaskVector> masks);

/// Loss of a single study (without the 1/N batch factor).
double study_loss(const PredictionVector& pred, const LabelVector& y, const MaskVector& w);

struct HeadGradient {
    std::vector<double> weights;  // same layout as HazardHead::weights()
    YearArray bias{};
};

/// d(loss)/d(logits) for one study, scaled by `scale` (typically 1/N).
YearArray logit_gradient(const PredictionVector& pred, const LabelVector& y, const MaskVector& w, double scale);

/// Loss and exact gradient of masked_bce for `head` on `batch`.
///
/// With workers > 1 the batch is cut into contiguous chunks whose partial sums are
/// added in chunk order, so results are reproducible for a fixed worker count but
/// can differ in the last bits from the single-worker sum.
double loss_and_gradient(const HazardHead& head, const BatchView& batch, HeadGradient& grad,
                         unsigned workers = 1);

HeadGradient gradient(const HazardHead& head, const BatchView& batch);
double batch_loss(const HazardHead& head, const BatchView& batch);

}  // namespace dbtrisk
