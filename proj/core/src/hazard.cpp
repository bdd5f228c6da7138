#include "dbtrisk/hazard.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "dbtrisk/errors.hpp"

namespace dbtrisk {

HazardHead::HazardHead(std::size_t input_dim)
    : input_dim_(input_dim), weights_(kYears * input_dim, 0.0) {}

HazardHead::HazardHead(std::size_t input_dim, std::vector<double> weights, YearArray bias)
    : input_dim_(input_dim), weights_(std::move(weights)), bias_(bias) {
    if (weights_.size() != kYears * input_dim_)
        throw ContractViolation("HazardHead: weight count " + std::to_string(weights_.size()) +
                                " does not match 5 x " + std::to_string(input_dim_));
}

HazardHead HazardHead::random_init(std::size_t input_dim, std::uint64_t seed) {
    if (input_dim == 0) throw ContractViolation("HazardHead: input dimension must be positive");
    HazardHead head(input_dim);
    std::mt19937_64 rng(seed);
    const double half_width = 1.0 / std::sqrt(static_cast<double>(input_dim));
    std::uniform_real_distribution<double> dist(-half_width, half_width);
    for (auto& w : head.weights_) w = dist(rng);
    return head;
}

bool HazardHead::is_finite() const noexcept {
    return std::all_of(weights_.begin(), weights_.end(), [](double v) { return std::isfinite(v); }) &&
           std::all_of(bias_.begin(), bias_.end(), [](double v) { return std::isfinite(v); });
}

double softplus(double x) noexcept { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double logistic(double x) noexcept {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double log1mexp(double h) noexcept {
    // Maechler's branch rule: expm1 near zero, log1p elsewhere.
    static const double kLn2 = std::log(2.0);
    return h < kLn2 ? std::log(-std::expm1(-h)) : std::log1p(-std::exp(-h));
}

PredictionVector predict_from_logits(const YearArray& logits) noexcept {
    PredictionVector p;
    p.logits = logits;
    double running = 0.0;
    for (std::size_t k = 0; k < kYears; ++k) {
        p.hazards[k] = softplus(logits[k]);
        running += p.hazards[k];
        p.cumulative_hazard[k] = running;
        p.probabilities[k] = std::min(-std::expm1(-running), kMaxProbability);
    }
    return p;
}

namespace {

YearArray logits_of(const HazardHead& head, std::span<const double> x) {
    YearArray z = head.bias();
    const std::size_t dim = head.input_dim();
    const auto w = head.weights();
    for (std::size_t k = 0; k < kYears; ++k) {
        const double* row = w.data() + k * dim;
        double acc = 0.0;
        for (std::size_t i = 0; i < dim; ++i) acc += row[i] * x[i];
        z[k] += acc;
    }
    return z;
}

double observed_count(const MaskVector& w) {
    int n = 0;
    for (auto v : w) n += v ? 1 : 0;
    if (n == 0) throw ContractViolation("study with an all-zero mask reached the loss");
    return static_cast<double>(n);
}

void check_batch(const BatchView& batch, std::size_t dim) {
    if (batch.dim != dim)
        throw ContractViolation("batch feature dim " + std::to_string(batch.dim) + " != head input dim " +
                                std::to_string(dim));
    if (batch.masks.size() != batch.labels.size() || batch.features.size() != batch.labels.size() * batch.dim)
        throw ContractViolation("batch shapes disagree");
}

}  // namespace

PredictionVector forward(const HazardHead& head, std::span<const double> x) {
    if (x.size() != head.input_dim())
        throw ContractViolation("forward: feature length " + std::to_string(x.size()) + " != head input dim " +
                                std::to_string(head.input_dim()));
    for (double v : x)
        if (!std::isfinite(v)) throw ContractViolation("forward: non-finite feature value");
    return predict_from_logits(logits_of(head, x));
}

double study_loss(const PredictionVector& pred, const LabelVector& y, const MaskVector& w) {
    const double n_obs = observed_count(w);
    double acc = 0.0;
    for (std::size_t j = 0; j < kYears; ++j) {
        if (!w[j]) continue;
        const double H = pred.cumulative_hazard[j];
        acc += y[j] ? log1mexp(std::max(H, kMinCumulativeHazard)) : -H;
    }
    return -acc / n_obs;
}

double masked_bce(std::span<const PredictionVector> predictions, std::span<const LabelVector> labels,
                  std::span<const MaskVector> masks) {
    if (predictions.size() != labels.size() || labels.size() != masks.size())
        throw ContractViolation("masked_bce: batch shapes disagree");
    if (predictions.empty()) throw ContractViolation("masked_bce: empty batch");
    double total = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) total += study_loss(predictions[i], labels[i], masks[i]);
    return total / static_cast<double>(predictions.size());
}

YearArray logit_gradient(const PredictionVector& pred, const LabelVector& y, const MaskVector& w, double scale) {
    const double factor = scale / observed_count(w);
    YearArray dH{};
    for (std::size_t j = 0; j < kYears; ++j) {
        if (!w[j]) continue;
        const double H = std::max(pred.cumulative_hazard[j], kMinCumulativeHazard);
        dH[j] = factor * (y[j] ? -1.0 / std::expm1(H) : 1.0);
    }
    // dL/dh_i = sum_{j >= i} dL/dH_j, then through softplus.
    YearArray dz{};
    double suffix = 0.0;
    for (std::size_t i = kYears; i-- > 0;) {
        suffix += dH[i];
        dz[i] = suffix * logistic(pred.logits[i]);
    }
    return dz;
}

namespace {

double accumulate_range(const HazardHead& head, const BatchView& batch, std::size_t begin, std::size_t end,
                        double scale, HeadGradient& grad) {
    const std::size_t dim = head.input_dim();
    grad.weights.assign(kYears * dim, 0.0);
    grad.bias.fill(0.0);
    double loss = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        const auto x = batch.x(i);
        const auto pred = predict_from_logits(logits_of(head, x));
        loss += study_loss(pred, batch.labels[i], batch.masks[i]);
        const auto dz = logit_gradient(pred, batch.labels[i], batch.masks[i], scale);
        for (std::size_t k = 0; k < kYears; ++k) {
            if (dz[k] == 0.0) continue;
            double* row = grad.weights.data() + k * dim;
            for (std::size_t d = 0; d < dim; ++d) row[d] += dz[k] * x[d];
            grad.bias[k] += dz[k];
        }
    }
    return loss;
}

}  // namespace

double loss_and_gradient(const HazardHead& head, const BatchView& batch, HeadGradient& grad, unsigned workers) {
    check_batch(batch, head.input_dim());
    const std::size_t n = batch.size();
    if (n == 0) throw ContractViolation("loss_and_gradient: empty batch");
    const double scale = 1.0 / static_cast<double>(n);

    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
    if (workers == 1) return accumulate_range(head, batch, 0, n, scale, grad) * scale;

    std::vector<HeadGradient> partial(workers);
    std::vector<double> losses(workers, 0.0);
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned t = 0; t < workers; ++t) {
            const std::size_t begin = n * t / workers, end = n * (t + 1) / workers;
            pool.emplace_back([&, t, begin, end] {
                try {
                    losses[t] = accumulate_range(head, batch, begin, end, scale, partial[t]);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    grad = std::move(partial[0]);
    double loss = losses[0];
    for (unsigned t = 1; t < workers; ++t) {
        for (std::size_t i = 0; i < grad.weights.size(); ++i) grad.weights[i] += partial[t].weights[i];
        for (std::size_t k = 0; k < kYears; ++k) grad.bias[k] += partial[t].bias[k];
        loss += losses[t];
    }
    return loss * scale;
}

HeadGradient gradient(const HazardHead& head, const BatchView& batch) {
    HeadGradient g;
    loss_and_gradient(head, batch, g);
    return g;
}

double batch_loss(const HazardHead& head, const BatchView& batch) {
    check_batch(batch, head.input_dim());
    if (batch.size() == 0) throw ContractViolation("batch_loss: empty batch");
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i)
        total += study_loss(predict_from_logits(logits_of(head, batch.x(i))), batch.labels[i], batch.masks[i]);
    return total / static_cast<double>(batch.size());
}

}  // namespace dbtrisk
