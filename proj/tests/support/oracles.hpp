#pragma once

// Brute-force reference implementations used only by tests. None of these call
// into the library's computational code.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace oracle {

using Bits = std::array<std::uint8_t, 5>;

struct Labeled {
    Bits y{};
    Bits w{};
    friend bool operator==(const Labeled&, const Labeled&) = default;
};

/// Day-by-day labeling. Day t in 1..1825 belongs to year ceil(t/365). A pre-cancer
/// study is positive at year j if diagnosis happened on or before some day of year j;
/// a healthy study observes year j only if every day of it is covered by follow-up.
inline std::optional<Labeled> label_by_days(bool pre_cancer, int days, bool train_role) {
    constexpr int kHorizon = 5 * 365;
    Labeled out;
    if (pre_cancer) {
        if (days < 183 && !train_role) return std::nullopt;
        std::array<bool, kHorizon + 1> diagnosed{};
        for (int t = 1; t <= kHorizon; ++t) diagnosed[t] = t >= days;
        for (int j = 1; j <= 5; ++j) {
            bool any = false;
            for (int t = 365 * (j - 1) + 1; t <= 365 * j; ++t) any = any || diagnosed[t];
            out.y[j - 1] = any;
            out.w[j - 1] = 1;
        }
        return out;
    }
    if (days < 365) return std::nullopt;
    for (int j = 1; j <= 5; ++j) {
        bool all = true;
        for (int t = 365 * (j - 1) + 1; t <= 365 * j; ++t) all = all && t <= days;
        out.w[j - 1] = all;
    }
    return out;
}

/// Pairwise AUROC: wins + ties/2 over all positive/negative pairs.
inline double pairwise_auroc(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
    double num = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!y[i]) continue;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[j]) continue;
            pairs += 1.0;
            if (s[i] > s[j]) num += 1.0;
            else if (s[i] == s[j]) num += 0.5;
        }
    }
    return num / pairs;
}

/// Every distinct score tried as a threshold; returns (threshold, J) with the
/// smallest threshold among the maximal J.
inline std::pair<double, double> exhaustive_youden(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
    std::vector<double> cand = s;
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    double best_j = -2.0, best_t = 0.0;
    for (double t : cand) {
        double tp = 0, fn = 0, tn = 0, fp = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const bool called = s[i] >= t;
            if (y[i]) (called ? tp : fn) += 1;
            else (called ? fp : tn) += 1;
        }
        const double j = tp / (tp + fn) + tn / (tn + fp) - 1.0;
        if (j > best_j + 1e-12) {
            best_j = j;
            best_t = t;
        }
    }
    return {best_t, best_j};
}

/// Mask-weighted BCE written directly from the formula, in long double.
/// features: n x dim row-major; weights: 5 x dim row-major.
inline long double naive_loss(const std::vector<double>& weights, const std::array<double, 5>& bias,
                              const std::vector<double>& features, std::size_t dim, const std::vector<Bits>& y,
                              const std::vector<Bits>& w) {
    const std::size_t n = y.size();
    long double total = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        long double cum = 0.0L, num = 0.0L, den = 0.0L;
        for (std::size_t k = 0; k < 5; ++k) {
            long double z = bias[k];
            for (std::size_t d = 0; d < dim; ++d) z += static_cast<long double>(weights[k * dim + d]) * features[i * dim + d];
            cum += std::log1p(std::exp(z));
            const long double p = 1.0L - std::exp(-cum);
            if (!w[i][k]) continue;
            den += 1.0L;
            num += y[i][k] ? std::log(p) : std::log(1.0L - p);
        }
        total += -num / den;
    }
    return total / static_cast<long double>(n);
}

}  // namespace oracle
