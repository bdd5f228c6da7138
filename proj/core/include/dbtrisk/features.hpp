#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "dbtrisk/common.hpp"

namespace dbtrisk {

/// Token tensor for one view: frames x tokens_per_frame x dim, frame-major.
struct EmbeddingSeries {
    TokenKind token_kind = TokenKind::patch;
    std::uint32_t frames = 0;
    std::uint32_t tokens_per_frame = 0;
    std::uint32_t dim = 0;
    std::vector<float> data;

    std::span<const float> token(std::size_t frame, std::size_t tok) const {
        return std::span<const float>(data).subspan((frame * tokens_per_frame + tok) * dim, dim);
    }
};

enum class Stat : std::uint8_t { mean = 0, sd = 1, min = 2, max = 3 };
inline constexpr std::array<Stat, 4> kStatOrder{Stat::mean, Stat::sd, Stat::min, Stat::max};

/// Non-empty subset of {mean, sd, min, max}; iteration always follows kStatOrder.
class StatSet {
public:
    StatSet() = default;
    StatSet(std::initializer_list<Stat> stats);

    static StatSet from_mask(std::uint8_t mask);
    /// Comma-separated names, e.g. "mean,sd". Throws ContractViolation on unknown names.
    static StatSet parse(std::string_view list);
    static StatSet all() { return {Stat::mean, Stat::sd, Stat::min, Stat::max}; }

    std::uint8_t mask() const noexcept { return mask_; }
    bool contains(Stat s) const noexcept { return mask_ & bit(s); }
    std::size_t size() const noexcept;
    bool empty() const noexcept { return mask_ == 0; }
    std::vector<Stat> ordered() const;
    std::string to_string() const;

    friend bool operator==(StatSet, StatSet) = default;

private:
    static constexpr std::uint8_t bit(Stat s) { return std::uint8_t(1u << static_cast<unsigned>(s)); }
    std::uint8_t mask_ = 0;
};

std::string_view to_string(Stat s);

struct FeatureConfig {
    TokenKind token_kind = TokenKind::patch;
    StatSet stats;
    friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

struct StudyFeatureVector {
    std::vector<double> values;
    FeatureConfig config;
};

/// Two-level summary of one series.
///
/// Patch tokens: each statistic is taken across the patches of every frame and then
/// the same statistic across frames (mean of means, sd of sds, ...). CLS tokens:
/// each statistic is taken across frames only. SD is the population SD.
/// Output blocks follow kStatOrder, each of length dim.
std::vector<double> reduce_series(const EmbeddingSeries& series, StatSet stats);

/// Concatenates reduce_series over RCC, LCC, RMLO, LMLO.
StudyFeatureVector aggregate_study(const std::map<View, EmbeddingSeries>& views, StatSet stats);
StudyFeatureVector aggregate_study(std::span<const EmbeddingSeries, 4> views, StatSet stats);

/// 4 * |stats| * dim.
constexpr std::size_t feature_length(std::size_t n_stats, std::size_t dim) { return 4 * n_stats * dim; }

}  // namespace dbtrisk
