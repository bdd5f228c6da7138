#include "dbtrisk/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include "dbtrisk/errors.hpp"

namespace dbtrisk {

std::string_view to_string(Stat s) {
    switch (s) {
    case Stat::mean: return "mean";
    case Stat::sd: return "sd";
    case Stat::min: return "min";
    case Stat::max: return "max";
    }
    return "?";
}

StatSet::StatSet(std::initializer_list<Stat> stats) {
    for (auto s : stats) mask_ |= bit(s);
}

StatSet StatSet::from_mask(std::uint8_t mask) {
    if (mask == 0 || (mask & ~0x0Fu) != 0)
        throw ContractViolation("invalid statistic mask " + std::to_string(mask));
    StatSet s;
    s.mask_ = mask;
    return s;
}

StatSet StatSet::parse(std::string_view list) {
    StatSet out;
    std::size_t pos = 0;
    while (pos <= list.size()) {
        const auto comma = list.find(',', pos);
        const auto name = list.substr(pos, comma == std::string_view::npos ? list.npos : comma - pos);
        bool known = false;
        for (auto s : kStatOrder) {
            if (name == dbtrisk::to_string(s)) {
                out.mask_ |= bit(s);
                known = true;
            }
        }
        if (!known) throw ContractViolation("unknown statistic '" + std::string(name) + "'");
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::size_t StatSet::size() const noexcept { return static_cast<std::size_t>(std::popcount(mask_)); }

std::vector<Stat> StatSet::ordered() const {
    std::vector<Stat> out;
    for (auto s : kStatOrder)
        if (contains(s)) out.push_back(s);
    return out;
}

std::string StatSet::to_string() const {
    std::string out;
    for (auto s : ordered()) {
        if (!out.empty()) out += ',';
        out += dbtrisk::to_string(s);
    }
    return out;
}

namespace {

// Column-wise statistic over `rows` rows of width `dim`; row(i) yields a pointer.
template <typename T, typename RowFn>
void column_stat(Stat stat, std::size_t rows, std::size_t dim, RowFn row, double* out) {
    switch (stat) {
    case Stat::mean:
    case Stat::sd: {
        std::fill(out, out + dim, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
            const T* v = row(r);
            for (std::size_t k = 0; k < dim; ++k) out[k] += static_cast<double>(v[k]);
        }
        const double inv = 1.0 / static_cast<double>(rows);
        for (std::size_t k = 0; k < dim; ++k) out[k] *= inv;
        if (stat == Stat::mean) return;
        std::vector<double> ss(dim, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
            const T* v = row(r);
            for (std::size_t k = 0; k < dim; ++k) {
                const double d = static_cast<double>(v[k]) - out[k];
                ss[k] += d * d;
            }
        }
        for (std::size_t k = 0; k < dim; ++k) out[k] = std::sqrt(ss[k] * inv);
        return;
    }
    case Stat::min:
    case Stat::max: {
        const bool is_min = stat == Stat::min;
        std::fill(out, out + dim,
                  is_min ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity());
        for (std::size_t r = 0; r < rows; ++r) {
            const T* v = row(r);
            for (std::size_t k = 0; k < dim; ++k) {
                const double x = static_cast<double>(v[k]);
                out[k] = is_min ? std::min(out[k], x) : std::max(out[k], x);
            }
        }
        return;
    }
    }
}

void check_series(const EmbeddingSeries& s) {
    if (s.frames == 0) throw ContractViolation("embedding series has zero frames");
    if (s.tokens_per_frame == 0 || s.dim == 0) throw ContractViolation("embedding series has an empty axis");
    if (s.token_kind == TokenKind::cls && s.tokens_per_frame != 1)
        throw ContractViolation("cls series must have exactly one token per frame");
    const std::size_t expected = std::size_t{s.frames} * s.tokens_per_frame * s.dim;
    if (s.data.size() != expected)
        throw ContractViolation("embedding series holds " + std::to_string(s.data.size()) +
                                " values, expected " + std::to_string(expected));
    for (float v : s.data)
        if (!std::isfinite(v)) throw ContractViolation("embedding series contains a non-finite value");
}

}  // namespace

std::vector<double> reduce_series(const EmbeddingSeries& series, StatSet stats) {
    if (stats.empty()) throw ContractViolation("reduce_series: empty statistic set");
    check_series(series);

    const std::size_t F = series.frames, T = series.tokens_per_frame, D = series.dim;
    std::vector<double> out(stats.size() * D);
    double* block = out.data();

    if (series.token_kind == TokenKind::cls) {
        const float* base = series.data.data();
        for (auto s : stats.ordered()) {
            column_stat<float>(s, F, D, [&](std::size_t f) { return base + f * D; }, block);
            block += D;
        }
        return out;
    }

    std::vector<double> per_frame(F * D);
    for (auto s : stats.ordered()) {
        for (std::size_t f = 0; f < F; ++f) {
            const float* frame = series.data.data() + f * T * D;
            column_stat<float>(s, T, D, [&](std::size_t t) { return frame + t * D; }, per_frame.data() + f * D);
        }
        column_stat<double>(s, F, D, [&](std::size_t f) { return per_frame.data() + f * D; }, block);
        block += D;
    }
    return out;
}

namespace {

StudyFeatureVector aggregate_ordered(const std::array<const EmbeddingSeries*, 4>& views, StatSet stats) {
    const TokenKind kind = views[0]->token_kind;
    const std::uint32_t dim = views[0]->dim;
    for (std::size_t i = 1; i < 4; ++i) {
        if (views[i]->token_kind != kind)
            throw ContractViolation("aggregate_study: token kind of " + std::string(to_string(kViewOrder[i])) +
                                    " differs from RCC");
        if (views[i]->dim != dim)
            throw ContractViolation("aggregate_study: feature dim of " + std::string(to_string(kViewOrder[i])) +
                                    " differs from RCC");
    }
    StudyFeatureVector out;
    out.config = {kind, stats};
    out.values.reserve(feature_length(stats.size(), dim));
    for (const auto* v : views) {
        const auto r = reduce_series(*v, stats);
        out.values.insert(out.values.end(), r.begin(), r.end());
    }
    return out;
}

}  // namespace

StudyFeatureVector aggregate_study(std::span<const EmbeddingSeries, 4> views, StatSet stats) {
    return aggregate_ordered({&views[0], &views[1], &views[2], &views[3]}, stats);
}

StudyFeatureVector aggregate_study(const std::map<View, EmbeddingSeries>& views, StatSet stats) {
    for (auto v : kViewOrder)
        if (!views.contains(v))
            throw ContractViolation("aggregate_study: missing view " + std::string(to_string(v)));
    return aggregate_ordered({&views.at(View::RCC), &views.at(View::LCC), &views.at(View::RMLO),
                              &views.at(View::LMLO)},
                             stats);
}

}  // namespace dbtrisk
