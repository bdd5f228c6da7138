#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace dbtrisk {

/// Number of yearly horizons modeled.
inline constexpr std::size_t kYears = 5;
inline constexpr int kDaysPerYear = 365;
inline constexpr int kHorizonDays = kYears * kDaysPerYear;

enum class View : std::uint8_t { RCC = 0, LCC = 1, RMLO = 2, LMLO = 3 };
inline constexpr std::array<View, 4> kViewOrder{View::RCC, View::LCC, View::RMLO, View::LMLO};

enum class CohortKind : std::uint8_t { pre_cancer, healthy };
enum class Density : std::uint8_t { a, b, c, d, unknown };
enum class Split : std::uint8_t { train, val, test };
enum class TokenKind : std::uint8_t { patch = 0, cls = 1 };

std::string_view to_string(View v);
std::string_view to_string(CohortKind k);
std::string_view to_string(Density d);
std::string_view to_string(Split s);
std::string_view to_string(TokenKind t);

std::optional<CohortKind> parse_cohort_kind(std::string_view s);
std::optional<Density> parse_density(std::string_view s);
std::optional<Split> parse_split(std::string_view s);
std::optional<TokenKind> parse_token_kind(std::string_view s);

}  // namespace dbtrisk
