#include "dbtrisk/common.hpp"

namespace dbtrisk {

std::string_view to_string(View v) {
    switch (v) {
    case View::RCC: return "RCC";
    case View::LCC: return "LCC";
    case View::RMLO: return "RMLO";
    case View::LMLO: return "LMLO";
    }
    return "?";
}

std::string_view to_string(CohortKind k) {
    return k == CohortKind::pre_cancer ? "pre_cancer" : "healthy";
}

std::string_view to_string(Density d) {
    switch (d) {
    case Density::a: return "a";
    case Density::b: return "b";
    case Density::c: return "c";
    case Density::d: return "d";
    case Density::unknown: return "unknown";
    }
    return "?";
}

std::string_view to_string(Split s) {
    switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    }
    return "?";
}

std::string_view to_string(TokenKind t) {
    return t == TokenKind::patch ? "patch" : "cls";
}

std::optional<CohortKind> parse_cohort_kind(std::string_view s) {
    if (s == "pre_cancer") return CohortKind::pre_cancer;
    if (s == "healthy") return CohortKind::healthy;
    return std::nullopt;
}

std::optional<Density> parse_density(std::string_view s) {
    if (s == "a") return Density::a;
    if (s == "b") return Density::b;
    if (s == "c") return Density::c;
    if (s == "d") return Density::d;
    if (s == "unknown") return Density::unknown;
    return std::nullopt;
}

std::optional<Split> parse_split(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    return std::nullopt;
}

std::optional<TokenKind> parse_token_kind(std::string_view s) {
    if (s == "patch") return TokenKind::patch;
    if (s == "cls") return TokenKind::cls;
    return std::nullopt;
}

}  // namespace dbtrisk
