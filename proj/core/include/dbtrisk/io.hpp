#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dbtrisk/cohort.hpp"
#include "dbtrisk/features.hpp"
#include "dbtrisk/hazard.hpp"
#include "dbtrisk/metrics.hpp"

namespace dbtrisk::io {

namespace fs = std::filesystem;
using Bytes = std::vector<std::byte>;

// Embedding tensors ("DBTE")
//
//   magic "DBTE" | u16 version=1 | u8 token_kind (0 patch, 1 cls)
//   | u32 frames | u32 tokens_per_frame | u32 dim | f32[frames*tokens*dim]
//
// All little-endian; the payload length must match the header exactly.

inline constexpr std::uint16_t kEmbeddingVersion = 1;
inline constexpr std::size_t kEmbeddingHeaderSize = 19;

struct EmbeddingHeader {
    TokenKind token_kind = TokenKind::patch;
    std::uint32_t frames = 0;
    std::uint32_t tokens_per_frame = 0;
    std::uint32_t dim = 0;
};

/// Validates magic, version and field ranges; returns the payload byte count.
/// Throws BadMagic, VersionMismatch, InvalidHeader, SizeOverflow or TruncatedPayload.
std::uint64_t parse_embedding_header(std::span<const std::byte> bytes, EmbeddingHeader& header);

Bytes encode_embedding(const EmbeddingSeries& series);
EmbeddingSeries decode_embedding(std::span<const std::byte> bytes);
void write_embedding(const fs::path& path, const EmbeddingSeries& series);
/// Checks the declared size against the file length before allocating the payload.
EmbeddingSeries read_embedding(const fs::path& path);

// Aggregated features ("DBTF")
//
//   magic "DBTF" | u16 version=1 | u32 id_len | id bytes | u8 token_kind
//   | u8 stat mask (bit0 mean, bit1 sd, bit2 min, bit3 max) | u32 length | f64[length]
//
// length must be a multiple of 4 * |stats|.

inline constexpr std::uint16_t kFeatureVersion = 1;

struct FeatureFile {
    std::string study_id;
    StudyFeatureVector features;
};

Bytes encode_features(const FeatureFile& file);
FeatureFile decode_features(std::span<const std::byte> bytes);
void write_features(const fs::path& path, const FeatureFile& file);
FeatureFile read_features(const fs::path& path);

// Hazard head checkpoint ("HZH1")
//
//   magic "HZH1" | u32 input_dim | f64[5*input_dim] weights (row-major) | f64[5] bias

Bytes encode_checkpoint(const HazardHead& head);
HazardHead decode_checkpoint(std::span<const std::byte> bytes);
void write_checkpoint(const fs::path& path, const HazardHead& head);
HazardHead read_checkpoint(const fs::path& path);

// Manifest CSV

/// patient_id, study_id, study_date, cohort_kind, days_to_diagnosis, followup_days,
/// density, rcc_path, lcc_path, rmlo_path, lmlo_path
const std::vector<std::string>& manifest_columns();

/// Throws TableError (with 1-based line numbers) on schema, enum, integer, date or
/// duplicate-id problems.
std::vector<StudyRecord> parse_manifest(std::string_view text);
std::vector<StudyRecord> read_manifest(const fs::path& path);
std::string format_manifest(std::span<const StudyRecord> records);
void write_manifest(const fs::path& path, std::span<const StudyRecord> records);

// Prediction table CSV: study_id, p1..p5, y1..y5, w1..w5, density, split

const std::vector<std::string>& prediction_columns();
std::string format_predictions(std::span<const PredictionRow> rows);
PredictionTable parse_predictions(std::string_view text);
void write_predictions(const fs::path& path, std::span<const PredictionRow> rows);
PredictionTable read_predictions(const fs::path& path);

/// Fills patient_id and cohort_kind from the manifest by study_id.
void join_manifest(PredictionTable& table, std::span<const StudyRecord> manifest);

// Evaluation reports

std::string format_yearly_auroc_csv(const YearlyAuroc& auroc);
std::string format_subgroup_csv(const std::map<Density, SubgroupResult>& subgroups);
std::string format_km_csv(const std::map<RiskGroup, KmCurve>& curves);

// Plain file helpers

Bytes read_bytes(const fs::path& path);
std::string read_text(const fs::path& path);
void write_bytes(const fs::path& path, std::span<const std::byte> bytes);
void write_text(const fs::path& path, std::string_view text);

/// 64-bit FNV-1a over a file's bytes, as 16 hex digits.
std::string file_digest(const fs::path& path);

}  // namespace dbtrisk::io
