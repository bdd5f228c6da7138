#include "dbtrisk/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "dbtrisk/csv.hpp"
#include "dbtrisk/errors.hpp"

namespace dbtrisk::io {

namespace {

class Writer {
public:
    void raw(std::string_view s) {
        for (char c : s) out_.push_back(static_cast<std::byte>(c));
    }
    void u8(std::uint8_t v) { out_.push_back(std::byte{v}); }
    void u16(std::uint16_t v) { le(v, 2); }
    void u32(std::uint32_t v) { le(v, 4); }
    void f32(float v) { le(std::bit_cast<std::uint32_t>(v), 4); }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
    void reserve(std::size_t n) { out_.reserve(n); }
    Bytes take() { return std::move(out_); }

private:
    void le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFF));
    }
    Bytes out_;
};

class Reader {
public:
    Reader(std::span<const std::byte> bytes, const char* what) : bytes_(bytes), what_(what) {}

    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

    void need(std::uint64_t n) const {
        if (n > remaining())
            throw TruncatedPayload(std::string(what_) + ": need " + std::to_string(n) + " more bytes, " +
                                   std::to_string(remaining()) + " available");
    }
    std::string raw(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
    float f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(le(4))); }
    double f64() { return std::bit_cast<double>(le(8)); }

    void expect_end() const {
        if (remaining() != 0)
            throw InvalidHeader(std::string(what_) + ": " + std::to_string(remaining()) + " trailing bytes");
    }

private:
    std::uint64_t le(int n) {
        need(static_cast<std::uint64_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    std::span<const std::byte> bytes_;
    std::size_t pos_ = 0;
    const char* what_;
};

void expect_magic(Reader& r, std::string_view magic, const char* what) {
    if (r.remaining() < magic.size())
        throw TruncatedPayload(std::string(what) + ": file shorter than its magic");
    const auto got = r.raw(magic.size());
    if (got != magic) throw BadMagic(std::string(what) + ": expected magic \"" + std::string(magic) + "\"");
}

/// a * b with overflow detection.
std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b, const char* what) {
    if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a)
        throw SizeOverflow(std::string(what) + ": declared size overflows");
    return a * b;
}

template <typename Fn>
auto with_path(const fs::path& path, Fn&& fn) {
    try {
        return fn();
    } catch (const FormatError& e) {
        // Rethrow the same dynamic type with the path prefixed.
        const std::string msg = path.string() + ": " + e.what();
        if (dynamic_cast<const BadMagic*>(&e)) throw BadMagic(msg);
        if (dynamic_cast<const VersionMismatch*>(&e)) throw VersionMismatch(msg);
        if (dynamic_cast<const TruncatedPayload*>(&e)) throw TruncatedPayload(msg);
        if (dynamic_cast<const SizeOverflow*>(&e)) throw SizeOverflow(msg);
        if (dynamic_cast<const InvalidHeader*>(&e)) throw InvalidHeader(msg);
        if (auto* t = dynamic_cast<const TableError*>(&e)) throw TableError(t->line(), path.string() + ": " + e.what());
        throw FormatError(msg);
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Plain files

Bytes read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    in.seekg(0, std::ios::end);
    const auto size = in.tellg();
    if (size < 0) throw IoError("cannot size " + path.string());
    in.seekg(0);
    Bytes out(static_cast<std::size_t>(size));
    if (!out.empty() && !in.read(reinterpret_cast<char*>(out.data()), size))
        throw IoError("short read on " + path.string());
    return out;
}

std::string read_text(const fs::path& path) {
    const auto b = read_bytes(path);
    return std::string(reinterpret_cast<const char*>(b.data()), b.size());
}

void write_bytes(const fs::path& path, std::span<const std::byte> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write on " + path.string());
}

void write_text(const fs::path& path, std::string_view text) {
    write_bytes(path, std::as_bytes(std::span<const char>(text.data(), text.size())));
}

std::string file_digest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    std::array<char, 1 << 16> buf;
    while (in) {
        in.read(buf.data(), buf.size());
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[static_cast<std::size_t>(i)]);
            h *= 0x100000001b3ULL;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

// ---------------------------------------------------------------------------
// DBTE

std::uint64_t parse_embedding_header(std::span<const std::byte> bytes, EmbeddingHeader& header) {
    Reader r(bytes, "embedding");
    expect_magic(r, "DBTE", "embedding");
    r.need(kEmbeddingHeaderSize - 4);
    const auto version = r.u16();
    if (version != kEmbeddingVersion)
        throw VersionMismatch("embedding: version " + std::to_string(version) + ", expected " +
                              std::to_string(kEmbeddingVersion));
    const auto kind = r.u8();
    header.frames = r.u32();
    header.tokens_per_frame = r.u32();
    header.dim = r.u32();
    if (kind > 1) throw InvalidHeader("embedding: token kind " + std::to_string(kind));
    header.token_kind = static_cast<TokenKind>(kind);
    if (header.frames == 0 || header.tokens_per_frame == 0 || header.dim == 0)
        throw InvalidHeader("embedding: zero-sized axis");
    if (header.token_kind == TokenKind::cls && header.tokens_per_frame != 1)
        throw InvalidHeader("embedding: cls series with " + std::to_string(header.tokens_per_frame) +
                            " tokens per frame");
    const auto count = checked_mul(checked_mul(header.frames, header.tokens_per_frame, "embedding"), header.dim,
                                   "embedding");
    const auto payload = checked_mul(count, sizeof(float), "embedding");
    if (payload > static_cast<std::uint64_t>(std::numeric_limits<std::ptrdiff_t>::max()) - kEmbeddingHeaderSize)
        throw SizeOverflow("embedding: declared payload too large");
    return payload;
}

Bytes encode_embedding(const EmbeddingSeries& s) {
    if (s.data.size() != std::size_t{s.frames} * s.tokens_per_frame * s.dim)
        throw ContractViolation("encode_embedding: data size does not match the declared shape");
    Writer w;
    w.reserve(kEmbeddingHeaderSize + s.data.size() * 4);
    w.raw("DBTE");
    w.u16(kEmbeddingVersion);
    w.u8(static_cast<std::uint8_t>(s.token_kind));
    w.u32(s.frames);
    w.u32(s.tokens_per_frame);
    w.u32(s.dim);
    for (float v : s.data) w.f32(v);
    return w.take();
}

EmbeddingSeries decode_embedding(std::span<const std::byte> bytes) {
    EmbeddingHeader h;
    const auto payload = parse_embedding_header(bytes, h);
    const std::uint64_t available = bytes.size() - kEmbeddingHeaderSize;
    if (available < payload)
        throw TruncatedPayload("embedding: header declares " + std::to_string(payload) + " payload bytes, " +
                               std::to_string(available) + " present");
    if (available > payload)
        throw InvalidHeader("embedding: " + std::to_string(available - payload) + " trailing bytes");

    EmbeddingSeries s;
    s.token_kind = h.token_kind;
    s.frames = h.frames;
    s.tokens_per_frame = h.tokens_per_frame;
    s.dim = h.dim;
    s.data.resize(static_cast<std::size_t>(payload / 4));
    Reader r(bytes.subspan(kEmbeddingHeaderSize), "embedding");
    for (auto& v : s.data) v = r.f32();
    return s;
}

void write_embedding(const fs::path& path, const EmbeddingSeries& series) {
    write_bytes(path, encode_embedding(series));
}

EmbeddingSeries read_embedding(const fs::path& path) {
    return with_path(path, [&] {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open " + path.string());
        std::error_code ec;
        const auto file_size = fs::file_size(path, ec);
        if (ec) throw IoError("cannot size " + path.string());

        std::array<std::byte, kEmbeddingHeaderSize> head{};
        const auto head_len = static_cast<std::size_t>(std::min<std::uintmax_t>(file_size, head.size()));
        in.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head_len));
        EmbeddingHeader h;
        const auto payload = parse_embedding_header(std::span<const std::byte>(head.data(), head_len), h);
        const std::uint64_t available = file_size - kEmbeddingHeaderSize;
        if (available < payload)
            throw TruncatedPayload("embedding: header declares " + std::to_string(payload) + " payload bytes, " +
                                   std::to_string(available) + " present");
        if (available > payload)
            throw InvalidHeader("embedding: " + std::to_string(available - payload) + " trailing bytes");

        Bytes body(static_cast<std::size_t>(payload));
        if (!in.read(reinterpret_cast<char*>(body.data()), static_cast<std::streamsize>(payload)))
            throw IoError("short read on " + path.string());
        EmbeddingSeries s;
        s.token_kind = h.token_kind;
        s.frames = h.frames;
        s.tokens_per_frame = h.tokens_per_frame;
        s.dim = h.dim;
        s.data.resize(static_cast<std::size_t>(payload / 4));
        Reader r(body, "embedding");
        for (auto& v : s.data) v = r.f32();
        return s;
    });
}

// ---------------------------------------------------------------------------
// DBTF

Bytes encode_features(const FeatureFile& f) {
    const auto& v = f.features.values;
    const std::size_t block = 4 * f.features.config.stats.size();
    if (block == 0 || v.empty() || v.size() % block != 0)
        throw ContractViolation("encode_features: length " + std::to_string(v.size()) +
                                " is not a positive multiple of 4 * |stats|");
    if (f.study_id.size() > std::numeric_limits<std::uint32_t>::max() ||
        v.size() > std::numeric_limits<std::uint32_t>::max())
        throw ContractViolation("encode_features: field too large");
    Writer w;
    w.reserve(19 + f.study_id.size() + v.size() * 8);
    w.raw("DBTF");
    w.u16(kFeatureVersion);
    w.u32(static_cast<std::uint32_t>(f.study_id.size()));
    w.raw(f.study_id);
    w.u8(static_cast<std::uint8_t>(f.features.config.token_kind));
    w.u8(f.features.config.stats.mask());
    w.u32(static_cast<std::uint32_t>(v.size()));
    for (double x : v) w.f64(x);
    return w.take();
}

FeatureFile decode_features(std::span<const std::byte> bytes) {
    Reader r(bytes, "features");
    expect_magic(r, "DBTF", "features");
    const auto version = r.u16();
    if (version != kFeatureVersion)
        throw VersionMismatch("features: version " + std::to_string(version) + ", expected " +
                              std::to_string(kFeatureVersion));
    FeatureFile f;
    const auto id_len = r.u32();
    f.study_id = r.raw(id_len);
    const auto kind = r.u8();
    if (kind > 1) throw InvalidHeader("features: token kind " + std::to_string(kind));
    const auto mask = r.u8();
    if (mask == 0 || mask > 0x0F) throw InvalidHeader("features: statistic mask " + std::to_string(mask));
    f.features.config = {static_cast<TokenKind>(kind), StatSet::from_mask(mask)};
    const auto len = r.u32();
    const std::size_t block = 4 * f.features.config.stats.size();
    if (len == 0 || len % block != 0)
        throw InvalidHeader("features: length " + std::to_string(len) + " is not a positive multiple of " +
                            std::to_string(block));
    r.need(checked_mul(len, 8, "features"));
    f.features.values.resize(len);
    for (auto& x : f.features.values) x = r.f64();
    r.expect_end();
    return f;
}

void write_features(const fs::path& path, const FeatureFile& file) { write_bytes(path, encode_features(file)); }

FeatureFile read_features(const fs::path& path) {
    return with_path(path, [&] { return decode_features(read_bytes(path)); });
}

// ---------------------------------------------------------------------------
// HZH1

Bytes encode_checkpoint(const HazardHead& head) {
    if (head.input_dim() > std::numeric_limits<std::uint32_t>::max())
        throw ContractViolation("encode_checkpoint: input dim too large");
    Writer w;
    w.reserve(8 + (head.weights().size() + kYears) * 8);
    w.raw("HZH1");
    w.u32(static_cast<std::uint32_t>(head.input_dim()));
    for (double v : head.weights()) w.f64(v);
    for (double v : head.bias()) w.f64(v);
    return w.take();
}

HazardHead decode_checkpoint(std::span<const std::byte> bytes) {
    Reader r(bytes, "checkpoint");
    expect_magic(r, "HZH1", "checkpoint");
    const auto dim = r.u32();
    if (dim == 0) throw InvalidHeader("checkpoint: zero input dim");
    const auto n_weights = checked_mul(dim, kYears, "checkpoint");
    r.need(checked_mul(n_weights + kYears, 8, "checkpoint"));
    std::vector<double> w(static_cast<std::size_t>(n_weights));
    for (auto& v : w) v = r.f64();
    YearArray b{};
    for (auto& v : b) v = r.f64();
    r.expect_end();
    return HazardHead(dim, std::move(w), b);
}

void write_checkpoint(const fs::path& path, const HazardHead& head) { write_bytes(path, encode_checkpoint(head)); }

HazardHead read_checkpoint(const fs::path& path) {
    return with_path(path, [&] { return decode_checkpoint(read_bytes(path)); });
}

// ---------------------------------------------------------------------------
// CSV tables

namespace {

void check_header(const std::vector<std::string>& got, const std::vector<std::string>& expected) {
    if (got == expected) return;
    const std::set<std::string> want(expected.begin(), expected.end());
    std::set<std::string> seen;
    for (const auto& c : got) {
        if (!want.contains(c)) throw TableError(1, "unknown column '" + c + "'");
        if (!seen.insert(c).second) throw TableError(1, "duplicate column '" + c + "'");
    }
    for (const auto& c : expected)
        if (!seen.contains(c)) throw TableError(1, "missing column '" + c + "'");
    throw TableError(1, "columns out of order; expected " + csv::join(expected));
}

bool valid_iso_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    long long y = 0, m = 0, d = 0;
    if (!csv::parse_int(s.substr(0, 4), y) || !csv::parse_int(s.substr(5, 2), m) ||
        !csv::parse_int(s.substr(8, 2), d))
        return false;
    if (!std::all_of(s.begin(), s.end(), [](char c) { return c == '-' || (c >= '0' && c <= '9'); })) return false;
    const std::chrono::year_month_day ymd{std::chrono::year{static_cast<int>(y)},
                                          std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    return ymd.ok();
}

std::optional<int> day_field(std::string_view s, std::size_t line, const char* column) {
    if (s.empty()) return std::nullopt;
    long long v = 0;
    if (!csv::parse_int(s, v)) throw TableError(line, std::string(column) + " '" + std::string(s) + "' is not an integer");
    if (v < 0) throw TableError(line, std::string(column) + " is negative");
    if (v > std::numeric_limits<int>::max()) throw TableError(line, std::string(column) + " out of range");
    return static_cast<int>(v);
}

std::uint8_t binary_field(std::string_view s, std::size_t line, const std::string& column) {
    if (s == "0") return 0;
    if (s == "1") return 1;
    throw TableError(line, column + " must be 0 or 1, got '" + std::string(s) + "'");
}

}  // namespace

const std::vector<std::string>& manifest_columns() {
    static const std::vector<std::string> cols{"patient_id", "study_id", "study_date", "cohort_kind",
                                               "days_to_diagnosis", "followup_days", "density", "rcc_path",
                                               "lcc_path", "rmlo_path", "lmlo_path"};
    return cols;
}

std::vector<StudyRecord> parse_manifest(std::string_view text) {
    const auto rows = csv::lines(text);
    if (rows.empty()) throw TableError(1, "empty manifest (no header row)");
    std::vector<std::string> fields;
    if (!csv::split_line(rows[0], fields)) throw TableError(1, "unterminated quote");
    check_header(fields, manifest_columns());

    std::vector<StudyRecord> out;
    std::unordered_set<std::string> ids;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const std::size_t line = i + 1;
        if (!csv::split_line(rows[i], fields)) throw TableError(line, "unterminated quote");
        if (fields.size() != manifest_columns().size())
            throw TableError(line, "expected " + std::to_string(manifest_columns().size()) + " fields, got " +
                                       std::to_string(fields.size()));
        StudyRecord r;
        r.patient_id = fields[0];
        r.study_id = fields[1];
        if (r.patient_id.empty()) throw TableError(line, "empty patient_id");
        if (r.study_id.empty()) throw TableError(line, "empty study_id");
        if (!valid_iso_date(fields[2])) throw TableError(line, "study_date '" + fields[2] + "' is not YYYY-MM-DD");
        r.study_date = fields[2];
        const auto kind = parse_cohort_kind(fields[3]);
        if (!kind)
            throw TableError(line, "cohort_kind '" + fields[3] + "' is not one of pre_cancer|healthy");
        r.cohort_kind = *kind;
        r.days_to_diagnosis = day_field(fields[4], line, "days_to_diagnosis");
        r.followup_days = day_field(fields[5], line, "followup_days");
        if (r.cohort_kind == CohortKind::pre_cancer) {
            if (!r.days_to_diagnosis) throw TableError(line, "pre_cancer study without days_to_diagnosis");
            if (r.followup_days) throw TableError(line, "pre_cancer study must leave followup_days empty");
        } else {
            if (!r.followup_days) throw TableError(line, "healthy study without followup_days");
            if (r.days_to_diagnosis) throw TableError(line, "healthy study must leave days_to_diagnosis empty");
        }
        const auto density = parse_density(fields[6]);
        if (!density) throw TableError(line, "density '" + fields[6] + "' is not one of a|b|c|d|unknown");
        r.density = *density;
        for (std::size_t v = 0; v < 4; ++v) {
            if (fields[7 + v].empty()) throw TableError(line, "empty " + manifest_columns()[7 + v]);
            r.view_paths[v] = fields[7 + v];
        }
        if (!ids.insert(r.study_id).second) throw TableError(line, "duplicate study_id '" + r.study_id + "'");
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<StudyRecord> read_manifest(const fs::path& path) {
    if (!fs::exists(path)) throw IoError("manifest not found: " + path.string());
    return with_path(path, [&] { return parse_manifest(read_text(path)); });
}

std::string format_manifest(std::span<const StudyRecord> records) {
    std::string out = csv::join(manifest_columns()) + "\n";
    for (const auto& r : records) {
        out += csv::join({r.patient_id, r.study_id, r.study_date, std::string(to_string(r.cohort_kind)),
                          r.days_to_diagnosis ? std::to_string(*r.days_to_diagnosis) : "",
                          r.followup_days ? std::to_string(*r.followup_days) : "", std::string(to_string(r.density)),
                          r.view_paths[0], r.view_paths[1], r.view_paths[2], r.view_paths[3]});
        out += '\n';
    }
    return out;
}

void write_manifest(const fs::path& path, std::span<const StudyRecord> records) {
    write_text(path, format_manifest(records));
}

const std::vector<std::string>& prediction_columns() {
    static const std::vector<std::string> cols = [] {
        std::vector<std::string> c{"study_id"};
        for (const char* prefix : {"p", "y", "w"})
            for (std::size_t k = 1; k <= kYears; ++k) c.push_back(prefix + std::to_string(k));
        c.push_back("density");
        c.push_back("split");
        return c;
    }();
    return cols;
}

std::string format_predictions(std::span<const PredictionRow> rows) {
    std::string out = csv::join(prediction_columns()) + "\n";
    std::vector<std::string> f;
    for (const auto& r : rows) {
        f.clear();
        f.push_back(r.study_id);
        for (double p : r.p) f.push_back(csv::format_double(p));
        for (auto y : r.y) f.push_back(y ? "1" : "0");
        for (auto w : r.w) f.push_back(w ? "1" : "0");
        f.emplace_back(to_string(r.density));
        f.emplace_back(to_string(r.split));
        out += csv::join(f);
        out += '\n';
    }
    return out;
}

PredictionTable parse_predictions(std::string_view text) {
    const auto rows = csv::lines(text);
    if (rows.empty()) throw TableError(1, "empty prediction table (no header row)");
    std::vector<std::string> fields;
    if (!csv::split_line(rows[0], fields)) throw TableError(1, "unterminated quote");
    check_header(fields, prediction_columns());
    const auto& cols = prediction_columns();

    PredictionTable out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const std::size_t line = i + 1;
        if (!csv::split_line(rows[i], fields)) throw TableError(line, "unterminated quote");
        if (fields.size() != cols.size())
            throw TableError(line, "expected " + std::to_string(cols.size()) + " fields, got " +
                                       std::to_string(fields.size()));
        PredictionRow r;
        r.study_id = fields[0];
        for (std::size_t k = 0; k < kYears; ++k) {
            double p = 0.0;
            if (!csv::parse_double(fields[1 + k], p) || !(p >= 0.0 && p <= 1.0))
                throw TableError(line, cols[1 + k] + " '" + fields[1 + k] + "' is not a probability");
            r.p[k] = p;
            r.y[k] = binary_field(fields[1 + kYears + k], line, cols[1 + kYears + k]);
            r.w[k] = binary_field(fields[1 + 2 * kYears + k], line, cols[1 + 2 * kYears + k]);
        }
        const auto density = parse_density(fields[16]);
        if (!density) throw TableError(line, "density '" + fields[16] + "' is not one of a|b|c|d|unknown");
        r.density = *density;
        const auto split = parse_split(fields[17]);
        if (!split) throw TableError(line, "split '" + fields[17] + "' is not one of train|val|test");
        r.split = *split;
        out.push_back(std::move(r));
    }
    return out;
}

void write_predictions(const fs::path& path, std::span<const PredictionRow> rows) {
    write_text(path, format_predictions(rows));
}

PredictionTable read_predictions(const fs::path& path) {
    if (!fs::exists(path)) throw IoError("prediction table not found: " + path.string());
    return with_path(path, [&] { return parse_predictions(read_text(path)); });
}

void join_manifest(PredictionTable& table, std::span<const StudyRecord> manifest) {
    std::unordered_map<std::string_view, const StudyRecord*> by_id;
    for (const auto& r : manifest) by_id.emplace(r.study_id, &r);
    for (auto& row : table) {
        const auto it = by_id.find(row.study_id);
        if (it == by_id.end()) continue;
        row.patient_id = it->second->patient_id;
        row.cohort_kind = it->second->cohort_kind;
    }
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::string auroc_cell(const YearAuroc& a) { return a.value ? csv::format_double(*a.value) : "undefined"; }

std::string count_cell(const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : "NA"; }

}  // namespace

std::string format_yearly_auroc_csv(const YearlyAuroc& auroc) {
    std::string out = "year,auroc,positives,negatives\n";
    for (std::size_t k = 0; k < kYears; ++k) {
        out += std::to_string(k + 1) + "," + auroc_cell(auroc[k]) + "," + std::to_string(auroc[k].positives) + "," +
               std::to_string(auroc[k].negatives) + "\n";
    }
    return out;
}

std::string format_subgroup_csv(const std::map<Density, SubgroupResult>& subgroups) {
    constexpr std::array<Density, 4> classes{Density::a, Density::b, Density::c, Density::d};
    std::string out = "metric";
    for (auto d : classes) out += "," + std::string(to_string(d));
    out += '\n';

    auto row = [&](const std::string& name, auto cell) {
        out += name;
        for (auto d : classes) {
            const auto it = subgroups.find(d);
            out += ',';
            out += it == subgroups.end() ? std::string("absent") : cell(it->second);
        }
        out += '\n';
    };
    row("patients_total", [](const SubgroupResult& r) { return count_cell(r.patients); });
    row("pre_cancer_patients", [](const SubgroupResult& r) { return count_cell(r.pre_cancer_patients); });
    row("healthy_patients", [](const SubgroupResult& r) { return count_cell(r.healthy_patients); });
    row("studies", [](const SubgroupResult& r) { return std::to_string(r.studies); });
    row("positive_studies", [](const SubgroupResult& r) { return std::to_string(r.positive_studies); });
    for (std::size_t k = 0; k < kYears; ++k) {
        row("year" + std::to_string(k + 1) + "_auroc", [k](const SubgroupResult& r) { return auroc_cell(r.auroc[k]); });
        row("year" + std::to_string(k + 1) + "_positives",
            [k](const SubgroupResult& r) { return std::to_string(r.auroc[k].positives); });
    }
    return out;
}

std::string format_km_csv(const std::map<RiskGroup, KmCurve>& curves) {
    std::string out = "group,year,at_risk,events,censored,survival,empty\n";
    for (const auto& [group, curve] : curves) {
        const std::string prefix = group.name() + ",";
        const std::string empty = curve.empty ? "1" : "0";
        out += prefix + "0," + std::to_string(curve.years[0].at_risk) + ",0,0,1," + empty + "\n";
        for (std::size_t k = 0; k < kYears; ++k) {
            const auto& y = curve.years[k];
            out += prefix + std::to_string(k + 1) + "," + std::to_string(y.at_risk) + "," + std::to_string(y.events) +
                   "," + std::to_string(y.censored) + "," + csv::format_double(y.survival) + "," + empty + "\n";
        }
    }
    return out;
}

}  // namespace dbtrisk::io
