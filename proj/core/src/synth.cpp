#include "dbtrisk/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <thread>
#include <unordered_map>

#include "dbtrisk/csv.hpp"
#include "dbtrisk/errors.hpp"
#include "dbtrisk/io.hpp"
#include "seeding.hpp"

namespace dbtrisk::synth {

namespace {

enum Stream : std::uint64_t { kWeights = 1, kPatientFeatures = 2, kPatientOutcomes = 3, kStudyTokens = 4 };

constexpr std::size_t kViews = 4;

std::string patient_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "P%06zu", i + 1);
    return buf;
}

std::string format_date(std::chrono::sys_days day) {
    const std::chrono::year_month_day ymd{day};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

HazardHead planted_head(const SynthConfig& cfg) {
    const std::size_t dim = cfg.feature_dim;
    std::vector<double> w(kYears * dim, 0.0);
    if (cfg.true_weights) {
        w = *cfg.true_weights;
    } else if (cfg.signal_scale != 0.0) {
        std::mt19937_64 rng(detail::stream_seed(cfg.seed, kWeights));
        std::normal_distribution<double> normal;
        std::vector<double> u(dim);
        double norm = 0.0;
        for (auto& v : u) {
            v = normal(rng);
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (std::size_t k = 0; k < kYears; ++k)
            for (std::size_t i = 0; i < dim; ++i) w[k * dim + i] = cfg.signal_scale * u[i] / norm;
    }
    return HazardHead(dim, std::move(w), YearArray{});
}

double mean_p5(const HazardHead& head, const std::vector<std::vector<double>>& xs, double shift) {
    double total = 0.0;
    for (const auto& x : xs) {
        YearArray z{};
        for (std::size_t k = 0; k < kYears; ++k) {
            double acc = shift;
            const auto row = head.row(k);
            for (std::size_t i = 0; i < x.size(); ++i) acc += row[i] * x[i];
            z[k] = acc;
        }
        total += predict_from_logits(z).probabilities[kYears - 1];
    }
    return total / static_cast<double>(xs.size());
}

/// Common bias c with mean p*_5(c) == target, by bisection (p*_5 is increasing in c).
double calibrate_bias(const HazardHead& head, const std::vector<std::vector<double>>& xs, double target) {
    double lo = -60.0, hi = 60.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mean_p5(head, xs, mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

void SynthConfig::validate() const {
    if (n_patients == 0) throw ContractViolation("synth: n_patients must be positive");
    if (studies_min == 0 || studies_max < studies_min) throw ContractViolation("synth: invalid studies-per-patient range");
    if (feature_dim == 0 || feature_dim % kViews != 0)
        throw ContractViolation("synth: feature_dim must be a positive multiple of 4");
    if (true_weights && true_weights->size() != kYears * feature_dim)
        throw ContractViolation("synth: true_weights must hold 5 x feature_dim values");
    if (!(censor_rate >= 0.0 && censor_rate <= 1.0)) throw ContractViolation("synth: censor_rate outside [0, 1]");
    if (!true_bias && !(pre_cancer_fraction > 0.0 && pre_cancer_fraction < 1.0))
        throw ContractViolation("synth: pre_cancer_fraction outside (0, 1)");
    if (!std::isfinite(signal_scale)) throw ContractViolation("synth: signal_scale must be finite");
    if (frames_min == 0 || frames_max < frames_min) throw ContractViolation("synth: invalid frame range");
    if (patches == 0) throw ContractViolation("synth: patches must be positive");
    if (!(token_noise >= 0.0)) throw ContractViolation("synth: token_noise must be non-negative");
}

SynthCohort generate_cohort(const SynthConfig& cfg) {
    cfg.validate();
    SynthCohort out;
    out.planted = planted_head(cfg);
    const std::size_t dim = cfg.feature_dim;

    // Pass 1: study counts, features, dates and density per patient.
    struct PatientStudies {
        std::size_t first = 0;
        std::size_t count = 0;
    };
    std::vector<PatientStudies> patients(cfg.n_patients);
    const auto base_day = std::chrono::sys_days{std::chrono::year{2012} / 1 / 2};
    for (std::size_t p = 0; p < cfg.n_patients; ++p) {
        std::mt19937_64 rng(detail::stream_seed(cfg.seed, kPatientFeatures, p));
        std::uniform_int_distribution<std::size_t> n_studies(cfg.studies_min, cfg.studies_max);
        std::uniform_int_distribution<int> density(0, 3);
        std::uniform_int_distribution<int> offset(0, 3 * 365);
        std::normal_distribution<double> normal;

        const std::string pid = patient_name(p);
        const auto dens = static_cast<Density>(density(rng));
        auto day = base_day + std::chrono::days{offset(rng)};
        patients[p] = {out.records.size(), n_studies(rng)};
        for (std::size_t s = 0; s < patients[p].count; ++s) {
            StudyRecord r;
            r.patient_id = pid;
            r.study_id = pid + "-S" + std::to_string(s + 1);
            r.study_date = format_date(day);
            r.density = dens;
            for (std::size_t v = 0; v < kViews; ++v)
                r.view_paths[v] = "embeddings/" + r.study_id + "_" + std::string(to_string(kViewOrder[v])) + ".dbte";
            std::vector<double> x(dim);
            for (auto& xi : x) xi = normal(rng);
            out.records.push_back(std::move(r));
            out.features.push_back(std::move(x));
            day += std::chrono::days{365};
        }
    }

    if (cfg.true_bias) {
        out.planted.bias() = *cfg.true_bias;
    } else {
        const double c = calibrate_bias(out.planted, out.features, cfg.pre_cancer_fraction);
        out.planted.bias().fill(c);
    }

    // Pass 2: outcomes.
    out.truth.resize(out.records.size());
    for (std::size_t p = 0; p < cfg.n_patients; ++p) {
        std::mt19937_64 rng(detail::stream_seed(cfg.seed, kPatientOutcomes, p));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (std::size_t i = patients[p].first; i < patients[p].first + patients[p].count; ++i) {
            auto& rec = out.records[i];
            auto& t = out.truth[i];
            const auto pred = forward(out.planted, out.features[i]);
            t.study_id = rec.study_id;
            t.patient_id = rec.patient_id;
            t.hazards = pred.hazards;
            t.probabilities = pred.probabilities;

            // P(event year <= k) = p*_k.
            const double u = unif(rng);
            t.event_year = 0;
            for (std::size_t k = 0; k < kYears; ++k) {
                if (u < t.probabilities[k]) {
                    t.event_year = static_cast<int>(k) + 1;
                    break;
                }
            }
            t.censor_year = static_cast<int>(kYears);
            for (int k = 1; k < static_cast<int>(kYears); ++k) {
                if (unif(rng) < cfg.censor_rate) {
                    t.censor_year = k;
                    break;
                }
            }
            t.event_observed = t.event_year != 0 && t.event_year <= t.censor_year;
            if (t.event_observed) {
                rec.cohort_kind = CohortKind::pre_cancer;
                rec.days_to_diagnosis = kDaysPerYear * t.event_year - kNearDiagnosisDays;
            } else {
                rec.cohort_kind = CohortKind::healthy;
                rec.followup_days = kDaysPerYear * t.censor_year;
            }
        }
    }
    return out;
}

std::array<EmbeddingSeries, 4> synth_embeddings(const SynthConfig& cfg, const SynthCohort& cohort, std::size_t index) {
    const auto& x = cohort.features.at(index);
    const std::size_t block = x.size() / kViews;
    std::mt19937_64 rng(detail::stream_seed(cfg.seed, kStudyTokens, index));
    std::uniform_int_distribution<std::uint32_t> frames(cfg.frames_min, cfg.frames_max);
    std::normal_distribution<double> noise(0.0, cfg.token_noise);
    const std::uint32_t tokens = cfg.token_kind == TokenKind::cls ? 1 : cfg.patches;

    std::array<EmbeddingSeries, 4> out;
    for (std::size_t v = 0; v < kViews; ++v) {
        auto& s = out[v];
        s.token_kind = cfg.token_kind;
        s.frames = frames(rng);
        s.tokens_per_frame = tokens;
        s.dim = static_cast<std::uint32_t>(block);
        s.data.resize(std::size_t{s.frames} * tokens * block);
        for (std::size_t f = 0; f < s.frames; ++f)
            for (std::size_t t = 0; t < tokens; ++t)
                for (std::size_t d = 0; d < block; ++d)
                    s.data[(f * tokens + t) * block + d] = static_cast<float>(x[v * block + d] + noise(rng));
    }
    return out;
}

YearlyAuroc bayes_oracle_auroc(std::span<const TruthRow> truth, std::span<const PredictionRow> table) {
    std::unordered_map<std::string_view, const TruthRow*> by_id;
    for (const auto& t : truth) by_id.emplace(t.study_id, &t);
    PredictionTable scored(table.begin(), table.end());
    for (auto& row : scored) {
        const auto it = by_id.find(row.study_id);
        if (it == by_id.end()) throw ContractViolation("bayes_oracle_auroc: no truth for study " + row.study_id);
        row.p = it->second->probabilities;
    }
    return yearly_auroc(scored);
}

void emit_cohort(const SynthConfig& cfg, const SynthCohort& cohort, const std::filesystem::path& dir, EmitMode mode,
                 unsigned workers) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    io::write_manifest(dir / "manifest.csv", cohort.records);
    io::write_text(dir / "truth.csv", format_truth_csv(cohort.truth));
    io::write_checkpoint(dir / "planted_head.hzh", cohort.planted);

    const fs::path sub = dir / (mode == EmitMode::raw ? "embeddings" : "features");
    fs::create_directories(sub);
    const std::size_t n = cohort.records.size();
    auto emit_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto& rec = cohort.records[i];
            if (mode == EmitMode::features) {
                io::FeatureFile f{rec.study_id, {cohort.features[i], {TokenKind::patch, StatSet{Stat::mean}}}};
                io::write_features(sub / (rec.study_id + ".dbtf"), f);
            } else {
                const auto views = synth_embeddings(cfg, cohort, i);
                for (std::size_t v = 0; v < kViews; ++v) io::write_embedding(dir / rec.view_paths[v], views[v]);
            }
        }
    };
    workers = std::max(1u, workers);
    if (workers == 1) {
        emit_range(0, n);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < workers; ++t) {
            pool.emplace_back([&, t] {
                try {
                    emit_range(n * t / workers, n * (t + 1) / workers);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::string format_truth_csv(std::span<const TruthRow> truth) {
    std::string out = "study_id,patient_id,h1,h2,h3,h4,h5,p1,p2,p3,p4,p5,event_year,censor_year,event_observed\n";
    std::vector<std::string> f;
    for (const auto& t : truth) {
        f = {t.study_id, t.patient_id};
        for (double h : t.hazards) f.push_back(csv::format_double(h));
        for (double p : t.probabilities) f.push_back(csv::format_double(p));
        f.push_back(std::to_string(t.event_year));
        f.push_back(std::to_string(t.censor_year));
        f.push_back(t.event_observed ? "1" : "0");
        out += csv::join(f) + "\n";
    }
    return out;
}

std::vector<TruthRow> parse_truth_csv(std::string_view text) {
    const auto rows = csv::lines(text);
    if (rows.empty()) throw TableError(1, "empty truth table");
    std::vector<std::string> f;
    std::vector<TruthRow> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (!csv::split_line(rows[i], f) || f.size() != 15) throw TableError(i + 1, "expected 15 fields");
        TruthRow t;
        t.study_id = f[0];
        t.patient_id = f[1];
        for (std::size_t k = 0; k < kYears; ++k) {
            if (!csv::parse_double(f[2 + k], t.hazards[k]) || !csv::parse_double(f[7 + k], t.probabilities[k]))
                throw TableError(i + 1, "non-numeric hazard or probability");
        }
        long long e = 0, c = 0, o = 0;
        if (!csv::parse_int(f[12], e) || !csv::parse_int(f[13], c) || !csv::parse_int(f[14], o))
            throw TableError(i + 1, "non-integer event/censor field");
        t.event_year = static_cast<int>(e);
        t.censor_year = static_cast<int>(c);
        t.event_observed = o != 0;
        out.push_back(std::move(t));
    }
    return out;
}

double weight_cosine(const HazardHead& a, const HazardHead& b) {
    if (a.input_dim() != b.input_dim()) throw ContractViolation("weight_cosine: heads differ in input dim");
    double dot = 0.0, na = 0.0, nb = 0.0;
    const auto wa = a.weights(), wb = b.weights();
    for (std::size_t i = 0; i < wa.size(); ++i) {
        dot += wa[i] * wb[i];
        na += wa[i] * wa[i];
        nb += wb[i] * wb[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
}

}  // namespace dbtrisk::synth
