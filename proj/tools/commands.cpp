#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "dbtrisk/cohort.hpp"
#include "dbtrisk/csv.hpp"
#include "dbtrisk/errors.hpp"
#include "dbtrisk/features.hpp"
#include "dbtrisk/hazard.hpp"
#include "dbtrisk/io.hpp"
#include "dbtrisk/metrics.hpp"
#include "dbtrisk/synth.hpp"
#include "dbtrisk/trainer.hpp"

namespace dbtrisk::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct CommonOptions {
    std::string out_dir;
    std::uint64_t seed = 0;
    unsigned workers = 1;
};

void add_common(CLI::App* sub, CommonOptions& c, bool out_dir_required = true) {
    auto* o = sub->add_option("--out-dir", c.out_dir, "Directory for outputs (created if missing)");
    if (out_dir_required) o->required();
    sub->add_option("--seed", c.seed, "Seed for splits, sampling and generation")->capture_default_str();
    sub->add_option("--workers", c.workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    // --config lives on the root app; CLI11 only reads config files there.
    sub->fallthrough();
    sub->footer("--config FILE (accepted before or after the command) reads option values from the [" +
                sub->get_name() + "] section of a TOML file; command-line flags take precedence.");
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const auto t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

/// Records the run and writes run_manifest.json into the output directory.
class RunRecorder {
public:
    RunRecorder(std::string command, const CLI::App* sub, std::uint64_t seed)
        : command_(std::move(command)), config_(sub->config_to_str(true, false)), seed_(seed), started_(utc_now()) {}

    void input(const fs::path& path) {
        if (fs::is_regular_file(path)) inputs_[path.string()] = io::file_digest(path);
    }

    void finish(const fs::path& out_dir) {
        std::string key_src = command_ + "\n" + config_ + "\n" + std::to_string(seed_);
        for (const auto& [p, d] : inputs_) key_src += "\n" + d;
        const std::string key = hex(seeded_hash(key_src, 0));

        bool reproduces = false;
        const auto manifest_path = out_dir / "run_manifest.json";
        if (fs::exists(manifest_path)) {
            try {
                const auto prev = json::parse(io::read_text(manifest_path));
                reproduces = prev.value("reproducibility_key", "") == key;
            } catch (const std::exception&) {
            }
        }
        json j;
        j["command"] = command_;
        j["config"] = config_;
        j["inputs"] = inputs_;
        j["seed"] = seed_;
        j["tool_version"] = kToolVersion;
        j["started_at"] = started_;
        j["finished_at"] = utc_now();
        j["reproducibility_key"] = key;
        j["reproduces_previous_run"] = reproduces;
        io::write_text(manifest_path, j.dump(2) + "\n");
    }

private:
    static std::string hex(std::uint64_t v) {
        std::ostringstream os;
        os << std::hex << std::setw(16) << std::setfill('0') << v;
        return os.str();
    }

    std::string command_;
    std::string config_;
    std::uint64_t seed_;
    std::string started_;
    std::map<std::string, std::string> inputs_;
};

fs::path resolve(const fs::path& base_dir, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
}

SplitRatios parse_ratios(const std::vector<double>& v) {
    if (v.size() != 3) throw ContractViolation("--split-ratios needs three values");
    return SplitRatios{v[0], v[1], v[2]};
}

/// Runs fn(i) for i in [0, n) on `workers` threads; rethrows the error of the lowest index.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn fn) {
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    std::vector<std::exception_ptr> errors(n);
    auto body = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
                return;
            }
        }
    };
    if (workers == 1) {
        body(0, n);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < workers; ++t) pool.emplace_back(body, n * t / workers, n * (t + 1) / workers);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct LoadedCohort {
    std::vector<StudyRecord> records;
    std::vector<LabeledStudy> labeled;
    Dataset data;
};

LoadedCohort load_cohort(const fs::path& manifest, const fs::path& features_dir, const SplitRatios& ratios,
                         std::uint64_t seed, unsigned workers) {
    LoadedCohort c;
    c.records = io::read_manifest(manifest);
    if (c.records.empty()) throw ContractViolation("manifest " + manifest.string() + " has no studies");
    c.labeled = build_cohort(c.records, ratios, seed);

    std::vector<io::FeatureFile> files(c.labeled.size());
    parallel_for(c.labeled.size(), workers, [&](std::size_t i) {
        const auto& id = c.labeled[i].record.study_id;
        const auto path = features_dir / (id + ".dbtf");
        if (!fs::exists(path)) throw IoError("feature file not found: " + path.string());
        files[i] = io::read_features(path);
        if (files[i].study_id != id)
            throw ContractViolation(path.string() + ": holds study '" + files[i].study_id + "', expected '" + id + "'");
    });
    for (std::size_t i = 1; i < files.size(); ++i) {
        if (!(files[i].features.config == files[0].features.config) ||
            files[i].features.values.size() != files[0].features.values.size())
            throw ContractViolation("feature file for " + files[i].study_id +
                                    " has a different configuration or length than " + files[0].study_id);
    }
    std::size_t next = 0;
    c.data = make_examples(c.labeled, [&](const StudyRecord&) { return std::move(files[next++].features.values); });
    return c;
}

std::vector<Example> select_split(const Dataset& d, Split s) {
    std::vector<Example> out;
    std::copy_if(d.begin(), d.end(), std::back_inserter(out), [s](const Example& e) { return e.split == s; });
    return out;
}

std::string year_cell(const YearAuroc& a) {
    if (!a.value) return "undefined";
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << *a.value;
    return os.str();
}

// ---------------------------------------------------------------------------

struct SimulateOptions {
    CommonOptions common;
    synth::SynthConfig synth;
    bool null_signal = false;
    std::string emit = "features";
    std::string tokens = "patch";
};

int cmd_simulate(const SimulateOptions& o, const CLI::App* sub, std::ostream& out) {
    RunRecorder run("simulate", sub, o.common.seed);
    synth::SynthConfig cfg = o.synth;
    cfg.seed = o.common.seed;
    cfg.token_kind = *parse_token_kind(o.tokens);
    if (o.null_signal) cfg.signal_scale = 0.0;
    const auto mode = o.emit == "raw" ? synth::EmitMode::raw : synth::EmitMode::features;

    const auto cohort = synth::generate_cohort(cfg);
    const fs::path dir(o.common.out_dir);
    synth::emit_cohort(cfg, cohort, dir, mode, o.common.workers);

    std::size_t pre = 0;
    for (const auto& r : cohort.records) pre += r.cohort_kind == CohortKind::pre_cancer ? 1 : 0;
    out << "simulated " << cohort.records.size() << " studies from " << cfg.n_patients << " patients ("
        << pre << " pre_cancer, " << cohort.records.size() - pre << " healthy) into " << dir.string() << "\n";
    run.finish(dir);
    return kOk;
}

// ---------------------------------------------------------------------------

struct AggregateOptions {
    CommonOptions common;
    std::string manifest;
    std::string tokens = "patch";
    std::string stats = "mean";
};

int cmd_aggregate(const AggregateOptions& o, const CLI::App* sub, std::ostream& out) {
    RunRecorder run("aggregate", sub, o.common.seed);
    const auto kind = *parse_token_kind(o.tokens);
    const auto stats = StatSet::parse(o.stats);
    const fs::path manifest(o.manifest);
    const auto records = io::read_manifest(manifest);
    run.input(manifest);
    const fs::path base = manifest.parent_path();
    const fs::path dir(o.common.out_dir);
    fs::create_directories(dir);

    parallel_for(records.size(), o.common.workers, [&](std::size_t i) {
        const auto& r = records[i];
        std::array<EmbeddingSeries, 4> views;
        for (std::size_t v = 0; v < 4; ++v) {
            const auto path = resolve(base, r.view_paths[v]);
            if (!fs::exists(path)) throw IoError("embedding file not found: " + path.string());
            views[v] = io::read_embedding(path);
            if (views[v].token_kind != kind)
                throw ContractViolation(path.string() + ": holds " + std::string(to_string(views[v].token_kind)) +
                                        " tokens but --tokens " + o.tokens + " was requested");
        }
        io::FeatureFile f{r.study_id, aggregate_study(std::span<const EmbeddingSeries, 4>(views), stats)};
        io::write_features(dir / (r.study_id + ".dbtf"), f);
    });

    const std::size_t dim = records.empty() ? 0 : io::read_features(dir / (records[0].study_id + ".dbtf")).features.values.size();
    out << "aggregated " << records.size() << " studies (" << o.tokens << ", " << stats.to_string()
        << ") to feature length " << dim << " in " << dir.string() << "\n";
    run.finish(dir);
    return kOk;
}

// ---------------------------------------------------------------------------

struct TrainOptions {
    CommonOptions common;
    std::string manifest;
    std::string features_dir;
    std::vector<double> ratios{0.70, 0.15, 0.15};
    TrainConfig train;
    std::string optimizer = "adam";
};

int cmd_train(const TrainOptions& o, const CLI::App* sub, std::ostream& out) {
    RunRecorder run("train", sub, o.common.seed);
    const fs::path manifest(o.manifest);
    if (!fs::exists(manifest)) throw IoError("manifest not found: " + manifest.string());
    run.input(manifest);
    const auto cohort =
        load_cohort(manifest, o.features_dir, parse_ratios(o.ratios), o.common.seed, o.common.workers);

    TrainConfig cfg = o.train;
    cfg.seed = o.common.seed;
    cfg.workers = o.common.workers;
    cfg.optimizer = o.optimizer == "sgd" ? Optimizer::sgd : Optimizer::adam;

    const auto train_set = select_split(cohort.data, Split::train);
    const auto val_set = select_split(cohort.data, Split::val);
    const fs::path dir(o.common.out_dir);
    fs::create_directories(dir);

    const auto result = train(cfg, train_set, val_set);
    io::write_checkpoint(dir / "head.hzh", result.head);

    std::string log;
    for (const auto& e : result.report.epochs) {
        json j;
        j["epoch"] = e.epoch;
        j["train_loss"] = e.train_loss;
        j["val_loss"] = e.val_loss;
        j["positive_fraction"] = e.positive_fraction;
        json a = json::array();
        for (const auto& y : e.val_auroc) a.push_back(y.value ? json(*y.value) : json(nullptr));
        j["val_auroc"] = a;
        log += j.dump() + "\n";
    }
    json done;
    done["event"] = "done";
    done["best_epoch"] = result.report.best_epoch;
    done["stop_reason"] = to_string(result.report.stop_reason);
    done["epochs_run"] = result.report.epochs.size();
    log += done.dump() + "\n";
    io::write_text(dir / "train_log.jsonl", log);

    std::string splits = "study_id,split\n";
    for (const auto& s : cohort.labeled) splits += csv::escape(s.record.study_id) + "," + std::string(to_string(s.split)) + "\n";
    io::write_text(dir / "splits.csv", splits);

    const auto& best = result.report.epochs[result.report.best_epoch - 1];
    out << "trained on " << train_set.size() << " studies (val " << val_set.size() << "), "
        << result.report.epochs.size() << " epochs, best epoch " << result.report.best_epoch << " (val loss "
        << best.val_loss << "), stopped by " << to_string(result.report.stop_reason) << "\n";
    run.finish(dir);
    return kOk;
}

// ---------------------------------------------------------------------------

struct PredictOptions {
    CommonOptions common;
    std::string manifest;
    std::string features_dir;
    std::string checkpoint;
    std::vector<double> ratios{0.70, 0.15, 0.15};
    std::string split = "all";
};

int cmd_predict(const PredictOptions& o, const CLI::App* sub, std::ostream& out) {
    RunRecorder run("predict", sub, o.common.seed);
    const fs::path manifest(o.manifest), ckpt(o.checkpoint);
    if (!fs::exists(manifest)) throw IoError("manifest not found: " + manifest.string());
    if (!fs::exists(ckpt)) throw IoError("checkpoint not found: " + ckpt.string());
    run.input(manifest);
    run.input(ckpt);
    const auto head = io::read_checkpoint(ckpt);
    const auto cohort =
        load_cohort(manifest, o.features_dir, parse_ratios(o.ratios), o.common.seed, o.common.workers);

    Dataset data = o.split == "all" ? cohort.data : select_split(cohort.data, *parse_split(o.split));
    const auto table = predict_dataset(head, data, o.common.workers);
    const fs::path dir(o.common.out_dir);
    fs::create_directories(dir);
    io::write_predictions(dir / "predictions.csv", table);
    out << "wrote " << table.size() << " predictions to " << (dir / "predictions.csv").string() << "\n";
    run.finish(dir);
    return kOk;
}

// ---------------------------------------------------------------------------

struct EvaluateOptions {
    CommonOptions common;
    std::string predictions;
    std::string manifest;
    std::string truth;
    std::string split = "test";
    std::string threshold_split = "val";
    std::optional<double> threshold;
};

int cmd_evaluate(const EvaluateOptions& o, const CLI::App* sub, std::ostream& out) {
    RunRecorder run("evaluate", sub, o.common.seed);
    const fs::path pred_path(o.predictions);
    auto table = io::read_predictions(pred_path);
    run.input(pred_path);
    if (!o.manifest.empty()) {
        const auto records = io::read_manifest(o.manifest);
        run.input(o.manifest);
        io::join_manifest(table, records);
    }

    auto rows_of = [&](const std::string& split) {
        if (split == "all") return table;
        PredictionTable rows;
        const auto s = *parse_split(split);
        std::copy_if(table.begin(), table.end(), std::back_inserter(rows), [s](const auto& r) { return r.split == s; });
        return rows;
    };
    const auto eval_rows = rows_of(o.split);
    const fs::path dir(o.common.out_dir);
    fs::create_directories(dir);

    std::ostringstream rep;
    rep << "Evaluation of " << pred_path.string() << " (split " << o.split << ", " << eval_rows.size()
        << " studies)\n\n";

    // Yearly AUROC
    const auto yearly = yearly_auroc(eval_rows);
    io::write_text(dir / "yearly_auroc.csv", io::format_yearly_auroc_csv(yearly));
    rep << "Yearly AUROC\n";
    rep << std::left << std::setw(12) << "" ;
    for (std::size_t k = 1; k <= kYears; ++k) rep << std::setw(12) << ("Year " + std::to_string(k));
    rep << "\n" << std::setw(12) << "AUROC";
    for (const auto& y : yearly) rep << std::setw(12) << year_cell(y);
    rep << "\n" << std::setw(12) << "positives";
    for (const auto& y : yearly) rep << std::setw(12) << y.positives;
    rep << "\n" << std::setw(12) << "negatives";
    for (const auto& y : yearly) rep << std::setw(12) << y.negatives;
    rep << "\n\n";

    if (!o.truth.empty()) {
        const auto truth = synth::parse_truth_csv(io::read_text(o.truth));
        run.input(o.truth);
        const auto oracle = synth::bayes_oracle_auroc(truth, eval_rows);
        io::write_text(dir / "oracle_auroc.csv", io::format_yearly_auroc_csv(oracle));
        rep << std::setw(12) << "oracle";
        for (const auto& y : oracle) rep << std::setw(12) << year_cell(y);
        rep << "\n\n";
    }

    // Density subgroups
    const auto subgroups = subgroup_analysis(eval_rows);
    io::write_text(dir / "subgroups.csv", io::format_subgroup_csv(subgroups));
    rep << "Density subgroups (unknown density excluded)\n";
    for (auto d : {Density::a, Density::b, Density::c, Density::d}) {
        rep << "  " << to_string(d) << ": ";
        const auto it = subgroups.find(d);
        if (it == subgroups.end()) {
            rep << "absent\n";
            continue;
        }
        const auto& s = it->second;
        rep << s.studies << " studies";
        if (s.patients) rep << ", " << *s.patients << " patients";
        if (s.pre_cancer_patients) rep << " (" << *s.pre_cancer_patients << " pre-cancer, " << *s.healthy_patients << " healthy)";
        rep << "; AUROC";
        for (const auto& y : s.auroc) rep << " " << year_cell(y);
        rep << "\n";
    }
    rep << "\n";

    // Threshold and risk groups
    json thr;
    std::optional<double> threshold = o.threshold;
    if (threshold) {
        thr["source"] = "command line";
    } else {
        auto thr_rows = rows_of(o.threshold_split);
        std::string source = o.threshold_split;
        if (thr_rows.empty()) {
            thr_rows = eval_rows;
            source = o.split + " (no " + o.threshold_split + " rows)";
        }
        try {
            const auto y = pooled_youden_threshold(thr_rows);
            threshold = y.threshold;
            thr["j"] = y.j;
            thr["sensitivity"] = y.sensitivity;
            thr["specificity"] = y.specificity;
        } catch (const UndefinedMetric&) {
            thr["note"] = "threshold undefined: selection rows contain a single class";
        }
        thr["source"] = source;
    }
    thr["threshold"] = threshold ? json(*threshold) : json(nullptr);

    if (threshold && *threshold > 0.0 && *threshold < 1.0) {
        const auto groups = assign_risk_groups(eval_rows, *threshold);
        const auto curves = kaplan_meier_by_group(eval_rows, groups);
        io::write_text(dir / "km_curves.csv", io::format_km_csv(curves));
        rep << "Risk groups at threshold " << *threshold << " (" << thr["source"].get<std::string>() << ")\n";
        for (const auto& [g, c] : curves) {
            rep << "  " << std::setw(18) << g.name() << " n=" << std::setw(6) << c.years[0].at_risk << " S(t):";
            for (std::size_t k = 0; k < kYears; ++k) rep << " " << std::fixed << std::setprecision(4) << c.years[k].survival;
            rep << std::defaultfloat << "\n";
        }
    } else {
        if (threshold) thr["note"] = "threshold outside (0, 1); risk groups skipped";
        rep << "Risk groups skipped: no usable threshold\n";
    }
    io::write_text(dir / "threshold.json", thr.dump(2) + "\n");

    io::write_text(dir / "report.txt", rep.str());
    out << rep.str();
    run.finish(dir);
    return kOk;
}

template <typename Fn>
int guarded(Fn&& fn, std::ostream& err) {
    try {
        return fn();
    } catch (const Divergence& e) {
        err << "error: training diverged: " << e.what() << "\n";
        return kDivergence;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kIo;
    } catch (const FormatError& e) {
        err << "error: malformed input: " << e.what() << "\n";
        return kIo;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kIo;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kContract;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kInternal;
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Five-year breast cancer risk from tomosynthesis embeddings", "dbtrisk"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);
    app.set_config("--config", "", "TOML file with one [command] section of option values per subcommand");
    app.allow_config_extras(CLI::config_extras_mode::error);

    // simulate
    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic cohort with a planted hazard signal");
    add_common(simulate, sim.common);
    simulate->add_option("--n-patients", sim.synth.n_patients, "Number of patients")->capture_default_str();
    simulate->add_option("--studies-min", sim.synth.studies_min, "Minimum studies per patient")->capture_default_str();
    simulate->add_option("--studies-max", sim.synth.studies_max, "Maximum studies per patient")->capture_default_str();
    simulate->add_option("--dim", sim.synth.feature_dim, "Feature dimension (multiple of 4)")->capture_default_str();
    simulate->add_option("--signal-scale", sim.synth.signal_scale, "Norm of each planted weight row")->capture_default_str();
    simulate->add_flag("--null-signal", sim.null_signal, "Plant no signal (W* = 0)");
    simulate->add_option("--pre-cancer-fraction", sim.synth.pre_cancer_fraction,
                         "Target mean five-year risk used to calibrate the planted bias")
        ->capture_default_str();
    simulate->add_option("--censor-rate", sim.synth.censor_rate, "Yearly probability that follow-up ends")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    simulate->add_option("--emit", sim.emit, "Write aggregated features or raw token tensors")
        ->capture_default_str()
        ->check(CLI::IsMember({"features", "raw"}));
    simulate->add_option("--tokens", sim.tokens, "Token kind of raw tensors")
        ->capture_default_str()
        ->check(CLI::IsMember({"patch", "cls"}));
    simulate->add_option("--frames-min", sim.synth.frames_min, "Minimum frames per view (raw)")->capture_default_str();
    simulate->add_option("--frames-max", sim.synth.frames_max, "Maximum frames per view (raw)")->capture_default_str();
    simulate->add_option("--patches", sim.synth.patches, "Patch tokens per frame (raw)")->capture_default_str();
    simulate->add_option("--token-noise", sim.synth.token_noise, "SD of per-token noise (raw)")->capture_default_str();

    // aggregate
    AggregateOptions agg;
    auto* aggregate = app.add_subcommand("aggregate", "Reduce per-view embeddings to study feature files");
    add_common(aggregate, agg.common);
    aggregate->add_option("--manifest", agg.manifest, "Study manifest CSV")->required();
    aggregate->add_option("--tokens", agg.tokens, "Token kind: patch or cls")
        ->capture_default_str()
        ->check(CLI::IsMember({"patch", "cls"}));
    aggregate->add_option("--stats", agg.stats, "Comma-separated subset of mean,sd,min,max")
        ->capture_default_str()
        ->check([](const std::string& s) {
            try {
                StatSet::parse(s);
                return std::string{};
            } catch (const Error& e) {
                return std::string(e.what());
            }
        });

    // train
    TrainOptions tr;
    auto* train_cmd = app.add_subcommand(
        "train", "Train the cumulative hazard head. Bit-reproducible for a fixed seed and --workers; "
                 "changing --workers changes the gradient summation order");
    add_common(train_cmd, tr.common);
    train_cmd->add_option("--manifest", tr.manifest, "Study manifest CSV")->required();
    train_cmd->add_option("--features-dir", tr.features_dir, "Directory of <study_id>.dbtf files")->required();
    train_cmd->add_option("--split-ratios", tr.ratios, "Train, validation and test patient fractions")
        ->expected(3)
        ->capture_default_str();
    train_cmd->add_option("--lr", tr.train.learning_rate, "Learning rate")->capture_default_str();
    train_cmd->add_option("--batch-size", tr.train.batch_size, "Mini-batch size")->capture_default_str();
    train_cmd->add_option("--max-epochs", tr.train.max_epochs, "Epoch budget")->capture_default_str();
    train_cmd->add_option("--patience", tr.train.patience, "Epochs without validation improvement before stopping")
        ->capture_default_str();
    train_cmd->add_option("--optimizer", tr.optimizer, "adam or sgd")
        ->capture_default_str()
        ->check(CLI::IsMember({"adam", "sgd"}));
    train_cmd->add_flag("--standardize", tr.train.standardize_features,
                        "Z-score features on the training split (folded back into the saved head)");

    // predict
    PredictOptions pr;
    auto* predict = app.add_subcommand("predict", "Score studies with a trained head");
    add_common(predict, pr.common);
    predict->add_option("--manifest", pr.manifest, "Study manifest CSV")->required();
    predict->add_option("--features-dir", pr.features_dir, "Directory of <study_id>.dbtf files")->required();
    predict->add_option("--checkpoint", pr.checkpoint, "HZH1 head checkpoint")->required();
    predict->add_option("--split-ratios", pr.ratios, "Must match the ratios used for training")
        ->expected(3)
        ->capture_default_str();
    predict->add_option("--split", pr.split, "Which split to score")
        ->capture_default_str()
        ->check(CLI::IsMember({"all", "train", "val", "test"}));

    // evaluate
    EvaluateOptions ev;
    auto* evaluate = app.add_subcommand("evaluate", "Yearly AUROC, density subgroups, Youden threshold and KM curves");
    add_common(evaluate, ev.common);
    evaluate->add_option("--predictions", ev.predictions, "Prediction table CSV")->required();
    evaluate->add_option("--manifest", ev.manifest, "Manifest for patient and cohort counts (optional)");
    evaluate->add_option("--truth", ev.truth, "Synthetic truth table for Bayes-oracle AUROC (optional)");
    evaluate->add_option("--split", ev.split, "Split to evaluate")
        ->capture_default_str()
        ->check(CLI::IsMember({"all", "train", "val", "test"}));
    evaluate->add_option("--threshold-split", ev.threshold_split, "Split used to pick the Youden threshold")
        ->capture_default_str()
        ->check(CLI::IsMember({"all", "train", "val", "test"}));
    evaluate->add_option("--threshold", ev.threshold, "Use this threshold instead of selecting one");

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    return guarded(
        [&] {
            if (*simulate) return cmd_simulate(sim, simulate, out);
            if (*aggregate) return cmd_aggregate(agg, aggregate, out);
            if (*train_cmd) return cmd_train(tr, train_cmd, out);
            if (*predict) return cmd_predict(pr, predict, out);
            return cmd_evaluate(ev, evaluate, out);
        },
        err);
}

}  // namespace dbtrisk::cli
