#include <gtest/gtest.h>

#include <json.hpp>

#include "dbtrisk/io.hpp"
#include "pipeline.hpp"

using pipeline::invoke;
namespace codes = dbtrisk::cli;
namespace fs = std::filesystem;
using namespace dbtrisk;

namespace {

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

}  // namespace

TEST(Cli, RawPipelineEndToEnd) {
    const auto root = pipeline::fresh_dir("it_raw");
    pipeline::Options o;
    o.raw = true;
    o.seed = "11";
    o.workers = "2";
    const auto r = pipeline::run_all(root, o);
    ASSERT_TRUE(r.ok()) << r.failure();
    ASSERT_EQ(r.steps.size(), 5u);

    for (const char* f : {"yearly_auroc.csv", "oracle_auroc.csv", "subgroups.csv", "km_curves.csv", "threshold.json",
                          "report.txt", "run_manifest.json"})
        EXPECT_TRUE(fs::exists(r.eval / f)) << f;
    for (const auto& dir : {r.sim, r.features, r.model, r.preds, r.eval})
        EXPECT_TRUE(fs::exists(dir / "run_manifest.json")) << dir;
    EXPECT_TRUE(contains(r.steps.back().out, "Yearly AUROC"));
    EXPECT_TRUE(contains(r.steps.back().out, "Density subgroups"));
    EXPECT_TRUE(contains(r.steps.back().out, "Risk groups at threshold"));

    const auto thr = nlohmann::json::parse(io::read_text(r.eval / "threshold.json"));
    EXPECT_EQ(thr["source"], "val");
    EXPECT_GT(thr["threshold"].get<double>(), 0.0);

    const auto s = pipeline::score(r);
    ASSERT_TRUE(s.trained[4].value);
    EXPECT_GT(*s.trained[4].value, 0.65);
    // Raw tensors carry token noise, so the trained head may lag the oracle a little more here.
    EXPECT_LE(std::abs(*s.trained[4].value - *s.oracle[4].value), 0.05);

    const auto f = io::read_features(r.features / "P000001-S1.dbtf");
    EXPECT_EQ(f.features.values.size(), 16u);
    fs::remove_all(root);
}

TEST(Cli, YearOneUndefinedInTestSplit) {
    // Year-1 events sit at day 182, inside the 183-day exclusion window for val and test.
    const auto root = pipeline::fresh_dir("it_year1");
    pipeline::Options o;
    o.n_patients = "400";
    o.seed = "3";
    const auto r = pipeline::run_all(root, o);
    ASSERT_TRUE(r.ok()) << r.failure();
    const auto csv = io::read_text(r.eval / "yearly_auroc.csv");
    EXPECT_TRUE(contains(csv, "\n1,undefined,0,")) << csv;
    EXPECT_TRUE(contains(r.steps.back().out, "undefined"));
    fs::remove_all(root);
}

TEST(Cli, AggregateGeometries) {
    const auto root = pipeline::fresh_dir("it_geom");
    // Four views of 768-dim tensors for one study.
    const std::string header =
        "patient_id,study_id,study_date,cohort_kind,days_to_diagnosis,followup_days,density,rcc_path,lcc_path,"
        "rmlo_path,lmlo_path\n";
    for (auto kind : {TokenKind::patch, TokenKind::cls}) {
        const std::string k(to_string(kind));
        for (const char* v : {"RCC", "LCC", "RMLO", "LMLO"}) {
            EmbeddingSeries s{kind, 2, kind == TokenKind::cls ? 1u : 5u, 768, {}};
            s.data.assign(std::size_t(s.frames) * s.tokens_per_frame * 768, 0.25f);
            io::write_embedding(root / (k + "_" + v + ".dbte"), s);
        }
        io::write_text(root / (k + ".csv"), header + "P1,S1,2015-05-05,healthy,,900,c," + k + "_RCC.dbte," + k +
                                                "_LCC.dbte," + k + "_RMLO.dbte," + k + "_LMLO.dbte\n");
    }
    struct Case {
        const char* tokens;
        const char* stats;
        std::size_t length;
    };
    for (const auto& c : {Case{"patch", "mean", 3072}, Case{"cls", "mean,sd", 6144},
                          Case{"patch", "mean,sd,min,max", 12288}, Case{"cls", "mean", 3072}}) {
        const auto out = root / (std::string(c.tokens) + c.stats);
        const auto r = invoke({"aggregate", "--manifest", (root / (std::string(c.tokens) + ".csv")).string(), "--tokens",
                            c.tokens, "--stats", c.stats, "--out-dir", out.string()});
        ASSERT_EQ(r.code, 0) << r.err;
        EXPECT_EQ(io::read_features(out / "S1.dbtf").features.values.size(), c.length);
    }
    const auto mixed = invoke({"aggregate", "--manifest", (root / "cls.csv").string(), "--tokens", "patch", "--out-dir",
                            (root / "mixed").string()});
    EXPECT_EQ(mixed.code, codes::kContract);
    fs::remove_all(root);
}

TEST(Cli, UnknownStatIsUsageError) {
    const auto r = invoke({"aggregate", "--manifest", "m.csv", "--stats", "mean,median", "--out-dir", "x"});
    EXPECT_EQ(r.code, codes::kUsage);
    EXPECT_TRUE(contains(r.err, "median"));
}

TEST(Cli, MissingManifestIsIoErrorNamingPath) {
    const auto root = pipeline::fresh_dir("it_missing");
    const auto path = (root / "nowhere" / "manifest.csv").string();
    const auto r = invoke({"train", "--manifest", path, "--features-dir", root.string(), "--out-dir",
                        (root / "out").string()});
    EXPECT_EQ(r.code, codes::kIo);
    EXPECT_TRUE(contains(r.err, path)) << r.err;
    fs::remove_all(root);
}

TEST(Cli, MalformedEmbeddingReportsPath) {
    const auto root = pipeline::fresh_dir("it_badfile");
    const auto sim = invoke({"simulate", "--out-dir", root.string(), "--n-patients", "3", "--emit", "raw"});
    ASSERT_EQ(sim.code, 0) << sim.err;
    const auto victim = root / "embeddings" / "P000002-S1_LCC.dbte";
    auto bytes = io::read_bytes(victim);
    bytes.resize(bytes.size() - 8);
    io::write_bytes(victim, bytes);
    const auto r = invoke({"aggregate", "--manifest", (root / "manifest.csv").string(), "--out-dir",
                        (root / "f").string(), "--workers", "3"});
    EXPECT_EQ(r.code, codes::kIo);
    EXPECT_TRUE(contains(r.err, "P000002-S1_LCC.dbte")) << r.err;
    fs::remove_all(root);
}

TEST(Cli, HelpDocumentsFlagsAndUnknownFlagsFail) {
    const std::vector<std::pair<std::string, std::vector<std::string>>> cmds{
        {"simulate", {"--n-patients", "--dim", "--null-signal", "--censor-rate", "--emit", "--seed", "--workers",
                      "--config", "--out-dir"}},
        {"aggregate", {"--manifest", "--tokens", "--stats", "--out-dir", "--seed", "--workers", "--config"}},
        {"train", {"--manifest", "--features-dir", "--lr", "--batch-size", "--max-epochs", "--patience", "--optimizer",
                   "--standardize", "--split-ratios", "--seed", "--workers", "--config"}},
        {"predict", {"--manifest", "--features-dir", "--checkpoint", "--split", "--seed", "--workers", "--config"}},
        {"evaluate", {"--predictions", "--manifest", "--truth", "--split", "--threshold-split", "--threshold",
                      "--seed", "--workers", "--config"}},
    };
    for (const auto& [cmd, flags] : cmds) {
        const auto h = invoke({cmd, "--help"});
        EXPECT_EQ(h.code, 0) << cmd;
        for (const auto& f : flags) EXPECT_TRUE(contains(h.out, f)) << cmd << " " << f;
        const auto bad = invoke({cmd, "--out-dir", "x", "--no-such-flag"});
        EXPECT_EQ(bad.code, codes::kUsage) << cmd;
    }
    EXPECT_EQ(invoke({}).code, codes::kUsage);
    EXPECT_EQ(invoke({"frobnicate"}).code, codes::kUsage);
}

TEST(Cli, ConfigFileWithFlagPrecedence) {
    const auto root = pipeline::fresh_dir("it_config");
    io::write_text(root / "sim.toml", "[simulate]\nn-patients = 5\ndim = 8\nseed = 4\n");
    const auto r = invoke({"simulate", "--config", (root / "sim.toml").string(), "--dim", "12", "--out-dir",
                        (root / "out").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto m = nlohmann::json::parse(io::read_text(root / "out" / "run_manifest.json"));
    EXPECT_EQ(m["seed"], 4);
    EXPECT_TRUE(contains(m["config"].get<std::string>(), "12"));
    EXPECT_EQ(io::read_checkpoint(root / "out" / "planted_head.hzh").input_dim(), 12u);

    // Keys outside a command section, or unknown to it, are rejected rather than dropped.
    for (const char* text : {"n-patients = 5\n", "[simulate]\nbogus = 1\n"}) {
        io::write_text(root / "bad.toml", text);
        const auto bad = invoke({"simulate", "--config", (root / "bad.toml").string(), "--out-dir",
                                 (root / "bad").string()});
        EXPECT_EQ(bad.code, codes::kUsage) << text;
    }
    fs::remove_all(root);
}

TEST(Cli, DeterministicAndReproducibilityFlag) {
    const auto a = pipeline::fresh_dir("it_det_a"), b = pipeline::fresh_dir("it_det_b");
    pipeline::Options o;
    o.n_patients = "300";
    o.seed = "5";
    const auto ra = pipeline::run_all(a, o);
    const auto rb = pipeline::run_all(b, o);
    ASSERT_TRUE(ra.ok()) << ra.failure();
    ASSERT_TRUE(rb.ok()) << rb.failure();
    EXPECT_EQ(io::read_bytes(ra.model / "head.hzh"), io::read_bytes(rb.model / "head.hzh"));
    EXPECT_EQ(io::read_text(ra.model / "train_log.jsonl"), io::read_text(rb.model / "train_log.jsonl"));
    EXPECT_EQ(io::read_text(ra.sim / "truth.csv"), io::read_text(rb.sim / "truth.csv"));
    EXPECT_EQ(io::read_text(ra.eval / "km_curves.csv"), io::read_text(rb.eval / "km_curves.csv"));

    auto flag = [](const fs::path& dir) {
        return nlohmann::json::parse(io::read_text(dir / "run_manifest.json"))["reproduces_previous_run"].get<bool>();
    };
    EXPECT_FALSE(flag(ra.model));
    const auto again = pipeline::run_all(a, o);
    ASSERT_TRUE(again.ok());
    EXPECT_TRUE(flag(a / "model"));
    EXPECT_TRUE(flag(a / "sim"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Cli, EvaluateWithFixedThresholdAndNoManifest) {
    const auto root = pipeline::fresh_dir("it_thr");
    PredictionTable t;
    for (int i = 0; i < 6; ++i) {
        PredictionRow r;
        r.study_id = "S" + std::to_string(i);
        const double base = 0.1 * (i + 1);
        r.p = {base * 0.2, base * 0.4, base * 0.6, base * 0.8, base};
        r.y = i >= 3 ? LabelVector{0, 0, 1, 1, 1} : LabelVector{};
        r.w = {1, 1, 1, 1, 1};
        r.density = static_cast<Density>(i % 5);
        r.split = Split::test;
        t.push_back(r);
    }
    io::write_predictions(root / "p.csv", t);
    const auto r = invoke({"evaluate", "--predictions", (root / "p.csv").string(), "--threshold", "0.3", "--out-dir",
                        (root / "e").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto km = io::read_text(root / "e" / "km_curves.csv");
    EXPECT_TRUE(contains(km, "high_risk_year_4,0,1,0,0,1,0")) << km;
    EXPECT_TRUE(contains(io::read_text(root / "e" / "subgroups.csv"), "patients_total,NA"));
    EXPECT_TRUE(contains(io::read_text(root / "e" / "yearly_auroc.csv"), "1,undefined"));
    fs::remove_all(root);
}
