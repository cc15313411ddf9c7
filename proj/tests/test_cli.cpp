#include <doctest.h>

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "hgc/cli.hpp"
#include "hgc/metafeatures.hpp"
#include "support.hpp"

using hgc::test::slurp;
using hgc::test::spit;
using hgc::test::TempDir;

namespace {

int run(std::vector<std::string> args) {
    args.insert(args.begin(), "hgc");
    return hgc::cli::run(args);
}

std::size_t count_lines(const std::string& text) {
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

// small cohort: 120 training and 40 test tumors
int simulate_into(const std::string& dir, const std::string& seed = "3") {
    return run({"simulate", "--seed", seed, "--out", dir, "--n-classes", "3", "--n-train", "120",
                "--n-test", "40", "--d1", "300", "--d2", "60", "--p-genes", "10",
                "--mutation-rate", "10"});
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("simulate, fit and predict round trip") {
    TempDir tmp;
    const auto sim = tmp.file("sim"), fit = tmp.file("fit"), pred = tmp.file("pred");
    REQUIRE(simulate_into(sim) == 0);
    for (auto f : {"mutations.tsv", "test_ids.txt", "labels.tsv", "gene_roster.txt", "truth.json", "manifest.json"})
        CHECK(std::filesystem::exists(std::filesystem::path(sim) / f));
    REQUIRE(run({"fit", "--mutations", sim + "/mutations.tsv", "--test-ids", sim + "/test_ids.txt",
                 "--gene-roster", sim + "/gene_roster.txt", "--folds", "3", "--n-lambda", "15",
                 "--nmi-top", "40", "--seed", "1", "--out", fit}) == 0);
    for (auto f : {"model.json", "screening.tsv", "cv_report.tsv", "manifest.json"})
        CHECK(std::filesystem::exists(std::filesystem::path(fit) / f));
    CHECK(count_lines(slurp(fit + "/cv_report.tsv")) == 16);
    REQUIRE(run({"predict", "--model", fit + "/model.json", "--mutations", sim + "/mutations.tsv",
                 "--test-ids", sim + "/test_ids.txt", "--out", pred}) == 0);
    const auto csv = slurp(pred + "/predictions.csv");
    CHECK(count_lines(csv) == 41);
    CHECK(csv.rfind("tumor_id,C1,C2,C3,predicted_class,n_unseen_variants\n", 0) == 0);
    // the unseen variants of the test tumors are counted
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    std::size_t unseen = 0;
    while (std::getline(lines, line)) unseen += std::stoul(line.substr(line.rfind(',') + 1));
    CHECK(unseen >= 60);

    const auto manifest = nlohmann::json::parse(slurp(fit + "/manifest.json"));
    CHECK(manifest["subcommand"] == "fit");
    CHECK(manifest["version"] == hgc::cli::kVersion);
    CHECK(manifest["options"]["seed"] == "1");
    CHECK(manifest["options"]["nmi-top"] == "40");
    CHECK(manifest["outputs"].size() == 3);
}

TEST_CASE("ingest and screen write their tables") {
    TempDir tmp;
    const auto sim = tmp.file("sim");
    REQUIRE(simulate_into(sim) == 0);
    REQUIRE(run({"ingest", "--mutations", sim + "/mutations.tsv", "--test-ids", sim + "/test_ids.txt",
                 "--out", tmp.file("ingest")}) == 0);
    const auto cohort = nlohmann::json::parse(slurp(tmp.file("ingest") + "/cohort.json"));
    CHECK(cohort["d1"] == 300);
    CHECK(cohort["d"] == 360);
    CHECK(cohort["n_train"] == 120);
    CHECK(slurp(tmp.file("ingest") + "/recurrence.tsv").rfind("occurrences\tn_variants\n", 0) == 0);
    REQUIRE(run({"screen", "--mutations", sim + "/mutations.tsv", "--test-ids", sim + "/test_ids.txt",
                 "--nmi-top", "10", "--out", tmp.file("screen")}) == 0);
    CHECK(count_lines(slurp(tmp.file("screen") + "/screening.tsv")) == 301);
}

TEST_CASE("evaluate with a fixed seed is byte-identical") {
    TempDir tmp;
    const auto sim = tmp.file("sim");
    REQUIRE(simulate_into(sim) == 0);
    auto evaluate = [&](const std::string& out, const std::string& threads) {
        return run({"evaluate", "--mutations", sim + "/mutations.tsv", "--gene-roster",
                    sim + "/gene_roster.txt", "--seed", "7", "--repetitions", "2", "--folds", "3",
                    "--inner-folds", "3", "--n-lambda", "10", "--nmi-top", "30",
                    "--nmi-top-recorded", "60", "--threads", threads, "--pr-points", "--out", out});
    };
    REQUIRE(evaluate(tmp.file("a"), "1") == 0);
    REQUIRE(evaluate(tmp.file("b"), "1") == 0);
    REQUIRE(evaluate(tmp.file("c"), "3") == 0);
    for (auto f : {"summary.tsv", "report.tsv", "hard_metrics.tsv", "pr_points.tsv"}) {
        const auto a = slurp(tmp.file("a") + "/" + f);
        CHECK(!a.empty());
        CHECK(a == slurp(tmp.file("b") + "/" + f));
        CHECK(a == slurp(tmp.file("c") + "/" + f));
    }
    // 3 methods x (3 classes + average)
    CHECK(count_lines(slurp(tmp.file("a") + "/summary.tsv")) == 13);
    // manifests differ only in the output directory
    auto manifest = [&](const std::string& dir) {
        auto m = nlohmann::json::parse(slurp(dir + "/manifest.json"));
        m["options"].erase("out");
        m["options"].erase("threads");
        return m.dump();
    };
    CHECK(manifest(tmp.file("a")) == manifest(tmp.file("b")));
    CHECK(manifest(tmp.file("a")) == manifest(tmp.file("c")));
}

TEST_CASE("a gene missing from the model does not stop prediction") {
    TempDir tmp;
    const auto sim = tmp.file("sim");
    REQUIRE(simulate_into(sim) == 0);
    REQUIRE(run({"fit", "--mutations", sim + "/mutations.tsv", "--test-ids", sim + "/test_ids.txt",
                 "--lambda", "4", "--nmi-top", "30", "--seed", "1", "--out", tmp.file("fit")}) == 0);
    spit(tmp.file("new.tsv"),
         "tumor_id\tcancer_type\tvariant_id\tgene\ttri_context\tref\talt\n"
         "x1\t\tNOVEL:1:C>T\tNOVELGENE\tACA\tC\tT\n"
         "x1\t\tNOVEL:2:C>A\tNOVELGENE\tTCA\tC\tA\n"
         "x2\t\t\t\t\t\t\n");
    REQUIRE(run({"predict", "--model", tmp.file("fit") + "/model.json", "--mutations",
                 tmp.file("new.tsv"), "--out", tmp.file("pred")}) == 0);
    const auto csv = slurp(tmp.file("pred") + "/predictions.csv");
    CHECK(count_lines(csv) == 3);
    CHECK(csv.find("\nx1,") != std::string::npos);
    CHECK(csv.find(",2\n") != std::string::npos);  // x1: both variants unseen
    CHECK(csv.find(",0\n") != std::string::npos);  // x2: no mutations
}

TEST_CASE("report writes odds ratios and signature groups") {
    TempDir tmp;
    const auto sim = tmp.file("sim");
    REQUIRE(simulate_into(sim) == 0);
    REQUIRE(run({"fit", "--mutations", sim + "/mutations.tsv", "--test-ids", sim + "/test_ids.txt",
                 "--gene-roster", sim + "/gene_roster.txt", "--lambda", "3", "--nmi-top", "30",
                 "--seed", "1", "--out", tmp.file("fit")}) == 0);
    std::ostringstream groups;
    groups << "category\tflat\tfirst\n";
    for (std::size_t t = 0; t < hgc::kSbsCount; ++t)
        groups << hgc::sbs_name(t) << '\t' << 1.0 / 96 << '\t' << (t == 0 ? 1 : 0) << '\n';
    spit(tmp.file("groups.tsv"), groups.str());
    REQUIRE(run({"report", "--model", tmp.file("fit") + "/model.json", "--reference", "C2",
                 "--signature-groups", tmp.file("groups.tsv"), "--mutations",
                 sim + "/mutations.tsv", "--test-ids", sim + "/test_ids.txt", "--out",
                 tmp.file("report")}) == 0);
    const auto ors = slurp(tmp.file("report") + "/odds_ratios.tsv");
    CHECK(ors.rfind("predictor\tpredictor_kind\tclass\todds_ratio\n", 0) == 0);
    CHECK(ors.find("\tsbs\tC2\t1\n") != std::string::npos);
    const auto sig = slurp(tmp.file("report") + "/signature_groups.tsv");
    CHECK(count_lines(sig) == 7);
    CHECK(sig.find("flat\tsignature_group\tC2\t1\n") != std::string::npos);
    CHECK(run({"report", "--model", tmp.file("fit") + "/model.json", "--reference", "nope",
               "--out", tmp.file("r2")}) == 2);
}

TEST_CASE("exit codes") {
    TempDir tmp;
    CHECK(run({}) == 2);
    CHECK(run({"bogus"}) == 2);
    CHECK(run({"simulate", "--out", tmp.file("s")}) == 2);  // seed is mandatory
    CHECK(run({"simulate", "--seed", "1", "--n-classes", "1", "--out", tmp.file("s")}) == 2);
    CHECK(run({"fit", "--mutations", tmp.file("missing.tsv"), "--out", tmp.file("f")}) == 3);
    spit(tmp.file("bad.tsv"), "tumor_id\tcancer_type\tvariant_id\tgene\ttri_context\tref\talt\n"
                              "t1\tX\tv1\tG\tTAT\tG\tT\n");
    CHECK(run({"screen", "--mutations", tmp.file("bad.tsv"), "--out", tmp.file("f")}) == 3);
    spit(tmp.file("nolabel.tsv"), "tumor_id\tcancer_type\tvariant_id\tgene\ttri_context\tref\talt\n"
                                  "t1\t\tv1\tG\tTCT\tC\tT\n");
    CHECK(run({"ingest", "--mutations", tmp.file("nolabel.tsv"), "--out", tmp.file("f")}) == 3);

    const auto sim = tmp.file("sim");
    REQUIRE(simulate_into(sim) == 0);
    CHECK(run({"fit", "--mutations", sim + "/mutations.tsv", "--test-ids", sim + "/test_ids.txt",
               "--method", "forest", "--out", tmp.file("f")}) == 2);
    CHECK(run({"fit", "--mutations", sim + "/mutations.tsv", "--test-ids", sim + "/test_ids.txt",
               "--folds", "500", "--out", tmp.file("f")}) == 2);
    CHECK(run({"fit", "--mutations", sim + "/mutations.tsv", "--test-ids", sim + "/test_ids.txt",
               "--lambda", "0.01", "--max-iter", "1", "--out", tmp.file("f")}) == 4);
    CHECK(std::filesystem::exists(tmp.file("f") + "/model.json"));
}

TEST_CASE("options may come from a key=value file") {
    TempDir tmp;
    spit(tmp.file("sim.conf"), "seed=5\nn-train=50\nn-test=10\nd1=80\nd2=20\nn-classes=2\n");
    REQUIRE(run({"simulate", "--config", tmp.file("sim.conf"), "--out", tmp.file("s")}) == 0);
    CHECK(count_lines(slurp(tmp.file("s") + "/test_ids.txt")) == 10);
    const auto manifest = nlohmann::json::parse(slurp(tmp.file("s") + "/manifest.json"));
    CHECK(manifest["options"]["seed"] == "5");
    CHECK(manifest["options"]["n-train"] == "50");
    // explicit options override the file
    REQUIRE(run({"simulate", "--n-test", "7", "--config=" + tmp.file("sim.conf"), "--out", tmp.file("t")}) == 0);
    CHECK(count_lines(slurp(tmp.file("t") + "/test_ids.txt")) == 7);
    spit(tmp.file("broken.conf"), "seed 5\n");
    CHECK(run({"simulate", "--config", tmp.file("broken.conf"), "--out", tmp.file("u")}) == 2);
    CHECK(run({"simulate", "--config", tmp.file("absent.conf"), "--out", tmp.file("u")}) == 2);
    spit(tmp.file("unknown.conf"), "seed=1\nbogus=3\n");
    CHECK(run({"simulate", "--config", tmp.file("unknown.conf"), "--out", tmp.file("u")}) == 2);
}

}
