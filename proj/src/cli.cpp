#include "hgc/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

#include "hgc/error.hpp"
#include "hgc/evaluation.hpp"
#include "hgc/inference.hpp"
#include "hgc/ingest.hpp"
#include "hgc/metafeatures.hpp"
#include "hgc/model.hpp"
#include "hgc/parallel.hpp"
#include "hgc/pipeline.hpp"
#include "hgc/screening.hpp"
#include "hgc/simulate.hpp"

namespace hgc::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct Options {
    std::string out = ".";
    unsigned threads = default_thread_count();
    std::uint64_t seed = 1;

    std::string mutations;
    std::string test_ids;
    std::string labels;
    std::string gene_roster;
    std::string model;
    std::string signature_groups;
    std::string reference;
    std::string sd_scope = "train";
    std::string config;  // consumed by expand_config before parsing

    std::string method = "multilevel";
    std::vector<std::string> methods{"multilevel", "gene_only", "recorded_only"};
    std::size_t nmi_top = kDefaultNmiTop;
    std::size_t nmi_top_recorded = 1000;
    int folds = 5;
    int inner_folds = 10;
    int repetitions = 5;
    std::size_t n_lambda = 50;
    double min_ratio = 0.01;
    std::string cv_rule = "min";
    std::optional<double> lambda;
    double kkt_tol = 1e-4;
    int max_iter = 10000;
    bool pr_points = false;

    SimConfig sim;
};

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    return in;
}

class OutputDir {
public:
    explicit OutputDir(const std::string& dir) : dir_(dir) { fs::create_directories(dir_); }

    std::ofstream open(const std::string& name) {
        std::ofstream out(dir_ / name, std::ios::binary);
        if (!out) throw InputError("cannot write '" + (dir_ / name).string() + "'");
        written_.push_back(name);
        return out;
    }

    const std::vector<std::string>& written() const { return written_; }
    const fs::path& path() const { return dir_; }

private:
    fs::path dir_;
    std::vector<std::string> written_;
};

std::string option_value(const CLI::Option* opt) {
    if (opt->count() == 0) return opt->get_default_str();
    std::string joined;
    for (const auto& r : opt->results()) joined += (joined.empty() ? "" : ",") + r;
    return joined;
}

// Everything needed to rerun the command: every option with its effective
// value, the tool version, and the files produced. No timestamps.
void write_manifest(OutputDir& dir, const CLI::App& sub) {
    ordered_json m;
    m["tool"] = "hgc";
    m["version"] = kVersion;
    m["subcommand"] = sub.get_name();
    ordered_json opts = ordered_json::object();
    for (const auto* opt : sub.get_options()) {
        if (opt->get_lnames().empty()) continue;
        const auto& name = opt->get_lnames().front();
        if (name == "help" || name == "config") continue;
        opts[name] = option_value(opt);
    }
    m["options"] = std::move(opts);
#ifdef __VERSION__
    m["compiler"] = __VERSION__;
#endif
    m["rng"] = "std::mt19937_64, std::seed_seq-derived job seeds, standard library distributions";
    auto files = dir.written();
    std::sort(files.begin(), files.end());
    m["outputs"] = files;
    std::ofstream out(dir.path() / "manifest.json", std::ios::binary);
    out << m.dump(2) << '\n';
}

// tumor_id \t cancer_type, header required
std::map<std::string, std::string> read_labels(const std::string& path) {
    auto in = open_in(path);
    std::map<std::string, std::string> out;
    std::string line;
    bool header = true;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (header) {
            if (tab == std::string::npos || line.substr(0, tab) != "tumor_id" ||
                line.substr(tab + 1) != "cancer_type")
                throw FormatError(path + ": header must be 'tumor_id<TAB>cancer_type'");
            header = false;
            continue;
        }
        if (tab == std::string::npos || tab == 0 || tab + 1 == line.size())
            throw FormatError(path + ": line " + std::to_string(line_no) + ": expected two fields");
        const auto id = line.substr(0, tab);
        const auto type = line.substr(tab + 1);
        const auto [it, inserted] = out.emplace(id, type);
        if (!inserted && it->second != type)
            throw DataError(path + ": tumor '" + id + "' listed with two labels");
    }
    return out;
}

struct Loaded {
    std::vector<MutationRecord> records;
    Cohort cohort;
    MetaFeatureSpace space;
    MetaDesign meta;
    BurdenMatrix burden;

    CohortData data() const { return {cohort.design, cohort.labels, meta, burden, space}; }
    std::vector<std::size_t> training_rows() const {
        std::vector<std::size_t> rows(cohort.design.n_train);
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        return rows;
    }
};

enum class Split { from_file, all_train, all_test, unlabelled_test };

Loaded load(const Options& o, Split split, const MetaFeatureSpace* space = nullptr) {
    Loaded L;
    {
        auto in = open_in(o.mutations);
        L.records = parse_mutations(in);
    }
    if (!o.labels.empty()) {
        const auto labels = read_labels(o.labels);
        for (auto& r : L.records) {
            const auto it = labels.find(r.tumor_id);
            if (it == labels.end()) continue;
            if (r.cancer_type && *r.cancer_type != it->second)
                throw DataError("tumor '" + r.tumor_id + "' has cancer_type '" + *r.cancer_type +
                                "' but the label file says '" + it->second + "'");
            r.cancer_type = it->second;
        }
    }
    std::unordered_set<std::string> test;
    switch (split) {
        case Split::from_file:
            if (!o.test_ids.empty()) {
                auto in = open_in(o.test_ids);
                test = read_id_list(in);
            }
            break;
        case Split::all_train: break;
        case Split::all_test:
            for (const auto& r : L.records) test.insert(r.tumor_id);
            break;
        case Split::unlabelled_test: {
            std::set<std::string> labelled;
            for (const auto& r : L.records)
                if (r.cancer_type) labelled.insert(r.tumor_id);
            for (const auto& r : L.records)
                if (!labelled.count(r.tumor_id)) test.insert(r.tumor_id);
            break;
        }
    }
    L.cohort = build_cohort(L.records, test);

    if (space) {
        L.space = *space;
    } else if (!o.gene_roster.empty()) {
        auto in = open_in(o.gene_roster);
        L.space = make_meta_space(read_gene_roster(in));
    } else {
        // default roster: genes seen in training tumors
        std::vector<std::string> genes;
        for (const auto& r : L.records)
            if (r.has_variant() && !r.gene.empty() && !test.count(r.tumor_id)) genes.push_back(r.gene);
        L.space = make_meta_space(std::move(genes));
    }
    L.meta = build_meta_design(L.cohort.design, L.records, L.space);
    L.burden = burden_matrix(L.cohort.design, L.meta, L.space.p());
    return L;
}

Method method_of(const std::string& text) {
    const auto m = parse_method(text);
    if (!m) throw ConfigError("unknown method '" + text + "'");
    return *m;
}

CvOptions cv_options(const Options& o, int folds) {
    CvOptions cv;
    cv.folds = folds;
    cv.n_lambda = o.n_lambda;
    cv.min_ratio = o.min_ratio;
    cv.rule = o.cv_rule == "1se" ? CvRule::one_se : CvRule::min;
    cv.seed = o.seed;
    cv.threads = o.threads;
    cv.solver.kkt_tol = o.kkt_tol;
    cv.solver.max_iter = o.max_iter;
    return cv;
}

void add_solver_options(CLI::App* sub, Options& o) {
    sub->add_option("--n-lambda", o.n_lambda, "Points on the penalty grid")
        ->check(CLI::Range(std::size_t{2}, std::size_t{10000}));
    sub->add_option("--min-ratio", o.min_ratio, "Smallest penalty as a fraction of lambda_max")
        ->check(CLI::Range(1e-8, 1.0 - 1e-12));
    sub->add_option("--cv-rule", o.cv_rule, "Penalty choice: min or 1se")
        ->check(CLI::IsMember({"min", "1se"}));
    sub->add_option("--kkt-tol", o.kkt_tol, "KKT certificate tolerance")->check(CLI::Range(1e-12, 1.0));
    sub->add_option("--max-iter", o.max_iter, "Iteration cap per fit")->check(CLI::Range(1, 100000000));
}

// ---- subcommands ---------------------------------------------------------

int cmd_simulate(const Options& o, const CLI::App& sub) {
    auto config = o.sim;
    config.seed = o.seed;
    const auto truth = generate_truth(config);
    const auto cohort = generate_cohort(truth);

    OutputDir dir(o.out);
    {
        auto out = dir.open("mutations.tsv");
        auto records = cohort.records;
        const std::unordered_set<std::string> test(cohort.test_ids.begin(), cohort.test_ids.end());
        for (auto& r : records)
            if (test.count(r.tumor_id)) r.cancer_type.reset();
        write_mutations(out, records);
    }
    {
        auto out = dir.open("test_ids.txt");
        for (const auto& id : cohort.test_ids) out << id << '\n';
    }
    {
        auto out = dir.open("labels.tsv");
        out << "tumor_id\tcancer_type\n";
        for (std::size_t i = 0; i < cohort.tumor_ids.size(); ++i)
            out << cohort.tumor_ids[i] << '\t'
                << truth.class_names[static_cast<std::size_t>(cohort.labels[i])] << '\n';
    }
    {
        auto out = dir.open("gene_roster.txt");
        for (const auto& g : truth.space.gene_roster) out << g << '\n';
    }
    {
        auto out = dir.open("truth.json");
        out << truth_to_json(truth, cohort).dump(1) << '\n';
    }
    write_manifest(dir, sub);
    return 0;
}

int cmd_ingest(const Options& o, const CLI::App& sub) {
    const auto L = load(o, Split::from_file);
    const auto& d = L.cohort.design;
    OutputDir dir(o.out);
    {
        auto out = dir.open("recurrence.tsv");
        out << "occurrences\tn_variants\n";
        for (const auto& [r, count] : recurrence_table(d)) out << r << '\t' << count << '\n';
    }
    {
        auto out = dir.open("cohort.json");
        ordered_json j;
        j["n_tumors"] = d.n_tumors;
        j["n_train"] = d.n_train;
        j["n_test"] = d.n_tumors - d.n_train;
        j["d1"] = d.d1;
        j["d"] = d.d();
        j["presence_entries"] = d.nnz();
        std::vector<std::size_t> counts(L.cohort.labels.n_classes(), 0);
        for (std::size_t i = 0; i < d.n_train; ++i) ++counts[static_cast<std::size_t>(*L.cohort.labels.labels[i])];
        ordered_json classes = ordered_json::object();
        for (std::size_t k = 0; k < counts.size(); ++k) classes[L.cohort.labels.class_names[k]] = counts[k];
        j["training_class_counts"] = std::move(classes);
        std::size_t empty_rows = 0;
        for (const auto& u : L.meta.rows) empty_rows += u.empty();
        j["meta_features"] = L.space.p();
        j["variants_without_meta_features"] = empty_rows;
        out << j.dump(2) << '\n';
    }
    write_manifest(dir, sub);
    return 0;
}

int cmd_screen(const Options& o, const CLI::App& sub) {
    const auto L = load(o, Split::from_file);
    const auto ranking = screen_variants(L.cohort.design, L.cohort.labels, o.nmi_top);
    OutputDir dir(o.out);
    {
        auto out = dir.open("screening.tsv");
        write_screening_report(out, ranking);
    }
    write_manifest(dir, sub);
    return 0;
}

int cmd_fit(const Options& o, const CLI::App& sub) {
    const auto L = load(o, Split::from_file);
    TrainOptions options;
    options.method = method_of(o.method);
    options.nmi_top = o.nmi_top;
    options.cv = cv_options(o, o.inner_folds);
    options.fixed_lambda = o.lambda;
    const auto rows = L.training_rows();
    const auto trained = train_model(L.data(), rows, options);

    OutputDir dir(o.out);
    {
        auto out = dir.open("model.json");
        save_model(out, trained.model);
    }
    if (options.method != Method::gene_only) {
        auto out = dir.open("screening.tsv");
        write_screening_report(out, trained.screening);
    }
    if (trained.cv) {
        auto out = dir.open("cv_report.tsv");
        out << "lambda\tmean_deviance\tsd_deviance\tn_active_groups\n" << std::setprecision(10);
        const auto& cv = *trained.cv;
        for (std::size_t s = 0; s < cv.lambdas.size(); ++s)
            out << cv.lambdas[s] << '\t' << cv.mean_deviance[s] << '\t' << cv.sd_deviance[s] << '\t'
                << cv.n_active[s] << '\n';
        if (cv.nonconverged_fits > 0)
            std::cerr << "warning: " << cv.nonconverged_fits
                      << " cross-validation fits stopped at the iteration cap\n";
    }
    write_manifest(dir, sub);
    const auto& diag = trained.model.diagnostics;
    if (!diag.converged) {
        std::cerr << "error: final fit did not converge (KKT active residual "
                  << diag.kkt_active_residual << ", inactive ratio " << diag.kkt_inactive_ratio
                  << "); model written but flagged\n";
        return 4;
    }
    return 0;
}

int cmd_predict(const Options& o, const CLI::App& sub) {
    ModelFit model;
    {
        auto in = open_in(o.model);
        model = load_model(in);
    }
    const auto L = load(o, Split::all_test, &model.meta_space);
    std::vector<std::size_t> rows;
    if (!o.test_ids.empty()) {
        auto in = open_in(o.test_ids);
        const auto wanted = read_id_list(in);
        for (std::size_t i = 0; i < L.cohort.labels.tumor_ids.size(); ++i)
            if (wanted.count(L.cohort.labels.tumor_ids[i])) rows.push_back(i);
        if (rows.size() != wanted.size())
            throw DataError("some listed test tumors have no records in " + o.mutations);
    } else {
        rows.resize(L.cohort.design.n_tumors);
        std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    const auto predictions = predict(model, L.cohort.design, L.cohort.labels, L.meta, rows);
    OutputDir dir(o.out);
    {
        auto out = dir.open("predictions.csv");
        write_predictions_csv(out, predictions);
    }
    write_manifest(dir, sub);
    std::size_t unseen = 0;
    for (auto u : predictions.n_unseen) unseen += u;
    std::cerr << "predicted " << predictions.size() << " tumors; " << unseen
              << " variant occurrences were not in the training cohort\n";
    return 0;
}

int cmd_evaluate(const Options& o, const CLI::App& sub) {
    const auto L = load(o, Split::unlabelled_test);
    ExperimentConfig config;
    config.repetitions = o.repetitions;
    config.folds = o.folds;
    config.methods.clear();
    for (const auto& m : o.methods) config.methods.push_back(method_of(m));
    config.seed = o.seed;
    config.nmi_top = o.nmi_top;
    config.nmi_top_recorded = o.nmi_top_recorded;
    config.inner = cv_options(o, o.inner_folds);
    config.threads = o.threads;
    config.keep_curves = o.pr_points;
    const auto report = cv_experiment(L.data(), L.training_rows(), config);

    OutputDir dir(o.out);
    {
        auto out = dir.open("report.tsv");
        write_experiment_report(out, report);
    }
    {
        auto out = dir.open("summary.tsv");
        write_experiment_summary(out, report);
    }
    {
        auto out = dir.open("hard_metrics.tsv");
        write_hard_metrics(out, report);
    }
    if (o.pr_points) {
        auto out = dir.open("pr_points.tsv");
        write_pr_points(out, report);
    }
    write_manifest(dir, sub);
    if (report.nonconverged_fits > 0)
        std::cerr << "warning: " << report.nonconverged_fits
                  << " inner fits stopped at the iteration cap\n";
    return 0;
}

int cmd_report(const Options& o, const CLI::App& sub) {
    ModelFit model;
    {
        auto in = open_in(o.model);
        model = load_model(in);
    }
    int reference = 0;
    if (!o.reference.empty()) {
        const auto k = model.class_index(o.reference);
        if (!k) throw ConfigError("reference class '" + o.reference + "' is not in the model");
        reference = *k;
    }
    OutputDir dir(o.out);
    {
        auto out = dir.open("odds_ratios.tsv");
        write_odds_ratios(out, odds_ratios(model, reference));
    }
    if (!o.signature_groups.empty()) {
        if (o.mutations.empty())
            throw ConfigError("--signature-groups needs --mutations for the burden standard deviations");
        std::vector<SignatureGroupSpec> groups;
        {
            auto in = open_in(o.signature_groups);
            groups = read_signature_groups(in);
        }
        const auto L = load(o, o.sd_scope == "all" ? Split::all_test : Split::from_file,
                            &model.meta_space);
        std::vector<std::size_t> rows;
        if (o.sd_scope == "all") {
            rows.resize(L.cohort.design.n_tumors);
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        } else {
            rows = L.training_rows();
        }
        auto out = dir.open("signature_groups.tsv");
        write_odds_ratios(out, aggregate_signature_groups(model, L.burden, rows, groups, reference));
    }
    write_manifest(dir, sub);
    return 0;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

// Replaces "--config FILE" with one "--key=value" token per line of FILE,
// placed right after the subcommand. Keys also given on the command line are
// skipped, so explicit options win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
    std::string path;
    for (std::size_t i = 2; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                       args.begin() + static_cast<std::ptrdiff_t>(i + 2));
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (path.empty()) return args;
    std::set<std::string> explicit_keys;
    for (std::size_t i = 2; i < args.size(); ++i)
        if (args[i].rfind("--", 0) == 0) explicit_keys.insert(args[i].substr(2, args[i].find('=') - 2));

    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::vector<std::string> tokens;
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos || trim(line.substr(0, eq)).empty())
            throw ConfigError(path + ": line " + std::to_string(line_no) + ": expected key=value");
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        if (key.rfind("--", 0) == 0) key = key.substr(2);
        if (key == "config") throw ConfigError(path + ": config files cannot nest");
        if (!explicit_keys.count(key)) tokens.push_back("--" + key + "=" + value);
    }
    args.insert(args.begin() + 2, tokens.begin(), tokens.end());
    return args;
}

int exit_code(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const NumericalError*>(&e)) return 4;
    return 3;
}

int parse_and_run(int argc, char** argv) {
    CLI::App app{"Tumor tissue-of-origin classifier with variant meta-features"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    app.set_version_flag("--version", kVersion);
    Options o;

    auto common = [&](CLI::App* sub, bool seed_required) {
        sub->add_option("--config", o.config,
                        "key=value file of option defaults; command-line values take precedence");
        sub->add_option("--out", o.out, "Output directory");
        sub->add_option("--threads", o.threads, "Worker threads")->check(CLI::Range(1u, 1024u));
        auto* seed = sub->add_option("--seed", o.seed, "Random seed");
        if (seed_required) seed->required();
    };
    auto cohort_inputs = [&](CLI::App* sub, bool mutations_required) {
        auto* m = sub->add_option("--mutations", o.mutations, "Mutation table (TSV)");
        if (mutations_required) m->required();
        sub->add_option("--test-ids", o.test_ids, "Test tumor ids, one per line");
        sub->add_option("--labels", o.labels, "Extra labels: tumor_id<TAB>cancer_type");
        sub->add_option("--gene-roster", o.gene_roster,
                        "Gene roster, one symbol per line (default: genes seen in training)");
    };

    auto* simulate = app.add_subcommand("simulate", "Draw a synthetic cohort from the hierarchical model");
    common(simulate, true);
    auto& s = o.sim;
    simulate->add_option("--n-classes", s.n_classes)->check(CLI::Range(2, 1000));
    simulate->add_option("--n-train", s.n_train)->check(CLI::Range(std::size_t{1}, std::size_t{10000000}));
    simulate->add_option("--n-test", s.n_test);
    simulate->add_option("--d1", s.d1, "Recorded variants")->check(CLI::Range(std::size_t{1}, std::size_t{100000000}));
    simulate->add_option("--d2", s.d2, "Variants occurring only in test tumors");
    simulate->add_option("--p-genes", s.p_genes)->check(CLI::Range(std::size_t{1}, std::size_t{100000}));
    simulate->add_option("--mutation-rate", s.mutation_rate)->check(CLI::PositiveNumber);
    simulate->add_option("--tau", s.tau, "Residual-effect scale")->check(CLI::NonNegativeNumber);
    simulate->add_option("--xi", s.xi, "Meta-effect scale")->check(CLI::NonNegativeNumber);
    simulate->add_option("--omega-zero-fraction", s.omega_zero_fraction)->check(CLI::Range(0.0, 1.0));
    simulate->add_option("--beta0-zero-fraction", s.beta0_zero_fraction)->check(CLI::Range(0.0, 1.0));
    simulate->add_option("--zipf-exponent", s.zipf_exponent)->check(CLI::NonNegativeNumber);
    simulate->add_option("--max-frequency", s.max_frequency)->check(CLI::Range(1e-12, 1.0));
    simulate->add_option("--off-panel-fraction", s.off_panel_fraction)->check(CLI::Range(0.0, 1.0));
    simulate->add_option("--indel-fraction", s.indel_fraction)->check(CLI::Range(0.0, 1.0));

    auto* ingest = app.add_subcommand("ingest", "Assemble a cohort and tabulate variant recurrence");
    common(ingest, false);
    cohort_inputs(ingest, true);

    auto* screen = app.add_subcommand("screen", "Rank training variants by NMI with the label");
    common(screen, false);
    cohort_inputs(screen, true);
    screen->add_option("--nmi-top", o.nmi_top, "Retain variants ranked below this")
        ->check(CLI::Range(std::size_t{1}, std::size_t{100000000}));

    auto* fit = app.add_subcommand("fit", "Screen, tune the penalty by cross-validation, and fit");
    common(fit, false);
    cohort_inputs(fit, true);
    fit->add_option("--method", o.method, "multilevel, gene_only or recorded_only")
        ->check(CLI::IsMember({"multilevel", "gene_only", "recorded_only"}));
    fit->add_option("--nmi-top", o.nmi_top)->check(CLI::Range(std::size_t{1}, std::size_t{100000000}));
    fit->add_option("--folds", o.inner_folds, "Cross-validation folds for the penalty")
        ->check(CLI::Range(2, 1000));
    fit->add_option("--lambda", o.lambda, "Fixed penalty (skips cross-validation)")
        ->check(CLI::NonNegativeNumber);
    add_solver_options(fit, o);

    auto* pred = app.add_subcommand("predict", "Class probabilities for tumors in a mutation table");
    common(pred, false);
    pred->add_option("--model", o.model, "model.json from fit")->required();
    pred->add_option("--mutations", o.mutations, "Mutation table (TSV)")->required();
    pred->add_option("--test-ids", o.test_ids, "Only score these tumors");

    auto* evaluate = app.add_subcommand("evaluate", "Repeated stratified cross-validation of the methods");
    common(evaluate, true);
    cohort_inputs(evaluate, true);
    evaluate->add_option("--repetitions", o.repetitions)->check(CLI::Range(1, 100000));
    evaluate->add_option("--folds", o.folds)->check(CLI::Range(2, 1000));
    evaluate->add_option("--inner-folds", o.inner_folds, "Folds for penalty selection")
        ->check(CLI::Range(2, 1000));
    evaluate->add_option("--methods", o.methods)
        ->delimiter(',')
        ->check(CLI::IsMember({"multilevel", "gene_only", "recorded_only"}));
    evaluate->add_option("--nmi-top", o.nmi_top)->check(CLI::Range(std::size_t{1}, std::size_t{100000000}));
    evaluate->add_option("--nmi-top-recorded", o.nmi_top_recorded, "Screening size for recorded_only")
        ->check(CLI::Range(std::size_t{1}, std::size_t{100000000}));
    evaluate->add_flag("--pr-points", o.pr_points, "Also write pr_points.tsv");
    add_solver_options(evaluate, o);

    auto* report = app.add_subcommand("report", "Odds ratios and signature-group effects of a model");
    common(report, false);
    report->add_option("--model", o.model, "model.json from fit")->required();
    report->add_option("--reference", o.reference, "Reference class (default: first class)");
    report->add_option("--signature-groups", o.signature_groups, "category<TAB>group weights table");
    report->add_option("--mutations", o.mutations, "Cohort for burden standard deviations");
    report->add_option("--test-ids", o.test_ids, "Tumors excluded from the standard deviations");
    report->add_option("--sd-scope", o.sd_scope, "train or all")->check(CLI::IsMember({"train", "all"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const std::vector<std::pair<CLI::App*, int (*)(const Options&, const CLI::App&)>> commands{
        {simulate, cmd_simulate}, {ingest, cmd_ingest},     {screen, cmd_screen}, {fit, cmd_fit},
        {pred, cmd_predict},      {evaluate, cmd_evaluate}, {report, cmd_report}};
    try {
        for (const auto& [sub, fn] : commands)
            if (sub->parsed()) return fn(o, *sub);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e);
    }
    return 2;
}

}  // namespace

int run(int argc, char** argv) { return run(std::vector<std::string>(argv, argv + argc)); }

int run(const std::vector<std::string>& args) {
    std::vector<std::string> copy = args;
    if (copy.empty()) copy.emplace_back("hgc");
    try {
        copy = expand_config(std::move(copy));
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    std::vector<char*> argv;
    for (auto& a : copy) argv.push_back(a.data());
    argv.push_back(nullptr);
    return parse_and_run(static_cast<int>(copy.size()), argv.data());
}

}  // namespace hgc::cli
