#include "hgc/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>

#include "hgc/error.hpp"
#include "hgc/parallel.hpp"
#include "hgc/random.hpp"

namespace hgc {

PrCurve pr_curve(std::span<const double> scores, std::span<const std::uint8_t> truth) {
    if (scores.size() != truth.size()) throw InputError("pr_curve: scores and truth differ in length");
    const std::size_t positives = static_cast<std::size_t>(std::count_if(
        truth.begin(), truth.end(), [](std::uint8_t t) { return t != 0; }));
    if (positives == 0 || positives == truth.size())
        throw DataError("pr_curve needs at least one positive and one negative item");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    PrCurve curve;
    curve.prevalence = static_cast<double>(positives) / static_cast<double>(truth.size());
    std::size_t tp = 0, seen = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double threshold = scores[order[i]];
        for (; i < order.size() && scores[order[i]] == threshold; ++i, ++seen)
            tp += truth[order[i]] != 0 ? 1 : 0;
        curve.points.push_back({threshold, static_cast<double>(tp) / static_cast<double>(positives),
                                static_cast<double>(tp) / static_cast<double>(seen)});
    }
    return curve;
}

double pr_auc(const PrCurve& curve) {
    if (curve.points.empty()) return 0.0;
    double area = 0.0;
    double r0 = 0.0, p0 = curve.points.front().precision;
    for (const auto& pt : curve.points) {
        area += (pt.recall - r0) * (pt.precision + p0) / 2.0;
        r0 = pt.recall;
        p0 = pt.precision;
    }
    return area;
}

OneVsRestReport one_vs_rest_report(const PredictionSet& predictions, std::span<const int> truth,
                                   bool keep_curves) {
    const std::size_t n = predictions.size();
    const std::size_t K = predictions.class_names.size();
    if (truth.size() != n) throw InputError("one_vs_rest_report: truth length mismatch");

    OneVsRestReport report;
    double sum = 0.0;
    std::size_t defined = 0;
    std::vector<double> scores(n);
    std::vector<std::uint8_t> is_k(n);
    for (std::size_t k = 0; k < K; ++k) {
        ClassMetrics m;
        m.class_name = predictions.class_names[k];
        std::size_t hits = 0;
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = predictions.probabilities[i][k];
            is_k[i] = truth[i] == static_cast<int>(k);
            const bool predicted = predictions.predicted[i] == static_cast<int>(k);
            m.n_true += is_k[i];
            m.n_predicted += predicted;
            hits += is_k[i] && predicted;
        }
        if (m.n_predicted > 0)
            m.precision = static_cast<double>(hits) / static_cast<double>(m.n_predicted);
        if (m.n_true > 0) m.recall = static_cast<double>(hits) / static_cast<double>(m.n_true);
        if (m.n_true > 0 && m.n_true < n) {
            auto curve = pr_curve(scores, is_k);
            m.auc = pr_auc(curve);
            sum += *m.auc;
            ++defined;
            if (keep_curves) m.curve = std::move(curve);
        } else {
            ++report.n_undefined;
        }
        report.classes.push_back(std::move(m));
    }
    report.average_auc = defined > 0 ? sum / static_cast<double>(defined)
                                     : std::numeric_limits<double>::quiet_NaN();
    return report;
}

ExperimentReport cv_experiment(const CohortData& data, std::span<const std::size_t> rows,
                               const ExperimentConfig& config) {
    if (config.repetitions < 1) throw ConfigError("repetitions must be at least 1");
    if (config.folds < 2) throw ConfigError("folds must be at least 2");
    if (config.methods.empty()) throw ConfigError("no methods to evaluate");
    const int K = static_cast<int>(data.labels.n_classes());
    std::vector<int> truth;
    truth.reserve(rows.size());
    for (auto i : rows) {
        const auto& c = data.labels.labels.at(i);
        if (!c) throw DataError("tumor '" + data.labels.tumor_ids[i] + "' has no label");
        truth.push_back(*c);
    }

    const auto reps = static_cast<std::size_t>(config.repetitions);
    const auto F = static_cast<std::size_t>(config.folds);
    const auto M = config.methods.size();

    std::vector<std::vector<int>> fold_of(reps);
    for (std::size_t r = 0; r < reps; ++r)
        fold_of[r] = stratified_folds(truth, K, config.folds,
                                      derive_seed(config.seed, {static_cast<std::uint32_t>(r), 0u}));

    // pooled[rep][method][position in rows] -> K probabilities
    std::vector<std::vector<PredictionSet>> pooled(reps, std::vector<PredictionSet>(M));
    for (auto& per_rep : pooled)
        for (auto& ps : per_rep) {
            ps.class_names = data.labels.class_names;
            ps.tumor_ids.resize(rows.size());
            ps.probabilities.resize(rows.size());
            ps.predicted.resize(rows.size());
            ps.n_unseen.resize(rows.size());
        }
    std::atomic<std::size_t> nonconverged{0};

    parallel_for(reps * F * M, config.threads, [&](std::size_t job) {
        const std::size_t r = job / (F * M);
        const std::size_t f = (job / M) % F;
        const std::size_t m = job % M;
        std::vector<std::size_t> train, test, test_pos;
        for (std::size_t s = 0; s < rows.size(); ++s) {
            if (fold_of[r][s] == static_cast<int>(f)) {
                test.push_back(rows[s]);
                test_pos.push_back(s);
            } else {
                train.push_back(rows[s]);
            }
        }
        TrainOptions options;
        options.method = config.methods[m];
        options.nmi_top =
            options.method == Method::recorded_only ? config.nmi_top_recorded : config.nmi_top;
        options.cv = config.inner;
        options.cv.threads = 1;
        options.cv.seed = derive_seed(
            config.seed, {static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(f + 1)});
        const auto trained = train_model(data, train, options);
        if (trained.cv) nonconverged += trained.cv->nonconverged_fits;

        const auto pred = predict(trained.model, data.design, data.labels, data.meta, test);
        auto& out = pooled[r][m];
        for (std::size_t t = 0; t < test.size(); ++t) {
            const auto s = test_pos[t];
            out.tumor_ids[s] = pred.tumor_ids[t];
            out.probabilities[s] = pred.probabilities[t];
            out.predicted[s] = pred.predicted[t];
            out.n_unseen[s] = pred.n_unseen[t];
        }
    });

    ExperimentReport report;
    report.class_names = data.labels.class_names;
    report.methods = config.methods;
    report.nonconverged_fits = nonconverged.load();
    report.results.resize(reps);
    for (std::size_t r = 0; r < reps; ++r)
        for (std::size_t m = 0; m < M; ++m)
            report.results[r].push_back(one_vs_rest_report(pooled[r][m], truth, config.keep_curves));
    report.predictions = std::move(pooled);
    return report;
}

namespace {

void put(std::ostream& out, const std::optional<double>& v) {
    if (v && std::isfinite(*v))
        out << *v;
    else
        out << "NA";
}

struct MeanSd {
    std::optional<double> mean;
    std::optional<double> sd;
};

MeanSd mean_sd(const std::vector<double>& xs) {
    MeanSd out;
    if (xs.empty()) return out;
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    out.mean = mean;
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        out.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return out;
}

}  // namespace

void write_experiment_report(std::ostream& out, const ExperimentReport& report) {
    out << "repetition\tmethod\tclass\tauc\n" << std::setprecision(10);
    for (std::size_t r = 0; r < report.results.size(); ++r)
        for (std::size_t m = 0; m < report.methods.size(); ++m) {
            const auto& res = report.results[r][m];
            const auto method = to_string(report.methods[m]);
            for (const auto& c : res.classes) {
                out << r + 1 << '\t' << method << '\t' << c.class_name << '\t';
                put(out, c.auc);
                out << '\n';
            }
            out << r + 1 << '\t' << method << "\taverage\t";
            put(out, res.average_auc);
            out << '\n';
        }
}

void write_experiment_summary(std::ostream& out, const ExperimentReport& report) {
    out << "method\tclass\tmean_auc\tsd_auc\n" << std::setprecision(10);
    const std::size_t K = report.class_names.size();
    for (std::size_t m = 0; m < report.methods.size(); ++m) {
        const auto method = to_string(report.methods[m]);
        for (std::size_t k = 0; k <= K; ++k) {
            std::vector<double> xs;
            for (const auto& per_rep : report.results) {
                const auto& res = per_rep[m];
                const std::optional<double> v =
                    k < K ? res.classes[k].auc : std::optional<double>(res.average_auc);
                if (v && std::isfinite(*v)) xs.push_back(*v);
            }
            const auto s = mean_sd(xs);
            out << method << '\t' << (k < K ? report.class_names[k] : std::string("average")) << '\t';
            put(out, s.mean);
            out << '\t';
            put(out, s.sd);
            out << '\n';
        }
    }
}

void write_hard_metrics(std::ostream& out, const ExperimentReport& report) {
    out << "repetition\tmethod\tclass\tn_true\tn_predicted\tprecision\trecall\n"
        << std::setprecision(10);
    for (std::size_t r = 0; r < report.results.size(); ++r)
        for (std::size_t m = 0; m < report.methods.size(); ++m)
            for (const auto& c : report.results[r][m].classes) {
                out << r + 1 << '\t' << to_string(report.methods[m]) << '\t' << c.class_name << '\t'
                    << c.n_true << '\t' << c.n_predicted << '\t' << c.precision << '\t';
                put(out, c.recall);
                out << '\n';
            }
}

void write_pr_points(std::ostream& out, const ExperimentReport& report) {
    out << "repetition\tmethod\tclass\tthreshold\trecall\tprecision\n" << std::setprecision(10);
    for (std::size_t r = 0; r < report.results.size(); ++r)
        for (std::size_t m = 0; m < report.methods.size(); ++m)
            for (const auto& c : report.results[r][m].classes) {
                if (!c.curve) continue;
                for (const auto& pt : c.curve->points)
                    out << r + 1 << '\t' << to_string(report.methods[m]) << '\t' << c.class_name
                        << '\t' << pt.threshold << '\t' << pt.recall << '\t' << pt.precision << '\n';
            }
}

}  // namespace hgc
