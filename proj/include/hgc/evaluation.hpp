#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hgc/inference.hpp"
#include "hgc/pipeline.hpp"

namespace hgc {

struct PrPoint {
    double threshold = 0.0;
    double recall = 0.0;
    double precision = 0.0;
};

// Points ordered by descending threshold, one per distinct score.
struct PrCurve {
    std::vector<PrPoint> points;
    double prevalence = 0.0;
};

/// Throws DataError unless truth has at least one positive and one negative.
PrCurve pr_curve(std::span<const double> scores, std::span<const std::uint8_t> truth);

/// Trapezoid rule over recall, starting from (0, first precision).
double pr_auc(const PrCurve& curve);

struct ClassMetrics {
    std::string class_name;
    std::size_t n_true = 0;
    std::size_t n_predicted = 0;
    std::optional<double> auc;     // undefined when the class has no members
    double precision = 0.0;        // 0 when nothing is predicted as this class
    std::optional<double> recall;  // undefined when the class has no members
    std::optional<PrCurve> curve;
};

struct OneVsRestReport {
    std::vector<ClassMetrics> classes;
    double average_auc = 0.0;  // mean over classes with a defined AUC
    std::size_t n_undefined = 0;
};

/// truth holds 0-based class indices aligned with the prediction rows.
OneVsRestReport one_vs_rest_report(const PredictionSet& predictions, std::span<const int> truth,
                                   bool keep_curves = false);

struct ExperimentConfig {
    int repetitions = 5;
    int folds = 5;
    std::vector<Method> methods{Method::multilevel, Method::gene_only, Method::recorded_only};
    std::uint64_t seed = 1;
    std::size_t nmi_top = kDefaultNmiTop;
    std::size_t nmi_top_recorded = 1000;
    CvOptions inner;  // seed is replaced per job
    unsigned threads = 1;
    bool keep_curves = false;
};

struct ExperimentReport {
    std::vector<std::string> class_names;
    std::vector<Method> methods;
    // results[repetition][method]
    std::vector<std::vector<OneVsRestReport>> results;
    // pooled held-out predictions, aligned with the input rows
    std::vector<std::vector<PredictionSet>> predictions;
    std::size_t nonconverged_fits = 0;
};

/// Repeated stratified cross-validation over the labelled `rows`. Every
/// training split is screened, tuned, and fit on its own; test-fold
/// predictions are pooled per repetition before scoring.
ExperimentReport cv_experiment(const CohortData& data, std::span<const std::size_t> rows,
                               const ExperimentConfig& config);

/// repetition, method, class, auc (class "average" carries the average AUC)
void write_experiment_report(std::ostream& out, const ExperimentReport& report);
/// method, class, mean_auc, sd_auc
void write_experiment_summary(std::ostream& out, const ExperimentReport& report);
/// repetition, method, class, n_true, n_predicted, precision, recall
void write_hard_metrics(std::ostream& out, const ExperimentReport& report);
/// repetition, method, class, threshold, recall, precision
void write_pr_points(std::ostream& out, const ExperimentReport& report);

}  // namespace hgc
