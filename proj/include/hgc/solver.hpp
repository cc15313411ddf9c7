#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace hgc {

enum class PredictorKind { variant, sbs, gene, signature_group };

std::string_view to_string(PredictorKind kind);
std::optional<PredictorKind> parse_predictor_kind(std::string_view text);

struct PredictorColumn {
    PredictorKind kind = PredictorKind::variant;
    std::string name;
    double scale = 1.0;  // population standard deviation of the raw column
};

// Unscaled predictor column given as (row, value) pairs.
struct RawColumn {
    PredictorKind kind = PredictorKind::variant;
    std::string name;
    std::vector<std::pair<std::uint32_t, double>> entries;
};

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

/// Population standard deviation of an n-row column given by its nonzero entries.
double column_sd(std::size_t n_rows, std::span<const std::pair<std::uint32_t, double>> entries);

// Training data for one penalized fit. Every column of z has unit population
// standard deviation (it is not centered); each column forms one group of K
// coefficients.
struct FitProblem {
    SparseMatrix z;
    std::vector<PredictorColumn> columns;
    std::vector<PredictorColumn> dropped;  // zero-variance columns, excluded from z
    std::vector<int> labels;               // 0-based
    std::vector<std::string> class_names;

    std::size_t n() const noexcept { return labels.size(); }
    std::size_t q() const noexcept { return columns.size(); }
    int n_classes() const noexcept { return static_cast<int>(class_names.size()); }

    /// Scales each raw column by its standard deviation; drops constant columns.
    static FitProblem from_columns(std::size_t n_rows, std::vector<RawColumn> raw,
                                   std::vector<int> labels, std::vector<std::string> class_names);

    /// Row subset with the same columns and scales (used for cross-validation).
    FitProblem subset_rows(std::span<const std::size_t> rows) const;
};

// Intercepts (K) and per-column coefficient groups (q x K), on the scaled problem.
struct Coefficients {
    Eigen::VectorXd intercept;
    Eigen::MatrixXd weights;

    static Coefficients zeros(std::size_t q, int n_classes);
};

std::vector<double> softmax_probs(std::span<const double> eta);

/// log-sum-exp of one row minus the chosen entry, computed stably.
double negative_log_prob(std::span<const double> eta, int label);

Eigen::MatrixXd linear_predictor(const FitProblem& problem, const Coefficients& coef);
double negative_log_likelihood(const FitProblem& problem, const Coefficients& coef);
double group_penalty(const Eigen::MatrixXd& weights);

/// Negated penalized log-likelihood: -sum_i log p_{i,c_i} + lambda * sum_j ||w_j||_2.
double objective(const FitProblem& problem, const Coefficients& coef, double lambda);

/// Gradient of the unpenalized negative log-likelihood.
Coefficients smooth_gradient(const FitProblem& problem, const Coefficients& coef);

/// (1 - gamma / ||z||)_+ z
Eigen::VectorXd group_soft_threshold(const Eigen::VectorXd& z, double gamma);

/// Intercepts at the null model: centered log class proportions.
Eigen::VectorXd null_intercepts(const FitProblem& problem);

/// Smallest lambda at which every group is zero.
double lambda_max(const FitProblem& problem);

struct SolverOptions {
    int max_iter = 10000;  // coordinate sweeps plus Newton steps, per fit
    double kkt_tol = 1e-4;
};

struct KktReport {
    double active_residual = 0.0;   // max_j ||g_j + lambda w_j/||w_j|| ||_inf over active groups
    double inactive_ratio = 0.0;    // max_j ||g_j||_2 / lambda over inactive groups (inf if lambda=0 and g!=0)
    double intercept_residual = 0.0;
    bool satisfied = false;
};

KktReport kkt_check(const FitProblem& problem, const Coefficients& coef, double lambda,
                    double tol = 1e-4);

struct FitResult {
    Coefficients coef;
    double lambda = 0.0;
    double objective = 0.0;
    double deviance = 0.0;  // 2 * negative log-likelihood
    int iterations = 0;
    std::size_t n_active = 0;
    KktReport kkt;
    bool converged = false;
};

struct WarmStart {
    const Coefficients* coef = nullptr;
    double previous_lambda = 0.0;  // lambda the warm coefficients were fit at
};

/// Minimizes objective(problem, ., lambda) by proximal Newton steps: each
/// step minimizes the quadratic model of the loss plus the penalty by exact
/// group coordinate descent, then backtracks. Works on a strong-rule working
/// set that grows until the KKT certificate holds on every group; converged
/// reports that certificate at kkt_tol.
FitResult fit(const FitProblem& problem, double lambda, const SolverOptions& options = {},
              const WarmStart& warm = {});

struct PenaltyPath {
    std::vector<double> lambdas;
    std::vector<FitResult> fits;
};

/// n_lambda log-spaced values from lambda_max down to ratio * lambda_max.
std::vector<double> lambda_grid(double lambda_max, std::size_t n_lambda, double min_ratio);

PenaltyPath fit_path(const FitProblem& problem, std::span<const double> lambdas,
                     const SolverOptions& options = {});
PenaltyPath fit_path(const FitProblem& problem, std::size_t n_lambda, double min_ratio,
                     const SolverOptions& options = {});

enum class CvRule { min, one_se };

struct CvOptions {
    int folds = 10;
    std::size_t n_lambda = 50;
    double min_ratio = 0.01;
    CvRule rule = CvRule::min;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    SolverOptions solver;
};

struct CvResult {
    std::vector<double> lambdas;
    std::vector<double> mean_deviance;  // per held-out tumor, averaged over folds
    std::vector<double> sd_deviance;    // across folds
    std::vector<std::size_t> n_active;  // on the full problem
    std::size_t chosen_index = 0;
    double chosen_lambda = 0.0;
    double null_deviance = 0.0;  // mean_deviance at lambda_max
    PenaltyPath full_path;       // fits on the full problem
    std::size_t nonconverged_fits = 0;
};

/// Stratified fold ids in [0, folds) with classes spread evenly. Throws
/// ConfigError when a class has fewer members than folds.
std::vector<int> stratified_folds(std::span<const int> labels, int n_classes, int folds,
                                  std::uint64_t seed);

CvResult cross_validate_lambda(const FitProblem& problem, const CvOptions& options);

}  // namespace hgc
