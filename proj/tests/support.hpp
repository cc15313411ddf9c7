#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hgc/ingest.hpp"
#include "hgc/pipeline.hpp"
#include "hgc/simulate.hpp"
#include "hgc/solver.hpp"

namespace hgc::test {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
        path_ = std::filesystem::temp_directory_path() /
                ("hgc_test_" + std::to_string(stamp) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline MutationRecord snv(std::string tumor, std::string variant, std::string gene,
                          std::string ctx, char ref, char alt,
                          std::optional<std::string> type = std::nullopt) {
    return {std::move(tumor), std::move(variant), std::move(gene), std::move(ctx),
            std::string(1, ref), std::string(1, alt), std::move(type)};
}

// Dense random problem: n rows, q columns of Gaussian or 0/1 values, K classes
// drawn from a softmax of a random linear model.
inline FitProblem random_problem(std::mt19937_64& rng, std::size_t n, std::size_t q, int K,
                                 bool binary = false, double signal = 1.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::bernoulli_distribution coin(0.3);
    std::vector<std::vector<double>> x(n, std::vector<double>(q));
    for (auto& row : x)
        for (auto& v : row) v = binary ? (coin(rng) ? 1.0 : 0.0) : normal(rng);
    std::vector<std::vector<double>> b(q, std::vector<double>(static_cast<std::size_t>(K)));
    for (auto& row : b)
        for (auto& v : row) v = signal * normal(rng);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> eta(static_cast<std::size_t>(K), 0.0);
        for (std::size_t j = 0; j < q; ++j)
            for (int k = 0; k < K; ++k) eta[static_cast<std::size_t>(k)] += x[i][j] * b[j][static_cast<std::size_t>(k)];
        const auto p = softmax_probs(eta);
        labels[i] = std::discrete_distribution<int>(p.begin(), p.end())(rng);
    }
    // every class present at least once
    for (int k = 0; k < K && static_cast<std::size_t>(k) < n; ++k) labels[static_cast<std::size_t>(k)] = k;
    std::vector<RawColumn> raw(q);
    for (std::size_t j = 0; j < q; ++j) {
        raw[j].name = "x" + std::to_string(j);
        for (std::size_t i = 0; i < n; ++i)
            if (x[i][j] != 0.0) raw[j].entries.emplace_back(static_cast<std::uint32_t>(i), x[i][j]);
    }
    std::vector<std::string> names;
    for (int k = 0; k < K; ++k) names.push_back("c" + std::to_string(k));
    return FitProblem::from_columns(n, std::move(raw), std::move(labels), std::move(names));
}

// Unpenalized multinomial MLE with class 0 as reference, by damped Newton on
// the (K-1)(q+1) free parameters. Returns theta[(q+1) x (K-1)], row 0 the intercept.
inline Eigen::MatrixXd newton_oracle(const Eigen::MatrixXd& z, const std::vector<int>& y, int K) {
    const Eigen::Index n = z.rows(), q1 = z.cols() + 1, m = K - 1;
    Eigen::MatrixXd x(n, q1);
    x.col(0).setOnes();
    x.rightCols(z.cols()) = z;
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(q1 * m);
    auto nll = [&](const Eigen::VectorXd& t) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::VectorXd eta(K);
            eta[0] = 0.0;
            for (Eigen::Index k = 0; k < m; ++k) eta[k + 1] = x.row(i).dot(t.segment(k * q1, q1));
            const double top = eta.maxCoeff();
            s += top + std::log((eta.array() - top).exp().sum()) - eta[y[static_cast<std::size_t>(i)]];
        }
        return s;
    };
    for (int it = 0; it < 100; ++it) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(q1 * m);
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(q1 * m, q1 * m);
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::VectorXd eta(K);
            eta[0] = 0.0;
            for (Eigen::Index k = 0; k < m; ++k) eta[k + 1] = x.row(i).dot(theta.segment(k * q1, q1));
            Eigen::VectorXd p = (eta.array() - eta.maxCoeff()).exp();
            p /= p.sum();
            const Eigen::MatrixXd xx = x.row(i).transpose() * x.row(i);
            for (Eigen::Index a = 0; a < m; ++a) {
                const double ya = y[static_cast<std::size_t>(i)] == a + 1 ? 1.0 : 0.0;
                g.segment(a * q1, q1) += (p[a + 1] - ya) * x.row(i).transpose();
                for (Eigen::Index b = 0; b < m; ++b) {
                    const double w = (a == b ? p[a + 1] : 0.0) - p[a + 1] * p[b + 1];
                    h.block(a * q1, b * q1, q1, q1) += w * xx;
                }
            }
        }
        const Eigen::VectorXd step = h.ldlt().solve(g);
        double t = 1.0;
        const double base = nll(theta);
        while (nll(theta - t * step) > base - 1e-4 * t * g.dot(step) && t > 1e-10) t *= 0.5;
        theta -= t * step;
        if (step.norm() * t < 1e-13) break;
    }
    return Eigen::Map<Eigen::MatrixXd>(theta.data(), q1, m);
}

// A simulated cohort run through ingest and meta-feature construction.
struct SimFixture {
    SimTruth truth;
    SimCohort sim;
    Cohort cohort;
    MetaDesign meta;
    BurdenMatrix burden;

    explicit SimFixture(const SimConfig& config)
        : truth(generate_truth(config)), sim(generate_cohort(truth)) {
        const std::unordered_set<std::string> test(sim.test_ids.begin(), sim.test_ids.end());
        cohort = build_cohort(sim.records, test);
        meta = build_meta_design(cohort.design, sim.records, truth.space);
        burden = burden_matrix(cohort.design, meta, truth.space.p());
    }

    CohortData data() const { return {cohort.design, cohort.labels, meta, burden, truth.space}; }

    std::vector<std::size_t> train_rows() const {
        std::vector<std::size_t> rows(cohort.design.n_train);
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
        return rows;
    }
    std::vector<std::size_t> test_rows() const {
        std::vector<std::size_t> rows;
        for (std::size_t i = cohort.design.n_train; i < cohort.design.n_tumors; ++i) rows.push_back(i);
        return rows;
    }
};

inline SimConfig small_config(std::uint64_t seed) {
    SimConfig c;
    c.n_classes = 3;
    c.n_train = 150;
    c.n_test = 50;
    c.d1 = 300;
    c.d2 = 60;
    c.p_genes = 12;
    c.mutation_rate = 12.0;
    c.xi = 0.8;
    c.seed = seed;
    return c;
}

}  // namespace hgc::test
