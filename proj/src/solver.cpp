#include "hgc/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <map>
#include <random>

#include "hgc/error.hpp"
#include "hgc/parallel.hpp"

namespace hgc {

std::string_view to_string(PredictorKind kind) {
    switch (kind) {
        case PredictorKind::variant: return "variant";
        case PredictorKind::sbs: return "sbs";
        case PredictorKind::gene: return "gene";
        case PredictorKind::signature_group: return "signature_group";
    }
    return "unknown";
}

std::optional<PredictorKind> parse_predictor_kind(std::string_view text) {
    for (auto kind : {PredictorKind::variant, PredictorKind::sbs, PredictorKind::gene,
                      PredictorKind::signature_group})
        if (to_string(kind) == text) return kind;
    return std::nullopt;
}

double column_sd(std::size_t n_rows, std::span<const std::pair<std::uint32_t, double>> entries) {
    if (n_rows == 0) return 0.0;
    const double n = static_cast<double>(n_rows);
    double sum = 0.0;
    for (const auto& e : entries) sum += e.second;
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& e : entries) ss += (e.second - mean) * (e.second - mean);
    ss += (n - static_cast<double>(entries.size())) * mean * mean;
    return std::sqrt(std::max(ss, 0.0) / n);
}

FitProblem FitProblem::from_columns(std::size_t n_rows, std::vector<RawColumn> raw,
                                    std::vector<int> labels,
                                    std::vector<std::string> class_names) {
    if (labels.size() != n_rows) throw InputError("fit problem: label count differs from rows");
    for (int c : labels)
        if (c < 0 || c >= static_cast<int>(class_names.size()))
            throw InputError("fit problem: label out of range");
    FitProblem problem;
    problem.labels = std::move(labels);
    problem.class_names = std::move(class_names);

    std::vector<Eigen::Triplet<double>> triplets;
    for (auto& col : raw) {
        double sum = 0.0;
        for (const auto& [row, value] : col.entries) {
            if (row >= n_rows) throw InputError("fit problem: row index out of range");
            sum += value;
        }
        const double mean = n_rows > 0 ? sum / static_cast<double>(n_rows) : 0.0;
        const double sd = column_sd(n_rows, col.entries);
        if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
            problem.dropped.push_back({col.kind, std::move(col.name), 0.0});
            continue;
        }
        const auto j = static_cast<int>(problem.columns.size());
        for (const auto& [row, value] : col.entries)
            if (value != 0.0) triplets.emplace_back(static_cast<int>(row), j, value / sd);
        problem.columns.push_back({col.kind, std::move(col.name), sd});
    }
    problem.z.resize(static_cast<Eigen::Index>(n_rows),
                     static_cast<Eigen::Index>(problem.columns.size()));
    problem.z.setFromTriplets(triplets.begin(), triplets.end());
    problem.z.makeCompressed();
    return problem;
}

FitProblem FitProblem::subset_rows(std::span<const std::size_t> rows) const {
    FitProblem sub;
    sub.columns = columns;
    sub.dropped = dropped;
    sub.class_names = class_names;
    sub.labels.reserve(rows.size());
    std::vector<int> new_index(n(), -1);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        new_index[rows[r]] = static_cast<int>(r);
        sub.labels.push_back(labels[rows[r]]);
    }
    std::vector<Eigen::Triplet<double>> triplets;
    for (Eigen::Index j = 0; j < z.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(z, j); it; ++it)
            if (const int r = new_index[it.row()]; r >= 0)
                triplets.emplace_back(r, static_cast<int>(j), it.value());
    sub.z.resize(static_cast<Eigen::Index>(rows.size()), z.cols());
    sub.z.setFromTriplets(triplets.begin(), triplets.end());
    sub.z.makeCompressed();
    return sub;
}

Coefficients Coefficients::zeros(std::size_t q, int n_classes) {
    return {Eigen::VectorXd::Zero(n_classes),
            Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(q), n_classes)};
}

std::vector<double> softmax_probs(std::span<const double> eta) {
    std::vector<double> p(eta.size());
    if (eta.empty()) return p;
    const double top = *std::max_element(eta.begin(), eta.end());
    double total = 0.0;
    for (std::size_t k = 0; k < eta.size(); ++k) {
        p[k] = std::exp(eta[k] - top);
        total += p[k];
    }
    for (auto& v : p) v /= total;
    return p;
}

double negative_log_prob(std::span<const double> eta, int label) {
    const double top = *std::max_element(eta.begin(), eta.end());
    double total = 0.0;
    for (double e : eta) total += std::exp(e - top);
    return top + std::log(total) - eta[static_cast<std::size_t>(label)];
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Loss and residual P - Y from a linear predictor. residual may be null.
double evaluate_eta(const RowMatrix& eta, std::span<const int> labels, RowMatrix* residual) {
    const auto K = eta.cols();
    double loss = 0.0;
    if (residual) residual->resize(eta.rows(), K);
    for (Eigen::Index i = 0; i < eta.rows(); ++i) {
        const double* e = eta.data() + i * K;
        double top = e[0];
        for (Eigen::Index k = 1; k < K; ++k) top = std::max(top, e[k]);
        double total = 0.0;
        if (residual) {
            double* r = residual->data() + i * K;
            for (Eigen::Index k = 0; k < K; ++k) {
                r[k] = std::exp(e[k] - top);
                total += r[k];
            }
            const double inv = 1.0 / total;
            for (Eigen::Index k = 0; k < K; ++k) r[k] *= inv;
            r[labels[i]] -= 1.0;
        } else {
            for (Eigen::Index k = 0; k < K; ++k) total += std::exp(e[k] - top);
        }
        loss += top + std::log(total) - e[labels[i]];
    }
    return loss;
}

RowMatrix eta_of(const SparseMatrix& z, const Eigen::VectorXd& intercept,
                 const Eigen::MatrixXd& weights) {
    RowMatrix eta = z * weights;
    eta.rowwise() += intercept.transpose();
    return eta;
}

// Gradient block of column j (K entries) from the residual P - Y.
Eigen::VectorXd column_gradient(const SparseMatrix& z, const RowMatrix& residual, Eigen::Index j) {
    const auto K = residual.cols();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(K);
    for (SparseMatrix::InnerIterator it(z, j); it; ++it) {
        const double* r = residual.data() + it.row() * K;
        for (Eigen::Index k = 0; k < K; ++k) g[k] += it.value() * r[k];
    }
    return g;
}

// Worst violation of the optimality conditions over `cols` and the intercept,
// measured in gradient units (an inactive group contributes its excess over lambda).
double kkt_residual(const SparseMatrix& z, const RowMatrix& residual, const Coefficients& x,
                    std::span<const int> cols, double lambda, std::vector<Eigen::VectorXd>* grads) {
    double worst = residual.rows() ? residual.colwise().sum().cwiseAbs().maxCoeff() : 0.0;
    if (grads) grads->resize(cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) {
        const int j = cols[c];
        Eigen::VectorXd g = column_gradient(z, residual, j);
        const double nw = x.weights.row(j).norm();
        if (nw > 0)
            worst = std::max(worst, (g + lambda * x.weights.row(j).transpose() / nw).cwiseAbs().maxCoeff());
        else
            worst = std::max(worst, g.norm() - lambda);
        if (grads) (*grads)[c] = std::move(g);
    }
    return worst;
}

// out = m v for a small dense matrix, by plain loops.
void small_matvec(const Eigen::MatrixXd& m, const double* v, double* out) {
    const auto K = m.rows();
    for (Eigen::Index a = 0; a < K; ++a) out[a] = 0.0;
    for (Eigen::Index b = 0; b < m.cols(); ++b) {
        const double* col = m.data() + b * K;
        const double vb = v[b];
        for (Eigen::Index a = 0; a < K; ++a) out[a] += col[a] * vb;
    }
}

// out = m^T v
void small_matvec_t(const Eigen::MatrixXd& m, const double* v, double* out) {
    const auto K = m.rows();
    for (Eigen::Index b = 0; b < m.cols(); ++b) {
        const double* col = m.data() + b * K;
        double s = 0.0;
        for (Eigen::Index a = 0; a < K; ++a) s += col[a] * v[a];
        out[b] = s;
    }
}

// argmin_v 1/2 v^T A v - b^T v + lambda ||v|| for symmetric positive
// semidefinite A = Q diag(evals) Q^T, evals clipped at zero. The nonzero
// solution satisfies v = (A + lambda/r I)^+ b with r = ||v||, found by
// safeguarded Newton on r starting from guess (if positive). c is scratch of
// size K. Returns ||out||.
double quadratic_group_prox(const Eigen::MatrixXd& Q, const Eigen::VectorXd& evals,
                            const double* b, double lambda, double guess, double* c, double* out) {
    const auto K = Q.rows();
    small_matvec_t(Q, b, c);
    double cc = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) cc += c[k] * c[k];
    if (cc <= lambda * lambda) {
        for (Eigen::Index k = 0; k < K; ++k) out[k] = 0.0;
        return 0.0;
    }
    const double* ev = evals.data();
    if (lambda == 0.0) {
        const double floor = 1e-12 * std::max(evals.maxCoeff(), 1e-300);
        for (Eigen::Index k = 0; k < K; ++k) c[k] = ev[k] > floor ? c[k] / ev[k] : 0.0;
        small_matvec(Q, c, out);
        double nn = 0.0;
        for (Eigen::Index k = 0; k < K; ++k) nn += out[k] * out[k];
        return std::sqrt(nn);
    }
    // psi(r) = sum c_k^2 / (ev_k r + lambda)^2 - 1 decreases in r; psi(0) > 0.
    auto psi = [&](double r, double* slope) {
        double s = 0.0, ds = 0.0;
        for (Eigen::Index k = 0; k < K; ++k) {
            const double inv = 1.0 / (ev[k] * r + lambda);
            const double t = c[k] * c[k] * inv * inv;
            s += t;
            ds -= 2.0 * t * ev[k] * inv;
        }
        if (slope) *slope = ds;
        return s - 1.0;
    };
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double r = guess > 0 ? guess : 1.0;
    for (int it = 0; it < 300; ++it) {
        double slope = 0.0;
        const double value = psi(r, &slope);
        if (value > 0) lo = r; else hi = r;
        if (value == 0.0) break;
        double next = slope < 0 ? r - value / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * r;
        if (std::abs(next - r) <= 1e-14 * r) {
            r = next;
            break;
        }
        r = next;
    }
    for (Eigen::Index k = 0; k < K; ++k) c[k] *= r / (ev[k] * r + lambda);
    small_matvec(Q, c, out);
    return r;
}

struct Direction {
    Eigen::VectorXd intercept;
    Eigen::MatrixXd weights;  // rows of `cols` only are meaningful
    int sweeps = 0;
};

// Adds z1 * (diag(p) - p p^T) to m1 and z2 * (diag(p) - p p^T) to m2, upper
// triangle only.
void add_softmax_hessian(Eigen::MatrixXd& m1, Eigen::MatrixXd& m2, const double* p, double z1,
                         double z2) {
    const auto K = m1.rows();
    for (Eigen::Index a = 0; a < K; ++a) {
        m1(a, a) += z1 * p[a];
        m2(a, a) += z2 * p[a];
        for (Eigen::Index b = a; b < K; ++b) {
            const double pp = p[a] * p[b];
            m1(a, b) -= z1 * pp;
            m2(a, b) -= z2 * pp;
        }
    }
}

void add_softmax_hessian(Eigen::MatrixXd& m, const double* p, double z) {
    const auto K = m.rows();
    for (Eigen::Index a = 0; a < K; ++a) {
        m(a, a) += z * p[a];
        for (Eigen::Index b = a; b < K; ++b) m(a, b) -= z * p[a] * p[b];
    }
}

void fill_lower(Eigen::MatrixXd& m) {
    m.triangularView<Eigen::StrictlyLower>() = m.transpose().triangularView<Eigen::StrictlyLower>();
}

// Anderson extrapolation from iterates x_0..x_M: the affine combination of
// x_1..x_M whose weights minimize the norm of the combined differences.
bool anderson_point(const std::vector<Eigen::VectorXd>& xs, Eigen::VectorXd& out) {
    const auto M = static_cast<Eigen::Index>(xs.size()) - 1;
    if (M < 2) return false;
    Eigen::MatrixXd diff(xs.front().size(), M);
    for (Eigen::Index k = 0; k < M; ++k) diff.col(k) = xs[static_cast<std::size_t>(k + 1)] - xs[static_cast<std::size_t>(k)];
    Eigen::MatrixXd gram = diff.transpose() * diff;
    gram.diagonal().array() += 1e-12 * std::max(gram.trace(), 1e-300);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success) return false;
    const Eigen::VectorXd z = ldlt.solve(Eigen::VectorXd::Ones(M));
    const double total = z.sum();
    if (!std::isfinite(total) || std::abs(total) < 1e-300) return false;
    out.setZero(xs.front().size());
    for (Eigen::Index k = 0; k < M; ++k) out += (z[k] / total) * xs[static_cast<std::size_t>(k + 1)];
    return out.allFinite();
}

// Minimizes the second-order model of the loss around x plus the group
// penalty over the working set, by exact group coordinate descent. Each
// row's curvature is its softmax Hessian diag(p_i) - p_i p_i^T. Columns are
// centered (internally) and the unpenalized intercept is re-solved after
// every group step, so the groups see an intercept that is always optimal.
// Cycles over the nonzero groups are sped up by Anderson extrapolation,
// kept only when it lowers the model.
Direction newton_direction(const SparseMatrix& z, const RowMatrix& residual,
                           std::span<const int> labels, const Coefficients& x,
                           std::span<const int> cols, double lambda, double tol, int max_sweeps) {
    const auto n = residual.rows();
    const auto K = residual.cols();
    RowMatrix prob = residual;
    for (Eigen::Index i = 0; i < n; ++i) prob(i, labels[static_cast<std::size_t>(i)]) += 1.0;

    Eigen::MatrixXd total_h = Eigen::MatrixXd::Zero(K, K);
    for (Eigen::Index i = 0; i < n; ++i) add_softmax_hessian(total_h, prob.data() + i * K, 1.0);
    fill_lower(total_h);
    Eigen::MatrixXd total_pinv = Eigen::MatrixXd::Zero(K, K);
    Eigen::Index rank = 0;
    {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(total_h);
        const auto& ev = eig.eigenvalues();
        const double cut = 1e-10 * std::max(ev.maxCoeff(), 1e-300);
        for (Eigen::Index k = 0; k < K; ++k)
            if (ev[k] > cut) {
                total_pinv += eig.eigenvectors().col(k) * eig.eigenvectors().col(k).transpose() / ev[k];
                ++rank;
            }
    }
    // Gradient sums are orthogonal to the all-ones vector, the null space of
    // every softmax Hessian. Unless total_h loses more rank than that, the
    // intercept solve leaves no gradient imbalance behind.
    const bool degenerate = rank < K - 1;
    const Eigen::MatrixXd leftover =
        Eigen::MatrixXd::Identity(K, K) - total_h * total_pinv;

    const double nd = static_cast<double>(n);
    const std::size_t m = cols.size();
    std::vector<double> mean(m), scale(m);
    // cross: sum_i z_ij H_i; shift: change of e per unit step of group j
    // with the intercept re-solved; imbalance: gradient imbalance it leaves.
    std::vector<Eigen::MatrixXd> cross(m), basis(m), curv(m), shift(m), imbalance(m);
    std::vector<Eigen::VectorXd> evals(m);
    for (std::size_t c = 0; c < m; ++c) {
        Eigen::MatrixXd first = Eigen::MatrixXd::Zero(K, K), second = Eigen::MatrixXd::Zero(K, K);
        double sum = 0.0;
        bool constant = true;
        const double* values = z.valuePtr() + z.outerIndexPtr()[cols[c]];
        const auto count = z.outerIndexPtr()[cols[c] + 1] - z.outerIndexPtr()[cols[c]];
        for (int t = 1; t < count && constant; ++t) constant = values[t] == values[0];
        if (constant && count > 0) {
            for (SparseMatrix::InnerIterator it(z, cols[c]); it; ++it)
                add_softmax_hessian(first, prob.data() + it.row() * K, 1.0);
            fill_lower(first);
            second = values[0] * values[0] * first;
            first *= values[0];
            sum = values[0] * static_cast<double>(count);
        } else {
            for (SparseMatrix::InnerIterator it(z, cols[c]); it; ++it) {
                add_softmax_hessian(first, second, prob.data() + it.row() * K, it.value(),
                                    it.value() * it.value());
                sum += it.value();
            }
            fill_lower(first);
            fill_lower(second);
        }
        mean[c] = sum / nd;
        const Eigen::MatrixXd pushed = first - mean[c] * total_h;
        shift[c] = -mean[c] * Eigen::MatrixXd::Identity(K, K) - total_pinv * pushed;
        if (degenerate) imbalance[c] = leftover * pushed;
        const Eigen::MatrixXd a = second - 2.0 * mean[c] * first + mean[c] * mean[c] * total_h;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
        basis[c] = eig.eigenvectors();
        evals[c] = eig.eigenvalues().cwiseMax(0.0);
        scale[c] = evals[c].maxCoeff();
        curv[c] = basis[c] * evals[c].asDiagonal() * basis[c].transpose();
        cross[c] = std::move(first);
    }

    // Model gradient at row i is u_i + H_i e: u holds the sparse part, e the
    // common shift of every row (the uncentered intercept step so far).
    RowMatrix u(n, K);
    Eigen::VectorXd sum_u(K), e(K), balance(K), rhs(K), fix(K);
    Eigen::VectorXd g(K), old(K), b(K), next(K), delta(K), scratch(K);
    auto solve_intercept = [&] {
        small_matvec(total_h, e.data(), rhs.data());
        rhs += sum_u;
        small_matvec(total_pinv, rhs.data(), fix.data());
        e -= fix;
        small_matvec(total_h, e.data(), balance.data());
        balance += sum_u;
    };

    Eigen::MatrixXd w = x.weights;
    // Rebuilds u, sum_u and e from w and returns the model value.
    RowMatrix moved(n, K);
    auto reset_state = [&] {
        moved.setZero();
        double penalty = 0.0;
        for (int j : cols) {
            delta = (w.row(j) - x.weights.row(j)).transpose();
            penalty += w.row(j).norm();
            if (delta.squaredNorm() == 0.0) continue;
            for (SparseMatrix::InnerIterator it(z, j); it; ++it) {
                double* s = moved.data() + it.row() * K;
                for (Eigen::Index k = 0; k < K; ++k) s[k] += it.value() * delta[k];
            }
        }
        sum_u.setZero();
        for (Eigen::Index i = 0; i < n; ++i) {
            const double* p = prob.data() + i * K;
            const double* s = moved.data() + i * K;
            double ps = 0.0;
            for (Eigen::Index k = 0; k < K; ++k) ps += p[k] * s[k];
            for (Eigen::Index k = 0; k < K; ++k) {
                u(i, k) = residual(i, k) + p[k] * (s[k] - ps);
                sum_u[k] += u(i, k);
            }
        }
        e.setZero();
        solve_intercept();
        double value = lambda * penalty;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double* p = prob.data() + i * K;
            double pd = 0.0;
            for (Eigen::Index k = 0; k < K; ++k) pd += p[k] * (moved(i, k) + e[k]);
            for (Eigen::Index k = 0; k < K; ++k) {
                const double d = moved(i, k) + e[k];
                value += residual(i, k) * d + 0.5 * d * p[k] * (d - pd);
            }
        }
        return value;
    };
    reset_state();

    auto update = [&](std::size_t c) {
        const int j = cols[c];
        if (!(scale[c] > 0)) return 0.0;
        double* gp = g.data();
        small_matvec(cross[c], e.data(), gp);
        if (degenerate)
            for (Eigen::Index k = 0; k < K; ++k) gp[k] -= mean[c] * balance[k];
        for (SparseMatrix::InnerIterator it(z, j); it; ++it) {
            const double* ui = u.data() + it.row() * K;
            const double v = it.value();
            for (Eigen::Index k = 0; k < K; ++k) gp[k] += v * ui[k];
        }
        double norm_old = 0.0;
        for (Eigen::Index k = 0; k < K; ++k) {
            old[k] = w(j, k);
            norm_old += old[k] * old[k];
        }
        small_matvec(curv[c], old.data(), b.data());
        for (Eigen::Index k = 0; k < K; ++k) b[k] -= gp[k];
        quadratic_group_prox(basis[c], evals[c], b.data(), lambda, std::sqrt(norm_old),
                             scratch.data(), next.data());
        double change = 0.0;
        for (Eigen::Index k = 0; k < K; ++k) {
            delta[k] = next[k] - old[k];
            change = std::max(change, std::abs(delta[k]));
        }
        if (change == 0.0) return 0.0;
        for (SparseMatrix::InnerIterator it(z, j); it; ++it) {
            const double* p = prob.data() + it.row() * K;
            double* ui = u.data() + it.row() * K;
            double pd = 0.0;
            for (Eigen::Index k = 0; k < K; ++k) pd += p[k] * delta[k];
            const double v = it.value();
            for (Eigen::Index k = 0; k < K; ++k) ui[k] += v * p[k] * (delta[k] - pd);
        }
        small_matvec(shift[c], delta.data(), fix.data());
        e += fix;
        if (degenerate) {
            small_matvec(imbalance[c], delta.data(), fix.data());
            balance += fix;
        }
        for (Eigen::Index k = 0; k < K; ++k) w(j, k) = next[k];
        return scale[c] * change;
    };

    constexpr int kHistory = 5;
    std::vector<std::size_t> all(m);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::vector<Eigen::VectorXd> history;
    Eigen::VectorXd flat, saved;
    auto flatten = [&](const std::vector<std::size_t>& active, Eigen::VectorXd& out) {
        out.resize(static_cast<Eigen::Index>(active.size()) * K);
        for (std::size_t a = 0; a < active.size(); ++a)
            out.segment(static_cast<Eigen::Index>(a) * K, K) = w.row(cols[active[a]]).transpose();
    };
    auto unflatten = [&](const std::vector<std::size_t>& active, const Eigen::VectorXd& in) {
        for (std::size_t a = 0; a < active.size(); ++a)
            w.row(cols[active[a]]) = in.segment(static_cast<Eigen::Index>(a) * K, K).transpose();
    };

    Direction d;
    while (d.sweeps < max_sweeps) {
        ++d.sweeps;
        double change = 0.0;
        for (auto c : all) change = std::max(change, update(c));
        if (change < tol) break;
        // cycle over the nonzero groups until they settle, then sweep everything again
        std::vector<std::size_t> active;
        for (auto c : all)
            if (w.row(cols[c]).squaredNorm() > 0) active.push_back(c);
        history.clear();
        while (d.sweeps < max_sweeps) {
            ++d.sweeps;
            double inner = 0.0;
            for (auto c : active) inner = std::max(inner, update(c));
            if (inner < tol) break;
            flatten(active, flat);
            history.push_back(flat);
            if (history.size() == kHistory + 1) {
                if (anderson_point(history, saved)) {
                    const double current = reset_state();
                    unflatten(active, saved);
                    if (!(reset_state() < current)) {
                        unflatten(active, history.back());
                        reset_state();
                    }
                }
                history.clear();
            }
        }
    }
    d.intercept = e;
    d.weights = w - x.weights;
    return d;
}

}  // namespace

Eigen::MatrixXd linear_predictor(const FitProblem& problem, const Coefficients& coef) {
    return eta_of(problem.z, coef.intercept, coef.weights);
}

double negative_log_likelihood(const FitProblem& problem, const Coefficients& coef) {
    return evaluate_eta(eta_of(problem.z, coef.intercept, coef.weights), problem.labels, nullptr);
}

double group_penalty(const Eigen::MatrixXd& weights) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < weights.rows(); ++j) total += weights.row(j).norm();
    return total;
}

double objective(const FitProblem& problem, const Coefficients& coef, double lambda) {
    return negative_log_likelihood(problem, coef) + lambda * group_penalty(coef.weights);
}

Coefficients smooth_gradient(const FitProblem& problem, const Coefficients& coef) {
    RowMatrix residual;
    evaluate_eta(eta_of(problem.z, coef.intercept, coef.weights), problem.labels, &residual);
    return {residual.colwise().sum().transpose(), problem.z.transpose() * residual};
}

Eigen::VectorXd group_soft_threshold(const Eigen::VectorXd& z, double gamma) {
    if (gamma < 0) throw InputError("group_soft_threshold: gamma must be nonnegative");
    const double norm = z.norm();
    if (norm <= gamma) return Eigen::VectorXd::Zero(z.size());
    return (1.0 - gamma / norm) * z;
}

Eigen::VectorXd null_intercepts(const FitProblem& problem) {
    const int K = problem.n_classes();
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(K);
    for (int c : problem.labels) counts[c] += 1.0;
    Eigen::VectorXd a(K);
    // absent classes get a large negative offset instead of -inf
    const double floor_count = 1e-8 * std::max<double>(1.0, static_cast<double>(problem.n()));
    for (int k = 0; k < K; ++k) a[k] = std::log(std::max(counts[k], floor_count));
    if (K > 0) a.array() -= a.mean();
    return a;
}

double lambda_max(const FitProblem& problem) {
    Coefficients null_coef = Coefficients::zeros(problem.q(), problem.n_classes());
    null_coef.intercept = null_intercepts(problem);
    const auto g = smooth_gradient(problem, null_coef);
    double top = 0.0;
    for (Eigen::Index j = 0; j < g.weights.rows(); ++j) top = std::max(top, g.weights.row(j).norm());
    return top;
}

KktReport kkt_check(const FitProblem& problem, const Coefficients& coef, double lambda,
                    double tol) {
    const auto g = smooth_gradient(problem, coef);
    KktReport report;
    report.intercept_residual = g.intercept.size() ? g.intercept.cwiseAbs().maxCoeff() : 0.0;
    for (Eigen::Index j = 0; j < coef.weights.rows(); ++j) {
        const double nb = coef.weights.row(j).norm();
        if (nb > 0) {
            const double r =
                (g.weights.row(j) + lambda * coef.weights.row(j) / nb).cwiseAbs().maxCoeff();
            report.active_residual = std::max(report.active_residual, r);
        } else {
            const double gn = g.weights.row(j).norm();
            const double ratio = lambda > 0 ? gn / lambda
                                 : gn > 0   ? std::numeric_limits<double>::infinity()
                                            : 0.0;
            report.inactive_ratio = std::max(report.inactive_ratio, ratio);
        }
    }
    report.satisfied = report.active_residual < tol && report.intercept_residual < tol &&
                       report.inactive_ratio <= 1.0 + tol;
    return report;
}

namespace {

FitResult fit_distinct(const FitProblem& problem, double lambda, const SolverOptions& options,
                       const WarmStart& warm) {
    const int K = problem.n_classes();
    const auto q = static_cast<Eigen::Index>(problem.q());
    const auto& z = problem.z;

    Coefficients x = Coefficients::zeros(problem.q(), K);
    x.intercept = null_intercepts(problem);
    if (warm.coef) {
        if (warm.coef->weights.rows() != q || warm.coef->weights.cols() != K)
            throw InputError("fit: warm start has wrong shape");
        x = *warm.coef;
    }
    RowMatrix eta = eta_of(z, x.intercept, x.weights);
    RowMatrix residual;
    double loss = evaluate_eta(eta, problem.labels, &residual);
    double value = loss + lambda * group_penalty(x.weights);

    // Strong-rule working set from the gradient at the starting point.
    std::vector<double> grad_norm(static_cast<std::size_t>(q));
    for (Eigen::Index j = 0; j < q; ++j)
        grad_norm[static_cast<std::size_t>(j)] = column_gradient(z, residual, j).norm();
    double reference = warm.coef ? warm.previous_lambda : 0.0;
    if (!warm.coef)
        for (double g : grad_norm) reference = std::max(reference, g);
    const double strong = 2.0 * lambda - std::max(reference, lambda);
    std::vector<char> in_set(static_cast<std::size_t>(q), 0);
    for (Eigen::Index j = 0; j < q; ++j)
        if (x.weights.row(j).squaredNorm() > 0 || grad_norm[static_cast<std::size_t>(j)] >= strong)
            in_set[static_cast<std::size_t>(j)] = 1;
    std::vector<int> cols;
    auto refresh_cols = [&] {
        cols.clear();
        for (Eigen::Index j = 0; j < q; ++j)
            if (in_set[static_cast<std::size_t>(j)]) cols.push_back(static_cast<int>(j));
    };
    refresh_cols();

    const double target = 0.8 * options.kkt_tol;
    FitResult result;
    result.lambda = lambda;
    int sweeps = 0;
    std::vector<Eigen::VectorXd> grads;
    while (true) {
        const double worst = kkt_residual(z, residual, x, cols, lambda, &grads);
        if (worst < target) {
            // Add groups outside the working set that violate optimality.
            bool grew = false;
            for (Eigen::Index j = 0; j < q; ++j) {
                if (in_set[static_cast<std::size_t>(j)]) continue;
                if (column_gradient(z, residual, j).norm() > lambda * (1.0 + target)) {
                    in_set[static_cast<std::size_t>(j)] = 1;
                    grew = true;
                }
            }
            if (!grew) break;
            refresh_cols();
            continue;
        }
        if (sweeps >= options.max_iter) break;

        const double inner_tol = std::max(0.5 * target, 0.1 * worst);
        const auto d = newton_direction(z, residual, problem.labels, x, cols, lambda, inner_tol,
                                        options.max_iter - sweeps);
        sweeps += d.sweeps;

        // Backtracking on the proximal Newton direction.
        double slope = residual.colwise().sum().dot(d.intercept.transpose());
        for (std::size_t c = 0; c < cols.size(); ++c)
            slope += grads[c].dot(d.weights.row(cols[c]).transpose());
        RowMatrix step_eta = RowMatrix::Zero(eta.rows(), K);
        for (int j : cols) {
            const Eigen::VectorXd dw = d.weights.row(j).transpose();
            if (dw.squaredNorm() == 0.0) continue;
            for (SparseMatrix::InnerIterator it(z, j); it; ++it)
                step_eta.row(it.row()) += it.value() * dw.transpose();
        }
        step_eta.rowwise() += d.intercept.transpose();

        bool accepted = false;
        double t = 1.0;
        for (int bt = 0; bt < 50; ++bt, t *= 0.5) {
            Coefficients trial{x.intercept + t * d.intercept, x.weights};
            for (int j : cols) trial.weights.row(j) += t * d.weights.row(j);
            const double penalty = lambda * group_penalty(trial.weights);
            const double decrease = t * slope + (penalty - lambda * group_penalty(x.weights));
            RowMatrix trial_eta = eta + t * step_eta;
            RowMatrix trial_residual;
            const double trial_loss = evaluate_eta(trial_eta, problem.labels, &trial_residual);
            const double trial_value = trial_loss + penalty;
            if (trial_value <= value + 1e-4 * std::min(decrease, 0.0) + 1e-13 * std::abs(value)) {
                x = std::move(trial);
                eta = std::move(trial_eta);
                residual = std::move(trial_residual);
                loss = trial_loss;
                value = trial_value;
                accepted = true;
                break;
            }
        }
        ++sweeps;
        if (!accepted) break;
    }

    result.coef = x;
    result.iterations = sweeps;
    result.deviance = 2.0 * loss;
    result.objective = value;
    for (Eigen::Index j = 0; j < q; ++j)
        if (result.coef.weights.row(j).squaredNorm() > 0) ++result.n_active;
    return result;
}

}  // namespace

FitResult fit(const FitProblem& problem, double lambda, const SolverOptions& options,
              const WarmStart& warm) {
    if (!(lambda >= 0)) throw InputError("fit: lambda must be nonnegative");
    const int K = problem.n_classes();
    const auto q = static_cast<Eigen::Index>(problem.q());
    if (warm.coef && (warm.coef->weights.rows() != q || warm.coef->weights.cols() != K))
        throw InputError("fit: warm start has wrong shape");

    // Identical columns (variants carried by exactly the same tumors) enter
    // the objective only through the sum of their groups, and the penalty is
    // smallest when the groups are parallel, so they are solved as one column
    // and the result split evenly between them.
    std::map<std::vector<std::pair<int, double>>, int> seen;
    std::vector<int> rep(static_cast<std::size_t>(q));
    std::vector<int> distinct;
    for (Eigen::Index j = 0; j < q; ++j) {
        std::vector<std::pair<int, double>> key;
        for (SparseMatrix::InnerIterator it(problem.z, j); it; ++it)
            key.emplace_back(static_cast<int>(it.row()), it.value());
        const auto [pos, added] = seen.emplace(std::move(key), static_cast<int>(distinct.size()));
        if (added) distinct.push_back(static_cast<int>(j));
        rep[static_cast<std::size_t>(j)] = pos->second;
    }

    FitResult result;
    if (distinct.size() == static_cast<std::size_t>(q)) {
        result = fit_distinct(problem, lambda, options, warm);
    } else {
        const auto m = static_cast<Eigen::Index>(distinct.size());
        FitProblem reduced;
        reduced.labels = problem.labels;
        reduced.class_names = problem.class_names;
        reduced.z.resize(problem.z.rows(), m);
        std::vector<Eigen::Triplet<double>> triplets;
        for (Eigen::Index r = 0; r < m; ++r)
            for (SparseMatrix::InnerIterator it(problem.z, distinct[static_cast<std::size_t>(r)]); it; ++it)
                triplets.emplace_back(static_cast<int>(it.row()), static_cast<int>(r), it.value());
        reduced.z.setFromTriplets(triplets.begin(), triplets.end());
        reduced.z.makeCompressed();
        reduced.columns.resize(static_cast<std::size_t>(m));

        Coefficients merged;
        WarmStart reduced_warm;
        if (warm.coef) {
            merged = {warm.coef->intercept, Eigen::MatrixXd::Zero(m, K)};
            for (Eigen::Index j = 0; j < q; ++j)
                merged.weights.row(rep[static_cast<std::size_t>(j)]) += warm.coef->weights.row(j);
            reduced_warm = {&merged, warm.previous_lambda};
        }
        const auto inner = fit_distinct(reduced, lambda, options, reduced_warm);
        std::vector<double> copies(static_cast<std::size_t>(m), 0.0);
        for (int r : rep) copies[static_cast<std::size_t>(r)] += 1.0;
        result = inner;
        result.coef = Coefficients::zeros(problem.q(), K);
        result.coef.intercept = inner.coef.intercept;
        result.n_active = 0;
        for (Eigen::Index j = 0; j < q; ++j) {
            const auto r = rep[static_cast<std::size_t>(j)];
            result.coef.weights.row(j) = inner.coef.weights.row(r) / copies[static_cast<std::size_t>(r)];
            if (result.coef.weights.row(j).squaredNorm() > 0) ++result.n_active;
        }
    }
    result.objective = objective(problem, result.coef, lambda);
    result.kkt = kkt_check(problem, result.coef, lambda, options.kkt_tol);
    result.converged = result.kkt.satisfied;
    return result;
}

std::vector<double> lambda_grid(double lambda_max, std::size_t n_lambda, double min_ratio) {
    if (n_lambda < 2) throw ConfigError("lambda grid needs at least two points");
    if (!(min_ratio > 0 && min_ratio < 1)) throw ConfigError("lambda min ratio must lie in (0,1)");
    if (!(lambda_max > 0)) return {0.0};
    std::vector<double> grid(n_lambda);
    const double log_hi = std::log(lambda_max);
    const double log_lo = std::log(lambda_max * min_ratio);
    for (std::size_t i = 0; i < n_lambda; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n_lambda - 1);
        grid[i] = std::exp(log_hi + t * (log_lo - log_hi));
    }
    grid.front() = lambda_max;
    grid.back() = lambda_max * min_ratio;
    return grid;
}

PenaltyPath fit_path(const FitProblem& problem, std::span<const double> lambdas,
                     const SolverOptions& options) {
    PenaltyPath path;
    path.lambdas.assign(lambdas.begin(), lambdas.end());
    path.fits.reserve(lambdas.size());
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        WarmStart warm;
        if (i > 0) {
            warm.coef = &path.fits.back().coef;
            warm.previous_lambda = path.fits.back().lambda;
        }
        path.fits.push_back(fit(problem, lambdas[i], options, warm));
    }
    return path;
}

PenaltyPath fit_path(const FitProblem& problem, std::size_t n_lambda, double min_ratio,
                     const SolverOptions& options) {
    const auto grid = lambda_grid(lambda_max(problem), n_lambda, min_ratio);
    return fit_path(problem, grid, options);
}

std::vector<int> stratified_folds(std::span<const int> labels, int n_classes, int folds,
                                  std::uint64_t seed) {
    if (folds < 2) throw ConfigError("cross-validation needs at least two folds");
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(n_classes));
    for (std::size_t i = 0; i < labels.size(); ++i)
        members[static_cast<std::size_t>(labels[i])].push_back(i);
    for (int k = 0; k < n_classes; ++k) {
        const auto size = members[static_cast<std::size_t>(k)].size();
        if (size < static_cast<std::size_t>(folds))
            throw ConfigError("class " + std::to_string(k) + " has " + std::to_string(size) +
                              " members, fewer than " + std::to_string(folds) +
                              " folds; use fewer folds");
    }
    std::mt19937_64 rng(seed);
    std::vector<int> fold_of(labels.size(), 0);
    std::size_t offset = 0;
    for (auto& m : members) {
        std::shuffle(m.begin(), m.end(), rng);
        for (std::size_t r = 0; r < m.size(); ++r)
            fold_of[m[r]] = static_cast<int>((offset + r) % static_cast<std::size_t>(folds));
        offset += m.size();
    }
    return fold_of;
}

CvResult cross_validate_lambda(const FitProblem& problem, const CvOptions& options) {
    const auto fold_of =
        stratified_folds(problem.labels, problem.n_classes(), options.folds, options.seed);
    CvResult cv;
    cv.lambdas = lambda_grid(lambda_max(problem), options.n_lambda, options.min_ratio);
    const std::size_t L = cv.lambdas.size();
    const auto F = static_cast<std::size_t>(options.folds);

    std::vector<std::vector<double>> fold_dev(F, std::vector<double>(L, 0.0));
    std::vector<std::size_t> fold_nonconverged(F, 0);
    parallel_for(F, options.threads, [&](std::size_t f) {
        std::vector<std::size_t> train, test;
        for (std::size_t i = 0; i < problem.n(); ++i)
            (static_cast<std::size_t>(fold_of[i]) == f ? test : train).push_back(i);
        const auto train_problem = problem.subset_rows(train);
        const auto test_problem = problem.subset_rows(test);
        const auto path = fit_path(train_problem, cv.lambdas, options.solver);
        for (std::size_t l = 0; l < L; ++l) {
            const auto& fitted = path.fits[l];
            if (!fitted.converged) ++fold_nonconverged[f];
            fold_dev[f][l] = 2.0 * negative_log_likelihood(test_problem, fitted.coef) /
                             static_cast<double>(test.size());
        }
    });

    cv.mean_deviance.assign(L, 0.0);
    cv.sd_deviance.assign(L, 0.0);
    for (std::size_t l = 0; l < L; ++l) {
        double mean = 0.0;
        for (std::size_t f = 0; f < F; ++f) mean += fold_dev[f][l];
        mean /= static_cast<double>(F);
        double ss = 0.0;
        for (std::size_t f = 0; f < F; ++f) ss += (fold_dev[f][l] - mean) * (fold_dev[f][l] - mean);
        cv.mean_deviance[l] = mean;
        cv.sd_deviance[l] = std::sqrt(ss / static_cast<double>(F - 1));
    }
    for (auto c : fold_nonconverged) cv.nonconverged_fits += c;
    cv.null_deviance = cv.mean_deviance.front();

    std::size_t best = 0;
    for (std::size_t l = 1; l < L; ++l)
        if (cv.mean_deviance[l] < cv.mean_deviance[best]) best = l;
    cv.chosen_index = best;
    if (options.rule == CvRule::one_se) {
        const double limit =
            cv.mean_deviance[best] + cv.sd_deviance[best] / std::sqrt(static_cast<double>(F));
        for (std::size_t l = 0; l <= best; ++l) {
            if (cv.mean_deviance[l] <= limit) {
                cv.chosen_index = l;
                break;
            }
        }
    }
    cv.chosen_lambda = cv.lambdas[cv.chosen_index];

    cv.full_path = fit_path(problem, cv.lambdas, options.solver);
    for (const auto& f : cv.full_path.fits) {
        cv.n_active.push_back(f.n_active);
        if (!f.converged) ++cv.nonconverged_fits;
    }
    return cv;
}

}  // namespace hgc
