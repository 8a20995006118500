#include "robmv/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

namespace robmv {

void SparsityConfig::validate(Index n) const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InputError("lambda must be finite and nonnegative");
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw InputError("mu must be finite and nonnegative");
    if (h != 0 && (h < 1 || h > n)) throw InputError("sparse LTS subset size must lie in [1, n]");
}

namespace {

double soft(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

struct PenalizedSolution {
    double intercept = 0.0;
    Vector slopes;
    int sweeps = 0;
};

// Slopes-only design; `scales` are the internal column scales (0 marks a constant column).
PenalizedSolution solve_penalized(const Matrix& X, const Vector& y, bool intercept, double lambda, double mu,
                                  const Vector& scales, const CoordinateDescentOptions& options,
                                  const Vector* warm = nullptr) {
    const Index p = X.cols();
    Vector x_center = Vector::Zero(p);
    double y_center = 0.0;
    if (intercept) {
        x_center = X.colwise().mean().transpose();
        y_center = y.mean();
    }
    Matrix Z = X.rowwise() - x_center.transpose();
    const Vector yc = y.array() - y_center;

    PenalizedSolution out;
    out.slopes = Vector::Zero(p);
    if (p == 0) {
        out.intercept = y_center;
        return out;
    }

    if (lambda == 0.0) {
        Matrix A = Z.transpose() * Z;
        A.diagonal().array() += mu;
        Eigen::LDLT<Matrix> ldlt(A);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
            Eigen::FullPivLU<Matrix>(A).rank() < p)
            throw SingularityError("unpenalized fit: design is rank deficient");
        out.slopes = ldlt.solve(Z.transpose() * yc);
        out.intercept = y_center - x_center.dot(out.slopes);
        return out;
    }

    const double kkt_tol = options.tol * std::max(1.0, 2.0 * (Z.transpose() * yc).cwiseAbs().maxCoeff());
    const Vector& s = scales;
    for (Index j = 0; j < p; ++j) {
        if (s[j] > 0.0) Z.col(j) /= s[j];
        else Z.col(j).setZero();
    }
    const Vector norms = Z.colwise().squaredNorm().transpose();

    Vector gamma = Vector::Zero(p);
    if (warm)
        for (Index j = 0; j < p; ++j) gamma[j] = s[j] > 0.0 ? (*warm)[j] * s[j] : 0.0;
    Vector r = yc - Z * gamma;

    auto update = [&](Index j) {
        if (s[j] <= 0.0 || norms[j] == 0.0) return 0.0;
        const double rho = Z.col(j).dot(r) + norms[j] * gamma[j];
        const double next = soft(2.0 * rho, lambda / s[j]) / (2.0 * (norms[j] + mu / (s[j] * s[j])));
        const double delta = next - gamma[j];
        if (delta != 0.0) {
            r.noalias() -= delta * Z.col(j);
            gamma[j] = next;
        }
        return std::abs(delta) * std::sqrt(norms[j]);
    };
    // Largest KKT violation in original units.
    auto violation = [&]() {
        double worst = 0.0;
        for (Index j = 0; j < p; ++j) {
            if (s[j] <= 0.0) continue;
            const double beta = gamma[j] / s[j];
            const double grad = -2.0 * Z.col(j).dot(r) * s[j] + 2.0 * mu * beta;
            const double v = beta != 0.0 ? std::abs(grad + lambda * (beta > 0 ? 1.0 : -1.0))
                                         : std::max(0.0, std::abs(grad) - lambda);
            worst = std::max(worst, v);
        }
        return worst;
    };

    int sweeps = 0;
    while (true) {
        for (Index j = 0; j < p; ++j) update(j);
        ++sweeps;
        // Cycle the active set to convergence before the next full sweep.
        while (sweeps < options.max_sweeps) {
            double change = 0.0;
            for (Index j = 0; j < p; ++j)
                if (gamma[j] != 0.0) change = std::max(change, update(j));
            ++sweeps;
            if (change <= 1e-3 * kkt_tol) break;
        }
        if (violation() <= kkt_tol) break;
        if (sweeps >= options.max_sweeps) {
            RegressionFit last;
            last.beta = Vector::Zero(p);
            for (Index j = 0; j < p; ++j)
                if (s[j] > 0.0) last.beta[j] = gamma[j] / s[j];
            throw ConvergenceError("coordinate descent did not reach the KKT tolerance", sweeps, last);
        }
    }

    for (Index j = 0; j < p; ++j) out.slopes[j] = s[j] > 0.0 ? gamma[j] / s[j] : 0.0;
    out.intercept = y_center - x_center.dot(out.slopes);
    out.sweeps = sweeps;
    return out;
}

Matrix slope_columns(const RegressionProblem& problem) {
    return problem.intercept ? Matrix(problem.X.rightCols(problem.p() - 1)) : problem.X;
}

Vector sd_scales(const Matrix& X, bool intercept) {
    Vector s(X.cols());
    for (Index j = 0; j < X.cols(); ++j) {
        const double c = intercept ? X.col(j).mean() : 0.0;
        s[j] = std::sqrt((X.col(j).array() - c).square().mean());
    }
    return s;
}

// MAD about the median per column; SD where the MAD vanishes.
Vector robust_scales(const Matrix& X, bool intercept) {
    const Vector sd = sd_scales(X, intercept);
    Vector s(X.cols());
    for (Index j = 0; j < X.cols(); ++j) {
        const double m = mad(X.col(j));
        s[j] = m > 0.0 ? m : sd[j];
    }
    return s;
}

Vector full_beta(const RegressionProblem& problem, const PenalizedSolution& sol) {
    if (!problem.intercept) return sol.slopes;
    Vector beta(problem.p());
    beta[0] = sol.intercept;
    beta.tail(problem.p() - 1) = sol.slopes;
    return beta;
}

IndexList support_of(const RegressionProblem& problem, const Vector& beta) {
    IndexList out;
    for (Index j = problem.intercept ? 1 : 0; j < beta.size(); ++j)
        if (beta[j] != 0.0) out.push_back(j);
    return out;
}

double l1_of_slopes(const RegressionProblem& problem, const Eigen::Ref<const Vector>& beta) {
    return problem.intercept ? beta.tail(beta.size() - 1).cwiseAbs().sum() : beta.cwiseAbs().sum();
}

struct SubsetSolver {
    const RegressionProblem& problem;
    Matrix slopes;
    Vector scales;
    const CoordinateDescentOptions& options;

    // Penalty m * lambda on a subset of m rows, so the per-row objective matches the trimmed one.
    Vector fit(const IndexList& rows, double lambda, const Vector* warm_slopes) const {
        const Matrix Xs = select_rows(slopes, rows);
        const Vector ys = select(problem.y, rows);
        const double m = double(rows.size());
        PenalizedSolution sol =
            solve_penalized(Xs, ys, problem.intercept, m * lambda, 0.0, scales, options, warm_slopes);
        return full_beta(problem, sol);
    }
};

Vector slopes_of(const RegressionProblem& problem, const Vector& beta) {
    return problem.intercept ? Vector(beta.tail(beta.size() - 1)) : beta;
}

ConcentrationResult concentrate(const SubsetSolver& solver, Vector beta, IndexList subset, Index h, double lambda,
                                int max_steps) {
    const RegressionProblem& problem = solver.problem;
    ConcentrationResult out;
    out.subset = std::move(subset);
    for (int step = 0; step < max_steps; ++step) {
        const Vector warm = beta.size() ? slopes_of(problem, beta) : Vector();
        beta = solver.fit(out.subset, lambda, beta.size() ? &warm : nullptr);
        ++out.steps;
        out.objective_trace.push_back(sparse_lts_objective(problem, beta, h, lambda));
        const Vector r = problem.y - problem.X * beta;
        IndexList next = smallest_h(r.cwiseAbs2(), h);
        if (next == out.subset) break;
        out.subset = std::move(next);
    }
    out.beta = std::move(beta);
    return out;
}

RegressionFit make_fit(const RegressionProblem& problem, const Vector& beta, const std::string& method) {
    RegressionFit fit;
    fit.beta = beta;
    fit.residuals = problem.y - problem.X * beta;
    fit.case_weights = Vector::Ones(problem.n());
    fit.info.method = method;
    fit.info.family = "quadratic";
    fit.info.support = support_of(problem, beta);
    const Index df = Index(fit.info.support.size()) + (problem.intercept ? 1 : 0);
    fit.sigma.method = "rmse";
    fit.sigma.value = problem.n() > df ? std::sqrt(fit.residuals.squaredNorm() / double(problem.n() - df)) : 0.0;
    return fit;
}

}  // namespace

RegressionFit enet_fit(const RegressionProblem& problem, double lambda, double mu,
                       const CoordinateDescentOptions& options) {
    problem.validate();
    SparsityConfig{lambda, mu, 0}.validate(problem.n());
    const Matrix X = slope_columns(problem);
    const PenalizedSolution sol =
        solve_penalized(X, problem.y, problem.intercept, lambda, mu, sd_scales(X, problem.intercept), options);
    RegressionFit fit = make_fit(problem, full_beta(problem, sol), mu > 0.0 ? "enet" : "lasso");
    fit.info.lambda = lambda;
    fit.info.mu = mu;
    fit.info.iterations = sol.sweeps;
    fit.info.penalty = mu > 0.0 ? "sum r^2 + lambda |b|_1 + mu |b|_2^2" : "sum r^2 + lambda |b|_1";
    return fit;
}

RegressionFit lasso_fit(const RegressionProblem& problem, double lambda, const CoordinateDescentOptions& options) {
    return enet_fit(problem, lambda, 0.0, options);
}

double sparse_lts_objective(const RegressionProblem& problem, const Eigen::Ref<const Vector>& beta, Index h,
                            double lambda) {
    Vector sq = (problem.y - problem.X * beta).array().square();
    std::sort(sq.data(), sq.data() + sq.size());
    return sq.head(h).sum() + double(h) * lambda * l1_of_slopes(problem, beta);
}

ConcentrationResult sparse_lts_concentrate(const RegressionProblem& problem, IndexList subset, Index h, double lambda,
                                           int max_steps, const CoordinateDescentOptions& solver) {
    problem.validate();
    SparsityConfig{lambda, 0.0, h}.validate(problem.n());
    const Matrix X = slope_columns(problem);
    const SubsetSolver sub{problem, X, robust_scales(X, problem.intercept), solver};
    return concentrate(sub, Vector(), std::move(subset), h, lambda, max_steps);
}

RegressionFit sparse_lts_fit(const RegressionProblem& problem, double lambda, Index h,
                             const SparseLtsOptions& options) {
    problem.validate();
    const Index n = problem.n();
    if (h == 0) h = Index(std::floor(0.75 * double(n)));
    SparsityConfig{lambda, 0.0, h}.validate(n);
    if (options.n_starts < 1 || options.keep_best < 1) throw InputError("sparse LTS needs at least one start");

    const Matrix X = slope_columns(problem);
    const SubsetSolver solver{problem, X, robust_scales(X, problem.intercept), options.solver};
    // Three points suffice for a penalized start; unpenalized fits need p points.
    const Index start_size = std::min(n, lambda > 0.0 ? Index(3) : problem.p());

    std::vector<std::optional<ConcentrationResult>> starts(options.n_starts);
    parallel_for(options.n_starts, options.threads, [&](Index i) {
        Rng rng = make_rng(options.seed, 0x5150, std::uint64_t(i));
        const IndexList rows = sample_without_replacement(n, start_size, rng);
        try {
            const Vector beta = solver.fit(rows, lambda, nullptr);
            const Vector r = problem.y - problem.X * beta;
            starts[i] = concentrate(solver, beta, smallest_h(r.cwiseAbs2(), h), h, lambda, options.initial_csteps);
        } catch (const SingularityError&) {
        } catch (const ConvergenceError&) {
        }
    });

    auto objective = [](const ConcentrationResult& c) { return c.objective_trace.back(); };
    std::vector<Index> order;
    for (Index i = 0; i < options.n_starts; ++i)
        if (starts[i]) order.push_back(i);
    if (order.empty()) throw DegenerateError("sparse LTS: every start failed");
    const Index skipped = options.n_starts - Index(order.size());
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return objective(*starts[a]) < objective(*starts[b]); });
    order.resize(std::min<Index>(Index(order.size()), options.keep_best));

    std::vector<std::optional<ConcentrationResult>> refined(order.size());
    parallel_for(Index(order.size()), options.threads, [&](Index k) {
        const ConcentrationResult& c = *starts[order[k]];
        try {
            ConcentrationResult more = concentrate(solver, c.beta, c.subset, h, lambda, options.max_csteps);
            more.steps += c.steps;
            refined[k] = std::move(more);
        } catch (const SingularityError&) {
        } catch (const ConvergenceError&) {
        }
    });

    std::optional<Index> best;
    for (Index k = 0; k < Index(refined.size()); ++k)
        if (refined[k] && (!best || objective(*refined[k]) < objective(*refined[*best]))) best = k;
    if (!best) throw DegenerateError("sparse LTS: every refinement failed");
    const ConcentrationResult& winner = *refined[*best];

    RegressionFit fit = make_fit(problem, winner.beta, "sparse-lts");
    fit.info.h = h;
    fit.info.lambda = lambda;
    fit.info.seed = options.seed;
    fit.info.n_subsamples = options.n_starts;
    fit.info.skipped_subsamples = skipped;
    fit.info.iterations = winner.steps;
    fit.info.subset = winner.subset;
    fit.info.objective_trace = winner.objective_trace;
    fit.info.penalty = "sum of h smallest r^2 + h lambda |b|_1";
    fit.sigma.value = trimmed_squares_scale(fit.residuals, h);
    fit.sigma.method = "trimmed-squares";
    fit.case_weights = Vector::Zero(n);
    for (Index i : winner.subset) fit.case_weights[i] = 1.0;
    return fit;
}

}  // namespace robmv
