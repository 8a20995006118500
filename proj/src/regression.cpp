#include "robmv/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

namespace robmv {

namespace {

constexpr double kExactFitTol = 1e-12;

bool is_exact(const Vector& r, const Vector& y) {
    const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
    return r.cwiseAbs().maxCoeff() <= kExactFitTol * scale;
}

// Solve the p x p system through the rows in `subset`; nullopt when singular.
std::optional<Vector> exact_fit(const Matrix& X, const Vector& y, const IndexList& subset) {
    Matrix A = select_rows(X, subset);
    Eigen::FullPivLU<Matrix> lu(A);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible()) return std::nullopt;
    return Vector(lu.solve(select(y, subset)));
}

double log_binomial(Index n, Index k) {
    return std::lgamma(double(n) + 1) - std::lgamma(double(k) + 1) - std::lgamma(double(n - k) + 1);
}

// Advances `c` to the next k-combination of [0, n) in lexicographic order.
bool next_combination(IndexList& c, Index n) {
    const Index k = Index(c.size());
    for (Index i = k - 1; i >= 0; --i) {
        if (c[i] < n - k + i) {
            ++c[i];
            for (Index j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
            return true;
        }
    }
    return false;
}

Vector psi_weights(const RhoFamily& family, const Vector& z) {
    Vector w(z.size());
    for (Index i = 0; i < z.size(); ++i) w[i] = rho_eval(family, z[i]).weight;
    return w;
}

double rho_objective(const RhoFamily& family, const Vector& r, double sigma) {
    double total = 0.0;
    for (Index i = 0; i < r.size(); ++i) total += rho(family, r[i] / sigma);
    return total;
}

Vector normalized_case_weights(const RhoFamily& family, const Vector& r, double sigma) {
    if (family.kind == RhoKind::absolute || !(sigma > 0)) return Vector::Ones(r.size());
    const double w0 = rho_eval(family, 0.0).weight;
    return psi_weights(family, r / sigma) / w0;
}

}  // namespace

RegressionProblem RegressionProblem::with_intercept(const Matrix& X, const Vector& y) {
    RegressionProblem out;
    out.X.resize(X.rows(), X.cols() + 1);
    out.X.col(0).setOnes();
    out.X.rightCols(X.cols()) = X;
    out.y = y;
    out.intercept = true;
    return out;
}

void RegressionProblem::validate() const {
    if (X.rows() == 0 || X.cols() == 0) throw InputError("regression: empty design");
    if (y.size() != X.rows()) throw InputError("regression: X and y row counts differ");
    require_finite(X, "design matrix");
    require_finite(y, "response");
    if (intercept && !(X.col(0).array() == 1.0).all())
        throw InputError("regression: intercept flag set but first column is not all ones");
}

Vector weighted_least_squares(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y,
                              const Eigen::Ref<const Vector>& w) {
    Vector sw = w.cwiseMax(0.0).cwiseSqrt();
    Matrix Xw = X.array().colwise() * sw.array();
    Vector yw = y.cwiseProduct(sw);
    Eigen::ColPivHouseholderQR<Matrix> qr(Xw);
    qr.setThreshold(1e-10);
    if (qr.rank() < X.cols()) throw SingularityError("weighted least squares: design is rank-deficient");
    return qr.solve(yw);
}

RegressionFit ols_fit(const RegressionProblem& problem) {
    problem.validate();
    const Index n = problem.n(), p = problem.p();
    RegressionFit fit;
    fit.beta = weighted_least_squares(problem.X, problem.y, Vector::Ones(n));
    fit.residuals = problem.y - problem.X * fit.beta;
    fit.sigma.method = "rmse";
    fit.sigma.value = n > p ? std::sqrt(fit.residuals.squaredNorm() / double(n - p)) : 0.0;
    fit.case_weights = Vector::Ones(n);
    fit.info.method = "ols";
    fit.info.family = "quadratic";
    fit.info.iterations = 1;
    return fit;
}

RegressionFit l1_fit(const RegressionProblem& problem, const IrwlsOptions& options) {
    RegressionFit fit = ols_fit(problem);
    fit.info = {};
    fit.info.method = "l1";
    fit.info.family = "absolute";
    Vector beta = fit.beta;
    Vector r = fit.residuals;
    fit.info.converged = false;
    fit.info.objective_trace.push_back(r.cwiseAbs().sum());
    for (int it = 1; it <= options.max_iter; ++it) {
        if (is_exact(r, problem.y)) {
            fit.info.converged = true;
            fit.info.iterations = it - 1;
            break;
        }
        Vector w = r.cwiseAbs().cwiseMax(1e-8).cwiseInverse();
        Vector next = weighted_least_squares(problem.X, problem.y, w);
        const double change = (next - beta).norm();
        beta = next;
        r = problem.y - problem.X * beta;
        fit.info.iterations = it;
        fit.info.objective_trace.push_back(r.cwiseAbs().sum());
        if (change <= options.tol * (beta.norm() + 1.0)) {
            fit.info.converged = true;
            break;
        }
    }
    fit.beta = beta;
    fit.residuals = r;
    fit.sigma = {};
    fit.sigma.method = "mad";
    fit.sigma.value = mad(r, true);
    fit.case_weights = Vector::Ones(problem.n());
    return fit;
}

RegressionFit m_fit(const RegressionProblem& problem, const RhoFamily& family, const MFitOptions& options) {
    problem.validate();
    if (family.kind == RhoKind::indicator) throw InputError("M-regression: indicator loss has no IRWLS weights");
    Vector beta;
    if (options.beta0) {
        if (options.beta0->size() != problem.p()) throw InputError("M-regression: start has wrong length");
        beta = *options.beta0;
    } else {
        if (family.bounded()) throw InputError("M-regression: bounded rho needs an explicit robust start");
        beta = l1_fit(problem).beta;
    }
    Vector r = problem.y - problem.X * beta;

    RegressionFit fit;
    fit.info.method = "m";
    fit.info.family = family.name();
    fit.info.k = family.k;
    if (is_exact(r, problem.y)) {
        fit.beta = beta;
        fit.residuals = r;
        fit.sigma.method = "exact-fit";
        fit.sigma.degenerate = true;
        fit.case_weights = Vector::Ones(problem.n());
        fit.info.iterations = 1;
        fit.info.objective_trace = {0.0};
        return fit;
    }

    double sigma = options.sigma ? *options.sigma : mad(r, true);
    if (!(sigma >= 0) || !std::isfinite(sigma)) throw InputError("M-regression: scale must be finite and >= 0");
    if (sigma == 0) throw DegenerateError("M-regression: residual scale is zero on non-exact data");
    fit.sigma.value = sigma;
    fit.sigma.method = options.sigma ? "fixed" : "mad";

    fit.info.converged = false;
    fit.info.objective_trace.push_back(rho_objective(family, r, sigma));
    for (int it = 1; it <= options.max_iter; ++it) {
        Vector w = psi_weights(family, r / sigma);
        if (!(w.maxCoeff() > 0)) throw DegenerateError("M-regression: all IRWLS weights are zero");
        Vector next = weighted_least_squares(problem.X, problem.y, w);
        const double change = (next - beta).norm();
        beta = next;
        r = problem.y - problem.X * beta;
        fit.info.iterations = it;
        fit.info.objective_trace.push_back(rho_objective(family, r, sigma));
        if (change <= options.tol * (beta.norm() + 1.0)) {
            fit.info.converged = true;
            break;
        }
    }
    if (!fit.info.converged)
        throw ConvergenceError("M-regression IRWLS did not converge", options.max_iter, beta);
    fit.beta = beta;
    fit.residuals = r;
    fit.case_weights = normalized_case_weights(family, r, sigma);
    return fit;
}

Index required_subsamples(Index p, double eps, double gamma) {
    if (p < 1) throw InputError("required_subsamples: p must be >= 1");
    if (!(eps >= 0 && eps < 1)) throw InputError("required_subsamples: eps outside [0,1)");
    if (!(gamma > 0 && gamma < 1)) throw InputError("required_subsamples: gamma outside (0,1)");
    const double clean = std::pow(1.0 - eps, double(p));
    if (clean >= 1.0) return 1;
    const double n = std::ceil(std::abs(std::log(gamma)) / std::abs(std::log1p(-clean)) - 1e-9);
    return std::max<Index>(1, Index(n));
}

Index required_subsamples_approx(Index p, double eps, double gamma) {
    if (p < 1) throw InputError("required_subsamples: p must be >= 1");
    if (!(eps >= 0 && eps < 1)) throw InputError("required_subsamples: eps outside [0,1)");
    if (!(gamma > 0 && gamma < 1)) throw InputError("required_subsamples: gamma outside (0,1)");
    const double clean = std::pow(1.0 - eps, double(p));
    return std::max<Index>(1, Index(std::ceil(std::abs(std::log(gamma)) / clean)));
}

Index default_h(Index n, Index p) { return (n + p + 1) / 2; }

namespace {

struct Candidate {
    double score = std::numeric_limits<double>::infinity();
    Vector beta;
    IndexList subset;
    bool valid = false;

    bool better_than(const Candidate& other) const {
        if (!valid) return false;
        if (!other.valid) return true;
        const double tol = 1e-12 * std::max(1.0, std::abs(other.score));
        if (score < other.score - tol) return true;
        if (score > other.score + tol) return false;
        return subset < other.subset;
    }
};

double candidate_scale(const ScaleSpec& spec, Index h, const Vector& r) {
    switch (spec.kind) {
        case ScaleSpec::Kind::quantile: return quantile_scale(r, h);
        case ScaleSpec::Kind::trimmed: return trimmed_squares_scale(r, h);
        case ScaleSpec::Kind::m_scale: return m_scale(r, spec.family, spec.delta).value;
    }
    return 0.0;
}

// Concentration steps: refit on the h smallest squared residuals until the subset repeats.
Candidate concentrate(const RegressionProblem& pr, Candidate c, Index h, int max_steps) {
    Vector r = pr.y - pr.X * c.beta;
    IndexList subset = smallest_h(r.cwiseAbs2(), h);
    for (int step = 0; step < max_steps; ++step) {
        Vector beta;
        try {
            beta = weighted_least_squares(select_rows(pr.X, subset), select(pr.y, subset), Vector::Ones(h));
        } catch (const SingularityError&) {
            break;
        }
        Vector rn = pr.y - pr.X * beta;
        IndexList next = smallest_h(rn.cwiseAbs2(), h);
        c.beta = beta;
        r = rn;
        if (next == subset) break;
        subset = std::move(next);
    }
    c.subset = smallest_h(r.cwiseAbs2(), h);
    c.score = trimmed_squares_scale(r, h);
    return c;
}

}  // namespace

RegressionFit scale_min_fit(const RegressionProblem& problem, const ScaleSpec& scale,
                            const SubsampleOptions& options) {
    problem.validate();
    const Index n = problem.n(), p = problem.p();
    if (n <= p) throw DimensionError("subsampling estimators need n > p");
    const Index h = scale.h > 0 ? scale.h : default_h(n, p);
    if (scale.kind != ScaleSpec::Kind::m_scale && (h < p || h > n))
        throw InputError("subset size h must lie in [p, n]");
    const Index N = options.n_subsamples > 0 ? options.n_subsamples : required_subsamples(p, 0.5, 0.01);
    const bool enumerate = options.enumerate_when_feasible && log_binomial(n, p) <= std::log(double(N)) + 1e-9;

    Candidate best;
    Index skipped = 0;
    Index evaluated = 0;
    auto consider = [&](const IndexList& subset, const Vector& beta) {
        Candidate c;
        c.beta = beta;
        c.subset = subset;
        c.valid = true;
        Vector r = problem.y - problem.X * beta;
        if (scale.kind == ScaleSpec::Kind::trimmed)
            c = concentrate(problem, c, h, options.max_csteps);
        else
            c.score = candidate_scale(scale, h, r);
        ++evaluated;
        if (c.better_than(best)) best = std::move(c);
    };

    if (enumerate) {
        IndexList subset(p);
        for (Index i = 0; i < p; ++i) subset[i] = i;
        do {
            if (auto beta = exact_fit(problem.X, problem.y, subset))
                consider(subset, *beta);
            else
                ++skipped;
        } while (next_combination(subset, n));
    } else {
        constexpr int kMaxRedraws = 100;
        for (Index k = 0; k < N; ++k) {
            for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
                Rng rng = make_rng(options.seed, std::uint64_t(k), std::uint64_t(attempt));
                IndexList subset = sample_without_replacement(n, p, rng);
                if (auto beta = exact_fit(problem.X, problem.y, subset)) {
                    consider(subset, *beta);
                    break;
                }
                ++skipped;
            }
        }
    }
    if (!best.valid) throw DegenerateError("every candidate subset was singular");

    RegressionFit fit;
    fit.info.n_subsamples = enumerate ? evaluated + skipped : N;
    fit.info.skipped_subsamples = skipped;
    fit.info.seed = options.seed;
    fit.info.subset = best.subset;
    fit.info.iterations = 0;
    Vector beta = best.beta;
    Vector r = problem.y - problem.X * beta;

    switch (scale.kind) {
        case ScaleSpec::Kind::quantile: {
            fit.info.method = "lms";
            fit.info.h = h;
            fit.sigma.value = quantile_scale(r, h);
            fit.sigma.method = "quantile";
            fit.case_weights = (r.cwiseAbs().array() <= fit.sigma.value * (1 + 1e-12)).cast<double>();
            break;
        }
        case ScaleSpec::Kind::trimmed: {
            fit.info.method = "lts";
            fit.info.h = h;
            fit.sigma.value = trimmed_squares_scale(r, h);
            fit.sigma.method = "trimmed-squares";
            fit.case_weights = Vector::Zero(n);
            for (Index i : best.subset) fit.case_weights[i] = 1.0;
            break;
        }
        case ScaleSpec::Kind::m_scale: {
            fit.info.method = "s";
            fit.info.family = scale.family.name();
            fit.info.k = scale.family.k;
            fit.info.delta = scale.delta;
            // IRWLS on the S estimating equations, re-solving the M-scale each pass.
            ScaleEstimate s = m_scale(r, scale.family, scale.delta);
            fit.info.objective_trace.push_back(s.value);
            fit.info.converged = false;
            for (int it = 1; it <= options.refine_max_iter && s.value > 0; ++it) {
                Vector w = psi_weights(scale.family, r / s.value);
                Vector next;
                try {
                    next = weighted_least_squares(problem.X, problem.y, w);
                } catch (const SingularityError&) {
                    fit.info.converged = true;
                    break;
                }
                Vector rn = problem.y - problem.X * next;
                ScaleEstimate sn = m_scale(rn, scale.family, scale.delta);
                const double change = (next - beta).norm();
                fit.info.iterations = it;
                if (sn.value > s.value * (1 + 1e-12)) {
                    fit.info.converged = true;
                    break;
                }
                beta = next;
                r = rn;
                s = sn;
                fit.info.objective_trace.push_back(s.value);
                if (change <= options.refine_tol * (beta.norm() + 1.0)) {
                    fit.info.converged = true;
                    break;
                }
            }
            if (s.value == 0) fit.info.converged = true;
            if (!fit.info.converged)
                throw ConvergenceError("S-estimator refinement did not converge", options.refine_max_iter, beta);
            fit.sigma = s;
            if (auto c = known_consistency(scale.family, scale.delta)) fit.sigma.consistency = *c;
            fit.case_weights = normalized_case_weights(scale.family, r, s.value);
            break;
        }
    }
    fit.beta = beta;
    fit.residuals = r;
    return fit;
}

RegressionFit lts_fit(const RegressionProblem& problem, Index h, const SubsampleOptions& options) {
    return scale_min_fit(problem, ScaleSpec::trimmed(h), options);
}

RegressionFit lms_fit(const RegressionProblem& problem, Index h, const SubsampleOptions& options) {
    return scale_min_fit(problem, ScaleSpec::quantile(h), options);
}

RegressionFit s_fit(const RegressionProblem& problem, const SubsampleOptions& options) {
    return scale_min_fit(problem, ScaleSpec::m(), options);
}

double bisquare_efficiency(double k) {
    if (!(k > 0)) throw InputError("bisquare efficiency: k must be positive");
    using boost::math::quadrature::gauss_kronrod;
    auto phi = [](double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); };
    auto dpsi = [&](double z) {
        const double u2 = (z / k) * (z / k);
        return (1 - u2) * (1 - 5 * u2) * phi(z);
    };
    auto psi2 = [&](double z) {
        const double u2 = (z / k) * (z / k);
        const double psi = z * (1 - u2) * (1 - u2);
        return psi * psi * phi(z);
    };
    const double a = gauss_kronrod<double, 61>::integrate(dpsi, -k, k, 15, 1e-14);
    const double b = gauss_kronrod<double, 61>::integrate(psi2, -k, k, 15, 1e-14);
    return a * a / b;
}

double bisquare_k_for_efficiency(double efficiency) {
    if (efficiency == 0.85) return 3.44;
    if (!(efficiency > 0.0 && efficiency < 1.0)) throw InputError("efficiency must lie in (0,1)");
    auto f = [&](double k) { return bisquare_efficiency(k) - efficiency; };
    double lo = 0.5, hi = 50.0;
    if (f(lo) > 0 || f(hi) < 0) throw InputError("efficiency outside the tabulated bisquare range");
    boost::uintmax_t iters = 200;
    auto root = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
    return 0.5 * (root.first + root.second);
}

RegressionFit mm_fit(const RegressionProblem& problem, const MMOptions& options) {
    const RhoFamily start_family = RhoFamily::bisquare(1.0);
    RegressionFit s = scale_min_fit(problem, ScaleSpec::m(start_family, 0.5), options.subsampling);
    const double raw = s.sigma.value;
    const double sigma = raw / options.scale_constant;
    const double k = bisquare_k_for_efficiency(options.efficiency);
    const RhoFamily family = RhoFamily::bisquare(k);

    RegressionFit fit;
    if (!(sigma > 0)) {
        // The S-estimate already fits at least half of the data exactly.
        fit = s;
    } else {
        MFitOptions m;
        m.sigma = sigma;
        m.beta0 = s.beta;
        m.tol = options.tol;
        m.max_iter = options.max_iter;
        fit = m_fit(problem, family, m);
    }
    fit.sigma.value = raw;
    fit.sigma.consistency = options.scale_constant;
    fit.sigma.method = "m-scale:bisquare(1)";
    fit.info.method = "mm";
    fit.info.family = "bisquare";
    fit.info.k = k;
    fit.info.delta = 0.5;
    fit.info.efficiency = options.efficiency;
    fit.info.n_subsamples = s.info.n_subsamples;
    fit.info.skipped_subsamples = s.info.skipped_subsamples;
    fit.info.subset = s.info.subset;
    fit.info.seed = options.subsampling.seed;
    return fit;
}

}  // namespace robmv
