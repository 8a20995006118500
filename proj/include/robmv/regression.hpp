#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "robmv/scale.hpp"

namespace robmv {

// Cases in rows. When `intercept` is set the first column of X must be all ones.
struct RegressionProblem {
    Matrix X;
    Vector y;
    bool intercept = false;

    static RegressionProblem with_intercept(const Matrix& X, const Vector& y);

    Index n() const { return X.rows(); }
    Index p() const { return X.cols(); }
    void validate() const;
};

struct FitInfo {
    std::string method;
    std::string family;
    double k = 0.0;
    Index h = 0;
    double delta = 0.0;
    double efficiency = 0.0;
    Index n_subsamples = 0;
    Index skipped_subsamples = 0;
    int iterations = 0;
    bool converged = true;
    std::uint64_t seed = 0;
    IndexList subset;                    // defining subset of the winning candidate
    std::vector<double> objective_trace;  // per-iteration objective, when iterative
    double lambda = 0.0;                 // penalized fits
    double mu = 0.0;
    std::string penalty;                 // objective actually minimized, penalized fits
    IndexList support;                   // nonzero slopes (intercept excluded), penalized fits
};

struct RegressionFit {
    Vector beta;
    ScaleEstimate sigma;
    Vector residuals;
    Vector case_weights;
    FitInfo info;

    Vector predict(const Eigen::Ref<const Matrix>& X) const { return X * beta; }
};

// Weighted least squares via sqrt-weight scaled QR. Throws SingularityError if rank-deficient.
Vector weighted_least_squares(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y,
                              const Eigen::Ref<const Vector>& w);

RegressionFit ols_fit(const RegressionProblem& problem);

struct IrwlsOptions {
    double tol = 1e-10;
    int max_iter = 500;
};

RegressionFit l1_fit(const RegressionProblem& problem, const IrwlsOptions& options = {.tol = 1e-10, .max_iter = 2000});

struct MFitOptions {
    std::optional<double> sigma;  // auto: MAD of the L1 residuals
    std::optional<Vector> beta0;  // auto: L1 fit (monotone families only)
    double tol = 1e-10;
    int max_iter = 500;
};

RegressionFit m_fit(const RegressionProblem& problem, const RhoFamily& family, const MFitOptions& options = {});

// Number of random p-subsets needed so that at least one is outlier-free with
// probability 1 - gamma when a fraction eps of the cases is contaminated.
Index required_subsamples(Index p, double eps, double gamma);
// Same with ln(1 - (1-eps)^p) replaced by -(1-eps)^p.
Index required_subsamples_approx(Index p, double eps, double gamma);

struct ScaleSpec {
    enum class Kind { quantile, trimmed, m_scale };
    Kind kind = Kind::trimmed;
    Index h = 0;  // 0: floor((n+p+1)/2)
    RhoFamily family = RhoFamily::bisquare(1.0);
    double delta = 0.5;

    static ScaleSpec quantile(Index h = 0) { return {Kind::quantile, h, RhoFamily::bisquare(1.0), 0.5}; }
    static ScaleSpec trimmed(Index h = 0) { return {Kind::trimmed, h, RhoFamily::bisquare(1.0), 0.5}; }
    static ScaleSpec m(RhoFamily family = RhoFamily::bisquare(1.0), double delta = 0.5) {
        return {Kind::m_scale, 0, family, delta};
    }
};

struct SubsampleOptions {
    Index n_subsamples = 0;  // 0: required_subsamples(p, 0.5, 0.01)
    std::uint64_t seed = 0;
    int max_csteps = 50;
    double refine_tol = 1e-8;
    int refine_max_iter = 5000;
    // Enumerate every p-subset instead of sampling when n_subsamples >= C(n, p).
    bool enumerate_when_feasible = true;
};

Index default_h(Index n, Index p);

// LMS (quantile), LTS (trimmed) or S (M-scale) estimate by random exact-fit subsets.
RegressionFit scale_min_fit(const RegressionProblem& problem, const ScaleSpec& scale,
                            const SubsampleOptions& options = {});

RegressionFit lts_fit(const RegressionProblem& problem, Index h = 0, const SubsampleOptions& options = {});
RegressionFit lms_fit(const RegressionProblem& problem, Index h = 0, const SubsampleOptions& options = {});
RegressionFit s_fit(const RegressionProblem& problem, const SubsampleOptions& options = {});

// Asymptotic efficiency at the normal of the bisquare location M-estimator with constant k.
double bisquare_efficiency(double k);
// Inverse of bisquare_efficiency; 0.85 maps to 3.44 exactly.
double bisquare_k_for_efficiency(double efficiency);

struct MMOptions {
    double efficiency = 0.85;
    double scale_constant = 1.65;  // divisor turning the bisquare(1) M-scale into the MM scale
    SubsampleOptions subsampling{};
    double tol = 1e-10;
    int max_iter = 500;
};

RegressionFit mm_fit(const RegressionProblem& problem, const MMOptions& options = {});

}  // namespace robmv
