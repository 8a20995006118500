#pragma once

#include <cstdint>

#include "robmv/regression.hpp"

namespace robmv {

struct SparsityConfig {
    double lambda = 0.0;  // L1 weight, sum-of-squares units
    double mu = 0.0;      // squared-L2 weight
    Index h = 0;          // sparse LTS subset size; 0: floor(0.75 n)

    void validate(Index n) const;
};

struct CoordinateDescentOptions {
    double tol = 1e-8;      // KKT violation relative to max |2 X'y|
    int max_sweeps = 100000;
};

// Minimizes sum r^2 + lambda |beta|_1 + mu |beta|_2^2 over the slopes; an intercept
// (first column of ones) is never penalized. Columns are standardized inside the
// solver only, so the objective stays on the original scale. lambda = 0 is solved directly.
RegressionFit enet_fit(const RegressionProblem& problem, double lambda, double mu,
                       const CoordinateDescentOptions& options = {});
RegressionFit lasso_fit(const RegressionProblem& problem, double lambda, const CoordinateDescentOptions& options = {});

// sum of the h smallest squared residuals + h lambda |slopes|_1
double sparse_lts_objective(const RegressionProblem& problem, const Eigen::Ref<const Vector>& beta, Index h,
                            double lambda);

struct SparseLtsOptions {
    Index n_starts = 500;
    int initial_csteps = 2;
    Index keep_best = 10;
    int max_csteps = 100;
    std::uint64_t seed = 0;
    int threads = 0;
    CoordinateDescentOptions solver{};
};

struct ConcentrationResult {
    Vector beta;
    IndexList subset;
    std::vector<double> objective_trace;
    int steps = 0;
};

// Alternates lasso refits on the subset and re-selection of the h smallest squared
// residuals, starting from a given subset; stops when the subset repeats.
ConcentrationResult sparse_lts_concentrate(const RegressionProblem& problem, IndexList subset, Index h, double lambda,
                                           int max_steps, const CoordinateDescentOptions& solver = {});

// Trimmed lasso: sum of the h smallest squared residuals + h lambda |slopes|_1,
// from random 3-point starts with concentration steps.
RegressionFit sparse_lts_fit(const RegressionProblem& problem, double lambda, Index h = 0,
                             const SparseLtsOptions& options = {});

}  // namespace robmv
