#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "robmv/regression.hpp"
#include "robmv/sparse.hpp"

using namespace robmv;

namespace {

Matrix with_ones(const Matrix& X) {
    Matrix out(X.rows(), X.cols() + 1);
    out.col(0).setOnes();
    out.rightCols(X.cols()) = X;
    return out;
}

RegressionProblem gaussian_problem(Index n, Index p, std::uint64_t seed) {
    Rng rng(seed);
    Matrix X = normal_matrix(n, p, rng);
    Vector beta = Vector::Zero(p);
    for (Index j = 0; j < std::min<Index>(p, 4); ++j) beta[j] = 1.5 - 0.5 * double(j);
    Vector y = (X * beta).array() + 2.0;
    y += 0.5 * normal_matrix(n, 1, rng).col(0);
    return {with_ones(X), y, true};
}

// Sparse truth on three variables with a fraction of the responses shifted up.
RegressionProblem vertical_outliers(std::uint64_t seed, Index n = 100, Index p = 30, Index bad = 20) {
    Rng rng(seed);
    Matrix X = normal_matrix(n, p, rng);
    Vector beta = Vector::Zero(p);
    beta.head(3).setConstant(2.0);
    std::normal_distribution<double> N;
    Vector y = X * beta;
    for (Index i = 0; i < n; ++i) y[i] += N(rng);
    for (Index i = 0; i < bad; ++i) y[i] += 20.0 + 2.0 * N(rng);
    return {with_ones(X), y, true};
}

double lasso_objective(const RegressionProblem& pr, const Vector& beta, double lambda, double mu = 0.0) {
    const Vector slopes = beta.tail(beta.size() - 1);
    return (pr.y - pr.X * beta).squaredNorm() + lambda * slopes.cwiseAbs().sum() + mu * slopes.squaredNorm();
}

double soft(double z, double t) { return z > t ? z - t : (z < -t ? z + t : 0.0); }

Index false_positives(const IndexList& support, Index n_true) {
    Index fp = 0;
    for (Index j : support) fp += j > n_true;
    return fp;
}

Index misses(const IndexList& support, Index n_true) {
    Index hit = 0;
    for (Index j : support) hit += j >= 1 && j <= n_true;
    return n_true - hit;
}

}  // namespace

TEST_CASE("lasso with lambda 0 equals least squares") {
    const auto pr = gaussian_problem(60, 5, 1);
    const auto lasso = lasso_fit(pr, 0.0);
    const auto ols = ols_fit(pr);
    CHECK((lasso.beta - ols.beta).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(lasso.info.support.size() == 5);
}

TEST_CASE("lasso is zero at and above the stationarity bound") {
    const auto pr = gaussian_problem(50, 6, 2);
    const Matrix Xc = pr.X.rightCols(6).rowwise() - pr.X.rightCols(6).colwise().mean();
    const Vector yc = pr.y.array() - pr.y.mean();
    const double bound = 2.0 * (Xc.transpose() * yc).cwiseAbs().maxCoeff();
    for (double factor : {1.0, 1.5, 10.0}) {
        const auto fit = lasso_fit(pr, factor * bound);
        CHECK(fit.beta.tail(6).isZero(0.0));
        CHECK(fit.beta[0] == doctest::Approx(pr.y.mean()).epsilon(1e-12));
        CHECK(fit.info.support.empty());
    }
    CHECK_FALSE(lasso_fit(pr, 0.99 * bound).info.support.empty());
}

TEST_CASE("orthonormal design gives soft-thresholded least squares") {
    Rng rng(3);
    const Matrix Q = Eigen::HouseholderQR<Matrix>(normal_matrix(40, 8, rng)).householderQ() * Matrix::Identity(40, 8);
    Vector y = Q * Vector::LinSpaced(8, -3.0, 4.0) + 0.3 * normal_matrix(40, 1, rng).col(0);
    const RegressionProblem pr{Q, y, false};
    const Vector ols = Q.transpose() * y;
    std::size_t previous = 9;
    for (double lambda : {0.1, 0.5, 1.0, 2.0, 4.0, 8.0}) {
        const auto fit = lasso_fit(pr, lambda);
        for (Index j = 0; j < 8; ++j) CHECK(fit.beta[j] == doctest::Approx(soft(ols[j], lambda / 2)).epsilon(1e-8));
        CHECK(fit.info.support.size() <= previous);
        previous = fit.info.support.size();
    }
}

TEST_CASE("lasso solution satisfies the stationarity conditions") {
    const auto pr = gaussian_problem(80, 12, 4);
    const double lambda = 15.0;
    const auto fit = lasso_fit(pr, lambda);
    const Vector grad = -2.0 * pr.X.transpose() * fit.residuals;
    CHECK(std::abs(grad[0]) < 1e-6);
    for (Index j = 1; j < 13; ++j) {
        if (fit.beta[j] != 0.0)
            CHECK(std::abs(grad[j] + lambda * (fit.beta[j] > 0 ? 1.0 : -1.0)) < 1e-6);
        else
            CHECK(std::abs(grad[j]) <= lambda + 1e-6);
    }
}

TEST_CASE("no random perturbation improves the penalized objective") {
    const auto pr = gaussian_problem(40, 10, 5);
    for (double mu : {0.0, 3.0}) {
        const double lambda = 12.0;
        const auto fit = enet_fit(pr, lambda, mu);
        const double best = lasso_objective(pr, fit.beta, lambda, mu);
        Rng rng(55);
        Index improved = 0;
        for (int t = 0; t < 1000; ++t) {
            const double size = t < 500 ? 1e-3 : 1e-1;
            const Vector trial = fit.beta + size * normal_matrix(11, 1, rng).col(0);
            improved += lasso_objective(pr, trial, lambda, mu) < best - 1e-9 * best;
        }
        CHECK(improved == 0);
    }
}

TEST_CASE("elastic net reduces to least squares and ridge") {
    const auto pr = gaussian_problem(60, 5, 6);
    CHECK((enet_fit(pr, 0.0, 0.0).beta - ols_fit(pr).beta).cwiseAbs().maxCoeff() < 1e-8);

    Rng rng(7);
    const Matrix X = normal_matrix(30, 6, rng);
    const Vector y = normal_matrix(30, 1, rng).col(0);
    const RegressionProblem plain{X, y, false};
    for (double mu : {0.5, 5.0, 50.0}) {
        const Vector direct = (X.transpose() * X + mu * Matrix::Identity(6, 6)).ldlt().solve(X.transpose() * y);
        CHECK((enet_fit(plain, 0.0, mu).beta - direct).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((enet_fit(plain, 1e-12, mu).beta - direct).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("elastic net selects more variables than cases on grouped features") {
    // Five cases, four groups of five near-copies of a base column.
    Rng rng(8);
    const Matrix base = normal_matrix(5, 4, rng);
    Matrix X(5, 20);
    for (Index g = 0; g < 4; ++g)
        for (Index c = 0; c < 5; ++c) X.col(5 * g + c) = base.col(g) + 0.05 * normal_matrix(5, 1, rng).col(0);
    const Vector y = base.rowwise().sum();
    const RegressionProblem pr{X, y, false};
    const auto lasso = lasso_fit(pr, 0.5);
    const auto enet = enet_fit(pr, 0.5, 1.0);
    CHECK(lasso.info.support.size() <= 5);
    CHECK(enet.info.support.size() > 5);
    CHECK(enet.info.penalty.find("mu") != std::string::npos);
}

TEST_CASE("sparse LTS with h = n is the lasso with penalty n lambda") {
    const auto pr = gaussian_problem(50, 6, 9);
    const double lambda = 0.4;
    const auto trimmed = sparse_lts_fit(pr, lambda, 50, {.n_starts = 20, .initial_csteps = 2, .keep_best = 5,
                                                         .max_csteps = 20, .seed = 1, .threads = 0, .solver = {}});
    const auto lasso = lasso_fit(pr, 50 * lambda);
    CHECK((trimmed.beta - lasso.beta).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(trimmed.info.penalty.find("h lambda") != std::string::npos);
}

TEST_CASE("unpenalized concentration reproduces the LTS objective on a shared subset") {
    auto pr = gaussian_problem(40, 1, 10);
    for (Index i = 0; i < 8; ++i) pr.y[i] += 15.0;
    const Index h = default_h(40, 2);
    const auto lts = lts_fit(pr, h, {.n_subsamples = 0, .seed = 3, .max_csteps = 50, .refine_tol = 1e-8,
                                     .refine_max_iter = 5000, .enumerate_when_feasible = true});
    const IndexList subset = smallest_h(lts.residuals.cwiseAbs2(), h);
    const auto step = sparse_lts_concentrate(pr, subset, h, 0.0, 1);
    const double lts_objective = sparse_lts_objective(pr, lts.beta, h, 0.0);
    CHECK(step.objective_trace.front() == doctest::Approx(lts_objective).epsilon(1e-10));
    CHECK(lts_objective == doctest::Approx(double(40) * std::pow(lts.sigma.value, 2)).epsilon(1e-10));
}

TEST_CASE("concentration steps never increase the trimmed objective") {
    const auto pr = vertical_outliers(11);
    Rng rng(12);
    for (int start = 0; start < 20; ++start) {
        const IndexList subset = sample_without_replacement(100, 75, rng);
        const auto run = sparse_lts_concentrate(pr, subset, 75, 0.5, 50);
        for (std::size_t t = 1; t < run.objective_trace.size(); ++t)
            CHECK(run.objective_trace[t] <= run.objective_trace[t - 1] * (1 + 1e-9));
    }
}

TEST_CASE("sparse LTS recovers the support under vertical outliers where the lasso does not") {
    const SparseLtsOptions options{.n_starts = 500, .initial_csteps = 2, .keep_best = 10, .max_csteps = 100,
                                   .seed = 7, .threads = 0, .solver = {}};
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        CAPTURE(seed);
        const auto pr = vertical_outliers(seed);
        const auto robust = sparse_lts_fit(pr, 1.0, 75, options);
        const auto lasso = lasso_fit(pr, 100 * 1.0);
        CHECK(false_positives(robust.info.support, 3) <= 2);
        CHECK(misses(robust.info.support, 3) == 0);
        CHECK((false_positives(lasso.info.support, 3) > 2 || misses(lasso.info.support, 3) > 0));
        for (Index i = 0; i < 20; ++i) CHECK(robust.case_weights[i] == 0.0);
    }
}

TEST_CASE("sparse LTS is deterministic across thread counts") {
    const auto pr = vertical_outliers(13, 60, 10, 12);
    SparseLtsOptions options{.n_starts = 100, .initial_csteps = 2, .keep_best = 10, .max_csteps = 100,
                             .seed = 21, .threads = 1, .solver = {}};
    const auto one = sparse_lts_fit(pr, 0.8, 0, options);
    options.threads = 4;
    const auto four = sparse_lts_fit(pr, 0.8, 0, options);
    CHECK(one.beta == four.beta);
    CHECK(one.info.subset == four.info.subset);
    CHECK(one.info.h == 45);
}

TEST_CASE("sparse fits reject invalid settings") {
    const auto pr = gaussian_problem(20, 3, 14);
    CHECK_THROWS_AS(lasso_fit(pr, -1.0), InputError);
    CHECK_THROWS_AS(enet_fit(pr, 1.0, -0.5), InputError);
    CHECK_THROWS_AS(sparse_lts_fit(pr, 0.5, 21), InputError);
    CHECK_THROWS_AS(lasso_fit(pr, 1.0, {.tol = 1e-14, .max_sweeps = 1}), ConvergenceError);
    CHECK_THROWS_AS(lasso_fit({Matrix::Ones(5, 8), Vector::Ones(5), false}, 0.0), SingularityError);
}
