#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "robmv/regression.hpp"

using namespace robmv;

namespace {

RegressionProblem line_data(Index n, double a, double b, double noise, std::uint64_t seed) {
    Rng rng(seed);
    Matrix x = normal_matrix(n, 1, rng);
    Vector e = normal_matrix(n, 1, rng).col(0) * noise;
    Vector y = Vector::Constant(n, a) + b * x.col(0) + e;
    return RegressionProblem::with_intercept(x, y);
}

// Global LTS minimum by enumerating every h-subset and fitting OLS on it.
double lts_oracle(const RegressionProblem& pr, Index h, IndexList& best_subset) {
    const Index n = pr.n();
    double best = INFINITY;
    std::vector<int> mask(n, 0);
    std::fill(mask.end() - h, mask.end(), 1);
    do {
        IndexList sub;
        for (Index i = 0; i < n; ++i)
            if (mask[i]) sub.push_back(i);
        Matrix Xs = select_rows(pr.X, sub);
        Eigen::ColPivHouseholderQR<Matrix> qr(Xs);
        if (qr.rank() < pr.p()) continue;
        Vector beta = qr.solve(select(pr.y, sub));
        double obj = trimmed_squares_scale(pr.y - pr.X * beta, h);
        if (obj < best) {
            best = obj;
            best_subset = sub;
        }
    } while (std::next_permutation(mask.begin(), mask.end()));
    return best;
}

}  // namespace

TEST_CASE("ols normal equations and rank deficiency") {
    auto pr = line_data(30, 1.0, 2.0, 0.5, 1);
    auto fit = ols_fit(pr);
    CHECK((pr.X.transpose() * fit.residuals).norm() < 1e-10);
    Matrix bad(5, 2);
    bad << 1, 2, 2, 4, 3, 6, 4, 8, 5, 10;
    RegressionProblem sing{bad, Vector::Ones(5), false};
    CHECK_THROWS_AS(ols_fit(sing), SingularityError);
    RegressionProblem mismatch{bad, Vector::Ones(4), false};
    CHECK_THROWS_AS(ols_fit(mismatch), InputError);
}

TEST_CASE("exact-fit data: every estimator returns the generating coefficients") {
    auto pr = line_data(25, 1.0, -3.0, 0.0, 2);
    Vector truth(2);
    truth << 1.0, -3.0;
    CHECK((ols_fit(pr).beta - truth).norm() < 1e-10);
    auto m = m_fit(pr, RhoFamily::huber(1.345));
    CHECK(m.info.iterations == 1);
    CHECK((m.beta - truth).norm() < 1e-10);
    MFitOptions opt;
    opt.beta0 = truth;
    auto mb = m_fit(pr, RhoFamily::bisquare(4.685), opt);
    CHECK(mb.info.iterations == 1);
    CHECK((lts_fit(pr).beta - truth).norm() < 1e-8);
    CHECK((lms_fit(pr).beta - truth).norm() < 1e-8);
    CHECK((s_fit(pr).beta - truth).norm() < 1e-8);
    CHECK((mm_fit(pr).beta - truth).norm() < 1e-8);
}

TEST_CASE("m_fit with huge Huber constant equals OLS") {
    auto pr = line_data(40, 0.5, 1.5, 1.0, 3);
    auto m = m_fit(pr, RhoFamily::huber(1e6));
    CHECK((m.beta - ols_fit(pr).beta).norm() < 1e-6);
}

TEST_CASE("m_fit preconditions") {
    auto pr = line_data(20, 0, 1, 1, 4);
    CHECK_THROWS_AS(m_fit(pr, RhoFamily::bisquare(4.685)), InputError);
    MFitOptions opt;
    opt.beta0 = Vector::Zero(3);
    CHECK_THROWS_AS(m_fit(pr, RhoFamily::huber(1.345), opt), InputError);
}

TEST_CASE("IRWLS objective never increases") {
    for (std::uint64_t seed = 10; seed < 20; ++seed) {
        auto pr = line_data(60, 1, 2, 1, seed);
        for (Index i = 0; i < 8; ++i) pr.y[i] += 30.0 + double(i);
        auto hub = m_fit(pr, RhoFamily::huber(1.345));
        for (std::size_t t = 1; t < hub.info.objective_trace.size(); ++t)
            CHECK(hub.info.objective_trace[t] <= hub.info.objective_trace[t - 1] * (1 + 1e-12) + 1e-12);
        MFitOptions opt;
        opt.beta0 = lts_fit(pr, 0, {.seed = seed}).beta;
        auto bis = m_fit(pr, RhoFamily::bisquare(4.685), opt);
        for (std::size_t t = 1; t < bis.info.objective_trace.size(); ++t)
            CHECK(bis.info.objective_trace[t] <= bis.info.objective_trace[t - 1] * (1 + 1e-12) + 1e-12);
        auto s = s_fit(pr, {.seed = seed});
        for (std::size_t t = 1; t < s.info.objective_trace.size(); ++t)
            CHECK(s.info.objective_trace[t] <= s.info.objective_trace[t - 1] * (1 + 1e-12));
    }
}

TEST_CASE("l1 fit") {
    Matrix ones = Matrix::Ones(7, 1);
    Vector y(7);
    y << 5, -1, 3, 100, 2, 8, 0;
    auto fit = l1_fit({ones, y, true});
    CHECK(fit.beta[0] == doctest::Approx(3.0).epsilon(1e-6));
    auto pr = line_data(21, 2.0, 1.0, 0.0, 5);
    pr.y[4] += 1000.0;
    auto l1 = l1_fit(pr);
    CHECK(std::abs(l1.beta[0] - 2.0) < 1e-5);
    CHECK(std::abs(l1.beta[1] - 1.0) < 1e-5);
}

TEST_CASE("required subsamples") {
    CHECK(required_subsamples(5, 0.0, 0.01) == 1);
    CHECK(required_subsamples(5, 0.2, 0.01) == 12);
    CHECK(required_subsamples_approx(5, 0.2, 0.01) == 15);
    // Oracle: smallest N with P(at least one clean subset) >= 1 - gamma.
    for (Index p = 1; p <= 8; ++p)
        for (double eps : {0.05, 0.1, 0.25, 0.4, 0.5})
            for (double gamma : {0.001, 0.01, 0.05}) {
                const double clean = std::pow(1 - eps, double(p));
                Index N = 1;
                while (1 - std::pow(1 - clean, double(N)) < 1 - gamma - 1e-12) ++N;
                CHECK(required_subsamples(p, eps, gamma) == N);
                CHECK(required_subsamples_approx(p, eps, gamma) >= required_subsamples(p, eps, gamma));
            }
    CHECK_THROWS_AS(required_subsamples(0, 0.1, 0.01), InputError);
    CHECK_THROWS_AS(required_subsamples(2, 1.0, 0.01), InputError);
    CHECK_THROWS_AS(required_subsamples(2, 0.1, 0.0), InputError);
}

TEST_CASE("default h") { CHECK(default_h(10, 2) == 6); }

TEST_CASE("LTS matches the exhaustive h-subset optimum") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto pr = line_data(12, 1.0, 2.0, 0.3, 100 + seed);
        pr.y[0] += 15;
        pr.y[3] -= 12;
        pr.X(5, 1) += 6;
        IndexList oracle_subset;
        const Index h = default_h(12, 2);
        const double oracle = lts_oracle(pr, h, oracle_subset);
        auto fit = lts_fit(pr, 0, {.n_subsamples = 66, .seed = seed});
        CHECK(fit.sigma.value == doctest::Approx(oracle).epsilon(1e-10));
        CHECK(fit.info.subset == oracle_subset);
    }
}

TEST_CASE("LTS objective equals trimmed scale of its own residuals and C-steps never increase it") {
    auto pr = line_data(80, 0, 1, 1, 7);
    for (Index i = 0; i < 20; ++i) pr.y[i] += 20;
    auto fit = lts_fit(pr, 0, {.seed = 9});
    CHECK(fit.sigma.value == doctest::Approx(trimmed_squares_scale(fit.residuals, fit.info.h)));
    CHECK(fit.case_weights.sum() == double(fit.info.h));
}

TEST_CASE("LMS fits the majority line") {
    auto pr = line_data(31, 1, 1, 0, 8);
    for (Index i = 0; i < 10; ++i) pr.y[i] = 50.0 + double(i);
    auto fit = lms_fit(pr);
    CHECK(std::abs(fit.beta[1] - 1.0) < 1e-8);
}

TEST_CASE("singular subsamples are skipped and counted") {
    RegressionProblem pr = line_data(40, 0, 1, 0.1, 11);
    for (Index i = 0; i < 20; ++i) pr.X(i, 1) = 0.0;
    auto fit = lts_fit(pr, 0, {.n_subsamples = 30, .seed = 3});
    CHECK(fit.info.skipped_subsamples > 0);
}

TEST_CASE("regression equivariance") {
    Rng rng(77);
    for (int trial = 0; trial < 5; ++trial) {
        auto pr = line_data(50, 1, 2, 1, 200 + trial);
        Matrix extra = normal_matrix(50, 1, rng);
        RegressionProblem p3{Matrix(50, 3), pr.y, true};
        p3.X << pr.X, extra;
        for (Index i = 0; i < 8; ++i) p3.y[i] += 25;
        Matrix A(3, 3);
        A << 1, 0.5, -1, 0, 2, 0.3, 0, -0.7, 1.5;
        RegressionProblem pa{p3.X * A, p3.y, true};
        const double t = -2.5;
        RegressionProblem pt{p3.X, p3.y * t, true};
        SubsampleOptions opt{.seed = std::uint64_t(trial)};
        for (auto kind : {0, 1, 2}) {
            auto fit = [&](const RegressionProblem& q) {
                if (kind == 0) return lts_fit(q, 0, opt);
                if (kind == 1) return s_fit(q, opt);
                return mm_fit(q, {.subsampling = opt});
            };
            auto base = fit(p3);
            CHECK((fit(pt).beta - t * base.beta).norm() <= 1e-6 * std::max(1.0, base.beta.norm()));
            CHECK((A * fit(pa).beta - base.beta).norm() <= 1e-6 * std::max(1.0, base.beta.norm()));
        }
        auto ols = ols_fit(p3);
        CHECK((A * ols_fit(pa).beta - ols.beta).norm() < 1e-8);
    }
}

TEST_CASE("same seed gives identical estimates") {
    auto pr = line_data(60, 0, 1, 1, 12);
    for (Index i = 0; i < 15; ++i) pr.y[i] += 40;
    auto a = mm_fit(pr, {.subsampling = {.seed = 5}});
    auto b = mm_fit(pr, {.subsampling = {.seed = 5}});
    CHECK(a.beta == b.beta);
    CHECK(a.info.subset == b.info.subset);
    auto c = lts_fit(pr, 0, {.seed = 5});
    auto d = lts_fit(pr, 0, {.seed = 5});
    CHECK(c.beta == d.beta);
}

TEST_CASE("bisquare efficiency table") {
    CHECK(bisquare_efficiency(4.685) == doctest::Approx(0.95).epsilon(0.002));
    CHECK(bisquare_efficiency(3.44) == doctest::Approx(0.85).epsilon(0.005));
    CHECK(bisquare_k_for_efficiency(0.85) == 3.44);
    CHECK(bisquare_k_for_efficiency(0.95) == doctest::Approx(4.685).epsilon(0.002));
    CHECK(bisquare_efficiency(bisquare_k_for_efficiency(0.7)) == doctest::Approx(0.7).epsilon(1e-8));
    auto pr = line_data(30, 0, 1, 1, 13);
    CHECK(mm_fit(pr).info.k == 3.44);
}

TEST_CASE("breakdown: 40% replaced cases") {
    const Index n = 100;
    auto pr = line_data(n, 1.0, 2.0, 1.0, 14);
    const Index m = Index(std::ceil(0.4 * n));
    for (Index i = 0; i < m; ++i) {
        pr.X(i, 1) = 10.0 + 0.01 * double(i);
        pr.y[i] = 1e5;
    }
    CHECK(std::abs(ols_fit(pr).beta[1] - 2.0) > 1e3);
    CHECK(std::abs(lts_fit(pr, 0, {.seed = 1}).beta[1] - 2.0) < 1.0);
    CHECK(std::abs(mm_fit(pr, {.subsampling = {.seed = 1}}).beta[1] - 2.0) < 1.0);
}
