#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "robmv/pls.hpp"
#include "robmv/regression.hpp"
#include "robmv/scenarios.hpp"
#include "robmv/validation.hpp"

using namespace robmv;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(Index(v.size()));
    Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

// Rows (x, y) of a single-predictor scenario.
Matrix xy_rows(const Scenario& s) {
    Matrix d(s.X.rows(), 2);
    d.col(0) = s.X.col(0);
    d.col(1) = s.y;
    return d;
}

RegressionProblem line_problem(const Matrix& rows) {
    Matrix X(rows.rows(), 2);
    X.col(0).setOnes();
    X.col(1) = rows.col(0);
    return {X, rows.col(1), true};
}

Vector ols_slope(const Matrix& rows) { return ols_fit(line_problem(rows)).beta.tail(1); }
Vector lts_slope(const Matrix& rows) { return lts_fit(line_problem(rows)).beta.tail(1); }
Vector mm_slope(const Matrix& rows) { return mm_fit(line_problem(rows)).beta.tail(1); }

// Exact rank-3 predictors, response linear in the latent scores, first `bad` responses shifted.
struct LatentData {
    Matrix X;
    Vector y;
};

LatentData rank_three(std::uint64_t seed, Index bad) {
    Rng rng(seed);
    const Matrix T = normal_matrix(60, 3, rng), P = normal_matrix(8, 3, rng);
    LatentData d{T * P.transpose(), T * Eigen::Vector3d(1.0, -0.7, 0.5)};
    for (Index i = 0; i < bad; ++i) d.y[i] += 10.0;
    return d;
}

FitAtComplexity pls_family(bool robust) {
    return [robust](const Matrix& X, const Vector& y, int k) -> Predictor {
        const PLSModel m = robust ? prm_fit(X, y, k) : pls_fit(X, y, k);
        return [m](const Matrix& Z) { return Vector(m.predict(Z).col(0)); };
    };
}

bool same_bytes(const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::memcmp(a.data(), b.data(), sizeof(double) * std::size_t(a.size())) == 0;
}

}  // namespace

TEST_CASE("trimmed spread") {
    Rng rng(1);
    const Vector x = normal_matrix(50, 1, rng).col(0);
    const double sd = std::sqrt((x.array() - x.mean()).square().sum() / 49.0);
    CHECK(trimmed_spread(x, 0.0) == doctest::Approx(sd).epsilon(1e-12));
    CHECK(trimmed_spread(vec({1, 1, 1, 1, 1e6}), 0.2) == 0.0);
    const Vector big = normal_matrix(100000, 1, rng).col(0);
    CHECK(trimmed_spread(big, 0.2) < trimmed_spread(big, 0.0));
    CHECK_THROWS_AS(trimmed_spread(x, 0.5), InputError);
    CHECK_THROWS_AS(trimmed_spread(Vector(), 0.1), InputError);
}

TEST_CASE("trimmed RMSEP") {
    CHECK(trimmed_rmsep(vec({1, 1, 1, 100}), 0.25) == doctest::Approx(1.0));
    const Vector r = vec({0.5, -2.0, 3.0, 1.0, -0.25});
    CHECK(trimmed_rmsep(r, 0.0) == doctest::Approx(std::sqrt(r.squaredNorm() / 5.0)));
    CHECK(trimmed_rmsep(-r, 0.2) == trimmed_rmsep(r, 0.2));
    double previous = trimmed_rmsep(r, 0.0);
    for (double trim : {0.1, 0.2, 0.4, 0.6, 0.8, 0.95}) {
        const double now = trimmed_rmsep(r, trim);
        CHECK(now <= previous);
        previous = now;
    }
    CHECK_THROWS_AS(trimmed_rmsep(r, 1.0), InputError);
}

TEST_CASE("bootstrap of a constant has zero spread") {
    Rng rng(2);
    const Matrix data = normal_matrix(30, 3, rng);
    for (SpreadKind kind : {SpreadKind::sd, SpreadKind::trimmed, SpreadKind::percentile}) {
        BootstrapOptions options;
        options.replicates = 200;
        options.spread = kind;
        const auto rep = bootstrap([](const Matrix&) { return vec({4.5, -1.0}); }, data, options);
        CHECK(rep.spread.isZero(0.0));
        CHECK(rep.lower == vec({4.5, -1.0}));
        CHECK(rep.upper == vec({4.5, -1.0}));
        CHECK(rep.failures == 0);
    }
}

TEST_CASE("bootstrap SD of a mean matches the analytic value") {
    const Index n = 20;
    Matrix data = Matrix::Zero(n, 1);
    data(n - 1, 0) = 1.0;
    BootstrapOptions options;
    options.replicates = 10000;
    options.seed = 3;
    const auto rep = bootstrap([](const Matrix& d) { return Vector(d.colwise().mean().transpose()); }, data, options);
    const double p = 1.0 / double(n);
    const double analytic = std::sqrt(p * (1 - p) / double(n));
    CHECK(rep.sd[0] == doctest::Approx(analytic).epsilon(0.03));
    CHECK(rep.original[0] == doctest::Approx(p));
    CHECK(rep.lower[0] <= rep.upper[0]);
    CHECK(BootstrapOptions{}.replicates == 2000);
}

TEST_CASE("bootstrap is bit-identical across thread counts") {
    Rng rng(4);
    const Matrix data = normal_matrix(40, 2, rng);
    const auto stat = [](const Matrix& d) { return ols_slope(d); };
    BootstrapOptions options;
    options.replicates = 300;
    options.seed = 9;
    options.threads = 1;
    const auto one = bootstrap(stat, data, options);
    options.threads = 8;
    const auto eight = bootstrap(stat, data, options);
    CHECK(same_bytes(one.estimates, eight.estimates));
    CHECK(same_bytes(one.spread, eight.spread));
    CHECK(resample_indices(40, options) == resample_indices(40, options));
    options.seed = 10;
    CHECK_FALSE(same_bytes(bootstrap(stat, data, options).estimates, one.estimates));
}

TEST_CASE("bootstrap counts failed replicates") {
    Matrix data(10, 1);
    for (Index i = 0; i < 10; ++i) data(i, 0) = double(i);
    // Fails when the largest row is missing: probability 0.9^10 ~ 0.35.
    const auto needs_nine = [](const Matrix& d) {
        if (d.maxCoeff() < 9) throw DegenerateError("row nine missing");
        return Vector(d.colwise().mean().transpose());
    };
    BootstrapOptions options;
    options.replicates = 1000;
    const auto rep = bootstrap(needs_nine, data, options);
    CHECK(rep.failures > 250);
    CHECK(rep.failures < 450);
    CHECK(Index(rep.failure_messages.size()) == rep.failures);
    Index nan_rows = 0;
    for (Index r = 0; r < rep.replicates; ++r) nan_rows += std::isnan(rep.estimates(r, 0));
    CHECK(nan_rows == rep.failures);

    // A resample of 10 rows has about 6.5 distinct rows, so this fails most of the time.
    const auto mostly_distinct = [](const Matrix& d) {
        std::vector<double> v(d.data(), d.data() + d.size());
        std::sort(v.begin(), v.end());
        if (std::unique(v.begin(), v.end()) - v.begin() < 8) throw DegenerateError("too many repeats");
        return Vector(d.colwise().mean().transpose());
    };
    CHECK_THROWS_AS(bootstrap(mostly_distinct, data, options), ResamplingError);
}

TEST_CASE("partial replacement changes at most the requested rows") {
    BootstrapOptions options;
    options.replicates = 200;
    options.scheme = ResampleScheme::partial_replacement;
    options.n_replace = 2;
    const auto idx = resample_indices(15, options);
    for (Index r = 0; r < idx.rows(); ++r) {
        Index changed = 0;
        for (Index i = 0; i < 15; ++i) changed += idx(r, i) != i;
        CHECK(changed <= 2);
    }
    options.n_replace = 0;
    const auto random_count = resample_indices(15, options);
    Index most = 0;
    for (Index r = 0; r < random_count.rows(); ++r) {
        Index changed = 0;
        for (Index i = 0; i < 15; ++i) changed += random_count(r, i) != i;
        most = std::max(most, changed);
    }
    CHECK(most > 2);
    options.n_replace = 16;
    CHECK_THROWS_AS(resample_indices(15, options), InputError);
}

TEST_CASE("cross-validation of a constant predictor") {
    const Matrix X = Matrix::Zero(20, 1);
    const Vector y = Vector::Constant(20, 3.0);
    const FitAtComplexity zero = [](const Matrix&, const Vector&, int) -> Predictor {
        return [](const Matrix& Z) { return Vector(Vector::Zero(Z.rows())); };
    };
    const auto rep = monte_carlo_cv(X, y, zero, {1}, {.n_splits = 10, .test_fraction = 0.25, .trim = 0.0, .seed = 1,
                                                       .threads = 0});
    CHECK(rep.rmsecv[0] == doctest::Approx(3.0));
    CHECK(rep.standard_error[0] == doctest::Approx(0.0));
}

TEST_CASE("cross-validation picks the rank of noiseless latent data") {
    const auto d = rank_three(1, 0);
    const auto rep = monte_carlo_cv(d.X, d.y, pls_family(false), {1, 2, 3, 4, 5},
                                    {.n_splits = 40, .test_fraction = 0.25, .trim = 0.0, .seed = 2, .threads = 0});
    CHECK(rep.chosen == 3);
    CHECK(rep.rmsecv[2] < 1e-8);
    CHECK(rep.rmsecv[1] > 0.01);
    // More components than the rank fail on every split and are flagged.
    CHECK(rep.failures[3] == 40);
    CHECK(std::isnan(rep.rmsecv[4]));
    CHECK(rep.one_se_choice <= rep.chosen);
}

TEST_CASE("trimmed cross-validation selects the rank under vertical outliers") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        CAPTURE(seed);
        const auto d = rank_three(seed, 6);
        const auto rep = monte_carlo_cv(d.X, d.y, pls_family(true), {1, 2, 3},
                                        {.n_splits = 50, .test_fraction = 0.25, .trim = 0.15, .seed = 3, .threads = 0});
        CHECK(rep.chosen == 3);
        CHECK(rep.trim == 0.15);
    }
}

TEST_CASE("cross-validation flags failing cells and is thread independent") {
    const auto d = rank_three(4, 0);
    const FitAtComplexity flaky = [](const Matrix& X, const Vector& y, int k) -> Predictor {
        if (k == 2) throw DegenerateError("complexity two always fails");
        const PLSModel m = pls_fit(X, y, k);
        return [m](const Matrix& Z) { return Vector(m.predict(Z).col(0)); };
    };
    CvOptions options{.n_splits = 20, .test_fraction = 0.3, .trim = 0.1, .seed = 5, .threads = 1};
    const auto one = monte_carlo_cv(d.X, d.y, flaky, {1, 2, 3}, options);
    options.threads = 6;
    const auto six = monte_carlo_cv(d.X, d.y, flaky, {1, 2, 3}, options);
    CHECK(one.failures[1] == 20);
    CHECK(std::isnan(one.rmsecv[1]));
    CHECK(one.chosen == 3);
    CHECK(same_bytes(one.rmsecv, six.rmsecv));
    CHECK_THROWS_AS(monte_carlo_cv(d.X, d.y, flaky, {2}, options), ResamplingError);
    CHECK_THROWS_AS(monte_carlo_cv(d.X, d.y, flaky, {}, options), InputError);
}

TEST_CASE("empirical influence of the mean and the median") {
    const Matrix zeros = Matrix::Zero(10, 1);
    Matrix five(1, 1);
    five << 5.0;
    const auto mean = empirical_influence([](const Matrix& d) { return d.col(0).mean(); }, zeros, five, 0);
    CHECK(mean.values[0] == doctest::Approx(5.0));

    Rng rng(6);
    const Matrix sample = normal_matrix(21, 1, rng);
    Matrix far(4, 1);
    far << 10.0, 100.0, 1e4, 1e8;
    const auto med = empirical_influence([](const Matrix& d) { return median(d.col(0)); }, sample, far);
    CHECK(med.replaced_row == central_row(sample));
    for (Index k = 1; k < 4; ++k) CHECK(med.values[k] == med.values[0]);
}

TEST_CASE("least squares slope influence is unbounded while Huber's is bounded") {
    const Matrix data = xy_rows(simulate_scenario("fig6-eif", 1));
    const Index steps = 41;
    Matrix points(steps, 2);
    for (Index k = 0; k < steps; ++k) {
        points(k, 0) = 2.0;
        points(k, 1) = 5.0 + (-1000.0 + 50.0 * double(k));
    }
    const auto slope = [](bool huber) {
        return [huber](const Matrix& d) {
            const auto pr = line_problem(d);
            return (huber ? m_fit(pr, RhoFamily::huber(1.345)) : ols_fit(pr)).beta[1];
        };
    };
    const auto ols = empirical_influence(slope(false), data, points);
    const auto hub = empirical_influence(slope(true), data, points);
    // Index 19 and 21 sit 50 below and above the line.
    const double ols_interior = std::max(std::abs(ols.values[19]), std::abs(ols.values[21]));
    CHECK(std::abs(ols.values[0]) > 10 * ols_interior);
    CHECK(std::abs(ols.values[steps - 1]) > 10 * ols_interior);
    CHECK(hub.values[0] == doctest::Approx(hub.values[18]).epsilon(1e-6));
    CHECK(hub.values[steps - 1] == doctest::Approx(hub.values[22]).epsilon(1e-6));
    CHECK(hub.values.cwiseAbs().maxCoeff() < 10.0);
}

TEST_CASE("contaminate replaces exactly ceil(eps n) rows") {
    Rng rng(7);
    const Matrix data = normal_matrix(33, 2, rng);
    ContaminationSpec spec;
    spec.kind = ContaminationSpec::Kind::point_mass;
    spec.point = Eigen::Vector2d(50.0, 50.0);
    spec.fraction = 0.2;
    const Matrix out = contaminate(data, spec, rng);
    Index changed = 0;
    for (Index i = 0; i < 33; ++i) changed += out.row(i) != data.row(i);
    CHECK(changed == 7);
    spec.fraction = 1.0;
    CHECK_THROWS_AS(contaminate(data, spec, rng), InputError);
}

TEST_CASE("maxbias contamination sets are nested") {
    Rng rng(8);
    const Matrix data = normal_matrix(25, 2, rng);
    ContaminationSpec spec;
    spec.kind = ContaminationSpec::Kind::point_mass;
    spec.point = Eigen::Vector2d(1e3, 1e3);
    const auto count = [](const Matrix& d) {
        Vector c(1);
        c[0] = double((d.col(0).array() == 1e3).count());
        return c;
    };
    const auto curve = empirical_maxbias(count, data, spec, {0, 3, 7, 12}, {.trials = 4, .seed = 2, .threads = 0});
    CHECK(curve.raw_bias == vec({0, 3, 7, 12}));
    CHECK(curve.lower_bound);
}

TEST_CASE("maxbias curves of least squares, LTS and MM") {
    const Matrix data = xy_rows(simulate_scenario("fig7-maxbias", 1));
    const ContaminationSpec spec;  // vertical range, a in [0,10], b in [1e4,1e5]
    const std::vector<Index> ms{0, 1, 10, 20, 30, 40, 60};
    const MaxbiasOptions options{.trials = 5, .seed = 1, .threads = 0};
    const auto ols = empirical_maxbias(ols_slope, data, spec, ms, options);
    const auto lts = empirical_maxbias(lts_slope, data, spec, ms, options);
    const auto mm = empirical_maxbias(mm_slope, data, spec, ms, options);
    CHECK(ols.bias[0] == 0.0);
    CHECK(ols.bias[1] > 1e2);
    for (std::size_t k = 1; k <= 5; ++k) {
        CHECK(lts.bias[Index(k)] < 10.0);
        CHECK(mm.bias[Index(k)] < 10.0);
    }
    CHECK(lts.bias[6] > 1e3);
    for (const auto* c : {&ols, &lts, &mm})
        for (Index k = 1; k < Index(ms.size()); ++k) {
            CHECK(c->bias[k] >= c->bias[k - 1]);
            CHECK(c->bias[k] >= c->raw_bias[k]);
        }
}

TEST_CASE("breakdown scan") {
    const Matrix data = xy_rows(simulate_scenario("fig7-maxbias", 2));
    const auto ols = breakdown_scan(ols_slope, data, ContaminationSpec{}, 10.0, {.trials = 3, .seed = 1, .threads = 0});
    CHECK(ols.exceeded);
    CHECK(ols.fraction == doctest::Approx(1.0 / 100.0));

    Rng rng(9);
    const Matrix sample = normal_matrix(20, 1, rng);
    ContaminationSpec mass;
    mass.kind = ContaminationSpec::Kind::point_mass;
    mass.point = vec({1e6});
    const auto med = breakdown_scan([](const Matrix& d) { return vec({median(d.col(0))}); }, sample, mass, 100.0,
                                    {.trials = 3, .seed = 1, .threads = 0});
    CHECK(med.exceeded);
    CHECK(med.fraction >= 0.5 - 1.0 / 20.0);

    const auto constant = breakdown_scan([](const Matrix&) { return vec({1.0}); }, sample, mass, 1.0,
                                         {.trials = 2, .seed = 1, .threads = 0});
    CHECK_FALSE(constant.exceeded);
    CHECK(constant.fraction == 1.0);
    CHECK_THROWS_AS(breakdown_scan(ols_slope, data, ContaminationSpec{}, 0.0), InputError);
}

TEST_CASE("scenarios are deterministic and flag their contamination") {
    for (const auto& name : scenario_names()) {
        CAPTURE(name);
        const auto a = simulate_scenario(name, 11);
        const auto b = simulate_scenario(name, 11);
        CHECK(same_bytes(a.X, b.X));
        CHECK(same_bytes(a.y, b.y));
        CHECK(a.labels == b.labels);
        CHECK(a.contaminated == b.contaminated);
    }
    const auto fig9 = simulate_scenario("fig9-mcd", 3, {.n = 87, .eps = 0.2});
    CHECK(std::count(fig9.contaminated.begin(), fig9.contaminated.end(), true) == 18);

    const auto fig8 = simulate_scenario("fig8-lda", 3);
    Index group0 = 0, flagged = 0;
    for (std::size_t i = 0; i < fig8.labels.size(); ++i) {
        group0 += fig8.labels[i] == 0;
        flagged += fig8.contaminated[i];
        if (fig8.contaminated[i]) CHECK(fig8.labels[i] == 0);
    }
    CHECK(flagged == Index(std::ceil(0.1 * double(group0))));
    CHECK_THROWS_AS(simulate_scenario("no-such-scenario", 1), InputError);
}
