#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "robmv/scale.hpp"

using namespace robmv;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(v.size());
    Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

// Independent bisection on mean rho(r/s) = delta; rho is monotone in s.
double bisect_m_scale(const Vector& r, const RhoFamily& f, double delta) {
    double lo = 1e-12, hi = 1e6;
    for (int i = 0; i < 300; ++i) {
        double mid = std::sqrt(lo * hi);
        double m = 0;
        for (Index j = 0; j < r.size(); ++j) m += rho(f, r[j] / mid);
        m /= double(r.size());
        (m > delta ? lo : hi) = mid;
    }
    return std::sqrt(lo * hi);
}

}  // namespace

TEST_CASE("rho families at reference points") {
    CHECK(rho_eval(RhoFamily::bisquare(2.5), 2.5).rho == doctest::Approx(1.0));
    CHECK(rho_eval(RhoFamily::bisquare(2.5), 7.0).rho == 1.0);
    CHECK(rho_eval(RhoFamily::huber(1.345), 3.0).psi == doctest::Approx(1.345));
    CHECK(rho_eval(RhoFamily::huber(1.345), -3.0).psi == doctest::Approx(-1.345));
    auto q = rho_eval(RhoFamily::quadratic(), 2.0);
    CHECK(q.rho == 4.0);
    CHECK(q.psi == 4.0);
    CHECK(q.weight == 2.0);
    CHECK(rho_eval(RhoFamily::indicator(), 1.5).rho == 1.0);
    CHECK(rho_eval(RhoFamily::indicator(), 0.5).rho == 0.0);
    // weight at zero is the limit psi(r)/r
    CHECK(rho_eval(RhoFamily::bisquare(2.0), 0.0).weight == doctest::Approx(6.0 / 4.0));
    CHECK(std::isfinite(rho_eval(RhoFamily::absolute(), 0.0).weight));
    CHECK_THROWS_AS(rho_eval(RhoFamily::huber(1.0), NAN), InputError);
    CHECK_THROWS_AS(rho_eval(RhoFamily::huber(1.0), INFINITY), InputError);
    CHECK_THROWS_AS(rho_eval(RhoFamily::bisquare(-1.0), 0.3), InputError);
}

TEST_CASE("bisquare rho matches closed form") {
    const double k = 3.0;
    for (double r = -4.0; r <= 4.0; r += 0.37) {
        double u = r / k;
        double expect = std::abs(r) <= k ? u * u * (3 - 3 * u * u + u * u * u * u) : 1.0;
        CHECK(rho(RhoFamily::bisquare(k), r) == doctest::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("psi is the derivative of rho") {
    for (auto f : {RhoFamily::huber(1.345), RhoFamily::bisquare(1.0), RhoFamily::bisquare(4.685),
                   RhoFamily::quadratic()}) {
        const double k = f.k;
        const double h = 1e-6;
        for (int i = 0; i < 100; ++i) {
            double r = -3 * k + 6 * k * (i + 0.5) / 100.0;
            double fd = (rho(f, r + h) - rho(f, r - h)) / (2 * h);
            CHECK(std::abs(fd - rho_eval(f, r).psi) < 1e-4);
        }
    }
}

TEST_CASE("bounded families saturate at one") {
    for (auto f : {RhoFamily::bisquare(1.0), RhoFamily::indicator()}) {
        CHECK(f.bounded());
        CHECK(rho(f, 1e9) == 1.0);
        for (double r = 0; r < 50; r += 0.5) CHECK(rho(f, r) <= 1.0);
    }
    CHECK_FALSE(RhoFamily::huber(1).bounded());
}

TEST_CASE("huber with huge k is half the quadratic") {
    auto hub = RhoFamily::huber(1e6);
    for (double r = -100; r <= 100; r += 0.5) {
        auto a = rho_eval(hub, r);
        auto b = rho_eval(RhoFamily::quadratic(), r);
        CHECK(std::abs(a.rho - b.rho / 2) <= 1e-6 * std::max(1.0, b.rho));
        CHECK(std::abs(a.psi - b.psi / 2) <= 1e-6);
        CHECK(std::abs(a.weight - b.weight / 2) <= 1e-6);
    }
}

TEST_CASE("mad") {
    CHECK(mad(vec({1, 2, 3, 4, 5}), false) == 1.0);
    CHECK(mad(vec({1, 2, 3, 4, 5}), true) == doctest::Approx(1.0 / 0.675));
    CHECK(mad(vec({7, 7, 7}), true) == 0.0);
    CHECK_THROWS_AS(mad(Vector(), true), InputError);
    CHECK_THROWS_AS(mad(vec({1, NAN}), true), InputError);
}

TEST_CASE("quantile and trimmed scales") {
    CHECK(quantile_scale(vec({-3, 1, 2}), 2) == 2.0);
    CHECK_THROWS_AS(quantile_scale(vec({1, 2}), 3), InputError);
    CHECK_THROWS_AS(quantile_scale(vec({1, 2}), 0), InputError);
    CHECK(trimmed_squares_scale(vec({3, 4}), 2) == doctest::Approx(std::sqrt(12.5)));
    CHECK(trimmed_squares_scale(vec({1, 1, 1, 100}), 3) == doctest::Approx(std::sqrt(0.75)));
}

TEST_CASE("M-scale reference values") {
    CHECK(m_scale(vec({1, 2, 3}), RhoFamily::indicator(), 0.5).value == 2.0);
    CHECK(m_scale(vec({3, 4}), RhoFamily::quadratic(), 1.0).value == doctest::Approx(5 / std::sqrt(2.0)));
    auto zero = m_scale(vec({0, 0, 0}), RhoFamily::bisquare(1), 0.5);
    CHECK(zero.value == 0.0);
    CHECK(zero.degenerate);
    CHECK_THROWS_AS(m_scale(vec({1, 2}), RhoFamily::bisquare(1), 1.0), InputError);
    CHECK_THROWS_AS(m_scale(vec({1, 2}), RhoFamily::bisquare(1), 0.0), InputError);
}

TEST_CASE("M-scale of a constant vector against bisection") {
    // r_i = c for all i: rho(c/s) = delta, so s = c / rho^{-1}(delta).
    Vector r = Vector::Constant(9, 2.0);
    auto est = m_scale(r, RhoFamily::bisquare(1.0), 0.5);
    CHECK(est.value == doctest::Approx(bisect_m_scale(r, RhoFamily::bisquare(1.0), 0.5)).epsilon(1e-8));
    CHECK(std::abs(rho(RhoFamily::bisquare(1.0), 2.0 / est.value) - 0.5) < 1e-9);
}

TEST_CASE("M-scale properties on random vectors") {
    Rng rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        Index n = 5 + Index(rng() % 60);
        Vector r = normal_matrix(n, 1, rng).col(0);
        if (trial % 3 == 0) r.head(n / 5) *= 100.0;
        for (auto f : {RhoFamily::bisquare(1.0), RhoFamily::bisquare(1.5476), RhoFamily::huber(1.345)}) {
            const double delta = 0.5;
            auto s = m_scale(r, f, delta);
            CHECK(std::abs(m_scale_residual(r, f, delta, s.value)) <= 1e-9);
            CHECK(s.value == doctest::Approx(bisect_m_scale(r, f, delta)).epsilon(1e-7));
            const double t = 0.01 + 10.0 * double(rng() % 1000) / 1000.0;
            auto st = m_scale(Vector(r * t), f, delta);
            CHECK(std::abs(st.value - t * s.value) <= 1e-10 * std::max(1.0, t * s.value) * 10);
            auto sn = m_scale(Vector(-r), f, delta);
            CHECK(sn.value == doctest::Approx(s.value).epsilon(1e-12));
        }
        // Other scales are equivariant too.
        const double t = 3.7;
        CHECK(mad(Vector(r * t)) == doctest::Approx(t * mad(r)).epsilon(1e-12));
        CHECK(quantile_scale(Vector(r * t), (n + 1) / 2) == doctest::Approx(t * quantile_scale(r, (n + 1) / 2)));
        CHECK(trimmed_squares_scale(Vector(r * t), n - 1) ==
              doctest::Approx(t * trimmed_squares_scale(r, n - 1)));
    }
}

TEST_CASE("consistency constants") {
    auto ind = consistency_constant(RhoFamily::indicator(), 0.5);
    CHECK(ind.tabulated);
    CHECK(ind.value == 0.675);
    CHECK(consistency_constant(RhoFamily::bisquare(1.0), 0.5).value == 1.65);
    CHECK(consistency_constant(RhoFamily::quadratic(), 1.0).value == 1.0);
    // The indicator constant is the median of |z|.
    auto mc = monte_carlo_consistency(RhoFamily::indicator(), 0.5, 200000);
    CHECK(std::abs(mc.value - 0.6745) < 0.01);
    CHECK(mc.std_error > 0);
    // Quadratic with delta=1 is the root mean square of z.
    auto q = monte_carlo_consistency(RhoFamily::quadratic(), 1.0, 200000);
    CHECK(std::abs(q.value - 1.0) < 0.01);
}
