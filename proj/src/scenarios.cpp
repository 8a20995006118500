#include "robmv/scenarios.hpp"

#include <algorithm>
#include <cmath>

namespace robmv {

namespace {

Matrix bivariate(Index n, double rho, Rng& rng) {
    Matrix Z = normal_matrix(n, 2, rng);
    Matrix L(2, 2);
    L << 1, 0, rho, std::sqrt(1 - rho * rho);
    return Z * L.transpose();
}

Index count_for(double eps, Index n) { return Index(std::ceil(eps * double(n) - 1e-9)); }

Scenario fig2(std::uint64_t seed, const ScenarioParams& prm) {
    Scenario s;
    const Index n = prm.n > 0 ? prm.n : 100;
    const double eps = prm.eps >= 0 ? prm.eps : 0.1;
    Rng rng(seed);
    s.X = bivariate(n, 0.7, rng);
    const Index m = count_for(eps, n);
    s.contaminated.assign(n, false);
    for (Index i = 0; i < m; ++i) {
        s.X.row(i) = Eigen::RowVector2d(3.5, -3.5) + 0.3 * normal_matrix(1, 2, rng);
        s.contaminated[i] = true;
    }
    s.params = {{"n", double(n)}, {"eps", eps}, {"rho", 0.7}};
    return s;
}

// Trivariate cloud with sd (2, 1, 0.5); a tight cluster placed along the third axis.
Scenario trivariate(std::uint64_t seed, const ScenarioParams& prm, double cluster_pos) {
    Scenario s;
    const Index n = prm.n > 0 ? prm.n : 200;
    const double eps = prm.eps >= 0 ? prm.eps : 0.1;
    Rng rng(seed);
    s.X = normal_matrix(n, 3, rng) * Eigen::Vector3d(2.0, 1.0, 0.5).asDiagonal();
    const Index m = count_for(eps, n);
    s.contaminated.assign(n, false);
    for (Index i = 0; i < m; ++i) {
        s.X.row(i) = Eigen::RowVector3d(0, 0, cluster_pos) + 0.2 * normal_matrix(1, 3, rng);
        s.contaminated[i] = true;
    }
    s.truth = Eigen::Vector3d(1, 0, 0);
    s.params = {{"n", double(n)}, {"eps", eps}, {"cluster", cluster_pos}};
    return s;
}

Scenario regression_line(std::uint64_t seed, const ScenarioParams& prm, Index default_n) {
    Scenario s;
    const Index n = prm.n > 0 ? prm.n : default_n;
    Rng rng(seed);
    Matrix x = normal_matrix(n, 1, rng);
    Vector e = normal_matrix(n, 1, rng).col(0);
    s.X = x;
    s.y = Vector::Constant(n, 1.0) + 2.0 * x.col(0) + e;
    s.contaminated.assign(n, false);
    s.truth = Eigen::Vector2d(1.0, 2.0);
    s.params = {{"n", double(n)}, {"intercept", 1.0}, {"slope", 2.0}};
    return s;
}

Scenario fig5(std::uint64_t seed, const ScenarioParams& prm) {
    Scenario s = regression_line(seed, prm, 50);
    const Index n = s.X.rows();
    const double eps = prm.eps >= 0 ? prm.eps : 0.1;
    const Index m = count_for(eps, n);
    Rng rng(derive_seed(seed, 1));
    for (Index i = 0; i < m; ++i) {
        s.X(i, 0) = 6.0 + 0.3 * normal_matrix(1, 1, rng)(0, 0);
        s.y[i] = -8.0 + 0.5 * normal_matrix(1, 1, rng)(0, 0);
        s.contaminated[i] = true;
    }
    s.params["eps"] = eps;
    return s;
}

// Two Gaussian groups; a fraction of group 0 is drawn from group 1's distribution.
Scenario two_groups(std::uint64_t seed, const ScenarioParams& prm) {
    Scenario s;
    const Index per = prm.n > 0 ? prm.n / 2 : 100;
    const double eps = prm.eps >= 0 ? prm.eps : 0.1;
    Rng rng(seed);
    Eigen::Vector2d mu0(0, 0), mu1(3.5, 3.5);
    Matrix L0 = Matrix::Identity(2, 2);
    Matrix L1(2, 2);
    L1 << 1.5, 0.0, 1.2, 0.5;
    auto draw = [&](int g) -> Eigen::RowVector2d {
        Vector z = normal_matrix(2, 1, rng).col(0);
        return g == 0 ? Eigen::RowVector2d((mu0 + L0 * z).transpose()) : Eigen::RowVector2d((mu1 + L1 * z).transpose());
    };
    const Index m = count_for(eps, per);
    s.X.resize(2 * per, 2);
    s.labels.assign(2 * per, 0);
    s.contaminated.assign(2 * per, false);
    for (Index i = 0; i < per; ++i) {
        const bool bad = i < m;
        s.X.row(i) = draw(bad ? 1 : 0);
        s.contaminated[i] = bad;
    }
    for (Index i = per; i < 2 * per; ++i) {
        s.X.row(i) = draw(1);
        s.labels[i] = 1;
    }
    const Index nt = 500;
    s.X_test.resize(2 * nt, 2);
    s.labels_test.assign(2 * nt, 0);
    for (Index i = 0; i < 2 * nt; ++i) {
        const int g = i < nt ? 0 : 1;
        s.X_test.row(i) = draw(g);
        s.labels_test[i] = g;
    }
    s.params = {{"n_per_group", double(per)}, {"eps", eps}};
    return s;
}

Scenario fig9(std::uint64_t seed, const ScenarioParams& prm) {
    Scenario s;
    const Index n = prm.n > 0 ? prm.n : 100;
    const double eps = prm.eps >= 0 ? prm.eps : 0.2;
    Rng rng(seed);
    s.X = bivariate(n, 0.7, rng);
    const Index m = count_for(eps, n);
    s.contaminated.assign(n, false);
    Matrix L(2, 2);
    L << 0.5, 0, -0.45, 0.2;
    for (Index i = 0; i < m; ++i) {
        Vector z = normal_matrix(2, 1, rng).col(0);
        s.X.row(i) = (Eigen::Vector2d(2.5, -2.5) + L * z).transpose();
        s.contaminated[i] = true;
    }
    s.params = {{"n", double(n)}, {"eps", eps}, {"rho", 0.7}};
    return s;
}

// Spectra-like data: smooth loading curves over 30 channels, 3 latent factors.
// Six training cases carry a spurious peak on the first band while their
// responses stay regular: bad leverage points.
Scenario glass(std::uint64_t seed, const ScenarioParams& prm) {
    Scenario s;
    const Index n = prm.n > 0 ? prm.n : 41;
    const Index n_bad = prm.eps >= 0 ? count_for(prm.eps, n) : 6;
    const Index p = 30, k = 3, n_test = 200;
    Rng rng(seed);
    Matrix P(p, k);
    for (Index j = 0; j < p; ++j) {
        const double u = double(j) / double(p - 1);
        P(j, 0) = std::exp(-std::pow((u - 0.25) / 0.12, 2));
        P(j, 1) = std::exp(-std::pow((u - 0.55) / 0.10, 2));
        P(j, 2) = std::exp(-std::pow((u - 0.80) / 0.08, 2));
    }
    const Eigen::Vector3d sd(2.0, 1.0, 0.7), coef(1.0, -1.0, 0.5);
    auto make = [&](Index rows, Matrix& X, Vector& y) {
        Matrix T = normal_matrix(rows, k, rng) * sd.asDiagonal();
        X = T * P.transpose() + 0.05 * normal_matrix(rows, p, rng);
        y = T * coef + 0.1 * normal_matrix(rows, 1, rng).col(0);
    };
    make(n, s.X, s.y);
    s.contaminated.assign(n, false);
    for (Index i = 0; i < n_bad; ++i) {
        s.X.row(i) += 4.0 * P.col(0).transpose();
        s.contaminated[i] = true;
    }
    make(n_test, s.X_test, s.y_test);
    s.truth = coef;
    s.params = {{"n", double(n)}, {"n_bad", double(n_bad)}, {"p", double(p)}, {"k", double(k)}};
    return s;
}

// Two groups in 30 dimensions differing in the first 5 variables; a fraction of
// group 0 carries label 0 but is drawn from group 1.
Scenario mislabels(std::uint64_t seed, const ScenarioParams& prm) {
    Scenario s;
    const Index per = prm.n > 0 ? prm.n / 2 : 50;
    const double eps = prm.eps >= 0 ? prm.eps : 0.1;
    const Index p = 30;
    Rng rng(seed);
    Vector shift = Vector::Zero(p);
    shift.head(5).setConstant(1.2);
    auto draw = [&](int g) -> Vector {
        Vector x = normal_matrix(p, 1, rng).col(0);
        return g == 1 ? Vector(x + shift) : x;
    };
    const Index m = count_for(eps, per);
    s.X.resize(2 * per, p);
    s.labels.assign(2 * per, 0);
    s.contaminated.assign(2 * per, false);
    for (Index i = 0; i < 2 * per; ++i) {
        const int g = i < per ? 0 : 1;
        const bool bad = g == 0 && i < m;
        s.X.row(i) = draw(bad ? 1 : g).transpose();
        s.labels[i] = g;
        s.contaminated[i] = bad;
    }
    const Index nt = 200;
    s.X_test.resize(2 * nt, p);
    s.labels_test.assign(2 * nt, 0);
    for (Index i = 0; i < 2 * nt; ++i) {
        const int g = i < nt ? 0 : 1;
        s.X_test.row(i) = draw(g).transpose();
        s.labels_test[i] = g;
    }
    s.truth = shift;
    s.params = {{"n_per_group", double(per)}, {"eps", eps}, {"p", double(p)}};
    return s;
}

}  // namespace

std::vector<std::string> scenario_names() {
    return {"fig2-bivariate", "fig3-trivariate-pca", "fig4-trivariate-pca", "fig5-swamping",
            "fig6-eif",       "fig7-maxbias",        "fig8-lda",            "fig10-qda",
            "fig9-mcd",       "glass-analogue",      "two-group-mislabels"};
}

Scenario simulate_scenario(const std::string& name, std::uint64_t seed, const ScenarioParams& params) {
    Scenario s;
    if (name == "fig2-bivariate" || name == "fig2")
        s = fig2(seed, params);
    else if (name == "fig3-trivariate-pca" || name == "fig3")
        s = trivariate(seed, params, 15.0);
    else if (name == "fig4-trivariate-pca" || name == "fig4")
        s = trivariate(seed, params, 6.0);
    else if (name == "fig5-swamping" || name == "fig5")
        s = fig5(seed, params);
    else if (name == "fig6-eif" || name == "fig6")
        s = regression_line(seed, params, 100);
    else if (name == "fig7-maxbias" || name == "fig7")
        s = regression_line(seed, params, 100);
    else if (name == "fig8-lda" || name == "fig8" || name == "fig10-qda" || name == "fig10" || name == "fig8/10-lda")
        s = two_groups(seed, params);
    else if (name == "fig9-mcd" || name == "fig9")
        s = fig9(seed, params);
    else if (name == "glass-analogue" || name == "glass")
        s = glass(seed, params);
    else if (name == "two-group-mislabels" || name == "mislabels")
        s = mislabels(seed, params);
    else
        throw InputError("unknown scenario: " + name);
    s.name = name;
    s.seed = seed;
    return s;
}

}  // namespace robmv
