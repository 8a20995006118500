#include "robmv/loc_cov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "robmv/scale.hpp"

namespace robmv {

namespace {

void check_data(const Eigen::Ref<const Matrix>& X) {
    if (X.rows() == 0 || X.cols() == 0) throw InputError("empty data matrix");
    require_finite(X, "data matrix");
}

void fill_distances(CovarianceEstimate& est, const Eigen::Ref<const Matrix>& X) {
    try {
        est.sq_distances = mahalanobis(X, est.location, est.scatter);
    } catch (const SingularityError&) {
        est.sq_distances.resize(0);
    }
}

// Mean, covariance and log-determinant of a subset; logdet = -inf when singular.
struct SubsetFit {
    Vector mean;
    Matrix cov;
    double logdet = std::numeric_limits<double>::infinity();
    IndexList subset;
    bool singular = false;
};

SubsetFit fit_subset(const Eigen::Ref<const Matrix>& X, IndexList subset) {
    SubsetFit f;
    Matrix S = select_rows(X, subset);
    f.mean = column_means(S);
    f.cov = sample_covariance(S);
    Eigen::LLT<Matrix> llt(f.cov);
    const double scale = std::max(1e-300, f.cov.diagonal().maxCoeff());
    if (llt.info() != Eigen::Success || llt.matrixL().toDenseMatrix().diagonal().minCoeff() <= 1e-7 * std::sqrt(scale)) {
        f.singular = true;
        f.logdet = -std::numeric_limits<double>::infinity();
    } else {
        f.logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    }
    f.subset = std::move(subset);
    return f;
}

SubsetFit c_step(const Eigen::Ref<const Matrix>& X, const SubsetFit& cur, Index h) {
    Vector d = mahalanobis(X, cur.mean, cur.cov);
    return fit_subset(X, smallest_h(d, h));
}

bool better(const SubsetFit& a, const SubsetFit& b) {
    const double tol = 1e-12 * std::max(1.0, std::abs(b.logdet));
    if (a.logdet < b.logdet - tol) return true;
    if (a.logdet > b.logdet + tol) return false;
    return a.subset < b.subset;
}

}  // namespace

Vector coordinatewise_median(const Eigen::Ref<const Matrix>& X) {
    check_data(X);
    Vector m(X.cols());
    for (Index j = 0; j < X.cols(); ++j) m[j] = median(X.col(j));
    return m;
}

double spatial_median_objective(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& m) {
    return (X.rowwise() - m.transpose()).rowwise().norm().sum();
}

Vector spatial_median(const Eigen::Ref<const Matrix>& X, const SpatialMedianOptions& options) {
    check_data(X);
    const Index n = X.rows();
    Vector mu = coordinatewise_median(X);
    for (int it = 1; it <= options.max_iter; ++it) {
        const double eps = 1e-12 * (1.0 + mu.norm());
        Vector num = Vector::Zero(X.cols());
        Vector pull = Vector::Zero(X.cols());
        double denom = 0.0;
        Index coincident = 0;
        for (Index i = 0; i < n; ++i) {
            Vector diff = X.row(i).transpose() - mu;
            const double d = diff.norm();
            if (d <= eps) {
                ++coincident;
                continue;
            }
            num += X.row(i).transpose() / d;
            pull += diff / d;
            denom += 1.0 / d;
        }
        if (denom == 0.0) return mu;
        Vector next = num / denom;
        if (coincident > 0) {
            const double r = pull.norm();
            if (r <= double(coincident)) return mu;
            const double a = double(coincident) / r;
            next = (1.0 - a) * next + a * mu;
        }
        const double step = (next - mu).norm();
        mu = next;
        if (step <= options.tol * (1.0 + mu.norm())) return mu;
    }
    throw ConvergenceError("spatial median did not converge", options.max_iter, mu);
}

Vector mahalanobis(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& location,
                   const Eigen::Ref<const Matrix>& scatter) {
    if (location.size() != X.cols() || scatter.rows() != X.cols() || scatter.cols() != X.cols())
        throw InputError("mahalanobis: dimension mismatch");
    Eigen::LLT<Matrix> llt(scatter);
    if (llt.info() != Eigen::Success) throw SingularityError("mahalanobis: scatter is not positive definite");
    Vector diag = llt.matrixLLT().diagonal();
    if (diag.minCoeff() <= 1e-12 * std::max(1e-300, diag.maxCoeff()))
        throw SingularityError("mahalanobis: scatter is numerically singular");
    Matrix centered = (X.rowwise() - location.transpose()).transpose();
    Matrix z = llt.matrixL().solve(centered);
    return z.colwise().squaredNorm().transpose();
}

CovarianceEstimate classical_covariance(const Eigen::Ref<const Matrix>& X) {
    check_data(X);
    CovarianceEstimate est;
    est.method = "classical";
    est.location = column_means(X);
    est.scatter = sample_covariance(X);
    est.case_weights = Vector::Ones(X.rows());
    fill_distances(est, X);
    return est;
}

CovarianceEstimate mcd_fit(const Eigen::Ref<const Matrix>& X, const McdOptions& options) {
    check_data(X);
    const Index n = X.rows(), p = X.cols();
    if (p >= n) throw DimensionError("MCD needs more observations than variables");
    const Index h = options.h > 0 ? options.h : (n + p + 1) / 2;
    if (h <= p || h > n) throw InputError("MCD: h must lie in (p, n]");

    std::vector<SubsetFit> pool;
    pool.reserve(options.n_starts);
    for (Index s = 0; s < options.n_starts; ++s) {
        Rng rng = make_rng(options.seed, std::uint64_t(s));
        IndexList perm(n);
        for (Index i = 0; i < n; ++i) perm[i] = i;
        std::shuffle(perm.begin(), perm.end(), rng);
        // Grow the (p+1)-subset until its covariance is invertible.
        Index m = p + 1;
        SubsetFit start;
        for (; m <= h; ++m) {
            IndexList sub(perm.begin(), perm.begin() + m);
            std::sort(sub.begin(), sub.end());
            start = fit_subset(X, sub);
            if (!start.singular) break;
        }
        if (start.singular) continue;
        SubsetFit cur = start;
        for (int k = 0; k < 2 && !cur.singular; ++k) cur = c_step(X, cur, h);
        pool.push_back(std::move(cur));
    }
    if (pool.empty()) throw DegenerateError("MCD: every start subset was singular");

    std::sort(pool.begin(), pool.end(), better);
    if (Index(pool.size()) > options.n_keep) pool.resize(options.n_keep);
    SubsetFit best;
    best.logdet = std::numeric_limits<double>::infinity();
    for (auto& cand : pool) {
        SubsetFit cur = cand;
        for (int k = 0; k < options.max_csteps && !cur.singular; ++k) {
            SubsetFit next = c_step(X, cur, h);
            const bool same = next.subset == cur.subset;
            cur = std::move(next);
            if (same) break;
        }
        if (best.subset.empty() || better(cur, best)) best = std::move(cur);
    }
    if (best.singular)
        throw DegenerateError("MCD: h observations lie on a hyperplane (exact fit)");

    CovarianceEstimate est;
    est.method = "mcd";
    est.h = h;
    est.seed = options.seed;
    est.subset = best.subset;
    est.location = best.mean;
    Vector raw = mahalanobis(X, best.mean, best.cov);
    est.consistency = median(raw) / chi2_quantile(0.5, double(p));
    est.scatter = best.cov * est.consistency;
    est.sq_distances = raw / est.consistency;
    est.case_weights = Vector::Zero(n);
    for (Index i : best.subset) est.case_weights[i] = 1.0;
    if (options.reweight) {
        const double cut = chi2_quantile(0.975, double(p));
        Vector w = (est.sq_distances.array() <= cut).cast<double>().matrix();
        if (w.sum() > double(p)) {
            est.location = weighted_mean(X, w);
            Matrix S = weighted_covariance(X, w, est.location) * (w.sum() / (w.sum() - 1.0));
            Vector d = mahalanobis(X, est.location, S);
            const double factor = median(d) / chi2_quantile(0.5, double(p));
            est.scatter = S * factor;
            est.sq_distances = d / factor;
            est.case_weights = w;
            est.method = "mcd-reweighted";
        }
    }
    return est;
}

Matrix projection_directions(const Eigen::Ref<const Matrix>& X, Index count, std::uint64_t seed) {
    const Index n = X.rows(), p = X.cols();
    count = std::max(count, p);
    Matrix dirs(count, p);
    dirs.topRows(p).setIdentity();
    Rng rng(derive_seed(seed, 0xd1));
    std::normal_distribution<double> z;
    std::uniform_int_distribution<Index> pick(0, n - 1);
    for (Index k = p; k < count; ++k) {
        Vector a = Vector::Zero(p);
        if ((k - p) % 2 == 0 && n > 1) {
            for (int attempt = 0; attempt < 20 && a.norm() == 0.0; ++attempt) {
                Index i = pick(rng), j = pick(rng);
                if (i != j) a = (X.row(i) - X.row(j)).transpose();
            }
        }
        while (a.norm() == 0.0)
            for (Index j = 0; j < p; ++j) a[j] = z(rng);
        dirs.row(k) = a.transpose() / a.norm();
    }
    return dirs;
}

Vector sd_outlyingness(const Eigen::Ref<const Matrix>& X, const StahelDonohoOptions& options) {
    check_data(X);
    const Index p = X.cols();
    const Index count = options.n_directions > 0 ? options.n_directions : std::min<Index>(250 * p, 5000);
    Matrix dirs = projection_directions(X, count, options.seed);
    Vector out = Vector::Zero(X.rows());
    Index used = 0;
    for (Index k = 0; k < dirs.rows(); ++k) {
        Vector proj = X * dirs.row(k).transpose();
        const double s = mad(proj, true);
        if (!(s > 0)) continue;
        ++used;
        const double m = median(proj);
        out = out.cwiseMax(((proj.array() - m).abs() / s).matrix());
    }
    if (used == 0) throw DegenerateError("Stahel-Donoho: every projection has zero MAD");
    return out;
}

CovarianceEstimate stahel_donoho_fit(const Eigen::Ref<const Matrix>& X, const StahelDonohoOptions& options) {
    const Index p = X.cols();
    Vector u = sd_outlyingness(X, options);
    const double c = std::sqrt(chi2_quantile(0.95, double(p)));
    Vector w(u.size());
    for (Index i = 0; i < u.size(); ++i) w[i] = u[i] <= c ? 1.0 : (c / u[i]) * (c / u[i]);
    CovarianceEstimate est;
    est.method = "stahel-donoho";
    est.seed = options.seed;
    est.n_directions = options.n_directions > 0 ? std::max(options.n_directions, p) : std::min<Index>(250 * p, 5000);
    est.location = weighted_mean(X, w);
    est.scatter = weighted_covariance(X, w, est.location);
    est.case_weights = w;
    fill_distances(est, X);
    return est;
}

Matrix spatial_signs(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& center) {
    if (center.size() != X.cols()) throw InputError("spatial signs: center has wrong length");
    Matrix out = X.rowwise() - center.transpose();
    for (Index i = 0; i < out.rows(); ++i) {
        const double norm = out.row(i).norm();
        if (norm > 0) out.row(i) /= norm;
    }
    return out;
}

CovarianceEstimate sign_covariance(const Eigen::Ref<const Matrix>& X) {
    check_data(X);
    CovarianceEstimate est;
    est.method = "sign-covariance";
    est.location = spatial_median(X);
    Matrix S = spatial_signs(X, est.location);
    EigenPairs eig = symmetric_eigen(S.transpose() * S / double(X.rows()));
    const Index p = X.cols();
    Vector lambda(p);
    for (Index j = 0; j < p; ++j) {
        const double s = mad(X * eig.vectors.col(j), true);
        lambda[j] = s * s;
    }
    // Order components by their robust variance.
    IndexList order = argsort(-lambda);
    est.eigenvalues.resize(p);
    est.eigenvectors.resize(p, p);
    for (Index j = 0; j < p; ++j) {
        est.eigenvalues[j] = lambda[order[j]];
        est.eigenvectors.col(j) = eig.vectors.col(order[j]);
    }
    est.scatter = est.eigenvectors * est.eigenvalues.asDiagonal() * est.eigenvectors.transpose();
    est.case_weights = Vector::Ones(X.rows());
    fill_distances(est, X);
    return est;
}

Ellipse tolerance_ellipse(const CovarianceEstimate& est, double level) {
    if (est.location.size() != 2) throw UnsupportedError("tolerance ellipse is only defined for p = 2");
    if (!(level > 0 && level < 1)) throw InputError("tolerance ellipse: level must lie in (0,1)");
    EigenPairs eig = symmetric_eigen(est.scatter);
    if (!(eig.values[1] > 0)) throw SingularityError("tolerance ellipse: scatter is singular");
    Ellipse e;
    e.center = est.location;
    e.radius2 = chi2_quantile(level, 2.0);
    e.major = std::sqrt(eig.values[0] * e.radius2);
    e.minor = std::sqrt(eig.values[1] * e.radius2);
    e.angle = std::atan2(eig.vectors(1, 0), eig.vectors(0, 0));
    if (e.angle > M_PI / 2) e.angle -= M_PI;
    if (e.angle <= -M_PI / 2) e.angle += M_PI;
    return e;
}

Matrix ellipse_points(const Ellipse& e, Index count) {
    Matrix out(count, 2);
    const double c = std::cos(e.angle), s = std::sin(e.angle);
    for (Index k = 0; k < count; ++k) {
        const double t = 2.0 * M_PI * double(k) / double(count);
        const double a = e.major * std::cos(t), b = e.minor * std::sin(t);
        out(k, 0) = e.center[0] + c * a - s * b;
        out(k, 1) = e.center[1] + s * a + c * b;
    }
    return out;
}

}  // namespace robmv
