#include "robmv/pls.hpp"

#include <cmath>

#include "robmv/loc_cov.hpp"
#include "robmv/scale.hpp"

namespace robmv {

namespace {

struct Nipals {
    Matrix W, P, T, R, B;
};

// Xc, Y already centered (and weighted). eta > 0 soft-thresholds each weight vector.
Nipals nipals(const Matrix& Xc, const Matrix& Y, Index k, double eta) {
    const Index n = Xc.rows(), p = Xc.cols();
    if (k < 1) throw InputError("PLS: need at least one component");
    if (k > std::min(n, p)) throw InputError("PLS: more components than min(n, p)");
    if (!(eta >= 0 && eta < 1)) throw InputError("PLS: sparsity parameter must lie in [0,1)");
    Nipals out{Matrix(p, k), Matrix(p, k), Matrix(n, k), Matrix(), Matrix()};
    Matrix Xh = Xc;
    const double base = std::max((Xc.transpose() * Y).norm(), 1e-300);
    const double xnorm = std::max(Xc.squaredNorm(), 1e-300);
    for (Index h = 0; h < k; ++h) {
        Matrix M = Xh.transpose() * Y;
        Vector w;
        if (M.cols() == 1) {
            w = M.col(0);
        } else {
            Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU);
            w = svd.matrixU().col(0);
            Index arg = 0;
            w.cwiseAbs().maxCoeff(&arg);
            if (w[arg] < 0) w = -w;
        }
        if (w.norm() <= 1e-12 * base) {
            if (h == 0 && eta > 0) throw SparsityError("PLS: X'y is zero");
            throw InputError("PLS: more components than the rank of the data");
        }
        if (eta > 0) {
            const double thr = eta * w.cwiseAbs().maxCoeff();
            for (Index j = 0; j < p; ++j) {
                const double a = std::abs(w[j]) - thr;
                w[j] = a > 0 ? std::copysign(a, w[j]) : 0.0;
            }
            if (w.norm() == 0.0) throw SparsityError("sparse PLS: every weight thresholded to zero");
        }
        w /= w.norm();
        Vector t = Xh * w;
        const double tt = t.squaredNorm();
        if (tt <= 1e-24 * xnorm) throw InputError("PLS: more components than the rank of the data");
        Vector load = Xh.transpose() * t / tt;
        Xh -= t * load.transpose();
        out.W.col(h) = w;
        out.P.col(h) = load;
        out.T.col(h) = t;
    }
    Matrix PW = out.P.transpose() * out.W;
    out.R = out.W * PW.inverse();
    out.T = Xc * out.R;
    Matrix TT = out.T.transpose() * out.T;
    out.B = out.R * TT.ldlt().solve(out.T.transpose() * Y);
    return out;
}

void check_xy(const Eigen::Ref<const Matrix>& X, Index ny) {
    if (X.rows() == 0 || X.cols() == 0) throw InputError("PLS: empty data");
    if (X.rows() != ny) throw InputError("PLS: X and Y row counts differ");
    require_finite(X, "PLS predictors");
}

PLSModel from_nipals(const Nipals& fit, Index k, double eta) {
    PLSModel m;
    m.weights = fit.W;
    m.loadings = fit.P;
    m.rotations = fit.R;
    m.coefficients = fit.B;
    m.n_components = k;
    m.eta = eta;
    return m;
}

}  // namespace

Matrix PLSModel::transform(const Eigen::Ref<const Matrix>& X) const {
    if (X.cols() != x_center.size()) throw InputError("PLS: column count differs from the fitted model");
    Matrix Z = (X.rowwise() - x_center.transpose()).array().rowwise() / x_scale.transpose().array();
    if (preprocess == PlsPreprocess::spatial_sign) Z = spatial_signs(Z, Vector::Zero(Z.cols()));
    return Z;
}

Matrix PLSModel::predict(const Eigen::Ref<const Matrix>& X) const {
    return (transform(X) * coefficients).rowwise() + y_center.transpose();
}

PLSModel pls_fit(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Matrix>& Y, Index k) {
    check_xy(X, Y.rows());
    require_finite(Y, "PLS response");
    Vector xc = column_means(X);
    Vector yc = column_means(Y);
    Matrix Xc = X.rowwise() - xc.transpose();
    Matrix Yc = Y.rowwise() - yc.transpose();
    PLSModel m = from_nipals(nipals(Xc, Yc, k, 0.0), k, 0.0);
    m.method = "pls";
    m.x_center = xc;
    m.x_scale = Vector::Ones(X.cols());
    m.y_center = yc;
    m.scores = Xc * m.rotations;
    m.case_weights = Vector::Ones(X.rows());
    return m;
}

CovariancePls pls_from_covariance(const Eigen::Ref<const Matrix>& Sxx, const Eigen::Ref<const Matrix>& Sxy, Index k) {
    const Index p = Sxx.rows();
    if (Sxx.cols() != p || Sxy.rows() != p) throw InputError("covariance PLS: block dimensions differ");
    if (k < 1 || k > p) throw InputError("covariance PLS: k out of range");
    Matrix S = Sxx;
    Matrix C = Sxy;
    Matrix W(p, k), P(p, k);
    const double base = std::max(Sxy.norm(), 1e-300);
    for (Index h = 0; h < k; ++h) {
        Vector w;
        if (C.cols() == 1) {
            w = C.col(0);
        } else {
            Eigen::JacobiSVD<Matrix> svd(C, Eigen::ComputeThinU);
            w = svd.matrixU().col(0);
            Index arg = 0;
            w.cwiseAbs().maxCoeff(&arg);
            if (w[arg] < 0) w = -w;
        }
        if (w.norm() <= 1e-12 * base) throw InputError("covariance PLS: more components than the rank");
        w /= w.norm();
        const double tvar = w.dot(S * w);
        if (!(tvar > 0)) throw InputError("covariance PLS: more components than the rank");
        Vector load = S * w / tvar;
        // Deflation of X by t p' expressed on the covariance blocks.
        C -= load * (w.transpose() * C);
        S -= load * load.transpose() * tvar;
        W.col(h) = w;
        P.col(h) = load;
    }
    CovariancePls out;
    out.weights = W;
    out.rotations = W * (P.transpose() * W).inverse();
    Matrix RSR = out.rotations.transpose() * Sxx * out.rotations;
    out.coefficients = out.rotations * RSR.ldlt().solve(out.rotations.transpose() * Sxy);
    return out;
}

PLSModel spatial_sign_pls(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y, Index k) {
    check_xy(X, y.size());
    require_finite(y, "PLS response");
    Vector xc = coordinatewise_median(X);
    const double yc = median(y);
    Matrix S = spatial_signs(X, xc);
    Matrix Y = (y.array() - yc).matrix();
    PLSModel m = from_nipals(nipals(S, Y, k, 0.0), k, 0.0);
    m.method = "spatial-sign-pls";
    m.preprocess = PlsPreprocess::spatial_sign;
    m.x_center = xc;
    m.x_scale = Vector::Ones(X.cols());
    m.y_center = Vector::Constant(1, yc);
    m.scores = S * m.rotations;
    m.case_weights = Vector::Ones(X.rows());
    return m;
}

double fair_weight(double z, double c) {
    const double a = 1.0 + std::abs(z / c);
    return 1.0 / (a * a);
}

PLSModel weighted_snipls(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y,
                         const Eigen::Ref<const Vector>& w, Index k, double eta) {
    check_xy(X, y.size());
    if (w.size() != X.rows()) throw InputError("weighted PLS: weight vector has wrong length");
    Vector xc = weighted_mean(X, w);
    const double yc = y.dot(w) / w.sum();
    Vector sw = w.cwiseSqrt();
    Matrix Xc = X.rowwise() - xc.transpose();
    Matrix Xw = Xc.array().colwise() * sw.array();
    Matrix Yw = ((y.array() - yc) * sw.array()).matrix();
    PLSModel m = from_nipals(nipals(Xw, Yw, k, eta), k, eta);
    m.x_center = xc;
    m.x_scale = Vector::Ones(X.cols());
    m.y_center = Vector::Constant(1, yc);
    m.scores = Xc * m.rotations;
    m.case_weights = w;
    return m;
}

PLSModel snipls_fit(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y, Index k, double eta) {
    require_finite(y, "PLS response");
    PLSModel m = weighted_snipls(X, y, Vector::Ones(X.rows()), k, eta);
    m.method = eta > 0 ? "snipls" : "pls";
    return m;
}

namespace {

// Residual scales this far below the response spread count as an exact fit.
double exact_tolerance(const Eigen::Ref<const Vector>& y) {
    return 1e-10 * std::max(1.0, (y.array() - y.mean()).abs().maxCoeff());
}

double residual_weight(double r, double s, double tol, double c) {
    if (s <= tol) return std::abs(r) <= tol ? 1.0 : 0.0;
    return fair_weight(r / s, c);
}

Vector robust_weights(const PLSModel& m, const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y,
                      double c) {
    Vector r = y - m.predict(X).col(0);
    const double s = mad(r, true);
    const double tol = exact_tolerance(y);
    Matrix T = m.project(X);
    Vector center = coordinatewise_median(T);
    Vector d = (T.rowwise() - center.transpose()).rowwise().norm();
    const double md = median(d);
    Vector w(X.rows());
    for (Index i = 0; i < X.rows(); ++i) {
        const double wt = md > 0 ? fair_weight(d[i] / md, c) : 1.0;
        w[i] = residual_weight(r[i], s, tol, c) * wt;
    }
    return w;
}

PLSModel reweighted(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y, Index k, double eta,
                    const PrmOptions& options, const char* name) {
    check_xy(X, y.size());
    require_finite(y, "PLS response");
    const Index n = X.rows();
    if (!(options.relaxation >= 0.0 && options.relaxation < 1.0)) throw InputError("PRM: relaxation must lie in [0, 1)");
    Vector w;
    if (options.start_weights.size() > 0) {
        if (options.start_weights.size() != n) throw InputError("PRM: start weights have wrong length");
        w = options.start_weights;
    } else {
        Vector out = sd_outlyingness(X, {.n_directions = options.n_directions, .seed = options.seed});
        const double mo = median(out);
        PLSModel start = spatial_sign_pls(X, y, k);
        Vector r = y - start.predict(X).col(0);
        const double s = mad(r, true);
        const double tol = exact_tolerance(y);
        w.resize(n);
        for (Index i = 0; i < n; ++i) {
            const double wx = mo > 0 ? fair_weight(out[i] / mo, options.fair_c) : 1.0;
            w[i] = wx * residual_weight(r[i], s, tol, options.fair_c);
        }
    }
    PLSModel m;
    Matrix prev_B;
    for (int it = 1; it <= options.max_iter; ++it) {
        PLSModel next = weighted_snipls(X, y, w, k, eta);
        next.iterations = it;
        bool same_support = true;
        if (prev_B.size() > 0) {
            for (Index j = 0; j < prev_B.rows(); ++j)
                same_support = same_support && ((prev_B(j, 0) == 0.0) == (next.coefficients(j, 0) == 0.0));
        }
        const double change = prev_B.size() > 0 ? (next.coefficients - prev_B).norm() / std::max(prev_B.norm(), 1e-300)
                                                  : INFINITY;
        prev_B = next.coefficients;
        m = std::move(next);
        Vector fresh = robust_weights(m, X, y, options.fair_c);
        w = options.relaxation * w + (1.0 - options.relaxation) * fresh;
        if (change < options.tol && same_support) {
            m.method = name;
            return m;
        }
    }
    m.converged = false;
    m.method = name;
    throw ConvergenceError(std::string(name) + " did not converge", options.max_iter, m);
}

}  // namespace

PLSModel prm_fit(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y, Index k,
                 const PrmOptions& options) {
    return reweighted(X, y, k, 0.0, options, "prm");
}

PLSModel sprm_fit(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y, Index k, double eta,
                  const PrmOptions& options) {
    return reweighted(X, y, k, eta, options, "sprm");
}

}  // namespace robmv
