#include "robmv/pca.hpp"

#include <cmath>

#include "robmv/loc_cov.hpp"

namespace robmv {

namespace {

void check(const Eigen::Ref<const Matrix>& X, Index q, Index max_q) {
    if (X.rows() == 0 || X.cols() == 0) throw InputError("PCA: empty data");
    require_finite(X, "PCA data");
    if (q < 1 || q > max_q) throw InputError("PCA: number of components out of range");
}

}  // namespace

Matrix PCAModel::scores(const Eigen::Ref<const Matrix>& X) const {
    if (X.cols() != center.size()) throw InputError("PCA scores: column count mismatch");
    return (X.rowwise() - center.transpose()) * loadings;
}

PCAModel classical_pca(const Eigen::Ref<const Matrix>& X, Index q) {
    check(X, q, std::min(X.rows() - 1, X.cols()));
    PCAModel m;
    m.method = "classical";
    m.center = column_means(X);
    EigenPairs eig = symmetric_eigen(sample_covariance(X));
    m.spectrum = eig.values.cwiseMax(0.0);
    m.loadings = eig.vectors.leftCols(q);
    m.eigenvalues = m.spectrum.head(q);
    m.case_weights = Vector::Ones(X.rows());
    return m;
}

double unexplained_variance(const Eigen::Ref<const Vector>& eigenvalues, Index q) {
    if (q < 0 || q > eigenvalues.size()) throw InputError("unexplained variance: q out of range");
    if ((eigenvalues.array() < 0).any()) throw InputError("unexplained variance: negative eigenvalue");
    const double total = eigenvalues.sum();
    if (!(total > 0)) throw DegenerateError("unexplained variance: total variance is zero");
    return eigenvalues.tail(eigenvalues.size() - q).sum() / total;
}

Reconstruction reconstruct(const PCAModel& model, const Eigen::Ref<const Vector>& x) {
    if (x.size() != model.center.size()) throw InputError("reconstruct: length mismatch");
    Vector c = x - model.center;
    Reconstruction r;
    r.fitted = model.loadings * (model.loadings.transpose() * c) + model.center;
    r.orthogonal_distance = (x - r.fitted).norm();
    return r;
}

OutlierMap outlier_map(const PCAModel& model, const Eigen::Ref<const Matrix>& X) {
    Matrix T = model.scores(X);
    OutlierMap out;
    out.score_distance.resize(X.rows());
    out.orthogonal_distance.resize(X.rows());
    for (Index i = 0; i < X.rows(); ++i) {
        double sd = 0.0;
        for (Index j = 0; j < model.q(); ++j)
            sd += model.eigenvalues[j] > 0 ? T(i, j) * T(i, j) / model.eigenvalues[j] : 0.0;
        out.score_distance[i] = std::sqrt(sd);
        out.orthogonal_distance[i] = reconstruct(model, X.row(i).transpose()).orthogonal_distance;
    }
    return out;
}

PCAModel spherical_pca(const Eigen::Ref<const Matrix>& X, Index q) {
    check(X, q, X.cols());
    CovarianceEstimate sc = sign_covariance(X);
    PCAModel m;
    m.method = "spherical";
    m.center = sc.location;
    m.spectrum = sc.eigenvalues;
    m.loadings = sc.eigenvectors.leftCols(q);
    m.eigenvalues = sc.eigenvalues.head(q);
    m.case_weights = Vector::Ones(X.rows());
    return m;
}

PCAModel maronna_pca(const Eigen::Ref<const Matrix>& X, Index q, const MaronnaOptions& options) {
    check(X, q, X.cols());
    PCAModel m = spherical_pca(X, q);
    m.method = "maronna";
    m.case_weights = Vector::Ones(X.rows());
    const Index n = X.rows();
    for (int it = 1; it <= options.max_iter; ++it) {
        Vector r(n);
        for (Index i = 0; i < n; ++i) {
            const double d = reconstruct(m, X.row(i).transpose()).orthogonal_distance;
            r[i] = d * d;
        }
        ScaleEstimate s = m_scale(r, options.family, options.delta);
        m.iterations = it;
        if (s.value == 0.0 && (r.array() == 0.0).all()) return m;  // data lie in a q-dim subspace
        Vector w(n);
        for (Index i = 0; i < n; ++i) {
            if (s.value > 0)
                w[i] = scale_weight(options.family, r[i] / s.value);
            else
                w[i] = r[i] == 0.0 ? scale_weight(options.family, 0.0) : 0.0;
        }
        Vector center = weighted_mean(X, w);
        EigenPairs eig = symmetric_eigen(weighted_covariance(X, w, center));
        Matrix B = eig.vectors.leftCols(q);
        const double angle = principal_angle(B, m.loadings);
        m.center = center;
        m.loadings = B;
        m.spectrum = eig.values.cwiseMax(0.0);
        m.eigenvalues = m.spectrum.head(q);
        m.case_weights = w / w.maxCoeff();
        if (angle < options.tol) return m;
    }
    throw ConvergenceError("Maronna PCA did not converge", options.max_iter, m);
}

PCAModel pp_pca(const Eigen::Ref<const Matrix>& X, Index q, const ProjectionIndex& index, const GridConfig& cfg) {
    check(X, q, X.cols());
    const Index p = X.cols();
    PCAModel m;
    m.method = "pp:" + index.name;
    m.center = spatial_median(X);
    Matrix Z = X.rowwise() - m.center.transpose();

    // Search in the span of the data: directions orthogonal to it carry no spread
    // and only slow the coordinate-plane sweeps down.
    Eigen::BDCSVD<Matrix> svd(Z, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    Index rank = 0;
    while (rank < sv.size() && sv[rank] > 1e-10 * std::max(1.0, sv[0])) ++rank;
    if (rank == 0) throw DegenerateError("PP PCA: data have no spread");
    Matrix basis = svd.matrixV().leftCols(rank);
    Matrix S = svd.matrixU().leftCols(rank) * sv.head(rank).asDiagonal();

    const Index found = std::min(q, rank);
    Matrix C(rank, found);
    Vector lambda(found);
    for (Index j = 0; j < found; ++j) {
        Vector c;
        if (j + 1 == rank) {
            // Last direction of the span is fixed by orthogonality.
            Eigen::HouseholderQR<Matrix> qr(C.leftCols(j));
            c = (qr.householderQ() * Matrix::Identity(rank, rank)).col(rank - 1);
        } else {
            GridResult g = grid_search(S, index, cfg);
            c = g.direction;
            m.iterations += g.sweeps;
        }
        // Remove numerical leakage into earlier directions.
        for (Index k = 0; k < j; ++k) c -= C.col(k).dot(c) * C.col(k);
        c /= c.norm();
        C.col(j) = c;
        lambda[j] = index.variance(index(S * c));
        S = deflate(S, c);
    }
    IndexList order = argsort(-lambda);
    m.loadings.resize(p, q);
    m.eigenvalues = Vector::Zero(q);
    for (Index j = 0; j < found; ++j) {
        m.loadings.col(j) = basis * C.col(order[j]);
        m.eigenvalues[j] = lambda[order[j]];
    }
    if (found < q) {
        // Complete with directions orthogonal to the data (zero spread).
        Matrix fill = Matrix::Identity(p, p);
        Matrix spanned(p, rank + (q - found));
        spanned << basis, Matrix::Zero(p, q - found);
        Index col = rank;
        for (Index k = 0; k < p && col < spanned.cols(); ++k) {
            Vector v = fill.col(k);
            for (Index c = 0; c < col; ++c) v -= spanned.col(c).dot(v) * spanned.col(c);
            if (v.norm() > 1e-6) spanned.col(col++) = v / v.norm();
        }
        m.loadings.rightCols(q - found) = spanned.rightCols(q - found);
    }
    normalize_signs(m.loadings);
    m.spectrum = m.eigenvalues;
    m.case_weights = Vector::Ones(X.rows());
    return m;
}

}  // namespace robmv
