#include "robmv/discriminant.hpp"

#include <cmath>

#include "robmv/loc_cov.hpp"
#include "robmv/scale.hpp"

namespace robmv {

int GroupedData::groups() const {
    if (n_groups > 0) return n_groups;
    int g = 0;
    for (int l : labels) g = std::max(g, l + 1);
    return g;
}

std::vector<Index> GroupedData::sizes() const {
    std::vector<Index> s(std::size_t(groups()), 0);
    for (int l : labels)
        if (l >= 0 && l < int(s.size())) ++s[std::size_t(l)];
    return s;
}

IndexList GroupedData::rows_of(int group) const {
    IndexList rows;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == group) rows.push_back(Index(i));
    return rows;
}

void GroupedData::validate() const {
    if (X.rows() == 0 || X.cols() == 0) throw InputError("grouped data: empty X");
    if (Index(labels.size()) != X.rows()) throw InputError("grouped data: label count differs from row count");
    require_finite(X, "grouped data");
    const int g = groups();
    if (g < 1) throw InputError("grouped data: no groups");
    for (int l : labels)
        if (l < 0 || l >= g) throw InputError("grouped data: label out of range");
    for (Index s : sizes())
        if (s == 0) throw InputError("grouped data: empty group");
}

ScatterEstimator parse_scatter_estimator(const std::string& name) {
    if (name == "classical") return ScatterEstimator::classical;
    if (name == "mcd") return ScatterEstimator::mcd;
    if (name == "spc-cov" || name == "spc") return ScatterEstimator::spc_cov;
    throw InputError("unknown scatter estimator: " + name);
}

std::string to_string(ScatterEstimator e) {
    switch (e) {
        case ScatterEstimator::classical: return "classical";
        case ScatterEstimator::mcd: return "mcd";
        case ScatterEstimator::spc_cov: return "spc-cov";
    }
    return "?";
}

Pooling parse_pooling(const std::string& name) {
    if (name == "per-group") return Pooling::per_group;
    if (name == "pooled-average") return Pooling::pooled_average;
    if (name == "center-then-joint") return Pooling::center_then_joint;
    throw InputError("unknown pooling: " + name);
}

std::string to_string(Pooling p) {
    switch (p) {
        case Pooling::per_group: return "per-group";
        case Pooling::pooled_average: return "pooled-average";
        case Pooling::center_then_joint: return "center-then-joint";
    }
    return "?";
}

std::string to_string(DiscriminantKind k) {
    switch (k) {
        case DiscriminantKind::lda: return "lda";
        case DiscriminantKind::qda: return "qda";
        case DiscriminantKind::fisher: return "fisher";
    }
    return "?";
}

namespace {

CovarianceEstimate run_estimator(const Matrix& X, ScatterEstimator e, std::uint64_t seed, double coverage) {
    switch (e) {
        case ScatterEstimator::classical: return classical_covariance(X);
        case ScatterEstimator::mcd: {
            McdOptions o;
            o.seed = seed;
            o.reweight = true;
            o.h = coverage > 0 ? std::max<Index>(Index(std::floor(coverage * double(X.rows()))), (X.rows() + X.cols() + 1) / 2)
                               : 0;
            return mcd_fit(X, o);
        }
        case ScatterEstimator::spc_cov: return sign_covariance(X);
    }
    throw InputError("unknown scatter estimator");
}

// Cholesky factor of a positive definite scatter; SingularityError otherwise.
Eigen::LLT<Matrix> factor(const Matrix& S, const char* what) {
    Eigen::LLT<Matrix> llt(S);
    const Vector d = llt.matrixLLT().diagonal();
    if (llt.info() != Eigen::Success || !(d.minCoeff() > 1e-10 * std::max(d.maxCoeff(), 1e-300)))
        throw SingularityError(std::string(what) + ": scatter matrix is not positive definite");
    return llt;
}

void check_x(const DiscriminantModel& model, Index cols) {
    if (model.means.empty()) throw InputError("discriminant model is empty");
    if (cols != model.dim()) throw InputError("discriminant model: dimension mismatch");
}

Matrix qda_matrix(const DiscriminantModel& model, const Eigen::Ref<const Matrix>& X) {
    check_x(model, X.cols());
    Matrix out(X.rows(), model.groups());
    for (int j = 0; j < model.groups(); ++j) {
        Eigen::LLT<Matrix> llt = factor(model.scatters[std::size_t(j)], "QDA");
        const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
        Matrix D = (X.rowwise() - model.means[std::size_t(j)].transpose()).transpose();
        Matrix Z = llt.matrixL().solve(D);
        out.col(j) = (-0.5 * logdet + std::log(model.priors[j])) - 0.5 * Z.colwise().squaredNorm().transpose().array();
    }
    return out;
}

Matrix lda_matrix(const DiscriminantModel& model, const Eigen::Ref<const Matrix>& X) {
    check_x(model, X.cols());
    Eigen::LLT<Matrix> llt = factor(model.pooled, "LDA");
    Matrix out(X.rows(), model.groups());
    for (int j = 0; j < model.groups(); ++j) {
        const Vector& m = model.means[std::size_t(j)];
        Vector a = llt.solve(m);
        out.col(j) = ((X * a).array() - 0.5 * m.dot(a)) + std::log(model.priors[j]);
    }
    return out;
}

Matrix fisher_matrix(const DiscriminantModel& model, const Eigen::Ref<const Matrix>& X) {
    check_x(model, X.cols());
    Matrix out(X.rows(), model.groups());
    for (int j = 0; j < model.groups(); ++j) {
        Matrix proj = (X.rowwise() - model.means[std::size_t(j)].transpose()) * model.fisher_basis;
        out.col(j) = (proj.rowwise().squaredNorm().array() - 2.0 * std::log(model.priors[j])).sqrt();
    }
    return out;
}

Matrix score_matrix(const DiscriminantModel& model, const Eigen::Ref<const Matrix>& X) {
    switch (model.kind) {
        case DiscriminantKind::lda: return lda_matrix(model, X);
        case DiscriminantKind::qda: return qda_matrix(model, X);
        case DiscriminantKind::fisher: return fisher_matrix(model, X);
    }
    throw InputError("unknown discriminant kind");
}

Vector default_priors(const GroupedData& data, const Vector& given) {
    const int g = data.groups();
    if (given.size() > 0) {
        if (given.size() != g) throw InputError("priors: one entry per group required");
        if (!(given.minCoeff() > 0)) throw InputError("priors must be positive");
        return given / given.sum();
    }
    Vector p(g);
    const auto sizes = data.sizes();
    for (int j = 0; j < g; ++j) p[j] = double(sizes[std::size_t(j)]) / double(data.X.rows());
    return p;
}

}  // namespace

Vector DiscriminantModel::scores(const Eigen::Ref<const Vector>& x) const {
    return score_matrix(*this, x.transpose()).row(0).transpose();
}

int DiscriminantModel::classify_one(const Eigen::Ref<const Vector>& x) const {
    Vector s = scores(x);
    return kind == DiscriminantKind::fisher ? argmin_lowest(s) : argmax_lowest(s);
}

Labels DiscriminantModel::classify(const Eigen::Ref<const Matrix>& X) const {
    Matrix S = score_matrix(*this, X);
    Labels out(std::size_t(X.rows()));
    for (Index i = 0; i < X.rows(); ++i)
        out[std::size_t(i)] = kind == DiscriminantKind::fisher ? argmin_lowest(S.row(i).transpose())
                                                              : argmax_lowest(S.row(i).transpose());
    return out;
}

int argmax_lowest(const Eigen::Ref<const Vector>& v) {
    if (v.size() == 0) throw InputError("argmax of an empty vector");
    int best = 0;
    for (Index j = 1; j < v.size(); ++j)
        if (v[j] > v[best]) best = int(j);
    return best;
}

int argmin_lowest(const Eigen::Ref<const Vector>& v) {
    if (v.size() == 0) throw InputError("argmin of an empty vector");
    int best = 0;
    for (Index j = 1; j < v.size(); ++j)
        if (v[j] < v[best]) best = int(j);
    return best;
}

DiscriminantModel estimate_groups(const GroupedData& data, ScatterEstimator estimator, Pooling pooling,
                                  const GroupEstimateOptions& options) {
    data.validate();
    const int g = data.groups();
    const Index n = data.X.rows(), p = data.X.cols();
    DiscriminantModel model;
    model.estimator = estimator;
    model.pooling = pooling;
    model.priors = default_priors(data, options.priors);
    Matrix pooled = Matrix::Zero(p, p);
    Matrix centered(n, p);
    for (int j = 0; j < g; ++j) {
        IndexList rows = data.rows_of(j);
        if (Index(rows.size()) <= p)
            throw InputError("group estimation: every group needs more than p cases");
        Matrix Xj = select_rows(data.X, rows);
        CovarianceEstimate est = run_estimator(Xj, estimator, derive_seed(options.seed, std::uint64_t(j)), options.mcd_coverage);
        model.means.push_back(est.location);
        model.scatters.push_back(est.scatter);
        pooled += double(rows.size() - 1) * est.scatter;
        for (std::size_t r = 0; r < rows.size(); ++r)
            centered.row(rows[r]) = Xj.row(Index(r)) - est.location.transpose();
    }
    if (pooling == Pooling::center_then_joint) {
        model.pooled = run_estimator(centered, estimator, derive_seed(options.seed, std::uint64_t(g)), options.mcd_coverage).scatter;
    } else {
        if (n <= g) throw InputError("group estimation: need more cases than groups");
        model.pooled = pooled / double(n - g);
    }
    return model;
}

Vector qda_scores(const DiscriminantModel& model, const Eigen::Ref<const Vector>& x) {
    return qda_matrix(model, x.transpose()).row(0).transpose();
}

Vector lda_scores(const DiscriminantModel& model, const Eigen::Ref<const Vector>& x) {
    return lda_matrix(model, x.transpose()).row(0).transpose();
}

Vector fisher_scores(const DiscriminantModel& model, const Eigen::Ref<const Vector>& x) {
    if (model.fisher_basis.size() == 0) throw InputError("Fisher scores need a Fisher model");
    return fisher_matrix(model, x.transpose()).row(0).transpose();
}

DiscriminantModel lda_fit(const GroupedData& data, ScatterEstimator estimator, Pooling pooling,
                          const GroupEstimateOptions& options) {
    DiscriminantModel m = estimate_groups(data, estimator, pooling, options);
    m.kind = DiscriminantKind::lda;
    factor(m.pooled, "LDA");
    return m;
}

DiscriminantModel qda_fit(const GroupedData& data, ScatterEstimator estimator, const GroupEstimateOptions& options) {
    DiscriminantModel m = estimate_groups(data, estimator, Pooling::per_group, options);
    m.kind = DiscriminantKind::qda;
    for (const Matrix& S : m.scatters) factor(S, "QDA");
    return m;
}

DiscriminantModel fisher_fit(const GroupedData& data, ScatterEstimator estimator, const GroupEstimateOptions& options) {
    DiscriminantModel m = estimate_groups(data, estimator, Pooling::per_group, options);
    m.kind = DiscriminantKind::fisher;
    const Index p = data.X.cols();
    const int g = m.groups();
    Vector overall = Vector::Zero(p);
    for (int j = 0; j < g; ++j) overall += m.priors[j] * m.means[std::size_t(j)];
    Matrix B = Matrix::Zero(p, p), W = Matrix::Zero(p, p);
    for (int j = 0; j < g; ++j) {
        Vector d = m.means[std::size_t(j)] - overall;
        B += m.priors[j] * d * d.transpose();
        W += m.priors[j] * m.scatters[std::size_t(j)];
    }
    factor(W, "Fisher");
    m.pooled = W;
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(B, W);
    const Vector& vals = ges.eigenvalues();
    const double top = std::max(vals.maxCoeff(), 0.0);
    const Index cap = std::min<Index>(g - 1, p);
    std::vector<Index> keep;
    for (Index i = p - 1; i >= 0 && Index(keep.size()) < cap; --i)
        if (vals[i] > 1e-10 * top && vals[i] > 0) keep.push_back(i);
    m.fisher_basis.resize(p, Index(keep.size()));
    m.fisher_eigenvalues.resize(Index(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) {
        Vector v = ges.eigenvectors().col(keep[c]);
        v /= std::sqrt(v.dot(W * v));
        Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v[arg] < 0) v = -v;
        m.fisher_basis.col(Index(c)) = v;
        m.fisher_eigenvalues[Index(c)] = vals[keep[c]];
    }
    return m;
}

SvdReduction svd_preprocess(const Eigen::Ref<const Matrix>& X) {
    if (X.rows() == 0 || X.cols() == 0) throw InputError("SVD reduction: empty data");
    require_finite(X, "SVD reduction");
    Eigen::BDCSVD<Matrix> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double tol = std::max(X.rows(), X.cols()) * 1e-15 * (s.size() > 0 ? s[0] : 0.0);
    Index r = 0;
    while (r < s.size() && s[r] > tol) ++r;
    SvdReduction out;
    out.singular_values = s.head(r);
    out.basis = svd.matrixV().leftCols(r);
    out.scores = svd.matrixU().leftCols(r) * out.singular_values.asDiagonal();
    return out;
}

ReducerKind parse_reducer(const std::string& name) {
    if (name == "classical-pca" || name == "pca") return ReducerKind::classical_pca;
    if (name == "robust-pca") return ReducerKind::robust_pca;
    if (name == "pls") return ReducerKind::pls;
    if (name == "robust-pls") return ReducerKind::robust_pls;
    throw InputError("unknown reducer: " + name);
}

std::string to_string(ReducerKind k) {
    switch (k) {
        case ReducerKind::classical_pca: return "classical-pca";
        case ReducerKind::robust_pca: return "robust-pca";
        case ReducerKind::pls: return "pls";
        case ReducerKind::robust_pls: return "robust-pls";
    }
    return "?";
}

Matrix PipelineModel::reduce(const Eigen::Ref<const Matrix>& X) const {
    switch (options.reducer) {
        case ReducerKind::classical_pca:
        case ReducerKind::robust_pca: return pca.scores(X);
        case ReducerKind::pls:
        case ReducerKind::robust_pls: return pls.project(X);
    }
    throw InputError("unknown reducer");
}

Labels PipelineModel::classify(const Eigen::Ref<const Matrix>& X) const { return classifier.classify(reduce(X)); }

PipelineModel pipeline_fit(const GroupedData& data, const PipelineOptions& options) {
    data.validate();
    const int g = data.groups();
    const auto sizes = data.sizes();
    const Index smallest = *std::min_element(sizes.begin(), sizes.end());
    if (options.dim < 1 || options.dim >= smallest)
        throw InputError("pipeline: reducer dimension must be positive and below the smallest group size");
    PipelineModel model;
    model.options = options;
    const Index n = data.X.rows();
    switch (options.reducer) {
        case ReducerKind::classical_pca: model.pca = classical_pca(data.X, options.dim); break;
        case ReducerKind::robust_pca: model.pca = pp_pca(data.X, options.dim); break;
        case ReducerKind::pls: {
            Matrix Y = Matrix::Zero(n, g == 2 ? 1 : g);
            for (Index i = 0; i < n; ++i) {
                if (g == 2) Y(i, 0) = data.labels[std::size_t(i)];
                else Y(i, data.labels[std::size_t(i)]) = 1.0;
            }
            model.pls = pls_fit(data.X, Y, options.dim);
            break;
        }
        case ReducerKind::robust_pls: {
            if (g != 2) throw UnsupportedError("robust PLS reduction needs exactly two groups");
            Vector y(n);
            for (Index i = 0; i < n; ++i) y[i] = data.labels[std::size_t(i)];
            PrmOptions prm;
            prm.seed = options.seed;
            model.pls = prm_fit(data.X, y, options.dim, prm);
            break;
        }
    }
    GroupedData reduced{model.reduce(data.X), data.labels, data.n_groups};
    GroupEstimateOptions est{.seed = options.seed, .priors = {}};
    switch (options.classifier) {
        case DiscriminantKind::lda: model.classifier = lda_fit(reduced, options.estimator, options.pooling, est); break;
        case DiscriminantKind::qda: model.classifier = qda_fit(reduced, options.estimator, est); break;
        case DiscriminantKind::fisher: model.classifier = fisher_fit(reduced, options.estimator, est); break;
    }
    return model;
}

DplsMethod parse_dpls_method(const std::string& name) {
    if (name == "pls") return DplsMethod::pls;
    if (name == "spatial-sign") return DplsMethod::spatial_sign;
    if (name == "prm") return DplsMethod::prm;
    throw InputError("unknown D-PLS method: " + name);
}

std::string to_string(DplsMethod m) {
    switch (m) {
        case DplsMethod::pls: return "pls";
        case DplsMethod::spatial_sign: return "spatial-sign";
        case DplsMethod::prm: return "prm";
    }
    return "?";
}

int DplsModel::classify(double prediction) const {
    return std::abs(prediction - code_first) <= std::abs(prediction - code_second) ? 0 : 1;
}

Labels DplsModel::classify(const Eigen::Ref<const Matrix>& X) const {
    Vector d = decision(X);
    Labels out(std::size_t(d.size()));
    for (Index i = 0; i < d.size(); ++i) out[std::size_t(i)] = classify(d[i]);
    return out;
}

DplsModel dpls_fit(const GroupedData& data, Index k, const DplsOptions& options) {
    data.validate();
    if (data.groups() != 2) throw UnsupportedError("D-PLS handles exactly two groups");
    if (options.code_first == options.code_second) throw InputError("D-PLS: the two codes must differ");
    const Index n = data.X.rows();
    Vector y(n);
    for (Index i = 0; i < n; ++i) y[i] = data.labels[std::size_t(i)] == 0 ? options.code_first : options.code_second;
    DplsModel model;
    model.code_first = options.code_first;
    model.code_second = options.code_second;
    switch (options.method) {
        case DplsMethod::pls: model.pls = pls_fit(data.X, y, k); break;
        case DplsMethod::spatial_sign: model.pls = spatial_sign_pls(data.X, y, k); break;
        case DplsMethod::prm: model.pls = prm_fit(data.X, y, k, options.prm); break;
    }
    return model;
}

Matrix SprmDaModel::standardize(const Eigen::Ref<const Matrix>& X) const {
    if (X.cols() != x_center.size()) throw InputError("SPRM-DA: column count differs from the fitted model");
    return (X.rowwise() - x_center.transpose()).array().rowwise() / x_scale.transpose().array();
}

Labels SprmDaModel::classify(const Eigen::Ref<const Matrix>& X) const { return lda.classify(scores(X)); }

namespace {

struct GroupScoreFrame {
    Vector center;
    Vector scale;
};

GroupScoreFrame score_frame(const Matrix& T, const IndexList& rows) {
    Matrix Tj = select_rows(T, rows);
    GroupScoreFrame f{coordinatewise_median(Tj), Vector(T.cols())};
    for (Index a = 0; a < T.cols(); ++a) {
        f.scale[a] = mad(Tj.col(a), true);
        if (!(f.scale[a] > 0)) f.scale[a] = 1.0;
    }
    return f;
}

// Fair weights of the scaled score distances to the group's robust center, and
// of the first-component displacement towards the other group's center.
void group_score_weights(const Matrix& T, const IndexList& rows, const GroupScoreFrame& own,
                         const GroupScoreFrame& other, double c, Vector& wd, Vector& wl) {
    Matrix Tj = select_rows(T, rows);
    Matrix Z = (Tj.rowwise() - own.center.transpose()).array().rowwise() / own.scale.transpose().array();
    Vector d = Z.rowwise().norm();
    const double md = median(d);
    const double toward = other.center[0] >= own.center[0] ? 1.0 : -1.0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Index i = rows[r];
        wd[i] = md > 0 ? fair_weight(d[Index(r)] / md, c) : 1.0;
        wl[i] = fair_weight(std::max(toward * Z(Index(r), 0), 0.0), c);
    }
}

DiscriminantModel weighted_lda(const Matrix& T, const GroupedData& data, const Vector& w) {
    DiscriminantModel m;
    m.kind = DiscriminantKind::lda;
    m.pooling = Pooling::pooled_average;
    const int g = data.groups();
    m.priors.resize(g);
    const auto sizes = data.sizes();
    Matrix pooled = Matrix::Zero(T.cols(), T.cols());
    double total = 0.0;
    for (int j = 0; j < g; ++j) {
        IndexList rows = data.rows_of(j);
        Matrix Tj = select_rows(T, rows);
        Vector wj = select(w, rows);
        const double W = wj.sum();
        if (!(W > 0)) throw DegenerateError("SPRM-DA: a group has zero total weight");
        Vector mean = weighted_mean(Tj, wj);
        Matrix S = weighted_covariance(Tj, wj, mean);
        m.means.push_back(mean);
        m.scatters.push_back(S);
        pooled += W * S;
        total += W;
        m.priors[j] = double(sizes[std::size_t(j)]) / double(data.X.rows());
    }
    m.pooled = pooled / total;
    return m;
}

}  // namespace

SprmDaModel sprm_da_fit(const GroupedData& data, Index k, double eta, const SprmDaOptions& options) {
    data.validate();
    if (data.groups() != 2) throw UnsupportedError("SPRM-DA handles exactly two groups");
    for (Index s : data.sizes())
        if (s < 4) throw InputError("SPRM-DA: every group needs at least 4 cases");
    if (!(options.relaxation >= 0 && options.relaxation < 1)) throw InputError("SPRM-DA: relaxation must lie in [0, 1)");
    const Index n = data.X.rows(), p = data.X.cols();
    const IndexList rows0 = data.rows_of(0), rows1 = data.rows_of(1);
    const Matrix X0 = select_rows(data.X, rows0), X1 = select_rows(data.X, rows1);

    SprmDaModel model;
    model.x_center = 0.5 * (coordinatewise_median(X0) + coordinatewise_median(X1));
    model.x_scale.resize(p);
    for (Index j = 0; j < p; ++j) {
        const double s = 0.5 * (mad(X0.col(j), true) + mad(X1.col(j), true));
        model.x_scale[j] = s > 0 ? s : 1.0;
    }
    const Matrix Z = model.standardize(data.X);
    Vector y(n);
    for (Index i = 0; i < n; ++i) y[i] = data.labels[std::size_t(i)] == 0 ? 1.0 : -1.0;

    // Start: robust PCA per group, Fair weights of the score distances.
    Vector w(n);
    for (const IndexList* rows : {&rows0, &rows1}) {
        Matrix Zj = select_rows(Z, *rows);
        const Index q = std::min<Index>({Index(rows->size()) - 1, p, 5});
        PCAModel pca = spherical_pca(Zj, q);
        Index keep = 0;
        while (keep < pca.q() && pca.eigenvalues[keep] > 1e-12 * pca.eigenvalues[0]) ++keep;
        Vector d = Vector::Zero(Zj.rows());
        if (keep > 0) {
            Matrix T = pca.scores(Zj).leftCols(keep);
            d = (T.array().rowwise() / pca.eigenvalues.head(keep).transpose().array().sqrt()).matrix().rowwise().norm();
        }
        const double md = median(d);
        for (std::size_t r = 0; r < rows->size(); ++r)
            w[(*rows)[r]] = md > 0 ? fair_weight(d[Index(r)] / md, options.fair_c) : 1.0;
    }
    model.start_weights = w;

    Matrix prev_B;
    for (int it = 1; it <= options.max_iter; ++it) {
        PLSModel fit = weighted_snipls(Z, y, w, k, eta);
        bool same_support = true;
        if (prev_B.size() > 0)
            for (Index j = 0; j < p; ++j)
                same_support = same_support && ((prev_B(j, 0) == 0.0) == (fit.coefficients(j, 0) == 0.0));
        const double change = prev_B.size() > 0 ? (fit.coefficients - prev_B).norm() / std::max(prev_B.norm(), 1e-300)
                                                : INFINITY;
        prev_B = fit.coefficients;
        Matrix T = fit.project(Z);
        Vector wd(n), wl(n);
        const GroupScoreFrame f0 = score_frame(T, rows0), f1 = score_frame(T, rows1);
        group_score_weights(T, rows0, f0, f1, options.fair_c, wd, wl);
        group_score_weights(T, rows1, f1, f0, options.fair_c, wd, wl);
        const Vector fresh = (wd.array() * wl.array()).max(options.weight_floor).matrix();
        model.pls = std::move(fit);
        model.pls.method = "sprm-da";
        model.iterations = it;
        model.case_weights = w;
        if (change < options.tol && same_support) {
            model.lda = weighted_lda(T, data, w);
            return model;
        }
        w = options.relaxation * w + (1.0 - options.relaxation) * fresh;
    }
    model.pls.converged = false;
    throw ConvergenceError("SPRM-DA did not converge", options.max_iter, model);
}

Index count_differences(const Labels& a, const Labels& b) {
    if (a.size() != b.size()) throw InputError("label vectors differ in length");
    Index d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
    return d;
}

}  // namespace robmv
