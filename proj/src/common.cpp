#include "robmv/common.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

namespace robmv {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t sub) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(seed) ^ stream) ^ (sub * 0xd6e8feb86659fd93ULL));
}

void parallel_for(Index count, int threads, const std::function<void(Index)>& body) {
    if (count <= 0) return;
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    Index workers = threads <= 0 ? Index(hw) : Index(threads);
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (Index i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<Index> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&] {
        for (Index i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = count;
            }
        }
    };
    std::vector<std::thread> pool;
    for (Index t = 0; t < workers; ++t) pool.emplace_back(run);
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

IndexList sample_without_replacement(Index n, Index k, Rng& rng) {
    if (k > n || k < 0) throw InputError("sample size exceeds population");
    // Floyd's algorithm: exactly k draws, no O(n) shuffle.
    IndexList out;
    out.reserve(k);
    for (Index j = n - k; j < n; ++j) {
        std::uniform_int_distribution<Index> pick(0, j);
        Index t = pick(rng);
        if (std::find(out.begin(), out.end(), t) == out.end())
            out.push_back(t);
        else
            out.push_back(j);
    }
    std::sort(out.begin(), out.end());
    return out;
}

double order_statistic(const Eigen::Ref<const Vector>& v, Index k) {
    if (v.size() == 0) throw InputError("order statistic of empty vector");
    if (k < 1 || k > v.size()) throw InputError("order statistic index out of range");
    std::vector<double> tmp(v.data(), v.data() + v.size());
    std::nth_element(tmp.begin(), tmp.begin() + (k - 1), tmp.end());
    return tmp[k - 1];
}

double median(const Eigen::Ref<const Vector>& v) {
    const Index n = v.size();
    if (n == 0) throw InputError("median of empty vector");
    std::vector<double> tmp(v.data(), v.data() + n);
    auto mid = tmp.begin() + n / 2;
    std::nth_element(tmp.begin(), mid, tmp.end());
    double hi = *mid;
    if (n % 2 == 1) return hi;
    double lo = *std::max_element(tmp.begin(), mid);
    return 0.5 * (lo + hi);
}

double quantile(const Eigen::Ref<const Vector>& v, double prob) {
    const Index n = v.size();
    if (n == 0) throw InputError("quantile of empty vector");
    if (!(prob >= 0.0 && prob <= 1.0)) throw InputError("quantile probability outside [0,1]");
    std::vector<double> tmp(v.data(), v.data() + n);
    std::sort(tmp.begin(), tmp.end());
    double pos = prob * double(n - 1);
    auto lo = Index(std::floor(pos));
    auto hi = std::min(lo + 1, n - 1);
    double frac = pos - double(lo);
    return tmp[lo] + frac * (tmp[hi] - tmp[lo]);
}

double chi2_quantile(double prob, double dof) {
    return boost::math::quantile(boost::math::chi_squared(dof), prob);
}

double chi2_cdf(double x, double dof) {
    if (x <= 0) return 0.0;
    return boost::math::cdf(boost::math::chi_squared(dof), x);
}

double normal_quantile(double prob) {
    return boost::math::quantile(boost::math::normal(), prob);
}

double normal_cdf(double x) {
    return boost::math::cdf(boost::math::normal(), x);
}

IndexList argsort(const Eigen::Ref<const Vector>& v) {
    IndexList idx(v.size());
    std::iota(idx.begin(), idx.end(), Index(0));
    std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return v[a] < v[b]; });
    return idx;
}

IndexList smallest_h(const Eigen::Ref<const Vector>& v, Index h) {
    if (h < 1 || h > v.size()) throw InputError("subset size out of range");
    IndexList idx = argsort(v);
    idx.resize(h);
    std::sort(idx.begin(), idx.end());
    return idx;
}

Matrix select_rows(const Eigen::Ref<const Matrix>& X, const IndexList& rows) {
    Matrix out(rows.size(), X.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(i) = X.row(rows[i]);
    return out;
}

Vector select(const Eigen::Ref<const Vector>& v, const IndexList& rows) {
    Vector out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] = v[rows[i]];
    return out;
}

Vector column_means(const Eigen::Ref<const Matrix>& X) {
    if (X.rows() == 0) throw InputError("mean of empty matrix");
    return X.colwise().mean().transpose();
}

Matrix sample_covariance(const Eigen::Ref<const Matrix>& X) {
    if (X.rows() < 2) throw InputError("covariance needs at least two rows");
    Matrix centered = X.rowwise() - X.colwise().mean();
    return centered.transpose() * centered / double(X.rows() - 1);
}

Vector weighted_mean(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& w) {
    double total = w.sum();
    if (!(total > 0)) throw DegenerateError("all case weights are zero");
    return X.transpose() * w / total;
}

Matrix weighted_covariance(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& w,
                           const Eigen::Ref<const Vector>& center) {
    double total = w.sum();
    if (!(total > 0)) throw DegenerateError("all case weights are zero");
    Matrix centered = X.rowwise() - center.transpose();
    Matrix scaled = centered.array().colwise() * w.array();
    return centered.transpose() * scaled / total;
}

void normalize_signs(Matrix& columns) {
    for (Index j = 0; j < columns.cols(); ++j) {
        Index arg = 0;
        columns.col(j).cwiseAbs().maxCoeff(&arg);
        if (columns(arg, j) < 0) columns.col(j) *= -1.0;
    }
}

EigenPairs symmetric_eigen(const Eigen::Ref<const Matrix>& S) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(S);
    if (es.info() != Eigen::Success) throw SingularityError("eigen decomposition failed");
    const Index p = S.rows();
    EigenPairs out{Vector(p), Matrix(p, p)};
    for (Index j = 0; j < p; ++j) {
        out.values[j] = es.eigenvalues()[p - 1 - j];
        out.vectors.col(j) = es.eigenvectors().col(p - 1 - j);
    }
    normalize_signs(out.vectors);
    return out;
}

double principal_angle(const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Matrix>& B) {
    Eigen::HouseholderQR<Matrix> qa(A), qb(B);
    Matrix Qa = qa.householderQ() * Matrix::Identity(A.rows(), A.cols());
    Matrix Qb = qb.householderQ() * Matrix::Identity(B.rows(), B.cols());
    Eigen::JacobiSVD<Matrix> svd(Qa.transpose() * Qb);
    double smallest = svd.singularValues().minCoeff();
    return std::acos(std::clamp(smallest, -1.0, 1.0));
}

double direction_angle(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
    double c = std::abs(a.dot(b)) / (a.norm() * b.norm());
    // acos loses precision near 1; use the sine form there.
    Vector diff = a / a.norm() * (a.dot(b) >= 0 ? 1.0 : -1.0) - b / b.norm();
    if (c > 0.9) return 2.0 * std::asin(std::min(1.0, diff.norm() / 2.0));
    return std::acos(std::clamp(c, 0.0, 1.0));
}

void require_finite(const Eigen::Ref<const Matrix>& X, const char* what) {
    if (!X.allFinite()) throw InputError(std::string(what) + " contains non-finite values");
}

Matrix normal_matrix(Index rows, Index cols, Rng& rng) {
    std::normal_distribution<double> z;
    Matrix out(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) out(i, j) = z(rng);
    return out;
}

}  // namespace robmv
