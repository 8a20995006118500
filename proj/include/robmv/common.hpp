#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "robmv/errors.hpp"

namespace robmv {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using IndexList = std::vector<Index>;

using Rng = std::mt19937_64;

// Mixes (seed, stream, sub) into an independent 64-bit seed (splitmix64 finalizer).
// Every replicate/candidate/split draws from its own derived stream, so results
// do not depend on scheduling or thread count.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t sub = 0);

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t sub = 0) {
    return Rng(derive_seed(seed, stream, sub));
}

// Runs body(i) for i in [0, count) on up to `threads` workers (0 = hardware concurrency).
// The first exception thrown by any body is rethrown on the caller's thread.
void parallel_for(Index count, int threads, const std::function<void(Index)>& body);

// Draws k distinct indices from [0, n), returned sorted.
IndexList sample_without_replacement(Index n, Index k, Rng& rng);

double median(const Eigen::Ref<const Vector>& v);
// Empirical quantile by linear interpolation between order statistics (type 7).
double quantile(const Eigen::Ref<const Vector>& v, double prob);
// k-th smallest (1-based).
double order_statistic(const Eigen::Ref<const Vector>& v, Index k);

double chi2_quantile(double prob, double dof);
double chi2_cdf(double x, double dof);
double normal_quantile(double prob);
double normal_cdf(double x);

// Indices that sort v ascending; ties keep original order.
IndexList argsort(const Eigen::Ref<const Vector>& v);
// Indices of the h smallest entries of v, sorted ascending by index.
IndexList smallest_h(const Eigen::Ref<const Vector>& v, Index h);

Matrix select_rows(const Eigen::Ref<const Matrix>& X, const IndexList& rows);
Vector select(const Eigen::Ref<const Vector>& v, const IndexList& rows);

Vector column_means(const Eigen::Ref<const Matrix>& X);
Matrix sample_covariance(const Eigen::Ref<const Matrix>& X);
// Weighted mean and sum_i w_i (x_i-m)(x_i-m)^T / sum_i w_i.
Vector weighted_mean(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& w);
Matrix weighted_covariance(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& w,
                           const Eigen::Ref<const Vector>& center);

struct EigenPairs {
    Vector values;   // descending
    Matrix vectors;  // columns, largest-|entry| made positive
};
EigenPairs symmetric_eigen(const Eigen::Ref<const Matrix>& S);

// Flips the sign of each column so that its largest-magnitude entry is positive.
void normalize_signs(Matrix& columns);

// Largest principal angle (radians) between the column spans of A and B.
double principal_angle(const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Matrix>& B);
// Angle between two directions, ignoring sign, in radians.
double direction_angle(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);

void require_finite(const Eigen::Ref<const Matrix>& X, const char* what);

// Standard-normal matrix, row-major fill order so results are reproducible.
Matrix normal_matrix(Index rows, Index cols, Rng& rng);

}  // namespace robmv
