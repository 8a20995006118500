#pragma once

#include <cstdint>
#include <string>

#include "robmv/common.hpp"

namespace robmv {

struct CovarianceEstimate {
    Vector location;
    Matrix scatter;
    Vector sq_distances;  // squared Mahalanobis distances w.r.t. (location, scatter); empty if scatter is singular
    Vector case_weights;
    std::string method;
    Index h = 0;
    Index n_directions = 0;
    double consistency = 1.0;
    std::uint64_t seed = 0;
    IndexList subset;
    Vector eigenvalues;   // sign covariance only
    Matrix eigenvectors;  // sign covariance only
};

Vector coordinatewise_median(const Eigen::Ref<const Matrix>& X);

struct SpatialMedianOptions {
    double tol = 1e-10;
    int max_iter = 1000;
};

// Weiszfeld iteration from the coordinate-wise median, with the Vardi-Zhang step
// when the iterate lands on a data point.
Vector spatial_median(const Eigen::Ref<const Matrix>& X, const SpatialMedianOptions& options = {});
// sum_i ||x_i - m||
double spatial_median_objective(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& m);

// Squared Mahalanobis distances of the rows of X.
Vector mahalanobis(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& location,
                   const Eigen::Ref<const Matrix>& scatter);

CovarianceEstimate classical_covariance(const Eigen::Ref<const Matrix>& X);

struct McdOptions {
    Index h = 0;  // 0: floor((n+p+1)/2)
    Index n_starts = 500;
    std::uint64_t seed = 0;
    Index n_keep = 10;
    int max_csteps = 100;
    // One-step reweighting: mean and covariance of the cases with
    // d^2 <= chi2_0.975(p), rescaled to median consistency.
    bool reweight = false;
};

CovarianceEstimate mcd_fit(const Eigen::Ref<const Matrix>& X, const McdOptions& options = {});

struct StahelDonohoOptions {
    Index n_directions = 0;  // 0: min(250 p, 5000)
    std::uint64_t seed = 0;
};

// Directions: the p coordinate axes, then alternately normalized differences of
// random case pairs and random Gaussian unit vectors.
Matrix projection_directions(const Eigen::Ref<const Matrix>& X, Index count, std::uint64_t seed);
// max over directions of |x'a - med(Xa)| / MAD(Xa).
Vector sd_outlyingness(const Eigen::Ref<const Matrix>& X, const StahelDonohoOptions& options = {});
CovarianceEstimate stahel_donoho_fit(const Eigen::Ref<const Matrix>& X, const StahelDonohoOptions& options = {});

// (x_i - center)/||x_i - center||, zero rows stay zero.
Matrix spatial_signs(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& center);
CovarianceEstimate sign_covariance(const Eigen::Ref<const Matrix>& X);

struct Ellipse {
    Vector center;
    double major = 0.0;  // semi-axis lengths
    double minor = 0.0;
    double angle = 0.0;  // radians, direction of the major axis
    double radius2 = 0.0;
};

Ellipse tolerance_ellipse(const CovarianceEstimate& est, double level);
// Points on the ellipse boundary, one per row.
Matrix ellipse_points(const Ellipse& e, Index count);

}  // namespace robmv
