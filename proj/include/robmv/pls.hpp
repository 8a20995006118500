#pragma once

#include <cstdint>
#include <string>

#include "robmv/common.hpp"

namespace robmv {

enum class PlsPreprocess { none, spatial_sign };

struct PLSModel {
    Vector x_center;
    Vector x_scale;
    Vector y_center;      // one entry per response
    Matrix weights;       // p x k, unit NIPALS weights on the deflated data
    Matrix rotations;     // p x k, scores = centered X * rotations
    Matrix loadings;      // p x k
    Matrix scores;        // n x k, unweighted cases
    Matrix coefficients;  // p x q, on the centered (and scaled) X
    Vector case_weights;
    Index n_components = 0;
    double eta = 0.0;
    std::string method;
    PlsPreprocess preprocess = PlsPreprocess::none;
    int iterations = 0;
    bool converged = true;

    // Maps raw rows to the space the coefficients act on.
    Matrix transform(const Eigen::Ref<const Matrix>& X) const;
    Matrix predict(const Eigen::Ref<const Matrix>& X) const;
    Matrix project(const Eigen::Ref<const Matrix>& X) const { return transform(X) * rotations; }
};

// NIPALS PLS with X-deflation; Y may have several columns.
PLSModel pls_fit(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Matrix>& Y, Index k);

struct CovariancePls {
    Matrix weights;
    Matrix rotations;
    Matrix coefficients;
};

// The same algorithm driven only by the covariance blocks S_xx and S_xy.
CovariancePls pls_from_covariance(const Eigen::Ref<const Matrix>& Sxx, const Eigen::Ref<const Matrix>& Sxy, Index k);

// PLS on the spatial signs of the rows of X about its coordinate-wise median, y centered at its median.
PLSModel spatial_sign_pls(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y, Index k);

// 1 / (1 + |z/c|)^2
double fair_weight(double z, double c = 4.0);

struct PrmOptions {
    double fair_c = 4.0;
    double tol = 1e-6;
    int max_iter = 100;
    // Share of the previous weights kept at each update; damps two-cycles of
    // the weight map without moving its fixed point.
    double relaxation = 0.5;
    std::uint64_t seed = 0;   // direction draws for the outlyingness start
    Index n_directions = 0;   // 0: Stahel-Donoho default
    // Optional starting weights; empty means outlyingness x sign-PLS residual weights.
    Vector start_weights;
};

// Partial robust M-regression: iteratively reweighted PLS with residual and
// score-distance weights.
PLSModel prm_fit(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y, Index k,
                 const PrmOptions& options = {});

// Sparse NIPALS: each weight vector is soft-thresholded at eta * max |X'y|.
PLSModel snipls_fit(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y, Index k, double eta);

// Sparse PRM: the PRM reweighting loop around SNIPLS.
PLSModel sprm_fit(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y, Index k, double eta,
                  const PrmOptions& options = {});

// Weighted SNIPLS used by the reweighting loops: centers by weighted means and
// fits on sqrt(w)-scaled rows.
PLSModel weighted_snipls(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y,
                         const Eigen::Ref<const Vector>& w, Index k, double eta);

}  // namespace robmv
