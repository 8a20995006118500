#pragma once

#include <functional>
#include <string>
#include <vector>

#include "robmv/scale.hpp"

namespace robmv {

// A univariate dispersion measure maximized over projection directions.
struct ProjectionIndex {
    std::string name;
    std::function<double(const Vector&)> fn;
    // Scale-type indices (MAD, SD, M-scale) are squared to give a variance.
    bool scale_type = true;

    double operator()(const Vector& v) const { return fn(v); }
    double variance(double value) const { return scale_type ? value * value : value; }
};

ProjectionIndex variance_index();
ProjectionIndex sd_index();
ProjectionIndex mad_index();
ProjectionIndex m_scale_index(RhoFamily family = RhoFamily::bisquare(1.5476), double delta = 0.5);
ProjectionIndex parse_projection_index(const std::string& name);

struct GridConfig {
    Index n_angles = 10;
    double tol = 1e-5;
    double initial_halfwidth = 45.0;  // degrees, first refinement window is +-this
    double shrink = 0.5;
    int max_sweeps = 200;
};

struct PlaneResult {
    double gamma1 = 1.0;
    double gamma2 = 0.0;
    double score = 0.0;
    double angle = 0.0;  // degrees
};

// Maximizes index(cos t * v1 + sin t * v2) over t. The coarse grid starts at
// `start_angle`, so the current direction is always a candidate.
PlaneResult plane_optimize(const Vector& v1, const Vector& v2, const ProjectionIndex& index,
                           const GridConfig& cfg = {}, double start_angle = 0.0);

struct GridResult {
    Vector direction;
    double score = 0.0;
    int sweeps = 0;
    std::vector<double> sweep_scores;  // index after the initial pass and after every sweep
};

GridResult grid_search(const Eigen::Ref<const Matrix>& X, const ProjectionIndex& index, const GridConfig& cfg = {});

// X (I - a a^T)
Matrix deflate(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& a);

}  // namespace robmv
