#pragma once

#include <string>

#include "robmv/pp_grid.hpp"
#include "robmv/scale.hpp"

namespace robmv {

struct PCAModel {
    Vector center;
    Matrix loadings;     // p x q, orthonormal columns
    Vector eigenvalues;  // q, descending
    Vector spectrum;     // every eigenvalue the method produced (length >= q)
    Vector case_weights;
    std::string method;
    int iterations = 0;

    Index q() const { return loadings.cols(); }
    Matrix scores(const Eigen::Ref<const Matrix>& X) const;
};

PCAModel classical_pca(const Eigen::Ref<const Matrix>& X, Index q);

// Share of the total variance carried by components after the first q.
double unexplained_variance(const Eigen::Ref<const Vector>& eigenvalues, Index q);

struct Reconstruction {
    Vector fitted;
    double orthogonal_distance = 0.0;
};
Reconstruction reconstruct(const PCAModel& model, const Eigen::Ref<const Vector>& x);

struct OutlierMap {
    Vector score_distance;       // sqrt(sum_j t_j^2 / lambda_j)
    Vector orthogonal_distance;  // ||x - x_hat||
};
OutlierMap outlier_map(const PCAModel& model, const Eigen::Ref<const Matrix>& X);

// Spatial-sign (spherical) PCA: eigenvectors of the sign covariance about the
// spatial median, eigenvalues from the squared MAD of the projections.
PCAModel spherical_pca(const Eigen::Ref<const Matrix>& X, Index q);

struct MaronnaOptions {
    RhoFamily family = RhoFamily::bisquare(1.0);
    double delta = 0.5;
    double tol = 1e-6;  // principal angle between successive subspaces, radians
    int max_iter = 100;
};

// Reweighted PCA minimizing an M-scale of the squared reconstruction distances.
PCAModel maronna_pca(const Eigen::Ref<const Matrix>& X, Index q, const MaronnaOptions& options = {});

PCAModel pp_pca(const Eigen::Ref<const Matrix>& X, Index q, const ProjectionIndex& index = mad_index(),
                const GridConfig& cfg = {});

}  // namespace robmv
