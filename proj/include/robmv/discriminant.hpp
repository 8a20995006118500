#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "robmv/common.hpp"
#include "robmv/pca.hpp"
#include "robmv/pls.hpp"

namespace robmv {

using Labels = std::vector<int>;

struct GroupedData {
    Matrix X;
    Labels labels;       // 0-based group index per row
    int n_groups = 0;    // 0: 1 + largest label

    int groups() const;
    std::vector<Index> sizes() const;
    IndexList rows_of(int group) const;
    // Throws InputError on out-of-range labels, empty groups or length mismatch.
    void validate() const;
};

enum class ScatterEstimator { classical, mcd, spc_cov };
enum class Pooling { per_group, pooled_average, center_then_joint };
enum class DiscriminantKind { lda, qda, fisher };

ScatterEstimator parse_scatter_estimator(const std::string& name);
std::string to_string(ScatterEstimator e);
Pooling parse_pooling(const std::string& name);
std::string to_string(Pooling p);
std::string to_string(DiscriminantKind k);

struct GroupEstimateOptions {
    std::uint64_t seed = 0;      // MCD starts
    Vector priors;               // empty: n_j / n
    double mcd_coverage = 0.0;   // h / n for reweighted MCD; 0: (n+p+1)/2
};

struct DiscriminantModel {
    DiscriminantKind kind = DiscriminantKind::lda;
    ScatterEstimator estimator = ScatterEstimator::classical;
    Pooling pooling = Pooling::pooled_average;
    std::vector<Vector> means;
    std::vector<Matrix> scatters;  // per group
    Matrix pooled;
    Vector priors;
    Matrix fisher_basis;           // p x l, columns with v' W v = 1
    Vector fisher_eigenvalues;

    int groups() const { return int(means.size()); }
    Index dim() const { return means.empty() ? 0 : means.front().size(); }
    Vector scores(const Eigen::Ref<const Vector>& x) const;
    int classify_one(const Eigen::Ref<const Vector>& x) const;
    Labels classify(const Eigen::Ref<const Matrix>& X) const;
};

// Group locations and scatters plus the pooled scatter. Pooling per_group still
// fills `pooled` with the pooled average.
DiscriminantModel estimate_groups(const GroupedData& data, ScatterEstimator estimator, Pooling pooling,
                                  const GroupEstimateOptions& options = {});

// -1/2 ln det(S_j) - 1/2 (x - m_j)' S_j^-1 (x - m_j) + ln p_j
Vector qda_scores(const DiscriminantModel& model, const Eigen::Ref<const Vector>& x);
// m_j' S^-1 x - 1/2 m_j' S^-1 m_j + ln p_j with the pooled S
Vector lda_scores(const DiscriminantModel& model, const Eigen::Ref<const Vector>& x);
// sqrt((x - m_j)' V V' (x - m_j) - 2 ln p_j); the smallest wins
Vector fisher_scores(const DiscriminantModel& model, const Eigen::Ref<const Vector>& x);

// Index of the largest entry; ties go to the lowest index.
int argmax_lowest(const Eigen::Ref<const Vector>& v);
int argmin_lowest(const Eigen::Ref<const Vector>& v);

DiscriminantModel lda_fit(const GroupedData& data, ScatterEstimator estimator = ScatterEstimator::classical,
                          Pooling pooling = Pooling::pooled_average, const GroupEstimateOptions& options = {});
DiscriminantModel qda_fit(const GroupedData& data, ScatterEstimator estimator = ScatterEstimator::classical,
                          const GroupEstimateOptions& options = {});
// Eigenvectors of W^-1 B for positive eigenvalues, W = sum p_j S_j, B = sum p_j (m_j - m)(m_j - m)'.
DiscriminantModel fisher_fit(const GroupedData& data, ScatterEstimator estimator = ScatterEstimator::classical,
                             const GroupEstimateOptions& options = {});

// Lossless reduction X = scores * basis' with scores = U S of the thin SVD.
struct SvdReduction {
    Matrix scores;  // n x r
    Matrix basis;   // p x r, orthonormal columns
    Vector singular_values;

    Index rank() const { return basis.cols(); }
    Matrix transform(const Eigen::Ref<const Matrix>& X) const { return X * basis; }
    // Maps coefficient vectors from the reduced space back to the p variables.
    Matrix back_map(const Eigen::Ref<const Matrix>& coefficients) const { return basis * coefficients; }
};

SvdReduction svd_preprocess(const Eigen::Ref<const Matrix>& X);

enum class ReducerKind { classical_pca, robust_pca, pls, robust_pls };

ReducerKind parse_reducer(const std::string& name);
std::string to_string(ReducerKind k);

struct PipelineOptions {
    ReducerKind reducer = ReducerKind::robust_pca;
    Index dim = 2;
    DiscriminantKind classifier = DiscriminantKind::lda;
    ScatterEstimator estimator = ScatterEstimator::mcd;
    Pooling pooling = Pooling::pooled_average;
    std::uint64_t seed = 0;
};

struct PipelineModel {
    PipelineOptions options;
    PCAModel pca;     // PCA reducers
    PLSModel pls;     // PLS reducers
    DiscriminantModel classifier;

    Matrix reduce(const Eigen::Ref<const Matrix>& X) const;
    Labels classify(const Eigen::Ref<const Matrix>& X) const;
};

// Reduce with PCA or PLS (0/1 group code as response), then discriminate on the scores.
PipelineModel pipeline_fit(const GroupedData& data, const PipelineOptions& options = {});

enum class DplsMethod { pls, spatial_sign, prm };

DplsMethod parse_dpls_method(const std::string& name);
std::string to_string(DplsMethod m);

struct DplsOptions {
    double code_first = 1.0;    // response code of group 0
    double code_second = -1.0;  // response code of group 1
    DplsMethod method = DplsMethod::pls;
    PrmOptions prm;
};

struct DplsModel {
    PLSModel pls;
    double code_first = 1.0;
    double code_second = -1.0;

    double threshold() const { return 0.5 * (code_first + code_second); }
    Vector decision(const Eigen::Ref<const Matrix>& X) const { return pls.predict(X).col(0); }
    // Group whose code is nearer the prediction; the midpoint goes to group 0.
    int classify(double prediction) const;
    Labels classify(const Eigen::Ref<const Matrix>& X) const;
};

// Two groups only; otherwise UnsupportedError.
DplsModel dpls_fit(const GroupedData& data, Index k, const DplsOptions& options = {});

struct SprmDaOptions {
    double fair_c = 4.0;
    double tol = 1e-6;
    int max_iter = 100;
    double relaxation = 0.5;
    double weight_floor = 1e-6;
};

struct SprmDaModel {
    Vector x_center;   // average of the two group medians
    Vector x_scale;    // average of the two group MADs
    PLSModel pls;      // on the standardized data
    DiscriminantModel lda;  // weighted LDA on the scores
    Vector case_weights;
    Vector start_weights;
    int iterations = 0;

    Matrix standardize(const Eigen::Ref<const Matrix>& X) const;
    Matrix scores(const Eigen::Ref<const Matrix>& X) const { return pls.project(standardize(X)); }
    Labels classify(const Eigen::Ref<const Matrix>& X) const;
};

// Robust sparse PLS discriminant analysis: reweighted SNIPLS on the coded groups,
// then weighted LDA in the score space.
SprmDaModel sprm_da_fit(const GroupedData& data, Index k, double eta, const SprmDaOptions& options = {});

// Number of positions where two label vectors differ.
Index count_differences(const Labels& a, const Labels& b);

}  // namespace robmv
