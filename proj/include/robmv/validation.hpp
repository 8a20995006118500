#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "robmv/common.hpp"

namespace robmv {

// Statistic of a data set given as rows (for regression: predictors then response).
using VectorStatistic = std::function<Vector(const Matrix& rows)>;
using ScalarStatistic = std::function<double(const Matrix& rows)>;

// SD of the central 1 - 2 alpha fraction of the sorted values (n - 1 denominator).
// No consistency factor is applied.
double trimmed_spread(const Eigen::Ref<const Vector>& samples, double alpha);

// sqrt of the mean of the ceil((1 - trim) n) smallest squared residuals.
double trimmed_rmsep(const Eigen::Ref<const Vector>& residuals, double trim);

enum class SpreadKind { sd, trimmed, percentile };

SpreadKind parse_spread_kind(const std::string& name);
std::string to_string(SpreadKind k);

enum class ResampleScheme {
    n_out_of_n,           // n rows drawn with replacement
    partial_replacement,  // n_replace random rows overwritten by rows drawn with replacement
};

struct BootstrapOptions {
    Index replicates = 2000;
    std::uint64_t seed = 0;
    SpreadKind spread = SpreadKind::sd;
    double trim = 0.2;    // alpha of trimmed_spread
    double level = 0.95;  // percentile interval coverage
    ResampleScheme scheme = ResampleScheme::n_out_of_n;
    Index n_replace = 0;  // partial scheme; 0 draws it uniformly from 1..n per replicate
    int threads = 0;
};

struct ResamplingReport {
    Vector original;         // statistic on the full data
    Matrix estimates;        // replicates x dim; failed replicates hold NaN
    std::vector<bool> failed;
    std::vector<std::string> failure_messages;  // one per failed replicate, in replicate order
    Vector sd;
    Vector trimmed_sd;
    Vector percentile_half_width;
    Vector spread;  // the column selected by `spread_kind`
    Vector lower;
    Vector upper;
    Index replicates = 0;
    Index failures = 0;
    std::uint64_t seed = 0;
    SpreadKind spread_kind = SpreadKind::sd;
    double trim = 0.0;
    double level = 0.0;
    ResampleScheme scheme = ResampleScheme::n_out_of_n;
};

// Row indices of every replicate (replicates x n); a function of (n, options) only.
Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> resample_indices(Index n, const BootstrapOptions& options);

// Case bootstrap. A replicate fails when the statistic throws a library error or
// returns non-finite values; more than half failing raises ResamplingError.
ResamplingReport bootstrap(const VectorStatistic& statistic, const Eigen::Ref<const Matrix>& data,
                           const BootstrapOptions& options = {});

// Fits on training rows and returns a predictor for test rows.
using Predictor = std::function<Vector(const Matrix& X)>;
using FitAtComplexity = std::function<Predictor(const Matrix& X, const Vector& y, int complexity)>;

struct CvOptions {
    Index n_splits = 100;
    double test_fraction = 0.25;
    double trim = 0.15;
    std::uint64_t seed = 0;
    int threads = 0;
};

struct CVReport {
    std::vector<int> grid;
    Vector rmsecv;          // mean trimmed test RMSE over successful splits; NaN if none
    Vector standard_error;  // SD over splits / sqrt(successful splits)
    Matrix split_errors;    // n_splits x grid; NaN where the fit failed
    std::vector<Index> failures;  // per complexity
    int chosen = 0;         // complexity with the smallest rmsecv
    int one_se_choice = 0;  // smallest complexity within one standard error of the minimum
    Index n_splits = 0;
    double test_fraction = 0.0;
    double trim = 0.0;
    std::uint64_t seed = 0;
};

// Repeated random train/test splits; the same split serves every complexity.
CVReport monte_carlo_cv(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y,
                        const FitAtComplexity& fit, const std::vector<int>& grid, const CvOptions& options = {});

struct InfluenceCurve {
    Matrix points;    // replacement rows
    Vector values;    // (T(modified) - T(original)) * n
    Index replaced_row = 0;
};

// Row closest (Euclidean) to the coordinate-wise median.
Index central_row(const Eigen::Ref<const Matrix>& data);

// replaced_row < 0 picks central_row.
InfluenceCurve empirical_influence(const ScalarStatistic& statistic, const Eigen::Ref<const Matrix>& data,
                                   const Eigen::Ref<const Matrix>& points, Index replaced_row = -1);

struct ContaminationSpec {
    enum class Kind {
        vertical_range,  // rows (mean_x + a, mean_y + b), a and b uniform per coordinate
        point_mass,      // rows equal to `point`
        cluster_shift,   // original rows moved by `shift`
    };
    Kind kind = Kind::vertical_range;
    double fraction = 0.0;  // used by contaminate()
    double a_low = 0.0, a_high = 10.0;
    double b_low = 1e4, b_high = 1e5;
    Vector point;
    Vector shift;

    void validate(Index cols) const;
};

// Replaces ceil(fraction n) random rows as described by `spec`.
Matrix contaminate(const Eigen::Ref<const Matrix>& data, const ContaminationSpec& spec, Rng& rng);

struct MaxbiasOptions {
    Index trials = 10;
    std::uint64_t seed = 0;
    int threads = 0;
};

struct MaxbiasCurve {
    std::vector<Index> m_grid;
    Vector bias;        // running maximum over m of the per-m worst case
    Vector raw_bias;    // worst case over the trials at each m
    Index n = 0;
    Index failures = 0; // statistic threw; counted as infinite bias
    // The supremum is taken over the sampled contaminations only.
    bool lower_bound = true;
};

// Each trial fixes a row order and replacement values, so the contaminated sets are
// nested in m.
MaxbiasCurve empirical_maxbias(const VectorStatistic& statistic, const Eigen::Ref<const Matrix>& data,
                               const ContaminationSpec& contamination, const std::vector<Index>& m_grid,
                               const MaxbiasOptions& options = {});

struct BreakdownResult {
    double fraction = 1.0;  // smallest m / n with bias above the threshold
    Index m = 0;
    bool exceeded = false;  // false: never exceeded, fraction reported as 1
    MaxbiasCurve curve;
};

BreakdownResult breakdown_scan(const VectorStatistic& statistic, const Eigen::Ref<const Matrix>& data,
                               const ContaminationSpec& contamination, double threshold,
                               const MaxbiasOptions& options = {});

}  // namespace robmv
