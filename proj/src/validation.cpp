#include "robmv/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace robmv {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

double sample_sd(const Vector& v) {
    if (v.size() < 2) return 0.0;
    const double mean = v.mean();
    return std::sqrt((v.array() - mean).square().sum() / double(v.size() - 1));
}

Vector finite_rows_column(const Matrix& estimates, const std::vector<bool>& failed, Index col) {
    Vector out(estimates.rows());
    Index k = 0;
    for (Index i = 0; i < estimates.rows(); ++i)
        if (!failed[std::size_t(i)]) out[k++] = estimates(i, col);
    return out.head(k);
}

struct TrialPlan {
    IndexList order;  // rows in replacement order
    Matrix rows;      // replacement row for every position of `order`
};

TrialPlan plan_trial(const Matrix& data, const ContaminationSpec& spec, Rng& rng) {
    const Index n = data.rows(), cols = data.cols();
    TrialPlan plan;
    plan.order.resize(std::size_t(n));
    std::iota(plan.order.begin(), plan.order.end(), Index(0));
    std::shuffle(plan.order.begin(), plan.order.end(), rng);
    plan.rows.resize(n, cols);
    const Vector means = column_means(data);
    std::uniform_real_distribution<double> a(spec.a_low, spec.a_high), b(spec.b_low, spec.b_high);
    for (Index k = 0; k < n; ++k) {
        const Index i = plan.order[std::size_t(k)];
        switch (spec.kind) {
            case ContaminationSpec::Kind::vertical_range:
                for (Index j = 0; j + 1 < cols; ++j) plan.rows(k, j) = means[j] + a(rng);
                plan.rows(k, cols - 1) = means[cols - 1] + b(rng);
                break;
            case ContaminationSpec::Kind::point_mass:
                plan.rows.row(k) = spec.point.transpose();
                break;
            case ContaminationSpec::Kind::cluster_shift:
                plan.rows.row(k) = data.row(i) + spec.shift.transpose();
                break;
        }
    }
    return plan;
}

Matrix apply_plan(const Matrix& data, const TrialPlan& plan, Index m) {
    Matrix out = data;
    for (Index k = 0; k < m; ++k) out.row(plan.order[std::size_t(k)]) = plan.rows.row(k);
    return out;
}

std::vector<TrialPlan> plan_trials(const Matrix& data, const ContaminationSpec& spec, const MaxbiasOptions& options) {
    std::vector<TrialPlan> plans;
    for (Index t = 0; t < options.trials; ++t) {
        Rng rng = make_rng(options.seed, 0xb1a5, std::uint64_t(t));
        plans.push_back(plan_trial(data, spec, rng));
    }
    return plans;
}

// Worst bias over the trials for every m; failures count as infinite bias.
Vector worst_bias(const VectorStatistic& statistic, const Matrix& data, const Vector& original,
                  const std::vector<TrialPlan>& plans, const std::vector<Index>& ms, int threads, Index& failures) {
    const Index trials = Index(plans.size());
    const Index count = Index(ms.size()) * trials;
    Vector bias(count);
    std::vector<char> failed(std::size_t(count), 0);
    parallel_for(count, threads, [&](Index task) {
        const Index mi = task / trials, t = task % trials;
        const Index m = ms[std::size_t(mi)];
        if (m == 0) {
            bias[task] = 0.0;
            return;
        }
        try {
            const Vector value = statistic(apply_plan(data, plans[std::size_t(t)], m));
            const double d = (value - original).norm();
            bias[task] = std::isfinite(d) ? d : kInf;
        } catch (const Error&) {
            bias[task] = kInf;
            failed[std::size_t(task)] = 1;
        }
    });
    failures += std::count(failed.begin(), failed.end(), char(1));
    Vector worst(Index(ms.size()));
    for (Index mi = 0; mi < Index(ms.size()); ++mi) worst[mi] = bias.segment(mi * trials, trials).maxCoeff();
    return worst;
}

}  // namespace

double trimmed_spread(const Eigen::Ref<const Vector>& samples, double alpha) {
    if (!(alpha >= 0.0 && alpha < 0.5)) throw InputError("trimmed spread: alpha must lie in [0, 0.5)");
    const Index n = samples.size();
    const Index g = Index(std::floor(alpha * double(n) + 1e-9));
    if (n - 2 * g < 1) throw InputError("trimmed spread: nothing left after trimming");
    Vector sorted = samples;
    std::sort(sorted.data(), sorted.data() + n);
    return sample_sd(sorted.segment(g, n - 2 * g));
}

double trimmed_rmsep(const Eigen::Ref<const Vector>& residuals, double trim) {
    if (!(trim >= 0.0 && trim < 1.0)) throw InputError("trimmed RMSEP: trim must lie in [0, 1)");
    const Index n = residuals.size();
    if (n == 0) throw InputError("trimmed RMSEP: no residuals");
    const Index keep = std::clamp<Index>(Index(std::ceil((1.0 - trim) * double(n) - 1e-9)), 1, n);
    Vector sq = residuals.array().square();
    std::sort(sq.data(), sq.data() + n);
    return std::sqrt(sq.head(keep).mean());
}

SpreadKind parse_spread_kind(const std::string& name) {
    if (name == "sd") return SpreadKind::sd;
    if (name == "trimmed") return SpreadKind::trimmed;
    if (name == "percentile") return SpreadKind::percentile;
    throw InputError("unknown spread: " + name);
}

std::string to_string(SpreadKind k) {
    switch (k) {
        case SpreadKind::sd: return "sd";
        case SpreadKind::trimmed: return "trimmed";
        case SpreadKind::percentile: return "percentile";
    }
    return "sd";
}

Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> resample_indices(Index n, const BootstrapOptions& options) {
    if (n < 1) throw InputError("bootstrap: no rows");
    if (options.replicates < 1) throw InputError("bootstrap: need at least one replicate");
    if (options.n_replace < 0 || options.n_replace > n) throw InputError("bootstrap: n_replace outside [0, n]");
    Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> idx(options.replicates, n);
    for (Index r = 0; r < options.replicates; ++r) {
        Rng rng = make_rng(options.seed, 0xb007, std::uint64_t(r));
        std::uniform_int_distribution<Index> row(0, n - 1);
        if (options.scheme == ResampleScheme::n_out_of_n) {
            for (Index i = 0; i < n; ++i) idx(r, i) = row(rng);
        } else {
            for (Index i = 0; i < n; ++i) idx(r, i) = i;
            Index count = options.n_replace;
            if (count == 0) count = std::uniform_int_distribution<Index>(1, n)(rng);
            for (Index i : sample_without_replacement(n, count, rng)) idx(r, i) = row(rng);
        }
    }
    return idx;
}

ResamplingReport bootstrap(const VectorStatistic& statistic, const Eigen::Ref<const Matrix>& data,
                           const BootstrapOptions& options) {
    if (!(options.level > 0.0 && options.level < 1.0)) throw InputError("bootstrap: level must lie in (0, 1)");
    if (!(options.trim >= 0.0 && options.trim < 0.5)) throw InputError("bootstrap: trim must lie in [0, 0.5)");
    const Matrix rows = data;
    const auto idx = resample_indices(rows.rows(), options);
    const Index m = options.replicates;

    ResamplingReport rep;
    rep.original = statistic(rows);
    const Index dim = rep.original.size();
    rep.estimates = Matrix::Constant(m, dim, kNaN);
    std::vector<char> failed(static_cast<std::size_t>(m), 0);  // vector<bool> is not safe to write concurrently
    std::vector<std::string> messages(static_cast<std::size_t>(m));

    parallel_for(m, options.threads, [&](Index r) {
        Matrix sample(rows.rows(), rows.cols());
        for (Index i = 0; i < rows.rows(); ++i) sample.row(i) = rows.row(idx(r, i));
        try {
            const Vector value = statistic(sample);
            if (value.size() != dim) throw InputError("bootstrap: statistic changed dimension");
            if (!value.allFinite()) throw DegenerateError("bootstrap: non-finite statistic");
            rep.estimates.row(r) = value.transpose();
        } catch (const Error& e) {
            failed[std::size_t(r)] = 1;
            messages[std::size_t(r)] = e.what();
        }
    });

    rep.failed.assign(failed.begin(), failed.end());
    for (Index r = 0; r < m; ++r)
        if (rep.failed[std::size_t(r)]) {
            ++rep.failures;
            rep.failure_messages.push_back(messages[std::size_t(r)]);
        }
    rep.replicates = m;
    rep.seed = options.seed;
    rep.spread_kind = options.spread;
    rep.trim = options.trim;
    rep.level = options.level;
    rep.scheme = options.scheme;
    if (2 * rep.failures > m)
        throw ResamplingError("bootstrap: " + std::to_string(rep.failures) + " of " + std::to_string(m) +
                              " replicates failed");

    rep.sd.resize(dim);
    rep.trimmed_sd.resize(dim);
    rep.percentile_half_width.resize(dim);
    rep.lower.resize(dim);
    rep.upper.resize(dim);
    const double tail = 0.5 * (1.0 - options.level);
    for (Index j = 0; j < dim; ++j) {
        const Vector col = finite_rows_column(rep.estimates, rep.failed, j);
        rep.sd[j] = sample_sd(col);
        rep.trimmed_sd[j] = trimmed_spread(col, options.trim);
        rep.lower[j] = quantile(col, tail);
        rep.upper[j] = quantile(col, 1.0 - tail);
        rep.percentile_half_width[j] = 0.5 * (rep.upper[j] - rep.lower[j]);
    }
    switch (options.spread) {
        case SpreadKind::sd: rep.spread = rep.sd; break;
        case SpreadKind::trimmed: rep.spread = rep.trimmed_sd; break;
        case SpreadKind::percentile: rep.spread = rep.percentile_half_width; break;
    }
    return rep;
}

CVReport monte_carlo_cv(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& y,
                        const FitAtComplexity& fit, const std::vector<int>& grid, const CvOptions& options) {
    const Index n = X.rows();
    if (y.size() != n) throw InputError("cross-validation: X and y differ in length");
    if (grid.empty()) throw InputError("cross-validation: empty complexity grid");
    if (!(options.test_fraction > 0.0 && options.test_fraction < 1.0))
        throw InputError("cross-validation: test fraction must lie in (0, 1)");
    if (!(options.trim >= 0.0 && options.trim < 1.0)) throw InputError("cross-validation: trim must lie in [0, 1)");
    if (options.n_splits < 1) throw InputError("cross-validation: need at least one split");
    if (n < 2) throw InputError("cross-validation: need at least two rows");
    const Index n_test = std::clamp<Index>(Index(std::llround(options.test_fraction * double(n))), 1, n - 1);
    const Index g = Index(grid.size());

    CVReport rep;
    rep.grid = grid;
    rep.split_errors = Matrix::Constant(options.n_splits, g, kNaN);
    rep.n_splits = options.n_splits;
    rep.test_fraction = options.test_fraction;
    rep.trim = options.trim;
    rep.seed = options.seed;

    parallel_for(options.n_splits, options.threads, [&](Index s) {
        Rng rng = make_rng(options.seed, 0xc5, std::uint64_t(s));
        const IndexList test = sample_without_replacement(n, n_test, rng);
        IndexList train;
        std::vector<bool> in_test(std::size_t(n), false);
        for (Index i : test) in_test[std::size_t(i)] = true;
        for (Index i = 0; i < n; ++i)
            if (!in_test[std::size_t(i)]) train.push_back(i);
        const Matrix Xtr = select_rows(X, train), Xte = select_rows(X, test);
        const Vector ytr = select(y, train), yte = select(y, test);
        for (Index c = 0; c < g; ++c) {
            try {
                const Predictor predict = fit(Xtr, ytr, grid[std::size_t(c)]);
                const Vector r = yte - predict(Xte);
                if (r.allFinite()) rep.split_errors(s, c) = trimmed_rmsep(r, options.trim);
            } catch (const Error&) {
            }
        }
    });

    rep.rmsecv = Vector::Constant(g, kNaN);
    rep.standard_error = Vector::Constant(g, kNaN);
    rep.failures.assign(std::size_t(g), 0);
    Index best = -1;
    for (Index c = 0; c < g; ++c) {
        std::vector<double> ok;
        for (Index s = 0; s < options.n_splits; ++s) {
            const double e = rep.split_errors(s, c);
            if (std::isnan(e)) ++rep.failures[std::size_t(c)];
            else ok.push_back(e);
        }
        if (ok.empty()) continue;
        const Vector v = Eigen::Map<const Vector>(ok.data(), Index(ok.size()));
        rep.rmsecv[c] = v.mean();
        rep.standard_error[c] = sample_sd(v) / std::sqrt(double(v.size()));
        if (best < 0 || rep.rmsecv[c] < rep.rmsecv[best]) best = c;
    }
    if (best < 0) throw ResamplingError("cross-validation: every fit failed");
    rep.chosen = grid[std::size_t(best)];
    const double bound = rep.rmsecv[best] + rep.standard_error[best];
    rep.one_se_choice = rep.chosen;
    for (Index c = 0; c < g; ++c)
        if (!std::isnan(rep.rmsecv[c]) && rep.rmsecv[c] <= bound)
            rep.one_se_choice = std::min(rep.one_se_choice, grid[std::size_t(c)]);
    return rep;
}

Index central_row(const Eigen::Ref<const Matrix>& data) {
    if (data.rows() == 0) throw InputError("central row: no data");
    Vector med(data.cols());
    for (Index j = 0; j < data.cols(); ++j) med[j] = median(data.col(j));
    Index best = 0;
    (data.rowwise() - med.transpose()).rowwise().squaredNorm().minCoeff(&best);
    return best;
}

InfluenceCurve empirical_influence(const ScalarStatistic& statistic, const Eigen::Ref<const Matrix>& data,
                                   const Eigen::Ref<const Matrix>& points, Index replaced_row) {
    const Index n = data.rows();
    if (n == 0) throw InputError("influence: no data");
    if (points.cols() != data.cols()) throw InputError("influence: replacement rows have the wrong width");
    if (replaced_row < 0) replaced_row = central_row(data);
    if (replaced_row >= n) throw InputError("influence: replaced row out of range");
    const Matrix base = data;
    const double original = statistic(base);
    InfluenceCurve curve;
    curve.points = points;
    curve.replaced_row = replaced_row;
    curve.values.resize(points.rows());
    for (Index k = 0; k < points.rows(); ++k) {
        Matrix modified = base;
        modified.row(replaced_row) = points.row(k);
        curve.values[k] = (statistic(modified) - original) * double(n);
    }
    return curve;
}

void ContaminationSpec::validate(Index cols) const {
    if (!(fraction >= 0.0 && fraction < 1.0)) throw InputError("contamination fraction must lie in [0, 1)");
    if (kind == Kind::vertical_range && (a_low > a_high || b_low > b_high))
        throw InputError("contamination ranges must be ordered");
    if (kind == Kind::point_mass && point.size() != cols) throw InputError("contamination point has the wrong width");
    if (kind == Kind::cluster_shift && shift.size() != cols) throw InputError("contamination shift has the wrong width");
}

Matrix contaminate(const Eigen::Ref<const Matrix>& data, const ContaminationSpec& spec, Rng& rng) {
    spec.validate(data.cols());
    const Matrix base = data;
    const TrialPlan plan = plan_trial(base, spec, rng);
    const Index m = Index(std::ceil(spec.fraction * double(base.rows()) - 1e-9));
    return apply_plan(base, plan, m);
}

MaxbiasCurve empirical_maxbias(const VectorStatistic& statistic, const Eigen::Ref<const Matrix>& data,
                               const ContaminationSpec& contamination, const std::vector<Index>& m_grid,
                               const MaxbiasOptions& options) {
    const Matrix base = data;
    const Index n = base.rows();
    contamination.validate(base.cols());
    if (options.trials < 1) throw InputError("maxbias: need at least one trial");
    for (Index m : m_grid)
        if (m < 0 || m > n) throw InputError("maxbias: m outside [0, n]");
    const Vector original = statistic(base);
    const auto plans = plan_trials(base, contamination, options);

    MaxbiasCurve curve;
    curve.m_grid = m_grid;
    curve.n = n;
    curve.raw_bias = worst_bias(statistic, base, original, plans, m_grid, options.threads, curve.failures);
    curve.bias = curve.raw_bias;
    // Sort by m for the running maximum, then report in grid order.
    IndexList order(m_grid.size());
    std::iota(order.begin(), order.end(), Index(0));
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return m_grid[a] < m_grid[b]; });
    double running = 0.0;
    for (Index k : order) {
        running = std::max(running, curve.raw_bias[k]);
        curve.bias[k] = running;
    }
    return curve;
}

BreakdownResult breakdown_scan(const VectorStatistic& statistic, const Eigen::Ref<const Matrix>& data,
                               const ContaminationSpec& contamination, double threshold,
                               const MaxbiasOptions& options) {
    if (!(threshold > 0.0)) throw InputError("breakdown scan: threshold must be positive");
    const Matrix base = data;
    const Index n = base.rows();
    contamination.validate(base.cols());
    if (options.trials < 1) throw InputError("breakdown scan: need at least one trial");
    const Vector original = statistic(base);
    const auto plans = plan_trials(base, contamination, options);

    BreakdownResult out;
    out.curve.n = n;
    double running = 0.0;
    const Index block = 8;
    for (Index start = 1; start < n && !out.exceeded; start += block) {
        std::vector<Index> ms;
        for (Index m = start; m < std::min(n, start + block); ++m) ms.push_back(m);
        const Vector worst = worst_bias(statistic, base, original, plans, ms, options.threads, out.curve.failures);
        for (Index k = 0; k < Index(ms.size()); ++k) {
            running = std::max(running, worst[k]);
            out.curve.m_grid.push_back(ms[std::size_t(k)]);
            out.curve.raw_bias.conservativeResize(out.curve.raw_bias.size() + 1);
            out.curve.raw_bias[out.curve.raw_bias.size() - 1] = worst[k];
            out.curve.bias.conservativeResize(out.curve.bias.size() + 1);
            out.curve.bias[out.curve.bias.size() - 1] = running;
            if (running > threshold) {
                out.exceeded = true;
                out.m = ms[std::size_t(k)];
                out.fraction = double(out.m) / double(n);
                break;
            }
        }
    }
    return out;
}

}  // namespace robmv
