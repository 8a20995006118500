#include "robmv/scale.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/roots.hpp>

namespace robmv {

namespace {

void check_family(const RhoFamily& f) {
    if ((f.kind == RhoKind::huber || f.kind == RhoKind::bisquare) && !(f.k > 0 && std::isfinite(f.k)))
        throw InputError("tuning constant must be positive and finite");
}

}  // namespace

double RhoFamily::rho_max() const {
    return bounded() ? 1.0 : std::numeric_limits<double>::infinity();
}

std::string RhoFamily::name() const {
    switch (kind) {
        case RhoKind::quadratic: return "quadratic";
        case RhoKind::absolute: return "absolute";
        case RhoKind::huber: return "huber";
        case RhoKind::bisquare: return "bisquare";
        case RhoKind::indicator: return "indicator";
    }
    return "unknown";
}

RhoFamily parse_rho_family(const std::string& name, double k) {
    if (name == "quadratic") return RhoFamily::quadratic();
    if (name == "absolute") return RhoFamily::absolute();
    if (name == "huber") return RhoFamily::huber(k);
    if (name == "bisquare") return RhoFamily::bisquare(k);
    if (name == "indicator") return RhoFamily::indicator();
    throw InputError("unknown rho family: " + name);
}

RhoValue rho_eval(const RhoFamily& f, double r) {
    if (!std::isfinite(r)) throw InputError("rho evaluated at a non-finite residual");
    check_family(f);
    const double a = std::abs(r);
    switch (f.kind) {
        case RhoKind::quadratic:
            return {r * r, 2.0 * r, 2.0};
        case RhoKind::absolute:
            return {a, r > 0 ? 1.0 : (r < 0 ? -1.0 : 0.0), 1.0 / std::max(a, 1e-8)};
        case RhoKind::huber:
            if (a <= f.k) return {0.5 * r * r, r, 1.0};
            return {f.k * a - 0.5 * f.k * f.k, std::copysign(f.k, r), f.k / a};
        case RhoKind::bisquare: {
            if (a > f.k) return {1.0, 0.0, 0.0};
            const double u2 = (r / f.k) * (r / f.k);
            const double w = 6.0 / (f.k * f.k) * (1.0 - u2) * (1.0 - u2);
            return {u2 * (3.0 - 3.0 * u2 + u2 * u2), w * r, w};
        }
        case RhoKind::indicator:
            return {a > 1.0 ? 1.0 : 0.0, 0.0, 0.0};
    }
    throw InputError("unknown rho family");
}

double rho(const RhoFamily& f, double r) { return rho_eval(f, r).rho; }

double scale_weight(const RhoFamily& f, double z) {
    const double a = std::abs(z);
    switch (f.kind) {
        case RhoKind::quadratic: return 1.0;
        case RhoKind::absolute: return 1.0 / std::max(a, 1e-8);
        case RhoKind::huber:
            if (a <= f.k) return 0.5;
            return (f.k * a - 0.5 * f.k * f.k) / (a * a);
        case RhoKind::bisquare: {
            if (a > f.k) return 1.0 / (a * a);
            const double u2 = (z / f.k) * (z / f.k);
            return (3.0 - 3.0 * u2 + u2 * u2) / (f.k * f.k);
        }
        case RhoKind::indicator:
            return a > 1.0 ? 1.0 / (a * a) : 0.0;
    }
    return 0.0;
}

double mad(const Eigen::Ref<const Vector>& values, bool consistent) {
    if (values.size() == 0) throw InputError("MAD of empty vector");
    require_finite(values, "MAD input");
    const double m = median(values);
    const double raw = median((values.array() - m).abs().matrix());
    return consistent ? raw / kMadConstant : raw;
}

double quantile_scale(const Eigen::Ref<const Vector>& r, Index h) {
    if (h < 1 || h > r.size()) throw InputError("quantile scale: h outside [1, n]");
    return order_statistic(r.cwiseAbs(), h);
}

double trimmed_squares_scale(const Eigen::Ref<const Vector>& r, Index h) {
    if (h < 1 || h > r.size()) throw InputError("trimmed scale: h outside [1, n]");
    Vector sq = r.array().square();
    std::sort(sq.data(), sq.data() + sq.size());
    return std::sqrt(sq.head(h).sum() / double(r.size()));
}

double m_scale_residual(const Eigen::Ref<const Vector>& r, const RhoFamily& family, double delta,
                        double s) {
    double total = 0.0;
    for (Index i = 0; i < r.size(); ++i) total += rho(family, r[i] / s);
    return total / double(r.size()) - delta;
}

ScaleEstimate m_scale(const Eigen::Ref<const Vector>& r, const RhoFamily& family, double delta,
                      const MScaleOptions& options) {
    const Index n = r.size();
    if (n == 0) throw InputError("M-scale of empty vector");
    require_finite(r, "M-scale input");
    check_family(family);
    if (!(delta > 0) || !(delta < family.rho_max()))
        throw InputError("M-scale: delta must lie in (0, sup rho)");

    ScaleEstimate out;
    out.method = "m-scale:" + family.name();
    const Vector a = r.cwiseAbs();
    const Index nonzero = (a.array() > 0).count();
    if (nonzero == 0) {
        out.degenerate = true;
        return out;
    }
    if (family.kind == RhoKind::quadratic) {
        out.value = std::sqrt(a.squaredNorm() / (double(n) * delta));
        out.iterations = 1;
        return out;
    }
    if (family.kind == RhoKind::indicator) {
        // The estimating equation is a step function of s; its solution set is an
        // interval between order statistics. Take the (1 - delta) quantile, which is
        // the median |r| at delta = 1/2.
        const double pos = (1.0 - delta) * double(n);
        if (std::abs(pos - std::round(pos)) < 1e-12 && Index(std::round(pos)) < n &&
            Index(std::round(pos)) >= 1) {
            const Index k = Index(std::round(pos));
            out.value = 0.5 * (order_statistic(a, k) + order_statistic(a, k + 1));
        } else {
            out.value = order_statistic(a, std::clamp<Index>(Index(std::ceil(pos)), 1, n));
        }
        out.iterations = 1;
        out.degenerate = out.value == 0.0;
        return out;
    }
    if (family.bounded() && double(nonzero) / double(n) <= delta) {
        // Too many exact zeros: the equation has no positive root, the infimum is 0.
        out.degenerate = true;
        return out;
    }

    double s = median(a) / kMadConstant;
    if (!(s > 0)) s = a.sum() / double(nonzero);
    double prev_step = 0.0;
    for (int it = 1; it <= options.max_iter; ++it) {
        double mean_rho = 0.0;
        for (Index i = 0; i < n; ++i) mean_rho += rho(family, a[i] / s);
        mean_rho /= double(n);
        const double next = s * std::sqrt(mean_rho / delta);
        const double step = std::abs(next - s);
        // Linear convergence: the remaining error is about step / (1 - rate).
        const double rate = prev_step > 0 ? std::min(step / prev_step, 0.99) : 0.5;
        prev_step = step;
        s = next;
        out.iterations = it;
        if (step <= options.tol * (1.0 - rate) * s) {
            out.value = s;
            return out;
        }
    }
    // The fixed point crawls when nearly delta of the residuals are huge; the
    // equation is monotone in s, so fall back to a bracketing root search.
    auto excess = [&](double t) { return m_scale_residual(r, family, delta, t); };
    double lo = s, hi = s;
    for (int k = 0; k < 200 && excess(lo) <= 0; ++k) lo *= 0.5;
    for (int k = 0; k < 200 && excess(hi) >= 0; ++k) hi *= 2.0;
    if (excess(lo) > 0 && excess(hi) < 0) {
        boost::uintmax_t iters = std::uintmax_t(options.max_iter);
        const auto root = boost::math::tools::toms748_solve(
            excess, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
        out.value = 0.5 * (root.first + root.second);
        out.iterations = options.max_iter + int(iters);
        if (std::abs(excess(out.value)) <= options.tol) return out;
    }
    throw ConvergenceError("M-scale fixed point did not converge", options.max_iter, s);
}

ConsistencyConstant monte_carlo_consistency(const RhoFamily& family, double delta, Index draws,
                                            std::uint64_t seed) {
    if (draws < 10) throw InputError("Monte Carlo needs at least 10 draws");
    constexpr Index kBatches = 10;
    Rng rng(seed);
    std::normal_distribution<double> z;
    Vector all(draws);
    for (Index i = 0; i < draws; ++i) all[i] = z(rng);
    ConsistencyConstant out;
    out.value = m_scale(all, family, delta).value;
    const Index per = draws / kBatches;
    Vector batch(kBatches);
    for (Index b = 0; b < kBatches; ++b) batch[b] = m_scale(all.segment(b * per, per), family, delta).value;
    const double mean = batch.mean();
    const double var = (batch.array() - mean).square().sum() / double(kBatches - 1);
    // Batch values average draws/kBatches points; scale the spread to the full sample.
    out.std_error = std::sqrt(var / double(kBatches));
    return out;
}

std::optional<double> known_consistency(const RhoFamily& family, double delta) {
    if (family.kind == RhoKind::indicator && delta == 0.5) return kMadConstant;
    if (family.kind == RhoKind::bisquare && family.k == 1.0 && delta == 0.5) return 1.65;
    if (family.kind == RhoKind::quadratic && delta == 1.0) return 1.0;
    return std::nullopt;
}

ConsistencyConstant consistency_constant(const RhoFamily& family, double delta) {
    if (auto c = known_consistency(family, delta)) return {*c, 0.0, true};
    return monte_carlo_consistency(family, delta);
}

}  // namespace robmv
