#include "robmv/pp_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace robmv {

namespace {

constexpr double kDeg = M_PI / 180.0;

double angle_distance(double a, double b) {
    double d = std::fmod(std::abs(a - b), 180.0);
    return std::min(d, 180.0 - d);
}

}  // namespace

ProjectionIndex variance_index() {
    return {"variance", [](const Vector& v) {
                const double m = v.mean();
                return (v.array() - m).square().sum() / double(std::max<Index>(1, v.size() - 1));
            },
            false};
}

ProjectionIndex sd_index() {
    return {"sd", [](const Vector& v) {
                const double m = v.mean();
                return std::sqrt((v.array() - m).square().sum() / double(std::max<Index>(1, v.size() - 1)));
            },
            true};
}

ProjectionIndex mad_index() {
    return {"mad", [](const Vector& v) { return mad(v, true); }, true};
}

ProjectionIndex m_scale_index(RhoFamily family, double delta) {
    return {"m-scale", [family, delta](const Vector& v) {
                Vector centered = v.array() - median(v);
                return m_scale(centered, family, delta).value;
            },
            true};
}

ProjectionIndex parse_projection_index(const std::string& name) {
    if (name == "variance") return variance_index();
    if (name == "sd") return sd_index();
    if (name == "mad") return mad_index();
    if (name == "m-scale") return m_scale_index();
    throw InputError("unknown projection index: " + name);
}

PlaneResult plane_optimize(const Vector& v1, const Vector& v2, const ProjectionIndex& index,
                           const GridConfig& cfg, double start_angle) {
    if (v1.size() != v2.size()) throw InputError("plane_optimize: vectors differ in length");
    if (v1.norm() == 0.0 && v2.norm() == 0.0) throw InputError("plane_optimize: both vectors are zero");
    if (cfg.n_angles < 2) throw InputError("plane_optimize: need at least two angles");
    if (!(cfg.shrink > 0 && cfg.shrink < 1)) throw InputError("plane_optimize: shrink must lie in (0,1)");

    auto eval = [&](double deg) {
        const double t = deg * kDeg;
        return index(std::cos(t) * v1 + std::sin(t) * v2);
    };

    double best_angle = start_angle;
    double best = eval(start_angle);
    // Coarse pass over a half circle; ties keep the angle nearest the start.
    for (Index i = 1; i < cfg.n_angles; ++i) {
        const double a = start_angle + 180.0 * double(i) / double(cfg.n_angles);
        const double s = eval(a);
        if (s > best || (s == best && angle_distance(a, start_angle) < angle_distance(best_angle, start_angle))) {
            best = s;
            best_angle = a;
        }
    }
    // Zoom in around the incumbent with a shrinking window.
    for (double half = cfg.initial_halfwidth; 2.0 * half * kDeg >= cfg.tol; half *= cfg.shrink) {
        const double center = best_angle;
        double cand_angle = center, cand = -std::numeric_limits<double>::infinity();
        for (Index i = 0; i < cfg.n_angles; ++i) {
            const double a = center - half + 2.0 * half * double(i) / double(cfg.n_angles - 1);
            const double s = eval(a);
            if (s > cand || (s == cand && std::abs(a - center) < std::abs(cand_angle - center))) {
                cand = s;
                cand_angle = a;
            }
        }
        if (cand > best) {
            best = cand;
            best_angle = cand_angle;
        }
    }
    PlaneResult out;
    out.angle = best_angle;
    out.gamma1 = std::cos(best_angle * kDeg);
    out.gamma2 = std::sin(best_angle * kDeg);
    out.score = best;
    return out;
}

GridResult grid_search(const Eigen::Ref<const Matrix>& X, const ProjectionIndex& index, const GridConfig& cfg) {
    const Index n = X.rows(), p = X.cols();
    if (n == 0 || p == 0) throw InputError("grid_search: empty data");
    require_finite(X, "grid_search data");
    GridResult out;
    if (p == 1) {
        out.direction = Vector::Ones(1);
        out.score = index(X.col(0));
        out.sweep_scores = {out.score};
        return out;
    }
    if (X.cwiseAbs().maxCoeff() == 0.0) throw DegenerateError("grid_search: data matrix is zero");

    // Order variables by their marginal index; constant columns go last.
    Vector marginal(p);
    for (Index j = 0; j < p; ++j) {
        const bool constant = (X.col(j).array() == X(0, j)).all();
        marginal[j] = constant ? -std::numeric_limits<double>::infinity() : index(X.col(j));
    }
    IndexList order = argsort(-marginal);

    Vector a = Vector::Zero(p);
    const Index j0 = order[0], j1 = order[1];
    PlaneResult first = plane_optimize(X.col(j0), X.col(j1), index, cfg);
    a[j0] = first.gamma1;
    a[j1] = first.gamma2;
    double score = first.score;
    for (Index k = 2; k < p; ++k) {
        const Index j = order[k];
        Vector y = X * a;
        if (y.norm() == 0.0 && X.col(j).norm() == 0.0) continue;
        PlaneResult r = plane_optimize(y, X.col(j), index, cfg);
        a *= r.gamma1;
        a[j] = r.gamma2;
        score = r.score;
    }
    out.sweep_scores.push_back(score);

    // Re-sweep every coordinate within the plane (rest of a, e_j) until a settles.
    for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
        Vector before = a;
        for (Index k = 0; k < p; ++k) {
            const Index j = order[k];
            Vector rest = a;
            rest[j] = 0.0;
            const double nu = rest.norm();
            if (nu < 1e-14) continue;
            rest /= nu;
            Vector y = X * rest;
            if (y.norm() == 0.0 && X.col(j).norm() == 0.0) continue;
            const double start = std::atan2(a[j], nu) / kDeg;
            PlaneResult r = plane_optimize(y, X.col(j), index, cfg, start);
            if (r.score >= score) {
                a = r.gamma1 * rest;
                a[j] = r.gamma2;
                score = r.score;
            }
        }
        a /= a.norm();
        out.sweep_scores.push_back(score);
        out.sweeps = sweep;
        const double change = std::min((a - before).norm(), (a + before).norm());
        if (change < cfg.tol) {
            Index arg = 0;
            a.cwiseAbs().maxCoeff(&arg);
            if (a[arg] < 0) a = -a;
            out.direction = a;
            out.score = score;
            return out;
        }
    }
    throw ConvergenceError("grid search did not converge", cfg.max_sweeps, a);
}

Matrix deflate(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Vector>& a) {
    if (a.size() != X.cols()) throw InputError("deflate: direction has wrong length");
    return X - (X * a) * a.transpose();
}

}  // namespace robmv
