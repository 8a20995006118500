#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "robmv/common.hpp"

namespace robmv {

// Normal-consistency divisor for the MAD (median |z| for z ~ N(0,1), rounded).
inline constexpr double kMadConstant = 0.675;

enum class RhoKind { quadratic, absolute, huber, bisquare, indicator };

// A loss function rho together with its tuning constant k.
struct RhoFamily {
    RhoKind kind = RhoKind::quadratic;
    double k = 1.0;

    static RhoFamily quadratic() { return {RhoKind::quadratic, 1.0}; }
    static RhoFamily absolute() { return {RhoKind::absolute, 1.0}; }
    static RhoFamily huber(double k) { return {RhoKind::huber, k}; }
    static RhoFamily bisquare(double k) { return {RhoKind::bisquare, k}; }
    static RhoFamily indicator() { return {RhoKind::indicator, 1.0}; }

    bool bounded() const { return kind == RhoKind::bisquare || kind == RhoKind::indicator; }
    // sup rho, +inf for unbounded families.
    double rho_max() const;
    std::string name() const;
};

RhoFamily parse_rho_family(const std::string& name, double k);

struct RhoValue {
    double rho;
    double psi;
    double weight;  // psi(r)/r, limit at r = 0
};

RhoValue rho_eval(const RhoFamily& family, double r);
double rho(const RhoFamily& family, double r);
// rho(z)/z^2 with its limit at 0; the weight used by the M-scale fixed point.
double scale_weight(const RhoFamily& family, double z);

struct ScaleEstimate {
    double value = 0.0;
    double consistency = 1.0;  // divide value by this to get a normal-consistent scale
    std::string method;
    bool degenerate = false;
    int iterations = 0;

    double consistent() const { return value / consistency; }
};

// Median absolute deviation about the median; divided by 0.675 when `consistent`.
double mad(const Eigen::Ref<const Vector>& values, bool consistent = true);
// h-th smallest |r|.
double quantile_scale(const Eigen::Ref<const Vector>& r, Index h);
// sqrt((1/n) * sum of the h smallest r^2).
double trimmed_squares_scale(const Eigen::Ref<const Vector>& r, Index h);

struct MScaleOptions {
    double tol = 1e-9;
    int max_iter = 200;
};

// Solves (1/n) sum rho(r_i / s) = delta for s.
ScaleEstimate m_scale(const Eigen::Ref<const Vector>& r, const RhoFamily& family, double delta,
                      const MScaleOptions& options = {});

// Mean of rho(r_i/s) - delta, the estimating-equation residual at s.
double m_scale_residual(const Eigen::Ref<const Vector>& r, const RhoFamily& family, double delta,
                        double s);

struct ConsistencyConstant {
    double value = 1.0;
    double std_error = 0.0;
    bool tabulated = false;
};

inline constexpr std::uint64_t kConsistencySeed = 0x5eed0c0ffeeULL;

// Tabulated for (indicator, 0.5), (bisquare(1), 0.5) and (quadratic, 1); Monte Carlo otherwise.
ConsistencyConstant consistency_constant(const RhoFamily& family, double delta);
// The tabulated constants only, without falling back to simulation.
std::optional<double> known_consistency(const RhoFamily& family, double delta);
// Always Monte Carlo: the M-scale of `draws` standard normals, with a batch standard error.
ConsistencyConstant monte_carlo_consistency(const RhoFamily& family, double delta,
                                            Index draws = 1'000'000,
                                            std::uint64_t seed = kConsistencySeed);

}  // namespace robmv
