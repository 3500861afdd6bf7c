#pragma once

#include <cmath>
#include <string>

#include "sigma/errors.hpp"
#include "sigma/func.hpp"
#include "sigma/quadrature.hpp"
#include "sigma/scale.hpp"

namespace sigma {

// ---------------------------------------------------------------------------
// Closed-form laws of the submartingale family, all evaluated by adaptive
// quadrature.  Improper integrals over [0, inf) report divergence once the
// partial integral passes 700 (where exp(-I) underflows), which the survival
// formulas translate into exact 0s and 1s.
// ---------------------------------------------------------------------------

// E[X_inf | A_inf = x] as a positive function of x.
struct ConditionalMean {
    ScalarFn fn;
    double operator()(double x) const { return fn(x); }
};

namespace detail {

inline void probe_positive(const ScalarFn& f, double lo, double hi, const char* role) {
    BarrierFunction b{f, IntegrabilityHint::unknown};
    b.check_positive(lo, hi, role);
}

} // namespace detail

// P(sup of the path ever exceeds the barrier phi of its increasing part):
// 1 - exp(-int_0^inf dx/phi(x)); exactly 1 when the integral diverges.
inline double hitting_prob(const BarrierFunction& phi) {
    if (phi.hint == IntegrabilityHint::reciprocal_divergent) return 1.0;
    phi.check_positive(0.0, 1e6, "hitting_prob barrier");
    auto r = integrate_to_inf([&phi](double x) { return 1.0 / phi(x); }, 0.0,
                              phi.fn.breakpoints());
    if (r.diverged) return 1.0;
    return -std::expm1(-r.value);
}

// Same event restricted to the increasing part reaching u:
// 1 - exp(-int_0^u dx/phi(x)).
inline double hitting_prob_up_to(const BarrierFunction& phi, double u) {
    if (!(u >= 0.0) || !std::isfinite(u))
        throw domain_error("hitting_prob_up_to: u must be finite and >= 0");
    if (u == 0.0) return 0.0;
    phi.check_positive(0.0, u, "hitting_prob_up_to barrier");
    auto r = integrate([&phi](double x) { return 1.0 / phi(x); }, 0.0, u,
                       phi.fn.breakpoints());
    if (r.diverged) return 1.0;
    return -std::expm1(-r.value);
}

// P(A_inf > x) = exp(-int_0^x dz/lambda(z)); 0 past the divergence point.
inline double law_A_infty_survival(const ConditionalMean& lam, double x) {
    if (!(x >= 0.0)) throw domain_error("law_A_infty_survival: x must be >= 0");
    if (x == 0.0) return 1.0;
    detail::probe_positive(lam.fn, 0.0, x, "law_A_infty conditional mean");
    auto r = integrate([&lam](double z) { return 1.0 / lam(z); }, 0.0, x,
                       lam.fn.breakpoints());
    if (r.diverged) return 0.0;
    return std::exp(-r.value);
}

// P(S_inf > x) = exp(-int_0^x dz/(z - alpha(z))), alpha(z) = E[M_inf|S_inf=z].
inline double law_max_martingale_survival(const ScalarFn& alpha, double x) {
    if (!(x >= 0.0)) throw domain_error("law_max_martingale_survival: x must be >= 0");
    if (x == 0.0) return 1.0;
    // denominator must be positive away from the origin
    const double lo = std::min(1e-9, x * 1e-6);
    for (int i = 0; i <= 64; ++i) {
        const double z = lo * std::pow(x / lo, i / 64.0);
        if (!(z - alpha(z) > 0.0))
            throw nonpositive_denominator(
                "law_max_martingale_survival: z - alpha(z) <= 0 at z=" + std::to_string(z));
    }
    auto r = integrate([&alpha](double z) { return 1.0 / (z - alpha(z)); }, 0.0, x,
                       alpha.breakpoints());
    if (r.diverged)
        throw divergent_at_origin(
            "law_max_martingale_survival: integral of 1/(z - alpha(z)) diverges "
            "(alpha pins the denominator at the origin)");
    return std::exp(-r.value);
}

// P(A_T > x) = exp(-int_0^x phi(z) dz) for T calibrated by the barrier phi.
inline double law_A_T_survival(const BarrierFunction& phi, double x) {
    if (!(x >= 0.0)) throw domain_error("law_A_T_survival: x must be >= 0");
    if (x == 0.0) return 1.0;
    for (int i = 0; i <= 64; ++i) {
        const double z = x * i / 64.0;
        if (phi(z) < 0.0)
            throw invalid_spec("law_A_T_survival: phi must be nonnegative, fails at z=" +
                               std::to_string(z));
    }
    auto r = integrate([&phi](double z) { return phi(z); }, 0.0, x,
                       phi.fn.breakpoints());
    if (r.diverged) return 0.0;
    return std::exp(-r.value);
}

// P(A_T > x) = exp(-int_0^x dz/psi(z)) for the reciprocal calibration.
inline double law_A_T_psi_survival(const BarrierFunction& psi, double x) {
    if (!(x >= 0.0)) throw domain_error("law_A_T_psi_survival: x must be >= 0");
    if (x == 0.0) return 1.0;
    psi.check_positive(0.0, x, "law_A_T_psi barrier");
    auto r = integrate([&psi](double z) { return 1.0 / psi(z); }, 0.0, x,
                       psi.fn.breakpoints());
    if (r.diverged) return 0.0;
    return std::exp(-r.value);
}

// P(running max of the diffusion > x) under the drawdown stop at theta:
// exp(-int_0^x s'(z) dz / (s(z) - s(z - theta(z)))).
inline double lehoczky_survival(const ScaleFunction& sf, const BarrierFunction& theta,
                                double x) {
    if (!(x >= 0.0)) throw domain_error("lehoczky_survival: x must be >= 0");
    if (x == 0.0) return 1.0;
    theta.check_positive(0.0, x, "lehoczky drawdown threshold");
    auto integrand = [&](double z) {
        const double th = theta(z);
        if (!(th > 0.0))
            throw nonpositive_denominator("lehoczky_survival: theta(z) <= 0 at z=" +
                                          std::to_string(z));
        const double num_log = -sf.beta(z);
        const double d = sf.s(z) - sf.s(z - th);
        if (std::isfinite(d) && d > 0.0 && std::isfinite(num_log))
            return std::exp(num_log) / d;
        return std::exp(num_log - sf.log_s_increment(z - th, z));
    };
    auto r = integrate(integrand, 0.0, x, theta.fn.breakpoints());
    if (r.diverged) return 0.0;
    return std::exp(-r.value);
}

// P(boundary local time at T > x) for the reflected diffusion stopped when
// it falls theta below its running-reflection level:
// exp(-int_0^x exp(-beta(z)) dz / int_z^{z+theta(z)} exp(-beta(u)) du).
inline double reflected_sde_LT_survival(const ScaleFunction& sf,
                                        const BarrierFunction& theta, double x) {
    if (!(x >= 0.0)) throw domain_error("reflected_sde_LT_survival: x must be >= 0");
    if (x == 0.0) return 1.0;
    theta.check_positive(0.0, x, "reflected-SDE drawdown threshold");
    if (!(theta(0.0) > 0.0))
        throw nonpositive_denominator("reflected_sde_LT_survival: theta(0) must be > 0");
    auto integrand = [&](double z) {
        const double th = theta(z);
        if (!(th > 0.0))
            throw nonpositive_denominator("reflected_sde_LT_survival: theta(z) <= 0 at z=" +
                                          std::to_string(z));
        const double num_log = -sf.beta(z);
        const double d = sf.s(z + th) - sf.s(z);
        if (std::isfinite(d) && d > 0.0 && std::isfinite(num_log))
            return std::exp(num_log) / d;
        return std::exp(num_log - sf.log_s_increment(z, z + th));
    };
    auto r = integrate(integrand, 0.0, x, theta.fn.breakpoints());
    if (r.diverged) return 0.0;
    return std::exp(-r.value);
}

// c_{p,q} = B(1/q, 1/p - 1/q)/q, q > p > 0.
inline double spq_constant(double p, double q) {
    if (!(p > 0.0) || !(q > p))
        throw domain_error("spq_constant: requires q > p > 0");
    const double a = 1.0 / q, b = 1.0 / p - 1.0 / q;
    return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b)) / q;
}

// P(sup_t(X_t^p - A_t^q) > a) = 1 - exp(-int_0^inf dx/(a + x^q)^{1/p}).
inline double law_spq_survival(double p, double q, double a) {
    if (!(p > 0.0) || !(q > p))
        throw domain_error("law_spq_survival: requires q > p > 0");
    if (!(a >= 0.0)) throw domain_error("law_spq_survival: requires a >= 0");
    if (a == 0.0) return 1.0;  // closed form c_{p,q} a^{(p-q)/(pq)} -> +inf
    auto r = integrate_to_inf(
        [p, q, a](double x) { return std::pow(a + std::pow(x, q), -1.0 / p); }, 0.0,
        {std::pow(a, 1.0 / q)});
    if (r.diverged) return 1.0;
    return -std::expm1(-r.value);
}

// P(sup_t(X_t - A-composed phi) > a) = 1 - exp(-int_0^inf dx/(a + phi(x))).
inline double law_sphi_survival(const BarrierFunction& phi, double a) {
    if (!(a >= 0.0)) throw domain_error("law_sphi_survival: requires a >= 0");
    auto r = integrate_to_inf([&phi, a](double x) { return 1.0 / (a + phi(x)); }, 0.0,
                              phi.fn.breakpoints());
    if (r.diverged) return 1.0;
    return -std::expm1(-r.value);
}

// P(S_inf > a) = min(x0/a, 1) for a positive martingale started at x0.
inline double doob_maximal_survival(double x0, double a) {
    if (!(x0 > 0.0)) throw domain_error("doob_maximal_survival: requires x0 > 0");
    if (!(a > 0.0)) throw domain_error("doob_maximal_survival: requires a > 0");
    return std::min(x0 / a, 1.0);
}

} // namespace sigma
