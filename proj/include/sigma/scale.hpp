#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "sigma/errors.hpp"
#include "sigma/func.hpp"
#include "sigma/quadrature.hpp"

namespace sigma {

// ---------------------------------------------------------------------------
// Scale function of a one-dimensional diffusion dY = b(Y)dt + sigma(Y)dW:
//
//   beta(x) = 2 int_0^x b(y)/sigma(y)^2 dy      (natural-scale exponent)
//   s(x)    = int_0^x exp(-beta(y)) dy          (strictly increasing, s(0)=0)
//
// Both are defined on all of R (the diffusion is two-sided), cached as signed
// cumulatives on [-radius, radius] at construction and extended on demand by
// integrating from the nearest cache boundary — queries never mutate state,
// so instances are safe for concurrent readers.
// ---------------------------------------------------------------------------

class ScaleFunction {
  public:
    ScaleFunction(ScalarFn drift, ScalarFn diffusion, double build_radius = 8.0)
        : drift_(std::move(drift)), diffusion_(std::move(diffusion)) {
        if (!(build_radius > 0.0))
            throw invalid_spec("scale function: build radius must be positive");
        // positivity of sigma on the cached range
        for (int i = 0; i <= 128; ++i) {
            const double x = -build_radius + 2.0 * build_radius * i / 128.0;
            if (!(diffusion_(x) > 0.0))
                throw invalid_spec("scale function: diffusion must be positive, fails at x=" +
                                   std::to_string(x));
        }
        beta_cum_ = build_signed([this](double y) { return beta_integrand(y); },
                                 build_radius, merged_kinks());
        s_cum_ = build_signed([this](double y) { return s_integrand_cached(y); },
                              build_radius, merged_kinks());
    }

    const ScalarFn& drift() const { return drift_; }
    const ScalarFn& diffusion() const { return diffusion_; }

    double beta(double x) const {
        return eval_signed(beta_cum_, [this](double y) { return beta_integrand(y); }, x);
    }

    double s(double x) const {
        return eval_signed(s_cum_, [this](double y) { return s_integrand_cached(y); }, x);
    }

    double s_prime(double x) const { return std::exp(-beta(x)); }

    // ln int_lo^hi exp(-beta(u)) du, stable when the raw values overflow
    double log_s_increment(double lo, double hi) const {
        if (!(lo < hi))
            throw invalid_spec("log_s_increment: requires lo < hi");
        double m = -std::numeric_limits<double>::infinity();
        for (int i = 0; i <= 8; ++i) {
            const double u = lo + (hi - lo) * i / 8.0;
            m = std::max(m, -beta(u));
        }
        auto g = [this, m](double u) { return std::exp(-beta(u) - m); };
        auto r = integrate(g, lo, hi, {}, unbounded());
        return m + std::log(r.value);
    }

    // s(hi) - s(lo) through the cache, with a log-space fallback once the
    // cached values overflow double range
    double s_increment(double lo, double hi) const {
        const double shi = s(hi), slo = s(lo);
        const double d = shi - slo;
        if (std::isfinite(d) && d > 0.0) return d;
        return std::exp(log_s_increment(lo, hi));
    }

    double s_inverse(double y) const {
        // bracket the preimage, doubling outward from the cached range
        double lo = s_cum_.knots.front(), hi = s_cum_.knots.back();
        double lo_scale = std::max(1.0, -lo), hi_scale = std::max(1.0, hi);
        int guard = 0;
        while (s(hi) < y) {
            hi += hi_scale;
            hi_scale *= 2.0;
            if (++guard > 64)
                throw bisection_failure("s_inverse: target above reachable range");
        }
        guard = 0;
        while (s(lo) > y) {
            lo -= lo_scale;
            lo_scale *= 2.0;
            if (++guard > 64)
                throw bisection_failure("s_inverse: target below reachable range");
        }
        auto f = [this](double x) { return s(x); };
        return bisect_monotone(f, lo, hi, y, 1e-12);
    }

  private:
    struct SignedCumulative {
        std::vector<double> knots;  // increasing; contains 0
        std::vector<double> cum;    // cum at the knot equal to 0 is 0
        std::size_t zero_index = 0;
    };

    static constexpr int kPanelsPerSide = 128;

    // scale integrals are legitimately enormous (int_0^x e^{y^2} dy for a
    // mean-reverting diffusion); the default divergence threshold, tuned for
    // survival exponents, must not flag them
    static const QuadOptions& unbounded() {
        static const QuadOptions o = [] {
            QuadOptions q;
            q.divergence_threshold = std::numeric_limits<double>::infinity();
            return q;
        }();
        return o;
    }

    ScalarFn drift_;
    ScalarFn diffusion_;
    SignedCumulative beta_cum_;
    SignedCumulative s_cum_;

    double beta_integrand(double y) const {
        const double sig = diffusion_(y);
        return 2.0 * drift_(y) / (sig * sig);
    }

    // exp(-beta(y)) with beta read from the cache built just before
    double s_integrand_cached(double y) const {
        return std::exp(-eval_signed(beta_cum_, [this](double u) { return beta_integrand(u); }, y));
    }

    std::vector<double> merged_kinks() const {
        std::vector<double> ks = drift_.breakpoints();
        for (double k : diffusion_.breakpoints()) ks.push_back(k);
        // mirror kinks into the negative half (families are defined by the
        // same formula on both sides)
        const std::size_t n = ks.size();
        for (std::size_t i = 0; i < n; ++i) ks.push_back(-ks[i]);
        return ks;
    }

    template <class F>
    static SignedCumulative build_signed(F&& f, double radius,
                                         const std::vector<double>& kinks) {
        SignedCumulative c;
        std::vector<double> knots;
        for (int i = -kPanelsPerSide; i <= kPanelsPerSide; ++i)
            knots.push_back(radius * static_cast<double>(i) / kPanelsPerSide);
        for (double k : kinks)
            if (k > -radius && k < radius) knots.push_back(k);
        knots.push_back(0.0);
        std::sort(knots.begin(), knots.end());
        knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
        c.knots = knots;
        c.cum.assign(knots.size(), 0.0);
        c.zero_index = static_cast<std::size_t>(
            std::lower_bound(knots.begin(), knots.end(), 0.0) - knots.begin());
        for (std::size_t i = c.zero_index + 1; i < knots.size(); ++i)
            c.cum[i] = c.cum[i - 1] + integrate(f, knots[i - 1], knots[i], {}, unbounded()).value;
        for (std::size_t i = c.zero_index; i-- > 0;)
            c.cum[i] = c.cum[i + 1] - integrate(f, knots[i], knots[i + 1], {}, unbounded()).value;
        return c;
    }

    // signed cumulative int_0^x f, cached prefix plus adaptive remainder
    template <class F>
    static double eval_signed(const SignedCumulative& c, F&& f, double x) {
        const auto& ks = c.knots;
        if (x >= ks.back())
            return c.cum.back() +
                   (x > ks.back() ? integrate(f, ks.back(), x, {}, unbounded()).value : 0.0);
        if (x <= ks.front())
            return c.cum.front() -
                   (x < ks.front() ? integrate(f, x, ks.front(), {}, unbounded()).value : 0.0);
        auto it = std::upper_bound(ks.begin(), ks.end(), x);
        const std::size_t j = static_cast<std::size_t>(it - ks.begin()) - 1;
        double partial = 0.0;
        if (x > ks[j]) partial = integrate(f, ks[j], x, {}, unbounded()).value;
        return c.cum[j] + partial;
    }
};

} // namespace sigma
