#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "sigma/errors.hpp"

namespace sigma {

// ---------------------------------------------------------------------------
// Scalar functions from a fixed registry: constant, power (c*x^p),
// exponential (c*exp(a*x)), affine (a + b*x), tabulated (piecewise linear).
// Every kind supports an optional lower clip `floor` (value = max(base, floor))
// so barriers like max(2z, 1e-9) stay expressible without an expression
// language. Kink locations are exposed for the quadrature splitter.
// ---------------------------------------------------------------------------

class ScalarFn {
  public:
    enum class Kind { constant, power, exponential, affine, tabulated, callable };

    static ScalarFn constant(double c) {
        ScalarFn f;
        f.kind_ = Kind::constant;
        f.c_ = c;
        return f;
    }
    // arbitrary function object; for programmatic composition (e.g. a barrier
    // that evaluates a measure transform) — not reachable from config files
    static ScalarFn callable(std::function<double(double)> fn,
                             std::vector<double> kinks = {}) {
        if (!fn) throw invalid_spec("callable function must not be empty");
        ScalarFn f;
        f.kind_ = Kind::callable;
        f.call_ = std::move(fn);
        f.xs_ = std::move(kinks);
        return f;
    }
    static ScalarFn power(double c, double p, double floor = no_floor()) {
        ScalarFn f;
        f.kind_ = Kind::power;
        f.c_ = c;
        f.p_ = p;
        f.floor_ = floor;
        return f;
    }
    static ScalarFn exponential(double c, double a, double floor = no_floor()) {
        ScalarFn f;
        f.kind_ = Kind::exponential;
        f.c_ = c;
        f.p_ = a;
        f.floor_ = floor;
        return f;
    }
    static ScalarFn affine(double a, double b, double floor = no_floor()) {
        ScalarFn f;
        f.kind_ = Kind::affine;
        f.c_ = a;
        f.p_ = b;
        f.floor_ = floor;
        return f;
    }
    static ScalarFn tabulated(std::vector<double> xs, std::vector<double> ys) {
        if (xs.size() != ys.size() || xs.size() < 2)
            throw invalid_spec("tabulated function needs >= 2 aligned samples");
        for (std::size_t i = 1; i < xs.size(); ++i)
            if (!(xs[i] > xs[i - 1]))
                throw invalid_spec("tabulated function: x grid must be strictly increasing");
        ScalarFn f;
        f.kind_ = Kind::tabulated;
        f.xs_ = std::move(xs);
        f.ys_ = std::move(ys);
        return f;
    }

    double operator()(double x) const {
        double v;
        switch (kind_) {
            case Kind::constant: v = c_; break;
            case Kind::power: v = c_ * std::pow(x, p_); break;
            case Kind::exponential: v = c_ * std::exp(p_ * x); break;
            case Kind::affine: v = c_ + p_ * x; break;
            case Kind::tabulated: v = interp(x); break;
            case Kind::callable: v = call_(x); break;
            default: v = 0.0; break;
        }
        if (floor_ == floor_ && v < floor_) v = floor_; // NaN floor means "none"
        return v;
    }

    Kind kind() const { return kind_; }
    double param_c() const { return c_; }
    double param_p() const { return p_; }
    double floor_value() const { return floor_; }
    bool has_floor() const { return floor_ == floor_; }
    const std::vector<double>& knots_x() const { return xs_; }
    const std::vector<double>& knots_y() const { return ys_; }

    // interior kinks (tabulated knots / declared callable kinks; the floor
    // crossing where solvable)
    std::vector<double> breakpoints() const {
        std::vector<double> out;
        if (kind_ == Kind::tabulated || kind_ == Kind::callable) out = xs_;
        if (has_floor()) {
            double cross = std::numeric_limits<double>::quiet_NaN();
            switch (kind_) {
                case Kind::power:
                    if (c_ > 0 && floor_ > 0 && p_ != 0) cross = std::pow(floor_ / c_, 1.0 / p_);
                    break;
                case Kind::affine:
                    if (p_ != 0) cross = (floor_ - c_) / p_;
                    break;
                case Kind::exponential:
                    if (c_ > 0 && floor_ > 0 && p_ != 0) cross = std::log(floor_ / c_) / p_;
                    break;
                default: break;
            }
            if (cross == cross && std::isfinite(cross) && cross > 0) out.push_back(cross);
        }
        return out;
    }

    // Sentinel for "no floor" in the factory default arguments.
    static double no_floor() { return std::numeric_limits<double>::quiet_NaN(); }

  private:
    double interp(double x) const {
        if (x <= xs_.front()) return ys_.front();
        if (x >= xs_.back()) return ys_.back();
        auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - xs_.begin());
        const double t = (x - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
        return ys_[i - 1] + t * (ys_[i] - ys_[i - 1]);
    }

    Kind kind_ = Kind::constant;
    double c_ = 0.0;
    double p_ = 0.0;
    double floor_ = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> xs_, ys_;
    std::function<double(double)> call_;
};

// ---------------------------------------------------------------------------
// Barrier functions: positive scalar functions with an integrability hint.
// ---------------------------------------------------------------------------

enum class IntegrabilityHint { reciprocal_integrable, reciprocal_divergent, unknown };

struct BarrierFunction {
    ScalarFn fn;
    IntegrabilityHint hint = IntegrabilityHint::unknown;

    double operator()(double x) const { return fn(x); }

    // positivity probe on a log-spaced grid inside (lo, hi); strict > 0
    void check_positive(double lo, double hi, const char* role) const {
        const double plo = std::max(lo, 1e-9), phi = std::max(hi, 2e-9);
        const int n = 64;
        for (int i = 0; i <= n; ++i) {
            const double x = plo * std::pow(phi / plo, static_cast<double>(i) / n);
            if (!(fn(x) > 0.0))
                throw invalid_spec(std::string(role) +
                                   ": barrier must be positive on the probe grid; fails at x=" +
                                   std::to_string(x));
        }
    }
};

// ---------------------------------------------------------------------------
// Smoothed indicator bump on [0, K]: 1 on [0, K-w], cubic smoothstep down to 0
// at K. Its antiderivative F (with F(0)=0) is analytic, which the martingale
// identity check needs.
// ---------------------------------------------------------------------------

struct BumpFn {
    double K = 1.0;
    double w = 0.25;

    double f(double x) const {
        if (x < 0.0 || x >= K) return 0.0;
        if (x <= K - w) return 1.0;
        const double u = (x - (K - w)) / w;
        return 1.0 - (3.0 * u * u - 2.0 * u * u * u);
    }
    double F(double x) const {
        if (x <= 0.0) return 0.0;
        if (x <= K - w) return x;
        const double ramp_full = 0.5 * w; // integral of the smoothstep over [K-w, K]
        if (x >= K) return (K - w) + ramp_full;
        const double u = (x - (K - w)) / w;
        const double ramp = u - u * u * u + 0.5 * u * u * u * u;
        return (K - w) + w * ramp;
    }
};

} // namespace sigma
