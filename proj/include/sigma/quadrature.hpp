#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "sigma/errors.hpp"

namespace sigma {

// ---------------------------------------------------------------------------
// Adaptive Gauss–Kronrod (G7,K15) quadrature.
//
//  * error-priority interval refinement, relative tolerance 1e-9 /
//    absolute 1e-12 by default, at most 1e6 subdivisions;
//  * piecewise integrands split at caller-supplied breakpoints;
//  * improper integrals over [a, inf) via the substitution x = a + (1-u)/u,
//    which sends the tail to u = 0 where dyadic refinement can descend into
//    subnormals (~1000 levels) instead of stalling at the ~52 representable
//    halvings next to u = 1;
//  * divergence (for nonnegative integrands) declared once the partial
//    integral exceeds 700 — the point at which exp(-I) underflows anyway —
//    or when a panel pinched to floating-point resolution still carries
//    non-vanishing mass (a point singularity that refinement cannot shrink).
// ---------------------------------------------------------------------------

struct QuadOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    std::size_t max_intervals = 1'000'000;
    double divergence_threshold = 700.0;
};

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    bool diverged = false;
    std::size_t evaluations = 0;
};

namespace detail {

// QUADPACK dqk15 nodes/weights on [-1,1]; odd indices are the embedded G7.
inline constexpr double kGk15Nodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double kGk15Weights[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kG7Weights[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a, b;
    double value;
    double error;
    bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
Panel gk15(F&& f, double a, double b) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    const double fc = f(mid);
    double kronrod = kGk15Weights[7] * fc;
    double gauss = kG7Weights[3] * fc;
    for (int i = 0; i < 7; ++i) {
        const double dx = half * kGk15Nodes[i];
        const double fsum = f(mid - dx) + f(mid + dx);
        kronrod += kGk15Weights[i] * fsum;
        if (i & 1) gauss += kG7Weights[i / 2] * fsum;
    }
    Panel p;
    p.a = a;
    p.b = b;
    p.value = kronrod * half;
    p.error = std::fabs((kronrod - gauss) * half);
    if (!std::isfinite(p.value)) {
        throw quadrature_failure("gk15: integrand produced a non-finite value on [" +
                                 std::to_string(a) + ", " + std::to_string(b) + "]");
    }
    return p;
}

} // namespace detail

// Integrate f over the finite interval [a, b]; `breakpoints` (may be empty)
// lists interior kink locations at which the initial panels are split.
template <class F>
QuadResult integrate(F&& f, double a, double b,
                     const std::vector<double>& breakpoints = {},
                     const QuadOptions& opt = {}) {
    QuadResult out;
    if (!(a < b)) return out;

    std::vector<double> cuts;
    cuts.push_back(a);
    for (double c : breakpoints)
        if (c > a && c < b) cuts.push_back(c);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());

    std::priority_queue<detail::Panel> heap;
    double total = 0.0, total_err = 0.0;
    bool saw_negative = false;
    std::size_t n_panels = 0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (!(cuts[i] < cuts[i + 1])) continue;
        auto p = detail::gk15(f, cuts[i], cuts[i + 1]);
        out.evaluations += 15;
        total += p.value;
        total_err += p.error;
        if (p.value < -opt.abs_tol) saw_negative = true;
        heap.push(p);
        ++n_panels;
    }

    auto tolerance = [&](double current) {
        return std::max(opt.abs_tol, opt.rel_tol * std::fabs(current));
    };

    while (total_err > tolerance(total) && n_panels < opt.max_intervals) {
        if (total > opt.divergence_threshold) {
            out.value = std::numeric_limits<double>::infinity();
            out.diverged = true;
            return out;
        }
        detail::Panel worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // Interval pinched to floating-point resolution.  If the
            // integrand is nonnegative and this sliver still holds
            // non-vanishing mass, it is a point singularity refinement
            // cannot shrink: a non-integrable spike.
            if (!saw_negative && worst.value > tolerance(total)) {
                out.value = std::numeric_limits<double>::infinity();
                out.diverged = true;
                return out;
            }
            total_err -= worst.error;
            continue;
        }
        auto left = detail::gk15(f, worst.a, mid);
        auto right = detail::gk15(f, mid, worst.b);
        out.evaluations += 30;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        if (left.value < -opt.abs_tol || right.value < -opt.abs_tol)
            saw_negative = true;
        heap.push(left);
        heap.push(right);
        ++n_panels;
    }

    if (total > opt.divergence_threshold) {
        out.value = std::numeric_limits<double>::infinity();
        out.diverged = true;
        return out;
    }
    if (total_err > tolerance(total)) {
        throw quadrature_failure("integrate: tolerance not reached after " +
                                 std::to_string(n_panels) + " panels (err=" +
                                 std::to_string(total_err) + ")");
    }
    out.value = total;
    out.error = total_err;
    return out;
}

// Integrate f over [a, inf) via x = a + (1-u)/u, u in (0, 1].  The tail
// x -> inf corresponds to u -> 0+, where panel halving can continue deep
// into subnormal territory; u = 0 itself is only approached, never an
// evaluation node, until a panel collapses — at which point the divergence
// heuristics in `integrate` take over.  Integrands must decay at +inf (or
// the result is reported as divergent for nonnegative integrands).
template <class F>
QuadResult integrate_to_inf(F&& f, double a,
                            const std::vector<double>& breakpoints = {},
                            const QuadOptions& opt = {}) {
    // The head [a, a+1] stays in native coordinates: an integrable endpoint
    // singularity at a then refines against the fine float spacing there
    // instead of the coarse ulps near its image u = 1. Only the tail is
    // mapped, via x = a + (1-u)/u, onto u in (0, 1/2].
    std::vector<double> head_cuts, tail_cuts;
    for (double c : breakpoints) {
        if (!std::isfinite(c)) continue;
        if (c > a && c < a + 1.0)
            head_cuts.push_back(c);
        else if (c > a + 1.0)
            tail_cuts.push_back(1.0 / (1.0 + (c - a)));
    }
    QuadResult head = integrate(f, a, a + 1.0, head_cuts, opt);
    if (head.diverged) return head;
    auto g = [&f, a](double u) {
        const double x = a + (1.0 - u) / u;
        // divide twice: u*u underflows to zero near u ~ 1e-162 while the
        // quotient itself is still representable
        return (f(x) / u) / u;
    };
    QuadResult tail = integrate(g, 0.0, 0.5, tail_cuts, opt);
    QuadResult out;
    out.value = head.value + tail.value;
    out.error = head.error + tail.error;
    out.evaluations = head.evaluations + tail.evaluations;
    out.diverged = tail.diverged;
    if (out.diverged) out.value = std::numeric_limits<double>::infinity();
    return out;
}

// ---------------------------------------------------------------------------
// Monotone bisection: solve f(x) = target on [lo, hi] where f is monotone.
// ---------------------------------------------------------------------------

template <class F>
double bisect_monotone(F&& f, double lo, double hi, double target,
                       double xtol = 1e-10) {
    double flo = f(lo), fhi = f(hi);
    const bool increasing = flo <= fhi;
    auto below = [&](double fx) { return increasing ? fx < target : fx > target; };
    if (!below(flo) && flo != target) {
        // target below the range start; clamp to lo (generalized inverse)
        return lo;
    }
    if (below(fhi)) {
        throw bisection_failure("bisect_monotone: target " + std::to_string(target) +
                                " not bracketed on [" + std::to_string(lo) + ", " +
                                std::to_string(hi) + "]");
    }
    while (hi - lo > xtol * (1.0 + std::fabs(lo) + std::fabs(hi))) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (below(f(mid)))
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace sigma
