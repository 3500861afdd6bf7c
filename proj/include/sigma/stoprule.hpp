#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "sigma/errors.hpp"
#include "sigma/func.hpp"
#include "sigma/measure.hpp"
#include "sigma/pathsim.hpp"

namespace sigma {

// ---------------------------------------------------------------------------
// First-crossing rules over (X, A) paths. Barrier-style rules fire only where
// the barrier value is strictly positive: right-continuous inverse barriers
// vanish at A = 0 whenever the target law's support reaches 0, and without the
// guard the literal predicate X >= barrier(A) fires degenerately at t = 0.
// ---------------------------------------------------------------------------

enum class RuleKind {
    reciprocal_barrier,  // fire when phi(A) * X >= 1
    function_barrier,    // fire when X >= psi(A) > 0
    drawdown,            // fire when X >= theta(A) (X = Ymax - Y, A = Ymax)
    hitting_level,       // fire when X >= a
    inverse_A,           // fire when A > u
};

struct StoppingRule {
    RuleKind kind = RuleKind::hitting_level;
    ScalarFn fn = ScalarFn::constant(1.0);  // phi / psi / theta
    double level = 0.0;                     // a / u

    static StoppingRule reciprocal_barrier(ScalarFn phi) {
        return {RuleKind::reciprocal_barrier, std::move(phi), 0.0};
    }
    static StoppingRule function_barrier(ScalarFn psi) {
        return {RuleKind::function_barrier, std::move(psi), 0.0};
    }
    static StoppingRule drawdown(ScalarFn theta) {
        return {RuleKind::drawdown, std::move(theta), 0.0};
    }
    static StoppingRule hitting_level(double a) {
        if (!(a > 0.0)) throw invalid_spec("hitting_level: level must be > 0");
        return {RuleKind::hitting_level, ScalarFn::constant(1.0), a};
    }
    static StoppingRule inverse_A(double u) {
        if (!(u >= 0.0)) throw invalid_spec("inverse_A: u must be >= 0");
        return {RuleKind::inverse_A, ScalarFn::constant(1.0), u};
    }
};

struct StoppedRecord {
    bool stopped = false;
    std::size_t index = 0;
    double T = 0.0;
    double X_T = 0.0;
    double A_T = 0.0;
    double companion_T = 0.0;
};

// Barrier level in the X coordinate for rules of crossing type, as a function
// of the current A; +infinity when the rule is inactive there (psi <= 0, so no
// finite level exists to cross). Bridge-corrected executors use it both for
// sub-grid crossing detection and for projecting the stopped value onto the
// barrier (the continuous theory puts X_T exactly on the barrier).
inline double crossing_level(const StoppingRule& rule, double A) {
    switch (rule.kind) {
        case RuleKind::function_barrier:
        case RuleKind::drawdown: {
            const double psi = rule.fn(A);
            if (std::isnan(psi) || psi < 0.0)
                throw evaluation_error("barrier: value invalid at A=" +
                                       std::to_string(A));
            return psi > 0.0 ? psi : std::numeric_limits<double>::infinity();
        }
        case RuleKind::hitting_level:
            return rule.level;
        default:
            throw invalid_spec(
                "crossing_level: rule does not define an X-coordinate barrier");
    }
}

// Pointwise predicate shared by path scans and streaming executors.
inline bool rule_fires(const StoppingRule& rule, double X, double A) {
    switch (rule.kind) {
        case RuleKind::reciprocal_barrier: {
            const double phi = rule.fn(A);
            if (std::isnan(phi) || phi < 0.0)
                throw evaluation_error("reciprocal barrier: phi(A) invalid at A=" +
                                       std::to_string(A));
            if (std::isinf(phi)) return false;  // barrier 1/phi is 0: guard
            return phi * X >= 1.0;
        }
        case RuleKind::function_barrier:
        case RuleKind::drawdown: {
            const double psi = rule.fn(A);
            if (std::isnan(psi) || psi < 0.0)
                throw evaluation_error("barrier: value invalid at A=" +
                                       std::to_string(A));
            return psi > 0.0 && X >= psi;
        }
        case RuleKind::hitting_level:
            return X >= rule.level;
        case RuleKind::inverse_A:
            return A > rule.level;
    }
    return false;
}

inline StoppedRecord record_at(const ClassSigmaPath& path, std::size_t k) {
    StoppedRecord r;
    r.stopped = true;
    r.index = k;
    r.T = path.t[k];
    r.X_T = path.X[k];
    r.A_T = path.A[k];
    r.companion_T = path.companion.empty() ? 0.0 : path.companion[k];
    return r;
}

inline StoppedRecord first_crossing(const ClassSigmaPath& path,
                                    const StoppingRule& rule) {
    if (path.t.empty()) throw invalid_spec("first_crossing: empty path");
    for (std::size_t k = 0; k < path.t.size(); ++k)
        if (rule_fires(rule, path.X[k], path.A[k])) return record_at(path, k);
    return {};
}

// Composite scan: fires at the first index where any rule holds; returns the
// record plus the position (in `rules`) of the rule that fired first (lowest
// position wins ties).
inline std::pair<StoppedRecord, std::size_t> first_crossing_any(
    const ClassSigmaPath& path, const std::vector<StoppingRule>& rules) {
    if (path.t.empty()) throw invalid_spec("first_crossing_any: empty path");
    if (rules.empty()) throw invalid_spec("first_crossing_any: no rules");
    for (std::size_t k = 0; k < path.t.size(); ++k)
        for (std::size_t j = 0; j < rules.size(); ++j)
            if (rule_fires(rules[j], path.X[k], path.A[k]))
                return {record_at(path, k), j};
    return {StoppedRecord{}, rules.size()};
}

namespace detail {

// Eagerly built interpolation table over a measure's inverse transform.
// Direct inversion (bracketing + bisection over cached cumulatives) costs
// microseconds per call, far too slow for per-step barrier evaluation at
// simulation scale. Primal barriers interpolate log x against log z (exact
// for power-law transforms); second-family barriers interpolate x against z
// directly. Cells are subdivided until the interpolant matches the direct
// inversion at midpoints within 1e-9 relative; any cell still failing, and
// any query outside the tabulated range, falls back to the direct inversion,
// so the table never strays from the exact value by more than the tolerance.
class BarrierTable {
  public:
    BarrierTable(MeasureOnHalfLine m, bool second_family)
        : m_(std::move(m)), bar_(second_family) {
        build();
    }

    double operator()(double z) const {
        if (!(z > zs_.front()) || !(z <= zs_.back())) return direct(z);
        std::size_t i =
            static_cast<std::size_t>(std::upper_bound(zs_.begin(), zs_.end(), z) -
                                     zs_.begin()) -
            1;
        if (i + 1 >= zs_.size()) --i;  // z == zs_.back() lands in the last cell
        if (direct_cell_[i]) return direct(z);
        if (bar_) {
            const double t = (z - zs_[i]) / (zs_[i + 1] - zs_[i]);
            return xs_[i] + t * (xs_[i + 1] - xs_[i]);
        }
        const double t = (std::log(z) - lz_[i]) / (lz_[i + 1] - lz_[i]);
        return std::exp(lx_[i] + t * (lx_[i + 1] - lx_[i]));
    }

  private:
    double direct(double z) const {
        return bar_ ? m_.dual_hl_phi_bar(z) : m_.dual_hl_phi(z);
    }

    double midpoint(double a, double b) const {
        return bar_ ? 0.5 * (a + b) : std::sqrt(a) * std::sqrt(b);
    }

    double interp_in(std::size_t i, double z) const {
        if (bar_) {
            const double t = (z - zs_[i]) / (zs_[i + 1] - zs_[i]);
            return xs_[i] + t * (xs_[i + 1] - xs_[i]);
        }
        const double t = (std::log(z) - lz_[i]) / (lz_[i + 1] - lz_[i]);
        return std::exp(lx_[i] + t * (lx_[i + 1] - lx_[i]));
    }

    void build() {
        constexpr double kTol = 1e-9;
        const TransformCurve curve = bar_ ? m_.psi_bar_curve() : m_.psi_curve();
        std::vector<double> zs, xs;
        auto push_node = [&zs, &xs, this](double z, double x) {
            if (!std::isfinite(z) || !std::isfinite(x) || !(z > 0.0)) return;
            if (!bar_ && !(x > 0.0)) return;  // log-log needs positive x
            if (!zs.empty() && !(z > zs.back() * (1.0 + 1e-12))) return;
            zs.push_back(z);
            xs.push_back(x);
        };
        if (bar_) {
            // x increasing along the curve means z = psi_bar(x) decreasing
            for (std::size_t i = curve.x_grid.size(); i-- > 0;)
                push_node(curve.values[i], curve.x_grid[i]);
        } else {
            for (std::size_t i = 0; i < curve.x_grid.size(); ++i)
                push_node(curve.values[i], curve.x_grid[i]);
        }
        if (zs.size() < 2)
            throw invalid_spec("embed rule: transform curve too short to tabulate");
        // primal barriers: pad the low-z end so early-path queries (small A)
        // stay on the table
        if (!bar_) {
            std::vector<double> pre_z, pre_x;
            double z = zs.front();
            while (z > 1e-13) {
                z /= 32.0;
                pre_z.push_back(z);
                pre_x.push_back(direct(z));
            }
            std::reverse(pre_z.begin(), pre_z.end());
            std::reverse(pre_x.begin(), pre_x.end());
            for (std::size_t i = 0; i < zs.size(); ++i) {
                pre_z.push_back(zs[i]);
                pre_x.push_back(xs[i]);
            }
            zs.swap(pre_z);
            xs.swap(pre_x);
        }

        zs_ = std::move(zs);
        xs_ = std::move(xs);
        refresh_logs();
        for (int round = 0; round < 16 && zs_.size() < 40000; ++round) {
            std::vector<double> nz, nx;
            nz.reserve(zs_.size() * 2);
            nx.reserve(zs_.size() * 2);
            bool any = false;
            for (std::size_t i = 0; i + 1 < zs_.size(); ++i) {
                nz.push_back(zs_[i]);
                nx.push_back(xs_[i]);
                const double zm = midpoint(zs_[i], zs_[i + 1]);
                if (!(zm > zs_[i]) || !(zm < zs_[i + 1])) continue;  // exhausted
                const double xm = direct(zm);
                if (std::fabs(interp_in(i, zm) - xm) > kTol * (1.0 + std::fabs(xm))) {
                    nz.push_back(zm);
                    nx.push_back(xm);
                    any = true;
                }
            }
            nz.push_back(zs_.back());
            nx.push_back(xs_.back());
            zs_.swap(nz);
            xs_.swap(nx);
            refresh_logs();
            if (!any) break;
        }
        // final sweep: cells that still miss the tolerance evaluate directly
        direct_cell_.assign(zs_.size() - 1, 0);
        for (std::size_t i = 0; i + 1 < zs_.size(); ++i) {
            const double zm = midpoint(zs_[i], zs_[i + 1]);
            if (!(zm > zs_[i]) || !(zm < zs_[i + 1])) continue;
            const double xm = direct(zm);
            if (std::fabs(interp_in(i, zm) - xm) > kTol * (1.0 + std::fabs(xm)))
                direct_cell_[i] = 1;
        }
    }

    void refresh_logs() {
        if (bar_) return;
        lz_.resize(zs_.size());
        lx_.resize(xs_.size());
        for (std::size_t i = 0; i < zs_.size(); ++i) {
            lz_[i] = std::log(zs_[i]);
            lx_[i] = std::log(xs_[i]);
        }
    }

    MeasureOnHalfLine m_;
    bool bar_;
    std::vector<double> zs_, xs_, lz_, lx_;
    std::vector<unsigned char> direct_cell_;
};

} // namespace detail

// Embedding rule of the primal transform: stop when X reaches the inverse
// transform of A. Draws X_T with the target law on zero-started paths.
inline StoppingRule embed_rule(const MeasureOnHalfLine& m) {
    return StoppingRule::function_barrier(
        ScalarFn::callable(detail::BarrierTable(m, /*second_family=*/false)));
}

// Second-family variant; requires the tail transform to be convergent.
inline StoppingRule embed_rule_bar(const MeasureOnHalfLine& m) {
    if (m.psi_bar_divergent())
        throw divergent_transform(
            "embed_rule_bar: the tail transform diverges at the support's lower "
            "bound; no finite barrier exists");
    return StoppingRule::function_barrier(
        ScalarFn::callable(detail::BarrierTable(m, /*second_family=*/true)));
}

// Discretization diagnostic: how far past its barrier the stopped value
// landed. Zero for an exact-grid crossing; O(sqrt(dt)) under Euler stepping.
inline double check_stopped_identity(const StoppedRecord& rec,
                                     const StoppingRule& rule) {
    if (!rec.stopped)
        throw domain_error("check_stopped_identity: record did not stop");
    switch (rule.kind) {
        case RuleKind::reciprocal_barrier:
            return std::fabs(rule.fn(rec.A_T) * rec.X_T - 1.0);
        case RuleKind::function_barrier:
        case RuleKind::drawdown:
            return std::fabs(rec.X_T - rule.fn(rec.A_T));
        case RuleKind::hitting_level:
            return std::fabs(rec.X_T - rule.level);
        case RuleKind::inverse_A:
            return std::fabs(rec.A_T - rule.level);
    }
    return 0.0;
}

} // namespace sigma
