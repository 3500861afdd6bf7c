#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sigma/errors.hpp"
#include "sigma/quadrature.hpp"

namespace sigma {

// ---------------------------------------------------------------------------
// Non-atomic probability measures on [0, inf) and their dual Hardy-Littlewood
// transforms.
//
// For a measure m with survival G(z) = m([z, inf)) and cdf F = 1 - G:
//
//   psi(x)     = int_{[0,x]} z / G(z) dm(z)        (increasing, 0 below a_m,
//                                                   +inf at and beyond b_m)
//   phi(z)     = inf{x >= 0 : psi(x) > z}          (right-continuous inverse)
//   psi_bar(x) = int_{(x,inf)} z / F(z) dm(z)      (nonincreasing, -> 0 at b_m)
//   phi_bar(x) = generalized decreasing inverse of psi_bar, = 0 for x >= b_m
//
// Both integrals are computed after substituting the exponential coordinate
// of the relevant distribution function:
//
//   u = -ln G(z)  turns psi(x)     into int_0^{U(x)} Qg(u) du,
//   v = -ln F(z)  turns psi_bar(x) into int_0^{V(x)} Qf(v) dv,
//
// where Qg(u) = G^{-1}(e^{-u}) and Qf(v) = F^{-1}(e^{-v}) are quantiles.
// The substitution removes the 1/G (resp. 1/F) blow-up entirely: the new
// integrands are bounded monotone curves.  Cumulative caches are built
// eagerly out to survival (resp. cdf) level 1e-12; queries beyond the cache
// integrate the remaining smooth stretch on demand, so the truncation level
// only decides what is precomputed, not what is reachable.
// ---------------------------------------------------------------------------

enum class MeasureKind { exponential, uniform, tabulated };

struct TransformCurve {
    std::vector<double> x_grid;   // increasing
    std::vector<double> values;   // nondecreasing for psi, nonincreasing for psi_bar
    double divergence_point = std::numeric_limits<double>::infinity();
};

class MeasureOnHalfLine {
public:
    static MeasureOnHalfLine exponential(double rate) {
        if (!(rate > 0.0) || !std::isfinite(rate))
            throw invalid_spec("exponential measure requires rate > 0");
        MeasureOnHalfLine m;
        m.kind_ = MeasureKind::exponential;
        m.rate_ = rate;
        m.a_lower_ = 0.0;
        m.b_upper_ = std::numeric_limits<double>::infinity();
        m.finish_construction();
        return m;
    }

    static MeasureOnHalfLine uniform(double b) {
        if (!(b > 0.0) || !std::isfinite(b))
            throw invalid_spec("uniform measure requires upper endpoint b > 0");
        MeasureOnHalfLine m;
        m.kind_ = MeasureKind::uniform;
        m.b_param_ = b;
        m.a_lower_ = 0.0;
        m.b_upper_ = b;
        m.finish_construction();
        return m;
    }

    // Survival samples: strictly increasing x, strictly decreasing survival.
    // The first sample must carry survival 1 and the last survival 0 (within
    // 1e-9); anything else would place an atom at a boundary sample point.
    static MeasureOnHalfLine tabulated(std::vector<double> xs,
                                       std::vector<double> survival) {
        constexpr double kAtomGuard = 1e-9;
        if (xs.size() != survival.size() || xs.size() < 2)
            throw invalid_spec("tabulated measure needs >= 2 (x, survival) samples");
        for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
            if (!(xs[i] < xs[i + 1]))
                throw invalid_spec("tabulated measure: x samples must be strictly increasing");
            if (!(survival[i] > survival[i + 1]))
                throw invalid_spec("tabulated measure: survival samples must be strictly decreasing");
        }
        if (xs.front() < 0.0)
            throw invalid_spec("tabulated measure: support must lie in [0, inf)");
        if (std::fabs(survival.front() - 1.0) > kAtomGuard)
            throw invalid_spec("tabulated measure: first survival sample must be 1 "
                               "(a smaller value is an atom at the first sample)");
        if (std::fabs(survival.back()) > kAtomGuard)
            throw invalid_spec("tabulated measure: last survival sample must be 0 "
                               "(a larger value is an atom at the last sample)");
        survival.front() = 1.0;
        survival.back() = 0.0;

        MeasureOnHalfLine m;
        m.kind_ = MeasureKind::tabulated;
        m.tab_x_ = std::move(xs);
        m.tab_s_ = std::move(survival);
        m.tab_f_.resize(m.tab_s_.size());
        for (std::size_t i = 0; i < m.tab_s_.size(); ++i)
            m.tab_f_[i] = 1.0 - m.tab_s_[i];
        m.a_lower_ = m.tab_x_.front();
        m.b_upper_ = m.tab_x_.back();
        m.finish_construction();
        return m;
    }

    // Two-column CSV with header `x,survival`.
    static MeasureOnHalfLine tabulated_from_csv(const std::string& path) {
        std::ifstream in(path);
        if (!in)
            throw invalid_spec("cannot open measure CSV: " + path);
        std::string line;
        if (!std::getline(in, line))
            throw invalid_spec("empty measure CSV: " + path);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line != "x,survival")
            throw invalid_spec("measure CSV must start with header `x,survival`, got: " + line);
        std::vector<double> xs, ss;
        std::size_t lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            std::istringstream row(line);
            std::string a, b;
            if (!std::getline(row, a, ',') || !std::getline(row, b))
                throw invalid_spec("measure CSV line " + std::to_string(lineno) +
                                   ": expected two comma-separated columns");
            try {
                xs.push_back(std::stod(a));
                ss.push_back(std::stod(b));
            } catch (const std::exception&) {
                throw invalid_spec("measure CSV line " + std::to_string(lineno) +
                                   ": cannot parse number");
            }
        }
        return tabulated(std::move(xs), std::move(ss));
    }

    MeasureKind kind() const { return kind_; }
    double a_lower() const { return a_lower_; }
    double b_upper() const { return b_upper_; }

    // G(x) = m([x, inf)); total and continuous on [0, inf).
    double survival(double x) const {
        switch (kind_) {
            case MeasureKind::exponential:
                return std::exp(-rate_ * x);
            case MeasureKind::uniform:
                return x >= b_param_ ? 0.0 : (x <= 0.0 ? 1.0 : 1.0 - x / b_param_);
            case MeasureKind::tabulated:
            default: {
                if (x <= tab_x_.front()) return 1.0;
                if (x >= tab_x_.back()) return 0.0;
                const std::size_t i = segment_index(x);
                const double t = (x - tab_x_[i]) / (tab_x_[i + 1] - tab_x_[i]);
                return tab_s_[i] + t * (tab_s_[i + 1] - tab_s_[i]);
            }
        }
    }

    double cdf(double x) const {
        switch (kind_) {
            case MeasureKind::exponential:
                return -std::expm1(-rate_ * x);
            case MeasureKind::uniform:
                return x >= b_param_ ? 1.0 : (x <= 0.0 ? 0.0 : x / b_param_);
            case MeasureKind::tabulated:
            default: {
                if (x <= tab_x_.front()) return 0.0;
                if (x >= tab_x_.back()) return 1.0;
                const std::size_t i = segment_index(x);
                const double t = (x - tab_x_[i]) / (tab_x_[i + 1] - tab_x_[i]);
                return tab_f_[i] + t * (tab_f_[i + 1] - tab_f_[i]);
            }
        }
    }

    // Smallest z with G(z) <= p, for p in (0, 1].
    double quantile_survival(double p) const {
        switch (kind_) {
            case MeasureKind::exponential:
                return p >= 1.0 ? 0.0 : -std::log(p) / rate_;
            case MeasureKind::uniform:
                return b_param_ * (1.0 - std::min(p, 1.0));
            case MeasureKind::tabulated:
            default: {
                if (p >= 1.0) return tab_x_.front();
                if (p <= 0.0) return tab_x_.back();
                // first knot with survival <= p
                auto it = std::lower_bound(tab_s_.begin(), tab_s_.end(), p,
                                           [](double s, double q) { return s > q; });
                const std::size_t j = static_cast<std::size_t>(it - tab_s_.begin());
                if (j == 0) return tab_x_.front();
                const std::size_t i = j - 1;
                const double t = (tab_s_[i] - p) / (tab_s_[i] - tab_s_[i + 1]);
                return tab_x_[i] + t * (tab_x_[i + 1] - tab_x_[i]);
            }
        }
    }

    // Smallest z with F(z) >= q, for q in [0, 1).
    double quantile_cdf(double q) const {
        switch (kind_) {
            case MeasureKind::exponential:
                return q <= 0.0 ? 0.0 : -std::log1p(-q) / rate_;
            case MeasureKind::uniform:
                return b_param_ * std::max(q, 0.0);
            case MeasureKind::tabulated:
            default: {
                if (q <= 0.0) return tab_x_.front();
                if (q >= 1.0) return tab_x_.back();
                auto it = std::lower_bound(tab_f_.begin(), tab_f_.end(), q);
                const std::size_t j = static_cast<std::size_t>(it - tab_f_.begin());
                if (j == 0) return tab_x_.front();
                const std::size_t i = j - 1;
                const double t = (q - tab_f_[i]) / (tab_f_[i + 1] - tab_f_[i]);
                return tab_x_[i] + t * (tab_x_[i + 1] - tab_x_[i]);
            }
        }
    }

    // psi(x): 0 below a_m, +inf at and beyond b_m, else the u-space integral.
    double dual_hl_psi(double x) const {
        if (x < a_lower_) return 0.0;
        if (x >= b_upper_) return std::numeric_limits<double>::infinity();
        const double u = minus_log_survival(x);
        if (u <= 0.0) return 0.0;
        return cum_eval(psi_cum_, [this](double uu) { return qg_of_u(uu); }, u);
    }

    // phi(z) = inf{x : psi(x) > z}; solved in the u coordinate, where the
    // cumulative is strictly increasing and x = Qg(u) never reaches b_m.
    double dual_hl_phi(double z) const {
        if (!(z > 0.0)) return a_lower_;
        auto C = [this](double u) {
            return cum_eval(psi_cum_, [this](double uu) { return qg_of_u(uu); }, u);
        };
        double hi = psi_cum_.knots.back();
        double hi_val = psi_cum_.cum.back();
        while (hi_val <= z) {
            hi *= 2.0;
            hi_val = C(hi);
            if (hi > 1e9)
                throw quadrature_failure("dual_hl_phi: inverse argument out of reach");
        }
        const double u_star = bisect_monotone(C, 0.0, hi, z, 1e-12);
        return qg_of_u(u_star);
    }

    // psi_bar(x): the v-space integral; +inf (DivergentTransform) for
    // x <= a_m when a_m > 0, and whenever construction-time detection found
    // the integral divergent.
    double dual_hl_psi_bar(double x) const {
        if (x >= b_upper_) return 0.0;
        if (psi_bar_divergent_ && x <= a_lower_)
            throw divergent_transform(
                "dual_hl_psi_bar: integral diverges at x <= lower support bound " +
                std::to_string(a_lower_));
        const double v = minus_log_cdf(x);
        if (v <= 0.0) return 0.0;
        if (std::isinf(v)) {
            if (psi_bar_divergent_)
                throw divergent_transform("dual_hl_psi_bar: integral diverges at x = " +
                                          std::to_string(x));
            return psi_bar_total_;
        }
        if (v >= psi_bar_cum_.knots.back()) {
            if (psi_bar_divergent_)
                throw divergent_transform("dual_hl_psi_bar: integral diverges at x = " +
                                          std::to_string(x));
            // remaining tail mass beyond the cache is below tolerance
            return psi_bar_total_;
        }
        return cum_eval(psi_bar_cum_, [this](double vv) { return qf_of_v(vv); }, v);
    }

    // phi_bar(x) = inf{z >= 0 : psi_bar(z) <= x}, and 0 for x >= b_m.
    double dual_hl_phi_bar(double x) const {
        if (x >= b_upper_) return 0.0;
        if (!psi_bar_divergent_ && x >= psi_bar_total_) return 0.0;
        if (!(x > 0.0)) {
            // psi_bar(z) <= 0 only in the limit z -> b_m
            return b_upper_;
        }
        auto C = [this](double v) {
            return cum_eval(psi_bar_cum_, [this](double vv) { return qf_of_v(vv); }, v);
        };
        const double v_cap = psi_bar_cum_.knots.back();
        if (psi_bar_divergent_ && x >= psi_bar_cum_.cum.back()) {
            // below quantile resolution; the inverse saturates at the lower
            // support bound (quantile at cdf level 1e-12)
            return qf_of_v(v_cap);
        }
        const double v_star = bisect_monotone(C, 0.0, v_cap, x, 1e-12);
        return qf_of_v(v_star);
    }

    TransformCurve psi_curve() const {
        TransformCurve c;
        c.x_grid.reserve(psi_cum_.knots.size());
        for (double u : psi_cum_.knots) c.x_grid.push_back(qg_of_u(u));
        c.values = psi_cum_.cum;
        c.divergence_point = b_upper_;
        return c;
    }

    TransformCurve psi_bar_curve() const {
        TransformCurve c;
        // v decreasing corresponds to x increasing
        const std::size_t n = psi_bar_cum_.knots.size();
        c.x_grid.reserve(n);
        c.values.reserve(n);
        for (std::size_t i = n; i-- > 0;) {
            c.x_grid.push_back(qf_of_v(psi_bar_cum_.knots[i]));
            c.values.push_back(psi_bar_cum_.cum[i]);
        }
        c.divergence_point = psi_bar_divergent_
                                 ? a_lower_
                                 : -std::numeric_limits<double>::infinity();
        return c;
    }

    bool psi_bar_divergent() const { return psi_bar_divergent_; }

private:
    MeasureOnHalfLine() = default;

    // cumulative of a nonnegative integrand from 0, cached on a knot grid
    struct Cumulative {
        std::vector<double> knots;        // increasing, knots[0] == 0
        std::vector<double> cum;          // cum[0] == 0
        std::vector<double> breakpoints;  // integrand kinks (tabulated only)
    };

    static constexpr double kTruncationLevel = 1e-12;  // survival / cdf floor
    static constexpr int kCachePanels = 256;

    MeasureKind kind_ = MeasureKind::exponential;
    double rate_ = 1.0;     // exponential
    double b_param_ = 1.0;  // uniform
    std::vector<double> tab_x_, tab_s_, tab_f_;
    double a_lower_ = 0.0;
    double b_upper_ = std::numeric_limits<double>::infinity();

    Cumulative psi_cum_;
    Cumulative psi_bar_cum_;
    bool psi_bar_divergent_ = false;
    double psi_bar_total_ = 0.0;  // psi_bar(0+) when convergent

    std::size_t segment_index(double x) const {
        auto it = std::upper_bound(tab_x_.begin(), tab_x_.end(), x);
        std::size_t j = static_cast<std::size_t>(it - tab_x_.begin());
        if (j == 0) return 0;
        if (j >= tab_x_.size()) return tab_x_.size() - 2;
        return j - 1;
    }

    // -ln G(x), computed without letting G underflow
    double minus_log_survival(double x) const {
        switch (kind_) {
            case MeasureKind::exponential:
                return rate_ * x;
            case MeasureKind::uniform:
                return x >= b_param_ ? std::numeric_limits<double>::infinity()
                                     : -std::log1p(-x / b_param_);
            case MeasureKind::tabulated:
            default: {
                const double g = survival(x);
                return g > 0.0 ? -std::log(g)
                               : std::numeric_limits<double>::infinity();
            }
        }
    }

    // -ln F(x)
    double minus_log_cdf(double x) const {
        switch (kind_) {
            case MeasureKind::exponential: {
                if (x <= 0.0) return std::numeric_limits<double>::infinity();
                return -std::log(-std::expm1(-rate_ * x));
            }
            case MeasureKind::uniform:
                return x <= 0.0 ? std::numeric_limits<double>::infinity()
                                : (x >= b_param_ ? 0.0 : std::log(b_param_ / x));
            case MeasureKind::tabulated:
            default: {
                const double f = cdf(x);
                return f > 0.0 ? -std::log(f)
                               : std::numeric_limits<double>::infinity();
            }
        }
    }

    double qg_of_u(double u) const {
        switch (kind_) {
            case MeasureKind::exponential:
                return u / rate_;
            case MeasureKind::uniform:
                return b_param_ * (-std::expm1(-u));
            case MeasureKind::tabulated:
            default:
                return quantile_survival(std::exp(-u));
        }
    }

    double qf_of_v(double v) const {
        switch (kind_) {
            case MeasureKind::exponential:
                return -std::log1p(-std::exp(-v)) / rate_;
            case MeasureKind::uniform:
                return b_param_ * std::exp(-v);
            case MeasureKind::tabulated:
            default:
                return quantile_cdf(std::exp(-v));
        }
    }

    template <class Q>
    static Cumulative build_cumulative(Q&& integrand, double cap,
                                       std::vector<double> kinks) {
        Cumulative c;
        std::vector<double> knots;
        knots.push_back(0.0);
        for (int i = 1; i <= kCachePanels; ++i)
            knots.push_back(cap * static_cast<double>(i) / kCachePanels);
        for (double k : kinks)
            if (k > 0.0 && k < cap) knots.push_back(k);
        std::sort(knots.begin(), knots.end());
        knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

        c.knots = knots;
        c.breakpoints = std::move(kinks);
        c.cum.resize(knots.size());
        c.cum[0] = 0.0;
        for (std::size_t i = 1; i < knots.size(); ++i) {
            auto r = integrate(integrand, knots[i - 1], knots[i]);
            if (r.diverged)
                throw divergent_transform("transform cache: divergent panel");
            c.cum[i] = c.cum[i - 1] + r.value;
        }
        return c;
    }

    // cumulative value at t: cached prefix + adaptive remainder inside the
    // containing panel; beyond the cache, integrate the remaining stretch
    template <class Q>
    static double cum_eval(const Cumulative& c, Q&& integrand, double t) {
        if (t <= 0.0) return 0.0;
        const auto& ks = c.knots;
        if (t >= ks.back()) {
            double extra = 0.0;
            if (t > ks.back()) {
                auto r = integrate(integrand, ks.back(), t, c.breakpoints);
                if (r.diverged) return std::numeric_limits<double>::infinity();
                extra = r.value;
            }
            return c.cum.back() + extra;
        }
        auto it = std::upper_bound(ks.begin(), ks.end(), t);
        const std::size_t j = static_cast<std::size_t>(it - ks.begin()) - 1;
        double partial = 0.0;
        if (t > ks[j]) {
            auto r = integrate(integrand, ks[j], t);
            partial = r.value;
        }
        return c.cum[j] + partial;
    }

    void finish_construction() {
        const double u_cap = -std::log(kTruncationLevel);  // ~27.63

        std::vector<double> u_kinks, v_kinks;
        if (kind_ == MeasureKind::tabulated) {
            for (double s : tab_s_)
                if (s > 0.0 && s < 1.0) u_kinks.push_back(-std::log(s));
            for (double f : tab_f_)
                if (f > 0.0 && f < 1.0) v_kinks.push_back(-std::log(f));
        }

        psi_cum_ = build_cumulative([this](double u) { return qg_of_u(u); },
                                    u_cap, u_kinks);
        psi_bar_cum_ = build_cumulative([this](double v) { return qf_of_v(v); },
                                        u_cap, v_kinks);

        // Divergence of psi_bar at the lower support bound: exact when
        // a_m > 0 (the quantile tends to a_m, so the v-integral grows
        // linearly); backstop heuristic compares the cumulative over the
        // last fifth of the cached range against the total.
        psi_bar_total_ = psi_bar_cum_.cum.back();
        if (a_lower_ > 0.0) {
            psi_bar_divergent_ = true;
        } else {
            const double v80 = 0.8 * psi_bar_cum_.knots.back();
            double c80 = 0.0;
            for (std::size_t i = 0; i < psi_bar_cum_.knots.size(); ++i) {
                if (psi_bar_cum_.knots[i] <= v80) c80 = psi_bar_cum_.cum[i];
            }
            const double tail = psi_bar_total_ - c80;
            psi_bar_divergent_ = tail > 1e-6 * std::max(psi_bar_total_, 1.0);
        }
    }
};

} // namespace sigma
