#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sigma/errors.hpp"
#include "sigma/func.hpp"
#include "sigma/rng.hpp"

namespace sigma {

// ---------------------------------------------------------------------------
// Discretized sample paths of submartingales X = N + A whose increasing part
// grows only on the zero set of X. Every simulator returns the aligned pair
// (X, A) on a uniform grid plus a model-dependent companion series.
// ---------------------------------------------------------------------------

enum class ModelVariant {
    reflected_bm,            // X = S - B, A = S (running max of a BM)
    sup_minus_martingale,    // X = S - M for a positive martingale M -> 0
    bessel_power,            // X = R^{2mu} for a Bessel process of dim 2(1-mu)
    age_process,             // X = (t - g(t))^mu, A = normalized local time
    reflected_sde,           // Skorokhod-reflected SDE, X = Y, A = L
    diffusion_with_max,      // X = Ymax - Y, A = Ymax (drawdown of a diffusion)
    exponential_martingale,  // same core as sup_minus_martingale, companion = M
};

inline const char* model_name(ModelVariant v) {
    switch (v) {
        case ModelVariant::reflected_bm: return "reflected_bm";
        case ModelVariant::sup_minus_martingale: return "sup_minus_martingale";
        case ModelVariant::bessel_power: return "bessel_power";
        case ModelVariant::age_process: return "age_process";
        case ModelVariant::reflected_sde: return "reflected_sde";
        case ModelVariant::diffusion_with_max: return "diffusion_with_max";
        case ModelVariant::exponential_martingale: return "exponential_martingale";
    }
    return "unknown";
}

struct ModelSpec {
    ModelVariant variant = ModelVariant::reflected_bm;
    double dt = 1e-3;
    // stop conditions: a path ends at the time horizon (when >= 0) or once
    // A exceeds u_cap (when > 0) — whichever triggers first when both are set
    double horizon = -1.0;
    double u_cap = -1.0;
    double zero_threshold = -1.0;  // < 0 -> default 0.5*sqrt(dt)
    double mu = 0.5;               // bessel_power / age_process, in (0,1)
    double x0 = 1.0;               // sup_minus_martingale / exponential_martingale
    ScalarFn drift = ScalarFn::constant(0.0);      // reflected_sde / diffusion_with_max
    ScalarFn diffusion = ScalarFn::constant(1.0);  // reflected_sde / diffusion_with_max
    // Brownian cores: draw the intra-step maximum from the exact bridge law
    // instead of reading maxima off grid points. Skorokhod cores
    // (bessel_power, reflected_sde): pin reflections to the intra-step bridge
    // minimum. Either way this removes the O(sqrt(dt)) bias of the extremal
    // functional (running max / local time).
    bool exact_pair_max = false;
    // diffusion_with_max only: exact transition for drift -ou_rate*y, unit vol
    bool exact_ou = false;
    double ou_rate = 1.0;
    // Geometric head refinement (reflected_bm, cap-terminated runs only).
    // When > 0, early steps shrink to h = clamp(head_refine * t, dt * 2^-20,
    // dt): near t = 0 the step size tracks the elapsed time, so the
    // self-similar small-A structure (tiny excursions racing a tiny barrier)
    // is resolved at every scale instead of being flattened into one grid
    // step. Once t >= dt / head_refine the cadence is plain dt. Value is the
    // relative step fraction, e.g. 1/16.
    double head_refine = 0.0;

    double effective_zero_threshold() const {
        return zero_threshold >= 0.0 ? zero_threshold : 0.5 * std::sqrt(dt);
    }
};

struct ClassSigmaPath {
    std::vector<double> t;          // increasing, starts at 0
    std::vector<double> X;          // >= 0
    std::vector<double> A;          // nondecreasing, A[0] = 0
    std::vector<double> companion;  // model-dependent second series
    std::string model_tag;
    double zero_threshold = 0.0;
    // true when intra-step maxima were sampled exactly: zeros of X then fall
    // strictly inside steps and the grid endpoints need not witness them
    bool endpoint_exact_max = false;
    unsigned warning_count = 0;  // age process: no zero ever detected
};

// Structural invariants of the class: nonnegativity, monotone A, and the
// discrete shadow of "dA is carried by {X = 0}" (skipped for exact-max paths,
// whose zeros are interior to steps by construction).
inline void assert_class_sigma(const ClassSigmaPath& p, double tol = 1e-9) {
    const std::size_t n = p.t.size();
    if (n == 0 || p.X.size() != n || p.A.size() != n)
        throw invalid_spec("path: t/X/A must be nonempty and equally sized");
    if (p.t[0] != 0.0) throw invalid_spec("path: t must start at 0");
    if (!(std::fabs(p.A[0]) <= tol)) throw invalid_spec("path: A[0] must be 0");
    for (std::size_t k = 0; k < n; ++k) {
        if (!(p.X[k] >= -tol))
            throw invalid_spec("path: X < 0 at index " + std::to_string(k));
        if (k == 0) continue;
        if (!(p.t[k] > p.t[k - 1]))
            throw invalid_spec("path: t not increasing at index " + std::to_string(k));
        if (!(p.A[k] >= p.A[k - 1] - tol))
            throw invalid_spec("path: A decreases at index " + std::to_string(k));
        if (!p.endpoint_exact_max && p.A[k] > p.A[k - 1] + tol &&
            std::min(p.X[k - 1], p.X[k]) > p.zero_threshold + tol)
            throw invalid_spec("path: A grew away from a zero of X at index " +
                               std::to_string(k));
    }
}

inline void validate_model_spec(const ModelSpec& spec) {
    if (!(spec.dt > 0.0) || !std::isfinite(spec.dt))
        throw invalid_spec("model: dt must be finite and > 0");
    const bool has_h = spec.horizon >= 0.0;
    const bool has_u = spec.u_cap > 0.0;
    if (!has_h && !has_u)
        throw invalid_spec("model: set a horizon >= 0 and/or a u_cap > 0");
    if (has_h && !std::isfinite(spec.horizon))
        throw invalid_spec("model: horizon must be finite");
    if (spec.variant == ModelVariant::bessel_power ||
        spec.variant == ModelVariant::age_process) {
        if (!(spec.mu > 0.0) || !(spec.mu < 1.0))
            throw invalid_spec("model: mu must lie in (0,1)");
    }
    if (spec.variant == ModelVariant::sup_minus_martingale ||
        spec.variant == ModelVariant::exponential_martingale) {
        if (!(spec.x0 > 0.0)) throw invalid_spec("model: x0 must be > 0");
    }
    if (spec.variant == ModelVariant::reflected_sde ||
        spec.variant == ModelVariant::diffusion_with_max) {
        const double lo = spec.variant == ModelVariant::reflected_sde ? 0.0 : -8.0;
        for (int i = 0; i <= 64; ++i) {
            const double y = lo + (8.0 - lo) * i / 64.0;
            if (!(spec.diffusion(y) > 0.0))
                throw invalid_spec("model: diffusion coefficient must be positive, "
                                   "fails at y=" + std::to_string(y));
        }
    }
    if (spec.exact_ou) {
        if (spec.variant != ModelVariant::diffusion_with_max)
            throw invalid_spec("model: exact_ou applies to diffusion_with_max only");
        if (!(spec.ou_rate > 0.0)) throw invalid_spec("model: ou_rate must be > 0");
    }
    if (spec.exact_pair_max && spec.variant != ModelVariant::reflected_bm &&
        spec.variant != ModelVariant::sup_minus_martingale &&
        spec.variant != ModelVariant::exponential_martingale &&
        spec.variant != ModelVariant::bessel_power &&
        spec.variant != ModelVariant::reflected_sde)
        throw invalid_spec(
            "model: exact_pair_max applies to Brownian and Skorokhod cores only");
    // bridge pinning needs the diffusion coefficient to be regular at the
    // boundary; the bessel-power coefficient 2 mu y^{1-1/(2mu)} is only
    // regular there for mu = 1/2 (where it is constant)
    if (spec.exact_pair_max && spec.variant == ModelVariant::bessel_power &&
        spec.mu != 0.5)
        throw invalid_spec(
            "model: exact_pair_max on bessel_power requires mu = 1/2");
    if (spec.head_refine != 0.0) {
        if (!(spec.head_refine > 0.0 && spec.head_refine <= 0.5))
            throw invalid_spec("model: head_refine must lie in (0, 1/2]");
        if (spec.variant != ModelVariant::reflected_bm)
            throw invalid_spec("model: head_refine applies to reflected_bm only");
        if (has_h)
            throw invalid_spec(
                "model: head_refine needs a cap-terminated run (u_cap without "
                "horizon); the horizon loop counts uniform steps");
    }
}

// Incremental single-path generator: advance() moves one grid step and
// refreshes the public state fields.
class PathStepper {
  public:
    virtual ~PathStepper() = default;
    virtual void advance(Xoshiro256pp& rng) = 0;

    double t = 0.0;
    double X = 0.0;
    double A = 0.0;
    double companion = 0.0;
    bool endpoint_exact_max = false;
    unsigned zeros_detected = 0;  // meaningful for the age process only

  protected:
    explicit PathStepper(double dt) : dt_(dt), sqrt_dt_(std::sqrt(dt)) {}

    void tick() { t = static_cast<double>(++k_) * dt_; }

    // maximum of a Brownian bridge from 0 to w over one step of variance dt
    // (drift shifts endpoints, not the bridge law): M = (w + sqrt(w^2 - 2 dt ln U))/2
    double bridge_max(double w, Xoshiro256pp& rng) const {
        return bridge_max_h(w, dt_, rng);
    }

    // same bridge draw over a step of variance h (variable-step cores)
    double bridge_max_h(double w, double h, Xoshiro256pp& rng) const {
        const double ln_u = std::log(rng.u01_open0());
        return 0.5 * (w + std::sqrt(w * w - 2.0 * h * ln_u));
    }

    double dt_;
    double sqrt_dt_;
    std::uint64_t k_ = 0;
};

namespace detail {

class ReflectedBmStepper final : public PathStepper {
  public:
    ReflectedBmStepper(double dt, bool exact, double head_refine = 0.0)
        : PathStepper(dt), exact_(exact), head_frac_(head_refine),
          head_floor_(dt * 0x1p-20) {
        endpoint_exact_max = exact;
    }
    void advance(Xoshiro256pp& rng) override {
        const double h = next_step();
        const double w = std::sqrt(h) * normal_draw(rng);
        if (exact_) {
            s_ = std::max(s_, b_ + bridge_max_h(w, h, rng));
            b_ += w;
        } else {
            b_ += w;
            s_ = std::max(s_, b_);
        }
        X = s_ - b_;
        A = s_;
        companion = b_;
        if (head_frac_ <= 0.0) {
            tick();  // uniform cadence: keep t = k * dt exact
        } else {
            // a refined path accumulates time; k_ counts advances, not dt's
            t += h;
            ++k_;
        }
    }

  private:
    // Step size for the refined head: proportional to elapsed time, floored
    // well below dt, and capped at dt once t reaches dt / head_frac.
    double next_step() const {
        if (head_frac_ <= 0.0) return dt_;
        return std::min(dt_, std::max(head_floor_, t * head_frac_));
    }

    bool exact_;
    double head_frac_;
    double head_floor_;
    double b_ = 0.0, s_ = 0.0;
};

class SupMartStepper final : public PathStepper {
  public:
    SupMartStepper(double dt, double x0, bool exact)
        : PathStepper(dt), x0_(x0), exact_(exact) {
        endpoint_exact_max = exact;
        companion = x0;
    }
    void advance(Xoshiro256pp& rng) override {
        // log-space: e = B_t - t/2, M = x0 exp(e), S = x0 exp(max e)
        const double w = sqrt_dt_ * normal_draw(rng) - 0.5 * dt_;
        if (exact_) {
            log_max_ = std::max(log_max_, e_ + bridge_max(w, rng));
            e_ += w;
        } else {
            e_ += w;
            log_max_ = std::max(log_max_, e_);
        }
        const double m = x0_ * std::exp(e_);
        const double s = x0_ * std::exp(log_max_);
        X = s - m;
        A = s - x0_;
        companion = m;
        tick();
    }

  private:
    double x0_;
    bool exact_;
    double e_ = 0.0, log_max_ = 0.0;
};

// Skorokhod push for one step from y with increment incr: grid mode pushes
// off the endpoint; exact mode pins the reflection to the bridge minimum
// m = (incr - sqrt(incr^2 - 2 vol^2 ln U))/2 (coefficient frozen over the
// step), which removes the O(sqrt(dt)) undercount of the local time.
inline double skorokhod_push(double y, double incr, double vol, bool exact,
                             Xoshiro256pp& rng) {
    if (!exact) return std::max(0.0, -(y + incr));
    const double ln_u = std::log(rng.u01_open0());
    const double m =
        0.5 * (incr - std::sqrt(incr * incr - 2.0 * vol * vol * ln_u));
    return std::max(0.0, -(y + m));
}

class BesselPowerStepper final : public PathStepper {
  public:
    BesselPowerStepper(double dt, double mu, bool exact = false)
        : PathStepper(dt),
          mu_(mu),
          expo_(1.0 - 1.0 / (2.0 * mu)),
          inv_power_(1.0 / (2.0 * mu)),
          // coefficient floor chosen so that one step's fluctuation at the
          // floor has the scale of the floor itself
          y_floor_(std::pow(2.0 * mu * std::sqrt(dt), 2.0 * mu)),
          exact_(exact) {
        endpoint_exact_max = exact;
        if (mu < 0.5) {
            // Steep-coefficient regime (negative exponent): local-time pushes
            // at the floor have magnitude ~ 2 mu floor^expo sqrt(dt), coarse
            // enough to leave visible granularity in the law of A. Substep
            // inside the band [0, 2 floor) to shrink the quanta by
            // sqrt(kSubsteps); the band's occupation is tiny (the speed
            // density ~ y^{1/mu - 2} vanishes at 0), so the cost is marginal.
            // The floor itself stays at the parent-step scale: shrinking it
            // with the substep would regrow the coefficient and the quanta.
            band_ = 2.0 * y_floor_;
            sub_sqrt_dt_ = std::sqrt(dt / kSubsteps);
        }
    }

    void advance(Xoshiro256pp& rng) override {
        if (y_ < band_) {
            for (int s = 0; s < kSubsteps; ++s) one_increment(sub_sqrt_dt_, rng);
        } else {
            one_increment(sqrt_dt_, rng);
        }
        X = y_;
        A = ell_;
        // the Bessel level R = Y^{1/(2mu)}; common exponents short-circuited
        companion = inv_power_ == 1.0 ? y_
                    : inv_power_ == 2.0 ? y_ * y_
                                        : std::pow(y_, inv_power_);
        tick();
    }

    double local_time() const { return ell_; }

  private:
    static constexpr int kSubsteps = 32;

    void one_increment(double sq_dt, Xoshiro256pp& rng) {
        const double base = std::max(y_, y_floor_);
        const double coef = expo_ == 0.0    ? 2.0 * mu_
                            : expo_ == -1.0 ? 2.0 * mu_ / base
                                            : 2.0 * mu_ * std::pow(base, expo_);
        coef_max_ = std::max(coef_max_, coef);
        const double incr = coef * sq_dt * normal_draw(rng);
        if (!(std::fabs(incr) <= 10.0 * sq_dt * coef_max_))
            throw unstable_step("bessel power: step increment exceeded the "
                                "stability guard at t=" + std::to_string(t));
        const double d_ell = skorokhod_push(y_, incr, coef * sq_dt, exact_, rng);
        // the final clamp absorbs the cancellation residue of y + incr + d_ell
        // (which can land an ulp below zero) -- nonnegativity is structural
        y_ = std::max(y_ + incr + d_ell, 0.0);
        ell_ += d_ell;
    }

    double mu_, expo_, inv_power_, y_floor_;
    bool exact_;
    double band_ = 0.0, sub_sqrt_dt_ = 0.0;
    double y_ = 0.0, ell_ = 0.0, coef_max_ = 0.0;
};

class AgeProcessStepper final : public PathStepper {
  public:
    AgeProcessStepper(double dt, double mu, double zero_threshold)
        : PathStepper(dt),
          core_(dt, mu),
          mu_(mu),
          zt_(zero_threshold),
          norm_(std::pow(2.0, mu) * std::tgamma(1.0 + mu)) {}

    void advance(Xoshiro256pp& rng) override {
        core_.advance(rng);
        t = core_.t;
        const double r = core_.companion;
        if (r <= zt_) {
            g_ = t;
            ++zeros_detected;
        }
        X = mu_ == 0.5 ? std::sqrt(t - g_) : std::pow(t - g_, mu_);
        A = core_.local_time() / norm_;
        companion = r;
    }

  private:
    BesselPowerStepper core_;
    double mu_, zt_, norm_;
    double g_ = 0.0;
};

class ReflectedSdeStepper final : public PathStepper {
  public:
    ReflectedSdeStepper(double dt, ScalarFn b, ScalarFn sig, bool exact = false)
        : PathStepper(dt), b_(std::move(b)), sig_(std::move(sig)), exact_(exact) {
        endpoint_exact_max = exact;
    }

    void advance(Xoshiro256pp& rng) override {
        const double arg = y_ + ell_;  // the unreflected diffusion level
        const double sig = sig_(arg);
        if (!(sig > 0.0))
            throw invalid_spec("reflected sde: diffusion coefficient <= 0 at y=" +
                               std::to_string(arg));
        coef_max_ = std::max(coef_max_, sig);
        const double incr = sig * sqrt_dt_ * normal_draw(rng) + b_(arg) * dt_;
        if (!(std::fabs(incr) <= 10.0 * sqrt_dt_ * coef_max_))
            throw unstable_step("reflected sde: step increment exceeded the "
                                "stability guard at t=" + std::to_string(t));
        const double d_ell =
            skorokhod_push(y_, incr, sig * sqrt_dt_, exact_, rng);
        y_ = std::max(y_ + incr + d_ell, 0.0);
        ell_ += d_ell;
        X = y_;
        A = ell_;
        companion = y_ + ell_;
        tick();
    }

  private:
    ScalarFn b_, sig_;
    bool exact_;
    double y_ = 0.0, ell_ = 0.0, coef_max_ = 0.0;
};

class DiffusionWithMaxStepper final : public PathStepper {
  public:
    DiffusionWithMaxStepper(double dt, ScalarFn b, ScalarFn sig, bool exact_ou,
                            double ou_rate)
        : PathStepper(dt), b_(std::move(b)), sig_(std::move(sig)), exact_ou_(exact_ou) {
        if (exact_ou_) {
            decay_ = std::exp(-ou_rate * dt);
            sd_ = std::sqrt(-std::expm1(-2.0 * ou_rate * dt) / (2.0 * ou_rate));
        }
    }

    void advance(Xoshiro256pp& rng) override {
        if (exact_ou_) {
            y_ = y_ * decay_ + sd_ * normal_draw(rng);
        } else {
            const double sig = sig_(y_);
            if (!(sig > 0.0))
                throw invalid_spec("diffusion with max: diffusion coefficient <= 0 "
                                   "at y=" + std::to_string(y_));
            coef_max_ = std::max(coef_max_, sig);
            const double incr = sig * sqrt_dt_ * normal_draw(rng) + b_(y_) * dt_;
            if (!(std::fabs(incr) <= 10.0 * sqrt_dt_ * coef_max_))
                throw unstable_step("diffusion with max: step increment exceeded "
                                    "the stability guard at t=" + std::to_string(t));
            y_ += incr;
        }
        ymax_ = std::max(ymax_, y_);
        X = ymax_ - y_;
        A = ymax_;
        companion = y_;
        tick();
    }

  private:
    ScalarFn b_, sig_;
    bool exact_ou_;
    double decay_ = 0.0, sd_ = 0.0;
    double y_ = 0.0, ymax_ = 0.0, coef_max_ = 0.0;
};

} // namespace detail

inline std::unique_ptr<PathStepper> make_stepper(const ModelSpec& spec) {
    validate_model_spec(spec);
    switch (spec.variant) {
        case ModelVariant::reflected_bm:
            return std::make_unique<detail::ReflectedBmStepper>(
                spec.dt, spec.exact_pair_max, spec.head_refine);
        case ModelVariant::sup_minus_martingale:
        case ModelVariant::exponential_martingale:
            return std::make_unique<detail::SupMartStepper>(spec.dt, spec.x0,
                                                            spec.exact_pair_max);
        case ModelVariant::bessel_power:
            return std::make_unique<detail::BesselPowerStepper>(spec.dt, spec.mu,
                                                                spec.exact_pair_max);
        case ModelVariant::age_process:
            return std::make_unique<detail::AgeProcessStepper>(
                spec.dt, spec.mu, spec.effective_zero_threshold());
        case ModelVariant::reflected_sde:
            return std::make_unique<detail::ReflectedSdeStepper>(
                spec.dt, spec.drift, spec.diffusion, spec.exact_pair_max);
        case ModelVariant::diffusion_with_max:
            return std::make_unique<detail::DiffusionWithMaxStepper>(
                spec.dt, spec.drift, spec.diffusion, spec.exact_ou, spec.ou_rate);
    }
    throw invalid_spec("model: unknown variant");
}

// Materializes one full path. Long simulations (acceptance-scale horizons)
// should drive a PathStepper directly instead of materializing.
inline ClassSigmaPath simulate(const ModelSpec& spec, RngStream stream) {
    static constexpr std::uint64_t kMaxPoints = 12'000'000;
    auto st = make_stepper(spec);  // validates
    const bool has_h = spec.horizon >= 0.0;
    const bool has_u = spec.u_cap > 0.0;
    std::uint64_t n_steps = 0;
    if (has_h) {
        n_steps = static_cast<std::uint64_t>(std::llround(spec.horizon / spec.dt));
        if (n_steps + 1 > kMaxPoints)
            throw invalid_spec("model: horizon/dt too long to materialize; drive a "
                               "PathStepper incrementally instead");
    }

    Xoshiro256pp rng(stream);
    ClassSigmaPath p;
    p.model_tag = model_name(spec.variant);
    p.zero_threshold = spec.effective_zero_threshold();
    p.endpoint_exact_max = st->endpoint_exact_max;
    if (has_h) {
        p.t.reserve(n_steps + 1);
        p.X.reserve(n_steps + 1);
        p.A.reserve(n_steps + 1);
        p.companion.reserve(n_steps + 1);
    }
    auto push = [&p, &st]() {
        p.t.push_back(st->t);
        p.X.push_back(st->X);
        p.A.push_back(st->A);
        p.companion.push_back(st->companion);
    };
    push();
    for (std::uint64_t k = 1;; ++k) {
        if (has_h && k > n_steps) break;
        if (p.t.size() >= kMaxPoints)
            throw invalid_spec("model: u_cap not reached within the materialization "
                               "cap; drive a PathStepper incrementally instead");
        st->advance(rng);
        push();
        if (has_u && st->A > spec.u_cap) break;
    }
    if (spec.variant == ModelVariant::age_process && st->zeros_detected == 0)
        p.warning_count = 1;
    return p;
}

namespace detail {
inline ClassSigmaPath simulate_as(const ModelSpec& spec, RngStream stream,
                                  ModelVariant expect, const char* op) {
    if (spec.variant != expect)
        throw invalid_spec(std::string(op) + ": spec variant must be " +
                           model_name(expect));
    return simulate(spec, stream);
}
} // namespace detail

inline ClassSigmaPath sim_reflected_bm(const ModelSpec& spec, RngStream stream) {
    return detail::simulate_as(spec, stream, ModelVariant::reflected_bm,
                               "sim_reflected_bm");
}
inline ClassSigmaPath sim_bessel_power(const ModelSpec& spec, RngStream stream) {
    return detail::simulate_as(spec, stream, ModelVariant::bessel_power,
                               "sim_bessel_power");
}
inline ClassSigmaPath sim_age_process(const ModelSpec& spec, RngStream stream) {
    return detail::simulate_as(spec, stream, ModelVariant::age_process,
                               "sim_age_process");
}
inline ClassSigmaPath sim_reflected_sde(const ModelSpec& spec, RngStream stream) {
    return detail::simulate_as(spec, stream, ModelVariant::reflected_sde,
                               "sim_reflected_sde");
}
inline ClassSigmaPath sim_diffusion_with_max(const ModelSpec& spec, RngStream stream) {
    return detail::simulate_as(spec, stream, ModelVariant::diffusion_with_max,
                               "sim_diffusion_with_max");
}
inline ClassSigmaPath sim_exponential_martingale(const ModelSpec& spec,
                                                 RngStream stream) {
    return detail::simulate_as(spec, stream, ModelVariant::exponential_martingale,
                               "sim_exponential_martingale");
}

// One exact draw of a squared Bessel process of dimension delta in (0,2) at
// time t from x0, via the Poisson mixture of Gamma variables equivalent to
// the noncentral chi-square transition: X_t = 2t * Gamma(delta/2 + K, 1),
// K ~ Poisson(x0 / (2t)).
inline double sim_besq_exact(double delta, double x0, double t, Xoshiro256pp& rng) {
    if (!(delta > 0.0) || !(delta < 2.0))
        throw domain_error("sim_besq_exact: delta must lie in (0,2)");
    if (!(t > 0.0)) throw domain_error("sim_besq_exact: t must be > 0");
    if (!(x0 >= 0.0)) throw domain_error("sim_besq_exact: x0 must be >= 0");
    const double k = static_cast<double>(poisson_draw(rng, x0 / (2.0 * t)));
    return 2.0 * t * gamma_draw(rng, 0.5 * delta + k, 1.0);
}

} // namespace sigma
