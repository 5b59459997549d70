//! Air-to-ground Rician link model: outage-constrained approximate rate,
//! per-user transmission time, and the numeric machinery behind them
//! (first-order Marcum Q, inverse Gaussian tail, Monte-Carlo fading).
//!
//! The closed-form outage rate works through the quantile `y_Q` of the
//! Rician envelope at target outage `epsilon`, approximated piecewise in the
//! Rician factor `G` with the branch boundary `G0` located numerically.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::scenario::GroundUser;

/// Upper bound of the bisection window when locating the `y_Q` branch
/// intersection `G0` (linear Rician factor).
const G0_SEARCH_MAX: f64 = 100.0;

/// Rician channel and outage-target parameters. All fields are linear SI
/// units; dB conversion happens at the file boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Channel bandwidth in Hz.
    pub bandwidth_hz: f64,
    /// Reference channel power gain at 1 m (linear).
    pub mu0: f64,
    /// Path loss exponent.
    pub pathloss_exp: f64,
    /// Noise power in watts.
    pub noise_w: f64,
    /// Rician factor (linear).
    pub rician_g: f64,
    /// Target outage probability.
    pub epsilon: f64,
}

impl ChannelParams {
    /// Reference simulation setup: B = 2 MHz, mu0 = -30 dB, alpha = 2.3,
    /// noise = -110 dBm, G = 15 dB, epsilon = 1e-3.
    pub fn paper_defaults() -> Self {
        ChannelParams {
            bandwidth_hz: 2.0e6,
            mu0: 1.0e-3,
            pathloss_exp: 2.3,
            noise_w: 1.0e-14,
            rician_g: db_to_linear(15.0),
            epsilon: 1.0e-3,
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut issues = Vec::new();
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            issues.push(format!(
                "channel.epsilon must lie in (0, 1), got {}",
                self.epsilon
            ));
        }
        if !(self.rician_g >= 0.0) {
            issues.push(format!(
                "channel.rician_g must be non-negative, got {}",
                self.rician_g
            ));
        }
        for (name, v) in [
            ("channel.bandwidth_hz", self.bandwidth_hz),
            ("channel.mu0", self.mu0),
            ("channel.noise_w", self.noise_w),
        ] {
            if !(v > 0.0) {
                issues.push(format!("{name} must be strictly positive, got {v}"));
            }
        }
        if !(self.pathloss_exp >= 2.0) {
            issues.push(format!(
                "channel.pathloss_exp must be >= 2, got {}",
                self.pathloss_exp
            ));
        }
        issues
    }
}

/// Converts a dB quantity to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Reference SNR gain `Upsilon = p_com * mu0 / (h^alpha * noise)`.
pub fn snr_gain(ch: &ChannelParams, p_com_w: f64, altitude_m: f64) -> Result<f64> {
    if !(p_com_w > 0.0) || !(altitude_m > 0.0) {
        return Err(Error::invalid_argument(format!(
            "snr_gain requires positive inputs, got p_com={p_com_w}, h={altitude_m}"
        )));
    }
    Ok(p_com_w * ch.mu0 / (altitude_m.powf(ch.pathloss_exp) * ch.noise_w))
}

/// Standard normal tail probability `Q(z)`.
pub fn q_tail(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Inverse of the standard normal tail: returns `z` with `Q(z) = p`.
///
/// Rational approximation (via the inverse complementary error function)
/// followed by one Newton step on the `erfc`-based tail, giving
/// `|Q(z) - p| < 1e-12` over the open unit interval.
pub fn inverse_q(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid_argument(format!(
            "inverse_q requires p in (0, 1), got {p}"
        )));
    }
    let mut z = std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    // One Newton polish: Q'(z) = -phi(z).
    let phi = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if phi > 0.0 {
        z += (q_tail(z) - p) / phi;
    }
    Ok(z)
}

/// First-order Marcum Q-function `Q1(x, y)`.
///
/// Evaluated as the Poisson-weighted sum of upper regularized gamma tails,
/// expanded outward from the dominant Poisson index so that large
/// noncentralities neither overflow nor underflow. Truncation: a direction
/// stops once its weight envelope falls below `1e-15` of the partial sum;
/// the total term count is capped at `1e4`.
pub fn marcum_q1(x: f64, y: f64) -> Result<f64> {
    if x < 0.0 || y < 0.0 || !x.is_finite() || !y.is_finite() {
        return Err(Error::invalid_argument(format!(
            "marcum_q1 requires finite x >= 0, y >= 0, got ({x}, {y})"
        )));
    }
    if y == 0.0 {
        return Ok(1.0);
    }
    let ha = 0.5 * x * x;
    let hb = 0.5 * y * y;
    if x == 0.0 {
        return Ok((-hb).exp());
    }

    const MAX_TERMS: usize = 10_000;
    const REL_TOL: f64 = 1e-15;
    let ln_weight = |k: f64| -ha + k * ha.ln() - ln_gamma(k + 1.0);
    let mode = ha.floor();

    let mut sum = 0.0f64;
    let mut terms = 0usize;

    // Upward from the Poisson mode.
    let mut k = mode;
    loop {
        let w = ln_weight(k).exp();
        sum += w * gamma_ur(k + 1.0, hb);
        terms += 1;
        if w < REL_TOL * sum.max(1e-300) {
            break;
        }
        if terms >= MAX_TERMS {
            return Err(Error::NumericFailure {
                message: format!("marcum_q1({x}, {y}) did not converge in {MAX_TERMS} terms"),
                best: None,
            });
        }
        k += 1.0;
    }
    // Downward from just below the mode.
    let mut k = mode - 1.0;
    while k >= 0.0 {
        let w = ln_weight(k).exp();
        sum += w * gamma_ur(k + 1.0, hb);
        terms += 1;
        if w < REL_TOL * sum.max(1e-300) {
            break;
        }
        if terms >= MAX_TERMS {
            return Err(Error::NumericFailure {
                message: format!("marcum_q1({x}, {y}) did not converge in {MAX_TERMS} terms"),
                best: None,
            });
        }
        k -= 1.0;
    }
    Ok(sum.min(1.0))
}

/// Small-G closed form for `y_Q`.
fn y_q_small(epsilon: f64, g: f64) -> f64 {
    (-2.0 * (1.0 - epsilon).ln()).sqrt() * (g / 2.0).exp()
}

/// Large-G closed form for `y_Q` when the inverse tail is nonzero. Uses the
/// corrected form with the trailing `-Q^{-1}(eps)` term.
fn y_q_large(g: f64, q_inv: f64) -> Result<f64> {
    let s = (2.0 * g).sqrt();
    if s <= q_inv {
        return Err(Error::InfeasibleRicianRegime(format!(
            "sqrt(2G) = {s} must exceed Q^-1(eps) = {q_inv}"
        )));
    }
    Ok(s + (s / (s - q_inv)).ln() / (2.0 * q_inv) - q_inv)
}

/// Large-G closed form for `y_Q` at `Q^{-1}(eps) = 0` (i.e. eps = 1/2).
fn y_q_median(g: f64) -> f64 {
    let s = (2.0 * g).sqrt();
    s + 1.0 / (2.0 * s)
}

/// Whether `Q^{-1}(eps)` is treated as exactly zero.
fn q_inv_is_zero(q_inv: f64) -> bool {
    q_inv.abs() < 1e-12
}

/// Locates `G0`, the Rician factor where the small-G and large-G `y_Q`
/// branches intersect, by scanning for a sign change and bisecting to 1e-9.
pub fn branch_intersection_g0(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid_argument(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let q_inv = inverse_q(epsilon)?;
    let large = |g: f64| -> f64 {
        if q_inv_is_zero(q_inv) {
            y_q_median(g)
        } else {
            y_q_large(g, q_inv).unwrap_or(f64::INFINITY)
        }
    };
    let diff = |g: f64| y_q_small(epsilon, g) - large(g);

    // The large branch is only defined (finite) for sqrt(2G) > Q^-1(eps).
    let g_lo = if q_inv > 0.0 {
        (0.5 * q_inv * q_inv) * (1.0 + 1e-9) + 1e-12
    } else {
        1e-12
    };

    const SCAN_POINTS: usize = 4_000;
    let lo_ln = g_lo.ln();
    let hi_ln = G0_SEARCH_MAX.ln();
    let mut prev_g = g_lo;
    let mut prev_f = diff(prev_g);
    for i in 1..=SCAN_POINTS {
        let g = (lo_ln + (hi_ln - lo_ln) * i as f64 / SCAN_POINTS as f64).exp();
        let f = diff(g);
        if prev_f.is_finite() && f.is_finite() && prev_f * f <= 0.0 {
            // Bisect.
            let (mut a, mut b, mut fa) = (prev_g, g, prev_f);
            while b - a > 1e-9 {
                let m = 0.5 * (a + b);
                let fm = diff(m);
                if fa * fm <= 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            return Ok(0.5 * (a + b));
        }
        prev_g = g;
        prev_f = f;
    }
    Err(Error::NumericFailure {
        message: format!("no y_Q branch intersection found for epsilon = {epsilon}"),
        best: None,
    })
}

/// Rician envelope quantile `y_Q` at the target outage, chosen piecewise:
/// the small-G branch up to and including `G0`, and the applicable large-G
/// branch above it.
pub fn y_q(ch: &ChannelParams) -> Result<f64> {
    let issues = ch.validate();
    if !issues.is_empty() {
        return Err(Error::InvalidScenario(issues));
    }
    let g0 = branch_intersection_g0(ch.epsilon)?;
    if ch.rician_g <= g0 {
        return Ok(y_q_small(ch.epsilon, ch.rician_g));
    }
    let q_inv = inverse_q(ch.epsilon)?;
    if q_inv_is_zero(q_inv) {
        Ok(y_q_median(ch.rician_g))
    } else {
        y_q_large(ch.rician_g, q_inv)
    }
}

/// Outage-constrained approximate rate in bits/s:
/// `B * log2(1 + y_Q^2 * gain / (2 (1 + G)))`.
pub fn approx_rate(ch: &ChannelParams, gain: f64) -> Result<f64> {
    if !(gain >= 0.0) {
        return Err(Error::invalid_argument(format!(
            "gain must be non-negative, got {gain}"
        )));
    }
    let y = y_q(ch)?;
    Ok(ch.bandwidth_hz * (1.0 + y * y * gain / (2.0 * (1.0 + ch.rician_g))).log2())
}

/// Transmission time `tau = data_bits / rate` in seconds.
pub fn service_time(user: &GroundUser, rate_bps: f64) -> Result<f64> {
    if !(rate_bps > 0.0) {
        return Err(Error::invalid_argument(format!(
            "rate must be positive, got {rate_bps}"
        )));
    }
    Ok(user.data_bits / rate_bps)
}

/// Monte-Carlo outage estimate: the fraction of `n` Rician fading draws for
/// which the instantaneous rate `B log2(1 + gain |g|^2)` falls below `rate`.
/// The fading coefficient composes a fixed unit LoS part `sqrt(G/(1+G))`
/// with a circularly-symmetric complex normal scatter part `sqrt(1/(1+G))`.
/// Deterministic for a given seed.
pub fn empirical_outage(
    ch: &ChannelParams,
    gain: f64,
    rate_bps: f64,
    n: usize,
    seed: u64,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid_argument("sample count must be >= 1"));
    }
    let g = ch.rician_g;
    let los = (g / (1.0 + g)).sqrt();
    let scatter = (1.0 / (1.0 + g)).sqrt();
    let comp_std = std::f64::consts::FRAC_1_SQRT_2;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outages = 0usize;
    for _ in 0..n {
        let re: f64 = rng.sample::<f64, _>(StandardNormal) * comp_std;
        let im: f64 = rng.sample::<f64, _>(StandardNormal) * comp_std;
        let gr = los + scatter * re;
        let gi = scatter * im;
        let power = gr * gr + gi * gi;
        let inst_rate = ch.bandwidth_hz * (1.0 + gain * power).log2();
        if inst_rate < rate_bps {
            outages += 1;
        }
    }
    Ok(outages as f64 / n as f64)
}
