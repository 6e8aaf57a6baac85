//! Interior phase functions of the square-barrier eigenfunctions, the phase
//! time, the dimensionless path relation S(D) and its monotone inversion into
//! a quasi-classical path x(tau), together with the opaque-barrier velocity
//! asymptotics and the classical limit in allowed regions.
//!
//! Dimensionless variables: D = x/a and S = (k0 lambda / m) tau1, where tau1
//! is time measured from barrier entry, gamma = lambda a and
//! epsilon = k0^2/(2 m V0).

use crate::error::{CoreError, Result};
use crate::numerics::{find_root_bracketed, sinh_minus_z_over_z3, sinhc};
use crate::scattering::{self, BarrierParams, PiecewisePotential};

const LOG_DOMAIN: f64 = 30.0;

fn tanhc(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        1.0 - z * z / 3.0
    } else {
        z.tanh() / z
    }
}

/// Phase-side data of f_{k+} at one interior point: log-modulus r, continuous
/// phase theta, its momentum derivative omega and the interior delay beta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseData {
    pub k: f64,
    pub x: f64,
    pub r: f64,
    pub theta: f64,
    pub omega: f64,
    pub beta: f64,
}

fn check_interior(x: f64, b: &BarrierParams) -> Result<()> {
    if x.abs() > b.a {
        return Err(CoreError::OutsideBarrier { x, a: b.a });
    }
    Ok(())
}

/// Continuous transmission phase phi_k = arg T_k. The real part of the
/// denominator of T_k is cosh(2 gamma) > 0, so the arctangent branch never
/// wraps and no unwinding is required.
pub fn transmission_phase(k: f64, b: &BarrierParams) -> Result<f64> {
    if b.is_trivial() {
        return Ok(0.0);
    }
    let lambda = scattering::kappa(k, b)?;
    if !(k > 0.0) {
        return Err(CoreError::InvalidParameter {
            name: "k",
            value: k,
            requirement: "> 0",
        });
    }
    let g2 = 2.0 * lambda * b.a;
    // (1/2)(lambda/k - k/lambda) tanh(2 gamma), stable at both ends
    let half_diff = 0.5 * (lambda / k * g2.tanh() - 2.0 * k * b.a * tanhc(g2));
    Ok(-2.0 * k * b.a - half_diff.atan())
}

/// Interior phase theta_k(x) = k a + phi_k + Im log[1 - i (k/lambda)
/// tanh lambda(a-x)], continuous in both k and x.
pub fn phase_theta(k: f64, x: f64, b: &BarrierParams) -> Result<f64> {
    check_interior(x, b)?;
    let phi = transmission_phase(k, b)?;
    if b.is_trivial() {
        return Ok(k * x);
    }
    let lambda = scattering::kappa(k, b)?;
    let u = lambda * (b.a - x);
    Ok(k * b.a + phi - (k * (b.a - x) * tanhc(u)).atan())
}

/// Wigner-Bohm phase time t_ph(k) = (m/k)(phi'_k + 2a), from the analytic
/// derivative of the transmission phase.
pub fn phase_time(k: f64, b: &BarrierParams) -> Result<f64> {
    if b.is_trivial() {
        return Ok(0.0);
    }
    let lambda = scattering::kappa(k, b)?;
    if !(k > 0.0) {
        return Err(CoreError::InvalidParameter {
            name: "k",
            value: k,
            requirement: "> 0",
        });
    }
    let a = b.a;
    let m = b.mass;
    let gamma = lambda * a;
    if gamma <= LOG_DOMAIN {
        let z4 = 4.0 * gamma;
        // (k^2/(4 lambda^3)) [sinh z - z] + sinh(z)/(2 lambda) + (lambda/(4k^2)) sinh z + a
        let num = 16.0 * k * k * a.powi(3) * sinh_minus_z_over_z3(z4)
            + 2.0 * a * sinhc(z4)
            + lambda / (4.0 * k * k) * z4.sinh()
            + a;
        let s_over = 2.0 * a * sinhc(2.0 * gamma); // sinh(2 gamma)/lambda
        let den = 1.0
            + 0.25 * k * k * s_over * s_over
            + 0.5 * (2.0 * gamma).sinh().powi(2)
            + lambda * lambda / (4.0 * k * k) * (2.0 * gamma).sinh().powi(2);
        Ok(m / k * num / den)
    } else {
        let sum2 = (lambda / k + k / lambda).powi(2);
        let e4 = (-4.0 * gamma).exp();
        let num = sum2 / lambda * (1.0 - e4 * e4) + 8.0 * a * (1.0 - k * k / (lambda * lambda)) * e4;
        let den = 8.0 * e4 + 0.5 * sum2 * (1.0 - e4) * (1.0 - e4);
        Ok(m / k * num / den)
    }
}

/// d phi_k / dk, recovered from the phase time.
pub fn transmission_phase_derivative(k: f64, b: &BarrierParams) -> Result<f64> {
    Ok(phase_time(k, b)? * k / b.mass - 2.0 * b.a)
}

/// Interior delay beta_k(x); beta_k(a) = 0 and beta < 0 strictly inside.
pub fn beta_exact(k: f64, x: f64, b: &BarrierParams) -> Result<f64> {
    check_interior(x, b)?;
    let lambda = scattering::kappa(k, b)?;
    if !(k > 0.0) {
        return Err(CoreError::InvalidParameter {
            name: "k",
            value: k,
            requirement: "> 0",
        });
    }
    let s = b.a - x;
    let u = lambda * s;
    let c = lambda * lambda / (k * k);
    let m = b.mass;
    if u <= LOG_DOMAIN {
        // bracket = 1 - (1 + c) sinhc(2u), written cancellation-free
        let num = -(2.0 * u) * (2.0 * u) * sinh_minus_z_over_z3(2.0 * u) - c * sinhc(2.0 * u);
        let den = u * u * sinhc(u) * sinhc(u) + c * u.cosh().powi(2);
        debug_assert!(den > 0.0);
        Ok(m / k * s * num / den)
    } else {
        let e2 = (-2.0 * u).exp();
        let num = 4.0 * e2 - (1.0 + c) * (1.0 - e2 * e2) / u;
        let den = (1.0 - e2) * (1.0 - e2) + c * (1.0 + e2) * (1.0 + e2);
        Ok(m / k * s * num / den)
    }
}

/// omega_k(x) = d theta_k(x)/dk = a + phi'_k + (k/m) beta_k(x).
pub fn omega(k: f64, x: f64, b: &BarrierParams) -> Result<f64> {
    check_interior(x, b)?;
    Ok(b.a + transmission_phase_derivative(k, b)? + k / b.mass * beta_exact(k, x, b)?)
}

/// Oracle route for omega: central finite difference of `phase_theta`.
pub fn omega_finite_difference(k: f64, x: f64, b: &BarrierParams, step: f64) -> Result<f64> {
    let hi = phase_theta(k + step, x, b)?;
    let lo = phase_theta(k - step, x, b)?;
    Ok((hi - lo) / (2.0 * step))
}

/// Full phase record at (k, x); `r` is the log-modulus of f_{k+}(x).
pub fn phase_data(k: f64, x: f64, b: &BarrierParams) -> Result<PhaseData> {
    check_interior(x, b)?;
    let theta = phase_theta(k, x, b)?;
    let (omega, beta, r) = if b.is_trivial() {
        (x, 0.0, -(0.5 * (2.0 * std::f64::consts::PI).ln()))
    } else {
        (
            omega(k, x, b)?,
            beta_exact(k, x, b)?,
            log_modulus_interior(k, x, b)?,
        )
    };
    Ok(PhaseData {
        k,
        x,
        r,
        theta,
        omega,
        beta,
    })
}

/// ln |f_{k+}(x)| for |x| <= a, safe for arbitrarily opaque barriers.
fn log_modulus_interior(k: f64, x: f64, b: &BarrierParams) -> Result<f64> {
    check_interior(x, b)?;
    let lambda = scattering::kappa(k, b)?;
    let gamma = lambda * b.a;
    let u = lambda * (b.a - x);
    let half_ln_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    // ln|T|
    let ln_t = if gamma <= LOG_DOMAIN {
        let q = 0.5 * (lambda / k + k / lambda) * (2.0 * gamma).sinh();
        -0.5 * (q * q).ln_1p()
    } else {
        let ln_q = (0.5 * (lambda / k + k / lambda)).ln()
            + 2.0 * gamma
            + ((1.0 - (-4.0 * gamma).exp()) / 2.0).ln();
        -ln_q
    };
    // ln |cosh u - i (k/lambda) sinh u|
    let c2 = (k / lambda) * (k / lambda);
    let ln_bracket = if u <= LOG_DOMAIN {
        0.5 * (u.cosh().powi(2) + c2 * u.sinh().powi(2)).ln()
    } else {
        let e2 = (-2.0 * u).exp();
        u - std::f64::consts::LN_2
            + 0.5 * ((1.0 + e2) * (1.0 + e2) + c2 * (1.0 - e2) * (1.0 - e2)).ln()
    };
    Ok(ln_t + ln_bracket - half_ln_2pi)
}

// ---------------------------------------------------------------------------
// Dimensionless path relation
// ---------------------------------------------------------------------------

fn check_dimensionless(gamma: f64, epsilon: f64) -> Result<()> {
    if !(gamma > 0.0) {
        return Err(CoreError::InvalidParameter {
            name: "gamma",
            value: gamma,
            requirement: "> 0",
        });
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(CoreError::InvalidParameter {
            name: "epsilon",
            value: epsilon,
            requirement: "in (0, 1)",
        });
    }
    Ok(())
}

fn term1(u: f64, epsilon: f64) -> f64 {
    if u <= LOG_DOMAIN {
        (epsilon * u - 0.5 * (2.0 * u).sinh()) / (u.cosh().powi(2) - epsilon)
    } else {
        let e2 = (-2.0 * u).exp();
        (4.0 * epsilon * u * e2 - (1.0 - e2 * e2)) / ((1.0 + e2) * (1.0 + e2) - 4.0 * epsilon * e2)
    }
}

/// Dimensionless exit time: the value S(D = 1), which a detector at the
/// barrier exit records for every gamma and epsilon.
pub fn dimensionless_exit_time(gamma: f64, epsilon: f64) -> f64 {
    if gamma <= LOG_DOMAIN {
        let num = 0.25 * (1.0 + epsilon) * (4.0 * gamma).sinh() + (1.0 - 2.0 * epsilon) * gamma;
        let den = 1.0 - epsilon + 0.25 * (1.0 + epsilon) * (2.0 * gamma).sinh().powi(2);
        num / den
    } else {
        let e4 = (-4.0 * gamma).exp();
        let num = (1.0 + epsilon) * (1.0 - e4 * e4) + 8.0 * gamma * (1.0 - 2.0 * epsilon) * e4;
        let den = 8.0 * (1.0 - epsilon) * e4 + 0.5 * (1.0 + epsilon) * (1.0 - e4) * (1.0 - e4);
        num / den
    }
}

/// The two-term closed form S(D) of the exact square-barrier path relation.
pub fn s_of_d_exact(d: f64, gamma: f64, epsilon: f64) -> f64 {
    term1(gamma * (1.0 - d), epsilon) + dimensionless_exit_time(gamma, epsilon)
}

/// Analytic slope dS/dD (non-negative for all D in [-1, 1]).
pub fn s_of_d_derivative(d: f64, gamma: f64, epsilon: f64) -> f64 {
    let u = gamma * (1.0 - d);
    let fp = if u <= LOG_DOMAIN {
        let den = u.cosh().powi(2) - epsilon;
        (epsilon - (2.0 * u).cosh()) / den
            - (epsilon * u - 0.5 * (2.0 * u).sinh()) * (2.0 * u).sinh() / (den * den)
    } else {
        let e2 = (-2.0 * u).exp();
        let den = (1.0 + e2) * (1.0 + e2) - 4.0 * epsilon * e2;
        let p1 = (4.0 * epsilon * e2 - 2.0 * (1.0 + e2 * e2)) / den;
        let p2 = (4.0 * epsilon * u * e2 - (1.0 - e2 * e2)) * 2.0 * (1.0 - e2 * e2) / (den * den);
        p1 - p2
    };
    -gamma * fp
}

/// Unique D with S(D) = s, by bracketed root finding to |dD| <= 1e-10.
pub fn invert_path(gamma: f64, epsilon: f64, s: f64) -> Result<f64> {
    check_dimensionless(gamma, epsilon)?;
    let lo = s_of_d_exact(-1.0, gamma, epsilon);
    let hi = s_of_d_exact(1.0, gamma, epsilon);
    if s < lo || s > hi {
        return Err(CoreError::PathRange { s, lo, hi });
    }
    if s == lo {
        return Ok(-1.0);
    }
    if s == hi {
        return Ok(1.0);
    }
    find_root_bracketed(
        |d| s_of_d_exact(d, gamma, epsilon) - s,
        -1.0,
        1.0,
        1e-10,
        200,
    )
}

/// Sampled path relation for one (gamma, epsilon); S is verified
/// non-decreasing at build time.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTable {
    pub gamma: f64,
    pub epsilon: f64,
    /// (D, S) samples with D strictly increasing.
    pub samples: Vec<(f64, f64)>,
}

/// Tabulates S(D) on `n >= 2` uniform D samples. A decreasing step would
/// falsify the one-to-one correspondence and aborts the build.
pub fn build_path(gamma: f64, epsilon: f64, n: usize) -> Result<PathTable> {
    check_dimensionless(gamma, epsilon)?;
    if n < 2 {
        return Err(CoreError::InvalidParameter {
            name: "n",
            value: n as f64,
            requirement: ">= 2",
        });
    }
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let d = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
        samples.push((d, s_of_d_exact(d, gamma, epsilon)));
    }
    for w in samples.windows(2) {
        let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
        if slope < -1e-10 {
            return Err(CoreError::NonMonotonic { d: w[1].0, slope });
        }
    }
    Ok(PathTable {
        gamma,
        epsilon,
        samples,
    })
}

impl PathTable {
    /// Attainable S range [S(-1), S(1)].
    pub fn s_range(&self) -> (f64, f64) {
        (
            self.samples.first().expect("non-empty table").1,
            self.samples.last().expect("non-empty table").1,
        )
    }

    /// The path position D = x/a at dimensionless time s.
    pub fn position_at(&self, s: f64) -> Result<f64> {
        invert_path(self.gamma, self.epsilon, s)
    }

    /// Maps the table onto dimensional (tau1, x) rows for a concrete barrier
    /// and mean momentum: tau1 = S m / (k0 lambda), x = D a.
    pub fn dimensional_samples(&self, b: &BarrierParams, k0: f64) -> Result<Vec<(f64, f64)>> {
        let lambda = scattering::kappa(k0, b)?;
        Ok(self
            .samples
            .iter()
            .map(|&(d, s)| (s * b.mass / (k0 * lambda), d * b.a))
            .collect())
    }
}

/// Exact interior velocity dD/dS = 1/(dS/dD).
pub fn hartmann_velocity(d: f64, gamma: f64, epsilon: f64) -> f64 {
    1.0 / s_of_d_derivative(d, gamma, epsilon)
}

/// Opaque-barrier asymptote e^{2 gamma (1-D)} / (8 gamma^2 epsilon (1-D)).
pub fn hartmann_asymptote(d: f64, gamma: f64, epsilon: f64) -> f64 {
    (2.0 * gamma * (1.0 - d)).exp() / (8.0 * gamma * gamma * epsilon * (1.0 - d))
}

// ---------------------------------------------------------------------------
// Classical limit in allowed regions
// ---------------------------------------------------------------------------

/// Travel time tau = m int_{x0}^{x} dx' / sqrt(k0^2 - 2 m V(x')) through a
/// classically allowed piecewise-constant landscape. Segment sums are exact;
/// crossing a turning point is a domain error.
pub fn allowed_region_time(
    x: f64,
    x0: f64,
    k0: f64,
    mass: f64,
    potential: &PiecewisePotential,
) -> Result<f64> {
    if !(k0 > 0.0) {
        return Err(CoreError::InvalidParameter {
            name: "k0",
            value: k0,
            requirement: "> 0",
        });
    }
    let (lo, hi) = if x0 <= x { (x0, x) } else { (x, x0) };
    let sign = if x0 <= x { 1.0 } else { -1.0 };
    // breakpoints of constant-momentum stretches inside [lo, hi]
    let mut cuts = vec![lo];
    for s in potential.segments() {
        for &edge in &[s.x_lo, s.x_hi] {
            if edge > lo && edge < hi {
                cuts.push(edge);
            }
        }
    }
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    let mut tau = 0.0;
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let p2 = k0 * k0 - 2.0 * mass * potential.value(mid);
        if p2 <= 0.0 {
            return Err(CoreError::TurningPointCrossed { x: mid });
        }
        tau += mass * (w[1] - w[0]) / p2.sqrt();
    }
    Ok(sign * tau)
}

// ---------------------------------------------------------------------------
// Peak extraction
// ---------------------------------------------------------------------------

/// Located peak of a tau-indexed density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauPeak {
    pub tau: f64,
    pub density: f64,
}

/// Grid scan over [lo, hi] at `step` with parabolic refinement of the peak;
/// ties break toward the smaller tau. Flags densities whose variation over
/// the window is below 1e-6 of the maximum.
pub fn argmax_tau<F: FnMut(f64) -> f64>(lo: f64, hi: f64, step: f64, mut density: F) -> Result<TauPeak> {
    if !(step > 0.0 && hi > lo) {
        return Err(CoreError::InvalidParameter {
            name: "step",
            value: step,
            requirement: "> 0 with hi > lo",
        });
    }
    let n = ((hi - lo) / step).ceil() as usize + 1;
    let mut values = Vec::with_capacity(n);
    let mut best = 0usize;
    for i in 0..n {
        let tau = (lo + i as f64 * step).min(hi);
        let p = density(tau);
        if p > values.get(best).copied().unwrap_or(f64::NEG_INFINITY) {
            best = i;
        }
        values.push(p);
    }
    let max = values[best];
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || (max - min) < 1e-6 * max {
        return Err(CoreError::FlatDensity {
            prominence: if max > 0.0 { (max - min) / max } else { 0.0 },
        });
    }
    let tau_best = (lo + best as f64 * step).min(hi);
    if best == 0 || best == n - 1 {
        return Ok(TauPeak {
            tau: tau_best,
            density: max,
        });
    }
    let (pm, p0, pp) = (values[best - 1], values[best], values[best + 1]);
    let curv = pm - 2.0 * p0 + pp;
    if curv >= 0.0 {
        return Ok(TauPeak {
            tau: tau_best,
            density: max,
        });
    }
    let shift = 0.5 * (pm - pp) / curv;
    Ok(TauPeak {
        tau: tau_best + shift * step,
        density: p0 - 0.25 * (pm - pp) * shift,
    })
}
