//! Initial-state construction and time evolution, by direct momentum
//! quadrature over the exact scattering eigenfunctions and by the
//! narrow-band saddle-point approximation.

use num_complex::Complex64;

use crate::error::{Convergence, CoreError, Result, Warning};
use crate::numerics::GaussLegendre;
use crate::quasiclassical;
use crate::scattering::{self, BarrierParams};

const SQRT_2PI: f64 = 2.5066282746310002;
/// Default number of quadrature nodes across the momentum band.
pub const DEFAULT_NODES: usize = 257;
/// Half-width of the momentum band in units of sigma_p.
pub const DEFAULT_BAND_SIGMAS: f64 = 6.0;

/// Envelope family of the initial packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Envelope {
    Gaussian,
}

/// Initial state psi_0(x) = phi(x - x0) e^{i k0 (x - x0)}: centre `x0`, mean
/// momentum `k0 > 0` and momentum spread `sigma_p` (standard deviation of
/// |phi-tilde|^2, so sigma_x = 1/(2 sigma_p)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavePacketSpec {
    pub x0: f64,
    pub k0: f64,
    pub sigma_p: f64,
    pub envelope: Envelope,
}

impl WavePacketSpec {
    pub fn gaussian(x0: f64, k0: f64, sigma_p: f64) -> Result<Self> {
        if !(k0 > 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "k0",
                value: k0,
                requirement: "> 0",
            });
        }
        if !(sigma_p > 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "sigma_p",
                value: sigma_p,
                requirement: "> 0",
            });
        }
        Ok(Self {
            x0,
            k0,
            sigma_p,
            envelope: Envelope::Gaussian,
        })
    }

    pub fn sigma_x(&self) -> f64 {
        1.0 / (2.0 * self.sigma_p)
    }

    /// Checks the packet against a barrier: the centre must start left of
    /// the barrier; narrowness conditions downgrade to warnings.
    pub fn validate_against(&self, b: &BarrierParams) -> Result<Vec<Warning>> {
        if !(self.x0 < -b.a) {
            return Err(CoreError::InvalidParameter {
                name: "x0",
                value: self.x0,
                requirement: "< -a (packet starts left of the barrier)",
            });
        }
        let mut warnings = Vec::new();
        let ratio = self.sigma_p / self.k0;
        if ratio > 0.1 {
            warnings.push(Warning::BroadMomentumSpread { ratio });
        }
        let separation = (self.x0 + b.a).abs() / self.sigma_x();
        if separation < 3.0 {
            warnings.push(Warning::PacketNearBarrier {
                separation_sigmas: separation,
            });
        }
        Ok(warnings)
    }

    /// Position-space envelope phi(s), unit L2 norm.
    pub fn envelope_position(&self, s: f64) -> f64 {
        match self.envelope {
            Envelope::Gaussian => {
                let sp2 = self.sigma_p * self.sigma_p;
                (2.0 * sp2 / std::f64::consts::PI).powf(0.25) * (-sp2 * s * s).exp()
            }
        }
    }

    /// Momentum-space envelope phi-tilde(p), unit L2 norm.
    pub fn envelope_momentum(&self, p: f64) -> f64 {
        match self.envelope {
            Envelope::Gaussian => {
                let sp2 = self.sigma_p * self.sigma_p;
                (2.0 * std::f64::consts::PI * sp2).powf(-0.25)
                    * (-p * p / (4.0 * sp2)).exp()
            }
        }
    }
}

/// Momentum amplitude psi-tilde_0(k) = phi-tilde(k - k0) e^{-i k x0}.
pub fn momentum_amplitude(spec: &WavePacketSpec, k: f64) -> Complex64 {
    Complex64::from_polar(spec.envelope_momentum(k - spec.k0), -k * spec.x0)
}

/// Quadrature nodes and weights covering the packet's momentum band,
/// truncated to k > 0 (and optionally capped below the barrier top).
#[derive(Debug, Clone)]
pub struct MomentumGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub truncation: Option<Warning>,
}

impl MomentumGrid {
    pub fn for_spec(spec: &WavePacketSpec, n: usize) -> Self {
        Self::build(spec, n, f64::INFINITY)
    }

    /// Band capped at `k_max` (e.g. the tunneling threshold sqrt(2 m V0)).
    pub fn for_spec_capped(spec: &WavePacketSpec, n: usize, k_max: f64) -> Self {
        Self::build(spec, n, k_max)
    }

    fn build(spec: &WavePacketSpec, n: usize, k_max: f64) -> Self {
        let lo = (spec.k0 - DEFAULT_BAND_SIGMAS * spec.sigma_p).max(1e-12 * spec.k0);
        let requested_hi = spec.k0 + DEFAULT_BAND_SIGMAS * spec.sigma_p;
        let hi = requested_hi.min(k_max);
        let truncation = (hi < requested_hi).then_some(Warning::GridTruncated {
            requested_max: requested_hi,
            clamped_max: hi,
        });
        let (nodes, weights) = GaussLegendre::new(n).mapped(lo, hi);
        Self {
            nodes,
            weights,
            truncation,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral of |phi-tilde|^2 over the band; ~1 for an untruncated grid.
    pub fn envelope_norm(&self, spec: &WavePacketSpec) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&k, &w)| {
                let e = spec.envelope_momentum(k - spec.k0);
                w * e * e
            })
            .sum()
    }
}

/// Exact evolution psi_tau(x) = int dk psi-tilde_0(k) f_{k+}(x) e^{-i eps_k tau}
/// on a caller-supplied momentum grid.
pub fn evolve_exact_with(
    grid: &MomentumGrid,
    spec: &WavePacketSpec,
    b: &BarrierParams,
    x: f64,
    tau: f64,
) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (&k, &w) in grid.nodes.iter().zip(&grid.weights) {
        let f = scattering::eigenfunction_plus(k, x, b)?;
        let phase = Complex64::from_polar(1.0, -k * k / (2.0 * b.mass) * tau);
        acc += w * momentum_amplitude(spec, k) * f * phase;
    }
    Ok(acc)
}

/// Exact evolution on the default grid. Valid on both sides of the barrier.
pub fn evolve_exact(
    spec: &WavePacketSpec,
    b: &BarrierParams,
    x: f64,
    tau: f64,
) -> Result<Complex64> {
    let grid = MomentumGrid::for_spec(spec, DEFAULT_NODES);
    evolve_exact_with(&grid, spec, b, x, tau)
}

/// Exact evolution with a node-doubling convergence check (relative change
/// above 1e-6 is flagged, not fatal).
pub fn evolve_exact_checked(
    spec: &WavePacketSpec,
    b: &BarrierParams,
    x: f64,
    tau: f64,
) -> Result<(Complex64, Convergence)> {
    let coarse = evolve_exact_with(&MomentumGrid::for_spec(spec, DEFAULT_NODES), spec, b, x, tau)?;
    let fine = evolve_exact_with(
        &MomentumGrid::for_spec(spec, 2 * DEFAULT_NODES + 1),
        spec,
        b,
        x,
        tau,
    )?;
    let scale = fine.norm().max(1e-300);
    let rel = (fine - coarse).norm() / scale;
    let conv = if rel <= 1e-6 {
        Convergence::Converged
    } else {
        Convergence::Unconverged { rel_change: rel }
    };
    Ok((fine, conv))
}

/// Saddle-point evolution: the envelope rides the phase-derivative surface,
/// psi_tau(x) ~ sqrt(2 pi) |f_{k0+}(x)| phi[omega_{k0}(x) - x0 - k0 tau / m]
/// e^{i(theta_{k0}(x) - k0 x0 - eps_{k0} tau)}. Valid inside the barrier and
/// beyond it (x >= -a); the incident-plus-reflected region has no single
/// stationary branch.
pub fn evolve_saddle(
    spec: &WavePacketSpec,
    b: &BarrierParams,
    x: f64,
    tau: f64,
) -> Result<Complex64> {
    let k0 = spec.k0;
    let (omega, theta, modulus) = if b.is_trivial() {
        (x, k0 * x, 1.0 / SQRT_2PI)
    } else if x > b.a {
        let phi = quasiclassical::transmission_phase(k0, b)?;
        let phi_prime = quasiclassical::transmission_phase_derivative(k0, b)?;
        let t = scattering::transmission_amplitude(k0, b)?;
        (x + phi_prime, k0 * x + phi, t.norm() / SQRT_2PI)
    } else if x >= -b.a {
        let data = quasiclassical::phase_data(k0, x, b)?;
        (data.omega, data.theta, data.r.exp())
    } else {
        return Err(CoreError::OutsideBarrier { x, a: b.a });
    };
    let envelope = spec.envelope_position(omega - spec.x0 - k0 * tau / b.mass);
    let phase = theta - k0 * spec.x0 - k0 * k0 / (2.0 * b.mass) * tau;
    Ok(Complex64::from_polar(SQRT_2PI * modulus * envelope, phase))
}

/// Born density |psi|^2.
pub fn born_density(psi: Complex64) -> f64 {
    psi.norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quasiclassical::{argmax_tau, phase_time};
    use approx::assert_abs_diff_eq;

    fn free_barrier() -> BarrierParams {
        BarrierParams::new(0.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn momentum_amplitude_centre() {
        let spec = WavePacketSpec::gaussian(-40.0, 1.0, 0.05).unwrap();
        let amp = momentum_amplitude(&spec, spec.k0);
        assert_abs_diff_eq!(amp.norm(), spec.envelope_momentum(0.0), epsilon = 1e-15);
        let expected_phase = -spec.k0 * spec.x0;
        assert_abs_diff_eq!(
            (amp / Complex64::from_polar(1.0, expected_phase)).arg(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn momentum_amplitude_normalized_on_band() {
        let spec = WavePacketSpec::gaussian(-40.0, 1.0, 0.05).unwrap();
        let grid = MomentumGrid::for_spec(&spec, DEFAULT_NODES);
        assert!(grid.truncation.is_none());
        assert!((grid.envelope_norm(&spec) - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn momentum_amplitude_three_sigma_density() {
        let spec = WavePacketSpec::gaussian(-40.0, 1.0, 0.01).unwrap();
        let centre = momentum_amplitude(&spec, spec.k0).norm_sqr();
        let wing = momentum_amplitude(&spec, spec.k0 + 3.0 * spec.sigma_p).norm_sqr();
        assert_abs_diff_eq!(wing / centre, (-4.5f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn spec_validation() {
        assert!(WavePacketSpec::gaussian(-40.0, -1.0, 0.05).is_err());
        let b = BarrierParams::new(2.0, 1.0, 1.0).unwrap();
        let broad = WavePacketSpec::gaussian(-40.0, 1.0, 0.2).unwrap();
        let warnings = broad.validate_against(&b).unwrap();
        assert!(warnings
            .iter()
            .any(|w| matches!(w, Warning::BroadMomentumSpread { .. })));
        let near = WavePacketSpec::gaussian(-2.0, 1.0, 0.05).unwrap();
        assert!(near
            .validate_against(&b)
            .unwrap()
            .iter()
            .any(|w| matches!(w, Warning::PacketNearBarrier { .. })));
        let inside = WavePacketSpec::gaussian(0.0, 1.0, 0.05).unwrap();
        assert!(inside.validate_against(&b).is_err());
    }

    #[test]
    fn initial_condition_reproduced() {
        let spec = WavePacketSpec::gaussian(-30.0, 1.0, 0.05).unwrap();
        let b = free_barrier();
        let psi = evolve_exact(&spec, &b, spec.x0, 0.0).unwrap();
        let expected = spec.envelope_position(0.0);
        assert!((psi.norm() - expected).abs() / expected < 1e-9);
        // and one sigma away from the centre
        let psi = evolve_exact(&spec, &b, spec.x0 + spec.sigma_x(), 0.0).unwrap();
        let expected = spec.envelope_position(spec.sigma_x());
        assert!((psi.norm() - expected).abs() / expected < 1e-9);
    }

    #[test]
    fn free_packet_moves_ballistically() {
        let spec = WavePacketSpec::gaussian(-30.0, 1.0, 0.05).unwrap();
        let b = free_barrier();
        let tau = 40.0;
        let centre = spec.x0 + spec.k0 * tau;
        let at_centre = born_density(evolve_exact(&spec, &b, centre, tau).unwrap());
        for dx in [-0.5, 0.5] {
            let off = born_density(evolve_exact(&spec, &b, centre + dx * spec.sigma_x(), tau).unwrap());
            assert!(off < at_centre);
        }
    }

    #[test]
    fn free_norm_is_conserved() {
        let spec = WavePacketSpec::gaussian(-30.0, 1.0, 0.05).unwrap();
        let b = free_barrier();
        let rule = crate::numerics::GaussLegendre::new(600);
        let grid = MomentumGrid::for_spec(&spec, DEFAULT_NODES);
        let mut norms = Vec::new();
        for tau in [0.0, 25.0] {
            let centre = spec.x0 + spec.k0 * tau;
            let norm = rule.integrate(centre - 90.0, centre + 90.0, |x| {
                born_density(evolve_exact_with(&grid, &spec, &b, x, tau).unwrap())
            });
            norms.push(norm);
        }
        assert!((norms[0] - 1.0).abs() < 1e-4, "norm(0) = {}", norms[0]);
        assert!((norms[1] - norms[0]).abs() < 1e-4);
    }

    #[test]
    fn convergence_check_reports_converged() {
        let spec = WavePacketSpec::gaussian(-30.0, 1.0, 0.05).unwrap();
        let b = free_barrier();
        let (_, conv) = evolve_exact_checked(&spec, &b, -5.0, 25.0).unwrap();
        assert!(conv.is_converged());
    }

    #[test]
    fn transmitted_peak_arrives_at_phase_time() {
        // argmax_tau |psi_tau(a)|^2 = t_ph(k0) - m (x0 + a)/k0, up to the
        // scan resolution, for a narrow packet
        let (b, k0) = BarrierParams::from_dimensionless(2.0, 0.1, 1.0, 1.0).unwrap();
        let spec = WavePacketSpec::gaussian(-b.a - 3.0 * 250.0 / k0 * 0.5, k0, 0.002 * k0).unwrap();
        // sigma_x = 250/k0; centre 3 sigma_x left of the barrier
        assert!(spec.validate_against(&b).unwrap().is_empty());
        let grid = MomentumGrid::for_spec(&spec, DEFAULT_NODES);
        let expected = phase_time(k0, &b).unwrap() - b.mass * (spec.x0 + b.a) / k0;
        let step = 0.02 * b.mass * b.a / k0;
        let peak = argmax_tau(expected - 20.0, expected + 20.0, step, |tau| {
            born_density(evolve_exact_with(&grid, &spec, &b, b.a, tau).unwrap())
        })
        .unwrap();
        assert!(
            (peak.tau - expected).abs() <= 2.0 * step,
            "peak at {} expected {expected}",
            peak.tau
        );
    }

    #[test]
    fn saddle_free_limit_is_ballistic() {
        let spec = WavePacketSpec::gaussian(-30.0, 1.0, 0.01).unwrap();
        let b = free_barrier();
        for (x, tau) in [(2.0, 32.0), (5.0, 35.0), (5.0, 20.0)] {
            let saddle = evolve_saddle(&spec, &b, x, tau).unwrap();
            let expected = spec.envelope_position(x - spec.x0 - spec.k0 * tau);
            assert_abs_diff_eq!(saddle.norm(), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn saddle_peaks_exactly_on_the_phase_derivative_surface() {
        let (b, k0) = BarrierParams::from_dimensionless(2.0, 0.1, 1.0, 1.0).unwrap();
        let spec = WavePacketSpec::gaussian(-200.0, k0, 0.01 * k0).unwrap();
        let x = 0.3;
        let omega = crate::quasiclassical::omega(k0, x, &b).unwrap();
        let tau_expected = (omega - spec.x0) * b.mass / k0;
        let step = 0.02 * b.mass * b.a / k0;
        let peak = argmax_tau(tau_expected - 10.0, tau_expected + 10.0, step, |tau| {
            born_density(evolve_saddle(&spec, &b, x, tau).unwrap())
        })
        .unwrap();
        assert!((peak.tau - tau_expected).abs() <= step);
    }

    #[test]
    fn saddle_tracks_exact_density_inside_barrier() {
        // narrow-band agreement on the interior, a few percent at worst
        let (b, k0) = BarrierParams::from_dimensionless(2.0, 0.1, 1.0, 1.0).unwrap();
        let sigma_p = 0.01 * k0;
        let sigma_x = 1.0 / (2.0 * sigma_p);
        let spec = WavePacketSpec::gaussian(-b.a - 4.0 * sigma_x, k0, sigma_p).unwrap();
        let grid = MomentumGrid::for_spec(&spec, DEFAULT_NODES);
        let x = 0.0;
        let omega = crate::quasiclassical::omega(k0, x, &b).unwrap();
        let tau_peak = (omega - spec.x0) * b.mass / k0;
        let mut max_exact: f64 = 0.0;
        let mut max_diff: f64 = 0.0;
        for i in -10..=10 {
            let tau = tau_peak + i as f64 * 0.2 * sigma_x * b.mass / k0;
            let exact = born_density(evolve_exact_with(&grid, &spec, &b, x, tau).unwrap());
            let saddle = born_density(evolve_saddle(&spec, &b, x, tau).unwrap());
            max_exact = max_exact.max(exact);
            max_diff = max_diff.max((exact - saddle).abs());
        }
        assert!(max_diff / max_exact <= 0.02, "rel error {}", max_diff / max_exact);
    }

    #[test]
    fn saddle_rejects_incident_side() {
        let (b, k0) = BarrierParams::from_dimensionless(2.0, 0.1, 1.0, 1.0).unwrap();
        let spec = WavePacketSpec::gaussian(-200.0, k0, 0.01 * k0).unwrap();
        assert!(matches!(
            evolve_saddle(&spec, &b, -2.0, 10.0),
            Err(CoreError::OutsideBarrier { .. })
        ));
    }

    #[test]
    fn born_density_arithmetic() {
        assert_eq!(born_density(Complex64::new(1.0, 0.0)), 1.0);
        assert_eq!(born_density(Complex64::new(0.0, 1.0)), 1.0);
        assert_abs_diff_eq!(
            born_density(Complex64::new(0.3, -0.4)),
            0.25,
            epsilon = 1e-15
        );
    }
}
