//! Arrival-time densities, post-selected two-detector densities and
//! integrated detection/non-detection probabilities in the ideal-detector
//! limit.
//!
//! Every double-momentum density is assembled as a hermitian quadratic form
//! v* K v with a real symmetric kernel K, so the result is real by
//! construction. Normalization constants are fixed by the free-particle
//! conventions: a barrier-free run gives unit total detection probability on
//! either detector, for any mass.

use num_complex::Complex64;

use crate::error::{Convergence, CoreError, Result, Warning};
use crate::numerics::GaussLegendre;
use crate::scattering::{self, BarrierParams};
use crate::wavepacket::{momentum_amplitude, MomentumGrid, WavePacketSpec, DEFAULT_NODES};

/// Outer-grid size for the joint two-time density (its kernel carries an
/// inner quadrature, so it runs on a leaner band grid).
pub const JOINT_OUTER_NODES: usize = 97;
/// Inner nodes of the energy-shell kernel quadrature.
pub const JOINT_INNER_NODES: usize = 65;

/// Detector placement: one inside or at the barrier, one beyond it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorPair {
    pub x_first: f64,
    pub l_second: f64,
}

impl DetectorPair {
    pub fn new(x_first: f64, l_second: f64, b: &BarrierParams) -> Result<Self> {
        if !(l_second > b.a) {
            return Err(CoreError::InvalidParameter {
                name: "l_second",
                value: l_second,
                requirement: "> a (beyond the barrier)",
            });
        }
        if !(x_first < l_second) {
            return Err(CoreError::InvalidParameter {
                name: "x_first",
                value: x_first,
                requirement: "< l_second",
            });
        }
        Ok(Self { x_first, l_second })
    }
}

/// Momentum band for density quadratures, kept strictly below the barrier
/// top so interior kernels stay in the tunneling regime.
fn band_grid(spec: &WavePacketSpec, b: &BarrierParams, n: usize) -> MomentumGrid {
    if b.is_trivial() {
        MomentumGrid::for_spec(spec, n)
    } else {
        let cap = b.ksq_threshold().sqrt() * (1.0 - 1e-9);
        MomentumGrid::for_spec_capped(spec, n, cap)
    }
}

fn eps_k(k: f64, mass: f64) -> f64 {
    k * k / (2.0 * mass)
}

/// v* K v for real symmetric K given by `kernel(i, j)`.
fn hermitian_form<K: FnMut(usize, usize) -> f64>(coeffs: &[Complex64], mut kernel: K) -> f64 {
    let n = coeffs.len();
    let mut acc = 0.0;
    for i in 0..n {
        acc += kernel(i, i) * coeffs[i].norm_sqr();
        for j in (i + 1)..n {
            acc += 2.0 * kernel(i, j) * (coeffs[i].conj() * coeffs[j]).re;
        }
    }
    acc
}

/// Weighted coefficients w_i psi0(k_i) f_{k_i+}(x) e^{-i eps_i tau}.
fn density_coefficients(
    grid: &MomentumGrid,
    spec: &WavePacketSpec,
    b: &BarrierParams,
    x: f64,
    tau: f64,
) -> Result<Vec<Complex64>> {
    grid.nodes
        .iter()
        .zip(&grid.weights)
        .map(|(&k, &w)| {
            let f = scattering::eigenfunction_plus(k, x, b)?;
            let phase = Complex64::from_polar(1.0, -eps_k(k, b.mass) * tau);
            Ok(w * momentum_amplitude(spec, k) * f * phase)
        })
        .collect()
}

fn first_detector_density_on(
    grid: &MomentumGrid,
    spec: &WavePacketSpec,
    b: &BarrierParams,
    x: f64,
    tau: f64,
) -> Result<f64> {
    let coeffs = density_coefficients(grid, spec, b, x, tau)?;
    let m = b.mass;
    let nodes = &grid.nodes;
    Ok(hermitian_form(&coeffs, |i, j| {
        ((eps_k(nodes[i], m) + eps_k(nodes[j], m)) / m).sqrt()
    }))
}

/// Probability density that the first detector at `x` fires at time `tau`,
/// irrespective of any later detection. Free particles integrate to one.
pub fn first_detector_density(
    x: f64,
    tau: f64,
    spec: &WavePacketSpec,
    b: &BarrierParams,
) -> Result<f64> {
    let grid = band_grid(spec, b, DEFAULT_NODES);
    first_detector_density_on(&grid, spec, b, x, tau)
}

/// `first_detector_density` over many times with the band grid built once.
pub fn first_detector_tau_profile(
    x: f64,
    taus: &[f64],
    spec: &WavePacketSpec,
    b: &BarrierParams,
) -> Result<Vec<f64>> {
    let grid = band_grid(spec, b, DEFAULT_NODES);
    taus.iter()
        .map(|&tau| first_detector_density_on(&grid, spec, b, x, tau))
        .collect()
}

/// Node-doubling convergence check for the first-detector density.
pub fn first_detector_density_checked(
    x: f64,
    tau: f64,
    spec: &WavePacketSpec,
    b: &BarrierParams,
) -> Result<(f64, Convergence)> {
    let coarse = first_detector_density_on(&band_grid(spec, b, DEFAULT_NODES), spec, b, x, tau)?;
    let fine =
        first_detector_density_on(&band_grid(spec, b, 2 * DEFAULT_NODES + 1), spec, b, x, tau)?;
    Ok((fine, relative_convergence(coarse, fine)))
}

fn relative_convergence(coarse: f64, fine: f64) -> Convergence {
    let rel = (fine - coarse).abs() / fine.abs().max(1e-300);
    if rel <= 1e-6 {
        Convergence::Converged
    } else {
        Convergence::Unconverged { rel_change: rel }
    }
}

/// Arrival-time density P(L, t) at a detector beyond the barrier. This is
/// the first-detector density restricted to L > a, where the eigenfunction
/// reduces to the transmitted wave.
pub fn toa_density(l: f64, t: f64, spec: &WavePacketSpec, b: &BarrierParams) -> Result<f64> {
    if !(l > b.a) {
        return Err(CoreError::InvalidParameter {
            name: "l",
            value: l,
            requirement: "> a (detector beyond the barrier)",
        });
    }
    first_detector_density(l, t, spec, b)
}

/// Arrival-time density over many times, grid built once.
pub fn toa_tau_profile(
    l: f64,
    times: &[f64],
    spec: &WavePacketSpec,
    b: &BarrierParams,
) -> Result<Vec<f64>> {
    if !(l > b.a) {
        return Err(CoreError::InvalidParameter {
            name: "l",
            value: l,
            requirement: "> a (detector beyond the barrier)",
        });
    }
    first_detector_tau_profile(l, times, spec, b)
}

/// Total transmission probability: int dk |T_k|^2 |psi0(k)|^2.
pub fn total_transmission_probability(spec: &WavePacketSpec, b: &BarrierParams) -> Result<f64> {
    let grid = band_grid(spec, b, DEFAULT_NODES);
    let mut acc = 0.0;
    for (&k, &w) in grid.nodes.iter().zip(&grid.weights) {
        let t2 = scattering::amplitudes(k, b)?.t.norm_sqr();
        acc += w * t2 * momentum_amplitude(spec, k).norm_sqr();
    }
    Ok(acc)
}

/// T_k f*_{k+}(x) + R_k f*_{k-}(x): the propagation factor from the interior
/// point to the far detector, common to all post-selected kernels.
fn propagation_factor(k: f64, x: f64, b: &BarrierParams) -> Result<Complex64> {
    let amps = scattering::amplitudes(k, b)?;
    let fp = scattering::eigenfunction_plus(k, x, b)?;
    let fm = scattering::eigenfunction_minus(k, x, b)?;
    Ok(amps.t * fp.conj() + amps.r * fm.conj())
}

/// Post-selected single-energy kernel F+(x, E): the energy delta of the
/// two-detector kernel resolved analytically onto the shell eps_k = E with
/// Jacobian m/k, giving 2 pi (k_E/m) |T* f_{k+}(x) + R* f_{k-}(x)|^2.
pub fn postselected_kernel(x: f64, e: f64, b: &BarrierParams) -> Result<f64> {
    if b.is_trivial() {
        if !(e > 0.0) {
            return Err(CoreError::EnergyOutOfRange { e, v0: b.v0 });
        }
        // free limit: the factor collapses to |f|^2 = 1/(2 pi)
        return Ok((2.0 * b.mass * e).sqrt() / b.mass);
    }
    if x.abs() > b.a {
        return Err(CoreError::OutsideBarrier { x, a: b.a });
    }
    if !(e > 0.0 && e < b.v0) {
        return Err(CoreError::EnergyOutOfRange { e, v0: b.v0 });
    }
    let k_e = (2.0 * b.mass * e).sqrt();
    let g = propagation_factor(k_e, x, b)?;
    Ok(2.0 * std::f64::consts::PI * (k_e / b.mass) * g.norm_sqr())
}

fn postselected_kernel_matrix(
    grid: &MomentumGrid,
    x: f64,
    b: &BarrierParams,
) -> Result<Vec<f64>> {
    let n = grid.nodes.len();
    let m = b.mass;
    let mut kernel = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let e = 0.5 * (eps_k(grid.nodes[i], m) + eps_k(grid.nodes[j], m));
            let v = postselected_kernel(x, e, b)?;
            kernel[i * n + j] = v;
            kernel[j * n + i] = v;
        }
    }
    Ok(kernel)
}

/// Post-selected density P_ps(x, tau): probability density for the interior
/// detector to fire at tau given a later crossing, as a hermitian form over
/// the band with the F+ kernel.
pub fn postselected_density(
    x: f64,
    tau: f64,
    spec: &WavePacketSpec,
    b: &BarrierParams,
) -> Result<f64> {
    postselected_tau_profile(x, &[tau], spec, b).map(|v| v[0])
}

/// P_ps(x, tau) over many times; the tau-independent kernel is built once.
pub fn postselected_tau_profile(
    x: f64,
    taus: &[f64],
    spec: &WavePacketSpec,
    b: &BarrierParams,
) -> Result<Vec<f64>> {
    let grid = band_grid(spec, b, DEFAULT_NODES);
    let kernel = postselected_kernel_matrix(&grid, x, b)?;
    let n = grid.nodes.len();
    taus.iter()
        .map(|&tau| {
            let coeffs = density_coefficients(&grid, spec, b, x, tau)?;
            Ok(hermitian_form(&coeffs, |i, j| kernel[i * n + j]))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Joint two-time density
// ---------------------------------------------------------------------------

/// Propagation kernel F(L, dt; x; E): the energy-shell integral parametrized
/// by the angle k1 = K sin(theta), k2 = K cos(theta) with K = sqrt(4 m E),
/// which removes the 1/k2 endpoint singularity of the momentum measure and
/// makes the result real by pairing (k1, k2) with (k2, k1). Normalized so
/// that int dt F = F+(x, E) exactly.
fn joint_kernel(
    l: f64,
    dt: f64,
    x: f64,
    e: f64,
    b: &BarrierParams,
    rule: &GaussLegendre,
) -> Result<f64> {
    let m = b.mass;
    let cap = (4.0 * m * e).sqrt();
    let (thetas, weights) = rule.mapped(0.0, std::f64::consts::FRAC_PI_4);
    let mut acc = 0.0;
    for (&th, &w) in thetas.iter().zip(&weights) {
        let k1 = cap * th.sin();
        let k2 = cap * th.cos();
        let g1 = propagation_factor(k1, x, b)?;
        let g2 = propagation_factor(k2, x, b)?;
        let phase = Complex64::from_polar(
            1.0,
            (k1 - k2) * l - (eps_k(k1, m) - eps_k(k2, m)) * dt,
        );
        acc += w * 2.0 * (phase * g1 * g2.conj()).re;
    }
    Ok((2.0 * e / m).powf(1.5) * 2.0 * m * acc)
}

/// Joint density P(x, tau; L, t): first detection at (x, tau), second at
/// (L, t). The most expensive operation here; prefer the profile variants
/// when scanning.
pub fn joint_density(
    x: f64,
    tau: f64,
    l: f64,
    t: f64,
    spec: &WavePacketSpec,
    b: &BarrierParams,
) -> Result<f64> {
    joint_density_with(x, tau, l, t, spec, b, JOINT_OUTER_NODES, JOINT_INNER_NODES)
}

/// Joint density with explicit grid sizes (outer band nodes, inner shell
/// nodes), for convergence studies.
#[allow(clippy::too_many_arguments)]
pub fn joint_density_with(
    x: f64,
    tau: f64,
    l: f64,
    t: f64,
    spec: &WavePacketSpec,
    b: &BarrierParams,
    outer_nodes: usize,
    inner_nodes: usize,
) -> Result<f64> {
    if !(l > b.a) {
        return Err(CoreError::InvalidParameter {
            name: "l",
            value: l,
            requirement: "> a (second detector beyond the barrier)",
        });
    }
    if !b.is_trivial() && x.abs() > b.a {
        return Err(CoreError::OutsideBarrier { x, a: b.a });
    }
    let grid = band_grid(spec, b, outer_nodes);
    let rule = GaussLegendre::new(inner_nodes);
    let coeffs = density_coefficients(&grid, spec, b, x, tau)?;
    let m = b.mass;
    let n = grid.nodes.len();
    // kernel matrix at this (t - tau); symmetric in (i, j) through E
    let mut kernel = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let e = 0.5 * (eps_k(grid.nodes[i], m) + eps_k(grid.nodes[j], m));
            let v = joint_kernel(l, t - tau, x, e, b, &rule)?;
            kernel[i * n + j] = v;
            kernel[j * n + i] = v;
        }
    }
    Ok(hermitian_form(&coeffs, |i, j| kernel[i * n + j]))
}

/// Joint density with a node-doubling check on the inner shell quadrature.
#[allow(clippy::too_many_arguments)]
pub fn joint_density_checked(
    x: f64,
    tau: f64,
    l: f64,
    t: f64,
    spec: &WavePacketSpec,
    b: &BarrierParams,
) -> Result<(f64, Convergence)> {
    let coarse = joint_density_with(x, tau, l, t, spec, b, JOINT_OUTER_NODES, JOINT_INNER_NODES)?;
    let fine = joint_density_with(
        x,
        tau,
        l,
        t,
        spec,
        b,
        JOINT_OUTER_NODES,
        2 * JOINT_INNER_NODES + 1,
    )?;
    Ok((fine, relative_convergence(coarse, fine)))
}

// ---------------------------------------------------------------------------
// Integrated detection bookkeeping
// ---------------------------------------------------------------------------

/// Momentum-band treatment of the integrated probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandMode {
    /// Evaluate every weight at the mean momentum k0.
    Monochromatic,
    /// Integrate the weights over the packet's momentum band.
    Band,
}

/// Integrated detection/non-detection probabilities for the two-detector
/// arrangement. `neither` is defined as the complement, so the four terms
/// sum to one identically; individual terms leaving [0, 1] are reported as
/// warnings (the free-particle limit does so by construction, because
/// `second_only` ignores back-action from the first detector).
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionProbabilities {
    /// Recorded by both detectors.
    pub both: f64,
    /// Recorded by the first detector only.
    pub first_only: f64,
    /// Recorded by the second detector only.
    pub second_only: f64,
    /// Recorded by neither (complement).
    pub neither: f64,
    pub warnings: Vec<Warning>,
}

const PROBABILITY_SLACK: f64 = 1e-8;

/// Appendix-style integrated probabilities at interior position `x`.
/// Normalization absorbs the plane-wave 2 pi factors so that the
/// free-particle case yields unit first-detector and both-detector
/// probabilities.
pub fn joint_detection_probabilities(
    x: f64,
    spec: &WavePacketSpec,
    b: &BarrierParams,
    mode: BandMode,
) -> Result<DetectionProbabilities> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let weight = |k: f64| -> Result<(f64, f64)> {
        let fp = scattering::eigenfunction_plus(k, x, b)?;
        let first = two_pi * fp.norm_sqr();
        let cross = two_pi * propagation_factor(k, x, b)?.norm_sqr();
        Ok((first, cross))
    };
    let (both, first, second_only) = match mode {
        BandMode::Monochromatic => {
            let (first, cross) = weight(spec.k0)?;
            let t2 = scattering::amplitudes(spec.k0, b)?.t.norm_sqr();
            (first * cross, first, t2)
        }
        BandMode::Band => {
            let grid = band_grid(spec, b, DEFAULT_NODES);
            let mut both = 0.0;
            let mut first_tot = 0.0;
            let mut second = 0.0;
            for (&k, &w) in grid.nodes.iter().zip(&grid.weights) {
                let p = w * momentum_amplitude(spec, k).norm_sqr();
                let (first, cross) = weight(k)?;
                both += p * first * cross;
                first_tot += p * first;
                second += p * scattering::amplitudes(k, b)?.t.norm_sqr();
            }
            (both, first_tot, second)
        }
    };
    let first_only = first - both;
    let neither = 1.0 - both - first_only - second_only;
    let mut warnings = Vec::new();
    for (name, value) in [
        ("both", both),
        ("first_only", first_only),
        ("second_only", second_only),
        ("neither", neither),
    ] {
        if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&value) {
            warnings.push(Warning::ProbabilityOutOfRange { name, value });
        }
    }
    Ok(DetectionProbabilities {
        both,
        first_only,
        second_only,
        neither,
        warnings,
    })
}

/// Exit-point consistency factor |1 + e^{-2 i k0 a} R*_{k0}|^2: the constant
/// by which post-selection rescales the single-detector density at x = a.
pub fn exit_point_ratio(spec: &WavePacketSpec, b: &BarrierParams) -> Result<f64> {
    if b.is_trivial() {
        return Ok(1.0);
    }
    let r = scattering::amplitudes(spec.k0, b)?.r;
    let z = Complex64::from_polar(1.0, -2.0 * spec.k0 * b.a) * r.conj();
    Ok((Complex64::new(1.0, 0.0) + z).norm_sqr())
}

// ---------------------------------------------------------------------------
// Position post-selection (von Neumann scheme)
// ---------------------------------------------------------------------------

/// Density of the alternative scheme: a position measurement of resolution
/// `smear_width` at time tau, post-selected on barrier crossing,
/// Tr[Pi+ sqrt(P_x) rho_tau sqrt(P_x)]. The position POVM is a normalized
/// Gaussian, so the free-particle case reduces to |psi_tau(x)|^2 as
/// smear_width -> 0. Used to demonstrate that maximizing over x at fixed tau
/// never selects interior points.
pub fn vn_postselected_density(
    x: f64,
    tau: f64,
    spec: &WavePacketSpec,
    b: &BarrierParams,
    smear_width: f64,
) -> Result<f64> {
    if !(smear_width > 0.0) {
        return Err(CoreError::InvalidParameter {
            name: "smear_width",
            value: smear_width,
            requirement: "> 0",
        });
    }
    let potential = scattering::PiecewisePotential::from_barrier(b);
    let m = b.mass;
    // position window and cached psi_tau on its quadrature nodes
    let y_rule = GaussLegendre::new(96);
    let (ys, wy) = y_rule.mapped(x - 4.0 * smear_width, x + 4.0 * smear_width);
    let grid = MomentumGrid::for_spec(spec, DEFAULT_NODES);
    let psi: Vec<Complex64> = ys
        .iter()
        .map(|&y| crate::wavepacket::evolve_exact_with(&grid, spec, b, y, tau))
        .collect::<Result<_>>()?;
    let norm = (2.0 * std::f64::consts::PI).powf(-0.25) / smear_width.sqrt();
    let gvals: Vec<f64> = ys
        .iter()
        .map(|&y| norm * (-(y - x) * (y - x) / (4.0 * smear_width * smear_width)).exp())
        .collect();
    // momentum integral over the crossing-weighted scattering basis
    let k_hi = spec.k0 + 6.0 * spec.sigma_p + 6.0 / smear_width;
    let k_rule = GaussLegendre::new(384);
    let (ks, wk) = k_rule.mapped(1e-9, k_hi);
    let mut acc = 0.0;
    for (&k, &w) in ks.iter().zip(&wk) {
        let t2 = scattering::transfer_matrix_solve(&potential, k, m)?.t.norm_sqr();
        let mut overlap = Complex64::new(0.0, 0.0);
        for ((&y, &wyv), (&g, p)) in ys.iter().zip(&wy).zip(gvals.iter().zip(&psi)) {
            let f = scattering::transfer_matrix_wavefunction(&potential, k, m, y)?;
            overlap += wyv * f.conj() * g * p;
        }
        acc += w * t2 * overlap.norm_sqr();
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Table assembly
// ---------------------------------------------------------------------------

/// Named sample axis of a probability table.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisGrid {
    pub name: String,
    pub values: Vec<f64>,
}

/// Outcome of clamping quadrature noise to the non-negativity floor.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClampReport {
    pub clamped: usize,
    pub worst_negative: f64,
}

/// Clamps small negative quadrature noise to zero. Samples below the noise
/// floor -1e-8 * peak are a genuine positivity violation and rejected.
pub fn clamp_nonnegative(values: &mut [f64]) -> Result<ClampReport> {
    let peak = values.iter().copied().fold(0.0, f64::max);
    let floor = -1e-8 * peak;
    let mut report = ClampReport::default();
    for v in values.iter_mut() {
        if *v < 0.0 {
            if *v < floor {
                return Err(CoreError::InvalidParameter {
                    name: "density",
                    value: *v,
                    requirement: "above the -1e-8 * peak noise floor",
                });
            }
            report.clamped += 1;
            report.worst_negative = report.worst_negative.min(*v);
            *v = 0.0;
        }
    }
    Ok(report)
}

/// Sampled density table on one or more axes (row-major, last axis fastest),
/// with the non-negativity invariant enforced at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable {
    pub axes: Vec<AxisGrid>,
    pub density: Vec<f64>,
    pub clamp: ClampReport,
}

impl ProbabilityTable {
    pub fn new(axes: Vec<AxisGrid>, mut density: Vec<f64>) -> Result<Self> {
        let expected: usize = axes.iter().map(|a| a.values.len()).product();
        if expected != density.len() {
            return Err(CoreError::InvalidParameter {
                name: "density",
                value: density.len() as f64,
                requirement: "length must match the axis product",
            });
        }
        let clamp = clamp_nonnegative(&mut density)?;
        Ok(Self {
            axes,
            density,
            clamp,
        })
    }
}
