//! Stationary scattering data for the square barrier, plus a transfer-matrix
//! oracle for arbitrary piecewise-constant potentials. Units: hbar = 1.
//!
//! The barrier occupies [-a, a] with height V0. In the tunneling regime
//! (0 < k^2 < 2 m V0) the closed forms below use the evanescent decay rate
//! lambda = sqrt(2 m V0 - k^2); opaque barriers (lambda a > 30) are evaluated
//! through scaled exponentials so nothing overflows.

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::numerics::sinhc;

const SQRT_2PI: f64 = 2.5066282746310002;
/// Hyperbolic arguments above this switch to scaled-exponential evaluation.
const LOG_DOMAIN_GAMMA: f64 = 30.0;

/// Square-barrier geometry: height `v0` on [-a, a], particle mass `mass`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierParams {
    pub v0: f64,
    pub a: f64,
    pub mass: f64,
}

impl BarrierParams {
    pub fn new(v0: f64, a: f64, mass: f64) -> Result<Self> {
        if !(v0 >= 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "v0",
                value: v0,
                requirement: ">= 0",
            });
        }
        if !(a >= 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "a",
                value: a,
                requirement: ">= 0",
            });
        }
        if !(mass > 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "mass",
                value: mass,
                requirement: "> 0",
            });
        }
        Ok(Self { v0, a, mass })
    }

    /// Builds the barrier realizing a given opacity gamma = lambda a and
    /// energy ratio epsilon = k0^2/(2 m V0), and returns the matching mean
    /// momentum k0.
    pub fn from_dimensionless(gamma: f64, epsilon: f64, a: f64, mass: f64) -> Result<(Self, f64)> {
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
        let lambda = gamma / a;
        let v0 = lambda * lambda / (2.0 * mass * (1.0 - epsilon));
        let k0 = lambda * (epsilon / (1.0 - epsilon)).sqrt();
        Ok((Self::new(v0, a, mass)?, k0))
    }

    /// 2 m V0, the momentum-squared scale separating tunneling from flight.
    pub fn ksq_threshold(&self) -> f64 {
        2.0 * self.mass * self.v0
    }

    /// A barrier with V0 = 0 or a = 0 scatters nothing.
    pub fn is_trivial(&self) -> bool {
        self.v0 == 0.0 || self.a == 0.0
    }

    /// Opacity gamma(k) = lambda(k) a.
    pub fn gamma(&self, k: f64) -> Result<f64> {
        Ok(kappa(k, self)? * self.a)
    }

    /// Energy ratio epsilon(k) = k^2 / (2 m V0).
    pub fn epsilon(&self, k: f64) -> Result<f64> {
        let t = self.ksq_threshold();
        if t == 0.0 || k * k >= t {
            return Err(CoreError::AboveBarrier {
                ksq: k * k,
                threshold: t,
            });
        }
        Ok(k * k / t)
    }
}

/// Complex transmission/reflection pair at fixed momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringAmplitudes {
    pub k: f64,
    pub t: Complex64,
    pub r: Complex64,
}

impl ScatteringAmplitudes {
    /// | |T|^2 + |R|^2 - 1 |, zero for exact unitarity.
    pub fn unitarity_defect(&self) -> f64 {
        (self.t.norm_sqr() + self.r.norm_sqr() - 1.0).abs()
    }
}

/// Evanescent decay rate lambda = sqrt(2 m V0 - k^2).
pub fn kappa(k: f64, b: &BarrierParams) -> Result<f64> {
    let t = b.ksq_threshold();
    if k * k >= t {
        return Err(CoreError::AboveBarrier {
            ksq: k * k,
            threshold: t,
        });
    }
    Ok((t - k * k).sqrt())
}

fn check_tunneling(k: f64, b: &BarrierParams) -> Result<f64> {
    if !(k > 0.0) {
        return Err(CoreError::InvalidParameter {
            name: "k",
            value: k,
            requirement: "> 0",
        });
    }
    kappa(k, b)
}

/// Both amplitudes at once; T and R share one denominator.
pub fn amplitudes(k: f64, b: &BarrierParams) -> Result<ScatteringAmplitudes> {
    if b.is_trivial() {
        if !(k > 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "k",
                value: k,
                requirement: "> 0",
            });
        }
        return Ok(ScatteringAmplitudes {
            k,
            t: Complex64::new(1.0, 0.0),
            r: Complex64::new(0.0, 0.0),
        });
    }
    let lambda = check_tunneling(k, b)?;
    let a = b.a;
    let gamma = lambda * a;
    let phase = Complex64::from_polar(1.0, -2.0 * k * a);
    if gamma <= LOG_DOMAIN_GAMMA {
        // sinh(2 gamma)/lambda via sinhc keeps the lambda -> 0 threshold finite
        let sinh_over_lambda = 2.0 * a * sinhc(2.0 * gamma);
        let den = Complex64::new(
            (2.0 * gamma).cosh(),
            0.5 * (lambda / k * (2.0 * gamma).sinh() - k * sinh_over_lambda),
        );
        let t = phase / den;
        let r = Complex64::new(0.0, -0.5 * (k / lambda + lambda / k) * (2.0 * gamma).sinh())
            * phase
            / den;
        Ok(ScatteringAmplitudes { k, t, r })
    } else {
        // denominator scaled by 2 exp(-2 gamma)
        let e4 = (-4.0 * gamma).exp();
        let den = Complex64::new(1.0 + e4, 0.5 * (lambda / k - k / lambda) * (1.0 - e4));
        let t = 2.0 * (-2.0 * gamma).exp() * phase / den;
        let r = Complex64::new(0.0, -0.5 * (k / lambda + lambda / k) * (1.0 - e4)) * phase / den;
        Ok(ScatteringAmplitudes { k, t, r })
    }
}

/// Transmission amplitude T_k = e^{-2ika} / [cosh 2 lambda a
/// + (i/2)(lambda/k - k/lambda) sinh 2 lambda a].
pub fn transmission_amplitude(k: f64, b: &BarrierParams) -> Result<Complex64> {
    Ok(amplitudes(k, b)?.t)
}

/// Reflection amplitude, fixed by continuity matching:
/// R_k = -(i/2)(k/lambda + lambda/k) sinh(2 lambda a) T_k e^{... same phase}.
pub fn reflection_amplitude(k: f64, b: &BarrierParams) -> Result<Complex64> {
    Ok(amplitudes(k, b)?.r)
}

/// Right-incident scattering eigenfunction f_{k+}(x), continuous across the
/// barrier edges:
///   x < -a : (e^{ikx} + R e^{-ikx}) / sqrt(2 pi)
///   |x|<=a : e^{ika} T [cosh lambda(a-x) - (ik/lambda) sinh lambda(a-x)] / sqrt(2 pi)
///   x >  a : T e^{ikx} / sqrt(2 pi)
pub fn eigenfunction_plus(k: f64, x: f64, b: &BarrierParams) -> Result<Complex64> {
    if b.is_trivial() {
        if !(k > 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "k",
                value: k,
                requirement: "> 0",
            });
        }
        return Ok(Complex64::from_polar(1.0 / SQRT_2PI, k * x));
    }
    let amps = amplitudes(k, b)?;
    let a = b.a;
    if x < -a {
        let inc = Complex64::from_polar(1.0, k * x);
        let refl = amps.r * Complex64::from_polar(1.0, -k * x);
        Ok((inc + refl) / SQRT_2PI)
    } else if x > a {
        Ok(amps.t * Complex64::from_polar(1.0, k * x) / SQRT_2PI)
    } else {
        Ok(interior_value(k, x, b, &amps))
    }
}

fn interior_value(k: f64, x: f64, b: &BarrierParams, amps: &ScatteringAmplitudes) -> Complex64 {
    let a = b.a;
    let lambda = kappa(k, b).expect("interior_value requires tunneling regime");
    let u = lambda * (a - x);
    let gamma = lambda * a;
    if gamma <= LOG_DOMAIN_GAMMA {
        let bracket = Complex64::new(u.cosh(), -k * (a - x) * sinhc(u));
        amps.t * Complex64::from_polar(1.0, k * a) * bracket / SQRT_2PI
    } else {
        // interior and denominator both scaled: bracket/den * e^{u - 2 gamma}
        let e2u = (-2.0 * u).exp();
        let e4 = (-4.0 * gamma).exp();
        let num = Complex64::new(1.0 + e2u, -(k / lambda) * (1.0 - e2u));
        let den = Complex64::new(1.0 + e4, 0.5 * (lambda / k - k / lambda) * (1.0 - e4));
        let scale = (u - 2.0 * gamma).exp();
        Complex64::from_polar(1.0, -k * a) * num / den * scale / SQRT_2PI
    }
}

/// Left-incident eigenfunction via parity: f_{k-}(x) = f_{k+}(-x).
pub fn eigenfunction_minus(k: f64, x: f64, b: &BarrierParams) -> Result<Complex64> {
    eigenfunction_plus(k, -x, b)
}

// ---------------------------------------------------------------------------
// Piecewise-constant potentials and the transfer-matrix oracle
// ---------------------------------------------------------------------------

/// One constant-height piece of a potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub x_lo: f64,
    pub x_hi: f64,
    pub height: f64,
}

/// Piecewise-constant potential, zero outside the listed segments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PiecewisePotential {
    segments: Vec<Segment>,
}

impl PiecewisePotential {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Segments as (x_lo, x_hi, height); must be finite and non-overlapping.
    pub fn new(mut segments: Vec<Segment>) -> Result<Self> {
        segments.sort_by(|s, t| s.x_lo.total_cmp(&t.x_lo));
        for s in &segments {
            if !(s.x_lo.is_finite() && s.x_hi.is_finite() && s.x_lo < s.x_hi) {
                return Err(CoreError::InvalidParameter {
                    name: "segment",
                    value: s.x_lo,
                    requirement: "finite with x_lo < x_hi",
                });
            }
        }
        for pair in segments.windows(2) {
            if pair[0].x_hi > pair[1].x_lo + 1e-15 {
                return Err(CoreError::InvalidParameter {
                    name: "segments",
                    value: pair[1].x_lo,
                    requirement: "non-overlapping",
                });
            }
        }
        Ok(Self { segments })
    }

    pub fn from_barrier(b: &BarrierParams) -> Self {
        if b.is_trivial() {
            return Self::empty();
        }
        Self {
            segments: vec![Segment {
                x_lo: -b.a,
                x_hi: b.a,
                height: b.v0,
            }],
        }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn value(&self, x: f64) -> f64 {
        for s in &self.segments {
            if x >= s.x_lo && x <= s.x_hi {
                return s.height;
            }
        }
        0.0
    }

    pub fn max_height(&self) -> f64 {
        self.segments.iter().map(|s| s.height).fold(0.0, f64::max)
    }

    /// The potential reflected through the origin.
    pub fn mirrored(&self) -> Self {
        let mut segments: Vec<Segment> = self
            .segments
            .iter()
            .map(|s| Segment {
                x_lo: -s.x_hi,
                x_hi: -s.x_lo,
                height: s.height,
            })
            .collect();
        segments.sort_by(|s, t| s.x_lo.total_cmp(&t.x_lo));
        Self { segments }
    }

    /// Region boundaries, left to right.
    fn boundaries(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(2 * self.segments.len());
        for s in &self.segments {
            if b.last().map(|&last: &f64| (last - s.x_lo).abs() > 1e-15) != Some(false) {
                b.push(s.x_lo);
            }
            b.push(s.x_hi);
        }
        b
    }

    /// Heights of the regions delimited by `boundaries()`, including the free
    /// outer regions.
    fn region_heights(&self, boundaries: &[f64]) -> Vec<f64> {
        let mut heights = Vec::with_capacity(boundaries.len() + 1);
        heights.push(0.0);
        for w in boundaries.windows(2) {
            heights.push(self.value(0.5 * (w[0] + w[1])));
        }
        heights.push(0.0);
        heights
    }
}

const NORM_GUARD: f64 = 1e140;

/// Local wavenumber as a complex number: real above the segment, i lambda in
/// classically forbidden segments.
fn region_wavenumber(k: f64, mass: f64, height: f64) -> Complex64 {
    let q2 = k * k - 2.0 * mass * height;
    if q2 >= 0.0 {
        Complex64::new(q2.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-q2).sqrt())
    }
}

#[derive(Debug, Clone, Copy)]
struct Mat2 {
    m11: Complex64,
    m12: Complex64,
    m21: Complex64,
    m22: Complex64,
}

impl Mat2 {
    fn identity() -> Self {
        Self {
            m11: 1.0.into(),
            m12: 0.0.into(),
            m21: 0.0.into(),
            m22: 1.0.into(),
        }
    }

    fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            m11: self.m11 * o.m11 + self.m12 * o.m21,
            m12: self.m11 * o.m12 + self.m12 * o.m22,
            m21: self.m21 * o.m11 + self.m22 * o.m21,
            m22: self.m21 * o.m12 + self.m22 * o.m22,
        }
    }

    fn apply(&self, v: (Complex64, Complex64)) -> (Complex64, Complex64) {
        (
            self.m11 * v.0 + self.m12 * v.1,
            self.m21 * v.0 + self.m22 * v.1,
        )
    }

    fn norm(&self) -> f64 {
        self.m11
            .norm()
            .max(self.m12.norm())
            .max(self.m21.norm())
            .max(self.m22.norm())
    }
}

/// Interface matrix taking coefficients (A, B) of A e^{iq1 x} + B e^{-iq1 x}
/// across the boundary at `xb` into the region with wavenumber q2.
fn interface(q1: Complex64, q2: Complex64, xb: f64) -> Mat2 {
    let i = Complex64::i();
    let rp = 0.5 * (1.0 + q1 / q2);
    let rm = 0.5 * (1.0 - q1 / q2);
    Mat2 {
        m11: rp * (i * (q1 - q2) * xb).exp(),
        m12: rm * (-i * (q1 + q2) * xb).exp(),
        m21: rm * (i * (q1 + q2) * xb).exp(),
        m22: rp * (-i * (q1 - q2) * xb).exp(),
    }
}

/// Independent oracle: (T, R) by 2x2 complex matrix propagation across the
/// piecewise-constant regions. Valid for any k > 0, including above-barrier
/// momenta; flags ill-conditioning for very opaque potentials.
pub fn transfer_matrix_solve(
    p: &PiecewisePotential,
    k: f64,
    mass: f64,
) -> Result<ScatteringAmplitudes> {
    if !(k > 0.0) {
        return Err(CoreError::InvalidParameter {
            name: "k",
            value: k,
            requirement: "> 0",
        });
    }
    let boundaries = p.boundaries();
    if boundaries.is_empty() {
        return Ok(ScatteringAmplitudes {
            k,
            t: 1.0.into(),
            r: 0.0.into(),
        });
    }
    let heights = p.region_heights(&boundaries);
    let mut m = Mat2::identity();
    for (j, &xb) in boundaries.iter().enumerate() {
        let q1 = region_wavenumber(k, mass, heights[j]);
        let q2 = region_wavenumber(k, mass, heights[j + 1]);
        m = interface(q1, q2, xb).mul(&m);
        if m.norm() > NORM_GUARD {
            return Err(CoreError::IllConditioned {
                norm: m.norm(),
                guard: NORM_GUARD,
            });
        }
    }
    // incident (1, R) on the left, transmitted (T, 0) on the right
    let r = -m.m21 / m.m22;
    let t = m.m11 + m.m12 * r;
    Ok(ScatteringAmplitudes { k, t, r })
}

/// Oracle wavefunction: the scattering state f_{k+}(x) evaluated anywhere by
/// propagating the left-region coefficients (1, R) to the region containing x.
pub fn transfer_matrix_wavefunction(
    p: &PiecewisePotential,
    k: f64,
    mass: f64,
    x: f64,
) -> Result<Complex64> {
    let amps = transfer_matrix_solve(p, k, mass)?;
    let boundaries = p.boundaries();
    if boundaries.is_empty() {
        return Ok(Complex64::from_polar(1.0 / SQRT_2PI, k * x));
    }
    let heights = p.region_heights(&boundaries);
    let mut coeff = (Complex64::new(1.0, 0.0), amps.r);
    let mut region = 0usize;
    while region < boundaries.len() && x > boundaries[region] {
        let q1 = region_wavenumber(k, mass, heights[region]);
        let q2 = region_wavenumber(k, mass, heights[region + 1]);
        coeff = interface(q1, q2, boundaries[region]).apply(coeff);
        region += 1;
    }
    let q = region_wavenumber(k, mass, heights[region]);
    let i = Complex64::i();
    let psi = coeff.0 * (i * q * x).exp() + coeff.1 * (-i * q * x).exp();
    Ok(psi / SQRT_2PI)
}
