//! Semiclassical (WKB) counterparts of the forbidden-region quantities: the
//! evanescent eigenfunction, the interior delay and the dimensionless path
//! relation, together with the demonstration that the semiclassical relation
//! is not invertible and therefore defines no path.

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::numerics::{adaptive_simpson, find_root_bracketed};
use crate::scattering::BarrierParams;

fn sech(z: f64) -> f64 {
    if z.abs() > 700.0 {
        2.0 * (-z.abs()).exp()
    } else {
        1.0 / z.cosh()
    }
}

/// Rightmost point where the energy drops below the potential: the positive
/// solution of E = V(x1), found by bracketed bisection on [0, search_hi].
pub fn turning_point<F: Fn(f64) -> f64>(potential: F, e: f64, search_hi: f64) -> Result<f64> {
    let n = 2048;
    let mut last_above: Option<f64> = None;
    let mut vmax: f64 = f64::NEG_INFINITY;
    for i in 0..=n {
        let x = search_hi * i as f64 / n as f64;
        let v = potential(x);
        vmax = vmax.max(v);
        if v > e {
            last_above = Some(x);
        }
    }
    let Some(lo) = last_above else {
        return Err(CoreError::NoTurningPoint { e, vmax });
    };
    if lo >= search_hi {
        return Err(CoreError::NoTurningPoint { e, vmax });
    }
    let hi = (lo + search_hi / n as f64).min(search_hi);
    find_root_bracketed(
        |x| {
            let v = potential(x) - e;
            // bisection needs a sign; sit exactly on a discontinuity edge
            if v == 0.0 {
                -f64::MIN_POSITIVE
            } else {
                v
            }
        },
        lo,
        hi,
        1e-13 * search_hi.max(1.0),
        200,
    )
}

/// Forbidden-region context: potential, energy, mass, the turning point x1
/// and the left edge of the potential support (used for the accumulated
/// allowed-region phase).
pub struct WkbContext {
    potential: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub energy: f64,
    pub mass: f64,
    pub turning: f64,
    pub support_left: f64,
}

impl std::fmt::Debug for WkbContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WkbContext")
            .field("energy", &self.energy)
            .field("mass", &self.mass)
            .field("turning", &self.turning)
            .field("support_left", &self.support_left)
            .finish()
    }
}

impl WkbContext {
    pub fn new(
        potential: Box<dyn Fn(f64) -> f64 + Send + Sync>,
        energy: f64,
        mass: f64,
        support_left: f64,
        search_hi: f64,
    ) -> Result<Self> {
        if !(energy > 0.0) {
            return Err(CoreError::InvalidParameter {
                name: "energy",
                value: energy,
                requirement: "> 0",
            });
        }
        let turning = turning_point(&potential, energy, search_hi)?;
        Ok(Self {
            potential,
            energy,
            mass,
            turning,
            support_left,
        })
    }

    /// Square barrier at momentum k: the forbidden region is the full
    /// barrier, so x1 = a.
    pub fn for_barrier(b: &BarrierParams, k: f64) -> Result<Self> {
        if b.is_trivial() {
            return Err(CoreError::NoTurningPoint { e: k * k / (2.0 * b.mass), vmax: b.v0 });
        }
        crate::scattering::kappa(k, b)?;
        let (v0, a) = (b.v0, b.a);
        Ok(Self {
            potential: Box::new(move |x: f64| if x.abs() <= a { v0 } else { 0.0 }),
            energy: k * k / (2.0 * b.mass),
            mass: b.mass,
            turning: b.a,
            support_left: -b.a,
        })
    }

    pub fn momentum(&self) -> f64 {
        (2.0 * self.mass * self.energy).sqrt()
    }

    /// Local decay rate lambda(x) = sqrt(2 m V(x) - k^2), clamped at zero.
    pub fn lambda(&self, x: f64) -> f64 {
        (2.0 * self.mass * ((self.potential)(x) - self.energy)).max(0.0).sqrt()
    }

    /// int lambda(x') dx' over [from, to].
    pub fn lambda_integral(&self, from: f64, to: f64) -> f64 {
        adaptive_simpson(&|x| self.lambda(x), from, to, 1e-12)
    }

    /// int dx'/lambda(x') over [from, to].
    pub fn inverse_lambda_integral(&self, from: f64, to: f64) -> f64 {
        adaptive_simpson(&|x| 1.0 / self.lambda(x), from, to, 1e-12)
    }

    /// Phase accumulated over the allowed stretch between the support edge
    /// and the entry turning point -x1.
    fn allowed_phase(&self) -> f64 {
        let k2 = 2.0 * self.mass * self.energy;
        if self.support_left >= -self.turning {
            return 0.0;
        }
        adaptive_simpson(
            &|x| (k2 - 2.0 * self.mass * (self.potential)(x)).max(0.0).sqrt(),
            self.support_left,
            -self.turning,
            1e-12,
        )
    }

    fn check_forbidden(&self, x: f64) -> Result<()> {
        if x <= -self.turning || x >= self.turning {
            return Err(CoreError::OutsideBarrier {
                x,
                a: self.turning,
            });
        }
        Ok(())
    }
}

/// Semiclassical eigenfunction in the forbidden region (-x1, x1):
/// [1/sqrt(2 pi lambda(x))] e^{i(allowed phase - k a + pi/4)}
/// [e^{-w} - 2 i e^{w}] / [e^{-W}/2 + 2 e^{W}], with w = int_x^{x1} lambda
/// and W = int_{-x1}^{x1} lambda. Diverges at the turning points.
pub fn wkb_eigenfunction(x: f64, ctx: &WkbContext) -> Result<Complex64> {
    ctx.check_forbidden(x)?;
    let lam = ctx.lambda(x);
    let w = ctx.lambda_integral(x, ctx.turning);
    let big_w = ctx.lambda_integral(-ctx.turning, ctx.turning);
    let phase = ctx.allowed_phase() - ctx.momentum() * (-ctx.support_left)
        + std::f64::consts::FRAC_PI_4;
    // scaled by e^{-W} to keep opaque potentials finite
    let bracket = Complex64::new((-w - big_w).exp(), -2.0 * (w - big_w).exp());
    let den = 0.5 * (-2.0 * big_w).exp() + 2.0;
    let pref = 1.0 / (2.0 * std::f64::consts::PI * lam).sqrt();
    Ok(Complex64::from_polar(pref, phase) * bracket / den)
}

/// Semiclassical interior delay:
/// beta(x) = m int_x^{x1} dx'/lambda / cosh[log 2 + 2 int_x^{x1} lambda].
pub fn wkb_beta(x: f64, ctx: &WkbContext) -> Result<f64> {
    if x.abs() > ctx.turning {
        return Err(CoreError::OutsideBarrier {
            x,
            a: ctx.turning,
        });
    }
    let inv = ctx.inverse_lambda_integral(x, ctx.turning);
    let w = ctx.lambda_integral(x, ctx.turning);
    Ok(ctx.mass * inv * sech(std::f64::consts::LN_2 + 2.0 * w))
}

/// Semiclassical path time tau1(x) = beta(x), zero at the exit turning point
/// and strictly positive elsewhere.
pub fn wkb_path_time(x: f64, ctx: &WkbContext) -> Result<f64> {
    wkb_beta(x, ctx)
}

/// Upper bound (4m/5) int_{-x1}^{x1} dx'/lambda on the semiclassical path
/// time; saturated in the thin-barrier limit where the cosh factor sits at
/// its minimum cosh(log 2) = 5/4.
pub fn wkb_time_bound(ctx: &WkbContext) -> f64 {
    0.8 * ctx.mass * ctx.inverse_lambda_integral(-ctx.turning, ctx.turning)
}

/// Dimensionless semiclassical path relation
/// S(D) = gamma sqrt(1/eps - 1) (1 - D) / cosh[log 2 + 2 gamma (1 - D)].
pub fn wkb_s_of_d(d: f64, gamma: f64, epsilon: f64) -> f64 {
    gamma * (1.0 / epsilon - 1.0).sqrt() * (1.0 - d)
        * sech(std::f64::consts::LN_2 + 2.0 * gamma * (1.0 - d))
}

/// Outcome of the invertibility probe of an S(D) relation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Witness {
    /// Two distinct positions share one S value: no path can be defined.
    Pair { d1: f64, d2: f64, s: f64 },
    /// The relation is monotone on [-1, 1].
    Monotone,
}

/// Searches any S(D) relation on [-1, 1] for a pair of positions sharing an
/// S value, by locating an interior maximum and bisecting both flanks.
pub fn invertibility_witness<F: Fn(f64) -> f64>(s: F) -> Witness {
    let n = 4000;
    let mut best = 0usize;
    let mut values = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let d = -1.0 + 2.0 * i as f64 / n as f64;
        let v = s(d);
        if v > values.get(best).copied().unwrap_or(f64::NEG_INFINITY) {
            best = i;
        }
        values.push(v);
    }
    if best == 0 || best == n {
        return Witness::Monotone;
    }
    let d_max = -1.0 + 2.0 * best as f64 / n as f64;
    let s_max = values[best];
    let s_edges = values[0].max(values[n]);
    if s_max - s_edges <= 1e-12 * s_max.abs().max(1e-300) {
        return Witness::Monotone;
    }
    let target = 0.5 * (s_max + s_edges);
    let left = find_root_bracketed(|d| s(d) - target, -1.0, d_max, 1e-12, 200);
    let right = find_root_bracketed(|d| s(d) - target, d_max, 1.0, 1e-12, 200);
    match (left, right) {
        (Ok(d1), Ok(d2)) if (s(d1) - s(d2)).abs() <= 1e-8 * s_max.abs().max(1.0) => {
            Witness::Pair { d1, d2, s: target }
        }
        _ => Witness::Monotone,
    }
}

/// The semiclassical witness at fixed (gamma, epsilon).
pub fn wkb_invertibility_witness(gamma: f64, epsilon: f64) -> Witness {
    invertibility_witness(|d| wkb_s_of_d(d, gamma, epsilon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quasiclassical::s_of_d_exact;
    use crate::scattering::{eigenfunction_plus, kappa, PiecewisePotential, Segment};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn barrier_ctx(gamma: f64, eps: f64) -> (BarrierParams, f64, WkbContext) {
        let (b, k0) = BarrierParams::from_dimensionless(gamma, eps, 1.0, 1.0).unwrap();
        let ctx = WkbContext::for_barrier(&b, k0).unwrap();
        (b, k0, ctx)
    }

    #[test]
    fn turning_point_square_barrier_is_the_edge() {
        let (b, k0) = BarrierParams::from_dimensionless(2.0, 0.1, 1.0, 1.0).unwrap();
        let e = k0 * k0 / 2.0;
        let x1 = turning_point(|x| if x.abs() <= b.a { b.v0 } else { 0.0 }, e, 5.0).unwrap();
        assert_abs_diff_eq!(x1, b.a, epsilon = 1e-9);
    }

    #[test]
    fn turning_point_step_profile() {
        let p = PiecewisePotential::new(vec![
            Segment { x_lo: -1.0, x_hi: 0.5, height: 3.0 },
            Segment { x_lo: 0.5, x_hi: 1.5, height: 1.0 },
        ])
        .unwrap();
        // E between the two heights: the boundary of the taller segment
        let x1 = turning_point(|x| p.value(x), 2.0, 4.0).unwrap();
        assert_abs_diff_eq!(x1, 0.5, epsilon = 1e-9);
        // E below both: the outer edge
        let x1 = turning_point(|x| p.value(x), 0.5, 4.0).unwrap();
        assert_abs_diff_eq!(x1, 1.5, epsilon = 1e-9);
    }

    #[test]
    fn turning_point_parabola_matches_analytic_root() {
        let (v0, half) = (2.0, 1.3);
        let parabola = move |x: f64| {
            if x.abs() <= half {
                v0 * (1.0 - (x / half).powi(2))
            } else {
                0.0
            }
        };
        let e = 0.7;
        let x1 = turning_point(parabola, e, 3.0).unwrap();
        let analytic = half * (1.0 - e / v0).sqrt();
        assert!((x1 - analytic).abs() <= 1e-8, "{x1} vs {analytic}");
    }

    #[test]
    fn turning_point_requires_energy_below_maximum() {
        let r = turning_point(|x: f64| if x.abs() <= 1.0 { 1.0 } else { 0.0 }, 2.0, 4.0);
        assert!(matches!(r, Err(CoreError::NoTurningPoint { .. })));
    }

    #[test]
    fn eigenfunction_modulus_square_barrier_hand_formula() {
        let (b, k0, ctx) = barrier_ctx(2.0, 0.1);
        let lam = kappa(k0, &b).unwrap();
        for x in [-0.7, 0.0, 0.6] {
            let f = wkb_eigenfunction(x, &ctx).unwrap();
            // constant integrand: w = lambda (a - x), W = 2 lambda a
            let w = lam * (b.a - x);
            let big_w = 2.0 * lam * b.a;
            let expect = ((-2.0 * w).exp() + 4.0 * (2.0 * w).exp()).sqrt()
                / (0.5 * (-big_w).exp() + 2.0 * big_w.exp())
                / (2.0 * std::f64::consts::PI * lam).sqrt();
            assert!(((f.norm() - expect) / expect).abs() < 1e-10, "x={x}");
        }
    }

    #[test]
    fn eigenfunction_bracket_near_exit() {
        // w -> 0 at the exit: the bracket tends to 1 - 2i, modulus sqrt(5)
        let (b, k0, ctx) = barrier_ctx(2.0, 0.1);
        let lam = kappa(k0, &b).unwrap();
        let x = b.a - 1e-9;
        let f = wkb_eigenfunction(x, &ctx).unwrap();
        let big_w = 2.0 * lam * b.a;
        let expect = 5.0f64.sqrt() / (0.5 * (-big_w).exp() + 2.0 * big_w.exp())
            / (2.0 * std::f64::consts::PI * lam).sqrt();
        assert!(((f.norm() - expect) / expect).abs() < 1e-6);
        assert!(wkb_eigenfunction(b.a, &ctx).is_err());
    }

    #[test]
    fn eigenfunction_vs_exact_order_of_magnitude_only() {
        // the semiclassical modulus profile tracks the exact one only roughly;
        // interior decay agrees to within a factor, not to percent level
        let (b, k0, ctx) = barrier_ctx(5.0, 0.1);
        let (x1, x2) = (-0.6, 0.6);
        let wkb_ratio = wkb_eigenfunction(x2, &ctx).unwrap().norm()
            / wkb_eigenfunction(x1, &ctx).unwrap().norm();
        let exact_ratio = eigenfunction_plus(k0, x2, &b).unwrap().norm()
            / eigenfunction_plus(k0, x1, &b).unwrap().norm();
        let quality = wkb_ratio / exact_ratio;
        assert!(
            (0.1..10.0).contains(&quality),
            "ratio quality {quality:.3} outside an order of magnitude"
        );
    }

    #[test]
    fn beta_zero_at_exit_positive_inside() {
        let (_, _, ctx) = barrier_ctx(2.0, 0.1);
        assert_abs_diff_eq!(wkb_beta(ctx.turning, &ctx).unwrap(), 0.0, epsilon = 1e-12);
        for x in [-1.0, -0.5, 0.0, 0.5, 0.9] {
            assert!(wkb_beta(x, &ctx).unwrap() > 0.0, "x={x}");
        }
    }

    #[test]
    fn beta_square_barrier_closed_form() {
        let (b, k0, ctx) = barrier_ctx(2.0, 0.1);
        let lam = kappa(k0, &b).unwrap();
        for x in [-0.8, 0.0, 0.7] {
            let expect = b.mass * (b.a - x) / lam
                / (std::f64::consts::LN_2 + 2.0 * lam * (b.a - x)).cosh();
            assert!(((wkb_beta(x, &ctx).unwrap() - expect) / expect).abs() < 1e-10);
        }
    }

    #[test]
    fn beta_maps_onto_s_with_the_printed_prefactor() {
        // wkb_s_of_d keeps the sqrt(1/eps - 1) prefactor as printed, which
        // sits a factor (1/eps - 1) above the dimensional route through beta
        let (gamma, eps) = (2.0, 0.1);
        let (b, k0, ctx) = barrier_ctx(gamma, eps);
        let lam = kappa(k0, &b).unwrap();
        let x = 0.0;
        let s_from_beta =
            k0 * lam / b.mass * wkb_beta(x, &ctx).unwrap() * (1.0 / eps - 1.0);
        let s_printed = wkb_s_of_d(x / b.a, gamma, eps);
        assert!(((s_from_beta - s_printed) / s_printed).abs() < 1e-10);
    }

    #[test]
    fn path_time_boundary_values_and_bound() {
        let (_, _, ctx) = barrier_ctx(2.0, 0.1);
        assert_eq!(wkb_path_time(ctx.turning, &ctx).unwrap(), 0.0);
        assert!(wkb_path_time(-ctx.turning, &ctx).unwrap() > 0.0);
        let bound = wkb_time_bound(&ctx);
        for i in 0..=20 {
            let x = -ctx.turning + 2.0 * ctx.turning * i as f64 / 20.0;
            assert!(wkb_path_time(x, &ctx).unwrap() <= bound, "x={x}");
        }
    }

    #[test]
    fn s_of_d_zero_at_exit_and_suppressed_at_entry() {
        assert_eq!(wkb_s_of_d(1.0, 2.0, 0.1), 0.0);
        let gamma = 10.0;
        let peak = (0..=400)
            .map(|i| wkb_s_of_d(-1.0 + i as f64 / 200.0, gamma, 0.1))
            .fold(0.0, f64::max);
        assert!(wkb_s_of_d(-1.0, gamma, 0.1) < 1e-6 * peak);
    }

    #[test]
    fn witness_pair_exists_for_semiclassical_relation() {
        match wkb_invertibility_witness(2.0, 0.1) {
            Witness::Pair { d1, d2, s } => {
                assert!(d1 < d2);
                assert!((wkb_s_of_d(d1, 2.0, 0.1) - s).abs() <= 1e-8);
                assert!((wkb_s_of_d(d2, 2.0, 0.1) - s).abs() <= 1e-8);
                assert!((wkb_s_of_d(d1, 2.0, 0.1) - wkb_s_of_d(d2, 2.0, 0.1)).abs() <= 1e-8);
            }
            Witness::Monotone => panic!("expected a witness pair"),
        }
    }

    #[test]
    fn exact_relation_yields_no_witness() {
        let w = invertibility_witness(|d| s_of_d_exact(d, 2.0, 0.1));
        assert_eq!(w, Witness::Monotone);
    }

    proptest! {
        #[test]
        fn endpoint_contrast_with_exact_relation(
            gamma in 0.1f64..10.0,
            eps in 0.05f64..0.95,
        ) {
            prop_assert_eq!(wkb_s_of_d(1.0, gamma, eps), 0.0);
            prop_assert!(s_of_d_exact(1.0, gamma, eps) > 0.0);
        }

        #[test]
        fn beta_positive_on_open_domain(
            gamma in 0.3f64..8.0,
            eps in 0.05f64..0.95,
            frac in -0.99f64..0.99,
        ) {
            let (b, k0) = BarrierParams::from_dimensionless(gamma, eps, 1.0, 1.0).unwrap();
            let ctx = WkbContext::for_barrier(&b, k0).unwrap();
            prop_assert!(wkb_beta(frac * b.a, &ctx).unwrap() > 0.0);
        }
    }
}
