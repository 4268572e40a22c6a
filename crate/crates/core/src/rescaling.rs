//! The dilation carrying local ground states to Kirchhoff ground states and
//! back. For `N ≥ 3` the forward factor is the smallest positive root of
//! `t² = M(t^{N-2}·‖∇u‖₂²)`; in dimension two it is `√M(‖∇u‖₂²)`, where the
//! Dirichlet norm is dilation invariant. The inverse always contracts by
//! `√M(‖∇v‖₂²)`.

use thiserror::Error;

use crate::fdsolve::RadialOp;
use crate::groundstate::{GroundState, LocalProblem};
use crate::kirchhoff_coeff::{CoeffError, KirchhoffCoeff};
use crate::radial_numerics::{h1_norms, ExpTail, GridSpec, ProfileError, RadialProfile};

#[derive(Debug, Error)]
pub enum RescaleError {
    #[error("no root of t² = M(t^{{N-2}}·c) up to t = {scanned_to}; the coefficient likely violates critical-power decay")]
    NoRoot { scanned_to: f64 },
    #[error("coefficient evaluated to a non-finite value at t = {t}")]
    NonFiniteCoeff { t: f64 },
    #[error("source state fails the Pohozaev certificate: residual {residual}")]
    SourceNotGroundState { residual: f64 },
    #[error("{stage} residual {residual} exceeds {limit}")]
    ResidualTooLarge {
        stage: &'static str,
        residual: f64,
        limit: f64,
    },
    #[error(transparent)]
    Coeff(#[from] CoeffError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

/// Outcome of lifting a local ground state to the Kirchhoff equation.
#[derive(Debug, Clone)]
pub struct LiftResult {
    /// The Kirchhoff ground state on the canonical grid.
    pub v: RadialProfile,
    /// Dilation factor applied to the local state (`√M(‖∇u‖₂²)` in 2D).
    pub t_u: f64,
    /// `√M(‖∇v‖₂²)` of the lifted state; equals `t_u` up to quadrature.
    pub h_v: f64,
    /// Normalized interior residual of the Kirchhoff equation at `v`.
    pub kirchhoff_residual: f64,
    /// Relative defect of `L(v) = ½[M̂(θ) - (1 - 2/N)·M(θ)·θ]`, `θ = ‖∇v‖₂²`.
    pub energy_identity_residual: f64,
}

/// Smallest positive root of `t² = M(t^{N-2}·grad_sq)`: upward scan by
/// factors of 1.5 from 1e-6 to the first sign change of
/// `g(t) = t² - M(t^{N-2}·grad_sq)`, then bisection to 1e-12 relative.
pub fn solve_t_u(coeff: &KirchhoffCoeff, grad_sq: f64, n: u32) -> Result<f64, RescaleError> {
    assert!(n >= 3, "the root equation is specific to N >= 3");
    assert!(grad_sq > 0.0);
    let g = |t: f64| -> Result<f64, RescaleError> {
        let m = coeff.eval_m(t.powi(n as i32 - 2) * grad_sq)?;
        if !m.is_finite() {
            return Err(RescaleError::NonFiniteCoeff { t });
        }
        Ok(t * t - m)
    };
    let mut lo = 1e-6f64;
    let mut hi;
    if g(lo)? >= 0.0 {
        // Positivity of M forces g < 0 near zero, so a nonnegative value at
        // the scan start means the first root sits below it.
        hi = lo;
        lo = 0.0;
    } else {
        let mut found = false;
        hi = lo;
        while hi < 1e6 {
            let next = hi * 1.5;
            let g_next = g(next)?;
            if g_next >= 0.0 {
                lo = hi;
                hi = next;
                found = true;
                break;
            }
            hi = next;
        }
        if !found {
            return Err(RescaleError::NoRoot { scanned_to: 1e6 });
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-12 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // Newton polish to machine precision so exact fixed points (such as
    // t = 1 for the unit coefficient) come out bit-exact.
    let mut t = 0.5 * (lo + hi);
    for _ in 0..3 {
        let step = 1e-8 * t;
        let slope = (g(t + step)? - g(t - step)?) / (2.0 * step);
        if !slope.is_finite() || slope.abs() < 1e-300 {
            break;
        }
        let next = t - g(t)? / slope;
        if next.is_finite() && next > 0.0 && (next - t).abs() <= 0.5 * (hi - lo).max(1e-12 * t) {
            t = next;
        } else {
            break;
        }
    }
    Ok(t)
}

/// Normalized interior residual of the Kirchhoff equation at `v`:
/// `max |M(‖∇v‖²)·(v'' + (N-1)/r·v') - m·v + f(v)| / (1 + |f(v)|)`.
pub fn kirchhoff_residual(
    v: &RadialProfile,
    prob: &LocalProblem,
    coeff: &KirchhoffCoeff,
) -> Result<f64, RescaleError> {
    if v.is_identically_zero() {
        return Ok(0.0);
    }
    let norms = h1_norms(v)?;
    let m_val = coeff.eval_m(norms.grad_sq)?;
    let m = prob.m;
    let potential = move |_r: f64| m;
    let op = RadialOp {
        n: v.dimension(),
        coeff: m_val,
        grid: v.grid(),
        potential: &potential,
    };
    let spec = prob.spec.clone();
    Ok(op.residual_system_normalized(v.values(), v.derivs(), &move |t| spec.eval_f(t)))
}

fn dilate_onto_canonical(
    src: &RadialProfile,
    sigma: f64,
    grid_spec: &GridSpec,
    curvature_src: &dyn Fn(f64, f64, f64) -> f64,
) -> Result<RadialProfile, ProfileError> {
    let dilated = src.rescale(sigma);
    let grid = grid_spec.build();
    // Curvature of the dilated profile from the source equation:
    // w(r) = u(r/σ) gives w'' = u''(r/σ)/σ².
    let curv = move |r: f64, w: f64, dw: f64| {
        curvature_src(r / sigma, w, dw * sigma) / (sigma * sigma)
    };
    let mut out = dilated.resample_with_curvature(&grid, &curv)?;
    // Tail from the local end slope: continuous in value and slope at the
    // grid end, which is what inverse dilations that reach past the grid
    // actually sample.
    let r_last = *out.grid().last().unwrap();
    let v_last = *out.values().last().unwrap();
    let d_last = *out.derivs().last().unwrap();
    if v_last > 0.0 && d_last < 0.0 {
        let rate = -d_last / v_last;
        out = out.with_tail(Some(ExpTail {
            amp: v_last * (rate * r_last).exp(),
            rate,
        }));
    }
    Ok(out)
}

fn local_curvature<'a>(prob: &'a LocalProblem) -> impl Fn(f64, f64, f64) -> f64 + 'a {
    let n = prob.dimension() as f64;
    move |r: f64, u: f64, du: f64| {
        let rhs = prob.m * u - prob.spec.eval_f(u);
        if r == 0.0 {
            rhs / n
        } else {
            rhs - (n - 1.0) / r * du
        }
    }
}

/// Lifts a certified local ground state to the Kirchhoff equation and
/// resamples it onto the canonical grid, with residual diagnostics.
pub fn lift(
    gs: &GroundState,
    prob: &LocalProblem,
    coeff: &KirchhoffCoeff,
    grid_spec: &GridSpec,
) -> Result<LiftResult, RescaleError> {
    if gs.pohozaev_residual > 1e-6 {
        return Err(RescaleError::SourceNotGroundState {
            residual: gs.pohozaev_residual,
        });
    }
    let n = gs.profile.dimension();
    let grad_u = gs.norms.grad_sq;
    let mut t_u = if n == 2 {
        coeff.eval_m(grad_u)?.sqrt()
    } else {
        solve_t_u(coeff, grad_u, n)?
    };
    // A dilation within a few ulps of unity is the identity; snapping it
    // keeps the unit-coefficient lift bit-exact.
    if (t_u - 1.0).abs() <= 4.0 * f64::EPSILON {
        t_u = 1.0;
    }
    let curv = local_curvature(prob);
    let v = dilate_onto_canonical(&gs.profile, t_u, grid_spec, &curv)?;

    let norms_v = h1_norms(&v)?;
    let h_v = coeff.eval_m(norms_v.grad_sq)?.sqrt();
    let residual = kirchhoff_residual(&v, prob, coeff)?;

    let theta = norms_v.grad_sq;
    let nf = n as f64;
    let closed_form =
        0.5 * (coeff.eval_mhat(theta)? - (1.0 - 2.0 / nf) * coeff.eval_m(theta)? * theta);
    let energy = crate::functionals::kirchhoff_energy(&v, prob, coeff)
        .map_err(|e| match e {
            crate::functionals::FunctionalError::Profile(p) => RescaleError::Profile(p),
            crate::functionals::FunctionalError::Coeff(c) => RescaleError::Coeff(c),
            crate::functionals::FunctionalError::NonPositiveEnergy(_) => unreachable!(),
        })?;
    let energy_identity_residual = (energy - closed_form).abs() / closed_form.abs().max(1e-300);

    Ok(LiftResult {
        v,
        t_u,
        h_v,
        kirchhoff_residual: residual,
        energy_identity_residual,
    })
}

/// Inverse of the lift: contracts a Kirchhoff solution by `√M(‖∇v‖₂²)` and
/// checks that the result solves the local equation.
pub fn project(
    v: &RadialProfile,
    prob: &LocalProblem,
    coeff: &KirchhoffCoeff,
    grid_spec: &GridSpec,
) -> Result<RadialProfile, RescaleError> {
    let input_residual = kirchhoff_residual(v, prob, coeff)?;
    if input_residual > 1e-5 {
        return Err(RescaleError::ResidualTooLarge {
            stage: "kirchhoff input",
            residual: input_residual,
            limit: 1e-5,
        });
    }
    let norms_v = h1_norms(v)?;
    let h = coeff.eval_m(norms_v.grad_sq)?.sqrt();
    let m_theta = coeff.eval_m(norms_v.grad_sq)?;
    let n = v.dimension() as f64;
    let prob2 = prob.clone();
    let curv = move |r: f64, w: f64, dw: f64| {
        let rhs = (prob2.m * w - prob2.spec.eval_f(w)) / m_theta;
        if r == 0.0 {
            rhs / n
        } else {
            rhs - (n - 1.0) / r * dw
        }
    };
    let u = dilate_onto_canonical(v, 1.0 / h, grid_spec, &curv)?;
    let out_residual = crate::groundstate::local_pde_residual(prob, &u);
    if out_residual > 1e-5 {
        return Err(RescaleError::ResidualTooLarge {
            stage: "local output",
            residual: out_residual,
            limit: 1e-5,
        });
    }
    Ok(u)
}
