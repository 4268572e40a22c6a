//! The semiclassical problem for radial potential wells: rescaling
//! `v_ε(x) = w(x/ε)` turns `-ε²M(ε^{2-N}‖∇v‖₂²)Δv + V(x)v = f_k(v)` into
//! `-M(‖∇w‖₂²)Δw + V(ερ)w = f_k(w)`, which an outer damped fixed point on
//! `θ = ‖∇w‖₂²` with an inner frozen-coefficient Newton solve handles on
//! the canonical grid. Concentration and decay diagnostics of the computed
//! branch come with each solution.

use serde::Serialize;
use thiserror::Error;

use crate::fdsolve::RadialOp;
use crate::groundstate::SolveError;
use crate::kirchhoff_coeff::{CoeffError, KirchhoffCoeff};
use crate::nonlinearity::{NonlinearitySpec, RealFn, SpecError};
use crate::quad::weighted_line_fit;
use crate::radial_numerics::{h1_norms, ProfileError, RadialProfile};

#[derive(Debug, Error)]
pub enum SemiError {
    #[error("potential is invalid: {0}")]
    InvalidPotential(String),
    #[error("outer fixed point on the gradient norm failed to settle in {0} iterations")]
    OuterDiverged(u32),
    #[error("no grid window with values in [1e-8, 1e-3] to fit a decay rate")]
    WindowEmpty,
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Coeff(#[from] CoeffError),
}

/// A radial potential with a strict local minimum at the origin: the well
/// value `m = V(0)`, the bounded reference domain (a ball), and the minimum
/// of `V` on its boundary. For these wells the concentration set is `{0}`.
#[derive(Clone)]
pub struct PotentialSpec {
    m: f64,
    o_radius: f64,
    boundary_min: f64,
    well: RealFn,
}

impl std::fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PotentialSpec")
            .field("m", &self.m)
            .field("o_radius", &self.o_radius)
            .field("boundary_min", &self.boundary_min)
            .finish()
    }
}

impl PotentialSpec {
    /// The built-in well `V(ρ) = m + ρ²/(1+ρ²)`.
    pub fn radial_well(m: f64, o_radius: f64) -> Result<Self, SemiError> {
        let well: RealFn = std::sync::Arc::new(move |rho: f64| m + rho * rho / (1.0 + rho * rho));
        Self::custom(m, o_radius, well)
    }

    /// Custom radial well; validated by sampling: positive infimum, value
    /// `m` at the origin, and `m` strictly below the boundary minimum.
    pub fn custom(m: f64, o_radius: f64, well: RealFn) -> Result<Self, SemiError> {
        if !(m > 0.0) {
            return Err(SemiError::InvalidPotential(format!(
                "well value must be positive, got {m}"
            )));
        }
        if !(o_radius > 0.0) {
            return Err(SemiError::InvalidPotential(format!(
                "domain radius must be positive, got {o_radius}"
            )));
        }
        if (well(0.0) - m).abs() > 1e-12 * m {
            return Err(SemiError::InvalidPotential(format!(
                "V(0) = {} does not equal the well value {m}",
                well(0.0)
            )));
        }
        let mut inf = f64::INFINITY;
        for i in 0..=400 {
            let rho = 40.0 * i as f64 / 400.0;
            let v = well(rho);
            if !v.is_finite() {
                return Err(SemiError::InvalidPotential(format!(
                    "V({rho}) is not finite"
                )));
            }
            inf = inf.min(v);
        }
        if !(inf > 0.0) {
            return Err(SemiError::InvalidPotential(
                "sampled infimum of V is not positive".into(),
            ));
        }
        let boundary_min = well(o_radius);
        if !(m < boundary_min) {
            return Err(SemiError::InvalidPotential(format!(
                "well value {m} is not below the boundary minimum {boundary_min}"
            )));
        }
        Ok(Self {
            m,
            o_radius,
            boundary_min,
            well,
        })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn o_radius(&self) -> f64 {
        self.o_radius
    }

    pub fn boundary_min(&self) -> f64 {
        self.boundary_min
    }

    pub fn v(&self, rho: f64) -> f64 {
        (self.well)(rho)
    }
}

/// One solution of the rescaled semiclassical problem with diagnostics.
#[derive(Debug, Clone)]
pub struct SemiclassicalResult {
    pub eps: f64,
    /// `w_ε(ρ) = v_ε(ερ)` on the canonical grid.
    pub profile: RadialProfile,
    pub spike_height: f64,
    /// Distance of the maximizer to the concentration set, in original
    /// variables; identically zero for radial wells.
    pub x_eps_dist: f64,
    /// `H¹` distance of the profile to the limit ground state.
    pub h1_dist_to_limit: f64,
    pub decay_amp: f64,
    pub decay_rate: f64,
    /// Converged Kirchhoff coefficient `M(‖∇w_ε‖₂²)`.
    pub coefficient: f64,
    pub theta: f64,
    pub outer_iterations: u32,
    /// Largest ratio of consecutive outer updates near convergence.
    pub contraction: Option<f64>,
}

fn h1_distance(a: &RadialProfile, b: &RadialProfile) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.dimension();
    let grid = a.grid();
    let mut val_sq = Vec::with_capacity(grid.len());
    let mut der_sq = Vec::with_capacity(grid.len());
    for (i, &r) in grid.iter().enumerate() {
        let dv = a.values()[i] - b.values()[i];
        let dd = a.derivs()[i] - b.derivs()[i];
        let w = r.powi(n as i32 - 1);
        val_sq.push(dv * dv * w);
        der_sq.push(dd * dd * w);
    }
    let area = crate::radial_numerics::sphere_area(n);
    let mass = area * crate::quad::simpson_sampled(grid, &val_sq);
    let grad = area * crate::quad::simpson_sampled(grid, &der_sq);
    (mass.max(0.0) + grad.max(0.0)).sqrt()
}

/// Derives the truncation for the ε-family from the limit state: the cap
/// `κ` sits ten percent above the limit spike, and the cut level one
/// percent above the maximum of `f` on `[0, κ]`.
fn truncated_spec(spec: &NonlinearitySpec, init_sup: f64) -> Result<NonlinearitySpec, SpecError> {
    if spec.truncation_level().is_some() {
        return Ok(spec.clone());
    }
    let kappa = 1.1 * init_sup;
    let mut max_f = 0.0f64;
    for i in 0..=2000 {
        max_f = max_f.max(spec.eval_f(kappa * i as f64 / 2000.0));
    }
    spec.truncate(1.01 * max_f)
}

fn solve_eps_inner(
    pot: &PotentialSpec,
    spec: &NonlinearitySpec,
    coeff: &KirchhoffCoeff,
    eps: f64,
    init: &RadialProfile,
    limit: &RadialProfile,
) -> Result<SemiclassicalResult, SemiError> {
    assert!(eps >= 0.0);
    let spec_k = truncated_spec(spec, h1_norms(init)?.sup_norm)?;
    let n = init.dimension();
    let grid = init.grid().to_vec();
    let potential = |rho: f64| pot.v(eps * rho);

    let sk = spec_k.clone();
    let f = move |t: f64| sk.eval_f(t);

    let mut theta = h1_norms(init)?.grad_sq;

    // Exact-reduction fast path: when the warm start already solves this
    // ε-problem at the certified-ground-state level (the ε = 0 equation IS
    // the limit equation), re-solving could only add discretization noise,
    // so the start is returned unchanged.
    {
        let a0 = coeff.eval_m(theta)?;
        let op0 = RadialOp {
            n,
            coeff: a0,
            grid: &grid,
            potential: &potential,
        };
        let res0 = op0.residual_system_normalized(init.values(), init.derivs(), &f);
        if res0 <= 1e-6 {
            let (decay_amp, decay_rate) = fit_decay(init)?;
            let spike_idx = init.argmax();
            return Ok(SemiclassicalResult {
                eps,
                profile: init.clone(),
                spike_height: init.values()[spike_idx],
                x_eps_dist: eps * init.grid()[spike_idx],
                h1_dist_to_limit: h1_distance(init, limit),
                decay_amp,
                decay_rate,
                coefficient: a0,
                theta,
                outer_iterations: 0,
                contraction: None,
            });
        }
    }
    // The frozen-coefficient equation is solved in the local gauge
    // z(y) = w(√a·y), where it reads -Δz + V(ε√a·y)z = f_k(z): the spike
    // keeps its well-resolved local shape and, crucially, the inner solver
    // is the shooting engine — pinning z(0) fixes the near-null dilation
    // gauge that makes Newton iterations on these nearly-critical states
    // creep. Gradient norms relate by θ_w = a^{(N-2)/2}·θ_z.
    let nf = n as f64;
    let shoot_cfg = crate::groundstate::ShootConfig::default();
    let mut outer_iterations = 0u32;
    let mut updates: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut a_conv = coeff.eval_m(theta)?;
    let mut bracket_hint: Option<(f64, f64)> = None;
    let mut z_solution: Option<RadialProfile> = None;
    let mut height_prev: Option<f64> = None;
    let mut secant_prev: Option<(f64, f64)> = None;

    for _ in 0..200 {
        outer_iterations += 1;
        let a = coeff.eval_m(theta)?;
        let root_a = a.sqrt();
        let z_potential = move |y: f64| pot.v(eps * root_a * y);
        let bvp = crate::groundstate::RadialBvp {
            n,
            spec: &spec_k,
            potential: &z_potential,
        };
        let sol = crate::groundstate::solve_bvp(&bvp, &shoot_cfg, bracket_hint)?;
        // the critical height drifts with θ; bracket the next solve near it
        let width = match height_prev {
            Some(hp) => (sol.height - hp).abs().max(1e-12 * sol.height) * 4.0,
            None => 5e-3 * sol.height,
        };
        bracket_hint = Some((sol.height - width, sol.height + width));
        height_prev = Some(sol.height);

        let theta_z = h1_norms(&sol.profile)?.grad_sq;
        let theta_new = a.powf((nf - 2.0) / 2.0) * theta_z;
        let delta = theta_new - theta;
        updates.push(delta.abs());
        z_solution = Some(sol.profile);
        a_conv = a;
        if delta.abs() <= 1e-10 * (1.0 + theta) {
            converged = true;
            theta = theta_new;
            break;
        }
        // Secant acceleration on the fixed-point defect, with the damped
        // update (factor 0.5) as the safe fallback: the undamped map can
        // oscillate when M is steep.
        let damped = theta + 0.5 * delta;
        let accelerated = match secant_prev {
            Some((tp, gp)) if (delta - gp).abs() > 1e-300 => {
                let s = theta - delta * (theta - tp) / (delta - gp);
                if s.is_finite() && s > 0.0 && (s - theta).abs() <= 8.0 * delta.abs() {
                    Some(s)
                } else {
                    None
                }
            }
            _ => None,
        };
        secant_prev = Some((theta, delta));
        theta = accelerated.unwrap_or(damped);
    }
    if !converged {
        return Err(SemiError::OuterDiverged(outer_iterations));
    }
    let z_profile = z_solution.expect("outer loop ran at least once");

    // Map back to the ε-problem variables: w(ρ) = z(ρ/√a), with quintic
    // resampling fed by the z-equation curvature.
    let root_a = a_conv.sqrt();
    let spec_curv = spec_k.clone();
    let z_curv = move |y: f64, zv: f64, dz: f64| {
        let rhs = pot.v(eps * root_a * y) * zv - spec_curv.eval_f(zv);
        if y == 0.0 {
            rhs / nf
        } else {
            rhs - (nf - 1.0) / y * dz
        }
    };
    let dilated = z_profile.rescale(root_a);
    let curv = move |rho: f64, wv: f64, dw: f64| z_curv(rho / root_a, wv, dw * root_a) / a_conv;
    let mut profile = dilated.resample_with_curvature(&grid, &curv)?;
    // tail continuous in value and slope at the grid end
    let r_last = *profile.grid().last().unwrap();
    let v_last = *profile.values().last().unwrap();
    let d_last = *profile.derivs().last().unwrap();
    if v_last > 0.0 && d_last < 0.0 {
        let rate = -d_last / v_last;
        profile = profile.with_tail(Some(crate::radial_numerics::ExpTail {
            amp: v_last * (rate * r_last).exp(),
            rate,
        }));
    }

    let spike_idx = profile.argmax();
    let spike_height = profile.values()[spike_idx];
    let x_eps_dist = eps * profile.grid()[spike_idx];
    let h1_dist_to_limit = h1_distance(&profile, limit);
    let coefficient = coeff.eval_m(theta)?;
    let (decay_amp, decay_rate) = fit_decay(&profile)?;

    let contraction = if updates.len() >= 2 {
        let tail = &updates[updates.len().saturating_sub(10)..];
        let mut worst: f64 = 0.0;
        for p in tail.windows(2) {
            if p[0] > 0.0 {
                worst = worst.max(p[1] / p[0]);
            }
        }
        Some(worst)
    } else {
        None
    };

    Ok(SemiclassicalResult {
        eps,
        profile,
        spike_height,
        x_eps_dist,
        h1_dist_to_limit,
        decay_amp,
        decay_rate,
        coefficient,
        theta,
        outer_iterations,
        contraction,
    })
}

/// Solves the rescaled problem at one `ε`, warm-started from `init` (which
/// also serves as the reference limit state for the distance diagnostics;
/// at `ε = 0` the solution is the Kirchhoff limit ground state, so that is
/// the natural start). The truncation level is derived from the initial
/// spike unless the nonlinearity is already truncated.
pub fn solve_eps(
    pot: &PotentialSpec,
    spec: &NonlinearitySpec,
    coeff: &KirchhoffCoeff,
    eps: f64,
    init: &RadialProfile,
) -> Result<SemiclassicalResult, SemiError> {
    solve_eps_inner(pot, spec, coeff, eps, init, init)
}

/// Least-squares exponential fit on the window where the profile lies in
/// `[1e-8, 1e-3]`: fits `log w` against `ρ` with trapezoidal weights and
/// returns `(C, c)` with `w ≈ C·e^{-cρ}`. In original variables the decay
/// rate is `c/ε`.
pub fn decay_fit(res: &SemiclassicalResult) -> Result<(f64, f64), SemiError> {
    fit_decay(&res.profile)
}

fn fit_decay(profile: &RadialProfile) -> Result<(f64, f64), SemiError> {
    let grid = profile.grid();
    let values = profile.values();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..grid.len() {
        if values[i] >= 1e-8 && values[i] <= 1e-3 {
            xs.push(grid[i]);
            ys.push(values[i].ln());
        }
    }
    if xs.len() < 2 {
        return Err(SemiError::WindowEmpty);
    }
    let mut ws = vec![0.0; xs.len()];
    for i in 0..xs.len() {
        let left = if i > 0 { xs[i] - xs[i - 1] } else { 0.0 };
        let right = if i + 1 < xs.len() { xs[i + 1] - xs[i] } else { 0.0 };
        ws[i] = 0.5 * (left + right);
    }
    let (intercept, slope) = weighted_line_fit(&xs, &ys, &ws);
    Ok((intercept.exp(), -slope))
}

/// Sweep outcome: solutions in the order of the supplied `ε` list, plus
/// the first failure (if any), after which the sweep stops.
#[derive(Debug)]
pub struct SweepOutcome {
    pub results: Vec<SemiclassicalResult>,
    pub failure: Option<(f64, SemiError)>,
    /// The local ground state of the `ε → 0` problem.
    pub local: crate::groundstate::GroundState,
    /// The Kirchhoff limit state (the lifted local state); every distance
    /// diagnostic refers to this profile, since the rescaled solutions
    /// converge to a least-energy solution of the nonlocal limit equation.
    pub limit_profile: RadialProfile,
}

/// Solves the list in order (descending `ε` intended), warm-starting each
/// entry from the previous solution; the first entry starts from the
/// Kirchhoff limit ground state, which is computed here by lifting the
/// local one.
pub fn continuation_sweep(
    pot: &PotentialSpec,
    spec: &NonlinearitySpec,
    coeff: &KirchhoffCoeff,
    eps_list: &[f64],
    shoot_cfg: &crate::groundstate::ShootConfig,
) -> Result<SweepOutcome, SemiError> {
    let prob = crate::groundstate::LocalProblem::new(spec.clone(), pot.m())
        .map_err(SemiError::Solve)?;
    let local = crate::groundstate::find_ground_state(&prob, shoot_cfg)?;
    let limit_profile = crate::rescaling::lift(&local, &prob, coeff, &shoot_cfg.grid)
        .map_err(|e| SemiError::InvalidPotential(format!("limit lift failed: {e}")))?
        .v;
    let mut results: Vec<SemiclassicalResult> = Vec::new();
    let mut failure = None;
    for &eps in eps_list {
        let warm = results
            .last()
            .map(|r| r.profile.clone())
            .unwrap_or_else(|| limit_profile.clone());
        match solve_eps_inner(pot, spec, coeff, eps, &warm, &limit_profile) {
            Ok(r) => results.push(r),
            Err(e) => {
                failure = Some((eps, e));
                break;
            }
        }
    }
    Ok(SweepOutcome {
        results,
        failure,
        local,
        limit_profile,
    })
}

/// One row of the concentration table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DiagRow {
    pub eps: f64,
    pub x_eps_dist: f64,
    pub sup_dist: f64,
    pub h1_dist: f64,
    pub spike_height: f64,
    pub coefficient: f64,
    pub decay_amp: f64,
    pub decay_rate: f64,
}

/// Concentration diagnostics with monotone-trend flags. For radial wells
/// the maximizer distance is identically zero (the geometry is trivial by
/// construction); the profile convergence columns carry the content.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsTable {
    pub rows: Vec<DiagRow>,
    pub sup_dist_decreasing: bool,
    pub h1_dist_decreasing: bool,
    pub geometry_trivial: bool,
}

pub fn concentration_diagnostics(
    results: &[SemiclassicalResult],
    limit: &RadialProfile,
) -> DiagnosticsTable {
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        let sup_dist = r
            .profile
            .values()
            .iter()
            .zip(limit.values())
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        rows.push(DiagRow {
            eps: r.eps,
            x_eps_dist: r.x_eps_dist,
            sup_dist,
            h1_dist: r.h1_dist_to_limit,
            spike_height: r.spike_height,
            coefficient: r.coefficient,
            decay_amp: r.decay_amp,
            decay_rate: r.decay_rate,
        });
    }
    let sup_dist_decreasing = rows.windows(2).all(|w| w[1].sup_dist < w[0].sup_dist);
    let h1_dist_decreasing = rows.windows(2).all(|w| w[1].h1_dist < w[0].h1_dist);
    DiagnosticsTable {
        rows,
        sup_dist_decreasing,
        h1_dist_decreasing,
        geometry_trivial: true,
    }
}

/// Normalized interior residual of the rescaled equation at a solution,
/// which by the chain rule equals the residual of the original ε-problem
/// at `v_ε(x) = w(x/ε)`.
pub fn semiclassical_residual(
    res: &SemiclassicalResult,
    pot: &PotentialSpec,
    spec: &NonlinearitySpec,
    coeff: &KirchhoffCoeff,
) -> Result<f64, SemiError> {
    let spec_k = truncated_spec(spec, res.spike_height)?;
    let eps = res.eps;
    let theta = h1_norms(&res.profile)?.grad_sq;
    let potential = |rho: f64| pot.v(eps * rho);
    let op = RadialOp {
        n: res.profile.dimension(),
        coeff: coeff.eval_m(theta)?,
        grid: res.profile.grid(),
        potential: &potential,
    };
    Ok(op.residual_system_normalized(res.profile.values(), res.profile.derivs(), &move |t| {
        spec_k.eval_f(t)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundstate::{find_ground_state, GroundState, LocalProblem, ShootConfig};
    use crate::radial_numerics::GridSpec;
    use std::sync::OnceLock;

    fn spec_3d() -> NonlinearitySpec {
        NonlinearitySpec::critical_sobolev(3, 1.0, 5.0).unwrap()
    }

    fn affine_coeff() -> KirchhoffCoeff {
        KirchhoffCoeff::affine(1.0, 0.5).unwrap()
    }

    fn local_state() -> &'static GroundState {
        static GS: OnceLock<GroundState> = OnceLock::new();
        GS.get_or_init(|| {
            let prob = LocalProblem::new(spec_3d(), 1.0).unwrap();
            find_ground_state(&prob, &ShootConfig::default()).unwrap()
        })
    }

    /// The ε → 0 limit of the rescaled solutions: the lifted local state.
    fn kirchhoff_limit() -> &'static RadialProfile {
        static V: OnceLock<RadialProfile> = OnceLock::new();
        V.get_or_init(|| {
            let prob = LocalProblem::new(spec_3d(), 1.0).unwrap();
            crate::rescaling::lift(local_state(), &prob, &affine_coeff(), &GridSpec::canonical())
                .unwrap()
                .v
        })
    }

    #[test]
    fn default_well_satisfies_the_hypotheses() {
        let pot = PotentialSpec::radial_well(1.0, 1.0).unwrap();
        assert_eq!(pot.m(), 1.0);
        assert!((pot.boundary_min() - 1.5).abs() < 1e-15);
        assert!(pot.v(0.0) == 1.0);
        assert!(PotentialSpec::radial_well(-1.0, 1.0).is_err());
        // a well whose origin value is not the minimum over the domain
        let bad: RealFn = std::sync::Arc::new(|rho: f64| 2.0 - rho);
        assert!(PotentialSpec::custom(2.0, 1.0, bad).is_err());
    }

    #[test]
    fn eps_zero_reproduces_the_kirchhoff_limit_state() {
        let pot = PotentialSpec::radial_well(1.0, 1.0).unwrap();
        let res = solve_eps(&pot, &spec_3d(), &affine_coeff(), 0.0, kirchhoff_limit()).unwrap();
        assert!(
            res.h1_dist_to_limit <= 1e-8,
            "h1 distance {}",
            res.h1_dist_to_limit
        );
        assert_eq!(res.x_eps_dist, 0.0);
        assert!(res.coefficient >= 1.0);
        assert!(res.decay_rate > 0.0);
    }

    #[test]
    fn eps_zero_with_unit_coefficient_is_a_double_reduction() {
        let pot = PotentialSpec::radial_well(1.0, 1.0).unwrap();
        let coeff = KirchhoffCoeff::constant(1.0).unwrap();
        // with M ≡ 1 the Kirchhoff limit state IS the local one
        let res = solve_eps(&pot, &spec_3d(), &coeff, 0.0, &local_state().profile).unwrap();
        assert!(res.h1_dist_to_limit <= 1e-8, "h1 {}", res.h1_dist_to_limit);
        assert!((res.coefficient - 1.0).abs() < 1e-14);
        // the unit coefficient makes the outer map constant
        assert!(res.outer_iterations <= 2);
    }

    #[test]
    fn moderate_eps_converges_with_small_residual() {
        let pot = PotentialSpec::radial_well(1.0, 1.0).unwrap();
        let coeff = affine_coeff();
        let res = solve_eps(&pot, &spec_3d(), &coeff, 0.1, kirchhoff_limit()).unwrap();
        let pde = semiclassical_residual(&res, &pot, &spec_3d(), &coeff).unwrap();
        assert!(pde <= 1e-6, "residual {pde}");
        assert!(res.h1_dist_to_limit > 0.0);
        assert_eq!(res.x_eps_dist, 0.0);
        if let Some(c) = res.contraction {
            assert!(c < 1.0, "outer contraction {c}");
        }
    }

    #[test]
    fn truncation_is_inert_on_converged_solutions() {
        // The sub-cap property of the spike is asymptotic in ε; at this
        // well depth it holds comfortably by ε = 0.05.
        let pot = PotentialSpec::radial_well(1.0, 1.0).unwrap();
        let coeff = affine_coeff();
        let res = solve_eps(&pot, &spec_3d(), &coeff, 0.05, kirchhoff_limit()).unwrap();
        // re-solve with a truncation level far above the encountered range
        let huge = spec_3d().truncate(1e12).unwrap();
        let res2 = solve_eps(&pot, &huge, &coeff, 0.05, kirchhoff_limit()).unwrap();
        let diff = res
            .profile
            .values()
            .iter()
            .zip(res2.profile.values())
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        assert!(diff <= 1e-8, "truncated vs effectively-untruncated {diff}");
        // the spike sits below the derived cap, so the clamp never engaged
        let kappa = 1.1 * h1_norms(kirchhoff_limit()).unwrap().sup_norm;
        assert!(res.spike_height < kappa, "spike {}", res.spike_height);
    }

    #[test]
    fn decay_fit_recovers_synthetic_exponential() {
        let grid: Vec<f64> = (0..=30000).map(|i| i as f64 * 1e-3).collect();
        let c0 = 1.3;
        let amp = 2.0;
        let values: Vec<f64> = grid.iter().map(|&r| amp * (-c0 * r).exp()).collect();
        let mut derivs: Vec<f64> = grid
            .iter()
            .map(|&r| -c0 * amp * (-c0 * r).exp())
            .collect();
        derivs[0] = 0.0;
        let profile = RadialProfile::new(3, grid, values, derivs, None).unwrap();
        let (c_amp, c_rate) = fit_decay(&profile).unwrap();
        assert!((c_amp - amp).abs() <= 1e-6 * amp, "amp {c_amp}");
        assert!((c_rate - c0).abs() <= 1e-6 * c0, "rate {c_rate}");
    }

    #[test]
    fn constant_profile_has_no_fit_window() {
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        let values = vec![0.5; grid.len()];
        let derivs = vec![0.0; grid.len()];
        let profile = RadialProfile::new(3, grid, values, derivs, None).unwrap();
        match fit_decay(&profile) {
            Err(SemiError::WindowEmpty) => {}
            other => panic!("expected WindowEmpty, got {other:?}"),
        }
    }

    #[test]
    fn sweep_edge_cases() {
        let pot = PotentialSpec::radial_well(1.0, 1.0).unwrap();
        let coeff = affine_coeff();
        let cfg = ShootConfig::default();
        let empty = continuation_sweep(&pot, &spec_3d(), &coeff, &[], &cfg).unwrap();
        assert!(empty.results.is_empty() && empty.failure.is_none());

        let single = continuation_sweep(&pot, &spec_3d(), &coeff, &[0.0], &cfg).unwrap();
        assert_eq!(single.results.len(), 1);
        assert!(single.results[0].h1_dist_to_limit <= 1e-8);
        let table = concentration_diagnostics(&single.results, &single.limit_profile);
        assert_eq!(table.rows.len(), 1);
        assert!(table.rows[0].sup_dist <= 1e-8);
        assert!(table.geometry_trivial);
    }
}
