//! Energy functionals of the local and Kirchhoff problems, Pohozaev
//! residuals, the constrained-minimization and mountain-pass levels, the
//! best Sobolev constant by quadrature of the Aubin–Talenti profile, and
//! the critical-existence margins.

use serde::Serialize;
use thiserror::Error;

use crate::groundstate::{GroundState, LocalProblem};
use crate::kirchhoff_coeff::{CoeffError, KirchhoffCoeff};
use crate::quad::{exp_tail_integral, simpson_sampled};
use crate::radial_numerics::{h1_norms, sphere_area, ProfileError, RadialProfile};

#[derive(Debug, Error)]
pub enum FunctionalError {
    #[error("level inversion requires a positive energy, got {0}")]
    NonPositiveEnergy(f64),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Coeff(#[from] CoeffError),
}

/// Radial quadrature of sampled data against `r^{N-1}` with the sphere-area
/// factor, no tail.
fn radial_sum(n: u32, grid: &[f64], samples: &[f64]) -> f64 {
    let weighted: Vec<f64> = grid
        .iter()
        .zip(samples)
        .map(|(&r, &v)| v * r.powi(n as i32 - 1))
        .collect();
    sphere_area(n) * simpson_sampled(grid, &weighted)
}

/// `∫ F(u) dx`. The antiderivative of an admissible nonlinearity is
/// `o(u²)` near zero, so the exponential-tail contribution beyond the grid
/// is below every tolerance in play and is not modelled.
fn integral_big_f(u: &RadialProfile, prob: &LocalProblem) -> Result<f64, ProfileError> {
    let samples: Vec<f64> = u.values().iter().map(|&v| prob.spec.eval_big_f(v)).collect();
    for (i, s) in samples.iter().enumerate() {
        if !s.is_finite() {
            return Err(ProfileError::NonFinite(u.grid()[i]));
        }
        if s.abs() > 1e300 {
            return Err(ProfileError::IntegrandOverflow(u.grid()[i]));
        }
    }
    Ok(radial_sum(u.dimension(), u.grid(), &samples))
}

/// The constraint functional `G(u) = ∫ (F(u) - m/2·u²) dx`, including the
/// closed-form mass tail when the profile carries a tail model.
pub fn constraint_g(u: &RadialProfile, prob: &LocalProblem) -> Result<f64, ProfileError> {
    let m = prob.m;
    let samples: Vec<f64> = u
        .values()
        .iter()
        .map(|&v| prob.spec.eval_big_f(v) - 0.5 * m * v * v)
        .collect();
    let mut total = radial_sum(u.dimension(), u.grid(), &samples);
    if let Some(t) = u.tail() {
        let big_r = *u.grid().last().unwrap();
        total -= 0.5
            * m
            * sphere_area(u.dimension())
            * t.amp
            * t.amp
            * exp_tail_integral(u.dimension() - 1, 2.0 * t.rate, big_r);
    }
    Ok(total)
}

/// Local energy `½∫(|∇u|² + m u²) - ∫F(u)`.
pub fn local_energy(u: &RadialProfile, prob: &LocalProblem) -> Result<f64, ProfileError> {
    let norms = h1_norms(u)?;
    Ok(0.5 * (norms.grad_sq + prob.m * norms.mass_sq) - integral_big_f(u, prob)?)
}

/// Kirchhoff energy `½M̂(‖∇u‖₂²) + m/2·∫u² - ∫F(u)`.
pub fn kirchhoff_energy(
    u: &RadialProfile,
    prob: &LocalProblem,
    coeff: &KirchhoffCoeff,
) -> Result<f64, FunctionalError> {
    let norms = h1_norms(u)?;
    Ok(0.5 * coeff.eval_mhat(norms.grad_sq)? + 0.5 * prob.m * norms.mass_sq
        - integral_big_f(u, prob)?)
}

/// Relative Pohozaev residual. For `N ≥ 3` this is
/// `|G(u) - (N-2)/(2N)·‖∇u‖₂²|` against the gradient term; in dimension
/// two it is `|G(u)|/‖∇u‖₂²`. The identically-zero profile returns a
/// flagged zero so parameter sweeps never abort on degenerate input.
pub fn pohozaev_residual(u: &RadialProfile, prob: &LocalProblem) -> Result<f64, ProfileError> {
    if u.is_identically_zero() {
        return Ok(0.0);
    }
    let n = u.dimension();
    let norms = h1_norms(u)?;
    let g = constraint_g(u, prob)?;
    if norms.grad_sq == 0.0 {
        return Ok(0.0);
    }
    if n == 2 {
        Ok(g.abs() / norms.grad_sq)
    } else {
        let scale = (n as f64 - 2.0) / (2.0 * n as f64) * norms.grad_sq;
        Ok((g - scale).abs() / scale)
    }
}

/// Mountain-pass value from the constrained-minimization level:
/// `b = (1/N)·((N-2)/(2N))^{(N-2)/2}·(2A)^{N/2}` for `N ≥ 3`, `b = A` in
/// dimension two.
pub fn level_to_mountain_pass(a: f64, n: u32) -> f64 {
    if n == 2 {
        return a;
    }
    let nf = n as f64;
    ((nf - 2.0) / (2.0 * nf)).powf((nf - 2.0) / 2.0) * (2.0 * a).powf(nf / 2.0) / nf
}

/// Inverse of [`level_to_mountain_pass`]:
/// `A = ½·(2N/(N-2))^{(N-2)/N}·(N·b)^{2/N}`.
pub fn mountain_pass_to_level(b: f64, n: u32) -> f64 {
    if n == 2 {
        return b;
    }
    let nf = n as f64;
    0.5 * (2.0 * nf / (nf - 2.0)).powf((nf - 2.0) / nf) * (nf * b).powf(2.0 / nf)
}

/// Recovers the constrained-minimization level from a ground state's
/// energy: the identity in dimension two, the inverse of the mountain-pass
/// relation for `N ≥ 3`.
pub fn minimization_level(gs: &GroundState) -> Result<f64, FunctionalError> {
    if !(gs.energy > 0.0) {
        return Err(FunctionalError::NonPositiveEnergy(gs.energy));
    }
    Ok(mountain_pass_to_level(gs.energy, gs.profile.dimension()))
}

/// `∫_R^∞ r^j (β + r²)^{-q} dr` by the binomial series in `β/r²`; requires
/// `2q + 2k > j + 1` from `k = 0` on, which holds for every use here.
fn algebraic_tail(big_r: f64, beta: f64, q: u32, j: i32) -> f64 {
    let mut sum = 0.0;
    let mut binom = 1.0f64; // C(q+k-1, k), starts at k = 0
    let mut sign = 1.0f64;
    for k in 0..60u32 {
        let expo = j + 1 - 2 * q as i32 - 2 * k as i32;
        let denom = -(expo as f64);
        let term = sign * binom * beta.powi(k as i32) * big_r.powi(expo) / denom;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
        binom *= (q + k) as f64 / (k + 1) as f64;
        sign = -sign;
    }
    sum
}

/// Scale-invariant critical ratio `‖∇w‖₂² / ‖w‖_{2*}²` of a profile with
/// algebraic decay `w ≈ α (β + r²)^{-(N-2)/2}`; the tail parameters are
/// fitted from the last two grid samples and both integrals carry their
/// closed-form tails beyond the grid.
pub fn critical_ratio(w: &RadialProfile) -> f64 {
    let n = w.dimension();
    assert!(n >= 3, "the critical ratio needs N >= 3");
    let nf = n as f64;
    let two_star = 2.0 * nf / (nf - 2.0);
    let grid = w.grid();
    let k = grid.len() - 1;
    let (r1, r2) = (grid[k - 1], grid[k]);
    let (u1, u2) = (w.values()[k - 1], w.values()[k]);
    let ratio = (u1 / u2).powf(2.0 / (nf - 2.0));
    let beta = (r2 * r2 - ratio * r1 * r1) / (ratio - 1.0);
    let alpha = u2 * (beta + r2 * r2).powf((nf - 2.0) / 2.0);

    let area = sphere_area(n);
    let grad_samples: Vec<f64> = w.derivs().iter().map(|&d| d * d).collect();
    let mut grad = area * simpson_sampled(grid, &weight(grid, &grad_samples, n));
    grad += area
        * (nf - 2.0)
        * (nf - 2.0)
        * alpha
        * alpha
        * algebraic_tail(r2, beta, n, n as i32 + 1);

    let q_samples: Vec<f64> = w.values().iter().map(|&v| v.abs().powf(two_star)).collect();
    let mut q_int = area * simpson_sampled(grid, &weight(grid, &q_samples, n));
    q_int += area * alpha.abs().powf(two_star) * algebraic_tail(r2, beta, n, n as i32 - 1);

    grad / q_int.powf((nf - 2.0) / nf)
}

fn weight(grid: &[f64], samples: &[f64], n: u32) -> Vec<f64> {
    grid.iter()
        .zip(samples)
        .map(|(&r, &v)| v * r.powi(n as i32 - 1))
        .collect()
}

/// Aubin–Talenti profile `W_σ(r) = (1 + (r/σ)²)^{-(N-2)/2}` sampled on a
/// grid, with exact derivatives.
pub fn talenti_profile(n: u32, sigma: f64, grid: &[f64]) -> RadialProfile {
    let nf = n as f64;
    let values: Vec<f64> = grid
        .iter()
        .map(|&r| (1.0 + (r / sigma) * (r / sigma)).powf(-(nf - 2.0) / 2.0))
        .collect();
    let derivs: Vec<f64> = grid
        .iter()
        .map(|&r| {
            let z = 1.0 + (r / sigma) * (r / sigma);
            -(nf - 2.0) * r / (sigma * sigma) * z.powf(-nf / 2.0)
        })
        .collect();
    RadialProfile::new(n, grid.to_vec(), values, derivs, None)
        .expect("talenti profile is well formed")
}

/// Best constant of the embedding `D^{1,2} ↪ L^{2*}` as the critical ratio
/// of the Aubin–Talenti profile on the canonical graded grid.
pub fn sobolev_best_constant(n: u32) -> f64 {
    let grid = crate::radial_numerics::GridSpec::canonical().build();
    critical_ratio(&talenti_profile(n, 1.0, &grid))
}

/// Existence margin of the critical problem: negative means the computed
/// level sits strictly below the compactness threshold. For `N ≥ 3` this is
/// `E - (1/N)·S^{N/2}`; in dimension two it is `A - ½`.
pub fn existence_margin(gs: &GroundState) -> Result<f64, FunctionalError> {
    let n = gs.profile.dimension();
    if n == 2 {
        Ok(minimization_level(gs)? - 0.5)
    } else {
        let s = sobolev_best_constant(n);
        Ok(gs.energy - s.powf(n as f64 / 2.0) / n as f64)
    }
}

/// Directional derivative of the local energy at `u` in direction `phi`
/// (same grid): `∫(u'·φ' + m·u·φ - f(u)·φ) dx`.
pub fn energy_directional_derivative(
    u: &RadialProfile,
    prob: &LocalProblem,
    phi: &RadialProfile,
) -> Result<f64, ProfileError> {
    assert_eq!(u.grid().len(), phi.grid().len());
    let n = u.dimension();
    let mut samples = Vec::with_capacity(u.len());
    for i in 0..u.len() {
        let (uv, ud) = (u.values()[i], u.derivs()[i]);
        let (pv, pd) = (phi.values()[i], phi.derivs()[i]);
        samples.push(ud * pd + prob.m * uv * pv - prob.spec.eval_f(uv) * pv);
    }
    Ok(radial_sum(n, u.grid(), &samples))
}

/// The level/value/margin summary emitted with every ground-state run.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub local_energy: f64,
    pub kirchhoff_energy: f64,
    pub a_level: f64,
    pub b_level: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sobolev_s: Option<f64>,
    pub existence_margin: f64,
}

/// Builds the report for a ground state, evaluating the Kirchhoff energy at
/// the lifted state when one is supplied (it equals the local energy for a
/// constant coefficient).
pub fn energy_report(
    gs: &GroundState,
    prob: &LocalProblem,
    coeff: &KirchhoffCoeff,
    lifted: Option<&RadialProfile>,
) -> Result<EnergyReport, FunctionalError> {
    let n = gs.profile.dimension();
    let kirchhoff = match lifted {
        Some(v) => kirchhoff_energy(v, prob, coeff)?,
        None => kirchhoff_energy(&gs.profile, prob, coeff)?,
    };
    let a_level = minimization_level(gs)?;
    let sobolev_s = if n >= 3 {
        Some(sobolev_best_constant(n))
    } else {
        None
    };
    Ok(EnergyReport {
        local_energy: gs.energy,
        kirchhoff_energy: kirchhoff,
        a_level,
        b_level: gs.energy,
        sobolev_s,
        existence_margin: existence_margin(gs)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundstate::{find_ground_state, ShootConfig};
    use crate::nonlinearity::NonlinearitySpec;
    use std::f64::consts::PI;

    fn uniform_grid(h: f64, r_max: f64) -> Vec<f64> {
        let k = (r_max / h).round() as usize;
        (0..=k).map(|i| i as f64 * h).collect()
    }

    fn zero_spec_problem(n: u32, m: f64) -> LocalProblem {
        let f: crate::nonlinearity::RealFn = std::sync::Arc::new(|_| 0.0);
        let big_f: crate::nonlinearity::RealFn = std::sync::Arc::new(|_| 0.0);
        LocalProblem::new(NonlinearitySpec::custom(n, f, big_f).unwrap(), m).unwrap()
    }

    #[test]
    fn local_energy_of_pure_quadratic_part() {
        // u = e^{-r}, N = 3, f ≡ 0: E = ½(π + π) = π.
        let grid = uniform_grid(2e-3, 40.0);
        let values: Vec<f64> = grid.iter().map(|&r| (-r).exp()).collect();
        let mut derivs: Vec<f64> = grid.iter().map(|&r| -(-r).exp()).collect();
        derivs[0] = 0.0;
        let u = RadialProfile::new(3, grid, values, derivs, None).unwrap();
        let prob = zero_spec_problem(3, 1.0);
        let e = local_energy(&u, &prob).unwrap();
        assert!((e - PI).abs() < 2e-3, "energy {e}");
    }

    #[test]
    fn zero_profile_energies_vanish() {
        let grid = uniform_grid(0.1, 5.0);
        let zeros = vec![0.0; grid.len()];
        let u = RadialProfile::new(3, grid, zeros.clone(), zeros, None).unwrap();
        let prob = zero_spec_problem(3, 1.0);
        assert_eq!(local_energy(&u, &prob).unwrap(), 0.0);
        assert_eq!(pohozaev_residual(&u, &prob).unwrap(), 0.0);
        let c = KirchhoffCoeff::affine(1.0, 0.5).unwrap();
        assert_eq!(kirchhoff_energy(&u, &prob, &c).unwrap(), 0.0);
    }

    #[test]
    fn constant_coefficient_reduces_kirchhoff_to_local_energy() {
        let grid = uniform_grid(5e-3, 20.0);
        let values: Vec<f64> = grid.iter().map(|&r| (-r * r).exp()).collect();
        let derivs: Vec<f64> = grid.iter().map(|&r| -2.0 * r * (-r * r).exp()).collect();
        let u = RadialProfile::new(3, grid, values, derivs, None).unwrap();
        let prob = LocalProblem::new(
            NonlinearitySpec::critical_sobolev(3, 1.0, 5.0).unwrap(),
            1.0,
        )
        .unwrap();
        let c = KirchhoffCoeff::constant(1.0).unwrap();
        let lhs = kirchhoff_energy(&u, &prob, &c).unwrap();
        let rhs = local_energy(&u, &prob).unwrap();
        assert!((lhs - rhs).abs() <= 1e-14 * rhs.abs().max(1.0));
    }

    #[test]
    fn generic_profile_has_positive_planar_pohozaev_residual() {
        // u = e^{-r²} in 2D with the exponential family is far from a
        // solution; the residual must be strictly positive.
        let grid = uniform_grid(1e-3, 10.0);
        let values: Vec<f64> = grid.iter().map(|&r| (-r * r).exp()).collect();
        let derivs: Vec<f64> = grid.iter().map(|&r| -2.0 * r * (-r * r).exp()).collect();
        let u = RadialProfile::new(2, grid, values, derivs, None).unwrap();
        let prob = LocalProblem::new(NonlinearitySpec::critical_exponential(1.0).unwrap(), 1.0)
            .unwrap();
        let res = pohozaev_residual(&u, &prob).unwrap();
        assert!(res > 1.0, "residual {res}");
    }

    #[test]
    fn level_round_trip_is_exact() {
        for n in [3u32, 4, 5] {
            for &a in &[0.31f64, 1.0, 7.5] {
                let b = level_to_mountain_pass(a, n);
                let back = mountain_pass_to_level(b, n);
                assert!((back - a).abs() <= 1e-12 * a, "n={n} a={a} back={back}");
            }
        }
        assert_eq!(level_to_mountain_pass(0.31, 2), 0.31);
        assert_eq!(mountain_pass_to_level(0.31, 2), 0.31);
    }

    #[test]
    fn minimization_level_identity_in_2d() {
        let prob = LocalProblem::new(NonlinearitySpec::critical_exponential(1.0).unwrap(), 1.0)
            .unwrap();
        let gs = find_ground_state(&prob, &ShootConfig::default()).unwrap();
        let a = minimization_level(&gs).unwrap();
        assert_eq!(a, gs.energy);
    }

    #[test]
    fn sobolev_constant_matches_beta_integral_closed_form_in_3d() {
        // Independent oracle: with W = (1+r²)^{-1/2},
        // ‖∇W‖₂² = 3π²/4 and ‖W‖₆⁶ = π²/4, so S = 3 (π²/4)^{2/3}.
        let s = sobolev_best_constant(3);
        let exact = 3.0 * (PI * PI / 4.0).powf(2.0 / 3.0);
        assert!((s - exact).abs() <= 1e-6 * exact, "S={s} exact={exact}");
    }

    #[test]
    fn critical_ratio_is_scale_invariant() {
        let grid = crate::radial_numerics::GridSpec::canonical().build();
        for n in [3u32, 4] {
            let base = critical_ratio(&talenti_profile(n, 1.0, &grid));
            for sigma in [0.5, 2.0] {
                let w = talenti_profile(n, 1.0, &grid).rescale(sigma);
                let ratio = critical_ratio(&w);
                assert!(
                    (ratio - base).abs() <= 1e-8 * base,
                    "n={n} sigma={sigma}: {ratio} vs {base}"
                );
            }
            assert!(base > 0.0);
        }
    }

    #[test]
    fn nonpositive_energy_is_rejected() {
        let prob = LocalProblem::new(
            NonlinearitySpec::critical_sobolev(3, 1.0, 5.0).unwrap(),
            1.0,
        )
        .unwrap();
        let mut gs = find_ground_state(&prob, &ShootConfig::default()).unwrap();
        gs.energy = -1.0;
        assert!(matches!(
            minimization_level(&gs),
            Err(FunctionalError::NonPositiveEnergy(_))
        ));
    }
}
