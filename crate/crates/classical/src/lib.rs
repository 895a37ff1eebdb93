//! Classical limit of the phase-space evolution.
//!
//! The Wigner symbol of a monomial Hamiltonian generates the Hamilton flow
//! `α̇ = −i ∂_{α*} W_H(α)`, and to leading order the Wigner function is
//! simply carried along the characteristics: `W_ρ(α | t) = W_ρ(α(−t))`.
//! This module integrates those characteristics (fixed-step RK4 — the flows
//! are smooth and a fixed step keeps everything deterministic and
//! order-testable), evaluates the initial symbol *exactly* at each pre-image
//! point rather than interpolating a sampled field, and reconstructs the
//! evolved operator `R(t) = ∫ d²α/π w(α) W_ρ(α(−t))` by quadrature.
//!
//! Monomial flows of degree three and higher can reach infinity in finite
//! time, so every trajectory carries a divergence guard; a node that escapes
//! aborts the whole field rather than silently overflowing.

use fock::{CMat, C64, MonomialParams};
use phasespace::{symbol_at, KernelCache, PhaseGrid, PhaseSpaceError, WignerField};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClassicalError {
    #[error("trajectory diverged (|alpha| exceeded {guard:.1} after {steps} steps from {start})")]
    Divergence { start: C64, guard: f64, steps: usize },
    #[error("{diverged} of {total} grid nodes diverged (first at flat index {first})")]
    FieldDivergence { diverged: usize, total: usize, first: usize },
    #[error("too few steps: {given}, need at least {needed} for this trajectory")]
    TooFewSteps { given: usize, needed: usize },
    #[error("twa_field input is not Hermitian (residual {0:.3e})")]
    NonHermitian(f64),
    #[error(transparent)]
    PhaseSpace(#[from] PhaseSpaceError),
}

/// One integrated characteristic of the classical flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trajectory {
    pub start: C64,
    pub end: C64,
    /// Signed duration; negative integrates the reversed field.
    pub duration: f64,
    pub steps: usize,
}

/// Hamilton velocity of the symbol `W_H = c (α̅^m α^n + α^m α̅^n)`:
/// `α̇ = −i ∂_{α*} W_H = −i c (m α̅^{m−1} α^n + n α^m α̅^{n−1})`.
pub fn hamilton_velocity(params: &MonomialParams, alpha: C64) -> C64 {
    let (m, n) = (params.m, params.n);
    let mut v = C64::new(0.0, 0.0);
    if m >= 1 {
        v += alpha.conj().powu(m - 1) * alpha.powu(n) * m as f64;
    }
    if n >= 1 {
        v += alpha.powu(m) * alpha.conj().powu(n - 1) * n as f64;
    }
    C64::new(0.0, -params.coupling) * v
}

/// Default step budget for a trajectory: fixed step
/// `h = min(1e-3, 0.05 / max(1, |velocity(α0)|))`, so stiff far-field nodes
/// get proportionally more steps.
pub fn default_steps(params: &MonomialParams, alpha0: C64, t: f64) -> usize {
    let v = hamilton_velocity(params, alpha0).norm();
    let h = (0.05 / v.max(1.0)).min(1e-3);
    ((t.abs() / h).ceil() as usize).max(1)
}

fn rk4_step(params: &MonomialParams, alpha: C64, h: f64) -> C64 {
    let k1 = hamilton_velocity(params, alpha);
    let k2 = hamilton_velocity(params, alpha + k1 * (h / 2.0));
    let k3 = hamilton_velocity(params, alpha + k2 * (h / 2.0));
    let k4 = hamilton_velocity(params, alpha + k3 * h);
    alpha + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0)
}

/// Integrate the flow from `alpha0` for signed duration `t` in `steps` RK4
/// steps. `steps` must cover the default budget; trajectories escaping
/// `|α| > 10(|α0| + 1)` abort with a divergence error.
pub fn flow(
    params: &MonomialParams,
    alpha0: C64,
    t: f64,
    steps: usize,
) -> Result<Trajectory, ClassicalError> {
    let needed = default_steps(params, alpha0, t);
    if steps < needed {
        return Err(ClassicalError::TooFewSteps { given: steps, needed });
    }
    let h = t / steps as f64;
    let guard = 10.0 * (alpha0.norm() + 1.0);
    let mut alpha = alpha0;
    for s in 0..steps {
        alpha = rk4_step(params, alpha, h);
        if !alpha.re.is_finite() || !alpha.im.is_finite() || alpha.norm() > guard {
            return Err(ClassicalError::Divergence { start: alpha0, guard, steps: s + 1 });
        }
    }
    Ok(Trajectory { start: alpha0, end: alpha, duration: t, steps })
}

/// [`flow`] with the default step budget.
pub fn flow_default(
    params: &MonomialParams,
    alpha0: C64,
    t: f64,
) -> Result<Trajectory, ClassicalError> {
    flow(params, alpha0, t, default_steps(params, alpha0, t))
}

/// Like [`flow`], but recording every intermediate point `(t_k, α_k)`
/// (including the start) for trajectory dumps.
pub fn flow_trace(
    params: &MonomialParams,
    alpha0: C64,
    t: f64,
    steps: usize,
) -> Result<Vec<(f64, C64)>, ClassicalError> {
    let needed = default_steps(params, alpha0, t);
    if steps < needed {
        return Err(ClassicalError::TooFewSteps { given: steps, needed });
    }
    let h = t / steps as f64;
    let guard = 10.0 * (alpha0.norm() + 1.0);
    let mut alpha = alpha0;
    let mut out = Vec::with_capacity(steps + 1);
    out.push((0.0, alpha));
    for s in 0..steps {
        alpha = rk4_step(params, alpha, h);
        if !alpha.re.is_finite() || !alpha.im.is_finite() || alpha.norm() > guard {
            return Err(ClassicalError::Divergence { start: alpha0, guard, steps: s + 1 });
        }
        out.push((h * (s + 1) as f64, alpha));
    }
    Ok(out)
}

/// Wigner field of `rho0` evolved to time `t` by backward characteristics:
/// per node, `W(α_jk | t) = Tr(ρ0 · w(α_jk(−t)))` with the pre-image point
/// from the reversed flow and the symbol evaluated exactly there.
pub fn twa_field(
    rho0: &CMat,
    grid: &PhaseGrid,
    params: &MonomialParams,
    t: f64,
) -> Result<WignerField, ClassicalError> {
    let residual = fock::hermiticity_residual(rho0);
    if residual > 1e-10 * rho0.norm().max(1.0) {
        return Err(ClassicalError::NonHermitian(residual));
    }
    // per-node work is independent; collect keeps node order deterministic
    let results: Vec<Result<f64, ClassicalError>> = grid
        .nodes()
        .par_iter()
        .map(|&node| {
            let back = flow_default(params, node, -t)?;
            Ok(symbol_at(rho0, back.end).re)
        })
        .collect();

    let mut values = Vec::with_capacity(results.len());
    let mut diverged = 0usize;
    let mut first = None;
    for (idx, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => values.push(v),
            Err(_) => {
                diverged += 1;
                first.get_or_insert(idx);
                values.push(0.0);
            }
        }
    }
    if diverged > 0 {
        return Err(ClassicalError::FieldDivergence {
            diverged,
            total: grid.len(),
            first: first.unwrap(),
        });
    }
    Ok(WignerField::new(grid.clone(), values)?)
}

/// TWA average `⟨f⟩ = ∫ d²α/π W_f(α) W(α | t)` using the symbol of `f`
/// on the field's grid.
pub fn twa_expectation(f: &CMat, field: &WignerField) -> Result<f64, ClassicalError> {
    let wf = phasespace::symbol(f, &field.grid)?;
    Ok(phasespace::overlap(&wf, field)?)
}

/// Reconstructed operator `R(t) = ∫ d²α/π w(α) W_ρ(α(−t))`:
/// [`twa_field`] followed by the inverse Weyl map on the same grid.
pub fn reconstruct_r(
    rho0: &CMat,
    grid: &PhaseGrid,
    params: &MonomialParams,
    t: f64,
) -> Result<CMat, ClassicalError> {
    let field = twa_field(rho0, grid, params, t)?;
    Ok(phasespace::inverse_map(&field, rho0.nrows()))
}

/// [`reconstruct_r`] against a prebuilt kernel cache (reuse across times).
pub fn reconstruct_r_with(
    rho0: &CMat,
    cache: &KernelCache,
    params: &MonomialParams,
    t: f64,
) -> Result<CMat, ClassicalError> {
    let field = twa_field(rho0, cache.grid(), params, t)?;
    Ok(phasespace::inverse_map_with(&field, cache))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use fock::{coherent_state, projector};
    use phasespace::{integrate, purity};

    const KERR: MonomialParams = MonomialParams { m: 2, n: 2, coupling: 1.0 };
    const SHG: MonomialParams = MonomialParams { m: 1, n: 2, coupling: 1.0 };
    const HARMONIC: MonomialParams = MonomialParams { m: 1, n: 1, coupling: 1.0 };

    #[test]
    fn velocity_closed_forms() {
        // Kerr at alpha = 1: -i (2 + 2) = -4i
        let v = hamilton_velocity(&KERR, C64::new(1.0, 0.0));
        assert_abs_diff_eq!(v.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.im, -4.0, epsilon = 1e-15);
        // SHG at alpha = i: -i (α² + 2|α|²) = -i (-1 + 2) = -i
        let v = hamilton_velocity(&SHG, C64::new(0.0, 1.0));
        assert_abs_diff_eq!(v.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.im, -1.0, epsilon = 1e-15);
        // origin is a fixed point for m, n >= 1
        assert_eq!(hamilton_velocity(&KERR, C64::new(0.0, 0.0)).norm(), 0.0);
    }

    #[test]
    fn kerr_orbit_law() {
        // closed form alpha0 e^{-4 i |alpha0|^2 t}
        for &(a0, t) in &[
            (C64::new(1.0, 0.0), 0.1),
            (C64::new(1.5, 1.0), 0.3),
            (C64::new(-0.5, 2.5), 0.5),
        ] {
            // 4x the default budget: at |alpha0| = 2.55, t = 0.5 the default
            // step leaves ~5e-7 of truncation error; RK4's h^4 brings 4x
            // comfortably under the 1e-8 gate
            let traj = flow(&KERR, a0, t, 4 * default_steps(&KERR, a0, t)).unwrap();
            let want = a0 * C64::new(0.0, -4.0 * a0.norm_sqr() * t).exp();
            assert!((traj.end - want).norm() <= 1e-8, "orbit error {:.2e}", (traj.end - want).norm());
            // |alpha| conserved
            assert_abs_diff_eq!(traj.end.norm(), a0.norm(), epsilon = 1e-8);
        }
    }

    #[test]
    fn harmonic_rotation_closes() {
        // rotation at rate 2: t = pi returns to the start
        let traj = flow_default(&HARMONIC, C64::new(1.0, 0.0), std::f64::consts::PI).unwrap();
        assert!((traj.end - C64::new(1.0, 0.0)).norm() <= 1e-8);
    }

    #[test]
    fn fixed_point_stays_put() {
        let traj = flow(&SHG, C64::new(0.0, 0.0), 5.0, 5000).unwrap();
        assert_eq!(traj.end.norm(), 0.0);
    }

    #[test]
    fn flow_reverses() {
        for &(a0, t) in &[
            (C64::new(0.5, -1.0), 0.5),
            (C64::new(2.0, 2.0), 0.2),
            (C64::new(-3.0, 0.0), 0.1),
        ] {
            for params in [&KERR, &SHG] {
                let fwd = flow_default(params, a0, t).unwrap();
                let back = flow_default(params, fwd.end, -t).unwrap();
                assert!(
                    (back.end - a0).norm() <= 1e-7,
                    "reversal error {:.2e}",
                    (back.end - a0).norm()
                );
            }
        }
    }

    #[test]
    fn step_budget_is_enforced() {
        let a0 = C64::new(2.0, 0.0);
        let needed = default_steps(&KERR, a0, 0.5);
        assert!(matches!(
            flow(&KERR, a0, 0.5, needed - 1),
            Err(ClassicalError::TooFewSteps { .. })
        ));
        assert!(flow(&KERR, a0, 0.5, needed).is_ok());
    }

    #[test]
    fn shg_escape_is_caught() {
        // along the negative imaginary axis the SHG flow blows up in finite
        // time: alpha = i y with dy/dt = -y² diverges at t = -1/y0
        let a0 = C64::new(0.0, -2.0);
        let err = flow_default(&SHG, a0, 0.6).unwrap_err();
        assert!(matches!(err, ClassicalError::Divergence { .. }));
    }

    #[test]
    fn trace_records_path() {
        let steps = default_steps(&HARMONIC, C64::new(1.0, 0.0), 0.1);
        let pts = flow_trace(&HARMONIC, C64::new(1.0, 0.0), 0.1, steps).unwrap();
        assert_eq!(pts.len(), steps + 1);
        assert_eq!(pts[0], (0.0, C64::new(1.0, 0.0)));
        assert_abs_diff_eq!(pts.last().unwrap().0, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn field_at_zero_time_is_the_symbol() {
        let dim = 12;
        let rho = projector(&coherent_state(C64::new(0.8, 0.2), dim).unwrap());
        let grid = PhaseGrid::new(4.0, 30).unwrap();
        let evolved = twa_field(&rho, &grid, &KERR, 0.0).unwrap();
        let direct = phasespace::symbol(&rho, &grid).unwrap();
        for (a, b) in evolved.values.iter().zip(&direct.values) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn harmonic_flow_is_rigid_rotation() {
        let dim = 16;
        let a0 = C64::new(1.0, 0.0);
        let rho = projector(&coherent_state(a0, dim).unwrap());
        let grid = PhaseGrid::new(4.0, 40).unwrap();
        let t = 0.35;
        let field = twa_field(&rho, &grid, &HARMONIC, t).unwrap();
        let center = a0 * C64::new(0.0, -2.0 * t).exp();
        let mut worst = 0.0f64;
        for (node, v) in grid.nodes().iter().zip(&field.values) {
            let want = 2.0 * (-2.0 * (node - center).norm_sqr()).exp();
            worst = worst.max((v - want).abs());
        }
        assert!(worst <= 1e-6, "max-norm deviation {worst:.2e}");
    }

    #[test]
    fn kerr_flow_conserves_norm_and_purity() {
        let dim = 18;
        let a0 = C64::new(1.5, 0.0);
        let rho = projector(&coherent_state(a0, dim).unwrap());
        let grid = PhaseGrid::for_state(a0.norm());
        let field = twa_field(&rho, &grid, &KERR, 0.1).unwrap();
        assert_abs_diff_eq!(integrate(&field), 1.0, epsilon = 1e-5);
        assert_abs_diff_eq!(purity(&field), 1.0, epsilon = 1e-4);
    }

    #[test]
    fn twa_expectation_invariants() {
        let dim = 16;
        let a0 = C64::new(1.0, 0.0);
        let rho = projector(&coherent_state(a0, dim).unwrap());
        let grid = PhaseGrid::for_state(a0.norm());
        let (a, ad) = fock::ladder(dim).unwrap();
        let number = &ad * &a;

        let field = twa_field(&rho, &grid, &HARMONIC, 0.25).unwrap();
        assert_abs_diff_eq!(
            twa_expectation(&CMat::identity(dim, dim), &field).unwrap(),
            1.0,
            epsilon = 1e-6
        );
        assert_abs_diff_eq!(twa_expectation(&number, &field).unwrap(), 1.0, epsilon = 1e-4);

        // |alpha| is conserved along every Kerr trajectory
        let field = twa_field(&rho, &grid, &KERR, 0.2).unwrap();
        assert_abs_diff_eq!(twa_expectation(&number, &field).unwrap(), 1.0, epsilon = 1e-4);
    }

    #[test]
    fn reconstruction_at_zero_time() {
        let dim = 16;
        let a0 = C64::new(1.0, 0.0);
        let rho = projector(&coherent_state(a0, dim).unwrap());
        let grid = PhaseGrid::for_state(a0.norm());
        let r0 = reconstruct_r(&rho, &grid, &KERR, 0.0).unwrap();
        assert!((&r0 - &rho).norm() <= 1e-4);
        assert!(fock::is_hermitian(&r0, 1e-10));
    }

    #[test]
    fn kerr_reconstruction_develops_negativity() {
        // Tr R = 1, Tr R² = 1 within quadrature error, min eigenvalue < 0
        let dim = 18;
        let a0 = C64::new(1.5, 0.0);
        let rho = projector(&coherent_state(a0, dim).unwrap());
        let grid = PhaseGrid::for_state(a0.norm());
        let r = reconstruct_r(&rho, &grid, &KERR, 0.05).unwrap();
        assert_abs_diff_eq!(r.trace().re, 1.0, epsilon = 1e-5);
        assert_abs_diff_eq!((&r * &r).trace().re, 1.0, epsilon = 1e-3);
        let eig = fock::eigen::jacobi_hermitian(
            &r,
            fock::eigen::DEFAULT_REL_THRESHOLD,
            fock::eigen::DEFAULT_MAX_SWEEPS,
        )
        .unwrap();
        assert!(eig.values[0] < 0.0, "lambda_min = {:.3e}", eig.values[0]);
    }
}
