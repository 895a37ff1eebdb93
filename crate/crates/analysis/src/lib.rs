//! Diagnostics on reconstructed operators: spectra, sum rules, negativity,
//! min-max upper bounds on the smallest eigenvalue, overlap functionals
//! (fidelity and self-correlation), and rate fitting.
//!
//! Everything here treats the operator `R` as data; no evolution is
//! performed except by explicit callers. The min-max machinery works on any
//! Hermitian matrix, so the same trial families serve both the evolved
//! operator (bound on `λ_min(R(t))`) and the generator output (bound on the
//! appearance *rate* of the negative eigenvalue).

use fock::eigen::{jacobi_hermitian, EigenError};
use fock::{coherent_state, CMat, CVec, FockError, C64, ONE};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error("trial family is empty (no admissible orthogonal states)")]
    EmptyFamily,
    #[error("imaginary residue {residue:.3e} exceeds {limit:.3e}; operator is not Hermitian")]
    ImaginaryResidue { residue: f64, limit: f64 },
    #[error("rate fit needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
}

/// Full spectrum of a Hermitian operator, eigenvalues sorted descending,
/// eigenvectors orthonormal and aligned with `eigenvalues`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<CVec>,
}

/// Least-squares rate estimate over a time window; the residual is the
/// root-mean-square misfit and is always reported alongside the slope.
#[derive(Debug, Clone, Copy)]
pub struct RateEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub window: (f64, f64),
}

/// Fit models for [`rate_fit`]: a straight line `v = slope·t + intercept`,
/// or a parabola pinned to `v(0) = 1`, `v = 1 + slope·t²` (for fidelity-like
/// series that start at unity).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    Linear,
    QuadraticThroughOne,
}

/// Trial-state families for the min-max bound. Every trial is exactly
/// orthogonal to the reference state by construction.
#[derive(Debug, Clone)]
pub enum TrialFamily {
    /// The orthogonal complement of the reference state inside
    /// span{|0⟩, |1⟩, |2⟩}. The minimum over this (2- or 3-dimensional)
    /// subspace is computed in closed form by compressing the operator, so
    /// this family realizes the fully optimized low-level bound.
    TwoLevel,
    /// Coherent states |β⟩ orthogonalized against the reference state,
    /// |φ⟩ ∝ |β⟩ − ⟨ψ₀|β⟩|ψ₀⟩, with β on a `points × points` square grid
    /// centered at `center` spanning ± `half_width` on each axis.
    CoherentOrthogonalized {
        center: C64,
        half_width: f64,
        points: usize,
    },
}

impl TrialFamily {
    /// The default orthogonalized-coherent grid: 21×21 points over
    /// |β − center| ≤ 2 per axis.
    pub fn coherent_default(center: C64) -> Self {
        TrialFamily::CoherentOrthogonalized { center, half_width: 2.0, points: 21 }
    }
}

/// Full Hermitian spectrum, descending. Cyclic Jacobi underneath
/// (threshold 1e-12 relative, at most 100 sweeps).
pub fn hermitian_eigen(r: &CMat) -> Result<Spectrum, AnalysisError> {
    let eig = jacobi_hermitian(r, 1e-12, 100)?;
    let n = eig.values.len();
    let eigenvalues: Vec<f64> = eig.values.iter().rev().copied().collect();
    let eigenvectors: Vec<CVec> =
        (0..n).rev().map(|k| CVec::from(eig.vectors.column(k))).collect();
    Ok(Spectrum { eigenvalues, eigenvectors })
}

/// Spectra of many operators, computed concurrently; output order matches
/// input order regardless of thread count.
pub fn batch_spectra(ops: &[CMat]) -> Result<Vec<Spectrum>, AnalysisError> {
    ops.par_iter().map(hermitian_eigen).collect()
}

/// `(Σλ, Σλ², Σλ(1−λ))`. For a faithfully evolved operator the first stays
/// at 1 (trace) while the defect grows as soon as the spectrum leaves {0,1}.
pub fn sum_rules(spectrum: &Spectrum) -> (f64, f64, f64) {
    let s1: f64 = spectrum.eigenvalues.iter().sum();
    let s2: f64 = spectrum.eigenvalues.iter().map(|l| l * l).sum();
    let defect: f64 = spectrum.eigenvalues.iter().map(|l| l * (1.0 - l)).sum();
    (s1, s2, defect)
}

/// Smallest eigenvalue and the sum of all negative eigenvalues.
pub fn negativity(spectrum: &Spectrum) -> (f64, f64) {
    let lambda_min = spectrum.eigenvalues.last().copied().unwrap_or(0.0);
    let negative_sum: f64 = spectrum.eigenvalues.iter().filter(|l| **l < 0.0).sum();
    (lambda_min, negative_sum)
}

/// Real expectation ⟨φ|M|φ⟩ with an imaginary-residue gate.
fn real_expectation(m: &CMat, phi: &CVec) -> Result<f64, AnalysisError> {
    let q = phi.dotc(&(m * phi));
    let limit = 1e-10 * m.norm().max(1.0);
    if q.im.abs() > limit {
        return Err(AnalysisError::ImaginaryResidue { residue: q.im.abs(), limit });
    }
    Ok(q.re)
}

/// Orthonormal basis of {v ∈ span{|0⟩,|1⟩,|2⟩} : v ⟂ ψ₀} by Gram–Schmidt
/// (re-orthogonalized once for numerical safety).
fn low_level_complement(psi0: &CVec) -> Vec<CVec> {
    let dim = psi0.len();
    assert!(dim >= 3, "two-level family needs dim >= 3");
    let mut basis: Vec<CVec> = Vec::new();
    for k in 0..3 {
        let mut v = CVec::zeros(dim);
        v[k] = ONE;
        for _ in 0..2 {
            let c = psi0.dotc(&v);
            v -= psi0 * c;
            for b in &basis {
                let cb = b.dotc(&v);
                v -= b * cb;
            }
        }
        let n = v.norm();
        if n > 1e-8 {
            basis.push(v / C64::new(n, 0.0));
        }
    }
    basis
}

/// min over the family of ⟨φ|M|φ⟩ for trials φ ⟂ ψ₀.
fn family_min(m: &CMat, psi0: &CVec, family: &TrialFamily) -> Result<f64, AnalysisError> {
    match family {
        TrialFamily::TwoLevel => {
            let basis = low_level_complement(psi0);
            if basis.is_empty() {
                return Err(AnalysisError::EmptyFamily);
            }
            for b in &basis {
                debug_assert!(psi0.dotc(b).norm() <= 1e-10);
            }
            let k = basis.len();
            let compressed = CMat::from_fn(k, k, |i, j| basis[i].dotc(&(m * &basis[j])));
            let eig = jacobi_hermitian(&compressed, 1e-12, 100)?;
            Ok(eig.values[0])
        }
        TrialFamily::CoherentOrthogonalized { center, half_width, points } => {
            if *points == 0 {
                return Err(AnalysisError::EmptyFamily);
            }
            let dim = psi0.len();
            let mut best: Option<f64> = None;
            for iy in 0..*points {
                for ix in 0..*points {
                    let frac = |i: usize| {
                        if *points == 1 { 0.0 } else { -1.0 + 2.0 * i as f64 / (*points as f64 - 1.0) }
                    };
                    let beta = center + C64::new(half_width * frac(ix), half_width * frac(iy));
                    let ket = coherent_state(beta, dim)?;
                    let overlap = psi0.dotc(&ket);
                    let mut phi = ket - psi0 * overlap;
                    let n = phi.norm();
                    if n * n <= 1e-12 {
                        continue; // |β⟩ coincides with ψ₀; no orthogonal direction
                    }
                    phi /= C64::new(n, 0.0);
                    debug_assert!(psi0.dotc(&phi).norm() <= 1e-10);
                    let v = real_expectation(m, &phi)?;
                    best = Some(best.map_or(v, |b: f64| b.min(v)));
                }
            }
            best.ok_or(AnalysisError::EmptyFamily)
        }
    }
}

/// Min-max upper bound on λ_min(R): the minimum of ⟨φ|R|φ⟩ over a family of
/// trial states exactly orthogonal to `psi0`. Always ≥ the true λ_min.
pub fn minmax_bound(r: &CMat, psi0: &CVec, family: &TrialFamily) -> Result<f64, AnalysisError> {
    family_min(r, psi0, family)
}

/// Short-time form of the bound: evaluates the generator once at `r0` and
/// minimizes ⟨φ|L(R₀)|φ⟩, the per-unit-time appearance rate of the negative
/// eigenvalue (λ_min(t) ≤ t · returned value for small t).
pub fn minmax_short_time(
    spec: &generator::GeneratorSpec,
    r0: &CMat,
    psi0: &CVec,
    family: &TrialFamily,
) -> Result<f64, AnalysisError> {
    let g = generator::rhs(spec, r0);
    family_min(&g, psi0, family)
}

/// Unitary reference evolution ψ(t) = Σ_k e^{−iE_k t}⟨E_k|ψ₀⟩|E_k⟩ through
/// the full eigendecomposition of `h`.
pub fn exact_evolve(psi0: &CVec, h: &CMat, t: f64) -> Result<CVec, AnalysisError> {
    let eig = jacobi_hermitian(h, 1e-12, 100)?;
    let n = psi0.len();
    let mut out = CVec::zeros(n);
    for k in 0..n {
        let ek = eig.vectors.column(k);
        let c: C64 = ek.dotc(psi0);
        let phase = C64::new(0.0, -eig.values[k] * t).exp();
        out += CVec::from(ek) * (c * phase);
    }
    Ok(out)
}

/// F(t) = ⟨ψ(t)|R(t)|ψ(t)⟩ against an externally supplied reference state.
pub fn fidelity(r: &CMat, psi_t: &CVec) -> Result<f64, AnalysisError> {
    real_expectation(r, psi_t)
}

/// G(t) = ⟨ψ(0)|R(t)|ψ(0)⟩ — fidelity against the frozen initial state.
pub fn self_correlation(r: &CMat, psi0: &CVec) -> Result<f64, AnalysisError> {
    real_expectation(r, psi0)
}

/// Least-squares fit of a sampled series. `Linear` fits slope and intercept;
/// `QuadraticThroughOne` fits the single coefficient of `v = 1 + slope·t²`.
pub fn rate_fit(series: &[(f64, f64)], model: FitModel) -> Result<RateEstimate, AnalysisError> {
    if series.len() < 5 {
        return Err(AnalysisError::TooFewSamples { needed: 5, got: series.len() });
    }
    let n = series.len() as f64;
    let window = series.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(t, _)| {
        (lo.min(t), hi.max(t))
    });
    let (slope, intercept) = match model {
        FitModel::Linear => {
            let st: f64 = series.iter().map(|&(t, _)| t).sum();
            let sv: f64 = series.iter().map(|&(_, v)| v).sum();
            let stt: f64 = series.iter().map(|&(t, _)| t * t).sum();
            let stv: f64 = series.iter().map(|&(t, v)| t * v).sum();
            let denom = n * stt - st * st;
            let slope = (n * stv - st * sv) / denom;
            (slope, (sv - slope * st) / n)
        }
        FitModel::QuadraticThroughOne => {
            let s4: f64 = series.iter().map(|&(t, _)| t.powi(4)).sum();
            let s2v: f64 = series.iter().map(|&(t, v)| t * t * (v - 1.0)).sum();
            (s2v / s4, 1.0)
        }
    };
    let predict = |t: f64| match model {
        FitModel::Linear => slope * t + intercept,
        FitModel::QuadraticThroughOne => 1.0 + slope * t * t,
    };
    let residual =
        (series.iter().map(|&(t, v)| (v - predict(t)).powi(2)).sum::<f64>() / n).sqrt();
    Ok(RateEstimate { slope, intercept, residual, window })
}

/// Keep only samples with `t_min ≤ t ≤ t_max` (fit-window helper; rate fits
/// should exclude the first couple of integrator steps).
pub fn filtered_series(series: &[(f64, f64)], t_min: f64, t_max: f64) -> Vec<(f64, f64)> {
    series.iter().copied().filter(|&(t, _)| t >= t_min && t <= t_max).collect()
}

/// Large-|α| asymptotic appearance rate for an orthogonalized-coherent
/// bound at a coherent initial state: −|α|³ e^{−|α|²} / √(2e).
pub fn asymptotic_coherent_rate(alpha_abs: f64) -> f64 {
    -alpha_abs.powi(3) * (-alpha_abs * alpha_abs).exp() / (2.0 * std::f64::consts::E).sqrt()
}
