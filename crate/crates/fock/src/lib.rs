//! Truncated Fock-space operator algebra.
//!
//! Everything here lives on the truncated basis `{ |0>, ..., |dim-1> }` with
//! `hbar = 1` and dimensionless couplings. Operators are dense
//! `DMatrix<Complex64>` values; states are `DVector<Complex64>` with unit
//! norm after preparation.
//!
//! Truncation is the one ever-present hazard: `a a† − a†a` has diagonal
//! `(1, 1, ..., 1, −(dim−1))`, so identities that hold in infinite dimension
//! break on the top level. Callers should keep populated levels at least two
//! below `dim − 1`; [`coherent_tail`] exposes the boundary population so
//! runners can warn or abort.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

pub mod eigen;

/// Shorthand for the complex scalar type used throughout the workspace.
pub type C64 = Complex64;
/// Dense complex matrix (operator on the truncated Fock space).
pub type CMat = DMatrix<C64>;
/// Dense complex vector (state on the truncated Fock space).
pub type CVec = DVector<C64>;

/// `i` as a `C64`.
pub const IM: C64 = C64::new(0.0, 1.0);
/// `1` as a `C64`.
pub const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Error)]
pub enum FockError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("operator is not Hermitian (residual {0:.3e})")]
    NonHermitian(f64),
    #[error("invalid monomial indices: {0}")]
    InvalidParams(String),
}

/// Indices and coupling of a symmetrized monomial Hamiltonian
/// `{ a†^m a^n + a†^n a^m }_sym` with `n >= m`, `n + m >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonomialParams {
    pub m: u32,
    pub n: u32,
    pub coupling: f64,
}

impl MonomialParams {
    pub fn new(m: u32, n: u32, coupling: f64) -> Result<Self, FockError> {
        if n < m {
            return Err(FockError::InvalidParams(format!(
                "require n >= m, got m={m}, n={n}"
            )));
        }
        if n + m == 0 {
            return Err(FockError::InvalidParams("require n + m >= 1".into()));
        }
        Ok(Self { m, n, coupling })
    }

    /// The Kerr oscillator `(m, n) = (2, 2)` at unit coupling.
    pub fn kerr() -> Self {
        Self { m: 2, n: 2, coupling: 1.0 }
    }

    /// Second-harmonic generation `(m, n) = (1, 2)` at unit coupling.
    pub fn shg() -> Self {
        Self { m: 1, n: 2, coupling: 1.0 }
    }

    /// The harmonic oscillator `(m, n) = (1, 1)` at unit coupling.
    pub fn harmonic() -> Self {
        Self { m: 1, n: 1, coupling: 1.0 }
    }
}

/// Annihilation and creation operators on the truncated space:
/// `a[j][j+1] = sqrt(j+1)`, `a_dagger = a†`.
pub fn ladder(dim: usize) -> Result<(CMat, CMat), FockError> {
    if dim < 2 {
        return Err(FockError::InvalidDimension(format!(
            "ladder needs dim >= 2, got {dim}"
        )));
    }
    let mut a = CMat::zeros(dim, dim);
    for j in 0..dim - 1 {
        a[(j, j + 1)] = C64::new(((j + 1) as f64).sqrt(), 0.0);
    }
    let ad = a.adjoint();
    Ok((a, ad))
}

/// Parity operator `(−1)^{a†a}`: diagonal `(+1, −1, +1, ...)`.
pub fn parity(dim: usize) -> CMat {
    CMat::from_fn(dim, dim, |j, k| {
        if j == k {
            C64::new(if j % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `op^k` by repeated multiplication (`k = 0` gives the identity).
pub fn matpow(op: &CMat, k: u32) -> CMat {
    let dim = op.nrows();
    let mut out = CMat::identity(dim, dim);
    for _ in 0..k {
        out = &out * op;
    }
    out
}

/// Frobenius distance to the adjoint, as a Hermiticity residual.
pub fn hermiticity_residual(op: &CMat) -> f64 {
    (op - op.adjoint()).norm()
}

/// True when `op` is Hermitian within `tol` (Frobenius residual).
pub fn is_hermitian(op: &CMat, tol: f64) -> bool {
    hermiticity_residual(op) <= tol
}

// ---------------------------------------------------------------------------
// normal re-ordering
// ---------------------------------------------------------------------------

/// Coefficients of the normal re-ordering
/// `a^k a†^l = Σ_p c_p a†^{l−p} a^{k−p}`, `p = 0..min(k,l)`,
/// with `c_p = C(k,p) C(l,p) p!`.
///
/// The frequently quoted closed form `k! l! / ((k−p)! (l−p)!)` is missing the
/// `1/p!`; the version here is the one that reproduces the matrix products
/// (e.g. `a² a†² = a†²a² + 4 a†a + 2`).
pub fn normal_reorder_coeffs(k: u32, l: u32) -> Vec<(u32, f64)> {
    let pmax = k.min(l);
    let mut out = Vec::with_capacity(pmax as usize + 1);
    for p in 0..=pmax {
        // C(k,p) * C(l,p) * p!  built as a running product to stay exact
        // in f64 for the small indices used here
        let mut c = 1.0f64;
        for i in 0..p {
            c *= (k - i) as f64 / (i + 1) as f64; // C(k,p)
        }
        for i in 0..p {
            c *= (l - i) as f64 / (i + 1) as f64; // C(l,p)
        }
        for i in 1..=p {
            c *= i as f64; // p!
        }
        out.push((p, c));
    }
    out
}

// ---------------------------------------------------------------------------
// Hamiltonians
// ---------------------------------------------------------------------------

fn binom(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut c = 1.0f64;
    for i in 0..k {
        c *= (n - i) as f64 / (i + 1) as f64;
    }
    c
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

// one ordered block of the symmetrized normal form:
// a†^m a^n + Σ_{k=1}^{m} C(m,k) C(n,k) k! (1/2)^k a†^{m−k} a^{n−k}
fn symmetrized_block(m: u32, n: u32, a: &CMat, ad: &CMat) -> CMat {
    let mut out = matpow(ad, m) * matpow(a, n);
    for k in 1..=m.min(n) {
        let c = binom(m, k) * binom(n, k) * factorial(k) * 0.5f64.powi(k as i32);
        out += (matpow(ad, m - k) * matpow(a, n - k)).scale(c);
    }
    out
}

/// Symmetrized monomial Hamiltonian `H_mn` in its normal-ordered closed form:
/// the average over all orderings of `m` daggered and `n` plain factors, plus
/// the `m ↔ n` mirror, scaled by the coupling.
///
/// Reference cases: `H_11 = 2 a†a + 1`, `H_22 = 2 a†²a² + 4 a†a + 1` (Kerr),
/// `H_12 = a†a² + a†²a + a + a†` (SHG).
pub fn symmetrized_hamiltonian(params: &MonomialParams, dim: usize) -> Result<CMat, FockError> {
    if params.n as usize >= dim {
        return Err(FockError::InvalidDimension(format!(
            "need n < dim, got n={}, dim={dim}",
            params.n
        )));
    }
    let (a, ad) = ladder(dim)?;
    let h = symmetrized_block(params.m, params.n, &a, &ad)
        + symmetrized_block(params.n, params.m, &a, &ad);
    Ok(h.scale(params.coupling))
}

/// Effective Hamiltonian of the phase-space evolution:
/// `(n+m)/2^{n+m} (a†^m a^n + a†^n a^m + a^n a†^m + a^m a†^n)`, scaled by the
/// coupling. For `m = n` this is diagonal together with `H_mn`; notable
/// identities: `H_eff(2,2) = ½ H_22 + ½`, `H_eff(1,2) = ¾ H_12`.
pub fn effective_hamiltonian(params: &MonomialParams, dim: usize) -> Result<CMat, FockError> {
    if params.n as usize >= dim {
        return Err(FockError::InvalidDimension(format!(
            "need n < dim, got n={}, dim={dim}",
            params.n
        )));
    }
    let (a, ad) = ladder(dim)?;
    let (m, n) = (params.m, params.n);
    let pref = (n + m) as f64 / 2f64.powi((n + m) as i32);
    let h = matpow(&ad, m) * matpow(&a, n)
        + matpow(&ad, n) * matpow(&a, m)
        + matpow(&a, n) * matpow(&ad, m)
        + matpow(&a, m) * matpow(&ad, n);
    Ok(h.scale(pref * params.coupling))
}

// ---------------------------------------------------------------------------
// displacement and states
// ---------------------------------------------------------------------------

/// Displacement operator `D(α) = exp(α a† − α* a)` on the truncated space,
/// built by eigendecomposition of the Hermitian generator `i(α a† − α* a)`
/// (so `D = V e^{−iλ} V†`), not by series summation.
///
/// Unitary only away from the truncation boundary; callers populating levels
/// near `dim − 1` should consult [`coherent_tail`] first.
pub fn displacement(alpha: C64, dim: usize) -> Result<CMat, FockError> {
    let (a, ad) = ladder(dim)?;
    let gen = (ad.scale_complex(alpha) - a.scale_complex(alpha.conj())).scale_complex(IM);
    let eig = eigen::jacobi_hermitian(&gen, eigen::DEFAULT_REL_THRESHOLD, eigen::DEFAULT_MAX_SWEEPS)
        .map_err(|e| FockError::InvalidDimension(format!("displacement eigensolve: {e}")))?;
    // D = V diag(exp(-i lambda)) V†
    let mut phased = eig.vectors.clone();
    for (j, lam) in eig.values.iter().enumerate() {
        let ph = C64::new(0.0, -lam).exp();
        for i in 0..dim {
            phased[(i, j)] *= ph;
        }
    }
    Ok(&phased * eig.vectors.adjoint())
}

trait ScaleComplex {
    fn scale_complex(&self, c: C64) -> CMat;
}

impl ScaleComplex for CMat {
    fn scale_complex(&self, c: C64) -> CMat {
        self.map(|x| x * c)
    }
}

/// Population `|<dim−1|α>|²` of the top retained level of a coherent state,
/// evaluated in log space. The conventional safety threshold is `1e-8`.
pub fn coherent_tail(alpha: C64, dim: usize) -> f64 {
    let x = alpha.norm_sqr();
    if x == 0.0 {
        return 0.0;
    }
    let n = (dim - 1) as f64;
    let mut ln_fact = 0.0;
    for i in 1..dim {
        ln_fact += (i as f64).ln();
    }
    (-x + n * x.ln() - ln_fact).exp()
}

/// Kinds of initial states used across the toolkit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateKind {
    /// Fock state `|n>`.
    Fock(usize),
    /// Coherent state `|α>` (renormalized on the truncated space).
    Coherent(C64),
    /// Low-excited coherent state `(|0> + α|1>)/√(1+|α|²)`.
    LowExcited(C64),
}

/// Prepare a unit-norm state of the given kind.
pub fn state_prep(kind: &StateKind, dim: usize) -> Result<CVec, FockError> {
    match *kind {
        StateKind::Fock(n) => {
            if n >= dim {
                return Err(FockError::InvalidDimension(format!(
                    "fock level {n} >= dim {dim}"
                )));
            }
            let mut v = CVec::zeros(dim);
            v[n] = ONE;
            Ok(v)
        }
        StateKind::Coherent(alpha) => coherent_state(alpha, dim),
        StateKind::LowExcited(alpha) => {
            if dim < 2 {
                return Err(FockError::InvalidDimension(
                    "low_excited needs dim >= 2".into(),
                ));
            }
            let norm = (1.0 + alpha.norm_sqr()).sqrt();
            let mut v = CVec::zeros(dim);
            v[0] = ONE / norm;
            v[1] = alpha / norm;
            Ok(v)
        }
    }
}

/// Coherent state with Poisson amplitudes `e^{−|α|²/2} α^n / √n!`,
/// renormalized after truncation.
pub fn coherent_state(alpha: C64, dim: usize) -> Result<CVec, FockError> {
    if dim < 1 {
        return Err(FockError::InvalidDimension("coherent needs dim >= 1".into()));
    }
    let mut v = CVec::zeros(dim);
    let pref = (-0.5 * alpha.norm_sqr()).exp();
    let mut amp = C64::new(pref, 0.0);
    v[0] = amp;
    for n in 1..dim {
        amp = amp * alpha / C64::new((n as f64).sqrt(), 0.0);
        v[n] = amp;
    }
    let norm = v.norm();
    Ok(v.map(|x| x / C64::new(norm, 0.0)))
}

/// Rank-one density operator `|ψ><ψ|`.
pub fn projector(psi: &CVec) -> CMat {
    let dim = psi.len();
    CMat::from_fn(dim, dim, |i, j| psi[i] * psi[j].conj())
}
