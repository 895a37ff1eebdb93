//! Displaced-parity kernels, two ways.
//!
//! [`weyl_kernel`] is the literal truncated-space product
//! `2 D(α) (−1)^{a†a} D†(α)` with the unitary `D` from the eigensolver route:
//! it squares to `4·I` exactly and is the right object for single-point
//! checks. Grid quadrature, however, needs the *projection* of the
//! infinite-dimensional kernel onto the retained levels — the two differ in
//! how the discarded levels fold back, and only the projected matrix
//! elements make the discrete `∫ d²α/π` sums converge to traces. Those
//! elements have the classic closed form in associated Laguerre polynomials,
//!
//! `⟨m| w(α) |n⟩ = 2 (−1)^n √(n!/m!) (2α)^{m−n} e^{−2|α|²} L_n^{(m−n)}(4|α|²)`
//!
//! (for `m ≥ n`; conjugate-mirrored below the diagonal), which
//! [`projected_kernel`] evaluates by upward recurrence.

use crate::{PhaseGrid, PhaseSpaceError};
use fock::{CMat, C64};
use rayon::prelude::*;
use std::borrow::Cow;

/// Default memory budget for cached grid kernels (bytes).
pub const DEFAULT_CACHE_BUDGET: usize = 512 << 20;

/// Truncated-space displaced parity with the factor-two convention:
/// `w(α) = 2 D(α) (−1)^{a†a} D†(α)`. Unitary conjugation of parity, so
/// `w² = 4·I` and `Tr w = 2` for odd `dim`.
pub fn weyl_kernel(alpha: C64, dim: usize) -> Result<CMat, PhaseSpaceError> {
    let d = fock::displacement(alpha, dim)
        .map_err(|e| PhaseSpaceError::InvalidGrid(format!("kernel displacement: {e}")))?;
    let p = fock::parity(dim);
    Ok((&d * p * d.adjoint()).scale(2.0))
}

/// Matrix elements of the infinite-dimensional kernel projected onto the
/// first `dim` levels, by Laguerre recurrence. This is the kernel all grid
/// quadrature uses.
pub fn projected_kernel(alpha: C64, dim: usize) -> CMat {
    let beta = alpha * 2.0;
    let x = beta.norm_sqr();
    let envelope = 2.0 * (-0.5 * x).exp();

    let mut lnfact = vec![0.0f64; dim];
    for i in 1..dim {
        lnfact[i] = lnfact[i - 1] + (i as f64).ln();
    }

    let mut w = CMat::zeros(dim, dim);
    let mut beta_pow = C64::new(1.0, 0.0); // beta^d
    for d in 0..dim {
        // L_s^{(d)}(x) for s = 0..dim-d-1, upward in s
        let df = d as f64;
        let mut lm1 = 0.0f64;
        let mut l = 1.0f64;
        for s in 0..dim - d {
            if s > 0 {
                let k = (s - 1) as f64;
                let next = ((2.0 * k + 1.0 + df - x) * l - (k + df) * lm1) / (k + 1.0);
                lm1 = l;
                l = next;
            }
            let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
            let pref = (0.5 * (lnfact[s] - lnfact[s + d])).exp();
            let common = envelope * sign * pref * l;
            w[(s + d, s)] = beta_pow * common;
            w[(s, s + d)] = beta_pow.conj() * common;
        }
        beta_pow *= beta;
    }
    w
}

/// Symbol of `f` at a single point: `Tr(f · w_proj(α))`. Real up to
/// roundoff for Hermitian `f`.
pub fn symbol_at(f: &CMat, alpha: C64) -> C64 {
    let dim = f.nrows();
    let w = projected_kernel(alpha, dim);
    let mut tr = C64::new(0.0, 0.0);
    for m in 0..dim {
        for n in 0..dim {
            tr += f[(m, n)] * w[(n, m)];
        }
    }
    tr
}

/// Projected kernels for every node of a grid, cached up to a memory budget.
///
/// Within budget, all `M²` kernels are built once (in parallel — each node
/// is independent, and `collect` keeps node order, so the cache is
/// deterministic). Over budget, [`node_kernel`](Self::node_kernel) silently
/// recomputes per call instead.
pub struct KernelCache {
    grid: PhaseGrid,
    dim: usize,
    kernels: Option<Vec<CMat>>,
}

impl KernelCache {
    pub fn new(grid: &PhaseGrid, dim: usize, budget_bytes: usize) -> Self {
        let need = grid
            .len()
            .saturating_mul(dim * dim)
            .saturating_mul(std::mem::size_of::<C64>());
        let kernels = (need <= budget_bytes).then(|| {
            grid.nodes()
                .par_iter()
                .map(|&a| projected_kernel(a, dim))
                .collect()
        });
        Self {
            grid: grid.clone(),
            dim,
            kernels,
        }
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_cached(&self) -> bool {
        self.kernels.is_some()
    }

    /// Kernel for the node at `flat_idx` — borrowed when cached, recomputed
    /// otherwise.
    pub fn node_kernel(&self, flat_idx: usize) -> Cow<'_, CMat> {
        match &self.kernels {
            Some(k) => Cow::Borrowed(&k[flat_idx]),
            None => Cow::Owned(projected_kernel(self.grid.nodes()[flat_idx], self.dim)),
        }
    }
}
