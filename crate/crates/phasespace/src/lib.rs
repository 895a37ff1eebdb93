//! Weyl symbols on uniform phase-space grids.
//!
//! The map between truncated-Fock operators and their Wigner (Weyl) symbols
//! uses the displaced-parity kernel with an explicit factor two,
//! `w(α) = 2 D(α) (−1)^{a†a} D†(α)`, so that with the measure `d²α/π` both
//! the normalization `∫ W_ρ = 1` and the purity `∫ W_ρ² = Tr ρ²` hold at
//! once. Under this convention a coherent state `|α0>` has the Gaussian
//! symbol `2 exp(−2|α − α0|²)`.
//!
//! Quadrature is the midpoint rule on a square grid: symbols of physical
//! states decay like Gaussians, so midpoint converges at O(h²) and nothing
//! is ever evaluated on the boundary. All grid sums run in a fixed order,
//! making every reduction bit-stable across thread counts.

use fock::{CMat, C64};
use std::io;
use thiserror::Error;

pub mod kernel;

pub use kernel::{projected_kernel, symbol_at, weyl_kernel, KernelCache, DEFAULT_CACHE_BUDGET};

#[derive(Debug, Error)]
pub enum PhaseSpaceError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field/grid size mismatch: {values} values on a {nodes}-node grid")]
    SizeMismatch { values: usize, nodes: usize },
    #[error("symbol input is not Hermitian (imaginary residue {0:.3e})")]
    NonHermitianInput(f64),
    #[error("grids differ between operands")]
    GridMismatch,
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Uniform square grid of midpoint nodes
/// `α_jk = (−r_max + (j+½)h) + i(−r_max + (k+½)h)` with `h = 2 r_max / M`,
/// stored row-major in `(j, k)` (flat index `j·M + k`).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    r_max: f64,
    points: usize,
    nodes: Vec<C64>,
}

impl PhaseGrid {
    pub fn new(r_max: f64, points_per_axis: usize) -> Result<Self, PhaseSpaceError> {
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(PhaseSpaceError::InvalidGrid(format!(
                "r_max must be positive and finite, got {r_max}"
            )));
        }
        if points_per_axis < 2 {
            return Err(PhaseSpaceError::InvalidGrid(format!(
                "points_per_axis must be >= 2, got {points_per_axis}"
            )));
        }
        let m = points_per_axis;
        let h = 2.0 * r_max / m as f64;
        let axis: Vec<f64> = (0..m).map(|j| -r_max + (j as f64 + 0.5) * h).collect();
        let mut nodes = Vec::with_capacity(m * m);
        for &re in &axis {
            for &im in &axis {
                nodes.push(C64::new(re, im));
            }
        }
        Ok(Self { r_max, points: m, nodes })
    }

    /// Default grid for a state of magnitude `|α0|`: half-extent `|α0| + 4`,
    /// resolution chosen so the spacing is at most `0.1`.
    pub fn for_state(alpha0_mag: f64) -> Self {
        let r_max = alpha0_mag.abs() + 4.0;
        let m = (2.0 * r_max / 0.1).ceil() as usize;
        Self::new(r_max, m).expect("default grid parameters are valid")
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    /// Node spacing `h = 2 r_max / M`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.r_max / self.points as f64
    }

    /// Quadrature weight per node, `h²/π` (the discrete `d²α/π`).
    pub fn node_weight(&self) -> f64 {
        let h = self.spacing();
        h * h / std::f64::consts::PI
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[C64] {
        &self.nodes
    }

    pub fn flat(&self, j: usize, k: usize) -> usize {
        j * self.points + k
    }

    /// True when the flat index lies on the outermost ring of nodes.
    pub fn is_boundary(&self, idx: usize) -> bool {
        let (j, k) = (idx / self.points, idx % self.points);
        j == 0 || k == 0 || j == self.points - 1 || k == self.points - 1
    }
}

/// Real-valued samples of a Weyl symbol on a [`PhaseGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct WignerField {
    pub grid: PhaseGrid,
    pub values: Vec<f64>,
}

impl WignerField {
    pub fn new(grid: PhaseGrid, values: Vec<f64>) -> Result<Self, PhaseSpaceError> {
        if values.len() != grid.len() {
            return Err(PhaseSpaceError::SizeMismatch {
                values: values.len(),
                nodes: grid.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: PhaseGrid) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n] }
    }

    /// Largest magnitude on the outermost node ring relative to the largest
    /// magnitude overall. Reconstructions are only trustworthy when this is
    /// small (conventional threshold `1e-8`): mass on the boundary means the
    /// grid clips the symbol.
    pub fn boundary_leak(&self) -> f64 {
        let mut max_all = 0.0f64;
        let mut max_boundary = 0.0f64;
        for (idx, v) in self.values.iter().enumerate() {
            let a = v.abs();
            max_all = max_all.max(a);
            if self.grid.is_boundary(idx) {
                max_boundary = max_boundary.max(a);
            }
        }
        if max_all == 0.0 {
            0.0
        } else {
            max_boundary / max_all
        }
    }

    /// Write as CSV with header `re_alpha,im_alpha,w`, row-major in `(j, k)`.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), PhaseSpaceError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["re_alpha", "im_alpha", "w"])
            .map_err(|e| PhaseSpaceError::Csv(e.to_string()))?;
        for (node, v) in self.grid.nodes().iter().zip(&self.values) {
            w.write_record(&[
                format!("{:.12e}", node.re),
                format!("{:.12e}", node.im),
                format!("{:.12e}", v),
            ])
            .map_err(|e| PhaseSpaceError::Csv(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a field written by [`write_csv`](Self::write_csv), rebuilding the
    /// grid from the node coordinates.
    pub fn read_csv<R: io::Read>(input: R) -> Result<Self, PhaseSpaceError> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut values = Vec::new();
        let mut first_re = None;
        for rec in rdr.records() {
            let rec = rec.map_err(|e| PhaseSpaceError::Csv(e.to_string()))?;
            if rec.len() != 3 {
                return Err(PhaseSpaceError::Csv(format!(
                    "expected 3 columns, got {}",
                    rec.len()
                )));
            }
            let re: f64 = rec[0]
                .parse()
                .map_err(|e| PhaseSpaceError::Csv(format!("bad re_alpha: {e}")))?;
            let v: f64 = rec[2]
                .parse()
                .map_err(|e| PhaseSpaceError::Csv(format!("bad w: {e}")))?;
            first_re.get_or_insert(re);
            values.push(v);
        }
        let n = values.len();
        let m = (n as f64).sqrt().round() as usize;
        if m < 2 || m * m != n {
            return Err(PhaseSpaceError::Csv(format!(
                "row count {n} is not a square of an axis size >= 2"
            )));
        }
        // first node sits at -r_max + h/2 = -r_max (1 - 1/M)
        let re0 = first_re.unwrap();
        let r_max = -re0 * m as f64 / (m as f64 - 1.0);
        let grid = PhaseGrid::new(r_max, m)?;
        WignerField::new(grid, values)
    }
}

// ---------------------------------------------------------------------------
// quadrature
// ---------------------------------------------------------------------------

/// `∫ d²α/π W(α)` by midpoint quadrature — approximates `Tr f`.
pub fn integrate(field: &WignerField) -> f64 {
    field.grid.node_weight() * field.values.iter().sum::<f64>()
}

/// `∫ d²α/π W(α)²` — approximates the purity `Tr f²`.
pub fn purity(field: &WignerField) -> f64 {
    field.grid.node_weight() * field.values.iter().map(|v| v * v).sum::<f64>()
}

/// `∫ d²α/π W_f W_g` — approximates `Tr(f g)`; the two fields must share a
/// grid.
pub fn overlap(f: &WignerField, g: &WignerField) -> Result<f64, PhaseSpaceError> {
    if f.grid != g.grid {
        return Err(PhaseSpaceError::GridMismatch);
    }
    Ok(f.grid.node_weight()
        * f.values
            .iter()
            .zip(&g.values)
            .map(|(a, b)| a * b)
            .sum::<f64>())
}

/// Weyl symbol of a Hermitian operator on every grid node,
/// `W_f(α_jk) = Tr(f w(α_jk))`. The imaginary parts (which vanish for
/// Hermitian input) are checked against `1e-10` (relative to `max(1, ‖f‖_F)`)
/// and discarded.
pub fn symbol(f: &CMat, grid: &PhaseGrid) -> Result<WignerField, PhaseSpaceError> {
    let cache = KernelCache::new(grid, f.nrows(), DEFAULT_CACHE_BUDGET);
    symbol_with(f, &cache)
}

/// [`symbol`] against a prebuilt kernel cache (reuse across many operators).
pub fn symbol_with(f: &CMat, cache: &KernelCache) -> Result<WignerField, PhaseSpaceError> {
    let grid = cache.grid().clone();
    let dim = f.nrows();
    assert_eq!(dim, cache.dim(), "operator dimension must match cache");
    let scale = f.norm().max(1.0);
    let mut values = vec![0.0; grid.len()];
    let mut worst_imag = 0.0f64;
    for (idx, v) in values.iter_mut().enumerate() {
        let w = cache.node_kernel(idx);
        // Tr(f w) = sum_{m,n} f[m,n] w[n,m]
        let mut tr = C64::new(0.0, 0.0);
        for m in 0..dim {
            for n in 0..dim {
                tr += f[(m, n)] * w[(n, m)];
            }
        }
        worst_imag = worst_imag.max(tr.im.abs());
        *v = tr.re;
    }
    if worst_imag > 1e-10 * scale {
        return Err(PhaseSpaceError::NonHermitianInput(worst_imag));
    }
    WignerField::new(grid, values)
}

/// Reconstruct the operator from its symbol:
/// `f = Σ_nodes (h²/π) w(α_jk) W_jk`. Consult
/// [`WignerField::boundary_leak`] before trusting the result — symbol mass
/// on the grid edge means the quadrature clips the operator.
pub fn inverse_map(field: &WignerField, dim: usize) -> CMat {
    let cache = KernelCache::new(&field.grid, dim, DEFAULT_CACHE_BUDGET);
    inverse_map_with(field, &cache)
}

/// [`inverse_map`] against a prebuilt kernel cache.
pub fn inverse_map_with(field: &WignerField, cache: &KernelCache) -> CMat {
    let dim = cache.dim();
    let w = field.grid.node_weight();
    let mut out = CMat::zeros(dim, dim);
    for (idx, v) in field.values.iter().enumerate() {
        let k = cache.node_kernel(idx);
        let c = w * v;
        // accumulate in a fixed node order for bit-stable output
        out.zip_apply(&*k, |o, kv| *o += kv * C64::new(c, 0.0));
    }
    out
}

/// Symbol of the monomial Hamiltonian at a point:
/// `W_H(α) = coupling · (α̅^m α^n + α^m α̅^n)`.
pub fn hamiltonian_symbol(params: &fock::MonomialParams, alpha: C64) -> f64 {
    let am = alpha.conj().powu(params.m) * alpha.powu(params.n);
    params.coupling * 2.0 * am.re
}
