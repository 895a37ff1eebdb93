//! Matrix form of the generator and the phase-space oracle.
//!
//! Superoperators act on column-stacked operators (`vec` concatenates
//! columns, matching the dense storage order), so `vec(A X B) =
//! (Bᵀ ⊗ A) vec(X)` and one verified convention covers the commutator and
//! every channel term.
//!
//! [`oracle_generator`] rebuilds the *entire* generator — commutator part
//! included — from nothing but the classical flow and the Weyl maps: probe
//! each matrix unit `E_ab`, push its symbol forward and backward by a small
//! `dt`, reconstruct, and take the central difference. Where the assembled
//! channel lists and the oracle agree, the operator-side equation of motion
//! is validated end-to-end against the phase-space definition it came from.

use crate::{GeneratorError, GeneratorSpec};
use fock::{CMat, CVec, C64, IM};
use phasespace::{projected_kernel, PhaseGrid};

/// Dense matrix of a linear map on operators; `mat` is `dim² × dim²`.
#[derive(Debug, Clone)]
pub struct SuperOperator {
    pub dim: usize,
    pub mat: CMat,
}

/// Column-major stack of an operator.
pub fn vec_op(r: &CMat) -> CVec {
    CVec::from_column_slice(r.as_slice())
}

/// Inverse of [`vec_op`].
pub fn unvec_op(v: &CVec, dim: usize) -> CMat {
    CMat::from_column_slice(dim, dim, v.as_slice())
}

impl SuperOperator {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, mat: CMat::zeros(dim * dim, dim * dim) }
    }

    /// Assemble the matrix of `R ↦ i[R, h_eff] + Σ_j w_j(2L_jRL_j† − …)`.
    pub fn from_generator(spec: &GeneratorSpec) -> Self {
        let dim = spec.dim();
        let id = CMat::identity(dim, dim);
        let ht = spec.h_eff.transpose();
        let mut mat = (ht.kronecker(&id) - id.kronecker(&spec.h_eff)).map(|x| x * IM);
        for ch in &spec.channels {
            let lconj = ch.l.conjugate();
            let ldl = ch.l_dag_l();
            let term = lconj.kronecker(&ch.l).scale(2.0)
                - id.kronecker(ldl)
                - ldl.transpose().kronecker(&id);
            mat += term.scale(ch.weight);
        }
        Self { dim, mat }
    }

    /// Apply to an operator: unstack(S · vec(R)).
    pub fn apply(&self, r: &CMat) -> CMat {
        assert_eq!(r.nrows(), self.dim, "operand dimension mismatch");
        unvec_op(&(&self.mat * vec_op(r)), self.dim)
    }

    /// Compress to inputs and outputs supported on levels `< sub`.
    pub fn sub_block(&self, sub: usize) -> SuperOperator {
        assert!(sub <= self.dim);
        let map = |r: usize, c: usize| r + c * self.dim;
        let mut mat = CMat::zeros(sub * sub, sub * sub);
        for bcol in 0..sub {
            for acol in 0..sub {
                let col = acol + bcol * sub;
                for d in 0..sub {
                    for c in 0..sub {
                        mat[(c + d * sub, col)] = self.mat[(map(c, d), map(acol, bcol))];
                    }
                }
            }
        }
        SuperOperator { dim: sub, mat }
    }

    /// Largest singular value, by power iteration on `S†S` (deterministic
    /// start, converged to 1e-10 relative or 1000 iterations).
    pub fn op_norm(&self) -> f64 {
        let n = self.mat.nrows();
        if n == 0 || self.mat.norm() == 0.0 {
            return 0.0;
        }
        let mut v = CVec::from_fn(n, |i, _| C64::new(1.0 + (i as f64 + 1.0) / n as f64, 0.0));
        let norm = v.norm();
        v /= C64::new(norm, 0.0);
        let mut sigma2 = 0.0f64;
        for _ in 0..1000 {
            let w = self.mat.adjoint() * (&self.mat * &v);
            let nw = w.norm();
            if nw == 0.0 {
                return 0.0;
            }
            let done = (nw - sigma2).abs() <= 1e-10 * nw.max(1e-300);
            sigma2 = nw;
            v = w / C64::new(nw, 0.0);
            if done {
                break;
            }
        }
        sigma2.sqrt()
    }
}

/// Oracle superoperator plus a conditioning diagnostic: the worst ratio of
/// the symmetric second difference to the first difference over all nodes.
/// Small values mean `dt_probe` cleanly resolves the flow derivative; large
/// values (≳ 0.05) mean the central difference is curvature-polluted.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub superop: SuperOperator,
    pub curvature_ratio: f64,
}

/// Finite-difference generator from the phase-space route, restricted to
/// matrix units on levels `< probe_dim`: column `(a, b)` is
/// `(R_{E_ab}(+dt) − R_{E_ab}(−dt)) / (2 dt)` with both reconstructions
/// through the classical flow on `grid`.
///
/// The kernel matrix elements are dimension-independent, so probing at
/// `probe_dim` is exactly the `probe_dim`-block of the full-dimension
/// oracle; `dim` only bounds `probe_dim`. Cost scales as
/// `nodes · probe_dim⁴`.
pub fn oracle_generator_block(
    params: &fock::MonomialParams,
    dim: usize,
    probe_dim: usize,
    grid: &PhaseGrid,
    dt_probe: f64,
) -> Result<OracleResult, GeneratorError> {
    assert!(probe_dim >= 1 && probe_dim <= dim, "need 1 <= probe_dim <= dim");
    assert!(dt_probe > 0.0, "dt_probe must be positive");
    let s = probe_dim;
    let coeff = grid.node_weight() / (2.0 * dt_probe);
    let mut mat = CMat::zeros(s * s, s * s);
    let mut curvature: f64 = 0.0;

    for &node in grid.nodes() {
        // pre-images for the +dt and -dt probes (probe-independent)
        let q_plus = classical::flow_default(params, node, -dt_probe)?.end;
        let q_minus = classical::flow_default(params, node, dt_probe)?.end;
        let w_plus = projected_kernel(q_plus, s);
        let w_minus = projected_kernel(q_minus, s);
        let w_node = projected_kernel(node, s);

        let delta = &w_plus - &w_minus;
        let e1 = delta.norm();
        if e1 > 1e-12 {
            let e2 = (w_plus + w_minus - w_node.scale(2.0)).norm();
            curvature = curvature.max(e2 / e1);
        }

        // column (a + b·s) gains coeff · delta[b, a] · vec(w_node)
        for b in 0..s {
            for a in 0..s {
                let f = delta[(b, a)] * coeff;
                if f.norm_sqr() == 0.0 {
                    continue;
                }
                let col = a + b * s;
                for d in 0..s {
                    for c in 0..s {
                        mat[(c + d * s, col)] += f * w_node[(c, d)];
                    }
                }
            }
        }
    }
    Ok(OracleResult {
        superop: SuperOperator { dim: s, mat },
        curvature_ratio: curvature,
    })
}

/// [`oracle_generator_block`] probing the full space (`probe_dim = dim`).
pub fn oracle_generator(
    params: &fock::MonomialParams,
    dim: usize,
    grid: &PhaseGrid,
    dt_probe: f64,
) -> Result<OracleResult, GeneratorError> {
    oracle_generator_block(params, dim, dim, grid, dt_probe)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{harmonic_generator, kerr_generator, rhs};
    use approx::assert_abs_diff_eq;
    use fock::MonomialParams;

    fn splitmix(state: &mut u64) -> f64 {
        *state = state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = *state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z = z ^ (z >> 31);
        (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }

    fn random_hermitian(n: usize, seed: u64) -> CMat {
        let mut st = seed;
        let g = CMat::from_fn(n, n, |_, _| C64::new(splitmix(&mut st), splitmix(&mut st)));
        (&g + g.adjoint()).scale(0.5)
    }

    #[test]
    fn vec_round_trip() {
        let r = random_hermitian(5, 1);
        assert!((unvec_op(&vec_op(&r), 5) - &r).norm() == 0.0);
        // column-major: vec index r + c*dim
        let v = vec_op(&r);
        assert_eq!(v[2 + 3 * 5], r[(2, 3)]);
    }

    #[test]
    fn assembled_matrix_matches_direct_rhs() {
        for spec in [kerr_generator(8, 1.0), crate::shg_generator(8, 1.0)] {
            let s = SuperOperator::from_generator(&spec);
            let r = random_hermitian(8, 42);
            let via_matrix = s.apply(&r);
            let direct = rhs(&spec, &r);
            assert!((&via_matrix - &direct).norm() <= 1e-12);
            // Hermiticity preservation through the matrix route
            assert!(fock::hermiticity_residual(&via_matrix) <= 1e-10);
        }
    }

    #[test]
    fn sub_block_indexing() {
        let spec = kerr_generator(6, 1.0);
        let s = SuperOperator::from_generator(&spec);
        let sb = s.sub_block(3);
        assert_eq!(sb.dim, 3);
        for rn in 0..9 {
            let (c, d) = (rn % 3, rn / 3);
            for cn in 0..9 {
                let (a, b) = (cn % 3, cn / 3);
                assert_eq!(sb.mat[(rn, cn)], s.mat[(c + d * 6, a + b * 6)]);
            }
        }
    }

    #[test]
    fn op_norm_reference_values() {
        // Hermitian case: operator norm is the spectral radius
        let h = random_hermitian(16, 9);
        let sop = SuperOperator { dim: 4, mat: h.clone() };
        let eig = fock::eigen::jacobi_hermitian(&h, 1e-12, 100).unwrap();
        let want = eig.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        assert_abs_diff_eq!(sop.op_norm(), want, epsilon = 1e-8);

        // simple non-normal case: sole singular value 3
        let mut mat = CMat::zeros(4, 4);
        mat[(0, 1)] = C64::new(3.0, 0.0);
        let sop = SuperOperator { dim: 2, mat };
        assert_abs_diff_eq!(sop.op_norm(), 3.0, epsilon = 1e-10);
    }

    #[test]
    fn zero_coupling_gives_zero_oracle() {
        let params = MonomialParams { m: 2, n: 2, coupling: 0.0 };
        let grid = PhaseGrid::new(3.0, 16).unwrap();
        let res = oracle_generator_block(&params, 8, 4, &grid, 1e-4).unwrap();
        assert_eq!(res.superop.mat.norm(), 0.0);
    }

    #[test]
    fn harmonic_oracle_is_the_commutator() {
        let (dim, sub) = (12, 8);
        let params = MonomialParams::harmonic();
        let grid = PhaseGrid::new(5.0, 100).unwrap();
        let oracle = oracle_generator_block(&params, dim, sub, &grid, 1e-4).unwrap();
        let assembled = SuperOperator::from_generator(&harmonic_generator(dim, 1.0)).sub_block(sub);
        let diff = SuperOperator {
            dim: sub,
            mat: &oracle.superop.mat - &assembled.mat,
        };
        let d = diff.op_norm();
        assert!(d <= 1e-3, "harmonic oracle deviation {d:.3e}");
        assert!(oracle.curvature_ratio < 0.05);
    }

    #[test]
    fn kerr_oracle_matches_assembled_channels() {
        let (dim, sub) = (12, 5);
        let params = MonomialParams::kerr();
        let grid = PhaseGrid::new(5.0, 80).unwrap();
        let oracle = oracle_generator_block(&params, dim, sub, &grid, 1e-4).unwrap();
        let assembled = SuperOperator::from_generator(&kerr_generator(dim, 1.0)).sub_block(sub);
        let diff = SuperOperator {
            dim: sub,
            mat: &oracle.superop.mat - &assembled.mat,
        };
        let d = diff.op_norm();
        assert!(d <= 1e-2, "kerr oracle deviation {d:.3e}");

        // the oracle map preserves Hermiticity
        let r = random_hermitian(sub, 5);
        let out = oracle.superop.apply(&r);
        assert!(fock::hermiticity_residual(&out) <= 1e-10 * out.norm().max(1.0));
    }

    #[test]
    fn curvature_diagnostic_grows_with_dt() {
        let params = MonomialParams::kerr();
        let grid = PhaseGrid::new(3.0, 20).unwrap();
        let fine = oracle_generator_block(&params, 6, 4, &grid, 1e-4).unwrap();
        let coarse = oracle_generator_block(&params, 6, 4, &grid, 5e-2).unwrap();
        assert!(coarse.curvature_ratio > 10.0 * fine.curvature_ratio);
    }
}
