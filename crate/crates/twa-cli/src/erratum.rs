//! Consistency report: re-measures the quantities this toolkit computes and
//! compares them against commonly quoted reference values, documenting every
//! deviation we adopted with numerical evidence. Each finding is measured
//! fresh at report time from the same code paths the runner uses.

use analysis::{rate_fit, FitModel};
use fock::{
    coherent_state, ladder, matpow, normal_reorder_coeffs, projector, state_prep, CMat,
    MonomialParams, StateKind, C64,
};
use generator::{
    kerr_generator, kraus_step, rhs, shg_generator, GeneratorSpec, LindbladChannel,
    SuperOperator,
};
use phasespace::{integrate, purity, symbol, weyl_kernel, PhaseGrid, WignerField};
use std::fmt::Write;

/// A generator variant with every channel weight rescaled (the commonly
/// quoted weights are one half of the working ones).
fn rescale_channels(spec: &GeneratorSpec, factor: f64) -> GeneratorSpec {
    GeneratorSpec {
        h_eff: spec.h_eff.clone(),
        channels: spec
            .channels
            .iter()
            .map(|ch| LindbladChannel::new(ch.weight * factor, ch.l.clone()))
            .collect(),
        f_form: None,
        oracle: None,
    }
}

/// Oracle-vs-assembled operator-norm discrepancy on a small sub-block.
fn oracle_discrepancy(params: &MonomialParams, spec: &GeneratorSpec, sub: usize) -> f64 {
    let grid = PhaseGrid::new(5.0, 60).expect("grid");
    let oracle = generator::oracle_generator_block(params, spec.dim(), sub, &grid, 1e-4)
        .expect("oracle");
    let assembled = SuperOperator::from_generator(spec).sub_block(sub);
    SuperOperator { dim: sub, mat: &oracle.superop.mat - &assembled.mat }.op_norm()
}

/// Quadratic coefficient of 1 − ⟨ψ_t|R(t)|ψ_t⟩ (fidelity decay).
fn fidelity_coefficient(spec: &GeneratorSpec, params: &MonomialParams, kind: &StateKind) -> f64 {
    let dim = spec.dim();
    let psi0 = state_prep(kind, dim).expect("state");
    let r0 = projector(&psi0);
    let h = fock::symmetrized_hamiltonian(params, dim).expect("hamiltonian");
    let samples: Vec<f64> = (1..=5).map(|k| 0.002 * k as f64).collect();
    let evolved = generator::evolve_r_sampled(spec, &r0, &samples).expect("evolve");
    let series: Vec<(f64, f64)> = evolved
        .iter()
        .map(|(t, r)| {
            let psi_t = analysis::exact_evolve(&psi0, &h, *t).expect("exact");
            (*t, analysis::fidelity(r, &psi_t).expect("fidelity"))
        })
        .collect();
    -rate_fit(&series, FitModel::QuadraticThroughOne).expect("fit").slope
}

/// Quadratic coefficient of 1 − ⟨ψ_0|R(t)|ψ_0⟩ (self-correlation decay).
fn self_correlation_coefficient(spec: &GeneratorSpec, kind: &StateKind, t_step: f64) -> f64 {
    let dim = spec.dim();
    let psi0 = state_prep(kind, dim).expect("state");
    let r0 = projector(&psi0);
    let samples: Vec<f64> = (1..=5).map(|k| t_step * k as f64).collect();
    let evolved = generator::evolve_r_sampled(spec, &r0, &samples).expect("evolve");
    let series: Vec<(f64, f64)> = evolved
        .iter()
        .map(|(t, r)| (*t, analysis::self_correlation(r, &psi0).expect("g")))
        .collect();
    -rate_fit(&series, FitModel::QuadraticThroughOne).expect("fit").slope
}

/// Build the full report. `dim` sets the truncation used for the matrix
/// checks (12 is plenty; every finding is dimension-stable).
pub fn report(dim: usize) -> String {
    let dim = dim.max(12);
    let mut out = String::new();
    let section = |s: &mut String, n: u32, title: &str| {
        let _ = writeln!(s, "\n{n}. {title}");
    };
    let _ = writeln!(
        out,
        "Consistency report: measured values vs commonly quoted reference values\n\
         (truncation dim = {dim}; every number below is recomputed at report time)"
    );

    // 1. the doubly-summed channel group cancels termwise
    section(&mut out, 1, "Third channel group cancels termwise");
    {
        // the quoted combination pairs +L, +L̃ with −L, −L̃ on identical
        // operators, so its superoperator vanishes identically
        let (l, lt) = generator::build_l_jk(2, 2, 1, 1, dim).expect("ops");
        let spec = GeneratorSpec {
            h_eff: CMat::zeros(dim, dim),
            channels: vec![
                LindbladChannel::new(0.03125, l.clone()),
                LindbladChannel::new(0.03125, lt.clone()),
                LindbladChannel::new(-0.03125, l),
                LindbladChannel::new(-0.03125, lt),
            ],
            f_form: None,
            oracle: None,
        };
        let norm = SuperOperator::from_generator(&spec).mat.norm();
        let _ = writeln!(
            out,
            "   As printed, the group with coefficients C_m^j C_n^k (n-2k) combines\n\
             (L + L~ - L - L~) per index pair: assembled superoperator norm = {norm:.1e}\n\
             (exactly zero). The group contributes nothing; the working generator\n\
             consists of the remaining groups only."
        );
    }

    // 2. quartic channel weight is 1/4, not 1/8
    section(&mut out, 2, "Quartic-oscillator channel weight (1/4 vs quoted 1/8)");
    {
        let params = MonomialParams::kerr();
        let spec = kerr_generator(dim, 1.0);
        let d_full = oracle_discrepancy(&params, &spec, 5);
        let d_half = oracle_discrepancy(&params, &rescale_channels(&spec, 0.5), 5);
        let _ = writeln!(
            out,
            "   Finite-difference oracle vs assembled channels (operator norm, levels < 5):\n\
             weight 1/4 (adopted): {d_full:.3e}   |   weight 1/8 (quoted): {d_half:.3e}\n\
             The quoted weight leaves an O(1) residual; the doubled weight matches the\n\
             phase-space definition."
        );
    }

    // 3. second-harmonic generator needs the second channel group
    section(&mut out, 3, "Second-harmonic case: quoted group sum is empty");
    {
        let params = MonomialParams::shg();
        let spec = shg_generator(dim, 1.0);
        let d_full = oracle_discrepancy(&params, &spec, 4);
        let mut only_first = spec.clone();
        only_first.channels.truncate(4); // drop the second group
        only_first.f_form = None;
        only_first.oracle = None;
        let d_partial = oracle_discrepancy(&params, &only_first, 4);
        let _ = writeln!(
            out,
            "   For (m, n) = (1, 2) the quoted middle group runs over j = 1..m-1,\n\
             an empty range, yet the oracle demands a weight-1/8 group: discrepancy\n\
             with both groups {d_full:.3e}, with the first group only {d_partial:.3e}."
        );
    }

    // 4. Kraus prefactor
    section(&mut out, 4, "Kraus prefactor: sqrt(dt)/4 (quoted) vs sqrt(dt/2) (working)");
    {
        let spec = kerr_generator(dim, 1.0);
        let psi0 = state_prep(&StateKind::LowExcited(C64::new(0.3, 0.0)), dim).unwrap();
        let r0 = projector(&psi0);
        let defect = |s: &GeneratorSpec, dt: f64| {
            let truth = &r0 + rhs(&spec, &r0).scale(dt);
            (kraus_step(s, &r0, dt) - truth).norm()
        };
        let order = |s: &GeneratorSpec| {
            let d1 = defect(s, 1e-3);
            let d2 = defect(s, 5e-4);
            (d1 / d2).log2()
        };
        // quoted prefactor sqrt(dt)/4 means channel terms carry dt/16 = (dt/2)/8
        let quoted = rescale_channels(&spec, 0.125);
        let _ = writeln!(
            out,
            "   Agreement order of the drift-completed Kraus step against the Euler\n\
             step under dt halving: working prefactor {:.2}; quoted prefactor {:.2}.\n\
             The quoted prefactor leaves a first-order defect; sqrt(2|w| dt) with\n\
             w = 1/4 (i.e. sqrt(dt/2)) restores second order.",
            order(&spec),
            order(&quoted),
        );
    }

    // 5. Gaussian width of the coherent-state distribution
    section(&mut out, 5, "Coherent-state distribution width");
    {
        let grid = PhaseGrid::new(4.0, 80).expect("grid");
        let vac = projector(&state_prep(&StateKind::Fock(0), dim).unwrap());
        let field = symbol(&vac, &grid).expect("symbol");
        let (norm_ok, pur_ok) = (integrate(&field), purity(&field));
        // quoted width: 2 exp(-|alpha|^2)
        let quoted_values: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|a| 2.0 * (-a.norm_sqr()).exp())
            .collect();
        let quoted_field = WignerField::new(grid.clone(), quoted_values).expect("field");
        let (norm_q, pur_q) = (integrate(&quoted_field), purity(&quoted_field));
        let _ = writeln!(
            out,
            "   Adopted 2·exp(-2|α-α₀|²): normalization {norm_ok:.6}, purity {pur_ok:.6}\n\
             (both must equal 1 simultaneously). Quoted 2·exp(-|α-α₀|²):\n\
             normalization {norm_q:.6}, purity {pur_q:.6} — off by a factor 2."
        );
    }

    // 6. short-time matrix and negativity rate are twice the quoted values
    section(&mut out, 6, "Quartic short-time matrix element and negativity rate (x2)");
    {
        let alpha = 0.3;
        let t = 1e-3;
        let spec = kerr_generator(dim, 1.0);
        let psi0 = state_prep(&StateKind::LowExcited(C64::new(alpha, 0.0)), dim).unwrap();
        let r = generator::short_time_r(&spec, &projector(&psi0), t);
        let elem = r[(2, 1)].norm();
        let quoted_elem = 2f64.sqrt() * t * alpha / (2.0 * (1.0 + alpha * alpha));
        let (lmin, _) = analysis::negativity(&analysis::hermitian_eigen(&r).unwrap());
        let quoted_rate = -alpha / (2f64.sqrt() * (1.0 + alpha * alpha).powf(1.5));
        let _ = writeln!(
            out,
            "   |⟨2|R|1⟩| at t = 1e-3, α = 0.3: measured {elem:.6e}, quoted {quoted_elem:.6e}\n\
             (ratio {:.3}). Negative-eigenvalue rate λ₋/t: measured {:.5}, quoted\n\
             {quoted_rate:.5} (ratio {:.3}). Both are exactly twice the quoted values,\n\
             consistent with the doubled channel weight of finding 2.",
            elem / quoted_elem,
            lmin / t,
            (lmin / t) / quoted_rate,
        );
    }

    // 7. fidelity decay coefficient
    section(&mut out, 7, "Quartic fidelity decay: 6|α|² vs quoted (3/2)|α|²");
    {
        let alpha = 1.0;
        let c = fidelity_coefficient(
            &kerr_generator(dim, 1.0),
            &MonomialParams::kerr(),
            &StateKind::Coherent(C64::new(alpha, 0.0)),
        );
        let _ = writeln!(
            out,
            "   Measured coefficient of 1-F at |α| = 1: {c:.4} (= 6|α|²); quoted value\n\
             1.5000 ((3/2)|α|²). Ratio {:.3}.",
            c / 1.5
        );
    }

    // 8. self-correlation decay coefficient
    section(&mut out, 8, "Quartic self-correlation decay polynomial");
    {
        let alpha = 1.0f64;
        let lam = alpha * alpha;
        let c = self_correlation_coefficient(
            &kerr_generator(dim, 1.0),
            &StateKind::Coherent(C64::new(alpha, 0.0)),
            0.001,
        );
        let poly = 16.0 * lam.powi(3) + 24.0 * lam * lam + 6.0 * lam;
        let _ = writeln!(
            out,
            "   Measured coefficient of 1-G at |α| = 1: {c:.3}; the full polynomial\n\
             16λ³+24λ²+6λ (λ=|α|²) gives {poly:.3}; the quoted leading term 4|α|⁶\n\
             gives 4.000 and misses the lower-order terms entirely."
        );
    }

    // 9. second-harmonic Fock fidelity polynomial
    section(&mut out, 9, "Second-harmonic Fock fidelity polynomial");
    {
        let c = fidelity_coefficient(
            &shg_generator(dim, 1.0),
            &MonomialParams::shg(),
            &StateKind::Fock(1),
        );
        let _ = writeln!(
            out,
            "   Measured 1-F coefficient for |N=1⟩: {c:.4}. The polynomial\n\
             (10N³+15N²+11N+3)/8 gives 4.8750 at N = 1; the quoted\n\
             (10N³+6N²+10N+3)/8 gives 3.6250. The N² and N coefficients\n\
             read 15 and 11, not 6 and 10."
        );
    }

    // 10. second-harmonic coherent coefficient — confirmed
    section(&mut out, 10, "Second-harmonic coherent fidelity: 3/8 confirmed");
    {
        let c = fidelity_coefficient(
            &shg_generator(dim.max(14), 1.0),
            &MonomialParams::shg(),
            &StateKind::Coherent(C64::new(1.0, 0.0)),
        );
        let _ = writeln!(
            out,
            "   Measured 1-F coefficient at |α| = 1: {c:.4}; the quoted α-independent\n\
             3/8 = 0.3750 is CONFIRMED within fit accuracy."
        );
    }

    // 11. orthogonalized-coherent trial normalizer
    section(&mut out, 11, "Orthogonalized-coherent trial state normalizer");
    {
        let a = coherent_state(C64::new(0.5, 0.0), 24).unwrap();
        let b = coherent_state(C64::new(1.0, 0.0), 24).unwrap();
        let o = a.dotc(&b);
        let phi = &b - &a * o;
        let quoted_norm = phi.norm_squared() / (1.0 + o.norm_sqr());
        let corrected_norm = phi.norm_squared() / (1.0 - o.norm_sqr());
        let _ = writeln!(
            out,
            "   For |φ⟩ ∝ |β⟩ − ⟨α|β⟩|α⟩ the quoted denominator √(1+|⟨β|α⟩|²) gives\n\
             ⟨φ|φ⟩ = {quoted_norm:.6} (not normalized); the corrected √(1−|⟨β|α⟩|²)\n\
             gives ⟨φ|φ⟩ = {corrected_norm:.6}."
        );
    }

    // 12. normal re-ordering coefficient
    section(&mut out, 12, "Normal re-ordering identity needs the 1/p!");
    {
        let (k, l) = (2u32, 2u32);
        let d = dim;
        let (a, ad) = ladder(d).unwrap();
        let lhs = matpow(&a, k) * matpow(&ad, l);
        let build = |extra_pfact: bool| {
            let mut m = CMat::zeros(d, d);
            for (p, c) in normal_reorder_coeffs(k, l) {
                let mut coeff = c;
                if extra_pfact {
                    coeff *= (1..=p).map(|x| x as f64).product::<f64>();
                }
                m += (matpow(&ad, l - p) * matpow(&a, k - p)).scale(coeff);
            }
            m
        };
        let sub = d - k.max(l) as usize;
        let res = |m: &CMat| (m - &lhs).view((0, 0), (sub, sub)).norm();
        let _ = writeln!(
            out,
            "   a^k a†^l = Σ_p C(k,p) C(l,p) p! a†^(l-p) a^(k-p): residual {:.1e}\n\
             at (k,l) = (2,2). The quoted coefficient k!l!/((k-p)!(l-p)!) carries an\n\
             extra p! and leaves residual {:.3e}.",
            res(&build(false)),
            res(&build(true)),
        );
    }

    // 13. kernel trace at finite truncation
    section(&mut out, 13, "Kernel trace at finite truncation");
    {
        let alpha = C64::new(0.3, 0.2);
        let clean = |x: f64| if x.abs() < 1e-9 { 0.0 } else { x };
        let t_odd = clean(weyl_kernel(alpha, 11).unwrap().trace().re);
        let t_even = clean(weyl_kernel(alpha, 12).unwrap().trace().re);
        let _ = writeln!(
            out,
            "   The factor-2 kernel has Tr ŵ(α) = {t_odd:.6} at odd truncation and\n\
             {t_even:.6} at even truncation; the quoted Tr ŵ = 1 is their Cesàro mean\n\
             and is never attained at finite truncation."
        );
    }

    out
}
