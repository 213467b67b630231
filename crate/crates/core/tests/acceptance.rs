//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::collections::BTreeSet;
use std::process::ExitCode;

use qrf_core::equivalence::{equivalent, invariant_set};
use qrf_core::framechange::{
    agreement_check, frame_change_compose_check, frame_change_inverse_check, superposition_input,
    superposition_witness, unitary_frame_change, CompetingMap, FrameChangeScenario,
};
use qrf_core::frames::{canonical_frame, coherent_frame, test_support, Convention, QuantumFrame};
use qrf_core::groups::{make_preset, FiniteGroup, GroupPreset};
use qrf_core::operators::{tensor, trace_pair, DensityState, Operator, C64};
use qrf_core::phaselab::{build_phase_povm, canonical_coefficients, conditioned_identity_convergence};
use qrf_core::relativization::{
    multiplicativity_defect, multiplicativity_witness, predual_relativize, product_relative_state,
    relative_orientation, relative_set, relativize, restrict, swap_relation_residual, RelativePair,
};
use qrf_core::representations::{inverse_convention_rep, regular_rep, trivial_rep, Direction, UnitaryRep};
use qrf_core::sampling::Sampler;

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn group(p: GroupPreset) -> FiniteGroup {
    make_preset(p).expect("preset")
}

fn canonical_pair(g: &FiniteGroup) -> RelativePair {
    RelativePair::new(canonical_frame(g, Convention::LeftRegular), regular_rep(g)).expect("same group")
}

fn all_presets() -> Vec<GroupPreset> {
    vec![
        GroupPreset::Cyclic(2),
        GroupPreset::Cyclic(3),
        GroupPreset::Cyclic(4),
        GroupPreset::Dihedral(4),
        GroupPreset::Symmetric3,
        GroupPreset::Quaternion8,
    ]
}

fn states(s: &mut Sampler, d: usize, n: usize) -> Vec<Operator> {
    (0..n).map(|_| s.state(d).into_op()).collect()
}

fn exact_recovery(s: &mut Sampler) -> Outcome {
    let mut worst: f64 = 0.0;
    for p in [GroupPreset::Cyclic(2), GroupPreset::Cyclic(3), GroupPreset::Cyclic(4), GroupPreset::Symmetric3] {
        let pair = canonical_pair(&group(p));
        let e = pair.frame().localized_state(0).expect("ideal");
        for _ in 0..50 {
            let a = s.operator(pair.system_dim());
            let back = restrict(&e, &relativize(&pair, &a).expect("dims")).expect("dims");
            worst = worst.max((&back - &a).op_norm());
        }
    }
    outcome(worst < 1e-10, format!("max ‖Γ_e(¥(A)) − A‖ = {worst:.2e} over 200 operators"))
}

fn invertibility(s: &mut Sampler) -> Outcome {
    let mut worst: f64 = 0.0;
    for p in [GroupPreset::Cyclic(3), GroupPreset::Symmetric3] {
        let g = group(p);
        let f = canonical_frame(&g, Convention::LeftRegular);
        let sc = FrameChangeScenario::new(f.clone(), f, regular_rep(&g)).expect("scenario");
        let n = g.order();
        let r = frame_change_inverse_check(&sc, &states(s, n * n, 100)).expect("check");
        worst = worst.max(r.max_residual);
    }
    outcome(worst < 1e-9, format!("max round-trip signature residual = {worst:.2e} (Z3, S3; 100 inputs each)"))
}

fn composition(s: &mut Sampler) -> Outcome {
    let z2 = group(GroupPreset::Cyclic(2));
    let ideal = canonical_frame(&z2, Convention::LeftRegular);
    let flip = UnitaryRep::new(z2.clone(), vec![Operator::identity(2), Operator::diag(&[1.0, -1.0])]).expect("rep");
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let hadamard = coherent_frame(&flip, &nalgebra::DVector::from_vec(vec![C64::new(r, 0.0), C64::new(r, 0.0)]))
        .expect("coherent");
    let flat = coherent_frame(&trivial_rep(&z2, 1), &nalgebra::DVector::from_element(1, C64::new(1.0, 0.0)))
        .expect("coherent");
    let mut lines = Vec::new();
    let mut worst: f64 = 0.0;
    for (name, f3) in [("ideal", ideal.clone()), ("coherent", hadamard), ("unsharp coherent", flat)] {
        let d3 = f3.dim();
        let sc = FrameChangeScenario::new(ideal.clone(), ideal.clone(), regular_rep(&z2))
            .and_then(|sc| sc.with_third(f3))
            .expect("scenario");
        let rep = frame_change_compose_check(&sc, &states(s, 2 * d3 * 2, 50)).expect("check");
        worst = worst.max(rep.max_residual);
        lines.push(format!("{name} {:.2e}", rep.max_residual));
    }
    outcome(worst < 1e-9, format!("compose residuals on Z2: {}", lines.join(", ")))
}

fn operational_agreement(s: &mut Sampler) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut witness_ok = true;
    let mut detail = String::new();
    for p in [GroupPreset::Cyclic(2), GroupPreset::Cyclic(3)] {
        let g = group(p);
        let f = canonical_frame(&g, Convention::Inverse);
        let sc = FrameChangeScenario::new(f.clone(), f, inverse_convention_rep(&g)).expect("scenario");
        let n = g.order();
        let inputs: Vec<Operator> = (0..100).map(|_| tensor(s.state(n).op(), s.state(n).op())).collect();
        worst = worst.max(agreement_check(&sc, &inputs, CompetingMap::Unitary).expect("check").max_residual);

        let w = superposition_witness(&sc, 0, 1, 1).expect("witness");
        let input = superposition_input(&sc, 0, 1, 1).expect("input");
        let unitary = unitary_frame_change(&sc, input.op()).expect("unitary");
        let rep = qrf_core::framechange::frame_change(&sc, input.op()).expect("frame change").representative;
        let trace_norm = (&unitary - &rep).trace_norm();
        // the representative is diagonal in the product basis, hence a mixture of product states
        let diagonal = (0..rep.dim()).all(|i| (0..rep.dim()).all(|j| i == j || rep.get(i, j).norm() < 1e-14));
        let ok = trace_norm > 0.1 && w.unitary_negativity > 0.01 && w.representative_negativity < 1e-12 && diagonal;
        witness_ok &= ok;
        worst = worst.max(w.signature_residual);
        detail.push_str(&format!(
            "; {}: ‖U-out − Φ-rep‖₁ = {trace_norm:.3}, N(U-out) = {:.3}, N(Φ-rep) = {:.1e}",
            p, w.unitary_negativity, w.representative_negativity
        ));
    }
    outcome(worst < 1e-9 && witness_ok, format!("max signature deviation = {worst:.2e}{detail}"))
}

fn relativization_structure(s: &mut Sampler) -> Outcome {
    let mut inv: f64 = 0.0;
    let mut iso: f64 = 0.0;
    let mut mult: f64 = 0.0;
    for p in all_presets() {
        let pair = canonical_pair(&group(p));
        let joint = pair.joint_rep();
        for _ in 0..10 {
            let (a, b) = (s.operator(pair.system_dim()), s.operator(pair.system_dim()));
            let image = relativize(&pair, &a).expect("dims");
            for g in pair.frame().group().elements() {
                let moved = joint.conjugate(g, &image, Direction::Observable).expect("dims");
                inv = inv.max((&moved - &image).op_norm());
            }
            iso = iso.max((image.op_norm() - a.op_norm()).abs());
            mult = mult.max(multiplicativity_defect(&pair, &a, &b).expect("dims"));
        }
    }
    let unsharp = RelativePair::new(test_support::z3_unsharp_coherent(), regular_rep(&group(GroupPreset::Cyclic(3))))
        .expect("pair");
    let violation = multiplicativity_witness(&unsharp, s, 20).expect("witness").defect;
    outcome(
        inv < 1e-9 && iso < 1e-9 && mult < 1e-9 && violation > 1e-3,
        format!(
            "invariance {inv:.2e}, isometry {iso:.2e}, sharp multiplicativity {mult:.2e}, unsharp Z3 violation {violation:.3}"
        ),
    )
}

fn conditioning_symmetries(s: &mut Sampler) -> Outcome {
    let (mut sco, mut foai, mut soai, mut gclass): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for p in all_presets() {
        let g = group(p);
        let pair = canonical_pair(&g);
        let (fr, sr) = (pair.frame().rep().clone(), pair.system_rep().clone());
        let n = g.order();
        let g_set = invariant_set(&sr);
        let flat = DensityState::maximally_mixed(n);
        for _ in 0..100 {
            let omega = s.state(n);
            let rho = s.state(n);
            let h = s.index(n);

            let h_omega = DensityState::new_unchecked(fr.conjugate(h, omega.op(), Direction::State).expect("dims"));
            let hinv_rho =
                DensityState::new_unchecked(sr.conjugate(g.inv(h), rho.op(), Direction::State).expect("dims"));
            let lhs = product_relative_state(&pair, &h_omega, &rho).expect("dims");
            let rhs = product_relative_state(&pair, &omega, &hinv_rho).expect("dims");
            sco = sco.max(lhs.op().max_abs_diff(rhs.op()));

            let fixed = DensityState::new_unchecked(sr.twirl(rho.op(), Direction::State).expect("dims"));
            foai = foai.max(product_relative_state(&pair, &omega, &fixed).expect("dims").op().max_abs_diff(fixed.op()));

            let inv_omega = DensityState::new_unchecked(fr.twirl(omega.op(), Direction::State).expect("dims"));
            for w in [&inv_omega, &flat] {
                let out = product_relative_state(&pair, w, &rho).expect("dims");
                soai = soai.max(out.op().max_abs_diff(fixed.op()));
            }

            let out = product_relative_state(&pair, &omega, &rho).expect("dims");
            gclass = gclass.max(equivalent(out.op(), rho.op(), &g_set).expect("dims").residual);
        }
    }
    let worst = sco.max(foai).max(soai).max(gclass);
    outcome(
        worst < 1e-9,
        format!("symmetry {sco:.2e}, invariant system {foai:.2e}, invariant frame {soai:.2e}, G-class {gclass:.2e} (6 presets × 100)"),
    )
}

/// Twenty joint states on Z2 with planted equivalences.
fn equivalence_sample(s: &mut Sampler, pair: &RelativePair) -> Vec<Operator> {
    let joint = pair.joint_rep();
    let d = pair.joint_dim();
    let rel = relative_set(pair).expect("set");
    let mut out = Vec::new();
    for _ in 0..5 {
        let base = s.state(d).into_op();
        // diagonal conjugate
        out.push(joint.conjugate(1, &base, Direction::State).expect("dims"));
        // mixture with the twirled state
        let tw = joint.twirl(&base, Direction::State).expect("dims");
        out.push(&base.scale_re(0.4) + &tw.scale_re(0.6));
        // small perturbation inside the pre-annihilator, kept positive
        let t = s.hermitian(d);
        let delta = &t - &rel.project(&t).expect("dims");
        let min_eig = base.eigenvalues_hermitian()[0];
        let eps = 0.5 * min_eig / delta.op_norm().max(1e-12);
        out.push(&base + &delta.scale_re(eps));
        out.push(base);
    }
    out
}

fn equivalence_oracle(s: &mut Sampler) -> Outcome {
    let z2 = group(GroupPreset::Cyclic(2));
    let pair = canonical_pair(&z2);
    let rel = relative_set(&pair).expect("set");
    let sample = equivalence_sample(s, &pair);
    let outputs: Vec<Operator> = sample
        .iter()
        .map(|x| predual_relativize(&pair, &DensityState::new_unchecked(x.clone())).expect("dims").into_op())
        .collect();
    let (mut disagreements, mut equal_pairs) = (0, 0);
    for i in 0..sample.len() {
        for j in 0..sample.len() {
            let engine = equivalent(&sample[i], &sample[j], &rel).expect("dims").equivalent;
            let brute = outputs[i].max_abs_diff(&outputs[j]) < 1e-9;
            equal_pairs += usize::from(brute && i < j);
            disagreements += usize::from(engine != brute);
        }
    }
    outcome(
        disagreements == 0 && equal_pairs > 0,
        format!("{} states, {equal_pairs} equivalent unordered pairs, {disagreements} disagreements", sample.len()),
    )
}

fn twirl_laws(s: &mut Sampler) -> Outcome {
    let (mut idem, mut dual, mut comm): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut dims_ok = true;
    let mut dims = Vec::new();
    for p in all_presets() {
        let g = group(p);
        let rep = regular_rep(&g);
        let n = g.order();
        for _ in 0..100 {
            let x = s.operator(n);
            let rho = s.state(n).into_op();
            let tx = rep.twirl(&x, Direction::Observable).expect("dims");
            idem = idem.max(rep.twirl(&tx, Direction::Observable).expect("dims").max_abs_diff(&tx));
            let trho = rep.twirl(&rho, Direction::State).expect("dims");
            let a = trace_pair(&tx, &rho).expect("dims");
            let b = trace_pair(&x, &trho).expect("dims");
            let c = trace_pair(&tx, &trho).expect("dims");
            dual = dual.max((a - b).norm()).max((a - c).norm());
            comm = comm.max(rep.commutator_residual(&tx));
        }
        let k = rep.invariant_commutant().len();
        dims_ok &= k == n;
        dims.push(format!("{p}:{k}"));
    }
    outcome(
        idem < 1e-9 && dual < 1e-9 && comm < 1e-9 && dims_ok,
        format!(
            "idempotence {idem:.2e}, duality {dual:.2e}, commutant membership {comm:.2e}; commutant dims {}",
            dims.join(" ")
        ),
    )
}

fn relative_orientation_check() -> Outcome {
    let z3 = group(GroupPreset::Cyclic(3));
    let f: QuantumFrame = canonical_frame(&z3, Convention::LeftRegular);
    let o = relative_orientation(&f, &f).expect("orientation");
    let mut exact = true;
    for h in z3.elements() {
        let joint = tensor(&Operator::basis_projector(3, 0), &Operator::basis_projector(3, h));
        let p = o.born(&joint).expect("dims");
        exact &= p.iter().enumerate().all(|(x, &px)| px == if x == h { 1.0 } else { 0.0 });
    }
    let swap = swap_relation_residual(&f, &f).expect("swap");
    outcome(exact && swap < 1e-10, format!("Dirac distributions exact: {exact}; SWAP residual {swap:.2e}"))
}

fn phase_lab(s: &mut Sampler) -> Outcome {
    let m = 64;
    let mut bound_violation = f64::NEG_INFINITY;
    for d in [2, 4, 8] {
        let povm = build_phase_povm(d, m, &canonical_coefficients(d)).expect("povm");
        for _ in 0..200 / 3 + 1 {
            let start = s.index(m);
            let len = 1 + s.index(m / 2);
            let cells: BTreeSet<usize> = (start..start + len).map(|k| k % m).collect();
            let rho = s.state(d);
            let p = povm.probability(rho.op(), &cells).expect("dims");
            bound_violation = bound_violation.max(p - d as f64 * povm.measure(&cells));
        }
    }
    let sweep = [2, 4, 8, 16, 32];
    let quarter: BTreeSet<usize> = (0..m / 4).collect();
    let norms: Vec<f64> = sweep
        .iter()
        .map(|&d| {
            build_phase_povm(d, m, &canonical_coefficients(d))
                .and_then(|p| p.effect_of(&quarter))
                .expect("povm")
                .op_norm()
        })
        .collect();
    let increasing = norms.windows(2).all(|w| w[1] > w[0]);
    let a = s.operator(3);
    let curve: Vec<f64> =
        conditioned_identity_convergence(&sweep, m, &a).expect("curve").into_iter().map(|p| p.residual).collect();
    let decreasing = curve.windows(2).all(|w| w[1] < w[0]);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ");
    outcome(
        bound_violation <= 1e-9 && increasing && decreasing,
        format!(
            "max tr[ρE(X)] − d·μ(X) = {bound_violation:.3}; ‖E(quarter)‖ over d=2..32: {}; conditioned residual: {} (M = {m})",
            fmt(&norms),
            fmt(&curve)
        ),
    )
}

fn main() -> ExitCode {
    let mut s = Sampler::new(SEED);
    let criteria: Vec<(&str, Outcome)> = vec![
        ("exact recovery", exact_recovery(&mut s)),
        ("invertibility", invertibility(&mut s)),
        ("composition", composition(&mut s)),
        ("operational agreement", operational_agreement(&mut s)),
        ("relativization structure", relativization_structure(&mut s)),
        ("conditioning symmetries", conditioning_symmetries(&mut s)),
        ("equivalence engine oracle", equivalence_oracle(&mut s)),
        ("twirl laws", twirl_laws(&mut s)),
        ("relative orientation", relative_orientation_check()),
        ("phase lab", phase_lab(&mut s)),
    ];
    let mut failed = 0;
    for (i, (name, o)) in criteria.iter().enumerate() {
        println!("criterion {:>2} {} {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
