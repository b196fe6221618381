//! Acceptance criteria 1–10. Runs without the libtest harness so every criterion prints
//! one PASS/FAIL line; the process exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DVector;
use num_complex::Complex;
use qrf_core::framechange::{reconstruction_product_form, triangular_reconstruction};
use qrf_core::measurement::{canonical_fixture, check_prc, check_rrc, rrc_relative_orientation};
use qrf_core::operator::hermitian_basis;
use qrf_core::opequiv::{framed_subspace, g_twirl, invariant_subspace};
use qrf_core::quantum::{born, canonical_pvm, classify_frame, covariance_deviation, localizing_state, standard_system_rep};
use qrf_core::random;
use qrf_core::relativize::{
    conditioned_yen, product_relative_state, relative_context, relative_orientation, yen, yen_choi, yen_predual,
};
use qrf_core::{builtin_group, FiniteGroup, Frame, MultiFrameScenario, Operator, QrfError, UnitaryRep};

type Op = Operator<f64>;
type Rep = UnitaryRep<f64>;
type Outcome = Result<f64, QrfError>;
type Criterion = (u8, &'static str, f64, fn() -> Outcome);

const SUITE: [&str; 7] = ["z2", "z3", "z4", "z5", "z6", "d4", "s3"];

fn group(name: &str) -> FiniteGroup {
    builtin_group(name).expect("built-in group")
}

fn suite() -> Vec<FiniteGroup> {
    SUITE.iter().map(|n| group(n)).collect()
}

fn canonical(rep: &Rep) -> Frame<f64> {
    Frame::canonical(rep).expect("canonical frame")
}

/// Accumulates the worst deviation together with boolean side conditions.
#[derive(Default)]
struct Tally {
    max_dev: f64,
    failures: Vec<String>,
}

impl Tally {
    fn dev(&mut self, d: f64) {
        if d.is_nan() {
            self.max_dev = f64::INFINITY;
        } else {
            self.max_dev = self.max_dev.max(d);
        }
    }

    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn finish(self) -> Result<f64, QrfError> {
        if self.failures.is_empty() {
            Ok(self.max_dev)
        } else {
            Err(QrfError::Precondition(self.failures.join("; ")))
        }
    }
}

fn c1_covariance() -> Outcome {
    let mut t = Tally::default();
    for g in suite() {
        for rep in [Rep::left_regular(&g), Rep::left_right(&g)] {
            let pvm = canonical_pvm(&rep)?;
            t.dev(covariance_deviation(&pvm, &rep).expect("same group"));
            let f = classify_frame(&rep, &pvm)?;
            let fl = f.flags();
            t.require(fl.ideal && fl.localizable && fl.complete, || format!("{g:?} flags {fl:?}"));
        }
    }
    t.finish()
}

fn c2_yen_invariance() -> Outcome {
    let mut t = Tally::default();
    for g in suite() {
        let rep = Rep::left_regular(&g);
        let frame = canonical(&rep);
        let diag = rep.tensor(&rep)?;
        let n = g.order();
        for b in hermitian_basis::<f64>(n).elements() {
            let y = yen(&frame, &rep, b)?;
            for h in 0..n {
                t.dev((&diag.act_op(h, &y)? - &y).op_norm());
            }
        }
        t.dev(yen(&frame, &rep, &Op::identity(n))?.max_abs_diff(&Op::identity(n * n)));
        let choi = yen_choi(&frame, &rep)?;
        let min = choi.eigenvalues_h().iter().copied().fold(f64::INFINITY, f64::min);
        t.require(min >= -1e-10, || format!("Choi matrix of order {n} has eigenvalue {min:e}"));
    }
    t.finish()
}

fn c3_exhaustiveness() -> Outcome {
    let mut t = Tally::default();
    for name in ["z2", "z3", "z4", "s3"] {
        let g = group(name);
        let frame = canonical(&Rep::left_regular(&g));
        for d in [2, 3] {
            let sys = standard_system_rep::<f64>(&g, d)?;
            let relative = relative_context(&frame, &sys)?;
            let relational = framed_subspace(&frame, d)?.intersect(&invariant_subspace(&frame.rep().tensor(&sys)?))?;
            t.require(relative.rank() == relational.rank(), || {
                format!("{name}, dim {d}: rank {} vs {}", relative.rank(), relational.rank())
            });
            t.dev(relative.mutual_residual(&relational)?);
        }
    }
    t.finish()
}

fn c4_conditioning() -> Outcome {
    let mut t = Tally::default();
    let mut rng = random::rng(4);
    for g in suite() {
        let rep = Rep::left_regular(&g);
        let frame = canonical(&rep);
        let n = g.order();
        let e = localizing_state(&frame, g.e())?;
        let flat = Op::identity(n).scale(1.0 / n as f64);
        for d in [2, 3] {
            let sys = standard_system_rep::<f64>(&g, d)?;
            for _ in 0..10 {
                let a = random::hermitian::<f64, _>(&mut rng, d);
                t.dev(conditioned_yen(&frame, &sys, &e, &a)?.max_abs_diff(&a));
                t.dev(conditioned_yen(&frame, &sys, &flat, &a)?.max_abs_diff(&g_twirl(&sys, &a)?));
            }
            for _ in 0..50 {
                let omega = random::state::<f64, _>(&mut rng, n);
                let rho = random::state::<f64, _>(&mut rng, d);
                for h in 0..n {
                    let lhs = product_relative_state(&frame, &sys, &rep.act_state(h, &omega)?, &rho)?;
                    let rhs = product_relative_state(&frame, &sys, &omega, &sys.act_state(g.inverse_of(h), &rho)?)?;
                    t.dev(lhs.max_abs_diff(&rhs));
                }
            }
        }
    }
    t.finish()
}

fn trine(g: &FiniteGroup) -> Frame<f64> {
    let chars = Rep::cyclic_characters(g, 1, 2).expect("cyclic group");
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Frame::coherent(&chars, &DVector::from_vec(vec![Complex::new(s, 0.0), Complex::new(s, 0.0)])).expect("coherent frame")
}

fn c5_relative_orientation() -> Outcome {
    let mut t = Tally::default();
    for g in suite() {
        let f1 = canonical(&Rep::left_regular(&g));
        let f2 = canonical(&Rep::left_right(&g));
        let e21 = relative_orientation(&f1, &f2)?;
        let w = localizing_state(&f1, g.e())?;
        let loc = localizing_state(&f2, g.e())?;
        for h in 0..g.order() {
            let omega = w.kron(&f2.rep().act_state(g.inverse_of(h), &loc)?);
            let mu = born(&e21, &omega)?;
            for (x, p) in mu.iter().enumerate() {
                t.dev((p - if x == h { 1.0 } else { 0.0 }).abs());
            }
        }
    }
    // SWAP relation, including a non-sharp coherent frame
    let z3 = group("z3");
    let mut pairs = vec![(canonical(&Rep::left_regular(&z3)), trine(&z3))];
    for g in suite() {
        pairs.push((canonical(&Rep::left_regular(&g)), canonical(&Rep::left_right(&g))));
    }
    for (f1, f2) in &pairs {
        let e21 = relative_orientation(f1, f2)?;
        let e12 = relative_orientation(f2, f1)?;
        let shape = qrf_core::FactorShape::new(vec![f2.dim(), f1.dim()]);
        let g = f1.rep().group();
        for x in 0..g.order() {
            let swapped = e12.effect(g.inverse_of(x)).permute_factors(&shape, &[1, 0])?;
            t.dev(swapped.max_abs_diff(e21.effect(x)));
        }
    }
    t.finish()
}

fn two_frame_scenario(g: &FiniteGroup, frames: usize) -> Result<MultiFrameScenario<f64>, QrfError> {
    let mut fs = Vec::new();
    for k in 0..frames {
        let rep = if k % 2 == 0 { Rep::left_right(g) } else { Rep::left_regular(g) };
        fs.push(canonical(&rep));
    }
    MultiFrameScenario::new(fs, standard_system_rep(g, 2)?)
}

fn c6_frame_change() -> Outcome {
    let mut t = Tally::default();
    let mut rng = random::rng(6);
    for name in ["z2", "z3", "s3"] {
        let g = group(name);
        let sc = two_frame_scenario(&g, 2)?;
        let ctx01 = sc.relative_context(0, &[1])?;
        let ctx10 = sc.relative_context(1, &[0])?;
        let rel_dim = sc.complement_shape(0).total();
        for _ in 0..50 {
            let omega = random::state::<f64, _>(&mut rng, sc.total_dim());
            let rel1 = sc.relative_state(0, &[1], &omega)?;
            // (a) kernel perturbation
            let k = ctx01.kernel_component(&random::hermitian::<f64, _>(&mut rng, rel_dim))?;
            let a = sc.frame_change_raw(0, 1, rel1.representative())?;
            let b = sc.frame_change_raw(0, 1, &(rel1.representative() + &k))?;
            t.dev(ctx10.pairing_deviation(&a, &b)?);
            // (b) diagram
            let changed = sc.frame_change(0, 1, &rel1)?;
            let direct = sc.relative_state(1, &[0], &omega)?;
            t.dev(ctx10.pairing_deviation(changed.representative(), direct.representative())?);
            // (c) inverse
            let back = sc.frame_change(1, 0, &changed)?;
            t.dev(ctx01.pairing_deviation(back.representative(), rel1.representative())?);
        }
    }
    // (d) composability
    for name in ["z2", "z3"] {
        let g = group(name);
        let sc = two_frame_scenario(&g, 3)?;
        let rel_dim = sc.complement_shape(0).total();
        for _ in 0..50 {
            let x = random::state::<f64, _>(&mut rng, rel_dim);
            t.dev(sc.compose_check(0, 1, 2, &x)?);
        }
    }
    t.finish()
}

fn c7_agreement() -> Outcome {
    let mut t = Tally::default();
    let s3 = group("s3");
    let lr = canonical(&Rep::left_right(&s3));
    // ket transformation, exact
    let sc3 = MultiFrameScenario::new(vec![lr.clone(); 3], Rep::trivial(&s3, 1))?;
    for h2 in 0..6 {
        for h3 in 0..6 {
            let input = Op::unit(6, h2, h2).kron(&Op::unit(6, h3, h3));
            let out = sc3.frame_change_raw(0, 1, &input)?;
            let a = s3.inverse_of(h2);
            let b = s3.op(h3, a);
            let expected = Op::unit(6, a, a).kron(&Op::unit(6, b, b));
            t.require(out == expected, || format!("ket |{h2}⟩|{h3}⟩ not mapped exactly"));
        }
    }
    // general states up to π_{E_1}
    let sc = MultiFrameScenario::new(vec![lr.clone(); 2], standard_system_rep(&s3, 2)?)?;
    let mut rng = random::rng(7);
    for _ in 0..100 {
        let x = random::state::<f64, _>(&mut rng, 12);
        let rep = sc.operational_agreement(0, 1, &x, 1e-9)?;
        t.dev(rep.max_deviation);
        t.dev(rep.luders_deviation);
    }
    // superposition fixture
    let mut psi = DVector::<Complex<f64>>::zeros(6);
    psi[1] = Complex::new(0.6, 0.0);
    psi[4] = Complex::new(0.0, 0.8);
    let input = Op::projector(&psi).kron(&Op::unit(2, 0, 0));
    let raw = sc.frame_change_raw(0, 1, &input)?;
    let coherent = sc.coherent_change(0, 1, &input)?;
    let luders = sc.luders_mixture(1, 0, &coherent)?;
    let ctx = sc.relative_context(1, &[0])?;
    t.dev(ctx.pairing_deviation(&raw, &luders)?);
    t.dev(ctx.pairing_deviation(&raw, &coherent)?);
    t.require(raw.max_abs_diff(&coherent) > 0.1, || "superposition output unexpectedly coherent".into());
    t.finish()
}

fn c8_reconstruction() -> Outcome {
    let mut t = Tally::default();
    let mut rng = random::rng(8);
    for g in suite() {
        let f1 = canonical(&Rep::left_regular(&g));
        let f2 = canonical(&Rep::left_right(&g));
        let sys = standard_system_rep::<f64>(&g, 2)?;
        let n = g.order();
        for _ in 0..10 {
            let rho = random::state::<f64, _>(&mut rng, 2);
            let omega = random::state::<f64, _>(&mut rng, n * n);
            let a = triangular_reconstruction(&f1, &f2, &sys, &rho, &omega)?;
            let b = reconstruction_product_form(&f1, &f2, &sys, &rho, &omega)?;
            t.dev(a.max_abs_diff(&b));
        }
    }
    t.finish()
}

fn c9_measurement() -> Outcome {
    let mut t = Tally::default();
    for g in suite() {
        let (scheme, rep) = canonical_fixture::<f64>(&g)?;
        let prc = check_prc(&scheme, 1e-10)?;
        let rrc = check_rrc(&scheme, &rep, 1e-10)?;
        t.dev(prc.max_deviation);
        t.dev(rrc.max_deviation);
        let frame = canonical(&rep);
        for sys in [Rep::left_regular(&g), Rep::left_right(&g)] {
            let target = canonical_pvm(&sys)?;
            t.dev(rrc_relative_orientation(&frame, &target, &sys, 9, 5, 1e-10)?.max_deviation);
        }
    }
    t.finish()
}

/// (Y_*(Ω))_{ji} = tr[Ω·Y(E_ij)] written as the transpose of the vectorized map.
fn predual_oracle(frame: &Frame<f64>, sys: &Rep, omega: &Op) -> Result<Op, QrfError> {
    let (ds, dt) = (sys.dim(), frame.dim() * sys.dim());
    let mut l = nalgebra::DMatrix::<Complex<f64>>::zeros(dt * dt, ds * ds);
    for i in 0..ds {
        for j in 0..ds {
            let y = yen(frame, sys, &Op::unit(ds, i, j))?;
            for a in 0..dt {
                for b in 0..dt {
                    l[(a * dt + b, i * ds + j)] = y.get(a, b);
                }
            }
        }
    }
    let vec_t = nalgebra::DVector::from_fn(dt * dt, |k, _| omega.get(k % dt, k / dt));
    let v = l.transpose() * vec_t;
    Op::from_matrix(nalgebra::DMatrix::from_fn(ds, ds, |j, i| v[i * ds + j]))
}

fn c10_oracles() -> Outcome {
    let mut t = Tally::default();
    let mut rng = random::rng(10);
    for name in ["z2", "z3", "z4"] {
        let g = group(name);
        let frame = canonical(&Rep::left_regular(&g));
        for sys in [standard_system_rep::<f64>(&g, 2)?, Rep::left_right(&g)] {
            for _ in 0..5 {
                let omega = random::state::<f64, _>(&mut rng, frame.dim() * sys.dim());
                t.dev(yen_predual(&frame, &sys, &omega)?.max_abs_diff(&predual_oracle(&frame, &sys, &omega)?));
            }
        }
    }
    for name in ["z2", "z3", "z4", "s3"] {
        let g = group(name);
        let frame = canonical(&Rep::left_regular(&g));
        let sys = standard_system_rep::<f64>(&g, 2)?;
        let ctx = relative_context(&frame, &sys)?;
        let dim = ctx.dim();
        let mut mismatches = 0;
        for k in 0..200 {
            let a = random::state::<f64, _>(&mut rng, dim);
            let b = if k % 2 == 0 {
                &a + &ctx.kernel_component(&random::hermitian::<f64, _>(&mut rng, dim))?
            } else {
                random::state::<f64, _>(&mut rng, dim)
            };
            let diff = &a - &b;
            let in_kernel = ctx.generators().iter().all(|gen| diff.trace_product(gen).norm() <= 1e-9);
            if in_kernel != ctx.equivalent(&a, &b, 1e-9)? {
                mismatches += 1;
            }
        }
        t.require(mismatches == 0, || format!("{name}: {mismatches} of 200 pairs disagree with the kernel oracle"));
    }
    t.finish()
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "covariance & classification", 1e-12, c1_covariance),
        (2, "relativization invariance and channel properties", 1e-10, c2_yen_invariance),
        (3, "finite-group exhaustiveness", 1e-9, c3_exhaustiveness),
        (4, "conditioning", 1e-10, c4_conditioning),
        (5, "relative orientation", 1e-10, c5_relative_orientation),
        (6, "frame-change theorem", 1e-9, c6_frame_change),
        (7, "agreement with the coherent map", 1e-9, c7_agreement),
        (8, "triangular reconstruction", 1e-10, c8_reconstruction),
        (9, "measurement reproducibility", 1e-10, c9_measurement),
        (10, "oracle equivalence", 1e-10, c10_oracles),
    ];
    let mut failed = 0;
    for (id, title, tol, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let ms = start.elapsed().as_millis();
        let line = match &outcome {
            Ok(dev) if *dev <= tol => format!("PASS  criterion {id:>2} {title}: max deviation {dev:.2e} (tol {tol:.0e}, {ms} ms)"),
            Ok(dev) => format!("FAIL  criterion {id:>2} {title}: max deviation {dev:.2e} exceeds {tol:.0e} ({ms} ms)"),
            Err(e) => format!("FAIL  criterion {id:>2} {title}: {e} ({ms} ms)"),
        };
        if !line.starts_with("PASS") {
            failed += 1;
        }
        println!("{line}");
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
