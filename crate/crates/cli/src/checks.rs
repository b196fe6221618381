//! The verification suites run by `qrf verify`.

use std::time::Instant;

use qrf_core::framechange::{reconstruction_product_form, triangular_reconstruction_with, MAX_TOTAL_DIM};
use qrf_core::measurement::{canonical_fixture, check_prc, check_rrc, rrc_relative_orientation};
use qrf_core::operator::hermitian_basis;
use qrf_core::opequiv::{framed_subspace, g_twirl, invariant_subspace};
use qrf_core::quantum::{born, canonical_pvm, covariance_deviation, localizing_state};
use qrf_core::random::{self, SeededRng};
use qrf_core::relativize::{conditioned_yen, product_relative_state, relative_orientation, yen, yen_choi, yen_predual};
use qrf_core::{CosetSpace, FiniteGroup, Frame, MultiFrameScenario, Operator, QrfError, UnitaryRep};
use rayon::prelude::*;

use crate::report::{Record, Skipped};

type Op = Operator<f64>;
type Rep = UnitaryRep<f64>;
type Scenario = MultiFrameScenario<f64>;
type CheckResult = qrf_core::Result<Outcome>;

pub const SUITES: &[&str] =
    &["covariance", "yen-invariance", "exhaustiveness", "conditioning", "frame-change", "agreement", "measurement"];

/// Largest frame-times-system dimension for the span computations of the exhaustiveness suite.
const MAX_PAIR_DIM: usize = 64;

/// Frames and system a verification run operates on.
pub struct Setup {
    pub group: FiniteGroup,
    pub frames: Vec<Frame<f64>>,
    pub system: Rep,
    pub trials: usize,
    pub seed: u64,
}

pub enum Outcome {
    Done { max_deviation: f64, trials: usize, detail: Option<String> },
    Skipped(String),
}

struct Check {
    name: &'static str,
    anchor: &'static str,
    salt: u64,
    run: fn(&Setup, &mut SeededRng) -> CheckResult,
}

const CHECKS: &[Check] = &[
    Check {
        name: "covariance/frames",
        anchor: "covariant POVM: U(g)E(x)U(g)* = E(g.x)",
        salt: 1,
        run: covariance_frames,
    },
    Check { name: "covariance/born", anchor: "Born probabilities tr[ρE(x)] form a distribution", salt: 2, run: covariance_born },
    Check {
        name: "yen-invariance/invariance",
        anchor: "relativized effects are invariant under the diagonal action",
        salt: 3,
        run: yen_invariance,
    },
    Check {
        name: "yen-invariance/channel",
        anchor: "relativization is unital, completely positive and trace-dual to its predual",
        salt: 4,
        run: yen_channel,
    },
    Check {
        name: "exhaustiveness/relational-span",
        anchor: "relativized effects span the invariant framed effects of a localizable principal frame",
        salt: 5,
        run: exhaustiveness,
    },
    Check {
        name: "conditioning/localized",
        anchor: "conditioning on a localized frame state returns the system observable",
        salt: 6,
        run: conditioning_localized,
    },
    Check {
        name: "conditioning/uniform",
        anchor: "conditioning on the uniform frame state gives the G-twirl",
        salt: 7,
        run: conditioning_uniform,
    },
    Check {
        name: "conditioning/product-symmetry",
        anchor: "rotating the frame state equals counter-rotating the system state",
        salt: 8,
        run: conditioning_symmetry,
    },
    Check {
        name: "frame-change/kernel-independence",
        anchor: "frame change is well defined on framed-relative equivalence classes",
        salt: 9,
        run: frame_change_kernel,
    },
    Check {
        name: "frame-change/diagram",
        anchor: "frame change takes R1-relative states to the R2-relative states of the same global state",
        salt: 10,
        run: frame_change_diagram,
    },
    Check {
        name: "frame-change/inverse",
        anchor: "changing back from R2 to R1 inverts the frame change",
        salt: 11,
        run: frame_change_inverse,
    },
    Check {
        name: "frame-change/composition",
        anchor: "frame changes compose through an intermediate frame",
        salt: 12,
        run: frame_change_composition,
    },
    Check {
        name: "frame-change/reconstruction",
        anchor: "triangular reconstruction from the relative-orientation distribution",
        salt: 13,
        run: reconstruction,
    },
    Check {
        name: "agreement/coherent",
        anchor: "operational frame change agrees with the coherent map up to framed-relative equivalence",
        salt: 14,
        run: agreement_coherent,
    },
    Check {
        name: "agreement/ket",
        anchor: "ideal left-right frames send |h⟩ ⊗ ψ to |h⁻¹⟩ ⊗ U(h)ψ",
        salt: 15,
        run: agreement_ket,
    },
    Check {
        name: "measurement/prc",
        anchor: "probability reproducibility of the canonical measurement",
        salt: 16,
        run: measurement_prc,
    },
    Check {
        name: "measurement/rrc",
        anchor: "relational reproducibility for every pointer orientation",
        salt: 17,
        run: measurement_rrc,
    },
    Check {
        name: "measurement/relative-orientation",
        anchor: "reproducibility of relative-orientation observables",
        salt: 18,
        run: measurement_orientation,
    },
];

fn suite_of(name: &str) -> &str {
    name.split('/').next().unwrap_or(name)
}

/// Runs every check of the selected suites in parallel; records come back unsorted.
pub fn run(setup: &Setup, suites: &[String], tol: f64) -> (Vec<Record>, Vec<Skipped>) {
    let selected: Vec<&Check> = CHECKS.iter().filter(|c| suites.iter().any(|s| s == suite_of(c.name))).collect();
    let results: Vec<_> = selected
        .par_iter()
        .map(|c| {
            let mut rng = random::rng(setup.seed ^ c.salt.wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let start = Instant::now();
            let outcome = (c.run)(setup, &mut rng);
            (c, outcome, start.elapsed().as_millis() as u64)
        })
        .collect();
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (c, outcome, ms) in results {
        let (max_deviation, trials, detail) = match outcome {
            Ok(Outcome::Skipped(reason)) => {
                skipped.push(Skipped { name: c.name.into(), reason });
                continue;
            }
            Ok(Outcome::Done { max_deviation, trials, detail }) => (max_deviation, trials, detail),
            Err(e) => (f64::INFINITY, 0, Some(e.to_string())),
        };
        let finite = max_deviation.is_finite().then_some(max_deviation);
        records.push(Record {
            name: c.name.into(),
            anchor: c.anchor.into(),
            pass: finite.is_some_and(|d| d <= tol),
            max_deviation: finite,
            trials,
            runtime_ms: ms,
            detail,
        });
    }
    (records, skipped)
}

/// Worst deviation plus side conditions; a failed condition makes the deviation infinite.
#[derive(Default)]
struct Tally {
    max_dev: f64,
    trials: usize,
    failures: Vec<String>,
}

impl Tally {
    fn dev(&mut self, d: f64) {
        self.max_dev = if d.is_nan() { f64::INFINITY } else { self.max_dev.max(d) };
    }

    fn trial(&mut self) {
        self.trials += 1;
    }

    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
            self.max_dev = f64::INFINITY;
        }
    }

    fn finish(self) -> CheckResult {
        let detail = (!self.failures.is_empty()).then(|| self.failures.join("; "));
        Ok(Outcome::Done { max_deviation: self.max_dev, trials: self.trials, detail })
    }
}

fn skip(reason: impl Into<String>) -> CheckResult {
    Ok(Outcome::Skipped(reason.into()))
}

fn first_localizable(setup: &Setup) -> Option<&Frame<f64>> {
    setup.frames.iter().find(|f| f.flags().localizable)
}

/// The first two scenario frames (the first one twice if only one is given) plus the system.
fn pair_scenario(setup: &Setup) -> qrf_core::Result<Option<Scenario>> {
    let f0 = setup.frames[0].clone();
    let f1 = setup.frames.get(1).unwrap_or(&setup.frames[0]).clone();
    fits_cap(vec![f0, f1], &setup.system)
}

fn fits_cap(frames: Vec<Frame<f64>>, system: &Rep) -> qrf_core::Result<Option<Scenario>> {
    let total = frames.iter().map(Frame::dim).product::<usize>() * system.dim();
    if total > MAX_TOTAL_DIM {
        return Ok(None);
    }
    Scenario::new(frames, system.clone()).map(Some)
}

fn cap_reason(setup: &Setup, frames: usize) -> String {
    let d0 = setup.frames[0].dim();
    format!("scenario with {frames} frames exceeds the dimension cap of {MAX_TOTAL_DIM} (frame dim {d0}, system dim {})", setup.system.dim())
}

fn covariance_frames(setup: &Setup, _: &mut SeededRng) -> CheckResult {
    let g = &setup.group;
    let mut t = Tally::default();
    let mut frames = setup.frames.clone();
    let mut seen = Vec::new();
    for a in 0..g.order() {
        let sub = g.cyclic_subgroup(a);
        if !seen.contains(&sub) {
            frames.push(Frame::canonical(&Rep::quasi_regular(&CosetSpace::new(&sub)))?);
            seen.push(sub);
        }
    }
    for f in &frames {
        t.trial();
        t.dev(covariance_deviation(f.povm(), f.rep()).ok_or_else(|| QrfError::Argument("frame POVM and rep disagree".into()))?);
        let fl = f.flags();
        t.require(!(fl.localizable && fl.principal) || fl.complete, || format!("localizable principal frame not complete: {fl:?}"));
    }
    t.finish()
}

fn covariance_born(setup: &Setup, rng: &mut SeededRng) -> CheckResult {
    let mut t = Tally::default();
    for f in &setup.frames {
        for _ in 0..setup.trials {
            t.trial();
            let p = born(f.povm(), &random::state::<f64, _>(rng, f.dim()))?;
            t.dev((p.iter().sum::<f64>() - 1.0).abs());
            t.dev(p.iter().fold(0.0, |acc: f64, &x| acc.max(-x)));
        }
    }
    t.finish()
}

fn yen_invariance(setup: &Setup, _: &mut SeededRng) -> CheckResult {
    let mut t = Tally::default();
    let ds = setup.system.dim();
    for f in &setup.frames {
        let diag = f.rep().tensor(&setup.system)?;
        for b in hermitian_basis::<f64>(ds).elements() {
            t.trial();
            let y = yen(f, &setup.system, b)?;
            for h in 0..setup.group.order() {
                t.dev((&diag.act_op(h, &y)? - &y).op_norm());
            }
        }
    }
    t.finish()
}

fn yen_channel(setup: &Setup, rng: &mut SeededRng) -> CheckResult {
    let mut t = Tally::default();
    let sys = &setup.system;
    let ds = sys.dim();
    for f in &setup.frames {
        let total = f.dim() * ds;
        t.dev(yen(f, sys, &Op::identity(ds))?.max_abs_diff(&Op::identity(total)));
        for _ in 0..setup.trials {
            t.trial();
            let omega = random::state::<f64, _>(rng, total);
            let a = random::hermitian::<f64, _>(rng, ds);
            let lhs = omega.trace_product(&yen(f, sys, &a)?);
            let rhs = yen_predual(f, sys, &omega)?.trace_product(&a);
            t.dev((lhs - rhs).norm());
        }
        if total * ds <= MAX_TOTAL_DIM {
            let min = yen_choi(f, sys)?.eigenvalues_h().into_iter().fold(f64::INFINITY, f64::min);
            t.dev((-min).max(0.0));
        }
    }
    t.finish()
}

fn exhaustiveness(setup: &Setup, _: &mut SeededRng) -> CheckResult {
    let mut t = Tally::default();
    let sys = &setup.system;
    let ds = sys.dim();
    let frames: Vec<&Frame<f64>> = setup.frames.iter().filter(|f| f.dim() * ds <= MAX_PAIR_DIM).collect();
    if frames.is_empty() {
        return skip(format!("frame-system dimension exceeds {MAX_PAIR_DIM} for every frame"));
    }
    for f in frames {
        t.trial();
        let relative = qrf_core::relativize::relative_context(f, sys)?;
        let framed = framed_subspace(f, ds)?;
        let relational = framed.intersect(&invariant_subspace(&f.rep().tensor(sys)?))?;
        if f.flags().localizable {
            t.require(relative.rank() == relational.rank(), || {
                format!("rank {} of relativized effects vs {} invariant framed", relative.rank(), relational.rank())
            });
            t.dev(relative.mutual_residual(&relational)?);
        } else {
            for b in relative.span_basis() {
                t.dev(relational.residual(&b)?);
            }
        }
    }
    t.finish()
}

fn conditioning_localized(setup: &Setup, rng: &mut SeededRng) -> CheckResult {
    let Some(f) = first_localizable(setup) else { return skip("no localizable frame") };
    let mut t = Tally::default();
    let e = localizing_state(f, setup.group.e())?;
    for _ in 0..setup.trials {
        t.trial();
        let a = random::hermitian::<f64, _>(rng, setup.system.dim());
        t.dev(conditioned_yen(f, &setup.system, &e, &a)?.max_abs_diff(&a));
    }
    t.finish()
}

fn conditioning_uniform(setup: &Setup, rng: &mut SeededRng) -> CheckResult {
    let Some(f) = first_localizable(setup) else { return skip("no localizable frame") };
    let mut t = Tally::default();
    let n = setup.group.order() as f64;
    // the average of the localizing states over the orbit
    let e = localizing_state(f, setup.group.e())?.into_operator();
    let mut flat = Op::zeros(f.dim());
    for h in 0..setup.group.order() {
        flat.add_scaled(&f.rep().act_op(h, &e)?, 1.0 / n);
    }
    for _ in 0..setup.trials {
        t.trial();
        let a = random::hermitian::<f64, _>(rng, setup.system.dim());
        t.dev(conditioned_yen(f, &setup.system, &flat, &a)?.max_abs_diff(&g_twirl(&setup.system, &a)?));
    }
    t.finish()
}

fn conditioning_symmetry(setup: &Setup, rng: &mut SeededRng) -> CheckResult {
    let mut t = Tally::default();
    let g = &setup.group;
    let f = &setup.frames[0];
    for _ in 0..setup.trials {
        t.trial();
        let omega = random::state::<f64, _>(rng, f.dim());
        let rho = random::state::<f64, _>(rng, setup.system.dim());
        for h in 0..g.order() {
            let lhs = product_relative_state(f, &setup.system, &f.rep().act_state(h, &omega)?, &rho)?;
            let rhs = product_relative_state(f, &setup.system, &omega, &setup.system.act_state(g.inverse_of(h), &rho)?)?;
            t.dev(lhs.max_abs_diff(&rhs));
        }
    }
    t.finish()
}

/// Pair scenario whose first frame can serve as the source of a frame change.
fn change_scenario(setup: &Setup) -> qrf_core::Result<Result<Scenario, String>> {
    if !setup.frames[0].flags().localizable || !setup.frames.get(1).unwrap_or(&setup.frames[0]).flags().localizable {
        return Ok(Err("frame change needs localizable frames".into()));
    }
    Ok(pair_scenario(setup)?.ok_or_else(|| cap_reason(setup, 2)))
}

fn frame_change_kernel(setup: &Setup, rng: &mut SeededRng) -> CheckResult {
    let sc = match change_scenario(setup)? {
        Ok(sc) => sc,
        Err(reason) => return skip(reason),
    };
    let mut t = Tally::default();
    let ctx01 = sc.relative_context(0, &[1])?;
    let ctx10 = sc.relative_context(1, &[0])?;
    let d = sc.complement_shape(0).total();
    for _ in 0..setup.trials {
        t.trial();
        let x = random::state::<f64, _>(rng, d);
        let k = ctx01.kernel_component(&random::hermitian::<f64, _>(rng, d))?;
        let a = sc.frame_change_raw(0, 1, &x)?;
        let b = sc.frame_change_raw(0, 1, &(&x + &k))?;
        t.dev(ctx10.pairing_deviation(&a, &b)?);
    }
    t.finish()
}

fn frame_change_diagram(setup: &Setup, rng: &mut SeededRng) -> CheckResult {
    let sc = match change_scenario(setup)? {
        Ok(sc) => sc,
        Err(reason) => return skip(reason),
    };
    let mut t = Tally::default();
    let ctx10 = sc.relative_context(1, &[0])?;
    for _ in 0..setup.trials {
        t.trial();
        let omega = random::state::<f64, _>(rng, sc.total_dim());
        let changed = sc.frame_change(0, 1, &sc.relative_state(0, &[1], &omega)?)?;
        let direct = sc.relative_state(1, &[0], &omega)?;
        t.dev(ctx10.pairing_deviation(changed.representative(), direct.representative())?);
    }
    t.finish()
}

fn frame_change_inverse(setup: &Setup, rng: &mut SeededRng) -> CheckResult {
    let sc = match change_scenario(setup)? {
        Ok(sc) => sc,
        Err(reason) => return skip(reason),
    };
    let mut t = Tally::default();
    let ctx01 = sc.relative_context(0, &[1])?;
    for _ in 0..setup.trials {
        t.trial();
        let omega = random::state::<f64, _>(rng, sc.total_dim());
        let rel = sc.relative_state(0, &[1], &omega)?;
        let back = sc.frame_change(1, 0, &sc.frame_change(0, 1, &rel)?)?;
        t.dev(ctx01.pairing_deviation(back.representative(), rel.representative())?);
    }
    t.finish()
}

fn frame_change_composition(setup: &Setup, rng: &mut SeededRng) -> CheckResult {
    let f0 = &setup.frames[0];
    let f1 = setup.frames.get(1).unwrap_or(f0);
    let f2 = setup.frames.get(2).unwrap_or(f0);
    if ![f0, f1, f2].iter().all(|f| f.flags().localizable) {
        return skip("frame change needs localizable frames");
    }
    let Some(sc) = fits_cap(vec![f0.clone(), f1.clone(), f2.clone()], &setup.system)? else {
        return skip(cap_reason(setup, 3));
    };
    let mut t = Tally::default();
    let d = sc.complement_shape(0).total();
    for _ in 0..setup.trials {
        t.trial();
        t.dev(sc.compose_check(0, 1, 2, &random::state::<f64, _>(rng, d))?);
    }
    t.finish()
}

fn reconstruction(setup: &Setup, rng: &mut SeededRng) -> CheckResult {
    let f1 = &setup.frames[0];
    let f2 = setup.frames.get(1).unwrap_or(f1);
    if !f1.flags().localizable {
        return skip("reconstruction needs a localizable first frame");
    }
    let mut t = Tally::default();
    let e21 = relative_orientation(f1, f2)?;
    for _ in 0..setup.trials {
        t.trial();
        let rho = random::state::<f64, _>(rng, setup.system.dim());
        let omega = random::state::<f64, _>(rng, f1.dim() * f2.dim());
        let a = triangular_reconstruction_with(&e21, &setup.system, &rho, &omega)?;
        let b = reconstruction_product_form(f1, f2, &setup.system, &rho, &omega)?;
        t.dev(a.max_abs_diff(&b));
    }
    t.finish()
}

fn agreement_coherent(setup: &Setup, rng: &mut SeededRng) -> CheckResult {
    let sc = match change_scenario(setup)? {
        Ok(sc) => sc,
        Err(reason) => return skip(reason),
    };
    match sc.coherent_map(0, 1) {
        Err(QrfError::UnsupportedFrame(reason)) => return skip(reason),
        other => {
            other?;
        }
    }
    let mut t = Tally::default();
    let d = sc.complement_shape(0).total();
    for _ in 0..setup.trials {
        t.trial();
        let rep = sc.operational_agreement(0, 1, &random::state::<f64, _>(rng, d), f64::INFINITY)?;
        t.dev(rep.max_deviation);
        t.dev(rep.luders_deviation);
    }
    t.finish()
}

fn agreement_ket(setup: &Setup, rng: &mut SeededRng) -> CheckResult {
    let g = &setup.group;
    let n = g.order();
    let lr = Frame::canonical(&Rep::left_right(g))?;
    let Some(sc) = fits_cap(vec![lr.clone(), lr], &setup.system)? else {
        return skip(format!("two left-right frames with the system exceed the dimension cap of {MAX_TOTAL_DIM}"));
    };
    let mut t = Tally::default();
    for h in 0..n {
        t.trial();
        let psi = random::pure_vector::<f64, _>(rng, setup.system.dim());
        let out = sc.frame_change_raw(0, 1, &Op::unit(n, h, h).kron(&Op::projector(&psi)))?;
        let hi = g.inverse_of(h);
        let moved = setup.system.matrix(h).matrix() * &psi;
        t.dev(out.max_abs_diff(&Op::unit(n, hi, hi).kron(&Op::projector(&moved))));
    }
    t.finish()
}

fn fixture_fits(setup: &Setup) -> bool {
    setup.group.order().pow(2) <= MAX_TOTAL_DIM
}

fn measurement_prc(setup: &Setup, _: &mut SeededRng) -> CheckResult {
    if !fixture_fits(setup) {
        return skip("pointer-system dimension exceeds the cap");
    }
    let (scheme, _) = canonical_fixture::<f64>(&setup.group)?;
    let r = check_prc(&scheme, f64::INFINITY)?;
    Ok(Outcome::Done { max_deviation: r.max_deviation, trials: r.checked, detail: None })
}

fn measurement_rrc(setup: &Setup, _: &mut SeededRng) -> CheckResult {
    if !fixture_fits(setup) {
        return skip("pointer-system dimension exceeds the cap");
    }
    let (scheme, rep) = canonical_fixture::<f64>(&setup.group)?;
    let r = check_rrc(&scheme, &rep, f64::INFINITY)?;
    let detail = r
        .worst
        .filter(|_| r.max_deviation > 0.0)
        .map(|(h, x)| format!("worst at h = {}, x = {x}", setup.group.label(h)));
    Ok(Outcome::Done { max_deviation: r.max_deviation, trials: r.checked, detail })
}

fn measurement_orientation(setup: &Setup, _: &mut SeededRng) -> CheckResult {
    let Some(f) = first_localizable(setup) else { return skip("no localizable frame") };
    let mut t = Tally::default();
    for sys in [Rep::left_regular(&setup.group), Rep::left_right(&setup.group)] {
        let target = canonical_pvm(&sys)?;
        let r = rrc_relative_orientation(f, &target, &sys, setup.seed ^ 18, setup.trials, f64::INFINITY)?;
        t.trials += r.checked;
        t.dev(r.max_deviation);
    }
    t.finish()
}
