//! Running a scenario: pipelines in dependency order, each contributing check
//! records to a [`VerificationReport`].

use std::time::Instant;

use serde_json::Value;

use crate::cech::{
    self, apply_signs, enumerate_lift_classes, h1_rank, lift_double_cover, lifts_equivalent,
    validate_cocycle, z2_coboundary_solve, LiftOutcome, SampledCocycle, SignCochain,
};
use crate::compatibility::{
    build_delta_tilde, induce_compatible, normalize_sections, self_compat, uniqueness_sweep,
    validate_pair_data, DeltaTildeOptions, PolarizationPairData,
};
use crate::error::{HfeError, Result};
use crate::frames::{
    self, delta, delta_l, delta_l_tilde, gamma, pairing_density, phi, validate_lagrangian,
    DensityInput, DensityMode, LagFramePair, MetaLagFrame, SymplecticModel,
};
use crate::groups::{ml_lift, spk_blocks, MlElement};
use crate::linalg::{self, principal_sqrt, rel_diff, rel_diff_c, RMat, C};
use crate::metaplectic_induction::{
    build_delta_d_tilde, cross_check, recipe, sample_mp_cocycle, validate_bundle,
    MetaplecticBundleData,
};
use crate::report::{CheckRecord, VerificationReport};
use crate::sampling;
use crate::scenario::{self, Loaded, Scenario};
use crate::tol::Tolerances;

/// Every pipeline, in execution order.
pub const PIPELINES: [&str; 10] = [
    "validate",
    "lift",
    "obstruction",
    "induce",
    "delta_tilde",
    "self_compat",
    "recipe",
    "delta_d",
    "cross_check",
    "pointwise",
];

/// Random representative changes per pointwise case.
const POINTWISE_DRAWS: usize = 200;
/// Largest component count for exhaustive sign sweeps.
const SWEEP_LIMIT: usize = 16;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Replaces the scenario's own list when set.
    pub pipelines: Option<Vec<String>>,
    /// `key=value` tolerance overrides, applied after the scenario's.
    pub tolerances: Vec<String>,
    pub seed: Option<u64>,
    /// Defaults to [`Tolerances::from_env`].
    pub base: Option<Tolerances>,
}

/// Parse and run. `Err` means the input was rejected before any check ran
/// (exit code 2).
pub fn run_text(text: &str, opts: &RunOptions) -> Result<VerificationReport> {
    run_scenario(scenario::parse(text)?, opts)
}

pub fn run_scenario(sc: Scenario, opts: &RunOptions) -> Result<VerificationReport> {
    let start = Instant::now();
    let base = opts.base.unwrap_or_else(Tolerances::from_env);
    let tol = scenario::effective_tolerances(&sc, base, &opts.tolerances)?;
    let seed = opts.seed.unwrap_or(sc.seed);
    let requested = opts.pipelines.clone().unwrap_or_else(|| sc.pipelines.clone());
    let loaded = scenario::load(sc, tol)?;
    let pipelines = plan(&loaded, &requested)?;
    let mut run = Run {
        l: &loaded,
        tol,
        seed,
        report: VerificationReport::new(&loaded.scenario.name, seed, tol),
        induced: None,
        bundle: None,
    };
    run.report.pipelines = pipelines.clone();
    for p in &pipelines {
        run.pipeline(p);
    }
    let mut report = run.report;
    report.wall_time = start.elapsed();
    Ok(report)
}

fn needs(ok: bool, pipeline: &str, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(HfeError::Parse(format!("pipeline `{pipeline}` needs {what}")))
    }
}

/// Validate the requested pipelines against the scenario's data and expand
/// dependencies, in execution order.
pub fn plan(l: &Loaded, requested: &[String]) -> Result<Vec<String>> {
    let mut want = [false; PIPELINES.len()];
    for r in requested {
        let i = PIPELINES
            .iter()
            .position(|p| p == r)
            .ok_or_else(|| HfeError::Parse(format!("unknown pipeline `{r}` (known: {})", PIPELINES.join(", "))))?;
        want[i] = true;
    }
    let on = |name: &str| want[PIPELINES.iter().position(|p| *p == name).expect("known pipeline")];
    if on("delta_tilde") {
        want[3] = true;
    }
    let sc = &l.scenario;
    for (i, p) in PIPELINES.iter().enumerate() {
        if !want[i] {
            continue;
        }
        match *p {
            "lift" => needs(l.cocycle.is_some() || l.pair.is_some(), p, "`ml_lift` or `pair_cocycle`")?,
            "obstruction" => needs(l.sign_cochain.is_some(), p, "`sign_cochain`")?,
            "induce" | "delta_tilde" | "self_compat" => needs(l.pair.is_some(), p, "`pair_cocycle`")?,
            "recipe" => needs(
                l.mp.is_some() && (l.sections.is_some() || l.pair_sections.is_some()),
                p,
                "`mp_cocycle` and `sections` or `pair_sections`",
            )?,
            "delta_d" => needs(
                l.mp.is_some() && l.pair_sections.is_some() && sc.d_adapted,
                p,
                "`mp_cocycle`, `pair_sections` and `d_adapted`",
            )?,
            "cross_check" => needs(l.mp.is_some() && l.pair_sections.is_some(), p, "`mp_cocycle` and `pair_sections`")?,
            "pointwise" => needs(!sc.pointwise.is_empty(), p, "`pointwise` cases")?,
            _ => {}
        }
    }
    Ok(PIPELINES
        .iter()
        .zip(want)
        .filter(|(_, w)| *w)
        .map(|(p, _)| p.to_string())
        .collect())
}

struct Induced {
    data: PolarizationPairData,
    z1: SampledCocycle<MlElement>,
    z2: SampledCocycle<MlElement>,
    premise: f64,
}

struct Run<'a> {
    l: &'a Loaded,
    tol: Tolerances,
    seed: u64,
    report: VerificationReport,
    induced: Option<Induced>,
    bundle: Option<MetaplecticBundleData>,
}

fn error_record(id: &str, e: &HfeError) -> CheckRecord {
    CheckRecord::new(id, "step completes").require(false, e.to_string())
}

impl Run<'_> {
    fn push(&mut self, c: CheckRecord) {
        self.report.checks.push(c);
    }

    fn constant(&mut self, key: &str, v: impl Into<Value>) {
        self.report.constants.insert(key.into(), v.into());
    }

    fn opts(&self) -> DeltaTildeOptions {
        DeltaTildeOptions {
            seed: self.seed,
            ..Default::default()
        }
    }

    fn pipeline(&mut self, name: &str) {
        let r = match name {
            "validate" => self.validate(),
            "lift" => self.lift(),
            "obstruction" => self.obstruction(),
            "induce" => self.induce(),
            "delta_tilde" => self.delta_tilde(),
            "self_compat" => self.self_compat(),
            "recipe" => self.recipe(),
            "delta_d" => self.delta_d(),
            "cross_check" => self.cross_check(),
            "pointwise" => self.pointwise(),
            _ => unreachable!("planned pipelines are known"),
        };
        if let Err(e) = r {
            self.push(error_record(&format!("{name}.error"), &e));
        }
    }

    fn validate(&mut self) -> Result<()> {
        let (l, tol) = (self.l, self.tol);
        let nerve = &l.nerve;
        self.push(
            CheckRecord::new("validate.nerve", "charts and overlap components are connected, triples are consistent")
                .require(true, ""),
        );
        self.constant("charts", nerve.charts.len());
        self.constant("overlap_components", nerve.n_components());
        self.constant("triple_points", nerve.n_triple_points());
        if let Some(c) = &l.cocycle {
            let rep = validate_cocycle(nerve, &c.sample(nerve)?, &tol)?;
            self.push(
                CheckRecord::new("validate.ml_lift_cocycle", "t_ab t_bc = t_ac at triple points")
                    .residual(rep.max_residual, tol.rel)
                    .failures(rep.failures),
            );
        }
        if let Some(p) = &l.pair {
            let rep = validate_cocycle(nerve, &p.pair_cocycle.sample(nerve)?, &tol)?;
            self.push(
                CheckRecord::new("validate.pair_cocycle", "pair cocycle in Gl_k(n)^2 with shared A block")
                    .residual(rep.max_residual.max(rep.max_membership), tol.rel)
                    .failures(rep.failures),
            );
            let rep = validate_pair_data(nerve, p, &tol)?;
            let mut c = CheckRecord::new("validate.delta_law", "delta_b = delta_a conj(det g1) det g2 / det(A)^2")
                .residual(rep.delta_transform_residual.max(rep.section_residual.unwrap_or(0.0)), tol.rel)
                .require(rep.min_abs_delta > tol.singular, format!("|delta| reaches {:e}", rep.min_abs_delta))
                .failures(rep.failures);
            c.passed &= rep.passed;
            self.push(c);
        }
        if l.mp.is_some() {
            let data = self.bundle()?;
            let rep = validate_bundle(nerve, &data, &tol)?;
            self.push(
                CheckRecord::new("validate.sp_cocycle", "Sp transitions are symplectic and satisfy the cocycle law")
                    .residual(rep.sp.max_residual.max(rep.sp.max_membership), tol.rel)
                    .failures(rep.sp.failures),
            );
            self.push(
                CheckRecord::new("validate.mp_cocycle", "tracked Mp transitions satisfy the cocycle law")
                    .residual(rep.mp.max_residual.max(rep.mp.max_membership), tol.rel)
                    .failures(rep.mp.failures),
            );
            if data.d_adapted {
                self.push(
                    CheckRecord::new("validate.spk_pattern", "transitions preserve D (Sp_k block pattern)")
                        .failures(rep.pattern_failures),
                );
            }
        }
        let model = SymplecticModel::standard(l.scenario.n);
        if let Some(secs) = &l.sections {
            let mut min_eig = f64::INFINITY;
            let mut bad = Vec::new();
            for (ci, ch) in nerve.charts.iter().enumerate() {
                for &p in &ch.points {
                    let f = (secs[ci])(nerve.param(p))?;
                    match validate_lagrangian(&f.u, &f.v, &model, &tol) {
                        Ok((_, rep)) => {
                            min_eig = min_eig.min(rep.min_eigenvalue);
                            if !rep.positive {
                                bad.push(format!("{}:{}", ch.id, nerve.points[p].id));
                            }
                        }
                        Err(e) => bad.push(format!("{}:{}: {e}", ch.id, nerve.points[p].id)),
                    }
                }
            }
            let c = CheckRecord::new("validate.sections", "sections are positive Lagrangian frames").failures(bad);
            self.push(CheckRecord {
                residual: Some(min_eig),
                ..c
            });
        }
        if let Some(pairs) = &l.pair_sections {
            let mut bad = Vec::new();
            for (ci, ch) in nerve.charts.iter().enumerate() {
                for &p in &ch.points {
                    let label = format!("{}:{}", ch.id, nerve.points[p].id);
                    match (pairs[ci])(nerve.param(p)) {
                        Ok(pair) => {
                            for f in [&pair.first, &pair.second] {
                                if let Err(e) = validate_lagrangian(&f.u, &f.v, &model, &tol) {
                                    bad.push(format!("{label}: {e}"));
                                }
                            }
                            if let Err(e) = delta(&pair, &model, &tol) {
                                bad.push(format!("{label}: {e}"));
                            }
                        }
                        Err(e) => bad.push(format!("{label}: {e}")),
                    }
                }
            }
            self.push(
                CheckRecord::new("validate.pair_sections", "pair sections share their real block and delta is nonzero")
                    .failures(bad),
            );
        }
        Ok(())
    }

    fn bundle(&mut self) -> Result<MetaplecticBundleData> {
        if let Some(b) = &self.bundle {
            return Ok(b.clone());
        }
        let (sp, anchors) = self.l.mp.as_ref().expect("planned with mp data");
        let mp = sample_mp_cocycle(&self.l.nerve, sp, anchors, &self.tol)?;
        let b = MetaplecticBundleData {
            n: self.l.scenario.n,
            k: self.l.scenario.k,
            d_adapted: self.l.scenario.d_adapted,
            sp: sp.clone(),
            mp,
        };
        self.bundle = Some(b.clone());
        Ok(b)
    }

    fn lift(&mut self) -> Result<()> {
        let (l, tol) = (self.l, self.tol);
        let nerve = &l.nerve;
        let cocycle = match (&l.cocycle, &l.pair) {
            (Some(c), _) => c.clone(),
            (None, Some(p)) => p.first_cocycle(),
            (None, None) => unreachable!("planned with a cocycle"),
        };
        let expect = l.scenario.expect.liftable;
        match lift_double_cover(nerve, &cocycle, &tol)? {
            LiftOutcome::Lifted(z) => {
                self.constant("liftable", true);
                self.push(
                    CheckRecord::new("lift.outcome", "square roots of det t_ab can be chosen as a cocycle")
                        .require(expect != Some(false), "expected an obstruction"),
                );
                let rep = validate_cocycle(nerve, &z, &tol)?;
                self.push(
                    CheckRecord::new("lift.ml_cocycle", "lifted transitions satisfy z^2 = det and the cocycle law")
                        .residual(rep.max_residual.max(rep.max_membership), tol.rel)
                        .failures(rep.failures),
                );
                let h1 = h1_rank(nerve);
                let classes = enumerate_lift_classes(nerve)?;
                self.constant("h1_rank", h1);
                self.constant("lift_classes", classes.len());
                let mut c = CheckRecord::new("lift.class_count", "inequivalent lifts number 2^(H1 rank)")
                    .require(classes.len() == 1 << h1, format!("{} classes, H1 rank {h1}", classes.len()));
                if let Some(e) = l.scenario.expect.lift_classes {
                    c = c.require(classes.len() == e, format!("expected {e} classes, found {}", classes.len()));
                }
                self.push(c);
                let mut bad = Vec::new();
                let reps: Vec<SampledCocycle<MlElement>> =
                    classes.iter().map(|cl| apply_signs(&z, nerve, &cl[0])).collect();
                for (i, cl) in classes.iter().enumerate() {
                    for (j, r) in reps.iter().enumerate().skip(i + 1) {
                        if lifts_equivalent(nerve, &reps[i], r, &tol)?.is_some() {
                            bad.push(format!("classes {i} and {j} are equivalent"));
                        }
                    }
                    for m in cl.iter().skip(1) {
                        let other = apply_signs(&z, nerve, m);
                        if lifts_equivalent(nerve, &reps[i], &other, &tol)?.is_none() {
                            bad.push(format!("class {i} is not closed under chart signs"));
                        }
                    }
                }
                self.push(
                    CheckRecord::new("lift.classes_distinct", "class representatives are pairwise inequivalent")
                        .failures(bad),
                );
            }
            LiftOutcome::Obstructed(defect) => {
                self.constant("liftable", false);
                let solvable = z2_coboundary_solve(nerve, &defect)?.is_some();
                let flagged: Vec<String> = defect
                    .values
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v == -1)
                    .map(|(s, _)| triple_label_of_slot(nerve, s))
                    .collect();
                self.constant("defect_points", flagged.len());
                self.push(
                    CheckRecord::new("lift.outcome", "square roots of det t_ab can be chosen as a cocycle")
                        .require(expect == Some(false), format!("obstructed at {}", flagged.join(", "))),
                );
                self.push(
                    CheckRecord::new("lift.obstruction_class", "the sign defect is not a coboundary")
                        .require(!solvable, "defect cochain is a coboundary"),
                );
            }
        }
        Ok(())
    }

    fn obstruction(&mut self) -> Result<()> {
        let nerve = &self.l.nerve;
        let c2 = self.l.sign_cochain.clone().expect("planned with a cochain");
        let feasible = z2_coboundary_solve(nerve, &c2)?;
        let trivial = z2_coboundary_solve(nerve, &SignCochain::trivial(nerve, 2))?;
        self.constant("sign_cochain_feasible", feasible.is_some());
        let mut c = CheckRecord::new("obstruction.solve", "GF(2) elimination decides whether the 2-cochain is a coboundary");
        if let Some(e) = self.l.scenario.expect.sign_cochain_feasible {
            c = c.require(
                feasible.is_some() == e,
                format!("expected feasible = {e}, solver says {}", feasible.is_some()),
            );
        }
        self.push(c);
        self.push(
            CheckRecord::new("obstruction.trivial", "the trivial 2-cochain is a coboundary")
                .require(trivial.is_some(), "trivial cochain reported infeasible"),
        );
        Ok(())
    }

    fn induce(&mut self) -> Result<()> {
        let (l, tol) = (self.l, self.tol);
        let nerve = &l.nerve;
        let data = l.pair.as_ref().expect("planned with pair data");
        let norm = normalize_sections(nerve, data, &tol)?;
        let mut worst = 0.0f64;
        for (ci, ch) in nerve.charts.iter().enumerate() {
            for &p in &ch.points {
                worst = worst.max(((norm.delta[ci])(nerve.param(p))? - C::new(1.0, 0.0)).norm());
            }
        }
        self.push(
            CheckRecord::new("induce.normalized_delta", "normalized sections have delta = 1").residual(worst, tol.rel),
        );
        let z1 = match lift_double_cover(nerve, &norm.first_cocycle(), &tol)? {
            LiftOutcome::Lifted(z) => z,
            LiftOutcome::Obstructed(_) => {
                self.push(
                    CheckRecord::new("induce.first_lift", "the first polarization admits a metalinear lift")
                        .require(false, "first cocycle is obstructed"),
                );
                return Ok(());
            }
        };
        let induced = induce_compatible(nerve, &norm, &z1, &tol)?;
        self.push(
            CheckRecord::new("induce.premise", "conj(det g1) det g2 = det(A)^2 on normalized data")
                .residual(induced.premise_residual, tol.rel),
        );
        let rep = validate_cocycle(nerve, &induced.lift, &tol)?;
        let g2 = norm.second_cocycle().sample(nerve)?;
        let mut cover = 0.0f64;
        for (oi, ov) in induced.lift.values.iter().enumerate() {
            for (cj, comp) in ov.iter().enumerate() {
                for (li, z) in comp.iter().enumerate() {
                    cover = cover.max(rel_diff(&z.a, &g2.values[oi][cj][li]));
                }
            }
        }
        self.push(
            CheckRecord::new("induce.second_cocycle", "induced second lift covers g2 and is a cocycle")
                .residual(rep.max_residual.max(rep.max_membership).max(cover), tol.rel)
                .failures(rep.failures),
        );
        self.induced = Some(Induced {
            data: norm,
            z1,
            z2: induced.lift,
            premise: induced.premise_residual,
        });
        Ok(())
    }

    fn delta_tilde(&mut self) -> Result<()> {
        let tol = self.tol;
        let nerve = &self.l.nerve;
        let Some(ind) = &self.induced else {
            return Err(HfeError::Check("no induced lift to build delta~ from".into()));
        };
        let d = build_delta_tilde(nerve, &ind.data, &ind.z1, &ind.z2, &self.opts(), &tol)?;
        let premise_ok = ind.premise <= tol.rel;
        let mut glue = CheckRecord::new("delta_tilde.glue", "delta~ glues across overlaps with the induced lift")
            .residual(d.overlap_residual, tol.rel)
            .failures(d.overlap_failures.clone());
        glue.falsified = !glue.passed && premise_ok;
        let square = CheckRecord::new("delta_tilde.square", "delta~^2 = delta at chart points").residual(d.square_residual, tol.rel);
        let transform = CheckRecord::new("delta_tilde.transform", "delta~ transforms by conj(z1) z2 / |det A| under Ml_k^2")
            .residual(d.transform_residual, tol.rel);
        let signs: Vec<Value> = d.chart_signs.iter().map(|&s| Value::from(s)).collect();
        let m = nerve.n_components();
        let sweep = if m <= SWEEP_LIMIT {
            Some(uniqueness_sweep(nerve, &ind.data, &ind.z1, &ind.z2, &tol)?)
        } else {
            None
        };
        self.push(glue);
        self.push(square);
        self.push(transform);
        self.constant("delta_tilde_chart_signs", signs);
        match sweep {
            Some(s) => {
                self.constant("sweep_patterns", s.patterns);
                self.constant("sweep_glued", s.glued);
                let mut c = CheckRecord::new(
                    "delta_tilde.uniqueness",
                    "exactly the lifts equivalent to the induced one glue delta~",
                )
                .failures(s.violations.iter().map(|v| format!("pattern {v}")).collect());
                c.residual = Some(s.max_glued_residual);
                c.falsified = !c.passed;
                self.push(c);
            }
            None => self
                .report
                .notes
                .push(format!("uniqueness sweep skipped: {m} components exceed {SWEEP_LIMIT}")),
        }
        Ok(())
    }

    fn self_compat(&mut self) -> Result<()> {
        let (l, tol) = (self.l, self.tol);
        let nerve = &l.nerve;
        let data = l.pair.as_ref().expect("planned with pair data");
        let z1 = match lift_double_cover(nerve, &data.first_cocycle(), &tol)? {
            LiftOutcome::Lifted(z) => z,
            LiftOutcome::Obstructed(_) => return Err(HfeError::Check("first cocycle is obstructed".into())),
        };
        let d = self_compat(nerve, data, &z1, &self.opts(), &tol)?;
        let eps = d.epsilon.unwrap_or(0);
        self.constant("self_compat_epsilon", eps);
        self.push(
            CheckRecord::new("self_compat.glue", "delta~ = e^(eps pi i/2)|delta|^(1/2) glues with the lift on both sides")
                .residual(d.overlap_residual, tol.rel)
                .failures(d.overlap_failures.clone()),
        );
        self.push(CheckRecord::new("self_compat.square", "delta~^2 = delta").residual(d.square_residual, tol.rel));
        self.push(
            CheckRecord::new("self_compat.transform", "delta~ transforms by conj(z1) z2 / |det A|")
                .residual(d.transform_residual, tol.rel),
        );
        if let Some(e) = l.scenario.expect.self_compat_epsilon {
            self.push(
                CheckRecord::new("self_compat.epsilon", "sign exponent of delta").require(eps == e, format!("expected {e}, found {eps}")),
            );
        }
        let (min_re, max_im) = d.positivity.unwrap_or((f64::NAN, f64::NAN));
        self.push(
            CheckRecord::new("self_compat.normalized_positive", "normalized delta~ is positive real on equal meta-frame pairs")
                .residual(max_im, tol.abs.max(tol.rel))
                .require(min_re > 0.0, format!("minimum real part {min_re:e}")),
        );
        Ok(())
    }

    fn recipe(&mut self) -> Result<()> {
        let (l, tol) = (self.l, self.tol);
        let nerve = &l.nerve;
        let data = self.bundle()?;
        let mut sets = Vec::new();
        if let Some(s) = &l.sections {
            sets.push(("recipe".to_string(), s.clone()));
        }
        if let Some(pairs) = &l.pair_sections {
            for (which, pick) in [("first", 0usize), ("second", 1)] {
                let fns = pairs
                    .iter()
                    .map(|f| {
                        let f = f.clone();
                        std::sync::Arc::new(move |x: &[f64]| {
                            let p = f(x)?;
                            Ok(if pick == 0 { p.first } else { p.second })
                        }) as cech::PointFn<frames::LagFrame>
                    })
                    .collect();
                sets.push((format!("recipe.{which}"), fns));
            }
        }
        let none = vec![false; nerve.charts.len()];
        for (id, secs) in sets {
            let out = recipe(nerve, &data, &secs, &none, &tol)?;
            self.push(
                CheckRecord::new(&format!("{id}.rho"), "rho(N~) = N from the section relation g s_b = s_a N")
                    .residual(out.rho_residual.max(out.section_residual), tol.rel),
            );
            self.push(
                CheckRecord::new(&format!("{id}.cocycle"), "N~ is an Ml cocycle")
                    .residual(out.cocycle.max_residual.max(out.cocycle.max_membership), tol.rel)
                    .failures(out.cocycle.failures.clone()),
            );
            let mut bad = Vec::new();
            for ci in 0..nerve.charts.len() {
                let mut flips = none.clone();
                flips[ci] = true;
                let other = recipe(nerve, &data, &secs, &flips, &tol)?;
                let target: Vec<i8> = (0..nerve.charts.len()).map(|c| if c == ci { -1 } else { 1 }).collect();
                match lifts_equivalent(nerve, &out.lift, &other.lift, &tol)? {
                    Some(eps) => {
                        let neg: Vec<i8> = target.iter().map(|s| -s).collect();
                        if eps != target && eps != neg {
                            bad.push(format!("chart {}: signs {eps:?}", nerve.charts[ci].id));
                        }
                    }
                    None => bad.push(format!("chart {}: not a coboundary", nerve.charts[ci].id)),
                }
            }
            let mut c = CheckRecord::new(
                &format!("{id}.sheet_change"),
                "changing the sheet of one chart's section changes N~ by that chart's coboundary",
            )
            .failures(bad);
            c.falsified = !c.passed;
            self.push(c);
        }
        Ok(())
    }

    fn delta_d(&mut self) -> Result<()> {
        let (l, tol) = (self.l, self.tol);
        let nerve = &l.nerve;
        let data = self.bundle()?;
        let pairs = l.pair_sections.as_ref().expect("planned with pair sections");
        let none = vec![false; nerve.charts.len()];
        let d = build_delta_d_tilde(nerve, &data, pairs, [&none, &none], &self.opts(), &tol)?;
        let mut negative = 0usize;
        for ov in &data.mp.values {
            for comp in ov {
                for g in comp {
                    if linalg::det_real(&spk_blocks(&g.g, data.k, &tol)?.a_g) < 0.0 {
                        negative += 1;
                    }
                }
            }
        }
        self.constant("negative_det_a_points", negative);
        self.push(
            CheckRecord::new("delta_d.glue", "delta~_D is invariant under the Mp_k transitions")
                .residual(d.overlap_residual, tol.rel)
                .failures(d.overlap_failures),
        );
        self.push(CheckRecord::new("delta_d.square", "delta~_D^2 = delta_L").residual(d.square_residual, tol.rel));
        self.push(
            CheckRecord::new("delta_d.transform", "delta~_D transforms by conj(z1) z2 / |det A| under Ml_k^2")
                .residual(d.transform_residual, tol.rel),
        );
        self.push(
            CheckRecord::new("delta_d.restriction", "delta_L agrees with delta_k on the pair sections")
                .residual(d.restriction_residual, tol.rel),
        );
        Ok(())
    }

    fn cross_check(&mut self) -> Result<()> {
        let (l, tol) = (self.l, self.tol);
        let nerve = &l.nerve;
        let data = self.bundle()?;
        let pairs = l.pair_sections.as_ref().expect("planned with pair sections");
        let none = vec![false; nerve.charts.len()];
        let r = cross_check(nerve, &data, pairs, [&none, &none], &self.opts(), &tol)?;
        self.constant("cross_check_global_sign", r.global_sign);
        let glued = r.delta_tilde.glues(&tol) && r.delta_d.overlap_residual <= tol.rel;
        self.push(
            CheckRecord::new("cross_check.delta_tilde_glue", "delta~ from the two recipe lifts glues")
                .residual(r.delta_tilde.overlap_residual, tol.rel)
                .failures(r.delta_tilde.overlap_failures.clone()),
        );
        let mut c = CheckRecord::new("cross_check.sign", "delta~_D equals delta~ up to one global sign")
            .residual(r.sign_residual, tol.rel);
        c.falsified = !c.passed && glued;
        self.push(c);
        Ok(())
    }

    fn pointwise(&mut self) -> Result<()> {
        let (l, tol) = (self.l, self.tol);
        let n = l.scenario.n;
        let model = SymplecticModel::standard(n);
        let mut rng = sampling::rng(self.seed ^ 0x9e37_79b9);
        let anchor = gamma(&linalg::CMat::zeros(n, n), &linalg::CMat::zeros(n, n), &tol)?;
        self.constant("gamma_anchor", anchor.re);
        self.report.notes.push(format!(
            "Gamma(0,0) = 2^(-n/2) = {:.6}; with this normalization delta~_L((1,i),(1,i)) = sqrt(2) at n = 1",
            anchor.re
        ));
        for case in &l.scenario.pointwise {
            let id = format!("pointwise.{}", case.id);
            let r = (|| -> Result<()> {
                let f1 = case.first.eval(n, &[], &tol)?;
                let f2 = case.second.eval(n, &[], &tol)?;
                for f in [&f1, &f2] {
                    validate_lagrangian(&f.u, &f.v, &model, &tol)?;
                }
                let pair = LagFramePair::new(f1, f2, case.k, &tol)?;
                let d = delta(&pair, &model, &tol)?;
                self.constant(&format!("{id}.delta"), Value::from(vec![d.re, d.im]));
                let mut c = CheckRecord::new(&format!("{id}.delta"), "delta_k is a nonzero complex number");
                if let Some(e) = case.expect_delta {
                    c = c.residual(rel_diff_c(d, e.value()), tol.rel);
                }
                self.push(c);

                let k = case.k;
                let lifts = linalg::complexify(&RMat::from_fn(2 * n, 2 * n - k, |_, _| {
                    sampling::complex_normal(&mut rng).re
                }));
                let density = |p: &LagFramePair, nu1: C, nu2: C, mode| {
                    pairing_density(
                        &DensityInput {
                            prequantum: C::new(1.0, 0.0),
                            nu1,
                            nu2,
                            pair: p,
                            lifts: &lifts,
                            mode,
                        },
                        &model,
                        &tol,
                    )
                };
                let one = C::new(1.0, 0.0);
                let v0 = density(&pair, one, one, DensityMode::HalfDensity)?;
                let dt = principal_sqrt(d);
                let w0 = density(&pair, one, one, DensityMode::HalfForm { delta_tilde: dt })?;
                let mut hd = 0.0f64;
                let mut hf = 0.0f64;
                for _ in 0..POINTWISE_DRAWS {
                    let h = sampling::glkd_pair(n, k, &mut rng);
                    let q = pair.right(&h.g1, &h.g2);
                    let nu1 = C::new(linalg::det(&h.g1).norm().powf(-0.5), 0.0);
                    let nu2 = C::new(linalg::det(&h.g2).norm().powf(-0.5), 0.0);
                    hd = hd.max(rel_diff_c(density(&q, nu1, nu2, DensityMode::HalfDensity)?, v0));

                    let m = sampling::mlkd_pair(n, k, &mut rng, &tol)?;
                    let q = pair.right(&m.g1.a, &m.g2.a);
                    let da = linalg::det_real(&linalg::real_part(&linalg::block(&m.g1.a, 0, 0, k, k))).abs();
                    let dq = m.g1.z.conj() * m.g2.z / da * dt;
                    let v = density(&q, one / m.g1.z, one / m.g2.z, DensityMode::HalfForm { delta_tilde: dq })?;
                    hf = hf.max(rel_diff_c(v, w0));
                }
                self.push(
                    CheckRecord::new(&format!("{id}.half_density"), "half-density pairing is independent of the frames")
                        .residual(hd, tol.rel),
                );
                self.push(
                    CheckRecord::new(&format!("{id}.half_form"), "half-form pairing is independent of the meta-frames")
                        .residual(hf, tol.rel),
                );

                // Frames in reduced block form also give delta_L and its root.
                if let Ok(dl) = delta_l(&pair.first, &pair.second, k, &tol) {
                    let meta = |f: &frames::LagFrame| -> Result<MetaLagFrame> {
                        let (w, c) = phi(f, &tol)?;
                        Ok(MetaLagFrame { w, c: ml_lift(&c, &tol)?.0 })
                    };
                    if let (Ok(x1), Ok(x2)) = (meta(&pair.first), meta(&pair.second)) {
                        if let Ok(t) = delta_l_tilde(&x1, &x2, k, &tol) {
                            self.constant(&format!("{id}.delta_l_tilde"), Value::from(vec![t.re, t.im]));
                            self.push(
                                CheckRecord::new(&format!("{id}.reduced"), "delta_L = delta_k and delta~_L^2 = delta_L")
                                    .residual(rel_diff_c(dl, d).max(rel_diff_c(t * t, dl)), tol.rel),
                            );
                        }
                    }
                }
                Ok(())
            })();
            if let Err(e) = r {
                self.push(error_record(&format!("{id}.error"), &e));
            }
        }
        Ok(())
    }
}

fn triple_label_of_slot(nerve: &cech::Nerve, slot: usize) -> String {
    let mut s = slot;
    for (ti, t) in nerve.triples.iter().enumerate() {
        if s < t.points.len() {
            return nerve.triple_label(ti, s);
        }
        s -= t.points.len();
    }
    format!("slot {slot}")
}
