use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::time::Instant;

use cosym_core::constructions::{build_scenario, Scenario};
use cosym_core::geometry::{classify_structure, verify_closed, StructureClassification, Verdict};
use cosym_core::groupoid::{
    arrow_space_check, basic_form_check, mapping_torus_holonomy, orbit_invariance_check,
    quasi_iso_check,
};
use cosym_core::hamiltonian::{
    clean_action_check, convexity_certificate, detect_null_ideal, moment_body, morse_bott_analysis,
    reduce_at_zero, reduction_discrepancy, rotated_slice, validate_action, verify_moment_map,
    verify_precosymplectic_action, MomentBody, MorseBottReport, MorseOptions, NullIdeal,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{CheckName, FoliationChoice, RunConfig};
use crate::report::{CheckReport, Provenance, ScenarioReport, Status, Summary, REPORT_VERSION};

/// Midpoint hull-membership bound for the convexity certificate.
pub const CONVEXITY_TOL: f64 = 1e-7;
/// `|dη_red|` bound for the reduced form.
pub const REDUCED_CLOSED_TOL: f64 = 1e-8;
/// Largest change of the reduced forms under a rotated slice.
pub const SLICE_INVARIANCE_TOL: f64 = 1e-7;
const ACTION_AXIOM_SAMPLES: usize = 30;
const ACTION_GROUP_SAMPLES: usize = 20;

/// Report plus the structured results the CSV writers need.
pub struct RunOutput {
    pub report: ScenarioReport,
    pub moment_body: Option<MomentBody>,
    pub morse: Vec<MorseBottReport>,
}

enum Outcome {
    Pass(Value),
    Fail(Value),
    NotApplicable(&'static str),
    Error(String),
}

fn verdict(passes: bool, detail: Value) -> Outcome {
    if passes {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

macro_rules! attempt {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => return Outcome::Error(err.to_string()),
        }
    };
}

struct Context<'a> {
    cfg: &'a RunConfig,
    s: Scenario,
    classification: Option<Result<StructureClassification, String>>,
    report: ScenarioReport,
    moment_body: Option<MomentBody>,
    morse: Vec<MorseBottReport>,
}

impl Context<'_> {
    /// Each check draws from its own stream, so results do not depend on which other checks ran.
    fn rng(&self, check: CheckName) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(
            self.cfg.seed ^ (check as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        )
    }

    /// The configured point, if any, followed by random chart points.
    fn sample_points(&self, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let mut pts: Vec<Vec<f64>> = self.cfg.point.iter().cloned().collect();
        while pts.len() < self.cfg.sample_points.max(1) {
            pts.push(self.s.manifold.random_point(rng));
        }
        pts
    }

    fn classification(&mut self) -> Result<StructureClassification, String> {
        if self.classification.is_none() {
            let t = &self.cfg.tolerances;
            self.classification = Some(
                classify_structure(&self.s.manifold, &self.s.forms, t.tol_rank, t.tol_closed)
                    .map_err(|e| e.to_string()),
            );
        }
        self.classification.clone().expect("just set")
    }

    fn null_ideal(&self) -> cosym_core::Result<NullIdeal> {
        detect_null_ideal(&self.s, self.cfg.tolerances.tol_subspace)
    }

    fn check_point_dim(&self, x: &[f64]) -> Result<(), String> {
        if x.len() != self.s.dim() {
            return Err(format!(
                "point has {} coordinates, chart has {}",
                x.len(),
                self.s.dim()
            ));
        }
        Ok(())
    }

    fn run_check(&mut self, check: CheckName) -> Outcome {
        let t = self.cfg.tolerances;
        let mut rng = self.rng(check);
        if let Some(p) = &self.cfg.point {
            if let Err(m) = self.check_point_dim(p) {
                return Outcome::Error(m);
            }
        }
        match check {
            CheckName::Classify => {
                let c = attempt!(self.classification());
                self.report.classification = Some(to_value(&c));
                verdict(c.verdict.is_structure(), to_value(&c))
            }
            CheckName::Closed => {
                let r = attempt!(verify_closed(
                    &self.s.manifold,
                    &self.s.forms,
                    self.s.manifold.default_step()
                ));
                verdict(r.passes(t.tol_closed), to_value(&r))
            }
            CheckName::Action => {
                let Some(a) = &self.s.action else {
                    return Outcome::NotApplicable("scenario has no torus action");
                };
                let n = a.torus_rank();
                let axioms = attempt!(validate_action(&self.s, ACTION_AXIOM_SAMPLES, &mut rng));
                let thetas: Vec<Vec<f64>> = (0..ACTION_GROUP_SAMPLES)
                    .map(|_| (0..n).map(|_| rng.random_range(0.0..TAU)).collect())
                    .collect();
                let forms = attempt!(verify_precosymplectic_action(
                    &self.s,
                    &thetas,
                    t.tol_action
                ));
                verdict(
                    axioms.passes && forms.passes,
                    json!({ "axioms": axioms, "invariance": forms }),
                )
            }
            CheckName::Moment => {
                if !self.s.action.as_ref().is_some_and(|a| a.has_moment_map()) {
                    return Outcome::NotApplicable("scenario has no moment map");
                }
                let m = attempt!(verify_moment_map(&self.s, t.tol_action));
                let ideal = attempt!(self.null_ideal());
                verdict(
                    m.passes && ideal.matches_declared,
                    json!({ "moment_map": m, "null_ideal": ideal }),
                )
            }
            CheckName::Clean => {
                if !self.s.action.as_ref().is_some_and(|a| a.has_moment_map()) {
                    return Outcome::NotApplicable("scenario has no moment map");
                }
                let class = self.classification().ok();
                let ideal = attempt!(self.null_ideal());
                let pts = self.sample_points(&mut rng);
                let mut first_failure = None;
                for x in &pts {
                    let r = attempt!(clean_action_check(
                        &self.s,
                        class.as_ref(),
                        &ideal,
                        x,
                        t.tol_subspace
                    ));
                    if !r.passes {
                        first_failure = Some(json!({ "point": x, "report": r }));
                        break;
                    }
                }
                verdict(
                    first_failure.is_none(),
                    json!({
                        "null_ideal_dim": ideal.detected_dim,
                        "points_checked": pts.len(),
                        "first_failure": first_failure,
                    }),
                )
            }
            CheckName::Body => {
                if !self.s.action.as_ref().is_some_and(|a| a.has_moment_map()) {
                    return Outcome::NotApplicable("scenario has no moment map");
                }
                let Some(clip) = self
                    .cfg
                    .clip_box
                    .clone()
                    .or_else(|| self.s.clip_box.clone())
                else {
                    return Outcome::NotApplicable("no clip box for the moment body");
                };
                let body = attempt!(moment_body(&self.s, &clip));
                let certificate = convexity_certificate(&body, self.cfg.convexity_pairs, &mut rng);
                let sample_violation = body.sample_violation();
                let detail = json!({
                    "dim": body.dim,
                    "sample_count": body.sample_count,
                    "hull_vertex_count": body.hull_vertices.len(),
                    "image_facet_count": body.image_facets().count(),
                    "sample_violation": sample_violation,
                    "convexity_certificate": certificate,
                    "convexity_pairs": self.cfg.convexity_pairs,
                });
                self.report.moment_body = Some(to_value(&body));
                self.moment_body = Some(body);
                verdict(
                    certificate <= CONVEXITY_TOL && sample_violation <= CONVEXITY_TOL,
                    detail,
                )
            }
            CheckName::Morse => {
                let Some(a) = self.s.action.as_ref().filter(|a| a.has_moment_map()) else {
                    return Outcome::NotApplicable("scenario has no moment map");
                };
                let generators: Vec<Vec<f64>> = match &self.cfg.generators {
                    Some(g) => g.clone(),
                    None => {
                        let b = a.moment_basis();
                        (0..b.nrows())
                            .map(|i| b.row(i).iter().copied().collect())
                            .collect()
                    }
                };
                let opts = MorseOptions {
                    tol_crit: t.tol_crit,
                    tol_eig: t.tol_eig,
                    ..MorseOptions::default()
                };
                let reports = attempt!(generators
                    .iter()
                    .map(|xi| morse_bott_analysis(&self.s, xi, &opts))
                    .collect::<cosym_core::Result<Vec<_>>>());
                let passes = reports
                    .iter()
                    .all(|r| r.all_nondegenerate && r.all_indices_even);
                let detail = json!({
                    "generators": generators.len(),
                    "components": reports.iter().map(|r| r.components.len()).sum::<usize>(),
                    "all_nondegenerate": reports.iter().all(|r| r.all_nondegenerate),
                    "all_indices_even": reports.iter().all(|r| r.all_indices_even),
                });
                self.report.morse = Some(to_value(&reports));
                self.morse = reports;
                verdict(passes, detail)
            }
            CheckName::QuasiIso => {
                let Some(fol) = &self.s.foliation else {
                    return Outcome::NotApplicable("scenario has no foliation");
                };
                let label = fol.label.clone();
                let pts = self.sample_points(&mut rng);
                let mut first_failure = None;
                for x in &pts {
                    let r = attempt!(quasi_iso_check(&self.s, x, t.tol_subspace));
                    if !r.passes {
                        first_failure = Some(json!({ "point": x, "report": r }));
                        break;
                    }
                }
                verdict(
                    first_failure.is_none(),
                    json!({ "foliation": label, "points_checked": pts.len(), "first_failure": first_failure }),
                )
            }
            CheckName::Basic => {
                if self.s.foliation.is_none() {
                    return Outcome::NotApplicable("scenario has no foliation");
                }
                let r = attempt!(basic_form_check(&self.s, t.tol_action));
                verdict(r.passes, to_value(&r))
            }
            CheckName::Orbit => {
                if self.s.foliation.is_none() {
                    return Outcome::NotApplicable("scenario has no foliation");
                }
                let x = self
                    .cfg
                    .point
                    .clone()
                    .unwrap_or_else(|| self.s.manifold.random_point(&mut rng));
                let start = attempt!(quasi_iso_check(&self.s, &x, t.tol_subspace));
                if !start.passes {
                    return Outcome::Fail(json!({ "start": x, "start_report": start }));
                }
                let r = attempt!(orbit_invariance_check(
                    &self.s,
                    &x,
                    self.cfg.orbit_steps,
                    t.tol_subspace,
                    &mut rng
                ));
                verdict(r.passes, json!({ "start": x, "leaf": r }))
            }
            CheckName::Arrow => {
                if self.s.arrows.is_none() {
                    return Outcome::NotApplicable("scenario has no arrow chart");
                }
                let r = attempt!(arrow_space_check(
                    &self.s,
                    self.cfg.sample_points.max(1),
                    t.tol_arrow,
                    &mut rng
                ));
                verdict(r.passes, to_value(&r))
            }
            CheckName::Holonomy => {
                let Some(probe) = &self.s.holonomy else {
                    return Outcome::NotApplicable("scenario has no holonomy probe");
                };
                let r = attempt!(mapping_torus_holonomy(
                    &*probe.return_map,
                    &probe.test_point,
                    self.cfg.holonomy_n_max,
                    t.holonomy_tol
                ));
                let detail =
                    json!({ "probe": probe.label, "test_point": probe.test_point, "result": r });
                self.report.holonomy = Some(to_value(&r));
                Outcome::Pass(detail)
            }
            CheckName::Reduce => {
                let (Some(slice), Some(a)) = (&self.s.slice, &self.s.action) else {
                    return Outcome::NotApplicable("scenario has no slice of the zero level");
                };
                let theta: Vec<f64> = (0..a.torus_rank())
                    .map(|_| rng.random_range(0.0..TAU))
                    .collect();
                let red = attempt!(reduce_at_zero(&self.s, slice, t.tol_rank, t.tol_closed));
                let moved = attempt!(rotated_slice(&self.s, slice, &theta));
                let red2 = attempt!(reduce_at_zero(&self.s, &moved, t.tol_rank, t.tol_closed));
                let discrepancy = reduction_discrepancy(&red, &red2);
                let cosymplectic =
                    matches!(red.classification.verdict, Verdict::Cosymplectic { .. });
                verdict(
                    cosymplectic
                        && red.eta_closed_residual <= REDUCED_CLOSED_TOL
                        && red.eta_min_norm > REDUCED_CLOSED_TOL
                        && discrepancy <= SLICE_INVARIANCE_TOL,
                    json!({ "reduction": red, "rotation": theta, "slice_discrepancy": discrepancy }),
                )
            }
        }
    }
}

fn prepare(cfg: &RunConfig) -> Result<Scenario, String> {
    let mut s = build_scenario(&cfg.scenario).map_err(|e| e.to_string())?;
    if let Some(counts) = &cfg.grid_override {
        s.manifold = s
            .manifold
            .with_grid_counts(counts)
            .map_err(|e| e.to_string())?;
    }
    if cfg.foliation == FoliationChoice::Variant && !s.use_foliation_variant() {
        return Err(format!("{} has no foliation variant", s.name));
    }
    Ok(s)
}

/// Runs every requested check in dependency order. Failures and errors are
/// recorded per check and never stop later checks.
pub fn run(cfg: &RunConfig) -> RunOutput {
    let start = Instant::now();
    let prepared = prepare(cfg);
    let grid_counts = prepared
        .as_ref()
        .map(|s| s.manifold.grid_counts())
        .unwrap_or_default();
    let mut report = ScenarioReport {
        report_version: REPORT_VERSION,
        scenario: cfg.scenario.clone(),
        provenance: Provenance {
            seed: cfg.seed,
            tolerances: cfg.tolerances,
            grid_counts,
            checks_requested: cfg.checks.clone(),
            foliation: prepared
                .as_ref()
                .ok()
                .and_then(|s| s.foliation.as_ref().map(|f| f.label.clone())),
            clip_box: cfg
                .clip_box
                .clone()
                .or_else(|| prepared.as_ref().ok().and_then(|s| s.clip_box.clone())),
            sample_points: cfg.sample_points,
            orbit_steps: cfg.orbit_steps,
            convexity_pairs: cfg.convexity_pairs,
            holonomy_n_max: cfg.holonomy_n_max,
            wall_time_s: None,
        },
        checks: BTreeMap::new(),
        summary: Summary::default(),
        scenario_error: None,
        classification: None,
        moment_body: None,
        morse: None,
        holonomy: None,
        diagnostics: BTreeMap::new(),
        notes: Vec::new(),
    };

    let s = match prepared {
        Ok(s) => s,
        Err(message) => {
            for c in CheckName::ALL {
                let entry = if cfg.requested(c) {
                    CheckReport::error(message.clone())
                } else {
                    CheckReport::skipped("not requested")
                };
                report.checks.insert(c, entry);
            }
            report.scenario_error = Some(message);
            if cfg.timing {
                report.provenance.wall_time_s = Some(start.elapsed().as_secs_f64());
            }
            report.summarize();
            return RunOutput {
                report,
                moment_body: None,
                morse: Vec::new(),
            };
        }
    };
    report.diagnostics = s.diagnostics.clone();
    report.notes = s.notes.clone();

    let mut ctx = Context {
        cfg,
        s,
        classification: None,
        report,
        moment_body: None,
        morse: Vec::new(),
    };
    for &check in &cfg.checks {
        let t0 = Instant::now();
        let mut entry = match ctx.run_check(check) {
            Outcome::Pass(d) => CheckReport {
                status: Status::Pass,
                detail: Some(d),
                message: None,
                wall_time_s: None,
            },
            Outcome::Fail(d) => CheckReport {
                status: Status::Fail,
                detail: Some(d),
                message: None,
                wall_time_s: None,
            },
            Outcome::Error(m) => CheckReport::error(m),
            // A check asked for by name must apply; the default "all checks" list skips what does not.
            Outcome::NotApplicable(m) if cfg.checks_explicit => CheckReport::error(m),
            Outcome::NotApplicable(m) => CheckReport::skipped(format!("not applicable: {m}")),
        };
        if cfg.timing {
            entry.wall_time_s = Some(t0.elapsed().as_secs_f64());
        }
        ctx.report.checks.insert(check, entry);
    }

    let mut report = ctx.report;
    for c in CheckName::ALL {
        report
            .checks
            .entry(c)
            .or_insert_with(|| CheckReport::skipped("not requested"));
    }
    if cfg.timing {
        report.provenance.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    report.summarize();
    RunOutput {
        report,
        moment_body: ctx.moment_body,
        morse: ctx.morse,
    }
}

/// One row per critical component: generator index, value, dimensions, index and representative.
pub fn write_morse_csv<W: std::io::Write>(
    reports: &[MorseBottReport],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(
        out,
        "generator,value,point_count,tangent_dim,normal_dim,index,nullity,nondegenerate,representative"
    )?;
    for (g, r) in reports.iter().enumerate() {
        for c in &r.components {
            let rep: Vec<String> = c
                .representative
                .iter()
                .map(|v| format!("{v:.12e}"))
                .collect();
            writeln!(
                out,
                "{g},{:.12e},{},{},{},{},{},{},{}",
                c.value,
                c.point_count,
                c.tangent_dim,
                c.normal_dim,
                c.index,
                c.nullity,
                c.nondegenerate,
                rep.join(" ")
            )?;
        }
    }
    Ok(())
}
