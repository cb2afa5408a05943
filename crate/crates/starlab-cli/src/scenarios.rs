//! Scenario runners. Each writes its artifacts into a [`RunDir`] and returns
//! a JSON summary for the manifest.

use crate::config::{Gas, Scenario, ScenarioConfig};
use crate::output::{num, RunDir, Severity};
use crate::svg::{Chart, Series};
use crate::verify;
use anyhow::{anyhow, Result};
use rayon::prelude::*;
use serde_json::{json, Value};
use starlab_core::expansion::{
    classify_expansion, collapse_exponent, integrate_alpha, ClockModel, ExpansionError,
    ExpansionPath,
};
use starlab_core::functionals::{EnergyReport, IsentropicLedger, ThermoLedger};
use starlab_core::homogeneous::{
    curve_distance, curve_phi_s, energy_homogeneous, integrate_phase, PhaseState, PhaseTrajectory,
};
use starlab_core::lagrangian::{
    evolve_linear_isentropic, evolve_linear_thermo, evolve_self_similar, reconstruct_eulerian,
    reconstruct_eulerian_thermo, EulerianSnapshot, EventKind, Evolution, IsentropicInitial,
    PerturbationField, RunEvent, SolverSpec, StepRecord, ThermoInitial,
};
use starlab_core::profile::{solve_isentropic_profile, solve_thermo_profile};
use std::collections::BTreeMap;

/// Largest number of points drawn per plotted series.
const PLOT_POINTS: usize = 2000;

pub fn run(cfg: &ScenarioConfig, dir: &mut RunDir) -> Result<Value> {
    match cfg.scenario() {
        Scenario::Profile => profile(cfg, dir),
        Scenario::Expansion => expansion(cfg, dir),
        Scenario::Phase => phase(cfg, dir),
        Scenario::EvolveSs | Scenario::EvolveLinear | Scenario::EvolveThermo => {
            evolve_sweep(cfg, dir)
        }
        Scenario::Verify => verify_all(dir),
    }
}

/// Every `stride`-th sample plus the last one.
fn thin<T: Clone>(v: &[T]) -> Vec<T> {
    let stride = v.len().div_ceil(PLOT_POINTS).max(1);
    let mut out: Vec<T> = v.iter().step_by(stride).cloned().collect();
    if !(v.len() - 1).is_multiple_of(stride) {
        out.extend(v.last().cloned());
    }
    out
}

fn chart(title: &str, x_label: &str, y_label: &str, series: Vec<Series>) -> Chart {
    Chart {
        title: title.into(),
        x_label: x_label.into(),
        y_label: y_label.into(),
        series,
    }
}

fn profile(cfg: &ScenarioConfig, dir: &mut RunDir) -> Result<Value> {
    let m = &cfg.model;
    match m.gas {
        Gas::Isentropic => {
            let p = solve_isentropic_profile(cfg.delta(), &cfg.grid)?;
            let rows = (0..p.y_nodes.len()).map(|i| vec![p.y_nodes[i], p.w[i], p.rho_bar[i]]);
            dir.csv("profile.csv", &["y", "w", "rho_bar"], rows)?;
            let summary = json!({
                "gas": "isentropic",
                "delta": p.delta,
                "R0": p.r0,
                "boundary_slope": p.boundary_slope,
                "fourth_moment": p.fourth_moment,
                "mass": p.mass.last(),
            });
            dir.json("profile.json", &summary)?;
            let series = vec![
                Series::new("w", p.y_nodes.clone(), p.w.clone()),
                Series::new("rho_bar", p.y_nodes.clone(), p.rho_bar),
            ];
            dir.svg(
                "profile.svg",
                &chart(
                    &format!("Isentropic profile, delta = {}", p.delta),
                    "y",
                    "value",
                    series,
                ),
            )?;
            Ok(summary)
        }
        Gas::Thermo => {
            let p = solve_thermo_profile(m.k, m.epsilon, m.rho_c, &cfg.grid)?;
            let n = p.polytropic_index();
            let w: Vec<f64> = p.rho_bar.iter().map(|r| r.max(0.0).powf(1.0 / n)).collect();
            let rows = (0..p.y_nodes.len())
                .map(|i| vec![p.y_nodes[i], w[i], p.rho_bar[i], p.theta_bar[i]]);
            dir.csv("profile.csv", &["y", "w", "rho_bar", "theta_bar"], rows)?;
            let summary = json!({
                "gas": "thermo",
                "K": p.k,
                "epsilon": p.epsilon,
                "c_nu": p.c_nu,
                "polytropic_index": n,
                "R0": p.r0,
                "boundary_slope": p.rho_root_slope,
                "theta_slope": p.theta_slope,
                "reduction_constant": p.reduction_constant,
                "fourth_moment": p.fourth_moment,
                "mass": p.mass.last(),
            });
            dir.json("profile.json", &summary)?;
            let series = vec![
                Series::new("rho_bar^(1/n)", p.y_nodes.clone(), w),
                Series::new("rho_bar", p.y_nodes.clone(), p.rho_bar.clone()),
                Series::new("theta_bar", p.y_nodes.clone(), p.theta_bar.clone()),
            ];
            dir.svg(
                "profile.svg",
                &chart(
                    &format!(
                        "Thermodynamic profile, K = {}, epsilon = {}",
                        p.k, p.epsilon
                    ),
                    "y",
                    "value",
                    series,
                ),
            )?;
            Ok(summary)
        }
    }
}

fn expansion(cfg: &ScenarioConfig, dir: &mut RunDir) -> Result<Value> {
    let params = classify_expansion(cfg.delta(), cfg.model.a0, cfg.a1())?;
    let path: ExpansionPath = match integrate_alpha(&params, cfg.end(), &cfg.expansion) {
        Ok(p) => p,
        Err(ExpansionError::CollapseReached { t_collapse, path }) => {
            dir.event(
                "expansion",
                "collapse",
                Severity::Failure,
                Some(t_collapse),
                format!("alpha reaches zero at t = {t_collapse}"),
            );
            *path
        }
        Err(e) => return Err(e.into()),
    };
    let rows = (0..path.t.len()).map(|i| {
        vec![
            path.t[i],
            path.alpha[i],
            path.alpha_prime[i],
            path.s[i],
            path.tau[i],
        ]
    });
    dir.csv(
        "expansion.csv",
        &["t", "alpha", "alpha_prime", "s", "tau"],
        rows,
    )?;
    let summary = json!({
        "classification": params.classification,
        "delta": params.delta,
        "a0": params.a0,
        "a1": params.a1,
        "a1_star": params.a1_star,
        "beta1": params.beta1,
        "beta2": params.beta2,
        "T_collapse": path.t_collapse,
        "collapse_exponent": collapse_exponent(&path),
        "t_end": path.t.last(),
        "alpha_end": path.alpha.last(),
    });
    dir.json("expansion.json", &summary)?;
    let series = vec![
        Series::new("alpha", thin(&path.t), thin(&path.alpha)),
        Series::new("alpha'", thin(&path.t), thin(&path.alpha_prime)).dashed(),
    ];
    dir.svg(
        "alpha.svg",
        &chart(
            &format!("Expansion factor ({:?})", params.classification),
            "t",
            "alpha",
            series,
        ),
    )?;
    Ok(summary)
}

fn phase(cfg: &ScenarioConfig, dir: &mut RunDir) -> Result<Value> {
    let delta = cfg.delta();
    let end = cfg.end();
    let spec = cfg.phase.spec;
    let runs: Vec<Result<PhaseTrajectory, _>> = cfg
        .phase
        .states
        .par_iter()
        .map(|st| integrate_phase(&PhaseState::new(st[0], st[1], delta), end, &spec))
        .collect();
    let (lo, hi) = (-0.9, 1.0);
    let curve_x: Vec<f64> = (0..=200)
        .map(|i| lo + (hi - lo) * i as f64 / 200.0)
        .collect();
    let curve_y: Vec<f64> = curve_x
        .iter()
        .map(|&p| curve_phi_s(p, delta))
        .collect::<Result<_, _>>()?;
    let y_lo = curve_y.iter().copied().fold(f64::INFINITY, f64::min) - 0.25;
    let y_hi = curve_y.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 0.25;
    let inside = |p: f64, q: f64| (lo..=hi).contains(&p) && (y_lo..=y_hi).contains(&q);
    let mut portrait = vec![];
    let mut fates = vec![];
    let mut fate_rows = vec![];
    for (k, (st, run)) in cfg.phase.states.iter().zip(runs).enumerate() {
        let tr = run?;
        let mut rows = Vec::with_capacity(tr.s.len());
        for i in 0..tr.s.len() {
            let s = PhaseState::new(tr.phi[i], tr.phi_s[i], delta);
            let e = energy_homogeneous(&s).unwrap_or(f64::NAN);
            rows.push(vec![tr.s[i], tr.phi[i], tr.phi_s[i], e, curve_distance(&s)]);
        }
        dir.csv(
            &format!("trajectory_{k:02}.csv"),
            &["s", "phi", "phi_s", "energy", "curve_distance"],
            rows,
        )?;
        for (label, s) in &tr.events {
            let sev = if label == "collapse_gap" {
                Severity::Warning
            } else {
                Severity::Info
            };
            dir.event(
                "phase",
                label,
                sev,
                Some(*s),
                format!("trajectory {k} from ({}, {})", st[0], st[1]),
            );
        }
        let (px, py): (Vec<f64>, Vec<f64>) = tr
            .phi
            .iter()
            .zip(&tr.phi_s)
            .map(|(&p, &q)| {
                if inside(p, q) {
                    (p, q)
                } else {
                    (f64::NAN, f64::NAN)
                }
            })
            .unzip();
        portrait.push(Series::new(
            format!("#{k:02} {:?}", tr.fate),
            thin(&px),
            thin(&py),
        ));
        let e0 = energy_homogeneous(&PhaseState::new(st[0], st[1], delta))?;
        fates.push(json!({
            "index": k,
            "phi0": st[0],
            "phi_s0": st[1],
            "energy0": e0,
            "fate": tr.fate,
            "first_escape_s": tr.first_escape_s,
            "s_end": tr.s.last(),
        }));
        fate_rows.push(vec![
            k.to_string(),
            num(st[0]),
            num(st[1]),
            num(e0),
            format!("{:?}", tr.fate),
            tr.first_escape_s.map(num).unwrap_or_default(),
        ]);
    }
    dir.csv_text(
        "fates.csv",
        &[
            "index",
            "phi0",
            "phi_s0",
            "energy0",
            "fate",
            "first_escape_s",
        ],
        &fate_rows,
    )?;
    let summary = json!({ "delta": delta, "s_end": end, "trajectories": fates });
    dir.json("fates.json", &summary)?;
    portrait.push(Series::new("zero energy", curve_x, curve_y).dashed());
    dir.svg(
        "portrait.svg",
        &chart(
            &format!("Phase portrait, delta = {delta}"),
            "phi",
            "phi_s",
            portrait,
        ),
    )?;
    Ok(summary)
}

fn evolve_sweep(cfg: &ScenarioConfig, dir: &mut RunDir) -> Result<Value> {
    if cfg.sweep_seeds.is_empty() {
        return evolve(cfg, cfg.seed, dir);
    }
    let mut seeds = vec![cfg.seed];
    seeds.extend(cfg.sweep_seeds.iter().filter(|&&s| s != cfg.seed));
    let children: Vec<RunDir> = seeds
        .iter()
        .map(|s| dir.child(&format!("seed_{s}")))
        .collect::<Result<_>>()?;
    let done: Vec<(u64, RunDir, Result<Value>)> = seeds
        .par_iter()
        .zip(children)
        .map(|(&seed, mut child)| {
            let r = evolve(cfg, seed, &mut child);
            (seed, child, r)
        })
        .collect();
    let mut runs = vec![];
    for (seed, child, r) in done {
        dir.absorb(child);
        match r {
            Ok(v) => runs.push(json!({ "seed": seed, "summary": v })),
            Err(e) => {
                dir.event(
                    &format!("seed_{seed}"),
                    "error",
                    Severity::Failure,
                    None,
                    format!("{e:#}"),
                );
                runs.push(json!({ "seed": seed, "error": format!("{e:#}") }));
            }
        }
    }
    Ok(json!({ "sweep": runs }))
}

fn severity(kind: EventKind) -> Severity {
    match kind {
        EventKind::OutsideStabilityRange => Severity::Warning,
        _ => Severity::Failure,
    }
}

/// Ledger reports of every accepted step, trimmed to the snapshot clocks.
struct Reports {
    all: Vec<EnergyReport>,
    error: Option<String>,
}

impl Reports {
    fn new() -> Self {
        Self {
            all: vec![],
            error: None,
        }
    }

    fn push<E: std::fmt::Display>(&mut self, r: Result<EnergyReport, E>, clock: f64) {
        match r {
            Ok(rep) => self.all.push(rep),
            Err(e) => {
                self.error
                    .get_or_insert_with(|| format!("energy ledger failed at clock {clock}: {e}"));
            }
        }
    }

    fn at(&self, clocks: &[f64]) -> Vec<&EnergyReport> {
        clocks
            .iter()
            .filter_map(|&c| self.all.iter().rev().find(|r| r.clock == c))
            .collect()
    }
}

/// Solver output shared by the isentropic and thermodynamic regimes.
struct RunData {
    x: Vec<f64>,
    grid: Value,
    /// Snapshot clock and its Lagrangian columns.
    fields: Vec<(f64, Vec<Vec<f64>>)>,
    history: Vec<StepRecord>,
    events: Vec<RunEvent>,
    steps: usize,
    rejected: usize,
    final_clock: f64,
    reports: Reports,
    eulerian: Vec<Result<EulerianSnapshot, String>>,
}

impl RunData {
    fn new<F>(
        x: Vec<f64>,
        grid: Value,
        ev: Evolution<F>,
        columns: impl Fn(&F) -> (f64, Vec<Vec<f64>>),
        eulerian: impl Fn(&F) -> Result<EulerianSnapshot, String>,
        reports: Reports,
    ) -> Self {
        Self {
            x,
            grid,
            fields: ev.snapshots.iter().map(&columns).collect(),
            eulerian: ev.snapshots.iter().map(&eulerian).collect(),
            history: ev.history,
            events: ev.events,
            steps: ev.steps,
            rejected: ev.rejected,
            final_clock: ev.final_clock,
            reports,
        }
    }
}

fn evolve(cfg: &ScenarioConfig, seed: u64, dir: &mut RunDir) -> Result<Value> {
    let m = &cfg.model;
    let init = &cfg.initial;
    let (delta, a0, a1) = (cfg.delta(), m.a0, cfg.a1());
    let params = classify_expansion(delta, a0, a1)?;
    let end = cfg.end();
    let spec = SolverSpec {
        emit_every: cfg.horizon.emit_every.unwrap_or(0.0),
        ..cfg.solver.clone()
    };
    let kind = cfg.scenario();
    let (clock_name, regime) = match kind {
        Scenario::EvolveSs => ("s", "self-similar"),
        Scenario::EvolveLinear => ("tau", "linear-isentropic"),
        _ => ("tau", "linear-thermo"),
    };
    let thermo = kind == Scenario::EvolveThermo;
    let run = if thermo {
        let p = solve_thermo_profile(m.k, m.epsilon, m.rho_c, &cfg.grid)?;
        let x = p.y_nodes.clone();
        let g0 = init.theta0.family(seed).sample(&x);
        let g1 = init.theta1.family(seed + 1).sample(&x);
        let z = init.zeta.family(seed + 2).sample(&x);
        let data = ThermoInitial::scaled(&x, &g0, &g1, &z, init.amplitude);
        let clock = ClockModel::LinearExact { a0, a1 };
        let mut ledger = ThermoLedger::new(&p, &clock, &cfg.weights, m.mu)?;
        let mut reps = Reports::new();
        let ev = evolve_linear_thermo(&p, &params, &data, end, &spec, &mut |f, _| {
            reps.push(ledger.observe(f), f.clock)
        })?;
        let grid = json!({ "intervals": p.intervals(), "R0": p.r0, "K": p.k, "epsilon": p.epsilon, "c_nu": p.c_nu });
        RunData::new(
            x,
            grid,
            ev,
            |f| (f.clock, vec![f.xi.clone(), f.xi_t.clone(), f.zeta.clone()]),
            |f| reconstruct_eulerian_thermo(f, &p, &clock).map_err(|e| e.to_string()),
            reps,
        )
    } else {
        let p = solve_isentropic_profile(delta, &cfg.grid)?;
        let x = p.y_nodes.clone();
        let g0 = init.theta0.family(seed).sample(&x);
        let g1 = init.theta1.family(seed + 1).sample(&x);
        let data = IsentropicInitial::scaled(&x, &g0, &g1, init.amplitude);
        let clock = if kind == Scenario::EvolveSs {
            ClockModel::self_similar(a0, delta)
        } else {
            ClockModel::linear(delta, a0, a1, end * 1.01 + 1e-3)?
        };
        let mut ledger = IsentropicLedger::new(&p, &clock, &cfg.weights, m.mu)?;
        let mut reps = Reports::new();
        let mut obs = |f: &PerturbationField, _: &StepRecord| reps.push(ledger.observe(f), f.clock);
        let ev = if kind == Scenario::EvolveSs {
            evolve_self_similar(&p, &params, &data, end, &spec, &mut obs)?
        } else {
            evolve_linear_isentropic(&p, &params, &data, end, &spec, &mut obs)?
        };
        let grid = json!({ "intervals": p.intervals(), "R0": p.r0, "delta": p.delta });
        RunData::new(
            x,
            grid,
            ev,
            |f| (f.clock, vec![f.theta.clone(), f.theta_t.clone()]),
            |f| reconstruct_eulerian(f, &p, &clock).map_err(|e| e.to_string()),
            reps,
        )
    };
    let RunData {
        x,
        grid,
        fields: out_fields,
        history,
        events,
        steps,
        rejected,
        final_clock,
        reports,
        eulerian,
    } = run;

    for e in &events {
        let RunEvent {
            kind,
            clock,
            detail,
        } = e;
        dir.event(
            "lagrangian",
            &format!("{kind:?}"),
            severity(*kind),
            Some(*clock),
            detail.clone(),
        );
    }
    if let Some(err) = &reports.error {
        dir.event(
            "functionals",
            "ledger",
            Severity::Failure,
            None,
            err.clone(),
        );
    }

    let field_header: &[&str] = if thermo {
        &["x", "xi", "xi_t", "zeta"]
    } else {
        &["x", "theta", "theta_t"]
    };
    let clocks: Vec<f64> = out_fields.iter().map(|(c, _)| *c).collect();
    for (k, (_, cols)) in out_fields.iter().enumerate() {
        let rows = (0..x.len()).map(|i| {
            std::iter::once(x[i])
                .chain(cols.iter().map(|c| c[i]))
                .collect()
        });
        dir.csv(
            &format!("snapshots/snapshot_{k:04}.csv"),
            field_header,
            rows,
        )?;
    }
    let mut snapshot_times = vec![];
    for (k, e) in eulerian.iter().enumerate() {
        match e {
            Ok(s) => {
                snapshot_times.push(json!({ "index": k, "clock": clocks[k], "t": s.t, "r_boundary": s.r_boundary, "mass": s.total_mass() }));
                let header: &[&str] = if thermo {
                    &["r", "rho", "u", "theta_abs"]
                } else {
                    &["r", "rho", "u"]
                };
                let rows = (0..s.r.len()).map(|i| {
                    let mut row = vec![s.r[i], s.rho[i], s.u[i]];
                    if let Some(th) = &s.theta_abs {
                        row.push(th[i]);
                    }
                    row
                });
                dir.csv(&format!("eulerian/eulerian_{k:04}.csv"), header, rows)?;
            }
            Err(msg) => dir.event(
                "lagrangian",
                "eulerian",
                Severity::Failure,
                Some(clocks[k]),
                msg.clone(),
            ),
        }
    }

    let reps = reports.at(&clocks);
    let ledger_keys: Vec<String> = reps
        .first()
        .map(|r| r.ledger.keys().cloned().collect())
        .unwrap_or_default();
    let mut header: Vec<String> = [
        "clock",
        "e_phys",
        "d_phys",
        "e_pert",
        "d_pert",
        "identity_residual",
        "omega",
        "e0",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(ledger_keys.iter().cloned());
    header.push("ledger_total".into());
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    let rows: Vec<Vec<String>> = reps
        .iter()
        .map(|r| {
            let mut row = vec![
                num(r.clock),
                num(r.e_phys),
                num(r.d_phys),
                opt(r.e_pert),
                opt(r.d_pert),
                num(r.identity_residual),
                num(r.omega),
                num(r.e0),
            ];
            row.extend(ledger_keys.iter().map(|k| opt(r.ledger.get(k).copied())));
            row.push(num(r.ledger_total()));
            row
        })
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    dir.csv_text("energy.csv", &header_refs, &rows)?;
    let mut schema = BTreeMap::new();
    schema.insert("clock".to_string(), format!("solver clock {clock_name}"));
    schema.insert(
        "e_phys".into(),
        "physical energy of the reconstructed Eulerian state".into(),
    );
    schema.insert("d_phys".into(), "physical viscous dissipation".into());
    schema.insert(
        "e_pert".into(),
        "perturbation energy (self-similar regime only)".into(),
    );
    schema.insert(
        "d_pert".into(),
        "perturbation dissipation (self-similar regime only)".into(),
    );
    schema.insert(
        "identity_residual".into(),
        "E(clock) - E(0) + accumulated weighted dissipation; E is the perturbation energy, or the physical energy relative to the unperturbed expansion".into(),
    );
    schema.insert("omega".into(), "perturbation amplitude".into());
    schema.insert(
        "e0".into(),
        "initial energy of the total functionals".into(),
    );
    for k in &ledger_keys {
        let what = if k.starts_with("D:") {
            "accumulated dissipation term"
        } else {
            "energy term"
        };
        schema.insert(k.clone(), format!("{what} of the total functionals"));
    }
    schema.insert("ledger_total".into(), "sum of every ledger column".into());
    dir.json(
        "energy_schema.json",
        &json!({ "columns": header, "descriptions": schema }),
    )?;

    let step_rows: Vec<Vec<String>> = history
        .iter()
        .map(|r| {
            vec![
                num(r.clock),
                num(r.dt),
                opt(r.energy),
                num(r.dissipation),
                num(r.dissipation_weight),
                num(r.omega),
            ]
        })
        .collect();
    dir.csv_text(
        "steps.csv",
        &[
            "clock",
            "dt",
            "energy",
            "dissipation",
            "dissipation_weight",
            "omega",
        ],
        &step_rows,
    )?;

    let hc: Vec<f64> = history.iter().map(|r| r.clock).collect();
    let ho: Vec<f64> = history.iter().map(|r| r.omega).collect();
    let amp = chart(
        &format!("Perturbation amplitude ({regime}, seed {seed})"),
        clock_name,
        "omega",
        vec![Series::new("omega", thin(&hc), thin(&ho))],
    );
    dir.svg("amplitude.svg", &amp)?;
    let ec: Vec<f64> = reps.iter().map(|r| r.clock).collect();
    let mut es = vec![
        Series::new(
            "ledger total",
            ec.clone(),
            reps.iter().map(|r| r.ledger_total()).collect(),
        ),
        Series::new("E0", ec.clone(), reps.iter().map(|r| r.e0).collect()).dashed(),
    ];
    if reps.iter().all(|r| r.e_pert.is_some()) {
        es.push(Series::new(
            "E_pert",
            ec.clone(),
            reps.iter().map(|r| r.e_pert.unwrap_or(f64::NAN)).collect(),
        ));
    }
    dir.svg(
        "energy.svg",
        &chart(
            &format!("Energy functionals ({regime}, seed {seed})"),
            clock_name,
            "energy",
            es,
        ),
    )?;

    let max_omega = history.iter().map(|r| r.omega).fold(0.0, f64::max);
    let summary = json!({
        "regime": regime,
        "seed": seed,
        "clock": clock_name,
        "grid": grid,
        "dt_policy": spec,
        "steps": steps,
        "rejected": rejected,
        "final_clock": final_clock,
        "max_omega": max_omega,
        "final_identity_residual": reps.last().map(|r| r.identity_residual),
        "snapshots": snapshot_times,
        "events": events,
    });
    dir.json("run.json", &summary)?;
    Ok(summary)
}

fn verify_all(dir: &mut RunDir) -> Result<Value> {
    let results = verify::run_all(|r| println!("{}", r.render()));
    for r in results.iter().filter(|r| !r.pass) {
        dir.event(
            "verify",
            &format!("criterion_{:02}", r.id),
            Severity::Failure,
            None,
            r.failures.join("; "),
        );
    }
    let passed = results.iter().filter(|r| r.pass).count();
    let summary = json!({ "passed": passed, "total": results.len(), "criteria": results });
    dir.json("verify.json", &summary)?;
    if results.is_empty() {
        return Err(anyhow!("no criteria ran"));
    }
    Ok(json!({ "passed": passed, "total": results.len() }))
}
