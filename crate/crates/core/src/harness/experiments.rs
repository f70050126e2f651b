//! Reference experiments and the tables they produce.

use crate::energy::DeviceId;
use crate::error::{Error, Result};
use crate::harness::file::ScenarioFile;
use crate::harness::table::{Column, ResultTable, Value};
use crate::scenario::Scenario;
use crate::selection::{select_sus, ConstraintAudit, SelectionOutcome};
use crate::solver::{
    solve_cig, solve_icig, EquilibriumResult, IterationRecord, SolverConfig, StabilityReport,
};

/// Workloads of SU 3 in the three-SU experiment (Mb).
pub const FIG4_WORKLOADS: [f64; 4] = [0.0, 0.05, 0.1, 0.15];

/// CIG iteration budget claimed for the two-SU reference run.
pub const FEW_ITERATIONS: usize = 15;

fn su_number(scenario: &Scenario, index: usize) -> u32 {
    match scenario.sus[index].id {
        DeviceId::Su(n) => n,
        DeviceId::Du => unreachable!("SU list holds a DU"),
    }
}

fn records(result: &EquilibriumResult) -> impl Iterator<Item = &IterationRecord> {
    std::iter::once(&result.initial).chain(&result.trajectory)
}

pub struct Fig1Result {
    pub table: ResultTable,
    pub cig: EquilibriumResult,
    pub icig: Option<EquilibriumResult>,
}

/// Price trajectories of both solvers on a scenario; one row per iteration
/// and mode, iteration 0 being the starting prices.
pub fn run_fig1_experiment(
    scenario: &Scenario,
    config: &SolverConfig,
    both_modes: bool,
) -> Result<Fig1Result> {
    let active = scenario.all_sus();
    let cig = solve_cig(scenario, &active, config)?;
    let icig = if both_modes {
        Some(solve_icig(scenario, &active, config)?)
    } else {
        None
    };
    let mut columns = vec![Column {
        name: "iter".into(),
        unit: "-".into(),
    }];
    for index in active.iter() {
        columns.push(Column {
            name: format!("q_{}", su_number(scenario, index)),
            unit: "J/Mb".into(),
        });
    }
    columns.push(Column {
        name: "mode".into(),
        unit: "-".into(),
    });
    let mut table = ResultTable::with_columns("fig1", columns);
    for result in std::iter::once(&cig).chain(icig.as_ref()) {
        for rec in records(result) {
            let mut row = vec![Value::from(rec.iteration)];
            row.extend(rec.prices.iter().map(|&q| Value::from(q)));
            row.push(result.mode.name().into());
            table.push(row)?;
        }
    }
    Ok(Fig1Result { table, cig, icig })
}

pub struct Fig23Result {
    pub allocations: ResultTable,
    pub utilities: ResultTable,
    pub equilibrium: EquilibriumResult,
}

/// Allocation and utility trajectories of the incomplete-information solver.
pub fn run_fig23_experiment(scenario: &Scenario, config: &SolverConfig) -> Result<Fig23Result> {
    let active = scenario.all_sus();
    let equilibrium = solve_icig(scenario, &active, config)?;
    let ids: Vec<u32> = active.iter().map(|i| su_number(scenario, i)).collect();

    let mut cols = vec![("iter".to_string(), "-")];
    cols.extend(ids.iter().map(|n| (format!("l_{n}"), "Mb")));
    let mut allocations = ResultTable::with_columns("fig2", to_columns(&cols));
    let mut cols = vec![("iter".to_string(), "-"), ("u_0".to_string(), "J")];
    cols.extend(ids.iter().map(|n| (format!("u_{n}"), "J")));
    let mut utilities = ResultTable::with_columns("fig3", to_columns(&cols));

    for rec in records(&equilibrium) {
        let mut row = vec![Value::from(rec.iteration)];
        row.extend(rec.alloc.iter().map(|&l| Value::from(l)));
        allocations.push(row)?;
        let mut row = vec![Value::from(rec.iteration), Value::from(rec.u_du)];
        row.extend(rec.u_su.iter().map(|&u| Value::from(u)));
        utilities.push(row)?;
    }
    Ok(Fig23Result {
        allocations,
        utilities,
        equilibrium,
    })
}

fn to_columns(cols: &[(String, &str)]) -> Vec<Column> {
    cols.iter()
        .map(|(n, u)| Column {
            name: n.clone(),
            unit: u.to_string(),
        })
        .collect()
}

/// One sweep point after selection and solving.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub outcome: SelectionOutcome,
}

impl SweepPoint {
    /// Allocation of the candidate with canonical index `index`; zero when the
    /// SU was removed.
    pub fn alloc(&self, index: usize) -> f64 {
        let Some(eq) = &self.outcome.final_equilibrium else {
            return 0.0;
        };
        self.outcome
            .active_set
            .slot_of(index)
            .map_or(0.0, |slot| eq.alloc()[slot])
    }
}

pub struct SweepResult {
    pub table: ResultTable,
    pub points: Vec<SweepPoint>,
}

/// Selection followed by the equilibrium at every point; one row per point.
///
/// Columns: the swept value, then price, allocation and utility of every
/// candidate SU in index order, then the DU utility, active-set size and
/// convergence of the final solve. Removed SUs show no price and zero
/// allocation and utility.
pub fn run_points(
    name: &str,
    variable: &str,
    unit: &str,
    points: Vec<(f64, Scenario)>,
    config: &SolverConfig,
) -> Result<SweepResult> {
    let Some((_, first)) = points.first() else {
        return Err(Error::invalid("sweep", "no sweep points"));
    };
    let ids: Vec<u32> = (0..first.sus.len()).map(|i| su_number(first, i)).collect();
    let mut cols = vec![(variable.to_string(), unit)];
    cols.extend(ids.iter().map(|n| (format!("q_{n}"), "J/Mb")));
    cols.extend(ids.iter().map(|n| (format!("l_{n}"), "Mb")));
    cols.extend(ids.iter().map(|n| (format!("u_{n}"), "J")));
    cols.extend([
        ("u_0".to_string(), "J"),
        ("active".to_string(), "-"),
        ("converged".to_string(), "-"),
    ]);
    let mut table = ResultTable::with_columns(name, to_columns(&cols));
    let mut out = Vec::with_capacity(points.len());
    for (value, scenario) in points {
        if scenario.sus.len() != ids.len() {
            return Err(Error::invalid("sweep", "SU count changes between points"));
        }
        let outcome = select_sus(&scenario, &scenario.all_sus(), config)?;
        let point = SweepPoint { value, outcome };
        let eq = point.outcome.final_equilibrium.as_ref();
        let slot = |i: usize| point.outcome.active_set.slot_of(i);
        let n = ids.len();
        let mut row = vec![Value::from(value)];
        row.extend((0..n).map(|i| Value::from(slot(i).zip(eq).map(|(s, e)| e.prices()[s]))));
        row.extend((0..n).map(|i| Value::from(point.alloc(i))));
        row.extend(
            (0..n).map(|i| Value::from(slot(i).zip(eq).map_or(0.0, |(s, e)| e.utilities.u_su[s]))),
        );
        row.push(eq.map_or(0.0, |e| e.utilities.u_du).into());
        row.push(point.outcome.active_set.len().into());
        row.push(eq.map(|e| e.converged).into());
        table.push(row)?;
        out.push(point);
    }
    Ok(SweepResult { table, points: out })
}

/// The three-SU layout swept over SU 3's workload.
pub fn run_fig4_sweep(
    base: &Scenario,
    su3_workloads: &[f64],
    config: &SolverConfig,
) -> Result<SweepResult> {
    if base.sus.len() != 3 {
        return Err(Error::invalid(
            "scenario",
            "the workload sweep needs exactly 3 SUs",
        ));
    }
    let points = su3_workloads
        .iter()
        .map(|&l3| {
            let mut s = base.clone();
            s.sus[2].workload = l3;
            s.validate()?;
            Ok((l3, s))
        })
        .collect::<Result<Vec<_>>>()?;
    run_points("fig4", "L_3", "Mb", points, config)
}

/// Sweep described by a scenario file's `[experiment]` section.
pub fn run_sweep(file: &ScenarioFile) -> Result<SweepResult> {
    let config = file.solver_config()?;
    let variable = file
        .experiment
        .as_ref()
        .and_then(|e| e.variable.clone())
        .unwrap_or_default();
    let points = file
        .sweep_points()?
        .into_iter()
        .map(|(v, f)| Ok((v, f.scenario()?)))
        .collect::<Result<Vec<_>>>()?;
    run_points("sweep", &variable, "-", points, &config)
}

/// Long-format iteration records: one row per iteration and SU.
pub fn trajectory_table(scenario: &Scenario, result: &EquilibriumResult) -> Result<ResultTable> {
    let mut t = ResultTable::new(
        "trajectory",
        &[
            ("iteration", "-"),
            ("su_id", "-"),
            ("price", "J/Mb"),
            ("allocation", "Mb"),
            ("utility_su", "J"),
            ("utility_du", "J"),
            ("gradient", "Mb"),
        ],
    );
    for rec in records(result) {
        for (slot, index) in result.active.iter().enumerate() {
            t.push(vec![
                rec.iteration.into(),
                (su_number(scenario, index) as usize).into(),
                rec.prices[slot].into(),
                rec.alloc[slot].into(),
                rec.u_su[slot].into(),
                rec.u_du.into(),
                rec.gradient[slot].into(),
            ])?;
        }
    }
    Ok(t)
}

/// One-row overview of a solve.
pub fn summary_table(result: &EquilibriumResult) -> Result<ResultTable> {
    let mut t = ResultTable::new(
        "summary",
        &[
            ("mode", "-"),
            ("converged", "-"),
            ("iterations", "-"),
            ("stop_reason", "-"),
            ("ratio_test_iteration", "-"),
            ("residual_test_iteration", "-"),
            ("spectral_radius", "-"),
            ("utility_du", "J"),
        ],
    );
    t.push(vec![
        result.mode.name().into(),
        result.converged.into(),
        result.iterations_used.into(),
        result.stop_reason.name().into(),
        result.diagnostics.ratio_test_iteration.into(),
        result.diagnostics.residual_test_iteration.into(),
        result.spectral_radius.into(),
        result.utilities.u_du.into(),
    ])?;
    Ok(t)
}

/// Every round's equilibrium with the removals it triggered; pre-filtered
/// SUs appear as round 0.
pub fn selection_table(scenario: &Scenario, outcome: &SelectionOutcome) -> Result<ResultTable> {
    let mut t = ResultTable::new(
        "selection",
        &[
            ("round", "-"),
            ("su_id", "-"),
            ("price", "J/Mb"),
            ("allocation", "Mb"),
            ("removed", "-"),
            ("converged", "-"),
        ],
    );
    for r in &outcome.prefiltered {
        t.push(vec![
            0usize.into(),
            (su_number(scenario, r.index) as usize).into(),
            Value::Empty,
            Value::Empty,
            r.reason.name().into(),
            Value::Empty,
        ])?;
    }
    for round in &outcome.rounds {
        let eq = &round.equilibrium;
        for (slot, index) in round.candidates.iter().enumerate() {
            let removed = round
                .removed
                .iter()
                .find(|r| r.index == index)
                .map(|r| r.reason.name());
            t.push(vec![
                round.round.into(),
                (su_number(scenario, index) as usize).into(),
                eq.prices()[slot].into(),
                eq.alloc()[slot].into(),
                removed.into(),
                eq.converged.into(),
            ])?;
        }
    }
    Ok(t)
}

pub fn audit_table(audit: &ConstraintAudit) -> Result<ResultTable> {
    let mut t = ResultTable::new(
        "audit",
        &[
            ("constraint", "-"),
            ("subject", "-"),
            ("slack", "-"),
            ("satisfied", "-"),
        ],
    );
    for c in &audit.checks {
        t.push(vec![
            c.constraint.name().into(),
            c.subject.to_string().into(),
            c.slack.into(),
            c.satisfied().into(),
        ])?;
    }
    Ok(t)
}

pub fn stability_table(report: &StabilityReport) -> Result<ResultTable> {
    let mut t = ResultTable::new("stability", &[("quantity", "-"), ("value", "-")]);
    let j = &report.jacobian;
    let e = &report.eigenvalues;
    let rows: [(&str, Value); 8] = [
        ("j_12", j[0][1].into()),
        ("j_21", j[1][0].into()),
        ("eigenvalue_1_re", e[0].re.into()),
        ("eigenvalue_1_im", e[0].im.into()),
        ("eigenvalue_2_re", e[1].re.into()),
        ("eigenvalue_2_im", e[1].im.into()),
        ("spectral_radius", report.spectral_radius.into()),
        ("stable", report.is_stable().into()),
    ];
    for (name, value) in rows {
        t.push(vec![name.into(), value])?;
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualitativeCheck {
    pub name: &'static str,
    pub claim: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub struct ReproReport {
    /// `fig1`, `fig2`, `fig3`, `fig4`.
    pub tables: Vec<ResultTable>,
    pub checks: Vec<QualitativeCheck>,
    pub fig1: Fig1Result,
    pub fig23: Fig23Result,
    pub fig4: SweepResult,
}

impl ReproReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn checks_table(&self) -> Result<ResultTable> {
        let mut t = ResultTable::new(
            "checks",
            &[
                ("check", "-"),
                ("claim", "-"),
                ("passed", "-"),
                ("detail", "-"),
            ],
        );
        for c in &self.checks {
            t.push(vec![
                c.name.into(),
                c.claim.into(),
                c.passed.into(),
                c.detail.clone().into(),
            ])?;
        }
        Ok(t)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Runs the two-SU convergence experiment and the three-SU workload sweep
/// with default settings and checks the expected qualitative outcomes.
pub fn repro() -> Result<ReproReport> {
    repro_with(&SolverConfig::default())
}

/// [`repro`] with a custom solver configuration (mode is ignored).
pub fn repro_with(config: &SolverConfig) -> Result<ReproReport> {
    let two = Scenario::two_su_reference();
    let fig1 = run_fig1_experiment(&two, config, true)?;
    let fig23 = run_fig23_experiment(&two, config)?;
    let fig4 = run_fig4_sweep(&Scenario::three_su_reference(0.0), &FIG4_WORKLOADS, config)?;

    let mut checks = Vec::new();
    let cig = &fig1.cig;
    let icig = fig1.icig.as_ref().expect("both modes requested");
    checks.push(QualitativeCheck {
        name: "cig_converges_quickly",
        claim: "complete-information iteration converges in a few iterations",
        passed: cig.converged && cig.iterations_used <= FEW_ITERATIONS,
        detail: format!(
            "{} iterations, converged={}",
            cig.iterations_used, cig.converged
        ),
    });
    let worst = icig
        .prices()
        .iter()
        .zip(cig.prices())
        .map(|(a, b)| rel(*a, *b))
        .fold(0.0, f64::max);
    checks.push(QualitativeCheck {
        name: "icig_reaches_cig_equilibrium",
        claim: "incomplete-information learning reaches the same prices",
        passed: icig.converged && worst <= 1e-2,
        detail: format!(
            "{} iterations, max relative price gap {worst:e}",
            icig.iterations_used
        ),
    });
    let q = cig.prices();
    checks.push(QualitativeCheck {
        name: "su2_price_advantage",
        claim: "q_2 < q_1",
        passed: q[1] < q[0],
        detail: format!("q_1={} q_2={}", q[0], q[1]),
    });
    let eq = &fig23.equilibrium;
    let l = eq.alloc();
    checks.push(QualitativeCheck {
        name: "su2_accepts_more",
        claim: "l_2 > l_1",
        passed: l[1] > l[0],
        detail: format!("l_1={} l_2={}", l[0], l[1]),
    });
    let u = &eq.utilities;
    checks.push(QualitativeCheck {
        name: "positive_utilities",
        claim: "U_0, U_1, U_2 > 0",
        passed: u.u_du > 0.0 && u.u_su.iter().all(|&x| x > 0.0),
        detail: format!("U_0={} U_1={} U_2={}", u.u_du, u.u_su[0], u.u_su[1]),
    });
    checks.push(QualitativeCheck {
        name: "su2_higher_utility",
        claim: "U_2 > U_1",
        passed: u.u_su[1] > u.u_su[0],
        detail: format!("U_1={} U_2={}", u.u_su[0], u.u_su[1]),
    });

    let series = |i: usize| -> Vec<f64> { fig4.points.iter().map(|p| p.alloc(i)).collect() };
    let (l1, l2, l3) = (series(0), series(1), series(2));
    let non_increasing = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0]);
    let non_decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] >= w[0]);
    checks.push(QualitativeCheck {
        name: "su3_share_falls",
        claim: "l_3 non-increasing in L_3",
        passed: non_increasing(&l3),
        detail: format!("l_3={l3:?}"),
    });
    checks.push(QualitativeCheck {
        name: "su1_su2_shares_rise",
        claim: "l_1, l_2 non-decreasing in L_3",
        passed: non_decreasing(&l1) && non_decreasing(&l2),
        detail: format!("l_1={l1:?} l_2={l2:?}"),
    });
    let sym = fig4
        .points
        .iter()
        .find(|p| p.value == 0.1)
        .map(|p| (p.alloc(1) - p.alloc(2)).abs());
    checks.push(QualitativeCheck {
        name: "symmetric_sus_split_evenly",
        claim: "l_3 = l_2 when L_3 = L_2",
        passed: sym.is_some_and(|d| d <= 1e-6),
        detail: format!("|l_2 - l_3|={}", sym.map_or(f64::NAN, |d| d)),
    });

    let tables = vec![
        fig1.table.clone(),
        fig23.allocations.clone(),
        fig23.utilities.clone(),
        fig4.table.clone(),
    ];
    Ok(ReproReport {
        tables,
        checks,
        fig1,
        fig23,
        fig4,
    })
}
