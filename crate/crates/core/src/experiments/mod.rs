//! Config-driven runs: dynamics traces, concurrence benchmarks, the
//! (Δ_B, α₁) maps, the cavity-coupling sweep and the truncation check.

pub mod output;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::correlations::{
    correlation_integrals, counts_from_raw, normalize, normally_ordered, two_photon_matrix, CorrelationGrid,
    Labels, PairCounts,
};
use crate::dynamics::{evolve, TimeGrid, Trajectory};
use crate::entanglement::{concurrence, ConcurrenceResult, TwoPhotonMatrix};
use crate::error::{CascadeError, Result};
use crate::hilbert::{DotLevel, Mode, Truncation, C64};
use crate::model::Scenario;
use crate::ode::Tolerance;
use crate::optimizer::{biexciton_map, optimize_second_pulse, optimize_tpe_area, OptimizationResult, SearchSpec, TpeArea};
use output::{Cell, Manifest, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    Dynamics,
    Concurrence,
    MapFig2,
    MapFig5,
    SweepGFig6,
    ValidateTruncationFig7,
    Optimize,
}

impl RunKind {
    pub fn name(self) -> &'static str {
        match self {
            RunKind::Dynamics => "dynamics",
            RunKind::Concurrence => "concurrence",
            RunKind::MapFig2 => "map_fig2",
            RunKind::MapFig5 => "map_fig5",
            RunKind::SweepGFig6 => "sweep_g_fig6",
            RunKind::ValidateTruncationFig7 => "validate_truncation_fig7",
            RunKind::Optimize => "optimize",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    #[default]
    Ground,
    Biexciton,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridScale {
    #[default]
    Coarse,
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsOverrides {
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    pub dt_out: Option<f64>,
    pub tol: Option<Tolerance>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationOverrides {
    pub t_start: Option<f64>,
    pub window_ps: Option<f64>,
    pub dt: Option<f64>,
    pub dtau: Option<f64>,
    pub tol: Option<Tolerance>,
    pub trace_floor: Option<f64>,
    /// Largest excitation left at the end of the window; negative disables the check.
    pub max_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapAxes {
    pub delta_b_mev: Option<Vec<f64>>,
    pub alpha1_pi: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub g_mev: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationCheck {
    #[serde(default = "default_truncations")]
    pub truncations: Vec<Truncation>,
}

impl Default for TruncationCheck {
    fn default() -> Self {
        TruncationCheck {
            truncations: default_truncations(),
        }
    }
}

fn default_truncations() -> Vec<Truncation> {
    vec![Truncation::Reduced18, Truncation::Full(2), Truncation::Full(3)]
}

pub const COARSE_DELTA_B_MEV: [f64; 5] = [1.0, 2.0, 3.0, 4.0, 5.0];
pub const COARSE_ALPHA1_PI: [f64; 5] = [5.0, 12.5, 20.0, 27.5, 35.0];

/// Full-resolution axes: Δ_B from 0.5 to 5 meV in 0.25 meV steps, α₁ from 5π to 35π in 1π steps.
pub fn fine_axes() -> (Vec<f64>, Vec<f64>) {
    let db = (0..19).map(|i| 0.5 + 0.25 * i as f64).collect();
    let a1 = (0..31).map(|i| 5.0 + i as f64).collect();
    (db, a1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: RunKind,
    pub scenario: Option<Scenario>,
    #[serde(default)]
    pub initial_state: InitialState,
    /// Replace the area of a single two-photon-resonant pulse by the first
    /// maximum of the bare-dot biexciton population.
    #[serde(default)]
    pub optimize_tpe_area: bool,
    #[serde(default)]
    pub dynamics: DynamicsOverrides,
    #[serde(default)]
    pub correlation: CorrelationOverrides,
    pub search: Option<SearchSpec>,
    #[serde(default)]
    pub map: MapAxes,
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub truncation_check: TruncationCheck,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CascadeError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)?;
        Ok((Self::from_toml(&text)?, text))
    }

    fn require_scenario(&self) -> Result<&Scenario> {
        self.scenario
            .as_ref()
            .ok_or_else(|| CascadeError::invalid("scenario", format!("required for kind `{}`", self.kind.name())))
    }

    fn require_cavity(&self) -> Result<()> {
        if self.require_scenario()?.cavity.is_none() {
            return Err(CascadeError::invalid(
                "scenario.cavity",
                format!("required for kind `{}`", self.kind.name()),
            ));
        }
        Ok(())
    }

    /// Checks that the fields the run kind needs are present and sane.
    pub fn validate(&self) -> Result<()> {
        if let Some(sc) = &self.scenario {
            sc.validate()?;
        }
        if let Some(s) = &self.search {
            s.validate()?;
        }
        match self.kind {
            RunKind::Dynamics | RunKind::Concurrence => {
                self.require_scenario()?;
            }
            RunKind::MapFig2 => self.require_cavity()?,
            RunKind::MapFig5 | RunKind::Optimize => {}
            RunKind::SweepGFig6 => {
                self.require_cavity()?;
                let sweep = self
                    .sweep
                    .as_ref()
                    .ok_or_else(|| CascadeError::invalid("sweep", "required for kind `sweep_g_fig6`"))?;
                if sweep.g_mev.is_empty() {
                    return Err(CascadeError::invalid("sweep.g_mev", "must be non-empty"));
                }
                if let Some(g) = sweep.g_mev.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
                    return Err(CascadeError::invalid("sweep.g_mev", format!("{g} is not a finite non-negative coupling")));
                }
            }
            RunKind::ValidateTruncationFig7 => {
                self.require_cavity()?;
                let t = &self.truncation_check.truncations;
                if t.len() < 2 {
                    return Err(CascadeError::invalid(
                        "truncation_check.truncations",
                        "need at least two truncations to compare",
                    ));
                }
                if t.contains(&Truncation::DotOnly) {
                    return Err(CascadeError::invalid(
                        "truncation_check.truncations",
                        "dot_only has no cavity photons",
                    ));
                }
            }
        }
        for (name, axis) in [("map.delta_b_mev", &self.map.delta_b_mev), ("map.alpha1_pi", &self.map.alpha1_pi)] {
            if let Some(a) = axis {
                if a.is_empty() {
                    return Err(CascadeError::invalid(name, "must be non-empty"));
                }
                if a.iter().any(|v| !v.is_finite()) {
                    return Err(CascadeError::invalid(name, "entries must be finite"));
                }
            }
        }
        if self.optimize_tpe_area {
            let sc = self.require_scenario()?;
            if sc.pulses.len() != 1 {
                return Err(CascadeError::invalid(
                    "optimize_tpe_area",
                    "needs exactly one pulse in the scenario",
                ));
            }
            if (sc.pulses[0].delta_mev + 0.5 * sc.dot.delta_b_mev).abs() > 1e-9 {
                return Err(CascadeError::invalid(
                    "optimize_tpe_area",
                    "the pulse must sit at delta_mev = -delta_b_mev / 2",
                ));
            }
        }
        Ok(())
    }

    pub fn search_spec(&self) -> SearchSpec {
        self.search.unwrap_or_else(SearchSpec::reference)
    }

    pub fn map_axes(&self, scale: GridScale) -> (Vec<f64>, Vec<f64>) {
        match scale {
            GridScale::Paper => fine_axes(),
            GridScale::Coarse => (
                self.map.delta_b_mev.clone().unwrap_or_else(|| COARSE_DELTA_B_MEV.to_vec()),
                self.map.alpha1_pi.clone().unwrap_or_else(|| COARSE_ALPHA1_PI.to_vec()),
            ),
        }
    }

    pub fn correlation_grid(&self, scenario: &Scenario) -> CorrelationGrid {
        let o = &self.correlation;
        let mut g = CorrelationGrid::for_scenario(scenario);
        if let Some(t) = o.t_start {
            g.t_start = t;
        }
        let window = o.window_ps.unwrap_or(g.t_end - scenario.default_start());
        g.t_end = g.t_start + window;
        g.tau_end = window;
        if let Some(v) = o.dt {
            g.dt = v;
        }
        if let Some(v) = o.dtau {
            g.dtau = v;
        }
        if let Some(v) = o.tol {
            g.tol = v;
        }
        if let Some(v) = o.trace_floor {
            g.trace_floor = v;
        }
        if let Some(v) = o.max_residual {
            g.max_residual = (v >= 0.0).then_some(v);
        }
        g
    }

    pub fn time_grid(&self, scenario: &Scenario) -> TimeGrid {
        let o = &self.dynamics;
        let mut g = TimeGrid::for_scenario(scenario);
        if let Some(v) = o.t_start {
            g.t_start = v;
        }
        if let Some(v) = o.t_end {
            g.t_end = v;
        }
        if let Some(v) = o.dt_out {
            g.dt_out = v;
        }
        if let Some(v) = o.tol {
            g.tol = v;
        }
        g
    }
}

/// Scenario after TPE-area optimization (if requested) and the TPE area used.
pub fn resolve_scenario(cfg: &ExperimentConfig) -> Result<(Scenario, Option<TpeArea>)> {
    let mut sc = cfg.require_scenario()?.clone();
    if !cfg.optimize_tpe_area {
        return Ok((sc, None));
    }
    let p = sc.pulses[0];
    let area = optimize_tpe_area(&sc.dot, p.sigma_ps, p.t0_ps, Tolerance::default())?;
    sc.pulses[0].alpha_pi = area.alpha_pi;
    Ok((sc, Some(area)))
}

pub fn initial_density(sc: &Scenario, state: InitialState) -> Result<nalgebra::DMatrix<C64>> {
    match state {
        InitialState::Ground => sc.ground_density(),
        InitialState::Biexciton => sc.biexciton_density(),
    }
}

pub fn run_dynamics(cfg: &ExperimentConfig) -> Result<Trajectory> {
    let (sc, _) = resolve_scenario(cfg)?;
    evolve(&initial_density(&sc, cfg.initial_state)?, &sc, &cfg.time_grid(&sc))
}

pub fn dynamics_table(traj: &Trajectory) -> Table {
    let mut t = Table::new(output::DYNAMICS);
    for (time, o) in traj.times.iter().zip(&traj.observables) {
        let mut row: Vec<Cell> = vec![(*time).into()];
        row.extend(DotLevel::ALL.iter().map(|&d| Cell::Num(o.occupation(d))));
        row.extend(Mode::BOTH.iter().map(|&m| Cell::Num(o.photon_number(m))));
        t.push(row);
    }
    t
}

/// Row-major real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixJson {
    pub basis: [&'static str; 4],
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&TwoPhotonMatrix> for MatrixJson {
    fn from(m: &TwoPhotonMatrix) -> Self {
        let rows = |f: fn(&C64) -> f64| (0..4).map(|i| (0..4).map(|j| f(&m.rho[(i, j)])).collect()).collect();
        MatrixJson {
            basis: ["XX", "XY", "YX", "YY"],
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcurrenceReport {
    pub concurrence: ConcurrenceResult,
    pub two_photon_matrix: MatrixJson,
    pub pair_counts: Option<PairCounts>,
    pub hermiticity_defect: f64,
    pub residual_excitation: f64,
    pub min_eigenvalue: f64,
    pub fidelity_phi_plus: f64,
    pub tpe_area: Option<TpeArea>,
    pub truncation: Truncation,
    pub grid: CorrelationGrid,
    #[serde(skip)]
    pub g2_tau0: Table,
}

pub fn run_concurrence(cfg: &ExperimentConfig) -> Result<ConcurrenceReport> {
    let (sc, tpe_area) = resolve_scenario(cfg)?;
    let grid = cfg.correlation_grid(&sc);
    let res = two_photon_matrix(&sc, &initial_density(&sc, cfg.initial_state)?, &grid)?;
    let c = concurrence(&res.matrix)?;

    let space = sc.space()?;
    let mut slice = Table::new(output::G2_SLICE);
    let states = res.trajectory.states.as_ref().expect("retained");
    for (t, rho) in res.trajectory.times.iter().zip(states) {
        for l in Labels::all() {
            let v = normally_ordered(rho, l, &space);
            slice.push(vec![
                (*t).into(),
                0.0.into(),
                v.re.into(),
                v.im.into(),
                l.a.to_string().into(),
                l.b.to_string().into(),
                l.c.to_string().into(),
                l.d.to_string().into(),
            ]);
        }
    }
    Ok(ConcurrenceReport {
        concurrence: c,
        two_photon_matrix: (&res.matrix).into(),
        pair_counts: res.pair_counts,
        hermiticity_defect: res.hermiticity_defect,
        residual_excitation: res.residual_excitation,
        min_eigenvalue: res.matrix.min_eigenvalue(),
        fidelity_phi_plus: res.matrix.fidelity_phi_plus(),
        tpe_area,
        truncation: sc.effective_truncation(),
        grid,
        g2_tau0: slice,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapRow {
    pub delta_b_mev: f64,
    pub alpha1_pi: f64,
    pub optimum: Option<OptimizationResult>,
    pub concurrence: Option<f64>,
    pub error: Option<String>,
}

/// Optimized second pulse per cell; with `with_concurrence` the cavity
/// concurrence of the optimized pulse pair is evaluated as well.
pub fn run_map(cfg: &ExperimentConfig, scale: GridScale, with_concurrence: bool) -> Result<Vec<MapRow>> {
    let (db, a1) = cfg.map_axes(scale);
    let spec = cfg.search_spec();
    let cells = biexciton_map(&db, &a1, &spec)?;
    let template = if with_concurrence {
        Some(cfg.require_scenario()?.clone())
    } else {
        None
    };
    Ok(cells
        .into_iter()
        .map(|cell| {
            let mut row = MapRow {
                delta_b_mev: cell.delta_b_mev,
                alpha1_pi: cell.alpha1_pi,
                optimum: None,
                concurrence: None,
                error: None,
            };
            match cell.result {
                Err(e) => row.error = Some(e),
                Ok(opt) => {
                    if let Some(t) = &template {
                        let cell_spec = SearchSpec {
                            delta_b_mev: cell.delta_b_mev,
                            alpha1_pi: cell.alpha1_pi,
                            ..spec
                        };
                        let sc = Scenario {
                            dot: crate::model::DotParams {
                                delta_b_mev: cell.delta_b_mev,
                                ..t.dot
                            },
                            pulses: cell_spec.pulses(opt.alpha2_pi, opt.delta2_mev),
                            ..t.clone()
                        };
                        match cell_concurrence(cfg, &sc) {
                            Ok(c) => row.concurrence = Some(c),
                            Err(e) => row.error = Some(e.to_string()),
                        }
                    }
                    row.optimum = Some(opt);
                }
            }
            row
        })
        .collect())
}

fn cell_concurrence(cfg: &ExperimentConfig, sc: &Scenario) -> Result<f64> {
    let grid = cfg.correlation_grid(sc);
    let res = two_photon_matrix(sc, &initial_density(sc, cfg.initial_state)?, &grid)?;
    Ok(concurrence(&res.matrix)?.value)
}

pub fn map_table(rows: &[MapRow], with_concurrence: bool) -> Table {
    let mut t = Table::new(if with_concurrence { output::MAP_FIG2 } else { output::MAP_FIG5 });
    for r in rows {
        let (a2, d2, b) = r
            .optimum
            .as_ref()
            .map_or((f64::NAN, f64::NAN, f64::NAN), |o| (o.alpha2_pi, o.delta2_mev, o.b_final));
        let mut row: Vec<Cell> = vec![r.delta_b_mev.into(), r.alpha1_pi.into(), a2.into(), d2.into(), b.into()];
        if with_concurrence {
            row.push(r.concurrence.unwrap_or(f64::NAN).into());
        }
        t.push(row);
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub g_mev: f64,
    /// `None` when no photon pair reaches the cavity (e.g. g = 0).
    pub concurrence: Option<f64>,
    pub pair_counts: PairCounts,
}

pub fn run_sweep_g(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let (base, _) = resolve_scenario(cfg)?;
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CascadeError::invalid("sweep", "required for kind `sweep_g_fig6`"))?;
    sweep
        .g_mev
        .iter()
        .map(|&g| {
            let mut sc = base.clone();
            let cav = sc.cavity.as_mut().expect("validated");
            cav.g_mev = g;
            let kappa = cav.kappa_per_ps();
            let grid = cfg.correlation_grid(&sc);
            let (raw, _) = correlation_integrals(&sc, &initial_density(&sc, cfg.initial_state)?, &grid)?;
            let concurrence = match normalize(&raw, grid.trace_floor) {
                Ok((m, _)) => Some(concurrence(&m)?.value),
                Err(CascadeError::Degenerate { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(SweepRow {
                g_mev: g,
                concurrence,
                pair_counts: counts_from_raw(&raw, kappa),
            })
        })
        .collect()
}

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(output::SWEEP_G);
    for r in rows {
        let p = &r.pair_counts;
        t.push(vec![
            r.g_mev.into(),
            r.concurrence.unwrap_or(f64::NAN).into(),
            p.xx.into(),
            p.xy.into(),
            p.yx.into(),
            p.yy.into(),
        ]);
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationEntry {
    pub truncation: Truncation,
    pub dim: usize,
    pub concurrence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationComparison {
    pub a: Truncation,
    pub b: Truncation,
    /// Largest `|N_X^a - N_X^b|` and `|N_Y^a - N_Y^b|` over the grid.
    pub max_photon_deviation: f64,
    pub time_of_max_photon_deviation: f64,
    pub max_g2_deviation: f64,
    pub time_of_max_g2_deviation: f64,
    pub concurrence_difference: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncationReport {
    pub entries: Vec<TruncationEntry>,
    pub comparisons: Vec<TruncationComparison>,
    #[serde(skip)]
    pub curves: Table,
}

impl TruncationReport {
    pub fn comparison(&self, a: Truncation, b: Truncation) -> Option<&TruncationComparison> {
        self.comparisons
            .iter()
            .find(|c| (c.a == a && c.b == b) || (c.a == b && c.b == a))
    }
}

fn max_deviation(times: &[f64], a: &[f64], b: &[f64]) -> (f64, f64) {
    times
        .iter()
        .zip(a.iter().zip(b))
        .map(|(t, (x, y))| ((x - y).abs(), *t))
        .fold((0.0, f64::NAN), |acc, v| if v.0 > acc.0 || acc.1.is_nan() { v } else { acc })
}

pub fn validate_truncation(cfg: &ExperimentConfig) -> Result<TruncationReport> {
    let (base, _) = resolve_scenario(cfg)?;
    let xxxx = Labels::new(Mode::X, Mode::X, Mode::X, Mode::X);
    let mut entries = Vec::new();
    let mut series: Vec<(Truncation, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> = Vec::new();
    for &tr in &cfg.truncation_check.truncations {
        let sc = Scenario {
            truncation: tr,
            ..base.clone()
        };
        let space = sc.space()?;
        let grid = cfg.correlation_grid(&sc);
        let res = two_photon_matrix(&sc, &initial_density(&sc, cfg.initial_state)?, &grid)?;
        let traj = &res.trajectory;
        let g2: Vec<f64> = traj
            .states
            .as_ref()
            .expect("retained")
            .iter()
            .map(|rho| normally_ordered(rho, xxxx, &space).re)
            .collect();
        entries.push(TruncationEntry {
            truncation: tr,
            dim: space.dim(),
            concurrence: concurrence(&res.matrix)?.value,
        });
        series.push((
            tr,
            traj.times.clone(),
            traj.series(|o| o.photon_number(Mode::X)),
            traj.series(|o| o.photon_number(Mode::Y)),
            g2,
        ));
    }
    let mut comparisons = Vec::new();
    for i in 0..series.len() {
        for j in i + 1..series.len() {
            let (a, b) = (&series[i], &series[j]);
            let (dx, tx) = max_deviation(&a.1, &a.2, &b.2);
            let (dy, ty) = max_deviation(&a.1, &a.3, &b.3);
            let (dg, tg) = max_deviation(&a.1, &a.4, &b.4);
            let (dp, tp) = if dx >= dy { (dx, tx) } else { (dy, ty) };
            comparisons.push(TruncationComparison {
                a: a.0,
                b: b.0,
                max_photon_deviation: dp,
                time_of_max_photon_deviation: tp,
                max_g2_deviation: dg,
                time_of_max_g2_deviation: tg,
                concurrence_difference: (entries[i].concurrence - entries[j].concurrence).abs(),
            });
        }
    }
    let mut curves = Table::new(output::TRUNCATION);
    for (tr, times, nx, ny, g2) in &series {
        for k in 0..times.len() {
            curves.push(vec![
                times[k].into(),
                tr.to_string().into(),
                nx[k].into(),
                ny[k].into(),
                g2[k].into(),
            ]);
        }
    }
    Ok(TruncationReport {
        entries,
        comparisons,
        curves,
    })
}

pub fn run_optimize(cfg: &ExperimentConfig) -> Result<OptimizationResult> {
    optimize_second_pulse(&cfg.search_spec())
}

/// Runs `cfg` and writes its products plus `manifest.json` into `out_dir`.
pub fn execute(cfg: &ExperimentConfig, config_text: &str, scale: GridScale, out_dir: &Path) -> Result<Manifest> {
    std::fs::create_dir_all(out_dir)?;
    let mut outputs = Vec::new();
    let emit_table = |t: &Table, name: &str, outputs: &mut Vec<String>| -> Result<()> {
        t.write(&out_dir.join(name))?;
        outputs.push(name.to_string());
        Ok(())
    };
    let mut settings = serde_json::json!({ "grid_scale": scale });
    match cfg.kind {
        RunKind::Dynamics => {
            let (sc, area) = resolve_scenario(cfg)?;
            let traj = run_dynamics(cfg)?;
            settings["time_grid"] = json(&cfg.time_grid(&sc));
            settings["truncation"] = json(&sc.effective_truncation());
            settings["tpe_area"] = json(&area);
            emit_table(&dynamics_table(&traj), "dynamics.csv", &mut outputs)?;
        }
        RunKind::Concurrence => {
            let report = run_concurrence(cfg)?;
            settings["correlation_grid"] = json(&report.grid);
            settings["truncation"] = json(&report.truncation);
            output::write_json(&out_dir.join("concurrence.json"), &report)?;
            outputs.push("concurrence.json".into());
            emit_table(&report.g2_tau0, "g2_tau0.csv", &mut outputs)?;
        }
        RunKind::MapFig2 | RunKind::MapFig5 => {
            let with_c = cfg.kind == RunKind::MapFig2;
            let rows = run_map(cfg, scale, with_c)?;
            settings["search"] = json(&cfg.search_spec());
            let (db, a1) = cfg.map_axes(scale);
            settings["axes"] = serde_json::json!({ "delta_b_mev": db, "alpha1_pi": a1 });
            let name = if with_c { "map_fig2.csv" } else { "map_fig5.csv" };
            emit_table(&map_table(&rows, with_c), name, &mut outputs)?;
            output::write_json(&out_dir.join("map_cells.json"), &rows)?;
            outputs.push("map_cells.json".into());
        }
        RunKind::SweepGFig6 => {
            let rows = run_sweep_g(cfg)?;
            emit_table(&sweep_table(&rows), "sweep_g.csv", &mut outputs)?;
        }
        RunKind::ValidateTruncationFig7 => {
            let report = validate_truncation(cfg)?;
            emit_table(&report.curves, "truncation_curves.csv", &mut outputs)?;
            output::write_json(&out_dir.join("truncation_report.json"), &report)?;
            outputs.push("truncation_report.json".into());
        }
        RunKind::Optimize => {
            let r = run_optimize(cfg)?;
            settings["search"] = json(&cfg.search_spec());
            output::write_json(&out_dir.join("optimize.json"), &r)?;
            outputs.push("optimize.json".into());
        }
    }
    if let Some(sc) = &cfg.scenario {
        if settings.get("correlation_grid").is_none()
            && matches!(cfg.kind, RunKind::MapFig2 | RunKind::SweepGFig6 | RunKind::ValidateTruncationFig7)
        {
            settings["correlation_grid"] = json(&cfg.correlation_grid(sc));
        }
    }
    let mut manifest = Manifest::new(cfg.kind.name(), config_text, settings);
    manifest.outputs = outputs;
    manifest.write(out_dir)?;
    Ok(manifest)
}

fn json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}
