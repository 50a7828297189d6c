//! Search for the second SUPER pulse that maximizes the final biexciton
//! population of the bare dot, and maps of that optimum.

pub mod simplex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{pure_final_state, Liouvillian};
use crate::error::{CascadeError, Result};
use crate::hilbert::Truncation;
use crate::model::{DecayParams, DotParams, PulseParams, Scenario, DEFAULT_SIGMA_PS, DEFAULT_T0_PS};
use crate::ode::Tolerance;

pub use simplex::{maximize, SimplexOptions, SimplexResult};

/// Largest admissible pulse area, in units of π.
pub const MAX_AREA_PI: f64 = 35.0;
/// Objective window half-width in units of σ.
pub const OBJECTIVE_SIGMAS: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    pub delta1_mev: f64,
    pub alpha1_pi: f64,
    pub delta_b_mev: f64,
    #[serde(default = "default_sigma")]
    pub sigma_ps: f64,
    #[serde(default = "default_t0")]
    pub t0_ps: f64,
    #[serde(default = "default_alpha2_bounds")]
    pub alpha2_bounds: (f64, f64),
    #[serde(default = "default_delta2_bounds")]
    pub delta2_bounds: (f64, f64),
    /// Seed grid points along α₂ and Δ₂.
    #[serde(default = "default_grid")]
    pub grid: (usize, usize),
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default)]
    pub simplex: SimplexSettings,
    #[serde(default)]
    pub tol: Tolerance,
}

/// Serializable mirror of [`SimplexOptions`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimplexSettings {
    pub xtol: f64,
    pub ftol: f64,
    pub max_evals: usize,
}

impl Default for SimplexSettings {
    fn default() -> Self {
        let d = SimplexOptions::default();
        SimplexSettings {
            xtol: d.xtol,
            ftol: d.ftol,
            max_evals: d.max_evals,
        }
    }
}

impl From<SimplexSettings> for SimplexOptions {
    fn from(s: SimplexSettings) -> Self {
        SimplexOptions {
            xtol: s.xtol,
            ftol: s.ftol,
            max_evals: s.max_evals,
            ..SimplexOptions::default()
        }
    }
}

fn default_sigma() -> f64 {
    DEFAULT_SIGMA_PS
}
fn default_t0() -> f64 {
    DEFAULT_T0_PS
}
fn default_alpha2_bounds() -> (f64, f64) {
    (0.0, MAX_AREA_PI)
}
fn default_delta2_bounds() -> (f64, f64) {
    (-35.0, -5.0)
}
fn default_grid() -> (usize, usize) {
    (36, 31)
}
fn default_seeds() -> usize {
    5
}

impl SearchSpec {
    pub fn new(delta1_mev: f64, alpha1_pi: f64, delta_b_mev: f64) -> Self {
        SearchSpec {
            delta1_mev,
            alpha1_pi,
            delta_b_mev,
            sigma_ps: default_sigma(),
            t0_ps: default_t0(),
            alpha2_bounds: default_alpha2_bounds(),
            delta2_bounds: default_delta2_bounds(),
            grid: default_grid(),
            seeds: default_seeds(),
            simplex: SimplexSettings::default(),
            tol: Tolerance::default(),
        }
    }

    /// Δ₁ = -5 meV, α₁ = 32π, Δ_B = 1 meV.
    pub fn reference() -> Self {
        Self::new(-5.0, 32.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let (a_lo, a_hi) = self.alpha2_bounds;
        if !(a_lo >= 0.0 && a_hi >= a_lo && a_hi <= MAX_AREA_PI) {
            return Err(CascadeError::invalid(
                "alpha2_bounds",
                format!("need 0 <= lo <= hi <= {MAX_AREA_PI}"),
            ));
        }
        if !(0.0..=MAX_AREA_PI).contains(&self.alpha1_pi) {
            return Err(CascadeError::invalid("alpha1_pi", format!("must lie in [0, {MAX_AREA_PI}]")));
        }
        let (d_lo, d_hi) = self.delta2_bounds;
        if !(d_lo.is_finite() && d_hi.is_finite() && d_hi >= d_lo) {
            return Err(CascadeError::invalid("delta2_bounds", "need finite lo <= hi"));
        }
        if !(self.sigma_ps > 0.0) {
            return Err(CascadeError::invalid("sigma_ps", "must be positive"));
        }
        if !self.delta1_mev.is_finite() || !self.delta_b_mev.is_finite() || !self.t0_ps.is_finite() {
            return Err(CascadeError::invalid("search spec", "detunings and t0 must be finite"));
        }
        if self.grid.0 < 2 || self.grid.1 < 2 {
            return Err(CascadeError::invalid("grid", "need at least 2 points per axis"));
        }
        if self.seeds == 0 {
            return Err(CascadeError::invalid("seeds", "must be at least 1"));
        }
        Ok(())
    }

    pub fn dot(&self) -> DotParams {
        DotParams {
            delta_b_mev: self.delta_b_mev,
            delta_0_mev: 0.0,
        }
    }

    /// Both pulses for a given second-pulse choice.
    pub fn pulses(&self, alpha2_pi: f64, delta2_mev: f64) -> Vec<PulseParams> {
        vec![
            PulseParams::diagonal(self.alpha1_pi, self.sigma_ps, self.delta1_mev, self.t0_ps),
            PulseParams::diagonal(alpha2_pi, self.sigma_ps, delta2_mev, self.t0_ps),
        ]
    }

    fn window(&self) -> (f64, f64) {
        let h = OBJECTIVE_SIGMAS * self.sigma_ps;
        (self.t0_ps - h, self.t0_ps + h)
    }

    fn in_bounds(&self, alpha2_pi: f64, delta2_mev: f64) -> bool {
        let (a_lo, a_hi) = self.alpha2_bounds;
        let (d_lo, d_hi) = self.delta2_bounds;
        (a_lo..=a_hi).contains(&alpha2_pi) && (d_lo..=d_hi).contains(&delta2_mev)
    }
}

/// `|⟨B|ψ(t_end)⟩|²` of the dissipation-free bare dot started in `|G⟩`.
pub fn final_biexciton(
    pulses: &[PulseParams],
    dot: &DotParams,
    t_start: f64,
    t_end: f64,
    tol: Tolerance,
) -> Result<f64> {
    let scenario = Scenario {
        truncation: Truncation::DotOnly,
        dot: *dot,
        cavity: None,
        decay: DecayParams::none(),
        pulses: pulses.to_vec(),
    };
    let model = scenario.system()?;
    let liouvillian = Liouvillian::new(&model);
    let psi = pure_final_state(&liouvillian, t_start, t_end, tol)?;
    Ok(psi[3].norm_sqr().min(1.0))
}

/// Final biexciton population for the second pulse `(α₂, Δ₂)`.
pub fn objective(alpha2_pi: f64, delta2_mev: f64, spec: &SearchSpec) -> Result<f64> {
    if !spec.in_bounds(alpha2_pi, delta2_mev) {
        return Err(CascadeError::invalid(
            "second pulse",
            format!("(α₂ = {alpha2_pi}π, Δ₂ = {delta2_mev} meV) outside the search box"),
        ));
    }
    let (t_start, t_end) = spec.window();
    final_biexciton(&spec.pulses(alpha2_pi, delta2_mev), &spec.dot(), t_start, t_end, spec.tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub alpha2_pi: f64,
    pub delta2_mev: f64,
    pub b_final: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub alpha2_pi: f64,
    pub delta2_mev: f64,
    pub b_final: f64,
    pub evaluations: usize,
    /// Best point of the seed grid.
    pub seed_best: Candidate,
    /// Refined optimum from each seed, in seed order.
    pub refined: Vec<Candidate>,
}

/// Higher population first, then smaller α₂, then smaller |Δ₂|.
fn rank(a: &Candidate, b: &Candidate) -> std::cmp::Ordering {
    b.b_final
        .total_cmp(&a.b_final)
        .then(a.alpha2_pi.total_cmp(&b.alpha2_pi))
        .then(a.delta2_mev.abs().total_cmp(&b.delta2_mev.abs()))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Seed-grid scan followed by simplex refinement of the best seeds.
pub fn optimize_second_pulse(spec: &SearchSpec) -> Result<OptimizationResult> {
    spec.validate()?;
    let alphas = linspace(spec.alpha2_bounds.0, spec.alpha2_bounds.1, spec.grid.0);
    let deltas = linspace(spec.delta2_bounds.0, spec.delta2_bounds.1, spec.grid.1);
    let points: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| deltas.iter().map(move |&d| (a, d)))
        .collect();
    let mut grid: Vec<Candidate> = points
        .par_iter()
        .map(|&(a, d)| {
            objective(a, d, spec).map(|b| Candidate {
                alpha2_pi: a,
                delta2_mev: d,
                b_final: b,
            })
        })
        .collect::<Result<_>>()?;
    let mut evaluations = grid.len();
    grid.sort_by(rank);
    let seeds: Vec<Candidate> = grid.iter().take(spec.seeds).copied().collect();

    let lo = [spec.alpha2_bounds.0, spec.delta2_bounds.0];
    let hi = [spec.alpha2_bounds.1, spec.delta2_bounds.1];
    let opts: SimplexOptions = spec.simplex.into();
    let runs: Vec<SimplexResult> = seeds
        .par_iter()
        .map(|s| {
            maximize(
                |x| objective(x[0], x[1], spec),
                &[s.alpha2_pi, s.delta2_mev],
                &lo,
                &hi,
                opts,
            )
        })
        .collect::<Result<_>>()?;
    let refined: Vec<Candidate> = seeds
        .iter()
        .zip(&runs)
        .map(|(s, r)| {
            evaluations += r.evaluations;
            if r.value >= s.b_final {
                Candidate {
                    alpha2_pi: r.x[0],
                    delta2_mev: r.x[1],
                    b_final: r.value,
                }
            } else {
                *s
            }
        })
        .collect();
    let best = refined
        .iter()
        .copied()
        .min_by(rank)
        .expect("at least one seed");
    Ok(OptimizationResult {
        alpha2_pi: best.alpha2_pi,
        delta2_mev: best.delta2_mev,
        b_final: best.b_final,
        evaluations,
        seed_best: grid[0],
        refined,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapCell {
    pub delta_b_mev: f64,
    pub alpha1_pi: f64,
    pub result: std::result::Result<OptimizationResult, String>,
}

/// `optimize_second_pulse` on every `(Δ_B, α₁)` pair, Δ_B varying slowest.
/// Failed cells carry their error message.
pub fn biexciton_map(delta_b: &[f64], alpha1: &[f64], template: &SearchSpec) -> Result<Vec<MapCell>> {
    if delta_b.is_empty() || alpha1.is_empty() {
        return Err(CascadeError::invalid("map axes", "must be non-empty"));
    }
    Ok(delta_b
        .iter()
        .flat_map(|&db| alpha1.iter().map(move |&a1| (db, a1)))
        .map(|(db, a1)| {
            let spec = SearchSpec {
                delta_b_mev: db,
                alpha1_pi: a1,
                ..*template
            };
            MapCell {
                delta_b_mev: db,
                alpha1_pi: a1,
                result: optimize_second_pulse(&spec).map_err(|e| e.to_string()),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TpeArea {
    pub alpha_pi: f64,
    pub b_final: f64,
}

/// Area of the first population maximum of a single two-photon-resonant
/// pulse (`Δ = -Δ_B/2`) on the bare dot.
pub fn optimize_tpe_area(dot: &DotParams, sigma_ps: f64, t0_ps: f64, tol: Tolerance) -> Result<TpeArea> {
    if !(sigma_ps > 0.0) {
        return Err(CascadeError::invalid("sigma_ps", "must be positive"));
    }
    let h = OBJECTIVE_SIGMAS * sigma_ps;
    let b = |alpha: f64| {
        let p = [PulseParams::diagonal(alpha, sigma_ps, -0.5 * dot.delta_b_mev, t0_ps)];
        final_biexciton(&p, dot, t0_ps - h, t0_ps + h, tol)
    };
    let step = 0.05;
    let mut prev = (0.0, 0.0);
    let mut cur = (step, b(step)?);
    let mut bracket = None;
    let mut alpha = 2.0 * step;
    while alpha <= MAX_AREA_PI + 1e-12 {
        let next = (alpha, b(alpha)?);
        if cur.1 > prev.1 && cur.1 >= next.1 && cur.1 > 0.5 {
            bracket = Some((prev.0, next.0));
            break;
        }
        prev = cur;
        cur = next;
        alpha += step;
    }
    let (mut lo, mut hi) =
        bracket.ok_or_else(|| CascadeError::invalid("tpe area", "no population maximum above 0.5 found"))?;
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (b(x1)?, b(x2)?);
    while hi - lo > 1e-7 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = b(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = b(x1)?;
        }
    }
    let alpha_pi = 0.5 * (lo + hi);
    Ok(TpeArea {
        alpha_pi,
        b_final: b(alpha_pi)?,
    })
}
