//! Two-time photon correlations, the time-integrated two-photon density
//! matrix and photon-pair counts.
//!
//! `G²_{AB,CD}(t,τ) = ⟨σ̃_A†(t) σ̃_B†(t+τ) σ̃_D(t+τ) σ̃_C(t)⟩` is evaluated with
//! the quantum regression theorem: `ρ̃(t) = σ̃_C ρ(t) σ̃_A†` is propagated to
//! `t+τ` and contracted with `σ̃_B† σ̃_D`. The transition operators are the
//! cavity annihilators when a cavity is present and the dot polarizations
//! otherwise.
//!
//! Once every pulse has passed, the generator is time independent, so the
//! τ-integral collapses onto Heisenberg-evolved detection operators
//! `e^{L†τ}(σ̃_B† σ̃_D)` accumulated once per run. Outer times whose τ leg
//! still overlaps a pulse are propagated explicitly up to the static region.

use nalgebra::{DMatrix, Matrix4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{check_density, evolve_with, flatten, trace_product, unflatten, Liouvillian, TimeGrid, Trajectory};
use crate::entanglement::TwoPhotonMatrix;
use crate::error::{CascadeError, Result};
use crate::hilbert::{annihilation, dot_transition, BasisState, DotLevel, Mode, Operator, StateSpace, C64};
use crate::model::{Scenario, SystemModel};
use crate::ode::{Dopri5, Tolerance};

/// Index of the pair `(first, second)` in the (XX, XY, YX, YY) basis.
pub fn pair_index(first: Mode, second: Mode) -> usize {
    2 * first.index() + second.index()
}

/// Outer times `t` and delays `τ` (ps) for the double integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
    pub tau_end: f64,
    pub dtau: f64,
    #[serde(default)]
    pub tol: Tolerance,
    /// Smallest admissible trace of the raw integral.
    #[serde(default = "default_trace_floor")]
    pub trace_floor: f64,
    /// Largest admissible excitation left at `t_end`; `None` skips the check.
    #[serde(default = "default_residual")]
    pub max_residual: Option<f64>,
}

fn default_trace_floor() -> f64 {
    1e-12
}

fn default_residual() -> Option<f64> {
    Some(0.02)
}

pub const DEFAULT_OUTER_STEP_PS: f64 = 1.0;
pub const DEFAULT_INNER_STEP_PS: f64 = 0.5;
pub const DEFAULT_CORRELATION_WINDOW_PS: f64 = 600.0;

impl CorrelationGrid {
    /// Both windows 600 ps from the scenario start, 1 ps outer and 0.5 ps inner steps.
    pub fn for_scenario(scenario: &Scenario) -> Self {
        let start = scenario.default_start();
        CorrelationGrid {
            t_start: start,
            t_end: start + DEFAULT_CORRELATION_WINDOW_PS,
            dt: DEFAULT_OUTER_STEP_PS,
            tau_end: DEFAULT_CORRELATION_WINDOW_PS,
            dtau: DEFAULT_INNER_STEP_PS,
            tol: Tolerance::default(),
            trace_floor: default_trace_floor(),
            max_residual: default_residual(),
        }
    }

    /// Same windows with both steps halved.
    pub fn refined(&self) -> Self {
        CorrelationGrid {
            dt: self.dt / 2.0,
            dtau: self.dtau / 2.0,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.dtau > 0.0) {
            return Err(CascadeError::invalid("correlation grid", "steps must be positive"));
        }
        if !(self.t_end > self.t_start) {
            return Err(CascadeError::invalid("correlation grid.t_end", "must exceed t_start"));
        }
        if !(self.tau_end > 0.0) {
            return Err(CascadeError::invalid("correlation grid.tau_end", "must be positive"));
        }
        Ok(())
    }

    fn tau_steps(&self) -> usize {
        (self.tau_end / self.dtau).round().max(1.0) as usize
    }
}

/// Transition operator `σ̃_mode` for the scenario's space.
pub fn transition_operator(mode: Mode, space: &StateSpace) -> Operator {
    if space.has_cavity() {
        annihilation(mode, space)
    } else {
        dot_transition(mode, space)
    }
}

/// Polarization labels of one correlation function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Labels {
    pub a: Mode,
    pub b: Mode,
    pub c: Mode,
    pub d: Mode,
}

impl Labels {
    pub fn new(a: Mode, b: Mode, c: Mode, d: Mode) -> Self {
        Labels { a, b, c, d }
    }

    pub fn all() -> impl Iterator<Item = Labels> {
        let m = Mode::BOTH;
        m.into_iter().flat_map(move |a| {
            m.into_iter().flat_map(move |b| {
                m.into_iter()
                    .flat_map(move |c| m.into_iter().map(move |d| Labels::new(a, b, c, d)))
            })
        })
    }
}

/// `⟨σ̃_A† σ̃_B† σ̃_D σ̃_C⟩` on a single density matrix.
pub fn normally_ordered(rho: &DMatrix<C64>, labels: Labels, space: &StateSpace) -> C64 {
    let op = |m| transition_operator(m, space).into_matrix();
    let product = op(labels.a).adjoint() * op(labels.b).adjoint() * op(labels.d) * op(labels.c);
    (product * rho).trace()
}

/// Direct QRT evaluation of one `G²(t, τ)` from a retained snapshot ρ(t).
pub fn g2(
    scenario: &Scenario,
    trajectory: &Trajectory,
    labels: Labels,
    t: f64,
    tau: f64,
    tol: Tolerance,
) -> Result<C64> {
    let model = scenario.system()?;
    let rho = trajectory.state_at(t)?;
    if rho.nrows() != model.space.dim() {
        return Err(CascadeError::SpaceMismatch {
            expected: model.space.truncation().to_string(),
            found: rho.nrows(),
        });
    }
    if tau < 0.0 {
        return Err(CascadeError::invalid("tau", "must be non-negative"));
    }
    let liouvillian = Liouvillian::new(&model);
    let n = model.space.dim();
    let op = |m| transition_operator(m, &model.space).into_matrix();
    let mut x = flatten(&(op(labels.c) * rho * op(labels.a).adjoint()));
    let mut solver = Dopri5::new(n * n, tol);
    let mut rhs = |s: f64, y: &[C64], dy: &mut [C64]| liouvillian.apply(s, y, dy);
    solver.integrate(&mut rhs, t, t + tau, &mut x)?;
    let detect = flatten(&(op(labels.b).adjoint() * op(labels.d)));
    Ok(trace_product(&detect, &x, n))
}

/// Photon pairs leaving the cavity, `κ² ∬ G²_{AB,AB}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCounts {
    pub xx: f64,
    pub xy: f64,
    pub yx: f64,
    pub yy: f64,
}

impl PairCounts {
    pub fn total(&self) -> f64 {
        self.xx + self.xy + self.yx + self.yy
    }
}

/// Outcome of the double integration.
#[derive(Debug, Clone)]
pub struct TwoPhotonResult {
    /// `∬ G²_{AB,CD}` before normalization, rows AB and columns CD.
    pub raw: Matrix4<C64>,
    pub matrix: TwoPhotonMatrix,
    /// `‖R - R†‖ / ‖R‖` of the raw integral before symmetrization.
    pub hermiticity_defect: f64,
    /// `1 - ⟨G,0,0|ρ(t_end)|G,0,0⟩`.
    pub residual_excitation: f64,
    pub pair_counts: Option<PairCounts>,
    pub trajectory: Trajectory,
}

/// Raw correlation integrals and the forward trajectory on the outer grid.
pub fn correlation_integrals(
    scenario: &Scenario,
    rho0: &DMatrix<C64>,
    grid: &CorrelationGrid,
) -> Result<(Matrix4<C64>, Trajectory)> {
    grid.validate()?;
    let model = scenario.system()?;
    check_density(rho0, model.space.dim())?;
    let engine = Engine::new(&model, grid);
    engine.run(rho0)
}

/// Trace-normalized, Hermitized two-photon density matrix with diagnostics.
pub fn two_photon_matrix(
    scenario: &Scenario,
    rho0: &DMatrix<C64>,
    grid: &CorrelationGrid,
) -> Result<TwoPhotonResult> {
    let (raw, trajectory) = correlation_integrals(scenario, rho0, grid)?;
    let space = scenario.space()?;
    let final_rho = trajectory
        .states
        .as_ref()
        .and_then(|s| s.last())
        .expect("engine retains states");
    let g0 = space
        .index_of(&BasisState::new(DotLevel::G, 0, 0))
        .expect("ground state in every basis");
    let residual = 1.0 - final_rho[(g0, g0)].re;
    if let Some(limit) = grid.max_residual {
        if residual > limit {
            return Err(CascadeError::invalid(
                "correlation grid.t_end",
                format!("window leaves {residual:.3e} excitation, above {limit:e}"),
            ));
        }
    }

    let (matrix, defect) = normalize(&raw, grid.trace_floor)?;
    let pair_counts = scenario.cavity.map(|c| counts_from_raw(&raw, c.kappa_per_ps()));
    Ok(TwoPhotonResult {
        raw,
        matrix,
        hermiticity_defect: defect,
        residual_excitation: residual,
        pair_counts,
        trajectory,
    })
}

/// Hermitized, trace-normalized matrix and the relative Hermiticity defect
/// `‖R - R†‖ / ‖R‖` of the raw integral.
pub fn normalize(raw: &Matrix4<C64>, trace_floor: f64) -> Result<(TwoPhotonMatrix, f64)> {
    if raw.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(CascadeError::NonFinite("correlation integral".into()));
    }
    let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let defect = if norm > 0.0 {
        (raw - raw.adjoint()).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() / norm
    } else {
        0.0
    };
    let herm = (raw + raw.adjoint()) * C64::new(0.5, 0.0);
    let trace = herm.trace().re;
    if !(trace > trace_floor) {
        return Err(CascadeError::Degenerate {
            trace,
            floor: trace_floor,
        });
    }
    Ok((TwoPhotonMatrix::new(herm / C64::new(trace, 0.0)), defect))
}

/// Pair counts from a raw integral for out-coupling rate `kappa` (1/ps).
pub fn counts_from_raw(raw: &Matrix4<C64>, kappa: f64) -> PairCounts {
    let k2 = kappa * kappa;
    let d = |i: usize| k2 * raw[(i, i)].re;
    PairCounts {
        xx: d(0),
        xy: d(1),
        yx: d(2),
        yy: d(3),
    }
}

/// Pair counts emitted through the cavity; requires a cavity scenario.
pub fn pair_counts(
    scenario: &Scenario,
    rho0: &DMatrix<C64>,
    grid: &CorrelationGrid,
) -> Result<PairCounts> {
    let cavity = scenario
        .cavity
        .ok_or_else(|| CascadeError::invalid("cavity", "pair counts need a cavity scenario"))?;
    let (raw, _) = correlation_integrals(scenario, rho0, grid)?;
    Ok(counts_from_raw(&raw, cavity.kappa_per_ps()))
}

/// Trapezoid weights for arbitrary abscissae.
fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; x.len()];
    for i in 0..x.len().saturating_sub(1) {
        let h = x[i + 1] - x[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    w
}

struct Engine<'a> {
    model: &'a SystemModel,
    grid: &'a CorrelationGrid,
    dim: usize,
    /// `σ̃_X`, `σ̃_Y` as dense matrices.
    sigma: [DMatrix<C64>; 2],
    /// `σ̃_B† σ̃_D` flattened, indexed by `pair_index(B, D)`.
    detect: [Vec<C64>; 4],
    liouvillian: Liouvillian,
}

impl<'a> Engine<'a> {
    fn new(model: &'a SystemModel, grid: &'a CorrelationGrid) -> Self {
        let space = &model.space;
        let sigma = [
            transition_operator(Mode::X, space).into_matrix(),
            transition_operator(Mode::Y, space).into_matrix(),
        ];
        let detect = std::array::from_fn(|k| {
            let (b, d) = (k / 2, k % 2);
            flatten(&(sigma[b].adjoint() * &sigma[d]))
        });
        Engine {
            model,
            grid,
            dim: space.dim(),
            sigma,
            detect,
            liouvillian: Liouvillian::new(model),
        }
    }

    /// `σ̃_C ρ σ̃_A†` for all (C, A), indexed by `pair_index(C, A)`, stacked.
    fn modified_states(&self, rho: &DMatrix<C64>) -> Vec<C64> {
        let mut out = Vec::with_capacity(4 * self.dim * self.dim);
        for c in 0..2 {
            let left = &self.sigma[c] * rho;
            for a in 0..2 {
                out.extend(flatten(&(&left * self.sigma[a].adjoint())));
            }
        }
        out
    }

    /// Adds `weight · tr[O_BD X_CA]` into `acc[(AB),(CD)]`.
    fn contract(&self, ops: &[Vec<C64>; 4], stacked: &[C64], weight: f64, acc: &mut Matrix4<C64>) {
        let n2 = self.dim * self.dim;
        for c in 0..2 {
            for a in 0..2 {
                let x = &stacked[(2 * c + a) * n2..(2 * c + a + 1) * n2];
                for b in 0..2 {
                    for d in 0..2 {
                        let v = trace_product(&ops[2 * b + d], x, self.dim);
                        acc[(2 * a + b, 2 * c + d)] += v * weight;
                    }
                }
            }
        }
    }

    fn run(&self, rho0: &DMatrix<C64>) -> Result<(Matrix4<C64>, Trajectory)> {
        let g = self.grid;
        let n = self.dim;
        let n2 = n * n;
        let forward = TimeGrid {
            t_start: g.t_start,
            t_end: g.t_end,
            dt_out: g.dt,
            tol: g.tol,
            retain_states: true,
        };
        forward.validate()?;
        let traj = evolve_with(&self.liouvillian, &self.model.space, rho0, &forward)?;
        let states = traj.states.as_ref().expect("retained");
        let outer_w = trapezoid_weights(&traj.times);

        let n_tau = g.tau_steps();
        let h = g.dtau;
        let static_from = self.model.static_after.max(g.t_start);
        // Number of τ steps each outer time must take before reaching the static region.
        let lead: Vec<usize> = traj
            .times
            .iter()
            .map(|&t| {
                if t >= static_from {
                    0
                } else {
                    ((static_from - t) / h - 1e-9).ceil() as usize
                }
            })
            .collect();

        let mut needed: Vec<usize> = lead
            .iter()
            .filter(|&&k| k >= 1 && k <= n_tau)
            .map(|&k| n_tau - k)
            .collect();
        needed.push(0);
        needed.push(n_tau);
        needed.sort_unstable();
        needed.dedup();
        let tails = self.heisenberg_tails(n_tau, &needed)?;
        let tail_for = |idx: usize| -> &[Vec<C64>; 4] {
            let pos = needed.binary_search(&idx).expect("index was requested");
            &tails.partial[pos]
        };

        // Q(0) = h (P_N - (O_0 + O_N)/2), Q(k) = h (P_{N-k} - O_{N-k}/2)
        let full_q: [Vec<C64>; 4] = std::array::from_fn(|bd| {
            (0..n2)
                .map(|i| {
                    (tails.prefix_n[bd][i] - (tails.first[bd][i] + tails.last[bd][i]) * 0.5) * h
                })
                .collect()
        });

        let static_part: Matrix4<C64> = {
            let mut acc = Matrix4::zeros();
            for (m, rho) in states.iter().enumerate() {
                if lead[m] == 0 {
                    let x = self.modified_states(rho);
                    self.contract(&full_q, &x, outer_w[m], &mut acc);
                }
            }
            acc
        };

        let driven: Vec<usize> = (0..states.len()).filter(|&m| lead[m] > 0).collect();
        let driven_parts: Vec<Result<Matrix4<C64>>> = driven
            .par_iter()
            .map(|&m| {
                let k = lead[m];
                let tail = (k <= n_tau).then(|| tail_for(n_tau - k));
                self.driven_leg(traj.times[m], &states[m], k.min(n_tau + 1), n_tau, tail)
                    .map(|acc| acc * C64::new(outer_w[m], 0.0))
            })
            .collect();
        let mut total = static_part;
        for part in driven_parts {
            total += part?;
        }
        Ok((total, traj))
    }

    /// τ leg of an outer time whose first `k` delay points overlap a pulse.
    fn driven_leg(
        &self,
        t: f64,
        rho: &DMatrix<C64>,
        k: usize,
        n_tau: usize,
        tail: Option<&[Vec<C64>; 4]>,
    ) -> Result<Matrix4<C64>> {
        let h = self.grid.dtau;
        let n2 = self.dim * self.dim;
        let mut x = self.modified_states(rho);
        let mut acc = Matrix4::zeros();
        let mut solver = Dopri5::new(4 * n2, self.grid.tol);
        let l = &self.liouvillian;
        let mut rhs = |s: f64, y: &[C64], dy: &mut [C64]| {
            for (yi, di) in y.chunks_exact(n2).zip(dy.chunks_exact_mut(n2)) {
                l.apply(s, yi, di);
            }
        };
        let direct_until = k.min(n_tau + 1);
        for j in 0..direct_until {
            if j > 0 {
                let (a, b) = (t + (j - 1) as f64 * h, t + j as f64 * h);
                solver.integrate(&mut rhs, a, b, &mut x)?;
            }
            let w = if j == 0 || j == n_tau { 0.5 * h } else { h };
            self.contract(&self.detect, &x, w, &mut acc);
        }
        if let Some(q) = tail {
            let (a, b) = (t + (k - 1) as f64 * h, t + k as f64 * h);
            solver.integrate(&mut rhs, a, b, &mut x)?;
            self.contract(q, &x, 1.0, &mut acc);
        }
        Ok(acc)
    }

    /// Propagates the detection operators under the drive-free adjoint
    /// generator over the τ grid, keeping the weighted tail sums
    /// `h (P_i - O_i / 2)` at the requested indices.
    fn heisenberg_tails(&self, n_tau: usize, needed: &[usize]) -> Result<Tails> {
        let n2 = self.dim * self.dim;
        let h = self.grid.dtau;
        let static_gen = Liouvillian::without_drive(self.model);
        let mut ops: Vec<C64> = self.detect.iter().flatten().copied().collect();
        let mut prefix = ops.clone();
        let mut solver = Dopri5::new(4 * n2, self.grid.tol);
        let mut rhs = |s: f64, y: &[C64], dy: &mut [C64]| {
            for (yi, di) in y.chunks_exact(n2).zip(dy.chunks_exact_mut(n2)) {
                static_gen.apply_adjoint(s, yi, di);
            }
        };
        let split = |v: &[C64]| -> [Vec<C64>; 4] { std::array::from_fn(|bd| v[bd * n2..(bd + 1) * n2].to_vec()) };
        let weighted = |p: &[C64], o: &[C64]| -> [Vec<C64>; 4] {
            std::array::from_fn(|bd| {
                (0..n2)
                    .map(|i| (p[bd * n2 + i] - o[bd * n2 + i] * 0.5) * h)
                    .collect()
            })
        };
        let first = split(&ops);
        let mut partial = Vec::with_capacity(needed.len());
        let mut next = 0;
        if needed.first() == Some(&0) {
            partial.push(weighted(&prefix, &ops));
            next = 1;
        }
        for i in 1..=n_tau {
            // autonomous generator: the time argument only has to be past the pulses
            let (a, b) = ((i - 1) as f64 * h, i as f64 * h);
            solver.integrate(&mut rhs, a, b, &mut ops)?;
            for (p, o) in prefix.iter_mut().zip(&ops) {
                *p += o;
            }
            if next < needed.len() && needed[next] == i {
                partial.push(weighted(&prefix, &ops));
                next += 1;
            }
        }
        Ok(Tails {
            first,
            last: split(&ops),
            prefix_n: split(&prefix),
            partial,
        })
    }
}

struct Tails {
    first: [Vec<C64>; 4],
    last: [Vec<C64>; 4],
    prefix_n: [Vec<C64>; 4],
    partial: Vec<[Vec<C64>; 4]>,
}

/// Exposes the unflatten helper for callers holding flat snapshots.
pub fn as_matrix(flat: &[C64], dim: usize) -> DMatrix<C64> {
    unflatten(flat, dim)
}
