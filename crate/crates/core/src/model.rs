//! Physical parameters, pulse envelopes, the rotating-frame Hamiltonian and
//! the dissipator list.
//!
//! Units: energies in meV, times in ps, rates in 1/ps. All dot levels and both
//! cavity modes rotate at the exciton frequency, so `|X⟩`/`|Y⟩` sit at zero,
//! `|B⟩` at `-Δ_B` and every cavity photon at `-Δ_B/2`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};
use crate::hilbert::{
    annihilation, build_space, cavity_absorption, dot_jump, dot_transition, number_op, projector, DotLevel, Mode,
    Operator, StateSpace, Truncation, C64,
};

/// Reduced Planck constant in meV·ps.
pub const HBAR_MEV_PS: f64 = 0.6582119569;

/// Pulse duration used throughout the reference parameter set (ps).
pub const DEFAULT_SIGMA_PS: f64 = 2.7;
/// Pulse center used by the bundled scenarios (ps).
pub const DEFAULT_T0_PS: f64 = 10.0;

/// Envelope magnitude below this many σ from every pulse center is under 1e-13
/// of its peak, and the Hamiltonian is treated as static.
pub const DRIVE_CUTOFF_SIGMAS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DotParams {
    pub delta_b_mev: f64,
    #[serde(default)]
    pub delta_0_mev: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    pub g_mev: f64,
    pub kappa_mev: f64,
}

impl CavityParams {
    /// Out-coupling rate κ in 1/ps.
    pub fn kappa_per_ps(&self) -> f64 {
        self.kappa_mev / HBAR_MEV_PS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "DecayDoc")]
pub struct DecayParams {
    pub gamma_x_per_ps: f64,
    pub gamma_b_per_ps: f64,
}

#[derive(Deserialize)]
struct DecayDoc {
    gamma_x_per_ps: f64,
    gamma_b_per_ps: Option<f64>,
}

impl From<DecayDoc> for DecayParams {
    fn from(d: DecayDoc) -> Self {
        DecayParams {
            gamma_x_per_ps: d.gamma_x_per_ps,
            gamma_b_per_ps: d.gamma_b_per_ps.unwrap_or(2.0 * d.gamma_x_per_ps),
        }
    }
}

impl DecayParams {
    pub fn from_exciton_rate(gamma_x_per_ps: f64) -> Self {
        DecayParams {
            gamma_x_per_ps,
            gamma_b_per_ps: 2.0 * gamma_x_per_ps,
        }
    }

    pub fn none() -> Self {
        DecayParams {
            gamma_x_per_ps: 0.0,
            gamma_b_per_ps: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    /// Equal X and Y components, `Ω/√2` each.
    #[default]
    Diagonal,
    X,
    Y,
}

impl Polarization {
    /// Amplitude weight on the given linear component.
    pub fn weight(self, mode: Mode) -> f64 {
        match (self, mode) {
            (Polarization::Diagonal, _) => FRAC_1_SQRT_2,
            (Polarization::X, Mode::X) | (Polarization::Y, Mode::Y) => 1.0,
            _ => 0.0,
        }
    }
}

/// Gaussian laser pulse. The area is given in units of π.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseParams {
    pub alpha_pi: f64,
    pub sigma_ps: f64,
    pub delta_mev: f64,
    pub t0_ps: f64,
    #[serde(default, skip_serializing_if = "is_default_pol")]
    pub polarization: Polarization,
    /// Constant carrier phase offset (rad).
    #[serde(default, skip_serializing_if = "is_zero")]
    pub phase_rad: f64,
}

fn is_default_pol(p: &Polarization) -> bool {
    *p == Polarization::Diagonal
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl PulseParams {
    pub fn diagonal(alpha_pi: f64, sigma_ps: f64, delta_mev: f64, t0_ps: f64) -> Self {
        PulseParams {
            alpha_pi,
            sigma_ps,
            delta_mev,
            t0_ps,
            polarization: Polarization::Diagonal,
            phase_rad: 0.0,
        }
    }

    /// Pulse area in radians.
    pub fn area(&self) -> f64 {
        self.alpha_pi * PI
    }

    /// Intensity full width at half maximum, `2√(ln 2)·σ`.
    pub fn intensity_fwhm_ps(&self) -> f64 {
        2.0 * 2f64.ln().sqrt() * self.sigma_ps
    }

    fn validate(&self, idx: usize) -> Result<()> {
        let field = |name: &str| format!("pulses[{idx}].{name}");
        for (name, v) in [
            ("alpha_pi", self.alpha_pi),
            ("sigma_ps", self.sigma_ps),
            ("delta_mev", self.delta_mev),
            ("t0_ps", self.t0_ps),
            ("phase_rad", self.phase_rad),
        ] {
            if !v.is_finite() {
                return Err(CascadeError::invalid(field(name), "must be finite"));
            }
        }
        if self.sigma_ps <= 0.0 {
            return Err(CascadeError::invalid(field("sigma_ps"), "must be positive"));
        }
        if self.alpha_pi < 0.0 {
            return Err(CascadeError::invalid(field("alpha_pi"), "must be non-negative"));
        }
        Ok(())
    }
}

/// Complex Rabi amplitude Ω(t) in rad/ps, carrier reduced to the residual
/// phase at detuning Δ.
pub fn envelope(pulse: &PulseParams, t: f64) -> C64 {
    let s = pulse.sigma_ps;
    let dt = t - pulse.t0_ps;
    let amp = pulse.area() / (2.0 * PI * s * s).sqrt() * (-dt * dt / (2.0 * s * s)).exp();
    let phase = -pulse.delta_mev / HBAR_MEV_PS * dt + pulse.phase_rad;
    C64::from_polar(amp, phase)
}

/// Full physical configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default = "default_truncation")]
    pub truncation: Truncation,
    pub dot: DotParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity: Option<CavityParams>,
    pub decay: DecayParams,
    #[serde(default)]
    pub pulses: Vec<PulseParams>,
}

fn default_truncation() -> Truncation {
    Truncation::Reduced18
}

impl Scenario {
    /// Reference SUPER parameters: Δ₁ = -5 meV, α₁ = 32π, Δ₂ = -12.96 meV,
    /// α₂ = 12.8π, σ = 2.7 ps, Δ_B = 1 meV, γ_x = 0.01/ps.
    pub fn table1_super(with_cavity: bool) -> Self {
        Scenario {
            truncation: Truncation::Reduced18,
            dot: DotParams {
                delta_b_mev: 1.0,
                delta_0_mev: 0.0,
            },
            cavity: with_cavity.then_some(CavityParams {
                g_mev: 0.06,
                kappa_mev: 0.12,
            }),
            decay: DecayParams::from_exciton_rate(0.01),
            pulses: vec![
                PulseParams::diagonal(32.0, DEFAULT_SIGMA_PS, -5.0, DEFAULT_T0_PS),
                PulseParams::diagonal(12.8, DEFAULT_SIGMA_PS, -12.96, DEFAULT_T0_PS),
            ],
        }
    }

    /// Two-photon excitation: a single diagonal pulse at `Δ = -Δ_B/2`.
    pub fn table1_tpe(alpha_pi: f64, with_cavity: bool) -> Self {
        let mut s = Self::table1_super(with_cavity);
        s.pulses = vec![PulseParams::diagonal(
            alpha_pi,
            DEFAULT_SIGMA_PS,
            -s.dot.delta_b_mev / 2.0,
            DEFAULT_T0_PS,
        )];
        s
    }

    pub fn validate(&self) -> Result<()> {
        if !self.dot.delta_b_mev.is_finite() {
            return Err(CascadeError::invalid("dot.delta_b_mev", "must be finite"));
        }
        if !self.dot.delta_0_mev.is_finite() {
            return Err(CascadeError::invalid("dot.delta_0_mev", "must be finite"));
        }
        if let Some(c) = &self.cavity {
            if !(c.g_mev >= 0.0 && c.g_mev.is_finite()) {
                return Err(CascadeError::invalid("cavity.g_mev", "must be finite and >= 0"));
            }
            if !(c.kappa_mev >= 0.0 && c.kappa_mev.is_finite()) {
                return Err(CascadeError::invalid("cavity.kappa_mev", "must be finite and >= 0"));
            }
        }
        for (name, v) in [
            ("decay.gamma_x_per_ps", self.decay.gamma_x_per_ps),
            ("decay.gamma_b_per_ps", self.decay.gamma_b_per_ps),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CascadeError::invalid(name, "must be finite and >= 0"));
            }
        }
        for (i, p) in self.pulses.iter().enumerate() {
            p.validate(i)?;
        }
        Ok(())
    }

    /// Non-fatal remarks about parameters outside the usual regime.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.dot.delta_b_mev < 0.0 {
            w.push(format!(
                "negative biexciton binding energy {} meV",
                self.dot.delta_b_mev
            ));
        }
        w
    }

    /// Truncation actually used: cavity-free scenarios run on the bare dot.
    pub fn effective_truncation(&self) -> Truncation {
        if self.cavity.is_some() {
            self.truncation
        } else {
            Truncation::DotOnly
        }
    }

    pub fn space(&self) -> Result<StateSpace> {
        build_space(self.effective_truncation())
    }

    /// `[min(t0 - 5σ), max(t0 + 5σ)]` over all pulses.
    pub fn pulse_window(&self) -> Option<(f64, f64)> {
        self.pulse_span(5.0)
    }

    /// Support of the drive beyond which the Hamiltonian is static.
    pub fn drive_support(&self) -> Option<(f64, f64)> {
        self.pulse_span(DRIVE_CUTOFF_SIGMAS)
    }

    fn pulse_span(&self, sigmas: f64) -> Option<(f64, f64)> {
        let active = self.pulses.iter().filter(|p| p.alpha_pi > 0.0);
        active.fold(None, |acc, p| {
            let lo = p.t0_ps - sigmas * p.sigma_ps;
            let hi = p.t0_ps + sigmas * p.sigma_ps;
            Some(match acc {
                None => (lo, hi),
                Some((a, b)) => (f64::min(a, lo), f64::max(b, hi)),
            })
        })
    }

    /// Default start of the simulation window, `min(t0 - 4σ)`, or 0 without pulses.
    pub fn default_start(&self) -> f64 {
        self.pulse_span(4.0).map_or(0.0, |(lo, _)| lo)
    }

    /// Time after which no pulse acts.
    pub fn static_after(&self) -> f64 {
        self.drive_support().map_or(f64::NEG_INFINITY, |(_, hi)| hi)
    }

    pub fn system(&self) -> Result<SystemModel> {
        SystemModel::new(self)
    }

    /// Ground state of the scenario's space.
    pub fn ground_density(&self) -> Result<DMatrix<C64>> {
        let space = self.space()?;
        space.pure_density(&crate::hilbert::BasisState::new(DotLevel::G, 0, 0))
    }

    pub fn biexciton_density(&self) -> Result<DMatrix<C64>> {
        let space = self.space()?;
        space.pure_density(&crate::hilbert::BasisState::new(DotLevel::B, 0, 0))
    }
}

/// One pulse coupled to the dot: contributes `c(t)·V + c*(t)·V†` with
/// `c(t) = -(ħ/2)Ω(t)` and `V = Σ_S w_S σ_S†`.
#[derive(Debug, Clone)]
pub struct DriveTerm {
    pub pulse: PulseParams,
    pub raising: Operator,
}

impl DriveTerm {
    /// Coefficient of `raising` in meV.
    pub fn coefficient(&self, t: f64) -> C64 {
        envelope(&self.pulse, t) * (-0.5 * HBAR_MEV_PS)
    }
}

/// Jump operator with its rate: dissipator `(γ/2)(2OρO† - O†Oρ - ρO†O)`.
#[derive(Debug, Clone)]
pub struct Dissipator {
    pub label: &'static str,
    pub op: Operator,
    pub rate: f64,
}

/// Hamiltonian and dissipators of a scenario, assembled once over its space.
#[derive(Debug, Clone)]
pub struct SystemModel {
    pub space: StateSpace,
    pub static_hamiltonian: Operator,
    pub drives: Vec<DriveTerm>,
    pub dissipators: Vec<Dissipator>,
    pub static_after: f64,
}

impl SystemModel {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let space = scenario.space()?;
        let static_hamiltonian = static_hamiltonian(scenario, &space);
        let drives = drive_terms(&scenario.pulses, &space);
        let dissipators = lindblad_ops(scenario, &space);
        Ok(SystemModel {
            space,
            static_hamiltonian,
            drives,
            dissipators,
            static_after: scenario.static_after(),
        })
    }

    pub fn hamiltonian_at(&self, t: f64) -> Operator {
        let mut h = self.static_hamiltonian.matrix().clone();
        for d in &self.drives {
            let c = d.coefficient(t);
            if c.norm() == 0.0 {
                continue;
            }
            let v = d.raising.matrix();
            h += v * c + v.adjoint() * c.conj();
        }
        Operator::from_matrix(&self.space, h).expect("dimension fixed by construction")
    }
}

fn static_hamiltonian(scenario: &Scenario, space: &StateSpace) -> Operator {
    let dot = &scenario.dot;
    let half_fss = 0.5 * dot.delta_0_mev;
    let mut h = projector(DotLevel::X, space).scaled(C64::new(half_fss, 0.0));
    h = h.plus(&projector(DotLevel::Y, space).scaled(C64::new(-half_fss, 0.0)));
    h = h.plus(&projector(DotLevel::B, space).scaled(C64::new(-dot.delta_b_mev, 0.0)));
    if let Some(cav) = &scenario.cavity {
        let photon_energy = C64::new(-0.5 * dot.delta_b_mev, 0.0);
        for mode in Mode::BOTH {
            h = h.plus(&number_op(mode, space).scaled(photon_energy));
            let coupling = cavity_absorption(mode, space).scaled(C64::new(cav.g_mev, 0.0));
            h = h.plus(&coupling).plus(&coupling.adjoint());
        }
    }
    h
}

fn drive_terms(pulses: &[PulseParams], space: &StateSpace) -> Vec<DriveTerm> {
    pulses
        .iter()
        .filter(|p| p.alpha_pi > 0.0)
        .map(|p| {
            let raising = Mode::BOTH
                .iter()
                .map(|&m| {
                    dot_transition(m, space)
                        .adjoint()
                        .scaled(C64::new(p.polarization.weight(m), 0.0))
                })
                .reduce(|a, b| a.plus(&b))
                .expect("two modes");
            DriveTerm { pulse: *p, raising }
        })
        .collect()
}

/// Hermitian rotating-frame Hamiltonian (meV) at time `t`.
pub fn hamiltonian_at(t: f64, scenario: &Scenario, space: &StateSpace) -> Result<Operator> {
    if space.truncation() != scenario.effective_truncation() {
        return Err(CascadeError::SpaceMismatch {
            expected: scenario.effective_truncation().to_string(),
            found: space.dim(),
        });
    }
    let model = SystemModel {
        space: space.clone(),
        static_hamiltonian: static_hamiltonian(scenario, space),
        drives: drive_terms(&scenario.pulses, space),
        dissipators: Vec::new(),
        static_after: scenario.static_after(),
    };
    Ok(model.hamiltonian_at(t))
}

/// Radiative decay of the cascade plus cavity losses when a cavity is present.
pub fn lindblad_ops(scenario: &Scenario, space: &StateSpace) -> Vec<Dissipator> {
    let d = &scenario.decay;
    let mut ops = vec![
        Dissipator {
            label: "G<-X",
            op: dot_jump(DotLevel::G, DotLevel::X, space),
            rate: d.gamma_x_per_ps,
        },
        Dissipator {
            label: "G<-Y",
            op: dot_jump(DotLevel::G, DotLevel::Y, space),
            rate: d.gamma_x_per_ps,
        },
        Dissipator {
            label: "X<-B",
            op: dot_jump(DotLevel::X, DotLevel::B, space),
            rate: d.gamma_b_per_ps / 2.0,
        },
        Dissipator {
            label: "Y<-B",
            op: dot_jump(DotLevel::Y, DotLevel::B, space),
            rate: d.gamma_b_per_ps / 2.0,
        },
    ];
    if let Some(c) = &scenario.cavity {
        let kappa = c.kappa_per_ps();
        ops.push(Dissipator {
            label: "a_X",
            op: annihilation(Mode::X, space),
            rate: kappa,
        });
        ops.push(Dissipator {
            label: "a_Y",
            op: annihilation(Mode::Y, space),
            rate: kappa,
        });
    }
    ops
}
