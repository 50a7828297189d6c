//! Composite basis of the four-level dot and the two polarized cavity modes.
//!
//! Every operator is a dense complex matrix over a [`StateSpace`]. Actions that
//! would leave a truncated basis are dropped (truncation by projection), so an
//! operator on a small space equals the corresponding operator on a larger
//! space restricted to the small basis.

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};

pub type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DotLevel {
    G,
    X,
    Y,
    B,
}

impl DotLevel {
    pub const ALL: [DotLevel; 4] = [DotLevel::G, DotLevel::X, DotLevel::Y, DotLevel::B];

    pub fn swapped_xy(self) -> Self {
        match self {
            DotLevel::X => DotLevel::Y,
            DotLevel::Y => DotLevel::X,
            other => other,
        }
    }
}

/// Linear polarization; labels both a cavity mode and an exciton branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    X,
    Y,
}

impl Mode {
    pub const BOTH: [Mode; 2] = [Mode::X, Mode::Y];

    pub fn exciton(self) -> DotLevel {
        match self {
            Mode::X => DotLevel::X,
            Mode::Y => DotLevel::Y,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Mode::X => 0,
            Mode::Y => 1,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::X => "X",
            Mode::Y => "Y",
        })
    }
}

/// `|dot, n_x, n_y⟩`. Ordering is dot level major, then `n_x`, then `n_y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisState {
    pub dot: DotLevel,
    pub n_x: u8,
    pub n_y: u8,
}

impl BasisState {
    pub const fn new(dot: DotLevel, n_x: u8, n_y: u8) -> Self {
        BasisState { dot, n_x, n_y }
    }

    pub fn photons(&self, mode: Mode) -> u8 {
        match mode {
            Mode::X => self.n_x,
            Mode::Y => self.n_y,
        }
    }

    fn with_photons(self, mode: Mode, n: u8) -> Self {
        match mode {
            Mode::X => BasisState { n_x: n, ..self },
            Mode::Y => BasisState { n_y: n, ..self },
        }
    }

    /// Mirror image under the exchange of the two polarizations.
    pub fn swapped_xy(self) -> Self {
        BasisState {
            dot: self.dot.swapped_xy(),
            n_x: self.n_y,
            n_y: self.n_x,
        }
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{:?},{},{}⟩", self.dot, self.n_x, self.n_y)
    }
}

/// Photon-number truncation of the cavity modes.
///
/// `DotOnly` drops the cavity entirely (dimension 4) and is what cavity-free
/// scenarios run on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    DotOnly,
    /// One photon per mode plus `|G,2,0⟩` and `|G,0,2⟩`.
    Reduced18,
    /// Up to `n` photons in each mode independently.
    Full(u8),
}

impl fmt::Display for Truncation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Truncation::DotOnly => f.write_str("dot_only"),
            Truncation::Reduced18 => f.write_str("reduced18"),
            Truncation::Full(n) => write!(f, "full{n}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StateSpace {
    truncation: Truncation,
    basis: Vec<BasisState>,
    index: HashMap<BasisState, usize>,
}

/// Builds the ordered basis for `truncation`.
pub fn build_space(truncation: Truncation) -> Result<StateSpace> {
    let mut basis = Vec::new();
    match truncation {
        Truncation::DotOnly => {
            basis.extend(DotLevel::ALL.iter().map(|&d| BasisState::new(d, 0, 0)));
        }
        Truncation::Reduced18 => {
            for &d in &DotLevel::ALL {
                for n_x in 0..=1 {
                    for n_y in 0..=1 {
                        basis.push(BasisState::new(d, n_x, n_y));
                    }
                }
            }
            basis.push(BasisState::new(DotLevel::G, 2, 0));
            basis.push(BasisState::new(DotLevel::G, 0, 2));
        }
        Truncation::Full(n) => {
            if n == 0 {
                return Err(CascadeError::invalid(
                    "truncation",
                    "full truncation needs at least one photon per mode",
                ));
            }
            for &d in &DotLevel::ALL {
                for n_x in 0..=n {
                    for n_y in 0..=n {
                        basis.push(BasisState::new(d, n_x, n_y));
                    }
                }
            }
        }
    }
    basis.sort();
    let index = basis.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    Ok(StateSpace {
        truncation,
        basis,
        index,
    })
}

impl StateSpace {
    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[BasisState] {
        &self.basis
    }

    pub fn index_of(&self, state: &BasisState) -> Option<usize> {
        self.index.get(state).copied()
    }

    pub fn has_cavity(&self) -> bool {
        self.truncation != Truncation::DotOnly
    }

    /// Largest photon number present in either mode.
    pub fn max_photons(&self) -> u8 {
        self.basis
            .iter()
            .map(|s| s.n_x.max(s.n_y))
            .max()
            .unwrap_or(0)
    }

    /// `perm[i]` is the index of the polarization-swapped image of state `i`.
    pub fn xy_swap_permutation(&self) -> Vec<usize> {
        self.basis
            .iter()
            .map(|s| {
                self.index_of(&s.swapped_xy())
                    .expect("every supported truncation is symmetric in X and Y")
            })
            .collect()
    }

    /// Basis vector as a dense column.
    pub fn ket(&self, state: &BasisState) -> Result<Vec<C64>> {
        let i = self.index_of(state).ok_or_else(|| {
            CascadeError::invalid("state", format!("{state} is not in the {} basis", self.truncation))
        })?;
        let mut v = vec![C64::new(0.0, 0.0); self.dim()];
        v[i] = C64::new(1.0, 0.0);
        Ok(v)
    }

    /// `|s⟩⟨s|` for a basis state.
    pub fn pure_density(&self, state: &BasisState) -> Result<DMatrix<C64>> {
        let i = self.index_of(state).ok_or_else(|| {
            CascadeError::invalid("state", format!("{state} is not in the {} basis", self.truncation))
        })?;
        let mut rho = DMatrix::zeros(self.dim(), self.dim());
        rho[(i, i)] = C64::new(1.0, 0.0);
        Ok(rho)
    }

    fn operator_from(&self, f: impl Fn(&BasisState) -> Vec<(BasisState, f64)>) -> Operator {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (col, s) in self.basis.iter().enumerate() {
            for (target, amp) in f(s) {
                if let Some(row) = self.index_of(&target) {
                    m[(row, col)] += C64::new(amp, 0.0);
                }
            }
        }
        Operator {
            truncation: self.truncation,
            matrix: m,
        }
    }
}

/// Dense operator on a particular [`StateSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    truncation: Truncation,
    matrix: DMatrix<C64>,
}

impl Operator {
    pub fn from_matrix(space: &StateSpace, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(CascadeError::SpaceMismatch {
                expected: space.truncation().to_string(),
                found: matrix.nrows(),
            });
        }
        Ok(Operator {
            truncation: space.truncation(),
            matrix,
        })
    }

    pub fn zeros(space: &StateSpace) -> Self {
        Operator {
            truncation: space.truncation(),
            matrix: DMatrix::zeros(space.dim(), space.dim()),
        }
    }

    pub fn identity(space: &StateSpace) -> Self {
        Operator {
            truncation: space.truncation(),
            matrix: DMatrix::identity(space.dim(), space.dim()),
        }
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            truncation: self.truncation,
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn compose(&self, rhs: &Operator) -> Operator {
        debug_assert_eq!(self.truncation, rhs.truncation);
        Operator {
            truncation: self.truncation,
            matrix: &self.matrix * &rhs.matrix,
        }
    }

    pub fn scaled(&self, factor: C64) -> Operator {
        Operator {
            truncation: self.truncation,
            matrix: &self.matrix * factor,
        }
    }

    pub fn plus(&self, rhs: &Operator) -> Operator {
        debug_assert_eq!(self.truncation, rhs.truncation);
        Operator {
            truncation: self.truncation,
            matrix: &self.matrix + &rhs.matrix,
        }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim();
        assert_eq!(v.len(), n, "vector length must match operator dimension");
        (0..n)
            .map(|i| (0..n).map(|j| self.matrix[(i, j)] * v[j]).sum())
            .collect()
    }

    /// `⟨row|O|col⟩` in basis-state labels; zero when either state is absent.
    pub fn element(&self, space: &StateSpace, row: &BasisState, col: &BasisState) -> C64 {
        match (space.index_of(row), space.index_of(col)) {
            (Some(i), Some(j)) => self.matrix[(i, j)],
            _ => C64::new(0.0, 0.0),
        }
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }
}

/// Cavity photon annihilation operator `a_mode`.
pub fn annihilation(mode: Mode, space: &StateSpace) -> Operator {
    if !space.has_cavity() {
        return Operator::zeros(space);
    }
    space.operator_from(|s| {
        let n = s.photons(mode);
        if n == 0 {
            Vec::new()
        } else {
            vec![(s.with_photons(mode, n - 1), f64::from(n).sqrt())]
        }
    })
}

pub fn creation(mode: Mode, space: &StateSpace) -> Operator {
    annihilation(mode, space).adjoint()
}

/// `a_S σ_S†` taken as one transition: a photon is absorbed while the dot
/// is raised along polarization `S`. Equals the projection of the product.
pub fn cavity_absorption(mode: Mode, space: &StateSpace) -> Operator {
    if !space.has_cavity() {
        return Operator::zeros(space);
    }
    let exciton = mode.exciton();
    space.operator_from(|s| {
        let n = s.photons(mode);
        let raised = match s.dot {
            DotLevel::G => exciton,
            d if d == exciton => DotLevel::B,
            _ => return Vec::new(),
        };
        if n == 0 {
            return Vec::new();
        }
        let target = BasisState {
            dot: raised,
            ..s.with_photons(mode, n - 1)
        };
        vec![(target, f64::from(n).sqrt())]
    })
}

/// Dot polarization operator `σ_S = |G⟩⟨S| + |S⟩⟨B|`.
pub fn dot_transition(pol: Mode, space: &StateSpace) -> Operator {
    let exciton = pol.exciton();
    space.operator_from(|s| {
        if s.dot == exciton {
            vec![(BasisState { dot: DotLevel::G, ..*s }, 1.0)]
        } else if s.dot == DotLevel::B {
            vec![(BasisState { dot: exciton, ..*s }, 1.0)]
        } else {
            Vec::new()
        }
    })
}

/// `|lower⟩⟨upper| ⊗ 1` on the dot factor.
pub fn dot_jump(lower: DotLevel, upper: DotLevel, space: &StateSpace) -> Operator {
    space.operator_from(|s| {
        if s.dot == upper {
            vec![(BasisState { dot: lower, ..*s }, 1.0)]
        } else {
            Vec::new()
        }
    })
}

pub fn projector(level: DotLevel, space: &StateSpace) -> Operator {
    space.operator_from(|s| if s.dot == level { vec![(*s, 1.0)] } else { Vec::new() })
}

pub fn number_op(mode: Mode, space: &StateSpace) -> Operator {
    space.operator_from(|s| vec![(*s, f64::from(s.photons(mode)))])
}
