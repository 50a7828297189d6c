//! Sparse right-hand sides of the master equation and its Heisenberg adjoint.
//!
//! Matrices are stored row-major as flat slices of length `dim²`.

use nalgebra::DMatrix;

use crate::hilbert::C64;
use crate::model::{PulseParams, SystemModel, HBAR_MEV_PS, envelope};

#[derive(Debug, Clone)]
pub(crate) struct Sparse {
    entries: Vec<(usize, usize, C64)>,
}

impl Sparse {
    pub(crate) fn from_dense(m: &DMatrix<C64>) -> Self {
        let mut entries = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v.norm() != 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        Sparse { entries }
    }

    pub(crate) fn adjoint(&self) -> Self {
        Sparse {
            entries: self.entries.iter().map(|&(i, j, v)| (j, i, v.conj())).collect(),
        }
    }

    pub(crate) fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// `out += alpha · A x` for a vector `x`.
    pub(crate) fn mul_vec_acc(&self, x: &[C64], out: &mut [C64], alpha: C64) {
        for &(i, j, a) in &self.entries {
            out[i] += alpha * a * x[j];
        }
    }

    /// `out += alpha · A X`.
    fn left_acc(&self, dim: usize, x: &[C64], out: &mut [C64], alpha: C64) {
        for &(i, j, a) in &self.entries {
            let s = alpha * a;
            let (src, dst) = (&x[j * dim..(j + 1) * dim], i * dim);
            for (k, v) in src.iter().enumerate() {
                out[dst + k] += s * v;
            }
        }
    }

    /// `out += alpha · X A`.
    fn right_acc(&self, dim: usize, x: &[C64], out: &mut [C64], alpha: C64) {
        for &(j, k, a) in &self.entries {
            let s = alpha * a;
            for i in 0..dim {
                out[i * dim + k] += s * x[i * dim + j];
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Jump {
    /// `√γ · O`
    op: Sparse,
}

#[derive(Debug, Clone)]
struct Drive {
    pulse: PulseParams,
    raising: Sparse,
    lowering: Sparse,
}

/// Master-equation generator `dρ/dt = -(i/ħ)[H(t), ρ] + Σ γ D[O]ρ`.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    dim: usize,
    h_eff: Sparse,
    h_eff_dag: Sparse,
    drives: Vec<Drive>,
    jumps: Vec<Jump>,
    drive_window: Option<(f64, f64)>,
}

const NEG_I_OVER_HBAR: C64 = C64::new(0.0, -1.0 / HBAR_MEV_PS);

impl Liouvillian {
    pub fn new(model: &SystemModel) -> Self {
        Self::build(model, true)
    }

    /// Generator with all pulses removed.
    pub fn without_drive(model: &SystemModel) -> Self {
        Self::build(model, false)
    }

    fn build(model: &SystemModel, with_drive: bool) -> Self {
        let dim = model.space.dim();
        // H_eff = H - (iħ/2) Σ γ O†O
        let mut h_eff = model.static_hamiltonian.matrix().clone();
        for d in &model.dissipators {
            let o = d.op.matrix();
            h_eff -= (o.adjoint() * o) * C64::new(0.0, 0.5 * HBAR_MEV_PS * d.rate);
        }
        let h_eff = Sparse::from_dense(&h_eff);
        let jumps = model
            .dissipators
            .iter()
            .filter(|d| d.rate > 0.0)
            .map(|d| Jump {
                op: Sparse::from_dense(&(d.op.matrix() * C64::new(d.rate.sqrt(), 0.0))),
            })
            .filter(|j| j.op.nnz() > 0)
            .collect();
        let drives: Vec<Drive> = if with_drive {
            model
                .drives
                .iter()
                .map(|d| {
                    let raising = Sparse::from_dense(d.raising.matrix());
                    let lowering = raising.adjoint();
                    Drive {
                        pulse: d.pulse,
                        raising,
                        lowering,
                    }
                })
                .collect()
        } else {
            Vec::new()
        };
        let drive_window = drives.iter().fold(None, |acc: Option<(f64, f64)>, d| {
            let w = crate::model::DRIVE_CUTOFF_SIGMAS * d.pulse.sigma_ps;
            let (lo, hi) = (d.pulse.t0_ps - w, d.pulse.t0_ps + w);
            Some(acc.map_or((lo, hi), |(a, b)| (a.min(lo), b.max(hi))))
        });
        Liouvillian {
            dim,
            h_eff_dag: h_eff.adjoint(),
            h_eff,
            drives,
            jumps,
            drive_window,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn drive_active(&self, t: f64) -> bool {
        matches!(self.drive_window, Some((lo, hi)) if t > lo && t < hi)
    }

    /// `c(t) = -(ħ/2) Ω(t)` for each drive, in meV.
    fn coefficients(&self, t: f64) -> impl Iterator<Item = (&Drive, C64)> {
        let active = self.drive_active(t);
        self.drives
            .iter()
            .filter(move |_| active)
            .map(move |d| (d, envelope(&d.pulse, t) * (-0.5 * HBAR_MEV_PS)))
    }

    /// Schrödinger picture: `out = L(t) ρ`.
    pub fn apply(&self, t: f64, rho: &[C64], out: &mut [C64]) {
        let n = self.dim;
        out.fill(C64::new(0.0, 0.0));
        self.h_eff.left_acc(n, rho, out, NEG_I_OVER_HBAR);
        self.h_eff_dag.right_acc(n, rho, out, -NEG_I_OVER_HBAR);
        for (d, c) in self.coefficients(t) {
            d.raising.left_acc(n, rho, out, NEG_I_OVER_HBAR * c);
            d.lowering.left_acc(n, rho, out, NEG_I_OVER_HBAR * c.conj());
            d.raising.right_acc(n, rho, out, -NEG_I_OVER_HBAR * c);
            d.lowering.right_acc(n, rho, out, -NEG_I_OVER_HBAR * c.conj());
        }
        for j in &self.jumps {
            let e = &j.op.entries;
            for &(i, a_j, a) in e {
                for &(k, l, b) in e {
                    out[i * n + k] += a * rho[a_j * n + l] * b.conj();
                }
            }
        }
    }

    /// Heisenberg picture: `out = L†(t) O`, so that `tr[O L ρ] = tr[(L† O) ρ]`.
    pub fn apply_adjoint(&self, t: f64, op: &[C64], out: &mut [C64]) {
        let n = self.dim;
        out.fill(C64::new(0.0, 0.0));
        // (i/ħ)(H_eff† O - O H_eff)
        self.h_eff_dag.left_acc(n, op, out, -NEG_I_OVER_HBAR);
        self.h_eff.right_acc(n, op, out, NEG_I_OVER_HBAR);
        for (d, c) in self.coefficients(t) {
            d.raising.left_acc(n, op, out, -NEG_I_OVER_HBAR * c);
            d.lowering.left_acc(n, op, out, -NEG_I_OVER_HBAR * c.conj());
            d.raising.right_acc(n, op, out, NEG_I_OVER_HBAR * c);
            d.lowering.right_acc(n, op, out, NEG_I_OVER_HBAR * c.conj());
        }
        for j in &self.jumps {
            let e = &j.op.entries;
            // (O† X O)_{ik} = Σ conj(O_ji) X_jl O_lk
            for &(jj, i, a) in e {
                for &(l, k, b) in e {
                    out[i * n + k] += a.conj() * op[jj * n + l] * b;
                }
            }
        }
    }

    /// Pure-state right-hand side `-(i/ħ) H_eff(t) ψ` (no quantum jumps).
    pub fn apply_schrodinger(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        out.fill(C64::new(0.0, 0.0));
        self.h_eff.mul_vec_acc(psi, out, NEG_I_OVER_HBAR);
        for (d, c) in self.coefficients(t) {
            d.raising.mul_vec_acc(psi, out, NEG_I_OVER_HBAR * c);
            d.lowering.mul_vec_acc(psi, out, NEG_I_OVER_HBAR * c.conj());
        }
    }
}

pub(crate) fn flatten(m: &DMatrix<C64>) -> Vec<C64> {
    let n = m.nrows();
    let mut v = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            v.push(m[(i, j)]);
        }
    }
    v
}

pub(crate) fn unflatten(v: &[C64], dim: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |i, j| v[i * dim + j])
}

/// `tr[A X]` for row-major flat matrices.
pub(crate) fn trace_product(a: &[C64], x: &[C64], dim: usize) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for i in 0..dim {
        for j in 0..dim {
            s += a[i * dim + j] * x[j * dim + i];
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Scenario;

    fn dense_lindblad(model: &SystemModel, t: f64, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let h = model.hamiltonian_at(t);
        let h = h.matrix();
        let mut out = (h * rho - rho * h) * C64::new(0.0, -1.0 / HBAR_MEV_PS);
        for d in &model.dissipators {
            let o = d.op.matrix();
            let od = o.adjoint();
            out += (o * rho * &od * C64::new(2.0, 0.0) - &od * o * rho - rho * &od * o) * C64::new(d.rate / 2.0, 0.0);
        }
        out
    }

    fn random_matrix(n: usize, seed: u64) -> DMatrix<C64> {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        DMatrix::from_fn(n, n, |_, _| C64::new(next(), next()))
    }

    #[test]
    fn sparse_matches_dense_generator() {
        let sc = Scenario::table1_super(true);
        let model = sc.system().unwrap();
        let l = Liouvillian::new(&model);
        let n = model.space.dim();
        let rho = random_matrix(n, 7);
        for &t in &[0.0, 9.0, 10.0, 14.0, 100.0] {
            let mut out = vec![C64::new(0.0, 0.0); n * n];
            l.apply(t, &flatten(&rho), &mut out);
            let dense = dense_lindblad(&model, t, &rho);
            let diff = (unflatten(&out, n) - dense).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(diff < 1e-11, "t={t} diff={diff:e}");
        }
    }

    #[test]
    fn adjoint_duality() {
        let sc = Scenario::table1_tpe(4.0, true);
        let model = sc.system().unwrap();
        let l = Liouvillian::new(&model);
        let n = model.space.dim();
        let rho = flatten(&random_matrix(n, 3));
        let op = flatten(&random_matrix(n, 11));
        let mut lr = vec![C64::new(0.0, 0.0); n * n];
        let mut lo = vec![C64::new(0.0, 0.0); n * n];
        for &t in &[5.0, 10.0, 40.0] {
            l.apply(t, &rho, &mut lr);
            l.apply_adjoint(t, &op, &mut lo);
            let a = trace_product(&op, &lr, n);
            let b = trace_product(&lo, &rho, n);
            assert!((a - b).norm() < 1e-11, "{a} vs {b}");
        }
    }

    #[test]
    fn generator_is_trace_free() {
        let sc = Scenario::table1_super(true);
        let model = sc.system().unwrap();
        let l = Liouvillian::new(&model);
        let n = model.space.dim();
        let rho = flatten(&random_matrix(n, 5));
        let mut out = vec![C64::new(0.0, 0.0); n * n];
        l.apply(10.0, &rho, &mut out);
        let tr: C64 = (0..n).map(|i| out[i * n + i]).sum();
        assert!(tr.norm() < 1e-12);
    }
}
