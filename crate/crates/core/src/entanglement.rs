//! Wootters concurrence of a two-photon polarization density matrix.

use nalgebra::{Matrix4, SymmetricEigen};
use serde::Serialize;

use crate::error::{CascadeError, Result};
use crate::hilbert::C64;

/// Eigenvalues of ρ below zero but above `-RHO_CLAMP` are treated as noise.
pub const RHO_CLAMP: f64 = 1e-6;
/// Negative eigenvalues of `M` above `-M_CLAMP` are set to zero.
pub const M_CLAMP: f64 = 1e-10;

/// 4×4 density matrix over the ordered pair basis (XX, XY, YX, YY).
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonMatrix {
    pub rho: Matrix4<C64>,
}

impl TwoPhotonMatrix {
    pub fn new(rho: Matrix4<C64>) -> Self {
        TwoPhotonMatrix { rho }
    }

    /// `|ψ⟩⟨ψ|` for amplitudes over (XX, XY, YX, YY).
    pub fn pure(amplitudes: [C64; 4]) -> Self {
        let v = nalgebra::Vector4::from(amplitudes);
        TwoPhotonMatrix { rho: v * v.adjoint() }
    }

    /// `|Φ⁺⟩⟨Φ⁺|` with `|Φ⁺⟩ = (|XX⟩ + |YY⟩)/√2`.
    pub fn phi_plus() -> Self {
        let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let z = C64::new(0.0, 0.0);
        Self::pure([s, z, z, s])
    }

    pub fn maximally_mixed() -> Self {
        TwoPhotonMatrix {
            rho: Matrix4::identity() * C64::new(0.25, 0.0),
        }
    }

    /// `p|Φ⁺⟩⟨Φ⁺| + (1-p) I/4`
    pub fn werner(p: f64) -> Self {
        TwoPhotonMatrix {
            rho: Self::phi_plus().rho * C64::new(p, 0.0)
                + Self::maximally_mixed().rho * C64::new(1.0 - p, 0.0),
        }
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    /// `⟨Φ⁺|ρ|Φ⁺⟩`
    pub fn fidelity_phi_plus(&self) -> f64 {
        let r = &self.rho;
        0.5 * (r[(0, 0)] + r[(0, 3)] + r[(3, 0)] + r[(3, 3)]).re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (self.rho + self.rho.adjoint()) * C64::new(0.5, 0.0);
        SymmetricEigen::new(herm)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcurrenceResult {
    pub value: f64,
    /// `√λ_i` in decreasing order.
    pub sqrt_lambdas: [f64; 4],
    /// Most negative eigenvalue of ρ that was clamped to zero (0 if none).
    pub clamped_rho_eigenvalue: f64,
    /// Most negative eigenvalue of `M` that was clamped to zero (0 if none).
    pub clamped_m_eigenvalue: f64,
}

/// Spin-flip matrix `T`: anti-diagonal with entries (-1, 1, 1, -1).
pub fn spin_flip() -> Matrix4<C64> {
    let mut t = Matrix4::zeros();
    t[(0, 3)] = C64::new(-1.0, 0.0);
    t[(1, 2)] = C64::new(1.0, 0.0);
    t[(2, 1)] = C64::new(1.0, 0.0);
    t[(3, 0)] = C64::new(-1.0, 0.0);
    t
}

/// `M = ρ T ρ* T`, conjugation taken in the (XX, XY, YX, YY) basis.
pub fn wootters_matrix(rho: &Matrix4<C64>) -> Matrix4<C64> {
    let t = spin_flip();
    rho * t * rho.map(|z| z.conj()) * t
}

pub fn concurrence(rho2p: &TwoPhotonMatrix) -> Result<ConcurrenceResult> {
    let rho = &rho2p.rho;
    if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(CascadeError::NonFinite("two-photon matrix".into()));
    }
    let trace = rho.trace();
    if (trace.re - 1.0).abs() > 1e-6 || trace.im.abs() > 1e-6 {
        return Err(CascadeError::NotNormalized(trace.re));
    }

    // Positivity repair on ρ, then √ρ from the same decomposition.
    let herm = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let mut clamped_rho = 0.0f64;
    let mut sqrt_vals = [0.0; 4];
    let mut vals = [0.0; 4];
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l < 0.0 {
            if l < -RHO_CLAMP {
                return Err(CascadeError::InvalidState(format!(
                    "two-photon matrix eigenvalue {l:e} is negative beyond clamp"
                )));
            }
            clamped_rho = clamped_rho.min(l);
        }
        vals[k] = l.max(0.0);
        sqrt_vals[k] = vals[k].sqrt();
    }
    let v = &eig.eigenvectors;
    let diag = |d: [f64; 4]| Matrix4::from_diagonal(&nalgebra::Vector4::from(d.map(|x| C64::new(x, 0.0))));
    let rho_pos = v * diag(vals) * v.adjoint();
    let sqrt_rho = v * diag(sqrt_vals) * v.adjoint();

    // M = ρ ρ̃ (ρ̃ = T ρ* T) shares its spectrum with √ρ ρ̃ √ρ = A A†,
    // A = √ρ T √ρ* T, so √λ are the singular values of A.
    let t = spin_flip();
    let flipped = t * rho_pos.map(|z| z.conj()) * t;
    let k = sqrt_rho * flipped * sqrt_rho;
    let k = (k + k.adjoint()) * C64::new(0.5, 0.0);
    let min_m = SymmetricEigen::new(k).eigenvalues.iter().copied().fold(0.0f64, f64::min);
    if min_m < -M_CLAMP {
        return Err(CascadeError::InvalidState(format!(
            "eigenvalue {min_m:e} of the Wootters matrix is negative beyond clamp"
        )));
    }
    let a = sqrt_rho * t * sqrt_rho.map(|z| z.conj()) * t;
    let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let s = [sv[0], sv[1], sv[2], sv[3]];
    let clamped_m = min_m;
    let value = (s[0] - s[1] - s[2] - s[3]).clamp(0.0, 1.0);
    Ok(ConcurrenceResult {
        value,
        sqrt_lambdas: s,
        clamped_rho_eigenvalue: clamped_rho,
        clamped_m_eigenvalue: clamped_m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Eigenvalues of a general 4×4 complex matrix from its characteristic
    /// polynomial (Faddeev–LeVerrier) and Durand–Kerner root polishing.
    fn brute_eigenvalues(m: &Matrix4<C64>) -> [C64; 4] {
        let id = Matrix4::<C64>::identity();
        let mut coeffs = [C64::new(1.0, 0.0); 5];
        let mut mk = Matrix4::<C64>::zeros();
        for k in 1..=4 {
            mk = m * mk + id * coeffs[k - 1];
            coeffs[k] = -(m * mk).trace() / C64::new(k as f64, 0.0);
        }
        let poly = |z: C64| coeffs.iter().fold(C64::new(0.0, 0.0), |acc, c| acc * z + c);
        let mut roots = [
            C64::new(0.4, 0.9),
            C64::new(0.4, 0.9).powu(2),
            C64::new(0.4, 0.9).powu(3),
            C64::new(0.4, 0.9).powu(4),
        ];
        for _ in 0..500 {
            for i in 0..4 {
                let mut denom = C64::new(1.0, 0.0);
                for j in 0..4 {
                    if i != j {
                        denom *= roots[i] - roots[j];
                    }
                }
                roots[i] -= poly(roots[i]) / denom;
            }
        }
        roots
    }

    fn werner_closed_form(p: f64) -> f64 {
        ((3.0 * p - 1.0) / 2.0).max(0.0)
    }

    #[test]
    fn bell_state_is_maximal() {
        let c = concurrence(&TwoPhotonMatrix::phi_plus()).unwrap();
        assert!((c.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixed_state_is_separable() {
        let c = concurrence(&TwoPhotonMatrix::maximally_mixed()).unwrap();
        assert!(c.value.abs() < 1e-12);
    }

    #[test]
    fn werner_half() {
        let w = TwoPhotonMatrix::werner(0.5);
        let c = concurrence(&w).unwrap();
        // oracle: eigenvalues of M computed directly, without √ρ similarity
        let mut lam: Vec<f64> = brute_eigenvalues(&wootters_matrix(&w.rho))
            .iter()
            .map(|z| z.re.max(0.0))
            .collect();
        lam.sort_by(|a, b| b.total_cmp(a));
        let brute = (lam[0].sqrt() - lam[1].sqrt() - lam[2].sqrt() - lam[3].sqrt()).max(0.0);
        assert!((brute - 0.25).abs() < 1e-8);
        assert!((werner_closed_form(0.5) - 0.25).abs() < 1e-15);
        assert!((c.value - 0.25).abs() < 1e-8);
    }

    #[test]
    fn werner_monotone_and_closed_form() {
        let mut prev = -1.0;
        for k in 0..=100 {
            let p = k as f64 / 100.0;
            let c = concurrence(&TwoPhotonMatrix::werner(p)).unwrap().value;
            assert!((c - werner_closed_form(p)).abs() < 1e-8, "p={p} c={c}");
            assert!(c >= prev - 1e-12);
            prev = c;
        }
    }

    #[test]
    fn product_state_zero() {
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let c = concurrence(&TwoPhotonMatrix::pure([one, z, z, z])).unwrap();
        assert_eq!(c.value, 0.0);
    }

    #[test]
    fn rejects_unnormalized_and_nan() {
        let mut w = TwoPhotonMatrix::werner(0.3);
        w.rho *= C64::new(2.0, 0.0);
        assert!(matches!(concurrence(&w), Err(CascadeError::NotNormalized(_))));
        let mut w = TwoPhotonMatrix::werner(0.3);
        w.rho[(1, 2)] = C64::new(f64::NAN, 0.0);
        assert!(matches!(concurrence(&w), Err(CascadeError::NonFinite(_))));
    }

    #[test]
    fn sqrt_lambdas_sorted() {
        let c = concurrence(&TwoPhotonMatrix::werner(0.8)).unwrap();
        assert!(c.sqrt_lambdas.windows(2).all(|w| w[0] >= w[1]));
        assert!(c.sqrt_lambdas.iter().all(|&s| s >= 0.0));
    }

    #[test]
    fn brute_force_agrees_on_random_states() {
        let mut seed = 17u64;
        let mut rnd = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for _ in 0..20 {
            let a = Matrix4::from_fn(|_, _| C64::new(rnd(), rnd()));
            let rho = a * a.adjoint();
            let rho = rho / rho.trace();
            let c = concurrence(&TwoPhotonMatrix::new(rho)).unwrap();
            let mut lam: Vec<f64> = brute_eigenvalues(&wootters_matrix(&rho))
                .iter()
                .map(|z| z.re.max(0.0))
                .collect();
            lam.sort_by(|a, b| b.total_cmp(a));
            let brute = (lam[0].sqrt() - lam[1].sqrt() - lam[2].sqrt() - lam[3].sqrt()).max(0.0);
            assert!((c.value - brute).abs() < 1e-8, "{} vs {}", c.value, brute);
        }
    }
}
