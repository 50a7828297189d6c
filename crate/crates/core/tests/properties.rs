use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

use cascade::dynamics::{diagnose, evolve, TimeGrid};
use cascade::entanglement::{concurrence, TwoPhotonMatrix};
use cascade::hilbert::{DotLevel, Mode, Truncation};
use cascade::model::{PulseParams, Scenario};

fn unitary(theta: f64, phi: f64, chi: f64) -> Matrix2<C64> {
    let (c, s) = (theta.cos(), theta.sin());
    let e = |x: f64| C64::from_polar(1.0, x);
    Matrix2::new(e(phi) * c, e(chi) * s, -e(-chi) * s, e(-phi) * c)
}

fn kron(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|i, j| a[(i / 2, j / 2)] * b[(i % 2, j % 2)])
}

fn density(entries: &[f64]) -> Matrix4<C64> {
    let g = Matrix4::from_fn(|i, j| C64::new(entries[4 * i + j], entries[16 + 4 * i + j]));
    let rho = g * g.adjoint();
    rho / rho.trace()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn concurrence_is_local_unitary_invariant(
        entries in prop::collection::vec(-1.0f64..1.0, 32),
        angles in prop::collection::vec(-3.2f64..3.2, 6),
    ) {
        let rho = density(&entries);
        let u = kron(&unitary(angles[0], angles[1], angles[2]), &unitary(angles[3], angles[4], angles[5]));
        let a = concurrence(&TwoPhotonMatrix::new(rho)).unwrap().value;
        let b = concurrence(&TwoPhotonMatrix::new(u * rho * u.adjoint())).unwrap().value;
        prop_assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn pure_state_concurrence_is_twice_the_determinant(
        re in prop::collection::vec(-1.0f64..1.0, 4),
        im in prop::collection::vec(-1.0f64..1.0, 4),
    ) {
        let mut amp: Vec<C64> = (0..4).map(|k| C64::new(re[k], im[k])).collect();
        let norm = amp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        amp.iter_mut().for_each(|z| *z /= norm);
        let exact = 2.0 * (amp[0] * amp[3] - amp[1] * amp[2]).norm();
        let c = concurrence(&TwoPhotonMatrix::pure([amp[0], amp[1], amp[2], amp[3]])).unwrap().value;
        prop_assert!((c - exact).abs() < 1e-9, "{c} vs {exact}");
    }
}

fn short_scenario(truncation: Truncation, pulses: Vec<PulseParams>) -> Scenario {
    let mut sc = Scenario::table1_super(true);
    sc.truncation = truncation;
    sc.pulses = pulses;
    sc
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn driven_density_stays_physical(
        alpha in 1.0f64..20.0,
        delta in -10.0f64..0.0,
        full in any::<bool>(),
    ) {
        let tr = if full { Truncation::Full(2) } else { Truncation::Reduced18 };
        let sc = short_scenario(tr, vec![PulseParams::diagonal(alpha, 2.7, delta, 10.0)]);
        let grid = TimeGrid { retain_states: true, ..TimeGrid::new(sc.default_start(), 60.0, 2.0) };
        let traj = evolve(&sc.ground_density().unwrap(), &sc, &grid).unwrap();
        for (t, rho) in traj.times.iter().zip(traj.states.as_ref().unwrap()) {
            let d = diagnose(rho);
            prop_assert!((d.trace - 1.0).abs() < 1e-6, "trace {} at {t}", d.trace);
            prop_assert!(d.hermiticity_defect < 1e-9, "hermiticity {} at {t}", d.hermiticity_defect);
            prop_assert!(d.min_eigenvalue > -1e-8, "eigenvalue {} at {t}", d.min_eigenvalue);
        }
        for o in &traj.observables {
            prop_assert!((o.occupation(DotLevel::X) - o.occupation(DotLevel::Y)).abs() < 1e-7);
            prop_assert!((o.photon_number(Mode::X) - o.photon_number(Mode::Y)).abs() < 1e-7);
        }
    }
}

#[test]
fn mixed_initial_state_is_preserved_without_drive_or_decay() {
    let mut sc = short_scenario(Truncation::DotOnly, vec![]);
    sc.cavity = None;
    sc.decay = cascade::model::DecayParams::none();
    let mut rho0 = DMatrix::<C64>::zeros(4, 4);
    for (i, p) in [0.4, 0.3, 0.2, 0.1].iter().enumerate() {
        rho0[(i, i)] = C64::new(*p, 0.0);
    }
    let traj = evolve(&rho0, &sc, &TimeGrid::new(0.0, 50.0, 5.0)).unwrap();
    let last = traj.last();
    for (level, p) in DotLevel::ALL.iter().zip([0.4, 0.3, 0.2, 0.1]) {
        assert!((last.occupation(*level) - p).abs() < 1e-9);
    }
}
