//! Acceptance checks. Prints one PASS/FAIL line per criterion.
//!
//! Exits 0 even when a criterion fails so the full report is always visible;
//! set `ACCEPTANCE_STRICT=1` to turn failures into a nonzero exit.

use std::path::PathBuf;
use std::time::Instant;

use cascade::correlations::{g2, normally_ordered, two_photon_matrix, CorrelationGrid, Labels};
use cascade::dynamics::{diagnose, evolve, TimeGrid};
use cascade::entanglement::{concurrence, TwoPhotonMatrix};
use cascade::experiments::{
    resolve_scenario, run_concurrence, run_map, run_sweep_g, validate_truncation, ExperimentConfig, GridScale,
    MapRow, SweepRow,
};
use cascade::hilbert::{DotLevel, Mode, Truncation};
use cascade::model::Scenario;
use cascade::ode::Tolerance;
use cascade::optimizer::{optimize_second_pulse, SearchSpec};
use cascade::Result;

struct Report {
    passed: usize,
    failed: Vec<String>,
}

impl Report {
    fn check(&mut self, name: &str, ok: bool, detail: String) {
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if ok {
            self.passed += 1;
        } else {
            self.failed.push(name.to_string());
        }
    }

    fn run(&mut self, name: &str, f: impl FnOnce() -> Result<(bool, String)>) {
        let start = Instant::now();
        match f() {
            Ok((ok, detail)) => self.check(name, ok, format!("{detail} [{:.1?}]", start.elapsed())),
            Err(e) => self.check(name, false, format!("error: {e}")),
        }
    }
}

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::load(&path).expect("config loads").0
}

fn benchmark(r: &mut Report, name: &str, file: &str, target: f64, tol: f64) {
    r.run(name, || {
        let rep = run_concurrence(&config(file))?;
        let c = rep.concurrence.value;
        Ok((
            (c - target).abs() <= tol,
            format!("C = {c:.5} ({}), target {target} ± {tol}", rep.truncation),
        ))
    });
}

fn concurrence_of(sc: &Scenario, rho0: &nalgebra::DMatrix<cascade::hilbert::C64>, grid: &CorrelationGrid) -> Result<f64> {
    Ok(concurrence(&two_photon_matrix(sc, rho0, grid)?.matrix)?.value)
}

fn benchmarks(r: &mut Report) {
    benchmark(r, "benchmark tpe without cavity", "tpe_free.toml", 0.951, 0.005);
    benchmark(r, "benchmark tpe in cavity", "tpe_cavity.toml", 0.694, 0.01);
    benchmark(r, "benchmark super in cavity", "super_cavity.toml", 0.999, 0.005);
    benchmark(r, "benchmark super without cavity", "super_free.toml", 0.931, 0.01);
}

fn initial_value_oracle(r: &mut Report) {
    r.run("biexciton initial state in cavity", || {
        let mut sc = Scenario::table1_super(true);
        sc.pulses.clear();
        let res = two_photon_matrix(&sc, &sc.biexciton_density()?, &CorrelationGrid::for_scenario(&sc))?;
        let c = concurrence(&res.matrix)?.value;
        let f = res.matrix.fidelity_phi_plus();
        Ok(((c - 1.0).abs() < 1e-3 && f >= 0.999, format!("C = {c:.6}, fidelity {f:.6}")))
    });
}

fn maps(r: &mut Report) {
    let fig2 = config("map_fig2.toml");
    let fig5 = config("map_fig5.toml");
    let same_search = fig2.search_spec() == fig5.search_spec()
        && fig2.map_axes(GridScale::Coarse) == fig5.map_axes(GridScale::Coarse);
    let start = Instant::now();
    let rows = match run_map(&fig2, GridScale::Coarse, true) {
        Ok(rows) => rows,
        Err(e) => {
            r.check("map fig2", false, format!("error: {e}"));
            return;
        }
    };
    let elapsed = start.elapsed();
    for row in &rows {
        let o = row.optimum.as_ref();
        println!(
            "  cell Δ_B = {} α₁ = {}π: B = {:.4} α₂ = {:.3}π Δ₂ = {:.3} C = {:.5}",
            row.delta_b_mev,
            row.alpha1_pi,
            o.map_or(f64::NAN, |o| o.b_final),
            o.map_or(f64::NAN, |o| o.alpha2_pi),
            o.map_or(f64::NAN, |o| o.delta2_mev),
            row.concurrence.unwrap_or(f64::NAN)
        );
    }
    let failed: Vec<&MapRow> = rows.iter().filter(|c| c.error.is_some()).collect();
    r.check(
        "map cells all succeed",
        failed.is_empty(),
        format!("{} of {} cells failed [{elapsed:.1?}]", failed.len(), rows.len()),
    );

    let low: Vec<f64> = rows
        .iter()
        .filter(|c| c.delta_b_mev <= 2.0)
        .map(|c| c.concurrence.unwrap_or(f64::NAN))
        .collect();
    let min_c = low.iter().copied().fold(f64::INFINITY, f64::min);
    r.check(
        "map fig2 concurrence for small binding energy",
        low.iter().all(|&c| c > 0.99),
        format!("min C over {} cells with Δ_B ≤ 2 meV = {min_c:.5}", low.len()),
    );

    let b = |c: &MapRow| c.optimum.as_ref().map_or(f64::NAN, |o| o.b_final);
    let plateau: Vec<f64> = rows
        .iter()
        .filter(|c| c.alpha1_pi >= 25.0 && c.delta_b_mev <= 2.0)
        .map(b)
        .collect();
    let plateau_min = plateau.iter().copied().fold(f64::INFINITY, f64::min);
    r.check(
        "map fig5 plateau",
        same_search && !plateau.is_empty() && plateau.iter().all(|&v| v >= 0.85),
        format!("min B over {} cells with α₁ ≥ 25π, Δ_B ≤ 2 meV = {plateau_min:.4}", plateau.len()),
    );

    let (lo, hi) = {
        let db: Vec<f64> = rows.iter().map(|c| c.delta_b_mev).collect();
        (
            db.iter().copied().fold(f64::INFINITY, f64::min),
            db.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    };
    let dip: Vec<(f64, f64, f64)> = rows
        .iter()
        .filter(|c| c.delta_b_mev > lo && c.delta_b_mev < hi && c.alpha1_pi >= 25.0)
        .map(|c| (c.delta_b_mev, c.alpha1_pi, b(c)))
        .filter(|&(_, _, v)| (0.70..=0.80).contains(&v))
        .collect();
    r.check(
        "map fig5 dip at intermediate binding energy",
        !dip.is_empty(),
        format!("cells with 0.70 ≤ B ≤ 0.80: {dip:?}"),
    );

    let weak: Vec<f64> = rows.iter().filter(|c| c.alpha1_pi <= 10.0).map(b).collect();
    let weak_max = weak.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    r.check(
        "map fig5 drop for weak first pulse",
        !weak.is_empty() && weak_max < 0.5,
        format!("max B over {} cells with α₁ ≤ 10π = {weak_max:.4}", weak.len()),
    );
}

fn sweep_curve(rows: &[SweepRow]) -> Vec<(f64, f64)> {
    rows.iter()
        .filter_map(|r| r.concurrence.map(|c| (r.g_mev, c)))
        .collect()
}

fn non_increasing(points: &[(f64, f64)], slack: f64) -> bool {
    points.windows(2).all(|w| w[1].1 <= w[0].1 + slack)
}

fn sweeps(r: &mut Report) {
    let start = Instant::now();
    match run_sweep_g(&config("sweep_g_super.toml")) {
        Ok(rows) => {
            let curve = sweep_curve(&rows);
            println!("  super sweep (g, C): {curve:.5?} [{:.1?}]", start.elapsed());
            let plateau: Vec<(f64, f64)> = curve.iter().copied().filter(|p| (0.03..=0.2).contains(&p.0)).collect();
            let min = plateau.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
            r.check(
                "sweep super plateau",
                !plateau.is_empty() && plateau.iter().all(|p| p.1 > 0.99),
                format!("min C for g in [0.03, 0.2] meV = {min:.5}"),
            );
            let tail: Vec<(f64, f64)> = curve.iter().copied().filter(|p| p.0 >= 0.2).collect();
            r.check(
                "sweep super decline",
                tail.len() >= 2 && non_increasing(&tail, 1e-4) && tail[tail.len() - 1].1 < tail[0].1,
                format!("C from {:.5} to {:.5} over g ≥ 0.2 meV", tail[0].1, tail[tail.len() - 1].1),
            );
        }
        Err(e) => r.check("sweep super", false, format!("error: {e}")),
    }

    let start = Instant::now();
    match run_sweep_g(&config("sweep_g_tpe.toml")) {
        Ok(rows) => {
            let curve = sweep_curve(&rows);
            println!("  tpe sweep (g, C): {curve:.5?} [{:.1?}]", start.elapsed());
            let at_end = curve.iter().find(|p| (p.0 - 0.5).abs() < 1e-12).map_or(f64::NAN, |p| p.1);
            r.check(
                "sweep tpe decline",
                non_increasing(&curve, 1e-4) && at_end < 0.1,
                format!("C non-increasing in g, C(0.5 meV) = {at_end:.5}"),
            );
        }
        Err(e) => r.check("sweep tpe", false, format!("error: {e}")),
    }
}

fn truncation(r: &mut Report) {
    let start = Instant::now();
    let report = match validate_truncation(&config("truncation_fig7.toml")) {
        Ok(rep) => rep,
        Err(e) => {
            r.check("truncation", false, format!("error: {e}"));
            return;
        }
    };
    println!("  truncation run [{:.1?}]", start.elapsed());
    for e in &report.entries {
        println!("  {} (dim {}): C = {:.5}", e.truncation, e.dim, e.concurrence);
    }
    let worst = report
        .comparisons
        .iter()
        .max_by(|a, b| a.max_photon_deviation.total_cmp(&b.max_photon_deviation))
        .expect("three truncations");
    r.check(
        "truncation photon numbers agree",
        worst.max_photon_deviation < 0.02,
        format!(
            "largest |ΔN| = {:.5} ({} vs {}) at t = {:.1} ps",
            worst.max_photon_deviation, worst.a, worst.b, worst.time_of_max_photon_deviation
        ),
    );
    match report.comparison(Truncation::Reduced18, Truncation::Full(2)) {
        Some(c) => r.check(
            "truncation concurrence reduced18 vs full2",
            c.concurrence_difference < 0.005,
            format!("|ΔC| = {:.5}", c.concurrence_difference),
        ),
        None => r.check("truncation concurrence reduced18 vs full2", false, "comparison missing".into()),
    }
}

fn properties(r: &mut Report) {
    r.run("density matrix stays physical", || {
        let sc = Scenario::table1_tpe(2.585, true);
        let grid = TimeGrid {
            retain_states: true,
            ..TimeGrid::for_scenario(&sc)
        };
        let traj = evolve(&sc.ground_density()?, &sc, &grid)?;
        let states = traj.states.as_ref().expect("retained");
        let (mut trace, mut herm, mut neg) = (0.0f64, 0.0f64, 0.0f64);
        for rho in states {
            let d = diagnose(rho);
            trace = trace.max((d.trace - 1.0).abs());
            herm = herm.max(d.hermiticity_defect);
            neg = neg.min(d.min_eigenvalue);
        }
        Ok((
            trace < 1e-6 && herm < 1e-9 && neg > -1e-8,
            format!("max |tr-1| = {trace:.2e}, hermiticity {herm:.2e}, min eigenvalue {neg:.2e}"),
        ))
    });

    r.run("x-y symmetry", || {
        let sc = Scenario::table1_super(true);
        let traj = evolve(&sc.ground_density()?, &sc, &TimeGrid::for_scenario(&sc))?;
        let occ = traj
            .observables
            .iter()
            .map(|o| {
                (o.occupation(DotLevel::X) - o.occupation(DotLevel::Y))
                    .abs()
                    .max((o.photon_number(Mode::X) - o.photon_number(Mode::Y)).abs())
            })
            .fold(0.0, f64::max);
        let m = two_photon_matrix(&sc, &sc.ground_density()?, &CorrelationGrid::for_scenario(&sc))?.matrix.rho;
        let swap = |i: usize| 3 - i;
        let mat = (0..16)
            .map(|k| (m[(k / 4, k % 4)] - m[(swap(k / 4), swap(k % 4))]).norm())
            .fold(0.0, f64::max);
        Ok((
            occ < 1e-7 && mat < 1e-7,
            format!("occupation/photon asymmetry {occ:.2e}, matrix asymmetry {mat:.2e}"),
        ))
    });

    r.run("tolerance halving", || {
        let sc = Scenario::table1_super(true);
        let grid = TimeGrid::for_scenario(&sc);
        let fine = TimeGrid {
            tol: Tolerance {
                rtol: grid.tol.rtol / 2.0,
                atol: grid.tol.atol / 2.0,
            },
            ..grid
        };
        let a = evolve(&sc.ground_density()?, &sc, &grid)?;
        let b = evolve(&sc.ground_density()?, &sc, &fine)?;
        let d = DotLevel::ALL
            .iter()
            .map(|&l| (a.last().occupation(l) - b.last().occupation(l)).abs())
            .fold(0.0, f64::max);
        Ok((d < 1e-5, format!("max final population change {d:.2e}")))
    });

    r.run("qrt zero delay consistency", || {
        let sc = Scenario::table1_tpe(2.585, true);
        let grid = TimeGrid {
            retain_states: true,
            ..TimeGrid::new(sc.default_start(), 40.0, 1.0)
        };
        let traj = evolve(&sc.ground_density()?, &sc, &grid)?;
        let space = sc.space()?;
        let mut worst = 0.0f64;
        for &k in &[5usize, 15, 25, 35] {
            let t = traj.times[k];
            for l in Labels::all() {
                let direct = g2(&sc, &traj, l, t, 0.0, Tolerance::default())?;
                let expect = normally_ordered(traj.state_at(t)?, l, &space);
                worst = worst.max((direct - expect).norm());
            }
        }
        Ok((worst < 1e-10, format!("max |G²(t,0) - ⟨a†b†dc⟩| = {worst:.2e}")))
    });

    r.run("concurrence reference states", || {
        let bell = concurrence(&TwoPhotonMatrix::phi_plus())?.value;
        let mixed = concurrence(&TwoPhotonMatrix::maximally_mixed())?.value;
        let werner = (0..=100)
            .map(|k| {
                let p = k as f64 / 100.0;
                let exact = ((3.0 * p - 1.0) / 2.0).max(0.0);
                concurrence(&TwoPhotonMatrix::werner(p)).map(|c| (c.value - exact).abs())
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        Ok((
            (bell - 1.0).abs() < 1e-12 && mixed.abs() < 1e-12 && werner < 1e-8,
            format!("Bell {bell:.12}, mixed {mixed:.2e}, Werner max error {werner:.2e}"),
        ))
    });

    r.run("grid halving convergence", || {
        let (sc, _) = resolve_scenario(&config("tpe_cavity.toml"))?;
        let sc = Scenario {
            truncation: Truncation::Reduced18,
            ..sc
        };
        let grid = CorrelationGrid::for_scenario(&sc);
        let rho0 = sc.ground_density()?;
        let coarse = concurrence_of(&sc, &rho0, &grid)?;
        let fine = concurrence_of(&sc, &rho0, &grid.refined())?;
        Ok((
            (coarse - fine).abs() < 1e-3,
            format!("C = {coarse:.6} vs {fine:.6} on the halved grid"),
        ))
    });

    r.run("optimizer determinism and seed dominance", || {
        let spec = SearchSpec::reference();
        let a = optimize_second_pulse(&spec)?;
        let b = optimize_second_pulse(&spec)?;
        let same = a == b;
        let dominant = a.b_final >= a.seed_best.b_final && a.refined.iter().all(|c| a.b_final >= c.b_final);
        Ok((
            same && dominant,
            format!(
                "B = {:.5} at α₂ = {:.3}π, Δ₂ = {:.3} meV (seed best {:.5}), repeat identical: {same}",
                a.b_final, a.alpha2_pi, a.delta2_mev, a.seed_best.b_final
            ),
        ))
    });
}

fn main() {
    let mut r = Report {
        passed: 0,
        failed: Vec::new(),
    };
    let start = Instant::now();
    benchmarks(&mut r);
    initial_value_oracle(&mut r);
    properties(&mut r);
    sweeps(&mut r);
    truncation(&mut r);
    maps(&mut r);
    println!(
        "acceptance: {} passed, {} failed {:?} [{:.1?}]",
        r.passed,
        r.failed.len(),
        r.failed,
        start.elapsed()
    );
    if !r.failed.is_empty() && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
