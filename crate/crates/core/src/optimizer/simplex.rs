//! Nelder–Mead on a box, with trial points clamped onto the bounds.

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Stop when the simplex edge (in box-normalized units) falls below this.
    pub xtol: f64,
    /// Stop when the vertex values spread by less than this.
    pub ftol: f64,
    pub max_evals: usize,
    /// Initial edge length in box-normalized units.
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            xtol: 1e-7,
            ftol: 1e-11,
            max_evals: 400,
            initial_step: 0.03,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Maximizes `f` over the box `lo ≤ x ≤ hi` starting at `x0`.
pub fn maximize<F>(mut f: F, x0: &[f64], lo: &[f64], hi: &[f64], opts: SimplexOptions) -> Result<SimplexResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let n = x0.len();
    let span: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| (b - a).max(f64::MIN_POSITIVE)).collect();
    let to_box = |u: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| (lo[i] + u[i].clamp(0.0, 1.0) * span[i]).clamp(lo[i], hi[i]))
            .collect()
    };
    let mut evals = 0usize;
    let mut eval = |u: &[f64], evals: &mut usize| -> Result<f64> {
        *evals += 1;
        Ok(-f(&to_box(u))?)
    };

    let u0: Vec<f64> = (0..n).map(|i| ((x0[i] - lo[i]) / span[i]).clamp(0.0, 1.0)).collect();
    let mut pts = vec![u0.clone()];
    for i in 0..n {
        let mut p = u0.clone();
        p[i] = if p[i] + opts.initial_step <= 1.0 {
            p[i] + opts.initial_step
        } else {
            p[i] - opts.initial_step
        };
        pts.push(p);
    }
    let mut vals = Vec::with_capacity(n + 1);
    for p in &pts {
        vals.push(eval(p, &mut evals)?);
    }

    let clamp = |p: Vec<f64>| -> Vec<f64> { p.into_iter().map(|v| v.clamp(0.0, 1.0)).collect() };
    let combine = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
    };

    while evals < opts.max_evals {
        // stable sort keeps the earlier vertex on ties, so the seed is never displaced by an equal value
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let size = pts[1..]
            .iter()
            .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if size < opts.xtol && (vals[n] - vals[0]).abs() < opts.ftol {
            break;
        }
        if size < opts.xtol * 1e-3 {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|i| pts[..n].iter().map(|p| p[i]).sum::<f64>() / n as f64)
            .collect();
        let worst = pts[n].clone();
        let reflected = clamp(combine(&centroid, &worst, -1.0));
        let fr = eval(&reflected, &mut evals)?;
        if fr < vals[0] {
            let expanded = clamp(combine(&centroid, &worst, -2.0));
            let fe = eval(&expanded, &mut evals)?;
            if fe < fr {
                pts[n] = expanded;
                vals[n] = fe;
            } else {
                pts[n] = reflected;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = reflected;
            vals[n] = fr;
            continue;
        }
        let (target, ft) = if fr < vals[n] {
            (reflected.clone(), fr)
        } else {
            (worst.clone(), vals[n])
        };
        let contracted = clamp(combine(&centroid, &target, 0.5));
        let fc = eval(&contracted, &mut evals)?;
        if fc < ft {
            pts[n] = contracted;
            vals[n] = fc;
            continue;
        }
        for k in 1..=n {
            pts[k] = combine(&pts[0], &pts[k], 0.5);
            vals[k] = eval(&pts[k], &mut evals)?;
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
        .expect("non-empty simplex");
    Ok(SimplexResult {
        x: to_box(&pts[best]),
        value: -vals[best],
        evaluations: evals,
    })
}
