//! Helpers for working on the probability simplex of mixture weights.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

/// Euclidean projection of `v` onto `{w : w ≥ 0, Σw = 1}` (sort-based).
pub fn project(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Number of points `enumerate_grid(k, steps)` yields: `C(steps + k - 1, k - 1)`.
pub fn grid_size(k: usize, steps: usize) -> u128 {
    if k == 0 {
        return 0;
    }
    let (n, r) = ((steps + k - 1) as u128, (k - 1) as u128);
    let r = r.min(n - r);
    (0..r).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Calls `visit` with every weight vector on the simplex whose entries are
/// multiples of `1/steps`, in lexicographic order of the integer compositions.
pub fn for_each_grid_point(k: usize, steps: usize, mut visit: impl FnMut(&[f64])) {
    if k == 0 {
        return;
    }
    let scale = steps as f64;
    let mut counts = vec![0usize; k];
    let mut weights = vec![0.0; k];
    fn recurse(
        idx: usize,
        remaining: usize,
        counts: &mut [usize],
        weights: &mut [f64],
        scale: f64,
        visit: &mut dyn FnMut(&[f64]),
    ) {
        let k = counts.len();
        if idx == k - 1 {
            counts[idx] = remaining;
            for (w, &c) in weights.iter_mut().zip(counts.iter()) {
                *w = c as f64 / scale;
            }
            visit(weights);
            return;
        }
        for c in 0..=remaining {
            counts[idx] = c;
            recurse(idx + 1, remaining - c, counts, weights, scale, visit);
        }
    }
    recurse(0, steps, &mut counts, &mut weights, scale, &mut visit);
}

/// Uniform draw from the simplex (flat Dirichlet).
pub fn random_point<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Minimises `f` over the simplex with a Nelder–Mead search on projected
/// coordinates. Returns the best point and value seen.
pub fn nelder_mead(
    f: &dyn Fn(&[f64]) -> f64,
    start: &[f64],
    initial_step: f64,
    max_evals: usize,
) -> (Vec<f64>, f64) {
    let k = start.len();
    let eval = |x: &[f64]| -> (Vec<f64>, f64) {
        let w = project(x);
        let v = f(&w);
        (w, v)
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(k + 1);
    simplex.push((start.to_vec(), eval(start).1));
    for i in 0..k {
        let mut x = start.to_vec();
        x[i] += initial_step;
        let v = eval(&x).1;
        simplex.push((x, v));
    }
    let mut evals = k + 1;
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[k].1 - simplex[0].1;
        if spread.abs() < 1e-14 {
            break;
        }
        let centroid: Vec<f64> = (0..k)
            .map(|j| simplex[..k].iter().map(|(x, _)| x[j]).sum::<f64>() / k as f64)
            .collect();
        let worst = simplex[k].0.clone();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&worst).map(|(c, w)| c + t * (c - w)).collect()
        };
        let reflected = along(1.0);
        let fr = eval(&reflected).1;
        evals += 1;
        if fr < simplex[0].1 {
            let expanded = along(2.0);
            let fe = eval(&expanded).1;
            evals += 1;
            simplex[k] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[k - 1].1 {
            simplex[k] = (reflected, fr);
        } else {
            let contracted = along(-0.5);
            let fc = eval(&contracted).1;
            evals += 1;
            if fc < simplex[k].1 {
                simplex[k] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = best.iter().zip(&entry.0).map(|(b, x)| b + 0.5 * (x - b)).collect();
                    let v = eval(&x).1;
                    *entry = (x, v);
                    evals += 1;
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, v) = simplex.swap_remove(0);
    (project(&x), v)
}
