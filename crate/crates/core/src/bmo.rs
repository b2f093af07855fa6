//! Mean-oscillation norms, `p`-oscillations and exponential Luxemburg norms.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functionals::FunctionalY;
use crate::grid::{enumerate_cubes, Cube, Family, GridFunction};

/// `∫_Q |f - f_Q| v` (Lebesgue measure when `v` is `None`).
pub fn oscillation_integral(f: &GridFunction, v: Option<&GridFunction>, q: &Cube) -> f64 {
    let spec = f.spec();
    let mean = f.average(q);
    let vals = f.values();
    let mut sum = 0.0;
    match v {
        None => {
            for idx in q.cells(spec) {
                sum += (vals[idx] - mean).abs();
            }
        }
        Some(v) => {
            let w = v.values();
            for idx in q.cells(spec) {
                sum += (vals[idx] - mean).abs() * w[idx];
            }
        }
    }
    sum * spec.cell_volume()
}

/// `∫_Q |f - f_Q| v` for every cube of `cubes`, computed in parallel.
///
/// Long interval lists in `d = 1` go through [`interval_profile`].
pub fn oscillation_profile(f: &GridFunction, v: Option<&GridFunction>, cubes: &[Cube]) -> Vec<f64> {
    let spec = f.spec();
    if spec.dim() == 1 && cubes.len() >= 8 * spec.num_cells() {
        return interval_profile(f, v, cubes);
    }
    cubes.par_iter().map(|q| oscillation_integral(f, v, q)).collect()
}

/// Fenwick tree over value ranks holding `Σ v` and `Σ f v`.
struct RankTree {
    mass: Vec<f64>,
    moment: Vec<f64>,
}

impl RankTree {
    fn new(n: usize) -> Self {
        RankTree { mass: vec![0.0; n + 1], moment: vec![0.0; n + 1] }
    }

    fn add(&mut self, rank: usize, mass: f64, moment: f64) {
        let mut i = rank + 1;
        while i < self.mass.len() {
            self.mass[i] += mass;
            self.moment[i] += moment;
            i += i & i.wrapping_neg();
        }
    }

    /// Zeroes every node on the update path of `rank`.
    fn clear(&mut self, rank: usize) {
        let mut i = rank + 1;
        while i < self.mass.len() {
            self.mass[i] = 0.0;
            self.moment[i] = 0.0;
            i += i & i.wrapping_neg();
        }
    }

    /// sums over ranks `< k`
    fn prefix(&self, k: usize) -> (f64, f64) {
        let (mut m, mut f) = (0.0, 0.0);
        let mut i = k;
        while i > 0 {
            m += self.mass[i];
            f += self.moment[i];
            i &= i - 1;
        }
        (m, f)
    }
}

/// Interval oscillations by a sweep from each left endpoint: with the cells of the
/// interval ranked by value, `∫|f - m| v` splits into sums below and above `m`.
fn interval_profile(f: &GridFunction, v: Option<&GridFunction>, cubes: &[Cube]) -> Vec<f64> {
    let spec = f.spec();
    let n = spec.num_cells();
    let vals = f.values();
    let weight = |i: usize| v.map_or(1.0, |v| v.values()[i]);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let mut rank = vec![0; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, q) in cubes.iter().enumerate() {
        groups[q.origin()[0] as usize].push(k);
    }
    let h = spec.cell_volume();
    let results: Vec<Vec<(usize, f64)>> = groups
        .par_iter_mut()
        .enumerate()
        .map_init(
            || RankTree::new(n),
            |tree, (start, group)| {
                group.sort_by_key(|&k| cubes[k].side());
                let mut out = Vec::with_capacity(group.len());
                let (mut end, mut tot_m, mut tot_f) = (start, 0.0, 0.0);
                for &k in group.iter() {
                    let stop = start + cubes[k].side() as usize;
                    while end < stop {
                        let w = weight(end);
                        tree.add(rank[end], w, vals[end] * w);
                        tot_m += w;
                        tot_f += vals[end] * w;
                        end += 1;
                    }
                    let m = f.average(&cubes[k]);
                    let (bm, bf) = tree.prefix(sorted.partition_point(|&x| x < m));
                    let s = (m * bm - bf) + ((tot_f - bf) - m * (tot_m - bm));
                    out.push((k, s.max(0.0) * h));
                }
                // exact reset, so results do not depend on which groups a thread saw before
                for &r in &rank[start..end] {
                    tree.clear(r);
                }
                out
            },
        )
        .collect();
    let mut profile = vec![0.0; cubes.len()];
    for (k, s) in results.into_iter().flatten() {
        profile[k] = s;
    }
    profile
}

/// Largest `profile[i] / denom[i]` over entries with positive denominator; first index wins ties.
pub fn sup_ratio(profile: &[f64], denom: &[f64]) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for (i, (&num, &den)) in profile.iter().zip(denom).enumerate() {
        if !(den > 0.0) {
            continue;
        }
        let r = num / den;
        if best.is_none_or(|(b, _)| r > b) {
            best = Some((r, i));
        }
    }
    best
}

/// `sup_Q ⨍_Q |f - f_Q|` with the maximizing cube.
pub fn bmo_norm(f: &GridFunction, family: Family) -> (f64, Cube) {
    let spec = *f.spec();
    let cubes = enumerate_cubes(&spec, family);
    let profile = oscillation_profile(f, None, &cubes);
    let vols: Vec<f64> = cubes.iter().map(|q| q.volume(&spec)).collect();
    let (value, i) = sup_ratio(&profile, &vols).expect("cubes have positive volume");
    (value, cubes[i])
}

/// `sup_Q Y(Q)^{-1} ∫_Q |f - f_Q| v` over cubes with `Y(Q) > 0`; `(0, root)` if there are none.
pub fn weighted_bmo_norm(
    f: &GridFunction,
    v: &GridFunction,
    y: &FunctionalY,
    family: Family,
) -> (f64, Cube) {
    let spec = *f.spec();
    let cubes = enumerate_cubes(&spec, family);
    let profile = oscillation_profile(f, Some(v), &cubes);
    let denom: Vec<f64> = cubes.par_iter().map(|q| y.eval(&spec, q)).collect();
    match sup_ratio(&profile, &denom) {
        Some((value, i)) => (value, cubes[i]),
        None => (0.0, spec.unit_cube()),
    }
}

/// `(Y(Q)^{-1} ∫_Q |f - f_Q|^p w)^{1/p}`.
pub fn p_oscillation(
    f: &GridFunction,
    w: &GridFunction,
    y: &FunctionalY,
    q: &Cube,
    p: f64,
) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p-oscillation needs p ≥ 1, got {p}")));
    }
    let spec = f.spec();
    let yq = y.eval(spec, q);
    if !(yq > 0.0) {
        return Err(Error::Degenerate(format!("Y vanishes on {q}")));
    }
    Ok((p_moment(f, w, q, p) / yq).powf(1.0 / p))
}

/// `∫_Q |f - f_Q|^p w`.
pub fn p_moment(f: &GridFunction, w: &GridFunction, q: &Cube, p: f64) -> f64 {
    let spec = f.spec();
    let mean = f.average(q);
    let (fv, wv) = (f.values(), w.values());
    let mut sum = 0.0;
    for idx in q.cells(spec) {
        if wv[idx] != 0.0 {
            sum += (fv[idx] - mean).abs().powf(p) * wv[idx];
        }
    }
    sum * spec.cell_volume()
}

/// Probability-type measure on `Q` used by the Luxemburg norm.
#[derive(Clone, Copy, Debug)]
pub enum LuxMeasure<'a> {
    /// `w dx / w(Q)`
    Normalized(&'a GridFunction),
    /// `w dx / w(2Q)`
    Doubled(&'a GridFunction),
}

const LUX_BRACKET: f64 = 60.0;
const LUX_TOL: f64 = 1e-10;

/// `inf{λ > 0 : ∫_Q (e^{|g|/λ} - 1) dμ ≤ 1}`, by bisection.
///
/// The bracket is `[m/60, 60m]` with `m` the largest `|g|` on the support of `μ` in `Q`.
pub fn exp_luxemburg(g: &GridFunction, q: &Cube, measure: LuxMeasure<'_>) -> Result<f64> {
    let spec = g.spec();
    let (w, total) = match measure {
        LuxMeasure::Normalized(w) => (w, w.cell_sum(q)),
        LuxMeasure::Doubled(w) => (w, w.cell_sum(&q.doubled())),
    };
    if !(total > 0.0) {
        return Err(Error::Degenerate(format!("measure has no mass on {q}")));
    }
    let pts: Vec<(f64, f64)> = q
        .cells(spec)
        .into_iter()
        .filter(|&i| w.values()[i] > 0.0)
        .map(|i| (g.values()[i].abs(), w.values()[i] / total))
        .collect();
    let m = pts.iter().fold(0.0f64, |a, &(x, _)| a.max(x));
    if m == 0.0 {
        return Ok(0.0);
    }
    let excess = |lambda: f64| -> f64 {
        pts.iter().map(|&(x, mu)| (x / lambda).exp_m1() * mu).sum::<f64>() - 1.0
    };
    let (mut lo, mut hi) = (m / LUX_BRACKET, m * LUX_BRACKET);
    let (f_lo, f_hi) = (excess(lo), excess(hi));
    if !(f_lo > 0.0) || !(f_hi <= 0.0) {
        return Err(Error::Bracketing { lo, hi, f_lo, f_hi });
    }
    while hi - lo > LUX_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// `max_p norm_p / p^α` over the samples.
pub fn pgrowth_to_exp(samples: &[(f64, f64)], alpha: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no (p, norm) samples".into()));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("growth exponent must be positive, got {alpha}")));
    }
    Ok(samples.iter().map(|&(p, n)| n / p.powf(alpha)).fold(f64::NEG_INFINITY, f64::max))
}
