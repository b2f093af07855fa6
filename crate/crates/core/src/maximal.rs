//! Hardy–Littlewood maximal operators on the grid.
//!
//! The uncentered maximal function is taken over grid-aligned cubes. Cubes that
//! leave the unit cube never help: their trace on the domain sits inside a
//! smaller in-domain cube with the same or larger mass, so every routine here
//! only scans cubes contained in the domain (or in the localizing cube `Q`).
//!
//! In `d = 1` the maximal function of a length-`s` array costs `O(s^2)`: for
//! each left endpoint `i`, a suffix maximum over right endpoints gives the best
//! interval `[i, j)` that still covers each cell. The all-intervals family of
//! Fujii–Wilson numerators is swept per left endpoint in `O(N^3)` total. In
//! `d = 2` each window side `t` contributes a separable sliding maximum, for
//! `O(s^3)` per cube.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{enumerate_cubes, Cube, Family, GridFunction, GridSpec};

/// `M^d_Q f`: dyadic maximal function localized to a dyadic `root`; zero outside `root`.
pub fn dyadic_maximal(f: &GridFunction, root: &Cube) -> Result<GridFunction> {
    let spec = *f.spec();
    if !root.is_dyadic() || !spec.contains(root) {
        return Err(Error::NotDyadic(*root));
    }
    let g = if f.is_weight() { f.clone() } else { f.abs() };
    let mut out = vec![0.0; spec.num_cells()];
    for idx in root.cells(&spec) {
        let c = spec.coords(idx);
        let mut best = 0.0f64;
        let mut cube = Cube::new(spec.dim(), [c[0] as i64, c[1] as i64], 1);
        loop {
            best = best.max(g.average(&cube));
            if cube == *root {
                break;
            }
            cube = cube.parent();
        }
        out[idx] = best;
    }
    GridFunction::weight(spec, out)
}

/// `M(f χ_Q)` on every cell of the domain, over all grid-aligned cubes.
pub fn grid_maximal(f: &GridFunction, q: &Cube) -> GridFunction {
    let spec = *f.spec();
    let masked = restrict(f, q);
    let values = uncentered_maximal(&masked);
    GridFunction::weight(spec, values).expect("maximal function is finite and nonnegative")
}

/// Brute-force `M(f χ_Q)`: every grid-aligned cube of side at most `N` meeting the domain,
/// including cubes that stick out of it. `O(N^{2d+1})`; a test oracle.
pub fn grid_maximal_brute(f: &GridFunction, q: &Cube) -> GridFunction {
    let spec = *f.spec();
    let masked = restrict(f, q);
    let n = spec.side() as i64;
    let d = spec.dim();
    let mut out = vec![0.0f64; spec.num_cells()];
    for s in 1..=n {
        let lo = -(s - 1);
        for o0 in lo..n {
            let o1_range = if d == 1 { 0..1 } else { lo..n };
            for o1 in o1_range {
                let p = Cube::new(d, [o0, o1], s);
                let avg = masked.average(&p);
                for idx in p.cells(&spec) {
                    if avg > out[idx] {
                        out[idx] = avg;
                    }
                }
            }
        }
    }
    GridFunction::weight(spec, out).expect("finite")
}

/// `|f| χ_Q` as a weight on the same grid.
pub fn restrict(f: &GridFunction, q: &Cube) -> GridFunction {
    let spec = *f.spec();
    let mut values = vec![0.0; spec.num_cells()];
    for idx in q.cells(&spec) {
        values[idx] = f.values()[idx].abs();
    }
    GridFunction::weight(spec, values).expect("finite")
}

/// Uncentered grid maximal function of `|f|` over the whole domain.
pub fn uncentered_maximal(f: &GridFunction) -> Vec<f64> {
    let spec = *f.spec();
    match spec.dim() {
        1 => {
            let vals: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
            maximal_1d(&vals)
        }
        _ => {
            let g = if f.is_weight() { f.clone() } else { f.abs() };
            local_maximal_2d(&g, &spec.unit_cube())
        }
    }
}

/// `M(f χ_Q)` on the cells of `Q` only (row-major within `Q`); `Q` must lie in the domain.
pub fn local_maximal(f: &GridFunction, q: &Cube) -> Vec<f64> {
    match f.spec().dim() {
        1 => {
            let a = q.origin()[0] as usize;
            let vals: Vec<f64> =
                f.values()[a..a + q.side() as usize].iter().map(|v| v.abs()).collect();
            maximal_1d(&vals)
        }
        _ => {
            if f.is_weight() {
                local_maximal_2d(f, q)
            } else {
                local_maximal_2d(&f.abs(), q)
            }
        }
    }
}

/// Uncentered maximal function of a nonnegative 1-d array over its subintervals.
pub fn maximal_1d(vals: &[f64]) -> Vec<f64> {
    let n = vals.len();
    let mut out = vec![0.0f64; n];
    let mut suffix = vec![0.0f64; n + 1];
    for i in 0..n {
        // suffix[j] = max_{j' >= j} avg(i..j'), for j in i+1..=n
        let mut sum = 0.0;
        for (j, v) in vals.iter().enumerate().skip(i) {
            sum += v;
            suffix[j + 1] = sum / (j + 1 - i) as f64;
        }
        for j in (i + 1..n).rev() {
            if suffix[j + 1] > suffix[j] {
                suffix[j] = suffix[j + 1];
            }
        }
        for x in i..n {
            if suffix[x + 1] > out[x] {
                out[x] = suffix[x + 1];
            }
        }
    }
    out
}

fn local_maximal_2d(f: &GridFunction, q: &Cube) -> Vec<f64> {
    let s = q.side() as usize;
    let [qx, qy] = q.origin();
    let mut out = vec![0.0f64; s * s];
    let mut windows = Vec::with_capacity(s * s);
    let mut rows = vec![0.0f64; s * s];
    let mut col_in = Vec::with_capacity(s);
    let mut col_out = vec![0.0f64; s];
    for t in 1..=s {
        let m = s - t + 1;
        windows.clear();
        for p in 0..m {
            for r in 0..m {
                let w = Cube::square([qx + p as i64, qy + r as i64], t as i64);
                windows.push(f.average(&w));
            }
        }
        // along the first axis: rows[i * m + r] = max over p covering i
        for r in 0..m {
            col_in.clear();
            col_in.extend((0..m).map(|p| windows[p * m + r]));
            sliding_max(&col_in, t, &mut col_out);
            for i in 0..s {
                rows[i * m + r] = col_out[i];
            }
        }
        for i in 0..s {
            sliding_max(&rows[i * m..i * m + m], t, &mut col_out);
            for j in 0..s {
                let v = col_out[j];
                if v > out[i * s + j] {
                    out[i * s + j] = v;
                }
            }
        }
    }
    out
}

/// `out[i] = max input[p]` over window positions `p` whose length-`t` window covers `i`.
fn sliding_max(input: &[f64], t: usize, out: &mut [f64]) {
    let m = input.len();
    let s = m + t - 1;
    let mut dq: VecDeque<usize> = VecDeque::with_capacity(t);
    for i in 0..s {
        if i < m {
            while let Some(&b) = dq.back() {
                if input[b] <= input[i] {
                    dq.pop_back();
                } else {
                    break;
                }
            }
            dq.push_back(i);
        }
        while let Some(&f) = dq.front() {
            if f + t <= i {
                dq.pop_front();
            } else {
                break;
            }
        }
        out[i] = input[*dq.front().expect("window never empty")];
    }
}

/// `∫_Q M(f χ_Q)` for every cube of the family, in [`enumerate_cubes`] order.
pub fn maximal_integrals(f: &GridFunction, family: Family) -> Vec<(Cube, f64)> {
    let spec = *f.spec();
    if spec.dim() == 1 && family == Family::Full {
        return full_sweep_1d(f);
    }
    let cubes = enumerate_cubes(&spec, family);
    let vol = spec.cell_volume();
    cubes
        .into_par_iter()
        .map(|q| {
            let m = local_maximal(f, &q);
            (q, m.iter().sum::<f64>() * vol)
        })
        .collect()
}

fn full_sweep_1d(f: &GridFunction) -> Vec<(Cube, f64)> {
    let spec = *f.spec();
    let n = spec.side();
    let h = spec.cell_len();
    let vals: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    let per_left: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|a| {
            let len = n - a;
            let mut g = vec![0.0f64; len];
            let mut buf = vec![0.0f64; len];
            let mut nums = Vec::with_capacity(len);
            for b in a + 1..=n {
                let w = b - a;
                let mut sum = 0.0;
                for i in (0..w).rev() {
                    sum += vals[a + i];
                    buf[i] = sum / (w - i) as f64;
                }
                let mut pm = 0.0f64;
                let mut total = 0.0;
                for x in 0..w {
                    if buf[x] > pm {
                        pm = buf[x];
                    }
                    if pm > g[x] {
                        g[x] = pm;
                    }
                    total += g[x];
                }
                nums.push(total * h);
            }
            nums
        })
        .collect();
    let mut out = vec![(Cube::interval(0, 1), 0.0); n * (n + 1) / 2];
    for (a, nums) in per_left.into_iter().enumerate() {
        for (k, v) in nums.into_iter().enumerate() {
            let s = k + 1;
            let idx = (n - s) * (n - s + 1) / 2 + a;
            out[idx] = (Cube::interval(a as i64, s as i64), v);
        }
    }
    out
}

/// Exact `M(χ_Q)(x)`: `|Q| / |P*|` with `P*` the smallest cube containing `Q` and `x`.
pub fn indicator_maximal(q: &Cube, spec: &GridSpec, x: [f64; 2]) -> f64 {
    let h = spec.cell_len();
    let l = q.side() as f64 * h;
    let mut side = l;
    for (a, &xa) in x.iter().enumerate().take(q.dim()) {
        let lo = q.origin()[a] as f64 * h;
        let hi = lo + l;
        let span = hi.max(xa) - lo.min(xa);
        side = side.max(span);
    }
    (l / side).powi(q.dim() as i32)
}
