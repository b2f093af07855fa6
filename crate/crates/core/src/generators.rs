//! Deterministic weight and BMO test families.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{Cube, GridFunction, GridSpec};
use crate::maximal::grid_maximal;

fn distance(spec: &GridSpec, x: [f64; 2], center: &[f64]) -> f64 {
    (0..spec.dim())
        .map(|a| {
            let c = center.get(a).copied().unwrap_or(0.5);
            (x[a] - c).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// `|x - center|^alpha` sampled at midpoints and clipped to `[2^{-J|α|}, 2^{J|α|}]`.
pub fn power_weight(alpha: f64, center: &[f64], spec: GridSpec) -> Result<GridFunction> {
    let d = spec.dim() as f64;
    if !alpha.is_finite() || alpha <= -d {
        return Err(Error::InvalidParameter(format!(
            "|x|^{alpha} is not locally integrable in dimension {d}"
        )));
    }
    let range = (spec.depth() as f64 * alpha.abs()).exp2();
    GridFunction::from_midpoints(spec, true, |x| {
        if alpha == 0.0 {
            return 1.0;
        }
        distance(&spec, x, center).powf(alpha).clamp(1.0 / range, range)
    })
}

/// Multiplicative cascade of total mass 1.
///
/// Each dyadic node down to `depth` splits its mass between its two halves in the
/// proportions `t/2` and `(2-t)/2`, the orientation drawn from the seeded
/// generator. In `d = 2` the four children get the product of one split per axis.
pub fn cascade_weight(t: f64, depth: u32, seed: u64, spec: GridSpec) -> Result<GridFunction> {
    if !(1.0..2.0).contains(&t) {
        return Err(Error::InvalidParameter(format!("cascade parameter {t} not in [1, 2)")));
    }
    if depth > spec.depth() {
        return Err(Error::InvalidParameter(format!(
            "cascade depth {depth} exceeds grid depth {}",
            spec.depth()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let heavy = t / 2.0;
    let light = (2.0 - t) / 2.0;
    let split = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.5) { [heavy, light] } else { [light, heavy] };
    let n = spec.side();
    // density on the level-k grid, row-major with 2^k cells per axis
    let mut dens = vec![1.0f64];
    for k in 0..depth {
        let m = 1usize << k;
        match spec.dim() {
            1 => {
                let mut next = vec![0.0; 2 * m];
                for i in 0..m {
                    let s = split(&mut rng);
                    next[2 * i] = dens[i] * 2.0 * s[0];
                    next[2 * i + 1] = dens[i] * 2.0 * s[1];
                }
                dens = next;
            }
            _ => {
                let mut next = vec![0.0; 4 * m * m];
                for i in 0..m {
                    for j in 0..m {
                        let a = split(&mut rng);
                        let b = split(&mut rng);
                        for (di, ai) in a.iter().enumerate() {
                            for (dj, bj) in b.iter().enumerate() {
                                next[(2 * i + di) * 2 * m + 2 * j + dj] =
                                    dens[i * m + j] * 4.0 * ai * bj;
                            }
                        }
                    }
                }
                dens = next;
            }
        }
    }
    let shift = spec.depth() - depth;
    let m = 1usize << depth;
    let values = (0..spec.num_cells())
        .map(|idx| {
            let c = spec.coords(idx);
            match spec.dim() {
                1 => dens[c[0] >> shift],
                _ => dens[(c[0] >> shift) * m + (c[1] >> shift)],
            }
        })
        .collect::<Vec<_>>();
    debug_assert_eq!(values.len(), n.pow(spec.dim() as u32));
    GridFunction::weight(spec, values)
}

/// `base` with every hole set to zero.
pub fn holey_weight(base: &GridFunction, holes: &[Cube]) -> Result<GridFunction> {
    let spec = *base.spec();
    let mut values = base.values().to_vec();
    for h in holes {
        if !spec.contains(h) {
            return Err(Error::InvalidParameter(format!("hole {h} leaves the domain")));
        }
        for idx in h.cells(&spec) {
            values[idx] = 0.0;
        }
    }
    GridFunction::weight(spec, values)
}

/// `log|x - center|` clipped to `[-J ln 2, J ln 2]`.
pub fn clipped_log(center: &[f64], spec: GridSpec) -> GridFunction {
    let bound = spec.depth() as f64 * std::f64::consts::LN_2;
    GridFunction::from_midpoints(spec, false, |x| {
        distance(&spec, x, center).ln().clamp(-bound, bound)
    })
    .expect("clipped values are finite")
}

/// Indicator of the lower half of `q` along the first axis.
pub fn half_indicator(q: &Cube, spec: GridSpec) -> Result<GridFunction> {
    if q.side() < 2 || !spec.contains(q) {
        return Err(Error::InvalidParameter(format!("cannot halve {q} on this grid")));
    }
    let o = q.origin();
    let mut values = vec![0.0; spec.num_cells()];
    for idx in q.cells(&spec) {
        if (spec.coords(idx)[0] as i64) < o[0] + q.side() / 2 {
            values[idx] = 1.0;
        }
    }
    GridFunction::signed(spec, values)
}

/// Random dyadic martingale `Σ_P ε_P a h_P` over all dyadic cubes of side ≥ 2 cells,
/// with Haar functions `h_P = ±1` on the two halves of `P` along a random axis.
pub fn dyadic_martingale(spec: GridSpec, seed: u64, amplitude: f64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.side();
    let mut values = vec![0.0; spec.num_cells()];
    let mut side = n;
    while side >= 2 {
        let k = n / side;
        let cols = if spec.dim() == 2 { k } else { 1 };
        for i in 0..k {
            for j in 0..cols {
                let sign = if rng.gen_bool(0.5) { amplitude } else { -amplitude };
                let axis = if spec.dim() == 2 { rng.gen_range(0..2) } else { 0 };
                let cube = Cube::new(spec.dim(), [(i * side) as i64, (j * side) as i64], side as i64);
                let mid = (cube.origin()[axis] + side as i64 / 2) as usize;
                for idx in cube.cells(&spec) {
                    let c = spec.coords(idx)[axis];
                    values[idx] += if c < mid { sign } else { -sign };
                }
            }
        }
        side /= 2;
    }
    GridFunction::signed(spec, values).expect("finite martingale")
}

/// The standard BMO corpus: clipped logarithms, half-cube indicators and martingales.
pub fn bmo_test_set(spec: GridSpec) -> Vec<(String, GridFunction)> {
    let mut out = Vec::new();
    for c in [0.5, 0.3, 0.0] {
        let center = [c, c];
        out.push((format!("log|x-{c}|"), clipped_log(&center, spec)));
    }
    if spec.side() >= 2 {
        let unit = spec.unit_cube();
        out.push(("half".into(), half_indicator(&unit, spec).expect("unit cube halves")));
        if spec.side() >= 4 {
            let q = unit.children()[1];
            out.push(("half(child)".into(), half_indicator(&q, spec).expect("child halves")));
        }
    }
    for seed in [1, 2] {
        out.push((format!("martingale({seed})"), dyadic_martingale(spec, seed, 1.0)));
    }
    out
}

/// `½ log M(vχ_Q / v_Q)` over the whole domain, with the all-cube maximal operator.
pub fn witness_b(v: &GridFunction, q: &Cube) -> Result<GridFunction> {
    let avg = v.average(q);
    if !(avg > 0.0) {
        return Err(Error::Degenerate(format!("v has no mass on {q}")));
    }
    let m = grid_maximal(v, q);
    m.map(false, |x| 0.5 * (x / avg).ln())
}
