//! Library results against naive implementations written out here from the definitions.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dyadic_weights::bmo::{bmo_norm, exp_luxemburg, p_oscillation, LuxMeasure};
use dyadic_weights::constants::{a1_constant, ap_constant, fujii_wilson, weak_ainfty};
use dyadic_weights::czsparse::{cz_decompose, sparse_dominate};
use dyadic_weights::functionals::FunctionalY;
use dyadic_weights::generators::cascade_weight;
use dyadic_weights::maximal::{grid_maximal, indicator_maximal};
use dyadic_weights::{Cube, Family, GridFunction, GridSpec};

fn random_weight(spec: GridSpec, rng: &mut ChaCha8Rng) -> GridFunction {
    let vals = (0..spec.num_cells()).map(|_| rng.gen_range(0.05..3.0f64).powi(2)).collect();
    GridFunction::weight(spec, vals).unwrap()
}

fn random_signed(spec: GridSpec, rng: &mut ChaCha8Rng) -> GridFunction {
    let vals = (0..spec.num_cells()).map(|_| rng.gen_range(-2.0..2.0)).collect();
    GridFunction::signed(spec, vals).unwrap()
}

/// Every grid-aligned cube inside the domain, as `(origin, side)` in cells.
fn inner_cubes(spec: GridSpec) -> Vec<([usize; 2], usize)> {
    let n = spec.side();
    let mut out = Vec::new();
    for s in 1..=n {
        for a in 0..=n - s {
            if spec.dim() == 1 {
                out.push(([a, 0], s));
            } else {
                for b in 0..=n - s {
                    out.push(([a, b], s));
                }
            }
        }
    }
    out
}

fn dyadic(spec: GridSpec) -> Vec<([usize; 2], usize)> {
    inner_cubes(spec)
        .into_iter()
        .filter(|(o, s)| s.is_power_of_two() && o[0] % s == 0 && o[1] % s == 0)
        .collect()
}

fn cells_of(spec: GridSpec, o: [usize; 2], s: usize) -> Vec<usize> {
    let n = spec.side();
    let mut out = Vec::new();
    if spec.dim() == 1 {
        out.extend(o[0]..o[0] + s);
    } else {
        for i in o[0]..o[0] + s {
            for j in o[1]..o[1] + s {
                out.push(i * n + j);
            }
        }
    }
    out
}

fn avg(vals: &[f64], cells: &[usize]) -> f64 {
    cells.iter().map(|&i| vals[i]).sum::<f64>() / cells.len() as f64
}

/// `M(f χ_Q)` by maximizing over every inner cube at every cell.
fn naive_maximal(spec: GridSpec, f: &[f64], q: ([usize; 2], usize)) -> Vec<f64> {
    let inq: Vec<bool> = {
        let mut m = vec![false; spec.num_cells()];
        for i in cells_of(spec, q.0, q.1) {
            m[i] = true;
        }
        m
    };
    let masked: Vec<f64> = f.iter().zip(&inq).map(|(&v, &b)| if b { v.abs() } else { 0.0 }).collect();
    let mut out = vec![0.0f64; spec.num_cells()];
    for (o, s) in inner_cubes(spec) {
        let cells = cells_of(spec, o, s);
        let a = avg(&masked, &cells);
        for i in cells {
            out[i] = out[i].max(a);
        }
    }
    out
}

fn cube(spec: GridSpec, o: [usize; 2], s: usize) -> Cube {
    Cube::new(spec.dim(), [o[0] as i64, o[1] as i64], s as i64)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

#[test]
fn grid_maximal_matches_naive_maximization() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for spec in [GridSpec::new(1, 5).unwrap(), GridSpec::new(2, 3).unwrap()] {
        for _ in 0..3 {
            let f = random_weight(spec, &mut rng);
            for (o, s) in [([0, 0], spec.side()), ([2, 2], 2), ([1, 0], 3)] {
                let o = if spec.dim() == 1 { [o[0], 0] } else { o };
                let fast = grid_maximal(&f, &cube(spec, o, s));
                let slow = naive_maximal(spec, f.values(), (o, s));
                for (a, b) in fast.values().iter().zip(&slow) {
                    assert!(close(*a, *b, 1e-12), "{a} vs {b}");
                }
            }
        }
    }
}

/// `sup_Q w(Q)^{-1} ∫_Q M(wχ_Q)` over `cubes`, with `Y(Q) = denom(o, s)`.
fn naive_ainfty(
    spec: GridSpec,
    w: &[f64],
    cubes: &[([usize; 2], usize)],
    denom: impl Fn([usize; 2], usize) -> f64,
) -> f64 {
    let h = spec.cell_volume();
    cubes
        .iter()
        .map(|&(o, s)| {
            let m = naive_maximal(spec, w, (o, s));
            let num: f64 = cells_of(spec, o, s).iter().map(|&i| m[i]).sum::<f64>() * h;
            num / denom(o, s)
        })
        .fold(0.0, f64::max)
}

#[test]
fn fujii_wilson_matches_naive_supremum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for spec in [GridSpec::new(1, 4).unwrap(), GridSpec::new(2, 2).unwrap()] {
        let w = random_weight(spec, &mut rng);
        let h = spec.cell_volume();
        let mass = |o, s| cells_of(spec, o, s).iter().map(|&i| w.values()[i]).sum::<f64>() * h;
        let full = naive_ainfty(spec, w.values(), &inner_cubes(spec), mass);
        let dy = naive_ainfty(spec, w.values(), &dyadic(spec), mass);
        let r = fujii_wilson(&w).unwrap();
        assert!(close(r.full.unwrap(), full, 1e-12), "{:?} vs {full}", r.full);
        assert!(close(r.dyadic, dy, 1e-12), "{} vs {dy}", r.dyadic);
    }
}

#[test]
fn weak_constant_matches_naive_doubling() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let spec = GridSpec::new(1, 4).unwrap();
    let n = spec.side() as i64;
    let w = random_weight(spec, &mut rng);
    let h = spec.cell_volume();
    // 2Q has side 2s and starts floor(s/2) cells earlier; zero outside the domain
    let doubled_mass = |o: [usize; 2], s: usize| {
        let lo = o[0] as i64 - (s as i64) / 2;
        (lo..lo + 2 * s as i64).filter(|&c| (0..n).contains(&c)).map(|c| w.values()[c as usize]).sum::<f64>()
            * h
    };
    let full = naive_ainfty(spec, w.values(), &inner_cubes(spec), doubled_mass);
    let r = weak_ainfty(&w).unwrap();
    assert!(close(r.full.unwrap(), full, 1e-12));
}

#[test]
fn a1_and_ap_match_definitions() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spec = GridSpec::new(1, 4).unwrap();
    let w = random_weight(spec, &mut rng);
    let all = inner_cubes(spec);
    let m = naive_maximal(spec, w.values(), ([0, 0], spec.side()));
    let a1 = m.iter().zip(w.values()).map(|(a, b)| a / b).fold(0.0, f64::max);
    assert!(close(a1_constant(&w).unwrap().full.unwrap(), a1, 1e-12));
    for p in [1.5, 2.0, 3.0] {
        let dual = 1.0 / (1.0 - p);
        let ap = all
            .iter()
            .map(|&(o, s)| {
                let c = cells_of(spec, o, s);
                let sig: Vec<f64> = c.iter().map(|&i| w.values()[i].powf(dual)).collect();
                avg(w.values(), &c) * (sig.iter().sum::<f64>() / sig.len() as f64).powf(p - 1.0)
            })
            .fold(0.0, f64::max);
        let (r, sigma) = ap_constant(&w, p).unwrap();
        assert!(close(r.full.unwrap(), ap, 1e-12), "p={p}");
        assert!(sigma.is_some());
    }
}

#[test]
fn bmo_matches_naive_supremum() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for spec in [GridSpec::new(1, 5).unwrap(), GridSpec::new(2, 3).unwrap()] {
        let f = random_signed(spec, &mut rng);
        for (family, cubes) in [(Family::Full, inner_cubes(spec)), (Family::Dyadic, dyadic(spec))] {
            let naive = cubes
                .iter()
                .map(|&(o, s)| {
                    let c = cells_of(spec, o, s);
                    let m = avg(f.values(), &c);
                    c.iter().map(|&i| (f.values()[i] - m).abs()).sum::<f64>() / c.len() as f64
                })
                .fold(0.0, f64::max);
            assert!(close(bmo_norm(&f, family).0, naive, 1e-12));
        }
    }
}

#[test]
fn p_oscillation_matches_direct_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let spec = GridSpec::new(1, 5).unwrap();
    let f = random_signed(spec, &mut rng);
    let w = Arc::new(random_weight(spec, &mut rng));
    let y = FunctionalY::doubled_mass(w.clone());
    let q = Cube::interval(8, 8);
    let c = cells_of(spec, [8, 0], 8);
    let m = avg(f.values(), &c);
    for p in [1.0, 2.5, 6.0] {
        let num: f64 =
            c.iter().map(|&i| (f.values()[i] - m).abs().powf(p) * w.values()[i]).sum::<f64>() * spec.cell_volume();
        let direct = (num / y.eval(&spec, &q)).powf(1.0 / p);
        assert!(close(p_oscillation(&f, &w, &y, &q, p).unwrap(), direct, 1e-12));
    }
}

/// `∫_0^1 (l / max(l, |x - Q|+l))^p w` by composite Simpson on every cell.
fn cp_quadrature(spec: GridSpec, w: &[f64], lo: f64, l: f64, p: f64) -> f64 {
    let h = spec.cell_len();
    let m = |x: f64| {
        let dist = if x < lo { lo - x } else if x > lo + l { x - lo - l } else { 0.0 };
        (l / (l + dist)).powf(p)
    };
    let k = 2000;
    let mut total = 0.0;
    for (i, &wi) in w.iter().enumerate() {
        let a = i as f64 * h;
        let dx = h / k as f64;
        let mut s = m(a) + m(a + h);
        for j in 1..k {
            s += m(a + j as f64 * dx) * if j % 2 == 1 { 4.0 } else { 2.0 };
        }
        total += wi * s * dx / 3.0;
    }
    total
}

#[test]
fn cp_functional_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let spec = GridSpec::new(1, 5).unwrap();
    let w = random_weight(spec, &mut rng);
    let h = spec.cell_len();
    for p in [1.5, 2.0, 4.0] {
        let y = FunctionalY::cp(Arc::new(w.clone()), p).unwrap();
        for q in [Cube::interval(0, 32), Cube::interval(4, 4), Cube::interval(13, 3)] {
            let exact = y.eval(&spec, &q);
            let quad = cp_quadrature(spec, w.values(), q.origin()[0] as f64 * h, q.side() as f64 * h, p);
            assert!(close(exact, quad, 1e-9), "p={p} {q}: {exact} vs {quad}");
        }
    }
}

#[test]
fn indicator_maximal_within_one_cell_of_brute_force() {
    let spec = GridSpec::new(1, 6).unwrap();
    let q = Cube::interval(20, 8);
    let ind: Vec<f64> = (0..64).map(|i| if (20..28).contains(&i) { 1.0 } else { 0.0 }).collect();
    let brute = naive_maximal(spec, &ind, ([0, 0], 64));
    for (i, &b) in brute.iter().enumerate() {
        let exact = indicator_maximal(&q, &spec, [spec.midpoint(i)[0], 0.0]);
        // one cell against a side of eight cells
        assert!((exact - b).abs() <= 1.0 / 8.0, "cell {i}: {exact} vs {b}");
    }
}

/// `inf{λ : Σ μ_i (e^{|g_i|/λ} - 1) ≤ 1}` by plain bisection on a wide bracket.
fn naive_luxemburg(g: &[f64], mu: &[f64]) -> f64 {
    let excess = |l: f64| g.iter().zip(mu).map(|(x, m)| m * ((x.abs() / l).exp() - 1.0)).sum::<f64>() - 1.0;
    let (mut lo, mut hi) = (1e-6f64, 1e6f64);
    for _ in 0..300 {
        let mid = (lo * hi).sqrt();
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[test]
fn luxemburg_matches_bisection() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let spec = GridSpec::new(1, 5).unwrap();
    let g = random_signed(spec, &mut rng);
    let w = random_weight(spec, &mut rng);
    let q = Cube::interval(0, 16);
    let cells = cells_of(spec, [0, 0], 16);
    let wq: f64 = cells.iter().map(|&i| w.values()[i]).sum();
    let gs: Vec<f64> = cells.iter().map(|&i| g.values()[i]).collect();
    let mu: Vec<f64> = cells.iter().map(|&i| w.values()[i] / wq).collect();
    let lux = exp_luxemburg(&g, &q, LuxMeasure::Normalized(&w)).unwrap();
    assert!(close(lux, naive_luxemburg(&gs, &mu), 1e-9));
}

#[test]
fn cz_stopping_cubes_match_exhaustive_selection() {
    // maximal dyadic subcubes P with ⨍_P |f - f_Q| > L, found by checking every dyadic cube
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let spec = GridSpec::new(1, 6).unwrap();
    let f = random_signed(spec, &mut rng).map(false, |x| x.powi(5)).unwrap();
    let q = spec.unit_cube();
    let mean = f.average(&q);
    for level in [2.0, 4.0, 8.0] {
        let big: Vec<([usize; 2], usize)> = dyadic(spec)
            .into_iter()
            .filter(|&(o, s)| {
                let c = cells_of(spec, o, s);
                c.iter().map(|&i| (f.values()[i] - mean).abs()).sum::<f64>() / c.len() as f64 > level
            })
            .collect();
        let maximal: Vec<Cube> = big
            .iter()
            .filter(|&&(o, s)| !big.iter().any(|&(o2, s2)| s2 > s && o2[0] <= o[0] && o[0] < o2[0] + s2))
            .map(|&(o, s)| cube(spec, o, s))
            .collect();
        let mut got = cz_decompose(&f, &q, level).unwrap().stopping;
        got.sort();
        let mut want = maximal;
        want.sort();
        assert_eq!(got, want, "L={level}");
    }
}

#[test]
fn chain_sums_match_enumeration() {
    let spec = GridSpec::new(1, 6).unwrap();
    let w = cascade_weight(1.7, 6, 4, spec).unwrap();
    let f = w.map(false, f64::ln).unwrap();
    let sd = sparse_dominate(&f, &spec.unit_cube()).unwrap();
    let fam = &sd.family;
    let a: Vec<f64> = fam.cubes.iter().map(|c| w.integrate(c)).collect();
    // non-strict chains P_1 ⊇ ... ⊇ P_k of family members, weighted by a(P_k)
    fn chains(fam: &[Cube], a: &[f64], top: Option<usize>, k: usize) -> f64 {
        if k == 0 {
            return top.map_or(0.0, |t| a[t]);
        }
        (0..fam.len())
            .filter(|&j| top.is_none_or(|t| fam[t].contains_cube(&fam[j])))
            .map(|j| chains(fam, a, Some(j), k - 1))
            .sum()
    }
    for k in 1..=3 {
        let want = chains(&fam.cubes, &a, None, k);
        assert!(close(fam.chain_sum(&a, k), want, 1e-12), "k={k}");
    }
}

#[test]
fn sparse_constant_stays_below_pinned_bound_on_generator_corpus() {
    use dyadic_weights::generators::{bmo_test_set, cascade_weight, dyadic_martingale, power_weight};
    for spec in [GridSpec::new(1, 10).unwrap(), GridSpec::new(2, 5).unwrap()] {
        let d = spec.dim() as i32;
        let mut fs: Vec<GridFunction> = bmo_test_set(spec).into_iter().map(|(_, f)| f).collect();
        fs.extend((1..=10).map(|s| dyadic_martingale(spec, s, 1.0)));
        for t in [1.2, 1.5, 1.8] {
            fs.push(cascade_weight(t, spec.depth(), 1, spec).unwrap().map(false, f64::ln).unwrap());
        }
        fs.push(power_weight(-0.5, &vec![0.5; spec.dim()], spec).unwrap().map(false, f64::ln).unwrap());
        let worst = fs
            .iter()
            .map(|f| sparse_dominate(f, &spec.unit_cube()).unwrap().c_meas)
            .fold(0.0f64, f64::max);
        assert!(worst <= 2f64.powi(d + 2), "d = {d}: c_meas = {worst}");
    }
}
