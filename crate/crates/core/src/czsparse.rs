//! Local Calderón–Zygmund decomposition and sparse families built by iterated stopping.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::SmallFamily;
use crate::grid::{Cube, GridFunction, GridSpec};

/// Stopping cubes of `|f - f_Q|` at level `L` with the good/bad splitting.
#[derive(Clone, Debug, Serialize)]
pub struct CzDecomposition {
    #[serde(skip)]
    pub spec: GridSpec,
    pub root: Cube,
    pub level: f64,
    /// `f_Q`
    pub mean: f64,
    /// `⨍_Q |f - f_Q|`
    pub oscillation: f64,
    /// Maximal dyadic cubes with `⨍ |f - f_Q| > L`, in tree order.
    pub stopping: Vec<Cube>,
    /// `⨍_{Q_j} |f - f_Q|` per stopping cube.
    pub stopping_averages: Vec<f64>,
    /// Stopping cubes that are single cells.
    pub cell_stops: usize,
    #[serde(skip)]
    pub good: GridFunction,
    #[serde(skip)]
    pub bad: GridFunction,
}

/// Outcome of re-checking the decomposition against `f`.
#[derive(Clone, Debug, Default, Serialize)]
pub struct CzCheck {
    /// The root itself exceeded the level, so the upper stopping bound is not guaranteed.
    pub root_selected: bool,
    pub max_stopping_ratio: f64,
    pub max_good: f64,
    pub reconstruction_error: f64,
    pub max_bad_mean: f64,
}

/// `|f - c|` on the cells of `q`, zero elsewhere.
fn deviation(f: &GridFunction, q: &Cube, c: f64) -> GridFunction {
    let spec = *f.spec();
    let mut vals = vec![0.0; spec.num_cells()];
    for idx in q.cells(&spec) {
        vals[idx] = (f.values()[idx] - c).abs();
    }
    GridFunction::weight(spec, vals).expect("finite deviations")
}

pub fn cz_decompose(f: &GridFunction, q: &Cube, level: f64) -> Result<CzDecomposition> {
    let spec = *f.spec();
    if !q.is_dyadic() || !spec.contains(q) {
        return Err(Error::NotDyadic(*q));
    }
    if !(level > 1.0) {
        return Err(Error::InvalidParameter(format!("CZ level must exceed 1, got {level}")));
    }
    let mean = f.average(q);
    let dev = deviation(f, q, mean);
    let oscillation = dev.average(q);
    let mut stopping = Vec::new();
    let mut stopping_averages = Vec::new();
    let mut stack = vec![*q];
    while let Some(p) = stack.pop() {
        let a = dev.average(&p);
        if a > level {
            stopping.push(p);
            stopping_averages.push(a);
        } else if p.side() > 1 {
            stack.extend(p.children().into_iter().rev());
        }
    }
    let cell_stops = stopping.iter().filter(|c| c.side() == 1).count();

    let mut good = vec![0.0; spec.num_cells()];
    let mut bad = vec![0.0; spec.num_cells()];
    for idx in q.cells(&spec) {
        good[idx] = f.values()[idx] - mean;
    }
    for c in &stopping {
        let fc = f.average(c);
        for idx in c.cells(&spec) {
            good[idx] = fc - mean;
            bad[idx] = f.values()[idx] - fc;
        }
    }
    Ok(CzDecomposition {
        spec,
        root: *q,
        level,
        mean,
        oscillation,
        stopping,
        stopping_averages,
        cell_stops,
        good: GridFunction::signed(spec, good)?,
        bad: GridFunction::signed(spec, bad)?,
    })
}

impl CzDecomposition {
    /// `|Ω_L|` in cells.
    pub fn exceptional_cells(&self) -> usize {
        self.stopping.iter().map(Cube::cell_count).sum()
    }

    /// Re-asserts the six decomposition invariants against `f`.
    ///
    /// The upper bound `⨍_{Q_j} ≤ 2^d L` is skipped when the root itself is selected;
    /// that event is reported in the returned [`CzCheck`].
    pub fn check(&self, f: &GridFunction) -> Result<CzCheck> {
        let spec = self.spec;
        let d = spec.dim() as i32;
        let upper = 2f64.powi(d) * self.level;
        let dev = deviation(f, &self.root, self.mean);
        let scale = dev.values().iter().fold(0.0f64, |m, &v| m.max(v)).max(f64::MIN_POSITIVE);
        let tol = 1e-12;
        let fail = |msg: String| Err(Error::Hypothesis(msg));
        let mut report = CzCheck::default();
        let mut in_omega = vec![false; spec.num_cells()];
        for c in &self.stopping {
            if !self.root.contains_cube(c) || !c.is_dyadic() {
                return fail(format!("stopping cube {c} is not a dyadic subcube of the root"));
            }
            let a = dev.average(c);
            if !(a > self.level) {
                return fail(format!("stopping cube {c} has average {a} ≤ L = {}", self.level));
            }
            if *c == self.root {
                report.root_selected = true;
            } else {
                if a > upper * (1.0 + tol) {
                    return fail(format!("stopping cube {c} has average {a} > 2^d L = {upper}"));
                }
                let mut p = c.parent();
                loop {
                    let pa = dev.average(&p);
                    if pa > self.level {
                        return fail(format!("ancestor {p} of {c} has average {pa} > L"));
                    }
                    if p == self.root {
                        break;
                    }
                    p = p.parent();
                }
            }
            report.max_stopping_ratio = report.max_stopping_ratio.max(a / self.level);
            for idx in c.cells(&spec) {
                if in_omega[idx] {
                    return fail(format!("stopping cube {c} overlaps another"));
                }
                in_omega[idx] = true;
            }
        }
        let covered = self.exceptional_cells() as f64;
        let bound = self.root.cell_count() as f64 * self.oscillation / self.level;
        if covered > bound * (1.0 + tol) {
            return fail(format!("|Ω| = {covered} cells exceeds |Q| osc / L = {bound}"));
        }
        for idx in self.root.cells(&spec) {
            let g = self.good.values()[idx];
            let b = self.bad.values()[idx];
            let err = (f.values()[idx] - self.mean - g - b).abs();
            report.reconstruction_error = report.reconstruction_error.max(err);
            if err > tol * scale.max(self.mean.abs()) {
                return fail(format!("f - f_Q ≠ g + b at cell {idx} (error {err})"));
            }
            report.max_good = report.max_good.max(g.abs());
            if !report.root_selected && g.abs() > upper * (1.0 + tol) {
                return fail(format!("|g| = {} > 2^d L at cell {idx}", g.abs()));
            }
            if !in_omega[idx] && b != 0.0 {
                return fail(format!("bad part nonzero outside Ω at cell {idx}"));
            }
        }
        for c in &self.stopping {
            let m = self.bad.average(c).abs();
            report.max_bad_mean = report.max_bad_mean.max(m);
            if m > tol * scale {
                return fail(format!("bad part has mean {m} on {c}"));
            }
        }
        Ok(report)
    }
}

/// Wraps the stopping cubes as a small family of the root.
pub fn small_family_from_cz(dec: &CzDecomposition) -> SmallFamily {
    SmallFamily::new(&dec.spec, dec.root, dec.stopping.clone())
        .expect("stopping cubes are disjoint subcubes of the root")
}

/// Dyadic cubes with pairwise disjoint witness sets `E_P ⊆ P` (cell indices).
#[derive(Clone, Debug, Serialize)]
pub struct SparseFamily {
    pub root: Cube,
    /// Parents precede children.
    pub cubes: Vec<Cube>,
    /// Index of the nearest strict ancestor inside the family.
    pub parents: Vec<Option<usize>>,
    #[serde(skip)]
    pub witness: Vec<Vec<usize>>,
}

impl SparseFamily {
    /// Orders `cubes` by decreasing side and links each to its nearest family ancestor.
    pub fn new(root: Cube, cubes: Vec<Cube>, witness: Vec<Vec<usize>>) -> Result<Self> {
        if cubes.len() != witness.len() {
            return Err(Error::InvalidParameter("one witness set per cube required".into()));
        }
        let mut pairs: Vec<(Cube, Vec<usize>)> = cubes.into_iter().zip(witness).collect();
        pairs.sort_by_key(|(c, _)| (-c.side(), c.origin()));
        let (cubes, witness): (Vec<Cube>, Vec<Vec<usize>>) = pairs.into_iter().unzip();
        let mut index = HashMap::new();
        for (i, c) in cubes.iter().enumerate() {
            if !c.is_dyadic() || !root.contains_cube(c) {
                return Err(Error::NotDyadic(*c));
            }
            if index.insert(*c, i).is_some() {
                return Err(Error::InvalidParameter(format!("{c} listed twice")));
            }
        }
        let parents = cubes
            .iter()
            .map(|c| {
                let mut p = *c;
                while p != root {
                    p = p.parent();
                    if let Some(&i) = index.get(&p) {
                        return Some(i);
                    }
                }
                None
            })
            .collect();
        Ok(SparseFamily { root, cubes, parents, witness })
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// `Σ_{R ⊆ P, R ∈ S} a(R)` for every `P ∈ S`.
    pub fn subtree_sums(&self, a: &[f64]) -> Vec<f64> {
        let mut s = a.to_vec();
        for i in (0..self.cubes.len()).rev() {
            if let Some(p) = self.parents[i] {
                s[p] += s[i];
            }
        }
        s
    }

    /// `Σ a(P_k)` over chains `P_k ⊆ ... ⊆ P_1` of length `k ≥ 1` in the family.
    pub fn chain_sum(&self, a: &[f64], k: usize) -> f64 {
        let mut t = a.to_vec();
        for _ in 1..k {
            t = self.subtree_sums(&t);
        }
        t.iter().sum()
    }

    /// Number of family cubes containing each cell.
    pub fn multiplicity(&self, spec: &GridSpec) -> Vec<u32> {
        let mut m = vec![0u32; spec.num_cells()];
        for c in &self.cubes {
            for idx in c.cells(spec) {
                m[idx] += 1;
            }
        }
        m
    }
}

/// Checks `η|P| ≤ |E_P|`, `E_P ⊆ P`, pairwise disjointness of the `E_P`, and the
/// equivalent Carleson layering (maximal children cover at most `(1-η)|P|`).
pub fn is_sparse(spec: &GridSpec, s: &SparseFamily, eta: f64) -> bool {
    let mut mark = vec![false; spec.num_cells()];
    for (c, e) in s.cubes.iter().zip(&s.witness) {
        if (e.len() as f64) < eta * c.cell_count() as f64 {
            return false;
        }
        for &idx in e {
            if idx >= mark.len() || mark[idx] || !c.contains_cell(spec.coords(idx)) {
                return false;
            }
            mark[idx] = true;
        }
    }
    let mut children = vec![0usize; s.len()];
    for (i, p) in s.parents.iter().enumerate() {
        if let Some(p) = p {
            children[*p] += s.cubes[i].cell_count();
        }
    }
    s.cubes
        .iter()
        .zip(&children)
        .all(|(c, &k)| k as f64 <= (1.0 - eta) * c.cell_count() as f64 + 1e-9)
}

/// Sparse family with the local oscillations and the measured domination constant.
#[derive(Clone, Debug, Serialize)]
pub struct SparseDomination {
    pub family: SparseFamily,
    /// `⨍_P |f - f_P|` per family cube.
    pub oscillation: Vec<f64>,
    /// Smallest `c` with `|f - f_Q| ≤ c Σ_P osc_P χ_P` on every cell of the root.
    pub c_meas: f64,
}

/// Iterated stopping family: from each `P`, stop at the maximal dyadic `R ⊊ P` with
/// `⨍_R |f - f_P| > factor · ⨍_P |f - f_P|`; recursion ends where `f` is constant.
pub fn iterated_stopping_family(
    f: &GridFunction,
    q: &Cube,
    factor: f64,
) -> Result<(SparseFamily, Vec<f64>)> {
    let spec = *f.spec();
    if !q.is_dyadic() || !spec.contains(q) {
        return Err(Error::NotDyadic(*q));
    }
    let vals = f.values();
    let mut cubes = Vec::new();
    let mut witness = Vec::new();
    let mut osc = Vec::new();
    let mut queue = std::collections::VecDeque::from([*q]);
    while let Some(p) = queue.pop_front() {
        let cells = p.cells(&spec);
        let local = |idx: usize| -> usize {
            let c = spec.coords(idx);
            let o = p.origin();
            match spec.dim() {
                1 => c[0] - o[0] as usize,
                _ => (c[0] - o[0] as usize) * p.side() as usize + (c[1] - o[1] as usize),
            }
        };
        let fp = f.average(&p);
        // cells come in row-major order of p, so position == local(idx)
        let dev: Vec<f64> = cells.iter().map(|&i| (vals[i] - fp).abs()).collect();
        let op = dev.iter().sum::<f64>() / cells.len() as f64;
        let mut stoppers = Vec::new();
        if op > 0.0 && p.side() > 1 {
            let thr = factor * op;
            let mut stack = p.children();
            while let Some(r) = stack.pop() {
                let rc = r.cells(&spec);
                let a = rc.iter().map(|&i| dev[local(i)]).sum::<f64>() / rc.len() as f64;
                if a > thr {
                    stoppers.push(r);
                } else if r.side() > 1 {
                    stack.extend(r.children());
                }
            }
        }
        let mut inside = vec![false; cells.len()];
        stoppers.sort();
        for r in &stoppers {
            for idx in r.cells(&spec) {
                inside[local(idx)] = true;
            }
        }
        let e: Vec<usize> =
            cells.iter().copied().filter(|&idx| !inside[local(idx)]).collect();
        cubes.push(p);
        witness.push(e);
        osc.push(op);
        queue.extend(stoppers);
    }
    let fam = SparseFamily::new(*q, cubes.clone(), witness)?;
    // SparseFamily::new reorders; realign the oscillations
    let pos: HashMap<Cube, f64> = cubes.into_iter().zip(osc).collect();
    let osc = fam.cubes.iter().map(|c| pos[c]).collect();
    Ok((fam, osc))
}

/// Sparse family of `f` on `q` with stopping factor `2^{d+1}`, plus the measured `c`.
pub fn sparse_dominate(f: &GridFunction, q: &Cube) -> Result<SparseDomination> {
    let spec = *f.spec();
    let factor = 2f64.powi(spec.dim() as i32 + 1);
    let (family, oscillation) = iterated_stopping_family(f, q, factor)?;
    let mut rhs = vec![0.0; spec.num_cells()];
    for (c, o) in family.cubes.iter().zip(&oscillation) {
        for idx in c.cells(&spec) {
            rhs[idx] += o;
        }
    }
    let mean = f.average(q);
    let mut c_meas = 0.0f64;
    for idx in q.cells(&spec) {
        let lhs = (f.values()[idx] - mean).abs();
        if lhs > 0.0 {
            c_meas = c_meas.max(if rhs[idx] > 0.0 { lhs / rhs[idx] } else { f64::INFINITY });
        }
    }
    Ok(SparseDomination { family, oscillation, c_meas })
}
