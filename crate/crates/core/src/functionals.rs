//! Cube functionals `Y(Q)`, L-small families, the `𝒴_q` smallness ratio and the
//! Carleson-sum bound.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::czsparse::cz_decompose;
use crate::error::{Error, Result};
use crate::grid::{dyadic_subcubes, Cube, GridFunction, GridSpec};
use crate::maximal::indicator_maximal;

/// The functional `Y: cubes -> [0, ∞)`.
#[derive(Clone, Debug)]
pub enum FunctionalY {
    /// `|Q|`
    Lebesgue,
    /// `w(Q)`
    Mass(Arc<GridFunction>),
    /// `w(2Q)`, zero extension outside the domain
    DoubledMass(Arc<GridFunction>),
    /// `∫ M(χ_Q)^p w`
    CpIntegral { weight: Arc<GridFunction>, p: f64, kernels: Arc<CpKernels> },
    /// `w_r(Q) = |Q| (⨍_Q w^r)^{1/r}`
    RScale { weight: Arc<GridFunction>, r: f64, powered: Arc<GridFunction> },
}

impl FunctionalY {
    pub fn mass(w: Arc<GridFunction>) -> Self {
        FunctionalY::Mass(w)
    }

    pub fn doubled_mass(w: Arc<GridFunction>) -> Self {
        FunctionalY::DoubledMass(w)
    }

    pub fn cp(weight: Arc<GridFunction>, p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "C_p functional needs p > 1 (the integral diverges otherwise), got {p}"
            )));
        }
        let kernels = Arc::new(CpKernels::new(weight.spec()));
        Ok(FunctionalY::CpIntegral { weight, p, kernels })
    }

    pub fn rscale(weight: Arc<GridFunction>, r: f64) -> Result<Self> {
        if !(r > 1.0) || !r.is_finite() {
            return Err(Error::InvalidParameter(format!("w_r needs 1 < r < ∞, got {r}")));
        }
        let powered = Arc::new(weight.map(true, |v| v.powf(r))?);
        Ok(FunctionalY::RScale { weight, r, powered })
    }

    pub fn name(&self) -> String {
        match self {
            FunctionalY::Lebesgue => "lebesgue".into(),
            FunctionalY::Mass(_) => "mass".into(),
            FunctionalY::DoubledMass(_) => "doubled".into(),
            FunctionalY::CpIntegral { p, .. } => format!("cp(p={p})"),
            FunctionalY::RScale { r, .. } => format!("rscale(r={r})"),
        }
    }

    pub fn weight(&self) -> Option<&Arc<GridFunction>> {
        match self {
            FunctionalY::Lebesgue => None,
            FunctionalY::Mass(w) | FunctionalY::DoubledMass(w) => Some(w),
            FunctionalY::CpIntegral { weight, .. } | FunctionalY::RScale { weight, .. } => {
                Some(weight)
            }
        }
    }

    /// `Y(Q)`; `spec` supplies the cell size for the weightless Lebesgue case.
    pub fn eval(&self, spec: &GridSpec, q: &Cube) -> f64 {
        match self {
            FunctionalY::Lebesgue => q.volume(spec),
            FunctionalY::Mass(w) => w.integrate(q),
            FunctionalY::DoubledMass(w) => w.integrate(&q.doubled()),
            FunctionalY::CpIntegral { weight, p, kernels } => cp_integral(weight, q, *p, kernels),
            FunctionalY::RScale { powered, r, .. } => {
                q.volume(spec) * powered.average(q).powf(1.0 / r)
            }
        }
    }
}

/// Per-side tables of the exact cell integrals of `M(χ_Q)^p` outside `Q` in `d = 1`.
#[derive(Debug)]
pub struct CpKernels {
    per_side: Vec<OnceLock<Vec<f64>>>,
}

impl CpKernels {
    fn new(spec: &GridSpec) -> Self {
        let n = if spec.dim() == 1 { spec.side() + 1 } else { 0 };
        CpKernels { per_side: (0..n).map(|_| OnceLock::new()).collect() }
    }

    /// `k[t] = ∫` over the cell at distance `t` cells from a cube of `side` cells.
    fn get(&self, spec: &GridSpec, side: usize, p: f64) -> &[f64] {
        self.per_side[side].get_or_init(|| {
            let l = side as f64;
            let h = spec.cell_len();
            let scale = l * h / (p - 1.0);
            // tail(t) = (l / (l + t))^{p-1}, t in cells
            let tail = |t: usize| (l / (l + t as f64)).powf(p - 1.0);
            let mut prev = tail(0);
            (0..spec.side())
                .map(|t| {
                    let next = tail(t + 1);
                    let k = scale * (prev - next);
                    prev = next;
                    k
                })
                .collect()
        })
    }
}

/// `∫ M(χ_Q)^p w` over the domain. Exact per cell in `d = 1`; midpoint rule in `d = 2`.
fn cp_integral(w: &GridFunction, q: &Cube, p: f64, kernels: &CpKernels) -> f64 {
    let spec = w.spec();
    let h = spec.cell_len();
    let vals = w.values();
    match spec.dim() {
        1 => {
            let n = spec.side() as i64;
            let lo = q.origin()[0];
            let hi = lo + q.side();
            let kern = kernels.get(spec, q.side() as usize, p);
            let mut total = 0.0;
            for c in lo.max(0)..hi.min(n) {
                total += vals[c as usize];
            }
            total *= h;
            for c in hi.max(0)..n {
                total += vals[c as usize] * kern[(c - hi) as usize];
            }
            for c in 0..lo.min(n) {
                total += vals[c as usize] * kern[(lo - 1 - c) as usize];
            }
            total
        }
        _ => {
            let vol = spec.cell_volume();
            let mut total = 0.0;
            for (idx, &v) in vals.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let coords = spec.coords(idx);
                let m = if q.contains_cell(coords) {
                    1.0
                } else {
                    indicator_maximal(q, spec, spec.midpoint(idx)).powf(p)
                };
                total += v * m;
            }
            total * vol
        }
    }
}

/// Pairwise disjoint subcubes of `root`.
#[derive(Clone, Debug, Serialize)]
pub struct SmallFamily {
    pub root: Cube,
    pub cubes: Vec<Cube>,
    /// Nominal smallness `L`; the family satisfies `Σ|Q_i| ≤ |Q| / L`.
    pub level: f64,
}

impl SmallFamily {
    /// Validates containment and disjointness; the level is the exact smallness `L_eff`.
    pub fn new(spec: &GridSpec, root: Cube, cubes: Vec<Cube>) -> Result<Self> {
        let mut fam = SmallFamily { root, cubes, level: 1.0 };
        fam.validate(spec)?;
        fam.level = fam.l_eff();
        Ok(fam)
    }

    pub fn with_level(spec: &GridSpec, root: Cube, cubes: Vec<Cube>, level: f64) -> Result<Self> {
        if !(level > 1.0) {
            return Err(Error::InvalidParameter(format!("smallness level must exceed 1, got {level}")));
        }
        let fam = SmallFamily { root, cubes, level };
        fam.validate(spec)?;
        let covered = fam.covered_cells() as f64;
        if covered * level > root.cell_count() as f64 {
            return Err(Error::InvalidParameter(format!(
                "family covers {covered} of {} cells, not {level}-small",
                root.cell_count()
            )));
        }
        Ok(fam)
    }

    fn validate(&self, spec: &GridSpec) -> Result<()> {
        let mut mark = vec![false; spec.num_cells()];
        for c in &self.cubes {
            if !self.root.contains_cube(c) || !spec.contains(c) {
                return Err(Error::InvalidParameter(format!("{c} is not inside {}", self.root)));
            }
            for idx in c.cells(spec) {
                if mark[idx] {
                    return Err(Error::InvalidParameter(format!("{c} overlaps another cube")));
                }
                mark[idx] = true;
            }
        }
        Ok(())
    }

    pub fn covered_cells(&self) -> usize {
        self.cubes.iter().map(Cube::cell_count).sum()
    }

    /// `|Q| / Σ|Q_i|`, infinite for the empty family.
    pub fn l_eff(&self) -> f64 {
        let covered = self.covered_cells();
        if covered == 0 {
            f64::INFINITY
        } else {
            self.root.cell_count() as f64 / covered as f64
        }
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }
}

/// `ρ = Σ Y(Q_i) · L_eff^{1/q} / Y(Q)`; `None` for empty families or `Y(Q) = 0`.
pub fn check_yq_smallness(
    y: &FunctionalY,
    spec: &GridSpec,
    q: f64,
    fam: &SmallFamily,
) -> Option<f64> {
    if fam.is_empty() {
        return None;
    }
    let y_root = y.eval(spec, &fam.root);
    if !(y_root > 0.0) {
        return None;
    }
    let sum: f64 = fam.cubes.iter().map(|c| y.eval(spec, c)).sum();
    Some(sum * fam.l_eff().powf(1.0 / q) / y_root)
}

/// Empirical lower estimate of `β_Y`: the largest smallness ratio over sampled families.
pub fn estimate_beta(
    y: &FunctionalY,
    spec: &GridSpec,
    q: f64,
    sampler: &mut FamilySampler,
    trials: usize,
) -> f64 {
    let mut best = 0.0f64;
    for _ in 0..trials {
        let fam = sampler.next_family(y, q);
        if let Some(rho) = check_yq_smallness(y, spec, q, &fam) {
            best = best.max(rho);
        }
    }
    best
}

/// Seeded generator of L-small families.
///
/// Cycles through three kinds: Calderón–Zygmund stopping families of a probe
/// function, the single dyadic subcube maximizing the smallness ratio, and
/// random disjoint dyadic subfamilies.
pub struct FamilySampler {
    spec: GridSpec,
    rng: ChaCha8Rng,
    probes: Vec<GridFunction>,
    step: usize,
}

impl FamilySampler {
    pub fn new(spec: GridSpec, seed: u64, probes: Vec<GridFunction>) -> Self {
        FamilySampler { spec, rng: ChaCha8Rng::seed_from_u64(seed), probes, step: 0 }
    }

    fn random_root(&mut self) -> Cube {
        let j = self.spec.depth();
        let level = self.rng.gen_range(0..j.max(1));
        let side = (self.spec.side() >> level) as i64;
        let k = 1i64 << level;
        let o0 = self.rng.gen_range(0..k) * side;
        let o1 = if self.spec.dim() == 2 { self.rng.gen_range(0..k) * side } else { 0 };
        Cube::new(self.spec.dim(), [o0, o1], side)
    }

    pub fn next_family(&mut self, y: &FunctionalY, q: f64) -> SmallFamily {
        let kind = self.step % 3;
        self.step += 1;
        let root = self.random_root();
        if root.side() < 2 {
            return SmallFamily { root, cubes: Vec::new(), level: f64::INFINITY };
        }
        match kind {
            0 if !self.probes.is_empty() => {
                let i = self.rng.gen_range(0..self.probes.len());
                let level = self.rng.gen_range(1.5..16.0);
                let probe = &self.probes[i];
                let osc = mean_oscillation(probe, &root);
                if osc > 0.0 {
                    let scaled = probe.scaled(1.0 / osc).expect("finite");
                    if let Ok(dec) = cz_decompose(&scaled, &root, level) {
                        if !dec.stopping.is_empty() && !dec.stopping.contains(&root) {
                            return SmallFamily::new(&self.spec, root, dec.stopping)
                                .expect("stopping cubes are disjoint dyadic subcubes");
                        }
                    }
                }
                self.adversarial(y, q, root)
            }
            1 | 0 => self.adversarial(y, q, root),
            _ => self.random_subfamily(root),
        }
    }

    fn adversarial(&mut self, y: &FunctionalY, q: f64, root: Cube) -> SmallFamily {
        let spec = self.spec;
        let best = dyadic_subcubes(&root)
            .into_iter()
            .skip(1)
            .map(|c| {
                let ratio = y.eval(&spec, &c)
                    * (root.cell_count() as f64 / c.cell_count() as f64).powf(1.0 / q);
                (c, ratio)
            })
            .fold(None::<(Cube, f64)>, |acc, (c, r)| match acc {
                Some((_, br)) if br >= r => acc,
                _ => Some((c, r)),
            });
        let cubes = best.map(|(c, _)| vec![c]).unwrap_or_default();
        SmallFamily::new(&spec, root, cubes).expect("single subcube")
    }

    fn random_subfamily(&mut self, root: Cube) -> SmallFamily {
        let max_down = root.side().trailing_zeros().max(1);
        let down = self.rng.gen_range(1..=max_down);
        let side = root.side() >> down;
        let k = 1i64 << down;
        let keep = self.rng.gen_range(0.05..0.6);
        let mut cubes = Vec::new();
        let d = self.spec.dim();
        for i in 0..k {
            for j in 0..if d == 2 { k } else { 1 } {
                if self.rng.gen_bool(keep) {
                    let o = root.origin();
                    cubes.push(Cube::new(d, [o[0] + i * side, o[1] + j * side], side));
                }
            }
        }
        let total = if d == 2 { k * k } else { k } as usize;
        if cubes.len() == total {
            cubes.pop();
        }
        SmallFamily::new(&self.spec, root, cubes).expect("disjoint dyadic cubes")
    }
}

fn mean_oscillation(f: &GridFunction, q: &Cube) -> f64 {
    let spec = f.spec();
    let mean = f.average(q);
    let cells = q.cells(spec);
    cells.iter().map(|&i| (f.values()[i] - mean).abs()).sum::<f64>() / cells.len() as f64
}

/// Carleson-sum bound: returns `(Σ_{P∈F} Y(P), κ)` with `κ = β / (1 - L^{-1/q})`.
///
/// `root` is always treated as a member of `F`. Every cube of `F` must be a dyadic
/// subcube of `root` whose maximal strict `F`-subcubes cover at most `|P| / L`.
pub fn carleson_sum(
    y: &FunctionalY,
    spec: &GridSpec,
    q: f64,
    family: &[Cube],
    root: &Cube,
    level: f64,
    beta: f64,
) -> Result<(f64, f64)> {
    if !(level > 1.0) || !(q > 1.0) {
        return Err(Error::InvalidParameter(format!("need L > 1 and q > 1, got L={level}, q={q}")));
    }
    let mut members: Vec<Cube> = family.to_vec();
    members.push(*root);
    members.sort();
    members.dedup();
    for c in &members {
        if !c.is_dyadic() || !root.contains_cube(c) {
            return Err(Error::NotDyadic(*c));
        }
    }
    let set: HashMap<Cube, usize> = members.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let mut children_cells = vec![0u64; members.len()];
    for c in &members {
        if c == root {
            continue;
        }
        let mut p = c.parent();
        loop {
            if let Some(&i) = set.get(&p) {
                children_cells[i] += c.cell_count() as u64;
                break;
            }
            p = p.parent();
        }
    }
    for (c, &cc) in members.iter().zip(&children_cells) {
        if cc as f64 * level > c.cell_count() as f64 {
            return Err(Error::NotCarleson {
                cube: *c,
                children: cc as f64 / c.cell_count() as f64,
                bound: 1.0 / level,
            });
        }
    }
    let lhs: f64 = members.iter().map(|c| y.eval(spec, c)).sum();
    let kappa = beta / (1.0 - level.powf(-1.0 / q));
    Ok((lhs, kappa))
}
