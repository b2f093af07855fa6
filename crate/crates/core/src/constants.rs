//! Weight-class constants: Fujii–Wilson `A∞`, `A∞,Y`, `A1`, `Ap`, weak `A∞`,
//! `C_p`, and the reverse Hölder check.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::FunctionalY;
use crate::grid::{enumerate_cubes, Cube, Family, GridFunction, GridSpec};
use crate::maximal::{dyadic_maximal, grid_maximal, maximal_integrals};

/// A supremum over the dyadic family and, when affordable, over all grid-aligned cubes.
#[derive(Clone, Debug, Serialize)]
pub struct ConstantReport {
    pub name: String,
    pub dyadic: f64,
    pub full: Option<f64>,
    /// Maximizer of the canonical value.
    pub argmax: Cube,
    #[serde(rename = "J")]
    pub depth: u32,
}

impl ConstantReport {
    /// The all-grid-aligned value when available, otherwise the dyadic one.
    pub fn value(&self) -> f64 {
        self.full.unwrap_or(self.dyadic)
    }
}

/// `∫_Q M(vχ_Q)` over the dyadic family and (if feasible) the full family.
///
/// Computing these is the expensive part of every `A∞`-type constant, so they are
/// computed once per weight and shared between functionals.
#[derive(Clone, Debug)]
pub struct MaximalTable {
    pub spec: GridSpec,
    pub dyadic: Vec<(Cube, f64)>,
    pub full: Option<Vec<(Cube, f64)>>,
}

impl MaximalTable {
    pub fn new(v: &GridFunction) -> Self {
        let full = v.spec().full_family_feasible();
        Self::with_full(v, full)
    }

    pub fn with_full(v: &GridFunction, full: bool) -> Self {
        MaximalTable {
            spec: *v.spec(),
            dyadic: maximal_integrals(v, Family::Dyadic),
            full: full.then(|| maximal_integrals(v, Family::Full)),
        }
    }

    pub fn family(&self, family: Family) -> Option<&[(Cube, f64)]> {
        match family {
            Family::Dyadic => Some(&self.dyadic),
            Family::Full => self.full.as_deref(),
        }
    }
}

fn sup_numerators(
    table: &[(Cube, f64)],
    denom: impl Fn(&Cube) -> f64 + Sync,
) -> Option<(f64, Cube)> {
    let ratios: Vec<Option<f64>> = table
        .par_iter()
        .map(|(q, num)| {
            let d = denom(q);
            (d > 0.0).then(|| num / d)
        })
        .collect();
    let mut best: Option<(f64, Cube)> = None;
    for (r, (q, _)) in ratios.into_iter().zip(table) {
        if let Some(r) = r {
            if best.is_none_or(|(b, _)| r > b) {
                best = Some((r, *q));
            }
        }
    }
    best
}

/// `[v]_{A∞,Y} = sup_Q Y(Q)^{-1} ∫_Q M(vχ_Q)` from a precomputed table.
pub fn ainfty_y_with(
    table: &MaximalTable,
    y: &FunctionalY,
    name: &str,
) -> Result<ConstantReport> {
    let spec = table.spec;
    let eval = |q: &Cube| y.eval(&spec, q);
    let Some((dyadic, arg_d)) = sup_numerators(&table.dyadic, eval) else {
        return Err(Error::Degenerate(format!("{name}: Y vanishes on every cube")));
    };
    let full = table.full.as_ref().and_then(|t| sup_numerators(t, eval));
    Ok(ConstantReport {
        name: name.to_string(),
        dyadic,
        full: full.map(|f| f.0),
        argmax: full.map_or(arg_d, |f| f.1),
        depth: spec.depth(),
    })
}

pub fn ainfty_y(v: &GridFunction, y: &FunctionalY) -> Result<ConstantReport> {
    check_weight(v)?;
    ainfty_y_with(&MaximalTable::new(v), y, "ainfty_y")
}

fn check_weight(w: &GridFunction) -> Result<()> {
    if !w.is_weight() {
        return Err(Error::InvalidParameter("constants need a nonnegative weight".into()));
    }
    if !(w.total() > 0.0) {
        return Err(Error::Degenerate("weight vanishes identically".into()));
    }
    Ok(())
}

/// Fujii–Wilson `[w]_{A∞}`.
pub fn fujii_wilson(w: &GridFunction) -> Result<ConstantReport> {
    check_weight(w)?;
    fujii_wilson_with(&MaximalTable::new(w), w)
}

pub fn fujii_wilson_with(table: &MaximalTable, w: &GridFunction) -> Result<ConstantReport> {
    ainfty_y_with(table, &FunctionalY::Mass(Arc::new(w.clone())), "ainfty")
}

/// `[w]^{weak}_{A∞}`: denominators `w(2Q)`.
pub fn weak_ainfty(w: &GridFunction) -> Result<ConstantReport> {
    check_weight(w)?;
    ainfty_y_with(&MaximalTable::new(w), &FunctionalY::DoubledMass(Arc::new(w.clone())), "weak")
}

/// `[w]_{C_p}`: denominators `∫ M(χ_Q)^p w`.
pub fn cp_constant(w: &GridFunction, p: f64) -> Result<ConstantReport> {
    check_weight(w)?;
    let y = FunctionalY::cp(Arc::new(w.clone()), p)?;
    ainfty_y_with(&MaximalTable::new(w), &y, "cp")
}

fn cell_cube(spec: &GridSpec, idx: usize) -> Cube {
    let c = spec.coords(idx);
    Cube::new(spec.dim(), [c[0] as i64, c[1] as i64], 1)
}

fn cellwise_sup(spec: &GridSpec, m: &GridFunction, w: &GridFunction) -> (f64, Cube) {
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (i, (&mi, &wi)) in m.values().iter().zip(w.values()).enumerate() {
        let r = if wi > 0.0 {
            mi / wi
        } else if mi > 0.0 {
            f64::INFINITY
        } else {
            continue;
        };
        if r > best.0 {
            best = (r, i);
        }
    }
    (best.0, cell_cube(spec, best.1))
}

/// `[w]_{A1} = sup_x M w(x) / w(x)`; `+∞` if `w` vanishes on a cell where `Mw > 0`.
pub fn a1_constant(w: &GridFunction) -> Result<ConstantReport> {
    check_weight(w)?;
    let spec = *w.spec();
    let unit = spec.unit_cube();
    let (dyadic, _) = cellwise_sup(&spec, &dyadic_maximal(w, &unit)?, w);
    let (full, arg_f) = cellwise_sup(&spec, &grid_maximal(w, &unit), w);
    Ok(ConstantReport { name: "a1".into(), dyadic, full: Some(full), argmax: arg_f, depth: spec.depth() })
}

/// `[w]_{Ap} = sup_Q (⨍_Q w)(⨍_Q σ)^{p-1}` with `σ = w^{1-p'}`.
///
/// The dual weight is `None` (and the constant `+∞`) when `w` has a zero cell.
pub fn ap_constant(w: &GridFunction, p: f64) -> Result<(ConstantReport, Option<GridFunction>)> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("A_p needs 1 < p < ∞, got {p}")));
    }
    check_weight(w)?;
    let spec = *w.spec();
    let name = format!("ap(p={p})");
    if w.values().contains(&0.0) {
        let report = ConstantReport {
            name,
            dyadic: f64::INFINITY,
            full: Some(f64::INFINITY),
            argmax: spec.unit_cube(),
            depth: spec.depth(),
        };
        return Ok((report, None));
    }
    let sigma = w.map(true, |v| v.powf(-1.0 / (p - 1.0)))?;
    let sup = |family: Family| {
        let cubes = enumerate_cubes(&spec, family);
        let vals: Vec<f64> = cubes
            .par_iter()
            .map(|q| w.average(q) * sigma.average(q).powf(p - 1.0))
            .collect();
        let (i, v) = vals
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        (v, cubes[i])
    };
    let (dyadic, arg_d) = sup(Family::Dyadic);
    let full = spec.full_family_feasible().then(|| sup(Family::Full));
    let report = ConstantReport {
        name,
        dyadic,
        full: full.map(|f| f.0),
        argmax: full.map_or(arg_d, |f| f.1),
        depth: spec.depth(),
    };
    Ok((report, Some(sigma)))
}

/// Default `τ = 2^{d+1}` in the reverse Hölder exponent.
pub fn default_tau(spec: &GridSpec) -> f64 {
    2f64.powi(spec.dim() as i32 + 1)
}

/// `r = 1 + 1/(τ A)` for a given `A∞`-type constant `A`.
pub fn rh_exponent_from(a: f64, tau: f64) -> f64 {
    1.0 + 1.0 / (tau * a)
}

/// `r(w) = 1 + 1/(τ [w]_{A∞})` with the canonical Fujii–Wilson value.
pub fn rh_exponent(w: &GridFunction, tau: f64) -> Result<f64> {
    Ok(rh_exponent_from(fujii_wilson(w)?.value(), tau))
}

/// Which average sits on the right of the reverse Hölder inequality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RhVariant {
    /// `⨍_Q w`
    Strong,
    /// `⨍_{2Q} w`, checked only on cubes whose double stays inside the domain
    Weak,
}

#[derive(Clone, Debug, Serialize)]
pub struct RhCheck {
    pub holds: bool,
    pub worst: Cube,
    /// `max_Q (⨍_Q w^r)^{1/r} / (c ⨍ w)`
    pub worst_ratio: f64,
    pub cubes: usize,
}

/// Checks `(⨍_Q w^r)^{1/r} ≤ c ⨍ w` over the family.
pub fn rh_check(
    w: &GridFunction,
    r: f64,
    c: f64,
    family: Family,
    variant: RhVariant,
) -> Result<RhCheck> {
    if !(r > 1.0) || !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("need r > 1 and c > 0, got r={r}, c={c}")));
    }
    let spec = *w.spec();
    let powered = w.map(true, |v| v.powf(r))?;
    let cubes: Vec<Cube> = enumerate_cubes(&spec, family)
        .into_iter()
        .filter(|q| variant == RhVariant::Strong || spec.contains(&q.doubled()))
        .collect();
    let ratios: Vec<Option<f64>> = cubes
        .par_iter()
        .map(|q| {
            let rhs = match variant {
                RhVariant::Strong => w.average(q),
                RhVariant::Weak => w.average(&q.doubled()),
            };
            (rhs > 0.0).then(|| powered.average(q).powf(1.0 / r) / (c * rhs))
        })
        .collect();
    let mut worst = (0.0f64, spec.unit_cube());
    for (r, q) in ratios.into_iter().zip(&cubes) {
        if let Some(r) = r {
            if r > worst.0 {
                worst = (r, *q);
            }
        }
    }
    Ok(RhCheck { holds: worst.0 <= 1.0 + 1e-12, worst: worst.1, worst_ratio: worst.0, cubes: cubes.len() })
}
