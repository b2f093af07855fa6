//! Piecewise-constant functions on the uniform dyadic grid of `[0,1)^d`.
//!
//! A [`GridFunction`] carries a compensated (double-double) summed-area table so
//! that box integrals over grid-aligned cubes are O(1) and keep full relative
//! precision even for weights spanning many orders of magnitude. Everything
//! outside the unit cube is treated as zero.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_DEPTH_1D: u32 = 24;
const MAX_DEPTH_2D: u32 = 12;

/// Uniform grid with `2^depth` cells per axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(rename = "d")]
    dim: usize,
    #[serde(rename = "J")]
    depth: u32,
}

impl GridSpec {
    pub fn new(dim: usize, depth: u32) -> Result<Self> {
        let max = match dim {
            1 => MAX_DEPTH_1D,
            2 => MAX_DEPTH_2D,
            _ => return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1, 2}}"))),
        };
        if depth > max {
            return Err(Error::InvalidGrid(format!("depth {depth} exceeds {max} for d={dim}")));
        }
        Ok(GridSpec { dim, depth })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Cells per axis, `N = 2^J`.
    pub fn side(&self) -> usize {
        1usize << self.depth
    }

    pub fn cell_len(&self) -> f64 {
        1.0 / self.side() as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_len().powi(self.dim as i32)
    }

    pub fn num_cells(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    pub fn unit_cube(&self) -> Cube {
        Cube::new(self.dim, [0, 0], self.side() as i64)
    }

    /// Row-major index of a cell; the first axis varies slowest.
    pub fn index(&self, coords: [usize; 2]) -> usize {
        match self.dim {
            1 => coords[0],
            _ => coords[0] * self.side() + coords[1],
        }
    }

    pub fn coords(&self, index: usize) -> [usize; 2] {
        match self.dim {
            1 => [index, 0],
            _ => [index / self.side(), index % self.side()],
        }
    }

    pub fn midpoint(&self, index: usize) -> [f64; 2] {
        let c = self.coords(index);
        let h = self.cell_len();
        let mut x = [(c[0] as f64 + 0.5) * h, 0.0];
        if self.dim == 2 {
            x[1] = (c[1] as f64 + 0.5) * h;
        }
        x
    }

    /// Whether the exhaustive all-grid-aligned family is affordable at this size.
    pub fn full_family_feasible(&self) -> bool {
        match self.dim {
            1 => self.depth <= 11,
            _ => self.depth <= 6,
        }
    }

    pub fn contains(&self, cube: &Cube) -> bool {
        let n = self.side() as i64;
        (0..self.dim).all(|a| cube.origin[a] >= 0 && cube.origin[a] + cube.side <= n)
    }
}

/// Axis-parallel cube of the grid: integer cell origin and side length in cells.
///
/// Only doubled cubes may stick out of the unit cube.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cube {
    dim: usize,
    origin: [i64; 2],
    side: i64,
}

impl Cube {
    pub fn new(dim: usize, origin: [i64; 2], side: i64) -> Self {
        assert!(dim == 1 || dim == 2, "dimension must be 1 or 2");
        assert!(side >= 1, "cube side must be positive");
        let origin = if dim == 1 { [origin[0], 0] } else { origin };
        Cube { dim, origin, side }
    }

    /// Cube in `d = 1`: `[o h, (o + s) h)`.
    pub fn interval(origin: i64, side: i64) -> Self {
        Cube::new(1, [origin, 0], side)
    }

    pub fn square(origin: [i64; 2], side: i64) -> Self {
        Cube::new(2, origin, side)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn origin(&self) -> [i64; 2] {
        self.origin
    }

    pub fn side(&self) -> i64 {
        self.side
    }

    pub fn volume(&self, spec: &GridSpec) -> f64 {
        (self.side as f64 * spec.cell_len()).powi(self.dim as i32)
    }

    /// Number of grid cells covered, ignoring the domain.
    pub fn cell_count(&self) -> usize {
        (self.side as usize).pow(self.dim as u32)
    }

    pub fn is_dyadic(&self) -> bool {
        let s = self.side;
        s > 0
            && (s as u64).is_power_of_two()
            && (0..self.dim).all(|a| self.origin[a] >= 0 && self.origin[a] % s == 0)
    }

    pub fn contains_cube(&self, other: &Cube) -> bool {
        (0..self.dim).all(|a| {
            other.origin[a] >= self.origin[a]
                && other.origin[a] + other.side <= self.origin[a] + self.side
        })
    }

    pub fn contains_cell(&self, coords: [usize; 2]) -> bool {
        (0..self.dim).all(|a| {
            let c = coords[a] as i64;
            c >= self.origin[a] && c < self.origin[a] + self.side
        })
    }

    pub fn intersects(&self, other: &Cube) -> bool {
        (0..self.dim).all(|a| {
            self.origin[a] < other.origin[a] + other.side
                && other.origin[a] < self.origin[a] + self.side
        })
    }

    /// Doubled cube: side `2s`, origin shifted by `floor(s/2)` so that it always contains `self`.
    pub fn doubled(&self) -> Cube {
        let shift = self.side / 2;
        let mut origin = self.origin;
        for o in origin.iter_mut().take(self.dim) {
            *o -= shift;
        }
        Cube { dim: self.dim, origin, side: 2 * self.side }
    }

    /// Dyadic children in index order (first axis slowest).
    pub fn children(&self) -> Vec<Cube> {
        debug_assert!(self.side >= 2);
        let h = self.side / 2;
        match self.dim {
            1 => vec![
                Cube::interval(self.origin[0], h),
                Cube::interval(self.origin[0] + h, h),
            ],
            _ => {
                let [x, y] = self.origin;
                vec![
                    Cube::square([x, y], h),
                    Cube::square([x, y + h], h),
                    Cube::square([x + h, y], h),
                    Cube::square([x + h, y + h], h),
                ]
            }
        }
    }

    pub fn parent(&self) -> Cube {
        let s = 2 * self.side;
        let mut origin = self.origin;
        for o in origin.iter_mut().take(self.dim) {
            *o = o.div_euclid(s) * s;
        }
        Cube { dim: self.dim, origin, side: s }
    }

    /// Intersection with the domain as half-open cell ranges per axis.
    pub fn clip(&self, spec: &GridSpec) -> Option<[(usize, usize); 2]> {
        let n = spec.side() as i64;
        let mut r = [(0usize, 1usize); 2];
        for (a, slot) in r.iter_mut().enumerate().take(self.dim) {
            let lo = self.origin[a].max(0);
            let hi = (self.origin[a] + self.side).min(n);
            if lo >= hi {
                return None;
            }
            *slot = (lo as usize, hi as usize);
        }
        Some(r)
    }

    /// Cell indices of `self ∩ [0,1)^d` in row-major order.
    pub fn cells(&self, spec: &GridSpec) -> Vec<usize> {
        let Some(r) = self.clip(spec) else {
            return Vec::new();
        };
        match self.dim {
            1 => (r[0].0..r[0].1).collect(),
            _ => {
                let n = spec.side();
                let mut out = Vec::with_capacity((r[0].1 - r[0].0) * (r[1].1 - r[1].0));
                for i in r[0].0..r[0].1 {
                    out.extend((r[1].0..r[1].1).map(|j| i * n + j));
                }
                out
            }
        }
    }
}

impl fmt::Display for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.dim {
            1 => write!(f, "[o=({}), s={}]", self.origin[0], self.side),
            _ => write!(f, "[o=({}, {}), s={}]", self.origin[0], self.origin[1], self.side),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CubeRepr {
    o: Vec<i64>,
    s: i64,
}

impl Serialize for Cube {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CubeRepr { o: self.origin[..self.dim].to_vec(), s: self.side }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cube {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = CubeRepr::deserialize(d)?;
        if r.o.is_empty() || r.o.len() > 2 || r.s < 1 {
            return Err(serde::de::Error::custom("cube needs 1 or 2 offsets and side >= 1"));
        }
        let origin = [r.o[0], r.o.get(1).copied().unwrap_or(0)];
        Ok(Cube::new(r.o.len(), origin, r.s))
    }
}

/// Which cubes a supremum ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Dyadic,
    Full,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dyadic" => Ok(Family::Dyadic),
            "full" => Ok(Family::Full),
            other => Err(Error::InvalidParameter(format!("unknown family {other:?}"))),
        }
    }
}

/// Dyadic cubes level by level from the root; full family by descending side, then origin.
pub fn enumerate_cubes(spec: &GridSpec, family: Family) -> Vec<Cube> {
    let n = spec.side() as i64;
    let d = spec.dim();
    let mut out = Vec::new();
    match family {
        Family::Dyadic => {
            let mut s = n;
            while s >= 1 {
                let k = n / s;
                for i in 0..k {
                    if d == 1 {
                        out.push(Cube::interval(i * s, s));
                    } else {
                        for j in 0..k {
                            out.push(Cube::square([i * s, j * s], s));
                        }
                    }
                }
                s /= 2;
            }
        }
        Family::Full => {
            for s in (1..=n).rev() {
                for i in 0..=(n - s) {
                    if d == 1 {
                        out.push(Cube::interval(i, s));
                    } else {
                        for j in 0..=(n - s) {
                            out.push(Cube::square([i, j], s));
                        }
                    }
                }
            }
        }
    }
    out
}

/// Dyadic subcubes of `root` (root first, then level by level).
pub fn dyadic_subcubes(root: &Cube) -> Vec<Cube> {
    let mut out = vec![*root];
    let mut i = 0;
    while i < out.len() {
        let c = out[i];
        if c.side() > 1 {
            out.extend(c.children());
        }
        i += 1;
    }
    out
}

/// Double-double accumulator used for the summed-area table.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn add(self, other: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = fast_two_sum(s, e);
        Dd { hi, lo }
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    fn sub(self, other: Dd) -> Dd {
        self.add(other.neg())
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

/// Piecewise-constant function on the grid, zero outside `[0,1)^d`.
#[derive(Clone, Debug)]
pub struct GridFunction {
    spec: GridSpec,
    values: Vec<f64>,
    nonneg: bool,
    prefix: Vec<Dd>,
}

impl PartialEq for GridFunction {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.nonneg == other.nonneg && self.values == other.values
    }
}

impl GridFunction {
    pub fn new(spec: GridSpec, values: Vec<f64>, nonneg: bool) -> Result<Self> {
        if values.len() != spec.num_cells() {
            return Err(Error::InvalidGrid(format!(
                "expected {} cell values, got {}",
                spec.num_cells(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite value at cell {i}")));
        }
        if nonneg {
            if let Some(i) = values.iter().position(|&v| v < 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "negative value {} at cell {i} of a weight",
                    values[i]
                )));
            }
        }
        let prefix = build_prefix(&spec, &values);
        Ok(GridFunction { spec, values, nonneg, prefix })
    }

    pub fn weight(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        Self::new(spec, values, true)
    }

    pub fn signed(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        Self::new(spec, values, false)
    }

    pub fn constant(spec: GridSpec, c: f64) -> Self {
        Self::new(spec, vec![c; spec.num_cells()], c >= 0.0).expect("finite constant")
    }

    /// Samples `f` at cell midpoints.
    pub fn from_midpoints(
        spec: GridSpec,
        nonneg: bool,
        f: impl Fn([f64; 2]) -> f64,
    ) -> Result<Self> {
        let values = (0..spec.num_cells()).map(|i| f(spec.midpoint(i))).collect();
        Self::new(spec, values, nonneg)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_weight(&self) -> bool {
        self.nonneg
    }

    pub fn map(&self, nonneg: bool, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.spec, self.values.iter().map(|&v| f(v)).collect(), nonneg)
    }

    pub fn abs(&self) -> Self {
        self.map(true, f64::abs).expect("abs of finite values")
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        self.map(self.nonneg && c >= 0.0, |v| v * c)
    }

    /// Sum of cell values over `cube ∩ [0,1)^d` (no `h^d` factor).
    pub fn cell_sum(&self, cube: &Cube) -> f64 {
        let Some(r) = cube.clip(&self.spec) else {
            return 0.0;
        };
        match self.spec.dim {
            1 => self.prefix[r[0].1].sub(self.prefix[r[0].0]).value(),
            _ => {
                let w = self.spec.side() + 1;
                let p = |i: usize, j: usize| self.prefix[i * w + j];
                p(r[0].1, r[1].1)
                    .sub(p(r[0].0, r[1].1))
                    .sub(p(r[0].1, r[1].0))
                    .add(p(r[0].0, r[1].0))
                    .value()
            }
        }
    }

    /// `∫_Q f` with the zero extension.
    pub fn integrate(&self, cube: &Cube) -> f64 {
        self.cell_sum(cube) * self.spec.cell_volume()
    }

    /// `f_Q = |Q|^{-1} ∫_Q f` with `|Q|` the full geometric volume.
    pub fn average(&self, cube: &Cube) -> f64 {
        self.cell_sum(cube) / cube.cell_count() as f64
    }

    pub fn total(&self) -> f64 {
        self.integrate(&self.spec.unit_cube())
    }

    pub fn at(&self, coords: [usize; 2]) -> f64 {
        self.values[self.spec.index(coords)]
    }

    /// Writes the binary grid format: one JSON header line, then little-endian f64 cells.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let header = GridHeader { d: self.spec.dim, depth: self.spec.depth, nonneg: self.nonneg };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: impl Read) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut line = Vec::new();
        r.read_until(b'\n', &mut line)?;
        let header: GridHeader = serde_json::from_slice(&line)?;
        let spec = GridSpec::new(header.d, header.depth)?;
        let mut bytes = vec![0u8; spec.num_cells() * 8];
        r.read_exact(&mut bytes)?;
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Self::new(spec, values, header.nonneg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(std::fs::File::open(path)?)
    }

    /// Plain-text loader: one value per line, `N^d` lines, blank lines and `#` comments ignored.
    pub fn load_csv(path: impl AsRef<Path>, dim: usize, nonneg: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_csv(&text, dim, nonneg)
    }

    pub fn parse_csv(text: &str, dim: usize, nonneg: bool) -> Result<Self> {
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let v: f64 = t.parse().map_err(|_| {
                Error::InvalidGrid(format!("line {}: cannot parse {t:?}", lineno + 1))
            })?;
            values.push(v);
        }
        let depth = depth_for(values.len(), dim)?;
        Self::new(GridSpec::new(dim, depth)?, values, nonneg)
    }
}

fn depth_for(count: usize, dim: usize) -> Result<u32> {
    for depth in 0..=MAX_DEPTH_1D {
        let n = 1usize << depth;
        match n.checked_pow(dim as u32) {
            Some(c) if c == count => return Ok(depth),
            Some(c) if c > count => break,
            None => break,
            _ => {}
        }
    }
    Err(Error::InvalidGrid(format!("{count} values is not N^{dim} for a power of two N")))
}

#[derive(Serialize, Deserialize)]
struct GridHeader {
    d: usize,
    #[serde(rename = "J")]
    depth: u32,
    nonneg: bool,
}

fn build_prefix(spec: &GridSpec, values: &[f64]) -> Vec<Dd> {
    let n = spec.side();
    match spec.dim {
        1 => {
            let mut p = Vec::with_capacity(n + 1);
            let mut acc = Dd::default();
            p.push(acc);
            for &v in values {
                acc = acc.add(Dd::from(v));
                p.push(acc);
            }
            p
        }
        _ => {
            let w = n + 1;
            let mut p = vec![Dd::default(); w * w];
            for i in 0..n {
                let mut row = Dd::default();
                for j in 0..n {
                    row = row.add(Dd::from(values[i * n + j]));
                    p[(i + 1) * w + j + 1] = p[i * w + j + 1].add(row);
                }
            }
            p
        }
    }
}
