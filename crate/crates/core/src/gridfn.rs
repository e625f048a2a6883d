//! Nonnegative functions sampled at the cell centers of a rectangular grid.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shape::{Bounds, ShapeSet};

/// Cell-centered rectangular grid; values are stored row-major (last axis
/// fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lower: Vec<f64>,
    pub h: Vec<f64>,
    pub dims: Vec<usize>,
}

impl Grid {
    /// Grid covering `[lower, upper]` with spacing `h` on every axis. The box
    /// side lengths must be whole multiples of `h`.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, h: f64) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::dim("grid corners must share a positive dimension"));
        }
        if !(h > 0.0) {
            return Err(Error::arg(format!("grid spacing must be positive, got {h}")));
        }
        let mut dims = Vec::with_capacity(lower.len());
        for (lo, hi) in lower.iter().zip(&upper) {
            let cells = (hi - lo) / h;
            let n = cells.round();
            if n < 1.0 || (cells - n).abs() > 1e-6 {
                return Err(Error::arg(format!(
                    "box side {} is not a positive multiple of h = {h}",
                    hi - lo
                )));
            }
            dims.push(n as usize);
        }
        Ok(Self {
            h: vec![h; lower.len()],
            lower,
            dims,
        })
    }

    pub fn d(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.iter().product()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.h)
            .zip(&self.dims)
            .map(|((lo, h), n)| lo + h * *n as f64)
            .collect()
    }

    pub fn bounds(&self) -> Bounds {
        Bounds {
            lo: self.lower.clone(),
            hi: self.upper(),
        }
    }

    /// Row-major multi-index of the flat index `flat`.
    pub fn unflatten(&self, mut flat: usize, out: &mut [usize]) {
        for axis in (0..self.d()).rev() {
            out[axis] = flat % self.dims[axis];
            flat /= self.dims[axis];
        }
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.dims).fold(0, |acc, (i, n)| acc * n + i)
    }

    /// Center of the cell with flat index `flat`.
    pub fn center_into(&self, flat: usize, out: &mut [f64]) {
        let mut rem = flat;
        for axis in (0..self.d()).rev() {
            let i = rem % self.dims[axis];
            rem /= self.dims[axis];
            out[axis] = self.lower[axis] + (i as f64 + 0.5) * self.h[axis];
        }
    }

    pub fn center(&self, flat: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.d()];
        self.center_into(flat, &mut out);
        out
    }

    /// Flat index of the cell containing `x`, if inside the box.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        let mut flat = 0;
        for axis in 0..self.d() {
            let t = ((x[axis] - self.lower[axis]) / self.h[axis]).floor();
            if t < 0.0 || t >= self.dims[axis] as f64 {
                return None;
            }
            flat = flat * self.dims[axis] + t as usize;
        }
        Some(flat)
    }

    /// The grid extended by `r` on every side, rounded outward to whole cells.
    pub fn dilated(&self, r: f64) -> Grid {
        let mut lower = Vec::with_capacity(self.d());
        let mut dims = Vec::with_capacity(self.d());
        for axis in 0..self.d() {
            let pad = (r / self.h[axis] - 1e-9).ceil().max(0.0) as usize;
            lower.push(self.lower[axis] - pad as f64 * self.h[axis]);
            dims.push(self.dims[axis] + 2 * pad);
        }
        Grid {
            lower,
            h: self.h.clone(),
            dims,
        }
    }

    /// Smallest grid with the same spacing containing both grids, anchored at
    /// `self`'s lattice.
    pub fn union(&self, other: &Grid) -> Grid {
        let mut lower = Vec::with_capacity(self.d());
        let mut dims = Vec::with_capacity(self.d());
        let up_a = self.upper();
        let up_b = other.upper();
        for axis in 0..self.d() {
            let h = self.h[axis];
            let lo_steps = ((other.lower[axis] - self.lower[axis]) / h - 1e-9).floor().min(0.0);
            let lo = self.lower[axis] + lo_steps * h;
            let hi = up_a[axis].max(up_b[axis]);
            let n = ((hi - lo) / h - 1e-9).ceil() as usize;
            lower.push(lo);
            dims.push(n);
        }
        Grid {
            lower,
            h: self.h.clone(),
            dims,
        }
    }
}

/// A nonnegative function on a grid. When built from a [`ShapeSet`] the set
/// is retained and point evaluation uses exact membership; otherwise point
/// evaluation interpolates multilinearly between cell centers, with zero
/// outside the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<ShapeSet>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::arg(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::arg(format!("grid values must be finite and nonnegative, got {v}")));
        }
        Ok(Self {
            grid,
            values,
            shape: None,
        })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
            shape: None,
        }
    }

    /// Samples `f` at every cell center; negative samples are clamped to 0.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut x = vec![0.0; grid.d()];
        let values = (0..grid.len())
            .map(|i| {
                grid.center_into(i, &mut x);
                f(&x).max(0.0)
            })
            .collect();
        Self {
            grid,
            values,
            shape: None,
        }
    }

    pub fn d(&self) -> usize {
        self.grid.d()
    }

    pub fn scaled(&self, c: f64) -> GridFunction {
        assert!(c >= 0.0, "scale factor must be nonnegative");
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
            shape: None,
        }
    }

    /// Pointwise power `f^e`; keeps the shape (indicators are fixed points).
    pub fn powf(&self, e: f64) -> GridFunction {
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.powf(e)).collect(),
            shape: self.shape.clone(),
        }
    }

    /// Value at an arbitrary point.
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Some(s) => {
                if s.contains(x) {
                    1.0
                } else {
                    0.0
                }
            }
            None => self.interpolate(x),
        }
    }

    /// Multilinear interpolation between cell centers.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let d = self.d();
        let g = &self.grid;
        let mut base = [0isize; 8];
        let mut frac = [0.0f64; 8];
        debug_assert!(d <= 8, "interpolation supports d <= 8");
        for axis in 0..d {
            let t = (x[axis] - g.lower[axis]) / g.h[axis] - 0.5;
            if t <= -1.0 || t >= g.dims[axis] as f64 {
                return 0.0;
            }
            let f = t.floor();
            base[axis] = f as isize;
            frac[axis] = t - f;
        }
        let mut total = 0.0;
        'corner: for mask in 0..(1usize << d) {
            let mut w = 1.0;
            let mut flat = 0usize;
            for axis in 0..d {
                let bit = (mask >> axis) & 1;
                let i = base[axis] + bit as isize;
                if i < 0 || i >= g.dims[axis] as isize {
                    continue 'corner;
                }
                w *= if bit == 1 { frac[axis] } else { 1.0 - frac[axis] };
                flat = flat * g.dims[axis] + i as usize;
            }
            if w != 0.0 {
                total += w * self.values[flat];
            }
        }
        total
    }

    /// Box outside of which point evaluation returns zero.
    pub fn support_bounds(&self) -> Option<Bounds> {
        if let Some(s) = &self.shape {
            return s.bounds().map(|b| b.intersect(&self.grid.bounds())).filter(|b| !b.is_empty());
        }
        let d = self.d();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        let mut x = vec![0.0; d];
        let mut any = false;
        for (i, v) in self.values.iter().enumerate() {
            if *v > 0.0 {
                any = true;
                self.grid.center_into(i, &mut x);
                for axis in 0..d {
                    lo[axis] = lo[axis].min(x[axis] - self.grid.h[axis]);
                    hi[axis] = hi[axis].max(x[axis] + self.grid.h[axis]);
                }
            }
        }
        any.then_some(Bounds { lo, hi })
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Writes the CSV form: a header with `d`, the box and `h`, then one
    /// value per line in row-major order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        writeln!(w, "d,{}", self.d())?;
        writeln!(w, "lower,{}", join(&self.grid.lower))?;
        writeln!(w, "upper,{}", join(&self.grid.upper()))?;
        writeln!(w, "h,{}", join(&self.grid.h))?;
        writeln!(
            w,
            "dims,{}",
            self.grid.dims.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")
        )?;
        writeln!(w, "values")?;
        for v in &self.values {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut field = |name: &str| -> Result<Vec<String>> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing {name} line")))??;
            let mut parts = line.split(',').map(|s| s.trim().to_string());
            if parts.next().as_deref() != Some(name) {
                return Err(Error::Parse(format!("expected {name} line, got {line:?}")));
            }
            Ok(parts.collect())
        };
        let floats = |v: Vec<String>| -> Result<Vec<f64>> {
            v.iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}"))))
                .collect()
        };
        let d: usize = field("d")?[0].parse().map_err(|_| Error::Parse("bad d".into()))?;
        let lower = floats(field("lower")?)?;
        let _upper = floats(field("upper")?)?;
        let h = floats(field("h")?)?;
        let dims: Vec<usize> = field("dims")?
            .iter()
            .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad dim {s:?}"))))
            .collect::<Result<_>>()?;
        field("values")?;
        if lower.len() != d || h.len() != d || dims.len() != d {
            return Err(Error::Parse("header lengths disagree with d".into()));
        }
        let grid = Grid { lower, h, dims };
        let values = lines
            .map(|l| {
                let l = l?;
                l.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{l:?}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        GridFunction::new(grid, values)
    }

    /// Little-endian binary form: `GRDF`, `u32 d`, `d×f64 lower`, `d×f64 h`,
    /// `d×u64 dims`, then the values as `f64`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"GRDF")?;
        w.write_all(&(self.d() as u32).to_le_bytes())?;
        for v in self.grid.lower.iter().chain(&self.grid.h) {
            w.write_all(&v.to_le_bytes())?;
        }
        for n in &self.grid.dims {
            w.write_all(&(*n as u64).to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"GRDF" {
            return Err(Error::Parse("bad magic".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let d = u32::from_le_bytes(b4) as usize;
        let mut b8 = [0u8; 8];
        let mut f = |r: &mut R| -> Result<f64> {
            r.read_exact(&mut b8)?;
            Ok(f64::from_le_bytes(b8))
        };
        let lower = (0..d).map(|_| f(&mut r)).collect::<Result<Vec<_>>>()?;
        let h = (0..d).map(|_| f(&mut r)).collect::<Result<Vec<_>>>()?;
        let dims = (0..d)
            .map(|_| -> Result<usize> {
                let mut b = [0u8; 8];
                r.read_exact(&mut b)?;
                Ok(u64::from_le_bytes(b) as usize)
            })
            .collect::<Result<Vec<_>>>()?;
        let grid = Grid { lower, h, dims };
        let values = (0..grid.len()).map(|_| f(&mut r)).collect::<Result<Vec<_>>>()?;
        GridFunction::new(grid, values)
    }
}

/// `(Σ f^p · cell volume)^{1/p}`; the maximum for `p = ∞`. Exponents below 1
/// give the quasi-norm.
pub fn lp_norm(f: &GridFunction, p: f64) -> Result<f64> {
    if p.is_nan() || p <= 0.0 {
        return Err(Error::Exponent(format!("L^p exponent must be positive, got {p}")));
    }
    if p.is_infinite() {
        return Ok(f.max_value());
    }
    let s: f64 = f.values.iter().filter(|v| **v > 0.0).map(|v| v.powf(p)).sum();
    Ok((s * f.grid.cell_volume()).powf(p.recip()))
}

/// Samples the indicator of `shape` at the cell centers of the grid over
/// `[lower, upper]` with spacing `h`, keeping the shape for exact point
/// evaluation. The shape must lie inside the box.
pub fn rasterize(shape: &ShapeSet, lower: Vec<f64>, upper: Vec<f64>, h: f64) -> Result<GridFunction> {
    let grid = Grid::new(lower, upper, h)?;
    shape.check_dim(grid.d())?;
    if let Some(b) = shape.bounds() {
        if !grid.bounds().contains_bounds(&b, 1e-12) {
            return Err(Error::Truncation(format!(
                "shape bounds {:?}..{:?} exceed box {:?}..{:?}",
                b.lo,
                b.hi,
                grid.lower,
                grid.upper()
            )));
        }
    }
    let mut f = GridFunction::from_fn(grid, |x| if shape.contains(x) { 1.0 } else { 0.0 });
    f.shape = Some(shape.clone());
    Ok(f)
}

/// `f · 1_{Q_l}` for the half-open unit cube `Q_l = l + [0,1)^d`.
pub fn restrict_to_cube(f: &GridFunction, l: &[i64]) -> GridFunction {
    let d = f.d();
    let mut x = vec![0.0; d];
    let values = f
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            f.grid.center_into(i, &mut x);
            let inside = x.iter().zip(l).all(|(c, li)| c.floor() as i64 == *li);
            if inside {
                *v
            } else {
                0.0
            }
        })
        .collect();
    let cube = ShapeSet::cube(l.iter().map(|v| *v as f64).collect(), 1.0);
    GridFunction {
        grid: f.grid.clone(),
        values,
        shape: f.shape.as_ref().map(|s| ShapeSet::Intersection {
            members: vec![s.clone(), cube],
        }),
    }
}
