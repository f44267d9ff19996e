//! Uniform 1D meshes and real samples on them.
//!
//! Derivatives are second order everywhere (central in the interior, one-sided
//! at the ends). Full integrals use composite Simpson when the interval count
//! is even and the trapezoid rule otherwise. Cumulative integrals are always
//! trapezoidal prefix sums so that values at neighbouring nodes stay mutually
//! consistent.

use crate::error::{Error, Result};

/// A uniform mesh `x_i = x_min + i h`, `i = 0..n_points`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) {
            return Err(Error::InvalidGrid("endpoints must be finite".into()));
        }
        if x_min >= x_max {
            return Err(Error::InvalidGrid(format!(
                "x_min = {x_min} must be below x_max = {x_max}"
            )));
        }
        if n_points < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 points, got {n_points}"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n_points,
        })
    }

    /// Radial lattice `r_i = (i + 1) h` with `h = r_max / n_points`.
    ///
    /// The first node sits one spacing away from the origin, where the
    /// wavefunction is pinned to zero; `r = 0` itself is never sampled.
    pub fn radial(r_max: f64, n_points: usize) -> Result<Self> {
        if !(r_max > 0.0) {
            return Err(Error::InvalidGrid(format!("r_max = {r_max} must be positive")));
        }
        let h = r_max / n_points as f64;
        Self::new(h, r_max, n_points)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    /// True when the grid is a radial lattice, i.e. `x_min == h`.
    pub fn is_radial(&self) -> bool {
        let h = self.spacing();
        (self.x_min - h).abs() <= 1e-9 * h
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.x_max
        } else {
            self.x_min + i as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.x(i))
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min && x <= self.x_max
    }

    /// Index of the node nearest to `x` (clamped to the grid).
    pub fn nearest(&self, x: f64) -> usize {
        let t = ((x - self.x_min) / self.spacing()).round();
        (t.max(0.0) as usize).min(self.n_points - 1)
    }

    /// Grid with the same extent and `2 (n - 1) + 1` points.
    pub fn refined(&self) -> Self {
        if self.is_radial() {
            Self::radial(self.x_max, 2 * self.n_points).expect("refining a valid grid")
        } else {
            Self::new(self.x_min, self.x_max, 2 * (self.n_points - 1) + 1)
                .expect("refining a valid grid")
        }
    }
}

/// Real samples of a function on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite sample at node {i} (x = {})",
                grid.x(i)
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().map(f).collect())
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Apply `f(x, v)` node by node.
    pub fn map_with_x(&self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(self.grid.x(i), v))
            .collect();
        Self::new(self.grid, values)
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.grid, values)
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|f_i|` over nodes `margin..n - margin`.
    pub fn max_abs_interior(&self, margin: usize) -> f64 {
        let n = self.values.len();
        if 2 * margin >= n {
            return 0.0;
        }
        self.values[margin..n - margin]
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn inner(&self, other: &Self) -> Result<f64> {
        Ok(integral(&self.mul(other)?))
    }

    /// L2 norm `sqrt(integral f^2)`.
    pub fn norm(&self) -> f64 {
        integral(&self.map(|v| v * v).expect("squares of finite values")).sqrt()
    }

    /// Scale to unit L2 norm, returning `None` for the zero function.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self.scale(1.0 / n))
    }

    /// Linear interpolation at an arbitrary point of the grid.
    pub fn interpolate(&self, x: f64) -> Result<f64> {
        if !self.grid.contains(x) {
            return Err(Error::Domain(format!(
                "x = {x} outside [{}, {}]",
                self.grid.x_min(),
                self.grid.x_max()
            )));
        }
        let h = self.grid.spacing();
        let t = (x - self.grid.x_min()) / h;
        let j = (t.floor() as usize).min(self.len() - 2);
        let w = t - j as f64;
        Ok(self.values[j] * (1.0 - w) + self.values[j + 1] * w)
    }
}

/// Second-order finite-difference derivative.
pub fn derivative(f: &GridFunction) -> GridFunction {
    let v = f.values();
    let n = v.len();
    let h = f.grid().spacing();
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    for i in 1..n - 1 {
        d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    }
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    GridFunction {
        grid: *f.grid(),
        values: d,
    }
}

/// Three-point second difference on interior nodes; the two end values are
/// copied from their neighbours.
pub fn second_difference(f: &GridFunction) -> GridFunction {
    let v = f.values();
    let n = v.len();
    let h2 = f.grid().spacing().powi(2);
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / h2;
    }
    d[0] = d[1];
    d[n - 1] = d[n - 2];
    GridFunction {
        grid: *f.grid(),
        values: d,
    }
}

/// Definite integral over the whole grid.
pub fn integral(f: &GridFunction) -> f64 {
    let v = f.values();
    let h = f.grid().spacing();
    let intervals = v.len() - 1;
    if intervals % 2 == 0 {
        let mut odd = 0.0;
        let mut even = 0.0;
        for i in 1..intervals {
            if i % 2 == 1 {
                odd += v[i];
            } else {
                even += v[i];
            }
        }
        h / 3.0 * (v[0] + v[intervals] + 4.0 * odd + 2.0 * even)
    } else {
        let inner: f64 = v[1..intervals].iter().sum();
        h * (0.5 * (v[0] + v[intervals]) + inner)
    }
}

/// `F(x) = integral from anchor to x of f`, sampled on the grid.
///
/// Trapezoid sums run outward from the anchor, so values near the anchor do
/// not inherit rounding from a large prefix. An off-node anchor is handled by
/// linear interpolation of `f` inside its cell.
pub fn cumulative_integral(f: &GridFunction, anchor: f64) -> Result<GridFunction> {
    let grid = *f.grid();
    if !grid.contains(anchor) {
        return Err(Error::Domain(format!(
            "anchor {anchor} outside [{}, {}]",
            grid.x_min(),
            grid.x_max()
        )));
    }
    let v = f.values();
    let n = v.len();
    let h = grid.spacing();
    let t = (anchor - grid.x_min()) / h;
    let j = (t.floor() as usize).min(n - 2);
    let dx = anchor - grid.x(j);
    let fa = f.interpolate(anchor)?;
    let mut out = vec![0.0; n];
    out[j] = -0.5 * dx * (v[j] + fa);
    out[j + 1] = 0.5 * (h - dx) * (fa + v[j + 1]);
    for i in j + 2..n {
        out[i] = out[i - 1] + 0.5 * h * (v[i - 1] + v[i]);
    }
    for i in (0..j).rev() {
        out[i] = out[i + 1] - 0.5 * h * (v[i] + v[i + 1]);
    }
    GridFunction::new(grid, out)
}
