//! Bound-state oracles: a finite-difference Hamiltonian solved by Sturm
//! bisection, and an independent Numerov shooting solver.
//!
//! Both share one boundary convention. On a line grid the end nodes are held
//! at zero. On a radial grid (`x_min = h`) the wavefunction vanishes at the
//! ghost node `r = 0` and at the last node.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{derivative, second_difference, Grid, GridFunction};
use crate::riccati::FactorizationScheme;

/// Maximum number of levels any spectrum call returns.
pub const LEVEL_CAP: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Zero at both end nodes.
    DirichletBoth,
    /// Zero at the ghost node `r = 0` and at the last node.
    DirichletRadial,
}

/// Symmetric tridiagonal `-d²/dx² + V` on the unknown nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedHamiltonian {
    pub grid: Grid,
    pub diagonal: Vec<f64>,
    pub off_diagonal: f64,
    pub boundary: Boundary,
    /// Grid index of the first unknown.
    pub first: usize,
}

impl DiscretizedHamiltonian {
    pub fn size(&self) -> usize {
        self.diagonal.len()
    }

    /// Dense copy, for small checks.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = self.diagonal[i];
            if i + 1 < n {
                m[i][i + 1] = self.off_diagonal;
                m[i + 1][i] = self.off_diagonal;
            }
        }
        m
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence).
    pub fn count_below(&self, x: f64) -> usize {
        let e2 = self.off_diagonal * self.off_diagonal;
        let mut count = 0;
        let mut q = 1.0;
        for (i, &d) in self.diagonal.iter().enumerate() {
            q = if i == 0 { d - x } else { d - x - e2 / q };
            if q == 0.0 {
                q = -f64::EPSILON * (d.abs() + x.abs() + 1.0);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let r = 2.0 * self.off_diagonal.abs();
        let lo = self.diagonal.iter().cloned().fold(f64::INFINITY, f64::min) - r;
        let hi = self.diagonal.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + r;
        (lo, hi)
    }

    /// The `k`-th eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Eigenvector for eigenvalue `lambda` by inverse iteration, embedded in
    /// the grid with zero boundary values, unit-normalized and with its first
    /// significant lobe positive.
    pub fn eigenvector(&self, lambda: f64) -> Result<GridFunction> {
        let n = self.size();
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.25 * ((i as f64) * 0.7).sin()).collect();
        for _ in 0..4 {
            x = solve_shifted(&self.diagonal, self.off_diagonal, lambda, &x);
            let s = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::Numeric("inverse iteration broke down".into()));
            }
            x.iter_mut().for_each(|v| *v /= s);
        }
        let mut full = vec![0.0; self.grid.len()];
        full[self.first..self.first + n].copy_from_slice(&x);
        let f = GridFunction::new(self.grid, full)?;
        let f = f
            .normalized()
            .ok_or_else(|| Error::Numeric("zero eigenvector".into()))?;
        let peak = f.max_abs();
        let lead = f
            .values()
            .iter()
            .find(|v| v.abs() > 1e-3 * peak)
            .copied()
            .unwrap_or(1.0);
        Ok(if lead < 0.0 { f.scale(-1.0) } else { f })
    }
}

/// Solves `(T - σ) y = b` for tridiagonal `T` with Gaussian elimination and
/// partial pivoting; zero pivots are nudged, as inverse iteration needs.
fn solve_shifted(diag: &[f64], off: f64, sigma: f64, b: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut d: Vec<f64> = diag.iter().map(|v| v - sigma).collect();
    let mut du = vec![off; n.saturating_sub(1)];
    let mut dl = vec![off; n.saturating_sub(1)];
    let mut b = b.to_vec();
    let tiny = f64::EPSILON * (diag.iter().fold(0.0f64, |m, v| m.max(v.abs())) + off.abs() + 1.0);
    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                d[i] = tiny;
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            b[i + 1] -= fact * b[i];
            dl[i] = 0.0;
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 1 < n - 1 {
                dl[i] = du[i + 1];
                du[i + 1] = -fact * dl[i];
            } else {
                dl[i] = 0.0;
            }
            du[i] = temp;
            let tb = b[i];
            b[i] = b[i + 1];
            b[i + 1] = tb - fact * b[i + 1];
        }
    }
    if d[n - 1] == 0.0 {
        d[n - 1] = tiny;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = b[n - 1] / d[n - 1];
    if n >= 2 {
        x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (b[i] - du[i] * x[i + 1] - dl[i] * x[i + 2]) / d[i];
    }
    x
}

/// Three-point Hamiltonian with Dirichlet ends; radial grids get the ghost
/// node at `r = 0`.
pub fn build_hamiltonian(v: &GridFunction) -> Result<DiscretizedHamiltonian> {
    let grid = *v.grid();
    let h2 = grid.spacing().powi(2);
    let (first, last, boundary) = if grid.is_radial() {
        (0, grid.len() - 1, Boundary::DirichletRadial)
    } else {
        (1, grid.len() - 1, Boundary::DirichletBoth)
    };
    if last <= first {
        return Err(Error::InvalidGrid("no interior nodes".into()));
    }
    let diagonal = v.values()[first..last].iter().map(|p| 2.0 / h2 + p).collect();
    Ok(DiscretizedHamiltonian {
        grid,
        diagonal,
        off_diagonal: -1.0 / h2,
        boundary,
        first,
    })
}

fn check_levels(h: &DiscretizedHamiltonian, m: usize) -> Result<()> {
    if m > LEVEL_CAP {
        return Err(Error::TooManyLevels {
            requested: m,
            available: LEVEL_CAP,
        });
    }
    if m > h.size() {
        return Err(Error::TooManyLevels {
            requested: m,
            available: h.size(),
        });
    }
    Ok(())
}

/// The `m` lowest eigenvalues, ascending.
pub fn lowest_eigenvalues(h: &DiscretizedHamiltonian, m: usize) -> Result<Vec<f64>> {
    check_levels(h, m)?;
    Ok((0..m).into_par_iter().map(|k| h.eigenvalue(k)).collect())
}

/// The `m` lowest eigenpairs, ascending, eigenvectors unit-normalized.
pub fn eigenpairs(h: &DiscretizedHamiltonian, m: usize) -> Result<Vec<(f64, GridFunction)>> {
    check_levels(h, m)?;
    (0..m)
        .into_par_iter()
        .map(|k| {
            let e = h.eigenvalue(k);
            Ok((e, h.eigenvector(e)?))
        })
        .collect()
}

/// Sign changes of `f`, ignoring values below `1e-10` of its maximum.
pub fn count_nodes(f: &GridFunction) -> usize {
    let floor = 1e-10 * f.max_abs();
    let mut last = 0.0f64;
    let mut nodes = 0;
    for &v in f.values() {
        if v.abs() <= floor {
            continue;
        }
        if last != 0.0 && v.signum() != last.signum() {
            nodes += 1;
        }
        last = v;
    }
    nodes
}

/// `(H ψ)_i` on the unknown nodes with the solver's boundary convention; the
/// entries outside the unknown range are zero.
pub fn apply_hamiltonian(v: &GridFunction, psi: &GridFunction) -> Result<GridFunction> {
    v.check_same_grid(psi)?;
    let grid = *v.grid();
    let n = grid.len();
    let h2 = grid.spacing().powi(2);
    let p = psi.values();
    let first = if grid.is_radial() { 0 } else { 1 };
    let mut out = vec![0.0; n];
    for i in first..n - 1 {
        let left = if i == 0 { 0.0 } else { p[i - 1] };
        out[i] = (2.0 * p[i] - left - p[i + 1]) / h2 + v.get(i) * p[i];
    }
    GridFunction::new(grid, out)
}

/// `⟨ψ, Hψ⟩ / ⟨ψ, ψ⟩` over the unknown nodes.
pub fn rayleigh_quotient(v: &GridFunction, psi: &GridFunction) -> Result<f64> {
    let hp = apply_hamiltonian(v, psi)?;
    let first = if v.grid().is_radial() { 0 } else { 1 };
    let n = v.len();
    let p = psi.values();
    let num: f64 = (first..n - 1).map(|i| p[i] * hp.get(i)).sum();
    let den: f64 = (first..n - 1).map(|i| p[i] * p[i]).sum();
    Ok(num / den)
}

/// Numerov coefficients `1 - h² g / 12` with `g = V - E`.
fn numerov_weights(v: &GridFunction, e: f64) -> (Vec<f64>, Vec<f64>) {
    let h2 = v.grid().spacing().powi(2);
    let g: Vec<f64> = v.values().iter().map(|p| p - e).collect();
    let w = g.iter().map(|gi| 1.0 - h2 * gi / 12.0).collect();
    (g, w)
}

/// Forward Numerov from the left boundary; calls `visit(i, y_i)` for every
/// node and rescales by positive factors to stay in range.
fn numerov_forward(v: &GridFunction, e: f64, upto: usize, mut visit: impl FnMut(usize, f64)) {
    let grid = v.grid();
    let h2 = grid.spacing().powi(2);
    let (g, w) = numerov_weights(v, e);
    let (mut y0, mut y1) = if grid.is_radial() {
        // ψ(0) = 0 with (Vψ)(0) extrapolated linearly from the first two nodes.
        (1.0, 2.0 + h2 * g[0])
    } else {
        (0.0, 1.0)
    };
    visit(0, y0);
    visit(1, y1);
    for i in 1..upto {
        let y2 = (2.0 * y1 * (1.0 + 5.0 * h2 * g[i] / 12.0) - y0 * w[i - 1]) / w[i + 1];
        y0 = y1;
        y1 = y2;
        if y1.abs() > 1e100 {
            y0 *= 1e-100;
            y1 *= 1e-100;
        }
        visit(i + 1, y1);
    }
}

/// Number of levels below `E`: nodes of the forward Numerov solution before
/// the right boundary.
pub fn numerov_node_count(v: &GridFunction, e: f64) -> i64 {
    let n = v.len();
    let mut last = 0.0f64;
    let mut nodes = 0;
    numerov_forward(v, e, n - 2, |i, y| {
        if i == 0 || i >= n - 1 || y == 0.0 {
            return;
        }
        if last != 0.0 && y.signum() != last.signum() {
            nodes += 1;
        }
        last = y;
    });
    nodes
}

fn matching_index(v: &GridFunction, e: f64) -> usize {
    let n = v.len();
    let p = v.values();
    let turning = (1..n - 2).rev().find(|&i| p[i] <= e && p[i + 1] > e);
    turning.unwrap_or(n / 2).clamp(2, n - 4)
}

/// Casoratian of the left and right solutions at node `m`.
fn matching_defect(v: &GridFunction, e: f64, m: usize) -> f64 {
    let n = v.len();
    let h2 = v.grid().spacing().powi(2);
    let (mut l_m, mut l_m1) = (0.0, 0.0);
    numerov_forward(v, e, m + 1, |i, y| {
        if i == m {
            l_m = y;
        } else if i == m + 1 {
            l_m1 = y;
        }
    });
    // Adjust l_m to the scale of l_m1 in case a rescale happened in between.
    if l_m1.abs() > 0.0 && (l_m / l_m1).abs() > 1e50 {
        l_m *= 1e-100;
    }
    let (g, w) = numerov_weights(v, e);
    let mut y1 = 0.0; // node n - 1
    let mut y0 = 1.0; // node n - 2
    let mut r_m1 = 0.0;
    let mut i = n - 2;
    let r_m = loop {
        if i == m + 1 {
            r_m1 = y0;
        }
        if i == m {
            break y0;
        }
        let y_next = (2.0 * y0 * (1.0 + 5.0 * h2 * g[i] / 12.0) - y1 * w[i + 1]) / w[i - 1];
        y1 = y0;
        y0 = y_next;
        i -= 1;
        if y0.abs() > 1e100 {
            y0 *= 1e-100;
            y1 *= 1e-100;
            r_m1 *= 1e-100;
        }
    };
    let norm_l = l_m.abs().max(l_m1.abs());
    let norm_r = r_m.abs().max(r_m1.abs());
    (l_m1 * r_m - l_m * r_m1) / (norm_l * norm_r)
}

/// Eigenvalue in `(e_lo, e_hi)` by shooting; the bracket must hold exactly
/// one level by node count.
pub fn numerov_shoot(v: &GridFunction, e_lo: f64, e_hi: f64) -> Result<f64> {
    let count = numerov_node_count(v, e_hi) - numerov_node_count(v, e_lo);
    if count != 1 || !(e_lo < e_hi) {
        return Err(Error::Bracketing {
            lo: e_lo,
            hi: e_hi,
            count,
        });
    }
    let target = numerov_node_count(v, e_lo);
    let (mut lo, mut hi) = (e_lo, e_hi);
    // Narrow by node count first so the matching point is stable.
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if numerov_node_count(v, mid) > target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-6 * (1.0 + lo.abs()) {
            break;
        }
    }
    let m = matching_index(v, 0.5 * (lo + hi));
    let mut f_lo = matching_defect(v, lo, m);
    let f_hi = matching_defect(v, hi, m);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Numeric(format!(
            "matching defect keeps its sign on [{lo}, {hi}]"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f = matching_defect(v, mid, m);
        if f.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(1e-3) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Numerov eigenvalues for the `m` lowest levels, bracketed by the matrix
/// solver's values.
pub fn numerov_levels(v: &GridFunction, matrix_levels: &[f64]) -> Result<Vec<f64>> {
    let m = matrix_levels.len();
    (0..m)
        .into_par_iter()
        .map(|k| {
            let e = matrix_levels[k];
            let below = if k == 0 { e - 1.0 } else { 0.5 * (matrix_levels[k - 1] + e) };
            let above = if k + 1 < m {
                0.5 * (e + matrix_levels[k + 1])
            } else {
                e + 0.5 * (e - below).abs().max(1e-3)
            };
            numerov_shoot(v, below, above)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub computed: Vec<f64>,
    pub predicted: Vec<f64>,
    pub max_abs_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl SpectrumReport {
    pub fn new(computed: Vec<f64>, predicted: Vec<f64>, tolerance: f64) -> Self {
        let max_abs_error = if computed.len() == predicted.len() {
            computed
                .iter()
                .zip(&predicted)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        Self {
            pass: max_abs_error <= tolerance,
            computed,
            predicted,
            max_abs_error,
            tolerance,
        }
    }
}

/// Computed target spectrum against the source spectrum, plus `ε` when the
/// transform adds a level. With `epsilon = None` the two are expected to be
/// identical.
pub fn isospectral_report(
    source: &GridFunction,
    target: &GridFunction,
    epsilon: Option<f64>,
    m: usize,
    tol: f64,
) -> Result<SpectrumReport> {
    source.check_same_grid(target)?;
    let computed = lowest_eigenvalues(&build_hamiltonian(target)?, m)?;
    let predicted = match epsilon {
        Some(e) => {
            let mut p = lowest_eigenvalues(&build_hamiltonian(source)?, m.saturating_sub(1))?;
            p.push(e);
            p.sort_by(f64::total_cmp);
            p
        }
        None => lowest_eigenvalues(&build_hamiltonian(source)?, m)?,
    };
    Ok(SpectrumReport::new(computed, predicted, tol))
}

/// Report against a known spectrum.
pub fn spectrum_report(v: &GridFunction, predicted: &[f64], tol: f64) -> Result<SpectrumReport> {
    let computed = lowest_eigenvalues(&build_hamiltonian(v)?, predicted.len())?;
    Ok(SpectrumReport::new(computed, predicted.to_vec(), tol))
}

/// `‖(H̃ A - A H) ψ‖ / ‖ψ‖` with three-point second differences and central
/// first differences, over interior nodes with a two-node margin. `A` is the
/// operator that carries source states to the target in `scheme`.
pub fn intertwine_residual(
    source: &GridFunction,
    target: &GridFunction,
    scheme: &FactorizationScheme,
    psi: &GridFunction,
) -> Result<f64> {
    source.check_same_grid(target)?;
    source.check_same_grid(psi)?;
    let grid = *source.grid();
    let beta = scheme.forward_beta(&grid)?;
    let b = beta.values(&grid)?;
    let a = |f: &GridFunction| -> Result<GridFunction> {
        derivative(f).add(&f.mul(&b)?)
    };
    let h = |w: &GridFunction, f: &GridFunction| -> Result<GridFunction> {
        second_difference(f).scale(-1.0).add(&f.mul(w)?)
    };
    let lhs = h(target, &a(psi)?)?;
    let rhs = a(&h(source, psi)?)?;
    let n = grid.len();
    let margin = 2;
    let dx = grid.spacing();
    let num: f64 = (margin..n - margin)
        .map(|i| (lhs.get(i) - rhs.get(i)).powi(2))
        .sum::<f64>()
        * dx;
    let den = psi.norm();
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(num.sqrt() / den)
}

/// Radial spectrum with the outer boundary widened (by half each time) until
/// every requested eigenvector's amplitude over the last 5% of the grid is
/// below `1e-8` of its maximum. `h` stays fixed.
pub fn radial_spectrum_widening<F>(
    potential: F,
    h: f64,
    r_start: f64,
    m: usize,
) -> Result<(Grid, Vec<(f64, GridFunction)>)>
where
    F: Fn(&Grid) -> Result<GridFunction>,
{
    let mut r_max = r_start;
    for _ in 0..12 {
        let n = (r_max / h).round() as usize;
        if n > 200_000 {
            break;
        }
        let grid = Grid::radial(n as f64 * h, n)?;
        let v = potential(&grid)?;
        let pairs = eigenpairs(&build_hamiltonian(&v)?, m)?;
        let tail_start = grid.len() - grid.len() / 20;
        let converged = pairs.iter().all(|(_, psi)| {
            let peak = psi.max_abs();
            psi.values()[tail_start..]
                .iter()
                .all(|v| v.abs() <= 1e-8 * peak)
        });
        if converged {
            return Ok((grid, pairs));
        }
        r_max *= 1.5;
    }
    Err(Error::NoConvergence("radial domain widening"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riccati::{BetaFunction, ClosedBeta, Ordering, PotentialSpec};
    use std::f64::consts::PI;

    fn osc(n: usize) -> GridFunction {
        PotentialSpec::oscillator()
            .sample(&Grid::new(-8.0, 8.0, n).unwrap())
            .unwrap()
    }

    #[test]
    fn small_box_matrix() {
        let g = Grid::new(0.0, 1.0, 5).unwrap();
        let h = build_hamiltonian(&GridFunction::zeros(g)).unwrap();
        assert_eq!(h.size(), 3);
        assert_eq!(
            h.to_dense(),
            vec![
                vec![32.0, -16.0, 0.0],
                vec![-16.0, 32.0, -16.0],
                vec![0.0, -16.0, 32.0]
            ]
        );
        let d = h.to_dense();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(d[i][j], d[j][i]);
            }
        }
    }

    #[test]
    fn diagonal_formula() {
        let v = osc(401);
        let h = build_hamiltonian(&v).unwrap();
        let h2 = v.grid().spacing().powi(2);
        assert_eq!(h.diagonal[10], 2.0 / h2 + v.get(11));
    }

    #[test]
    fn box_levels() {
        let g = Grid::new(0.0, 1.0, 2001).unwrap();
        let e = lowest_eigenvalues(&build_hamiltonian(&GridFunction::zeros(g)).unwrap(), 3).unwrap();
        for (k, v) in e.iter().enumerate() {
            let exact = ((k + 1) as f64 * PI).powi(2);
            assert!((v - exact).abs() < 0.05, "{v} vs {exact}");
        }
    }

    #[test]
    fn constant_shift_is_exact() {
        let g = Grid::new(0.0, 1.0, 201).unwrap();
        let h0 = build_hamiltonian(&GridFunction::zeros(g)).unwrap();
        let h1 = build_hamiltonian(&GridFunction::constant(g, 3.5)).unwrap();
        let a = lowest_eigenvalues(&h0, 4).unwrap();
        let b = lowest_eigenvalues(&h1, 4).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((y - x - 3.5).abs() < 1e-9);
        }
    }

    #[test]
    fn oscillator_levels() {
        let e = lowest_eigenvalues(&build_hamiltonian(&osc(4001)).unwrap(), 5).unwrap();
        for (n, v) in e.iter().enumerate() {
            assert!((v - (2 * n + 1) as f64).abs() < 1e-3);
        }
    }

    #[test]
    fn richardson_ratio() {
        let err = |n| lowest_eigenvalues(&build_hamiltonian(&osc(n)).unwrap(), 1).unwrap()[0] - 1.0;
        let ratio = err(801).abs() / err(1601).abs();
        assert!(ratio >= 3.5, "{ratio}");
    }

    #[test]
    fn hydrogen_levels() {
        let g = Grid::radial(60.0, 12001).unwrap();
        let v = PotentialSpec::hydrogen(1).sample(&g).unwrap();
        let e = lowest_eigenvalues(&build_hamiltonian(&v).unwrap(), 3).unwrap();
        for (k, val) in e.iter().enumerate() {
            let n = (k + 2) as f64;
            assert!((val + 1.0 / (n * n)).abs() < 2e-3, "{val}");
        }
    }

    #[test]
    fn eigenvector_nodes_and_norm() {
        let v = osc(1601);
        let pairs = eigenpairs(&build_hamiltonian(&v).unwrap(), 6).unwrap();
        for (k, (e, psi)) in pairs.iter().enumerate() {
            assert_eq!(count_nodes(psi), k);
            assert!((psi.norm() - 1.0).abs() < 1e-12);
            assert!((rayleigh_quotient(&v, psi).unwrap() - e).abs() < 1e-8);
        }
    }

    #[test]
    fn level_cap() {
        let h = build_hamiltonian(&osc(401)).unwrap();
        assert!(matches!(
            lowest_eigenvalues(&h, 13),
            Err(Error::TooManyLevels { requested: 13, .. })
        ));
        let tiny = build_hamiltonian(&GridFunction::zeros(Grid::new(0.0, 1.0, 5).unwrap())).unwrap();
        assert!(lowest_eigenvalues(&tiny, 4).is_err());
    }

    #[test]
    fn numerov_examples() {
        let v = osc(4001);
        assert_eq!(numerov_node_count(&v, 4.0), 2);
        let e0 = numerov_shoot(&v, 0.5, 1.5).unwrap();
        assert!((e0 - 1.0).abs() < 1e-5, "{e0}");
        assert!(matches!(numerov_shoot(&v, 1.5, 2.5), Err(Error::Bracketing { count: 0, .. })));
        assert!(matches!(numerov_shoot(&v, 0.5, 3.5), Err(Error::Bracketing { count: 2, .. })));
    }

    #[test]
    fn numerov_agrees_with_matrix() {
        let v = osc(4001);
        let m = lowest_eigenvalues(&build_hamiltonian(&v).unwrap(), 5).unwrap();
        let n = numerov_levels(&v, &m).unwrap();
        for (a, b) in m.iter().zip(&n) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
        let g = Grid::radial(60.0, 12001).unwrap();
        let v = PotentialSpec::hydrogen(1).sample(&g).unwrap();
        let m = lowest_eigenvalues(&build_hamiltonian(&v).unwrap(), 3).unwrap();
        let n = numerov_levels(&v, &m).unwrap();
        for (k, (a, b)) in m.iter().zip(&n).enumerate() {
            let exact = -1.0 / ((k + 2) as f64).powi(2);
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
            assert!((b - exact).abs() < 1e-5, "numerov {b} vs {exact}");
        }
    }

    #[test]
    fn isospectral_reports() {
        let v = osc(1601);
        let same = isospectral_report(&v, &v, None, 5, 1e-12).unwrap();
        assert!(same.pass);
        let shifted = v.map(|p| p + 1.0).unwrap();
        let r = isospectral_report(&v, &shifted, None, 5, 2e-3).unwrap();
        assert!(!r.pass);
        assert!((r.max_abs_error - 1.0).abs() < 1e-6);
        // x² + 2 plus a level at 1 predicts the x² spectrum.
        let up = v.map(|p| p + 2.0).unwrap();
        let r = isospectral_report(&up, &v, Some(1.0), 5, 2e-3).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn intertwining_oscillator() {
        let g = Grid::new(-8.0, 8.0, 4001).unwrap();
        let v = PotentialSpec::oscillator().sample(&g).unwrap();
        let scheme = FactorizationScheme::new(
            BetaFunction::closed(ClosedBeta::Linear, 1.0),
            Ordering::DaggerFirst,
        );
        let target = v.map(|p| p + 2.0).unwrap();
        let pairs = eigenpairs(&build_hamiltonian(&v).unwrap(), 3).unwrap();
        for (_, psi) in &pairs {
            let r = intertwine_residual(&v, &target, &scheme, psi).unwrap();
            assert!(r <= 5e-4, "{r}");
        }
        assert_eq!(
            intertwine_residual(&v, &target, &scheme, &GridFunction::zeros(g)).unwrap(),
            0.0
        );
        // The ground state is annihilated by A, so the control uses n = 1.
        let wrong = intertwine_residual(&v, &v, &scheme, &pairs[1].1).unwrap();
        assert!(wrong > 0.1, "{wrong}");
    }

    #[test]
    fn widening_reaches_tail_tolerance() {
        let (grid, pairs) = radial_spectrum_widening(
            |g| PotentialSpec::hydrogen(2).sample(g),
            0.01,
            20.0,
            3,
        )
        .unwrap();
        assert!(grid.x_max() > 20.0);
        for (k, (e, _)) in pairs.iter().enumerate() {
            let n = (k + 3) as f64;
            assert!((e + 1.0 / (n * n)).abs() < 2e-3);
        }
    }
}
