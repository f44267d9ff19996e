//! Superpotentials and the Riccati equations they solve.
//!
//! Two orderings of the factorization are in play and they differ in the sign
//! of `β'`:
//!
//! * [`Ordering::DaggerFirst`]: `H = A†A + ε` with `-β' + β² = V - ε`,
//!   general solution `β = β_p + e^{2∫β_p} / (λ - ∫e^{2∫β_p})`.
//! * [`Ordering::PlainFirst`]: `H̃ = AA† + ε` with `β' + β² = Ṽ - ε`,
//!   general solution `β = α + e^{-2∫α} / (γ + ∫e^{-2∫α})`.
//!
//! The inner antiderivative of a closed-form particular solution uses its
//! natural constant (`x²/2` for `β = x`, `l ln r - r/l` for the Coulomb entry)
//! and the outer integral is anchored at the origin. Any other anchor only
//! reparametrizes `λ` or `γ`; with these choices the constants agree with the
//! classical closed forms of both families.

use crate::error::{Error, Result};
use crate::grid::{self, cumulative_integral, derivative, Grid, GridFunction};

/// Identifies a potential.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    /// `V(x) = x²`
    Oscillator,
    /// `V(x) = x² + 2`
    OscillatorShifted,
    /// `V_l(r) = -2/r + l(l+1)/r²`
    HydrogenRadial { l: u32 },
    Tabulated(GridFunction),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub label: String,
}

impl PotentialSpec {
    pub fn oscillator() -> Self {
        Self {
            kind: PotentialKind::Oscillator,
            label: "x^2".into(),
        }
    }

    pub fn oscillator_shifted() -> Self {
        Self {
            kind: PotentialKind::OscillatorShifted,
            label: "x^2+2".into(),
        }
    }

    /// Radial Coulomb sector `l`. `l = 0` is accepted as a target sector; the
    /// catalog factorization itself needs `l >= 1`.
    pub fn hydrogen(l: u32) -> Self {
        Self {
            kind: PotentialKind::HydrogenRadial { l },
            label: format!("V_{l}(r)"),
        }
    }

    pub fn tabulated(values: GridFunction, label: impl Into<String>) -> Self {
        Self {
            kind: PotentialKind::Tabulated(values),
            label: label.into(),
        }
    }

    /// Closed-form value, `None` for tabulated potentials.
    pub fn value(&self, x: f64) -> Option<f64> {
        match &self.kind {
            PotentialKind::Oscillator => Some(x * x),
            PotentialKind::OscillatorShifted => Some(x * x + 2.0),
            PotentialKind::HydrogenRadial { l } => {
                let l = *l as f64;
                Some(-2.0 / x + l * (l + 1.0) / (x * x))
            }
            PotentialKind::Tabulated(_) => None,
        }
    }

    pub fn sample(&self, grid: &Grid) -> Result<GridFunction> {
        match &self.kind {
            PotentialKind::Tabulated(f) => {
                if f.grid() == grid {
                    Ok(f.clone())
                } else {
                    Err(Error::GridMismatch)
                }
            }
            PotentialKind::HydrogenRadial { .. } if grid.x_min() <= 0.0 => Err(Error::InvalidGrid(
                "radial potentials need a grid with r > 0".into(),
            )),
            _ => GridFunction::from_fn(*grid, |x| self.value(x).expect("closed form")),
        }
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.kind, PotentialKind::HydrogenRadial { .. })
    }
}

/// Product ordering of a factorization, which fixes the sign of `β'` in the
/// Riccati equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ordering {
    /// `H = A†A + ε`, Riccati `-β' + β² = V - ε`.
    DaggerFirst,
    /// `H̃ = AA† + ε`, Riccati `β' + β² = Ṽ - ε`.
    PlainFirst,
}

impl Ordering {
    /// Coefficient of `β'` in the Riccati equation.
    pub fn derivative_sign(self) -> f64 {
        match self {
            Ordering::DaggerFirst => -1.0,
            Ordering::PlainFirst => 1.0,
        }
    }
}

/// Closed-form superpotentials from the factorization catalog.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedBeta {
    /// `β(x) = x`
    Linear,
    /// `β(r) = l/r - 1/l`
    Coulomb { l: u32 },
}

impl ClosedBeta {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            ClosedBeta::Linear => x,
            ClosedBeta::Coulomb { l } => {
                let l = l as f64;
                l / x - 1.0 / l
            }
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            ClosedBeta::Linear => 1.0,
            ClosedBeta::Coulomb { l } => -(l as f64) / (x * x),
        }
    }

    /// Antiderivative with the natural integration constant.
    pub fn antiderivative(&self, x: f64) -> f64 {
        match *self {
            ClosedBeta::Linear => 0.5 * x * x,
            ClosedBeta::Coulomb { l } => {
                let l = l as f64;
                if x == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    l * x.ln() - x / l
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeMode {
    /// `β'` known in closed form or from an exact identity.
    Analytic,
    /// `β'` obtained by finite differences of the samples.
    Numeric,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BetaForm {
    Closed(ClosedBeta),
    Sampled {
        values: GridFunction,
        /// Exact derivative samples when available.
        derivative: Option<GridFunction>,
    },
}

/// A superpotential together with its factorization energy.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaFunction {
    pub form: BetaForm,
    pub epsilon: f64,
    pub derivative_mode: DerivativeMode,
}

impl BetaFunction {
    pub fn closed(form: ClosedBeta, epsilon: f64) -> Self {
        Self {
            form: BetaForm::Closed(form),
            epsilon,
            derivative_mode: DerivativeMode::Analytic,
        }
    }

    /// Sampled superpotential with an exact derivative.
    pub fn sampled_analytic(values: GridFunction, deriv: GridFunction, epsilon: f64) -> Result<Self> {
        values.check_same_grid(&deriv)?;
        Ok(Self {
            form: BetaForm::Sampled {
                values,
                derivative: Some(deriv),
            },
            epsilon,
            derivative_mode: DerivativeMode::Analytic,
        })
    }

    pub fn sampled_numeric(values: GridFunction, epsilon: f64) -> Self {
        Self {
            form: BetaForm::Sampled {
                values,
                derivative: None,
            },
            epsilon,
            derivative_mode: DerivativeMode::Numeric,
        }
    }

    /// Same samples, but derivatives taken by finite differences.
    pub fn with_numeric_derivative(&self, grid: &Grid) -> Result<Self> {
        Ok(Self::sampled_numeric(self.values(grid)?, self.epsilon))
    }

    pub fn closed_form(&self) -> Option<ClosedBeta> {
        match self.form {
            BetaForm::Closed(c) => Some(c),
            BetaForm::Sampled { .. } => None,
        }
    }

    /// The grid a sampled superpotential lives on.
    pub fn grid(&self) -> Option<&Grid> {
        match &self.form {
            BetaForm::Closed(_) => None,
            BetaForm::Sampled { values, .. } => Some(values.grid()),
        }
    }

    pub fn values(&self, grid: &Grid) -> Result<GridFunction> {
        match &self.form {
            BetaForm::Closed(c) => GridFunction::from_fn(*grid, |x| c.value(x)),
            BetaForm::Sampled { values, .. } => {
                if values.grid() == grid {
                    Ok(values.clone())
                } else {
                    Err(Error::GridMismatch)
                }
            }
        }
    }

    pub fn derivative(&self, grid: &Grid) -> Result<GridFunction> {
        match (&self.form, self.derivative_mode) {
            (BetaForm::Closed(c), DerivativeMode::Analytic) => {
                GridFunction::from_fn(*grid, |x| c.derivative(x))
            }
            (BetaForm::Sampled { derivative: Some(d), values }, DerivativeMode::Analytic) => {
                if values.grid() == grid {
                    Ok(d.clone())
                } else {
                    Err(Error::GridMismatch)
                }
            }
            _ => Ok(derivative(&self.values(grid)?)),
        }
    }

    /// `∫β` on the grid: natural constant for closed forms, anchored at the
    /// origin (or the first node when the origin is off-grid) otherwise.
    pub fn antiderivative(&self, grid: &Grid) -> Result<GridFunction> {
        match &self.form {
            BetaForm::Closed(c) => GridFunction::from_fn(*grid, |x| c.antiderivative(x)),
            BetaForm::Sampled { .. } => cumulative_integral(&self.values(grid)?, default_anchor(grid)),
        }
    }

    /// `-β`, the superpotential of the same pair written in the other
    /// ordering.
    pub fn negated(&self, grid: &Grid) -> Result<Self> {
        let v = self.values(grid)?.scale(-1.0);
        Ok(match self.derivative_mode {
            DerivativeMode::Analytic => {
                Self::sampled_analytic(v, self.derivative(grid)?.scale(-1.0), self.epsilon)?
            }
            DerivativeMode::Numeric => Self::sampled_numeric(v, self.epsilon),
        })
    }

    /// `β + δ` with the derivative left unchanged; used as a negative control.
    pub fn shifted(&self, grid: &Grid, delta: f64) -> Result<Self> {
        let v = self.values(grid)?.map(|b| b + delta)?;
        Ok(match self.derivative_mode {
            DerivativeMode::Analytic => Self::sampled_analytic(v, self.derivative(grid)?, self.epsilon)?,
            DerivativeMode::Numeric => Self::sampled_numeric(v, self.epsilon),
        })
    }
}

/// Anchor for indefinite integrals of sampled data.
pub fn default_anchor(grid: &Grid) -> f64 {
    if grid.contains(0.0) {
        0.0
    } else {
        grid.x_min()
    }
}

/// A superpotential with the ordering it factorizes.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationScheme {
    pub beta: BetaFunction,
    pub ordering: Ordering,
}

impl FactorizationScheme {
    pub fn new(beta: BetaFunction, ordering: Ordering) -> Self {
        Self { beta, ordering }
    }

    pub fn epsilon(&self) -> f64 {
        self.beta.epsilon
    }

    /// The same pair of Hamiltonians written as `source = A†A + ε`, with
    /// `source` being the Hamiltonian that eigenfunctions are mapped from.
    ///
    /// For [`Ordering::PlainFirst`] the source is `AA† + ε`; negating `β`
    /// turns `A†` into `-(d/dx + (-β))`, so the mapping operator becomes a
    /// dagger-first annihilator up to an overall sign.
    pub fn forward_beta(&self, grid: &Grid) -> Result<BetaFunction> {
        match self.ordering {
            Ordering::DaggerFirst => Ok(self.beta.clone()),
            Ordering::PlainFirst => self.beta.negated(grid),
        }
    }
}

/// Entry of the particular-solution catalog.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub potential: PotentialSpec,
    pub beta: BetaFunction,
    pub ordering: Ordering,
    pub formula: &'static str,
}

/// Particular superpotential and factorization energy for a catalog potential.
pub fn particular_beta(spec: &PotentialSpec) -> Result<BetaFunction> {
    match spec.kind {
        PotentialKind::Oscillator | PotentialKind::OscillatorShifted => {
            Ok(BetaFunction::closed(ClosedBeta::Linear, 1.0))
        }
        PotentialKind::HydrogenRadial { l } => {
            if l == 0 {
                return Err(Error::Parameter(
                    "the Coulomb catalog entry needs l >= 1".into(),
                ));
            }
            let lf = l as f64;
            Ok(BetaFunction::closed(ClosedBeta::Coulomb { l }, -1.0 / (lf * lf)))
        }
        PotentialKind::Tabulated(_) => Err(Error::Unsupported(format!(
            "no catalog superpotential for tabulated potential '{}'",
            spec.label
        ))),
    }
}

/// Catalog ordering: the shifted oscillator is factorized as `AA† + ε`, the
/// rest as `A†A + ε`.
pub fn catalog_ordering(spec: &PotentialSpec) -> Ordering {
    match spec.kind {
        PotentialKind::OscillatorShifted => Ordering::PlainFirst,
        _ => Ordering::DaggerFirst,
    }
}

/// Catalog entries for the oscillator, the shifted oscillator and the first
/// `max_l` Coulomb sectors.
pub fn catalog(max_l: u32) -> Vec<CatalogEntry> {
    let mut out = vec![
        CatalogEntry {
            potential: PotentialSpec::oscillator(),
            beta: BetaFunction::closed(ClosedBeta::Linear, 1.0),
            ordering: Ordering::DaggerFirst,
            formula: "beta_p(x) = x",
        },
        CatalogEntry {
            potential: PotentialSpec::oscillator_shifted(),
            beta: BetaFunction::closed(ClosedBeta::Linear, 1.0),
            ordering: Ordering::PlainFirst,
            formula: "alpha(x) = x",
        },
    ];
    for l in 1..=max_l {
        let spec = PotentialSpec::hydrogen(l);
        out.push(CatalogEntry {
            beta: particular_beta(&spec).expect("l >= 1"),
            potential: spec,
            ordering: Ordering::DaggerFirst,
            formula: "beta_p(r) = l/r - 1/l",
        });
    }
    out
}

/// The pieces of a general Riccati solution `β = β_p + g / D`.
#[derive(Debug, Clone)]
pub struct GeneralSolution {
    pub beta: BetaFunction,
    /// `g = e^{±2∫β_p}`
    pub kernel: GridFunction,
    /// `D = λ - ∫g` or `γ + ∫g`
    pub denominator: GridFunction,
}

impl GeneralSolution {
    /// `e^{±∫β}` for the state annihilated by the partner operator:
    /// `sqrt(g) / D` in both orderings.
    pub fn missing_state(&self) -> Result<GridFunction> {
        self.kernel
            .zip_with(&self.denominator, |g, d| g.sqrt() / d)
    }
}

/// Integral of `f` over `[0, x]` by composite Simpson with 256 panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let n = 256;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// General solution by two quadratures.
///
/// `constant` is `λ` for [`Ordering::DaggerFirst`] and `γ` for
/// [`Ordering::PlainFirst`]. The logarithmic derivative is evaluated as
/// `g / D`, never by differentiating `ln D` numerically.
pub fn general_solution(
    beta_p: &BetaFunction,
    constant: f64,
    grid: &Grid,
    ordering: Ordering,
) -> Result<GeneralSolution> {
    let sign = match ordering {
        Ordering::DaggerFirst => 1.0,
        Ordering::PlainFirst => -1.0,
    };
    let bp = beta_p.values(grid)?;
    let dbp = beta_p.derivative(grid)?;
    let inner = beta_p.antiderivative(grid)?;
    let kernel = inner.map(|a| (2.0 * sign * a).exp()).map_err(|_| {
        Error::Numeric("kernel exp(±2∫β_p) overflows on this grid".into())
    })?;

    let anchor = default_anchor(grid);
    let mut outer = cumulative_integral(&kernel, anchor)?;
    if anchor > 0.0 {
        // Radial grids: add the piece between the origin and the first node.
        if let Some(c) = beta_p.closed_form() {
            let head = simpson(|x| (2.0 * sign * c.antiderivative(x)).exp(), 0.0, anchor);
            if !head.is_finite() {
                return Err(Error::Numeric("kernel is not integrable at the origin".into()));
            }
            outer = outer.map(|v| v + head)?;
        }
    }

    let denominator = match ordering {
        Ordering::DaggerFirst => outer.map(|i| constant - i)?,
        Ordering::PlainFirst => outer.map(|i| constant + i)?,
    };
    check_no_crossing(&denominator, "denominator")?;

    let d = denominator.values();
    let g = kernel.values();
    let n = grid.len();
    let mut values = Vec::with_capacity(n);
    let mut derivs = Vec::with_capacity(n);
    for i in 0..n {
        let q = g[i] / d[i];
        let dg = 2.0 * sign * bp.get(i) * g[i];
        values.push(bp.get(i) + q);
        // D' = -g for λ - ∫g and +g for γ + ∫g.
        derivs.push(dbp.get(i) + dg / d[i] + sign * q * q);
    }
    let beta = BetaFunction::sampled_analytic(
        GridFunction::new(*grid, values)?,
        GridFunction::new(*grid, derivs)?,
        beta_p.epsilon,
    )?;
    Ok(GeneralSolution {
        beta,
        kernel,
        denominator,
    })
}

/// The general superpotential alone; see [`general_solution`].
pub fn general_beta(
    beta_p: &BetaFunction,
    constant: f64,
    grid: &Grid,
    ordering: Ordering,
) -> Result<BetaFunction> {
    Ok(general_solution(beta_p, constant, grid, ordering)?.beta)
}

/// Error on the first zero or sign change of `f` between adjacent nodes.
pub fn check_no_crossing(f: &GridFunction, what: &'static str) -> Result<()> {
    let v = f.values();
    for i in 0..v.len() {
        if v[i] == 0.0 {
            return Err(Error::SingularFamily {
                what,
                node: i,
                next: i,
                x: f.grid().x(i),
            });
        }
        if i + 1 < v.len() && v[i] * v[i + 1] < 0.0 {
            return Err(Error::SingularFamily {
                what,
                node: i,
                next: i + 1,
                x: f.grid().x(i),
            });
        }
    }
    Ok(())
}

/// Pointwise `∓β' + β² - (V - ε)`, sign from `ordering`.
pub fn riccati_residual(
    beta: &BetaFunction,
    ordering: Ordering,
    spec: &PotentialSpec,
    grid: &Grid,
) -> Result<GridFunction> {
    let v = spec.sample(grid)?;
    riccati_residual_sampled(beta, ordering, &v)
}

/// [`riccati_residual`] against an already sampled potential.
pub fn riccati_residual_sampled(
    beta: &BetaFunction,
    ordering: Ordering,
    potential: &GridFunction,
) -> Result<GridFunction> {
    let grid = potential.grid();
    let b = beta.values(grid)?;
    let db = beta.derivative(grid)?;
    let s = ordering.derivative_sign();
    let eps = beta.epsilon;
    let values = (0..grid.len())
        .map(|i| s * db.get(i) + b.get(i).powi(2) - (potential.get(i) - eps))
        .collect();
    GridFunction::new(*grid, values)
}

/// `β = -u'/u` with a finite-difference `u'`.
pub fn beta_from_u(u: &GridFunction, epsilon: f64) -> Result<BetaFunction> {
    if let Some(i) = u.values().iter().position(|&v| v == 0.0) {
        return Err(Error::NodeZero {
            node: i,
            x: u.grid().x(i),
        });
    }
    let du = grid::derivative(u);
    let beta = du.zip_with(u, |d, v| -d / v)?;
    Ok(BetaFunction::sampled_numeric(beta, epsilon))
}

/// `u = exp(-∫β)`, scaled so that `max u = 1`.
pub fn u_from_beta(beta: &BetaFunction, grid: &Grid) -> Result<GridFunction> {
    let a = beta.antiderivative(grid)?;
    let lo = a.values().iter().cloned().fold(f64::INFINITY, f64::min);
    a.map(|v| (lo - v).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(a: f64, b: f64, n: usize) -> Grid {
        Grid::new(a, b, n).unwrap()
    }

    #[test]
    fn catalog_values() {
        let osc = particular_beta(&PotentialSpec::oscillator()).unwrap();
        assert_eq!(osc.closed_form().unwrap().value(2.0), 2.0);
        assert_eq!(osc.epsilon, 1.0);
        let h2 = particular_beta(&PotentialSpec::hydrogen(2)).unwrap();
        assert_eq!(h2.closed_form().unwrap().value(1.0), 1.5);
        assert_eq!(h2.epsilon, -0.25);
        assert_eq!(particular_beta(&PotentialSpec::hydrogen(1)).unwrap().epsilon, -1.0);
        let shifted = particular_beta(&PotentialSpec::oscillator_shifted()).unwrap();
        assert_eq!(shifted.closed_form(), Some(ClosedBeta::Linear));
        assert_eq!(catalog_ordering(&PotentialSpec::oscillator_shifted()), Ordering::PlainFirst);
    }

    #[test]
    fn catalog_rejects_tabulated_and_s_wave() {
        let g = grid(0.0, 1.0, 5);
        let t = PotentialSpec::tabulated(GridFunction::zeros(g), "flat");
        assert!(matches!(particular_beta(&t), Err(Error::Unsupported(_))));
        assert!(particular_beta(&PotentialSpec::hydrogen(0)).is_err());
    }

    #[test]
    fn oscillator_residual_is_zero() {
        let g = grid(-5.0, 5.0, 101);
        let b = particular_beta(&PotentialSpec::oscillator()).unwrap();
        let r = riccati_residual(&b, Ordering::DaggerFirst, &PotentialSpec::oscillator(), &g).unwrap();
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn coulomb_residual_analytic() {
        let g = grid(0.1, 20.0, 2001);
        let spec = PotentialSpec::hydrogen(1);
        let b = particular_beta(&spec).unwrap();
        let r = riccati_residual(&b, Ordering::DaggerFirst, &spec, &g).unwrap();
        assert!(r.max_abs() < 1e-12, "{}", r.max_abs());
    }

    #[test]
    fn catalog_residuals_small() {
        let line = grid(-8.0, 8.0, 801);
        let radial = Grid::radial(40.0, 4000).unwrap();
        for entry in catalog(4) {
            let g = if entry.potential.is_radial() { radial } else { line };
            let r = riccati_residual(&entry.beta, entry.ordering, &entry.potential, &g).unwrap();
            assert!(r.max_abs() <= 1e-10, "{}: {}", entry.potential.label, r.max_abs());
        }
    }

    #[test]
    fn wrong_sign_is_detected() {
        let g = grid(-3.0, 3.0, 61);
        let b = particular_beta(&PotentialSpec::oscillator()).unwrap();
        let r = riccati_residual(&b, Ordering::PlainFirst, &PotentialSpec::oscillator(), &g).unwrap();
        assert!((r.max_abs() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn general_beta_at_origin() {
        let g = grid(-4.0, 4.0, 801);
        let alpha = BetaFunction::closed(ClosedBeta::Linear, 1.0);
        let b = general_beta(&alpha, 2.0, &g, Ordering::PlainFirst).unwrap();
        let v = b.values(&g).unwrap();
        assert!((v.get(400) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn general_beta_large_constant_recovers_particular() {
        let g = grid(-4.0, 4.0, 801);
        let alpha = BetaFunction::closed(ClosedBeta::Linear, 1.0);
        let b = general_beta(&alpha, 1e9, &g, Ordering::PlainFirst).unwrap();
        let dev = b.values(&g).unwrap().map_with_x(|x, v| v - x).unwrap().max_abs();
        assert!(dev < 1e-8, "{dev}");
    }

    #[test]
    fn general_beta_singular_below_bound() {
        let g = grid(-4.0, 4.0, 801);
        let alpha = BetaFunction::closed(ClosedBeta::Linear, 1.0);
        let err = general_beta(&alpha, 0.5, &g, Ordering::PlainFirst).unwrap_err();
        match err {
            Error::SingularFamily { x, .. } => assert!(x < -0.4 && x > -0.7, "x = {x}"),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn general_beta_residual_shifted_oscillator() {
        let g = grid(-6.0, 6.0, 4001);
        let alpha = BetaFunction::closed(ClosedBeta::Linear, 1.0);
        let b = general_beta(&alpha, 2.0, &g, Ordering::PlainFirst).unwrap();
        let r = riccati_residual(&b, Ordering::PlainFirst, &PotentialSpec::oscillator_shifted(), &g)
            .unwrap();
        assert!(r.max_abs() < 1e-6, "{}", r.max_abs());
    }

    #[test]
    fn general_beta_numeric_residual_is_second_order() {
        let alpha = BetaFunction::closed(ClosedBeta::Linear, 1.0);
        let constant = |n| {
            let g = grid(-6.0, 6.0, n);
            let b = general_beta(&alpha, 2.0, &g, Ordering::PlainFirst)
                .unwrap()
                .with_numeric_derivative(&g)
                .unwrap();
            let r = riccati_residual(&b, Ordering::PlainFirst, &PotentialSpec::oscillator_shifted(), &g)
                .unwrap();
            r.max_abs() / g.spacing().powi(2)
        };
        let (c1, c2) = (constant(1001), constant(2001));
        assert!(c1 < 100.0 && c2 < 100.0, "{c1} {c2}");
        assert!((c1 / c2 - 1.0).abs() < 0.1, "C drifts: {c1} vs {c2}");
    }

    #[test]
    fn hydrogen_general_beta_residual() {
        let g = Grid::radial(40.0, 8000).unwrap();
        let spec = PotentialSpec::hydrogen(1);
        let bp = particular_beta(&spec).unwrap();
        for lambda in [0.3, -1.0] {
            let b = general_beta(&bp, lambda, &g, Ordering::DaggerFirst).unwrap();
            let r = riccati_residual(&b, Ordering::DaggerFirst, &spec, &g).unwrap();
            assert!(r.max_abs() < 1e-6, "λ = {lambda}: {}", r.max_abs());
        }
        assert!(general_beta(&bp, 0.1, &g, Ordering::DaggerFirst).is_err());
    }

    #[test]
    fn beta_from_gaussian() {
        let g = grid(-5.0, 5.0, 100_001);
        let u = GridFunction::from_fn(g, |x| (-x * x / 2.0).exp()).unwrap();
        let b = beta_from_u(&u, 1.0).unwrap();
        let dev = b.values(&g).unwrap().map_with_x(|x, v| v - x).unwrap().max_abs();
        assert!(dev < 1e-6, "{dev}");
        let analytic = BetaFunction::closed(ClosedBeta::Linear, 1.0);
        assert_eq!(analytic.values(&g).unwrap().get(1234), g.x(1234));
    }

    #[test]
    fn beta_from_constant_is_zero() {
        let g = grid(0.0, 1.0, 11);
        let b = beta_from_u(&GridFunction::constant(g, 3.0), 0.0).unwrap();
        assert_eq!(b.values(&g).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn beta_from_radial_state() {
        let g = Grid::radial(20.0, 20000).unwrap();
        let u = GridFunction::from_fn(g, |r| r * r * (-r / 2.0).exp()).unwrap();
        let b = beta_from_u(&u, -0.25).unwrap();
        let dev = b
            .values(&g)
            .unwrap()
            .map_with_x(|r, v| v - (-2.0 / r + 0.5))
            .unwrap();
        // The 1/r term is steep near the origin; compare from r = 1 on.
        let far = g
            .nodes()
            .zip(dev.values())
            .filter(|(r, _)| *r >= 1.0)
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        assert!(far < 1e-6, "{far}");
    }

    #[test]
    fn beta_from_u_rejects_zero() {
        let g = grid(-1.0, 1.0, 3);
        let u = GridFunction::from_fn(g, |x| x).unwrap();
        assert!(matches!(beta_from_u(&u, 0.0), Err(Error::NodeZero { node: 1, .. })));
    }

    #[test]
    fn u_beta_round_trip() {
        let g = grid(-3.0, 3.0, 3001);
        let beta = BetaFunction::sampled_numeric(
            GridFunction::from_fn(g, |x| x + 0.3 * (2.0 * x).sin()).unwrap(),
            0.0,
        );
        let u = u_from_beta(&beta, &g).unwrap();
        assert!((u.max_abs() - 1.0).abs() < 1e-15);
        let back = beta_from_u(&u, 0.0).unwrap();
        let dev = back
            .values(&g)
            .unwrap()
            .sub(&beta.values(&g).unwrap())
            .unwrap()
            .max_abs_interior(1);
        assert!(dev < 1e-5, "{dev}");
    }
}
