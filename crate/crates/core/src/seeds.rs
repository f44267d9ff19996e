//! Closed-form seed solutions `-u'' + V u = ε u` at factorization energies
//! below the ground state, and the parameter domains that keep them nodeless.
//!
//! Seeds grow exponentially, so they are stored as a mantissa times `2^scale`.
//! The superpotential `β = -u'/u` and its derivative are evaluated from the
//! closed forms and do not depend on the scale.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{cumulative_integral, Grid, GridFunction};
use crate::riccati::{check_no_crossing, default_anchor, BetaFunction};
use crate::specfun::{
    factorial_gamma, gamma_half_shift_ratio, gamma_ratio, hyp1f1, hyp1f1_derivative,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedSystem {
    Oscillator,
    Hydrogen { l: u32 },
}

/// Parameters of a closed-form seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedSpec {
    pub system: SeedSystem,
    /// Energy index: `ε = -2k - 1` for the oscillator, `ε = -1/(l + k)²` for
    /// hydrogen with `k ∈ {0, -1, ..., -(l - 1)}`.
    pub k: i64,
    /// `λ` for hydrogen, `ν` for the oscillator.
    pub param: f64,
    pub c0: f64,
    pub c1: f64,
    /// Oscillator only: any `ε < 1` instead of the discrete catalog value.
    pub free_epsilon: Option<f64>,
}

impl SeedSpec {
    pub fn oscillator(k: i64, nu: f64) -> Self {
        Self {
            system: SeedSystem::Oscillator,
            k,
            param: nu,
            c0: 1.0,
            c1: 0.0,
            free_epsilon: None,
        }
    }

    pub fn oscillator_free(epsilon: f64, nu: f64) -> Self {
        Self {
            free_epsilon: Some(epsilon),
            ..Self::oscillator(0, nu)
        }
    }

    pub fn hydrogen(l: u32, k: i64, lambda: f64) -> Self {
        Self {
            system: SeedSystem::Hydrogen { l },
            k,
            param: lambda,
            c0: 1.0,
            c1: 0.0,
            free_epsilon: None,
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self.system {
            SeedSystem::Oscillator => self
                .free_epsilon
                .unwrap_or(-2.0 * self.k as f64 - 1.0),
            SeedSystem::Hydrogen { l } => {
                let n = l as f64 + self.k as f64;
                -1.0 / (n * n)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.system {
            SeedSystem::Oscillator => {
                if self.free_epsilon.is_none() && self.k < 0 {
                    return Err(Error::Parameter(format!(
                        "oscillator energy index must be k >= 0, got {}",
                        self.k
                    )));
                }
                validate_params(&FamilyDescriptor::OscillatorGeneralized {
                    epsilon: self.epsilon(),
                    nu: self.param,
                })
            }
            SeedSystem::Hydrogen { l } => validate_params(&FamilyDescriptor::HydrogenGeneralized {
                l,
                k: self.k,
                lambda: self.param,
            }),
        }
    }
}

/// Discrete factorization energies of a system.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyCatalog {
    pub system: SeedSystem,
    pub entries: Vec<(i64, f64)>,
}

impl EnergyCatalog {
    /// `ε = -2k - 1` for `k = 0..count`.
    pub fn oscillator(count: usize) -> Self {
        Self {
            system: SeedSystem::Oscillator,
            entries: (0..count as i64).map(|k| (k, -2.0 * k as f64 - 1.0)).collect(),
        }
    }

    /// `ε = -1/(l + k)²` for `k = 0, -1, ..., -(l - 1)`.
    pub fn hydrogen(l: u32) -> Result<Self> {
        if l == 0 {
            return Err(Error::Parameter("hydrogen seeds need l >= 1".into()));
        }
        let entries = (0..l as i64)
            .map(|j| {
                let n = (l as i64 - j) as f64;
                (-j, -1.0 / (n * n))
            })
            .collect();
        Ok(Self {
            system: SeedSystem::Hydrogen { l },
            entries,
        })
    }
}

/// A family together with its free parameter, for domain validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyDescriptor {
    /// Oscillator family generated from `α = x`, parameter `γ`.
    OscillatorMielnik { gamma: f64 },
    /// Coulomb family generated from `β = l/r - 1/l`, parameter `λ`.
    HydrogenMielnik { l: u32, lambda: f64 },
    OscillatorGeneralized { epsilon: f64, nu: f64 },
    HydrogenGeneralized { l: u32, k: i64, lambda: f64 },
}

/// `√π / 2`, the edge of the oscillator family domain.
pub fn oscillator_gamma_bound() -> f64 {
    PI.sqrt() / 2.0
}

/// `(2l)! (l/2)^{2l+1} = ∫₀^∞ r^{2l} e^{-2r/l} dr`, the edge of the Coulomb
/// family domain.
pub fn hydrogen_lambda_bound(l: u32) -> f64 {
    factorial_gamma(2 * l + 1) * (l as f64 / 2.0).powi(2 * l as i32 + 1)
}

/// Accept iff the family stays free of singularities.
pub fn validate_params(family: &FamilyDescriptor) -> Result<()> {
    let finite = |v: f64, name: &str| {
        if v.is_finite() {
            Ok(())
        } else {
            Err(Error::Parameter(format!("{name} must be finite, got {v}")))
        }
    };
    match *family {
        FamilyDescriptor::OscillatorMielnik { gamma } => {
            finite(gamma, "gamma")?;
            let bound = oscillator_gamma_bound();
            if gamma.abs() > bound {
                Ok(())
            } else {
                Err(Error::Domain(format!(
                    "|gamma| = {} must exceed sqrt(pi)/2 = {bound:.7}",
                    gamma.abs()
                )))
            }
        }
        FamilyDescriptor::HydrogenMielnik { l, lambda } => {
            finite(lambda, "lambda")?;
            if l == 0 {
                return Err(Error::Parameter("hydrogen family needs l >= 1".into()));
            }
            let bound = hydrogen_lambda_bound(l);
            if lambda > bound || lambda < 0.0 {
                Ok(())
            } else {
                Err(Error::Domain(format!(
                    "lambda = {lambda} must be negative or exceed (2l)!(l/2)^(2l+1) = {bound}"
                )))
            }
        }
        FamilyDescriptor::OscillatorGeneralized { epsilon, nu } => {
            finite(epsilon, "epsilon")?;
            finite(nu, "nu")?;
            if epsilon >= 1.0 {
                return Err(Error::Domain(format!("epsilon = {epsilon} must be below 1")));
            }
            if nu.abs() >= 1.0 {
                return Err(Error::Domain(format!("|nu| = {} must be below 1", nu.abs())));
            }
            Ok(())
        }
        FamilyDescriptor::HydrogenGeneralized { l, k, lambda } => {
            finite(lambda, "lambda")?;
            if l == 0 {
                return Err(Error::Parameter("hydrogen seeds need l >= 1".into()));
            }
            if k > 0 || k.unsigned_abs() >= l as u64 {
                return Err(Error::Parameter(format!(
                    "k must lie in {{0, -1, ..., -{}}}, got {k}",
                    l - 1
                )));
            }
            if k % 2 == 0 {
                if lambda < 1.0 {
                    Ok(())
                } else {
                    Err(Error::Domain(format!(
                        "lambda = {lambda} must lie in (-inf, 1) for even |k|"
                    )))
                }
            } else if lambda > 1.0 {
                Ok(())
            } else {
                Err(Error::Domain(format!(
                    "lambda = {lambda} must lie in (1, inf) for odd |k|"
                )))
            }
        }
    }
}

/// Seed samples `mantissa · 2^scale` with the exact superpotential.
#[derive(Debug, Clone, PartialEq)]
pub struct Seed {
    pub epsilon: f64,
    mantissa: GridFunction,
    scale: i32,
    beta: GridFunction,
    beta_prime: GridFunction,
}

impl Seed {
    fn from_logs(
        grid: &Grid,
        epsilon: f64,
        log_abs: Vec<f64>,
        sign: Vec<f64>,
        beta: Vec<f64>,
        beta_prime: Vec<f64>,
    ) -> Result<Self> {
        let top = log_abs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let scale = (top / std::f64::consts::LN_2).floor() as i32;
        let shift = scale as f64 * std::f64::consts::LN_2;
        let mantissa = log_abs
            .iter()
            .zip(&sign)
            .map(|(l, s)| s * (l - shift).exp())
            .collect();
        Ok(Self {
            epsilon,
            mantissa: GridFunction::new(*grid, mantissa)?,
            scale,
            beta: GridFunction::new(*grid, beta)
                .map_err(|_| Error::Numeric("seed superpotential is not finite".into()))?,
            beta_prime: GridFunction::new(*grid, beta_prime)
                .map_err(|_| Error::Numeric("seed superpotential is not finite".into()))?,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.mantissa.grid()
    }

    pub fn mantissa(&self) -> &GridFunction {
        &self.mantissa
    }

    pub fn scale(&self) -> i32 {
        self.scale
    }

    /// Unscaled samples; fails if they do not fit in `f64`.
    pub fn values(&self) -> Result<GridFunction> {
        let f = 2f64.powi(self.scale);
        self.mantissa
            .map(|m| m * f)
            .map_err(|_| Error::Numeric(format!("seed overflows at scale 2^{}", self.scale)))
    }

    /// `β = -u'/u` with its exact derivative.
    pub fn beta(&self) -> BetaFunction {
        BetaFunction::sampled_analytic(self.beta.clone(), self.beta_prime.clone(), self.epsilon)
            .expect("same grid")
    }
}

/// Parity branch of an oscillator seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Oscillator seed `u = Φ(x²) e^{-x²/2}` with
/// `Φ = M(a, 1/2, x²) + 2ν Γ(a + 1/2)/Γ(a) · x · M(a + 1/2, 3/2, x²)`,
/// `a = (1 - ε)/4`, and `x` carrying its sign in the odd term.
///
/// The factor 2 places the singularity-free range at exactly `|ν| < 1`.
pub fn oscillator_seed(epsilon: f64, nu: f64, grid: &Grid) -> Result<Seed> {
    validate_params(&FamilyDescriptor::OscillatorGeneralized { epsilon, nu })?;
    let a = (1.0 - epsilon) / 4.0;
    let c = 2.0 * nu * gamma_half_shift_ratio(a)?;
    oscillator_combination(epsilon, 1.0, c, grid, true)
}

/// Pure even or odd oscillator solution at any `ε`, without domain checks.
/// The odd branch vanishes at the origin, so it is only usable on grids that
/// avoid `x = 0`.
pub fn oscillator_seed_branch(epsilon: f64, parity: Parity, grid: &Grid) -> Result<Seed> {
    match parity {
        Parity::Even => oscillator_combination(epsilon, 1.0, 0.0, grid, false),
        Parity::Odd => oscillator_combination(epsilon, 0.0, 1.0, grid, false),
    }
}

fn oscillator_combination(
    epsilon: f64,
    even: f64,
    odd: f64,
    grid: &Grid,
    nodeless: bool,
) -> Result<Seed> {
    let a = (1.0 - epsilon) / 4.0;
    let n = grid.len();
    let (mut log_abs, mut sign, mut beta, mut dbeta) =
        (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let mut phi_samples = Vec::with_capacity(n);
    for x in grid.nodes() {
        let y = x * x;
        let (mut p, mut px, mut pxx) = (0.0, 0.0, 0.0);
        if even != 0.0 {
            let f = hyp1f1(a, 0.5, y)?;
            let f1 = hyp1f1_derivative(a, 0.5, y, 1)?;
            let f2 = hyp1f1_derivative(a, 0.5, y, 2)?;
            p += even * f;
            px += even * 2.0 * x * f1;
            pxx += even * (2.0 * f1 + 4.0 * y * f2);
        }
        if odd != 0.0 {
            let g = hyp1f1(a + 0.5, 1.5, y)?;
            let g1 = hyp1f1_derivative(a + 0.5, 1.5, y, 1)?;
            let g2 = hyp1f1_derivative(a + 0.5, 1.5, y, 2)?;
            p += odd * x * g;
            px += odd * (g + 2.0 * y * g1);
            pxx += odd * (6.0 * x * g1 + 4.0 * x * y * g2);
        }
        phi_samples.push(p);
        let q = px / p;
        log_abs.push(p.abs().ln() - 0.5 * y);
        sign.push(p.signum());
        beta.push(x - q);
        dbeta.push(1.0 - pxx / p + q * q);
    }
    if nodeless {
        check_no_crossing(&GridFunction::new(*grid, phi_samples)?, "oscillator seed")?;
    }
    Seed::from_logs(grid, epsilon, log_abs, sign, beta, dbeta)
}

/// `ν = Γ(1 + |k|)/Γ(2l + 2) · Γ(-2l)/Γ(-2l + |k|) · λ`, the pole ratio taken
/// as a reciprocal Pochhammer symbol.
pub fn hydrogen_nu(l: u32, k: i64, lambda: f64) -> Result<f64> {
    let m = k.unsigned_abs() as u32;
    let front = factorial_gamma(1 + m) / factorial_gamma(2 * l + 2);
    Ok(front * gamma_ratio(-2.0 * l as f64, m)? * lambda)
}

/// Coulomb seed `u = r^{-l} e^{r/n} Φ(2r/n)`, `n = l + k`, with
/// `Φ(t) = M(k, -2l, -t) - ν t^{2l+1} M(1 + k + 2l, 2 + 2l, -t)`.
pub fn hydrogen_seed(l: u32, k: i64, lambda: f64, grid: &Grid) -> Result<Seed> {
    validate_params(&FamilyDescriptor::HydrogenGeneralized { l, k, lambda })?;
    if grid.x_min() <= 0.0 {
        return Err(Error::InvalidGrid("hydrogen seeds need r > 0".into()));
    }
    let nu = hydrogen_nu(l, k, lambda)?;
    let lf = l as f64;
    let n = lf + k as f64;
    let kf = k as f64;
    let b = -2.0 * lf;
    let m = 2 * l + 1;
    let (a2, b2) = (1.0 + kf + 2.0 * lf, 2.0 + 2.0 * lf);
    let dt = 2.0 / n;

    let len = grid.len();
    let (mut log_abs, mut sign, mut beta, mut dbeta) =
        (Vec::with_capacity(len), Vec::with_capacity(len), Vec::with_capacity(len), Vec::with_capacity(len));
    let mut phi_samples = Vec::with_capacity(len);
    for r in grid.nodes() {
        let t = dt * r;
        // First term, differentiated in t through z = -t.
        let p0 = hyp1f1(kf, b, -t)?;
        let p1 = -hyp1f1_derivative(kf, b, -t, 1)?;
        let p2 = hyp1f1_derivative(kf, b, -t, 2)?;
        // Second term t^m R(-t).
        let r0 = hyp1f1(a2, b2, -t)?;
        let r1 = -hyp1f1_derivative(a2, b2, -t, 1)?;
        let r2 = hyp1f1_derivative(a2, b2, -t, 2)?;
        let mf = m as f64;
        let tm = t.powi(m as i32);
        let q0 = tm * r0;
        let q1 = mf * t.powi(m as i32 - 1) * r0 + tm * r1;
        let q2 = mf * (mf - 1.0) * t.powi(m as i32 - 2) * r0
            + 2.0 * mf * t.powi(m as i32 - 1) * r1
            + tm * r2;
        let phi = p0 - nu * q0;
        let phi_r = (p1 - nu * q1) * dt;
        let phi_rr = (p2 - nu * q2) * dt * dt;
        phi_samples.push(phi);
        let q = phi_r / phi;
        log_abs.push(-lf * r.ln() + r / n + phi.abs().ln());
        sign.push(phi.signum());
        beta.push(lf / r - 1.0 / n - q);
        dbeta.push(-lf / (r * r) - phi_rr / phi + q * q);
    }
    check_no_crossing(&GridFunction::new(*grid, phi_samples)?, "hydrogen seed")?;
    Seed::from_logs(grid, -1.0 / (n * n), log_abs, sign, beta, dbeta)
}

/// Seed for a [`SeedSpec`]. A non-default `(c0, c1)` pair is applied to the
/// closed-form solution through [`general_seed_from_null`].
pub fn seed_from_spec(spec: &SeedSpec, grid: &Grid) -> Result<Seed> {
    spec.validate()?;
    let seed = match spec.system {
        SeedSystem::Oscillator => oscillator_seed(spec.epsilon(), spec.param, grid)?,
        SeedSystem::Hydrogen { l } => hydrogen_seed(l, spec.k, spec.param, grid)?,
    };
    if spec.c0 == 1.0 && spec.c1 == 0.0 {
        return Ok(seed);
    }
    let u = general_seed_from_null(&seed.values()?, spec.c0, spec.c1)?;
    let values = u.values().to_vec();
    let beta = crate::riccati::beta_from_u(&u, seed.epsilon)?;
    let b = beta.values(grid)?;
    let db = beta.derivative(grid)?;
    Seed::from_logs(
        grid,
        seed.epsilon,
        values.iter().map(|v| v.abs().ln()).collect(),
        values.iter().map(|v| v.signum()).collect(),
        b.into_values(),
        db.into_values(),
    )
}

/// Second solution by reduction of order: `u = ψ (c0 + c1 ∫ ψ^{-2})`, the
/// integral anchored at the origin (or the first node).
pub fn general_seed_from_null(psi: &GridFunction, c0: f64, c1: f64) -> Result<GridFunction> {
    if let Some(i) = psi.values().iter().position(|&v| v == 0.0) {
        return Err(Error::NodeZero {
            node: i,
            x: psi.grid().x(i),
        });
    }
    if c1 == 0.0 {
        return Ok(psi.scale(c0));
    }
    let inv_sq = psi.map(|v| 1.0 / (v * v))?;
    let integral = cumulative_integral(&inv_sq, default_anchor(psi.grid()))?;
    psi.zip_with(&integral, |p, i| p * (c0 + c1 * i))
}
