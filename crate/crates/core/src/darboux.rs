//! Partner potentials, eigenfunction maps, missing states and chains.
//!
//! Every transform is stored in forward form: the source Hamiltonian is
//! `A†A + ε` and the target is `AA† + ε = -d² + V + 2β'`. A pair written in
//! the other ordering is flipped with `β → -β` on entry.

use crate::error::{Error, Result};
use crate::factorize::{apply_annihilation, exp_max_normalized, is_normalizable};
use crate::grid::{Grid, GridFunction};
use crate::riccati::{
    general_solution, particular_beta, riccati_residual_sampled, BetaFunction, ClosedBeta,
    DerivativeMode, FactorizationScheme, Ordering, PotentialSpec,
};
use crate::seeds::{
    hydrogen_seed, oscillator_seed, validate_params, FamilyDescriptor, Seed,
};

/// Which way `2β'` is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `Ṽ = V + 2β'`
    Add,
    /// `V = Ṽ - 2β'`
    Subtract,
}

/// `V ± 2β'` on `grid`.
pub fn transform_potential(
    spec: &PotentialSpec,
    beta: &BetaFunction,
    direction: Direction,
    grid: &Grid,
) -> Result<GridFunction> {
    let v = spec.sample(grid)?;
    transform_sampled(&v, beta, direction)
}

fn transform_sampled(v: &GridFunction, beta: &BetaFunction, direction: Direction) -> Result<GridFunction> {
    let d = beta.derivative(v.grid())?;
    let s = match direction {
        Direction::Add => 2.0,
        Direction::Subtract => -2.0,
    };
    v.zip_with(&d, |p, q| p + s * q)
        .map_err(|_| Error::Numeric("transformed potential is not finite".into()))
}

/// Family parameters recorded with a transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyParams {
    OscillatorSdih,
    OscillatorMielnik { gamma: f64 },
    OscillatorGeneralized { epsilon: f64, nu: f64 },
    HydrogenSdih { l: u32 },
    HydrogenMielnik { l: u32, lambda: f64 },
    HydrogenGeneralized { l: u32, k: i64, lambda: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissingState {
    /// Unit norm when normalizable, otherwise scaled to `max |ψ| = 1`.
    pub state: GridFunction,
    pub normalizable: bool,
}

impl MissingState {
    fn from_shape(shape: GridFunction) -> Result<Self> {
        let normalizable = is_normalizable(&shape);
        let state = if normalizable {
            shape
                .normalized()
                .ok_or_else(|| Error::Numeric("missing state vanishes".into()))?
        } else {
            let peak = shape.max_abs();
            shape.scale(1.0 / peak)
        };
        Ok(Self { state, normalizable })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformResult {
    pub source: PotentialSpec,
    pub source_potential: GridFunction,
    /// Forward-form scheme: `source = A†A + ε`.
    pub scheme: FactorizationScheme,
    pub target_potential: GridFunction,
    pub epsilon: f64,
    pub missing: MissingState,
    pub family: FamilyParams,
}

impl TransformResult {
    pub fn grid(&self) -> &Grid {
        self.source_potential.grid()
    }

    /// Target spectrum predicted from source levels: `ε` is added exactly
    /// when the missing state is normalizable.
    pub fn predicted_epsilon(&self) -> Option<f64> {
        self.missing.normalizable.then_some(self.epsilon)
    }

    /// Riccati residual of the stored superpotential against the source.
    pub fn residual(&self) -> Result<GridFunction> {
        riccati_residual_sampled(&self.scheme.beta, Ordering::DaggerFirst, &self.source_potential)
    }
}

fn assemble(
    source: PotentialSpec,
    grid: &Grid,
    beta: BetaFunction,
    missing_shape: GridFunction,
    family: FamilyParams,
) -> Result<TransformResult> {
    let source_potential = source.sample(grid)?;
    let target_potential = transform_sampled(&source_potential, &beta, Direction::Add)?;
    Ok(TransformResult {
        epsilon: beta.epsilon,
        scheme: FactorizationScheme::new(beta, Ordering::DaggerFirst),
        source,
        source_potential,
        target_potential,
        missing: MissingState::from_shape(missing_shape)?,
        family,
    })
}

/// `x² + 2 = AA† + 1` with `α = x`, giving `x²` as the partner.
pub fn oscillator_sdih(grid: &Grid) -> Result<TransformResult> {
    let alpha = particular_beta(&PotentialSpec::oscillator_shifted())?;
    let beta = alpha.negated(grid)?;
    let missing = GridFunction::from_fn(*grid, |x| (-x * x / 2.0).exp())?;
    assemble(
        PotentialSpec::oscillator_shifted(),
        grid,
        beta,
        missing,
        FamilyParams::OscillatorSdih,
    )
}

/// One-parameter family isospectral to `x²`, built on `x² + 2` from
/// `β = α + e^{-2∫α} / (γ + ∫e^{-2∫α})`.
pub fn oscillator_mielnik(gamma: f64, grid: &Grid) -> Result<TransformResult> {
    validate_params(&FamilyDescriptor::OscillatorMielnik { gamma })?;
    let alpha = particular_beta(&PotentialSpec::oscillator_shifted())?;
    let general = general_solution(&alpha, gamma, grid, Ordering::PlainFirst)?;
    let missing = general.missing_state()?;
    let beta = general.beta.negated(grid)?;
    assemble(
        PotentialSpec::oscillator_shifted(),
        grid,
        beta,
        missing,
        FamilyParams::OscillatorMielnik { gamma },
    )
}

fn seed_missing(seed: &Seed) -> Result<GridFunction> {
    // 1/u up to scale, from the mantissa.
    let m = seed.mantissa();
    let log = m.map(|v| -v.abs().ln())?;
    exp_max_normalized(&log)
}

/// `x²` transformed with the seed at `(ε, ν)`; adds a level at `ε < 1`.
pub fn oscillator_generalized(epsilon: f64, nu: f64, grid: &Grid) -> Result<TransformResult> {
    let seed = oscillator_seed(epsilon, nu, grid)?;
    let missing = seed_missing(&seed)?;
    assemble(
        PotentialSpec::oscillator(),
        grid,
        seed.beta(),
        missing,
        FamilyParams::OscillatorGeneralized { epsilon, nu },
    )
}

fn require_l(l: u32) -> Result<()> {
    if l == 0 {
        Err(Error::Parameter("hydrogen transforms need l >= 1".into()))
    } else {
        Ok(())
    }
}

/// `V_l → V_{l-1}` with `β = l/r - 1/l`.
pub fn hydrogen_sdih(l: u32, grid: &Grid) -> Result<TransformResult> {
    require_l(l)?;
    let spec = PotentialSpec::hydrogen(l);
    let beta = particular_beta(&spec)?;
    let lf = l as f64;
    let missing = GridFunction::from_fn(*grid, |r| r.powf(lf) * (-r / lf).exp())?;
    assemble(spec, grid, beta, missing, FamilyParams::HydrogenSdih { l })
}

/// Family isospectral to `V_{l-1}`, from
/// `β = β_p + e^{2∫β_p} / (λ - ∫e^{2∫β_p})`.
pub fn hydrogen_mielnik(l: u32, lambda: f64, grid: &Grid) -> Result<TransformResult> {
    validate_params(&FamilyDescriptor::HydrogenMielnik { l, lambda })?;
    let spec = PotentialSpec::hydrogen(l);
    let bp = particular_beta(&spec)?;
    let general = general_solution(&bp, lambda, grid, Ordering::DaggerFirst)?;
    let missing = general.missing_state()?;
    assemble(
        spec,
        grid,
        general.beta,
        missing,
        FamilyParams::HydrogenMielnik { l, lambda },
    )
}

/// `V_l` transformed with the seed at `ε = -1/(l + k)²`.
pub fn hydrogen_generalized(l: u32, k: i64, lambda: f64, grid: &Grid) -> Result<TransformResult> {
    let seed = hydrogen_seed(l, k, lambda, grid)?;
    let missing = seed_missing(&seed)?;
    assemble(
        PotentialSpec::hydrogen(l),
        grid,
        seed.beta(),
        missing,
        FamilyParams::HydrogenGeneralized { l, k, lambda },
    )
}

/// Missing state of a transform with its normalizability flag.
pub fn missing_state(transform: &TransformResult) -> &MissingState {
    &transform.missing
}

/// `e^{+∫β}` in log space, for superpotentials without a closed-form kernel.
pub fn missing_state_from_beta(beta: &BetaFunction, grid: &Grid) -> Result<MissingState> {
    let log = beta.antiderivative(grid)?;
    MissingState::from_shape(exp_max_normalized(&log)?)
}

/// Below this `E - ε` a map is treated as degenerate.
pub const DEGENERATE_GAP: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct MappedState {
    /// `(E - ε)^{-1/2} A ψ`, renormalized to unit norm.
    pub state: GridFunction,
    /// Norm of `(E - ε)^{-1/2} A ψ` before renormalization.
    pub raw_norm: f64,
}

/// `ψ̃ = (E - ε)^{-1/2} A ψ` for the transform's `A`.
pub fn map_eigenfunction(scheme: &FactorizationScheme, psi: &GridFunction, energy: f64) -> Result<MappedState> {
    let gap = energy - scheme.epsilon();
    if gap < 0.0 {
        return Err(Error::ImaginaryNormalization(gap));
    }
    if gap < DEGENERATE_GAP {
        return Err(Error::DegenerateMap(gap));
    }
    let beta = scheme.forward_beta(psi.grid())?;
    let image = apply_annihilation(&beta, psi)?.scale(gap.powf(-0.5));
    let raw_norm = image.norm();
    let state = image
        .normalized()
        .ok_or_else(|| Error::Numeric("mapped state vanishes".into()))?;
    Ok(MappedState { state, raw_norm })
}

/// One factorization in a chain: `potential = previous + 2β'`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainStep {
    pub epsilon: f64,
    pub beta: BetaFunction,
    pub potential: GridFunction,
}

/// A sequence of first-order transforms starting from `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub base: GridFunction,
    pub steps: Vec<ChainStep>,
}

impl ChainState {
    pub fn new(base: GridFunction) -> Self {
        Self {
            base,
            steps: Vec::new(),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.base.grid()
    }

    /// Potential after the last step.
    pub fn current(&self) -> &GridFunction {
        self.steps.last().map(|s| &s.potential).unwrap_or(&self.base)
    }

    /// Energies added so far, in order.
    pub fn epsilons(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.epsilon).collect()
    }

    /// First step: `β` must solve the Riccati equation of `base` at its
    /// energy.
    pub fn first_step(base: GridFunction, beta: BetaFunction) -> Result<Self> {
        let mut state = Self::new(base);
        state.push(beta)?;
        Ok(state)
    }

    fn push(&mut self, beta: BetaFunction) -> Result<()> {
        residual_gate(&beta, self.current())?;
        let potential = transform_sampled(self.current(), &beta, Direction::Add)?;
        self.steps.push(ChainStep {
            epsilon: beta.epsilon,
            beta,
            potential,
        });
        Ok(())
    }
}

/// Maximum Riccati residual allowed for a chain step, with finite-difference
/// `β'`, as a multiple of `h²`.
pub const CHAIN_RESIDUAL_FACTOR: f64 = 100.0;

fn residual_gate(beta: &BetaFunction, potential: &GridFunction) -> Result<()> {
    let grid = potential.grid();
    let sampled = beta.with_numeric_derivative(grid)?;
    let r = riccati_residual_sampled(&sampled, Ordering::DaggerFirst, potential)?;
    let residual = r.max_abs_interior(2);
    let tolerance = CHAIN_RESIDUAL_FACTOR * grid.spacing().powi(2);
    if residual > tolerance {
        return Err(Error::ResidualGate { residual, tolerance });
    }
    Ok(())
}

/// `β_new = -β - Δε / (β̂ - β)` with its exact derivative, where `β̂` solves
/// the same Riccati equation as `β` at the new energy.
pub fn backlund(beta: &BetaFunction, seed: &BetaFunction, grid: &Grid) -> Result<BetaFunction> {
    let delta = seed.epsilon - beta.epsilon;
    if delta == 0.0 {
        return Err(Error::EqualEnergies(seed.epsilon));
    }
    let b = beta.values(grid)?;
    let s = seed.values(grid)?;
    let db = beta.derivative(grid)?;
    let ds = seed.derivative(grid)?;
    let n = grid.len();
    let mut values = Vec::with_capacity(n);
    let mut derivs = Vec::with_capacity(n);
    for i in 0..n {
        let gap = s.get(i) - b.get(i);
        if gap == 0.0 || !gap.is_finite() {
            return Err(Error::ChainSingular { node: i, x: grid.x(i) });
        }
        if i + 1 < n && gap * (s.get(i + 1) - b.get(i + 1)) < 0.0 {
            // A sign flip of β̂ - β between nodes is only harmless when β̂
            // jumps through a pole; a zero of the gap is a pole of β_new.
            let next = s.get(i + 1) - b.get(i + 1);
            if gap.abs().min(next.abs()) < 1.0 / grid.spacing() {
                return Err(Error::ChainSingular { node: i, x: grid.x(i) });
            }
        }
        values.push(-b.get(i) - delta / gap);
        derivs.push(-db.get(i) + delta * (ds.get(i) - db.get(i)) / (gap * gap));
    }
    let values = GridFunction::new(*grid, values)
        .map_err(|_| Error::Numeric("chain superpotential is not finite".into()))?;
    let derivs = GridFunction::new(*grid, derivs)
        .map_err(|_| Error::Numeric("chain superpotential is not finite".into()))?;
    Ok(match (beta.derivative_mode, seed.derivative_mode) {
        (DerivativeMode::Analytic, DerivativeMode::Analytic) => {
            BetaFunction::sampled_analytic(values, derivs, seed.epsilon)?
        }
        _ => BetaFunction::sampled_numeric(values, seed.epsilon),
    })
}

/// Appends the transform at `next_epsilon`. `seed` must solve the Riccati
/// equation of the potential the last step's `β` factorizes, at
/// `next_epsilon`. Seeds may have poles between nodes, so only the combined
/// superpotential goes through the residual gate.
pub fn chain_step(state: &ChainState, next_epsilon: f64, seed: &BetaFunction) -> Result<ChainState> {
    let last = state
        .steps
        .last()
        .ok_or_else(|| Error::Parameter("chain_step needs at least one step".into()))?;
    if next_epsilon == last.epsilon {
        return Err(Error::EqualEnergies(next_epsilon));
    }
    if seed.epsilon != next_epsilon {
        return Err(Error::Parameter(format!(
            "seed energy {} does not match {next_epsilon}",
            seed.epsilon
        )));
    }
    let grid = *state.grid();
    let beta = backlund(&last.beta, seed, &grid)?;
    let mut next = state.clone();
    next.push(beta)?;
    Ok(next)
}

/// Chain from seeds of the base potential at distinct energies. The first
/// seed factorizes the base; each later seed is carried through the earlier
/// steps before use.
pub fn build_chain(base: GridFunction, seeds: Vec<BetaFunction>) -> Result<ChainState> {
    let grid = *base.grid();
    let mut seeds = seeds.into_iter();
    let first = seeds
        .next()
        .ok_or_else(|| Error::Parameter("a chain needs at least one seed".into()))?;
    let mut state = ChainState::first_step(base, first)?;
    // Seeds for the potential the current last step factorizes.
    let mut pending: Vec<BetaFunction> = seeds.collect();
    while !pending.is_empty() {
        let seed = pending.remove(0);
        let last = state.steps.last().expect("non-empty").beta.clone();
        let next = chain_step(&state, seed.epsilon, &seed)?;
        // The remaining seeds move one potential forward.
        pending = pending
            .iter()
            .map(|s| backlund(&last, s, &grid))
            .collect::<Result<_>>()?;
        state = next;
    }
    Ok(state)
}

/// Linear oscillator superpotential, handy for chains starting at `x²`.
pub fn linear_beta(epsilon: f64) -> BetaFunction {
    BetaFunction::closed(ClosedBeta::Linear, epsilon)
}
