//! First-order operators `A = d/dx + β` and `A† = -d/dx + β` acting on grid
//! functions, their kernels, and the Coulomb l-ladder.
//!
//! `β` is taken from its closed form when one exists; only `f'` is
//! differenced.

use crate::error::{Error, Result};
use crate::grid::{derivative, Grid, GridFunction};
use crate::riccati::{BetaFunction, ClosedBeta};

/// Relative output norm below which an operator is said to annihilate its
/// input.
pub const ANNIHILATION_THRESHOLD: f64 = 1e-6;

/// `f' + β f`
pub fn apply_annihilation(beta: &BetaFunction, f: &GridFunction) -> Result<GridFunction> {
    let b = beta.values(f.grid())?;
    let df = derivative(f);
    let vals = (0..f.len()).map(|i| df.get(i) + b.get(i) * f.get(i)).collect();
    GridFunction::new(*f.grid(), vals)
}

/// `-f' + β f`
pub fn apply_creation(beta: &BetaFunction, f: &GridFunction) -> Result<GridFunction> {
    let b = beta.values(f.grid())?;
    let df = derivative(f);
    let vals = (0..f.len()).map(|i| -df.get(i) + b.get(i) * f.get(i)).collect();
    GridFunction::new(*f.grid(), vals)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    /// `A ψ = 0`, `ψ ∝ e^{-∫β}`
    Annihilation,
    /// `A† ψ = 0`, `ψ ∝ e^{+∫β}`
    Creation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NullState {
    /// Scaled so that `max |state| = 1`.
    pub state: GridFunction,
    pub square_integrable: bool,
}

/// Kernel of `A` or `A†`, evaluated in log space.
pub fn null_state(beta: &BetaFunction, which: Kernel, grid: &Grid) -> Result<NullState> {
    let sign = match which {
        Kernel::Annihilation => -1.0,
        Kernel::Creation => 1.0,
    };
    let log = beta.antiderivative(grid)?.scale(sign);
    let state = exp_max_normalized(&log)?;
    let square_integrable = is_normalizable(&state);
    Ok(NullState {
        state,
        square_integrable,
    })
}

/// `exp(f - max f)`
pub fn exp_max_normalized(log: &GridFunction) -> Result<GridFunction> {
    let top = log.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    log.map(|v| (v - top).exp())
}

/// Numerical square-integrability: finite norm, and on each open end the
/// magnitude decreases monotonically over the last fifth of the grid to below
/// `1e-3` of the maximum. Radial grids only test the outer end.
pub fn is_normalizable(f: &GridFunction) -> bool {
    let v = f.values();
    let n = v.len();
    let peak = f.max_abs();
    if !(peak > 0.0 && f.norm().is_finite()) {
        return false;
    }
    let tail = (n / 5).max(2);
    let decays = |idx: &mut dyn Iterator<Item = usize>| {
        let mut prev = f64::INFINITY;
        let mut last = 0.0;
        for i in idx {
            let a = v[i].abs();
            if a > prev * (1.0 + 1e-12) + 1e-300 {
                return false;
            }
            prev = a;
            last = a;
        }
        last <= 1e-3 * peak
    };
    let right = decays(&mut (n - tail..n));
    if f.grid().is_radial() {
        return right;
    }
    right && decays(&mut (0..tail).rev())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderDirection {
    RaiseL,
    LowerL,
}

/// Which ladder operator acts, on the Coulomb sector `l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LadderContext {
    pub l: u32,
    pub direction: LadderDirection,
}

impl LadderContext {
    pub fn new(l: u32, direction: LadderDirection) -> Result<Self> {
        if direction == LadderDirection::LowerL && l == 0 {
            return Err(Error::Parameter("cannot lower below l = 0".into()));
        }
        Ok(Self { l, direction })
    }

    pub fn target_l(&self) -> u32 {
        match self.direction {
            LadderDirection::RaiseL => self.l + 1,
            LadderDirection::LowerL => self.l - 1,
        }
    }
}

/// Moves a state of `H_l` to `H_{l±1}` at the same energy: raising applies
/// `a†_{l+1}`, lowering applies `a_l`, with `a_l = d/dr + l/r - 1/l`.
///
/// The output is unit-normalized. Raising the lowest state of a sector
/// (`n = l + 1`) has no partner and reports [`Error::Annihilated`].
pub fn hydrogen_ladder(ctx: LadderContext, psi: &GridFunction) -> Result<GridFunction> {
    if !psi.grid().is_radial() && psi.grid().x_min() <= 0.0 {
        return Err(Error::InvalidGrid("ladder operators need r > 0".into()));
    }
    let out = match ctx.direction {
        LadderDirection::RaiseL => {
            let l = ctx.l + 1;
            let b = BetaFunction::closed(ClosedBeta::Coulomb { l }, -1.0 / (l * l) as f64);
            apply_creation(&b, psi)?
        }
        LadderDirection::LowerL => {
            let l = ctx.l;
            let b = BetaFunction::closed(ClosedBeta::Coulomb { l }, -1.0 / (l * l) as f64);
            apply_annihilation(&b, psi)?
        }
    };
    let ratio = out.norm() / psi.norm();
    if !(ratio >= ANNIHILATION_THRESHOLD) {
        return Err(Error::Annihilated(ratio));
    }
    out.normalized()
        .ok_or_else(|| Error::Numeric("ladder output has zero norm".into()))
}

/// Cosine similarity `⟨f, g⟩ / (‖f‖ ‖g‖)`.
pub fn cosine_similarity(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    Ok(f.inner(g)? / (f.norm() * g.norm()))
}
