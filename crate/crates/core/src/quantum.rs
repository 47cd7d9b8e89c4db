//! Exact two-qubit game engine.
//!
//! A game starts in `|00>`, is entangled by `J(gamma)`, each player applies a
//! single-qubit unitary to their own qubit, and `J(gamma)^dagger` disentangles
//! before measurement. Basis order is `|00>, |01>, |10>, |11>` with the row
//! player's qubit first.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Elementwise tolerance for `U * U^dagger = I`.
pub const UNITARY_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// A 2x2 unitary acting on one player's qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2([[Complex64; 2]; 2]);

impl Unitary2 {
    /// Wraps `entries`, rejecting matrices that are not unitary within [`UNITARY_TOL`].
    pub fn new(entries: [[Complex64; 2]; 2]) -> Result<Self> {
        let u = Unitary2(entries);
        let dev = u.unitarity_deviation();
        if !(dev < UNITARY_TOL) {
            return Err(Error::domain(format!(
                "matrix is not unitary (max |U U^dagger - I| = {dev:e})"
            )));
        }
        Ok(u)
    }

    fn from_real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Unitary2([[re(a), re(b)], [re(c), re(d)]])
    }

    pub fn entries(&self) -> &[[Complex64; 2]; 2] {
        &self.0
    }

    pub fn identity() -> Self {
        Self::from_real(1.0, 0.0, 0.0, 1.0)
    }

    pub fn mul(&self, rhs: &Unitary2) -> Unitary2 {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[ZERO; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Unitary2(out)
    }

    pub fn adjoint(&self) -> Unitary2 {
        let m = &self.0;
        Unitary2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    /// Largest elementwise modulus of `U * U^dagger - I`.
    pub fn unitarity_deviation(&self) -> f64 {
        let p = self.mul(&self.adjoint());
        let mut worst = 0.0_f64;
        for r in 0..2 {
            for c in 0..2 {
                let target = if r == c { ONE } else { ZERO };
                worst = worst.max((p.0[r][c] - target).norm());
            }
        }
        if worst.is_nan() {
            f64::INFINITY
        } else {
            worst
        }
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Unitary2) -> f64 {
        let mut worst = 0.0_f64;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.0[r][c] - other.0[r][c]).norm());
            }
        }
        worst
    }
}

/// Hadamard gate.
pub fn strategy_h() -> Unitary2 {
    Unitary2::from_real(FRAC_1_SQRT_2, FRAC_1_SQRT_2, FRAC_1_SQRT_2, -FRAC_1_SQRT_2)
}

/// Cooperation: the identity.
pub fn strategy_c() -> Unitary2 {
    Unitary2::identity()
}

/// Defection.
pub fn strategy_d() -> Unitary2 {
    Unitary2::from_real(0.0, 1.0, -1.0, 0.0)
}

/// Strength-parameterised Hadamard; `rho = 0.5` gives [`strategy_h`].
pub fn strategy_f(rho: f64) -> Result<Unitary2> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::domain(format!("strength {rho} outside [0, 1]")));
    }
    let a = rho.sqrt();
    let b = (1.0 - rho).sqrt();
    Ok(Unitary2::from_real(a, b, b, -a))
}

/// Entangling operator `J(gamma) = cos(gamma/2) I⊗I + i sin(gamma/2) σx⊗σx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entangler {
    gamma: f64,
}

impl Entangler {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(0.0..=FRAC_PI_2).contains(&gamma) {
            return Err(Error::domain(format!("gamma {gamma} outside [0, pi/2]")));
        }
        Ok(Entangler { gamma })
    }

    pub fn maximal() -> Self {
        Entangler { gamma: FRAC_PI_2 }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Applies `cos(gamma/2) v + sign * i sin(gamma/2) (σx⊗σx) v`.
    /// `sign = 1` is `J`, `sign = -1` is `J^dagger`.
    fn apply(&self, v: &[Complex64; 4], sign: f64) -> [Complex64; 4] {
        let half = self.gamma / 2.0;
        let cos = re(half.cos());
        let isin = Complex64::new(0.0, sign * half.sin());
        // σx⊗σx reverses the basis order.
        std::array::from_fn(|b| cos * v[b] + isin * v[3 - b])
    }
}

impl Default for Entangler {
    fn default() -> Self {
        Self::maximal()
    }
}

/// Pure state of the two-qubit game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState {
    pub amplitudes: [Complex64; 4],
}

impl TwoQubitState {
    pub fn ground() -> Self {
        TwoQubitState { amplitudes: [ONE, ZERO, ZERO, ZERO] }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

fn apply_product(y1: &Unitary2, y2: &Unitary2, v: &[Complex64; 4]) -> [Complex64; 4] {
    let (a, b) = (y1.entries(), y2.entries());
    std::array::from_fn(|row| {
        let (r1, r2) = (row >> 1, row & 1);
        let mut acc = ZERO;
        for (col, amp) in v.iter().enumerate() {
            acc += a[r1][col >> 1] * b[r2][col & 1] * amp;
        }
        acc
    })
}

/// Final state `J^dagger (Y1 ⊗ Y2) J |00>`.
pub fn final_state(y1: &Unitary2, y2: &Unitary2, entangler: Entangler) -> Result<TwoQubitState> {
    for (name, y) in [("first", y1), ("second", y2)] {
        let dev = y.unitarity_deviation();
        if !(dev < UNITARY_TOL) {
            return Err(Error::domain(format!("{name} strategy is not unitary ({dev:e})")));
        }
    }
    let psi0 = entangler.apply(&TwoQubitState::ground().amplitudes, 1.0);
    let moved = apply_product(y1, y2, &psi0);
    Ok(TwoQubitState { amplitudes: entangler.apply(&moved, -1.0) })
}

/// Measurement probabilities `|<ψ|b>|^2` over the four basis states.
pub fn outcome_probabilities(state: &TwoQubitState) -> [f64; 4] {
    state.amplitudes.map(|a| a.norm_sqr())
}

/// Outcome probabilities when the mover plays `H` against `H` (mutual link) or `D`.
pub fn closed_form_case1(opponent_defects: bool) -> [f64; 4] {
    if opponent_defects {
        [0.5, 0.5, 0.0, 0.0]
    } else {
        [0.25; 4]
    }
}

/// Outcome probabilities when the mover plays `F(rho1)` against `F(rho2)` or `D`.
///
/// `rho1` is the mover's strength toward the opponent and `rho2` the opponent's
/// strength back. The defect branch ignores `rho2`.
pub fn closed_form_case2(rho1: f64, rho2: f64, opponent_defects: bool) -> Result<[f64; 4]> {
    for rho in [rho1, rho2] {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::domain(format!("strength {rho} outside [0, 1]")));
        }
    }
    Ok(if opponent_defects {
        [1.0 - rho1, rho1, 0.0, 0.0]
    } else {
        [
            rho1 * rho2,
            rho2 * (1.0 - rho1),
            rho1 * (1.0 - rho2),
            (1.0 - rho1) * (1.0 - rho2),
        ]
    })
}
