//! Payoff matrices and expected payoffs of the pairwise games.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::PlayerGraph;
use crate::quantum::{self, Entangler};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PayoffKind {
    /// Prisoner's-dilemma ordering `T > R > P > S`.
    Pd,
    /// Snowdrift ordering `T > R > S > P`.
    Sd,
}

impl fmt::Display for PayoffKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PayoffKind::Pd => "PD",
            PayoffKind::Sd => "SD",
        })
    }
}

/// Which strategy pair the players use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StrategyCase {
    /// `{H, D}`.
    Case1,
    /// `{F(rho), D}`, with `F` parameterised by the link strength.
    Case2,
}

impl StrategyCase {
    pub fn number(self) -> u8 {
        match self {
            StrategyCase::Case1 => 1,
            StrategyCase::Case2 => 2,
        }
    }
}

/// Payoff matrix family. The snowdrift cost is `c = beta * omega`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffMatrixSpec {
    kind: PayoffKind,
    beta: f64,
}

impl PayoffMatrixSpec {
    pub fn pd() -> Self {
        PayoffMatrixSpec { kind: PayoffKind::Pd, beta: 0.0 }
    }

    /// Snowdrift matrix; `beta` must lie in `(0, 0.5]`.
    pub fn sd(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 0.5) {
            return Err(Error::domain(format!("beta must lie in (0, 0.5], got {beta}")));
        }
        Ok(PayoffMatrixSpec { kind: PayoffKind::Sd, beta })
    }

    /// `beta` is validated only for `Sd`.
    pub fn new(kind: PayoffKind, beta: f64) -> Result<Self> {
        match kind {
            PayoffKind::Pd => Ok(Self::pd()),
            PayoffKind::Sd => Self::sd(beta),
        }
    }

    pub fn kind(&self) -> PayoffKind {
        self.kind
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Matrix entries for the row player.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffEntries {
    pub r: f64,
    pub s: f64,
    pub t: f64,
    pub p: f64,
}

impl PayoffEntries {
    /// Expected payoff for outcome probabilities ordered `|00>, |01>, |10>, |11>`.
    pub fn expected(&self, probs: &[f64; 4]) -> f64 {
        self.r * probs[0] + self.s * probs[1] + self.t * probs[2] + self.p * probs[3]
    }
}

pub fn payoff_entries(spec: &PayoffMatrixSpec, omega: f64) -> PayoffEntries {
    match spec.kind {
        PayoffKind::Pd => PayoffEntries {
            r: 0.6 * omega,
            s: 0.01 * omega,
            t: omega,
            p: 0.2 * omega,
        },
        PayoffKind::Sd => {
            let cost = spec.beta * omega;
            PayoffEntries {
                r: omega - cost / 2.0,
                s: omega - cost,
                t: omega,
                p: 0.01 * omega,
            }
        }
    }
}

/// Everything needed to price one directed game `i` vs `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPayoffContext {
    case: StrategyCase,
    rho_ij: f64,
    rho_ji: f64,
    omega: f64,
}

impl PairPayoffContext {
    pub fn new(case: StrategyCase, rho_ij: f64, rho_ji: f64, omega: f64) -> Result<Self> {
        for rho in [rho_ij, rho_ji] {
            if !(0.0..=1.0).contains(&rho) {
                return Err(Error::domain(format!("strength {rho} outside [0, 1]")));
            }
        }
        if !(omega >= 0.0) {
            return Err(Error::domain(format!("omega must be nonnegative, got {omega}")));
        }
        Ok(PairPayoffContext { case, rho_ij, rho_ji, omega })
    }

    /// The opponent defects exactly when it holds no link back to the mover.
    pub fn opponent_defects(&self) -> bool {
        self.rho_ji == 0.0
    }

    fn probabilities(&self) -> [f64; 4] {
        let defects = self.opponent_defects();
        match self.case {
            StrategyCase::Case1 => quantum::closed_form_case1(defects),
            // Strengths are range-checked in `new`.
            StrategyCase::Case2 => quantum::closed_form_case2(self.rho_ij, self.rho_ji, defects)
                .unwrap_or([f64::NAN; 4]),
        }
    }
}

/// `omega(i, j) = rho(i, j) * in_degree(j) / d(i, j)`.
pub fn omega(i: usize, j: usize, graph: &PlayerGraph) -> Result<f64> {
    if !graph.contains(i, j) {
        return Err(Error::domain(format!("player {j} is not a neighbour of player {i}")));
    }
    Ok(omega_with_degree(i, j, graph, graph.in_degree(j)))
}

fn omega_with_degree(i: usize, j: usize, graph: &PlayerGraph, in_degree: usize) -> f64 {
    graph.strength(i, j) * in_degree as f64 / graph.distance(i, j)
}

/// Expected payoff of one pair using the closed-form outcome probabilities.
pub fn pair_payoff(ctx: &PairPayoffContext, spec: &PayoffMatrixSpec) -> f64 {
    payoff_entries(spec, ctx.omega).expected(&ctx.probabilities())
}

/// Expected payoff of one pair computed by running the full two-qubit engine.
pub fn pair_payoff_engine(ctx: &PairPayoffContext, spec: &PayoffMatrixSpec) -> Result<f64> {
    let mover = match ctx.case {
        StrategyCase::Case1 => quantum::strategy_h(),
        StrategyCase::Case2 => quantum::strategy_f(ctx.rho_ij)?,
    };
    let opponent = if ctx.opponent_defects() {
        quantum::strategy_d()
    } else {
        match ctx.case {
            StrategyCase::Case1 => quantum::strategy_h(),
            StrategyCase::Case2 => quantum::strategy_f(ctx.rho_ji)?,
        }
    };
    let state = quantum::final_state(&mover, &opponent, Entangler::maximal())?;
    Ok(payoff_entries(spec, ctx.omega).expected(&quantum::outcome_probabilities(&state)))
}

pub(crate) fn player_payoff_with_degrees(
    i: usize,
    graph: &PlayerGraph,
    in_degrees: &[usize],
    spec: &PayoffMatrixSpec,
    case: StrategyCase,
) -> f64 {
    graph
        .neighbors(i)
        .iter()
        .map(|&j| {
            let ctx = PairPayoffContext {
                case,
                rho_ij: graph.strength(i, j),
                rho_ji: graph.strength(j, i),
                omega: omega_with_degree(i, j, graph, in_degrees[j]),
            };
            pair_payoff(&ctx, spec)
        })
        .sum()
}

/// Total expected payoff of player `i` over its current neighbours.
pub fn player_payoff(
    i: usize,
    graph: &PlayerGraph,
    spec: &PayoffMatrixSpec,
    case: StrategyCase,
) -> Result<f64> {
    if graph.neighbors(i).is_empty() {
        return Err(Error::domain(format!("player {i} has no neighbours")));
    }
    Ok(player_payoff_with_degrees(i, graph, &graph.in_degrees(), spec, case))
}
