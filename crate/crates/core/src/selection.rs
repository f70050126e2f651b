//! Choosing which SUs the DU cooperates with.

use std::fmt;

use crate::energy::{channel_gain, frequency_limited_capacity, power_limited_capacity, DeviceId};
use crate::error::{Constraint, Error, Result};
use crate::game::{coefficient_faults, CoefficientFault, StrategyProfile, ZERO_ALLOCATION};
use crate::scenario::{ActiveSet, Scenario};
use crate::solver::{solve, EquilibriumResult, InitialPrices, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum RemovalReason {
    /// Unable to trade under the model before any game is played.
    Prefiltered(CoefficientFault),
    /// Bought less than [`ZERO_ALLOCATION`] at the round's equilibrium.
    ZeroAllocation,
    /// Highest price while the DU offloaded more than its workload.
    HighestPrice,
}

impl RemovalReason {
    pub fn name(&self) -> &'static str {
        match self {
            RemovalReason::Prefiltered(_) => "pre-filtered",
            RemovalReason::ZeroAllocation => "zero-allocation",
            RemovalReason::HighestPrice => "highest-price",
        }
    }
}

impl fmt::Display for RemovalReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Removal {
    /// Canonical index into `Scenario::sus`.
    pub index: usize,
    pub id: DeviceId,
    pub reason: RemovalReason,
    /// Equilibrium price and allocation at removal; absent when pre-filtered.
    pub price: Option<f64>,
    pub alloc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRound {
    /// 1-based.
    pub round: usize,
    pub candidates: ActiveSet,
    pub equilibrium: EquilibriumResult,
    pub removed: Vec<Removal>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOutcome {
    pub active_set: ActiveSet,
    pub prefiltered: Vec<Removal>,
    pub rounds: Vec<SelectionRound>,
    /// Equilibrium on `active_set`; `None` when every SU was removed.
    pub final_equilibrium: Option<EquilibriumResult>,
}

impl SelectionOutcome {
    pub fn removals(&self) -> impl Iterator<Item = &Removal> {
        self.prefiltered
            .iter()
            .chain(self.rounds.iter().flat_map(|r| r.removed.iter()))
    }
}

/// Repeatedly solves the game, dropping SUs that sell nothing and, while the
/// DU offloads more than its workload, the most expensive SU.
///
/// Stops after the first round that removes nobody, or when no SU is left.
/// Price ties for removal go to the lowest index.
pub fn select_sus(
    scenario: &Scenario,
    candidates: &ActiveSet,
    config: &SolverConfig,
) -> Result<SelectionOutcome> {
    scenario.validate()?;
    config.validate()?;
    let faults = coefficient_faults(scenario, candidates)?;
    let prefiltered: Vec<Removal> = faults
        .into_iter()
        .map(|(index, fault)| Removal {
            index,
            id: scenario.sus[index].id,
            reason: RemovalReason::Prefiltered(fault),
            price: None,
            alloc: None,
        })
        .collect();
    let dropped: Vec<usize> = prefiltered.iter().map(|r| r.index).collect();
    let mut outcome = SelectionOutcome {
        active_set: candidates.without(&dropped),
        prefiltered,
        rounds: Vec::new(),
        final_equilibrium: None,
    };

    let mut round_config = config.clone();
    while !outcome.active_set.is_empty() {
        let round = outcome.rounds.len() + 1;
        let active = outcome.active_set.clone();
        let eq = match solve(scenario, &active, &round_config) {
            Ok(eq) => eq,
            Err(source) => {
                return Err(Error::SelectionAborted {
                    round,
                    source: Box::new(source),
                    log: Box::new(outcome),
                })
            }
        };
        let removed = removals(scenario, &active, &eq, scenario.du.workload);
        let indices: Vec<usize> = removed.iter().map(|r| r.index).collect();
        let done = removed.is_empty();
        outcome.active_set = active.without(&indices);
        if done {
            outcome.final_equilibrium = Some(eq.clone());
        } else {
            let warm = active
                .iter()
                .zip(eq.prices())
                .filter(|(i, _)| !indices.contains(i))
                .map(|(_, q)| *q)
                .collect();
            round_config.initial_prices = InitialPrices::Fixed(warm);
        }
        outcome.rounds.push(SelectionRound {
            round,
            candidates: active,
            equilibrium: eq,
            removed,
        });
        if done {
            break;
        }
    }
    Ok(outcome)
}

fn removals(
    scenario: &Scenario,
    active: &ActiveSet,
    eq: &EquilibriumResult,
    workload: f64,
) -> Vec<Removal> {
    let entry = |slot: usize, reason| {
        let index = active.indices()[slot];
        Removal {
            index,
            id: scenario.sus[index].id,
            reason,
            price: Some(eq.prices()[slot]),
            alloc: Some(eq.alloc()[slot]),
        }
    };
    let mut out: Vec<Removal> = (0..active.len())
        .filter(|&slot| eq.alloc()[slot] < ZERO_ALLOCATION)
        .map(|slot| entry(slot, RemovalReason::ZeroAllocation))
        .collect();
    if eq.final_profile.total_alloc() > workload {
        let mut pick: Option<usize> = None;
        for slot in (0..active.len()).filter(|&s| eq.alloc()[s] >= ZERO_ALLOCATION) {
            let q = eq.prices()[slot];
            match pick {
                Some(best) => {
                    let top = eq.prices()[best];
                    if q > top + 1e-12 * top.max(1.0) {
                        pick = Some(slot);
                    }
                }
                None => pick = Some(slot),
            }
        }
        if let Some(slot) = pick {
            out.push(entry(slot, RemovalReason::HighestPrice));
        }
    }
    out
}

/// One constraint evaluated for one device.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintCheck {
    pub constraint: Constraint,
    pub subject: DeviceId,
    /// Non-negative when satisfied. Units follow the constrained quantity:
    /// Mb for allocation, power and CPU limits; J/Mb for prices.
    pub slack: f64,
}

impl ConstraintCheck {
    pub fn satisfied(&self) -> bool {
        self.slack >= 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConstraintAudit {
    pub checks: Vec<ConstraintCheck>,
}

impl ConstraintAudit {
    pub fn all_satisfied(&self) -> bool {
        self.checks.iter().all(ConstraintCheck::satisfied)
    }

    pub fn violations(&self) -> impl Iterator<Item = &ConstraintCheck> {
        self.checks.iter().filter(|c| !c.satisfied())
    }

    pub fn find(&self, constraint: Constraint, subject: DeviceId) -> Option<&ConstraintCheck> {
        self.checks
            .iter()
            .find(|c| c.constraint == constraint && c.subject == subject)
    }
}

/// Audit of the outcome's final equilibrium.
pub fn feasibility_report(
    outcome: &SelectionOutcome,
    scenario: &Scenario,
) -> Result<ConstraintAudit> {
    let eq = outcome
        .final_equilibrium
        .as_ref()
        .ok_or_else(|| Error::invalid("outcome", "no final equilibrium to audit"))?;
    audit_profile(&eq.final_profile, scenario, &outcome.active_set)
}

/// Slack of every allocation, offload, transmit-power, price and CPU constraint.
///
/// Transmit power is expressed as the power-limited capacity minus the
/// allocation, so a load sitting exactly on the cap has zero slack.
pub fn audit_profile(
    profile: &StrategyProfile,
    scenario: &Scenario,
    active: &ActiveSet,
) -> Result<ConstraintAudit> {
    active.check_within(scenario)?;
    if profile.alloc.len() != active.len() || profile.prices.len() != active.len() {
        return Err(Error::invalid(
            "profile",
            "length does not match the active set",
        ));
    }
    let sys = &scenario.system;
    let l0 = scenario.du.workload;
    let mut checks = Vec::new();
    for (slot, index) in active.iter().enumerate() {
        let su = &scenario.sus[index];
        let l = profile.alloc[slot];
        let gain = channel_gain(&scenario.du.position, &su.position, sys)?;
        checks.push(ConstraintCheck {
            constraint: Constraint::AllocationRange,
            subject: su.id,
            slack: l.min(l0 - l),
        });
        checks.push(ConstraintCheck {
            constraint: Constraint::TxPower,
            subject: su.id,
            slack: power_limited_capacity(gain, sys, active.len()) - l,
        });
        checks.push(ConstraintCheck {
            constraint: Constraint::PriceNonNegative,
            subject: su.id,
            slack: profile.prices[slot],
        });
        checks.push(ConstraintCheck {
            constraint: Constraint::CpuFrequency,
            subject: su.id,
            slack: frequency_limited_capacity(su, sys.slot_length) - l,
        });
    }
    checks.push(ConstraintCheck {
        constraint: Constraint::TotalOffload,
        subject: DeviceId::Du,
        slack: l0 - profile.total_alloc(),
    });
    Ok(ConstraintAudit { checks })
}
