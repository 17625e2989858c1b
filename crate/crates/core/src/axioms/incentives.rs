use rayon::prelude::*;
use serde::Serialize;

use super::{describe, Axiom, AxiomReport, Witness};
use crate::error::{Error, Result};
use crate::mechanisms::QuasiDirectMechanism;
use crate::model::{Allocation, Assignment, BranchId, CadetId, Contract, Cost, Economy, QuasiStrategy};

fn check_len(econ: &Economy, strategies: &[QuasiStrategy]) -> Result<()> {
    if strategies.len() != econ.num_cadets() {
        return Err(Error::invariant(
            "one strategy per cadet",
            format!("{} strategies for {} cadets", strategies.len(), econ.num_cadets()),
        ));
    }
    Ok(())
}

fn unranked_notes(econ: &Economy, strategies: &[QuasiStrategy]) -> Vec<String> {
    strategies
        .iter()
        .enumerate()
        .filter_map(|(i, s)| {
            let extra = s.unranked_willingness();
            (!extra.is_empty()).then(|| {
                let names: Vec<&str> = extra.iter().map(|b| econ.branch_name(*b)).collect();
                format!(
                    "{} is willing at unranked branches {}; ignored",
                    econ.cadet_name(CadetId(i as u32)),
                    names.join(",")
                )
            })
        })
        .collect()
}

/// Whenever `j` holds `(b, t⁰)` while `i` visibly does worse (pays `t⁺` at `b`,
/// or ranked `b` above what it got), `j` has higher priority at `b`.
///
/// Witness cadets are `[i, j]`.
pub fn check_detectable_priority_reversals(
    econ: &Economy,
    strategies: &[QuasiStrategy],
    alloc: &Allocation,
) -> Result<AxiomReport> {
    check_len(econ, strategies)?;
    let xs = alloc.assignments(econ.num_cadets());
    let mut witnesses = Vec::new();
    for x in alloc.contracts().iter().filter(|x| x.cost == Cost::Base) {
        let (j, b) = (x.cadet, x.branch);
        if !econ.contains_branch(b) {
            return Err(Error::UnknownId {
                kind: "branch",
                id: b.0.to_string(),
            });
        }
        let pri = econ.priority(b);
        for i in econ.cadets() {
            if i == j || !pri.prefers(i, j) {
                continue;
            }
            let xi = xs[i.index()];
            let visible = xi == Assignment::Matched(b, Cost::Increased)
                || strategies[i.index()].prefers_branch(b, xi.branch());
            if visible {
                let mut contracts = vec![*x];
                if let Assignment::Matched(bi, ti) = xi {
                    contracts.push(Contract::new(i, bi, ti));
                }
                witnesses.push(Witness {
                    cadets: vec![i, j],
                    branch: Some(b),
                    contracts,
                    explanation: format!(
                        "{} gets {} while lower-priority {} gets ({}, BASE)",
                        econ.cadet_name(i),
                        describe(econ, xi),
                        econ.cadet_name(j),
                        econ.branch_name(b)
                    ),
                });
            }
        }
    }
    Ok(AxiomReport::new(Axiom::NoDetectablePriorityReversals, witnesses).with_notes(unranked_notes(econ, strategies)))
}

/// Outcome of re-running a mechanism after one cadet withdraws willingness at one branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DropRun {
    pub cadet: CadetId,
    pub branch: BranchId,
    pub before: Assignment,
    pub after: Assignment,
}

/// For every cadet assigned `(b, cost)` with `b` in its willingness set, re-run
/// with `b` removed from that set. Runs are parallel; results follow cadet order.
pub fn drop_willingness_runs(
    mechanism: &dyn QuasiDirectMechanism,
    econ: &Economy,
    strategies: &[QuasiStrategy],
    alloc: &Allocation,
    cost: Cost,
) -> Result<Vec<DropRun>> {
    check_len(econ, strategies)?;
    let targets: Vec<(CadetId, BranchId)> = alloc
        .contracts()
        .iter()
        .filter(|x| x.cost == cost && strategies[x.cadet.index()].is_willing(x.branch))
        .map(|x| (x.cadet, x.branch))
        .collect();
    targets
        .par_iter()
        .map(|&(i, b)| {
            let mut alt = strategies.to_vec();
            alt[i.index()] = strategies[i.index()].without_willingness(b);
            let after = mechanism.run(econ, &alt)?.assignment(i);
            Ok(DropRun {
                cadet: i,
                branch: b,
                before: Assignment::Matched(b, cost),
                after,
            })
        })
        .collect()
}

fn drop_witness(econ: &Economy, r: &DropRun, what: &str) -> Witness {
    let mut contracts = Vec::new();
    if let Assignment::Matched(b, t) = r.before {
        contracts.push(Contract::new(r.cadet, b, t));
    }
    if let Assignment::Matched(b, t) = r.after {
        contracts.push(Contract::new(r.cadet, b, t));
    }
    Witness {
        cadets: vec![r.cadet],
        branch: Some(r.branch),
        contracts,
        explanation: format!(
            "{} gets {}; without willingness at {} the cadet gets {} ({what})",
            econ.cadet_name(r.cadet),
            describe(econ, r.before),
            econ.branch_name(r.branch),
            describe(econ, r.after)
        ),
    }
}

/// Nobody charged `t⁺` at `b` would get `(b, t⁰)` by withdrawing willingness at `b`.
pub fn check_bradso_ic(
    mechanism: &dyn QuasiDirectMechanism,
    econ: &Economy,
    strategies: &[QuasiStrategy],
) -> Result<AxiomReport> {
    let alloc = mechanism.run(econ, strategies)?;
    let runs = drop_willingness_runs(mechanism, econ, strategies, &alloc, Cost::Increased)?;
    let witnesses = runs
        .iter()
        .filter(|r| r.after == Assignment::Matched(r.branch, Cost::Base))
        .map(|r| drop_witness(econ, r, "charged only for declaring willingness"))
        .collect();
    Ok(AxiomReport::new(Axiom::BradsoIc, witnesses).with_notes(unranked_notes(econ, strategies)))
}

/// Nobody holding `(b, t⁰)` loses it by withdrawing willingness at `b`.
pub fn check_strategic_bradso(
    mechanism: &dyn QuasiDirectMechanism,
    econ: &Economy,
    strategies: &[QuasiStrategy],
) -> Result<AxiomReport> {
    let alloc = mechanism.run(econ, strategies)?;
    let runs = drop_willingness_runs(mechanism, econ, strategies, &alloc, Cost::Base)?;
    let witnesses = runs
        .iter()
        .filter(|r| r.after != r.before)
        .map(|r| drop_witness(econ, r, "willingness secured the base-cost seat"))
        .collect();
    Ok(AxiomReport::new(Axiom::StrategicBradso, witnesses).with_notes(unranked_notes(econ, strategies)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mechanisms::{Usma2006, Usma2020};

    fn id(econ: &Economy, n: &str) -> CadetId {
        econ.cadet_id(n).unwrap()
    }

    #[test]
    fn single_cadet_has_no_detectable_reversal() {
        let econ = fixtures::single_branch(&["a"], 1, 1);
        let s = vec![fixtures::single_branch_strategy(true)];
        let alloc = Allocation::new([Contract::new(CadetId(0), BranchId(0), Cost::Base)]);
        assert!(check_detectable_priority_reversals(&econ, &s, &alloc).unwrap().holds());
    }

    #[test]
    fn charged_higher_priority_cadet_is_detectable() {
        let econ = fixtures::single_branch(&["i", "j"], 1, 1);
        let s = vec![fixtures::single_branch_strategy(true); 2];
        let alloc = Allocation::new([
            Contract::new(CadetId(0), BranchId(0), Cost::Increased),
            Contract::new(CadetId(1), BranchId(0), Cost::Base),
        ]);
        let r = check_detectable_priority_reversals(&econ, &s, &alloc).unwrap();
        assert_eq!(r.witnesses.len(), 1);
        assert_eq!(r.witnesses[0].cadets, vec![CadetId(0), CadetId(1)]);
    }

    #[test]
    fn i5_deviation_from_scenario1_equilibrium() {
        let econ = fixtures::example1();
        let s = fixtures::single_branch_profile(&econ, &["i1", "i5", "j1"]);
        let (alloc, _) = crate::mechanisms::usma2020(&econ, &s).unwrap();
        let r = check_detectable_priority_reversals(&econ, &s, &alloc).unwrap();
        assert!(r.first_cadets().contains(&id(&econ, "i5")));
    }

    #[test]
    fn nobody_charged_means_ic_holds() {
        let econ = fixtures::example1();
        let s = fixtures::single_branch_profile(&econ, &[]);
        assert!(check_bradso_ic(&Usma2020, &econ, &s).unwrap().holds());
        assert!(check_strategic_bradso(&Usma2020, &econ, &s).unwrap().holds());
    }

    #[test]
    fn scenario1_truthful_ic_failure_for_i3() {
        let econ = fixtures::example1();
        let s = fixtures::single_branch_profile(&econ, &["i1", "i3", "i5", "j1"]);
        let r = check_bradso_ic(&Usma2020, &econ, &s).unwrap();
        assert_eq!(r.first_cadets(), vec![id(&econ, "i3")]);
        let w = &r.witnesses[0];
        assert_eq!(w.contracts[0].cost, Cost::Increased);
        assert_eq!(w.contracts[1].cost, Cost::Base);
    }

    #[test]
    fn scenario1_truthful_i5_keeps_seat_after_dropping() {
        let econ = fixtures::example1();
        let s = fixtures::single_branch_profile(&econ, &["i1", "i3", "i5", "j1"]);
        assert!(check_strategic_bradso(&Usma2020, &econ, &s).unwrap().holds());
    }

    #[test]
    fn scenario2_equilibrium_i4_needs_willingness() {
        let econ = fixtures::example1();
        let s = fixtures::single_branch_profile(&econ, &["i1", "i3", "i4", "i5", "i6", "j1", "j2"]);
        let r = check_strategic_bradso(&Usma2020, &econ, &s).unwrap();
        assert!(r.first_cadets().contains(&id(&econ, "i4")));
    }

    #[test]
    fn usma2006_uncontested_volunteer_fails_ic() {
        let econ = fixtures::single_branch(&["i", "j"], 1, 1);
        let s = vec![fixtures::single_branch_strategy(false), fixtures::single_branch_strategy(true)];
        let r = check_bradso_ic(&Usma2006, &econ, &s).unwrap();
        assert_eq!(r.first_cadets(), vec![CadetId(1)]);
    }

    #[test]
    fn unranked_willingness_is_noted() {
        let econ = fixtures::single_branch(&["a"], 1, 1);
        let s = vec![QuasiStrategy::new(vec![], [BranchId(0)].into()).unwrap()];
        let r = check_bradso_ic(&Usma2020, &econ, &s).unwrap();
        assert!(r.holds());
        assert_eq!(r.notes.len(), 1);
    }
}
