use super::{describe, Axiom, AxiomReport, Witness};
use crate::error::{Error, Result};
use crate::model::{Allocation, Assignment, Contract, ContractPreference, Cost, Economy};

fn assignments(econ: &Economy, prefs: &[ContractPreference], alloc: &Allocation) -> Result<Vec<Assignment>> {
    if prefs.len() != econ.num_cadets() {
        return Err(Error::invariant(
            "one preference per cadet",
            format!("{} preferences for {} cadets", prefs.len(), econ.num_cadets()),
        ));
    }
    for x in alloc.contracts() {
        if !econ.contains_cadet(x.cadet) {
            return Err(Error::UnknownId {
                kind: "cadet",
                id: x.cadet.0.to_string(),
            });
        }
        if !econ.contains_branch(x.branch) {
            return Err(Error::UnknownId {
                kind: "branch",
                id: x.branch.0.to_string(),
            });
        }
    }
    Ok(alloc.assignments(econ.num_cadets()))
}

fn contract_of(c: crate::model::CadetId, a: Assignment) -> Option<Contract> {
    match a {
        Assignment::Matched(b, t) => Some(Contract::new(c, b, t)),
        Assignment::Unmatched => None,
    }
}

/// No cadet is assigned something it ranks below remaining unmatched.
pub fn check_individual_rationality(
    econ: &Economy,
    prefs: &[ContractPreference],
    alloc: &Allocation,
) -> Result<AxiomReport> {
    let xs = assignments(econ, prefs, alloc)?;
    let witnesses = econ
        .cadets()
        .filter(|i| prefs[i.index()].prefers(Assignment::Unmatched, xs[i.index()]))
        .map(|i| Witness {
            cadets: vec![i],
            branch: xs[i.index()].branch(),
            contracts: contract_of(i, xs[i.index()]).into_iter().collect(),
            explanation: format!(
                "{} prefers unmatched to {}",
                econ.cadet_name(i),
                describe(econ, xs[i.index()])
            ),
        })
        .collect();
    Ok(AxiomReport::new(Axiom::IndividualRationality, witnesses))
}

/// No branch leaves a position empty while an unmatched cadet wants it at base cost.
pub fn check_non_wastefulness(econ: &Economy, prefs: &[ContractPreference], alloc: &Allocation) -> Result<AxiomReport> {
    let xs = assignments(econ, prefs, alloc)?;
    let mut witnesses = Vec::new();
    for b in econ.branch_ids() {
        let used = alloc.count_at(b);
        if used >= econ.quota(b).total() {
            continue;
        }
        for i in econ.cadets() {
            let slot = Assignment::Matched(b, Cost::Base);
            if xs[i.index()] == Assignment::Unmatched && prefs[i.index()].prefers(slot, Assignment::Unmatched) {
                witnesses.push(Witness {
                    cadets: vec![i],
                    branch: Some(b),
                    contracts: vec![],
                    explanation: format!(
                        "{} is unmatched and wants ({}, BASE); {} of {} positions used",
                        econ.cadet_name(i),
                        econ.branch_name(b),
                        used,
                        econ.quota(b).total()
                    ),
                });
            }
        }
    }
    Ok(AxiomReport::new(Axiom::NonWastefulness, witnesses))
}

/// Whenever `i` envies `j`'s assignment at `b`, `j` has higher priority at `b`.
///
/// Witness cadets are `[i, j]`: the envious cadet first.
pub fn check_priority_reversals(econ: &Economy, prefs: &[ContractPreference], alloc: &Allocation) -> Result<AxiomReport> {
    let xs = assignments(econ, prefs, alloc)?;
    let mut witnesses = Vec::new();
    for x in alloc.contracts() {
        let (j, b) = (x.cadet, x.branch);
        let pri = econ.priority(b);
        for i in econ.cadets() {
            if i == j || !pri.prefers(i, j) {
                continue;
            }
            if prefs[i.index()].prefers(xs[j.index()], xs[i.index()]) {
                let mut contracts = vec![*x];
                contracts.extend(contract_of(i, xs[i.index()]));
                witnesses.push(Witness {
                    cadets: vec![i, j],
                    branch: Some(b),
                    contracts,
                    explanation: format!(
                        "{} prefers {}'s {} to own {} and has higher priority at {}",
                        econ.cadet_name(i),
                        econ.cadet_name(j),
                        describe(econ, xs[j.index()]),
                        describe(econ, xs[i.index()]),
                        econ.branch_name(b)
                    ),
                });
            }
        }
    }
    Ok(AxiomReport::new(Axiom::NoPriorityReversals, witnesses))
}

/// Both clauses of BRADSO policy enforcement.
///
/// Clause 1: an increased-cost holder `i` at `b` may displace a cadet `j` who
/// wants `(b, t⁰)` only if `(i, t⁺)` is ahead of `(j, t⁰)`. Clause 2: if some `i`
/// wanting `(b, t⁺)` is boosted above a base-cost holder `j`, the cap is full.
/// Witness cadets are `[i, j]` in both clauses.
pub fn check_bradso_enforcement(
    econ: &Economy,
    prefs: &[ContractPreference],
    alloc: &Allocation,
) -> Result<AxiomReport> {
    let xs = assignments(econ, prefs, alloc)?;
    let mut witnesses = Vec::new();
    for b in econ.branch_ids() {
        let policy = econ.policy(b);
        let base_slot = Assignment::Matched(b, Cost::Base);
        let inc_slot = Assignment::Matched(b, Cost::Increased);
        let charged = alloc.increased_at(b);
        let cap = econ.quota(b).bradso_cap();
        for x in alloc.contracts().iter().filter(|x| x.branch == b) {
            match x.cost {
                Cost::Increased => {
                    let i = x.cadet;
                    for j in econ.cadets() {
                        if prefs[j.index()].prefers(base_slot, xs[j.index()]) && !policy.boosts(i, j) {
                            witnesses.push(Witness {
                                cadets: vec![i, j],
                                branch: Some(b),
                                contracts: std::iter::once(*x).chain(contract_of(j, xs[j.index()])).collect(),
                                explanation: format!(
                                    "clause 1: {} holds ({}, BRADSO) while {} wants ({}, BASE) over {} and ({}, BRADSO) is not ahead of ({}, BASE)",
                                    econ.cadet_name(i),
                                    econ.branch_name(b),
                                    econ.cadet_name(j),
                                    econ.branch_name(b),
                                    describe(econ, xs[j.index()]),
                                    econ.cadet_name(i),
                                    econ.cadet_name(j)
                                ),
                            });
                        }
                    }
                }
                Cost::Base => {
                    if charged == cap {
                        continue;
                    }
                    let j = x.cadet;
                    for i in econ.cadets() {
                        if prefs[i.index()].prefers(inc_slot, xs[i.index()]) && policy.boosts(i, j) {
                            witnesses.push(Witness {
                                cadets: vec![i, j],
                                branch: Some(b),
                                contracts: contract_of(i, xs[i.index()]).into_iter().chain(std::iter::once(*x)).collect(),
                                explanation: format!(
                                    "clause 2: {} wants ({}, BRADSO) over {} and is boosted above base-cost holder {}, yet only {} of {} increased-cost positions are used",
                                    econ.cadet_name(i),
                                    econ.branch_name(b),
                                    describe(econ, xs[i.index()]),
                                    econ.cadet_name(j),
                                    charged,
                                    cap
                                ),
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(AxiomReport::new(Axiom::BradsoEnforcement, witnesses))
}
