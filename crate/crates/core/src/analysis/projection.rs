use std::collections::BTreeSet;

use crate::model::{BranchId, ContractPreference, Cost, QuasiStrategy};

/// Read a branch ranking and willingness set off full contract preferences.
///
/// Branches appear in the order of their acceptable base-cost entries; a
/// branch is in the willingness set when its increased-cost entry is acceptable.
pub fn project_truthful(prefs: &[ContractPreference]) -> Vec<QuasiStrategy> {
    prefs.iter().map(project_one).collect()
}

pub(crate) fn project_one(p: &ContractPreference) -> QuasiStrategy {
    let order: Vec<BranchId> = p
        .acceptable()
        .iter()
        .filter(|s| s.1 == Cost::Base)
        .map(|s| s.0)
        .collect();
    let willing: BTreeSet<BranchId> = p
        .acceptable()
        .iter()
        .filter(|s| s.1 == Cost::Increased)
        .map(|s| s.0)
        .collect();
    QuasiStrategy::new(order, willing).expect("acceptable base entries are distinct")
}

#[cfg(test)]
mod tests {
    use super::*;

    const AV: BranchId = BranchId(0);
    const IN: BranchId = BranchId(1);

    #[test]
    fn base_only() {
        let p = ContractPreference::new(vec![(AV, Cost::Base)], vec![]).unwrap();
        let s = project_one(&p);
        assert_eq!(s.branch_order(), &[AV]);
        assert!(s.bradso_set().is_empty());
    }

    #[test]
    fn survey_example() {
        let p = ContractPreference::new(
            vec![(AV, Cost::Base), (IN, Cost::Base), (AV, Cost::Increased)],
            vec![(IN, Cost::Increased)],
        )
        .unwrap();
        let s = project_one(&p);
        assert_eq!(s.branch_order(), &[AV, IN]);
        assert_eq!(s.bradso_set(), &BTreeSet::from([AV]));
    }

    #[test]
    fn example1_i1() {
        let s = project_one(&crate::fixtures::single_branch_pref(true));
        assert_eq!(s.branch_order(), &[BranchId(0)]);
        assert!(s.is_willing(BranchId(0)));
    }
}
