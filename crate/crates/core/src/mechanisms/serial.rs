use crate::model::{Allocation, BranchId, CadetId, Contract, Cost, Economy};

/// Greedy assignment down the OML: each cadet takes its highest-ranked branch
/// that still has a free position. Everyone pays the base cost.
pub fn serial_dictatorship<P: AsRef<[BranchId]>>(econ: &Economy, prefs: &[P]) -> Allocation {
    let mut remaining: Vec<usize> = econ.branches().iter().map(|b| b.quota.total()).collect();
    let mut contracts = Vec::new();
    for cadet in econ.oml().ranking() {
        let Some(order) = prefs.get(cadet.index()) else {
            continue;
        };
        if let Some(&b) = order.as_ref().iter().find(|b| remaining[b.index()] > 0) {
            remaining[b.index()] -= 1;
            contracts.push(Contract::new(CadetId(cadet.0), b, Cost::Base));
        }
    }
    Allocation::new(contracts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::Assignment;

    #[test]
    fn lone_cadet_gets_acceptable_branch() {
        let econ = fixtures::single_branch(&["a"], 1, 0);
        let alloc = serial_dictatorship(&econ, &[vec![BranchId(0)]]);
        assert_eq!(alloc.assignment(CadetId(0)), Assignment::Matched(BranchId(0), Cost::Base));
    }

    #[test]
    fn higher_oml_wins_contested_seat() {
        let econ = fixtures::single_branch(&["a", "b"], 1, 0);
        let alloc = serial_dictatorship(&econ, &[vec![BranchId(0)], vec![BranchId(0)]]);
        assert_eq!(alloc.assignment(CadetId(0)), Assignment::Matched(BranchId(0), Cost::Base));
        assert_eq!(alloc.assignment(CadetId(1)), Assignment::Unmatched);
    }
}
