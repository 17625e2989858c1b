use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::error::{Error, Result};
use crate::model::{BranchId, BranchQuota, CadetId, Contract, Cost};
use crate::policies::{BradsoPolicy, NativeOrder};

/// Every increased-cost contract in `pool` at `branch` comes with its base-cost version.
pub fn is_viable(branch: BranchId, pool: &BTreeSet<Contract>) -> bool {
    pool.iter()
        .filter(|x| x.branch == branch && x.cost == Cost::Increased)
        .all(|x| pool.contains(&Contract::new(x.cadet, branch, Cost::Base)))
}

/// The two-step BRADSO choice rule: `q⁰` positions by the native order, then
/// `q⁺` positions by the BRADSO policy among the cadets left over.
pub fn choice_rule_br(
    branch: BranchId,
    quota: BranchQuota,
    native: &NativeOrder,
    policy: &BradsoPolicy,
    pool: &BTreeSet<Contract>,
) -> Result<BTreeSet<Contract>> {
    if let Some(x) = pool.iter().find(|x| x.branch != branch) {
        return Err(Error::invariant(
            "pool contracts name the choosing branch",
            format!("contract at branch {} offered to branch {}", x.branch.0, branch.0),
        ));
    }
    if native.branch() != branch || policy.branch() != branch {
        return Err(Error::invariant(
            "orders belong to the choosing branch",
            format!("branch {} given orders for another branch", branch.0),
        ));
    }
    if let Some(x) = pool
        .iter()
        .find(|x| x.cost == Cost::Increased && !pool.contains(&Contract::new(x.cadet, branch, Cost::Base)))
    {
        return Err(Error::NonViablePool {
            branch: branch.0.to_string(),
            cadet: x.cadet.0.to_string(),
        });
    }
    let mut p = BranchPool::new(branch);
    for x in pool {
        p.insert(native, policy, x.cadet, x.cost);
    }
    Ok(p.choose(quota).into_iter().collect())
}

/// A branch's cumulative pool, indexed for the choice rule.
///
/// Assumes viability: each cadet in the pool has a base-cost contract, so the
/// base map lists exactly the distinct cadets in native order.
#[derive(Clone, Debug)]
pub(crate) struct BranchPool {
    branch: BranchId,
    base: BTreeMap<usize, CadetId>,
    by_policy: BTreeMap<usize, (CadetId, Cost)>,
}

impl BranchPool {
    pub(crate) fn new(branch: BranchId) -> Self {
        BranchPool {
            branch,
            base: BTreeMap::new(),
            by_policy: BTreeMap::new(),
        }
    }

    pub(crate) fn contains(&self, native: &NativeOrder, cadet: CadetId) -> bool {
        self.base.contains_key(&native.position((cadet, Cost::Base)))
    }

    pub(crate) fn insert(&mut self, native: &NativeOrder, policy: &BradsoPolicy, cadet: CadetId, cost: Cost) {
        if cost == Cost::Base {
            self.base.insert(native.position((cadet, Cost::Base)), cadet);
        }
        self.by_policy.insert(policy.position((cadet, cost)), (cadet, cost));
    }

    pub(crate) fn choose(&self, quota: BranchQuota) -> Vec<Contract> {
        let b = self.branch;
        let q0 = quota.base_only();
        let qp = quota.bradso_cap();
        let base = |c: CadetId| Contract::new(c, b, Cost::Base);
        if self.base.len() < q0 {
            return self.base.values().map(|&c| base(c)).collect();
        }
        let mut chosen: Vec<Contract> = self.base.values().take(q0).map(|&c| base(c)).collect();
        if self.base.len() - q0 < qp {
            chosen.extend(self.base.values().skip(q0).map(|&c| base(c)));
            return chosen;
        }
        let mut taken: HashSet<CadetId> = chosen.iter().map(|x| x.cadet).collect();
        let mut left = qp;
        for &(c, t) in self.by_policy.values() {
            if left == 0 {
                break;
            }
            if taken.insert(c) {
                chosen.push(Contract::new(c, b, t));
                left -= 1;
            }
        }
        chosen
    }
}
