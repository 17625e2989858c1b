use super::cumulative::check_profile;
use crate::error::{Error, Result};
use crate::model::{Allocation, CadetId, Contract, ContractPreference, Cost, Economy};

/// The single-branch direct mechanism.
///
/// The top `q⁰` cadets are seated at base cost, the next `q⁺` tentatively so.
/// Those tentative seats are then released one at a time, lowest priority
/// first, for as long as enough willing cadets are boosted above the next
/// tentative holder; each released seat goes to a willing cadet at the
/// increased cost.
///
/// Cadets who find no position at this branch acceptable are left out entirely.
pub fn phi_br(econ: &Economy, prefs: &[ContractPreference]) -> Result<Allocation> {
    let b = econ.single_branch().map_err(|_| Error::Regime {
        mechanism: "phi-br",
        detail: format!("needs exactly one branch, economy has {}", econ.num_branches()),
    })?;
    check_profile(econ, prefs, "phi-br")?;
    let q = econ.quota(b);
    let policy = econ.policy(b);
    let takes_base = |c: CadetId| prefs[c.index()].is_acceptable((b, Cost::Base));
    let takes_increased = |c: CadetId| prefs[c.index()].is_acceptable((b, Cost::Increased));

    let pool: Vec<CadetId> = econ.priority(b).ranking().iter().copied().filter(|&c| takes_base(c)).collect();
    let n0 = q.base_only().min(pool.len());
    let (i0, rest) = pool.split_at(n0);
    let k = q.bradso_cap().min(rest.len());
    let (i1, outside) = rest.split_at(k);
    // label[ℓ - 1] is i^ℓ: lowest priority in I¹ first.
    let label: Vec<CadetId> = i1.iter().rev().copied().collect();

    let mut j: Vec<CadetId> = outside.iter().copied().filter(|&c| takes_increased(c)).collect();
    let boosted = |j: &[CadetId], target: CadetId| j.iter().filter(|&&c| policy.boosts(c, target)).count();

    let n = if k == 0 || boosted(&j, label[0]) == 0 {
        0
    } else {
        let mut l = 1;
        loop {
            let il = label[l - 1];
            if takes_increased(il) {
                j.push(il);
            }
            if l == k || boosted(&j, label[l]) < l + 1 {
                break l;
            }
            l += 1;
        }
    };

    if j.len() < n {
        return Err(Error::invariant(
            "enough willing cadets for the released seats",
            format!("{} released seats, {} willing cadets", n, j.len()),
        ));
    }
    let prio = econ.priority(b);
    j.sort_by_key(|c| prio.rank(*c));
    let mut contracts: Vec<Contract> = i0.iter().map(|&c| Contract::new(c, b, Cost::Base)).collect();
    contracts.extend(label[n..].iter().map(|&c| Contract::new(c, b, Cost::Base)));
    contracts.extend(j[..n].iter().map(|&c| Contract::new(c, b, Cost::Increased)));
    Ok(Allocation::new(contracts))
}
