use std::collections::VecDeque;

use super::trace::{MechanismTrace, TraceEvent};
use crate::model::{BaselinePriority, BranchId, CadetId, Contract, Cost};

/// Cadet-proposing deferred acceptance.
///
/// `prefs[i]` lists acceptable branches for cadet `i`, best first;
/// `priorities[b]` ranks every cadet at branch `b`; `quotas[b]` is its capacity.
/// Returns each cadet's branch or `None`.
pub fn deferred_acceptance<P: AsRef<[BranchId]>>(
    prefs: &[P],
    priorities: &[BaselinePriority],
    quotas: &[usize],
) -> Vec<Option<BranchId>> {
    run(prefs, priorities, quotas, None)
}

pub(crate) fn run<P: AsRef<[BranchId]>>(
    prefs: &[P],
    priorities: &[BaselinePriority],
    quotas: &[usize],
    mut trace: Option<&mut MechanismTrace>,
) -> Vec<Option<BranchId>> {
    let n = prefs.len();
    let mut next = vec![0usize; n];
    let mut matched: Vec<Option<BranchId>> = vec![None; n];
    // Held cadets per branch, kept sorted by priority (best first).
    let mut held: Vec<Vec<CadetId>> = vec![Vec::new(); quotas.len()];
    let mut free: VecDeque<CadetId> = (0..n as u32).map(CadetId).collect();
    let mut step = 0;

    while let Some(cadet) = free.pop_front() {
        let order = prefs[cadet.index()].as_ref();
        let Some(&b) = order.get(next[cadet.index()]) else {
            continue;
        };
        next[cadet.index()] += 1;
        step += 1;
        let contract = |c: CadetId| Contract::new(c, b, Cost::Base);
        if let Some(t) = trace.as_deref_mut() {
            t.push(TraceEvent::Propose {
                step,
                contract: contract(cadet),
            });
        }
        let priority = &priorities[b.index()];
        let list = &mut held[b.index()];
        let at = list.partition_point(|c| priority.prefers(*c, cadet));
        list.insert(at, cadet);
        matched[cadet.index()] = Some(b);
        if let Some(t) = trace.as_deref_mut() {
            t.push(TraceEvent::Hold {
                step,
                contract: contract(cadet),
            });
        }
        if list.len() > quotas[b.index()] {
            let out = list.pop().expect("over capacity implies non-empty");
            matched[out.index()] = None;
            if let Some(t) = trace.as_deref_mut() {
                t.push(TraceEvent::Reject {
                    step,
                    contract: contract(out),
                });
            }
            free.push_back(out);
        }
    }
    matched
}
