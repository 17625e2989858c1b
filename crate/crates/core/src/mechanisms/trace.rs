use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Allocation, CadetId, Contract};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Propose { step: usize, contract: Contract },
    Hold { step: usize, contract: Contract },
    Reject { step: usize, contract: Contract },
    /// Final cost of a held position, emitted after the proposal phase.
    Charge { contract: Contract },
}

/// Ordered log of a mechanism run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MechanismTrace {
    pub events: Vec<TraceEvent>,
}

impl MechanismTrace {
    pub(crate) fn push(&mut self, event: TraceEvent) {
        self.events.push(event);
    }

    pub fn steps(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, TraceEvent::Propose { .. }))
            .count()
    }

    /// Rebuild the final allocation from the log alone.
    ///
    /// `Hold` sets a cadet's held contract, `Reject` clears it when it matches,
    /// and `Charge` fixes the cost of a contract that is still held.
    pub fn replay(&self) -> Result<Allocation> {
        let mut held: BTreeMap<CadetId, Contract> = BTreeMap::new();
        for e in &self.events {
            match e {
                TraceEvent::Propose { .. } => {}
                TraceEvent::Hold { contract, .. } => {
                    held.insert(contract.cadet, *contract);
                }
                TraceEvent::Reject { contract, .. } => {
                    if held.get(&contract.cadet) == Some(contract) {
                        held.remove(&contract.cadet);
                    }
                }
                TraceEvent::Charge { contract } => match held.get_mut(&contract.cadet) {
                    Some(h) if h.branch == contract.branch => h.cost = contract.cost,
                    _ => {
                        return Err(Error::invariant(
                            "trace charges only held positions",
                            format!(
                                "cadet {} charged at branch {} without a hold",
                                contract.cadet.0, contract.branch.0
                            ),
                        ))
                    }
                },
            }
        }
        Ok(Allocation::new(held.into_values()))
    }
}
