use serde::{Deserialize, Serialize};

use super::McmcTrace;
use crate::data::GroupSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipTable {
    pub group_pips: Vec<f64>,
    /// Share of group-included iterations in which each member was the
    /// active one.
    pub conditional_pips: Vec<f64>,
    /// Groups that were never included; their members report 0.
    pub never_included: Vec<bool>,
}

/// Group and conditional inclusion probabilities pooled over chains.
pub fn compute_pips(traces: &[McmcTrace], groups: &GroupSpec) -> Result<PipTable> {
    let total: usize = traces.iter().map(|t| t.states.len()).sum();
    if total == 0 {
        return Err(Error::InvalidArgument("no retained MCMC iterations".into()));
    }
    let g = groups.n_groups();
    let p = groups.assignments().len();
    let mut group_on = vec![0usize; g];
    let mut member_on = vec![0usize; p];
    for state in traces.iter().flat_map(|t| t.states.iter()) {
        for k in 0..g {
            if state.delta_group[k] {
                group_on[k] += 1;
            }
        }
        for m in 0..p {
            if state.delta_within[m] && state.delta_group[groups.group_of(m)] {
                member_on[m] += 1;
            }
        }
    }
    let group_pips = group_on.iter().map(|&c| c as f64 / total as f64).collect();
    let conditional_pips = (0..p)
        .map(|m| {
            let denom = group_on[groups.group_of(m)];
            if denom == 0 {
                0.0
            } else {
                member_on[m] as f64 / denom as f64
            }
        })
        .collect();
    Ok(PipTable {
        group_pips,
        conditional_pips,
        never_included: group_on.iter().map(|&c| c == 0).collect(),
    })
}
