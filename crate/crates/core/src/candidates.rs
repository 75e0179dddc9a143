// SPDX-License-Identifier: Apache-2.0

//! Selection of the signals a power model may use.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::glob::matches_any;
use crate::vcd::{PortRole, SignalEntry, SignalTable};

/// Which port roles are eligible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleMask {
    pub input: bool,
    pub output: bool,
    pub internal: bool,
}

impl RoleMask {
    pub fn allows(self, role: PortRole) -> bool {
        match role {
            PortRole::Input => self.input,
            PortRole::Output => self.output,
            PortRole::Internal => self.internal,
        }
    }
}

impl Default for RoleMask {
    fn default() -> Self {
        RoleMask { input: true, output: true, internal: false }
    }
}

/// Candidate filter.
///
/// VCD carries no port directions, so `inputs` and `outputs` name the
/// module-boundary signals by pattern. Signals that already carry a
/// non-internal role in the table keep it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CandidateFilter {
    pub include: Vec<String>,
    pub exclude: Vec<String>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub roles: RoleMask,
    /// Whether signals declared directly in the top scope qualify.
    pub include_top_level: bool,
}

impl Default for CandidateFilter {
    fn default() -> Self {
        CandidateFilter {
            include: vec!["*".to_string()],
            exclude: vec!["*.clk".to_string(), "*.rst*".to_string()],
            inputs: Vec::new(),
            outputs: Vec::new(),
            roles: RoleMask::default(),
            include_top_level: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CandidateError {
    #[error("no signal matches the candidate filter")]
    EmptyCandidateSet,
}

impl CandidateFilter {
    pub fn role_of(&self, entry: &SignalEntry) -> PortRole {
        match entry.port_role {
            PortRole::Internal if matches_any(&self.inputs, &entry.hier_name) => PortRole::Input,
            PortRole::Internal if matches_any(&self.outputs, &entry.hier_name) => PortRole::Output,
            role => role,
        }
    }

    /// Writes the port roles implied by `inputs`/`outputs` into `table`.
    pub fn classify(&self, table: &mut SignalTable) {
        for e in &mut table.entries {
            e.port_role = self.role_of(e);
        }
    }

    pub fn accepts(&self, entry: &SignalEntry) -> bool {
        (self.include_top_level || entry.depth() >= 2)
            && matches_any(&self.include, &entry.hier_name)
            && !matches_any(&self.exclude, &entry.hier_name)
            && self.roles.allows(self.role_of(entry))
    }
}

/// Candidate signals in lexicographic order of hierarchical name, with their
/// resolved port roles.
pub fn resolve_candidates(table: &SignalTable, filter: &CandidateFilter) -> Result<Vec<SignalEntry>, CandidateError> {
    let mut out: Vec<SignalEntry> = table
        .entries
        .iter()
        .filter(|e| filter.accepts(e))
        .map(|e| SignalEntry { port_role: filter.role_of(e), ..e.clone() })
        .collect();
    if out.is_empty() {
        return Err(CandidateError::EmptyCandidateSet);
    }
    out.sort_by(|a, b| a.hier_name.cmp(&b.hier_name));
    Ok(out)
}
