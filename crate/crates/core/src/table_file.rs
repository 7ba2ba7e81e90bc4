//! Versioned JSON artifact for a compiled Clifford table.
//!
//! Matrices are stored entry by entry as `[re, im]` pairs in row-major order,
//! next to each element's native program and the pulse-count statistics.
//! Loading rebuilds the multiplication table from the stored matrices, so a
//! file that is not closed under composition, or whose programs disagree with
//! its matrices, is rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::compiler::{compile_clifford_table, CompileStats, VERIFY_TOL};
use crate::error::{Error, Result};
use crate::groups::{generate_clifford_table, CliffordElement, CliffordTable, Equivalence};

pub const TABLE_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableFile {
    pub format_version: u32,
    pub tool_version: String,
    pub order: usize,
    pub equivalence: Equivalence,
    pub stats: CompileStats,
    pub elements: Vec<CliffordElement>,
}

impl TableFile {
    pub fn from_table(table: &CliffordTable, stats: CompileStats) -> Self {
        Self {
            format_version: TABLE_FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            order: table.order(),
            equivalence: table.equivalence(),
            stats,
            elements: table.elements().to_vec(),
        }
    }

    /// Generates and compiles the 216-element table.
    pub fn build() -> Result<Self> {
        let (table, stats) = compile_clifford_table(&generate_clifford_table()?)?;
        Ok(Self::from_table(&table, stats))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Rebuilds the table, checking closure, inverses, every program against
    /// its matrix, and the recorded statistics.
    pub fn into_table(self) -> Result<CliffordTable> {
        if self.format_version != TABLE_FORMAT_VERSION {
            return Err(Error::TableFile(format!(
                "unsupported format version {} (expected {TABLE_FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.elements.len() != self.order {
            return Err(Error::TableFile(format!(
                "header says {} elements, file has {}",
                self.order,
                self.elements.len()
            )));
        }
        if let Some(e) = self.elements.iter().enumerate().find(|(i, e)| e.index != *i) {
            return Err(Error::TableFile(format!("element at position {} has index {}", e.0, e.1.index)));
        }
        let matrices = self.elements.iter().map(|e| e.matrix.clone()).collect();
        let mut table = CliffordTable::from_matrices_with(matrices, self.equivalence)
            .map_err(|e| Error::TableFile(format!("closure check failed: {e}")))?;
        let mut counts = Vec::with_capacity(self.order);
        for e in self.elements {
            let seq = e
                .pulse_sequence
                .ok_or_else(|| Error::TableFile(format!("element {} has no program", e.index)))?;
            if !seq.verifies(&e.matrix, VERIFY_TOL) {
                return Err(Error::TableFile(format!("program of element {} does not reproduce it", e.index)));
            }
            counts.push(seq.pulse_count());
            table.set_pulse_sequence(e.index, seq);
        }
        if CompileStats::from_counts(&counts) != self.stats {
            return Err(Error::TableFile("stats block does not match the programs".into()));
        }
        Ok(table)
    }
}
