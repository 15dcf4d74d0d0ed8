//! Table extraction, document globals, chain assembly and merging.

mod chain;
mod table;

use std::fmt;
use std::path::PathBuf;

use serde::Serialize;

pub use chain::{
    assemble_chains, collect_globals, extract_chains, merge_chains, Assembly, GlobalValue, Globals,
    Merged,
};
pub use table::{
    column_roles, extract_table_facts, parse_table, read_table, table_facts, ColumnRole, TableDoc,
};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{table}: row {row} has {found} cells, header has {expected}")]
    RaggedRow {
        table: String,
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("{table}: {message}")]
    Table { table: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Compound,
    Solvent,
    PkaValue,
    Bond,
    Reaction,
    Method,
}

impl Slot {
    pub fn name(self) -> &'static str {
        match self {
            Slot::Compound => "compound",
            Slot::Solvent => "solvent",
            Slot::PkaValue => "pka_value",
            Slot::Bond => "bond",
            Slot::Reaction => "reaction",
            Slot::Method => "method",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Provenance {
    Table,
    Text,
}

/// Where a fact was read: a table row or a text sentence, both 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Location {
    pub provenance: Provenance,
    pub doc: String,
    pub index: usize,
}

impl Location {
    pub fn table(doc: &str, row: usize) -> Self {
        Location {
            provenance: Provenance::Table,
            doc: doc.to_string(),
            index: row,
        }
    }

    pub fn text(doc: &str, sentence: usize) -> Self {
        Location {
            provenance: Provenance::Text,
            doc: doc.to_string(),
            index: sentence,
        }
    }

    /// Provenance entry for `slot` read at this location, e.g.
    /// `table:doc1:r0:solvent` or `text:doc1:s3:compound`.
    pub fn trail(&self, slot: Slot) -> String {
        let (source, unit) = match self.provenance {
            Provenance::Table => ("table", 'r'),
            Provenance::Text => ("text", 's'),
        };
        format!("{source}:{}:{unit}{}:{}", self.doc, self.index, slot.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fact {
    pub slot: Slot,
    pub value: String,
    pub location: Location,
}

/// One seven-slot record: compound, reaction, solvent, bond, method, pKa
/// (implied by the record itself) and pKa value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DataChain {
    pub compound: String,
    pub reaction: Option<String>,
    pub solvent: Option<String>,
    pub bond: Option<String>,
    pub method: Option<String>,
    pub pka_value: Option<f64>,
    /// One entry per filled slot, sorted.
    pub provenance: Vec<String>,
}

impl DataChain {
    pub fn new(compound: impl Into<String>) -> Self {
        DataChain {
            compound: compound.into(),
            reaction: None,
            solvent: None,
            bond: None,
            method: None,
            pka_value: None,
            provenance: Vec::new(),
        }
    }

    pub(crate) fn text_slot_mut(&mut self, slot: Slot) -> Option<&mut Option<String>> {
        match slot {
            Slot::Reaction => Some(&mut self.reaction),
            Slot::Solvent => Some(&mut self.solvent),
            Slot::Bond => Some(&mut self.bond),
            Slot::Method => Some(&mut self.method),
            Slot::Compound | Slot::PkaValue => None,
        }
    }

    /// Whether any provenance entry comes from a table.
    pub fn from_table(&self) -> bool {
        self.provenance.iter().any(|p| p.starts_with("table:"))
    }

    pub(crate) fn note(&mut self, entry: String) {
        if let Err(pos) = self.provenance.binary_search(&entry) {
            self.provenance.insert(pos, entry);
        }
    }
}

impl fmt::Display for DataChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serde_json::to_string(self).map_err(|_| fmt::Error)?)
    }
}

/// One JSON object per line, fields in slot order, absent values `null`.
pub fn render_chains(chains: &[DataChain]) -> String {
    chains.iter().map(|c| format!("{c}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_field_order_and_nulls() {
        let mut c = DataChain::new("phenol");
        c.solvent = Some("DMSO".into());
        c.pka_value = Some(18.0);
        c.note(Location::table("t", 0).trail(Slot::Solvent));
        c.note(Location::table("t", 0).trail(Slot::Compound));
        assert_eq!(
            c.to_string(),
            r#"{"compound":"phenol","reaction":null,"solvent":"DMSO","bond":null,"method":null,"pka_value":18.0,"provenance":["table:t:r0:compound","table:t:r0:solvent"]}"#
        );
        assert!(c.from_table());
    }
}
