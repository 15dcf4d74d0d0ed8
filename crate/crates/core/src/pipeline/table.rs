use std::path::Path;

use super::{DataChain, Fact, Location, PipelineError, Slot};
use crate::corpus::EntityType;
use crate::lexicon::Lexicon;

/// A semi-structured table: a header and rows of equal width.
#[derive(Clone, Debug, PartialEq)]
pub struct TableDoc {
    pub id: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl TableDoc {
    /// Checks that every row is as wide as the header.
    pub fn validate(&self) -> Result<(), PipelineError> {
        match self.rows.iter().position(|r| r.len() != self.header.len()) {
            Some(i) => Err(PipelineError::RaggedRow {
                table: self.id.clone(),
                row: i + 1,
                found: self.rows[i].len(),
                expected: self.header.len(),
            }),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnRole {
    Slot(Slot),
    Unused,
}

/// Parses CSV (RFC 4180 quoting) or, with `delimiter = b'\t'`, TSV. The
/// first record is the header; ragged rows are reported with their 1-based
/// data row number.
pub fn parse_table(id: &str, text: &str, delimiter: u8) -> Result<TableDoc, PipelineError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header: Vec<String> = match records.next() {
        None => Vec::new(),
        Some(r) => r
            .map_err(|e| PipelineError::Table {
                table: id.into(),
                message: e.to_string(),
            })?
            .iter()
            .map(|c| c.trim().to_string())
            .collect(),
    };
    let mut rows = Vec::new();
    for (i, record) in records.enumerate() {
        let record = record.map_err(|e| PipelineError::Table {
            table: id.into(),
            message: e.to_string(),
        })?;
        if record.len() != header.len() {
            return Err(PipelineError::RaggedRow {
                table: id.into(),
                row: i + 1,
                found: record.len(),
                expected: header.len(),
            });
        }
        rows.push(record.iter().map(|c| c.trim().to_string()).collect());
    }
    Ok(TableDoc {
        id: id.to_string(),
        header,
        rows,
    })
}

/// Reads a table file; `.tsv` files are tab-separated, anything else is
/// CSV. The table id is the file stem.
pub fn read_table(path: &Path) -> Result<TableDoc, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tsv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("tsv"));
    parse_table(&id, &text, if tsv { b'\t' } else { b',' })
}

fn header_role(label: &str) -> Option<Slot> {
    let l = label.to_lowercase();
    let has = |k: &str| l.contains(k);
    if has("pka") || has("bde") {
        Some(Slot::PkaValue)
    } else if has("compound") || has("substrate") {
        Some(Slot::Compound)
    } else if has("solvent") {
        Some(Slot::Solvent)
    } else if has("method") {
        Some(Slot::Method)
    } else if has("reaction") {
        Some(Slot::Reaction)
    } else if has("bond") {
        Some(Slot::Bond)
    } else {
        None
    }
}

/// Role from the cells when the header says nothing: a column where most
/// non-empty cells are recognised compounds, solvents or bonds.
fn content_role(table: &TableDoc, col: usize, lexicon: &Lexicon) -> Option<Slot> {
    let cells: Vec<&str> = table
        .rows
        .iter()
        .map(|r| r[col].as_str())
        .filter(|c| !c.is_empty())
        .collect();
    if cells.is_empty() {
        return None;
    }
    let majority = |pred: &dyn Fn(&str) -> bool| 2 * cells.iter().filter(|c| pred(c)).count() > cells.len();
    if majority(&|c| lexicon.recognises(c, EntityType::Compound)) {
        Some(Slot::Compound)
    } else if majority(&|c| lexicon.is_solvent(c)) {
        Some(Slot::Solvent)
    } else if majority(&|c| lexicon.recognises(c, EntityType::Bond)) {
        Some(Slot::Bond)
    } else {
        None
    }
}

/// Column roles: header keywords first, cell contents for unlabelled
/// columns. Only the first column of each role is used.
pub fn column_roles(table: &TableDoc, lexicon: &Lexicon) -> Vec<ColumnRole> {
    let mut taken = Vec::new();
    (0..table.header.len())
        .map(|col| {
            let role = header_role(&table.header[col]).or_else(|| content_role(table, col, lexicon));
            match role {
                Some(slot) if !taken.contains(&slot) => {
                    taken.push(slot);
                    ColumnRole::Slot(slot)
                }
                _ => ColumnRole::Unused,
            }
        })
        .collect()
}

pub(crate) fn parse_value(text: &str) -> Option<f64> {
    text.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Every non-empty classified cell as a fact. pKa cells that do not parse
/// as numbers are left out.
pub fn table_facts(table: &TableDoc, lexicon: &Lexicon) -> Result<Vec<Fact>, PipelineError> {
    table.validate()?;
    let roles = column_roles(table, lexicon);
    let mut facts = Vec::new();
    for (r, row) in table.rows.iter().enumerate() {
        for (cell, role) in row.iter().zip(&roles) {
            let ColumnRole::Slot(slot) = *role else { continue };
            if cell.is_empty() || (slot == Slot::PkaValue && parse_value(cell).is_none()) {
                continue;
            }
            facts.push(Fact {
                slot,
                value: cell.clone(),
                location: Location::table(&table.id, r),
            });
        }
    }
    Ok(facts)
}

/// One chain per row that has both a compound and a numeric pKa value.
pub fn extract_table_facts(table: &TableDoc, lexicon: &Lexicon) -> Result<Vec<DataChain>, PipelineError> {
    let facts = table_facts(table, lexicon)?;
    let mut chains = Vec::new();
    for r in 0..table.rows.len() {
        let row: Vec<&Fact> = facts.iter().filter(|f| f.location.index == r).collect();
        let get = |slot| row.iter().find(|f| f.slot == slot);
        let (Some(compound), Some(value)) = (get(Slot::Compound), get(Slot::PkaValue)) else {
            continue;
        };
        let mut chain = DataChain::new(compound.value.clone());
        chain.pka_value = parse_value(&value.value);
        for fact in &row {
            if let Some(slot) = chain.text_slot_mut(fact.slot) {
                *slot = Some(fact.value.clone());
            }
            chain.note(fact.location.trail(fact.slot));
        }
        chains.push(chain);
    }
    Ok(chains)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex() -> Lexicon {
        Lexicon::builder()
            .compound("phenol")
            .solvent("DMSO")
            .build()
            .unwrap()
    }

    #[test]
    fn header_rules() {
        let t = parse_table("t", "Compound,Solvent,pKa\nphenol,DMSO,18.0\n", b',').unwrap();
        let chains = extract_table_facts(&t, &lex()).unwrap();
        assert_eq!(chains.len(), 1);
        let c = &chains[0];
        assert_eq!(c.compound, "phenol");
        assert_eq!(c.solvent.as_deref(), Some("DMSO"));
        assert_eq!(c.pka_value, Some(18.0));
        assert_eq!(
            c.provenance,
            ["table:t:r0:compound", "table:t:r0:pka_value", "table:t:r0:solvent"]
        );
    }

    #[test]
    fn empty_and_non_numeric() {
        let t = parse_table("t", "", b',').unwrap();
        assert!(extract_table_facts(&t, &lex()).unwrap().is_empty());
        let t = parse_table("t", "Substrate,pKa value\nphenol,n.d.\nphenol,10.0\n", b',').unwrap();
        let chains = extract_table_facts(&t, &lex()).unwrap();
        assert_eq!(chains.len(), 1);
        assert_eq!(chains[0].provenance[0], "table:t:r1:compound");
    }

    #[test]
    fn ragged_row_named() {
        let err = parse_table("t", "a,b\n1,2\n3\n", b',').unwrap_err();
        assert!(matches!(err, PipelineError::RaggedRow { row: 2, .. }));
        assert!(err.to_string().contains("row 2"));
        let t = TableDoc {
            id: "m".into(),
            header: vec!["Compound".into()],
            rows: vec![vec![]],
        };
        assert!(extract_table_facts(&t, &lex()).is_err());
    }

    #[test]
    fn quoting_and_tsv() {
        let t = parse_table("t", "Compound,BDE\n\"phenol, dry\",87.0\n", b',').unwrap();
        assert_eq!(t.rows[0][0], "phenol, dry");
        let t = parse_table("t", "Compound\tSolvent\tpKa\nphenol\tDMSO\t18\n", b'\t').unwrap();
        assert_eq!(t.rows[0].len(), 3);
    }

    #[test]
    fn unlabelled_columns_use_lexicon() {
        let t = parse_table("t", "Entry,Medium,pKa\nphenol,DMSO,18.0\n", b',').unwrap();
        let roles = column_roles(&t, &lex());
        assert_eq!(
            roles,
            [
                ColumnRole::Slot(Slot::Compound),
                ColumnRole::Slot(Slot::Solvent),
                ColumnRole::Slot(Slot::PkaValue)
            ]
        );
    }
}
