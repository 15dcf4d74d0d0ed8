use std::collections::{BTreeSet, HashMap};

use crate::corpus::{BOND_MARK, COMPOUND_MARK};

pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;
pub const COMPOUND_MARK_ID: usize = 2;
pub const BOND_MARK_ID: usize = 3;

const PAD: &str = "<pad>";
const UNK: &str = "<unk>";
const RESERVED: [&str; 4] = [PAD, UNK, COMPOUND_MARK, BOND_MARK];

/// Token-to-id map with fixed reserved ids: 0 padding, 1 unknown, 2 `$CMP$`,
/// 3 `$BOND$`. Every other entry is a normalised token: lower-cased with
/// each ASCII digit replaced by `0`, so numbers share embeddings by shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocab {
    entries: Vec<String>,
    ids: HashMap<String, usize>,
}

/// Lookup key for a raw token.
pub fn normalize(token: &str) -> String {
    if token == COMPOUND_MARK || token == BOND_MARK {
        return token.to_string();
    }
    token
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_ascii_digit() { '0' } else { c })
        .collect()
}

impl Vocab {
    /// Reserved entries plus the sorted set of normalised training tokens.
    pub fn build<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Self {
        let keys: BTreeSet<String> = tokens.into_iter().map(normalize).collect();
        let entries = RESERVED
            .iter()
            .map(|s| s.to_string())
            .chain(keys.into_iter().filter(|k| !RESERVED.contains(&k.as_str())))
            .collect();
        Self::from_entries(entries).expect("reserved entries are in place")
    }

    /// Rebuilds a vocabulary from its entries in id order.
    pub fn from_entries(entries: Vec<String>) -> Result<Self, String> {
        if entries.len() < RESERVED.len() || entries[..RESERVED.len()] != RESERVED {
            return Err("vocabulary does not start with the reserved entries".into());
        }
        let mut ids = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if ids.insert(e.clone(), i).is_some() {
                return Err(format!("duplicate vocabulary entry {e:?}"));
            }
        }
        Ok(Vocab { entries, ids })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Id of a raw token; unknown tokens map to [`UNK_ID`].
    pub fn id(&self, token: &str) -> usize {
        self.ids.get(&normalize(token)).copied().unwrap_or(UNK_ID)
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }
}
