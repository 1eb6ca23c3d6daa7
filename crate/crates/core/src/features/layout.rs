use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Name of the block holding the whole text representation.
pub const TSD_BLOCK: &str = "TSD";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotKind {
    /// Standardized before training.
    Continuous,
    /// 0/1 indicator; never rescaled.
    Binary,
    /// Already on a fixed scale (e.g. unit-norm tf-idf); never rescaled.
    Normalized,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub name: String,
    pub kind: SlotKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

impl Block {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// Named, contiguous blocks over a feature vector.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub blocks: Vec<Block>,
    pub slots: Vec<Slot>,
}

impl FeatureLayout {
    pub fn width(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Appends a block; zero-length blocks are skipped.
    pub fn push_block(&mut self, name: impl Into<String>, slots: Vec<Slot>) {
        if slots.is_empty() {
            return;
        }
        self.blocks.push(Block { name: name.into(), offset: self.slots.len(), len: slots.len() });
        self.slots.extend(slots);
    }

    pub fn push_scalar(&mut self, name: &str, kind: SlotKind) {
        self.push_block(name, vec![Slot { name: name.to_owned(), kind }]);
    }

    /// Layout of `[self, other]`.
    pub fn concat(&self, other: &FeatureLayout) -> FeatureLayout {
        let mut out = self.clone();
        let shift = self.width();
        out.blocks.extend(other.blocks.iter().map(|b| Block { offset: b.offset + shift, ..b.clone() }));
        out.slots.extend(other.slots.iter().cloned());
        out
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn tsd_block(&self) -> Option<&Block> {
        self.block(TSD_BLOCK)
    }

    pub fn slot_names(&self) -> impl Iterator<Item = &str> {
        self.slots.iter().map(|s| s.name.as_str())
    }

    /// `true` for slots the standardizer must leave alone.
    pub fn skip_mask(&self) -> Vec<bool> {
        self.slots.iter().map(|s| s.kind != SlotKind::Continuous).collect()
    }

    /// Checks that blocks are ordered and partition the slots exactly.
    pub fn is_partition(&self) -> bool {
        let mut next = 0;
        for b in &self.blocks {
            if b.offset != next || b.len == 0 {
                return false;
            }
            next += b.len;
        }
        next == self.width()
    }

    /// Short content hash over slot names and kinds.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for s in &self.slots {
            h.update(s.name.as_bytes());
            h.update([0u8, s.kind as u8]);
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
