//! Fundamental-variable encoding, standardization and fusion with the
//! text representation.
//!
//! The fused vector is the plain concatenation `[x_fv, x_tsd]`; its
//! [`FeatureLayout`] names each fundamental block and a single `TSD` block
//! so attributions can be aggregated per block later.

mod encoder;
mod layout;

use std::io::Write;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

pub use encoder::{
    is_imputable, numeric_fundamentals, FundamentalEncoder, BOOLEAN_SLOTS, INDUSTRY_BLOCK, INVESTMENT_TYPE_BLOCK,
    NUMERIC_SLOTS,
};
pub use layout::{Block, FeatureLayout, Slot, SlotKind, TSD_BLOCK};

use crate::error::{Error, Result};
use crate::text::{TextKind, TextRepresentation};

/// Column-wise z-scoring fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub skip_mask: Vec<bool>,
}

impl Standardizer {
    /// Population mean and standard deviation per column. Columns flagged in
    /// `skip_mask` and columns with zero variance are passed through.
    pub fn fit(x: ArrayView2<f64>, skip_mask: &[bool]) -> Result<Self> {
        if skip_mask.len() != x.ncols() {
            return Err(Error::WidthMismatch { expected: skip_mask.len(), actual: x.ncols() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite value in standardizer input"));
        }
        let n = x.nrows().max(1) as f64;
        let mut mean = Vec::with_capacity(x.ncols());
        let mut std = Vec::with_capacity(x.ncols());
        for col in x.axis_iter(Axis(1)) {
            let m = col.sum() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            mean.push(m);
            std.push(var.sqrt());
        }
        Ok(Self { mean, std, skip_mask: skip_mask.to_vec() })
    }

    fn passes_through(&self, j: usize) -> bool {
        self.skip_mask[j] || self.std[j] == 0.0
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::WidthMismatch { expected: self.mean.len(), actual: x.ncols() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite value in standardizer input"));
        }
        let mut out = x.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            if !self.passes_through(j) {
                let (m, s) = (self.mean[j], self.std[j]);
                col.mapv_inplace(|v| (v - m) / s);
            }
        }
        Ok(out)
    }

    pub fn transform_row(&self, row: &mut [f64]) {
        for (j, v) in row.iter_mut().enumerate() {
            if !self.passes_through(j) {
                *v = (*v - self.mean[j]) / self.std[j];
            }
        }
    }
}

/// A fused feature vector with its block map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedVector {
    pub values: Vec<f64>,
    pub layout: FeatureLayout,
}

/// Layout of the text block for a representation of `kind` and `dim`.
pub fn tsd_layout(kind: TextKind, dim: usize) -> FeatureLayout {
    let slot_kind = match kind {
        TextKind::Bow => SlotKind::Normalized,
        _ => SlotKind::Continuous,
    };
    let mut layout = FeatureLayout::default();
    layout.push_block(TSD_BLOCK, (0..dim).map(|i| Slot { name: format!("tsd_{i}"), kind: slot_kind }).collect());
    layout
}

/// Concatenates fundamentals and an optional text representation.
pub fn fuse(x_fv: &[f64], fv_layout: &FeatureLayout, x_tsd: Option<&TextRepresentation>) -> Result<FusedVector> {
    if x_fv.len() != fv_layout.width() {
        return Err(Error::WidthMismatch { expected: fv_layout.width(), actual: x_fv.len() });
    }
    let tsd_dim = x_tsd.map_or(0, TextRepresentation::dim);
    if x_fv.is_empty() && tsd_dim == 0 {
        return Err(Error::invalid("cannot fuse two empty feature vectors"));
    }
    let finite = x_fv.iter().chain(x_tsd.iter().flat_map(|t| t.values.iter())).all(|v| v.is_finite());
    if !finite {
        return Err(Error::invalid("non-finite value in fused features"));
    }
    let layout = match x_tsd {
        Some(t) if tsd_dim > 0 => fv_layout.concat(&tsd_layout(t.kind, tsd_dim)),
        _ => fv_layout.clone(),
    };
    let mut values = x_fv.to_vec();
    if let Some(t) = x_tsd {
        values.extend_from_slice(&t.values);
    }
    Ok(FusedVector { values, layout })
}

/// Writes a feature matrix as CSV (header = slot names) plus a sidecar JSON
/// describing the layout at `<csv>.layout.json`.
pub fn export_feature_matrix(
    csv_path: &Path,
    ids: &[String],
    x: ArrayView2<f64>,
    layout: &FeatureLayout,
) -> Result<()> {
    if x.ncols() != layout.width() {
        return Err(Error::WidthMismatch { expected: layout.width(), actual: x.ncols() });
    }
    let mut w = csv::Writer::from_path(csv_path)?;
    w.write_record(std::iter::once("id").chain(layout.slot_names()))?;
    for (id, row) in ids.iter().zip(x.rows()) {
        let mut rec = vec![id.clone()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    let sidecar = csv_path.with_extension("layout.json");
    let mut f = std::fs::File::create(sidecar)?;
    serde_json::to_writer_pretty(&mut f, layout)?;
    f.write_all(b"\n")?;
    Ok(())
}
