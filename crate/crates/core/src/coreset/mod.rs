//! The scatter coreset and the structures built on top of it.
//!
//! A [`ScatterCoreset`] over `d` channels stores a `d x k` matrix `C`
//! (`k <= d` at rest) with `C Cᵀ = Σ xⱼ xⱼᵀ` over every absorbed sample.
//! Adding a sample adjoins it as a column; once the column count exceeds `d`
//! the matrix is replaced by `U·S` from its thin SVD `U S Vᵀ`. Dropping `V`
//! leaves `C Cᵀ` unchanged because `V` has orthonormal columns, so the
//! summary is exact, not approximate.

mod distributed;
mod stream;
mod tree;

use nalgebra::{DMatrix, DMatrixView};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use distributed::{simulate_distributed, DistributedOutcome, WorkerReport};
pub use stream::MergeReduceStream;
pub use tree::CoresetWindowTree;

/// Exact `d x d` summary of a sample stream's scatter matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "CoresetJson", try_from = "CoresetJson")]
pub struct ScatterCoreset {
    /// Fixed `d x (d + 1)` storage; only the first `cols` columns are live.
    buf: DMatrix<f64>,
    cols: usize,
    sample_count: u64,
    /// Set when the live columns are `U·S` from the last reduction, i.e.
    /// mutually orthogonal with norms equal to the singular values.
    reduced: bool,
}

impl ScatterCoreset {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Spec("a coreset needs at least one channel".into()));
        }
        Ok(ScatterCoreset {
            buf: DMatrix::zeros(d, d + 1),
            cols: 0,
            sample_count: 0,
            reduced: false,
        })
    }

    /// Coreset of a whole `d x t` block of samples, with one SVD.
    pub fn from_samples(x: DMatrixView<'_, f64>) -> Result<Self> {
        let mut c = ScatterCoreset::new(x.nrows())?;
        if x.ncols() > 0 {
            c.append_window(x)?;
        }
        Ok(c)
    }

    pub fn channels(&self) -> usize {
        self.buf.nrows()
    }

    pub fn sample_count(&self) -> u64 {
        self.sample_count
    }

    pub fn is_empty(&self) -> bool {
        self.sample_count == 0
    }

    /// Number of live basis columns.
    pub fn columns(&self) -> usize {
        self.cols
    }

    /// The live `d x k` basis (`U·S` after a reduction).
    pub fn basis(&self) -> DMatrixView<'_, f64> {
        self.buf.columns(0, self.cols)
    }

    /// True when the live basis is in reduced `U·S` form.
    pub fn is_reduced(&self) -> bool {
        self.reduced
    }

    /// Scalars held by this coreset's storage, independent of how many
    /// samples it has absorbed.
    pub fn resident_scalars(&self) -> usize {
        self.buf.len()
    }

    /// `C Cᵀ`, symmetrized.
    pub fn scatter(&self) -> DMatrix<f64> {
        let d = self.channels();
        if self.cols == 0 {
            return DMatrix::zeros(d, d);
        }
        let b = self.basis();
        let m = b * b.transpose();
        (&m + m.transpose()) * 0.5
    }

    /// Adjoin one sample; reduce when the column count reaches `d + 1`.
    pub fn append_sample(&mut self, x: &[f64]) -> Result<()> {
        let d = self.channels();
        if x.len() != d {
            return Err(Error::Dimension {
                context: "append_sample",
                expected: d,
                found: x.len(),
            });
        }
        if let Some(col) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: col, col: 0 });
        }
        self.buf.column_mut(self.cols).copy_from_slice(x);
        self.cols += 1;
        self.reduced = false;
        self.sample_count += 1;
        if self.cols > d {
            let full = self.buf.clone();
            self.reduce_from(full);
        }
        Ok(())
    }

    /// Adjoin a `d x m` window with a single concatenation and at most one
    /// SVD.
    pub fn append_window(&mut self, w: DMatrixView<'_, f64>) -> Result<()> {
        let d = self.channels();
        if w.nrows() != d {
            return Err(Error::Dimension {
                context: "append_window",
                expected: d,
                found: w.nrows(),
            });
        }
        if w.ncols() == 0 {
            return Err(Error::EmptyInput("append_window needs at least one column".into()));
        }
        crate::linalg::check_finite(w)?;
        self.absorb(w, w.ncols() as u64);
        Ok(())
    }

    /// `a ∪ b`, reduced back to at most `d` columns.
    pub fn merge(&self, other: &ScatterCoreset) -> Result<ScatterCoreset> {
        ScatterCoreset::merge_all([self, other])
    }

    /// Merge any number of coresets with one concatenation and at most one
    /// SVD.
    pub fn merge_all<'a>(parts: impl IntoIterator<Item = &'a ScatterCoreset>) -> Result<ScatterCoreset> {
        let parts: Vec<&ScatterCoreset> = parts.into_iter().collect();
        let Some(first) = parts.first() else {
            return Err(Error::EmptyInput("merge_all needs at least one coreset".into()));
        };
        let d = first.channels();
        if let Some(p) = parts.iter().find(|p| p.channels() != d) {
            return Err(Error::Dimension {
                context: "merge",
                expected: d,
                found: p.channels(),
            });
        }
        let total: usize = parts.iter().map(|p| p.cols).sum();
        let mut out = ScatterCoreset::new(d)?;
        out.sample_count = parts.iter().map(|p| p.sample_count).sum();
        if total <= d {
            for p in &parts {
                out.buf.columns_mut(out.cols, p.cols).copy_from(&p.basis());
                out.cols += p.cols;
            }
            out.reduced = match parts.iter().filter(|p| p.cols > 0).collect::<Vec<_>>().as_slice() {
                [only] => only.reduced,
                _ => false,
            };
        } else {
            let mut cat = DMatrix::zeros(d, total);
            let mut at = 0;
            for p in &parts {
                cat.columns_mut(at, p.cols).copy_from(&p.basis());
                at += p.cols;
            }
            out.reduce_from(cat);
        }
        Ok(out)
    }

    fn absorb(&mut self, w: DMatrixView<'_, f64>, samples: u64) {
        let d = self.channels();
        let m = w.ncols();
        self.sample_count += samples;
        if self.cols + m <= d {
            self.buf.columns_mut(self.cols, m).copy_from(&w);
            self.cols += m;
            self.reduced = false;
            return;
        }
        let mut cat = DMatrix::zeros(d, self.cols + m);
        cat.columns_mut(0, self.cols).copy_from(&self.basis());
        cat.columns_mut(self.cols, m).copy_from(&w);
        self.reduce_from(cat);
    }

    /// Replace the basis with `U·S` of `m` (`d x k`, `k > d`). Zero singular
    /// values are kept, so the result always has exactly `d` columns.
    fn reduce_from(&mut self, m: DMatrix<f64>) {
        let d = self.channels();
        debug_assert!(m.ncols() > d);
        let (u, sv) = crate::linalg::thin_left_svd(m.as_view());
        for (j, &s) in sv.iter().enumerate() {
            let mut dst = self.buf.column_mut(j);
            dst.copy_from(&u.column(j));
            dst *= s;
        }
        self.buf.columns_mut(d, 1).fill(0.0);
        self.cols = d;
        self.reduced = true;
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Checkpoint format: `basis_scaled` is the live `d x k` basis, row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct CoresetJson {
    d: usize,
    sample_count: u64,
    basis_scaled: Vec<f64>,
    k: usize,
}

impl From<ScatterCoreset> for CoresetJson {
    fn from(c: ScatterCoreset) -> Self {
        let b = c.basis();
        let mut flat = Vec::with_capacity(b.len());
        for r in 0..b.nrows() {
            flat.extend(b.row(r).iter());
        }
        CoresetJson {
            d: c.channels(),
            sample_count: c.sample_count,
            basis_scaled: flat,
            k: c.cols,
        }
    }
}

impl TryFrom<CoresetJson> for ScatterCoreset {
    type Error = String;

    fn try_from(j: CoresetJson) -> std::result::Result<Self, String> {
        if j.d == 0 || j.k > j.d {
            return Err(format!("coreset needs d >= 1 and k <= d, got d={} k={}", j.d, j.k));
        }
        if j.basis_scaled.len() != j.d * j.k {
            return Err(format!(
                "basis_scaled has {} entries, expected d*k = {}",
                j.basis_scaled.len(),
                j.d * j.k
            ));
        }
        if j.basis_scaled.iter().any(|v| !v.is_finite()) {
            return Err("basis_scaled contains non-finite values".into());
        }
        let mut c = ScatterCoreset::new(j.d).map_err(|e| e.to_string())?;
        let live = DMatrix::from_row_slice(j.d, j.k, &j.basis_scaled);
        c.buf.columns_mut(0, j.k).copy_from(&live);
        c.cols = j.k;
        c.sample_count = j.sample_count;
        Ok(c)
    }
}
