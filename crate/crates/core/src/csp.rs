//! Common Spatial Patterns from raw class signals or from class coresets.
//!
//! Both routes reduce to the generalized symmetric-definite problem
//! `R₁ v = λ R₂ v` with `Rᵢ` the sample-count-normalised class covariance.
//! It is solved by whitening with the Cholesky factor of `R₂`, which yields
//! the eigenpairs of `R₂⁻¹R₁` without forming the inverse.

use log::warn;
use nalgebra::{DMatrix, DMatrixView, DVector};
use serde::{Deserialize, Serialize};

use crate::coreset::ScatterCoreset;
use crate::linalg::{check_finite, dense_scatter, symmetrize};
use crate::signal::ClassLabel;
use crate::{Error, Result};

/// Ridge applied automatically when `R₂` is numerically singular.
pub const AUTO_RIDGE: f64 = 1e-8;
const SINGULAR_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenRoute {
    /// Cholesky whitening of `R₂`.
    #[default]
    Cholesky,
    /// For coresets: whiten with the `U·S` factors of the class-2 coreset,
    /// so `R₂⁻¹` only needs the reciprocal squared singular values. Falls
    /// back to Cholesky when the class-2 basis has fewer than `d` columns.
    DiagonalFastPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CspOptions {
    /// Relative ridge: `Rᵢ += ridge * trace(Rᵢ)/d * I`.
    pub ridge: f64,
    /// With `ridge == 0`, switch to [`AUTO_RIDGE`] when the smallest
    /// eigenvalue of `R₂` is at most `1e-12 * trace(R₂)`.
    pub auto_ridge: bool,
    /// Filters kept per side; clamped to `d / 2`.
    pub per_side: usize,
    pub route: EigenRoute,
}

impl Default for CspOptions {
    fn default() -> Self {
        CspOptions {
            ridge: 0.0,
            auto_ridge: true,
            per_side: 2,
            route: EigenRoute::Cholesky,
        }
    }
}

/// Generalized eigenvectors (unit-norm columns) sorted by descending
/// eigenvalue, plus the component selection.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialFilterBank {
    filters: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    per_side: usize,
    ridge_used: f64,
}

impl SpatialFilterBank {
    pub fn channels(&self) -> usize {
        self.filters.nrows()
    }

    pub fn filters(&self) -> &DMatrix<f64> {
        &self.filters
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn per_side(&self) -> usize {
        self.per_side
    }

    /// Ridge actually applied, after any automatic escalation.
    pub fn ridge_used(&self) -> f64 {
        self.ridge_used
    }

    /// The filter maximising the class-1 to class-2 variance ratio.
    pub fn top_filter(&self) -> DVector<f64> {
        self.filters.column(0).into_owned()
    }

    /// Column indices of the `m` top and `m` bottom filters.
    pub fn selected_indices(&self) -> Vec<usize> {
        let d = self.channels();
        (0..self.per_side).chain(d - self.per_side..d).collect()
    }

    pub fn selected_filters(&self) -> DMatrix<f64> {
        self.filters.select_columns(self.selected_indices().iter())
    }

    pub fn to_json(&self) -> Result<String> {
        let d = self.channels();
        let mut filters: Vec<f64> = Vec::with_capacity(d * d);
        for r in 0..d {
            filters.extend(self.filters.row(r).iter());
        }
        let v = serde_json::json!({
            "d": d,
            "m": self.per_side,
            "eigenvalues": self.eigenvalues.as_slice(),
            "filters": filters,
        });
        Ok(serde_json::to_string_pretty(&v)?)
    }
}

/// `‖wᵀX‖²`, the energy of `x` projected onto `w`.
pub fn projected_energy(w: &DVector<f64>, x: DMatrixView<'_, f64>) -> f64 {
    (w.transpose() * x).norm_squared()
}

/// The CSP objective `‖wᵀX₁‖² / ‖wᵀX₂‖²` on raw signals.
pub fn objective(w: &DVector<f64>, x1: DMatrixView<'_, f64>, x2: DMatrixView<'_, f64>) -> f64 {
    projected_energy(w, x1) / projected_energy(w, x2)
}

/// Batch CSP: class covariances from the raw `d x tᵢ` signals.
pub fn csp_batch(
    x1: DMatrixView<'_, f64>,
    x2: DMatrixView<'_, f64>,
    options: &CspOptions,
) -> Result<SpatialFilterBank> {
    if x1.nrows() != x2.nrows() {
        return Err(Error::Dimension {
            context: "csp_batch",
            expected: x1.nrows(),
            found: x2.nrows(),
        });
    }
    if x1.ncols() == 0 || x2.ncols() == 0 {
        return Err(Error::EmptyInput("each class needs at least one sample".into()));
    }
    check_finite(x1)?;
    check_finite(x2)?;
    let r1 = dense_scatter(x1) / x1.ncols() as f64;
    let r2 = dense_scatter(x2) / x2.ncols() as f64;
    solve_cholesky(r1, r2, options)
}

/// CSP from the two class coresets; identical to [`csp_batch`] on the
/// signals the coresets summarise.
pub fn csp_from_coresets(
    c1: &ScatterCoreset,
    c2: &ScatterCoreset,
    options: &CspOptions,
) -> Result<SpatialFilterBank> {
    if c1.channels() != c2.channels() {
        return Err(Error::Dimension {
            context: "csp_from_coresets",
            expected: c1.channels(),
            found: c2.channels(),
        });
    }
    if c1.is_empty() || c2.is_empty() {
        return Err(Error::EmptyInput("both class coresets need at least one sample".into()));
    }
    let r1 = c1.scatter() / c1.sample_count() as f64;
    match options.route {
        EigenRoute::DiagonalFastPath if c2.columns() == c2.channels() => diagonal_route(r1, c2, options),
        _ => solve_cholesky(r1, c2.scatter() / c2.sample_count() as f64, options),
    }
}

fn effective_ridge(options: &CspOptions, min_eig: f64, trace: f64) -> Result<f64> {
    if options.ridge < 0.0 || !options.ridge.is_finite() {
        return Err(Error::Spec(format!("ridge must be non-negative, got {}", options.ridge)));
    }
    let singular = min_eig <= SINGULAR_RATIO * trace;
    if options.ridge == 0.0 && singular && !options.auto_ridge {
        return Err(Error::SingularCovariance(format!(
            "class-2 covariance is singular (min eigenvalue {min_eig:e}, trace {trace:e}); set a positive ridge"
        )));
    }
    if options.ridge == 0.0 && singular {
        warn!(
            "class-2 covariance is near singular (min eigenvalue {min_eig:e}, trace {trace:e}); applying ridge {AUTO_RIDGE:e}"
        );
        return Ok(AUTO_RIDGE);
    }
    Ok(options.ridge)
}

fn add_ridge(r: &mut DMatrix<f64>, ridge: f64) {
    if ridge > 0.0 {
        let shift = ridge * r.trace() / r.nrows() as f64;
        for i in 0..r.nrows() {
            r[(i, i)] += shift;
        }
    }
}

fn solve_cholesky(mut r1: DMatrix<f64>, mut r2: DMatrix<f64>, options: &CspOptions) -> Result<SpatialFilterBank> {
    let d = r1.nrows();
    if d < 2 {
        return Err(Error::Spec("CSP needs at least two channels".into()));
    }
    let min_eig = r2.clone().symmetric_eigenvalues().min();
    let ridge = effective_ridge(options, min_eig, r2.trace())?;
    add_ridge(&mut r1, ridge);
    add_ridge(&mut r2, ridge);

    let singular = || {
        Error::SingularCovariance(format!(
            "class-2 covariance is not positive-definite (min eigenvalue {min_eig:e}, ridge {ridge:e}); try a positive ridge"
        ))
    };
    if !(r2.trace() > 0.0) {
        return Err(singular());
    }
    let chol = r2.cholesky().ok_or_else(singular)?;
    let l = chol.l();
    // M = L⁻¹ R₁ L⁻ᵀ
    let y = l.solve_lower_triangular(&r1).ok_or_else(singular)?;
    let mut m = l.solve_lower_triangular(&y.transpose()).ok_or_else(singular)?;
    symmetrize(&mut m);
    let eig = m.symmetric_eigen();
    let vectors = l.tr_solve_lower_triangular(&eig.eigenvectors).ok_or_else(singular)?;
    Ok(finish(eig.eigenvalues, vectors, options, ridge))
}

fn diagonal_route(mut r1: DMatrix<f64>, c2: &ScatterCoreset, options: &CspOptions) -> Result<SpatialFilterBank> {
    let d = r1.nrows();
    if d < 2 {
        return Err(Error::Spec("CSP needs at least two channels".into()));
    }
    let t2 = c2.sample_count() as f64;
    let basis = c2.basis();
    let norms: Vec<f64> = basis.column_iter().map(|c| c.norm()).collect();
    // a reduced basis already is U·S: read U and S off its columns
    let (u, sigma) = if c2.is_reduced() && norms.iter().all(|&n| n > 0.0) {
        let mut u = basis.into_owned();
        for (mut col, &n) in u.column_iter_mut().zip(&norms) {
            col /= n;
        }
        (u, DVector::from_vec(norms))
    } else {
        crate::linalg::thin_left_svd(basis)
    };

    let mut lambda2: DVector<f64> = sigma.map(|s| s * s / t2);
    let trace2 = lambda2.sum();
    let ridge = effective_ridge(options, lambda2.min(), trace2)?;
    add_ridge(&mut r1, ridge);
    if ridge > 0.0 {
        lambda2.add_scalar_mut(ridge * trace2 / d as f64);
    }
    if !(lambda2.min() > 0.0) {
        return Err(Error::SingularCovariance(format!(
            "class-2 coreset has a zero singular value (ridge {ridge:e}); try a positive ridge"
        )));
    }
    // W = U S⁻¹ so that Wᵀ R₂ W = I
    let mut w = u;
    for (mut col, l) in w.column_iter_mut().zip(lambda2.iter()) {
        col /= l.sqrt();
    }
    let mut m = w.transpose() * &r1 * &w;
    symmetrize(&mut m);
    let eig = m.symmetric_eigen();
    let vectors = &w * &eig.eigenvectors;
    Ok(finish(eig.eigenvalues, vectors, options, ridge))
}

/// Sort descending (ties by original index), normalise columns to unit
/// length and make each column's largest-magnitude entry positive.
fn finish(values: DVector<f64>, vectors: DMatrix<f64>, options: &CspOptions, ridge: f64) -> SpatialFilterBank {
    let d = values.len();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut filters = DMatrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = vectors.column(src).into_owned();
        col /= col.norm();
        if col[col.iamax()] < 0.0 {
            col.neg_mut();
        }
        filters.set_column(dst, &col);
    }
    SpatialFilterBank {
        filters,
        eigenvalues: DVector::from_iterator(d, order.iter().map(|&i| values[i])),
        per_side: options.per_side.clamp(1, d / 2),
        ridge_used: ridge,
    }
}

/// Log-variance features of the selected filters:
/// `fⱼ = ln(var(zⱼ) / Σₖ var(zₖ))` with `Z = W_selᵀ X` and population
/// variance.
pub fn extract_features(trial: DMatrixView<'_, f64>, bank: &SpatialFilterBank) -> Result<Vec<f64>> {
    if trial.nrows() != bank.channels() {
        return Err(Error::Dimension {
            context: "extract_features",
            expected: bank.channels(),
            found: trial.nrows(),
        });
    }
    if trial.ncols() < 2 {
        return Err(Error::DegenerateTrial("need at least two samples".into()));
    }
    let z = bank.selected_filters().transpose() * trial;
    let vars: Vec<f64> = z.row_iter().map(|r| r.variance()).collect();
    let total: f64 = vars.iter().sum();
    if !(total > 0.0 && total.is_finite()) || vars.iter().any(|&v| v <= 0.0) {
        return Err(Error::DegenerateTrial(format!(
            "projected variances {vars:?} cannot be log-normalised"
        )));
    }
    Ok(vars.iter().map(|v| (v / total).ln()).collect())
}

/// Streaming state: one coreset per class, filters
/// recomputed from the pair after every sample.
#[derive(Debug, Clone)]
pub struct CspStreamState {
    class_coresets: [ScatterCoreset; 2],
    options: CspOptions,
    last_filter_bank: Option<SpatialFilterBank>,
}

impl CspStreamState {
    pub fn new(d: usize, options: CspOptions) -> Result<Self> {
        Ok(CspStreamState {
            class_coresets: [ScatterCoreset::new(d)?, ScatterCoreset::new(d)?],
            options,
            last_filter_bank: None,
        })
    }

    pub fn coreset(&self, label: ClassLabel) -> &ScatterCoreset {
        &self.class_coresets[label.index()]
    }

    pub fn last_filter_bank(&self) -> Option<&SpatialFilterBank> {
        self.last_filter_bank.as_ref()
    }

    pub fn is_ready(&self) -> bool {
        self.class_coresets.iter().all(|c| !c.is_empty())
    }

    /// Route `x` to its class coreset without recomputing filters.
    pub fn push(&mut self, x: &[f64], label: ClassLabel) -> Result<()> {
        self.class_coresets[label.index()].append_sample(x)
    }

    pub fn compute(&mut self) -> Result<&SpatialFilterBank> {
        if !self.is_ready() {
            return Err(Error::NotReady("a class coreset is still empty".into()));
        }
        let bank = csp_from_coresets(&self.class_coresets[0], &self.class_coresets[1], &self.options)?;
        Ok(self.last_filter_bank.insert(bank))
    }

    /// Absorb one labelled sample and return the refreshed filters. The
    /// sample is kept even when the other class is still empty.
    pub fn update(&mut self, x: &[f64], label: ClassLabel) -> Result<&SpatialFilterBank> {
        self.push(x, label)?;
        self.compute()
    }

    /// Scalars held by both class coresets.
    pub fn resident_scalars(&self) -> usize {
        self.class_coresets.iter().map(ScatterCoreset::resident_scalars).sum()
    }
}
