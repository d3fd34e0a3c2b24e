//! Precomputation of the regularized reconstruction matrix and the
//! per-frame matrix-vector reconstruction.
//!
//! Two equivalent routes produce the matrix P that maps a measurement vector
//! back to an image:
//!
//! * the direct normal-equations form P = C^-1 M* (M C^-1 M*)^-1, where the
//!   criterion inverse C^-1 is applied row-wise in the Fourier domain and the
//!   k x k Gram system is solved by Cholesky factorization;
//! * the pseudoinverse form P = F*GF (M F*GF)^+, evaluated matrix-free with
//!   the circulant operator and a truncated-SVD pseudoinverse, which also
//!   tolerates rank-deficient measurement matrices.
//!
//! The direct form is the default: it is noticeably faster and the Gram
//! conditioning check catches rank deficiency up front. The plain
//! pseudoinverse baseline P = M* (M M*)^-1 is the same normal-equations path
//! with the filter replaced by the identity.
//!
//! Precomputation runs in f64; an f32 copy of P serves the real-time path.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::linalg;
use crate::sampling::MeasurementMatrix;
use crate::simulator::MeasurementVector;
use crate::spectral::{CirculantKernel, SpectralFilter};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

/// Gram condition estimate above which the direct path refuses to solve.
const CONDITION_LIMIT: f64 = 67_108_864.0; // 1/sqrt(f64 machine epsilon)
const POWER_ITERATIONS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    FdriDirect,
    FdriSvd,
    Pinv,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::FdriDirect => "fdri-direct",
            Method::FdriSvd => "fdri-svd",
            Method::Pinv => "pinv",
        }
    }

    /// Right-inverse tolerance recorded with matrices produced by this
    /// method; `verify` checks against it.
    pub fn tolerance(&self) -> f64 {
        match self {
            Method::FdriDirect | Method::FdriSvd => 1e-8,
            Method::Pinv => 1e-10,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fdri-direct" => Ok(Method::FdriDirect),
            "fdri-svd" => Ok(Method::FdriSvd),
            "pinv" => Ok(Method::Pinv),
            other => Err(Error::invalid(format!(
                "unknown method '{other}' (expected fdri-direct, fdri-svd or pinv)"
            ))),
        }
    }
}

/// Floating-point width of a stored reconstruction matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    pub fn as_str(&self) -> &'static str {
        match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        }
    }
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(Error::invalid(format!("unknown precision '{other}'"))),
        }
    }
}

/// Binds a reconstruction matrix to the measurement matrix and filter
/// parameters it was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub m_digest: String,
    pub mu: Option<f64>,
    pub eps: Option<f64>,
    pub precision: Precision,
}

/// The n x k matrix P applied per frame as x0 = P y. Entries are row-major.
#[derive(Debug, Clone)]
pub struct ReconstructionMatrix {
    n: usize,
    k: usize,
    width: usize,
    height: usize,
    entries: Vec<f64>,
    method: Method,
    provenance: Provenance,
}

impl ReconstructionMatrix {
    pub fn new(
        width: usize,
        height: usize,
        k: usize,
        entries: Vec<f64>,
        method: Method,
        provenance: Provenance,
    ) -> Result<Self> {
        let n = width * height;
        if n == 0 || k == 0 {
            return Err(Error::invalid("reconstruction matrix dimensions must be positive"));
        }
        if entries.len() != n * k {
            return Err(Error::invalid(format!(
                "entry count {} does not match n*k = {}",
                entries.len(),
                n * k
            )));
        }
        Ok(ReconstructionMatrix { n, k, width, height, entries, method, provenance })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// P y without the MeasurementVector wrapper.
    pub fn apply(&self, y: &[f64]) -> Result<Image> {
        if y.len() != self.k {
            return Err(Error::invalid(format!(
                "measurement length {} does not match k = {}",
                y.len(),
                self.k
            )));
        }
        let x = linalg::matvec_f64(self.n, self.k, &self.entries, y);
        Image::new(self.width, self.height, x)
    }

    /// Single-precision copy for the real-time path.
    pub fn to_f32(&self) -> ReconstructionMatrixF32 {
        ReconstructionMatrixF32 {
            n: self.n,
            k: self.k,
            width: self.width,
            height: self.height,
            entries: self.entries.iter().map(|&v| v as f32).collect(),
            method: self.method,
            provenance: Provenance { precision: Precision::F32, ..self.provenance.clone() },
        }
    }
}

/// Single-precision reconstruction matrix (row-major n x k).
#[derive(Debug, Clone)]
pub struct ReconstructionMatrixF32 {
    n: usize,
    k: usize,
    width: usize,
    height: usize,
    entries: Vec<f32>,
    method: Method,
    provenance: Provenance,
}

impl ReconstructionMatrixF32 {
    pub fn new(
        width: usize,
        height: usize,
        k: usize,
        entries: Vec<f32>,
        method: Method,
        provenance: Provenance,
    ) -> Result<Self> {
        let n = width * height;
        if n == 0 || k == 0 || entries.len() != n * k {
            return Err(Error::invalid("bad f32 reconstruction matrix dimensions"));
        }
        Ok(ReconstructionMatrixF32 { n, k, width, height, entries, method, provenance })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn entries(&self) -> &[f32] {
        &self.entries
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn apply_f32(&self, y: &[f32]) -> Result<Vec<f32>> {
        if y.len() != self.k {
            return Err(Error::invalid("measurement length does not match k"));
        }
        Ok(linalg::matvec_f32(self.n, self.k, &self.entries, y))
    }

    pub fn apply(&self, y: &[f64]) -> Result<Image> {
        let y32: Vec<f32> = y.iter().map(|&v| v as f32).collect();
        let x = self.apply_f32(&y32)?;
        Image::new(self.width, self.height, x.into_iter().map(f64::from).collect())
    }
}

/// Reconstructs the image x0 = P y at the matrix's native resolution.
/// No clipping is applied; values may leave [0, 1].
pub fn reconstruct(p: &ReconstructionMatrix, y: &MeasurementVector) -> Result<Image> {
    p.apply(y.values())
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTime {
    pub name: &'static str,
    pub ms: f64,
}

/// Timing and conditioning record of one precomputation.
#[derive(Debug, Clone, Serialize)]
pub struct PrecomputeReport {
    pub stages: Vec<StageTime>,
    pub condition_estimate: f64,
    pub solver: String,
    pub regularization: Option<String>,
}

impl PrecomputeReport {
    pub fn total_ms(&self) -> f64 {
        self.stages.iter().map(|s| s.ms).sum()
    }
}

/// Controls the column-block streaming of the filtered matrix during the
/// direct precompute. `memory_budget` bounds the bytes held for the filtered
/// copy of M; `None` keeps it resident.
#[derive(Debug, Clone, Default)]
pub struct PrecomputeConfig {
    pub memory_budget: Option<u64>,
}

struct Timer {
    stages: Vec<StageTime>,
    last: Instant,
}

impl Timer {
    fn new() -> Self {
        Timer { stages: Vec::new(), last: Instant::now() }
    }

    fn stage(&mut self, name: &'static str) {
        let now = Instant::now();
        self.stages.push(StageTime { name, ms: now.duration_since(self.last).as_secs_f64() * 1e3 });
        self.last = now;
    }
}

fn check_filter_matches(m: &MeasurementMatrix, filter: &SpectralFilter) -> Result<()> {
    if filter.width() != m.width() || filter.height() != m.height() {
        return Err(Error::invalid(format!(
            "filter grid {}x{} does not match measurement resolution {}x{}",
            filter.width(),
            filter.height(),
            m.width(),
            m.height()
        )));
    }
    Ok(())
}

/// Filtered copies of a row block of M, packed as the column-major (n x b)
/// block of B = C^-1 M* (equivalently of M* itself when `kernel` is None).
fn filtered_block(
    m: &MeasurementMatrix,
    kernel: Option<&CirculantKernel>,
    start: usize,
    count: usize,
) -> Result<DMatrix<f64>> {
    let n = m.n();
    let mut buf = vec![0.0f64; count * n];
    buf.par_chunks_mut(n).enumerate().try_for_each(|(j, out)| -> Result<()> {
        let row = m.row(start + j);
        match kernel {
            Some(k) => out.copy_from_slice(&k.apply_slice(row)?),
            None => out.copy_from_slice(row),
        }
        Ok(())
    })?;
    // Row-major (count x n) reinterpreted column-major is exactly the
    // (n x count) block of B.
    Ok(DMatrix::from_vec(n, count, buf))
}

/// Largest-eigenvalue estimate by power iteration (deterministic start).
fn lambda_max(g: &DMatrix<f64>) -> f64 {
    let k = g.nrows();
    let mut v = DVector::from_element(k, 1.0 / (k as f64).sqrt());
    for _ in 0..POWER_ITERATIONS {
        v = g * &v;
        let norm = v.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v /= norm;
    }
    v.dot(&(g * &v))
}

/// Smallest-eigenvalue estimate by inverse iteration through the Cholesky
/// factor, with the Rayleigh quotient taken on the original matrix.
fn lambda_min(g: &DMatrix<f64>, chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>) -> f64 {
    let k = g.nrows();
    let mut v = DVector::from_element(k, 1.0 / (k as f64).sqrt());
    for _ in 0..POWER_ITERATIONS {
        v = chol.solve(&v);
        let norm = v.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v /= norm;
    }
    v.dot(&(g * &v))
}

/// Shared normal-equations path: P = B (M B)^-1 with B = C^-1 M* for the
/// regularized method and B = M* for the plain pseudoinverse.
fn normal_equations(
    m: &MeasurementMatrix,
    kernel: Option<&CirculantKernel>,
    method: Method,
    provenance: Provenance,
    config: &PrecomputeConfig,
) -> Result<(ReconstructionMatrix, PrecomputeReport)> {
    let k = m.k();
    let n = m.n();
    let mut timer = Timer::new();

    // M^T viewed column-major costs one copy of the entries.
    let mt = DMatrix::from_vec(n, k, m.entries().to_vec());

    let block_rows = match config.memory_budget {
        None => k,
        Some(bytes) => ((bytes as usize) / (8 * n)).clamp(1, k),
    };

    let mut resident: Option<DMatrix<f64>> = None;
    let mut g = DMatrix::<f64>::zeros(k, k);
    let mut start = 0;
    while start < k {
        let count = block_rows.min(k - start);
        let block = filtered_block(m, kernel, start, count)?;
        g.columns_mut(start, count).gemm_tr(1.0, &mt, &block, 0.0);
        if block_rows == k {
            resident = Some(block);
        }
        start += count;
    }
    // Symmetrize: G = M C^-1 M* is symmetric up to rounding.
    for i in 0..k {
        for j in (i + 1)..k {
            let avg = 0.5 * (g[(i, j)] + g[(j, i)]);
            g[(i, j)] = avg;
            g[(j, i)] = avg;
        }
    }
    timer.stage("filter+gram");

    let mut regularization = None;
    let chol = match nalgebra::Cholesky::new(g.clone()) {
        Some(c) => c,
        None => {
            // Retry once with diagonal jitter; the conditioning check below
            // still rejects genuinely singular systems.
            let jitter = 1e-10 * g.trace() / k as f64;
            let mut gj = g.clone();
            for i in 0..k {
                gj[(i, i)] += jitter;
            }
            regularization = Some(format!("diagonal jitter {jitter:.3e} after factorization failure"));
            nalgebra::Cholesky::new(gj).ok_or_else(|| Error::RankDeficient {
                condition: f64::INFINITY,
                detail: "Gram matrix is not positive definite even with diagonal jitter".to_string(),
            })?
        }
    };
    let l_max = lambda_max(&g);
    let l_min = lambda_min(&g, &chol);
    if l_min <= 0.0 || !l_min.is_finite() {
        return Err(Error::RankDeficient {
            condition: f64::INFINITY,
            detail: "Gram matrix has a non-positive smallest eigenvalue; measurement rows are linearly dependent".to_string(),
        });
    }
    let condition = (l_max / l_min).max(1.0);
    if condition > CONDITION_LIMIT {
        return Err(Error::RankDeficient {
            condition,
            detail: format!(
                "Gram condition estimate {condition:.3e} exceeds limit {CONDITION_LIMIT:.3e}; measurement rows are (nearly) linearly dependent"
            ),
        });
    }
    let x = chol.inverse();
    timer.stage("factor+invert");

    // P = B X, accumulated over the same row blocks.
    let mut p_dm = DMatrix::<f64>::zeros(n, k);
    match resident {
        Some(block) => p_dm.gemm(1.0, &block, &x, 0.0),
        None => {
            let mut start = 0;
            while start < k {
                let count = block_rows.min(k - start);
                let block = filtered_block(m, kernel, start, count)?;
                p_dm.gemm(1.0, &block, &x.rows(start, count), 1.0);
                start += count;
            }
        }
    }
    // Transposing the column-major (n x k) product yields row-major storage.
    let entries = p_dm.transpose().as_slice().to_vec();
    timer.stage("assemble");

    let report = PrecomputeReport {
        stages: timer.stages,
        condition_estimate: condition,
        solver: format!(
            "cholesky normal equations, {} row blocks of {}",
            k.div_ceil(block_rows),
            block_rows
        ),
        regularization,
    };
    let matrix = ReconstructionMatrix::new(m.width(), m.height(), k, entries, method, provenance)?;
    Ok((matrix, report))
}

/// Direct precomputation of the regularized reconstruction matrix:
/// P = C^-1 M* (M C^-1 M*)^-1. Requires linearly independent measurement
/// rows, enforced through the Gram condition estimate.
pub fn precompute_fdri_direct(
    m: &MeasurementMatrix,
    filter: &SpectralFilter,
) -> Result<(ReconstructionMatrix, PrecomputeReport)> {
    precompute_fdri_direct_with(m, filter, &PrecomputeConfig::default())
}

pub fn precompute_fdri_direct_with(
    m: &MeasurementMatrix,
    filter: &SpectralFilter,
    config: &PrecomputeConfig,
) -> Result<(ReconstructionMatrix, PrecomputeReport)> {
    check_filter_matches(m, filter)?;
    let kernel = CirculantKernel::new(filter, -2)?;
    let provenance = Provenance {
        m_digest: m.digest(),
        mu: Some(filter.mu()),
        eps: Some(filter.eps()),
        precision: Precision::F64,
    };
    normal_equations(m, Some(&kernel), Method::FdriDirect, provenance, config)
}

/// Pseudoinverse-form precomputation: P = F*GF (M F*GF)^+ with the
/// pseudoinverse computed by truncated SVD. Tolerates rank-deficient M.
pub fn precompute_fdri_svd(
    m: &MeasurementMatrix,
    filter: &SpectralFilter,
) -> Result<(ReconstructionMatrix, PrecomputeReport)> {
    check_filter_matches(m, filter)?;
    let kernel = CirculantKernel::new(filter, 1)?;
    let k = m.k();
    let n = m.n();
    let mut timer = Timer::new();

    // A^T = (M F*GF)^T, column-major (n x k); the operator is symmetric so
    // row i of A is the filtered row i of M.
    let at = filtered_block(m, Some(&kernel), 0, k)?;
    timer.stage("filter");

    let svd = at.transpose().svd(true, true);
    let u = svd.u.as_ref().expect("svd requested u");
    let v_t = svd.v_t.as_ref().expect("svd requested v_t");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().cloned().fold(0.0, f64::max);
    if sigma_max == 0.0 {
        return Err(Error::RankDeficient {
            condition: f64::INFINITY,
            detail: "filtered measurement matrix is zero".to_string(),
        });
    }
    // Conventional cutoff: max(k, n) * machine epsilon * largest singular value.
    let cutoff = k.max(n) as f64 * f64::EPSILON * sigma_max;
    let rank = sigma.iter().filter(|&&s| s > cutoff).count();
    let sigma_min_kept = sigma.iter().cloned().filter(|&s| s > cutoff).fold(f64::MAX, f64::min);
    timer.stage("svd");

    // A^+ = V_r diag(1/sigma_r) U_r^T, assembled as (n x k).
    let mut w = v_t.rows(0, rank).transpose();
    for (r, mut col) in w.column_iter_mut().enumerate() {
        col /= sigma[r];
    }
    let mut pinv = DMatrix::<f64>::zeros(n, k);
    pinv.gemm(1.0, &w, &u.columns(0, rank).transpose(), 0.0);

    // P = F*GF A^+: filter each column in place (columns are contiguous).
    for mut col in pinv.column_iter_mut() {
        let filtered = kernel.apply_slice(col.as_slice())?;
        col.copy_from_slice(&filtered);
    }
    let entries = pinv.transpose().as_slice().to_vec();
    timer.stage("assemble");

    let report = PrecomputeReport {
        stages: timer.stages,
        condition_estimate: (sigma_max / sigma_min_kept).max(1.0),
        solver: format!("truncated svd, rank {rank} of {k}, cutoff {cutoff:.3e}"),
        regularization: if rank < k {
            Some(format!("{} singular values below cutoff treated as zero", k - rank))
        } else {
            None
        },
    };
    let provenance = Provenance {
        m_digest: m.digest(),
        mu: Some(filter.mu()),
        eps: Some(filter.eps()),
        precision: Precision::F64,
    };
    let matrix =
        ReconstructionMatrix::new(m.width(), m.height(), k, entries, Method::FdriSvd, provenance)?;
    Ok((matrix, report))
}

/// Plain pseudoinverse baseline: the minimal-Euclidean-norm right inverse
/// M* (M M*)^-1 for full row rank, falling back to a truncated-SVD
/// pseudoinverse when the rows are linearly dependent.
pub fn precompute_pinv(m: &MeasurementMatrix) -> Result<(ReconstructionMatrix, PrecomputeReport)> {
    let provenance = Provenance {
        m_digest: m.digest(),
        mu: None,
        eps: None,
        precision: Precision::F64,
    };
    match normal_equations(m, None, Method::Pinv, provenance.clone(), &PrecomputeConfig::default()) {
        Ok(out) => Ok(out),
        Err(Error::RankDeficient { .. }) => pinv_svd_fallback(m, provenance),
        Err(e) => Err(e),
    }
}

fn pinv_svd_fallback(
    m: &MeasurementMatrix,
    provenance: Provenance,
) -> Result<(ReconstructionMatrix, PrecomputeReport)> {
    let k = m.k();
    let n = m.n();
    let mut timer = Timer::new();
    let m_dm = DMatrix::from_row_slice(k, n, m.entries());
    let svd = m_dm.svd(true, true);
    let u = svd.u.as_ref().expect("svd requested u");
    let v_t = svd.v_t.as_ref().expect("svd requested v_t");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().cloned().fold(0.0, f64::max);
    if sigma_max == 0.0 {
        return Err(Error::RankDeficient {
            condition: f64::INFINITY,
            detail: "measurement matrix is zero".to_string(),
        });
    }
    let cutoff = k.max(n) as f64 * f64::EPSILON * sigma_max;
    let rank = sigma.iter().filter(|&&s| s > cutoff).count();
    let sigma_min_kept = sigma.iter().cloned().filter(|&s| s > cutoff).fold(f64::MAX, f64::min);
    let mut w = v_t.rows(0, rank).transpose();
    for (r, mut col) in w.column_iter_mut().enumerate() {
        col /= sigma[r];
    }
    let mut pinv = DMatrix::<f64>::zeros(n, k);
    pinv.gemm(1.0, &w, &u.columns(0, rank).transpose(), 0.0);
    let entries = pinv.transpose().as_slice().to_vec();
    timer.stage("svd-pseudoinverse");
    let report = PrecomputeReport {
        stages: timer.stages,
        condition_estimate: (sigma_max / sigma_min_kept).max(1.0),
        solver: format!("truncated svd fallback, rank {rank} of {k}"),
        regularization: Some(format!("{} singular values below {cutoff:.3e} treated as zero", k - rank)),
    };
    let matrix =
        ReconstructionMatrix::new(m.width(), m.height(), k, entries, Method::Pinv, provenance)?;
    Ok((matrix, report))
}

/// max_ij |M P - I| over the k x k product, the right-inverse residual.
pub fn right_inverse_error(m: &MeasurementMatrix, p: &ReconstructionMatrix) -> Result<f64> {
    if m.k() != p.k() || m.n() != p.n() {
        return Err(Error::invalid("measurement and reconstruction shapes do not match"));
    }
    let k = m.k();
    let n = m.n();
    let err = (0..k)
        .into_par_iter()
        .map(|i| {
            let row = m.row(i);
            let mut worst = 0.0f64;
            for j in 0..k {
                // column j of P, strided over row-major storage
                let mut acc = 0.0;
                for (a, &r) in row.iter().enumerate() {
                    acc += r * p.entries()[a * k + j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((acc - target).abs());
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    Ok(err)
}

/// Relative Frobenius distance ||A - B|| / ||A|| between two reconstruction
/// matrices of identical shape.
pub fn relative_frobenius_distance(a: &ReconstructionMatrix, b: &ReconstructionMatrix) -> Result<f64> {
    if a.n() != b.n() || a.k() != b.k() {
        return Err(Error::invalid("reconstruction matrices have different shapes"));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in a.entries().iter().zip(b.entries()) {
        num += (x - y) * (x - y);
        den += x * x;
    }
    if den == 0.0 {
        return Err(Error::invalid("reference matrix is zero"));
    }
    Ok((num / den).sqrt())
}
