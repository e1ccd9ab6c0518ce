//! Conditional-independence testing: Fisher-z on partial correlations, or a
//! d-separation oracle on a known DAG.

use std::path::Path;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{separation_connected, Dag};

/// Reciprocal condition number below which a principal submatrix is singular.
pub const SINGULAR_RCOND: f64 = 1e-12;

/// Samples in rows, variables in columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    values: DMatrix<f64>,
}

impl Dataset {
    pub fn new(names: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 {
            return Err(Error::TooFewSamples(0));
        }
        if names.len() != values.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} names for {} columns",
                names.len(),
                values.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse("dataset contains missing or non-finite values".into()));
        }
        Ok(Dataset { names, values })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }

    /// Dataset made of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n()) {
            return Err(Error::InvalidParameter(format!("row {bad} out of range")));
        }
        let values = DMatrix::from_fn(rows.len(), self.p(), |r, c| self.values[(rows[r], c)]);
        Dataset::new(self.names.clone(), values)
    }

    /// Hex SHA-256 over the names and the little-endian bytes of every value.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for name in &self.names {
            h.update(name.as_bytes());
            h.update([0u8]);
        }
        h.update((self.n() as u64).to_le_bytes());
        for r in 0..self.n() {
            for c in 0..self.p() {
                h.update(self.values[(r, c)].to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        Dataset::from_csv_reader(&mut rdr)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        Dataset::from_csv_reader(&mut rdr)
    }

    fn from_csv_reader<R: std::io::Read>(rdr: &mut csv::Reader<R>) -> Result<Self> {
        let names: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
        let mut flat = Vec::new();
        let mut rows = 0;
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != names.len() {
                return Err(Error::Parse(format!(
                    "row {} has {} fields, expected {}",
                    line + 2,
                    rec.len(),
                    names.len()
                )));
            }
            for field in rec.iter() {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::Parse(format!("row {}: '{field}' is not a number", line + 2))
                })?;
                flat.push(v);
            }
            rows += 1;
        }
        let values = DMatrix::from_row_slice(rows, names.len(), &flat);
        Dataset::new(names, values)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.names)?;
        let mut row = Vec::with_capacity(self.p());
        for r in 0..self.n() {
            row.clear();
            row.extend((0..self.p()).map(|c| self.values[(r, c)].to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Symmetric covariance matrix together with the sample size behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covariance {
    p: usize,
    n: usize,
    /// Row-major entries.
    values: Vec<f64>,
}

impl Covariance {
    pub fn from_matrix(m: &DMatrix<f64>, n: usize) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch("covariance must be square".into()));
        }
        let p = m.nrows();
        for i in 0..p {
            if m[(i, i)] < 0.0 {
                return Err(Error::InvalidParameter(format!("negative variance at {i}")));
            }
            for j in 0..i {
                let scale = 1.0 + m[(i, j)].abs().max(m[(j, i)].abs());
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-10 * scale {
                    return Err(Error::InvalidParameter("covariance is not symmetric".into()));
                }
            }
        }
        let values = (0..p * p).map(|k| m[(k / p, k % p)]).collect();
        Ok(Covariance { p, n, values })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p + j]
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.p, self.p, &self.values)
    }

    /// Persists the matrix as JSON tagged with `key` (typically a dataset hash).
    pub fn save_json(&self, path: impl AsRef<Path>, key: &str) -> Result<()> {
        let doc = CachedCovariance {
            key: key.to_string(),
            covariance: self.clone(),
        };
        std::fs::write(path, serde_json::to_string(&doc)?)?;
        Ok(())
    }

    /// Loads a cached matrix if the file exists and carries `key`.
    pub fn load_json(path: impl AsRef<Path>, key: &str) -> Result<Option<Self>> {
        let path = path.as_ref();
        if !path.exists() {
            return Ok(None);
        }
        let doc: CachedCovariance = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Ok((doc.key == key).then_some(doc.covariance))
    }
}

#[derive(Serialize, Deserialize)]
struct CachedCovariance {
    key: String,
    covariance: Covariance,
}

/// Maximum-likelihood covariance (divisor `n`) of the centered columns.
pub fn covariance(d: &Dataset) -> Result<Covariance> {
    let n = d.n();
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    let p = d.p();
    let x = d.values();
    let means: Vec<f64> = (0..p).map(|c| x.column(c).sum() / n as f64).collect();
    let centered = DMatrix::from_fn(n, p, |r, c| x[(r, c)] - means[c]);
    let mut m = centered.transpose() * &centered;
    m /= n as f64;
    // exact symmetry
    for i in 0..p {
        for j in 0..i {
            m[(i, j)] = m[(j, i)];
        }
    }
    Covariance::from_matrix(&m, n)
}

/// Partial correlation of `i` and `j` given `s`, read off the inverse of the
/// principal submatrix over `{i, j} ∪ s`.
pub fn partial_correlation(c: &Covariance, i: usize, j: usize, s: &[usize]) -> Result<f64> {
    let p = c.p();
    for &k in [i, j].iter().chain(s) {
        if k >= p {
            return Err(Error::InvalidNode { index: k, p });
        }
    }
    if i == j || s.contains(&i) || s.contains(&j) {
        return Err(Error::InvalidQuery(
            "partial correlation needs distinct endpoints outside the conditioning set".into(),
        ));
    }
    let idx: Vec<usize> = [i, j].into_iter().chain(s.iter().copied()).collect();
    let k = idx.len();
    let sub = DMatrix::from_fn(k, k, |a, b| c.get(idx[a], idx[b]));
    let eig = SymmetricEigen::new(sub);
    let lmax = eig.eigenvalues.max();
    let lmin = eig.eigenvalues.min();
    let rcond = if lmax > 0.0 { lmin / lmax } else { 0.0 };
    if !(rcond >= SINGULAR_RCOND) {
        return Err(Error::SingularSubmatrix { rcond });
    }
    let v = &eig.eigenvectors;
    let mut p00 = 0.0;
    let mut p01 = 0.0;
    let mut p11 = 0.0;
    for q in 0..k {
        let w = 1.0 / eig.eigenvalues[q];
        p00 += v[(0, q)] * v[(0, q)] * w;
        p01 += v[(0, q)] * v[(1, q)] * w;
        p11 += v[(1, q)] * v[(1, q)] * w;
    }
    Ok(-p01 / (p00 * p11).sqrt())
}

/// Upper tail `P(Z > z)` of the standard normal, via the complementary error function.
pub fn normal_upper_tail(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// Outcome of one conditional-independence test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiDecision {
    pub independent: bool,
    pub statistic: f64,
    pub p_value: f64,
    pub cond_size: usize,
    /// Set when the test could not be evaluated and defaulted to "dependent".
    pub singular: bool,
}

/// Fisher-z test of zero partial correlation. Independence iff `p_value > alpha`.
pub fn fisher_z_test(rho_hat: f64, n: usize, s_size: usize, alpha: f64) -> Result<CiDecision> {
    if n <= s_size + 3 {
        return Err(Error::InsufficientSample { n, s_size });
    }
    if !(rho_hat.abs() < 1.0) {
        return Err(Error::DegenerateCorrelation(rho_hat));
    }
    let statistic = ((n - s_size - 3) as f64).sqrt() * rho_hat.atanh();
    let p_value = (2.0 * normal_upper_tail(statistic.abs())).clamp(0.0, 1.0);
    Ok(CiDecision {
        independent: p_value > alpha,
        statistic,
        p_value,
        cond_size: s_size,
        singular: false,
    })
}

#[derive(Debug, Clone)]
pub enum CiBackend {
    Oracle(Dag),
    FisherZ(Covariance),
}

/// A conditional-independence tester that counts the tests it performs.
///
/// Safe to share across threads; the counters are atomic.
#[derive(Debug)]
pub struct CiTester {
    backend: CiBackend,
    count: AtomicU64,
    singular: AtomicU64,
}

impl CiTester {
    pub fn new(backend: CiBackend) -> Self {
        CiTester {
            backend,
            count: AtomicU64::new(0),
            singular: AtomicU64::new(0),
        }
    }

    pub fn oracle(dag: Dag) -> Self {
        CiTester::new(CiBackend::Oracle(dag))
    }

    pub fn fisher_z(cov: Covariance) -> Self {
        CiTester::new(CiBackend::FisherZ(cov))
    }

    pub fn from_dataset(d: &Dataset) -> Result<Self> {
        Ok(CiTester::fisher_z(covariance(d)?))
    }

    pub fn backend(&self) -> &CiBackend {
        &self.backend
    }

    pub fn p(&self) -> usize {
        match &self.backend {
            CiBackend::Oracle(g) => g.p(),
            CiBackend::FisherZ(c) => c.p(),
        }
    }

    pub fn is_oracle(&self) -> bool {
        matches!(self.backend, CiBackend::Oracle(_))
    }

    /// Number of tests executed so far.
    pub fn count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    /// Number of tests answered "dependent" because of a singular submatrix.
    pub fn singular_count(&self) -> u64 {
        self.singular.load(Ordering::Relaxed)
    }

    /// Tests `i ⊥ j | s` at level `alpha`.
    pub fn test(&self, i: usize, j: usize, s: &[usize], alpha: f64) -> Result<CiDecision> {
        self.count.fetch_add(1, Ordering::Relaxed);
        match &self.backend {
            CiBackend::Oracle(g) => {
                let p = g.p();
                for &k in [i, j].iter().chain(s) {
                    if k >= p {
                        return Err(Error::InvalidNode { index: k, p });
                    }
                }
                if i == j || s.contains(&i) || s.contains(&j) {
                    return Err(Error::InvalidQuery("malformed CI query".into()));
                }
                let independent = !separation_connected(g, i, j, s);
                Ok(CiDecision {
                    independent,
                    statistic: if independent { 0.0 } else { f64::INFINITY },
                    p_value: if independent { 1.0 } else { 0.0 },
                    cond_size: s.len(),
                    singular: false,
                })
            }
            CiBackend::FisherZ(c) => match partial_correlation(c, i, j, s) {
                Ok(rho) => fisher_z_test(rho, c.n(), s.len(), alpha),
                Err(Error::SingularSubmatrix { .. }) => {
                    self.singular.fetch_add(1, Ordering::Relaxed);
                    Ok(CiDecision {
                        independent: false,
                        statistic: f64::NAN,
                        p_value: 0.0,
                        cond_size: s.len(),
                        singular: true,
                    })
                }
                Err(e) => Err(e),
            },
        }
    }
}

/// Memoising front for a [`CiTester`]: each distinct `(i, j, S)` query is run
/// once, later queries (at any level) reuse the stored p-value. Only tests
/// actually run reach the tester's counter.
#[derive(Debug)]
pub struct CachedTester<'a> {
    tester: &'a CiTester,
    memo: Mutex<HashMap<(usize, usize, Vec<usize>), CiDecision>>,
}

impl<'a> CachedTester<'a> {
    pub fn new(tester: &'a CiTester) -> Self {
        CachedTester {
            tester,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn tester(&self) -> &'a CiTester {
        self.tester
    }

    pub fn p(&self) -> usize {
        self.tester.p()
    }

    pub fn test(&self, i: usize, j: usize, s: &[usize], alpha: f64) -> Result<CiDecision> {
        let mut sorted = s.to_vec();
        sorted.sort_unstable();
        let key = (i.min(j), i.max(j), sorted);
        if let Some(d) = self.memo.lock().expect("memo lock").get(&key) {
            let mut d = *d;
            d.independent = !d.singular && d.p_value > alpha;
            return Ok(d);
        }
        let d = self.tester.test(i, j, s, alpha)?;
        self.memo.lock().expect("memo lock").insert(key, d);
        Ok(d)
    }
}

/// Alias of [`CiTester::test`].
pub fn ci_test(t: &CiTester, i: usize, j: usize, s: &[usize], alpha: f64) -> Result<CiDecision> {
    t.test(i, j, s, alpha)
}
