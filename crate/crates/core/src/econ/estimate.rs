//! Fixed-effects OLS and 2SLS with cluster-robust covariance.

use std::fmt;

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::data::{Dataset, FeDim};
use super::demean::{demean, dummy_rank, Groups};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    /// ln(1 + y)
    Log1p,
    Level,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionSpec {
    pub outcome: String,
    pub regressor: String,
    pub controls: Vec<String>,
    pub fe: Vec<FeDim>,
    pub cluster: FeDim,
    pub transform: Transform,
    pub tol: f64,
    pub max_iter: usize,
}

pub const DEFAULT_CONTROLS: [&str; 4] = ["log_assets", "roa", "leverage", "rnd_intensity"];

impl RegressionSpec {
    /// Firm, occupation and year effects, firm clusters, log(1 + y) outcome
    /// and the four firm controls.
    pub fn new(outcome: &str, regressor: &str) -> Self {
        RegressionSpec {
            outcome: outcome.into(),
            regressor: regressor.into(),
            controls: DEFAULT_CONTROLS.iter().map(|s| s.to_string()).collect(),
            fe: vec![FeDim::Firm, FeDim::Occupation, FeDim::Year],
            cluster: FeDim::Firm,
            transform: Transform::Log1p,
            tol: 1e-8,
            max_iter: 500,
        }
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(serde_json::to_string(self).expect("spec serializes").as_bytes());
        format!("{digest:x}")[..16].to_string()
    }

    fn regressors(&self) -> Vec<String> {
        std::iter::once(self.regressor.clone()).chain(self.controls.iter().cloned()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ols,
    Tsls,
    FirstStage,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ols => "ols",
            Method::Tsls => "2sls",
            Method::FirstStage => "first_stage",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub method: Method,
    pub outcome: String,
    pub transform: Transform,
    pub names: Vec<String>,
    pub coef: Vec<f64>,
    pub se: Vec<f64>,
    pub n: usize,
    pub clusters: usize,
    pub dropped: usize,
    pub k: usize,
    pub r2: f64,
    pub adj_r2: f64,
    pub first_stage_f: Option<f64>,
    pub first_stage_coef: Option<f64>,
    pub weak_instrument: bool,
    pub iterations: usize,
    pub fe_dims: Vec<FeDim>,
    pub cluster_dim: FeDim,
    pub spec_hash: String,
}

impl EstimateResult {
    pub fn coefficient(&self, name: &str) -> Option<(f64, f64)> {
        let i = self.names.iter().position(|n| n == name)?;
        Some((self.coef[i], self.se[i]))
    }

    /// Coefficient and standard error of the first regressor.
    pub fn main(&self) -> (f64, f64) {
        (self.coef[0], self.se[0])
    }
}

impl fmt::Display for EstimateResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "method={}", self.method.name())?;
        writeln!(f, "outcome={}", self.outcome)?;
        let t = match self.transform {
            Transform::Log1p => "log1p",
            Transform::Level => "level",
        };
        writeln!(f, "transform={t}")?;
        for ((name, b), s) in self.names.iter().zip(&self.coef).zip(&self.se) {
            writeln!(f, "coef.{name}={b}")?;
            writeln!(f, "se.{name}={s}")?;
            writeln!(f, "t.{name}={}", b / s)?;
        }
        writeln!(f, "n={}", self.n)?;
        writeln!(f, "dropped={}", self.dropped)?;
        writeln!(f, "clusters={}", self.clusters)?;
        writeln!(f, "r2={}", self.r2)?;
        writeln!(f, "adj_r2={}", self.adj_r2)?;
        match self.first_stage_f {
            Some(v) => writeln!(f, "first_stage_f={v}")?,
            None => writeln!(f, "first_stage_f=na")?,
        }
        if let Some(v) = self.first_stage_coef {
            writeln!(f, "first_stage_coef={v}")?;
        }
        writeln!(f, "weak_instrument={}", self.weak_instrument)?;
        let fe: Vec<&str> = self.fe_dims.iter().map(|d| d.name()).collect();
        writeln!(f, "fe_dims={}", fe.join(","))?;
        writeln!(f, "cluster_dim={}", self.cluster_dim.name())?;
        writeln!(f, "demean_iterations={}", self.iterations)?;
        writeln!(f, "spec_hash={}", self.spec_hash)
    }
}

struct Prepared {
    /// outcome, then regressors, then any extra columns, all demeaned
    cols: Vec<Vec<f64>>,
    raw_sst: f64,
    raw_norms: Vec<f64>,
    cluster: Groups,
    n: usize,
    dropped: usize,
    k_fe: usize,
    iterations: usize,
}

fn prepare(data: &Dataset, spec: &RegressionSpec, extra: &[&str]) -> Result<Prepared> {
    if spec.fe.is_empty() {
        return Err(Error::invalid("at least one fixed-effect dimension is required"));
    }
    let regs = spec.regressors();
    let mut names: Vec<&str> = vec![spec.outcome.as_str()];
    names.extend(regs.iter().map(String::as_str));
    names.extend_from_slice(extra);
    let rows = data.complete_rows(&names)?;
    let dropped = data.len() - rows.len();
    if dropped > 0 {
        warn!("dropped {dropped} rows with missing values");
    }
    let sub = data.subset(&rows);
    let n = sub.len();
    let mut cols: Vec<Vec<f64>> = names.iter().map(|c| sub.column(c).map(<[f64]>::to_vec)).collect::<Result<_>>()?;
    if spec.transform == Transform::Log1p {
        if cols[0].iter().any(|v| *v <= -1.0) {
            return Err(Error::invalid(format!("log(1 + y) undefined for `{}`", spec.outcome)));
        }
        cols[0].iter_mut().for_each(|v| *v = v.ln_1p());
    }
    let cluster = sub.codes(spec.cluster);
    if cluster.1 < 2 {
        return Err(Error::invalid("cluster-robust inference needs at least two clusters"));
    }
    let mean = cols[0].iter().sum::<f64>() / n as f64;
    let raw_sst = cols[0].iter().map(|v| (v - mean).powi(2)).sum();
    let raw_norms = cols.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
    let groups: Vec<Groups> = spec.fe.iter().map(|d| sub.codes(*d)).collect();
    let iterations = demean(&mut cols, &groups, spec.tol, spec.max_iter)?;
    Ok(Prepared {
        cols,
        raw_sst,
        raw_norms,
        cluster,
        n,
        dropped,
        k_fe: dummy_rank(&groups),
        iterations,
    })
}

fn design(cols: &[&[f64]]) -> DMatrix<f64> {
    let n = cols[0].len();
    DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i])
}

/// Inverse of X'X after checking that no column is (numerically) spanned by
/// the earlier ones or absorbed by the fixed effects.
fn checked_inverse(x: &DMatrix<f64>, names: &[String], raw_norms: &[f64]) -> Result<DMatrix<f64>> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for j in 0..x.ncols() {
        let mut v = x.column(j).into_owned();
        for q in &basis {
            let c = q.dot(&v);
            v.axpy(-c, q, 1.0);
        }
        let norm2 = v.norm_squared();
        if norm2 <= 1e-10 * raw_norms[j].max(f64::MIN_POSITIVE) {
            let what = if basis.is_empty() || x.column(j).norm_squared() <= 1e-10 * raw_norms[j] {
                format!("`{}` is absorbed by the fixed effects", names[j])
            } else {
                format!("`{}` is a linear combination of {}", names[j], names[..j].join(", "))
            };
            return Err(Error::Collinear(what));
        }
        basis.push(v / norm2.sqrt());
    }
    (x.transpose() * x)
        .try_inverse()
        .ok_or_else(|| Error::Collinear(format!("singular normal equations over {}", names.join(", "))))
}

/// CR1 sandwich: bread * meat * bread scaled by G/(G-1) * (N-1)/(N-K).
fn cluster_vcov(x: &DMatrix<f64>, resid: &[f64], bread: &DMatrix<f64>, cluster: &Groups, k: usize) -> DMatrix<f64> {
    let p = x.ncols();
    let mut scores = DMatrix::<f64>::zeros(cluster.1, p);
    for (i, &g) in cluster.0.iter().enumerate() {
        for j in 0..p {
            scores[(g, j)] += x[(i, j)] * resid[i];
        }
    }
    let meat = scores.transpose() * &scores;
    let n = x.nrows() as f64;
    let g = cluster.1 as f64;
    let factor = g / (g - 1.0) * (n - 1.0) / (n - k as f64);
    bread * meat * bread * factor
}

fn r2_pair(ssr: f64, sst: f64, n: usize, k: usize) -> (f64, f64) {
    if sst <= 0.0 {
        return (0.0, 0.0);
    }
    let r2 = 1.0 - ssr / sst;
    (r2, 1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n as f64 - k as f64))
}

fn check_dof(n: usize, k: usize) -> Result<()> {
    if n <= k {
        return Err(Error::invalid(format!("{n} observations for {k} parameters")));
    }
    Ok(())
}

/// OLS of the (transformed) outcome on the regressor and controls with
/// fixed effects absorbed, clustered standard errors.
pub fn ols_fe(data: &Dataset, spec: &RegressionSpec) -> Result<EstimateResult> {
    let prep = prepare(data, spec, &[])?;
    let names = spec.regressors();
    let xcols: Vec<&[f64]> = prep.cols[1..].iter().map(Vec::as_slice).collect();
    let x = design(&xcols);
    let y = DVector::from_column_slice(&prep.cols[0]);
    let bread = checked_inverse(&x, &names, &prep.raw_norms[1..])?;
    let beta = &bread * (x.transpose() * &y);
    let resid: Vec<f64> = (&y - &x * &beta).iter().copied().collect();
    let k = names.len() + prep.k_fe;
    check_dof(prep.n, k)?;
    let v = cluster_vcov(&x, &resid, &bread, &prep.cluster, k);
    let ssr: f64 = resid.iter().map(|e| e * e).sum();
    let (r2, adj_r2) = r2_pair(ssr, prep.raw_sst, prep.n, k);
    Ok(EstimateResult {
        method: Method::Ols,
        outcome: spec.outcome.clone(),
        transform: spec.transform,
        coef: beta.iter().copied().collect(),
        se: (0..names.len()).map(|j| v[(j, j)].sqrt()).collect(),
        names,
        n: prep.n,
        clusters: prep.cluster.1,
        dropped: prep.dropped,
        k,
        r2,
        adj_r2,
        first_stage_f: None,
        first_stage_coef: None,
        weak_instrument: false,
        iterations: prep.iterations,
        fe_dims: spec.fe.clone(),
        cluster_dim: spec.cluster,
        spec_hash: spec.hash(),
    })
}

/// Two-stage least squares with `instrument` as the excluded instrument for
/// the regressor. The first-stage F is the clustered Wald statistic on the
/// instrument.
pub fn tsls(data: &Dataset, spec: &RegressionSpec, instrument: &str) -> Result<EstimateResult> {
    let prep = prepare(data, spec, &[instrument])?;
    let names = spec.regressors();
    let p = names.len();
    let z = prep.cols[p + 1].as_slice();
    let controls: Vec<&[f64]> = prep.cols[2..=p].iter().map(Vec::as_slice).collect();
    let k = p + prep.k_fe;
    check_dof(prep.n, k)?;

    // first stage
    let mut fs_cols = vec![z];
    fs_cols.extend(&controls);
    let fs_x = design(&fs_cols);
    let mut fs_names = vec![instrument.to_string()];
    fs_names.extend(spec.controls.iter().cloned());
    let mut fs_norms = vec![prep.raw_norms[p + 1]];
    fs_norms.extend_from_slice(&prep.raw_norms[2..=p]);
    let fs_bread = checked_inverse(&fs_x, &fs_names, &fs_norms)?;
    let endog = DVector::from_column_slice(&prep.cols[1]);
    let pi = &fs_bread * (fs_x.transpose() * &endog);
    let fitted = &fs_x * &pi;
    let fs_resid: Vec<f64> = (&endog - &fitted).iter().copied().collect();
    let fs_v = cluster_vcov(&fs_x, &fs_resid, &fs_bread, &prep.cluster, k);
    let first_f = pi[0] * pi[0] / fs_v[(0, 0)];
    let weak = !(first_f >= 1e-6);
    if weak {
        warn!("first-stage F = {first_f:e}: instrument `{instrument}` has no relevance");
    }

    // second stage on fitted values; residuals use the observed regressor
    let mut ss_cols = vec![fitted.as_slice()];
    ss_cols.extend(&controls);
    let xhat = design(&ss_cols);
    let bread = checked_inverse(&xhat, &names, &prep.raw_norms[1..=p])?;
    let y = DVector::from_column_slice(&prep.cols[0]);
    let beta = &bread * (xhat.transpose() * &y);
    let xcols: Vec<&[f64]> = prep.cols[1..=p].iter().map(Vec::as_slice).collect();
    let x = design(&xcols);
    let resid: Vec<f64> = (&y - &x * &beta).iter().copied().collect();
    let v = cluster_vcov(&xhat, &resid, &bread, &prep.cluster, k);
    let ssr: f64 = resid.iter().map(|e| e * e).sum();
    let (r2, adj_r2) = r2_pair(ssr, prep.raw_sst, prep.n, k);
    Ok(EstimateResult {
        method: Method::Tsls,
        outcome: spec.outcome.clone(),
        transform: spec.transform,
        coef: beta.iter().copied().collect(),
        se: (0..p).map(|j| v[(j, j)].sqrt()).collect(),
        names,
        n: prep.n,
        clusters: prep.cluster.1,
        dropped: prep.dropped,
        k,
        r2,
        adj_r2,
        first_stage_f: Some(first_f),
        first_stage_coef: Some(pi[0]),
        weak_instrument: weak,
        iterations: prep.iterations,
        fe_dims: spec.fe.clone(),
        cluster_dim: spec.cluster,
        spec_hash: spec.hash(),
    })
}

/// Regression of the endogenous regressor on the instrument and controls,
/// reported as its own result (outcome = regressor, level scale).
pub fn first_stage(data: &Dataset, spec: &RegressionSpec, instrument: &str) -> Result<EstimateResult> {
    let fs_spec = RegressionSpec {
        outcome: spec.regressor.clone(),
        regressor: instrument.to_string(),
        transform: Transform::Level,
        ..spec.clone()
    };
    let mut r = ols_fe(data, &fs_spec)?;
    let (b, s) = r.main();
    r.method = Method::FirstStage;
    r.first_stage_f = Some((b / s).powi(2));
    r.first_stage_coef = Some(b);
    r.weak_instrument = !(b / s).powi(2).is_finite() || (b / s).powi(2) < 1e-6;
    Ok(r)
}
