//! Synthetic data generator, subspace discrepancy measures and a seeded
//! Monte Carlo harness.
//!
//! The generator draws
//!
//! ```text
//! y_t = Theta d_t + eta_t,   eta_t = L~ (f_t', eps_t')',   f_t = Phi f_{t-1} + u_t
//! ```
//!
//! with `Phi` diagonal (entries `U(0.2, 0.9)`), `Theta` and `L~` entries
//! `U(-2, 2)`, and standard Gaussian `u_t`, `eps_t`. Everything is redrawn
//! for every replication.
//!
//! # Random numbers
//!
//! Draws come from ChaCha8 (`rand_chacha`) seeded with a 64-bit value;
//! Gaussians use the ziggurat sampler of `rand_distr::StandardNormal` and
//! uniforms use `Rng::random_range`. Within one instance the draw order is
//! fixed: `Theta` row by row, then `L~` row by row (repeated on every
//! condition-number rejection), then the diagonal of `Phi`, then 200
//! burn-in steps of `u`, then for each `t = 1..T` the vector `u_t` followed
//! by `eps_t`.
//!
//! Replication `j` of grid cell `c` under master seed `S` uses
//! `splitmix64(splitmix64(splitmix64(S) ^ c) ^ j)`, so results do not depend
//! on the order or thread in which replications run.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::cca_factor::{self, FactorConfig};
use crate::detrend::{self, max_harmonics, OrderGrid, OrderSpec};
use crate::error::{Error, Result};
use crate::numerics::{self, DEFAULT_FLOOR_REL, RANK_TOL_REL};
use crate::panel::{self, TimePanel};

/// Burn-in steps for the factor process, discarded.
pub const BURN_IN: usize = 200;
/// Maximum condition number accepted for `L~`.
pub const MAX_CONDITION: f64 = 1e8;
/// Redraws of `L~` before giving up.
pub const MAX_REDRAWS: usize = 100;
/// Fraction of failed replications above which a cell is marked failed.
pub const MAX_FAILURE_RATE: f64 = 0.01;

const ORTHONORMAL_TOL: f64 = 1e-8;

/// The SplitMix64 output function applied to `x + golden gamma`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `rep` in cell `cell`.
pub fn replication_seed(master: u64, cell: u64, rep: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ cell) ^ rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DgpConfig {
    pub p: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub r: usize,
    pub k0: usize,
    pub d0: usize,
    pub s: usize,
    pub phi_range: (f64, f64),
    pub coef_range: (f64, f64),
    pub seed: u64,
}

impl Default for DgpConfig {
    fn default() -> Self {
        Self {
            p: 10,
            t: 500,
            r: 3,
            k0: 5,
            d0: 1,
            s: 30,
            phi_range: (0.2, 0.9),
            coef_range: (-2.0, 2.0),
            seed: 0,
        }
    }
}

impl DgpConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.p == 0 {
            return bad("p must be positive".into());
        }
        if self.r > self.p {
            return bad(format!("r = {} exceeds p = {}", self.r, self.p));
        }
        if self.t < 2 {
            return bad(format!("T must be at least 2, got {}", self.t));
        }
        if self.s < 2 {
            return bad(format!("period must be at least 2, got {}", self.s));
        }
        if self.k0 > max_harmonics(self.s) {
            return bad(format!(
                "k0 = {} exceeds {} for period {}",
                self.k0,
                max_harmonics(self.s),
                self.s
            ));
        }
        for (name, (lo, hi)) in [("phi_range", self.phi_range), ("coef_range", self.coef_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return bad(format!("{name} must be an ordered finite interval, got ({lo}, {hi})"));
            }
        }
        Ok(())
    }

    pub fn order(&self) -> OrderSpec {
        OrderSpec::new(self.d0, self.k0, self.s)
    }
}

/// One synthetic panel with its ground truth.
#[derive(Debug, Clone)]
pub struct DgpInstance {
    pub panel: TimePanel,
    /// `p x (d0+1+2k0)`, same layout as [`detrend::Decomposition::theta`].
    pub theta_true: DMatrix<f64>,
    pub l_tilde_true: DMatrix<f64>,
    /// `Sigma_eta^{-1/2} L~_1` with the sample covariance of the true
    /// `eta`: the loading space the estimator targets.
    pub l1_true_whitened: DMatrix<f64>,
    pub phi_true: DMatrix<f64>,
    /// `r x T`.
    pub factors_true: DMatrix<f64>,
    pub eta_true: DMatrix<f64>,
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

pub fn generate(config: &DgpConfig) -> Result<DgpInstance> {
    config.validate()?;
    let DgpConfig { p, t: t_len, r, .. } = *config;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (clo, chi) = config.coef_range;
    let order = config.order();
    let q = order.n_coef();

    let theta = DMatrix::from_row_iterator(p, q, (0..p * q).map(|_| rng.random_range(clo..chi)));
    let mut l_tilde = None;
    for _ in 0..MAX_REDRAWS {
        let cand = DMatrix::from_row_iterator(p, p, (0..p * p).map(|_| rng.random_range(clo..chi)));
        if condition_number(&cand) <= MAX_CONDITION {
            l_tilde = Some(cand);
            break;
        }
    }
    let l_tilde = l_tilde.ok_or(Error::DegenerateDraw(MAX_REDRAWS))?;
    let (plo, phi_hi) = config.phi_range;
    let phi_diag = DVector::from_iterator(r, (0..r).map(|_| rng.random_range(plo..phi_hi)));
    let phi = DMatrix::from_diagonal(&phi_diag);

    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut f = DVector::zeros(r);
    for _ in 0..BURN_IN {
        for j in 0..r {
            f[j] = phi_diag[j] * f[j] + normal();
        }
    }
    let mut factors = DMatrix::zeros(r, t_len);
    let mut xi = DMatrix::zeros(p, t_len);
    for t in 0..t_len {
        for j in 0..r {
            f[j] = phi_diag[j] * f[j] + normal();
        }
        factors.set_column(t, &f);
        for j in 0..r {
            xi[(j, t)] = f[j];
        }
        for j in r..p {
            xi[(j, t)] = normal();
        }
    }
    let eta = &l_tilde * xi;
    let design = detrend::build_design(t_len, order)?;
    let y = &theta * design.transpose() + &eta;
    let panel = TimePanel::from_matrix(y, config.s)?;

    let l1_true_whitened = if r > 0 {
        let n = t_len as f64;
        let mean = DVector::from_iterator(p, eta.row_iter().map(|row| row.sum() / n));
        let mut centered = eta.clone();
        for mut col in centered.column_iter_mut() {
            col -= &mean;
        }
        let cov = numerics::symmetrize(&(&centered * centered.transpose())) / n;
        numerics::inv_sqrt_spd(&cov, DEFAULT_FLOOR_REL)? * l_tilde.columns(0, r)
    } else {
        DMatrix::zeros(p, 0)
    };

    Ok(DgpInstance {
        panel,
        theta_true: theta,
        l_tilde_true: l_tilde,
        l1_true_whitened,
        phi_true: phi,
        factors_true: factors,
        eta_true: eta,
    })
}

fn check_orthonormal(h: &DMatrix<f64>) -> Result<()> {
    let gram = h.transpose() * h;
    let dev = (gram - DMatrix::identity(h.ncols(), h.ncols())).amax();
    if dev.is_nan() || dev > ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal(dev));
    }
    Ok(())
}

fn projector_distance(cross: f64, dim: usize) -> f64 {
    (1.0 - cross / dim as f64).clamp(0.0, 1.0).sqrt()
}

/// `sqrt(1 - tr(H1 H1' H2 H2') / r)` for two `p x r` orthonormal bases.
pub fn discrepancy_d(h1: &DMatrix<f64>, h2: &DMatrix<f64>) -> Result<f64> {
    if h1.shape() != h2.shape() || h1.ncols() == 0 {
        return Err(Error::InvalidArgument(format!(
            "discrepancy needs two p x r bases with r > 0, got {:?} and {:?}",
            h1.shape(),
            h2.shape()
        )));
    }
    discrepancy_d_tilde(h1, h2)
}

/// Like [`discrepancy_d`] but allowing different column counts; the trace is
/// normalized by the smaller one.
pub fn discrepancy_d_tilde(h1: &DMatrix<f64>, h2: &DMatrix<f64>) -> Result<f64> {
    let dim = h1.ncols().min(h2.ncols());
    if h1.nrows() != h2.nrows() || dim == 0 {
        return Err(Error::InvalidArgument(format!(
            "discrepancy needs bases in the same space with at least one column, got {:?} and {:?}",
            h1.shape(),
            h2.shape()
        )));
    }
    check_orthonormal(h1)?;
    check_orthonormal(h2)?;
    // tr(H1 H1' H2 H2') = ||H1' H2||_F^2
    let cross = (h1.transpose() * h2).norm_squared();
    Ok(projector_distance(cross, dim))
}

fn orthonormal_basis(h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (p, r) = h.shape();
    if r > p {
        return Err(Error::RankDeficient {
            rank: p,
            cols: r,
            series: None,
        });
    }
    let qr = h.clone().qr();
    let rr = qr.r();
    let tol = RANK_TOL_REL * h.norm();
    let rank = (0..r).filter(|&j| rr[(j, j)].abs() > tol).count();
    if rank < r {
        return Err(Error::RankDeficient {
            rank,
            cols: r,
            series: None,
        });
    }
    Ok(qr.q())
}

/// Projector distance between the column spaces of two full-rank matrices
/// of possibly different widths: `sqrt(1 - tr(P1 P2) / min(r1, r2))`.
pub fn discrepancy_d_bar(h1: &DMatrix<f64>, h2: &DMatrix<f64>) -> Result<f64> {
    let dim = h1.ncols().min(h2.ncols());
    if h1.nrows() != h2.nrows() || dim == 0 {
        return Err(Error::InvalidArgument(format!(
            "discrepancy needs bases in the same space with at least one column, got {:?} and {:?}",
            h1.shape(),
            h2.shape()
        )));
    }
    let q1 = orthonormal_basis(h1)?;
    let q2 = orthonormal_basis(h2)?;
    let cross = (q1.transpose() * q2).norm_squared();
    Ok(projector_distance(cross, dim))
}

/// Which quantity each replication records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Indicator of `k_hat = k0` with the trend degree held at `d0`.
    #[value(name = "table1")]
    Table1,
    /// Indicators of `r_hat = r` for the sequential test and the ratio rule.
    #[value(name = "table2")]
    Table2,
    /// `p^{-1/2} ||Theta_hat - Theta||_F` and the mean `|alpha_hat_i1 - alpha_i1|`.
    #[value(name = "theta_error")]
    ThetaError,
    /// `D_bar` between estimated and true loading spaces.
    #[value(name = "loading_discrepancy")]
    LoadingDiscrepancy,
    /// `S_T(p)`, `C_T(p)` and rejection indicators on a factor-free panel.
    #[value(name = "null_calibration")]
    NullCalibration,
}

impl Experiment {
    pub fn metric_names(self) -> &'static [&'static str] {
        match self {
            Experiment::Table1 => &["k_correct"],
            Experiment::Table2 => &["test_correct", "ratio_correct"],
            Experiment::ThetaError => &["theta_error", "alpha1_error"],
            Experiment::LoadingDiscrepancy => &["d_bar", "r_hat"],
            Experiment::NullCalibration => &["s_t", "c_t", "reject_chi_square", "reject_normal"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Table1 => "table1",
            Experiment::Table2 => "table2",
            Experiment::ThetaError => "theta_error",
            Experiment::LoadingDiscrepancy => "loading_discrepancy",
            Experiment::NullCalibration => "null_calibration",
        }
    }
}

/// One grid cell: DGP settings plus how much of the truth the estimator is
/// given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub p: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub r: usize,
    pub k0: usize,
    pub d0: usize,
    pub s: usize,
    /// Use the true `k0` instead of the BIC estimate.
    pub k_known: bool,
    /// Use the true `r` instead of the test estimate.
    pub r_known: bool,
}

impl Default for Cell {
    fn default() -> Self {
        let d = DgpConfig::default();
        Self {
            p: d.p,
            t: d.t,
            r: d.r,
            k0: d.k0,
            d0: d.d0,
            s: d.s,
            k_known: true,
            r_known: true,
        }
    }
}

impl Cell {
    pub fn dgp(&self, seed: u64) -> DgpConfig {
        DgpConfig {
            p: self.p,
            t: self.t,
            r: self.r,
            k0: self.k0,
            d0: self.d0,
            s: self.s,
            seed,
            ..DgpConfig::default()
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "p={},T={},r={},k0={},d0={},s={},k_known={},r_known={}",
            self.p, self.t, self.r, self.k0, self.d0, self.s, self.k_known, self.r_known
        )
    }
}

/// Parses `key=value` pairs separated by commas, starting from the
/// defaults. Keys: `p`, `T`, `r`, `k0`, `d0`, `s`, `k_known`, `r_known`.
impl FromStr for Cell {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cell = Cell::default();
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("expected key=value, got {part:?}")))?;
            let num = || {
                value
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidArgument(format!("{key}: not a non-negative integer: {value:?}")))
            };
            let flag = || {
                value
                    .trim()
                    .parse::<bool>()
                    .map_err(|_| Error::InvalidArgument(format!("{key}: expected true or false, got {value:?}")))
            };
            match key.trim() {
                "p" => cell.p = num()?,
                "T" | "t" => cell.t = num()?,
                "r" => cell.r = num()?,
                "k0" => cell.k0 = num()?,
                "d0" => cell.d0 = num()?,
                "s" => cell.s = num()?,
                "k_known" => cell.k_known = flag()?,
                "r_known" => cell.r_known = flag()?,
                other => return Err(Error::InvalidArgument(format!("unknown cell key {other:?}"))),
            }
        }
        cell.dgp(0).validate()?;
        Ok(cell)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimConfig {
    pub experiment: Experiment,
    pub cells: Vec<Cell>,
    pub replications: usize,
    pub seed: u64,
    /// Worker threads; `None` uses the global rayon pool.
    #[serde(skip)]
    pub workers: Option<usize>,
    pub factor: FactorConfig,
    /// Keep every replication's metric values in the result.
    pub keep_samples: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Table1,
            cells: vec![Cell::default()],
            replications: 500,
            seed: 0,
            workers: None,
            factor: FactorConfig::default(),
            keep_samples: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricSummary {
    pub name: String,
    /// Replications contributing a value.
    pub n: usize,
    pub mean: f64,
    /// `sd / sqrt(n)`; absent when `n < 2`.
    pub std_error: Option<f64>,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellResult {
    pub cell: Cell,
    pub label: String,
    pub metrics: Vec<MetricSummary>,
    pub failures: usize,
    /// More than 1% of replications failed.
    pub failed: bool,
    /// First error message, if any replication failed.
    pub first_error: Option<String>,
    /// Per replication, per metric; `None` for failed replications or
    /// undefined values.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<Option<Vec<Option<f64>>>>>,
}

impl CellResult {
    pub fn metric(&self, name: &str) -> Option<&MetricSummary> {
        self.metrics.iter().find(|m| m.name == name)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimTable {
    pub experiment: Experiment,
    pub replications: usize,
    pub seed: u64,
    pub cells: Vec<CellResult>,
}

/// Sample quantile with linear interpolation between order statistics
/// (`sorted` ascending, non-empty).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn summarize(name: &str, values: &[f64]) -> MetricSummary {
    let n = values.len();
    if n == 0 {
        return MetricSummary {
            name: name.to_string(),
            n,
            mean: f64::NAN,
            std_error: None,
            median: f64::NAN,
            q1: f64::NAN,
            q3: f64::NAN,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std_error = (n > 1).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
    });
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    MetricSummary {
        name: name.to_string(),
        n,
        mean,
        std_error,
        median: quantile(&sorted, 0.5),
        q1: quantile(&sorted, 0.25),
        q3: quantile(&sorted, 0.75),
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// The trend/seasonal order the estimator uses: the truth, or `k` chosen
/// by BIC with the degree held at `d0`.
fn working_order(cell: &Cell, panel: &TimePanel) -> Result<OrderSpec> {
    if cell.k_known {
        return Ok(OrderSpec::new(cell.d0, cell.k0, cell.s));
    }
    let grid = OrderGrid::fixed_degree(cell.d0, max_harmonics(cell.s));
    let table = detrend::select_orders(panel, grid, None)?;
    Ok(table.selected_order(cell.s))
}

/// Metric values of one replication, in [`Experiment::metric_names`] order.
pub fn run_replication(
    experiment: Experiment,
    cell: &Cell,
    factor: &FactorConfig,
    seed: u64,
) -> Result<Vec<Option<f64>>> {
    let inst = generate(&cell.dgp(seed))?;
    let panel = &inst.panel;
    match experiment {
        Experiment::Table1 => {
            let grid = OrderGrid::fixed_degree(cell.d0, max_harmonics(cell.s));
            let table = detrend::select_orders(panel, grid, None)?;
            Ok(vec![Some(indicator(table.selected.0 == cell.k0))])
        }
        Experiment::Table2 => {
            let order = working_order(cell, panel)?;
            let dec = detrend::fit(panel, order)?;
            let cov = cca_factor::lagged_covariances(&dec.irregular, factor.m)?;
            let (m_hat, _) = cca_factor::build_m_hat(&cov, factor.floor_rel)?;
            let eig = numerics::sym_eig(&m_hat)?;
            let eigs: Vec<f64> = eig.eigenvalues.iter().map(|x| x.clamp(0.0, 1.0)).collect();
            let test = cca_factor::select_num_factors(&eigs, cov.n_obs, factor.m, factor.alpha, factor.regime)?;
            let ratio = cca_factor::ratio_estimator(&eigs)?;
            Ok(vec![
                Some(indicator(test.selected_r == cell.r)),
                Some(indicator(ratio == cell.r)),
            ])
        }
        Experiment::ThetaError => {
            let order = working_order(cell, panel)?;
            if order != cell.dgp(seed).order() {
                return Ok(vec![None, None]);
            }
            let dec = detrend::fit(panel, order)?;
            let diff = &dec.theta - &inst.theta_true;
            let theta_err = diff.norm() / (cell.p as f64).sqrt();
            let alpha1 = (cell.d0 >= 1).then(|| diff.column(1).abs().sum() / cell.p as f64);
            Ok(vec![Some(theta_err), alpha1])
        }
        Experiment::LoadingDiscrepancy => {
            let order = working_order(cell, panel)?;
            let dec = detrend::fit(panel, order)?;
            let r_override = cell.r_known.then_some(cell.r);
            let (fm, _) = cca_factor::analyze(&dec.irregular, factor, r_override)?;
            let d = if fm.r == 0 || cell.r == 0 {
                1.0
            } else {
                discrepancy_d_bar(&fm.factor_loadings(), &inst.l1_true_whitened)?
            };
            Ok(vec![Some(d), Some(fm.r as f64)])
        }
        Experiment::NullCalibration => {
            let order = working_order(cell, panel)?;
            let dec = detrend::fit(panel, order)?;
            let cov = cca_factor::lagged_covariances(&dec.irregular, factor.m)?;
            let (m_hat, _) = cca_factor::build_m_hat(&cov, factor.floor_rel)?;
            let eig = numerics::sym_eig(&m_hat)?;
            let eigs: Vec<f64> = eig.eigenvalues.iter().map(|x| x.clamp(0.0, 1.0)).collect();
            let p = cell.p;
            let (s_t, df) = cca_factor::s_t_statistic(&eigs, p, cov.n_obs, factor.m)?;
            let report = cca_factor::select_num_factors(
                &eigs,
                cov.n_obs,
                factor.m,
                factor.alpha,
                cca_factor::Regime::ChiSquare,
            )?;
            let row = &report.rows[p - 1];
            Ok(vec![
                Some(s_t),
                Some(cca_factor::c_t_statistic(s_t, df)),
                Some(indicator(row.chi_square_p_value < factor.alpha)),
                Some(indicator(row.normal_p_value < factor.alpha)),
            ])
        }
    }
}

fn run_cell(config: &SimConfig, index: usize, cell: &Cell) -> CellResult {
    let names = config.experiment.metric_names();
    let results: Vec<Result<Vec<Option<f64>>>> = (0..config.replications)
        .into_par_iter()
        .map(|rep| {
            let seed = replication_seed(config.seed, index as u64, rep as u64);
            run_replication(config.experiment, cell, &config.factor, seed)
        })
        .collect();
    let failures = results.iter().filter(|r| r.is_err()).count();
    let first_error = results.iter().find_map(|r| r.as_ref().err().map(|e| e.to_string()));
    let metrics = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let values: Vec<f64> = results
                .iter()
                .filter_map(|r| r.as_ref().ok().and_then(|v| v[j]))
                .collect();
            summarize(name, &values)
        })
        .collect();
    let samples = config
        .keep_samples
        .then(|| results.iter().map(|r| r.as_ref().ok().cloned()).collect());
    CellResult {
        cell: *cell,
        label: cell.to_string(),
        metrics,
        failures,
        failed: failures as f64 > MAX_FAILURE_RATE * config.replications as f64,
        first_error,
        samples,
    }
}

/// Run every cell of the grid. Output is identical for any worker count.
pub fn run_table(config: &SimConfig) -> Result<SimTable> {
    if config.replications == 0 {
        return Err(Error::InvalidArgument("replications must be positive".into()));
    }
    if config.cells.is_empty() {
        return Err(Error::InvalidArgument("no grid cells given".into()));
    }
    for cell in &config.cells {
        cell.dgp(0).validate()?;
    }
    let run = || {
        config
            .cells
            .iter()
            .enumerate()
            .map(|(i, cell)| run_cell(config, i, cell))
            .collect()
    };
    let cells = match config.workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
            pool.install(run)
        }
        None => run(),
    };
    Ok(SimTable {
        experiment: config.experiment,
        replications: config.replications,
        seed: config.seed,
        cells,
    })
}

/// Empty for undefined (non-finite) values.
fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        panel::format_fixed12(x)
    } else {
        String::new()
    }
}

impl SimTable {
    /// One row per cell and metric.
    pub fn to_csv(&self) -> String {
        let header: Vec<String> = [
            "experiment",
            "cell",
            "p",
            "T",
            "r",
            "k0",
            "d0",
            "s",
            "k_known",
            "r_known",
            "metric",
            "n",
            "mean",
            "std_error",
            "median",
            "q1",
            "q3",
            "failures",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&header).expect("in-memory write");
        for c in &self.cells {
            for m in &c.metrics {
                let fmt_opt = |x: Option<f64>| x.map(fmt_num).unwrap_or_default();
                let record = vec![
                    self.experiment.name().to_string(),
                    c.label.clone(),
                    c.cell.p.to_string(),
                    c.cell.t.to_string(),
                    c.cell.r.to_string(),
                    c.cell.k0.to_string(),
                    c.cell.d0.to_string(),
                    c.cell.s.to_string(),
                    c.cell.k_known.to_string(),
                    c.cell.r_known.to_string(),
                    m.name.clone(),
                    m.n.to_string(),
                    fmt_num(m.mean),
                    fmt_opt(m.std_error),
                    fmt_num(m.median),
                    fmt_num(m.q1),
                    fmt_num(m.q3),
                    c.failures.to_string(),
                ];
                w.write_record(&record).expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// Raw per-replication values (for boxplots), when samples were kept.
    pub fn samples_csv(&self) -> Option<String> {
        let names = self.experiment.metric_names();
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let mut header = vec!["cell".to_string(), "rep".to_string()];
        header.extend(names.iter().map(|s| s.to_string()));
        w.write_record(&header).expect("in-memory write");
        for c in &self.cells {
            let samples = c.samples.as_ref()?;
            for (rep, row) in samples.iter().enumerate() {
                let mut record = vec![c.label.clone(), rep.to_string()];
                for j in 0..names.len() {
                    let v = row.as_ref().and_then(|v| v[j]);
                    record.push(v.map(fmt_num).unwrap_or_default());
                }
                w.write_record(&record).expect("in-memory write");
            }
        }
        Some(String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8"))
    }
}
