//! Polynomial trend plus harmonic seasonal extraction, and per-series BIC
//! order selection.
//!
//! Series `i` is regressed on `d_t = (1, t, .., t^d, cos(rho_1 t), ..,
//! cos(rho_k t), sin(rho_1 t), .., sin(rho_k t))` with `rho_j = 2 pi j / s`
//! and `t = 1..T`. Coefficients are reported in that raw basis; internally
//! the polynomial columns are evaluated at `t / T`, which spans the same
//! space and keeps the QR factorization well conditioned for long series.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::QrDesign;
use crate::panel::TimePanel;

/// Default upper bound for the trend degree search.
pub const DEFAULT_D_MAX: usize = 2;

/// An RSS at or below this fraction of `||y||^2` counts as an exact fit.
const EXACT_FIT_REL: f64 = 1e-20;

/// Largest usable number of harmonic pairs for period `s`: `ceil(s/2) - 1`.
pub fn max_harmonics(s: usize) -> usize {
    s.div_ceil(2).saturating_sub(1)
}

/// `log(log(T))`.
pub fn default_c_t(t: usize) -> f64 {
    (t as f64).ln().ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OrderSpec {
    /// Trend polynomial degree.
    pub d: usize,
    /// Number of harmonic (cos, sin) pairs.
    pub k: usize,
    /// Period.
    pub s: usize,
}

impl OrderSpec {
    pub fn new(d: usize, k: usize, s: usize) -> Self {
        Self { d, k, s }
    }

    /// Columns of the design: `d + 1 + 2k`.
    pub fn n_coef(&self) -> usize {
        self.d + 1 + 2 * self.k
    }

    pub fn validate(&self, t: usize) -> Result<()> {
        if self.k > 0 && self.s < 2 {
            return Err(Error::InvalidOrder(format!(
                "period must be at least 2 with harmonics, got {}",
                self.s
            )));
        }
        if self.k > 0 && self.k > max_harmonics(self.s) {
            return Err(Error::InvalidOrder(format!(
                "k = {} exceeds ceil(s/2) - 1 = {} for s = {}",
                self.k,
                max_harmonics(self.s),
                self.s
            )));
        }
        if self.n_coef() > t {
            return Err(Error::InvalidOrder(format!(
                "{} coefficients but only {t} observations",
                self.n_coef()
            )));
        }
        Ok(())
    }
}

/// `cos` and `sin` of `2 pi j t / s`, with the angle reduced modulo the
/// period before scaling so large `t` loses no accuracy.
fn harmonic(j: usize, t: usize, s: usize) -> (f64, f64) {
    let phase = ((j as u64 * t as u64) % s as u64) as f64;
    let angle = 2.0 * PI * phase / s as f64;
    (angle.cos(), angle.sin())
}

/// The raw `T x (d+1+2k)` regressor matrix, rows `t = 1..T`.
pub fn build_design(t_len: usize, order: OrderSpec) -> Result<DMatrix<f64>> {
    order.validate(t_len)?;
    let mut d = DMatrix::zeros(t_len, order.n_coef());
    for row in 0..t_len {
        let t = row + 1;
        let tf = t as f64;
        let mut pw = 1.0;
        for j in 0..=order.d {
            d[(row, j)] = pw;
            pw *= tf;
        }
        for j in 1..=order.k {
            let (c, s) = harmonic(j, t, order.s);
            d[(row, order.d + j)] = c;
            d[(row, order.d + order.k + j)] = s;
        }
    }
    Ok(d)
}

#[derive(Clone, Copy)]
enum HarmonicLayout {
    /// cos block then sin block, as in the public design.
    Blocked,
    /// cos_1, sin_1, cos_2, sin_2, ..: every `k` is a column prefix.
    Interleaved,
}

fn scaled_design(t_len: usize, d: usize, k: usize, s: usize, layout: HarmonicLayout) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(t_len, d + 1 + 2 * k);
    let scale = t_len as f64;
    for row in 0..t_len {
        let t = row + 1;
        let u = t as f64 / scale;
        let mut pw = 1.0;
        for j in 0..=d {
            m[(row, j)] = pw;
            pw *= u;
        }
        for j in 1..=k {
            let (c, sn) = harmonic(j, t, s);
            let (ci, si) = match layout {
                HarmonicLayout::Blocked => (d + j, d + k + j),
                HarmonicLayout::Interleaved => (d + 2 * j - 1, d + 2 * j),
            };
            m[(row, ci)] = c;
            m[(row, si)] = sn;
        }
    }
    m
}

/// Trend, seasonal and irregular components of a panel.
#[derive(Debug, Clone)]
pub struct Decomposition {
    /// `p x (d+1+2k)`, row `i` = `(alpha_0..alpha_d, beta_1..beta_k, gamma_1..gamma_k)`.
    pub theta: DMatrix<f64>,
    pub trend: DMatrix<f64>,
    pub seasonal: DMatrix<f64>,
    pub irregular: DMatrix<f64>,
    pub order: OrderSpec,
}

impl Decomposition {
    pub fn n_series(&self) -> usize {
        self.theta.nrows()
    }

    pub fn len(&self) -> usize {
        self.irregular.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Trend and seasonal parts evaluated at time index `t` (1-based, any
    /// value, including beyond the sample).
    pub fn evaluate(&self, t: usize) -> (DVector<f64>, DVector<f64>) {
        let p = self.n_series();
        let OrderSpec { d, k, s } = self.order;
        let tf = t as f64;
        let mut trend = DVector::zeros(p);
        let mut seasonal = DVector::zeros(p);
        for i in 0..p {
            let mut acc = 0.0;
            for j in (0..=d).rev() {
                acc = acc * tf + self.theta[(i, j)];
            }
            trend[i] = acc;
            let mut sacc = 0.0;
            for j in 1..=k {
                let (c, sn) = harmonic(j, t, s);
                sacc += self.theta[(i, d + j)] * c + self.theta[(i, d + k + j)] * sn;
            }
            seasonal[i] = sacc;
        }
        (trend, seasonal)
    }

    /// The component panels as CSV-ready [`TimePanel`]s sharing the input's
    /// labels: `(trend, seasonal, irregular)`.
    pub fn component_panels(&self, like: &TimePanel) -> Result<(TimePanel, TimePanel, TimePanel)> {
        Ok((
            like.with_values(self.trend.clone())?,
            like.with_values(self.seasonal.clone())?,
            like.with_values(self.irregular.clone())?,
        ))
    }

    /// Column names for the rows of `theta`.
    pub fn coefficient_names(&self) -> Vec<String> {
        let OrderSpec { d, k, .. } = self.order;
        let mut names: Vec<String> = (0..=d).map(|j| format!("alpha{j}")).collect();
        names.extend((1..=k).map(|j| format!("beta{j}")));
        names.extend((1..=k).map(|j| format!("gamma{j}")));
        names
    }
}

/// Least-squares trend/seasonal fit, series by series.
pub fn fit(panel: &TimePanel, order: OrderSpec) -> Result<Decomposition> {
    fit_matrix(panel.values(), order)
}

/// [`fit`] on a bare `p x T` matrix.
pub fn fit_matrix(y: &DMatrix<f64>, order: OrderSpec) -> Result<Decomposition> {
    let (p, t_len) = y.shape();
    order.validate(t_len)?;
    let x = scaled_design(t_len, order.d, order.k, order.s, HarmonicLayout::Blocked);
    let design = QrDesign::new(&x)?;
    let q = order.n_coef();
    let npoly = order.d + 1;

    let mut theta = DMatrix::zeros(p, q);
    let mut trend = DMatrix::zeros(p, t_len);
    let mut seasonal = DMatrix::zeros(p, t_len);
    let mut irregular = DMatrix::zeros(p, t_len);
    let scale = t_len as f64;
    for i in 0..p {
        let yi = y.row(i).transpose();
        let ls = design.solve(&x, &yi);
        let poly = x.columns(0, npoly) * ls.coef.rows(0, npoly);
        let seas = x.columns(npoly, q - npoly) * ls.coef.rows(npoly, q - npoly);
        for t in 0..t_len {
            trend[(i, t)] = poly[t];
            seasonal[(i, t)] = seas[t];
            irregular[(i, t)] = yi[t] - poly[t] - seas[t];
        }
        let mut tpow = 1.0;
        for j in 0..npoly {
            theta[(i, j)] = ls.coef[j] / tpow;
            tpow *= scale;
        }
        for j in npoly..q {
            theta[(i, j)] = ls.coef[j];
        }
    }
    Ok(Decomposition {
        theta,
        trend,
        seasonal,
        irregular,
        order,
    })
}

/// Marginal BIC: `log(rss/T) + (d+k)/T * c_t * log(max(p, T))`.
pub fn bic_value(rss: f64, t: usize, k: usize, d: usize, p: usize, c_t: f64) -> Result<f64> {
    if rss.is_nan() || rss <= 0.0 || !rss.is_finite() {
        return Err(Error::Domain(format!("BIC needs a positive RSS, got {rss:e}")));
    }
    if t < 2 {
        return Err(Error::Domain(format!("BIC needs T >= 2, got {t}")));
    }
    let tf = t as f64;
    let penalty = (d + k) as f64 / tf * c_t * (p.max(t) as f64).ln();
    Ok((rss / tf).ln() + penalty)
}

/// Search ranges for [`select_orders`], inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OrderGrid {
    pub k_min: usize,
    pub k_max: usize,
    pub d_min: usize,
    pub d_max: usize,
}

impl OrderGrid {
    pub fn new(k_max: usize, d_max: usize) -> Self {
        Self {
            k_min: 0,
            k_max,
            d_min: 0,
            d_max,
        }
    }

    /// Search `k` only, with the trend degree held at `d`.
    pub fn fixed_degree(d: usize, k_max: usize) -> Self {
        Self {
            k_min: 0,
            k_max,
            d_min: d,
            d_max: d,
        }
    }

    /// `k in 0..=ceil(s/2)-1`, `d in 0..=2`.
    pub fn default_for_period(s: usize) -> Self {
        Self::new(max_harmonics(s), DEFAULT_D_MAX)
    }

    fn validate(&self, s: usize, t: usize) -> Result<()> {
        if self.k_min > self.k_max || self.d_min > self.d_max {
            return Err(Error::InvalidOrder(format!("empty grid {self:?}")));
        }
        OrderSpec::new(self.d_max, self.k_max, s).validate(t)
    }
}

#[derive(Debug, Clone)]
pub struct BicTable {
    pub grid: OrderGrid,
    pub c_t: f64,
    /// Per series, a `(d_max-d_min+1) x (k_max-k_min+1)` matrix of BIC values
    /// (row = `d - d_min`, column = `k - k_min`). Exact fits hold `-inf`.
    pub bic: Vec<DMatrix<f64>>,
    /// Same layout as `bic`.
    pub rss: Vec<DMatrix<f64>>,
    /// `(k_i, d_i)` per series.
    pub selected_per_series: Vec<(usize, usize)>,
    /// `(k, d)`: component-wise maximum over series.
    pub selected: (usize, usize),
    pub warnings: Vec<String>,
}

impl BicTable {
    pub fn bic_at(&self, series: usize, k: usize, d: usize) -> f64 {
        self.bic[series][(d - self.grid.d_min, k - self.grid.k_min)]
    }

    pub fn rss_at(&self, series: usize, k: usize, d: usize) -> f64 {
        self.rss[series][(d - self.grid.d_min, k - self.grid.k_min)]
    }

    pub fn selected_order(&self, s: usize) -> OrderSpec {
        OrderSpec::new(self.selected.1, self.selected.0, s)
    }

    pub fn report(&self, series_names: &[String]) -> BicReport {
        let per_series = self
            .selected_per_series
            .iter()
            .enumerate()
            .map(|(i, &(k, d))| {
                let b = self.bic_at(i, k, d);
                SeriesSelection {
                    series: series_names.get(i).cloned().unwrap_or_else(|| format!("y{}", i + 1)),
                    k,
                    d,
                    bic_min: b.is_finite().then_some(b),
                    rss: self.rss_at(i, k, d),
                }
            })
            .collect();
        BicReport {
            selected_k: self.selected.0,
            selected_d: self.selected.1,
            c_t: self.c_t,
            grid: self.grid,
            per_series,
            warnings: self.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesSelection {
    pub series: String,
    pub k: usize,
    pub d: usize,
    /// `None` for an exact fit.
    pub bic_min: Option<f64>,
    pub rss: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BicReport {
    pub selected_k: usize,
    pub selected_d: usize,
    pub c_t: f64,
    pub grid: OrderGrid,
    pub per_series: Vec<SeriesSelection>,
    pub warnings: Vec<String>,
}

/// Per-series BIC minimization over `grid`, combined by taking the maximum
/// selected `k` and `d` across series. Ties go to the smaller `k`, then the
/// smaller `d`. `c_t` defaults to `log(log(T))`.
pub fn select_orders(panel: &TimePanel, grid: OrderGrid, c_t: Option<f64>) -> Result<BicTable> {
    select_orders_matrix(panel.values(), panel.periodicity(), grid, c_t)
}

pub fn select_orders_matrix(y: &DMatrix<f64>, s: usize, grid: OrderGrid, c_t: Option<f64>) -> Result<BicTable> {
    let (p, t_len) = y.shape();
    grid.validate(s, t_len)?;
    let c_t = c_t.unwrap_or_else(|| default_c_t(t_len));
    if !c_t.is_finite() {
        return Err(Error::InvalidArgument(format!("C_T must be finite, got {c_t}")));
    }
    let nd = grid.d_max - grid.d_min + 1;
    let nk = grid.k_max - grid.k_min + 1;
    let mut bic = vec![DMatrix::zeros(nd, nk); p];
    let mut rss = vec![DMatrix::zeros(nd, nk); p];
    let series: Vec<DVector<f64>> = (0..p).map(|i| y.row(i).transpose()).collect();
    let energy: Vec<f64> = series.iter().map(|v| v.norm_squared()).collect();

    for d in grid.d_min..=grid.d_max {
        let x = scaled_design(t_len, d, grid.k_max, s, HarmonicLayout::Interleaved);
        let design = QrDesign::new(&x)?;
        for i in 0..p {
            let prefix = design.prefix_rss(&series[i]);
            for k in grid.k_min..=grid.k_max {
                let r = prefix[d + 1 + 2 * k];
                let cell = (d - grid.d_min, k - grid.k_min);
                rss[i][cell] = r;
                bic[i][cell] = if r <= EXACT_FIT_REL * energy[i] {
                    f64::NEG_INFINITY
                } else {
                    bic_value(r, t_len, k, d, p, c_t)?
                };
            }
        }
    }

    let mut warnings = Vec::new();
    let mut selected_per_series = Vec::with_capacity(p);
    for (i, table) in bic.iter().enumerate() {
        let mut best = (grid.k_min, grid.d_min);
        let mut best_val = f64::INFINITY;
        for k in grid.k_min..=grid.k_max {
            for d in grid.d_min..=grid.d_max {
                let v = table[(d - grid.d_min, k - grid.k_min)];
                if v < best_val {
                    best_val = v;
                    best = (k, d);
                }
            }
        }
        if best_val == f64::NEG_INFINITY {
            warnings.push(format!("series {}: exact fit at k = {}, d = {}", i + 1, best.0, best.1));
        }
        selected_per_series.push(best);
    }
    let selected = selected_per_series
        .iter()
        .fold((0, 0), |(km, dm), &(k, d)| (km.max(k), dm.max(d)));
    let selected = (selected.0.max(grid.k_min), selected.1.max(grid.d_min));
    Ok(BicTable {
        grid,
        c_t,
        bic,
        rss,
        selected_per_series,
        selected,
        warnings,
    })
}
