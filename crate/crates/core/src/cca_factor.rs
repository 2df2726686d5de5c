//! Canonical-correlation factor analysis of an irregular (detrended) panel.
//!
//! The whitened irregular vector `W eta_t` (with `W = Sigma_eta^{-1/2}`) is
//! related to its stacked lags `eta_{t,m} = (eta_{t-1}, .., eta_{t-m})`
//! through
//!
//! ```text
//! M = W Sigma_{eta,eta_m} Sigma_{eta_m}^{-1} Sigma_{eta_m,eta} W
//! ```
//!
//! whose eigenvalues are the squared canonical correlations. Eigenvectors
//! with nonzero eigenvalue load the serially dependent factors; the rest
//! span white-noise combinations. The number of zero canonical correlations
//! is found by sequential likelihood-ratio tests on the smallest
//! eigenvalues.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::numerics::{self, spd_power, sym_eig, DEFAULT_FLOOR_REL};

/// Upper clamp on squared canonical correlations before taking `log(1 - x)`.
const EIG_CLAMP_MAX: f64 = 1.0 - 1e-12;

/// Default dimension at or below which the auto regime uses chi-square
/// p-values.
pub const DEFAULT_CHI2_MAX_DIM: usize = 10;

#[derive(Debug, Clone)]
pub struct LaggedCov {
    pub sigma_eta: DMatrix<f64>,
    /// `p x mp`.
    pub sigma_eta_etam: DMatrix<f64>,
    /// `mp x mp`.
    pub sigma_etam: DMatrix<f64>,
    pub m: usize,
    /// Grand mean used for centering.
    pub mean: DVector<f64>,
    pub n_obs: usize,
}

/// Sample covariances of `eta_t` and its `m` stacked lags.
///
/// Every vector is centered with the grand mean of the panel, lagged values
/// that fall before the sample start are zero, and every sum is divided by
/// `T`.
pub fn lagged_covariances(irregular: &DMatrix<f64>, m: usize) -> Result<LaggedCov> {
    let (p, t_len) = irregular.shape();
    if m < 1 {
        return Err(Error::InvalidArgument("lag depth m must be at least 1".into()));
    }
    if p == 0 {
        return Err(Error::InvalidArgument("empty irregular panel".into()));
    }
    if !irregular.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFiniteInput("lagged_covariances"));
    }
    if t_len <= m * p + p {
        return Err(Error::InsufficientSample(format!(
            "T = {t_len} must exceed (m + 1) p = {}",
            (m + 1) * p
        )));
    }
    let (mean, centered) = center(irregular);
    let mut lagged = DMatrix::zeros(m * p, t_len);
    for lag in 1..=m {
        for t in lag..t_len {
            lagged
                .view_mut(((lag - 1) * p, t), (p, 1))
                .copy_from(&centered.column(t - lag));
        }
    }
    let n = t_len as f64;
    let sigma_eta = numerics::symmetrize(&(&centered * centered.transpose())) / n;
    let sigma_eta_etam = (&centered * lagged.transpose()) / n;
    let sigma_etam = numerics::symmetrize(&(&lagged * lagged.transpose())) / n;
    Ok(LaggedCov {
        sigma_eta,
        sigma_eta_etam,
        sigma_etam,
        m,
        mean,
        n_obs: t_len,
    })
}

/// Time-average of each row, and the panel with it removed.
fn center(x: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = x.ncols() as f64;
    let mean = DVector::from_iterator(x.nrows(), x.row_iter().map(|r| r.sum() / n));
    let mut centered = x.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    (mean, centered)
}

/// The sample canonical-correlation matrix `M` and the whitener
/// `Sigma_eta^{-1/2}` used to build it.
pub fn build_m_hat(cov: &LaggedCov, floor_rel: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let whitener = numerics::inv_sqrt_spd(&cov.sigma_eta, floor_rel)?;
    let lag_inv = numerics::inv_spd(&cov.sigma_etam, floor_rel)?;
    let left = &whitener * &cov.sigma_eta_etam;
    let m_hat = &left * lag_inv * left.transpose();
    Ok((numerics::symmetrize(&m_hat), whitener))
}

#[derive(Debug, Clone)]
pub struct FactorModel {
    /// `Sigma_eta^{-1/2}`.
    pub whitener: DMatrix<f64>,
    /// `Sigma_eta^{1/2}`, the inverse of `whitener`.
    pub unwhitener: DMatrix<f64>,
    /// Mean removed from the irregular panel before extraction.
    pub mean: DVector<f64>,
    /// Orthonormal `p x p`; the first `r` columns load the factors.
    pub loadings: DMatrix<f64>,
    /// Squared canonical correlations, descending, clamped into `[0, 1]`.
    pub eigenvalues: DVector<f64>,
    pub r: usize,
    /// `r x T`.
    pub factors: DMatrix<f64>,
    /// `(p - r) x T`.
    pub noise_variates: DMatrix<f64>,
}

impl FactorModel {
    pub fn n_series(&self) -> usize {
        self.loadings.nrows()
    }

    /// First `r` loading columns.
    pub fn factor_loadings(&self) -> DMatrix<f64> {
        self.loadings.columns(0, self.r).into_owned()
    }

    /// All `p` canonical variates `L^T W (eta_t - mean)`, factors first.
    pub fn variates(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n_series(), self.factors.ncols());
        out.rows_mut(0, self.r).copy_from(&self.factors);
        out.rows_mut(self.r, self.n_series() - self.r)
            .copy_from(&self.noise_variates);
        out
    }

    /// Map factor values back to the irregular scale: `W^{-1} L_1 f`.
    pub fn factor_to_irregular(&self, f: &DVector<f64>) -> DVector<f64> {
        &self.unwhitener * (self.loadings.columns(0, self.r) * f)
    }
}

/// Loadings from the eigenvectors of `M` and the extracted factor and
/// noise-variate series.
pub fn estimate_loadings(
    m_hat: &DMatrix<f64>,
    whitener: &DMatrix<f64>,
    irregular: &DMatrix<f64>,
    r: usize,
) -> Result<FactorModel> {
    let p = m_hat.nrows();
    if r > p {
        return Err(Error::InvalidArgument(format!("r = {r} exceeds p = {p}")));
    }
    if whitener.shape() != (p, p) || irregular.nrows() != p {
        return Err(Error::InvalidArgument("dimension mismatch in estimate_loadings".into()));
    }
    let eig = sym_eig(m_hat)?;
    let eigenvalues = eig.eigenvalues.map(|x| x.clamp(0.0, 1.0));
    let loadings = eig.eigenvectors;
    let unwhitener = spd_power(whitener, 0.0, -1.0)?;

    let (mean, centered) = center(irregular);
    let variates = loadings.transpose() * whitener * centered;
    Ok(FactorModel {
        whitener: whitener.clone(),
        unwhitener,
        mean,
        factors: variates.rows(0, r).into_owned(),
        noise_variates: variates.rows(r, p - r).into_owned(),
        loadings,
        eigenvalues,
        r,
    })
}

/// `S_T(v) = -(T - m + 1) sum_{i=1..v} log(1 - lambda^2_{p-i+1})` and its
/// chi-square degrees of freedom `v((m - 1) p + v)`. `eigenvalues` must be
/// sorted descending.
pub fn s_t_statistic(eigenvalues: &[f64], v: usize, t: usize, m: usize) -> Result<(f64, usize)> {
    let p = eigenvalues.len();
    if v < 1 || v > p {
        return Err(Error::InvalidArgument(format!("v = {v} outside 1..={p}")));
    }
    let mut sum = 0.0;
    for i in 1..=v {
        let raw = eigenvalues[p - i];
        let x = raw.clamp(0.0, EIG_CLAMP_MAX);
        if x.is_nan() || x >= 1.0 {
            return Err(Error::Domain(format!("squared canonical correlation {raw} >= 1")));
        }
        sum += (-x).ln_1p();
    }
    let scale = t as f64 - m as f64 + 1.0;
    let df = v * ((m - 1) * p + v);
    Ok((-scale * sum, df))
}

/// `(S_T - df) / sqrt(2 df)`.
pub fn c_t_statistic(s_t: f64, df: usize) -> f64 {
    let df = df as f64;
    (s_t - df) / (2.0 * df).sqrt()
}

/// Which reference distribution decides rejection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Chi-square when `p <= max_dim`, standard normal otherwise.
    Auto {
        max_dim: usize,
    },
    ChiSquare,
    Normal,
}

impl Default for Regime {
    fn default() -> Self {
        Regime::Auto {
            max_dim: DEFAULT_CHI2_MAX_DIM,
        }
    }
}

impl Regime {
    fn resolve(self, p: usize) -> Regime {
        match self {
            Regime::Auto { max_dim } if p <= max_dim => Regime::ChiSquare,
            Regime::Auto { .. } => Regime::Normal,
            other => other,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TestRow {
    pub v: usize,
    pub s_t: f64,
    pub df: usize,
    pub chi_square_p_value: f64,
    pub c_t: f64,
    pub normal_p_value: f64,
    pub rejected: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TestReport {
    pub rows: Vec<TestRow>,
    pub selected_v: usize,
    pub selected_r: usize,
    pub alpha: f64,
    /// The regime actually used (never `Auto`).
    pub regime: Regime,
    pub m: usize,
    pub n_obs: usize,
}

/// Sequential test for the number of zero canonical correlations.
///
/// Tests `v = 1, 2, ..` and stops at the first rejection; the selected `v`
/// is the last one not rejected (zero if `v = 1` already rejects) and the
/// factor count is `p - v`. Rows are reported for every `v` regardless.
pub fn select_num_factors(eigenvalues: &[f64], t: usize, m: usize, alpha: f64, regime: Regime) -> Result<TestReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must be in (0, 1), got {alpha}")));
    }
    let p = eigenvalues.len();
    let regime = regime.resolve(p);
    let normal = Normal::standard();
    let mut rows = Vec::with_capacity(p);
    for v in 1..=p {
        let (s_t, df) = s_t_statistic(eigenvalues, v, t, m)?;
        let chi = ChiSquared::new(df as f64).map_err(|e| Error::Domain(e.to_string()))?;
        let chi_p = chi.sf(s_t);
        let c_t = c_t_statistic(s_t, df);
        let norm_p = normal.sf(c_t);
        let p_value = match regime {
            Regime::ChiSquare => chi_p,
            _ => norm_p,
        };
        rows.push(TestRow {
            v,
            s_t,
            df,
            chi_square_p_value: chi_p,
            c_t,
            normal_p_value: norm_p,
            rejected: p_value < alpha,
        });
    }
    let selected_v = rows.iter().position(|r| r.rejected).unwrap_or(p);
    Ok(TestReport {
        rows,
        selected_v,
        selected_r: p - selected_v,
        alpha,
        regime,
        m,
        n_obs: t,
    })
}

/// Eigenvalue-ratio factor count: `argmin_j lambda_{j+1} / lambda_j` over
/// canonical correlations `lambda_j = sqrt(eigenvalues_j)`. Ties go to the
/// smallest `j`; zero denominators are skipped.
pub fn ratio_estimator(eigenvalues: &[f64]) -> Result<usize> {
    let p = eigenvalues.len();
    if p < 2 {
        return Err(Error::InvalidArgument("ratio estimator needs p >= 2".into()));
    }
    if eigenvalues.iter().all(|&x| x <= 1e-14) {
        return Err(Error::DegenerateSpectrum);
    }
    let lambda: Vec<f64> = eigenvalues.iter().map(|x| x.max(0.0).sqrt()).collect();
    let mut best = 1;
    let mut best_ratio = f64::INFINITY;
    for j in 1..p {
        if lambda[j - 1] <= 0.0 {
            continue;
        }
        let ratio = lambda[j] / lambda[j - 1];
        if ratio < best_ratio {
            best_ratio = ratio;
            best = j;
        }
    }
    Ok(best)
}

/// Options for the full factor analysis.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FactorConfig {
    pub m: usize,
    pub alpha: f64,
    pub regime: Regime,
    pub floor_rel: f64,
}

impl Default for FactorConfig {
    fn default() -> Self {
        Self {
            m: 2,
            alpha: 0.05,
            regime: Regime::default(),
            floor_rel: DEFAULT_FLOOR_REL,
        }
    }
}

/// Covariances, `M`, the sequential test and the loadings in one go. The
/// factor count comes from the test unless `r_override` is given.
pub fn analyze(
    irregular: &DMatrix<f64>,
    config: &FactorConfig,
    r_override: Option<usize>,
) -> Result<(FactorModel, TestReport)> {
    let cov = lagged_covariances(irregular, config.m)?;
    let (m_hat, whitener) = build_m_hat(&cov, config.floor_rel)?;
    let eig = sym_eig(&m_hat)?;
    let eigs: Vec<f64> = eig.eigenvalues.iter().map(|x| x.clamp(0.0, 1.0)).collect();
    let report = select_num_factors(&eigs, cov.n_obs, config.m, config.alpha, config.regime)?;
    let r = r_override.unwrap_or(report.selected_r);
    let model = estimate_loadings(&m_hat, &whitener, irregular, r)?;
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(rng: &mut ChaCha8Rng, p: usize, t: usize) -> DMatrix<f64> {
        DMatrix::from_fn(p, t, |_, _| StandardNormal.sample(rng))
    }

    /// AR(1) factor mixed into white noise.
    fn factor_panel(rng: &mut ChaCha8Rng, p: usize, t: usize) -> DMatrix<f64> {
        let mut f = 0.0;
        let mix = DMatrix::from_fn(p, p, |_, _| rng.random_range(-2.0..2.0));
        let mut xi = gaussian(rng, p, t);
        for c in 0..t {
            let u: f64 = StandardNormal.sample(rng);
            f = 0.8 * f + u;
            xi[(0, c)] = f;
        }
        mix * xi
    }

    #[test]
    fn covariances_match_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let eta = gaussian(&mut rng, 3, 50);
        let m = 2;
        let cov = lagged_covariances(&eta, m).unwrap();
        let (p, t) = eta.shape();
        let mean: Vec<f64> = (0..p)
            .map(|i| (0..t).map(|c| eta[(i, c)]).sum::<f64>() / t as f64)
            .collect();
        let centered = |i: usize, c: isize| -> f64 {
            if c < 0 {
                0.0
            } else {
                eta[(i, c as usize)] - mean[i]
            }
        };
        for a in 0..p {
            for b in 0..p {
                let mut s = 0.0;
                for c in 0..t as isize {
                    s += centered(a, c) * centered(b, c);
                }
                assert!((cov.sigma_eta[(a, b)] - s / t as f64).abs() < 1e-12);
            }
        }
        for a in 0..p {
            for lb in 0..m * p {
                let (lag, b) = (lb / p + 1, lb % p);
                let mut s = 0.0;
                for c in 0..t as isize {
                    s += centered(a, c) * centered(b, c - lag as isize);
                }
                assert!((cov.sigma_eta_etam[(a, lb)] - s / t as f64).abs() < 1e-12);
            }
        }
        for la in 0..m * p {
            for lb in 0..m * p {
                let (lag_a, a) = (la / p + 1, la % p);
                let (lag_b, b) = (lb / p + 1, lb % p);
                let mut s = 0.0;
                for c in 0..t as isize {
                    s += centered(a, c - lag_a as isize) * centered(b, c - lag_b as isize);
                }
                assert!((cov.sigma_etam[(la, lb)] - s / t as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lag_one_block_is_truncated_sigma_eta() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let eta = gaussian(&mut rng, 3, 40);
        let cov = lagged_covariances(&eta, 1).unwrap();
        let last = eta.column(39) - &cov.mean;
        let expect = &cov.sigma_eta - &last * last.transpose() / 40.0;
        assert!((&cov.sigma_etam - expect).amax() < 1e-12);
    }

    #[test]
    fn whitened_input_has_identity_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let raw = gaussian(&mut rng, 4, 200);
        let cov = lagged_covariances(&raw, 1).unwrap();
        let w = numerics::inv_sqrt_spd(&cov.sigma_eta, 1e-10).unwrap();
        let mut white = raw.clone();
        for mut col in white.column_iter_mut() {
            col -= &cov.mean;
        }
        let white = w * white;
        let cov2 = lagged_covariances(&white, 1).unwrap();
        assert!((cov2.sigma_eta - DMatrix::identity(4, 4)).amax() < 1e-12);
    }

    #[test]
    fn constant_series_zero_covariance() {
        let eta = DMatrix::from_element(2, 20, 3.5);
        let cov = lagged_covariances(&eta, 1).unwrap();
        assert_eq!(cov.sigma_eta.amax(), 0.0);
        assert!(matches!(
            build_m_hat(&cov, 1e-10),
            Err(Error::AllEigenvaluesFloored { .. })
        ));
    }

    #[test]
    fn insufficient_sample() {
        let eta = DMatrix::zeros(4, 12);
        assert!(matches!(lagged_covariances(&eta, 2), Err(Error::InsufficientSample(_))));
    }

    #[test]
    fn m_hat_eigenvalues_are_squared_correlations() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let eta = factor_panel(&mut rng, 5, 300);
        let cov = lagged_covariances(&eta, 2).unwrap();
        let (m_hat, _) = build_m_hat(&cov, 1e-10).unwrap();
        assert!((&m_hat - m_hat.transpose()).amax() == 0.0);
        let e = sym_eig(&m_hat).unwrap();
        assert!(e.eigenvalues.iter().all(|&x| (-1e-10..=1.0 + 1e-10).contains(&x)));
        assert!(e.eigenvalues[0] > 0.3);
    }

    #[test]
    fn loadings_boundaries_and_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let eta = factor_panel(&mut rng, 4, 400);
        let cov = lagged_covariances(&eta, 2).unwrap();
        let (m_hat, w) = build_m_hat(&cov, 1e-10).unwrap();
        for r in [0, 2, 4] {
            let fm = estimate_loadings(&m_hat, &w, &eta, r).unwrap();
            assert_eq!(fm.factors.nrows(), r);
            assert_eq!(fm.noise_variates.nrows(), 4 - r);
            let ltl = fm.loadings.transpose() * &fm.loadings;
            assert!((ltl - DMatrix::identity(4, 4)).amax() <= 1e-8);
            let xi = fm.variates();
            let xi_cov = &xi * xi.transpose() / 400.0;
            assert!((xi_cov - DMatrix::identity(4, 4)).amax() <= 1e-6);
            assert!((&fm.unwhitener * &fm.whitener - DMatrix::identity(4, 4)).amax() < 1e-9);
        }
    }

    #[test]
    fn s_t_known_values() {
        let (s, df) = s_t_statistic(&[0.9, 0.0, 0.0], 2, 100, 2).unwrap();
        assert_eq!(s, 0.0);
        assert_eq!(df, 2 * (3 + 2));
        let eig = [0.9, 0.8, 0.7, 0.6, 0.55, 0.5];
        let (s, df) = s_t_statistic(&eig, 1, 101, 2).unwrap();
        assert!((s - 69.3147).abs() < 1e-4);
        assert_eq!(df, 7);
        // Clamped eigenvalue of one stays finite.
        let (s, _) = s_t_statistic(&[1.0 + 1e-13], 1, 10, 1).unwrap();
        assert!(s.is_finite());
    }

    #[test]
    fn c_t_known_values() {
        assert_eq!(c_t_statistic(32.0, 32), 0.0);
        let df = 18usize;
        let s = df as f64 + 2.0 * (2.0 * df as f64).sqrt();
        assert!((c_t_statistic(s, df) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn s_t_monotone_in_v() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let mut eig: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..1.0)).collect();
            eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let mut prev = 0.0;
            for v in 1..=8 {
                let (s, _) = s_t_statistic(&eig, v, 500, 2).unwrap();
                assert!(s >= prev);
                prev = s;
            }
        }
    }

    #[test]
    fn all_zero_eigenvalues_select_no_factors() {
        let rep = select_num_factors(&[0.0; 5], 500, 2, 0.05, Regime::default()).unwrap();
        assert!(rep.rows.iter().all(|r| r.s_t == 0.0 && !r.rejected));
        assert_eq!(rep.selected_v, 5);
        assert_eq!(rep.selected_r, 0);
    }

    #[test]
    fn immediate_rejection_gives_full_rank() {
        let rep = select_num_factors(&[0.9, 0.8, 0.7], 500, 2, 0.05, Regime::ChiSquare).unwrap();
        assert_eq!(rep.selected_v, 0);
        assert_eq!(rep.selected_r, 3);
    }

    #[test]
    fn sequential_rule_stops_at_first_rejection() {
        // Construct eigenvalues whose S_T values reproduce the published
        // PM2.5 sequence 12.43, 36.11, 72.09, 154.17 for p = 15, m = 2.
        let (t, m, p) = (522usize, 2usize, 15usize);
        let scale = (t - m + 1) as f64;
        let targets = [12.43, 36.11, 72.09, 154.17];
        let mut eig = vec![0.5; p];
        let mut prev = 0.0;
        for (i, s) in targets.iter().enumerate() {
            let inc = (s - prev) / scale;
            eig[p - 1 - i] = 1.0 - (-inc).exp();
            prev = *s;
        }
        let rep = select_num_factors(&eig, t, m, 0.05, Regime::ChiSquare).unwrap();
        let pv: Vec<f64> = rep.rows[..4].iter().map(|r| r.chi_square_p_value).collect();
        assert!((pv[0] - 0.71).abs() < 0.01, "{pv:?}");
        assert!((pv[1] - 0.37).abs() < 0.01, "{pv:?}");
        assert!((pv[2] - 0.051).abs() < 0.002, "{pv:?}");
        assert!(pv[3] < 0.005);
        assert_eq!(rep.selected_v, 3);
        assert_eq!(rep.selected_r, 12);
    }

    #[test]
    fn auto_regime_switches_on_dimension() {
        let small = select_num_factors(&[0.0; 10], 500, 2, 0.05, Regime::default()).unwrap();
        assert_eq!(small.regime, Regime::ChiSquare);
        let large = select_num_factors(&[0.0; 11], 500, 2, 0.05, Regime::default()).unwrap();
        assert_eq!(large.regime, Regime::Normal);
    }

    #[test]
    fn ratio_examples() {
        let lam = [4.0f64, 2.0, 1.0, 0.01, 0.005];
        let sq: Vec<f64> = lam.iter().map(|x| x * x).collect();
        assert_eq!(ratio_estimator(&sq).unwrap(), 3);
        assert_eq!(ratio_estimator(&[0.3; 6]).unwrap(), 1);
        assert!(matches!(ratio_estimator(&[0.0; 4]), Err(Error::DegenerateSpectrum)));
        // Zero denominators are skipped.
        assert_eq!(ratio_estimator(&[0.5, 0.0, 0.0, 0.0]).unwrap(), 1);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]

        #[test]
        fn prop_loadings_orthonormal_and_variates_white(seed in 0u64..u64::MAX, p in 2usize..6, t in 150usize..400, m in 1usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let eta = factor_panel(&mut rng, p, t);
            let cov = lagged_covariances(&eta, m).unwrap();
            let (m_hat, w) = build_m_hat(&cov, 1e-10).unwrap();
            let e = sym_eig(&m_hat).unwrap();
            proptest::prop_assert!(e.eigenvalues.iter().all(|&x| (-1e-10..=1.0 + 1e-10).contains(&x)));
            for r in 0..=p {
                let fm = estimate_loadings(&m_hat, &w, &eta, r).unwrap();
                let ltl = fm.loadings.transpose() * &fm.loadings;
                proptest::prop_assert!((ltl - DMatrix::identity(p, p)).amax() <= 1e-8);
                let xi = fm.variates();
                let xi_cov = &xi * xi.transpose() / t as f64;
                proptest::prop_assert!((xi_cov - DMatrix::identity(p, p)).amax() <= 1e-6);
            }
        }
    }
}
