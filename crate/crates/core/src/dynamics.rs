//! VAR dynamics for the extracted factors, structural forecasts and rolling
//! out-of-sample evaluation.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cca_factor::{self, FactorConfig, FactorModel, TestReport};
use crate::detrend::{self, BicTable, Decomposition, OrderGrid, OrderSpec};
use crate::error::{Error, Result};
use crate::numerics::QrDesign;
use crate::panel::TimePanel;

#[derive(Debug, Clone)]
pub struct VarModel {
    pub order: usize,
    /// `Phi_1 .. Phi_d`, each `r x r`.
    pub coefficients: Vec<DMatrix<f64>>,
    pub intercept: DVector<f64>,
    /// Residual covariance with divisor `T - d`.
    pub innovation_cov: DMatrix<f64>,
    /// Largest modulus among the companion-matrix eigenvalues.
    pub spectral_radius: f64,
    /// Set when `spectral_radius >= 1`.
    pub stationarity_warning: bool,
}

impl VarModel {
    pub fn dim(&self) -> usize {
        self.intercept.len()
    }

    /// One-step conditional mean given the most recent `order` values,
    /// newest first.
    pub fn step(&self, recent: &[DVector<f64>]) -> DVector<f64> {
        let mut next = self.intercept.clone();
        for (phi, f) in self.coefficients.iter().zip(recent) {
            next += phi * f;
        }
        next
    }

    /// `(I - sum Phi_i)^{-1} c`, or `None` when that matrix is singular.
    pub fn unconditional_mean(&self) -> Option<DVector<f64>> {
        let r = self.dim();
        let mut a = DMatrix::identity(r, r);
        for phi in &self.coefficients {
            a -= phi;
        }
        a.lu().solve(&self.intercept)
    }

    /// Iterated forecasts `f_{T+1|T} .. f_{T+h|T}` from the tail of
    /// `history` (`r x T`), as an `r x h` matrix.
    pub fn forecast_path(&self, history: &DMatrix<f64>, h: usize) -> DMatrix<f64> {
        let r = self.dim();
        let t_len = history.ncols();
        // Newest first.
        let mut recent: Vec<DVector<f64>> = (1..=self.order)
            .map(|lag| {
                if lag <= t_len {
                    history.column(t_len - lag).into_owned()
                } else {
                    DVector::zeros(r)
                }
            })
            .collect();
        let mut out = DMatrix::zeros(r, h);
        for tau in 0..h {
            let next = self.step(&recent);
            out.set_column(tau, &next);
            recent.pop();
            recent.insert(0, next);
        }
        out
    }
}

fn companion_spectral_radius(coefficients: &[DMatrix<f64>], r: usize) -> f64 {
    let d = coefficients.len();
    if r == 0 || d == 0 {
        return 0.0;
    }
    let n = r * d;
    let mut comp = DMatrix::zeros(n, n);
    for (i, phi) in coefficients.iter().enumerate() {
        comp.view_mut((0, i * r), (r, r)).copy_from(phi);
    }
    for i in r..n {
        comp[(i, i - r)] = 1.0;
    }
    comp.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Equation-by-equation least-squares VAR(`order`) with intercept.
pub fn fit_var(factors: &DMatrix<f64>, order: usize) -> Result<VarModel> {
    let (r, t_len) = factors.shape();
    if order < 1 {
        return Err(Error::InvalidArgument("VAR order must be at least 1".into()));
    }
    if r == 0 {
        return Ok(VarModel {
            order,
            coefficients: vec![DMatrix::zeros(0, 0); order],
            intercept: DVector::zeros(0),
            innovation_cov: DMatrix::zeros(0, 0),
            spectral_radius: 0.0,
            stationarity_warning: false,
        });
    }
    let n_reg = 1 + r * order;
    if t_len <= r * order + 1 {
        return Err(Error::InsufficientSample(format!(
            "VAR({order}) in {r} dimensions needs more than {} observations, got {t_len}",
            r * order + 1
        )));
    }
    let n_obs = t_len - order;
    let mut x = DMatrix::zeros(n_obs, n_reg);
    for row in 0..n_obs {
        let t = row + order;
        x[(row, 0)] = 1.0;
        for lag in 1..=order {
            for j in 0..r {
                x[(row, 1 + (lag - 1) * r + j)] = factors[(j, t - lag)];
            }
        }
    }
    let design = QrDesign::new(&x)?;
    let mut coefficients = vec![DMatrix::zeros(r, r); order];
    let mut intercept = DVector::zeros(r);
    let mut residuals = DMatrix::zeros(r, n_obs);
    for eq in 0..r {
        let y = factors.row(eq).columns(order, n_obs).transpose();
        let ls = design.solve(&x, &y);
        intercept[eq] = ls.coef[0];
        for lag in 1..=order {
            for j in 0..r {
                coefficients[lag - 1][(eq, j)] = ls.coef[1 + (lag - 1) * r + j];
            }
        }
        residuals.set_row(eq, &ls.residuals.transpose());
    }
    let innovation_cov = &residuals * residuals.transpose() / n_obs as f64;
    let spectral_radius = companion_spectral_radius(&coefficients, r);
    Ok(VarModel {
        order,
        coefficients,
        intercept,
        innovation_cov,
        spectral_radius,
        stationarity_warning: spectral_radius >= 1.0,
    })
}

/// Forecast of every component of the panel over `1..=h` steps ahead.
/// Each matrix has one column per horizon.
#[derive(Debug, Clone)]
pub struct ForecastResult {
    pub horizon: usize,
    /// `p x h`: `trend + seasonal + irregular`.
    pub panel_forecast: DMatrix<f64>,
    /// `r x h`.
    pub factor_forecast: DMatrix<f64>,
    pub trend: DMatrix<f64>,
    pub seasonal: DMatrix<f64>,
    /// `W^{-1} L_1 f_{T+tau|T}`; noise variates are forecast as zero.
    pub irregular: DMatrix<f64>,
}

impl ForecastResult {
    /// Rows = horizons, columns = series.
    pub fn to_csv(&self, series_names: &[String]) -> String {
        crate::panel::matrix_to_csv(
            "horizon",
            &(1..=self.horizon).map(|h| h.to_string()).collect::<Vec<_>>(),
            series_names,
            &self.panel_forecast.transpose(),
        )
    }
}

/// Structural forecast: trend and seasonal extrapolated from the fitted
/// coefficients, irregular part mapped back from the VAR factor forecasts.
pub fn forecast(
    model: &VarModel,
    factors: &DMatrix<f64>,
    decomposition: &Decomposition,
    factor_model: &FactorModel,
    h: usize,
) -> Result<ForecastResult> {
    if h < 1 {
        return Err(Error::InvalidArgument("forecast horizon must be at least 1".into()));
    }
    if model.dim() != factor_model.r || factors.nrows() != factor_model.r {
        return Err(Error::InvalidArgument(format!(
            "VAR dimension {} does not match factor count {}",
            model.dim(),
            factor_model.r
        )));
    }
    let p = decomposition.n_series();
    let t_len = decomposition.len();
    let factor_forecast = model.forecast_path(factors, h);
    let mut trend = DMatrix::zeros(p, h);
    let mut seasonal = DMatrix::zeros(p, h);
    let mut irregular = DMatrix::zeros(p, h);
    for tau in 0..h {
        let (tr, se) = decomposition.evaluate(t_len + tau + 1);
        trend.set_column(tau, &tr);
        seasonal.set_column(tau, &se);
        let f = factor_forecast.column(tau).into_owned();
        irregular.set_column(tau, &factor_model.factor_to_irregular(&f));
    }
    let panel_forecast = &trend + &seasonal + &irregular;
    Ok(ForecastResult {
        horizon: h,
        panel_forecast,
        factor_forecast,
        trend,
        seasonal,
        irregular,
    })
}

/// How the panel is modeled before forecasting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "UPPERCASE")]
pub enum Variant {
    /// Trend + factors, no seasonal part.
    #[value(name = "GT1", alias = "gt1")]
    Gt1,
    /// Trend + seasonal + factors.
    #[value(name = "GT2", alias = "gt2")]
    Gt2,
    /// VAR fitted directly to the observed panel.
    #[value(name = "VEC", alias = "vec")]
    Vec,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineConfig {
    pub variant: Variant,
    /// Fixed trend/seasonal order; when absent it is selected by BIC.
    pub order: Option<OrderSpec>,
    /// Search grid for BIC selection; defaults to the full grid for the
    /// panel's period (with `k = 0` for [`Variant::Gt1`]).
    pub grid: Option<OrderGrid>,
    pub c_t: Option<f64>,
    pub factor: FactorConfig,
    /// Fixed factor count; when absent it comes from the sequential test.
    pub r: Option<usize>,
    pub var_order: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Gt2,
            order: None,
            grid: None,
            c_t: None,
            factor: FactorConfig::default(),
            r: None,
            var_order: 1,
        }
    }
}

/// Everything estimated from one panel.
#[derive(Debug, Clone)]
pub struct FittedPipeline {
    pub variant: Variant,
    pub bic: Option<BicTable>,
    pub decomposition: Option<Decomposition>,
    pub factor_model: Option<FactorModel>,
    pub test: Option<TestReport>,
    pub var: VarModel,
    /// Series the VAR was fitted to: factors, or the panel itself for VEC.
    pub var_input: DMatrix<f64>,
    pub n_series: usize,
}

pub fn fit_pipeline(panel: &TimePanel, config: &PipelineConfig) -> Result<FittedPipeline> {
    let p = panel.n_series();
    if config.variant == Variant::Vec {
        let var = fit_var(panel.values(), config.var_order)?;
        return Ok(FittedPipeline {
            variant: config.variant,
            bic: None,
            decomposition: None,
            factor_model: None,
            test: None,
            var,
            var_input: panel.values().clone(),
            n_series: p,
        });
    }
    let s = panel.periodicity();
    let (order, bic) = match config.order {
        Some(order) => {
            let order = if config.variant == Variant::Gt1 {
                OrderSpec { k: 0, ..order }
            } else {
                order
            };
            (order, None)
        }
        None => {
            let mut grid = config.grid.unwrap_or_else(|| OrderGrid::default_for_period(s));
            if config.variant == Variant::Gt1 {
                grid.k_min = 0;
                grid.k_max = 0;
            }
            let table = detrend::select_orders(panel, grid, config.c_t)?;
            (table.selected_order(s), Some(table))
        }
    };
    let decomposition = detrend::fit(panel, order)?;
    let (factor_model, test) = cca_factor::analyze(&decomposition.irregular, &config.factor, config.r)?;
    let var = fit_var(&factor_model.factors, config.var_order)?;
    Ok(FittedPipeline {
        variant: config.variant,
        bic,
        var_input: factor_model.factors.clone(),
        decomposition: Some(decomposition),
        factor_model: Some(factor_model),
        test: Some(test),
        var,
        n_series: p,
    })
}

impl FittedPipeline {
    pub fn forecast(&self, h: usize) -> Result<ForecastResult> {
        match (&self.decomposition, &self.factor_model) {
            (Some(dec), Some(fm)) => forecast(&self.var, &self.var_input, dec, fm, h),
            _ => {
                if h < 1 {
                    return Err(Error::InvalidArgument("forecast horizon must be at least 1".into()));
                }
                let path = self.var.forecast_path(&self.var_input, h);
                let zeros = DMatrix::zeros(self.n_series, h);
                Ok(ForecastResult {
                    horizon: h,
                    panel_forecast: path.clone(),
                    factor_forecast: DMatrix::zeros(0, h),
                    trend: zeros.clone(),
                    seasonal: zeros,
                    irregular: path,
                })
            }
        }
    }
}

/// First forecast origin: a training length, or a fraction of the sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// Train on `[1, tau0]` for the first forecast.
    Index(usize),
    /// `tau0 = ceil(fraction * T)`.
    Fraction(f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct RollingConfig {
    pub origin: Origin,
    pub h: usize,
    pub pipeline: PipelineConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvaluationReport {
    pub h: usize,
    pub variant: Variant,
    pub var_order: usize,
    /// Mean over origins of `||y_hat - y||_2 / sqrt(p)`.
    pub fe: f64,
    /// Sample standard deviation of the per-origin errors (absent with a
    /// single origin).
    pub std_error: Option<f64>,
    /// Training lengths `tau`, in order.
    pub origins: Vec<usize>,
    pub errors: Vec<f64>,
}

/// `p^{-1/2} ||y_hat - y||_2`.
pub fn scaled_error(forecast: &DVector<f64>, actual: &DVector<f64>) -> f64 {
    (forecast - actual).norm() / (actual.len() as f64).sqrt()
}

/// Mean and sample standard deviation of per-origin errors.
pub fn summarize_errors(errors: &[f64]) -> (f64, Option<f64>) {
    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let sd = (errors.len() > 1).then(|| {
        let ss: f64 = errors.iter().map(|e| (e - mean) * (e - mean)).sum();
        (ss / (n - 1.0)).sqrt()
    });
    (mean, sd)
}

/// Refit the pipeline on `[1, tau]` for every `tau = tau0..=T-h` and score
/// the `h`-step forecast of `y_{tau+h}`.
pub fn rolling_evaluate(panel: &TimePanel, config: &RollingConfig) -> Result<EvaluationReport> {
    let t_len = panel.len();
    let h = config.h;
    if h < 1 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let tau0 = match config.origin {
        Origin::Index(i) => i,
        Origin::Fraction(f) => {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "training fraction must be in (0, 1), got {f}"
                )));
            }
            (f * t_len as f64).ceil() as usize
        }
    };
    if tau0 < 2 || tau0 + h > t_len {
        return Err(Error::InvalidArgument(format!(
            "first origin {tau0} with horizon {h} does not fit in T = {t_len}"
        )));
    }
    let origins: Vec<usize> = (tau0..=t_len - h).collect();
    let results: Vec<Result<f64>> = origins
        .par_iter()
        .map(|&tau| {
            let train = panel.head(tau)?;
            let fitted = fit_pipeline(&train, &config.pipeline)?;
            let fc = fitted.forecast(h)?;
            let predicted = fc.panel_forecast.column(h - 1).into_owned();
            let actual = panel.values().column(tau + h - 1).into_owned();
            Ok(scaled_error(&predicted, &actual))
        })
        .collect();
    let mut errors = Vec::with_capacity(origins.len());
    for (tau, res) in origins.iter().zip(results) {
        match res {
            Ok(e) => errors.push(e),
            Err(source) => {
                return Err(Error::AtOrigin {
                    origin: *tau,
                    source: Box::new(source),
                })
            }
        }
    }
    let (fe, std_error) = summarize_errors(&errors);
    Ok(EvaluationReport {
        h,
        variant: config.pipeline.variant,
        var_order: config.pipeline.var_order,
        fe,
        std_error,
        origins,
        errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn simulate_var1(phi: &DMatrix<f64>, t_len: usize, noise: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let r = phi.nrows();
        let mut f = DMatrix::zeros(r, t_len);
        let mut prev = DVector::from_element(r, 1.0);
        for t in 0..t_len {
            let u = DVector::from_fn(r, |_, _| {
                let z: f64 = StandardNormal.sample(rng);
                noise * z
            });
            let next = phi * &prev + u;
            f.set_column(t, &next);
            prev = next;
        }
        f
    }

    #[test]
    fn exact_var_recovered() {
        let phi = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.8]));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut f = simulate_var1(&phi, 30, 0.0, &mut rng);
        // Distinct starting values so the two columns are not collinear.
        f.set_column(0, &DVector::from_vec(vec![1.0, -2.0]));
        for t in 1..30 {
            let next = &phi * f.column(t - 1);
            f.set_column(t, &next);
        }
        let model = fit_var(&f, 1).unwrap();
        assert!((&model.coefficients[0] - &phi).amax() < 1e-8);
        assert!(model.intercept.amax() < 1e-8);
        assert!((model.spectral_radius - 0.8).abs() < 1e-8);
        assert!(!model.stationarity_warning);
    }

    #[test]
    fn explosive_var_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let phi = DMatrix::from_element(1, 1, 1.2);
        let f = simulate_var1(&phi, 40, 1.0, &mut rng);
        let model = fit_var(&f, 1).unwrap();
        assert!(model.stationarity_warning);
        assert!(model.spectral_radius > 1.0);
    }

    #[test]
    fn insufficient_sample() {
        let f = DMatrix::zeros(3, 4);
        assert!(matches!(fit_var(&f, 1), Err(Error::InsufficientSample(_))));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = DMatrix::from_fn(3, 8, |_, _| rng.random_range(-1.0..1.0));
        assert!(matches!(fit_var(&f, 2), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn var1_forecast_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let phi = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, -0.2, 0.6]);
        let f = simulate_var1(&phi, 300, 1.0, &mut rng);
        let model = fit_var(&f, 1).unwrap();
        let path = model.forecast_path(&f, 6);
        let last = f.column(299).into_owned();
        let a = &model.coefficients[0];
        for h in 1..=6 {
            let mut expect = a.pow(h as u32) * &last;
            for j in 0..h {
                expect += a.pow(j as u32) * &model.intercept;
            }
            assert!((path.column(h - 1) - expect).amax() < 1e-10);
        }
        let far = model.forecast_path(&f, 200);
        let mean = model.unconditional_mean().unwrap();
        assert!((far.column(199) - mean).amax() < 1e-6);
    }

    #[test]
    fn var2_converges_to_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = DMatrix::from_fn(2, 400, |_, _| rng.random_range(-1.0..1.0) + 0.3);
        let model = fit_var(&f, 2).unwrap();
        let far = model.forecast_path(&f, 200);
        let mean = model.unconditional_mean().unwrap();
        assert!((far.column(199) - mean).amax() < 1e-6);
    }

    #[test]
    fn zero_var_gives_structural_forecast_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t_len = 120;
        let y = DMatrix::from_fn(3, t_len, |i, c| {
            let t = (c + 1) as f64;
            let e: f64 = StandardNormal.sample(&mut rng);
            i as f64 + 0.1 * t + (2.0 * std::f64::consts::PI * t / 12.0).cos() + e
        });
        let dec = detrend::fit_matrix(&y, OrderSpec::new(1, 1, 12)).unwrap();
        let (fm, _) = cca_factor::analyze(&dec.irregular, &FactorConfig::default(), Some(2)).unwrap();
        let var = VarModel {
            order: 1,
            coefficients: vec![DMatrix::zeros(2, 2)],
            intercept: DVector::zeros(2),
            innovation_cov: DMatrix::identity(2, 2),
            spectral_radius: 0.0,
            stationarity_warning: false,
        };
        let fc = forecast(&var, &fm.factors, &dec, &fm, 4).unwrap();
        assert_eq!(fc.factor_forecast.amax(), 0.0);
        assert!((&fc.panel_forecast - (&fc.trend + &fc.seasonal)).amax() == 0.0);
        let (tr, se) = dec.evaluate(t_len + 2);
        assert!((fc.panel_forecast.column(1) - (tr + se)).amax() < 1e-12);
    }

    #[test]
    fn forecast_reconstruction_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let phi = DMatrix::from_diagonal(&DVector::from_vec(vec![0.7]));
        let f = simulate_var1(&phi, 300, 1.0, &mut rng);
        let y = DMatrix::from_fn(3, 300, |i, c| {
            let e: f64 = StandardNormal.sample(&mut rng);
            (i as f64 + 1.0) * f[(0, c)] + e + 0.01 * c as f64
        });
        let panel = TimePanel::from_matrix(y, 12).unwrap();
        let fitted = fit_pipeline(&panel, &PipelineConfig::default()).unwrap();
        let fc = fitted.forecast(5).unwrap();
        let fm = fitted.factor_model.as_ref().unwrap();
        for tau in 0..5 {
            let f = fc.factor_forecast.column(tau).into_owned();
            let eta = &fm.unwhitener * fm.factor_loadings() * f;
            let expect = fc.trend.column(tau) + fc.seasonal.column(tau) + eta;
            assert!((fc.panel_forecast.column(tau) - expect).amax() < 1e-8);
        }
    }

    #[test]
    fn var_error_shrinks_at_root_t_rate() {
        let median_err = |t_len: usize, seed: u64| {
            let mut errs: Vec<f64> = (0..200)
                .map(|rep| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed * 1000 + rep);
                    let phi = DMatrix::from_diagonal(&DVector::from_fn(3, |_, _| rng.random_range(0.2..0.9)));
                    let f = simulate_var1(&phi, t_len, 1.0, &mut rng);
                    let model = fit_var(&f, 1).unwrap();
                    (&model.coefficients[0] - &phi).singular_values()[0]
                })
                .collect();
            errs.sort_by(f64::total_cmp);
            (errs[99] + errs[100]) / 2.0
        };
        let ratio = median_err(500, 1) / median_err(2000, 2);
        assert!((1.7..2.3).contains(&ratio), "ratio {ratio}");
    }

    fn structural_panel(t_len: usize) -> TimePanel {
        let s = 12;
        let y = DMatrix::from_fn(3, t_len, |i, c| {
            let t = (c + 1) as f64;
            let w = 2.0 * std::f64::consts::PI * t / s as f64;
            (i as f64 + 1.0) + 0.05 * t * (i as f64 - 1.0) + (i as f64 * 0.7 + 0.3) * w.cos() - 0.5 * w.sin()
                + 0.2 * (2.0 * w).sin()
        });
        TimePanel::from_matrix(y, s).unwrap()
    }

    #[test]
    fn noise_free_pipeline_forecast_is_exact() {
        let full = structural_panel(130);
        let train = full.head(120).unwrap();
        let fitted = fit_pipeline(&train, &PipelineConfig::default()).unwrap();
        let fc = fitted.forecast(10).unwrap();
        let future = full.values().columns(120, 10);
        assert!((&fc.panel_forecast - future).amax() < 1e-6);
    }

    #[test]
    fn perfect_forecast_scores_zero() {
        let panel = structural_panel(100);
        let cfg = RollingConfig {
            origin: Origin::Index(90),
            h: 2,
            pipeline: PipelineConfig::default(),
        };
        let report = rolling_evaluate(&panel, &cfg).unwrap();
        assert_eq!(report.origins, (90..=98).collect::<Vec<_>>());
        assert!(report.fe < 1e-6, "fe {}", report.fe);
    }

    #[test]
    fn error_summary() {
        let p = 4;
        let actual = DVector::zeros(p);
        let c = 1.7;
        let fcast = DVector::from_element(p, c);
        // ||e|| = c sqrt(p) -> scaled error c.
        assert!((scaled_error(&fcast, &actual) - c).abs() < 1e-12);
        let (m, sd) = summarize_errors(&[c, c, c]);
        assert!((m - c).abs() < 1e-12);
        assert_eq!(sd, Some(0.0));
        assert_eq!(summarize_errors(&[2.0]).1, None);
    }

    #[test]
    fn rolling_origin_bounds() {
        let panel = TimePanel::from_matrix(DMatrix::from_fn(2, 30, |i, c| (i + c) as f64), 4).unwrap();
        let cfg = RollingConfig {
            origin: Origin::Index(29),
            h: 2,
            pipeline: PipelineConfig::default(),
        };
        assert!(matches!(rolling_evaluate(&panel, &cfg), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn rolling_error_names_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let panel = TimePanel::from_matrix(DMatrix::from_fn(4, 40, |_, _| rng.random_range(-1.0..1.0)), 4).unwrap();
        let cfg = RollingConfig {
            origin: Origin::Index(10),
            h: 1,
            pipeline: PipelineConfig::default(),
        };
        match rolling_evaluate(&panel, &cfg) {
            Err(Error::AtOrigin { origin, .. }) => assert_eq!(origin, 10),
            other => panic!("expected failure at first origin, got {other:?}"),
        }
    }
}
