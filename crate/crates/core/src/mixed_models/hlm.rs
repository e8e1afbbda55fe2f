//! Maximum-likelihood fitting of two-level linear models.
//!
//! Level 1: `y_ij = b0_j + b1_j x_ij + e_ij`, `e_ij ~ N(0, sigma2)`.
//! Level 2: `b0_j = g00 [+ g01 z_j] + u0_j`, `b1_j = g10 [+ g11 z_j] [+ u1_j]`,
//! with `(u0_j, u1_j) ~ N(0, tau)`.
//!
//! The random-effect covariance is written relative to the residual
//! variance, `tau = sigma2 * L L'` with `L` lower triangular. For a given `L`
//! the fixed effects (by generalized least squares) and `sigma2` have closed
//! forms, so only the entries of `L` are optimized. All per-group algebra
//! works on `I + L' Z'Z L`, which stays positive definite when `L` is
//! singular, so boundary estimates such as `tau11 = 0` are ordinary points
//! of the parameter space.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::optim::{bfgs, Settings};
use super::table::ObservationTable;
use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 500;
pub const LOGLIK_REL_TOL: f64 = 1e-8;
const GRAD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Random intercepts, one common slope.
    InterceptsOnly,
    /// Correlated random intercepts and slopes.
    RandomSlopes,
    /// Random slopes with the group covariate on intercept and slope.
    Moderated,
}

impl ModelKind {
    fn n_fixed(self) -> usize {
        match self {
            ModelKind::InterceptsOnly | ModelKind::RandomSlopes => 2,
            ModelKind::Moderated => 4,
        }
    }

    fn n_random(self) -> usize {
        match self {
            ModelKind::InterceptsOnly => 1,
            _ => 2,
        }
    }

    fn n_theta(self) -> usize {
        let q = self.n_random();
        q * (q + 1) / 2
    }

    /// Names of the fixed effects, in the order of [`HlmFit::gamma`].
    pub fn gamma_names(self) -> &'static [&'static str] {
        match self {
            ModelKind::InterceptsOnly | ModelKind::RandomSlopes => &["g00", "g10"],
            ModelKind::Moderated => &["g00", "g10", "g01", "g11"],
        }
    }
}

/// Estimates of one fitted hierarchical model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HlmFit {
    pub model_kind: ModelKind,
    /// `[g00, g10]`, or `[g00, g10, g01, g11]` for the moderated model.
    pub gamma: Vec<f64>,
    pub se_gamma: Vec<f64>,
    /// `[[tau00, tau01], [tau01, tau11]]`; slope entries are zero for the
    /// intercepts-only model.
    pub tau: [[f64; 2]; 2],
    pub sigma2: f64,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    pub standardized: bool,
    pub n_obs: usize,
    pub n_groups: usize,
}

impl HlmFit {
    pub fn tau11(&self) -> f64 {
        self.tau[1][1]
    }

    /// Cross-level interaction and its standard error (moderated model only).
    pub fn gamma11(&self) -> Option<(f64, f64)> {
        (self.model_kind == ModelKind::Moderated).then(|| (self.gamma[3], self.se_gamma[3]))
    }
}

struct GroupDesign {
    x: DMatrix<f64>,
    z: DMatrix<f64>,
    y: DVector<f64>,
    ztz: DMatrix<f64>,
    ztx: DMatrix<f64>,
    zty: DVector<f64>,
    xtx: DMatrix<f64>,
    xty: DVector<f64>,
}

pub(crate) struct Profile {
    pub loglik: f64,
    /// Log-likelihood of the internally rescaled response; this is what the
    /// optimizer sees.
    pub loglik_scaled: f64,
    pub beta: DVector<f64>,
    pub xtwx: DMatrix<f64>,
    pub sigma2: f64,
}

/// Design matrices of one model on one table. The response is stored
/// divided by its sample sd, so fits are equivariant under `y -> a y` up to
/// rounding of that division; results are reported in the original units.
pub(crate) struct Problem {
    kind: ModelKind,
    groups: Vec<GroupDesign>,
    n_obs: usize,
    y_scale: f64,
}

impl Problem {
    pub fn new(table: &ObservationTable, kind: ModelKind) -> Result<Self> {
        if kind == ModelKind::Moderated && table.covariates().is_none() {
            return Err(Error::Argument("the moderated model needs a group covariate z".into()));
        }
        let p = kind.n_fixed();
        let q = kind.n_random();
        let all_y: Vec<f64> = table.rows().iter().map(|o| o.y).collect();
        let sd = sample_var(&all_y).sqrt();
        let y_scale = if sd > 0.0 && sd.is_finite() { sd } else { 1.0 };
        let groups: Vec<GroupDesign> = table
            .group_columns()
            .into_iter()
            .map(|g| {
                let nj = g.x.len();
                let z_j = g.z.unwrap_or(0.0);
                let x = DMatrix::from_fn(nj, p, |i, c| match c {
                    0 => 1.0,
                    1 => g.x[i],
                    2 => z_j,
                    _ => g.x[i] * z_j,
                });
                let z = DMatrix::from_fn(nj, q, |i, c| if c == 0 { 1.0 } else { g.x[i] });
                let y = DVector::from_iterator(nj, g.y.iter().map(|v| v / y_scale));
                GroupDesign {
                    ztz: z.tr_mul(&z),
                    ztx: z.tr_mul(&x),
                    zty: z.tr_mul(&y),
                    xtx: x.tr_mul(&x),
                    xty: x.tr_mul(&y),
                    x,
                    z,
                    y,
                }
            })
            .collect();
        Ok(Self {
            kind,
            n_obs: table.len(),
            groups,
            y_scale,
        })
    }

    fn lambda(&self, theta: &[f64]) -> DMatrix<f64> {
        match self.kind.n_random() {
            1 => DMatrix::from_element(1, 1, theta[0]),
            _ => DMatrix::from_row_slice(2, 2, &[theta[0], 0.0, theta[1], theta[2]]),
        }
    }

    /// Profiled log-likelihood at relative Cholesky factor `theta`.
    pub fn profile(&self, theta: &[f64]) -> Result<Profile> {
        let lam = self.lambda(theta);
        let q = lam.nrows();
        let p = self.kind.n_fixed();
        let mut xtwx = DMatrix::<f64>::zeros(p, p);
        let mut xtwy = DVector::<f64>::zeros(p);
        let mut logdet = 0.0;
        let mut factors: Vec<Cholesky<f64, Dyn>> = Vec::with_capacity(self.groups.len());

        for g in &self.groups {
            let a = lam.tr_mul(&g.ztz) * &lam + DMatrix::<f64>::identity(q, q);
            let chol = a
                .cholesky()
                .ok_or_else(|| Error::Numerical("random-effect system is not positive definite".into()))?;
            logdet += 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            let b = lam.tr_mul(&g.ztx);
            let c = lam.tr_mul(&g.zty);
            let ainv_b = chol.solve(&b);
            let ainv_c = chol.solve(&c);
            xtwx += &g.xtx - b.tr_mul(&ainv_b);
            xtwy += &g.xty - b.tr_mul(&ainv_c);
            factors.push(chol);
        }

        let xtwx = (&xtwx + xtwx.transpose()) * 0.5;
        let gls = xtwx
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("singular GLS system for the fixed effects".into()))?;
        let beta = gls.solve(&xtwy);

        let mut rwr = 0.0;
        for (g, chol) in self.groups.iter().zip(&factors) {
            let r = &g.y - &g.x * &beta;
            let e = lam.tr_mul(&g.z.tr_mul(&r));
            rwr += r.norm_squared() - e.dot(&chol.solve(&e));
        }
        let n = self.n_obs as f64;
        let sigma2 = rwr / n;
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::Numerical(format!("residual variance is not positive ({sigma2:e})")));
        }
        let s = self.y_scale;
        let loglik_scaled = -0.5 * n * ((2.0 * PI * sigma2).ln() + 1.0) - 0.5 * logdet;
        Ok(Profile {
            loglik: loglik_scaled - n * s.ln(),
            loglik_scaled,
            beta: beta * s,
            xtwx,
            sigma2: sigma2 * s * s,
        })
    }

    /// Start from per-group OLS: intercept/slope sample variances over the
    /// pooled residual variance.
    fn start(&self) -> Vec<f64> {
        let mut intercepts = Vec::new();
        let mut slopes = Vec::new();
        let mut ssr = 0.0;
        for g in &self.groups {
            let xs = g.x.column(1);
            let n = xs.len() as f64;
            let mx = xs.mean();
            let my = g.y.mean();
            let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
            let sxy: f64 = xs.iter().zip(g.y.iter()).map(|(x, y)| (x - mx) * (y - my)).sum();
            let b = sxy / sxx;
            let a = my - b * mx;
            ssr += xs
                .iter()
                .zip(g.y.iter())
                .map(|(x, y)| (y - a - b * x).powi(2))
                .sum::<f64>();
            intercepts.push(a);
            slopes.push(b);
            let _ = n;
        }
        let dof = (self.n_obs - 2 * self.groups.len()).max(1) as f64;
        let var_y = {
            let all: Vec<f64> = self.groups.iter().flat_map(|g| g.y.iter().copied()).collect();
            let m = all.iter().sum::<f64>() / all.len() as f64;
            all.iter().map(|v| (v - m).powi(2)).sum::<f64>() / all.len() as f64
        };
        let s2 = (ssr / dof).max(1e-12 * var_y).max(f64::MIN_POSITIVE);
        let rel = |v: &[f64]| (sample_var(v) / s2).max(1e-4).sqrt();
        match self.kind.n_random() {
            1 => vec![rel(&intercepts)],
            _ => vec![rel(&intercepts), 0.0, rel(&slopes)],
        }
    }

    pub fn fit(&self, standardized: bool) -> Result<HlmFit> {
        self.fit_from(self.start(), standardized)
    }

    pub fn fit_from(&self, start: Vec<f64>, standardized: bool) -> Result<HlmFit> {
        assert_eq!(start.len(), self.kind.n_theta());
        let objective = |theta: &DVector<f64>| match self.profile(theta.as_slice()) {
            Ok(p) => -p.loglik_scaled,
            Err(_) => f64::NAN,
        };
        let min = bfgs(
            &objective,
            DVector::from_vec(start),
            &Settings {
                max_iter: MAX_ITERATIONS,
                rel_tol: LOGLIK_REL_TOL,
                grad_tol: GRAD_TOL,
            },
        );
        let fit = self.assemble(min.x.as_slice(), min.iterations, min.converged, standardized)?;
        debug_assert!({
            let shift = self.n_obs as f64 * self.y_scale.ln();
            (fit.loglik + shift + min.fx).abs() <= 1e-9 * fit.loglik.abs().max(shift.abs()).max(1.0)
        });
        if !min.converged {
            return Err(Error::Convergence {
                iterations: min.iterations,
                best: Box::new(fit),
            });
        }
        Ok(fit)
    }

    fn assemble(&self, theta: &[f64], iterations: usize, converged: bool, standardized: bool) -> Result<HlmFit> {
        let prof = self.profile(theta)?;
        let cov_beta = prof
            .xtwx
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular fixed-effect information matrix".into()))?
            * prof.sigma2;
        let lam = self.lambda(theta);
        let t = &lam * lam.transpose() * prof.sigma2;
        let mut tau = [[0.0; 2]; 2];
        for i in 0..t.nrows() {
            for j in 0..t.ncols() {
                tau[i][j] = t[(i, j)];
            }
        }
        Ok(HlmFit {
            model_kind: self.kind,
            gamma: prof.beta.iter().copied().collect(),
            se_gamma: cov_beta.diagonal().iter().map(|v| v.max(0.0).sqrt()).collect(),
            tau,
            sigma2: prof.sigma2,
            loglik: prof.loglik,
            converged,
            iterations,
            standardized,
            n_obs: self.n_obs,
            n_groups: self.groups.len(),
        })
    }

    /// Relative Cholesky factor reproducing a fitted model's `tau`.
    pub fn theta_of(&self, fit: &HlmFit) -> Vec<f64> {
        let s = fit.sigma2;
        let t00 = fit.tau[0][0] / s;
        let l00 = t00.max(0.0).sqrt();
        match self.kind.n_random() {
            1 => vec![l00],
            _ => {
                let l10 = if l00 > 0.0 { fit.tau[0][1] / s / l00 } else { 0.0 };
                let l11 = (fit.tau[1][1] / s - l10 * l10).max(0.0).sqrt();
                vec![l00, l10, l11]
            }
        }
    }
}

fn sample_var(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Fits one model by maximum likelihood, optionally on the z-scored table.
pub fn fit_hlm(table: &ObservationTable, kind: ModelKind, standardize: bool) -> Result<HlmFit> {
    let prepared;
    let table = if standardize {
        prepared = table.standardized()?;
        &prepared
    } else {
        table
    };
    Problem::new(table, kind)?.fit(standardize)
}
