//! Omnibus likelihood-ratio test, moderation Wald test and per-group OLS R².

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::hlm::{HlmFit, ModelKind, Problem};
use super::table::ObservationTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Omnibus,
    Moderation,
    OlsAttribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub kind: TestKind,
    /// LRT statistic `D`, the interaction `g11`, or `R²`.
    pub statistic: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r2_slope: Option<f64>,
    /// Wald `z = g11 / se(g11)` for the moderation test.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wald_z: Option<f64>,
    /// Whether x, y and z were z-scored before fitting.
    pub standardized: bool,
    /// Group of a per-group OLS row.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fits: Vec<HlmFit>,
}

/// Upper tail of the 50:50 mixture of chi-square(1) and chi-square(2).
pub fn mixture_chi2_sf(d: f64) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(Error::Argument(format!("statistic must be >= 0, got {d}")));
    }
    let q1 = erfc((d / 2.0).sqrt());
    let q2 = (-d / 2.0).exp();
    Ok((0.5 * q1 + 0.5 * q2).clamp(0.0, 1.0))
}

/// Two-sided standard-normal p-value of a Wald statistic.
pub fn normal_two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

fn prepare(table: &ObservationTable, standardize: bool) -> Result<ObservationTable> {
    if standardize {
        table.standardized()
    } else {
        Ok(table.clone())
    }
}

/// Random-slopes fit that is never worse than the nested intercepts-only
/// fit: if the default start lands lower, refit from the nested optimum.
fn fit_slopes_nested(table: &ObservationTable, nested: &HlmFit, standardized: bool) -> Result<HlmFit> {
    let problem = Problem::new(table, ModelKind::RandomSlopes)?;
    let first = problem.fit(standardized);
    if let Ok(fit) = &first {
        if fit.loglik >= nested.loglik {
            return first;
        }
    }
    let mut theta = problem.theta_of(nested);
    theta[2] = 1e-3 * theta[0].max(1.0);
    let retry = problem.fit_from(theta, standardized);
    match (first, retry) {
        (Ok(a), Ok(b)) => Ok(if a.loglik >= b.loglik { a } else { b }),
        (Ok(a), Err(_)) => Ok(a),
        (Err(_), Ok(b)) => Ok(b),
        (Err(e), Err(_)) => Err(e),
    }
}

/// Likelihood-ratio test of random intercepts (null) against random
/// intercepts and slopes.
pub fn omnibus_test(table: &ObservationTable, standardize: bool) -> Result<TestReport> {
    let t = prepare(table, standardize)?;
    let null = Problem::new(&t, ModelKind::InterceptsOnly)?.fit(standardize)?;
    let alt = fit_slopes_nested(&t, &null, standardize)?;
    let d = (-2.0 * (null.loglik - alt.loglik)).max(0.0);
    Ok(TestReport {
        kind: TestKind::Omnibus,
        statistic: d,
        p_value: Some(mixture_chi2_sf(d)?),
        r2_slope: None,
        wald_z: None,
        standardized: standardize,
        group: None,
        fits: vec![null, alt],
    })
}

/// Wald test of the cross-level interaction plus the share of slope variance
/// explained by the covariate.
pub fn moderation_test(table: &ObservationTable, standardize: bool) -> Result<TestReport> {
    if table.covariates().is_none() {
        return Err(Error::Argument("moderation test needs a group covariate z".into()));
    }
    let t = prepare(table, standardize)?;
    let moderated = Problem::new(&t, ModelKind::Moderated)?.fit(standardize)?;
    let null = Problem::new(&t, ModelKind::InterceptsOnly)?.fit(standardize)?;
    let omnibus = fit_slopes_nested(&t, &null, standardize)?;
    let tau_omn = omnibus.tau11();
    if tau_omn <= 1e-12 {
        return Err(Error::Degenerate(format!(
            "slope variance of the random-slopes model is {tau_omn:e}; R2_slope is undefined"
        )));
    }
    let (g11, se) = moderated.gamma11().expect("moderated model");
    let z = if se > 0.0 {
        g11 / se
    } else if g11 == 0.0 {
        0.0
    } else {
        g11.signum() * f64::INFINITY
    };
    Ok(TestReport {
        kind: TestKind::Moderation,
        statistic: g11,
        p_value: Some(normal_two_sided_p(z)),
        r2_slope: Some(1.0 - moderated.tau11() / tau_omn),
        wald_z: Some(z),
        standardized: standardize,
        group: None,
        fits: vec![moderated, omnibus],
    })
}

/// R² of the least-squares line of `y` on `x`.
pub fn ols_r2(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Argument(format!(
            "x and y lengths differ ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::Argument(format!("need at least 3 points, got {}", x.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(Error::Degenerate("x is constant".into()));
    }
    if syy == 0.0 {
        return Err(Error::Degenerate("y is constant; R2 is undefined".into()));
    }
    Ok((sxy * sxy / (sxx * syy)).clamp(0.0, 1.0))
}

/// One OLS R² row per group, in group order.
pub fn ols_attribution(table: &ObservationTable) -> Result<Vec<TestReport>> {
    table
        .group_columns()
        .into_iter()
        .zip(table.groups())
        .map(|(cols, name)| {
            Ok(TestReport {
                kind: TestKind::OlsAttribution,
                statistic: ols_r2(&cols.x, &cols.y)?,
                p_value: None,
                r2_slope: None,
                wald_z: None,
                standardized: false,
                group: Some(name.clone()),
                fits: Vec::new(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixture_tail_values() {
        assert_eq!(mixture_chi2_sf(0.0).unwrap(), 1.0);
        let p = mixture_chi2_sf(2.7055).unwrap();
        assert!((p - (0.5 * 0.1 + 0.5 * (-1.35275f64).exp())).abs() < 1e-5);
        assert!((p - 0.1793).abs() < 1e-4);
        let p = mixture_chi2_sf(3.84146).unwrap();
        assert!((p - (0.025 + 0.5 * (-1.92073f64).exp())).abs() < 1e-6);
        assert!((p - 0.0983).abs() < 1e-4);
        assert!(mixture_chi2_sf(-1e-3).is_err());
        assert!(mixture_chi2_sf(f64::NAN).is_err());
        assert!(mixture_chi2_sf(1e4).unwrap() < 1e-300);
    }

    #[test]
    fn mixture_tail_is_monotone() {
        let mut prev = 1.0;
        for i in 1..400 {
            let p = mixture_chi2_sf(i as f64 * 0.25).unwrap();
            assert!(p < prev);
            prev = p;
        }
    }

    #[test]
    fn r2_exact_line_and_errors() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((ols_r2(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(ols_r2(&[1.0; 4], &y), Err(Error::Degenerate(_))));
        assert!(matches!(ols_r2(&x[..2], &y[..2]), Err(Error::Argument(_))));
    }

    #[test]
    fn wald_p_values() {
        assert_eq!(normal_two_sided_p(0.0), 1.0);
        assert!((normal_two_sided_p(1.959964) - 0.05).abs() < 1e-6);
        assert_eq!(normal_two_sided_p(f64::INFINITY), 0.0);
    }
}
