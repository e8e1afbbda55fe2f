//! Small dense BFGS minimizer with central-difference gradients.

use nalgebra::{DMatrix, DVector};

pub(crate) struct Minimum {
    pub x: DVector<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) struct Settings {
    pub max_iter: usize,
    /// Stop when `|f_k - f_{k+1}| <= rel_tol * max(1, |f_{k+1}|)` ...
    pub rel_tol: f64,
    /// ... and either the gradient max-norm is at most this or the predicted
    /// remaining decrease `g' H^-1 g / 2` is within `rel_tol`.
    pub grad_tol: f64,
}

fn gradient(f: &dyn Fn(&DVector<f64>) -> f64, x: &DVector<f64>, fx: f64) -> DVector<f64> {
    let mut g = DVector::zeros(x.len());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let h = 1e-5 * x[i].abs().max(1.0);
        probe[i] = x[i] + h;
        let fp = f(&probe);
        probe[i] = x[i] - h;
        let fm = f(&probe);
        probe[i] = x[i];
        g[i] = match (fp.is_finite(), fm.is_finite()) {
            (true, true) => (fp - fm) / (2.0 * h),
            (true, false) => (fp - fx) / h,
            (false, true) => (fx - fm) / h,
            (false, false) => 0.0,
        };
    }
    g
}

/// Minimizes `f` from `x0`. Non-finite values of `f` are treated as
/// infeasible and rejected by the line search.
pub(crate) fn bfgs(f: &dyn Fn(&DVector<f64>) -> f64, x0: DVector<f64>, s: &Settings) -> Minimum {
    let n = x0.len();
    let mut x = x0;
    let mut fx = f(&x);
    let mut g = gradient(f, &x, fx);
    let mut hinv = DMatrix::<f64>::identity(n, n);
    let mut fresh = true;

    for iter in 1..=s.max_iter {
        let mut dir = -(&hinv * &g);
        let mut slope = dir.dot(&g);
        if !(slope < 0.0) {
            hinv.fill_with_identity();
            fresh = true;
            dir = -g.clone();
            slope = dir.dot(&g);
        }
        if slope == 0.0 {
            return Minimum { x, fx, iterations: iter, converged: true };
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = &x + &dir * step;
            let fc = f(&cand);
            if fc.is_finite() && fc <= fx + 1e-4 * step * slope {
                accepted = Some((cand, fc));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            if fresh {
                // no descent along the gradient at working precision
                return Minimum { x, fx, iterations: iter, converged: true };
            }
            hinv.fill_with_identity();
            fresh = true;
            continue;
        };

        let g_new = gradient(f, &x_new, f_new);
        let sk = &x_new - &x;
        let yk = &g_new - &g;
        let change = (fx - f_new).abs();
        x = x_new;
        fx = f_new;
        g = g_new;
        let tol = s.rel_tol * fx.abs().max(1.0);

        let sy = sk.dot(&yk);
        if sy > 1e-12 * sk.norm() * yk.norm() {
            let rho = 1.0 / sy;
            let eye = DMatrix::<f64>::identity(n, n);
            let left = &eye - &sk * yk.transpose() * rho;
            let right = &eye - &yk * sk.transpose() * rho;
            hinv = &left * &hinv * &right + &sk * sk.transpose() * rho;
            fresh = false;
        }
        if change <= tol {
            let decrement = 0.5 * g.dot(&(&hinv * &g));
            if g.amax() <= s.grad_tol || (!fresh && decrement >= 0.0 && decrement <= tol) {
                return Minimum { x, fx, iterations: iter, converged: true };
            }
        }
    }
    Minimum { x, fx, iterations: s.max_iter, converged: false }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &DVector<f64>| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = bfgs(
            &f,
            DVector::from_vec(vec![-1.2, 1.0]),
            &Settings { max_iter: 500, rel_tol: 1e-14, grad_tol: 1e-6 },
        );
        assert!(m.converged && m.fx < 1e-10);
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4, "{:?}", m.x);
    }

    #[test]
    fn respects_infeasible_region() {
        // minimum of x - ln(x) at x = 1; x <= 0 is infeasible
        let f = |x: &DVector<f64>| if x[0] > 0.0 { x[0] - x[0].ln() } else { f64::NAN };
        let m = bfgs(
            &f,
            DVector::from_vec(vec![5.0]),
            &Settings { max_iter: 200, rel_tol: 1e-14, grad_tol: 1e-7 },
        );
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.fx - 1.0).abs() < 1e-10);
    }
}
