//! Two-level hierarchical linear models and the tests built on them.
//!
//! * [`omnibus_test`]: do within-group slopes vary across groups? A
//!   likelihood-ratio test of random intercepts against random intercepts
//!   and slopes, referred to the 50:50 mixture of chi-square(1) and
//!   chi-square(2);
//! * [`moderation_test`]: does a group covariate `z` explain that variation?
//!   A Wald test on the cross-level interaction plus
//!   `R2_slope = 1 - tau11(moderated) / tau11(random slopes)`;
//! * [`ols_r2`]: per-group least-squares R².
//!
//! Every fit is full maximum likelihood.

mod hlm;
mod optim;
mod procedures;
mod table;

pub use hlm::{fit_hlm, HlmFit, ModelKind, LOGLIK_REL_TOL, MAX_ITERATIONS};
pub use procedures::{
    mixture_chi2_sf, moderation_test, normal_two_sided_p, ols_attribution, ols_r2, omnibus_test,
    TestKind, TestReport,
};
pub use table::{Observation, ObservationTable};
