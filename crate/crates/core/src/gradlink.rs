//! Layered activation step and its gradient checks.
//!
//! The single-step network is `s_i = alpha + beta * sum_j W[i][j] *
//! rho(s_prev[j])`, whose weight sensitivity is `beta * rho(s_prev[j])`,
//! independent of the output row. [`check_gradient`] confirms the analytic
//! sensitivity against central finite differences, and
//! [`sgd_equivalence_run`] verifies that when the postsynaptic state relaxes
//! down the gradient of a squared-error objective, the rate rule reproduces
//! the finite-difference gradient step on the weights, entry for entry.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::rates::{rho, ActivationParams};
use crate::rules::{rate_update, DerivativeMode, PostState, RuleParams};

/// Relative-error floor: keeps ratios finite when both sides are ~0.
const REL_FLOOR: f64 = 1e-12;

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Dense row-major matrix, post rows by pre columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Entries uniform in [-1, 1).
    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        Self::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// The layered activation step: bias, coupling gain, weights, nonlinearity.
#[derive(Debug, Clone)]
pub struct LayeredNetwork {
    pub alpha: f64,
    pub beta: f64,
    pub weights: Matrix,
    pub act: ActivationParams,
}

impl LayeredNetwork {
    pub fn validate(&self) -> Result<(), Error> {
        self.act.validate()?;
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(Error::NonFinite("network parameters"));
        }
        if self.weights.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network weights"));
        }
        Ok(())
    }

    /// Random instance with weights and scalars uniform in [-1, 1).
    pub fn random<R: Rng + ?Sized>(
        rows: usize,
        cols: usize,
        act: ActivationParams,
        rng: &mut R,
    ) -> Self {
        Self {
            alpha: rng.random_range(-1.0..1.0),
            beta: rng.random_range(0.5..1.5),
            weights: Matrix::random(rows, cols, rng),
            act,
        }
    }
}

fn step_with(
    weights: &Matrix,
    alpha: f64,
    beta: f64,
    s_prev: &[f64],
    act_fn: impl Fn(f64) -> f64,
) -> Vec<f64> {
    let fired: Vec<f64> = s_prev.iter().map(|&s| act_fn(s)).collect();
    (0..weights.rows())
        .map(|i| {
            let dot: f64 = weights
                .row(i)
                .iter()
                .zip(&fired)
                .map(|(w, r)| w * r)
                .sum();
            alpha + beta * dot
        })
        .collect()
}

/// One activation step: `s_i = alpha + beta * sum_j W[i][j] * rho(s_prev[j])`.
pub fn step_activation(net: &LayeredNetwork, s_prev: &[f64]) -> Result<Vec<f64>, Error> {
    if s_prev.len() != net.weights.cols() {
        return Err(Error::DimensionMismatch {
            expected: net.weights.cols(),
            got: s_prev.len(),
        });
    }
    Ok(step_with(
        &net.weights,
        net.alpha,
        net.beta,
        s_prev,
        |s| rho(s, &net.act),
    ))
}

/// Analytic sensitivity `d s_i / d W[i][j] = beta * rho(s_prev[j])`.
/// Every row is identical because the formula does not involve `i`.
pub fn analytic_ds_dw(net: &LayeredNetwork, s_prev: &[f64]) -> Result<Matrix, Error> {
    if s_prev.len() != net.weights.cols() {
        return Err(Error::DimensionMismatch {
            expected: net.weights.cols(),
            got: s_prev.len(),
        });
    }
    let row: Vec<f64> = s_prev.iter().map(|&s| net.beta * rho(s, &net.act)).collect();
    Ok(Matrix::from_fn(
        net.weights.rows(),
        net.weights.cols(),
        |_, j| row[j],
    ))
}

#[derive(Debug, Clone, Copy)]
pub struct GradCheckEntry {
    pub row: usize,
    pub col: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub abs_error: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub h: f64,
    pub max_rel_error: f64,
    pub entries: Vec<GradCheckEntry>,
}

fn rel_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

fn check_gradient_with(
    weights: &Matrix,
    alpha: f64,
    beta: f64,
    s_prev: &[f64],
    h: f64,
    act_fn: impl Fn(f64) -> f64 + Copy,
) -> Result<GradCheckReport, Error> {
    let mut entries = Vec::with_capacity(weights.rows() * weights.cols());
    let mut max_rel = 0.0f64;
    let mut perturbed = weights.clone();
    for i in 0..weights.rows() {
        for j in 0..weights.cols() {
            let analytic = beta * act_fn(s_prev[j]);
            let w0 = weights.get(i, j);
            perturbed.set(i, j, w0 + h);
            let up = step_with(&perturbed, alpha, beta, s_prev, act_fn)[i];
            perturbed.set(i, j, w0 - h);
            let down = step_with(&perturbed, alpha, beta, s_prev, act_fn)[i];
            perturbed.set(i, j, w0);
            let numeric = (up - down) / (2.0 * h);
            if !numeric.is_finite() || !analytic.is_finite() {
                return Err(Error::NonFinite("gradient check"));
            }
            let rel = rel_error(analytic, numeric);
            max_rel = max_rel.max(rel);
            entries.push(GradCheckEntry {
                row: i,
                col: j,
                analytic,
                numeric,
                abs_error: (analytic - numeric).abs(),
                rel_error: rel,
            });
        }
    }
    Ok(GradCheckReport {
        h,
        max_rel_error: max_rel,
        entries,
    })
}

/// Compare [`analytic_ds_dw`] against central finite differences of
/// [`step_activation`], one weight entry at a time.
pub fn check_gradient(
    net: &LayeredNetwork,
    s_prev: &[f64],
    h: f64,
) -> Result<GradCheckReport, Error> {
    if !(h > 0.0) {
        return Err(Error::invalid("h", "must be > 0"));
    }
    if s_prev.len() != net.weights.cols() {
        return Err(Error::DimensionMismatch {
            expected: net.weights.cols(),
            got: s_prev.len(),
        });
    }
    net.validate()?;
    check_gradient_with(&net.weights, net.alpha, net.beta, s_prev, h, |s| {
        rho(s, &net.act)
    })
}

/// Squared-error objective on the output activities:
/// `J(s) = 1/2 * sum_i (s_i - target_i)^2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Objective {
    pub target: Vec<f64>,
}

impl Objective {
    pub fn value(&self, s: &[f64]) -> f64 {
        0.5 * s
            .iter()
            .zip(&self.target)
            .map(|(a, t)| (a - t) * (a - t))
            .sum::<f64>()
    }

    pub fn grad(&self, s: &[f64]) -> Vec<f64> {
        s.iter().zip(&self.target).map(|(a, t)| a - t).collect()
    }
}

/// Per-step record of the equivalence run.
#[derive(Debug, Clone, Copy)]
pub struct EquivalenceStep {
    pub step: usize,
    pub objective: f64,
    /// Max relative deviation between the rule update and the
    /// finite-difference gradient step over all weight entries.
    pub max_rel_dev_fd: f64,
    /// Max relative deviation between the rule update and the analytic
    /// gradient step (same product computed two ways).
    pub max_rel_dev_identity: f64,
}

#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub steps: Vec<EquivalenceStep>,
    pub max_rel_dev_fd: f64,
    pub max_rel_dev_identity: f64,
    pub objective_initial: f64,
    pub objective_final: f64,
    pub objective_non_increasing: bool,
}

const DIVERGENCE_BOUND: f64 = 1e6;

/// Relax the postsynaptic state down the objective gradient
/// (`s_post <- s_post - eps * dJ/ds_post`) and check at every step that the
/// rate rule with unit learning rate equals `-(eps / beta) * dJ/dW`, with
/// `dJ/dW` measured by central finite differences of the objective composed
/// with the activation step.
///
/// The relaxation is carried by an additive per-unit offset so the
/// postsynaptic state remains a differentiable function of the weights while
/// it moves; the finite differences are taken at the current offset.
pub fn sgd_equivalence_run(
    net: &LayeredNetwork,
    obj: &Objective,
    s_pre: &[f64],
    relax_steps: usize,
    eps: f64,
) -> Result<EquivalenceReport, Error> {
    net.validate()?;
    if net.beta == 0.0 {
        return Err(Error::BetaZero);
    }
    if !(eps > 0.0) {
        return Err(Error::invalid("eps", "must be > 0"));
    }
    if s_pre.len() != net.weights.cols() {
        return Err(Error::DimensionMismatch {
            expected: net.weights.cols(),
            got: s_pre.len(),
        });
    }
    if obj.target.len() != net.weights.rows() {
        return Err(Error::DimensionMismatch {
            expected: net.weights.rows(),
            got: obj.target.len(),
        });
    }

    let rule = RuleParams {
        eta: 1.0,
        derivative_mode: DerivativeMode::State,
        ..Default::default()
    };
    let h = DEFAULT_FD_STEP;
    let rows = net.weights.rows();
    let cols = net.weights.cols();
    let feed = step_activation(net, s_pre)?;
    let mut offset = vec![0.0; rows];
    let mut s_post = feed.clone();
    let objective_initial = obj.value(&s_post);
    let mut steps = Vec::with_capacity(relax_steps);
    let mut max_fd = 0.0f64;
    let mut max_id = 0.0f64;
    let mut non_increasing = true;
    let mut j_prev = objective_initial;

    let mut weights = net.weights.clone();
    for step in 0..relax_steps {
        let grad_s = obj.grad(&s_post);
        let mut step_fd = 0.0f64;
        let mut step_id = 0.0f64;
        for i in 0..rows {
            let sdot = -eps * grad_s[i];
            for j in 0..cols {
                let dw_rule = rate_update(
                    PostState {
                        s: s_post[i],
                        sdot,
                    },
                    s_pre[j],
                    &net.act,
                    &rule,
                );
                // analytic identity: same product assembled from dJ/dW
                let djdw = grad_s[i] * net.beta * rho(s_pre[j], &net.act);
                let dw_grad = -(eps / net.beta) * djdw;
                step_id = step_id.max(rel_error(dw_rule, dw_grad));
                // finite-difference oracle on J(step(W) + offset)
                let w0 = weights.get(i, j);
                weights.set(i, j, w0 + h);
                let up = obj.value(&offset_output(&weights, net, s_pre, &offset));
                weights.set(i, j, w0 - h);
                let down = obj.value(&offset_output(&weights, net, s_pre, &offset));
                weights.set(i, j, w0);
                let djdw_fd = (up - down) / (2.0 * h);
                let dw_fd = -(eps / net.beta) * djdw_fd;
                step_fd = step_fd.max(rel_error(dw_rule, dw_fd));
            }
            offset[i] += sdot;
            s_post[i] = feed[i] + offset[i];
            if s_post[i].abs() > DIVERGENCE_BOUND {
                return Err(Error::Diverged {
                    magnitude: s_post[i].abs(),
                    bound: DIVERGENCE_BOUND,
                });
            }
        }
        let j_now = obj.value(&s_post);
        if j_now > j_prev {
            non_increasing = false;
        }
        max_fd = max_fd.max(step_fd);
        max_id = max_id.max(step_id);
        steps.push(EquivalenceStep {
            step,
            objective: j_now,
            max_rel_dev_fd: step_fd,
            max_rel_dev_identity: step_id,
        });
        j_prev = j_now;
    }
    Ok(EquivalenceReport {
        steps,
        max_rel_dev_fd: max_fd,
        max_rel_dev_identity: max_id,
        objective_initial,
        objective_final: j_prev,
        objective_non_increasing: non_increasing,
    })
}

fn offset_output(
    weights: &Matrix,
    net: &LayeredNetwork,
    s_pre: &[f64],
    offset: &[f64],
) -> Vec<f64> {
    let mut out = step_with(weights, net.alpha, net.beta, s_pre, |s| rho(s, &net.act));
    for (o, &c) in out.iter_mut().zip(offset) {
        *o += c;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::derive_rng;
    use approx::assert_relative_eq;

    fn random_net(seed: u64) -> (LayeredNetwork, Vec<f64>) {
        let mut rng = derive_rng(seed, &[31]);
        let net = LayeredNetwork::random(3, 4, ActivationParams::default(), &mut rng);
        let s_prev: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
        (net, s_prev)
    }

    #[test]
    fn beta_zero_outputs_alpha() {
        let net = LayeredNetwork {
            alpha: 0.3,
            beta: 0.0,
            weights: Matrix::random(2, 3, &mut derive_rng(1, &[0])),
            act: ActivationParams::default(),
        };
        let out = step_activation(&net, &[0.1, -0.4, 2.0]).unwrap();
        assert!(out.iter().all(|&v| v == 0.3));
        let sens = analytic_ds_dw(&net, &[0.1, -0.4, 2.0]).unwrap();
        assert!((0..2).all(|i| (0..3).all(|j| sens.get(i, j) == 0.0)));
    }

    #[test]
    fn one_by_one_instance() {
        // alpha 0, beta 2, W 0.5, rho(s_prev) = 0.5 -> s = 0.5
        let mut w = Matrix::zeros(1, 1);
        w.set(0, 0, 0.5);
        let net = LayeredNetwork {
            alpha: 0.0,
            beta: 2.0,
            weights: w,
            act: ActivationParams {
                gain: 1.0,
                max_prob: 1.0,
            },
        };
        let out = step_activation(&net, &[0.0]).unwrap();
        assert_relative_eq!(out[0], 0.5, max_relative = 1e-15);
    }

    #[test]
    fn step_matches_explicit_loop_recomputation() {
        let (net, s_prev) = random_net(7);
        let out = step_activation(&net, &s_prev).unwrap();
        for i in 0..3 {
            let mut acc = 0.0;
            for j in 0..4 {
                acc += net.weights.get(i, j) * rho(s_prev[j], &net.act);
            }
            let expect = net.alpha + net.beta * acc;
            assert_relative_eq!(out[i], expect, max_relative = 1e-14);
        }
    }

    #[test]
    fn step_rejects_dimension_mismatch() {
        let (net, _) = random_net(7);
        assert!(step_activation(&net, &[0.0; 3]).is_err());
        assert!(analytic_ds_dw(&net, &[0.0; 5]).is_err());
    }

    #[test]
    fn sensitivity_rows_are_identical() {
        let (net, s_prev) = random_net(8);
        let sens = analytic_ds_dw(&net, &s_prev).unwrap();
        for i in 1..sens.rows() {
            assert_eq!(sens.row(i), sens.row(0));
        }
    }

    #[test]
    fn gradient_check_passes_on_random_instance() {
        let (net, s_prev) = random_net(9);
        let report = check_gradient(&net, &s_prev, 1e-4).unwrap();
        assert!(
            report.max_rel_error <= 1e-6,
            "max rel error {}",
            report.max_rel_error
        );
        assert_eq!(report.entries.len(), 12);
    }

    #[test]
    fn gradient_check_linear_stub_is_rounding_exact() {
        // identity activation: the map is linear, so central differences
        // agree with the analytic value to rounding precision
        let (net, s_prev) = random_net(10);
        let report =
            check_gradient_with(&net.weights, net.alpha, net.beta, &s_prev, 1e-4, |s| s)
                .unwrap();
        assert!(
            report.max_rel_error <= 1e-9,
            "max rel error {}",
            report.max_rel_error
        );
    }

    #[test]
    fn gradient_check_error_stays_at_rounding_level_across_h() {
        // the step is linear in the weights, so the central difference is
        // exact for every h; shrinking h only exposes rounding noise
        let (net, s_prev) = random_net(11);
        for h in [1e-2, 1e-3, 1e-4] {
            let report = check_gradient(&net, &s_prev, h).unwrap();
            assert!(
                report.max_rel_error <= 1e-6,
                "h {h}: max rel error {}",
                report.max_rel_error
            );
        }
    }

    #[test]
    fn gradient_check_rejects_bad_h() {
        let (net, s_prev) = random_net(12);
        assert!(check_gradient(&net, &s_prev, 0.0).is_err());
        assert!(check_gradient(&net, &s_prev, -1e-4).is_err());
    }

    #[test]
    fn equivalence_at_fixed_point_is_flat() {
        let (net, s_prev) = random_net(13);
        let feed = step_activation(&net, &s_prev).unwrap();
        let obj = Objective { target: feed };
        let rep = sgd_equivalence_run(&net, &obj, &s_prev, 10, 1e-2).unwrap();
        assert_eq!(rep.objective_initial, 0.0);
        assert_eq!(rep.objective_final, 0.0);
        assert!(rep.objective_non_increasing);
        // gradient is identically zero, so both sides vanish
        assert!(rep.max_rel_dev_fd <= 1e-6);
    }

    #[test]
    fn equivalence_sign_chain_on_scalar_instance() {
        let mut w = Matrix::zeros(1, 1);
        w.set(0, 0, 0.4);
        let net = LayeredNetwork {
            alpha: 0.0,
            beta: 1.0,
            weights: w,
            act: ActivationParams::default(),
        };
        let s_pre = [0.3];
        let feed = step_activation(&net, &s_pre).unwrap();
        let obj = Objective {
            target: vec![feed[0] + 0.5],
        };
        // target above output: gradient negative, sdot positive, rule update
        // positive at every step
        let rep = sgd_equivalence_run(&net, &obj, &s_pre, 25, 1e-2).unwrap();
        assert!(rep.objective_non_increasing);
        assert!(rep.max_rel_dev_fd <= 1e-5);
        assert!(rep.objective_final < rep.objective_initial);
    }

    #[test]
    fn equivalence_random_instance_matches_fd_gradient() {
        let (net, s_prev) = random_net(14);
        let mut rng = derive_rng(14, &[99]);
        let obj = Objective {
            target: (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
        };
        let rep = sgd_equivalence_run(&net, &obj, &s_prev, 50, 1e-2).unwrap();
        assert!(
            rep.max_rel_dev_fd <= 1e-5,
            "max fd deviation {}",
            rep.max_rel_dev_fd
        );
        assert!(
            rep.max_rel_dev_identity <= 1e-12,
            "identity deviation {}",
            rep.max_rel_dev_identity
        );
        assert!(rep.objective_non_increasing);
        assert_eq!(rep.steps.len(), 50);
    }

    #[test]
    fn equivalence_rejects_zero_beta() {
        let (mut net, s_prev) = random_net(15);
        net.beta = 0.0;
        let obj = Objective {
            target: vec![0.0; 3],
        };
        assert!(matches!(
            sgd_equivalence_run(&net, &obj, &s_prev, 5, 1e-2),
            Err(Error::BetaZero)
        ));
    }
}
