//! Weight-update rules and pairing classification.
//!
//! Three rules live here:
//!  - the rate rule: `dW = eta * D_post * rho(s_pre)`, where `D_post` is the
//!    postsynaptic slope (or the slope of the firing rate, depending on the
//!    derivative mode);
//!  - its spike-gated variant, which replaces `rho(s_pre)` with the binary
//!    presynaptic spike indicator;
//!  - a nearest-neighbor STDP rule driven purely by the timing difference
//!    between a presynaptic spike and its closest postsynaptic neighbor
//!    inside a fixed window.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::rates::{rho, rho_deriv, ActivationParams};
use crate::spikes::SpikeTrain;

/// Which temporal derivative drives the update: the raw state slope, or the
/// slope of the firing rate `rho(s)` via the chain rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DerivativeMode {
    State,
    Rate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleParams {
    /// Learning rate; the proportionality constant of the update rules.
    pub eta: f64,
    pub derivative_mode: DerivativeMode,
    /// Pairing half-window in steps.
    pub window: usize,
    /// Amplitude of the nearest-neighbor kernel.
    pub kernel_amplitude: f64,
    /// Decay constant of the nearest-neighbor kernel, in steps.
    pub kernel_tau: f64,
}

impl Default for RuleParams {
    fn default() -> Self {
        Self {
            eta: 1.0,
            derivative_mode: DerivativeMode::State,
            window: 20,
            kernel_amplitude: 1.0,
            kernel_tau: 5.0,
        }
    }
}

impl RuleParams {
    pub fn validate(&self) -> Result<(), Error> {
        if !self.eta.is_finite() {
            return Err(Error::invalid("rule.eta", "must be finite"));
        }
        if self.window < 1 {
            return Err(Error::invalid("rule.window", "must be >= 1"));
        }
        if !(self.kernel_tau > 0.0) {
            return Err(Error::invalid("rule.kernel_tau", "must be > 0"));
        }
        if !self.kernel_amplitude.is_finite() {
            return Err(Error::invalid("rule.kernel_amplitude", "must be finite"));
        }
        Ok(())
    }
}

/// Postsynaptic state at the update time: level and exact slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostState {
    pub s: f64,
    pub sdot: f64,
}

/// The postsynaptic drive `D_post`: the state slope, or `rho'(s) * sdot`
/// when the rule follows the firing-rate derivative instead.
pub fn post_drive(post: PostState, act: &ActivationParams, p: &RuleParams) -> f64 {
    match p.derivative_mode {
        DerivativeMode::State => post.sdot,
        DerivativeMode::Rate => rho_deriv(post.s, act) * post.sdot,
    }
}

/// Rate rule: `eta * D_post * rho(s_pre)`.
pub fn rate_update(post: PostState, s_pre: f64, act: &ActivationParams, p: &RuleParams) -> f64 {
    p.eta * post_drive(post, act, p) * rho(s_pre, act)
}

/// Spike-gated rule: zero without a presynaptic spike, `eta * D_post` with
/// one. Averaged over spike draws it reproduces [`rate_update`].
pub fn spike_update(post: PostState, xi_pre: bool, act: &ActivationParams, p: &RuleParams) -> f64 {
    if xi_pre {
        p.eta * post_drive(post, act, p)
    } else {
        0.0
    }
}

/// Classification of a presynaptic spike's postsynaptic neighborhood.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairingKind {
    /// No postsynaptic spike anywhere in the window.
    NoPost,
    /// Postsynaptic spikes strictly on both sides; no update.
    BothSides,
    /// A postsynaptic spike exactly at the presynaptic time; no update.
    Coincident,
    /// Exactly one side holds spikes; `dt` is the signed distance to the
    /// nearest one (post time minus pre time), `1 <= |dt| <= window`.
    Valid { dt: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairingOutcome {
    pub t_pre: usize,
    pub kind: PairingKind,
}

impl PairingOutcome {
    pub fn dt(&self) -> Option<i64> {
        match self.kind {
            PairingKind::Valid { dt } => Some(dt),
            _ => None,
        }
    }
}

/// Classify the postsynaptic spikes in `[t_pre - window, t_pre + window]`,
/// truncated at the train boundaries.
pub fn classify_pairing(
    t_pre: usize,
    post: &SpikeTrain,
    window: usize,
) -> Result<PairingOutcome, Error> {
    let len = post.len();
    if t_pre >= len {
        return Err(Error::TPreOutOfRange { t_pre, len });
    }
    if post.get(t_pre) {
        return Ok(PairingOutcome {
            t_pre,
            kind: PairingKind::Coincident,
        });
    }
    let mut left: Option<usize> = None;
    for k in 1..=window.min(t_pre) {
        if post.get(t_pre - k) {
            left = Some(k);
            break;
        }
    }
    let mut right: Option<usize> = None;
    for k in 1..=window.min(len - 1 - t_pre) {
        if post.get(t_pre + k) {
            right = Some(k);
            break;
        }
    }
    let kind = match (left, right) {
        (None, None) => PairingKind::NoPost,
        (Some(_), Some(_)) => PairingKind::BothSides,
        (Some(l), None) => PairingKind::Valid { dt: -(l as i64) },
        (None, Some(r)) => PairingKind::Valid { dt: r as i64 },
    };
    Ok(PairingOutcome { t_pre, kind })
}

/// Signed exponential nearest-neighbor kernel:
/// `amplitude * sign(dt) * exp(-|dt| / tau)`.
pub fn nn_kernel(dt: i64, p: &RuleParams) -> f64 {
    p.kernel_amplitude * (dt.signum() as f64) * (-(dt.abs() as f64) / p.kernel_tau).exp()
}

/// Nearest-neighbor STDP update: the signed kernel on valid pairings, zero
/// otherwise.
pub fn nn_stdp_update(outcome: &PairingOutcome, p: &RuleParams) -> f64 {
    match outcome.kind {
        PairingKind::Valid { dt } => nn_kernel(dt, p),
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::constant_trajectory;
    use crate::spikes::sample_spikes;
    use crate::stream::derive_rng;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn act() -> ActivationParams {
        ActivationParams::default()
    }

    fn rule() -> RuleParams {
        RuleParams::default()
    }

    fn train_with_spikes(len: usize, at: &[usize]) -> SpikeTrain {
        let mut xi = vec![false; len];
        for &t in at {
            xi[t] = true;
        }
        SpikeTrain::from_bools(xi)
    }

    #[test]
    fn rate_update_zero_slope_is_zero() {
        let post = PostState { s: 0.7, sdot: 0.0 };
        for s_pre in [-3.0, 0.0, 2.5] {
            assert_eq!(rate_update(post, s_pre, &act(), &rule()), 0.0);
        }
    }

    #[test]
    fn rate_update_direct_product() {
        // rho(s_pre) = 0.5 needs max_prob 1 at s_pre = 0
        let a = ActivationParams {
            gain: 1.0,
            max_prob: 1.0,
        };
        let post = PostState { s: 0.0, sdot: 0.2 };
        assert_relative_eq!(
            rate_update(post, 0.0, &a, &rule()),
            0.1,
            max_relative = 1e-15
        );
    }

    #[test]
    fn rate_update_is_odd_in_slope() {
        let p = rule();
        for &(s, sdot, s_pre) in &[(0.3, 0.17, -1.0), (-2.0, -0.4, 0.9), (1.0, 0.02, 2.0)] {
            let up = rate_update(PostState { s, sdot }, s_pre, &act(), &p);
            let dn = rate_update(PostState { s, sdot: -sdot }, s_pre, &act(), &p);
            assert_eq!(up, -dn);
        }
    }

    #[test]
    fn rate_mode_applies_chain_rule() {
        let p = RuleParams {
            derivative_mode: DerivativeMode::Rate,
            ..rule()
        };
        let post = PostState { s: 0.4, sdot: 0.3 };
        let expect = crate::rates::rho_deriv(0.4, &act()) * 0.3 * rho(-0.5, &act());
        assert_relative_eq!(
            rate_update(post, -0.5, &act(), &p),
            expect,
            max_relative = 1e-15
        );
    }

    #[test]
    fn spike_update_gates_on_presynaptic_spike() {
        let post = PostState { s: 0.1, sdot: -0.3 };
        assert_eq!(spike_update(post, false, &act(), &rule()), 0.0);
        assert_relative_eq!(
            spike_update(post, true, &act(), &rule()),
            -0.3,
            max_relative = 1e-15
        );
    }

    #[test]
    fn spike_update_expectation_matches_rate_update() {
        // Monte Carlo over presynaptic Bernoulli draws at fixed state
        let a = act();
        let p = rule();
        let s_pre = 0.4;
        let post = PostState { s: -0.2, sdot: 0.25 };
        let pr = rho(s_pre, &a);
        let n = 100_000u32;
        let mut rng = derive_rng(100, &[0]);
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let xi = rng.random::<f64>() < pr;
            let u = spike_update(post, xi, &a, &p);
            sum += u;
            sumsq += u * u;
        }
        let mean = sum / n as f64;
        let var = (sumsq - n as f64 * mean * mean) / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        let exact = rate_update(post, s_pre, &a, &p);
        assert!(
            (mean - exact).abs() <= 3.0 * se,
            "Monte Carlo mean {mean} vs exact {exact} (se {se})"
        );
    }

    #[test]
    fn classify_both_sides_blocks_update() {
        let t_pre = 50;
        let train = train_with_spikes(100, &[t_pre - 3, t_pre + 7]);
        let out = classify_pairing(t_pre, &train, 20).unwrap();
        assert_eq!(out.kind, PairingKind::BothSides);
        assert_eq!(nn_stdp_update(&out, &rule()), 0.0);
    }

    #[test]
    fn classify_single_right_spike() {
        let t_pre = 50;
        let train = train_with_spikes(100, &[t_pre + 4]);
        let out = classify_pairing(t_pre, &train, 20).unwrap();
        assert_eq!(out.kind, PairingKind::Valid { dt: 4 });
    }

    #[test]
    fn classify_coincident_spike() {
        let t_pre = 50;
        let train = train_with_spikes(100, &[t_pre]);
        let out = classify_pairing(t_pre, &train, 20).unwrap();
        assert_eq!(out.kind, PairingKind::Coincident);
        assert_eq!(nn_stdp_update(&out, &rule()), 0.0);
    }

    #[test]
    fn classify_no_post_in_window() {
        let t_pre = 50;
        let train = train_with_spikes(100, &[t_pre + 21, t_pre - 21]);
        let out = classify_pairing(t_pre, &train, 20).unwrap();
        assert_eq!(out.kind, PairingKind::NoPost);
    }

    #[test]
    fn classify_truncates_at_boundaries() {
        // pre spike at t=2: left window is [0, 1] only
        let train = train_with_spikes(100, &[0]);
        let out = classify_pairing(2, &train, 20).unwrap();
        assert_eq!(out.kind, PairingKind::Valid { dt: -2 });
        // near the right edge
        let train = train_with_spikes(10, &[9]);
        let out = classify_pairing(7, &train, 20).unwrap();
        assert_eq!(out.kind, PairingKind::Valid { dt: 2 });
    }

    #[test]
    fn classify_rejects_out_of_range() {
        let train = train_with_spikes(10, &[]);
        assert!(classify_pairing(10, &train, 5).is_err());
    }

    #[test]
    fn nn_kernel_reference_values() {
        let p = rule();
        let out = PairingOutcome {
            t_pre: 0,
            kind: PairingKind::Valid { dt: 1 },
        };
        assert_relative_eq!(
            nn_stdp_update(&out, &p),
            (-0.2f64).exp(),
            max_relative = 1e-15
        );
        let out = PairingOutcome {
            t_pre: 0,
            kind: PairingKind::Valid { dt: -1 },
        };
        assert_relative_eq!(
            nn_stdp_update(&out, &p),
            -(-0.2f64).exp(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn expected_spike_update_over_trains_matches_rate_update_through_sampler() {
        // full path: constant trajectory -> sampled trains -> gated updates
        let a = act();
        let p = rule();
        let traj = constant_trajectory(0.4, 2).unwrap();
        let post = PostState { s: -0.2, sdot: 0.25 };
        let n = 100_000u64;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for i in 0..n {
            let train = sample_spikes(&traj, &a, &mut derive_rng(200, &[i]));
            let u = spike_update(post, train.get(0), &a, &p);
            sum += u;
            sumsq += u * u;
        }
        let mean = sum / n as f64;
        let var = (sumsq - n as f64 * mean * mean) / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        let exact = rate_update(post, 0.4, &a, &p);
        assert!((mean - exact).abs() <= 3.0 * se);
    }

    proptest! {
        #[test]
        fn nn_kernel_is_antisymmetric(dt in 1i64..=20, amp in 0.1f64..3.0, tau in 0.5f64..20.0) {
            let p = RuleParams { kernel_amplitude: amp, kernel_tau: tau, ..rule() };
            prop_assert_eq!(nn_kernel(dt, &p), -nn_kernel(-dt, &p));
        }

        #[test]
        fn nn_kernel_decays_monotonically(tau in 0.5f64..20.0) {
            let p = RuleParams { kernel_tau: tau, ..rule() };
            for dt in 1i64..20 {
                prop_assert!(nn_kernel(dt, &p).abs() > nn_kernel(dt + 1, &p).abs());
            }
        }

        #[test]
        fn rate_update_scales_exactly_by_powers_of_two(
            sdot in -2.0f64..2.0, s_pre in -3.0f64..3.0, k in 1u32..6) {
            let base = rule();
            let scaled = RuleParams { eta: base.eta * f64::from(1u32 << k), ..base };
            let post = PostState { s: 0.0, sdot };
            let a = act();
            let one = rate_update(post, s_pre, &a, &base);
            let many = rate_update(post, s_pre, &a, &scaled);
            prop_assert_eq!(many, one * f64::from(1u32 << k));
            // and in the slope argument
            let post2 = PostState { s: 0.0, sdot: sdot * f64::from(1u32 << k) };
            prop_assert_eq!(rate_update(post2, s_pre, &a, &base), one * f64::from(1u32 << k));
        }

        #[test]
        fn classification_ignores_spikes_beyond_window(
            seed in 0u64..500, window in 2usize..12) {
            // random in-window pattern; adding a spike at distance window+1
            // never changes the outcome
            let len = 64usize;
            let t_pre = 32usize;
            let mut rng = derive_rng(seed, &[9000]);
            let mut xi = vec![false; len];
            for t in (t_pre - window)..=(t_pre + window) {
                if rng.random::<f64>() < 0.15 { xi[t] = true; }
            }
            let base = classify_pairing(t_pre, &SpikeTrain::from_bools(xi.clone()), window).unwrap();
            let mut far_left = xi.clone();
            far_left[t_pre - window - 1] = true;
            let mut far_right = xi;
            far_right[t_pre + window + 1] = true;
            prop_assert_eq!(base, classify_pairing(t_pre, &SpikeTrain::from_bools(far_left), window).unwrap());
            prop_assert_eq!(base, classify_pairing(t_pre, &SpikeTrain::from_bools(far_right), window).unwrap());
        }
    }
}
