//! Experiment drivers: timing-difference curves, rule agreement, closed-loop
//! slope statistics, and example traces.
//!
//! The trial structure follows a two-level design: `n_sequences` independent
//! (pre, post) rate-trajectory pairs, and `n_trains` spike-train samples per
//! pair. Every presynaptic spike is classified against the postsynaptic train
//! and valid pairings feed the per-`dt` statistics.
//!
//! Sequences are independent work units. Each derives its RNG streams from
//! `(master_seed, purpose, sequence, train)`, partial statistics are merged
//! in sequence order, and parallel execution therefore never changes any
//! emitted number.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::rates::{generate_trajectory, ActivationParams, RateTrajectory, TrajectoryParams};
use crate::rules::{
    classify_pairing, nn_stdp_update, rate_update, spike_update, PairingKind, PostState,
    RuleParams,
};
use crate::spikes::{sample_spikes, SpikeTrain};
use crate::stats::{bin_index, ls_slope, pearson, Moments};
use crate::stream::{derive_rng, purpose};

pub use crate::stats::{bin_statistics, BinStat, BinnedStats};

/// Which rule populates the first timing curve: the spike-gated update at
/// each presynaptic spike, or the rate rule evaluated at the spike time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveRule {
    Spike,
    Rate,
}

/// Parameters of the single-synapse closed loop used by the slope-statistics
/// experiment and the example trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedLoopParams {
    /// Bias term of the activation step.
    pub alpha: f64,
    /// Coupling gain of the activation step.
    pub beta: f64,
    /// Initial synaptic weight.
    pub w_init: f64,
    /// Learning rate for simulated weight evolution (the per-event curve
    /// statistics use `rule.eta` instead).
    pub eta: f64,
}

impl Default for ClosedLoopParams {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            beta: 1.0,
            w_init: 0.5,
            eta: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Number of independent rate-sequence pairs.
    pub n_sequences: usize,
    /// Spike-train samples per sequence pair.
    pub n_trains: usize,
    /// Nominal bin count over the timing axis; must equal `2 * window + 1`.
    pub dt_bins: usize,
    /// Number of bins over the rule-update axis in the agreement experiment.
    pub agreement_bins: usize,
    pub master_seed: u64,
    pub curve_rule: CurveRule,
    /// Skip presynaptic spikes whose pairing window is truncated by the
    /// train boundary instead of classifying over the truncated window.
    pub discard_truncated: bool,
    pub trajectory: TrajectoryParams,
    pub activation: ActivationParams,
    pub rule: RuleParams,
    pub dynamics: ClosedLoopParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_sequences: 500,
            n_trains: 1000,
            dt_bins: 41,
            agreement_bins: 20,
            master_seed: 42,
            curve_rule: CurveRule::Spike,
            discard_truncated: false,
            trajectory: TrajectoryParams::default(),
            activation: ActivationParams::default(),
            rule: RuleParams::default(),
            dynamics: ClosedLoopParams::default(),
        }
    }
}

impl ExperimentConfig {
    /// Quick-run preset: 100 sequences x 100 trains.
    pub fn reduced() -> Self {
        Self {
            n_sequences: 100,
            n_trains: 100,
            ..Default::default()
        }
    }

    pub fn seq_len(&self) -> usize {
        self.trajectory.length
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.n_sequences < 1 {
            return Err(Error::invalid("experiment.n_sequences", "must be >= 1"));
        }
        if self.n_trains < 1 {
            return Err(Error::invalid("experiment.n_trains", "must be >= 1"));
        }
        if self.agreement_bins < 1 {
            return Err(Error::invalid("experiment.agreement_bins", "must be >= 1"));
        }
        self.trajectory.validate()?;
        self.activation.validate()?;
        self.rule.validate()?;
        if self.dt_bins != 2 * self.rule.window + 1 {
            return Err(Error::invalid(
                "experiment.dt_bins",
                format!(
                    "must cover [-window, window]: expected {}, got {}",
                    2 * self.rule.window + 1,
                    self.dt_bins
                ),
            ));
        }
        for (field, v) in [
            ("dynamics.alpha", self.dynamics.alpha),
            ("dynamics.beta", self.dynamics.beta),
            ("dynamics.w_init", self.dynamics.w_init),
            ("dynamics.eta", self.dynamics.eta),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(field, "must be finite"));
            }
        }
        Ok(())
    }
}

/// Tally of pairing outcomes over every presynaptic spike examined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EventCounts {
    pub pre_spikes: u64,
    pub valid: u64,
    pub no_post: u64,
    pub both_sides: u64,
    pub coincident: u64,
    pub discarded: u64,
}

impl EventCounts {
    pub fn merge(&mut self, other: &EventCounts) {
        self.pre_spikes += other.pre_spikes;
        self.valid += other.valid;
        self.no_post += other.no_post;
        self.both_sides += other.both_sides;
        self.coincident += other.coincident;
        self.discarded += other.discarded;
    }
}

/// One valid pairing with the updates every rule assigns to it.
#[derive(Debug, Clone, Copy)]
pub struct ValidEvent {
    pub dt: i64,
    /// Spike-gated update evaluated at the presynaptic spike time.
    pub spike_dw: f64,
    /// Rate-rule update evaluated at the presynaptic spike time.
    pub rate_dw: f64,
    /// Nearest-neighbor kernel update for this pairing.
    pub nn_dw: f64,
}

/// Per-`dt` statistics of one update rule.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveBin {
    pub dt: i64,
    pub count: u64,
    pub mean: Option<f64>,
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StdpCurve {
    window: usize,
    bins: Vec<CurveBin>,
}

impl StdpCurve {
    fn from_moments(window: usize, moments: &[Moments]) -> Self {
        let bins = (-(window as i64)..=window as i64)
            .filter(|&dt| dt != 0)
            .map(|dt| {
                let m = &moments[(dt + window as i64) as usize];
                CurveBin {
                    dt,
                    count: m.count(),
                    mean: m.mean(),
                    stderr: m.stderr(),
                }
            })
            .collect();
        Self { window, bins }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Bins in ascending `dt` order, `dt = 0` excluded.
    pub fn bins(&self) -> &[CurveBin] {
        &self.bins
    }

    pub fn bin(&self, dt: i64) -> Option<&CurveBin> {
        self.bins.iter().find(|b| b.dt == dt)
    }

    pub fn total_count(&self) -> u64 {
        self.bins.iter().map(|b| b.count).sum()
    }
}

/// The two timing curves measured over the same event stream.
#[derive(Debug, Clone)]
pub struct StdpCurves {
    /// Curve of the configured update rule (spike-gated by default).
    pub rule_curve: StdpCurve,
    /// Curve of the nearest-neighbor STDP rule.
    pub nn_curve: StdpCurve,
    pub events: EventCounts,
}

enum WalkMode<'a> {
    Generated { reverse: bool },
    Fixed(&'a [(RateTrajectory, RateTrajectory)]),
}

/// Drive every (sequence, train) cell, calling `on_event` for each valid
/// pairing. Returns per-sequence accumulators in sequence order plus the
/// merged outcome counts.
fn walk_events<'a, T, I, F>(
    cfg: &ExperimentConfig,
    mode: WalkMode<'a>,
    init: I,
    on_event: F,
) -> Result<(Vec<T>, EventCounts), Error>
where
    T: Send,
    I: Fn() -> T + Sync,
    F: Fn(&mut T, ValidEvent) + Sync,
{
    cfg.validate()?;
    let n_sequences = match &mode {
        WalkMode::Generated { .. } => cfg.n_sequences,
        WalkMode::Fixed(pairs) => pairs.len(),
    };
    let mode = &mode;
    let parts: Result<Vec<(T, EventCounts)>, Error> = (0..n_sequences as u64)
        .into_par_iter()
        .map(|seq| {
            let mut acc = init();
            let mut counts = EventCounts::default();
            scan_sequence(cfg, seq, mode, &mut acc, &mut counts, &on_event)?;
            Ok((acc, counts))
        })
        .collect();
    let parts = parts?;
    let mut counts = EventCounts::default();
    let mut accs = Vec::with_capacity(parts.len());
    for (acc, c) in parts {
        counts.merge(&c);
        accs.push(acc);
    }
    Ok((accs, counts))
}

fn scan_sequence<T, F>(
    cfg: &ExperimentConfig,
    seq: u64,
    mode: &WalkMode<'_>,
    acc: &mut T,
    counts: &mut EventCounts,
    on_event: &F,
) -> Result<(), Error>
where
    F: Fn(&mut T, ValidEvent),
{
    let reverse = matches!(mode, WalkMode::Generated { reverse: true });
    // trains are always sampled from the forward trajectories; under time
    // reversal both the trajectories and the sampled trains are then
    // reversed, so the reversed run reuses the same realizations
    let (forward_pre, forward_post) = match mode {
        WalkMode::Generated { .. } => {
            let mut rng = derive_rng(cfg.master_seed, &[purpose::TRAJ_PRE, seq]);
            let pre = generate_trajectory(&cfg.trajectory, &mut rng)?;
            let mut rng = derive_rng(cfg.master_seed, &[purpose::TRAJ_POST, seq]);
            let post = generate_trajectory(&cfg.trajectory, &mut rng)?;
            (pre, post)
        }
        WalkMode::Fixed(pairs) => {
            let (pre, post) = &pairs[seq as usize];
            if pre.len() != post.len() {
                return Err(Error::DimensionMismatch {
                    expected: pre.len(),
                    got: post.len(),
                });
            }
            (pre.clone(), post.clone())
        }
    };
    let (pre_traj, post_traj) = if reverse {
        (forward_pre.reversed(), forward_post.reversed())
    } else {
        (forward_pre.clone(), forward_post.clone())
    };

    let len = post_traj.len();
    let window = cfg.rule.window;
    for train_idx in 0..cfg.n_trains as u64 {
        let mut rng = derive_rng(cfg.master_seed, &[purpose::TRAIN_PRE, seq, train_idx]);
        let mut pre_train = sample_spikes(&forward_pre, &cfg.activation, &mut rng);
        let mut rng = derive_rng(cfg.master_seed, &[purpose::TRAIN_POST, seq, train_idx]);
        let mut post_train = sample_spikes(&forward_post, &cfg.activation, &mut rng);
        if reverse {
            pre_train = pre_train.reversed();
            post_train = post_train.reversed();
        }
        scan_train(
            cfg,
            &pre_traj,
            &post_traj,
            &pre_train,
            &post_train,
            len,
            window,
            acc,
            counts,
            on_event,
        )?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn scan_train<T, F>(
    cfg: &ExperimentConfig,
    pre_traj: &RateTrajectory,
    post_traj: &RateTrajectory,
    pre_train: &SpikeTrain,
    post_train: &SpikeTrain,
    len: usize,
    window: usize,
    acc: &mut T,
    counts: &mut EventCounts,
    on_event: &F,
) -> Result<(), Error>
where
    F: Fn(&mut T, ValidEvent),
{
    for t_pre in pre_train.spike_times() {
        counts.pre_spikes += 1;
        if cfg.discard_truncated && (t_pre < window || t_pre + window >= len) {
            counts.discarded += 1;
            continue;
        }
        let outcome = classify_pairing(t_pre, post_train, window)?;
        match outcome.kind {
            PairingKind::NoPost => counts.no_post += 1,
            PairingKind::BothSides => counts.both_sides += 1,
            PairingKind::Coincident => counts.coincident += 1,
            PairingKind::Valid { dt } => {
                counts.valid += 1;
                let post_state = PostState {
                    s: post_traj.s()[t_pre],
                    sdot: post_traj.sdot()[t_pre],
                };
                let event = ValidEvent {
                    dt,
                    spike_dw: spike_update(post_state, true, &cfg.activation, &cfg.rule),
                    rate_dw: rate_update(
                        post_state,
                        pre_traj.s()[t_pre],
                        &cfg.activation,
                        &cfg.rule,
                    ),
                    nn_dw: nn_stdp_update(&outcome, &cfg.rule),
                };
                on_event(acc, event);
            }
        }
    }
    Ok(())
}

fn curves_from_walk(
    cfg: &ExperimentConfig,
    mode: WalkMode<'_>,
) -> Result<StdpCurves, Error> {
    let window = cfg.rule.window;
    let slots = 2 * window + 1;
    let curve_rule = cfg.curve_rule;
    let (parts, events) = walk_events(
        cfg,
        mode,
        || (vec![Moments::default(); slots], vec![Moments::default(); slots]),
        |(rule_acc, nn_acc), ev| {
            let idx = (ev.dt + window as i64) as usize;
            let x = match curve_rule {
                CurveRule::Spike => ev.spike_dw,
                CurveRule::Rate => ev.rate_dw,
            };
            rule_acc[idx].push(x);
            nn_acc[idx].push(ev.nn_dw);
        },
    )?;
    let mut rule_m = vec![Moments::default(); slots];
    let mut nn_m = vec![Moments::default(); slots];
    for (r, n) in &parts {
        for i in 0..slots {
            rule_m[i].merge(&r[i]);
            nn_m[i].merge(&n[i]);
        }
    }
    Ok(StdpCurves {
        rule_curve: StdpCurve::from_moments(window, &rule_m),
        nn_curve: StdpCurve::from_moments(window, &nn_m),
        events,
    })
}

/// Measure both timing curves over generated sequence pairs.
pub fn run_stdp_curve(cfg: &ExperimentConfig) -> Result<StdpCurves, Error> {
    curves_from_walk(cfg, WalkMode::Generated { reverse: false })
}

/// Control run: the same realizations played backwards. Reversal negates the
/// postsynaptic slopes and mirrors the timing differences, so the resulting
/// curve should be the mirrored negation of the forward one.
pub fn run_stdp_curve_time_reversed(cfg: &ExperimentConfig) -> Result<StdpCurves, Error> {
    curves_from_walk(cfg, WalkMode::Generated { reverse: true })
}

/// Measure the timing curves on caller-supplied trajectory pairs
/// (`cfg.n_sequences` is ignored; one entry per pair).
pub fn run_stdp_curve_on_pairs(
    cfg: &ExperimentConfig,
    pairs: &[(RateTrajectory, RateTrajectory)],
) -> Result<StdpCurves, Error> {
    if pairs.is_empty() {
        return Err(Error::invalid("pairs", "need at least one trajectory pair"));
    }
    curves_from_walk(cfg, WalkMode::Fixed(pairs))
}

/// One bin over the rule-update axis of the agreement experiment.
#[derive(Debug, Clone)]
pub struct AgreementBin {
    pub center: f64,
    pub count: u64,
    pub mean_nn: Option<f64>,
}

/// Event-by-event comparison of the spike-gated rule (binning key) against
/// the nearest-neighbor rule (binned value).
#[derive(Debug, Clone)]
pub struct RuleAgreement {
    pub bins: Vec<AgreementBin>,
    /// Pearson correlation over (bin center, bin mean) of non-empty bins.
    pub pearson_r: f64,
    /// Least-squares slope over the same points.
    pub slope: f64,
    pub n_events: u64,
    pub x_min: f64,
    pub x_max: f64,
}

/// Collect `(spike-rule update, nearest-neighbor update)` pairs over the
/// same event stream as [`run_stdp_curve`], bin by the first coordinate, and
/// regress the per-bin means.
pub fn run_rule_agreement(cfg: &ExperimentConfig) -> Result<RuleAgreement, Error> {
    // pass 1: observed range of the binning key
    let (parts, _) = walk_events(
        cfg,
        WalkMode::Generated { reverse: false },
        || None::<(f64, f64)>,
        |acc, ev| {
            let (lo, hi) = acc.get_or_insert((ev.spike_dw, ev.spike_dw));
            *lo = lo.min(ev.spike_dw);
            *hi = hi.max(ev.spike_dw);
        },
    )?;
    let mut range: Option<(f64, f64)> = None;
    for part in parts.into_iter().flatten() {
        let (lo, hi) = range.get_or_insert(part);
        *lo = lo.min(part.0);
        *hi = hi.max(part.1);
    }
    let (x_min, x_max) = range.ok_or_else(|| {
        Error::DegenerateRegression("no valid pairings produced any updates".into())
    })?;
    if !(x_max > x_min) {
        return Err(Error::DegenerateRegression(format!(
            "all rule updates equal {x_min}; cannot bin a single value"
        )));
    }

    let n_bins = cfg.agreement_bins;
    let width = (x_max - x_min) / n_bins as f64;
    let mut edges: Vec<f64> = (0..=n_bins).map(|i| x_min + width * i as f64).collect();
    // make the top edge inclusive of the observed maximum
    edges[n_bins] = x_max.max(edges[n_bins]).next_up();

    // pass 2: same deterministic event stream, binned
    let edges_ref = &edges;
    let (parts, counts) = walk_events(
        cfg,
        WalkMode::Generated { reverse: false },
        || vec![Moments::default(); n_bins],
        |acc, ev| {
            if let Some(i) = bin_index(ev.spike_dw, edges_ref) {
                acc[i].push(ev.nn_dw);
            }
        },
    )?;
    let mut merged = vec![Moments::default(); n_bins];
    for part in &parts {
        for i in 0..n_bins {
            merged[i].merge(&part[i]);
        }
    }

    let bins: Vec<AgreementBin> = merged
        .iter()
        .enumerate()
        .map(|(i, m)| AgreementBin {
            center: 0.5 * (edges[i] + edges[i + 1]),
            count: m.count(),
            mean_nn: m.mean(),
        })
        .collect();
    let points: Vec<(f64, f64)> = bins
        .iter()
        .filter_map(|b| b.mean_nn.map(|m| (b.center, m)))
        .collect();
    if points.len() < 2 {
        return Err(Error::DegenerateRegression(format!(
            "only {} non-empty agreement bin(s)",
            points.len()
        )));
    }
    let pearson_r = pearson(&points).ok_or_else(|| {
        Error::DegenerateRegression("bin means carry no variance".into())
    })?;
    let slope = ls_slope(&points)
        .ok_or_else(|| Error::DegenerateRegression("bin centers carry no variance".into()))?;
    Ok(RuleAgreement {
        bins,
        pearson_r,
        slope,
        n_events: counts.valid,
        x_min,
        x_max,
    })
}

/// Mean and standard error of a per-trial statistic.
#[derive(Debug, Clone, Copy)]
pub struct ConditionStats {
    pub mean: f64,
    pub stderr: f64,
}

fn condition_stats(values: &[f64]) -> ConditionStats {
    let mut m = Moments::default();
    for &v in values {
        m.push(v);
    }
    ConditionStats {
        mean: m.mean().unwrap_or(f64::NAN),
        stderr: m.stderr().unwrap_or(0.0),
    }
}

/// Paired two-condition measurement of the mean squared postsynaptic slope.
#[derive(Debug, Clone)]
pub struct RateDynamicsReport {
    pub plastic: ConditionStats,
    pub frozen: ConditionStats,
    /// Paired per-trial difference (plastic - frozen).
    pub difference: ConditionStats,
    pub trials: usize,
    pub per_trial_plastic: Vec<f64>,
    pub per_trial_frozen: Vec<f64>,
}

/// Closed-loop slope statistics: `s_post(t) = alpha + beta * W(t) *
/// rho(s_pre(t-1)) + d(t)` with `d` a generated drive trajectory. The
/// plastic condition updates `W` each step by the rate rule; the frozen
/// condition keeps `W` at its initial value. Both conditions replay
/// identical `(s_pre, d)` realizations.
pub fn run_rate_dynamics(cfg: &ExperimentConfig) -> Result<RateDynamicsReport, Error> {
    cfg.validate()?;
    let trials: Result<Vec<(f64, f64)>, Error> = (0..cfg.n_sequences as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = derive_rng(cfg.master_seed, &[purpose::DYN_PRE, trial]);
            let s_pre = generate_trajectory(&cfg.trajectory, &mut rng)?;
            let mut rng = derive_rng(cfg.master_seed, &[purpose::DYN_DRIVE, trial]);
            let drive = generate_trajectory(&cfg.trajectory, &mut rng)?;
            let plastic = closed_loop_mean_sq_slope(cfg, &s_pre, &drive, true);
            let frozen = closed_loop_mean_sq_slope(cfg, &s_pre, &drive, false);
            Ok((plastic, frozen))
        })
        .collect();
    let trials = trials?;
    let per_trial_plastic: Vec<f64> = trials.iter().map(|t| t.0).collect();
    let per_trial_frozen: Vec<f64> = trials.iter().map(|t| t.1).collect();
    let diffs: Vec<f64> = trials.iter().map(|t| t.0 - t.1).collect();
    Ok(RateDynamicsReport {
        plastic: condition_stats(&per_trial_plastic),
        frozen: condition_stats(&per_trial_frozen),
        difference: condition_stats(&diffs),
        trials: trials.len(),
        per_trial_plastic,
        per_trial_frozen,
    })
}

fn closed_loop_mean_sq_slope(
    cfg: &ExperimentConfig,
    s_pre: &RateTrajectory,
    drive: &RateTrajectory,
    plastic: bool,
) -> f64 {
    let dyn_p = &cfg.dynamics;
    let rule = RuleParams {
        eta: dyn_p.eta,
        ..cfg.rule
    };
    let len = s_pre.len();
    let mut w = dyn_p.w_init;
    // t = 0 uses the contemporaneous presynaptic level as the initial input
    let mut s_prev =
        dyn_p.alpha + dyn_p.beta * w * crate::rates::rho(s_pre.s()[0], &cfg.activation)
            + drive.s()[0];
    let mut sum_sq = 0.0;
    for t in 1..len {
        let pre_level = s_pre.s()[t - 1];
        let s_post =
            dyn_p.alpha + dyn_p.beta * w * crate::rates::rho(pre_level, &cfg.activation)
                + drive.s()[t];
        let sdot = s_post - s_prev;
        sum_sq += sdot * sdot;
        if plastic {
            w += rate_update(
                PostState { s: s_post, sdot },
                pre_level,
                &cfg.activation,
                &rule,
            );
        }
        s_prev = s_post;
    }
    sum_sq / (len - 1) as f64
}

/// One time step of an example trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub xi_pre: bool,
    pub s_post: f64,
    /// Weight after the update at this step, if any.
    pub w: f64,
}

/// Full time series of one realization: presynaptic spikes, postsynaptic
/// activity, and the weight evolving under the spike-gated rule.
#[derive(Debug, Clone)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    /// `(t, dw)` for each presynaptic spike, in time order.
    pub updates: Vec<(usize, f64)>,
    pub w_init: f64,
}

/// Simulate one sequence realization and emit its full time series. `index`
/// selects the realization; the weight moves only at presynaptic spikes.
pub fn dump_example_trace(cfg: &ExperimentConfig, index: u64) -> Result<Trace, Error> {
    cfg.validate()?;
    let mut rng = derive_rng(cfg.master_seed, &[purpose::TRACE_TRAJ_PRE, index]);
    let pre_traj = generate_trajectory(&cfg.trajectory, &mut rng)?;
    let mut rng = derive_rng(cfg.master_seed, &[purpose::TRACE_TRAJ_POST, index]);
    let post_traj = generate_trajectory(&cfg.trajectory, &mut rng)?;
    let mut rng = derive_rng(cfg.master_seed, &[purpose::TRACE_TRAIN_PRE, index]);
    let pre_train = sample_spikes(&pre_traj, &cfg.activation, &mut rng);

    let rule = RuleParams {
        eta: cfg.dynamics.eta,
        ..cfg.rule
    };
    let mut w = cfg.dynamics.w_init;
    let mut rows = Vec::with_capacity(pre_traj.len());
    let mut updates = Vec::new();
    for t in 0..pre_traj.len() {
        let xi = pre_train.get(t);
        if xi {
            let dw = spike_update(
                PostState {
                    s: post_traj.s()[t],
                    sdot: post_traj.sdot()[t],
                },
                true,
                &cfg.activation,
                &rule,
            );
            updates.push((t, dw));
            w += dw;
        }
        rows.push(TraceRow {
            t,
            xi_pre: xi,
            s_post: post_traj.s()[t],
            w,
        });
    }
    Ok(Trace {
        rows,
        updates,
        w_init: cfg.dynamics.w_init,
    })
}
