//! Spike sampling: independent per-step binomial draws from a rate trajectory.

use rand::Rng;

use crate::rates::{rho, ActivationParams, RateTrajectory};

/// Binary spike indicator per time step, aligned to a trajectory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeTrain {
    xi: Vec<bool>,
}

impl SpikeTrain {
    pub fn from_bools(xi: Vec<bool>) -> Self {
        Self { xi }
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn get(&self, t: usize) -> bool {
        self.xi[t]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.xi
    }

    /// Strictly increasing indices of the spikes.
    pub fn spike_times(&self) -> Vec<usize> {
        self.xi
            .iter()
            .enumerate()
            .filter_map(|(t, &fired)| fired.then_some(t))
            .collect()
    }

    pub fn count(&self) -> usize {
        self.xi.iter().filter(|&&fired| fired).count()
    }

    pub fn reversed(&self) -> Self {
        Self {
            xi: self.xi.iter().rev().copied().collect(),
        }
    }
}

/// Sample a spike train: at each step an independent Bernoulli draw with
/// success probability `rho(s[t])`. No refractory period.
pub fn sample_spikes<R: Rng + ?Sized>(
    traj: &RateTrajectory,
    act: &ActivationParams,
    rng: &mut R,
) -> SpikeTrain {
    let xi = traj
        .s()
        .iter()
        .map(|&s| rng.random::<f64>() < rho(s, act))
        .collect();
    SpikeTrain { xi }
}
