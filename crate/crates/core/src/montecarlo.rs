//! Monte Carlo experiments over independent, seed-derived trials.
//!
//! Trial `i` uses seed `mix(global_seed, i)` and results come back in trial
//! order, so output does not depend on how trials are scheduled.

use serde::Serialize;

use crate::exec::Execution;
use crate::hypergraph::{generate_er_with, generate_fuse_with, ErParams, FuseParams};
use crate::peeler::{peel_rounds, rooted_survival};
use crate::threshold::{iterate_p, iterate_p_unrooted, iterate_phat_indicator};
use crate::{rng, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Fuse,
    Er,
}

/// A random-hypergraph distribution to sample trials from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GraphSpec {
    pub family: Family,
    pub k: usize,
    /// Fuse: edges per segment per type. ER: edges per vertex.
    pub c: f64,
    /// Fuse only.
    pub ell: usize,
    /// Fuse: segment size. ER: number of vertices.
    pub n: u64,
}

impl GraphSpec {
    pub fn validate(&self) -> Result<()> {
        match self.family {
            Family::Fuse => self.fuse(0).validate(),
            Family::Er => {
                if !(self.c.is_finite() && self.c > 0.0) {
                    return Err(Error::InvalidParams(format!("c must be positive, got {}", self.c)));
                }
                self.er(0).validate()
            }
        }
    }

    fn fuse(&self, seed: u64) -> FuseParams {
        FuseParams { k: self.k, c: self.c, ell: self.ell, n: self.n, seed }
    }

    fn er(&self, seed: u64) -> ErParams {
        ErParams::new(self.k, self.n, (self.c * self.n as f64).round() as usize, seed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    pub peelable: bool,
    pub rounds: usize,
    pub core_vertices: usize,
    pub core_edges: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PeelSummary {
    pub trials: usize,
    pub peelable: usize,
    pub peel_fraction: f64,
    pub mean_rounds: f64,
}

pub fn trial_seed(global_seed: u64, trial: usize) -> u64 {
    rng::mix(global_seed, trial as u64)
}

/// Runs `f(trial, seed)` for every trial; one trial is one work item.
pub fn run_trials<T, F>(trials: usize, global_seed: u64, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, u64) -> T + Sync + Send,
{
    exec.map_range(trials, |i| f(i, trial_seed(global_seed, i)))
}

/// Generates and peels `trials` graphs. Each trial is single-threaded.
pub fn mc_peel(spec: &GraphSpec, trials: usize, seed: u64, exec: Execution) -> Result<Vec<TrialOutcome>> {
    spec.validate()?;
    run_trials(trials, seed, exec, |trial, s| {
        let h = match spec.family {
            Family::Fuse => generate_fuse_with(&spec.fuse(s), Execution::Sequential)?,
            Family::Er => generate_er_with(&spec.er(s), Execution::Sequential)?,
        };
        let r = peel_rounds(&h);
        Ok(TrialOutcome {
            trial,
            seed: s,
            peelable: r.is_peelable(),
            rounds: r.rounds,
            core_vertices: r.core_vertices.len(),
            core_edges: r.core_edges.len(),
        })
    })
    .into_iter()
    .collect()
}

pub fn summarize(outcomes: &[TrialOutcome]) -> PeelSummary {
    let trials = outcomes.len();
    let peelable = outcomes.iter().filter(|o| o.peelable).count();
    let total_rounds: usize = outcomes.iter().map(|o| o.rounds).sum();
    let denom = trials.max(1) as f64;
    PeelSummary {
        trials,
        peelable,
        peel_fraction: peelable as f64 / denom,
        mean_rounds: total_rounds as f64 / denom,
    }
}

/// Empirical and predicted survival of one segment after `r` rounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SurvivalRow {
    pub r: usize,
    pub segment: usize,
    /// Fraction surviving `r` rounds of ordinary peeling.
    pub empirical_unrooted: f64,
    /// Fraction surviving `r` rounds of their own rooted peeling process.
    pub empirical_rooted: f64,
    /// `P^r 1_I`.
    pub predicted_p: f64,
    /// `P̂^r 1_I`, an upper bound on `predicted_p`.
    pub predicted_phat: f64,
    /// Prediction for ordinary peeling derived from `P^(r-1) 1_I`.
    pub predicted_unrooted: f64,
    /// `|empirical_rooted - predicted_p|`.
    pub gap: f64,
    /// `|empirical_unrooted - predicted_unrooted|`.
    pub gap_unrooted: f64,
}

/// Averages per-segment survival over `trials` fuse graphs and sets it
/// against the operator predictions, for `r = 0..=max_rounds`.
pub fn survival_profile(
    params: &FuseParams,
    max_rounds: usize,
    trials: usize,
    exec: Execution,
) -> Result<Vec<SurvivalRow>> {
    params.validate()?;
    let (k, c, ell, n) = (params.k, params.c, params.ell, params.n);
    let segments = ell + k - 1;

    let per_trial: Vec<Result<(Vec<Vec<u64>>, Vec<Vec<u64>>)>> =
        run_trials(trials, params.seed, exec, |_, s| {
            let h = generate_fuse_with(&FuseParams { seed: s, ..*params }, Execution::Sequential)?;
            let peel = peel_rounds(&h);
            // Past the last round nothing changes.
            let last = peel.survivors_by_round.last().cloned().unwrap_or_default();
            let unrooted = (0..=max_rounds)
                .map(|r| peel.survivors_by_round.get(r).unwrap_or(&last).clone())
                .collect();
            Ok((unrooted, rooted_survival(&h, max_rounds)?))
        });

    let mut unrooted = vec![vec![0u64; segments]; max_rounds + 1];
    let mut rooted = unrooted.clone();
    for t in per_trial {
        let (u, q) = t?;
        for r in 0..=max_rounds {
            for i in 0..segments {
                unrooted[r][i] += u[r][i];
                rooted[r][i] += q[r][i];
            }
        }
    }

    let p = iterate_p(k, c, ell, max_rounds);
    let phat = iterate_phat_indicator(k, c, ell, max_rounds);
    let pu = iterate_p_unrooted(k, c, ell, max_rounds);
    let total = (n * trials.max(1) as u64) as f64;
    let mut rows = Vec::with_capacity((max_rounds + 1) * segments);
    for r in 0..=max_rounds {
        for i in 0..segments {
            let er = rooted[r][i] as f64 / total;
            let eu = unrooted[r][i] as f64 / total;
            rows.push(SurvivalRow {
                r,
                segment: i,
                empirical_unrooted: eu,
                empirical_rooted: er,
                predicted_p: p[r][i],
                predicted_phat: phat[r][i],
                predicted_unrooted: pu[r][i],
                gap: (er - p[r][i]).abs(),
                gap_unrooted: (eu - pu[r][i]).abs(),
            });
        }
    }
    Ok(rows)
}
