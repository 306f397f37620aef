//! Seeded Monte Carlo rollouts of alpha-vector policies on a product POMDP.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::ModelError;
use crate::product::{can_reach, ProductPomdp, SparseBelief};
use crate::solver::{best_alpha, AlphaVector};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("the policy has no action for the current belief")]
    PolicyUndefined,
    #[error("max_steps must be at least 1")]
    NoSteps,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Success,
    Violation,
    Cutoff,
}

/// One step of a recorded episode: the state acted in, the action, and the
/// observation received afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub state: usize,
    pub action: usize,
    pub observation: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EpisodeOutcome {
    pub result: Outcome,
    pub steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceStep>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub n_episodes: usize,
    pub p_hat: f64,
    pub stderr: f64,
    pub cutoff_fraction: f64,
}

impl McEstimate {
    fn from_counts(n: usize, successes: usize, cutoffs: usize) -> Self {
        let p_hat = successes as f64 / n as f64;
        Self {
            n_episodes: n,
            p_hat,
            stderr: (p_hat * (1.0 - p_hat) / n as f64).sqrt(),
            cutoff_fraction: cutoffs as f64 / n as f64,
        }
    }

    /// True when `p_hat` lies in `[lb - 3σ, lb + eps + 3σ]`.
    pub fn consistent_with(&self, lb: f64, eps: f64) -> bool {
        let slack = 3.0 * self.stderr;
        self.p_hat >= lb - slack - 1e-12 && self.p_hat <= lb + eps + slack + 1e-12
    }
}

/// Default episode cap: `10·sqrt(|S|)` clamped to `[1000, 100000]`.
pub fn default_max_steps(num_states: usize) -> usize {
    ((10.0 * (num_states as f64).sqrt()).ceil() as usize).clamp(1000, 100_000)
}

/// Random stream of episode `i`: one ChaCha stream per episode under the
/// master seed, so results do not depend on execution order.
pub fn episode_rng(master_seed: u64, i: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(i);
    rng
}

fn sample<R: Rng>(rng: &mut R, items: impl IntoIterator<Item = (usize, f64)>) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in items {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// States from which some policy can still reach a success state.
fn live_states(p: &ProductPomdp) -> Vec<bool> {
    let target: Vec<bool> = (0..p.num_states()).map(|i| p.is_success(i)).collect();
    can_reach(p.underlying_mdp(), &target)
}

/// Runs one episode. Success means acting in or entering a success state.
/// Violation means reaching the sink, the terminal state, or any state from
/// which success is no longer reachable, since the outcome is then fixed.
///
/// The controller starts at the best vector for `b0` and then follows each
/// vector's `next` links; vectors without links are re-chosen from the
/// updated belief.
pub fn rollout(
    p: &ProductPomdp,
    policy: &[AlphaVector],
    b0: &[(usize, f64)],
    seed: u64,
    max_steps: usize,
    record: bool,
) -> Result<EpisodeOutcome, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    run_episode(p, &live_states(p), policy, b0, &mut rng, max_steps, record)
}

fn run_episode<R: Rng>(
    p: &ProductPomdp,
    live: &[bool],
    policy: &[AlphaVector],
    b0: &[(usize, f64)],
    rng: &mut R,
    max_steps: usize,
    record: bool,
) -> Result<EpisodeOutcome, SimError> {
    if max_steps == 0 {
        return Err(SimError::NoSteps);
    }
    let mut trace = record.then(Vec::new);
    let mut state = sample(rng, b0.iter().copied());
    let mut belief: SparseBelief = b0.to_vec();
    let mut node = best_alpha(policy, &belief).ok_or(SimError::PolicyUndefined)?;
    for step in 1..=max_steps {
        let a = policy[node].action;
        let next = sample(rng, p.transition_row(state, a).iter().copied());
        let o = sample(rng, p.observation_row(a, next).iter().copied().enumerate());
        if let Some(t) = trace.as_mut() {
            t.push(TraceStep {
                state,
                action: a,
                observation: o,
            });
        }
        let result = if p.is_success(state) || p.is_success(next) {
            Some(Outcome::Success)
        } else if next == p.sink() || next == p.terminal() || !live[next] {
            Some(Outcome::Violation)
        } else {
            None
        };
        if let Some(result) = result {
            return Ok(EpisodeOutcome {
                result,
                steps: step,
                trace,
            });
        }
        belief = p.belief_update(&belief, a, o)?;
        state = next;
        node = match policy[node].next.get(o) {
            Some(&j) if j < policy.len() => j,
            _ => best_alpha(policy, &belief).ok_or(SimError::PolicyUndefined)?,
        };
    }
    Ok(EpisodeOutcome {
        result: Outcome::Cutoff,
        steps: max_steps,
        trace,
    })
}

/// Outcomes of `n` episodes in episode order, run in parallel.
pub fn run_episodes(
    p: &ProductPomdp,
    policy: &[AlphaVector],
    b0: &[(usize, f64)],
    n: usize,
    master_seed: u64,
    max_steps: usize,
) -> Result<Vec<Outcome>, SimError> {
    let live = live_states(p);
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = episode_rng(master_seed, i);
            run_episode(p, &live, policy, b0, &mut rng, max_steps, false).map(|e| e.result)
        })
        .collect()
}

/// Monte Carlo estimate of the policy's satisfaction probability. Cutoff
/// episodes count as failures.
pub fn estimate(
    p: &ProductPomdp,
    policy: &[AlphaVector],
    b0: &[(usize, f64)],
    n: usize,
    master_seed: u64,
    max_steps: usize,
) -> Result<McEstimate, SimError> {
    let outcomes = run_episodes(p, policy, b0, n.max(1), master_seed, max_steps)?;
    Ok(summarize(&outcomes))
}

pub fn summarize(outcomes: &[Outcome]) -> McEstimate {
    let successes = outcomes.iter().filter(|&&o| o == Outcome::Success).count();
    let cutoffs = outcomes.iter().filter(|&&o| o == Outcome::Cutoff).count();
    McEstimate::from_counts(outcomes.len().max(1), successes, cutoffs)
}

/// CSV of the running estimate: `episodes,p_hat` after every episode.
pub fn cumulative_csv(outcomes: &[Outcome]) -> String {
    let mut out = String::from("episodes,p_hat\n");
    let mut successes = 0usize;
    for (i, o) in outcomes.iter().enumerate() {
        if *o == Outcome::Success {
            successes += 1;
        }
        out.push_str(&format!(
            "{},{}\n",
            i + 1,
            successes as f64 / (i + 1) as f64
        ));
    }
    out
}
