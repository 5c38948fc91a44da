//! Point-attractor environment where the agent's action replaces the forcing
//! term, plus a cross-entropy policy search over basis-function weights.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dmp::{
    attractor_acceleration, fit_model_on, semi_implicit_step, BasisConfig, DmpModel, DynamicFeatures, PhaseGrid, Weights,
};
use crate::error::{Error, Result};
use crate::trajectory::{KinematicTrajectory, DEFAULT_UNIT_STEPS};
use crate::vec3::Vec3;

pub const ACCELERATION_PENALTY: f64 = 1e-3;
pub const ACTION_PENALTY: f64 = 1e-7;
pub const TERMINAL_PENALTY: f64 = 10.0;
/// Used when no fitted forcing term is available to size the clamp.
pub const FALLBACK_ACTION_LIMIT: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub features: DynamicFeatures,
    pub start: Vec3,
    pub goal: Vec3,
    pub steps: usize,
    /// Per-axis clamp on the action magnitude.
    pub action_limit: f64,
}

impl EnvConfig {
    pub fn new(features: DynamicFeatures, start: Vec3, goal: Vec3) -> Self {
        Self {
            features,
            start,
            goal,
            steps: DEFAULT_UNIT_STEPS,
            action_limit: FALLBACK_ACTION_LIMIT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.features.validate()?;
        if self.steps < 2 {
            return Err(Error::InvalidConfig(format!("steps {} must be >= 2", self.steps)));
        }
        if self.action_limit.is_nan() || self.action_limit <= 0.0 {
            return Err(Error::InvalidConfig("action_limit must be > 0".into()));
        }
        if !(self.start.is_finite() && self.goal.is_finite()) {
            return Err(Error::InvalidConfig("start and goal must be finite".into()));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.steps as f64
    }
}

/// Ten times the largest per-axis magnitude of a fitted forcing term, or the
/// fallback when there is none.
pub fn action_limit_for(forcing: &[Vec3]) -> f64 {
    let peak = forcing.iter().map(|f| f.max_abs()).fold(0.0, f64::max);
    if peak.is_finite() && peak > 0.0 {
        10.0 * peak
    } else {
        FALLBACK_ACTION_LIMIT
    }
}

/// Task whose goal is the demo's own goal, with the clamp sized from the
/// demo's forcing term fitted at `features`. Returns the fitted model too so
/// its weights can seed a search.
pub fn demo_task(demo: &KinematicTrajectory, features: DynamicFeatures, basis: &BasisConfig) -> Result<(EnvConfig, DmpModel)> {
    let grid = PhaseGrid::new(basis, demo.steps())?;
    let (model, _) = fit_model_on(&grid, demo, features)?;
    let forcing = grid.forcing(&model.weights, model.start - model.goal);
    let config = EnvConfig {
        features,
        start: demo.start(),
        goal: demo.goal(),
        steps: demo.steps(),
        action_limit: action_limit_for(&forcing),
    };
    Ok((config, model))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub y: Vec3,
    pub yd: Vec3,
}

impl State {
    pub fn at_rest(y: Vec3) -> Self {
        Self { y, yd: Vec3::ZERO }
    }
}

/// Result of one environment transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub next: State,
    pub reward: f64,
    /// Acceleration that produced `next`.
    pub ydd: Vec3,
    /// Action after clamping.
    pub action: Vec3,
    pub clamped: bool,
}

pub fn running_reward(ydd: Vec3, action: Vec3) -> f64 {
    -ACCELERATION_PENALTY * ydd.l1_norm() - ACTION_PENALTY * action.l1_norm()
}

pub fn step(state: State, action: Vec3, config: &EnvConfig) -> Transition {
    let limit = config.action_limit;
    let applied = action.map(|a| a.clamp(-limit, limit));
    let ydd = attractor_acceleration(state.y, state.yd, config.goal, &config.features, applied);
    let (y, yd) = semi_implicit_step(state.y, state.yd, ydd, config.dt());
    Transition {
        next: State { y, yd },
        reward: running_reward(ydd, applied),
        ydd,
        action: applied,
        clamped: applied != action,
    }
}

pub fn terminal_reward(y_final: Vec3, config: &EnvConfig) -> f64 {
    -TERMINAL_PENALTY * (y_final - config.goal).norm()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub states: Vec<State>,
    /// Applied (clamped) actions.
    pub actions: Vec<Vec3>,
    pub accelerations: Vec<Vec3>,
    pub rewards: Vec<f64>,
    pub terminal_reward: f64,
    pub total_return: f64,
    /// Number of steps whose action hit the clamp.
    pub clamped_steps: usize,
    pub dt: f64,
}

impl Episode {
    pub fn final_state(&self) -> State {
        *self.states.last().expect("episode has an initial state")
    }

    pub fn goal_error(&self, goal: Vec3) -> f64 {
        (self.final_state().y - goal).norm()
    }
}

/// Either a fixed action per step or basis weights producing a DMP-shaped
/// forcing term `Σψw/Σψ · x · (start − goal)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    Actions(Vec<Vec3>),
    Forcing { basis: BasisConfig, weights: Weights },
}

impl Policy {
    /// The action sequence this policy produces under `config`.
    pub fn actions(&self, config: &EnvConfig) -> Result<Vec<Vec3>> {
        match self {
            Policy::Actions(actions) => {
                if actions.len() != config.steps {
                    return Err(Error::InvalidConfig(format!(
                        "policy has {} actions for {} steps",
                        actions.len(),
                        config.steps
                    )));
                }
                if !actions.iter().all(|a| a.is_finite()) {
                    return Err(Error::InvalidConfig("actions must be finite".into()));
                }
                Ok(actions.clone())
            }
            Policy::Forcing { basis, weights } => {
                let grid = PhaseGrid::new(basis, config.steps)?;
                forcing_actions(&grid, weights, config)
            }
        }
    }
}

fn forcing_actions(grid: &PhaseGrid, weights: &Weights, config: &EnvConfig) -> Result<Vec<Vec3>> {
    if (0..3).any(|a| weights.axis(a).len() != grid.basis().count) {
        return Err(Error::InvalidConfig("weight count does not match basis count".into()));
    }
    let mut forcing = grid.forcing(weights, config.start - config.goal);
    forcing.truncate(config.steps);
    Ok(forcing)
}

pub fn rollout_policy(policy: &Policy, config: &EnvConfig) -> Result<Episode> {
    config.validate()?;
    let actions = policy.actions(config)?;
    Ok(run_actions(&actions, config))
}

fn run_actions(actions: &[Vec3], config: &EnvConfig) -> Episode {
    let n = actions.len();
    let mut states = Vec::with_capacity(n + 1);
    let mut applied = Vec::with_capacity(n);
    let mut accelerations = Vec::with_capacity(n);
    let mut rewards = Vec::with_capacity(n);
    let mut clamped_steps = 0;
    let mut state = State::at_rest(config.start);
    states.push(state);
    for &action in actions {
        let tr = step(state, action, config);
        state = tr.next;
        states.push(state);
        applied.push(tr.action);
        accelerations.push(tr.ydd);
        rewards.push(tr.reward);
        clamped_steps += usize::from(tr.clamped);
    }
    let terminal = terminal_reward(state.y, config);
    let total_return = rewards.iter().sum::<f64>() + terminal;
    Episode {
        states,
        actions: applied,
        accelerations,
        rewards,
        terminal_reward: terminal,
        total_return,
        clamped_steps,
        dt: config.dt(),
    }
}

/// Cross-entropy method settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CemConfig {
    pub iterations: usize,
    pub population: usize,
    pub elite_fraction: f64,
    pub initial_sd: f64,
    pub sd_floor: f64,
}

impl Default for CemConfig {
    fn default() -> Self {
        Self {
            iterations: 100,
            population: 64,
            elite_fraction: 0.125,
            initial_sd: 1.0,
            sd_floor: 1e-3,
        }
    }
}

impl CemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.population == 0 {
            return Err(Error::InvalidConfig("iterations and population must be >= 1".into()));
        }
        if !(self.elite_fraction > 0.0 && self.elite_fraction <= 1.0) {
            return Err(Error::InvalidConfig("elite_fraction must be in (0, 1]".into()));
        }
        if !(self.initial_sd > 0.0 && self.sd_floor >= 0.0) {
            return Err(Error::InvalidConfig("initial_sd must be > 0 and sd_floor >= 0".into()));
        }
        Ok(())
    }

    pub fn elite_count(&self) -> usize {
        ((self.population as f64 * self.elite_fraction).ceil() as usize).clamp(1, self.population)
    }
}

#[derive(Debug, Clone)]
pub struct PolicySearch {
    pub policy: Policy,
    pub episode: Episode,
    /// Best return found so far, after each iteration.
    pub learning_curve: Vec<f64>,
}

/// Orders returns with NaN below everything.
fn rank_key(r: f64) -> f64 {
    if r.is_nan() {
        f64::NEG_INFINITY
    } else {
        r
    }
}

/// [`search_policy_with`] at the default CEM settings.
pub fn search_policy(
    config: &EnvConfig,
    basis: &BasisConfig,
    iterations: usize,
    population: usize,
    seed: u64,
) -> Result<PolicySearch> {
    let cem = CemConfig {
        iterations,
        population,
        ..CemConfig::default()
    };
    search_policy_with(config, basis, &cem, None, seed)
}

/// Cross-entropy search over forcing-term weights, starting from `init`
/// (zero weights when `None`). The best candidate so far joins every elite
/// set, so the learning curve never decreases.
pub fn search_policy_with(
    config: &EnvConfig,
    basis: &BasisConfig,
    cem: &CemConfig,
    init: Option<&Weights>,
    seed: u64,
) -> Result<PolicySearch> {
    config.validate()?;
    cem.validate()?;
    let grid = PhaseGrid::new(basis, config.steps)?;
    let dim = 3 * basis.count;
    if let Some(w) = init {
        if (0..3).any(|a| w.axis(a).len() != basis.count) || !w.is_finite() {
            return Err(Error::InvalidConfig("initial weights must be finite and match the basis".into()));
        }
    }
    let evaluate = |flat: &[f64]| -> f64 {
        let weights = Weights::from_flat(flat);
        let actions = forcing_actions(&grid, &weights, config).expect("weights sized to basis");
        rank_key(run_actions(&actions, config).total_return)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mean = init.map_or_else(|| vec![0.0; dim], Weights::to_flat);
    let mut sd = vec![cem.initial_sd; dim];
    let mut best = mean.clone();
    let mut best_return = evaluate(&best);
    let elites = cem.elite_count();
    let mut learning_curve = Vec::with_capacity(cem.iterations);

    for _ in 0..cem.iterations {
        let candidates: Vec<Vec<f64>> = (0..cem.population)
            .map(|_| {
                mean.iter()
                    .zip(&sd)
                    .map(|(&m, &s)| {
                        let noise: f64 = rng.sample(StandardNormal);
                        m + s * noise
                    })
                    .collect()
            })
            .collect();
        let returns: Vec<f64> = candidates.par_iter().map(|c| evaluate(c)).collect();

        // Previous best first so it wins ties against new samples.
        let mut pool: Vec<(&[f64], f64)> = vec![(best.as_slice(), best_return)];
        pool.extend(candidates.iter().map(|c| c.as_slice()).zip(returns.iter().copied()));
        pool.sort_by(|a, b| b.1.total_cmp(&a.1));
        let elite = &pool[..elites.min(pool.len())];

        let (new_best, new_return) = (elite[0].0.to_vec(), elite[0].1);
        for d in 0..dim {
            let m = elite.iter().map(|e| e.0[d]).sum::<f64>() / elite.len() as f64;
            let var = elite.iter().map(|e| (e.0[d] - m).powi(2)).sum::<f64>() / elite.len() as f64;
            mean[d] = m;
            sd[d] = var.sqrt().max(cem.sd_floor);
        }
        best = new_best;
        best_return = new_return;
        learning_curve.push(best_return);
    }

    let policy = Policy::Forcing {
        basis: basis.clone(),
        weights: Weights::from_flat(&best),
    };
    let episode = run_actions(&forcing_actions(&grid, &Weights::from_flat(&best), config)?, config);
    Ok(PolicySearch {
        policy,
        episode,
        learning_curve,
    })
}
