//! Cross-entropy-method trainer and greedy evaluation.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::env::{self, GridDriveConfig, OBS_DIM};
use crate::error::{Error, Result};
use crate::numerics::seeded_rng;
use crate::policy::{act_greedy, BundleMeta, PolicyBundle, PolicyNet};

/// Evaluation track seeds start here; training seeds stay below it.
pub const EVAL_SEED_OFFSET: u64 = 1_000_000;
pub const SIGMA_FLOOR: f64 = 0.02;
/// Episodes used for the return recorded in a freshly trained bundle.
pub const RECORD_EPISODES: usize = 10;

/// Anything that picks an action from a GridDrive observation.
pub trait Actor {
    fn obs_dim(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn act(&self, obs: &[f64]) -> Result<usize>;
}

impl Actor for PolicyNet {
    fn obs_dim(&self) -> usize {
        PolicyNet::obs_dim(self)
    }

    fn n_actions(&self) -> usize {
        PolicyNet::n_actions(self)
    }

    fn act(&self, obs: &[f64]) -> Result<usize> {
        Ok(act_greedy(&self.forward(obs)?))
    }
}

impl Actor for PolicyBundle {
    fn obs_dim(&self) -> usize {
        self.net.obs_dim()
    }

    fn n_actions(&self) -> usize {
        self.net.n_actions()
    }

    fn act(&self, obs: &[f64]) -> Result<usize> {
        self.net.act(obs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub population: usize,
    pub elite_frac: f64,
    pub iterations: usize,
    pub episodes_per_candidate: usize,
    pub init_sigma: f64,
    pub sigma_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            population: 64,
            elite_frac: 0.125,
            iterations: 120,
            episodes_per_candidate: 2,
            init_sigma: 0.5,
            sigma_decay: 0.995,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn elite_count(&self) -> usize {
        (self.population as f64 * self.elite_frac).round().max(1.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.elite_frac > 0.0 && self.elite_frac <= 1.0) {
            return Err(Error::Validation(format!(
                "elite_frac must lie in (0, 1], got {}",
                self.elite_frac
            )));
        }
        if (self.population as f64) * self.elite_frac < 1.0 {
            return Err(Error::Validation(
                "population · elite_frac must be at least 1".into(),
            ));
        }
        if self.episodes_per_candidate == 0 {
            return Err(Error::Validation("episodes_per_candidate must be positive".into()));
        }
        if !(self.init_sigma > 0.0) || !(self.sigma_decay > 0.0) {
            return Err(Error::Validation("init_sigma and sigma_decay must be positive".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One CEM iteration: statistics of the elite returns and the sampling
/// spread used for that iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainLogRow {
    pub iteration: usize,
    pub elite_mean: f64,
    pub elite_std: f64,
    pub sigma: f64,
}

pub fn log_to_csv(rows: &[TrainLogRow]) -> String {
    let mut out = String::from("iteration,elite_mean,elite_std,sigma\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.iteration,
            crate::harness::fmt_sig6(r.elite_mean),
            crate::harness::fmt_sig6(r.elite_std),
            crate::harness::fmt_sig6(r.sigma)
        ));
    }
    out
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub bundle: PolicyBundle,
    pub log: Vec<TrainLogRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalStats {
    pub mean: f64,
    pub std: f64,
    pub returns: Vec<f64>,
}

impl EvalStats {
    pub fn from_returns(returns: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&returns);
        Self { mean, std, returns }
    }
}

/// Population mean and standard deviation; `(0, 0)` for an empty slice.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
}

impl Episode {
    pub fn total(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

pub fn check_compatible<A: Actor + ?Sized>(actor: &A, config: &GridDriveConfig) -> Result<()> {
    if actor.obs_dim() != OBS_DIM {
        return Err(Error::Incompatible(format!(
            "policy expects {}-dimensional observations, GridDrive emits {OBS_DIM}",
            actor.obs_dim()
        )));
    }
    if actor.n_actions() != config.n_actions() {
        return Err(Error::Incompatible(format!(
            "policy emits {} logits but task `{}` has {} actions",
            actor.n_actions(),
            config.task.as_str(),
            config.n_actions()
        )));
    }
    Ok(())
}

/// One greedy episode from reset to the horizon.
pub fn run_episode<A: Actor + ?Sized>(actor: &A, config: &GridDriveConfig) -> Result<Episode> {
    let (mut state, mut obs) = env::reset(config);
    let mut ep = Episode {
        actions: Vec::with_capacity(config.horizon),
        rewards: Vec::with_capacity(config.horizon),
    };
    loop {
        let a = actor.act(&obs)?;
        let out = env::step(&state, a, config)?;
        ep.actions.push(a);
        ep.rewards.push(out.reward);
        state = out.state;
        obs = out.obs;
        if out.done {
            return Ok(ep);
        }
    }
}

/// Greedy episodes on tracks `eval_seed, eval_seed + 1, …`.
pub fn evaluate_actor<A: Actor + ?Sized>(
    actor: &A,
    config: &GridDriveConfig,
    n_episodes: usize,
    eval_seed: u64,
) -> Result<EvalStats> {
    check_compatible(actor, config)?;
    config.validate()?;
    let returns = (0..n_episodes)
        .map(|i| {
            let cfg = config.with_track_seed(eval_seed + i as u64);
            run_episode(actor, &cfg).map(|e| e.total())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalStats::from_returns(returns))
}

pub fn evaluate(
    bundle: &PolicyBundle,
    config: &GridDriveConfig,
    n_episodes: usize,
    eval_seed: u64,
) -> Result<EvalStats> {
    evaluate_actor(bundle, config, n_episodes, eval_seed)
}

/// Pixel value subtracted from every input during search.
const INPUT_CENTRE: f64 = 0.5;

/// Tracks are shared by every candidate of an iteration, so candidates are
/// ranked on the same draws.
fn train_track_seed(base: u64, iteration: usize, episode: usize, cfg: &TrainConfig) -> u64 {
    let k = iteration * cfg.episodes_per_candidate + episode;
    (base + k as u64) % EVAL_SEED_OFFSET
}

/// Maps search coordinates to network parameters. The search sees inputs
/// shifted by [`INPUT_CENTRE`]; folding that shift into the first bias gives
/// a network on raw observations. Zero maps to zero.
fn to_params(template: &PolicyNet, search: &[f64]) -> Vec<f64> {
    let mut p = search.to_vec();
    let first = &template.layers()[0];
    let (rows, cols) = (first.out_dim(), first.in_dim());
    let (w, b) = p.split_at_mut(rows * cols);
    for (i, bias) in b[..rows].iter_mut().enumerate() {
        *bias -= INPUT_CENTRE * w[i * cols..(i + 1) * cols].iter().sum::<f64>();
    }
    p
}

/// Per-parameter spread multiplier: `sqrt(f_out / f_in)` where `f_in` is the
/// fan-in of the parameter's layer and `f_out` that of the output layer.
fn fan_in_scale(template: &PolicyNet) -> Vec<f64> {
    let layers = template.layers();
    let reference = layers[layers.len() - 1].in_dim() as f64;
    layers
        .iter()
        .flat_map(|l| {
            let s = (reference / l.in_dim() as f64).sqrt();
            std::iter::repeat_n(s, l.in_dim() * l.out_dim() + l.out_dim())
        })
        .collect()
}

fn score_candidates(
    template: &PolicyNet,
    candidates: &[Vec<f64>],
    env_config: &GridDriveConfig,
    iteration: usize,
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    let score = |params: &Vec<f64>| -> Result<f64> {
        let mut net = template.clone();
        net.set_params(&to_params(template, params))?;
        let mut total = 0.0;
        for e in 0..cfg.episodes_per_candidate {
            let seed = train_track_seed(env_config.track_seed, iteration, e, cfg);
            total += run_episode(&net, &env_config.with_track_seed(seed))?.total();
        }
        Ok(total / cfg.episodes_per_candidate as f64)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        candidates.par_iter().map(score).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        candidates.iter().map(score).collect()
    }
}

/// Cross-entropy method over the flattened parameters of `template`.
///
/// The search distribution starts at zero mean. Each iteration samples
/// `population` candidates around the mean, scores them by greedy return on
/// the iteration's shared tracks and moves the mean to the elite average.
/// The spread follows the schedule `max(init_sigma * sigma_decay^t,
/// SIGMA_FLOOR)`, scaled per layer by [`fan_in_scale`]; it is not refitted
/// to the elites. Sampling is done by a single generator, so results do not
/// depend on thread count.
pub fn train(
    env_config: &GridDriveConfig,
    template: &PolicyNet,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    env_config.validate()?;
    check_compatible(template, env_config)?;

    let n = template.param_count();
    let scale = fan_in_scale(template);
    let mut mean = vec![0.0; n];
    let mut rng = seeded_rng(cfg.seed);
    let n_elite = cfg.elite_count();
    let mut log = Vec::with_capacity(cfg.iterations);

    for it in 0..cfg.iterations {
        let sigma = (cfg.init_sigma * cfg.sigma_decay.powi(it as i32)).max(SIGMA_FLOOR);
        let candidates: Vec<Vec<f64>> = (0..cfg.population)
            .map(|_| {
                mean.iter()
                    .zip(&scale)
                    .map(|(m, s)| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        m + sigma * s * z
                    })
                    .collect()
            })
            .collect();
        let scores = score_candidates(template, &candidates, env_config, it, cfg)?;
        let mut order: Vec<usize> = (0..cfg.population).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
        let elites = &order[..n_elite];

        let elite_scores: Vec<f64> = elites.iter().map(|&i| scores[i]).collect();
        let (elite_mean, elite_std) = mean_std(&elite_scores);
        log.push(TrainLogRow {
            iteration: it,
            elite_mean,
            elite_std,
            sigma,
        });

        let k = n_elite as f64;
        for (j, m) in mean.iter_mut().enumerate() {
            *m = elites.iter().map(|&i| candidates[i][j]).sum::<f64>() / k;
        }
    }

    let mut net = template.clone();
    net.set_params(&to_params(template, &mean))?;
    let stats = evaluate_actor(&net, env_config, RECORD_EPISODES, EVAL_SEED_OFFSET)?;
    let meta = BundleMeta {
        visual: env_config.visual,
        task: env_config.task,
        seed: cfg.seed,
        mean_return: Some(stats.mean),
        obs_dim: net.obs_dim(),
        n_actions: net.n_actions(),
    };
    Ok(TrainOutcome {
        bundle: PolicyBundle::new(net, meta)?,
        log,
    })
}

/// Mean return of freshly initialised networks: each episode draws new
/// parameters from the trainer's initial distribution `N(0, init_sigma²)`.
pub fn random_policy_baseline(
    template: &PolicyNet,
    env_config: &GridDriveConfig,
    n_episodes: usize,
    init_sigma: f64,
    seed: u64,
) -> Result<EvalStats> {
    check_compatible(template, env_config)?;
    let mut rng = seeded_rng(seed);
    let returns = (0..n_episodes)
        .map(|i| {
            let params: Vec<f64> = (0..template.param_count())
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    init_sigma * z
                })
                .collect();
            let mut net = template.clone();
            net.set_params(&params)?;
            let cfg = env_config.with_track_seed(EVAL_SEED_OFFSET + i as u64);
            run_episode(&net, &cfg).map(|e| e.total())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalStats::from_returns(returns))
}
