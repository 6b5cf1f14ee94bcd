//! GridDrive: a deterministic five-lane driving toy.
//!
//! The car sits on a scrolling track whose centre lane wanders by at most one
//! lane per cell. The agent sees a 5×5 RGB window (cells ahead × lanes) for
//! the current and previous step. Visual variations recolour only the
//! off-track background; because track and agent colours are grey, every
//! visual is a global channel permutation of every other.
//!
//! Canonical actions: `0` steer left, `1` steer right, `2` accelerate,
//! `3` brake, `4` idle. The `scrambled` task relabels its five outputs through
//! the fixed permutation [`SCRAMBLE`]; `no_idle` exposes only the first four.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::seeded_rng;

pub const LANES: usize = 5;
/// Cells visible ahead of the car, including its own cell.
pub const WINDOW: usize = 5;
pub const CHANNELS: usize = 3;
pub const FRAME_LEN: usize = WINDOW * LANES * CHANNELS;
pub const OBS_DIM: usize = 2 * FRAME_LEN;
pub const MAX_SPEED: u8 = 3;
/// Scrambled output `i` means canonical action `SCRAMBLE[i]`.
pub const SCRAMBLE: [usize; 5] = [2, 0, 4, 1, 3];
pub const OFF_TRACK_PENALTY: f64 = -2.0;

const TRACK_GREY: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visual {
    Green,
    Red,
    Blue,
}

impl Visual {
    pub const ALL: [Visual; 3] = [Visual::Green, Visual::Red, Visual::Blue];

    pub fn background(self) -> [f64; 3] {
        match self {
            Visual::Green => [0.1, 0.8, 0.1],
            Visual::Red => [0.8, 0.1, 0.1],
            Visual::Blue => [0.1, 0.1, 0.8],
        }
    }

    /// Channel permutation taking a green frame to this visual:
    /// `out[c] = green[perm[c]]`.
    fn from_green(self) -> [usize; 3] {
        match self {
            Visual::Green => [0, 1, 2],
            Visual::Red => [1, 0, 2],
            Visual::Blue => [0, 2, 1],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Visual::Green => "green",
            Visual::Red => "red",
            Visual::Blue => "blue",
        }
    }
}

impl std::str::FromStr for Visual {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Visual::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Validation(format!("unknown visual `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Standard,
    Slow,
    Scrambled,
    NoIdle,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Standard, Task::Slow, Task::Scrambled, Task::NoIdle];

    pub fn n_actions(self) -> usize {
        match self {
            Task::NoIdle => 4,
            _ => 5,
        }
    }

    /// Canonical action behind a task-level action index.
    pub fn canonical(self, action: usize) -> Option<CanonicalAction> {
        if action >= self.n_actions() {
            return None;
        }
        let id = match self {
            Task::Scrambled => SCRAMBLE[action],
            _ => action,
        };
        Some(CanonicalAction::from_index(id))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Standard => "standard",
            Task::Slow => "slow",
            Task::Scrambled => "scrambled",
            Task::NoIdle => "no_idle",
        }
    }

    fn reward(self, on_track: bool, speed: u8) -> f64 {
        if !on_track {
            return OFF_TRACK_PENALTY;
        }
        let s = f64::from(speed);
        match self {
            Task::Slow => s.min(1.0) - (s - 1.0).max(0.0),
            _ => s,
        }
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Validation(format!("unknown task `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CanonicalAction {
    SteerLeft,
    SteerRight,
    Accelerate,
    Brake,
    Idle,
}

impl CanonicalAction {
    fn from_index(i: usize) -> Self {
        match i {
            0 => CanonicalAction::SteerLeft,
            1 => CanonicalAction::SteerRight,
            2 => CanonicalAction::Accelerate,
            3 => CanonicalAction::Brake,
            _ => CanonicalAction::Idle,
        }
    }
}

fn default_horizon() -> usize {
    200
}

fn default_track_length() -> usize {
    400
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDriveConfig {
    pub track_seed: u64,
    pub visual: Visual,
    pub task: Task,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_track_length")]
    pub track_length: usize,
}

impl Default for GridDriveConfig {
    fn default() -> Self {
        Self {
            track_seed: 0,
            visual: Visual::Green,
            task: Task::Standard,
            horizon: default_horizon(),
            track_length: default_track_length(),
        }
    }
}

impl GridDriveConfig {
    pub fn new(track_seed: u64, visual: Visual, task: Task) -> Self {
        Self {
            track_seed,
            visual,
            task,
            ..Self::default()
        }
    }

    pub fn with_track_seed(mut self, seed: u64) -> Self {
        self.track_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::Validation("horizon must be at least 1".into()));
        }
        if self.track_length < WINDOW {
            return Err(Error::Validation(format!(
                "track_length {} is shorter than the {WINDOW}-cell window",
                self.track_length
            )));
        }
        Ok(())
    }

    pub fn n_actions(&self) -> usize {
        self.task.n_actions()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Lane-centre sequence: starts in the middle lane, then a clamped ±1 walk.
pub fn generate_track(seed: u64, length: usize) -> Vec<u8> {
    let mut rng = seeded_rng(seed);
    let mut track = Vec::with_capacity(length);
    let mut c: i32 = 2;
    for i in 0..length {
        if i > 0 {
            let delta = rng.random_range(0..3) - 1;
            c = (c + delta).clamp(0, LANES as i32 - 1);
        }
        track.push(c as u8);
    }
    track
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnvState {
    pub pos: usize,
    pub lane: u8,
    pub speed: u8,
    pub t: usize,
    pub track: Arc<[u8]>,
}

impl EnvState {
    pub fn centre_at(&self, ahead: usize) -> u8 {
        self.track[(self.pos + ahead) % self.track.len()]
    }

    pub fn on_track(&self) -> bool {
        (i16::from(self.lane) - i16::from(self.centre_at(0))).abs() <= 1
    }
}

/// Two stacked frames (current, previous), each laid out as
/// `[ahead][lane][channel]`.
pub type Observation = Vec<f64>;

pub fn frame_index(ahead: usize, lane: usize, channel: usize) -> usize {
    (ahead * LANES + lane) * CHANNELS + channel
}

fn render_frame(state: &EnvState, visual: Visual, out: &mut [f64]) {
    let bg = visual.background();
    for ahead in 0..WINDOW {
        let centre = i16::from(state.centre_at(ahead));
        for lane in 0..LANES {
            let colour = if ahead == 0 && lane == usize::from(state.lane) {
                let v = 0.4 + 0.2 * f64::from(state.speed);
                [v; 3]
            } else if (lane as i16 - centre).abs() <= 1 {
                [TRACK_GREY; 3]
            } else {
                bg
            };
            let base = frame_index(ahead, lane, 0);
            out[base..base + CHANNELS].copy_from_slice(&colour);
        }
    }
}

pub fn render(state: &EnvState, prev: &EnvState, visual: Visual) -> Observation {
    let mut obs = vec![0.0; OBS_DIM];
    let (cur, old) = obs.split_at_mut(FRAME_LEN);
    render_frame(state, visual, cur);
    render_frame(prev, visual, old);
    obs
}

/// Re-colours an observation from one visual to another by permuting the
/// channels of every pixel in both frames.
pub fn pixel_transform(obs: &[f64], from: Visual, to: Visual) -> Result<Observation> {
    if obs.len() != OBS_DIM {
        return Err(crate::error::shape_err(
            "pixel_transform",
            format!("observation of length {}, expected {OBS_DIM}", obs.len()),
        ));
    }
    // to = P_to(green), green = P_from⁻¹(from)
    let p_from = from.from_green();
    let p_to = to.from_green();
    let mut inv_from = [0; 3];
    for (c, &g) in p_from.iter().enumerate() {
        inv_from[g] = c;
    }
    let perm: [usize; 3] = std::array::from_fn(|c| inv_from[p_to[c]]);
    let mut out = vec![0.0; OBS_DIM];
    for (dst, src) in out.chunks_exact_mut(CHANNELS).zip(obs.chunks_exact(CHANNELS)) {
        for c in 0..CHANNELS {
            dst[c] = src[perm[c]];
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub state: EnvState,
    pub obs: Observation,
    pub reward: f64,
    pub done: bool,
}

/// Initial state for a config: start of the track, middle lane, stopped.
pub fn reset(config: &GridDriveConfig) -> (EnvState, Observation) {
    let track: Arc<[u8]> = generate_track(config.track_seed, config.track_length).into();
    let state = EnvState {
        pos: 0,
        lane: 2,
        speed: 0,
        t: 0,
        track,
    };
    let obs = render(&state, &state, config.visual);
    (state, obs)
}

/// Pure transition; does not render.
pub fn transition(state: &EnvState, action: usize, task: Task) -> Result<(EnvState, f64)> {
    let canon = task.canonical(action).ok_or(Error::InvalidAction {
        action,
        n_actions: task.n_actions(),
        index: state.t,
    })?;
    let mut next = state.clone();
    match canon {
        CanonicalAction::SteerLeft => next.lane = next.lane.saturating_sub(1),
        CanonicalAction::SteerRight => next.lane = (next.lane + 1).min(LANES as u8 - 1),
        CanonicalAction::Accelerate => next.speed = (next.speed + 1).min(MAX_SPEED),
        CanonicalAction::Brake => next.speed = next.speed.saturating_sub(1),
        CanonicalAction::Idle => {}
    }
    next.pos = (next.pos + usize::from(next.speed)) % next.track.len();
    next.t += 1;
    let reward = task.reward(next.on_track(), next.speed);
    Ok((next, reward))
}

pub fn step(state: &EnvState, action: usize, config: &GridDriveConfig) -> Result<StepOutcome> {
    let (next, reward) = transition(state, action, config.task)?;
    let obs = render(&next, state, config.visual);
    let done = next.t >= config.horizon;
    Ok(StepOutcome {
        state: next,
        obs,
        reward,
        done,
    })
}

/// Observations after each action, starting from `reset(config)`.
pub fn replay(config: &GridDriveConfig, actions: &[usize]) -> Result<Vec<Observation>> {
    Ok(replay_trace(config, actions)?
        .into_iter()
        .map(|s| s.obs)
        .collect())
}

/// Full step records for a replayed action sequence.
pub fn replay_trace(config: &GridDriveConfig, actions: &[usize]) -> Result<Vec<StepOutcome>> {
    let (mut state, _) = reset(config);
    let mut out = Vec::with_capacity(actions.len());
    for (i, &a) in actions.iter().enumerate() {
        let o = step(&state, a, config).map_err(|e| match e {
            Error::InvalidAction { action, n_actions, .. } => Error::InvalidAction {
                action,
                n_actions,
                index: i,
            },
            other => other,
        })?;
        state = o.state.clone();
        out.push(o);
    }
    Ok(out)
}
