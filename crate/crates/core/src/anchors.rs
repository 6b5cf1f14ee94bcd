//! Anchor collection: paired observations of the same underlying state under
//! two environment variations, and their embeddings.

use rand::seq::index;

use crate::alignment::{AnchorMeta, AnchorPairSet, CollectionMode};
use crate::env::{self, GridDriveConfig, Visual, OBS_DIM};
use crate::error::{Error, Result};
use crate::numerics::{seeded_rng, Matrix};
use crate::policy::{PolicyBundle, PolicyNet};
use crate::training::{check_compatible, Actor};

pub const DEFAULT_ANCHOR_COUNT: usize = 512;

/// Rolls `bundle` out greedily under `config_u`'s dynamics and renders every
/// visited state under both visuals. Episode `k` runs on track
/// `rollout_seed + k`; collection stops after exactly `n` states.
///
/// Visual variations never change dynamics and task variations never change
/// rendering, so a state rendered under `config_v.visual` is exactly what an
/// agent in variation `v` would observe after replaying the same actions.
/// The only requirement is that both configs describe the same tracks.
pub fn collect_state_anchors(
    bundle: &PolicyBundle,
    config_u: &GridDriveConfig,
    config_v: &GridDriveConfig,
    n: usize,
    rollout_seed: u64,
) -> Result<(Matrix, Matrix)> {
    if n < 2 {
        return Err(Error::Precondition(format!("need at least 2 anchors, got {n}")));
    }
    config_u.validate()?;
    config_v.validate()?;
    if config_u.track_length != config_v.track_length {
        return Err(Error::Incompatible(format!(
            "anchor pairing replays the same states in both variations, so track lengths must \
             match (got {} and {})",
            config_u.track_length, config_v.track_length
        )));
    }
    check_compatible(bundle, config_u)?;

    let mut u = Vec::with_capacity(n * OBS_DIM);
    let mut v = Vec::with_capacity(n * OBS_DIM);
    let mut count = 0;
    let mut episode = 0u64;
    while count < n {
        let cfg = config_u.with_track_seed(rollout_seed + episode);
        episode += 1;
        let (mut state, mut obs) = env::reset(&cfg);
        let mut prev = state.clone();
        loop {
            u.extend_from_slice(&obs);
            v.extend(env::render(&state, &prev, config_v.visual));
            count += 1;
            if count == n {
                break;
            }
            let a = bundle.act(&obs)?;
            let out = env::step(&state, a, &cfg)?;
            prev = std::mem::replace(&mut state, out.state);
            obs = out.obs;
            if out.done {
                break;
            }
        }
    }
    Ok((
        Matrix::from_vec(n, OBS_DIM, u)?,
        Matrix::from_vec(n, OBS_DIM, v)?,
    ))
}

/// Pairs each observation with its pixel-space recolouring.
pub fn collect_pixel_anchors(obs_u: &Matrix, from: Visual, to: Visual) -> Result<(Matrix, Matrix)> {
    let mut v = Vec::with_capacity(obs_u.rows() * OBS_DIM);
    for row in obs_u.row_iter() {
        v.extend(env::pixel_transform(row, from, to)?);
    }
    Ok((obs_u.clone(), Matrix::from_vec(obs_u.rows(), OBS_DIM, v)?))
}

/// Embeds row-paired observations with each side's encoder.
pub fn embed_anchors(
    net_u: &PolicyNet,
    net_v: &PolicyNet,
    obs_u: &Matrix,
    obs_v: &Matrix,
    meta: AnchorMeta,
) -> Result<AnchorPairSet> {
    if obs_u.rows() != obs_v.rows() {
        return Err(crate::error::shape_err(
            "embed_anchors",
            format!("{} vs {} observations", obs_u.rows(), obs_v.rows()),
        ));
    }
    AnchorPairSet::new(net_u.encode_batch(obs_u)?, net_v.encode_batch(obs_v)?, meta)
}

/// Seeded sample of `m` pairs without replacement; both sides share indices.
pub fn subsample(set: &AnchorPairSet, m: usize, seed: u64) -> Result<AnchorPairSet> {
    if m > set.len() {
        return Err(Error::Precondition(format!(
            "cannot draw {m} anchors from a set of {}",
            set.len()
        )));
    }
    let mut rng = seeded_rng(seed);
    let idx = index::sample(&mut rng, set.len(), m).into_vec();
    set.select(&idx)
}

/// Convenience: collect, embed and label anchors for an encoder bundle and a
/// target bundle.
pub fn anchors_for_pair(
    source: &PolicyBundle,
    target: &PolicyBundle,
    config_u: &GridDriveConfig,
    config_v: &GridDriveConfig,
    n: usize,
    mode: CollectionMode,
    seed: u64,
) -> Result<AnchorPairSet> {
    let (obs_u, obs_v) = match mode {
        CollectionMode::Pixel => {
            let (obs_u, _) = collect_state_anchors(source, config_u, config_u, n, seed)?;
            collect_pixel_anchors(&obs_u, config_u.visual, config_v.visual)?
        }
        _ => collect_state_anchors(source, config_u, config_v, n, seed)?,
    };
    let meta = AnchorMeta {
        source_id: source.id(),
        target_id: target.id(),
        mode,
        seed,
    };
    embed_anchors(&source.net, &target.net, &obs_u, &obs_v, meta)
}
