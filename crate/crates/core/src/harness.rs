//! Stitched policies, the stitching table and latent-space analysis.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::alignment::{
    self, cosine_bin, pairwise_cosines, AnchorPairSet, CollectionMode, FitOptions, LatentMap,
    MapKind,
};
use crate::anchors::{anchors_for_pair, DEFAULT_ANCHOR_COUNT};
use crate::env::{GridDriveConfig, Task, Visual};
use crate::error::{shape_err, Error, Result};
use crate::numerics::{pca_project, Matrix};
use crate::policy::{
    act_greedy, variation_id, Activation, BundleMeta, Layer, PolicyBundle, PolicyNet,
};
use crate::training::{evaluate_actor, mean_std, Actor, EVAL_SEED_OFFSET};

/// Encoder of one bundle feeding the controller of another, optionally
/// through a latent map. Without a map this is naive stitching.
#[derive(Clone, Debug)]
pub struct StitchedPolicy<'a> {
    pub encoder: &'a PolicyBundle,
    pub controller: &'a PolicyBundle,
    pub map: Option<LatentMap>,
}

pub fn stitch<'a>(
    encoder: &'a PolicyBundle,
    controller: &'a PolicyBundle,
    map: Option<LatentMap>,
) -> Result<StitchedPolicy<'a>> {
    let d_enc = encoder.net.latent_dim();
    let d_ctrl = controller.net.latent_dim();
    match &map {
        Some(m) => {
            if m.source_dim() != d_enc || m.target_dim() != d_ctrl {
                return Err(Error::Incompatible(format!(
                    "map goes {} -> {} but encoder latent is {d_enc} and controller input is {d_ctrl}",
                    m.source_dim(),
                    m.target_dim()
                )));
            }
        }
        None => {
            if d_enc != d_ctrl {
                return Err(Error::Incompatible(format!(
                    "encoder latent is {d_enc} but controller input is {d_ctrl}"
                )));
            }
        }
    }
    Ok(StitchedPolicy {
        encoder,
        controller,
        map,
    })
}

impl StitchedPolicy<'_> {
    pub fn logits(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let latent = self.encoder.net.encode(obs)?;
        let latent = match &self.map {
            Some(m) => m.apply_vec(&latent)?,
            None => latent,
        };
        self.controller.net.control(&latent)
    }

    /// A standalone bundle computing the same policy. The map, if any, is
    /// folded into one linear layer placed at the start of the controller,
    /// so its outputs agree with [`StitchedPolicy::logits`] up to rounding.
    pub fn to_bundle(&self) -> Result<PolicyBundle> {
        let mut layers: Vec<Layer> = self.encoder.net.encoder_layers().to_vec();
        let split = layers.len();
        if let Some(m) = &self.map {
            let (w, c) = m.fold();
            layers.push(Layer {
                activation: Activation::Linear,
                weights: w.transpose(),
                bias: c,
            });
        }
        layers.extend_from_slice(self.controller.net.controller_layers());
        let net = PolicyNet::new(layers, split)?;
        let meta = BundleMeta {
            visual: self.encoder.meta.visual,
            task: self.controller.meta.task,
            seed: self.encoder.meta.seed,
            mean_return: None,
            obs_dim: net.obs_dim(),
            n_actions: net.n_actions(),
        };
        PolicyBundle::new(net, meta)
    }
}

impl Actor for StitchedPolicy<'_> {
    fn obs_dim(&self) -> usize {
        self.encoder.net.obs_dim()
    }

    fn n_actions(&self) -> usize {
        self.controller.net.n_actions()
    }

    fn act(&self, obs: &[f64]) -> Result<usize> {
        Ok(act_greedy(&self.logits(obs)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Naive,
    Saps,
    EndToEnd,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::Saps => "saps",
            Method::EndToEnd => "end_to_end",
        }
    }
}

/// Whether table rows/columns are whole variations (runs pooled over seed
/// pairings) or individual bundles (one run per cell).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    Variation,
    Bundle,
}

fn default_methods() -> Vec<Method> {
    vec![Method::Naive, Method::Saps, Method::EndToEnd]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableConfig {
    pub methods: Vec<Method>,
    pub group_by: GroupBy,
    pub map_kind: MapKind,
    pub use_scaling: bool,
    pub anchor_count: usize,
    pub anchor_seed: u64,
    pub anchor_mode: CollectionMode,
    pub eval_episodes: usize,
    pub eval_seed: u64,
    /// Skip runs whose encoder and controller come from the same bundle.
    pub exclude_self: bool,
    pub horizon: usize,
    pub track_length: usize,
}

impl Default for TableConfig {
    fn default() -> Self {
        let env = GridDriveConfig::default();
        Self {
            methods: default_methods(),
            group_by: GroupBy::Variation,
            map_kind: MapKind::Affine,
            use_scaling: false,
            anchor_count: DEFAULT_ANCHOR_COUNT,
            anchor_seed: 0,
            anchor_mode: CollectionMode::State,
            eval_episodes: 10,
            eval_seed: EVAL_SEED_OFFSET,
            exclude_self: false,
            horizon: env.horizon,
            track_length: env.track_length,
        }
    }
}

impl TableConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Validation("table needs at least one method".into()));
        }
        if self.anchor_count < 2 {
            return Err(Error::Validation("anchor_count must be at least 2".into()));
        }
        if self.eval_episodes == 0 {
            return Err(Error::Validation("eval_episodes must be positive".into()));
        }
        if self.anchor_mode == CollectionMode::External {
            return Err(Error::Validation(
                "anchor_mode must be `state` or `pixel` for table runs".into(),
            ));
        }
        self.env(Visual::Green, Task::Standard).validate()
    }

    pub fn env(&self, visual: Visual, task: Task) -> GridDriveConfig {
        GridDriveConfig {
            track_seed: 0,
            visual,
            task,
            horizon: self.horizon,
            track_length: self.track_length,
        }
    }
}

/// Trained bundles indexed by `(visual, task, seed)`.
#[derive(Clone, Debug, Default)]
pub struct BundleLibrary {
    bundles: BTreeMap<(Visual, Task, u64), PolicyBundle>,
}

impl BundleLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, bundle: PolicyBundle) -> Result<()> {
        let key = (bundle.meta.visual, bundle.meta.task, bundle.meta.seed);
        if self.bundles.contains_key(&key) {
            return Err(Error::Validation(format!("duplicate bundle {}", bundle.id())));
        }
        self.bundles.insert(key, bundle);
        Ok(())
    }

    pub fn from_bundles(bundles: impl IntoIterator<Item = PolicyBundle>) -> Result<Self> {
        let mut lib = Self::new();
        for b in bundles {
            lib.insert(b)?;
        }
        Ok(lib)
    }

    /// Loads every `*.json` file in `dir`, in file-name order.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
        paths.sort();
        let mut lib = Self::new();
        for p in paths {
            let b = PolicyBundle::load(&p)
                .map_err(|e| Error::Validation(format!("{}: {e}", p.display())))?;
            lib.insert(b)?;
        }
        Ok(lib)
    }

    pub fn get(&self, visual: Visual, task: Task, seed: u64) -> Option<&PolicyBundle> {
        self.bundles.get(&(visual, task, seed))
    }

    pub fn bundles(&self) -> impl Iterator<Item = &PolicyBundle> {
        self.bundles.values()
    }

    pub fn len(&self) -> usize {
        self.bundles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bundles.is_empty()
    }

    pub fn variations(&self) -> Vec<(Visual, Task)> {
        let set: BTreeSet<_> = self.bundles.keys().map(|&(v, t, _)| (v, t)).collect();
        set.into_iter().collect()
    }

    pub fn seeds(&self) -> Vec<u64> {
        let set: BTreeSet<_> = self.bundles.keys().map(|&(_, _, s)| s).collect();
        set.into_iter().collect()
    }

    pub fn of_variation(&self, visual: Visual, task: Task) -> Vec<&PolicyBundle> {
        self.bundles
            .range((visual, task, 0)..=(visual, task, u64::MAX))
            .map(|(_, b)| b)
            .collect()
    }

    /// Every `(variation, seed)` combination absent from the library.
    fn missing(&self, variations: &[(Visual, Task)], seeds: &[u64]) -> Vec<String> {
        let mut out = Vec::new();
        for &(v, t) in variations {
            for &s in seeds {
                if self.get(v, t, s).is_none() {
                    out.push(format!("{}-s{s}", variation_id(v, t)));
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CellStats {
    pub mean: f64,
    pub std: f64,
    pub n_runs: usize,
}

impl CellStats {
    fn from_runs(runs: &[f64]) -> Self {
        let (mean, std) = mean_std(runs);
        Self {
            mean,
            std,
            n_runs: runs.len(),
        }
    }
}

/// Encoder × controller grid of evaluation returns per method.
#[derive(Clone, Debug, PartialEq)]
pub struct StitchReport {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub cells: BTreeMap<(String, String, Method), CellStats>,
    pub config: TableConfig,
}

impl StitchReport {
    pub fn cell(&self, row: &str, col: &str, method: Method) -> Option<&CellStats> {
        self.cells.get(&(row.to_string(), col.to_string(), method))
    }

    /// Cells whose row and column differ.
    pub fn off_diagonal(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.rows.iter().flat_map(move |r| {
            self.cols
                .iter()
                .filter(move |c| *c != r)
                .map(move |c| (r.as_str(), c.as_str()))
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("encoder_id,controller_id,method,mean_return,std_return,n_runs\n");
        let mut keys: Vec<_> = self.cells.keys().collect();
        keys.sort_by(|a, b| {
            (a.0.as_str(), a.1.as_str(), a.2.as_str()).cmp(&(b.0.as_str(), b.1.as_str(), b.2.as_str()))
        });
        for k in keys {
            let c = &self.cells[k];
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                k.0,
                k.1,
                k.2.as_str(),
                fmt_sig6(c.mean),
                fmt_sig6(c.std),
                c.n_runs
            ));
        }
        out
    }
}

/// Returns of every encoder/controller pairing, one value per run.
type RunList = Vec<(usize, usize)>;

struct Grid<'a> {
    rows: Vec<String>,
    cols: Vec<String>,
    bundles: Vec<&'a PolicyBundle>,
    cells: Vec<(String, String, RunList)>,
}

fn build_grid<'a>(lib: &'a BundleLibrary, cfg: &TableConfig) -> Grid<'a> {
    let bundles: Vec<&PolicyBundle> = lib.bundles().collect();
    let key = |b: &PolicyBundle| match cfg.group_by {
        GroupBy::Variation => b.variation_id(),
        GroupBy::Bundle => b.id(),
    };
    let mut ids: Vec<String> = Vec::new();
    for b in &bundles {
        let k = key(b);
        if !ids.contains(&k) {
            ids.push(k);
        }
    }
    let mut cells = Vec::new();
    for r in &ids {
        for c in &ids {
            let mut runs = Vec::new();
            for (i, e) in bundles.iter().enumerate() {
                if &key(e) != r {
                    continue;
                }
                for (j, k) in bundles.iter().enumerate() {
                    if &key(k) != c || (cfg.exclude_self && i == j) {
                        continue;
                    }
                    runs.push((i, j));
                }
            }
            cells.push((r.clone(), c.clone(), runs));
        }
    }
    Grid {
        rows: ids.clone(),
        cols: ids,
        bundles,
        cells,
    }
}

/// Fits the SAPS map for an encoder/controller pair. Anchors are states
/// visited by the encoder bundle in its own variation, rendered for each side.
pub fn fit_pair_map(
    encoder: &PolicyBundle,
    controller: &PolicyBundle,
    cfg: &TableConfig,
) -> Result<(LatentMap, AnchorPairSet)> {
    let config_u = cfg.env(encoder.meta.visual, encoder.meta.task);
    let config_v = cfg.env(controller.meta.visual, controller.meta.task);
    let anchors = anchors_for_pair(
        encoder,
        controller,
        &config_u,
        &config_v,
        cfg.anchor_count,
        cfg.anchor_mode,
        cfg.anchor_seed,
    )?;
    let map = alignment::estimate(&anchors, cfg.map_kind, FitOptions::scaled(cfg.use_scaling))?;
    Ok((map, anchors))
}

fn run_pair(
    encoder: &PolicyBundle,
    controller: &PolicyBundle,
    method: Method,
    cfg: &TableConfig,
) -> Result<f64> {
    let env = cfg.env(encoder.meta.visual, controller.meta.task);
    let map = match method {
        Method::Naive => None,
        Method::Saps => Some(fit_pair_map(encoder, controller, cfg)?.0),
        Method::EndToEnd => unreachable!("end-to-end runs are not stitched"),
    };
    let policy = stitch(encoder, controller, map)?;
    Ok(evaluate_actor(&policy, &env, cfg.eval_episodes, cfg.eval_seed)?.mean)
}

fn map_runs<T, F>(items: &[T], f: F) -> Result<Vec<f64>>
where
    T: Sync,
    F: Fn(&T) -> Result<f64> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Stitches every encoder with every controller and evaluates each pairing in
/// the environment that combines the encoder's visual with the controller's
/// task. End-to-end cells evaluate the library's own bundles for that
/// combination on the same tracks.
pub fn run_stitching_table(lib: &BundleLibrary, cfg: &TableConfig) -> Result<StitchReport> {
    cfg.validate()?;
    if lib.is_empty() {
        return Err(Error::Validation("bundle library is empty".into()));
    }
    let variations = lib.variations();
    let seeds = lib.seeds();
    let mut missing = lib.missing(&variations, &seeds);
    if cfg.methods.contains(&Method::EndToEnd) {
        let visuals: BTreeSet<Visual> = variations.iter().map(|v| v.0).collect();
        let tasks: BTreeSet<Task> = variations.iter().map(|v| v.1).collect();
        for &v in &visuals {
            for &t in &tasks {
                if !variations.contains(&(v, t)) {
                    missing.push(format!("{} (end-to-end reference)", variation_id(v, t)));
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingBundles(missing));
    }

    let grid = build_grid(lib, cfg);
    let mut cells = BTreeMap::new();
    let mut methods = cfg.methods.clone();
    methods.sort();
    methods.dedup();

    // End-to-end references per evaluation variation, shared across cells.
    let mut e2e_cache: BTreeMap<(Visual, Task), Vec<f64>> = BTreeMap::new();

    for (row, col, runs) in &grid.cells {
        for &method in &methods {
            let returns = match method {
                Method::EndToEnd => {
                    let Some(&(i, j)) = runs.first() else { continue };
                    let key = (grid.bundles[i].meta.visual, grid.bundles[j].meta.task);
                    if !e2e_cache.contains_key(&key) {
                        let env = cfg.env(key.0, key.1);
                        let refs = lib.of_variation(key.0, key.1);
                        let r = map_runs(&refs, |b| {
                            Ok(evaluate_actor(*b, &env, cfg.eval_episodes, cfg.eval_seed)?.mean)
                        })?;
                        e2e_cache.insert(key, r);
                    }
                    e2e_cache[&key].clone()
                }
                _ => map_runs(runs, |&(i, j)| {
                    run_pair(grid.bundles[i], grid.bundles[j], method, cfg)
                })?,
            };
            if returns.is_empty() {
                continue;
            }
            cells.insert(
                (row.clone(), col.clone(), method),
                CellStats::from_runs(&returns),
            );
        }
    }
    Ok(StitchReport {
        rows: grid.rows,
        cols: grid.cols,
        cells,
        config: cfg.clone(),
    })
}

/// One jointly projected view of two latent sets.
#[derive(Clone, Debug)]
pub struct PcaView {
    pub u_label: &'static str,
    /// `2m × k`: first the `u` rows, then the `v` rows.
    pub points: Matrix,
    pub m: usize,
    pub explained: Vec<f64>,
}

impl PcaView {
    fn new(u: &Matrix, v: &Matrix, k: usize, u_label: &'static str) -> Result<Self> {
        let pooled = u.vstack(v)?;
        let p = pca_project(&pooled, k)?;
        Ok(Self {
            u_label,
            points: p.projection,
            m: u.rows(),
            explained: p.explained,
        })
    }

    /// Euclidean distance between the `u` and `v` centroids in PC space.
    pub fn centroid_distance(&self) -> f64 {
        let k = self.points.cols();
        let mut cu = vec![0.0; k];
        let mut cv = vec![0.0; k];
        for (i, row) in self.points.row_iter().enumerate() {
            let target = if i < self.m { &mut cu } else { &mut cv };
            for (t, x) in target.iter_mut().zip(row) {
                *t += x;
            }
        }
        let m = self.m as f64;
        let n = (self.points.rows() - self.m) as f64;
        cu.iter()
            .zip(&cv)
            .map(|(a, b)| (a / m - b / n).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn to_csv(&self) -> String {
        let k = self.points.cols();
        let mut out = String::from("set");
        for c in 1..=k {
            out.push_str(&format!(",pc{c}"));
        }
        out.push('\n');
        for (i, row) in self.points.row_iter().enumerate() {
            out.push_str(if i < self.m { self.u_label } else { "v" });
            for x in row {
                out.push(',');
                out.push_str(&fmt_sig6(*x));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct PcaAnalysis {
    pub aligned: PcaView,
    pub raw: PcaView,
}

/// PCA of `apply_map(X_u) ∪ X_v` (aligned) and `X_u ∪ X_v` (raw).
pub fn pca_analysis(x_u: &Matrix, x_v: &Matrix, map: &LatentMap, k: usize) -> Result<PcaAnalysis> {
    if x_u.rows() != x_v.rows() || x_u.cols() != x_v.cols() {
        return Err(shape_err(
            "analyze_pca",
            format!("{:?} vs {:?}", x_u.shape(), x_v.shape()),
        ));
    }
    let mapped = map.apply(x_u)?;
    Ok(PcaAnalysis {
        aligned: PcaView::new(&mapped, x_v, k, "u_aligned")?,
        raw: PcaView::new(x_u, x_v, k, "u_raw")?,
    })
}

/// Writes `<prefix>_pca_aligned.csv` and `<prefix>_pca_raw.csv`.
pub fn analyze_pca(
    x_u: &Matrix,
    x_v: &Matrix,
    map: &LatentMap,
    k: usize,
    out_prefix: &str,
) -> Result<PcaAnalysis> {
    let a = pca_analysis(x_u, x_v, map, k)?;
    std::fs::write(format!("{out_prefix}_pca_aligned.csv"), a.aligned.to_csv())?;
    std::fs::write(format!("{out_prefix}_pca_raw.csv"), a.raw.to_csv())?;
    Ok(a)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CosineSummary {
    pub mean_aligned: f64,
    pub mean_naive: f64,
    pub bins: usize,
    pub counts_aligned: Vec<usize>,
    pub counts_naive: Vec<usize>,
}

impl CosineSummary {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_low,bin_high,count_aligned,count_naive\n");
        let width = 2.0 / self.bins as f64;
        for b in 0..self.bins {
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt_sig6(-1.0 + b as f64 * width),
                fmt_sig6(-1.0 + (b + 1) as f64 * width),
                self.counts_aligned[b],
                self.counts_naive[b]
            ));
        }
        out
    }
}

/// Per-anchor cosine between the target embedding and either the mapped
/// (aligned) or raw (naive) source embedding.
pub fn cosine_analysis(anchors: &AnchorPairSet, map: &LatentMap, bins: usize) -> Result<CosineSummary> {
    if bins == 0 {
        return Err(Error::Precondition("histogram needs at least one bin".into()));
    }
    let mapped = map.apply(anchors.x_u())?;
    let aligned = pairwise_cosines(&mapped, anchors.x_v())?;
    let naive = pairwise_cosines(anchors.x_u(), anchors.x_v())?;
    let hist = |c: &[f64]| {
        let mut h = vec![0; bins];
        for &x in c {
            h[cosine_bin(x, bins)] += 1;
        }
        h
    };
    let mean = |c: &[f64]| c.iter().sum::<f64>() / c.len() as f64;
    Ok(CosineSummary {
        mean_aligned: mean(&aligned),
        mean_naive: mean(&naive),
        bins,
        counts_aligned: hist(&aligned),
        counts_naive: hist(&naive),
    })
}

/// Writes the histogram CSV to `out` and returns the summary.
pub fn analyze_cosine(
    anchors: &AnchorPairSet,
    map: &LatentMap,
    bins: usize,
    out: impl AsRef<Path>,
) -> Result<CosineSummary> {
    let s = cosine_analysis(anchors, map, bins)?;
    std::fs::write(out, s.to_csv())?;
    Ok(s)
}

/// Formats with six significant digits, `%g` style.
pub fn fmt_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6_formatting() {
        assert_eq!(fmt_sig6(0.0), "0");
        assert_eq!(fmt_sig6(1.0), "1");
        assert_eq!(fmt_sig6(-2.5), "-2.5");
        assert_eq!(fmt_sig6(123.456789), "123.457");
        assert_eq!(fmt_sig6(1234567.0), "1.23457e+06");
        assert_eq!(fmt_sig6(0.000123456789), "0.000123457");
        assert_eq!(fmt_sig6(0.0000123456), "1.23456e-05");
        assert_eq!(fmt_sig6(999999.7), "1e+06");
        assert_eq!(fmt_sig6(1.0 / 3.0), "0.333333");
    }

    #[test]
    fn table_config_rejects_unknown_keys() {
        assert!(TableConfig::from_json(r#"{"map_kind": "orthogonal"}"#).is_ok());
        assert!(TableConfig::from_json(r#"{"refit": true}"#).is_err());
        assert!(TableConfig::from_json(r#"{"anchor_mode": "external"}"#).is_err());
    }
}
