//! Estimation and application of latent maps between two encoders.
//!
//! All datasets are `m × d` with one sample per row, and a map acts on row
//! vectors as `y = x·R + b`. Under this convention the orthogonal estimate
//! `R = V·Uᵀ` from `X̃_vᵀ·X̃_u = U·Σ·Vᵀ` is the exact minimiser of
//! `‖X̃_u·R − X̃_v‖_F` over orthogonal matrices.

use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::numerics::{self, column_mean, column_std, least_squares, Matrix};

/// Default floor substituted for near-zero standard deviations.
pub const DEFAULT_SCALER_FLOOR: f64 = 1e-8;

/// How the anchor observations of an [`AnchorPairSet`] were paired.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollectionMode {
    /// Same underlying states rendered under both variations.
    State,
    /// Source observations transformed in pixel space.
    Pixel,
    /// Built directly from matrices (tests, files).
    External,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnchorMeta {
    pub source_id: String,
    pub target_id: String,
    pub mode: CollectionMode,
    pub seed: u64,
}

impl Default for AnchorMeta {
    fn default() -> Self {
        Self {
            source_id: "u".into(),
            target_id: "v".into(),
            mode: CollectionMode::External,
            seed: 0,
        }
    }
}

/// Row-aligned embeddings of corresponding observations in two latent spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct AnchorPairSet {
    x_u: Matrix,
    x_v: Matrix,
    pub meta: AnchorMeta,
}

impl AnchorPairSet {
    pub fn new(x_u: Matrix, x_v: Matrix, meta: AnchorMeta) -> Result<Self> {
        if x_u.rows() != x_v.rows() {
            return Err(shape_err(
                "AnchorPairSet::new",
                format!("{} source rows vs {} target rows", x_u.rows(), x_v.rows()),
            ));
        }
        if x_u.rows() < 2 {
            return Err(Error::Precondition(format!(
                "an anchor set needs at least 2 pairs, got {}",
                x_u.rows()
            )));
        }
        if !x_u.is_finite() || !x_v.is_finite() {
            return Err(Error::Validation("anchor embeddings contain non-finite values".into()));
        }
        Ok(Self { x_u, x_v, meta })
    }

    pub fn x_u(&self) -> &Matrix {
        &self.x_u
    }

    pub fn x_v(&self) -> &Matrix {
        &self.x_v
    }

    pub fn len(&self) -> usize {
        self.x_u.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn source_dim(&self) -> usize {
        self.x_u.cols()
    }

    pub fn target_dim(&self) -> usize {
        self.x_v.cols()
    }

    /// Same rows of both sides, in the given order.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        Self::new(
            self.x_u.select_rows(idx),
            self.x_v.select_rows(idx),
            self.meta.clone(),
        )
    }
}

/// Per-dimension standardisation fitted on an anchor set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StandardScaler {
    pub mean: Vec<f64>,
    /// Effective standard deviations, already floored.
    pub std: Vec<f64>,
    pub floor: f64,
}

impl StandardScaler {
    pub fn fit(x: &Matrix, floor: f64) -> Result<Self> {
        if x.rows() < 2 {
            return Err(Error::Precondition(format!(
                "scaler needs at least 2 rows, got {}",
                x.rows()
            )));
        }
        if !(floor > 0.0) {
            return Err(Error::Precondition(format!("scaler floor must be positive, got {floor}")));
        }
        let mean = column_mean(x)?;
        let std = column_std(x, &mean)?
            .into_iter()
            .map(|s| if s < floor { floor } else { s })
            .collect();
        Ok(Self { mean, std, floor })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn check(&self, x: &Matrix, op: &'static str) -> Result<()> {
        if x.cols() != self.dim() {
            return Err(shape_err(
                op,
                format!("{} columns for a {}-dimensional scaler", x.cols(), self.dim()),
            ));
        }
        Ok(())
    }

    /// `(x − mean) / std` per entry.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        self.check(x, "apply_scaler")?;
        let mut out = x.clone();
        for i in 0..out.rows() {
            for ((v, m), s) in out.row_mut(i).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }

    /// `x · std + mean` per entry.
    pub fn invert(&self, x: &Matrix) -> Result<Matrix> {
        self.check(x, "invert_scaler")?;
        let mut out = x.clone();
        for i in 0..out.rows() {
            for ((v, m), s) in out.row_mut(i).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = *v * s + m;
            }
        }
        Ok(out)
    }

    fn validate(&self) -> Result<()> {
        if self.std.len() != self.mean.len() {
            return Err(Error::Validation("scaler mean and std lengths differ".into()));
        }
        if !(self.floor > 0.0) || self.std.iter().any(|&s| !(s >= self.floor)) {
            return Err(Error::Validation(
                "scaler std entries must be at least the positive floor".into(),
            ));
        }
        Ok(())
    }
}

pub fn fit_scaler(x: &Matrix, floor: f64) -> Result<StandardScaler> {
    StandardScaler::fit(x, floor)
}

pub fn apply_scaler(s: &StandardScaler, x: &Matrix) -> Result<Matrix> {
    s.apply(x)
}

pub fn invert_scaler(s: &StandardScaler, x: &Matrix) -> Result<Matrix> {
    s.invert(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Orthogonal,
    Affine,
    Linear,
}

impl MapKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MapKind::Orthogonal => "orthogonal",
            MapKind::Affine => "affine",
            MapKind::Linear => "linear",
        }
    }
}

impl std::str::FromStr for MapKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "orthogonal" => Ok(MapKind::Orthogonal),
            "affine" => Ok(MapKind::Affine),
            "linear" => Ok(MapKind::Linear),
            other => Err(Error::Validation(format!("unknown map kind `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapFlags {
    pub scaled: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapMeta {
    pub source_id: String,
    pub target_id: String,
    /// RMSE of the map over the anchors it was fitted on, in target units.
    pub residual: f64,
    pub anchor_count: usize,
    pub flags: MapFlags,
}

/// Source and target scalers; either both are present or neither.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalerPair {
    pub u: StandardScaler,
    pub v: StandardScaler,
}

/// Transform `τ` from a source latent space to a target latent space.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentMap {
    kind: MapKind,
    linear: Matrix,
    offset: Vec<f64>,
    scalers: Option<ScalerPair>,
    pub meta: MapMeta,
}

impl LatentMap {
    /// Builds a map and checks every structural invariant.
    pub fn new(
        kind: MapKind,
        linear: Matrix,
        offset: Vec<f64>,
        scalers: Option<ScalerPair>,
        meta: MapMeta,
    ) -> Result<Self> {
        let map = Self {
            kind,
            linear,
            offset,
            scalers,
            meta,
        };
        map.validate()?;
        Ok(map)
    }

    /// `R = I`, `b = 0`, no scaling.
    pub fn identity(d: usize) -> Self {
        Self {
            kind: MapKind::Orthogonal,
            linear: Matrix::identity(d),
            offset: vec![0.0; d],
            scalers: None,
            meta: MapMeta {
                source_id: "identity".into(),
                target_id: "identity".into(),
                residual: 0.0,
                anchor_count: 0,
                flags: MapFlags::default(),
            },
        }
    }

    fn validate(&self) -> Result<()> {
        let (du, dv) = self.linear.shape();
        if du == 0 || dv == 0 {
            return Err(Error::Validation("latent map with an empty linear part".into()));
        }
        if self.offset.len() != dv {
            return Err(Error::Validation(format!(
                "offset has length {} but the target dimension is {dv}",
                self.offset.len()
            )));
        }
        if !self.linear.is_finite() || self.offset.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("latent map has non-finite entries".into()));
        }
        match self.kind {
            MapKind::Orthogonal => {
                if du != dv {
                    return Err(Error::Validation(format!(
                        "orthogonal map must be square, got {du}x{dv}"
                    )));
                }
                let err = self.linear.orthogonality_error();
                if err > 1e-8 {
                    return Err(Error::Validation(format!(
                        "orthogonal map has ‖RᵀR − I‖_F = {err:e}"
                    )));
                }
            }
            MapKind::Linear => {
                if self.offset.iter().any(|&b| b != 0.0) {
                    return Err(Error::Validation("linear map must have a zero offset".into()));
                }
            }
            MapKind::Affine => {}
        }
        if let Some(sc) = &self.scalers {
            sc.u.validate()?;
            sc.v.validate()?;
            if sc.u.dim() != du || sc.v.dim() != dv {
                return Err(Error::Validation(format!(
                    "scaler dimensions ({}, {}) do not match the map ({du}, {dv})",
                    sc.u.dim(),
                    sc.v.dim()
                )));
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    /// Linear part `R` (`d_u × d_v`, row-vector convention).
    pub fn linear(&self) -> &Matrix {
        &self.linear
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn scalers(&self) -> Option<&ScalerPair> {
        self.scalers.as_ref()
    }

    pub fn source_dim(&self) -> usize {
        self.linear.rows()
    }

    pub fn target_dim(&self) -> usize {
        self.linear.cols()
    }

    /// Maps every row of `x` into the target space.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.source_dim() {
            return Err(shape_err(
                "apply_map",
                format!(
                    "{} columns for a map from dimension {}",
                    x.cols(),
                    self.source_dim()
                ),
            ));
        }
        match &self.scalers {
            Some(sc) => {
                let xs = sc.u.apply(x)?;
                let ys = xs.matmul(&self.linear)?.add_row_vector(&self.offset)?;
                sc.v.invert(&ys)
            }
            None => x.matmul(&self.linear)?.add_row_vector(&self.offset),
        }
    }

    /// Single-vector version of [`LatentMap::apply`].
    pub fn apply_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let m = Matrix::from_vec(1, x.len(), x.to_vec())?;
        Ok(self.apply(&m)?.into_vec())
    }

    /// Collapses scaling, linear part and offset into one `(W, c)` so that
    /// `apply(x) = x·W + c` up to rounding.
    pub fn fold(&self) -> (Matrix, Vec<f64>) {
        match &self.scalers {
            None => (self.linear.clone(), self.offset.clone()),
            Some(sc) => {
                // ((x − μu)/σu)·R + b, then ·σv + μv
                let w = Matrix::from_fn(self.source_dim(), self.target_dim(), |i, j| {
                    self.linear[(i, j)] / sc.u.std[i] * sc.v.std[j]
                });
                let shifted: Vec<f64> = sc.u.mean.iter().zip(&sc.u.std).map(|(m, s)| m / s).collect();
                let shift = self
                    .linear
                    .vec_mul(&shifted)
                    .expect("scaler dimension checked at construction");
                let c = (0..self.target_dim())
                    .map(|j| (self.offset[j] - shift[j]) * sc.v.std[j] + sc.v.mean[j])
                    .collect();
                (w, c)
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&MapFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MapFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk layout of a [`LatentMap`].
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapFile {
    kind: MapKind,
    d_u: usize,
    d_v: usize,
    #[serde(rename = "R")]
    r: Vec<Vec<f64>>,
    b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scalers: Option<ScalerPair>,
    meta: MapMeta,
}

impl From<&LatentMap> for MapFile {
    fn from(m: &LatentMap) -> Self {
        Self {
            kind: m.kind,
            d_u: m.source_dim(),
            d_v: m.target_dim(),
            r: m.linear.to_rows(),
            b: m.offset.clone(),
            scalers: m.scalers.clone(),
            meta: m.meta.clone(),
        }
    }
}

impl TryFrom<MapFile> for LatentMap {
    type Error = Error;

    fn try_from(f: MapFile) -> Result<Self> {
        let linear = Matrix::from_rows(&f.r)
            .map_err(|e| Error::Validation(format!("field `R`: {e}")))?;
        if linear.shape() != (f.d_u, f.d_v) {
            return Err(Error::Validation(format!(
                "field `R` is {}x{} but d_u = {}, d_v = {}",
                linear.rows(),
                linear.cols(),
                f.d_u,
                f.d_v
            )));
        }
        LatentMap::new(f.kind, linear, f.b, f.scalers, f.meta)
    }
}

/// Options shared by the estimators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub use_scaling: bool,
    pub floor: f64,
    pub cutoff: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            use_scaling: false,
            floor: DEFAULT_SCALER_FLOOR,
            cutoff: numerics::DEFAULT_CUTOFF,
        }
    }
}

impl FitOptions {
    pub fn scaled(use_scaling: bool) -> Self {
        Self {
            use_scaling,
            ..Self::default()
        }
    }
}

/// Fits a map of the requested kind.
pub fn estimate(anchors: &AnchorPairSet, kind: MapKind, opts: FitOptions) -> Result<LatentMap> {
    match kind {
        MapKind::Orthogonal => estimate_orthogonal(anchors, opts.use_scaling, opts.floor),
        MapKind::Affine => estimate_affine(anchors, opts.use_scaling, opts.floor, opts.cutoff),
        MapKind::Linear => estimate_linear(anchors, opts.cutoff),
    }
}

struct Prepared {
    x_u: Matrix,
    x_v: Matrix,
    scalers: Option<ScalerPair>,
}

fn prepare(anchors: &AnchorPairSet, use_scaling: bool, floor: f64) -> Result<Prepared> {
    if !use_scaling {
        return Ok(Prepared {
            x_u: anchors.x_u.clone(),
            x_v: anchors.x_v.clone(),
            scalers: None,
        });
    }
    let u = StandardScaler::fit(&anchors.x_u, floor)?;
    let v = StandardScaler::fit(&anchors.x_v, floor)?;
    Ok(Prepared {
        x_u: u.apply(&anchors.x_u)?,
        x_v: v.apply(&anchors.x_v)?,
        scalers: Some(ScalerPair { u, v }),
    })
}

fn finish(
    anchors: &AnchorPairSet,
    kind: MapKind,
    linear: Matrix,
    offset: Vec<f64>,
    scalers: Option<ScalerPair>,
) -> Result<LatentMap> {
    let mut warnings = Vec::new();
    if anchors.len() < anchors.source_dim() {
        warnings.push(format!(
            "only {} anchors for a {}-dimensional source space; the fit is underdetermined",
            anchors.len(),
            anchors.source_dim()
        ));
    }
    let meta = MapMeta {
        source_id: anchors.meta.source_id.clone(),
        target_id: anchors.meta.target_id.clone(),
        residual: 0.0,
        anchor_count: anchors.len(),
        flags: MapFlags {
            scaled: scalers.is_some(),
            warnings,
        },
    };
    let mut map = LatentMap::new(kind, linear, offset, scalers, meta)?;
    map.meta.residual = fit_residual(&map, anchors)?;
    Ok(map)
}

/// Orthogonal Procrustes with a translation: `R = V·Uᵀ` where
/// `X̃_vᵀ·X̃_u = U·Σ·Vᵀ`, and `b = x̄_v − x̄_u·R`. Reflections are kept.
pub fn estimate_orthogonal(
    anchors: &AnchorPairSet,
    use_scaling: bool,
    floor: f64,
) -> Result<LatentMap> {
    if anchors.source_dim() != anchors.target_dim() {
        return Err(shape_err(
            "estimate_orthogonal",
            format!(
                "source dimension {} differs from target dimension {}",
                anchors.source_dim(),
                anchors.target_dim()
            ),
        ));
    }
    let p = prepare(anchors, use_scaling, floor)?;
    let mean_u = column_mean(&p.x_u)?;
    let mean_v = column_mean(&p.x_v)?;
    let cu = p.x_u.sub_row_vector(&mean_u)?;
    let cv = p.x_v.sub_row_vector(&mean_v)?;
    let cross = cv.t_matmul(&cu)?;
    let d = numerics::svd(&cross)?;
    let r = d.v.matmul(&d.u.transpose())?;
    let rotated_mean = r.vec_mul(&mean_u)?;
    let b = mean_v.iter().zip(&rotated_mean).map(|(v, u)| v - u).collect();
    finish(anchors, MapKind::Orthogonal, r, b, p.scalers)
}

/// Unconstrained affine fit by least squares on column-centred data.
pub fn estimate_affine(
    anchors: &AnchorPairSet,
    use_scaling: bool,
    floor: f64,
    cutoff: f64,
) -> Result<LatentMap> {
    let p = prepare(anchors, use_scaling, floor)?;
    let mean_u = column_mean(&p.x_u)?;
    let mean_v = column_mean(&p.x_v)?;
    let cu = p.x_u.sub_row_vector(&mean_u)?;
    let cv = p.x_v.sub_row_vector(&mean_v)?;
    let w = least_squares(&cu, &cv, cutoff)?;
    let projected = w.vec_mul(&mean_u)?;
    let b = mean_v.iter().zip(&projected).map(|(v, u)| v - u).collect();
    finish(anchors, MapKind::Affine, w, b, p.scalers)
}

/// Least-squares linear fit with no centring and no bias.
pub fn estimate_linear(anchors: &AnchorPairSet, cutoff: f64) -> Result<LatentMap> {
    let w = least_squares(&anchors.x_u, &anchors.x_v, cutoff)?;
    let zeros = vec![0.0; anchors.target_dim()];
    finish(anchors, MapKind::Linear, w, zeros, None)
}

pub fn apply_map(map: &LatentMap, x: &Matrix) -> Result<Matrix> {
    map.apply(x)
}

/// RMSE over every entry of `apply_map(map, X_u) − X_v`.
pub fn fit_residual(map: &LatentMap, anchors: &AnchorPairSet) -> Result<f64> {
    if anchors.target_dim() != map.target_dim() {
        return Err(shape_err(
            "fit_residual",
            format!(
                "map targets dimension {} but anchors have {}",
                map.target_dim(),
                anchors.target_dim()
            ),
        ));
    }
    let mapped = map.apply(&anchors.x_u)?;
    let diff = mapped.sub(&anchors.x_v)?;
    let n = (diff.rows() * diff.cols()) as f64;
    Ok((diff.as_slice().iter().map(|v| v * v).sum::<f64>() / n).sqrt())
}

/// Cosine similarity of each row pair `(A_i, B_i)`.
pub fn pairwise_cosines(a: &Matrix, b: &Matrix) -> Result<Vec<f64>> {
    if a.shape() != b.shape() {
        return Err(shape_err(
            "pairwise_cosine",
            format!("{:?} vs {:?}", a.shape(), b.shape()),
        ));
    }
    a.row_iter()
        .zip(b.row_iter())
        .enumerate()
        .map(|(i, (x, y))| {
            let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if nx == 0.0 || ny == 0.0 {
                return Err(Error::ZeroNorm { row: i });
            }
            let dot: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
            Ok((dot / (nx * ny)).clamp(-1.0, 1.0))
        })
        .collect()
}

pub fn mean_pairwise_cosine(a: &Matrix, b: &Matrix) -> Result<f64> {
    let c = pairwise_cosines(a, b)?;
    if c.is_empty() {
        return Err(Error::Precondition("cosine of empty matrices".into()));
    }
    Ok(c.iter().sum::<f64>() / c.len() as f64)
}

/// Bin index of `c` among `bins` equal-width bins over `[-1, 1]`; `1.0` lands
/// in the last bin.
pub fn cosine_bin(c: f64, bins: usize) -> usize {
    let pos = ((c + 1.0) / 2.0 * bins as f64).floor();
    (pos.max(0.0) as usize).min(bins - 1)
}

pub fn cosine_histogram(a: &Matrix, b: &Matrix, bins: usize) -> Result<Vec<usize>> {
    if bins == 0 {
        return Err(Error::Precondition("histogram needs at least one bin".into()));
    }
    let mut counts = vec![0; bins];
    for c in pairwise_cosines(a, b)? {
        counts[cosine_bin(c, bins)] += 1;
    }
    Ok(counts)
}
