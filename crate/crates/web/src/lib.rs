//! Browser bindings for the interactive demo page in `www/`.

use saps::alignment::{cosine_histogram, estimate, AnchorMeta, AnchorPairSet, FitOptions, MapKind};
use saps::env::{self, EnvState, GridDriveConfig, Observation, Task, Visual};
use saps::numerics::{gaussian_matrix, Matrix};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn rotation(angle: f64) -> Matrix {
    let (s, c) = angle.sin_cos();
    Matrix::from_rows(&[[c, s], [-s, c]]).expect("2x2")
}

/// Anisotropic 2-D cloud and its rotated, shifted, noisy copy.
fn rotated_cloud(n: usize, angle_deg: f64, shift: f64, noise: f64, seed: u64) -> Result<(Matrix, Matrix), JsError> {
    let base = gaussian_matrix(n, 2, seed);
    let x_u = Matrix::from_fn(n, 2, |i, j| base[(i, j)] * if j == 0 { 2.0 } else { 0.6 });
    let eps = gaussian_matrix(n, 2, seed.wrapping_add(1)).scale(noise);
    let x_v = x_u
        .matmul(&rotation(angle_deg.to_radians()))
        .and_then(|m| m.add_row_vector(&[shift, -shift / 2.0]))
        .and_then(|m| m.add(&eps))
        .map_err(js_err)?;
    Ok((x_u, x_v))
}

fn points(m: &Matrix) -> Vec<[f64; 2]> {
    m.row_iter().map(|r| [r[0], r[1]]).collect()
}

/// Fits a map between a 2-D point cloud and a rotated copy of it. Returns
/// JSON with the three point sets and fit diagnostics.
#[wasm_bindgen]
pub fn fit_rotated_cloud(
    n: usize,
    angle_deg: f64,
    shift: f64,
    noise: f64,
    kind: &str,
    seed: u64,
) -> Result<String, JsError> {
    let kind: MapKind = kind.parse().map_err(js_err)?;
    let (x_u, x_v) = rotated_cloud(n, angle_deg, shift, noise, seed)?;
    let set = AnchorPairSet::new(x_u.clone(), x_v.clone(), AnchorMeta::default()).map_err(js_err)?;
    let map = estimate(&set, kind, FitOptions::default()).map_err(js_err)?;
    let aligned = map.apply(&x_u).map_err(js_err)?;
    let naive = x_u.sub(&x_v).map_err(js_err)?.frobenius_norm() / ((n * 2) as f64).sqrt();
    let fitted_angle = map.linear()[(0, 1)].atan2(map.linear()[(0, 0)]).to_degrees();
    Ok(json!({
        "source": points(&x_u),
        "target": points(&x_v),
        "aligned": points(&aligned),
        "residual": map.meta.residual,
        "naive_residual": naive,
        "fitted_angle": fitted_angle,
        "offset": map.offset(),
    })
    .to_string())
}

/// Cosine-similarity histograms of aligned and unaligned pairs for the same
/// cloud as [`fit_rotated_cloud`], lifted to `dim` dimensions.
#[wasm_bindgen]
pub fn cosine_histograms(n: usize, dim: usize, noise: f64, bins: usize, seed: u64) -> Result<String, JsError> {
    let x_u = gaussian_matrix(n, dim, seed).add_row_vector(&vec![0.5; dim]).map_err(js_err)?;
    let q = saps::numerics::random_orthogonal(dim, seed.wrapping_add(7));
    let eps = gaussian_matrix(n, dim, seed.wrapping_add(1)).scale(noise);
    let x_v = x_u.matmul(&q).and_then(|m| m.add(&eps)).map_err(js_err)?;
    let set = AnchorPairSet::new(x_u.clone(), x_v.clone(), AnchorMeta::default()).map_err(js_err)?;
    let map = estimate(&set, MapKind::Orthogonal, FitOptions::default()).map_err(js_err)?;
    let aligned = map.apply(&x_u).map_err(js_err)?;
    Ok(json!({
        "aligned": cosine_histogram(&aligned, &x_v, bins).map_err(js_err)?,
        "naive": cosine_histogram(&x_u, &x_v, bins).map_err(js_err)?,
    })
    .to_string())
}

/// A GridDrive episode that can be re-rendered under any visual.
#[wasm_bindgen]
pub struct Drive {
    config: GridDriveConfig,
    state: EnvState,
    prev: EnvState,
    total: f64,
    done: bool,
}

#[wasm_bindgen]
impl Drive {
    #[wasm_bindgen(constructor)]
    pub fn new(track_seed: u64) -> Drive {
        let config = GridDriveConfig::new(track_seed, Visual::Green, Task::Standard);
        let (state, _) = env::reset(&config);
        Drive {
            config,
            prev: state.clone(),
            state,
            total: 0.0,
            done: false,
        }
    }

    /// Canonical actions: 0 left, 1 right, 2 accelerate, 3 brake, 4 idle.
    pub fn step(&mut self, action: usize) -> Result<f64, JsError> {
        if self.done {
            return Ok(0.0);
        }
        let out = env::step(&self.state, action, &self.config).map_err(js_err)?;
        self.prev = std::mem::replace(&mut self.state, out.state);
        self.total += out.reward;
        self.done = out.done;
        Ok(out.reward)
    }

    /// Current observation (`2 × 5 × 5 × 3`, newest frame first).
    pub fn observation(&self, visual: &str) -> Result<Vec<f64>, JsError> {
        let visual: Visual = visual.parse().map_err(js_err)?;
        let obs: Observation = env::render(&self.state, &self.prev, visual);
        Ok(obs.to_vec())
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn done(&self) -> bool {
        self.done
    }

    pub fn speed(&self) -> u8 {
        self.state.speed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotated_cloud_is_recovered() {
        let out: serde_json::Value =
            serde_json::from_str(&fit_rotated_cloud(200, 40.0, 1.0, 0.0, "orthogonal", 3).unwrap()).unwrap();
        assert!(out["residual"].as_f64().unwrap() < 1e-9);
        assert!((out["fitted_angle"].as_f64().unwrap() - 40.0).abs() < 1e-6);
    }

    #[test]
    fn aligned_histogram_sits_at_the_top_bin() {
        let out: serde_json::Value =
            serde_json::from_str(&cosine_histograms(300, 8, 0.0, 10, 1).unwrap()).unwrap();
        assert_eq!(out["aligned"][9], 300);
    }

    #[test]
    fn drive_renders_all_visuals() {
        let mut d = Drive::new(0);
        d.step(2).unwrap();
        assert_eq!(d.speed(), 1);
        let g = d.observation("green").unwrap();
        let r = d.observation("red").unwrap();
        assert_eq!(g.len(), 150);
        assert_eq!(env::pixel_transform(&g, Visual::Green, Visual::Red).unwrap(), r);
    }
}
