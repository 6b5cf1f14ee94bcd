use nalgebra::DMatrix;
use proptest::prelude::*;
use saps::alignment::{
    apply_map, cosine_bin, cosine_histogram, estimate, estimate_affine, estimate_linear,
    estimate_orthogonal, fit_residual, mean_pairwise_cosine, AnchorMeta, AnchorPairSet,
    FitOptions, LatentMap, MapKind, StandardScaler,
};
use saps::numerics::{gaussian_matrix, random_orthogonal, Matrix, DEFAULT_CUTOFF};

const FLOOR: f64 = 1e-8;

fn pair(x_u: Matrix, x_v: Matrix) -> AnchorPairSet {
    AnchorPairSet::new(x_u, x_v, AnchorMeta::default()).unwrap()
}

/// `X_v = X_u·Q + 1bᵀ` with 512×32 Gaussian `X_u`.
fn procrustes_fixture(noise: f64) -> (AnchorPairSet, Matrix, Vec<f64>) {
    let x_u = gaussian_matrix(512, 32, 100);
    let q = random_orthogonal(32, 101);
    let b = gaussian_matrix(1, 32, 102).into_vec();
    let mut x_v = x_u.matmul(&q).unwrap().add_row_vector(&b).unwrap();
    if noise > 0.0 {
        x_v = x_v.add(&gaussian_matrix(512, 32, 103).scale(noise)).unwrap();
    }
    (pair(x_u, x_v), q, b)
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn orthogonal_recovers_exact_construction() {
    let (set, q, b) = procrustes_fixture(0.0);
    let map = estimate_orthogonal(&set, false, FLOOR).unwrap();
    assert!(map.linear().max_abs_diff(&q).unwrap() <= 1e-6);
    assert!(max_abs(map.offset(), &b) <= 1e-6);
    assert!(map.meta.residual <= 1e-8);
    assert!(map.linear().orthogonality_error() <= 1e-8);
    let mapped = apply_map(&map, set.x_u()).unwrap();
    assert!(mapped.max_abs_diff(set.x_v()).unwrap() <= 1e-6);
}

#[test]
fn orthogonal_identity_on_identical_sets() {
    let x = gaussian_matrix(64, 6, 1);
    let map = estimate_orthogonal(&pair(x.clone(), x), false, FLOOR).unwrap();
    assert!(map.linear().max_abs_diff(&Matrix::identity(6)).unwrap() <= 1e-8);
    assert!(map.offset().iter().all(|v| v.abs() <= 1e-8));
}

#[test]
fn noise_residual_is_calibrated() {
    let (set, _, _) = procrustes_fixture(0.01);
    let map = estimate_orthogonal(&set, false, FLOOR).unwrap();
    assert!((0.005..=0.015).contains(&map.meta.residual), "{}", map.meta.residual);
    assert!(map.linear().orthogonality_error() <= 1e-8);
}

#[test]
fn orthogonal_beats_random_rotations() {
    let (set, _, _) = procrustes_fixture(0.01);
    let fitted = estimate_orthogonal(&set, false, FLOOR).unwrap();
    for s in 0..100 {
        let r = random_orthogonal(32, 5000 + s);
        let b = fitted.offset().to_vec();
        let other = LatentMap::new(MapKind::Orthogonal, r, b, None, fitted.meta.clone()).unwrap();
        assert!(fit_residual(&other, &set).unwrap() >= fitted.meta.residual);
    }
}

#[test]
fn orthogonal_is_translation_equivariant() {
    let (set, _, _) = procrustes_fixture(0.01);
    let base = estimate_orthogonal(&set, false, FLOOR).unwrap();
    let shift = gaussian_matrix(1, 32, 77).scale(5.0).into_vec();
    let shifted = pair(set.x_u().clone(), set.x_v().add_row_vector(&shift).unwrap());
    let moved = estimate_orthogonal(&shifted, false, FLOOR).unwrap();
    assert!(moved.linear().max_abs_diff(base.linear()).unwrap() < 1e-9);
    let expect: Vec<f64> = base.offset().iter().zip(&shift).map(|(a, b)| a + b).collect();
    assert!(max_abs(moved.offset(), &expect) < 1e-9);
}

#[test]
fn affine_recovers_stretch_and_identity() {
    let x_u = gaussian_matrix(200, 5, 3);
    let b = vec![1.0, -2.0, 0.5, 3.0, 0.0];
    let x_v = x_u.scale(2.0).add_row_vector(&b).unwrap();
    let map = estimate_affine(&pair(x_u.clone(), x_v), false, FLOOR, DEFAULT_CUTOFF).unwrap();
    assert!(map.linear().max_abs_diff(&Matrix::identity(5).scale(2.0)).unwrap() < 1e-10);
    assert!(max_abs(map.offset(), &b) < 1e-10);
    assert!(map.meta.residual <= 1e-8);

    let map = estimate_affine(&pair(x_u.clone(), x_u), false, FLOOR, DEFAULT_CUTOFF).unwrap();
    assert!(map.linear().max_abs_diff(&Matrix::identity(5)).unwrap() < 1e-10);
    assert!(map.offset().iter().all(|v| v.abs() < 1e-10));
}

/// Residual of the centred normal-equations solution, computed with nalgebra.
fn normal_equation_residual(set: &AnchorPairSet) -> f64 {
    let (m, du, dv) = (set.len(), set.source_dim(), set.target_dim());
    let u = DMatrix::from_row_slice(m, du, set.x_u().as_slice());
    let v = DMatrix::from_row_slice(m, dv, set.x_v().as_slice());
    let mut a = DMatrix::from_element(m, du + 1, 1.0);
    a.view_mut((0, 0), (m, du)).copy_from(&u);
    let w = (a.transpose() * &a).cholesky().unwrap().solve(&(a.transpose() * &v));
    let r = a * w - v;
    (r.norm_squared() / (m * dv) as f64).sqrt()
}

#[test]
fn affine_is_least_squares_optimal_on_twenty_fixtures() {
    for s in 0..20u64 {
        let x_u = gaussian_matrix(120, 8, 1000 + s);
        let w = gaussian_matrix(8, 8, 2000 + s);
        let b = gaussian_matrix(1, 8, 3000 + s).into_vec();
        let x_v = x_u
            .matmul(&w)
            .unwrap()
            .add_row_vector(&b)
            .unwrap()
            .add(&gaussian_matrix(120, 8, 4000 + s).scale(0.3))
            .unwrap();
        let set = pair(x_u, x_v);
        let aff = estimate_affine(&set, false, FLOOR, DEFAULT_CUTOFF).unwrap();
        let orth = estimate_orthogonal(&set, false, FLOOR).unwrap();
        assert!(aff.meta.residual <= orth.meta.residual + 1e-9);
        assert!((aff.meta.residual - normal_equation_residual(&set)).abs() <= 1e-8);
        assert!(orth.linear().orthogonality_error() <= 1e-8);
    }
}

#[test]
fn linear_cases() {
    let x_u = gaussian_matrix(50, 4, 6);
    let w0 = gaussian_matrix(4, 3, 7);
    let x_v = x_u.matmul(&w0).unwrap();
    let map = estimate_linear(&pair(x_u, x_v), DEFAULT_CUTOFF).unwrap();
    assert!(map.linear().max_abs_diff(&w0).unwrap() <= 1e-8);
    assert!(map.offset().iter().all(|&v| v == 0.0));

    let x_v = gaussian_matrix(4, 3, 8);
    let map = estimate_linear(&pair(Matrix::identity(4), x_v.clone()), DEFAULT_CUTOFF).unwrap();
    assert!(map.linear().max_abs_diff(&x_v).unwrap() < 1e-12);
}

#[test]
fn linear_loses_to_affine_under_common_offset() {
    let x_u = gaussian_matrix(100, 4, 9).add_row_vector(&[50.0; 4]).unwrap();
    let x_v = gaussian_matrix(100, 4, 10).scale(0.1).add(&x_u).unwrap().add_row_vector(&[-30.0; 4]).unwrap();
    let set = pair(x_u, x_v);
    let lin = estimate_linear(&set, DEFAULT_CUTOFF).unwrap();
    let aff = estimate_affine(&set, false, FLOOR, DEFAULT_CUTOFF).unwrap();
    assert!(lin.meta.residual >= aff.meta.residual);
}

#[test]
fn scaled_map_reports_its_own_residual() {
    let (set, _, _) = procrustes_fixture(0.01);
    for kind in [MapKind::Orthogonal, MapKind::Affine] {
        let map = estimate(&set, kind, FitOptions::scaled(true)).unwrap();
        assert!(map.meta.flags.scaled);
        assert!((fit_residual(&map, &set).unwrap() - map.meta.residual).abs() <= 1e-9);
    }
}

#[test]
fn scaler_statistics_are_standardised() {
    let x = gaussian_matrix(300, 5, 12).scale(4.0).add_row_vector(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
    let x = Matrix::from_fn(300, 6, |i, j| if j < 5 { x[(i, j)] } else { 7.0 });
    let s = StandardScaler::fit(&x, FLOOR).unwrap();
    assert_eq!(s.std[5], FLOOR);
    let z = s.apply(&x).unwrap();
    for j in 0..5 {
        let col = z.column(j);
        let mean = col.iter().sum::<f64>() / 300.0;
        let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 300.0).sqrt();
        assert!(mean.abs() <= 1e-12);
        assert!((std - 1.0).abs() <= 1e-9);
    }
    assert!(s.invert(&z).unwrap().max_abs_diff(&x).unwrap() <= 1e-12);

    let row = Matrix::from_rows(&[[5.0, -3.0]]).unwrap();
    let hand = StandardScaler { mean: vec![1.0, 1.0], std: vec![2.0, 4.0], floor: FLOOR };
    assert_eq!(hand.apply(&row).unwrap().as_slice(), &[2.0, -1.0]);
}

#[test]
fn underdetermined_fit_warns() {
    let set = pair(gaussian_matrix(10, 16, 1), gaussian_matrix(10, 16, 2));
    let map = estimate(&set, MapKind::Affine, FitOptions::default()).unwrap();
    assert!(!map.meta.flags.warnings.is_empty());
}

#[test]
fn map_json_round_trip_is_bit_exact() {
    let (set, _, _) = procrustes_fixture(0.01);
    for opts in [FitOptions::scaled(false), FitOptions::scaled(true)] {
        let map = estimate(&set, MapKind::Affine, opts).unwrap();
        let back = LatentMap::from_json(&map.to_json().unwrap()).unwrap();
        let a = map.apply(set.x_u()).unwrap();
        let b = back.apply(set.x_u()).unwrap();
        assert!(a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_eq!(back, map);
    }
}

#[test]
fn cosine_cases() {
    let a = gaussian_matrix(40, 5, 3);
    assert!((mean_pairwise_cosine(&a, &a).unwrap() - 1.0).abs() <= 1e-12);
    assert!((mean_pairwise_cosine(&a, &a.scale(-1.0)).unwrap() + 1.0).abs() <= 1e-12);
    let h = cosine_histogram(&a, &a, 10).unwrap();
    assert_eq!(h[9], 40);
    let x = Matrix::from_rows(&[[1.0, 0.0], [0.0, 2.0]]).unwrap();
    let y = Matrix::from_rows(&[[0.0, 3.0], [-1.0, 0.0]]).unwrap();
    let h = cosine_histogram(&x, &y, 10).unwrap();
    assert_eq!(h[5], 2);
}

#[test]
fn cosine_histogram_matches_brute_force() {
    let a = gaussian_matrix(500, 4, 30);
    let b = gaussian_matrix(500, 4, 31);
    let bins = 7;
    let mut expect = vec![0usize; bins];
    for i in 0..500 {
        let (ra, rb) = (a.row(i), b.row(i));
        let dot: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
        let na = ra.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = rb.iter().map(|x| x * x).sum::<f64>().sqrt();
        let c = dot / (na * nb);
        let mut k = 0;
        while k + 1 < bins && c >= -1.0 + (k + 1) as f64 * 2.0 / bins as f64 {
            k += 1;
        }
        expect[k] += 1;
    }
    assert_eq!(cosine_histogram(&a, &b, bins).unwrap(), expect);
    assert_eq!(cosine_bin(1.0, bins), bins - 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Fitting on a nested anchor subset can only raise the in-sample fit
    /// quality of the subset, never the full set.
    #[test]
    fn affine_residual_never_beats_least_squares_on_nested_sets(seed in 0u64..5000, m in 12usize..60) {
        let full = pair(gaussian_matrix(60, 3, seed), gaussian_matrix(60, 3, seed + 1));
        let idx: Vec<usize> = (0..m).collect();
        let sub = full.select(&idx).unwrap();
        let on_sub = estimate_affine(&sub, false, FLOOR, DEFAULT_CUTOFF).unwrap();
        let on_full = estimate_affine(&full, false, FLOOR, DEFAULT_CUTOFF).unwrap();
        prop_assert!(fit_residual(&on_sub, &full).unwrap() >= on_full.meta.residual - 1e-12);
    }

    #[test]
    fn estimated_orthogonal_maps_stay_orthogonal(seed in 0u64..5000, d in 1usize..12, scaled in any::<bool>()) {
        let set = pair(gaussian_matrix(40, d, seed), gaussian_matrix(40, d, seed + 7));
        let map = estimate(&set, MapKind::Orthogonal, FitOptions::scaled(scaled)).unwrap();
        prop_assert!(map.linear().orthogonality_error() <= 1e-8);
    }
}
