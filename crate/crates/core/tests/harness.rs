use saps::alignment::{AnchorMeta, LatentMap, MapKind};
use saps::anchors::{anchors_for_pair, collect_state_anchors};
use saps::alignment::CollectionMode;
use saps::env::{render, reset, GridDriveConfig, Task, Visual, OBS_DIM};
use saps::harness::{
    cosine_analysis, fit_pair_map, pca_analysis, run_stitching_table, stitch, BundleLibrary,
    GroupBy, Method, TableConfig,
};
use saps::numerics::{gaussian_matrix, Matrix};
use saps::policy::{act_greedy, default_meta, PolicyBundle, PolicyNet};
use saps::training::Actor;

fn random_bundle(visual: Visual, task: Task, seed: u64) -> PolicyBundle {
    let mut net = PolicyNet::default_architecture(OBS_DIM, task.n_actions());
    let salt = seed * 101 + visual as u64 * 11 + task as u64;
    let p = gaussian_matrix(1, net.param_count(), salt).scale(0.2).into_vec();
    net.set_params(&p).unwrap();
    PolicyBundle::new(net, default_meta(visual, task, seed)).unwrap()
}

/// Observations from random rollouts, shifted into [0, 1].
fn probe_observations(n: usize) -> Matrix {
    let g = gaussian_matrix(n, OBS_DIM, 77);
    Matrix::from_fn(n, OBS_DIM, |i, j| 1.0 / (1.0 + (-g[(i, j)]).exp()))
}

fn fast_config() -> TableConfig {
    TableConfig {
        methods: vec![Method::Naive],
        eval_episodes: 1,
        horizon: 15,
        anchor_count: 64,
        ..TableConfig::default()
    }
}

#[test]
fn self_stitch_with_identity_is_neutral() {
    let b = random_bundle(Visual::Green, Task::Standard, 0);
    let x = probe_observations(1000);
    let d = b.net.latent_dim();
    for map in [None, Some(LatentMap::identity(d))] {
        let s = stitch(&b, &b, map).unwrap();
        let folded = s.to_bundle().unwrap();
        for row in x.row_iter() {
            let want = b.net.forward(row).unwrap();
            assert_eq!(s.logits(row).unwrap(), want);
            assert_eq!(s.act(row).unwrap(), act_greedy(&want));
            assert_eq!(folded.net.forward(row).unwrap(), want);
        }
    }
}

#[test]
fn folded_bundle_matches_stitched_logits() {
    let enc = random_bundle(Visual::Green, Task::Standard, 0);
    let ctrl = random_bundle(Visual::Red, Task::Scrambled, 1);
    let cfg = TableConfig::default();
    let (map, _) = fit_pair_map(&enc, &ctrl, &TableConfig { anchor_count: 128, ..cfg }).unwrap();
    let s = stitch(&enc, &ctrl, Some(map)).unwrap();
    let b = s.to_bundle().unwrap();
    assert_eq!(b.meta.visual, Visual::Green);
    assert_eq!(b.meta.task, Task::Scrambled);
    assert_eq!(b.net.split_index(), enc.net.split_index());
    for row in probe_observations(200).row_iter() {
        let a = s.logits(row).unwrap();
        let c = b.net.forward(row).unwrap();
        for (x, y) in a.iter().zip(&c) {
            assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
        }
    }
}

#[test]
fn stitched_logits_within_residual_propagated_bound() {
    let enc = random_bundle(Visual::Green, Task::Standard, 0);
    let ctrl = random_bundle(Visual::Red, Task::Standard, 1);
    let cfg = TableConfig {
        map_kind: MapKind::Affine,
        ..TableConfig::default()
    };
    let (map, _) = fit_pair_map(&enc, &ctrl, &cfg).unwrap();
    let s = stitch(&enc, &ctrl, Some(map.clone())).unwrap();
    // ReLU and identity activations are 1-Lipschitz, so the controller's
    // Lipschitz constant is at most the product of its Frobenius norms.
    let lip: f64 = ctrl
        .net
        .controller_layers()
        .iter()
        .map(|l| l.weights.frobenius_norm())
        .product();
    let red_cfg = GridDriveConfig::new(3, Visual::Red, Task::Standard);
    let green_cfg = GridDriveConfig::new(3, Visual::Green, Task::Standard);
    let (obs_g, obs_r) = collect_state_anchors(&enc, &green_cfg, &red_cfg, 100, 9).unwrap();
    for (g, r) in obs_g.row_iter().zip(obs_r.row_iter()) {
        let z_mapped = map.apply_vec(&enc.net.encode(g).unwrap()).unwrap();
        let z_own = ctrl.net.encode(r).unwrap();
        let err: f64 = z_mapped
            .iter()
            .zip(&z_own)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let got = s.logits(g).unwrap();
        let want = ctrl.net.forward(r).unwrap();
        let gap: f64 = got.iter().zip(&want).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(gap <= lip * err * (1.0 + 1e-9) + 1e-12, "{gap} > {}", lip * err);
    }
}

#[test]
fn dimension_mismatch_is_rejected() {
    let b = random_bundle(Visual::Green, Task::Standard, 0);
    let map = LatentMap::identity(7);
    assert!(stitch(&b, &b, Some(map)).is_err());
}

#[test]
fn smallest_grid_has_four_cells() {
    let lib = BundleLibrary::from_bundles([
        random_bundle(Visual::Green, Task::Standard, 0),
        random_bundle(Visual::Green, Task::Standard, 1),
    ])
    .unwrap();
    let cfg = TableConfig {
        group_by: GroupBy::Bundle,
        ..fast_config()
    };
    let report = run_stitching_table(&lib, &cfg).unwrap();
    assert_eq!(report.rows.len(), 2);
    assert_eq!(report.cells.len(), 4);
    assert!(report.cells.values().all(|c| c.n_runs == 1));
    let csv = report.to_csv();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("encoder_id,controller_id,method,mean_return,std_return,n_runs\n"));
}

#[test]
fn cell_counts_follow_the_seed_pairing() {
    let mut bundles = Vec::new();
    for v in [Visual::Green, Visual::Red] {
        for t in [Task::Standard, Task::Scrambled] {
            for s in 0..3 {
                bundles.push(random_bundle(v, t, s));
            }
        }
    }
    let lib = BundleLibrary::from_bundles(bundles).unwrap();
    for exclude_self in [false, true] {
        let cfg = TableConfig {
            exclude_self,
            ..fast_config()
        };
        let report = run_stitching_table(&lib, &cfg).unwrap();
        assert_eq!(report.cells.len(), 16);
        for ((row, col, _), cell) in &report.cells {
            let expect = if exclude_self && row == col { 9 - 3 } else { 9 };
            assert_eq!(cell.n_runs, expect, "{row} -> {col}");
        }
    }
}

#[test]
fn missing_bundles_are_named() {
    let lib = BundleLibrary::from_bundles([
        random_bundle(Visual::Green, Task::Standard, 0),
        random_bundle(Visual::Red, Task::Scrambled, 0),
        random_bundle(Visual::Red, Task::Scrambled, 1),
    ])
    .unwrap();
    let err = run_stitching_table(&lib, &fast_config()).unwrap_err();
    let text = err.to_string();
    assert!(text.contains("green-standard-s1"), "{text}");
    let cfg = TableConfig {
        methods: vec![Method::EndToEnd],
        ..fast_config()
    };
    let lib = BundleLibrary::from_bundles([
        random_bundle(Visual::Green, Task::Standard, 0),
        random_bundle(Visual::Red, Task::Scrambled, 0),
    ])
    .unwrap();
    let text = run_stitching_table(&lib, &cfg).unwrap_err().to_string();
    assert!(text.contains("green-scrambled"), "{text}");
}

#[test]
fn report_is_reproducible() {
    let lib = BundleLibrary::from_bundles([
        random_bundle(Visual::Green, Task::Standard, 0),
        random_bundle(Visual::Red, Task::Standard, 0),
    ])
    .unwrap();
    let cfg = TableConfig {
        methods: vec![Method::Naive, Method::Saps, Method::EndToEnd],
        ..fast_config()
    };
    let a = run_stitching_table(&lib, &cfg).unwrap().to_csv();
    let b = run_stitching_table(&lib, &cfg).unwrap().to_csv();
    assert_eq!(a, b);
}

#[test]
fn analysis_degenerate_cases() {
    let x = gaussian_matrix(30, 4, 2).add_row_vector(&[3.0; 4]).unwrap();
    let set = saps::alignment::AnchorPairSet::new(x.clone(), x.clone(), AnchorMeta::default()).unwrap();
    let id = LatentMap::identity(4);
    let cos = cosine_analysis(&set, &id, 10).unwrap();
    assert!((cos.mean_aligned - 1.0).abs() < 1e-12);
    assert!((cos.mean_naive - 1.0).abs() < 1e-12);
    assert_eq!(cos.counts_aligned.iter().sum::<usize>(), 30);
    assert_eq!(cos.counts_naive.iter().sum::<usize>(), 30);
    assert_eq!(cos.to_csv().lines().count(), 11);

    let pca = pca_analysis(&x, &x, &id, 2).unwrap();
    for i in 0..30 {
        assert_eq!(pca.aligned.points.row(i), pca.aligned.points.row(30 + i));
    }
    assert_eq!(pca.aligned.to_csv().lines().count(), 61);
    assert!(pca.aligned.centroid_distance() < 1e-12);
}

#[test]
fn anchors_and_maps_for_task_pairs_share_observations() {
    let enc = random_bundle(Visual::Red, Task::Standard, 0);
    let ctrl = random_bundle(Visual::Red, Task::Scrambled, 2);
    let cfg_u = GridDriveConfig::new(0, Visual::Red, Task::Standard);
    let cfg_v = GridDriveConfig::new(0, Visual::Red, Task::Scrambled);
    let set = anchors_for_pair(&enc, &ctrl, &cfg_u, &cfg_v, 50, CollectionMode::State, 4).unwrap();
    let (obs, _) = collect_state_anchors(&enc, &cfg_u, &cfg_u, 50, 4).unwrap();
    assert_eq!(set.x_v(), &ctrl.net.encode_batch(&obs).unwrap());
    assert_eq!(set.meta.source_id, "red-standard-s0");
    assert_eq!(set.meta.target_id, "red-scrambled-s2");
    // Reset observation is the first anchor.
    let (s, _) = reset(&cfg_u.with_track_seed(4));
    assert_eq!(obs.row(0), render(&s, &s, Visual::Red).as_slice());
}
