use proptest::prelude::*;
use saps::env::{Task, Visual, OBS_DIM};
use saps::numerics::{gaussian_matrix, seeded_rng, Matrix};
use saps::policy::{act_greedy, default_meta, Activation, Layer, LayerSpec, PolicyBundle, PolicyNet};
use saps::Error;

fn random_net(seed: u64, n_actions: usize) -> PolicyNet {
    let mut net = PolicyNet::default_architecture(OBS_DIM, n_actions);
    let p = gaussian_matrix(1, net.param_count(), seed).scale(0.3).into_vec();
    net.set_params(&p).unwrap();
    net
}

fn probes(n: usize, seed: u64) -> Matrix {
    let g = gaussian_matrix(n, OBS_DIM, seed);
    Matrix::from_fn(n, OBS_DIM, |i, j| 1.0 / (1.0 + (-g[(i, j)]).exp()))
}

#[test]
fn zero_and_identity_networks() {
    let zero = PolicyNet::default_architecture(OBS_DIM, 5);
    assert!(zero.forward(&[0.3; OBS_DIM]).unwrap().iter().all(|&v| v == 0.0));

    let id = PolicyNet::new(
        vec![
            Layer { activation: Activation::Linear, weights: Matrix::identity(3), bias: vec![0.0; 3] },
            Layer { activation: Activation::Linear, weights: Matrix::identity(3), bias: vec![0.0; 3] },
        ],
        1,
    )
    .unwrap();
    assert_eq!(id.forward(&[1.5, -2.0, 0.25]).unwrap(), vec![1.5, -2.0, 0.25]);
}

#[test]
fn hand_computed_two_layer_net() {
    // h = relu([[1, -1], [2, 0.5]]·x + [0.5, -1]), y = tanh([[1, 2]]·h + [0.1])
    let net = PolicyNet::new(
        vec![
            Layer {
                activation: Activation::Relu,
                weights: Matrix::from_rows(&[[1.0, -1.0], [2.0, 0.5]]).unwrap(),
                bias: vec![0.5, -1.0],
            },
            Layer {
                activation: Activation::Tanh,
                weights: Matrix::from_rows(&[[1.0, 2.0]]).unwrap(),
                bias: vec![0.1],
            },
        ],
        1,
    )
    .unwrap();
    let x = [0.3, 0.9];
    let h0 = (0.3f64 - 0.9 + 0.5).max(0.0);
    let h1 = (0.6f64 + 0.45 - 1.0).max(0.0);
    let want = (h0 + 2.0 * h1 + 0.1).tanh();
    assert!((net.forward(&x).unwrap()[0] - want).abs() <= 1e-12);
    assert_eq!(net.encode(&x).unwrap(), vec![h0, h1]);
}

#[test]
fn encode_then_control_is_forward_exactly() {
    let net = random_net(1, 5);
    let x = probes(100, 2);
    for row in x.row_iter() {
        let z = net.encode(row).unwrap();
        assert_eq!(z.len(), net.latent_dim());
        assert_eq!(net.control(&z).unwrap(), net.forward(row).unwrap());
    }
}

#[test]
fn greedy_action_cases() {
    assert_eq!(act_greedy(&[0.1, 0.9, 0.3]), 1);
    assert_eq!(act_greedy(&[0.4, 0.4, 0.4]), 0);
    let mut rng = seeded_rng(5);
    for _ in 0..1000 {
        let v: Vec<f64> = (0..5).map(|_| rand::Rng::random_range(&mut rng, -3..4) as f64).collect();
        let mut best = 0;
        for i in 0..v.len() {
            if v[i] > v[best] {
                best = i;
            }
        }
        assert_eq!(act_greedy(&v), best);
    }
}

#[test]
fn bundle_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.json");
    let b = PolicyBundle::new(random_net(3, 4), default_meta(Visual::Red, Task::NoIdle, 3)).unwrap();
    b.save(&path).unwrap();
    let back = PolicyBundle::load(&path).unwrap();
    assert_eq!(back, b);
    let x = probes(50, 4);
    for row in x.row_iter() {
        let (a, c) = (b.net.forward(row).unwrap(), back.net.forward(row).unwrap());
        assert!(a.iter().zip(&c).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}

#[test]
fn malformed_bundles_are_rejected() {
    let b = PolicyBundle::new(random_net(3, 5), default_meta(Visual::Green, Task::Standard, 0)).unwrap();
    let text = b.to_json().unwrap();
    assert!(matches!(PolicyBundle::from_json(&text[..text.len() / 2]), Err(Error::Json(_))));

    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["split_index"] = serde_json::json!(4);
    assert!(PolicyBundle::from_json(&v.to_string()).is_err());
    v["split_index"] = serde_json::json!(0);
    assert!(PolicyBundle::from_json(&v.to_string()).is_err());

    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["meta"]["n_actions"] = serde_json::json!(4);
    assert!(PolicyBundle::from_json(&v.to_string()).is_err());

    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["layers"][1]["in"] = serde_json::json!(63);
    let err = PolicyBundle::from_json(&v.to_string()).unwrap_err();
    assert!(err.to_string().contains("layer"), "{err}");
}

#[test]
fn zero_architecture_shapes() {
    let specs = [
        LayerSpec { in_dim: 6, out_dim: 4, activation: Activation::Relu },
        LayerSpec { in_dim: 4, out_dim: 2, activation: Activation::Linear },
    ];
    let net = PolicyNet::zeros(&specs, 1).unwrap();
    assert_eq!((net.obs_dim(), net.latent_dim(), net.n_actions()), (6, 4, 2));
    assert_eq!(net.param_count(), 6 * 4 + 4 + 4 * 2 + 2);
    assert!(PolicyNet::zeros(&specs, 2).is_err());
    let bad = [specs[0], LayerSpec { in_dim: 5, out_dim: 2, activation: Activation::Linear }];
    assert!(PolicyNet::zeros(&bad, 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn params_round_trip(seed in 0u64..10_000) {
        let net = random_net(seed, 5);
        let mut other = PolicyNet::default_architecture(OBS_DIM, 5);
        other.set_params(&net.params()).unwrap();
        prop_assert_eq!(other, net);
    }
}
