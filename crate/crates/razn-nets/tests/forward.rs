//! Shape contracts, determinism, gradient flow and storage independence.

use proptest::prelude::*;
use razn_autodiff::{
    softmax_cross_entropy_backward, softmax_cross_entropy_map, tensor_bits_eq, Tensor,
};
use razn_nets::{PolicyNet, PolicyNetConfig, SegNet, SegNetConfig};

fn pseudo_image(n: usize, h: usize, w: usize, seed: u64) -> Tensor<f32> {
    let mut state = seed | 1;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f32 / (1u64 << 53) as f32
    };
    let data = (0..n * 3 * h * w).map(|_| next()).collect();
    Tensor::from_vec(&[n, 3, h, w], data)
}

fn one_hot_labels(n: usize, c: usize, h: usize, w: usize, seed: u64) -> Tensor<f32> {
    let mut state = seed | 1;
    let mut t = Tensor::<f32>::zeros(&[n, c, h, w]);
    let plane = h * w;
    for ni in 0..n {
        for pos in 0..plane {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let class = (state >> 33) as usize % c;
            t.data_mut()[(ni * c + class) * plane + pos] = 1.0;
        }
    }
    t
}

#[test]
fn paper_config_maps_input_to_per_pixel_logits() {
    let cfg = SegNetConfig::paper();
    let net = SegNet::new(cfg);
    let store = net.init_params(3).unwrap();
    let x = pseudo_image(1, 256, 256, 42);
    let logits = net.forward_eval(&store, &x).unwrap();
    assert_eq!(logits.shape(), &[1, 4, 256, 256]);
}

#[test]
fn desk_config_shape_contract() {
    let net = SegNet::new(SegNetConfig::desk());
    let store = net.init_params(3).unwrap();
    let x = pseudo_image(1, 64, 64, 7);
    let logits = net.forward_eval(&store, &x).unwrap();
    assert_eq!(logits.shape(), &[1, 4, 64, 64]);
}

#[test]
fn indivisible_input_is_a_configuration_error() {
    let net = SegNet::new(SegNetConfig::desk());
    let store = net.init_params(3).unwrap();
    let x = pseudo_image(1, 60, 64, 7);
    assert!(net.forward_eval(&store, &x).is_err());
}

#[test]
fn seg_forward_is_deterministic() {
    let net = SegNet::new(SegNetConfig::desk());
    let store = net.init_params(11).unwrap();
    let x = pseudo_image(2, 64, 64, 9);
    let a = net.forward_eval(&store, &x).unwrap();
    let b = net.forward_eval(&store, &x).unwrap();
    assert!(tensor_bits_eq(&a, &b));
}

#[test]
fn policy_score_shapes() {
    let net = PolicyNet::new(PolicyNetConfig::paper());
    let store = net.init_params(5).unwrap();
    let x = pseudo_image(1, 256, 256, 1);
    assert_eq!(net.forward_eval(&store, &x).unwrap().len(), 1);

    let net = PolicyNet::new(PolicyNetConfig::desk());
    let store = net.init_params(5).unwrap();
    let x = pseudo_image(5, 64, 64, 2);
    assert_eq!(net.forward_eval(&store, &x).unwrap().len(), 5);
}

#[test]
fn policy_scores_are_per_image() {
    let net = PolicyNet::new(PolicyNetConfig::desk());
    let store = net.init_params(5).unwrap();
    let a = pseudo_image(1, 64, 64, 100);
    let b = pseudo_image(1, 64, 64, 200);
    let c = pseudo_image(1, 64, 64, 300);
    let batch = Tensor::from_vec(
        &[3, 3, 64, 64],
        [a.data(), b.data(), c.data()].concat(),
    );
    let permuted = Tensor::from_vec(
        &[3, 3, 64, 64],
        [c.data(), a.data(), b.data()].concat(),
    );
    let s1 = net.forward_eval(&store, &batch).unwrap();
    let s2 = net.forward_eval(&store, &permuted).unwrap();
    assert_eq!(s1[0], s2[1]);
    assert_eq!(s1[1], s2[2]);
    assert_eq!(s1[2], s2[0]);
}

#[test]
fn policy_rejects_tiny_inputs() {
    let net = PolicyNet::new(PolicyNetConfig::desk());
    let store = net.init_params(5).unwrap();
    let x = pseudo_image(1, 8, 8, 1);
    assert!(net.forward_eval(&store, &x).is_err());
}

#[test]
fn gradient_reaches_every_seg_parameter() {
    let net = SegNet::new(SegNetConfig::desk());
    let mut store = net.init_params(21).unwrap();
    let x = pseudo_image(2, 64, 64, 33);
    let labels = one_hot_labels(2, 4, 64, 64, 44);

    let (logits, cache) = net.forward_train(&mut store, &x).unwrap();
    let out = softmax_cross_entropy_map(&logits, &labels).unwrap();
    let dlogits = softmax_cross_entropy_backward(1.0, &out, &labels);
    net.backward(&mut store, &cache, &dlogits).unwrap();

    for p in store.params() {
        if !p.trainable {
            continue;
        }
        assert!(
            p.grad.data().iter().any(|&g| g != 0.0),
            "parameter `{}` received no gradient",
            p.name
        );
    }
}

#[test]
fn gradient_reaches_every_policy_parameter() {
    let net = PolicyNet::new(PolicyNetConfig::desk());
    let mut store = net.init_params(23).unwrap();
    let x = pseudo_image(3, 64, 64, 55);
    let (scores, cache) = net.forward_train(&mut store, &x).unwrap();
    assert_eq!(scores.len(), 3);
    net.backward(&mut store, &cache, &[1.0, -0.5, 0.25]).unwrap();
    for p in store.params() {
        if !p.trainable {
            continue;
        }
        assert!(
            p.grad.data().iter().any(|&g| g != 0.0),
            "parameter `{}` received no gradient",
            p.name
        );
    }
}

#[test]
fn coarse_and_fine_nets_never_share_storage() {
    let net = SegNet::new(SegNetConfig::desk());
    let mut a = net.init_params(1).unwrap();
    let b = net.init_params(1).unwrap();
    assert!(a.bitwise_eq(&b));

    let snapshot = b.clone();
    // touch every value in a
    for name in b.params().iter().map(|p| p.name.clone()).collect::<Vec<_>>() {
        for v in a.get_mut(&name).unwrap().value.data_mut() {
            *v += 1.0;
        }
    }
    assert!(b.bitwise_eq(&snapshot));
    assert!(!a.bitwise_eq(&b));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    // output spatial extent equals input extent for any valid size
    #[test]
    fn seg_shape_contract_over_random_sizes(hs in 2usize..=6, ws in 2usize..=6, seed in 0u64..1000) {
        let mut cfg = SegNetConfig::desk();
        cfg.widths = [4, 4, 8, 8];
        let (h, w) = (hs * 8, ws * 8);
        let net = SegNet::new(cfg);
        let store = net.init_params(seed).unwrap();
        let x = pseudo_image(1, h, w, seed + 1);
        let logits = net.forward_eval(&store, &x).unwrap();
        prop_assert_eq!(logits.shape(), &[1, 4, h, w]);
    }
}
