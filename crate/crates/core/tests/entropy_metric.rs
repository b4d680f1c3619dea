mod common;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spst::{beta_distance, beta_entropy, canonicalize, BetaParam, SparseContextTree};

const BETAS: [f64; 3] = [0.5, 1.0, 2.0];

fn b(x: f64) -> BetaParam {
    BetaParam::new(x).unwrap()
}

fn triple(seed: u64) -> [SparseContextTree; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = 2 + (seed % 3) as usize;
    [(); 3].map(|_| random_tree(&mut rng, k, 3))
}

#[test]
fn three_block_entropies() {
    let t = three_block();
    let h1 = beta_entropy(&t, BetaParam::SHANNON).unwrap();
    let h2 = beta_entropy(&t, b(2.0)).unwrap();
    assert!((h1 - 1.4056390622295665).abs() < 1e-12);
    assert!((h2 - 1.1875).abs() < 1e-12);
    assert!((h1 - oracle_entropy(&t, 2, 1.0)).abs() < 1e-12);
    assert!((h2 - oracle_entropy(&t, 2, 2.0)).abs() < 1e-12);
}

#[test]
fn reference_distances() {
    let (a, c) = (three_block(), two_block());
    let d1 = beta_distance(&a, &c, BetaParam::SHANNON).unwrap();
    let d05 = beta_distance(&a, &c, b(0.5)).unwrap();
    let d2 = beta_distance(&a, &c, b(2.0)).unwrap();
    assert!((d1 - 2.4056390622295662).abs() < 1e-12);
    assert!((d05 - 3.9709096638381887).abs() < 1e-12);
    assert!((d2 - 1.0).abs() < 1e-12);
}

#[test]
fn root_tree_has_zero_entropy() {
    for k in 2..=5 {
        let root = SparseContextTree::root(alphabet(k));
        for beta in [0.1, 0.5, 1.0, 1.5, 2.0, 7.0] {
            assert_eq!(beta_entropy(&root, b(beta)).unwrap(), 0.0);
        }
    }
}

#[test]
fn incomplete_tree_is_rejected() {
    let t = SparseContextTree::from_texts(alphabet(4), &["a"]).unwrap();
    assert!(beta_entropy(&t, BetaParam::SHANNON).is_err());
}

#[test]
fn bad_beta_is_rejected() {
    for x in [0.0, -1.0, f64::NAN, f64::INFINITY] {
        assert!(BetaParam::new(x).is_err());
    }
}

// Below beta = 1 the entropy is not submodular and the triangle inequality
// breaks already on two symbols: splitting on lag 1 and on lag 2 gives four
// equal blocks, so d(x, z) = 2 sqrt 2 while d(x, root) + d(root, z) = 2.
#[test]
fn triangle_fails_below_one() {
    let a = alphabet(2);
    let x = SparseContextTree::from_texts(a.clone(), &["a", "b"]).unwrap();
    let z = SparseContextTree::from_texts(a.clone(), &["a|ab", "b|ab"]).unwrap();
    let root = SparseContextTree::root(a);
    let half = b(0.5);
    let dxz = beta_distance(&x, &z, half).unwrap();
    let via = beta_distance(&x, &root, half).unwrap() + beta_distance(&root, &z, half).unwrap();
    assert!((dxz - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    assert!((via - 2.0).abs() < 1e-12);
    for beta in [1.0, 2.0].map(b) {
        let dxz = beta_distance(&x, &z, beta).unwrap();
        let via = beta_distance(&x, &root, beta).unwrap() + beta_distance(&root, &z, beta).unwrap();
        assert!(dxz <= via + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn metric_axioms(seed in any::<u64>()) {
        let [x, y, z] = triple(seed);
        for beta in BETAS.map(b) {
            let dxy = beta_distance(&x, &y, beta).unwrap();
            let dyx = beta_distance(&y, &x, beta).unwrap();
            let dxz = beta_distance(&x, &z, beta).unwrap();
            let dyz = beta_distance(&y, &z, beta).unwrap();
            prop_assert!(dxy >= 0.0);
            prop_assert_eq!(dxy.to_bits(), dyx.to_bits());
            prop_assert_eq!(dxy == 0.0, canonicalize(&x) == canonicalize(&y));
            prop_assert_eq!(beta_distance(&x, &x, beta).unwrap(), 0.0);
            if beta.value() >= 1.0 {
                prop_assert!(dxz <= dxy + dyz + 1e-9, "beta {}: {} > {} + {}", beta.value(), dxz, dxy, dyz);
            }
        }
    }

    #[test]
    fn entropy_matches_oracle(seed in any::<u64>()) {
        let [x, _, _] = triple(seed);
        for beta in [0.3, 0.5, 1.0, 2.0, 3.5] {
            let got = beta_entropy(&x, b(beta)).unwrap();
            prop_assert!((got - oracle_entropy(&x, 3, beta)).abs() < 1e-10);
        }
    }

    #[test]
    fn continuity_at_one(seed in any::<u64>()) {
        let [x, y, _] = triple(seed);
        let h = beta_entropy(&x, BetaParam::SHANNON).unwrap();
        let d = beta_distance(&x, &y, BetaParam::SHANNON).unwrap();
        for beta in [1.0 - 1e-6, 1.0 + 1e-6] {
            prop_assert!((beta_entropy(&x, b(beta)).unwrap() - h).abs() < 1e-4);
            prop_assert!((beta_distance(&x, &y, b(beta)).unwrap() - d).abs() < 1e-4);
        }
    }

    #[test]
    fn join_increases_entropy(seed in any::<u64>()) {
        let [x, y, _] = triple(seed);
        let j = x.join(&y).unwrap();
        for beta in BETAS.map(b) {
            let hj = beta_entropy(&j, beta).unwrap();
            prop_assert!(hj >= beta_entropy(&x, beta).unwrap() - 1e-12);
            prop_assert!(hj >= beta_entropy(&y, beta).unwrap() - 1e-12);
        }
    }
}
