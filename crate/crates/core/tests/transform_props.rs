mod common;

use polarcomm::transform::{apply_transform, bit_reversal_perm, BitBlock};
use proptest::prelude::*;

fn block(max_log: u32) -> impl Strategy<Value = Vec<u8>> {
    (1..=max_log).prop_flat_map(|k| prop::collection::vec(0u8..2, 1usize << k))
}

proptest! {
    #[test]
    fn involution(bits in block(10)) {
        let u = BitBlock::new(bits).unwrap();
        prop_assert_eq!(apply_transform(&apply_transform(&u)), u);
    }

    #[test]
    fn linear(pair in (1u32..=10).prop_flat_map(|k| {
        let n = 1usize << k;
        (prop::collection::vec(0u8..2, n), prop::collection::vec(0u8..2, n))
    })) {
        let a = BitBlock::new(pair.0).unwrap();
        let b = BitBlock::new(pair.1).unwrap();
        let lhs = apply_transform(&a.xor(&b).unwrap());
        let rhs = apply_transform(&a).xor(&apply_transform(&b)).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn matches_explicit_matrix(bits in block(6)) {
        let g = common::generator_matrix(bits.len());
        let v = apply_transform(&BitBlock::new(bits.clone()).unwrap());
        prop_assert_eq!(v.bits(), &common::encode(&g, &bits)[..]);
    }
}

#[test]
fn bit_reversal_is_an_involution() {
    for k in 0..12 {
        let p = bit_reversal_perm(k);
        assert!((0..p.len()).all(|i| p[p[i]] == i));
    }
}

#[test]
fn unit_vectors_give_matrix_rows() {
    for n in [2usize, 4, 8, 16] {
        let g = common::generator_matrix(n);
        for (r, row) in g.iter().enumerate() {
            let mut e = vec![0u8; n];
            e[r] = 1;
            assert_eq!(apply_transform(&BitBlock::new(e).unwrap()).bits(), &row[..]);
        }
    }
}
