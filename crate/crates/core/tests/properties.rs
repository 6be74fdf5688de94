//! Randomized invariants of the engine norm and the Tsirelson base.
//!
//! Each property quantifies over small sparse vectors with rational
//! entries and checks an exact inequality or identity on both shipped
//! ledgers, so every counterexample proptest finds is a concrete
//! finite witness.

use std::sync::OnceLock;

use num::Signed;
use proptest::prelude::*;

use mnorm_core::construction::{build_ledger, LedgerOptions, ParameterLedger};
use mnorm_core::exact::rat;
use mnorm_core::norm::{dual_norm_m, norm_m};
use mnorm_core::spaces::{tsirelson, BaseSpace};
use mnorm_core::sparse::SparseVector;

fn ledgers() -> &'static [ParameterLedger] {
    static CELL: OnceLock<Vec<ParameterLedger>> = OnceLock::new();
    CELL.get_or_init(|| {
        let c0 = build_ledger(&BaseSpace::C0, 4, &LedgerOptions::default()).unwrap();
        let l2 = BaseSpace::lp(rat(2, 1)).unwrap();
        let l2 = build_ledger(&l2, 4, &LedgerOptions::default()).unwrap();
        vec![c0, l2]
    })
}

fn vector(max_len: usize) -> impl Strategy<Value = SparseVector> {
    prop::collection::vec((1u64..=90, -8i32..=8, 1u8..=6), 0..=max_len).prop_map(|entries| {
        let mut x = SparseVector::zero();
        for (j, num, den) in entries {
            x.set(j, rat(num as i64, den as i64));
        }
        x
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scaling_is_homogeneous(x in vector(4), num in -6i64..=6, den in 1i64..=4) {
        let c = rat(num, den);
        for ledger in ledgers() {
            let plain = norm_m(&x, &ledger.space, &ledger.blocks).unwrap();
            let scaled = norm_m(&x.scale(&c), &ledger.space, &ledger.blocks).unwrap();
            prop_assert!(plain.exhaustive && scaled.exhaustive);
            prop_assert_eq!(scaled.value, c.abs() * &plain.value);
        }
    }

    #[test]
    fn triangle_inequality_holds(x in vector(4), y in vector(4)) {
        let sum = x.add(&y);
        for ledger in ledgers() {
            let nx = norm_m(&x, &ledger.space, &ledger.blocks).unwrap().value;
            let ny = norm_m(&y, &ledger.space, &ledger.blocks).unwrap().value;
            let ns = norm_m(&sum, &ledger.space, &ledger.blocks).unwrap().value;
            prop_assert!(ns <= nx + ny);
        }
    }

    #[test]
    fn restriction_never_grows(x in vector(5), keep in prop::collection::vec(any::<bool>(), 5)) {
        let subset: std::collections::BTreeSet<u64> = x
            .support()
            .zip(keep.iter().cycle())
            .filter(|(_, k)| **k)
            .map(|(j, _)| j)
            .collect();
        let restricted = x.restrict(&subset);
        for ledger in ledgers() {
            let full = norm_m(&x, &ledger.space, &ledger.blocks).unwrap().value;
            let sub = norm_m(&restricted, &ledger.space, &ledger.blocks).unwrap().value;
            prop_assert!(sub <= full);
        }
    }

    #[test]
    fn norm_sits_between_sup_and_l1(x in vector(5)) {
        for ledger in ledgers() {
            let n = norm_m(&x, &ledger.space, &ledger.blocks).unwrap().value;
            let flipped = norm_m(&x.abs(), &ledger.space, &ledger.blocks).unwrap().value;
            prop_assert!(n >= x.norm_inf());
            prop_assert!(n <= x.norm_l1());
            prop_assert_eq!(flipped, n);
        }
    }

    #[test]
    fn pairing_respects_duality(f in vector(3), x in vector(3)) {
        let precision = rat(1, 1_000_000);
        for ledger in ledgers() {
            let d = dual_norm_m(&f, &ledger.space, &ledger.blocks, &precision).unwrap();
            let n = norm_m(&x, &ledger.space, &ledger.blocks).unwrap();
            prop_assert!(f.dot(&x).abs() <= &d.value.upper * &n.value);
        }
    }

    #[test]
    fn tsirelson_norm_is_a_lattice_norm(x in vector(5), keep in prop::collection::vec(any::<bool>(), 5)) {
        let n = tsirelson::norm(&x);
        prop_assert!(n >= x.norm_inf());
        prop_assert!(n <= x.norm_l1());
        prop_assert_eq!(tsirelson::norm(&x.abs()), n.clone());
        let subset: std::collections::BTreeSet<u64> = x
            .support()
            .zip(keep.iter().cycle())
            .filter(|(_, k)| **k)
            .map(|(j, _)| j)
            .collect();
        prop_assert!(tsirelson::norm(&x.restrict(&subset)) <= n);
        let doubled = tsirelson::norm(&x.scale(&rat(2, 1)));
        prop_assert_eq!(doubled, rat(2, 1) * n);
    }
}
