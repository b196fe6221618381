use proptest::prelude::*;
use qrf_core::group::{builtin_group, CosetSpace, GroupJson, BUILTIN_GROUPS};
use qrf_core::FiniteGroup;

fn all_builtin() -> Vec<FiniteGroup> {
    BUILTIN_GROUPS.iter().map(|n| builtin_group(n).unwrap()).collect()
}

#[test]
fn associativity_exhaustive() {
    for g in all_builtin() {
        let n = g.order();
        assert!(n <= 24);
        for a in 0..n {
            for b in 0..n {
                let ab = g.op(a, b);
                for c in 0..n {
                    assert_eq!(g.op(ab, c), g.op(a, g.op(b, c)));
                }
            }
        }
    }
}

#[test]
fn inverse_is_an_involution() {
    for g in all_builtin() {
        for a in 0..g.order() {
            assert_eq!(g.inverse_of(g.inverse_of(a)), a);
            assert_eq!(g.op(a, g.inverse_of(a)), g.e());
        }
    }
}

#[test]
fn coset_actions_are_transitive() {
    for g in all_builtin() {
        for a in 0..g.order() {
            let cs = CosetSpace::new(&g.cyclic_subgroup(a));
            for c in 0..cs.len() {
                for d in 0..cs.len() {
                    assert!((0..g.order()).any(|x| cs.act(x, c) == d));
                }
            }
            // action axiom
            for x in 0..g.order() {
                for y in 0..g.order() {
                    for c in 0..cs.len() {
                        assert_eq!(cs.act(g.op(x, y), c), cs.act(x, cs.act(y, c)));
                    }
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn swapped_row_entries_are_rejected(idx in 0usize..BUILTIN_GROUPS.len(), row in 0usize..24, i in 0usize..24, j in 0usize..24) {
        let g = builtin_group(BUILTIN_GROUPS[idx]).unwrap();
        let n = g.order();
        prop_assume!(n > 1);
        let (row, i, j) = (row % n, i % n, j % n);
        prop_assume!(i != j);
        let mut table = g.cayley_rows();
        table[row].swap(i, j);
        prop_assert!(FiniteGroup::from_cayley_table(table, None).is_err());
    }

    #[test]
    fn json_roundtrip(idx in 0usize..BUILTIN_GROUPS.len()) {
        let g = builtin_group(BUILTIN_GROUPS[idx]).unwrap();
        let text = serde_json::to_string(&GroupJson::from(&g)).unwrap();
        let back: GroupJson = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.into_group().unwrap(), g);
    }
}
