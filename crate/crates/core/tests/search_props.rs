mod common;

use gbtopt::bounding::{partition_bound, refine_partition, BlockSolver, Partition, RefineOptions};
use gbtopt::branching::split_weights;
use gbtopt::subset::SubsetSearch;
use gbtopt::{solve_subset, IndexedEnsemble, Tree, TreeEnsemble};
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

fn nested_windows(rng: &mut ChaCha8Rng, bp: &[Vec<f64>]) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let outer = random_window(rng, bp);
    let inner = outer
        .iter()
        .map(|&(a, b)| {
            let c = rng.random_range(a..b);
            let d = rng.random_range(c + 1..=b);
            (c, d)
        })
        .collect();
    (outer, inner)
}

proptest! {
    #[test]
    fn search_priorities_are_admissible(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ens = small_ensemble(&mut rng, 3, 4, 3);
        let ix = IndexedEnsemble::new(&ens);
        let bp = breakpoints(&ens);
        let window = random_window(&mut rng, &bp);
        let trees: Vec<usize> = (0..ens.len()).collect();
        let mut bad = None;
        SubsetSearch::new(&ix).run(&trees, &domain_of(&window), &mut |e| {
            let rest = &e.order[e.assigned..];
            let best = e.accumulated + subset_min(&ens, rest, &bp, &window_of(e.domain));
            if e.priority > best && bad.is_none() {
                bad = Some((e.priority, best));
            }
        });
        prop_assert!(bad.is_none(), "priority above the best completion: {:?}", bad);
    }

    #[test]
    fn smaller_domains_and_larger_subsets_raise_the_minimum(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ens = small_ensemble(&mut rng, 3, 6, 4);
        let ix = IndexedEnsemble::new(&ens);
        let bp = breakpoints(&ens);
        let (outer, inner) = nested_windows(&mut rng, &bp);
        let all: Vec<usize> = (0..ens.len()).collect();
        let big = solve_subset(&ix, &all, &domain_of(&outer)).value;
        let small = solve_subset(&ix, &all, &domain_of(&inner)).value;
        prop_assert!(small >= big);

        let (a, b): (Vec<usize>, Vec<usize>) = all.iter().partition(|_| rng.random::<bool>());
        if !a.is_empty() && !b.is_empty() {
            let d = domain_of(&outer);
            let sa = solve_subset(&ix, &a, &d).value;
            let sb = solve_subset(&ix, &b, &d).value;
            prop_assert!(big >= sa + sb);
        }
    }

    #[test]
    fn refinement_on_a_child_keeps_the_parent_bound(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ens = small_ensemble(&mut rng, 3, 8, 3);
        let ix = IndexedEnsemble::new(&ens);
        let bp = breakpoints(&ens);
        let (outer, inner) = nested_windows(&mut rng, &bp);
        let singles = (0..ens.len()).map(|t| vec![t]).collect();
        let mut part = Partition::from_blocks(ens.len(), singles).unwrap();
        let parent = partition_bound(&ix, &mut part, &domain_of(&outer), &BlockSolver::default());
        let (_, child) = refine_partition(&ix, &part, &domain_of(&inner), &RefineOptions::default());
        let all: Vec<usize> = (0..ens.len()).collect();
        prop_assert!(child >= parent);
        prop_assert!(child <= subset_min(&ens, &all, &bp, &inner));
    }
}

#[test]
fn sibling_splits_covering_equal_leaf_counts_weigh_the_same() {
    let l = Tree::leaf;
    let tree = Tree::split(2, 5.0, Tree::split(0, 3.0, l(1.0), l(2.0)), Tree::split(1, 4.0, l(3.0), l(4.0)));
    let ens = TreeEnsemble::new(3, vec![0.0; 3], vec![10.0; 3], vec![tree]).unwrap();
    let w = split_weights(&IndexedEnsemble::new(&ens));
    let of = |var: usize| w.iter().find(|c| c.var == var).unwrap().weight;
    assert_eq!(of(0), 0.5);
    assert_eq!(of(1), 0.5);
    assert_eq!(of(2), 1.0);
}
