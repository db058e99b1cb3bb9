#[path = "support/oracles.rs"]
mod oracles;

use oracles::Rule;
use priorclust::linkage::{
    attainable_ks, cut, permutation_invariance_check, registry, AverageLinkage, CompleteLinkage, Linkage,
    SingleLinkage,
};
use priorclust::metric_space::{linf_distance, verify_ultrametric};
use priorclust::synth::{perturb, random_matrix, random_tied_matrix, random_tree};
use priorclust::{single_linkage, DistanceMatrix};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn continuous(max_n: usize) -> impl Strategy<Value = DistanceMatrix> {
    (1..=max_n, any::<u64>()).prop_map(|(n, s)| random_matrix(n, 0.01, 1.0, &mut rng(s)))
}

fn tied(max_n: usize) -> impl Strategy<Value = DistanceMatrix> {
    (1..=max_n, 1u32..5, any::<u64>()).prop_map(|(n, levels, s)| random_tied_matrix(n, levels, &mut rng(s)))
}

fn ultrametric(max_n: usize) -> impl Strategy<Value = DistanceMatrix> {
    (1..=max_n, any::<u64>()).prop_map(|(n, s)| {
        let t = random_tree(n, &mut rng(s));
        let order: Vec<String> = t.labels().map(String::from).collect();
        t.to_ultrametric(&order).unwrap()
    })
}

fn check_against_oracle(d: &DistanceMatrix, linkage: &dyn Linkage, rule: Rule) -> Result<(), TestCaseError> {
    let got = linkage.cluster(d).unwrap();
    let want = oracles::naive_agglomerate(&oracles::dense(d), rule);
    prop_assert_eq!(got.merges().len(), want.len());
    for (m, &(a, b, h)) in got.merges().iter().zip(&want) {
        prop_assert_eq!((m.left, m.right), (a, b), "{}", linkage.name());
        prop_assert!((m.height - h).abs() <= 1e-12, "{} {} vs {}", linkage.name(), m.height, h);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn matches_naive_recomputation(d in continuous(8)) {
        check_against_oracle(&d, &SingleLinkage, Rule::Min)?;
        check_against_oracle(&d, &CompleteLinkage, Rule::Max)?;
        check_against_oracle(&d, &AverageLinkage, Rule::Mean)?;
    }

    #[test]
    fn matches_naive_recomputation_with_ties(d in tied(8)) {
        check_against_oracle(&d, &SingleLinkage, Rule::Min)?;
        check_against_oracle(&d, &CompleteLinkage, Rule::Max)?;
    }

    #[test]
    fn single_linkage_is_minimax(d in continuous(10)) {
        let coph = oracles::dense(&single_linkage(&d).unwrap().cophenetic());
        let mm = oracles::minimax(&oracles::dense(&d));
        for i in 0..d.n() {
            for j in 0..d.n() {
                prop_assert!((coph[i][j] - mm[i][j]).abs() <= 1e-12);
                prop_assert!(coph[i][j] <= d.get(i, j));
            }
        }
    }

    #[test]
    fn sub_dominant_equals_input_iff_ultrametric(d in tied(9)) {
        let coph = single_linkage(&d).unwrap().cophenetic();
        prop_assert_eq!(coph == d, verify_ultrametric(&d, 0.0).holds);
    }

    #[test]
    fn single_linkage_is_stable(d in continuous(12), eps in prop_oneof![Just(1e-3), Just(1e-1)], s in any::<u64>()) {
        let d2 = perturb(&d, eps, &mut rng(s));
        let gap = linf_distance(&d, &d2).unwrap();
        prop_assert!(gap <= eps + 1e-15);
        let c1 = single_linkage(&d).unwrap().cophenetic();
        let c2 = single_linkage(&d2).unwrap().cophenetic();
        prop_assert!(linf_distance(&c1, &c2).unwrap() <= gap + 1e-12);
    }

    #[test]
    fn heights_monotone_and_cophenetic_ultrametric(d in continuous(16)) {
        for name in registry().names() {
            let den = registry().build(name).unwrap().cluster(&d).unwrap();
            let h: Vec<f64> = den.heights().collect();
            prop_assert!(h.windows(2).all(|w| w[0] <= w[1]), "{}", name);
            let check = verify_ultrametric(&den.cophenetic(), 0.0);
            prop_assert!(check.holds, "{} {:?}", name, check.witness);
        }
    }

    #[test]
    fn cuts_refine_coarser_cuts(d in tied(12)) {
        let den = single_linkage(&d).unwrap();
        let ks = attainable_ks(&den);
        prop_assert_eq!(ks.first().copied(), Some(1));
        prop_assert_eq!(ks.last().copied(), Some(d.n()));
        for (i, &k) in ks.iter().enumerate() {
            let p = cut(&den, k).unwrap();
            prop_assert_eq!(p.k(), k);
            for &coarser in &ks[..i] {
                prop_assert!(p.refines(&cut(&den, coarser).unwrap()));
            }
        }
        for k in 1..=d.n() {
            if !ks.contains(&k) {
                let unattainable = matches!(cut(&den, k), Err(priorclust::Error::UnattainableK { .. }));
                prop_assert!(unattainable);
            }
        }
    }

    #[test]
    fn cut_matches_component_oracle(d in tied(10)) {
        let den = single_linkage(&d).unwrap();
        let dense = oracles::dense(&d);
        for k in 1..=d.n() {
            match (cut(&den, k), oracles::components_cut(&dense, k)) {
                (Ok(p), Some(a)) => prop_assert_eq!(p.assignment(), &a[..]),
                (Err(_), None) => {}
                (got, want) => prop_assert!(false, "k={} got {:?} want {:?}", k, got.map(|p| p.k()), want),
            }
        }
    }

    #[test]
    fn ultrametric_inputs_give_one_dendrogram(u in ultrametric(64), s in any::<u64>()) {
        let reg = registry();
        for name in reg.names() {
            let l = reg.build(name).unwrap();
            prop_assert_eq!(&l.cluster(&u).unwrap().cophenetic(), &u, "{}", name);
            prop_assert!(permutation_invariance_check(&u, l.as_ref(), 4, s).unwrap(), "{}", name);
        }
    }

    #[test]
    fn single_linkage_is_permutation_invariant(d in tied(10), s in any::<u64>()) {
        prop_assert!(permutation_invariance_check(&d, &SingleLinkage, 5, s).unwrap());
    }

    #[test]
    fn complete_linkage_clusters_stay_ultrametric(u in ultrametric(40)) {
        let mut violations = 0usize;
        let mut steps = 0usize;
        let mut observer = |a: &priorclust::linkage::ActiveClusters| {
            steps += 1;
            let m = a.len();
            for x in 0..m {
                for y in 0..m {
                    for z in 0..m {
                        if x != y && y != z && x != z && a.get(z, x) > a.get(x, y).max(a.get(y, z)) {
                            violations += 1;
                        }
                    }
                }
            }
        };
        CompleteLinkage.cluster_traced(&u, Some(&mut observer)).unwrap();
        prop_assert_eq!(steps, u.n().saturating_sub(1));
        prop_assert_eq!(violations, 0);
    }
}

#[test]
fn complete_linkage_depends_on_order_without_ultrametricity() {
    // d(a,b) = d(b,c) = 1 tie; which pair merges first decides whether
    // a and c end up at height 2 or 3.
    let labels: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
    let d = DistanceMatrix::from_condensed(labels, vec![1.0, 2.0, 3.0, 1.0, 2.5, 1.5]).unwrap();
    assert!(!verify_ultrametric(&d, 0.0).holds);
    let mut seen = Vec::new();
    for perm in permutations(4) {
        let c = priorclust::linkage::cophenetic_under_permutation(&d, &CompleteLinkage, &perm).unwrap();
        if !seen.contains(&c.get(0, 2)) {
            seen.push(c.get(0, 2));
        }
    }
    seen.sort_by(f64::total_cmp);
    assert_eq!(seen, [2.0, 3.0]);
    // Single linkage has no such dependence.
    for perm in permutations(4) {
        let c = priorclust::linkage::cophenetic_under_permutation(&d, &SingleLinkage, &perm).unwrap();
        assert_eq!(c, single_linkage(&d).unwrap().cophenetic());
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}
