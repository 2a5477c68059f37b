use nalgebra::{Complex, DMatrix, DVector};
use proptest::prelude::*;

use fy_core::blockops::{
    flatten, hausdorff_distance, linear_solve, match_spectra, read_matrix, write_matrix, LinearOperator, Operator,
};
use fy_core::combinatorics::{all_permutations, enumerate_chains, enumerate_pairs, enumerate_two_cluster_partitions};
use fy_core::faddeev::{assemble_faddeev_operator, faddeev_components, FewBodySplit};

fn matrix(d: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0..1.0f64, d * d).prop_map(move |v| DMatrix::from_vec(d, d, v))
}

fn points(max: usize) -> impl Strategy<Value = Vec<Complex<f64>>> {
    prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 1..max)
        .prop_map(|v| v.into_iter().map(|(re, im)| Complex::new(re, im)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flatten_is_linear(n in 2usize..5, d in 1usize..5, s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = assemble_faddeev_operator(&FewBodySplit::random(n, d, false, s1).unwrap()).unwrap();
        let b = assemble_faddeev_operator(&FewBodySplit::random(n, d, false, s2).unwrap()).unwrap();
        let sum = flatten(&a.add(&b).unwrap()).unwrap().to_dense();
        let parts = flatten(&a).unwrap().to_dense() + flatten(&b).unwrap().to_dense();
        prop_assert!((sum - parts).amax() < 1e-14);
    }

    #[test]
    fn flatten_matches_blockwise_apply(n in 2usize..5, d in 1usize..5, seed in any::<u64>(), x in prop::collection::vec(-1.0..1.0f64, 16)) {
        let block = assemble_faddeev_operator(&FewBodySplit::random(n, d, false, seed).unwrap()).unwrap();
        let x = DVector::from_iterator(n * d, x.into_iter().cycle().take(n * d));
        let flat = flatten(&block).unwrap();
        prop_assert!((flat.apply(&x) - block.apply(&x)).amax() < 1e-13);
    }

    #[test]
    fn linear_solve_residual(m in matrix(6), rhs in prop::collection::vec(-1.0..1.0f64, 6), z in -2.0..2.0f64) {
        // Diagonal shift keeps A - z well away from singular.
        let a = m + DMatrix::identity(6, 6) * 10.0;
        let rhs = DVector::from_vec(rhs);
        let op = Operator::dense(a.clone()).unwrap();
        let x = linear_solve(&op, z, &rhs).unwrap();
        let shifted = a - DMatrix::identity(6, 6) * z;
        prop_assert!((shifted * x - &rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
    }

    #[test]
    fn matching_permutation_invariant(a in points(8), rot in 0usize..8) {
        let mut b = a.clone();
        b.rotate_left(rot % a.len());
        prop_assert_eq!(match_spectra(&a, &b).unwrap().max_distance, 0.0);
        prop_assert_eq!(hausdorff_distance(&a, &b), 0.0);
    }

    #[test]
    fn hausdorff_symmetric_and_bounded_by_matching(a in points(6), b in points(6)) {
        let h = hausdorff_distance(&a, &b);
        prop_assert_eq!(h, hausdorff_distance(&b, &a));
        if a.len() == b.len() {
            prop_assert!(h <= match_spectra(&a, &b).unwrap().max_distance + 1e-15);
        }
    }

    #[test]
    fn matrix_text_round_trip(m in matrix(5)) {
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        let back = read_matrix(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn faddeev_components_sum_to_eigenvector(n in 2usize..5, d in 2usize..7, seed in any::<u64>()) {
        let split = FewBodySplit::random(n, d, true, seed).unwrap();
        let h = split.total().unwrap().to_dense();
        let eig = h.symmetric_eigen();
        let k = eig.eigenvalues.imin();
        let psi = eig.eigenvectors.column(k).into_owned();
        let comps = faddeev_components(&split, eig.eigenvalues[k], &psi).unwrap();
        prop_assert!((comps.sum() - &psi).norm() <= 1e-9);
    }
}

#[test]
fn enumeration_counts() {
    for n in 3..=7usize {
        assert_eq!(enumerate_pairs(n).unwrap().len(), n * (n - 1) / 2);
        assert_eq!(enumerate_two_cluster_partitions(n).unwrap().len(), (1 << (n - 1)) - 1);
        let factorial: usize = (1..=n).product();
        assert_eq!(all_permutations(n).len(), factorial);
    }
    // Every chain is a partition with one pair from inside a cluster.
    for n in 3..=4usize {
        let expected: usize = enumerate_two_cluster_partitions(n)
            .unwrap()
            .iter()
            .map(|p| p.internal_pairs().len())
            .sum();
        assert_eq!(enumerate_chains(n).unwrap().len(), expected);
    }
}

#[test]
fn permutation_group_laws() {
    let perms = all_permutations(4);
    for p in &perms {
        assert!(p.compose(&p.inverse()).is_identity());
        for q in &perms {
            let pq = p.compose(q);
            assert!(perms.contains(&pq));
            assert_eq!(pq.inverse(), q.inverse().compose(&p.inverse()));
        }
    }
}
