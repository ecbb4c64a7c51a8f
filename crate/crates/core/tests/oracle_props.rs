mod common;

use mrp_core::oracle::{assemble, global_loss, local_estimate, solve_exact};
use proptest::prelude::*;

use common::arb_covered_case;

proptest! {
    #[test]
    fn solution_is_stationary(case in arb_covered_case(25)) {
        let sol = solve_exact(&case.graph, &case.params, &case.labels).unwrap();
        let x: Vec<f64> = (0..case.graph.node_count()).map(|i| sol.get(i).unwrap()).collect();
        for i in 0..x.len() {
            if case.labels.contains(i) {
                prop_assert_eq!(x[i], case.labels.get(i).unwrap());
                continue;
            }
            let z = local_estimate(&case.graph, &case.params, &x, i).unwrap();
            prop_assert!((z - x[i]).abs() <= 1e-9 * x[i].abs().max(1.0), "node {}: {} vs {}", i, z, x[i]);
        }
    }

    #[test]
    fn single_coordinate_perturbation_never_lowers_loss(case in arb_covered_case(25)) {
        let sol = solve_exact(&case.graph, &case.params, &case.labels).unwrap();
        let x: Vec<f64> = (0..case.graph.node_count()).map(|i| sol.get(i).unwrap()).collect();
        let base = global_loss(&case.graph, &case.params, &x);
        for i in (0..x.len()).filter(|&i| !case.labels.contains(i)) {
            for delta in [-1e-3, 1e-3] {
                let mut y = x.clone();
                y[i] += delta;
                let moved = global_loss(&case.graph, &case.params, &y);
                prop_assert!(moved >= base - 1e-9 * base.max(1.0), "node {}: {} < {}", i, moved, base);
            }
        }
    }

    #[test]
    fn system_is_symmetric_positive_definite(case in arb_covered_case(25)) {
        let sys = assemble(&case.graph, &case.params, &case.labels).unwrap();
        prop_assert_eq!(&sys.matrix, &sys.matrix.transpose());
        if sys.matrix.nrows() > 0 {
            prop_assert!(sys.matrix.clone().cholesky().is_some());
        }
    }
}
