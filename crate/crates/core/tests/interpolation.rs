use proptest::prelude::*;
use rdeid::interpolation::{confluent_vandermonde, hermite_basis, hermite_matrix, NodeSet};
use rdeid::numkernel::{Matrix, Mp32, Real};

/// Between 1 and 6 nodes in [0, 1], pairwise at least 0.1 apart.
fn separated_nodes() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, 1..=6).prop_filter("gap >= 0.1", |xs| {
        xs.iter()
            .enumerate()
            .all(|(i, a)| xs[i + 1..].iter().all(|b| (a - b).abs() >= 0.1))
    })
}

proptest! {
    #[test]
    fn hermite_interpolation_conditions(xs in separated_nodes()) {
        let nodes = NodeSet::new(xs.clone()).unwrap();
        for n in 0..xs.len() {
            let pair = hermite_basis(&nodes, n).unwrap();
            let dh = pair.h.derivative();
            let dht = pair.h_tilde.derivative();
            prop_assert!(pair.h.coeffs().len() <= 2 * xs.len());
            for (m, x) in xs.iter().enumerate() {
                let delta = if m == n { 1.0 } else { 0.0 };
                let tol = 1e-7;
                prop_assert!((pair.h.eval(x) - delta).abs() <= tol);
                prop_assert!(dh.eval(x).abs() <= tol * 10.0);
                prop_assert!(pair.h_tilde.eval(x).abs() <= tol);
                prop_assert!((dht.eval(x) - delta).abs() <= tol * 10.0);
            }
        }
    }

    #[test]
    fn hermite_partition_of_unity(xs in separated_nodes(), z in -0.5f64..1.5) {
        let nodes = NodeSet::new(xs.clone()).unwrap();
        let mut total = 0.0;
        let mut scale = 0.0f64;
        for n in 0..xs.len() {
            let (h, _) = nodes.hermite_values(n, &z).unwrap();
            total += h;
            scale = scale.max(h.abs());
        }
        prop_assert!((total - 1.0).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn factored_and_expanded_forms_agree(xs in separated_nodes(), z in 0.0f64..1.0) {
        let nodes = NodeSet::new(xs.clone()).unwrap();
        for n in 0..xs.len() {
            let pair = hermite_basis(&nodes, n).unwrap();
            let (h, ht) = nodes.hermite_values(n, &z).unwrap();
            let mag = |p: &rdeid::numkernel::Polynomial<f64>| {
                p.coeffs().iter().enumerate().map(|(j, c)| c.abs() * z.abs().powi(j as i32)).sum::<f64>()
            };
            prop_assert!((pair.h.eval(&z) - h).abs() <= 1e-13 * mag(&pair.h).max(1.0));
            prop_assert!((pair.h_tilde.eval(&z) - ht).abs() <= 1e-13 * mag(&pair.h_tilde).max(1.0));
        }
    }

    #[test]
    fn hermite_matrix_inverts_confluent_vandermonde(xs in separated_nodes()) {
        // The monomial expansion is ill conditioned, so check at 32 digits.
        let mp: Vec<Mp32> = xs.iter().map(|&x| Mp32::from_f64(x)).collect();
        let nodes = NodeSet::new(mp).unwrap();
        let s = xs.len();
        let h = hermite_matrix(&nodes).unwrap();
        let v = confluent_vandermonde(&nodes, 2 * s);
        let prod = h.matmul(&v).unwrap();
        let err = prod.max_abs_diff(&Matrix::identity(2 * s)).unwrap();
        prop_assert!(err <= Mp32::from_f64(1e-20), "error {}", err.to_f64());
    }
}

#[test]
fn duplicate_nodes_rejected() {
    assert!(NodeSet::new(vec![0.5, 0.5]).is_err());
    assert!(NodeSet::<f64>::new(vec![]).is_err());
}

#[test]
fn two_node_basis_matches_closed_form() {
    // Nodes 0 and 1: H_0 = (1 + 2z)(1 - z)^2, H~_0 = z (1 - z)^2.
    let nodes = NodeSet::new(vec![0.0, 1.0]).unwrap();
    let pair = hermite_basis(&nodes, 0).unwrap();
    let want_h = [1.0, 0.0, -3.0, 2.0];
    let want_ht = [0.0, 1.0, -2.0, 1.0];
    for j in 0..4 {
        assert!((pair.h.coeff(j) - want_h[j]).abs() < 1e-15);
        assert!((pair.h_tilde.coeff(j) - want_ht[j]).abs() < 1e-15);
    }
}
