use proptest::prelude::*;
use rdeid::numkernel::{
    condition_number_one, dilog, eig_small, least_squares, solve_linear, svd, Matrix, Mp32, Real,
};

fn matrix(rows: usize, cols: usize, entries: &[f64]) -> Matrix<f64> {
    Matrix::from_fn(rows, cols, |i, j| entries[i * cols + j])
}

fn square_system() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>)> {
    (1usize..=8).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec(-1.0f64..1.0, n * n),
            prop::collection::vec(-1.0f64..1.0, n),
        )
    })
}

fn tall_matrix() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (1usize..=6)
        .prop_flat_map(|n| (Just(n), n..=n + 4))
        .prop_flat_map(|(n, m)| (Just(m), Just(n), prop::collection::vec(-1.0f64..1.0, m * n)))
}

proptest! {
    #[test]
    fn solve_reproduces_rhs((n, mut entries, b) in square_system()) {
        // Diagonal shift keeps the draw well conditioned.
        for i in 0..n {
            entries[i * n + i] += 2.0 * n as f64;
        }
        let a = matrix(n, n, &entries);
        let x = solve_linear(&a, &b).unwrap();
        let ax = a.matvec(&x).unwrap();
        let cond = condition_number_one(&a).unwrap();
        let bnorm = b.iter().fold(0f64, |m, v| m.max(v.abs()));
        for (l, r) in ax.iter().zip(&b) {
            prop_assert!((l - r).abs() <= 10.0 * cond * f64::EPSILON * bnorm.max(1e-300));
        }
    }

    #[test]
    fn svd_is_orthogonal_and_reconstructs((m, n, entries) in tall_matrix()) {
        let a = matrix(m, n, &entries);
        let d = svd(&a).unwrap();
        let u_roundoff = f64::EPSILON / 2.0;
        let tol = 10.0 * n as f64 * u_roundoff;
        let utu = d.u.transpose().matmul(&d.u).unwrap();
        prop_assert!(utu.max_abs_diff(&Matrix::identity(n)).unwrap() <= tol);
        let vtv = d.v.transpose().matmul(&d.v).unwrap();
        prop_assert!(vtv.max_abs_diff(&Matrix::identity(n)).unwrap() <= tol);
        for k in 1..n {
            prop_assert!(d.s[k - 1] >= d.s[k]);
        }
        let us = Matrix::from_fn(m, n, |i, j| d.u[(i, j)] * d.s[j]);
        let rebuilt = us.matmul(&d.v.transpose()).unwrap();
        prop_assert!(rebuilt.max_abs_diff(&a).unwrap() <= tol * a.norm_inf().max(1e-300));
    }

    #[test]
    fn least_squares_normal_equations((m, n, entries) in tall_matrix(), seed in 0u64..1000) {
        let mut entries = entries;
        for i in 0..n {
            entries[i * n + i] += 3.0;
        }
        let a = matrix(m, n, &entries);
        let b: Vec<f64> = (0..m).map(|i| ((seed + i as u64) as f64 * 0.37).sin()).collect();
        let x = least_squares(&a, &b).unwrap();
        let r: Vec<f64> = a.matvec(&x).unwrap().iter().zip(&b).map(|(l, r)| l - r).collect();
        let g = a.transpose().matvec(&r).unwrap();
        let xnorm = x.iter().fold(0f64, |s, v| s.max(v.abs()));
        let scale = a.norm_inf() * (a.norm_inf() * xnorm + 1.0);
        for gi in g {
            prop_assert!(gi.abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn companion_eigenvalues_are_roots(coeffs in prop::collection::vec(-2.0f64..2.0, 1..=8)) {
        // Monic p(z) = z^d + c_{d-1} z^{d-1} + ... + c_0.
        let d = coeffs.len();
        let comp = Matrix::from_fn(d, d, |i, j| {
            if i == 0 {
                -coeffs[d - 1 - j]
            } else if i == j + 1 {
                1.0
            } else {
                0.0
            }
        });
        let eig = eig_small(&comp).unwrap();
        prop_assert_eq!(eig.len(), d);
        for z in eig {
            // Horner in complex arithmetic, with the matching magnitude sum.
            let (mut re, mut im) = (1.0f64, 0.0f64);
            let r = z.modulus();
            let mut scale = 1.0f64;
            for c in coeffs.iter().rev() {
                let nre = re * z.re - im * z.im + c;
                im = re * z.im + im * z.re;
                re = nre;
                scale = scale * r + c.abs();
            }
            prop_assert!(re.hypot(im) <= 1e-8 * scale.max(1.0), "|p(z)| = {}", re.hypot(im));
        }
    }

    #[test]
    fn dilog_reflection(x in 0.01f64..0.99) {
        let pi2_6 = std::f64::consts::PI.powi(2) / 6.0;
        let lhs = dilog(&x).unwrap() + dilog(&(1.0 - x)).unwrap();
        let rhs = pi2_6 - x.ln() * (1.0 - x).ln();
        prop_assert!((lhs - rhs).abs() <= 1e-13);
    }
}

#[test]
fn svd_orthogonality_at_32_digits() {
    let a = Matrix::<Mp32>::from_fn(6, 4, |i, j| Mp32::one() / Mp32::from_usize(i + j + 1));
    let d = svd(&a).unwrap();
    let tol = Mp32::from_i64(40) * Mp32::unit_roundoff();
    let utu = d.u.transpose().matmul(&d.u).unwrap();
    assert!(utu.max_abs_diff(&Matrix::identity(4)).unwrap() <= tol);
    let us = Matrix::from_fn(6, 4, |i, j| d.u[(i, j)].clone() * &d.s[j]);
    let rebuilt = us.matmul(&d.v.transpose()).unwrap();
    assert!(rebuilt.max_abs_diff(&a).unwrap() <= tol * a.norm_inf());
}

#[test]
fn solve_examples() {
    let id = Matrix::<f64>::identity(2);
    assert_eq!(solve_linear(&id, &[3.0, 5.0]).unwrap(), vec![3.0, 5.0]);
    let diag = Matrix::<f64>::from_f64_rows(&[&[2.0, 0.0], &[0.0, 4.0]]).unwrap();
    assert_eq!(solve_linear(&diag, &[2.0, 8.0]).unwrap(), vec![1.0, 2.0]);
    let a = Matrix::<f64>::from_f64_rows(&[&[1.0, 1.0], &[1.0, -1.0]]).unwrap();
    let x = solve_linear(&a, &[2.0, 0.0]).unwrap();
    assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
}

#[test]
fn least_squares_examples() {
    let col = Matrix::<f64>::from_f64_rows(&[&[1.0], &[1.0], &[1.0]]).unwrap();
    assert!((least_squares(&col, &[1.0, 2.0, 3.0]).unwrap()[0] - 2.0).abs() < 1e-15);
    let a = Matrix::<f64>::from_f64_rows(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]]).unwrap();
    let x = least_squares(&a, &[1.0, 2.0, 5.0]).unwrap();
    assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
}

#[test]
fn eig_examples() {
    let d = Matrix::<f64>::from_f64_rows(&[&[0.5, 0.0], &[0.0, 0.25]]).unwrap();
    let mut re: Vec<f64> = eig_small(&d).unwrap().iter().map(|z| z.re).collect();
    re.sort_by(f64::total_cmp);
    assert_eq!(re, vec![0.25, 0.5]);
    let rot = Matrix::<f64>::from_f64_rows(&[&[0.0, -1.0], &[1.0, 0.0]]).unwrap();
    for z in eig_small(&rot).unwrap() {
        assert!(z.re.abs() < 1e-15 && (z.im.abs() - 1.0).abs() < 1e-15);
    }
    let jordan = Matrix::<f64>::from_f64_rows(&[&[2.0, 1.0], &[0.0, 2.0]]).unwrap();
    for z in eig_small(&jordan).unwrap() {
        assert!((z.re - 2.0).abs() < 1e-7 && z.im.abs() < 1e-7);
    }
}
