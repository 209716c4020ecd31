mod common;

use common::{random_vec, rel_err, rng};
use paradiag_core::{
    alpha_invertibility_check, choose_alpha, Complex64, ControlProblem, MscPreconditioner,
    PinTPreconditioner,
};
use proptest::prelude::*;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-10 * scale.max(1e-300)
}

fn problem(n: usize, m: usize, log_gamma: f64, masked: bool) -> ControlProblem {
    let gamma = 10f64.powf(log_gamma);
    if masked {
        ControlProblem::example2(n, m, gamma).unwrap()
    } else {
        ControlProblem::example1(n, m, gamma).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn g_transpose_is_adjoint(n in 1usize..10, m in 1usize..8, lg in -7.0f64..2.0, seed: u64) {
        let prob = problem(n, m, lg, false);
        let mut r = rng(seed);
        let x = random_vec(&mut r, prob.dim());
        let y = random_vec(&mut r, prob.dim());
        let gx = prob.apply_g(&x).unwrap();
        let gty = prob.apply_gt(&y).unwrap();
        let lhs = dot(&gx, &y);
        let rhs = dot(&x, &gty);
        let scale = common::norm(&gx) * common::norm(&y);
        prop_assert!(close(lhs, rhs, scale), "{lhs} vs {rhs}");
    }

    #[test]
    fn schur_operator_is_spd(n in 1usize..10, m in 1usize..8, lg in -7.0f64..2.0, masked: bool, seed: u64) {
        let prob = problem(n, m, lg, masked);
        let mut r = rng(seed);
        let x = random_vec(&mut r, prob.dim());
        let y = random_vec(&mut r, prob.dim());
        let kx = prob.apply_k(&x).unwrap();
        let ky = prob.apply_k(&y).unwrap();
        let scale = common::norm(&kx) * common::norm(&y);
        prop_assert!(close(dot(&kx, &y), dot(&x, &ky), scale));
        let q = dot(&kx, &x);
        prop_assert!(q > 0.0);
        if !masked {
            prop_assert!(q >= prob.tau() * dot(&x, &x) * (1.0 - 1e-10));
        }
    }

    #[test]
    fn chosen_alpha_is_admissible(lt in -6.0f64..0.0, lg in -10.0f64..3.0, t in 0.1f64..10.0) {
        let tau = 10f64.powf(lt) * t;
        let gamma = 10f64.powf(lg);
        let alpha = choose_alpha(tau, gamma, t).unwrap();
        prop_assert!(alpha > 0.0 && alpha < 1.0);
        prop_assert!(alpha_invertibility_check(alpha, tau, gamma));
    }

    #[test]
    fn pint_inverse_is_symmetric_positive(n in 1usize..12, m in 1usize..8, lg in -7.0f64..2.0, seed: u64) {
        let prob = problem(n, m, lg, false);
        let alpha = choose_alpha(prob.tau(), prob.gamma(), prob.t_final()).unwrap();
        let pre = PinTPreconditioner::new(&prob, alpha).unwrap();
        let mut r = rng(seed);
        let x = random_vec(&mut r, prob.dim());
        let y = random_vec(&mut r, prob.dim());
        let px = pre.apply_palpha_inv(&x).unwrap();
        let py = pre.apply_palpha_inv(&y).unwrap();
        let scale = common::norm(&px) * common::norm(&y);
        prop_assert!(close(dot(&px, &y), dot(&x, &py), scale * 1e2));
        prop_assert!(dot(&px, &x) > 0.0);

        // R_α⁻ᵀ is the adjoint of R_α⁻¹
        let rx = pre.apply_ralpha_inv(&x).unwrap();
        let rty = pre.apply_ralpha_t_inv(&y).unwrap();
        let scale = common::norm(&rx) * common::norm(&y);
        prop_assert!(close(dot(&rx, &y), dot(&x, &rty), scale * 1e2));
    }

    #[test]
    fn msc_inverse_is_symmetric_positive(n in 1usize..12, m in 1usize..8, lg in -7.0f64..2.0, seed: u64) {
        let prob = problem(n, m, lg, false);
        let pre = MscPreconditioner::new(&prob).unwrap();
        let mut r = rng(seed);
        let x = random_vec(&mut r, prob.dim());
        let y = random_vec(&mut r, prob.dim());
        let px = pre.apply_p_inv(&x).unwrap();
        let py = pre.apply_p_inv(&y).unwrap();
        let scale = common::norm(&px) * common::norm(&y);
        prop_assert!(close(dot(&px, &y), dot(&x, &py), scale * 1e2));
        prop_assert!(dot(&px, &x) > 0.0);
    }

    #[test]
    fn shifted_solve_inverts_shifted_apply(
        m in 1usize..16, re in 0.01f64..10.0, im in -10.0f64..10.0, s in 0.01f64..5.0, seed: u64
    ) {
        let prob = problem(1, m, 0.0, false);
        let op = prob.spatial();
        let mut r = rng(seed);
        let raw = random_vec(&mut r, 2 * m * m);
        let x: Vec<Complex64> = raw.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
        let sigma = Complex64::new(re, im);
        let b = op.apply_shifted(sigma, s, &x).unwrap();
        let back = op.shifted_solve(sigma, s, &b).unwrap();
        let err: f64 = back.iter().zip(&x).map(|(a, c)| (a - c).norm_sqr()).sum::<f64>().sqrt();
        let nx: f64 = x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-10 * nx);
    }

    #[test]
    fn schur_solution_recovery_is_linear(n in 1usize..6, m in 1usize..5, seed: u64) {
        let prob = problem(n, m, -2.0, false);
        let rhs = prob.assemble_rhs().unwrap();
        let mut r = rng(seed);
        let v1 = random_vec(&mut r, prob.dim());
        let v2 = random_vec(&mut r, prob.dim());
        let sum: Vec<f64> = v1.iter().zip(&v2).map(|(a, b)| a + b).collect();
        let a = prob.recover_solution(&v1, &rhs).unwrap();
        let b = prob.recover_solution(&v2, &rhs).unwrap();
        let c = prob.recover_solution(&sum, &rhs).unwrap();
        let z = prob.recover_solution(&vec![0.0; prob.dim()], &rhs).unwrap();
        // affine in v: c = a + b - z
        let want: Vec<f64> = a.y.iter().zip(b.y.iter()).zip(z.y.iter()).map(|((x, y), w)| x + y - w).collect();
        prop_assert!(rel_err(&c.y, &want) < 1e-10);
        let want: Vec<f64> = a.p.iter().zip(b.p.iter()).zip(z.p.iter()).map(|((x, y), w)| x + y - w).collect();
        prop_assert!(rel_err(&c.p, &want) < 1e-10);
    }
}
