//! Randomized invariants. Each case draws a dimension and a seed; all
//! matrices are then built from the library's own seeded ensembles.

use proptest::prelude::*;

use qdiv_core::bounds::{bs_bound_channel, bs_bound_condexp, lemma_integrand_check};
use qdiv_core::channels::{build_contraction_u, random_cptp, random_pinching, ConditionalExpectation};
use qdiv_core::divergences::{bs_entropy, maximal_f, standard_f, FDivFamily};
use qdiv_core::matcore::{herm_eig, hs_inner, matrix_fn, op_norm, pinv, ScalarFunction};
use qdiv_core::recovery::{e_fixed_pair, equality_residuals, gamma_norms};
use qdiv_core::rng::{derive_seed, Rng};
use qdiv_core::states::{gamma, random_density, random_equal_support_pair, regularize, PsdFactors};
use qdiv_core::{ComplexDense, C64};

fn pair(d: usize, seed: u64) -> (ComplexDense, ComplexDense) {
    (
        random_density(d, d, derive_seed(seed, 0)).unwrap().into_matrix(),
        random_density(d, d, derive_seed(seed, 1)).unwrap().into_matrix(),
    )
}

fn random_hermitian(d: usize, seed: u64) -> ComplexDense {
    let mut rng = Rng::new(seed);
    let g = ComplexDense::from_fn(d, d, |_, _| rng.complex_gaussian());
    (&g + &g.adjoint()).scale(0.5)
}

fn random_matrix(d: usize, seed: u64) -> ComplexDense {
    let mut rng = Rng::new(seed);
    ComplexDense::from_fn(d, d, |_, _| rng.complex_gaussian())
}

fn condexp(d: usize, seed: u64) -> ConditionalExpectation {
    if d == 4 && seed.is_multiple_of(2) {
        ConditionalExpectation::partial_trace_factor(2, 2).unwrap()
    } else {
        random_pinching(d, seed).unwrap()
    }
}

fn min_eig(a: &ComplexDense) -> f64 {
    herm_eig(&a.hermitian_part()).unwrap().lambda_min()
}

fn dims() -> impl Strategy<Value = usize> {
    2usize..=4
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigen_reconstruction(d in 1usize..=8, seed in any::<u64>()) {
        let a = random_hermitian(d, seed);
        let e = herm_eig(&a).unwrap();
        let err = (&e.reconstruct() - &a).frobenius();
        prop_assert!(err <= 1e-10 * a.frobenius().max(1.0));
    }

    #[test]
    fn sqrt_of_square_is_identity_on_psd(d in dims(), seed in any::<u64>()) {
        let (s, _) = pair(d, seed);
        let back = matrix_fn(&matrix_fn(&s, &ScalarFunction::square()).unwrap(), &ScalarFunction::sqrt()).unwrap();
        prop_assert!((&back - &s).max_abs() <= 1e-9);
    }

    #[test]
    fn hs_norm_matches_frobenius(d in dims(), seed in any::<u64>()) {
        let a = random_matrix(d, seed);
        let ip = hs_inner(&a, &a).unwrap();
        let f2 = a.frobenius().powi(2);
        prop_assert!((ip.re - f2).abs() <= 1e-12 * f2 && ip.im.abs() <= 1e-12 * f2);
    }

    #[test]
    fn pinv_is_an_involution_on_support(d in 3usize..=5, seed in any::<u64>()) {
        let rank = 1 + (seed as usize % (d - 1));
        let s = random_density(d, rank, seed).unwrap().into_matrix();
        let back = pinv(&pinv(&s).unwrap()).unwrap();
        prop_assert!((&back - &s).max_abs() <= 1e-9);
    }

    #[test]
    fn gamma_is_psd_and_normalized(d in dims(), seed in any::<u64>()) {
        let (s, r) = pair(d, seed);
        let g = gamma(&s, &r).unwrap();
        prop_assert!(g.eig.lambda_min() >= -1e-12);
        let sq = PsdFactors::new(&s).unwrap().sqrt;
        let t = hs_inner(&sq, &(&g.matrix * &sq)).unwrap();
        prop_assert!((t.re - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn regularize_keeps_trace_and_lifts_spectrum(d in dims(), seed in any::<u64>(), k in 1i32..=7) {
        let rank = 1 + (seed as usize % d);
        let s = random_density(d, rank, seed).unwrap();
        let r = regularize(&s, 10f64.powi(-k));
        prop_assert!((r.trace().re - 1.0).abs() <= 1e-14);
        prop_assert!(min_eig(r.matrix()) > min_eig(s.matrix()));
    }

    #[test]
    fn ensembles_are_deterministic(d in dims(), seed in any::<u64>()) {
        prop_assert_eq!(pair(d, seed), pair(d, seed));
    }

    #[test]
    fn contraction_is_a_contraction(d in dims(), d_out in dims(), seed in any::<u64>()) {
        let s = random_density(d, d, seed).unwrap();
        let t = random_cptp(d, d_out, d.div_ceil(d_out).max(2), derive_seed(seed, 1)).unwrap();
        let u = build_contraction_u(&s, &t).unwrap();
        let x = random_matrix(d_out, derive_seed(seed, 2));
        let lhs = hs_inner(&x, &u.adjoint(&u.apply(&x).unwrap()).unwrap()).unwrap().re;
        prop_assert!(lhs <= hs_inner(&x, &x).unwrap().re + 1e-9);
    }

    #[test]
    fn gamma_compression(d in dims(), d_out in dims(), seed in any::<u64>()) {
        let (s, r) = pair(d, seed);
        let t = random_cptp(d, d_out, d.div_ceil(d_out).max(2), derive_seed(seed, 1)).unwrap();
        let u = build_contraction_u(&s, &t).unwrap();
        let g = gamma(&s, &r).unwrap();
        let gt = gamma(&t.apply(&s).unwrap(), &t.apply(&r).unwrap()).unwrap();
        let x = random_matrix(d_out, derive_seed(seed, 2));
        let lhs = hs_inner(&x, &u.adjoint(&(&g.matrix * &u.apply(&x).unwrap())).unwrap()).unwrap().re;
        let rhs = hs_inner(&x, &(&gt.matrix * &x)).unwrap().re;
        prop_assert!(lhs <= rhs + 1e-9, "{} > {}", lhs, rhs);
    }

    #[test]
    fn gamma_norm_monotone(d in dims(), seed in any::<u64>()) {
        let (s, r) = pair(d, seed);
        let e = condexp(d, derive_seed(seed, 3));
        let (g, gn) = gamma_norms(&s, &r, &e.as_kraus()).unwrap();
        prop_assert!(gn <= g + 1e-10);
    }

    #[test]
    fn jensen_on_pinchings(d in dims(), seed in any::<u64>()) {
        let x = random_density(d, d, seed).unwrap().into_matrix().scale(d as f64);
        let e = random_pinching(d, derive_seed(seed, 1)).unwrap();
        let ex = e.apply(&x).unwrap();
        let neg_sqrt = |a: &ComplexDense| -&matrix_fn(a, &ScalarFunction::sqrt()).unwrap();
        let fs: [Box<dyn Fn(&ComplexDense) -> ComplexDense>; 3] = [
            Box::new(|a| matrix_fn(a, &ScalarFunction::reciprocal()).unwrap()),
            Box::new(|a| matrix_fn(a, &ScalarFunction::square()).unwrap()),
            Box::new(neg_sqrt),
        ];
        for f in &fs {
            let gap = &e.apply(&f(&x)).unwrap() - &f(&ex);
            prop_assert!(min_eig(&gap) >= -1e-9);
        }
    }

    #[test]
    fn standard_below_maximal(d in dims(), seed in any::<u64>()) {
        let (s, r) = pair(d, seed);
        for fam in [FDivFamily::x_log_x(), FDivFamily::neg_power(0.5).unwrap()] {
            prop_assert!(standard_f(&s, &r, &fam).unwrap() <= maximal_f(&s, &r, &fam).unwrap() + 1e-9);
        }
    }

    #[test]
    fn transpose_swaps_arguments(d in dims(), seed in any::<u64>()) {
        let (s, r) = pair(d, seed);
        for fam in [FDivFamily::x_log_x(), FDivFamily::neg_power(0.25).unwrap(), FDivFamily::square()] {
            let tr = fam.transposed();
            let std_sr = standard_f(&s, &r, &fam).unwrap();
            let std_rs = qdiv_core::divergences::standard_f_with(&r, &s, tr.f()).unwrap();
            prop_assert!((std_sr - std_rs).abs() <= 1e-9 * std_sr.abs().max(1.0));
            let max_sr = maximal_f(&s, &r, &fam).unwrap();
            let max_rs = qdiv_core::divergences::maximal_f_with(&r, &s, tr.f()).unwrap();
            prop_assert!((max_sr - max_rs).abs() <= 1e-9 * max_sr.abs().max(1.0));
        }
    }

    #[test]
    fn commuting_pairs_are_classical(d in dims(), seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let w = qdiv_core::channels::random_unitary(d, &mut rng).unwrap();
        let mut p: Vec<f64> = (0..d).map(|_| 0.05 + rng.uniform()).collect();
        let mut q: Vec<f64> = (0..d).map(|_| 0.05 + rng.uniform()).collect();
        for v in [&mut p, &mut q] {
            let n: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= n);
        }
        let s = w.sandwich(&ComplexDense::from_real_diag(&p)).hermitian_part();
        let r = w.sandwich(&ComplexDense::from_real_diag(&q)).hermitian_part();
        for fam in [FDivFamily::x_log_x(), FDivFamily::neg_power(0.5).unwrap()] {
            let cl: f64 = p.iter().zip(&q).map(|(a, b)| b * fam.f.call(a / b)).sum();
            prop_assert!((standard_f(&s, &r, &fam).unwrap() - cl).abs() <= 1e-10);
            prop_assert!((maximal_f(&s, &r, &fam).unwrap() - cl).abs() <= 1e-10);
        }
    }

    #[test]
    fn bs_scaling_identity(d in dims(), seed in any::<u64>()) {
        let (s, r) = pair(d, seed);
        let base = bs_entropy(&s, &r).unwrap();
        for a in [0.5, 2.0] {
            for b in [0.5, 2.0] {
                let v = bs_entropy(&s.scale(a), &r.scale(b)).unwrap();
                prop_assert!((v - a * base - a * (a / b).ln()).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn data_processing(d in dims(), d_out in dims(), seed in any::<u64>()) {
        let (s, r) = pair(d, seed);
        let t = random_cptp(d, d_out, d.div_ceil(d_out).max(2), derive_seed(seed, 1)).unwrap();
        let gap = bs_entropy(&s, &r).unwrap() - bs_entropy(&t.apply(&s).unwrap(), &t.apply(&r).unwrap()).unwrap();
        prop_assert!(gap >= -1e-9);
    }

    #[test]
    fn equality_cases_satisfy_every_condition(d in 3usize..=4, seed in any::<u64>()) {
        let e = condexp(d, seed);
        let (s, r) = e_fixed_pair(&e, seed).unwrap();
        for (a, b) in [(&s, &r), (&r, &s)] {
            let rep = equality_residuals(a, b, &e.as_kraus()).unwrap();
            prop_assert!(rep.gap_bs.abs() <= 1e-10);
            prop_assert!(rep.renyi2_gap.abs() <= 1e-8);
            prop_assert!(rep.residual_petz <= 1e-10);
            prop_assert!(rep.residual_bs_recovery <= 1e-7);
            prop_assert!(rep.residual_eq2 <= 1e-6);
        }
    }

    #[test]
    fn random_pairs_miss_equality_on_both_sides(d in dims(), seed in any::<u64>()) {
        let (s, r) = pair(d, seed);
        let t = random_cptp(d, d, 2, derive_seed(seed, 1)).unwrap();
        for (a, b) in [(&s, &r), (&r, &s)] {
            let rep = equality_residuals(a, b, &t).unwrap();
            // Renyi-2 and BS gaps vanish together.
            prop_assert_eq!(rep.gap_bs <= 1e-10, rep.renyi2_gap.abs() <= 1e-8);
            if rep.residual_eq2 <= 1e-12 {
                prop_assert!(rep.gap_bs <= 1e-8);
            }
            if rep.gap_bs <= 1e-12 {
                prop_assert!(rep.residual_eq2 <= 1e-6 && rep.residual_bs_recovery <= 1e-6);
            }
        }
    }

    #[test]
    fn condexp_bounds_hold(d in dims(), seed in any::<u64>()) {
        let (s, r) = pair(d, seed);
        let rep = bs_bound_condexp(&s, &r, &condexp(d, derive_seed(seed, 3))).unwrap();
        prop_assert!(!rep.violates(1e-8));
    }

    #[test]
    fn channel_bounds_hold(d in dims(), d_out in dims(), seed in any::<u64>()) {
        let (s, r) = pair(d, seed);
        let t = random_cptp(d, d_out, d.div_ceil(d_out).max(2), derive_seed(seed, 1)).unwrap();
        let rep = bs_bound_channel(&s, &r, &t).unwrap();
        prop_assert!(!rep.violates(1e-8));
    }

    #[test]
    fn bounds_vanish_exactly_on_equality_cases(d in 3usize..=4, seed in any::<u64>()) {
        let e = condexp(d, seed);
        let (s, r) = e_fixed_pair(&e, seed).unwrap();
        let rep = bs_bound_condexp(&s, &r, &e).unwrap();
        prop_assert!(rep.residual_k <= 1e-8 && rep.residual_l <= 1e-8);
        prop_assert!(rep.rhs <= 1e-30);
        let (s2, r2) = pair(d, seed);
        let rep = bs_bound_condexp(&s2, &r2, &random_pinching(d, seed).unwrap()).unwrap();
        prop_assert!(rep.rhs_k > 0.0 && rep.rhs_l > 0.0);
    }

    #[test]
    fn lemma_holds_on_grid(d in dims(), seed in any::<u64>()) {
        let (s, r) = pair(d, seed);
        let e = condexp(d, derive_seed(seed, 3));
        for t in [0.01, 0.1, 1.0, 10.0, 100.0] {
            let (lhs, rhs) = lemma_integrand_check(&s, &r, &e, t).unwrap();
            prop_assert!(lhs - rhs >= -1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn singular_channel_gap_matches_support_formula(d in 3usize..=4, seed in any::<u64>()) {
        let (s, r) = random_equal_support_pair(d, d - 1, seed).unwrap();
        let t = random_cptp(d, d, 2, derive_seed(seed, 1)).unwrap();
        let direct = equality_residuals(&s, &r, &t).unwrap().gap_bs;
        let rep = bs_bound_channel(&s, &r, &t).unwrap();
        let inc = rep.regularization_increment.unwrap();
        // Agreement is only expected once the extrapolation has settled.
        prop_assume!(inc < 1e-6);
        prop_assert!((rep.gap - direct).abs() <= 1e-6);
        prop_assert!(!rep.violates(1e-8));
    }
}

#[test]
fn op_norm_of_identity() {
    let i = ComplexDense::identity(3).scale_c(C64::new(0.0, 2.0));
    assert!((op_norm(&i).unwrap() - 2.0).abs() < 1e-14);
}
