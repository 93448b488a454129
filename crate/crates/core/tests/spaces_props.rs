mod common;

use common::*;
use proptest::prelude::*;
use stabilab_core::padic::{padic_abs, LogMagnitude, PrimeContext};
use stabilab_core::spaces::{
    determinant, is_cauchy_scalar, n_beta_norm, rank, sup_norm, NBetaContext, Vector, Verdict, WindowPolicy,
};

fn vector(d: usize) -> impl Strategy<Value = Vector> {
    prop::collection::vec(small_rational(), d).prop_map(Vector::new)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn sup_norm_is_ultrametric(p in prime(), a in vector(3), b in vector(3)) {
        let c = PrimeContext::with_unit_beta(p).unwrap();
        let sum = sup_norm(&(&a + &b), &c);
        prop_assert!(sum <= sup_norm(&a, &c).max(sup_norm(&b, &c)));
    }

    #[test]
    fn two_by_two_norm_is_determinant(p in prime(), a in vector(2), b in vector(2)) {
        let c = NBetaContext::new(PrimeContext::with_unit_beta(p).unwrap(), 2, 2).unwrap();
        let det = &a.coords()[0] * &b.coords()[1] - &a.coords()[1] * &b.coords()[0];
        let expected = padic_abs(&det, c.prime());
        prop_assert_eq!(n_beta_norm(&[a, b], &c).unwrap(), expected);
    }

    #[test]
    fn zero_exactly_on_dependent_tuples(p in prime(), a in vector(3), b in vector(3), s in small_rational()) {
        let c = NBetaContext::new(PrimeContext::with_unit_beta(p).unwrap(), 2, 3).unwrap();
        let dependent = vec![a.clone(), a.scale(&s)];
        prop_assert!(n_beta_norm(&dependent, &c).unwrap().is_zero());
        let rows = vec![a.coords().to_vec(), b.coords().to_vec()];
        let independent = rank(&rows) == 2;
        prop_assert_eq!(!n_beta_norm(&[a, b], &c).unwrap().is_zero(), independent);
    }

    #[test]
    fn determinant_is_multilinear_in_first_row(r0 in vector(3), r1 in vector(3), r2 in vector(3), s in small_rational()) {
        let rows = |x: &Vector| vec![x.coords().to_vec(), r1.coords().to_vec(), r2.coords().to_vec()];
        prop_assert_eq!(determinant(&rows(&r0.scale(&s))), s * determinant(&rows(&r0)));
    }

    #[test]
    fn geometric_sequences_converge(p in prime(), k in 1usize..4) {
        let c = PrimeContext::with_unit_beta(p).unwrap();
        // partial sums of p^j: differences p^j with norms p^-j
        let mut terms = Vec::new();
        let mut acc = int(0);
        for j in 0..(40 * k + 10) {
            acc += p_pow_neg(p, -(j as i64));
            terms.push(acc.clone());
        }
        let t = is_cauchy_scalar(&terms, &c, &WindowPolicy::default()).unwrap();
        prop_assert_eq!(t.verdict, Verdict::Converged);
        prop_assert!(!t.limit.unwrap().exact);
    }
}

#[test]
fn short_traces_are_usage_errors() {
    let c = PrimeContext::with_unit_beta(2).unwrap();
    assert!(is_cauchy_scalar(&[int(1), int(2)], &c, &WindowPolicy::default()).is_err());
    let constant = vec![int(7); 8];
    let t = is_cauchy_scalar(&constant, &c, &WindowPolicy::default()).unwrap();
    assert!(t.limit.unwrap().exact);
    assert!(t.diff_norms.iter().all(LogMagnitude::is_zero));
}
