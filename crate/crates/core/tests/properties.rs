//! Randomized checks of the algebraic and runtime invariants.

use num_rational::BigRational;
use perfscope::frontend::Analyzed;
use perfscope::interp::{run, RunOptions};
use perfscope::runtime::Context;
use perfscope::term::{assignment, rational, Term};
use perfscope::values::{num_binop, IntOp, Num};
use proptest::prelude::*;

const VARS: [&str; 3] = ["n", "m", "k"];

fn leaf() -> impl Strategy<Value = Term> {
    prop_oneof![
        (-6i64..=6).prop_map(Term::int),
        (0usize..VARS.len()).prop_map(|i| Term::var(VARS[i]).unwrap()),
    ]
}

fn polynomial() -> impl Strategy<Value = Term> {
    leaf().prop_recursive(3, 16, 2, |inner| {
        (inner.clone(), inner, 0u8..3).prop_map(|(a, b, op)| match op {
            0 => &a + &b,
            1 => &a - &b,
            _ => &a * &b,
        })
    })
}

/// Polynomials and quotients of polynomials.
fn term() -> impl Strategy<Value = Term> {
    (polynomial(), polynomial(), any::<bool>()).prop_map(|(a, b, quotient)| {
        if quotient && !b.is_zero() {
            a.checked_div(&b).unwrap()
        } else {
            a
        }
    })
}

fn univariate() -> impl Strategy<Value = Term> {
    let poly = || {
        prop_oneof![(-6i64..=6).prop_map(Term::int), Just(Term::var("n").unwrap())].prop_recursive(3, 12, 2, |inner| {
            (inner.clone(), inner, 0u8..3).prop_map(|(a, b, op)| match op {
                0 => &a + &b,
                1 => &a - &b,
                _ => &a * &b,
            })
        })
    };
    (poly(), poly()).prop_map(|(a, b)| if b.is_zero() { a } else { a.checked_div(&b).unwrap() })
}

fn sigma() -> impl Strategy<Value = [i64; 3]> {
    [-20i64..=20, -20i64..=20, -20i64..=20]
}

fn eval(t: &Term, s: &[i64; 3]) -> Option<BigRational> {
    t.eval(&assignment(VARS.iter().copied().zip(s.iter().copied()))).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn evaluation_is_a_homomorphism(a in term(), b in term(), s in sigma()) {
        let (Some(x), Some(y)) = (eval(&a, &s), eval(&b, &s)) else { return Ok(()) };
        // a singular point of a reduced sum or product is a singular point of an operand
        if let Some(v) = eval(&(&a + &b), &s) { prop_assert_eq!(v, &x + &y); }
        if let Some(v) = eval(&(&a - &b), &s) { prop_assert_eq!(v, &x - &y); }
        if let Some(v) = eval(&(&a * &b), &s) { prop_assert_eq!(v, &x * &y); }
        if y != rational(0) {
            let q = a.checked_div(&b).unwrap();
            if let Some(v) = eval(&q, &s) { prop_assert_eq!(v, &x / &y); }
        }
    }

    #[test]
    fn ring_axioms(a in term(), b in term(), c in term()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&a + &Term::zero(), a.clone());
        prop_assert_eq!(&a * &Term::one(), a.clone());
        prop_assert!((&a - &a).is_zero());
        prop_assert_eq!(-(-a.clone()), a.clone());
    }

    #[test]
    fn equal_terms_evaluate_equally(a in term(), b in term(), s in sigma()) {
        let x = &(&a + &b) - &b;
        prop_assert_eq!(&x, &a);
        if let (Some(u), Some(v)) = (eval(&x, &s), eval(&a, &s)) {
            prop_assert_eq!(u, v);
        }
    }

    #[test]
    fn univariate_canonical_form_is_unique(a in univariate(), b in univariate()) {
        // single-parameter rational functions are fully reduced, so equal
        // terms also render identically
        let x = &(&a + &b) - &b;
        prop_assert_eq!(x.to_string(), a.to_string());
    }

    #[test]
    fn big_o_ignores_nonzero_scaling(a in term(), c in (-9i64..=9).prop_filter("nonzero", |c| *c != 0)) {
        prop_assert_eq!((&Term::int(c) * &a).big_o(), a.big_o());
        if !a.is_zero() {
            prop_assert_eq!(a.checked_div(&Term::int(c)).unwrap().big_o(), a.big_o());
        }
    }

    #[test]
    fn num_arithmetic_stays_consistent(
        n in 0i64..50, dn in 0i64..500, m in 0i64..50, dm in 0i64..500,
        c in -9i64..=9, ops in proptest::collection::vec((0u8..3, 0u8..3), 1..6),
    ) {
        let small = assignment([("n", n), ("m", m)]);
        let large = assignment([("n", n + dn), ("m", m + dm)]);
        let leaves = [
            Num::input("n", n, n + dn).unwrap(),
            Num::input("m", m, m + dm).unwrap(),
            Num::literal(c),
        ];
        let mut acc = leaves[0].clone();
        for (op, pick) in ops {
            let op = [IntOp::Add, IntOp::Sub, IntOp::Mul][op as usize];
            let (next, warning) = num_binop(op, &acc, &leaves[pick as usize]).unwrap();
            prop_assert!(warning.is_none());
            acc = next;
        }
        prop_assert!(acc.is_consistent(&small, &large), "{}", acc);
    }

    #[test]
    fn peak_is_monotone_and_bounds_live(ops in proptest::collection::vec((any::<bool>(), 0i64..100, 0i64..1000), 1..40)) {
        let mut ctx = Context::new(&[("n".to_string(), 4, 64)], 2).unwrap();
        let mut live = Vec::new();
        let mut last_peak = 0;
        for (alloc, small, extra) in ops {
            if alloc || live.is_empty() {
                let size = Num { small, term: Term::int(small), large: small + extra };
                live.push(ctx.mem_alloc(&size).unwrap());
            } else {
                ctx.mem_free(live.remove(small as usize % live.len())).unwrap();
            }
            let (_, peak) = ctx.peak();
            prop_assert!(peak >= last_peak);
            prop_assert!(peak >= ctx.live_large());
            last_peak = peak;
        }
    }

    #[test]
    fn loop_body_runs_min_of_cap_and_trip(trip in 0i64..12, cap in 1u64..5) {
        let mut ctx = Context::new(&[], cap).unwrap();
        let token = ctx.loop_enter(&Num::literal(trip), None).unwrap();
        let mut runs = 0u64;
        while ctx.loop_iteration(token).unwrap() {
            ctx.charge_flops(1);
            runs += 1;
        }
        ctx.loop_exit(token).unwrap();
        prop_assert_eq!(runs, cap.min(trip as u64));
        prop_assert_eq!(ctx.finalize().unwrap().flops(), Term::int(trip));
    }

    #[test]
    fn uncapped_profile_agrees_with_exact(n in 0i64..30, m in 0i64..30) {
        let a = Analyzed::from_source(NEST).unwrap();
        let mut profile = RunOptions::profile(&[("n", n, n), ("m", m, m)]);
        profile.max_iterations = u64::MAX;
        let p = run(&a, &profile).unwrap();
        let e = run(&a, &RunOptions::exact(&[("n", n), ("m", m)])).unwrap();
        let s = assignment([("n", n), ("m", m)]);
        prop_assert_eq!(p.flops().eval(&s).unwrap(), e.flops().as_constant().unwrap());
        prop_assert_eq!(p.alloc_bytes_total().eval(&s).unwrap(), e.alloc_bytes_total().as_constant().unwrap());
        prop_assert_eq!(p.peak_large, e.peak_large);
    }
}

const NEST: &str = "int main(int n, int m) {
  double *row = malloc(m * sizeof(double));
  double s = 0.0;
  for (int i = 0; i < n; i++) {
    for (int j = 0; j < m; j++) {
      row[j] = row[j] * 0.5 + s;
      s = s + 1.0;
    }
  }
  free(row);
  return 0;
}
";
