//! Property tests across the experiment modules.

use microlocal::config::parse_pairs;
use microlocal::fbi::{fiber_integral, SampledSignal, Signal};
use microlocal::jets::{parse_expr, Expr};
use microlocal::normalform::{
    random_corpus, stability_sweep, transport_recursion, transport_residuals, JsParams,
    ModelOperator,
};
use microlocal::quantize::{op_apply, random_band_function, BandLimit, GridFunction};
use microlocal::report::fmt17;
use microlocal::statphase::{gaussian_expansion, polynomial_gaussian_integral};
use microlocal::symbols::FormalSymbol;
use microlocal::C64;
use proptest::prelude::*;

fn poly_1d(coeffs: &[f64]) -> Expr {
    Expr::sum(
        coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| Expr::var(0).powi(k as i32).scale(C64::new(c, 0.0)))
            .collect(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn statphase_expansion_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, lam in 2.0f64..40.0) {
        let u = parse_expr("(exp y)", &["y"]).unwrap();
        let v = parse_expr("(cos (* 3 y))", &["y"]).unwrap();
        let w = u.scale(C64::new(a, 0.0)).add(&v.scale(C64::new(b, 0.0)));
        let lhs = gaussian_expansion(&w, 1, lam, 6).unwrap().value();
        let rhs = a * gaussian_expansion(&u, 1, lam, 6).unwrap().value()
            + b * gaussian_expansion(&v, 1, lam, 6).unwrap().value();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn statphase_odd_amplitudes_vanish(c in prop::collection::vec(-5.0f64..5.0, 4), lam in 1.0f64..50.0) {
        // y, y³, y⁵, y⁷ with random weights
        let u = Expr::sum(c.iter().enumerate()
            .map(|(k, &w)| Expr::var(0).powi(2 * k as i32 + 1).scale(C64::new(w, 0.0)))
            .collect());
        prop_assert!(gaussian_expansion(&u, 1, lam, 8).unwrap().value().abs() <= 1e-14);
    }

    #[test]
    fn statphase_exact_on_polynomials(c in prop::collection::vec(-5.0f64..5.0, 8), lam in 1.0f64..50.0) {
        // degree ≤ 7 is integrated exactly by the N = 8 expansion
        let u = poly_1d(&c);
        let jet = u.jet(&[C64::new(0.0, 0.0)], 8).unwrap();
        let full = polynomial_gaussian_integral(&jet, lam);
        let e = gaussian_expansion(&u, 1, lam, 8).unwrap().value();
        let scale: f64 = c.iter().map(|x| x.abs()).sum::<f64>() * (std::f64::consts::PI / lam).sqrt();
        prop_assert!((e - full).abs() <= 1e-12 * scale.max(1e-300));
    }

    #[test]
    fn quantization_is_linear(s1 in 0u64..1000, s2 in 0u64..1000, re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let period = 2.0 * std::f64::consts::PI;
        let a = FormalSymbol::new(1, 0.0, vec![parse_expr("(+ (cos x) (* xi (sin x)))", &["x", "xi"]).unwrap()]).unwrap();
        let u = random_band_function(period, 64, 1, 10, s1).unwrap();
        let w = random_band_function(period, 64, 1, 12, s2).unwrap();
        let s = C64::new(re, im);
        let band = BandLimit::new(31).unwrap();
        let comb = |p: &GridFunction, q: &GridFunction| {
            GridFunction::new(period, p.samples().iter().zip(q.samples()).map(|(x, y)| x + y * s).collect()).unwrap()
        };
        let lhs = op_apply(&a, &comb(&u, &w), band).unwrap();
        let rhs = comb(&op_apply(&a, &u, band).unwrap(), &op_apply(&a, &w, band).unwrap());
        let diff = lhs.samples().iter().zip(rhs.samples()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-11);
    }

    #[test]
    fn fbi_fiber_integral_is_linear(
        u in prop::collection::vec(-1.0f64..1.0, 9),
        v in prop::collection::vec(-1.0f64..1.0, 9),
        a in -2.0f64..2.0,
        x in -1.0f64..1.0,
        t in 5.0f64..40.0,
    ) {
        let sig = |vals: Vec<f64>| Signal::Samples(SampledSignal::new(-1.0, 0.25, vals).unwrap());
        let combined: Vec<f64> = u.iter().zip(&v).map(|(p, q)| p + a * q).collect();
        let f = |s: &Signal| fiber_integral(s, x, 0.6, t).unwrap();
        let lhs = f(&sig(combined));
        let rhs = f(&sig(u.clone())) + f(&sig(v.clone())) * a;
        let l1: f64 = u.iter().chain(&v).map(|p| p.abs()).sum::<f64>() * (1.0 + a.abs());
        prop_assert!((lhs - rhs).norm() <= 1e-9 * l1.max(1e-12));
    }

    #[test]
    fn transport_recursion_is_exact(seed in 0u64..10_000) {
        let model = ModelOperator::new(2).unwrap();
        let g = random_corpus(model, 0, seed, 2, 4).unwrap();
        let b = transport_recursion(&g, 2, 4);
        let check = transport_residuals(&g, &b, &JsParams::at_threshold(4.0, 2)).unwrap();
        prop_assert!(check.symbolic_zero);
    }

    #[test]
    fn stability_holds_above_threshold(seed in 0u64..10_000, m in 2.0f64..9.0) {
        let model = ModelOperator::new(2).unwrap();
        let g = random_corpus(model, 0, seed, 2, 4).unwrap();
        let p = JsParams::at_threshold(m, 2);
        let rep = stability_sweep(&[g], &[p]).unwrap();
        prop_assert!(rep.pass, "max ratio {}", rep.max_asserted_ratio);
    }

    #[test]
    fn fmt17_round_trips(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        let back: f64 = fmt17(x).parse().unwrap();
        prop_assert_eq!(back.to_bits(), x.to_bits());
    }

    #[test]
    fn config_pairs_round_trip(pairs in prop::collection::btree_map("[a-z][a-z0-9_]{0,8}", "[A-Za-z0-9.,_-]{0,12}", 0..6)) {
        let text: String = pairs.iter().map(|(k, v)| format!("  {k} =  {v} # note\n")).collect();
        let parsed = parse_pairs(&text).unwrap();
        prop_assert_eq!(parsed.len(), pairs.len());
        for ((k, v, _), (ek, ev)) in parsed.iter().zip(&pairs) {
            prop_assert_eq!(k, ek);
            prop_assert_eq!(v, ev);
        }
    }
}
