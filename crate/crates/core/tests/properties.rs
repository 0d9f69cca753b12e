//! Property-based checks of structural invariants.

use glskit::bounds::{
    lml_bound, lml_relaxed_bound, maximal_coupling_prob, weak_coupling_bound, wz_error_bound,
};
use glskit::coupling::{build_races, gls_sample, gls_sample_heterogeneous, tv_distance, Categorical};
use glskit::rng::{derive_uniform, exp_variate, SeedContext};
use glskit::specdec::{exact_sequence_law, run_decode_episode, DecodeConfig, DecodeMode, TabularLM};
use glskit::stats::summarize;
use glskit::wz::DiscreteWzModel;
use proptest::prelude::*;

fn categorical(n: usize) -> impl Strategy<Value = Categorical> {
    prop::collection::vec(0.0f64..1.0, n)
        .prop_filter("positive mass", |v| v.iter().sum::<f64>() > 1e-3)
        .prop_map(|v| Categorical::new(v).unwrap())
}

fn full_support(n: usize) -> impl Strategy<Value = Categorical> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|v| Categorical::new(v).unwrap())
}

fn permute(c: &Categorical, perm: &[usize]) -> Categorical {
    Categorical::new(perm.iter().map(|&i| c.prob(i)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn uniforms_stay_open(seed in any::<u64>(), tags in prop::collection::vec(any::<u64>(), 0..5)) {
        let ctx = SeedContext::new(seed).tags(&tags);
        let u = derive_uniform(ctx);
        prop_assert!(u > 0.0 && u < 1.0);
        prop_assert_eq!(u.to_bits(), derive_uniform(ctx).to_bits());
        let e = exp_variate(ctx);
        prop_assert!(e.is_finite() && e > 0.0);
    }

    #[test]
    fn race_scale_invariance(seed in any::<u64>(), p in categorical(6), q in categorical(6), k in 1usize..5, c in 1e-3f64..1e3) {
        let races = build_races(SeedContext::new(seed), k, 6);
        prop_assert_eq!(gls_sample(&p, &q, &races).unwrap(), gls_sample(&p, &q, &races.scaled(c)).unwrap());
    }

    #[test]
    fn row_permutation_exchangeability(seed in any::<u64>(), q in categorical(5), ps in prop::collection::vec(categorical(5), 4), perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle()) {
        let races = build_races(SeedContext::new(seed), 4, 5);
        let base = gls_sample_heterogeneous(&ps, &q, &races).unwrap();
        let permuted_races = races.permute_rows(&perm);
        let permuted_ps: Vec<Categorical> = perm.iter().map(|&r| ps[r].clone()).collect();
        let moved = gls_sample_heterogeneous(&permuted_ps, &q, &permuted_races).unwrap();
        prop_assert_eq!(moved.y, base.y);
        for (k, &r) in perm.iter().enumerate() {
            prop_assert_eq!(moved.x[k], base.x[r]);
        }
    }

    #[test]
    fn zero_mass_symbols_never_drawn(seed in any::<u64>(), p in categorical(6), q in categorical(6), k in 1usize..5) {
        let o = gls_sample(&p, &q, &build_races(SeedContext::new(seed), k, 6)).unwrap();
        prop_assert!(q.prob(o.y) > 0.0);
        prop_assert!(o.x.iter().all(|&x| p.prob(x) > 0.0));
        prop_assert_eq!(o.accepted, o.x.contains(&o.y));
    }

    #[test]
    fn bounds_are_ordered_and_alphabet_symmetric(p in full_support(5), q in full_support(5), k in 1usize..8, perm in Just(vec![0usize, 1, 2, 3, 4]).prop_shuffle()) {
        let lml = lml_bound(&p, &q, k).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&lml));
        prop_assert!(lml_bound(&p, &q, k + 1).unwrap() >= lml - 1e-12);
        prop_assert!(lml_relaxed_bound(&p, &q, k).unwrap() <= 1.0 + 1e-12);
        let permuted = lml_bound(&permute(&p, &perm), &permute(&q, &perm), k).unwrap();
        prop_assert!((permuted - lml).abs() < 1e-12);
        let (weak, maximal) = (weak_coupling_bound(&p, &q).unwrap(), maximal_coupling_prob(&p, &q).unwrap());
        prop_assert!(weak <= maximal + 1e-15);
        // single-row coupling lies between the weak bound and the maximal coupling
        let one = lml_bound(&p, &q, 1).unwrap();
        prop_assert!(one >= weak - 1e-12 && one <= maximal + 1e-12);
    }

    #[test]
    fn tv_is_a_metric_value(p in categorical(7), q in categorical(7)) {
        let d = tv_distance(&p, &q).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&d));
        prop_assert!((d - tv_distance(&q, &p).unwrap()).abs() < 1e-15);
        prop_assert!(tv_distance(&p, &p).unwrap() == 0.0);
    }

    #[test]
    fn wz_bound_shrinks_with_list_and_labels(p_a in full_support(3), t_rows in prop::collection::vec(full_support(3), 3), w_rows in prop::collection::vec(full_support(4), 3), k in 1usize..4, l in 1usize..4) {
        let model = DiscreteWzModel::new(p_a, t_rows, w_rows).unwrap();
        let b = wz_error_bound(&model, k, l).unwrap();
        prop_assert!((0.0..=1.0).contains(&b));
        prop_assert!(wz_error_bound(&model, k + 1, l).unwrap() <= b + 1e-12);
        prop_assert!(wz_error_bound(&model, k, l + 1).unwrap() <= b + 1e-12);
    }

    #[test]
    fn sequence_law_normalizes(seed in any::<u64>(), n in 2usize..4, c in 0usize..3, length in 1usize..4) {
        let lm = TabularLM::random(SeedContext::new(seed), n, c, 1.0).unwrap();
        let law = exact_sequence_law(&lm, &[], length).unwrap();
        prop_assert_eq!(law.len(), n.pow(length as u32));
        prop_assert!((law.values().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn traces_keep_active_drafts_consistent(seed in any::<u64>(), k in 1usize..5, l in 1usize..5, strong in any::<bool>()) {
        let target = TabularLM::random(SeedContext::new(seed).tag(0), 3, 2, 1.0).unwrap();
        let drafter = TabularLM::random(SeedContext::new(seed).tag(1), 3, 2, 1.0).unwrap();
        let mode = if strong { DecodeMode::Strong } else { DecodeMode::Conditional };
        let tr = run_decode_episode(&DecodeConfig::new(k, l, mode), &target, &[drafter], &[1], SeedContext::new(seed).tag(2)).unwrap();
        prop_assert!(tr.tau >= 1 && tr.tau <= l + 1);
        prop_assert_eq!(tr.tau, tr.output.len());
        prop_assert_eq!(tr.accept_count() + 1, tr.tau);
        for j in 1..tr.active_sets.len() {
            prop_assert!(tr.active_sets[j].iter().all(|x| tr.active_sets[j - 1].contains(x)));
            for &r in &tr.active_sets[j] {
                prop_assert_eq!(&tr.drafts[r][..j], &tr.output[..j]);
            }
        }
    }

    #[test]
    fn summary_stderr_is_nonnegative(values in prop::collection::vec(-1e6f64..1e6, 2..50)) {
        let s = summarize(&values).unwrap();
        prop_assert!(s.stderr >= 0.0);
        prop_assert_eq!(s.count, values.len());
    }
}
