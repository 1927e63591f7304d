use infocons::distfit::special::student_t_two_sided;
use infocons::distfit::{build_ccdf, ols, Measure};
use infocons::ensemble::{
    boltzmann_equilibrium, enumerate_exact, metropolis_chains, metropolis_sample, EnsembleSystem, SamplerConfig,
};
use infocons::lexicon::{scan_source, LanguageSpec};
use infocons::metrics::{summarize_corpus, ComponentRecord};
use infocons::Execution;
use proptest::prelude::*;
use proptest::sample::select;

const FRAGMENTS: &[&str] = &[
    "int ",
    "void ",
    "f",
    "g2",
    "(",
    ")",
    "{",
    "}",
    ";",
    "x",
    "+",
    "<<=",
    "->",
    " ",
    "\n",
    "42",
    "0x1F",
    "1.5e3",
    "\"s{\"",
    "'}'",
    "/* { */",
    "// }\n",
    "if ",
    "return ",
    "while",
    ",",
    "#define X {\n",
    "\\\n",
];

fn c_source() -> impl Strategy<Value = String> {
    prop::collection::vec(select(FRAGMENTS), 0..120).prop_map(|v| v.concat())
}

fn record() -> impl Strategy<Value = ComponentRecord> {
    (1u64..5000, 0u64..60, 1u64..200).prop_map(|(t, f, v)| ComponentRecord::new("c", "f.c", t, f, v))
}

proptest! {
    #[test]
    fn tokens_are_conserved_per_file(src in c_source()) {
        let spec = LanguageSpec::bundled("c").unwrap();
        let scan = scan_source(src.as_bytes(), &spec, "p.c");
        let inside: usize = scan.spans.iter().map(|s| s.tokens.len()).sum();
        prop_assert_eq!(inside + scan.tokens_outside(), scan.tokens.len());
        let mut next = 0;
        for s in &scan.spans {
            prop_assert!(s.first_token_index >= next);
            prop_assert_eq!(&s.tokens[..], &scan.tokens[s.first_token_index..=s.last_token_index]);
            next = s.last_token_index + 1;
        }
    }

    #[test]
    fn information_is_additive(a in prop::collection::vec(record(), 1..40), b in prop::collection::vec(record(), 1..40)) {
        let joined: Vec<_> = a.iter().chain(&b).cloned().collect();
        let whole = summarize_corpus(&joined).unwrap();
        let merged = summarize_corpus(&a).unwrap().merge(summarize_corpus(&b).unwrap());
        prop_assert_eq!(whole.total_tokens, merged.total_tokens);
        prop_assert_eq!(whole.components, merged.components);
        let tol = 1e-12 * whole.total_information.abs().max(1.0);
        prop_assert!((whole.total_information - merged.total_information).abs() <= tol);
    }

    #[test]
    fn corpus_totals_ignore_order(mut recs in prop::collection::vec(record(), 1..40), seed in any::<u64>()) {
        let before = summarize_corpus(&recs).unwrap();
        let n = recs.len();
        recs.rotate_left((seed % n as u64) as usize);
        recs.reverse();
        let after = summarize_corpus(&recs).unwrap();
        prop_assert_eq!(before.total_tokens, after.total_tokens);
        prop_assert!((before.total_information - after.total_information).abs() <= 1e-9 * before.total_information.max(1.0));
        let sizes: Vec<u64> = recs.iter().map(|r| r.t).collect();
        let mut sorted = sizes.clone();
        sorted.sort_unstable();
        prop_assert_eq!(build_ccdf(&sizes, Measure::Tokens).unwrap(), build_ccdf(&sorted, Measure::Tokens).unwrap());
    }

    #[test]
    fn ccdf_matches_brute_force(sizes in prop::collection::vec(1u64..500, 1..200)) {
        let ccdf = build_ccdf(&sizes, Measure::Tokens).unwrap();
        prop_assert_eq!(ccdf.points[0].count, sizes.len() as u64);
        for w in ccdf.points.windows(2) {
            prop_assert!(w[0].s < w[1].s);
            prop_assert!(w[0].count > w[1].count);
        }
        for p in &ccdf.points {
            prop_assert_eq!(p.count, sizes.iter().filter(|&&s| s >= p.s).count() as u64);
        }
    }

    #[test]
    fn fitted_slope_is_scale_invariant(alpha in 0.2f64..3.0, c in 0.01f64..100.0, k in 1.0f64..50.0) {
        let s: Vec<f64> = (1..=40).map(|i| 10.0 * i as f64).collect();
        let noise = |i: usize| 0.05 * ((i * 7919 % 13) as f64 - 6.0) / 6.0;
        let y: Vec<f64> = s.iter().enumerate().map(|(i, x)| -alpha * x.ln() + noise(i)).collect();
        let base = ols(&s.iter().map(|x| x.ln()).collect::<Vec<_>>(), &y).unwrap();
        let shifted_y: Vec<f64> = y.iter().map(|v| v + c.ln()).collect();
        let scaled_x: Vec<f64> = s.iter().map(|x| (k * x).ln()).collect();
        let other = ols(&scaled_x, &shifted_y).unwrap();
        prop_assert!((base.slope - other.slope).abs() < 1e-9);
        prop_assert!((base.r_squared - other.r_squared).abs() < 1e-9);
    }

    #[test]
    fn p_value_falls_as_t_grows(t in 0.0f64..30.0, dt in 0.01f64..5.0, df in 1u32..500) {
        let df = f64::from(df);
        prop_assert!(student_t_two_sided(t + dt, df) <= student_t_two_sided(t, df));
        prop_assert!(student_t_two_sided(-t, df) == student_t_two_sided(t, df));
    }

    #[test]
    fn boltzmann_weights_are_normalized(
        eps in prop::collection::vec(0.0f64..8.0, 1..50),
        beta in 0.0f64..4.0,
        t in 1u64..1_000_000,
    ) {
        let eq = boltzmann_equilibrium(&EnsembleSystem::new(t, eps, beta).unwrap());
        prop_assert!((eq.p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!((eq.t_star.iter().sum::<f64>() - t as f64).abs() <= 1e-9 * t as f64);
    }

    #[test]
    fn exact_distribution_is_normalized(a in prop::collection::vec(1u64..20, 1..4), beta in 0.0f64..3.0, t in 1u64..25) {
        let system = EnsembleSystem::from_alphabet_sizes(t, &a, beta).unwrap();
        let exact = enumerate_exact(&system, 1_000_000, Execution::Sequential).unwrap();
        prop_assert!((exact.probabilities.values().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(exact.probabilities.keys().all(|s| s.total() == t));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sampling_is_determined_by_seed(seed in any::<u64>(), beta in 0.0f64..3.0) {
        let system = EnsembleSystem::from_alphabet_sizes(50, &[2, 3, 5, 7], beta).unwrap();
        let config = SamplerConfig::new(20_000, seed);
        prop_assert_eq!(metropolis_sample(&system, &config).unwrap(), metropolis_sample(&system, &config).unwrap());
        let seq = metropolis_chains(&system, &config, 3, Execution::Sequential).unwrap();
        let par = metropolis_chains(&system, &config, 3, Execution::Parallel).unwrap();
        prop_assert_eq!(seq, par);
    }
}

#[test]
fn enumeration_does_not_depend_on_execution() {
    let system = EnsembleSystem::from_alphabet_sizes(40, &[2, 4, 8, 16], 1.5).unwrap();
    let seq = enumerate_exact(&system, 1_000_000, Execution::Sequential).unwrap();
    let par = enumerate_exact(&system, 1_000_000, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
}
