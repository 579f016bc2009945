//! Randomized property checks shared by the property tests and the
//! acceptance target. Each runs at least `CASES` generated cases and returns
//! the shrunk counterexample on failure.

#![allow(dead_code)]

use geodetect::graph::{load_edge_list, save_edge_list};
use geodetect::inference::estimate_k;
use geodetect::oracle::{naive_localized, naive_triangles, naive_weighted_triangles};
use geodetect::weights::{load_weights, render_weights, save_weights};
use geodetect::*;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

pub const CASES: u32 = 100;

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

/// Small model parameters under either hypothesis.
pub fn small_params() -> impl Strategy<Value = ModelParams> {
    (
        20usize..160,
        0usize..40,
        prop_oneof![Just(2.2), Just(2.5), Just(2.9)],
        prop_oneof![Just(1.0), Just(2.0), Just(4.0)],
        1usize..4,
        prop_oneof![Just(Gamma::Finite(3.0)), Just(Gamma::Finite(5.0)), Just(Gamma::Infinite)],
        any::<u64>(),
        any::<bool>(),
    )
        .prop_map(|(n, k, tau, w0, d, gamma, seed, quantile)| {
            let mode = if quantile {
                WeightMode::DeterministicQuantile
            } else {
                WeightMode::IidPareto
            };
            ModelParams::new(n, tau, w0)
                .with_k(k.min(n))
                .with_geometry(d, gamma)
                .with_seed(seed)
                .with_weight_mode(mode)
        })
}

fn run<S, F>(cases: u32, strategy: S, test: F) -> Result<(), String>
where
    S: Strategy,
    S::Value: std::fmt::Debug,
    F: Fn(S::Value) -> Result<(), TestCaseError>,
{
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

/// Generated graphs are simple, symmetric and sorted, with ids in range.
pub fn simplicity(cases: u32) -> Result<(), String> {
    run(cases, small_params(), |p| {
        let s = Sample::generate(&p).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(s.graph.n(), p.n);
        prop_assert!(s.graph.validate().is_ok(), "{:?}", s.graph.validate());
        let edges: Vec<(u32, u32)> = s.graph.edges().collect();
        prop_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(edges.iter().all(|&(u, v)| u < v && (v as usize) < p.n));
        for &(u, v) in &edges {
            prop_assert!(s.graph.has_edge(v as usize, u as usize));
        }
        Ok(())
    })
}

/// `sum_a w_a W(a) = 3 n W(G)` for any weights, and the squared-weight form
/// on unit weights, both to relative `1e-12`.
pub fn corner_identity(cases: u32) -> Result<(), String> {
    run(cases, (small_params(), any::<bool>()), |(p, unit)| {
        let s = Sample::generate(&p).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let ws = if unit {
            WeightSequence::from_values(vec![1.0; p.n], p.tau, 1.0).unwrap()
        } else {
            s.weights.clone()
        };
        let stats = triangle_statistics(&s.graph, &ws).unwrap();
        let n = p.n as f64;
        let lhs: f64 = ws.values().iter().zip(&stats.per_vertex).map(|(w, x)| w * x).sum();
        let rhs = 3.0 * n * stats.w_global;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300), "{lhs} vs {rhs}");
        if unit {
            let sq: f64 = ws.values().iter().zip(&stats.per_vertex).map(|(w, x)| w * w * x).sum();
            prop_assert!((sq - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300), "{sq} vs {rhs}");
        }
        Ok(())
    })
}

fn ident_inputs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3usize..200).prop_flat_map(|n| {
        (
            prop::collection::vec(1.0f64..500.0, n),
            prop::collection::vec(0.0f64..5_000.0, n),
        )
    })
}

/// Raising the constant shrinks the identified set; raising `t_n` shrinks
/// the restricted set.
pub fn identification_monotonicity(cases: u32) -> Result<(), String> {
    let strategy = (ident_inputs(), 1e-3f64..10.0, 1.0f64..20.0, 1.0f64..50.0, 1.0f64..50.0);
    run(cases, strategy, |((w, stat), c, factor, t1, t2)| {
        let ws = WeightSequence::from_values(w, 2.5, 1.0).unwrap();
        let n = ws.len();
        let (lo, hi) = (t1.min(t2), t1.max(t2));
        let a = identify(&stat, &ws, n, c, lo, None).unwrap();
        let b = identify(&stat, &ws, n, c * factor, lo, None).unwrap();
        prop_assert!(b.identified.iter().all(|v| a.identified.contains(v)));
        let r = identify(&stat, &ws, n, c, hi, None).unwrap();
        prop_assert!(r.restricted.iter().all(|v| a.restricted.contains(v)));
        prop_assert_eq!(&r.identified, &a.identified);
        Ok(())
    })
}

/// Graph and weights files read back to the values that were written.
pub fn save_load_round_trip(cases: u32) -> Result<(), String> {
    run(cases, small_params(), |p| {
        let s = Sample::generate(&p).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let gp = dir.path().join("g.edges");
        let wp = dir.path().join("w.tsv");
        save_edge_list(&s.graph, &gp, Some(&p.canonical())).unwrap();
        save_weights(&wp, &s.render_weights()).unwrap();
        let g = load_edge_list(&gp, None).unwrap();
        prop_assert_eq!(&g, &s.graph);
        let file = load_weights(&wp).unwrap();
        prop_assert_eq!(file.values.len(), p.n);
        for (a, b) in file.values.iter().zip(s.weights.values()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        prop_assert_eq!(file.community().map(|c| c.len()).unwrap_or(0), p.k);
        if let Some(truth) = s.render_ground_truth() {
            let tp = dir.path().join("t.tsv");
            save_weights(&tp, &truth).unwrap();
            let t = load_weights(&tp).unwrap();
            let rendered = render_weights(
                &t.values,
                t.types.as_deref(),
                Some(&|v: usize| t.positions[v].clone()),
                t.header.as_deref().unwrap_or(""),
            );
            prop_assert_eq!(rendered, truth);
        }
        Ok(())
    })
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

/// Generation and statistics give identical bits with 1 and 4 threads.
pub fn thread_determinism(cases: u32) -> Result<(), String> {
    run(cases, small_params(), |p| {
        let go = || {
            let s = Sample::generate(&p).unwrap();
            let st = triangle_statistics(&s.graph, &s.weights).unwrap();
            (s.graph, st.w_global.to_bits(), st.per_vertex.iter().map(|x| x.to_bits()).collect::<Vec<_>>())
        };
        let one = in_pool(1, go);
        let four = in_pool(4, go);
        prop_assert!(one == four);
        Ok(())
    })
}

/// Fast enumeration, `W(G)` and every `W(a)` equal the naive versions.
pub fn enumeration_vs_naive(cases: u32) -> Result<(), String> {
    run(cases, small_params(), |p| {
        let s = Sample::generate(&p).unwrap();
        prop_assert_eq!(enumerate_triangles(&s.graph), naive_triangles(&s.graph).unwrap());
        let fast = weighted_triangles(&s.graph, &s.weights).unwrap();
        let slow = naive_weighted_triangles(&s.graph, &s.weights).unwrap();
        prop_assert_eq!(fast.to_bits(), slow.to_bits());
        let all = all_localized(&s.graph, &s.weights).unwrap();
        for a in 0..p.n {
            let single = localized_weighted_triangles(&s.graph, &s.weights, a).unwrap();
            let naive = naive_localized(&s.graph, &s.weights, a).unwrap();
            prop_assert_eq!(all[a].to_bits(), single.to_bits(), "vertex {}", a);
            prop_assert_eq!(all[a].to_bits(), naive.to_bits(), "vertex {}", a);
        }
        Ok(())
    })
}

/// `k^_m` grows with `X_(m)` and the test never flips from reject to keep as
/// `W` grows.
pub fn estimator_and_detection_monotonicity(cases: u32) -> Result<(), String> {
    let strategy = (
        prop::collection::vec(1.0f64..1e4, 1..40),
        1.0f64..3.0,
        2.05f64..2.95,
        0.0f64..50.0,
        0.0f64..50.0,
        3usize..1_000_000,
    );
    run(cases, strategy, |(xs, scale, tau, w1, w2, n)| {
        let m = xs.len();
        let a = estimate_k(&xs, tau, m).unwrap();
        let bigger: Vec<f64> = xs.iter().map(|x| x * scale).collect();
        let b = estimate_k(&bigger, tau, m).unwrap();
        for (x, y) in a.estimates.iter().zip(&b.estimates) {
            prop_assert!(y >= x);
        }
        prop_assert!(a.order_stats.windows(2).all(|w| w[0] >= w[1]));
        let (lo, hi) = (w1.min(w2), w1.max(w2));
        let dl = detect(lo, n, FMode::LogN).unwrap();
        let dh = detect(hi, n, FMode::LogN).unwrap();
        if dl.decision == Decision::RejectH0 {
            prop_assert_eq!(dh.decision, Decision::RejectH0);
        }
        Ok(())
    })
}
