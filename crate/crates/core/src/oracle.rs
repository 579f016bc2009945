//! Brute-force and Monte Carlo verifiers.
//!
//! Nothing here calls the fast enumeration or skip sampling paths it is meant
//! to check: triangles come from dense triple loops, graphs from per-pair coin
//! flips, and all randomness is drawn from the oracle seed domain.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{connection_prob, torus_distance_raw, Gamma, ModelParams, PairContext};
use crate::graph::Graph;
use crate::rng::{self, Domain};
use crate::sum::CompensatedSum;
use crate::weights::{generate_weights, VertexType, WeightSequence};

/// Two-sided z threshold used by every statistical check.
pub const Z_THRESHOLD: f64 = 3.0;

pub const NAIVE_TRIANGLE_LIMIT: usize = 2000;
pub const EXACT_MEAN_LIMIT: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    pub stderr: f64,
    pub z_score: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl OracleReport {
    fn z_test(name: impl Into<String>, observed: f64, expected: f64, stderr: f64) -> Self {
        let z = if stderr > 0.0 {
            (observed - expected) / stderr
        } else if observed == expected {
            0.0
        } else {
            f64::INFINITY
        };
        Self {
            name: name.into(),
            observed,
            expected,
            stderr,
            z_score: z,
            pass: z.abs() <= Z_THRESHOLD,
            detail: String::new(),
        }
    }

    fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

fn guard(what: &'static str, value: usize, limit: usize) -> Result<()> {
    if value > limit {
        return Err(Error::Guard { what, value, limit });
    }
    Ok(())
}

/// Dense adjacency matrix, row-major.
struct Dense {
    n: usize,
    bits: Vec<bool>,
}

impl Dense {
    fn new(g: &Graph) -> Self {
        let n = g.n();
        let mut bits = vec![false; n * n];
        for u in 0..n {
            for &v in g.neighbors(u) {
                bits[u * n + v as usize] = true;
            }
        }
        Self { n, bits }
    }

    #[inline]
    fn adj(&self, u: usize, v: usize) -> bool {
        self.bits[u * self.n + v]
    }
}

/// All triangles by the `O(n^3)` triple loop over `a < b < c`.
pub fn naive_triangles(g: &Graph) -> Result<Vec<[u32; 3]>> {
    guard("n", g.n(), NAIVE_TRIANGLE_LIMIT)?;
    let d = Dense::new(g);
    let n = g.n();
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if !d.adj(a, b) {
                continue;
            }
            for c in b + 1..n {
                if d.adj(a, c) && d.adj(b, c) {
                    out.push([a as u32, b as u32, c as u32]);
                }
            }
        }
    }
    Ok(out)
}

pub fn naive_triangle_count(g: &Graph) -> Result<usize> {
    naive_triangles(g).map(|t| t.len())
}

/// `W(G)` by the triple loop, with per-`a` compensated partial sums combined
/// in index order.
pub fn naive_weighted_triangles(g: &Graph, ws: &WeightSequence) -> Result<f64> {
    guard("n", g.n(), NAIVE_TRIANGLE_LIMIT)?;
    let d = Dense::new(g);
    let w = ws.values();
    let n = g.n();
    let mut total = CompensatedSum::new();
    for a in 0..n {
        let mut part = CompensatedSum::new();
        let mut any = false;
        for b in a + 1..n {
            if !d.adj(a, b) {
                continue;
            }
            for c in b + 1..n {
                if d.adj(a, c) && d.adj(b, c) {
                    part.add(1.0 / (w[a] * w[b] * w[c]));
                    any = true;
                }
            }
        }
        if any {
            total.add(part.value());
        }
    }
    Ok(total.value())
}

/// `W(a)` by a double loop over all pairs `b < c`.
pub fn naive_localized(g: &Graph, ws: &WeightSequence, a: usize) -> Result<f64> {
    guard("n", g.n(), NAIVE_TRIANGLE_LIMIT)?;
    let d = Dense::new(g);
    let w = ws.values();
    let n = g.n();
    let mut acc = CompensatedSum::new();
    for b in 0..n {
        if b == a || !d.adj(a, b) {
            continue;
        }
        for c in b + 1..n {
            if c != a && d.adj(a, c) && d.adj(b, c) {
                acc.add(1.0 / (w[b] * w[c]));
            }
        }
    }
    Ok(n as f64 / (w[a] * w[a]) * acc.value())
}

/// Exact null-model mean of `W` (unordered triangles):
/// `sum_{a<b<c} p_ab p_bc p_ac / (w_a w_b w_c)` with `p = min(w w / (mu n), 1)`.
pub fn exact_expected_w_h0(ws: &WeightSequence, mu: f64) -> Result<f64> {
    let n = ws.len();
    guard("n", n, EXACT_MEAN_LIMIT)?;
    let w = ws.values();
    let scale = mu * n as f64;
    let p = |i: usize, j: usize| (w[i] * w[j] / scale).min(1.0);
    let partials: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|a| {
            let mut acc = CompensatedSum::new();
            for b in a + 1..n {
                let pab = p(a, b);
                for c in b + 1..n {
                    acc.add(pab * p(b, c) * p(a, c) / (w[a] * w[b] * w[c]));
                }
            }
            acc.value()
        })
        .collect();
    Ok(partials.into_iter().collect::<CompensatedSum>().value())
}

/// Null-model graph by one coin flip per pair.
pub fn naive_sample_h0(ws: &WeightSequence, params: &ModelParams, seed: u64) -> Result<Graph> {
    guard("n", ws.len(), 20_000)?;
    let n = ws.len();
    let edges: Vec<(u32, u32)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut r = rng::stream(seed, Domain::Oracle, i as u64);
            let wi = ws.get(i);
            let mut out = Vec::new();
            for j in i + 1..n {
                if r.gen::<f64>() < connection_prob(wi, ws.get(j), PairContext::H0, params) {
                    out.push((i as u32, j as u32));
                }
            }
            out.into_iter()
        })
        .collect();
    Graph::from_edge_list(n, edges)
}

/// Exact position-averaged probability that two community vertices connect.
///
/// With `r0 = 2^d w_i w_j / (mu k)` the volume of the sup-norm ball of radius
/// `r <= 1/2` is `(2r)^d`, so averaging the kernel over the torus gives
/// `(gamma r0 - r0^gamma) / (gamma - 1)` for `r0 < 1` (just `r0` for the
/// threshold rule) and `1` otherwise, times the correction factor.
pub fn marginal_prob_closed_form(w_i: f64, w_j: f64, params: &ModelParams) -> f64 {
    let r0 = 2f64.powi(params.d as i32) * w_i * w_j / (params.mu() * params.k as f64);
    let avg = if r0 >= 1.0 {
        1.0
    } else {
        match params.gamma {
            Gamma::Infinite => r0,
            Gamma::Finite(g) => (g * r0 - r0.powf(g)) / (g - 1.0),
        }
    };
    params.correction_factor() * avg
}

/// Monte Carlo mean of the community kernel over uniform positions.
fn mc_marginal(w_i: f64, w_j: f64, params: &ModelParams, replicas: usize, seed: u64) -> (f64, f64) {
    let d = params.d;
    let chunk = 1024;
    let chunks = replicas.div_ceil(chunk);
    let parts: Vec<(CompensatedSum, CompensatedSum, usize)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng::stream(seed, Domain::Oracle, (1 << 40) + c as u64);
            let mut s = CompensatedSum::new();
            let mut s2 = CompensatedSum::new();
            let count = chunk.min(replicas - c * chunk);
            let mut x = vec![0.0; d];
            let mut y = vec![0.0; d];
            for _ in 0..count {
                x.iter_mut().for_each(|v| *v = r.gen());
                y.iter_mut().for_each(|v| *v = r.gen());
                let dist = torus_distance_raw(&x, &y);
                let p = connection_prob(w_i, w_j, PairContext::H1Geo { dist }, params);
                s.add(p);
                s2.add(p * p);
            }
            (s, s2, count)
        })
        .collect();
    let mut s = CompensatedSum::new();
    let mut s2 = CompensatedSum::new();
    for (a, b, _) in &parts {
        s.add(a.value());
        s2.add(b.value());
    }
    let r = replicas as f64;
    let mean = s.value() / r;
    let var = (s2.value() / r - mean * mean).max(0.0) * r / (r - 1.0);
    (mean, (var / r).sqrt())
}

/// Monte Carlo check of the community-pair marginal connection probability
/// against its closed form. In the supercritical regime
/// `w_i w_j / k >= mu / 2^d` the expected value is exactly `1 / (1 + C1)`.
pub fn check_marginal_prob(
    w_i: f64,
    w_j: f64,
    params: &ModelParams,
    replicas: usize,
    seed: u64,
) -> Result<OracleReport> {
    params.validate()?;
    if replicas < 10_000 {
        return Err(Error::invalid("replicas", "at least 10^4 required"));
    }
    if params.k == 0 {
        return Err(Error::invalid("k", "community pairs need k >= 1"));
    }
    let supercritical = w_i * w_j / params.k as f64 >= params.mu() / 2f64.powi(params.d as i32);
    let expected = if supercritical {
        params.correction_factor()
    } else {
        marginal_prob_closed_form(w_i, w_j, params)
    };
    let (mean, se) = mc_marginal(w_i, w_j, params, replicas, seed);
    let regime = if supercritical { "supercritical" } else { "subcritical" };
    // The supercritical kernel is constant, so the sample has zero variance;
    // use the Bernoulli standard error of the constant instead.
    let se = if se > 0.0 {
        se
    } else {
        (expected * (1.0 - expected) / replicas as f64).sqrt()
    };
    Ok(
        OracleReport::z_test(format!("marginal_prob[{regime} gamma={} w_i={w_i} w_j={w_j}]", params.gamma), mean, expected, se)
            .with_detail(format!("gamma={} d={} k={}", params.gamma, params.d, params.k)),
    )
}

/// Linearity of the subcritical marginal in `w_i w_j / k`: least-squares fit
/// through a grid of products, passing when `R^2 >= 0.99`.
pub fn check_marginal_linearity(
    params: &ModelParams,
    products: &[f64],
    replicas: usize,
    seed: u64,
) -> Result<OracleReport> {
    params.validate()?;
    if products.len() < 3 {
        return Err(Error::invalid("products", "need at least three grid points"));
    }
    let limit = params.mu() * params.k as f64 / 2f64.powi(params.d as i32);
    if let Some(p) = products.iter().find(|&&p| p >= limit) {
        return Err(Error::invalid(
            "products",
            format!("{p} is not subcritical (limit {limit})"),
        ));
    }
    let points: Vec<(f64, f64)> = products
        .iter()
        .enumerate()
        .map(|(i, &prod)| {
            let (mean, _) = mc_marginal(prod.sqrt(), prod.sqrt(), params, replicas, seed ^ (i as u64 + 1));
            (prod / params.k as f64, mean)
        })
        .collect();
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 0.0 };
    Ok(OracleReport {
        name: "marginal_prob[subcritical linearity]".into(),
        observed: r2,
        expected: 0.99,
        stderr: 0.0,
        z_score: 0.0,
        pass: r2 >= 0.99,
        detail: format!("fitted slope {slope:.6} over {} grid points", points.len()),
    })
}

/// A vertex whose expected degree is probed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub weight: f64,
    /// `A` under the null model, or either type under the alternative.
    pub vertex_type: VertexType,
}

/// Exact expected degree of a probe in the configuration used by
/// [`check_expected_degrees`], from the pairwise rules and the closed-form
/// community marginal.
pub fn exact_expected_degree(
    probe: Probe,
    others_rest: &[f64],
    others_community: &[f64],
    params: &ModelParams,
) -> f64 {
    let mut acc = CompensatedSum::new();
    let h1 = params.k > 0;
    for &w in others_rest {
        let ctx = if h1 && probe.vertex_type == VertexType::B {
            PairContext::H1NonGeo
        } else {
            PairContext::H0
        };
        acc.add(connection_prob(probe.weight, w, ctx, params));
    }
    for &w in others_community {
        let p = match probe.vertex_type {
            VertexType::A => connection_prob(probe.weight, w, PairContext::H1NonGeo, params),
            VertexType::B => marginal_prob_closed_form(probe.weight, w, params),
        };
        acc.add(p);
    }
    acc.value()
}

/// The other vertices seen by a probe: under the null model all `n - 1`
/// null weights; under the alternative, `n - k` type-A and `k` type-B weights
/// minus the slot the probe occupies.
fn probe_neighborhood(params: &ModelParams, probe: Probe) -> Result<(Vec<f64>, Vec<f64>)> {
    let mode = params.weight_mode;
    if params.k == 0 {
        let mut rest = generate_weights(params.n, params.tau, params.w0, mode, params.seed)?
            .values()
            .to_vec();
        remove_closest(&mut rest, probe.weight);
        return Ok((rest, Vec::new()));
    }
    let mut rest =
        generate_weights(params.n - params.k, params.tau, params.w0, mode, params.seed)?.values().to_vec();
    let mut community =
        generate_weights(params.k, params.tau, params.w0, mode, params.seed ^ 0x9e37_79b9)?.values().to_vec();
    match probe.vertex_type {
        VertexType::A => remove_closest(&mut rest, probe.weight),
        VertexType::B => remove_closest(&mut community, probe.weight),
    }
    Ok((rest, community))
}

fn remove_closest(values: &mut Vec<f64>, target: f64) {
    if let Some((i, _)) = values
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
    {
        values.swap_remove(i);
    }
}

/// Monte Carlo expected degree of each probe, compared to its weight with a
/// `+-10%` band for the `o(1)` term plus `3` standard errors:
/// pass iff `|mean - w| <= 0.1 w + 3 SE`. The z-score is measured from the
/// nearest band edge (negative inside the band).
pub fn check_expected_degrees(
    params: &ModelParams,
    probes: &[Probe],
    replicas: usize,
    seed: u64,
) -> Result<Vec<OracleReport>> {
    params.validate()?;
    if replicas < 100 {
        return Err(Error::invalid("replicas", "at least 100 required"));
    }
    probes
        .iter()
        .enumerate()
        .map(|(pi, &probe)| {
            if params.k == 0 && probe.vertex_type == VertexType::B {
                return Err(Error::invalid("probes", "type-B probe under the null model"));
            }
            let (rest, community) = probe_neighborhood(params, probe)?;
            let exact = exact_expected_degree(probe, &rest, &community, params);
            let degrees: Vec<f64> = (0..replicas)
                .into_par_iter()
                .map(|rep| {
                    let idx = ((pi as u64) << 32) | rep as u64;
                    let mut r = rng::stream(seed, Domain::Oracle, idx);
                    probe_degree(probe, &rest, &community, params, &mut r) as f64
                })
                .collect();
            let rf = replicas as f64;
            let mean = degrees.iter().sum::<f64>() / rf;
            let var = degrees.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (rf - 1.0);
            let se = (var / rf).sqrt();
            let slack = 0.1 * probe.weight;
            let excess = (mean - probe.weight).abs() - slack;
            let z = if se > 0.0 { excess / se } else { excess.signum() * f64::INFINITY };
            let hyp = if params.k == 0 { "H0" } else { "H1" };
            Ok(OracleReport {
                name: format!(
                    "expected_degree[{hyp} type-{} w={}{}]",
                    probe.vertex_type.as_str(),
                    probe.weight,
                    if params.correction { "" } else { " uncorrected" }
                ),
                observed: mean,
                expected: probe.weight,
                stderr: se,
                z_score: z,
                pass: excess <= Z_THRESHOLD * se,
                detail: format!("exact expectation {exact:.4}; band +-{slack}"),
            })
        })
        .collect()
}

/// One realization of the probe's degree: fresh positions for every
/// community vertex, one coin flip per pair.
fn probe_degree<R: Rng>(
    probe: Probe,
    rest: &[f64],
    community: &[f64],
    params: &ModelParams,
    r: &mut R,
) -> usize {
    let h1 = params.k > 0;
    let mut degree = 0;
    let rest_ctx = if h1 && probe.vertex_type == VertexType::B {
        PairContext::H1NonGeo
    } else {
        PairContext::H0
    };
    for &w in rest {
        if r.gen::<f64>() < connection_prob(probe.weight, w, rest_ctx, params) {
            degree += 1;
        }
    }
    match probe.vertex_type {
        VertexType::A => {
            for &w in community {
                if r.gen::<f64>() < connection_prob(probe.weight, w, PairContext::H1NonGeo, params) {
                    degree += 1;
                }
            }
        }
        VertexType::B => {
            let d = params.d;
            let own: Vec<f64> = (0..d).map(|_| r.gen()).collect();
            let mut other = vec![0.0; d];
            for &w in community {
                other.iter_mut().for_each(|v| *v = r.gen());
                let dist = torus_distance_raw(&own, &other);
                if r.gen::<f64>() < connection_prob(probe.weight, w, PairContext::H1Geo { dist }, params) {
                    degree += 1;
                }
            }
        }
    }
    degree
}

/// Per-vertex mean degrees of the skip sampler against the per-pair coin-flip
/// sampler over `replicas` draws each. Passes when the largest two-sample
/// |z| across vertices stays under a Bonferroni bound at the 1% level.
pub fn check_sampler_degrees(
    ws: &WeightSequence,
    params: &ModelParams,
    replicas: usize,
) -> Result<OracleReport> {
    let n = ws.len();
    guard("n", n, NAIVE_TRIANGLE_LIMIT)?;
    let mut fast = vec![(0.0, 0.0); n];
    let mut slow = vec![(0.0, 0.0); n];
    for rep in 0..replicas {
        let mut p = params.clone();
        p.seed = rng::replica_seed(params.seed, rep as u64);
        let g = crate::generators::sample_h0(ws, &p)?;
        let h = naive_sample_h0(ws, params, p.seed)?;
        for v in 0..n {
            let (a, b) = (g.degree(v) as f64, h.degree(v) as f64);
            fast[v].0 += a;
            fast[v].1 += a * a;
            slow[v].0 += b;
            slow[v].1 += b * b;
        }
    }
    let r = replicas as f64;
    let mut worst: f64 = 0.0;
    let mut worst_v = 0;
    for v in 0..n {
        let (mf, ms) = (fast[v].0 / r, slow[v].0 / r);
        let vf = (fast[v].1 / r - mf * mf).max(0.0);
        let vs = (slow[v].1 / r - ms * ms).max(0.0);
        let se = ((vf + vs) / r).sqrt();
        if se > 0.0 {
            let z = ((mf - ms) / se).abs();
            if z > worst {
                worst = z;
                worst_v = v;
            }
        }
    }
    let bound = bonferroni_z(0.01, n);
    Ok(OracleReport {
        name: "skip_sampler_vs_naive_degrees".into(),
        observed: worst,
        expected: 0.0,
        stderr: 1.0,
        z_score: worst,
        pass: worst <= bound,
        detail: format!("max |z| at vertex {worst_v}; Bonferroni bound {bound:.3} over {n} vertices"),
    })
}

/// Two-sided normal quantile for family-wise level `alpha` over `m` tests,
/// by bisection on the complementary error function.
fn bonferroni_z(alpha: f64, m: usize) -> f64 {
    let target = alpha / m as f64;
    let (mut lo, mut hi) = (0.0f64, 10.0f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if libm::erfc(mid / std::f64::consts::SQRT_2) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Monte Carlo mean of `W` under the null model against the exact mean.
pub fn check_h0_mean(ws: &WeightSequence, params: &ModelParams, replicas: usize) -> Result<OracleReport> {
    let expected = exact_expected_w_h0(ws, params.mu())?;
    let values: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|rep| {
            let mut p = params.clone();
            p.seed = rng::replica_seed(params.seed, rep as u64);
            let g = crate::generators::sample_h0(ws, &p)?;
            crate::triangles::weighted_triangles(&g, ws)
        })
        .collect::<Result<_>>()?;
    let r = replicas as f64;
    let mean = values.iter().sum::<f64>() / r;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
    Ok(OracleReport::z_test("h0_mean_W", mean, expected, (var / r).sqrt())
        .with_detail(format!("n={} replicas={replicas} sample variance {var:.6}", ws.len())))
}

/// Graphs on which fast and naive triangle computations are compared.
pub fn check_triangle_equivalence(graphs: &[(Graph, WeightSequence)]) -> Result<OracleReport> {
    let mut mismatches = Vec::new();
    for (i, (g, ws)) in graphs.iter().enumerate() {
        let fast = crate::triangles::enumerate_triangles(g);
        let slow = naive_triangles(g)?;
        let wf = crate::triangles::weighted_triangles(g, ws)?;
        let wn = naive_weighted_triangles(g, ws)?;
        if fast != slow || wf.to_bits() != wn.to_bits() {
            mismatches.push(i);
        }
    }
    Ok(OracleReport {
        name: "triangle_enumeration_vs_naive".into(),
        observed: mismatches.len() as f64,
        expected: 0.0,
        stderr: 0.0,
        z_score: 0.0,
        pass: mismatches.is_empty(),
        detail: format!("{} graphs; mismatching indices {mismatches:?}", graphs.len()),
    })
}

/// Degree probes at `w in {10, 30, 100}`: type-A under the null model, both
/// types under the alternative.
pub fn standard_probes(h1: bool) -> Vec<Probe> {
    let types: &[VertexType] = if h1 { &[VertexType::A, VertexType::B] } else { &[VertexType::A] };
    types
        .iter()
        .flat_map(|&t| {
            [10.0, 30.0, 100.0].map(|weight| Probe {
                weight,
                vertex_type: t,
            })
        })
        .collect()
}

/// Configuration of the degree and marginal checks: `n = 2e5`, `k = 1e4`,
/// `tau = 2.5`, `d = 2`, `gamma = 5`, quantile weights.
pub fn degree_check_params(seed: u64) -> ModelParams {
    ModelParams::new(200_000, 2.5, 1.0)
        .with_k(10_000)
        .with_seed(seed)
        .with_weight_mode(crate::weights::WeightMode::DeterministicQuantile)
}

/// The degree check with the correction disabled, expected to fail for
/// type-B probes. Passes when every probe misses its band.
pub fn negative_control(seed: u64, replicas: usize) -> Result<OracleReport> {
    let mut params = degree_check_params(seed);
    params.correction = false;
    let probes: Vec<Probe> = standard_probes(true)
        .into_iter()
        .filter(|p| p.vertex_type == VertexType::B)
        .collect();
    let reports = check_expected_degrees(&params, &probes, replicas, seed)?;
    let failing = reports.iter().filter(|r| !r.pass).count();
    let worst = reports.iter().map(|r| r.z_score).fold(f64::INFINITY, f64::min);
    Ok(OracleReport {
        name: "expected_degree[negative control, correction disabled]".into(),
        observed: failing as f64,
        expected: reports.len() as f64,
        stderr: 0.0,
        z_score: worst,
        pass: failing == reports.len(),
        detail: reports
            .iter()
            .map(|r| format!("w={} mean={:.3}", r.expected, r.observed))
            .collect::<Vec<_>>()
            .join("; "),
    })
}

/// Small graphs under both hypotheses for the exact enumeration check:
/// `count` graphs with `n` from 60 up to 300.
pub fn equivalence_graphs(seed: u64, count: usize) -> Result<Vec<(Graph, WeightSequence)>> {
    (0..count)
        .map(|i| {
            let n = 60 + (240 * i) / count.max(1);
            let mut params = ModelParams::new(n, 2.5, 2.0).with_seed(rng::replica_seed(seed, i as u64));
            if i % 2 == 1 {
                params.k = n / 4;
            }
            let s = crate::generators::Sample::generate(&params)?;
            Ok((s.graph, s.weights))
        })
        .collect()
}

/// Every check the oracle layer offers, in a fixed order.
pub fn full_suite(seed: u64) -> Result<Vec<OracleReport>> {
    let mut out = Vec::new();
    out.push(check_triangle_equivalence(&equivalence_graphs(seed, 50)?)?);

    let params = ModelParams::new(300, 2.5, 1.0)
        .with_seed(seed)
        .with_weight_mode(crate::weights::WeightMode::DeterministicQuantile);
    let ws = generate_weights(300, 2.5, 1.0, params.weight_mode, seed)?;
    out.push(check_h0_mean(&ws, &params, 2000)?);

    let small = ModelParams::new(500, 2.5, 2.0).with_seed(seed);
    let ws = generate_weights(500, 2.5, 2.0, small.weight_mode, seed)?;
    out.push(check_sampler_degrees(&ws, &small, 200)?);

    let h1 = degree_check_params(seed);
    let h0 = h1.clone().with_k(0);
    out.extend(check_expected_degrees(&h0, &standard_probes(false), 200, seed)?);
    out.extend(check_expected_degrees(&h1, &standard_probes(true), 200, seed)?);
    out.push(negative_control(seed, 200)?);

    out.push(check_marginal_prob(150.0, 150.0, &h1, 20_000, seed)?);
    out.push(check_marginal_prob(10.0, 10.0, &h1, 20_000, seed)?);
    let threshold = h1.clone().with_geometry(2, Gamma::Infinite);
    out.push(check_marginal_prob(10.0, 10.0, &threshold, 20_000, seed)?);
    let grid = [10.0, 50.0, 100.0, 200.0, 400.0, 700.0, 1000.0];
    out.push(check_marginal_linearity(&h1, &grid, 20_000, seed)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(n: u32) -> Graph {
        Graph::from_edge_list(n as usize, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)))).unwrap()
    }

    #[test]
    fn naive_counts() {
        assert_eq!(naive_triangle_count(&complete(4)).unwrap(), 4);
        let c5 = Graph::from_edge_list(5, (0..5).map(|i| (i, (i + 1) % 5))).unwrap();
        assert_eq!(naive_triangle_count(&c5).unwrap(), 0);
        let big = Graph::from_edge_list(2001, []).unwrap();
        assert!(matches!(naive_triangles(&big), Err(Error::Guard { .. })));
    }

    #[test]
    fn exact_mean_small_cases() {
        let ws = WeightSequence::from_values(vec![1.0; 3], 2.5, 1.0).unwrap();
        let v = exact_expected_w_h0(&ws, 3.0).unwrap();
        assert!((v - (1.0f64 / 9.0).powi(3)).abs() < 1e-18);

        // Every pair capped at 1: mean = C(n, 3) / w^3.
        let ws = WeightSequence::from_values(vec![50.0; 10], 2.5, 1.0).unwrap();
        let v = exact_expected_w_h0(&ws, 3.0).unwrap();
        assert!((v - 120.0 / 125_000.0).abs() < 1e-15);

        let ws = WeightSequence::from_values(vec![1.0; 401], 2.5, 1.0).unwrap();
        assert!(exact_expected_w_h0(&ws, 3.0).is_err());
    }

    #[test]
    fn closed_form_marginal_regimes() {
        let p = ModelParams::new(10_000, 2.5, 1.0).with_k(300);
        // Supercritical: w_i w_j / k >= mu / 2^d.
        assert_eq!(marginal_prob_closed_form(30.0, 30.0, &p), 1.0 / 6.0);
        // Threshold rule: min(1, 2^d w_i w_j / (mu k)) / (1 + C1).
        let t = p.clone().with_geometry(2, Gamma::Infinite);
        let expected = (4.0 * 2.0 / 900.0) / 5.0;
        assert!((marginal_prob_closed_form(1.0, 2.0, &t) - expected).abs() < 1e-15);
    }

    #[test]
    fn bonferroni_quantile() {
        assert!((bonferroni_z(0.05, 1) - 1.959_964).abs() < 1e-4);
        assert!((bonferroni_z(0.05, 10) - 2.807_034).abs() < 1e-4);
    }
}
