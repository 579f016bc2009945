//! Null and planted-community graph samplers.
//!
//! Under the null hypothesis every pair `{i, j}` is an edge independently
//! with probability `min(w_i w_j / (mu n), 1)`. Under the alternative the
//! first `k` vertex ids form a community with uniform positions on the
//! `d`-dimensional torus. Community pairs connect through a geometric kernel
//! scaled by `k`; pairs with exactly one community endpoint use the null rule;
//! both are multiplied by `1 / (1 + C1)` with `C1 = (1 + 1/(gamma - 1)) 2^d`,
//! which keeps every expected degree at `w_i (1 + o(1))`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{self, Domain};
use crate::weights::{
    self, check_tau, check_w0, render_weights, VertexType, WeightMode, WeightSequence,
};

/// Decay exponent of the geometric kernel; `Infinite` is the threshold rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gamma {
    Finite(f64),
    Infinite,
}

impl Gamma {
    pub fn is_infinite(self) -> bool {
        matches!(self, Gamma::Infinite)
    }
}

impl fmt::Display for Gamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gamma::Finite(g) => write!(f, "{g}"),
            Gamma::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Gamma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "threshold" => Ok(Gamma::Infinite),
            other => {
                let g: f64 = other
                    .parse()
                    .map_err(|_| Error::invalid("gamma", format!("cannot parse `{s}`")))?;
                if g.is_infinite() && g > 0.0 {
                    Ok(Gamma::Infinite)
                } else {
                    Ok(Gamma::Finite(g))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    H0,
    H1,
}

/// Full model parameter record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    /// Community size; 0 means the null model.
    pub k: usize,
    pub tau: f64,
    pub w0: f64,
    pub d: usize,
    pub gamma: Gamma,
    pub seed: u64,
    pub sparse_mode: bool,
    pub weight_mode: WeightMode,
    /// Apply the `1 / (1 + C1)` correction. Disabling it is a debug switch.
    pub correction: bool,
}

impl ModelParams {
    /// Null-model parameters with `d = 2`, `gamma = 5` ready for a later `k`.
    pub fn new(n: usize, tau: f64, w0: f64) -> Self {
        Self {
            n,
            k: 0,
            tau,
            w0,
            d: 2,
            gamma: Gamma::Finite(5.0),
            seed: 0,
            sparse_mode: false,
            weight_mode: WeightMode::default(),
            correction: true,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_geometry(mut self, d: usize, gamma: Gamma) -> Self {
        self.d = d;
        self.gamma = gamma;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_weight_mode(mut self, mode: WeightMode) -> Self {
        self.weight_mode = mode;
        self
    }

    pub fn hypothesis(&self) -> Hypothesis {
        if self.k == 0 {
            Hypothesis::H0
        } else {
            Hypothesis::H1
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_tau(self.tau)?;
        check_w0(self.w0)?;
        if self.n == 0 {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        if self.n > u32::MAX as usize {
            return Err(Error::invalid("n", "must fit in 32 bits"));
        }
        if self.k > self.n {
            return Err(Error::invalid(
                "k",
                format!("community size {} exceeds n = {}", self.k, self.n),
            ));
        }
        if self.d == 0 {
            return Err(Error::invalid("d", "torus dimension must be at least 1"));
        }
        if let Gamma::Finite(g) = self.gamma {
            if !(g > 1.0 && g.is_finite()) {
                return Err(Error::invalid("gamma", format!("{g} must exceed 1")));
            }
        }
        Ok(())
    }

    /// `mu = w0 (tau - 1) / (tau - 2)`.
    pub fn mu(&self) -> f64 {
        self.w0 * (self.tau - 1.0) / (self.tau - 2.0)
    }

    /// `C1 = (1 + 1/(gamma - 1)) 2^d`; the threshold rule gives `2^d`.
    pub fn c1(&self) -> f64 {
        let scale = match self.gamma {
            Gamma::Finite(g) => 1.0 + 1.0 / (g - 1.0),
            Gamma::Infinite => 1.0,
        };
        scale * 2f64.powi(self.d as i32)
    }

    pub fn correction_factor(&self) -> f64 {
        if self.correction {
            1.0 / (1.0 + self.c1())
        } else {
            1.0
        }
    }

    /// Canonical one-line parameter string embedded in every output file.
    pub fn canonical(&self) -> String {
        format!(
            "n={} k={} tau={} w0={} d={} gamma={} seed={} sparse={} weight_mode={} correction={}",
            self.n,
            self.k,
            self.tau,
            self.w0,
            self.d,
            self.gamma,
            self.seed,
            self.sparse_mode,
            self.weight_mode.as_str(),
            self.correction
        )
    }
}

/// A point on the unit torus `[0, 1)^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint(Vec<f64>);

impl TorusPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(c) = coords.iter().find(|c| !(0.0..1.0).contains(*c)) {
            return Err(Error::invalid("coords", format!("{c} is outside [0, 1)")));
        }
        Ok(Self(coords))
    }

    /// Uniform position for `vertex`, fixed by `(seed, vertex)`.
    pub fn random(seed: u64, vertex: u64, d: usize) -> Self {
        let mut r = rng::stream(seed, Domain::Positions, vertex);
        Self((0..d).map(|_| r.gen::<f64>()).collect())
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

#[inline]
fn circular(a: f64, b: f64) -> f64 {
    let delta = (a - b).abs();
    delta.min(1.0 - delta)
}

#[inline]
pub(crate) fn torus_distance_raw(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| circular(a, b))
        .fold(0.0, f64::max)
}

/// Sup-norm distance on the torus: the largest per-coordinate circular
/// distance `min(|dx|, 1 - |dx|)`.
pub fn torus_distance(x: &TorusPoint, y: &TorusPoint) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    Ok(torus_distance_raw(&x.0, &y.0))
}

/// Which connection rule applies to a pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairContext {
    H0,
    H1NonGeo,
    H1Geo { dist: f64 },
    H1SparseGeo { dist: f64 },
}

#[inline]
fn kernel(ratio: f64, gamma: Gamma) -> f64 {
    if ratio >= 1.0 {
        return 1.0;
    }
    match gamma {
        Gamma::Infinite => 0.0,
        Gamma::Finite(g) if g.fract() == 0.0 && g <= 64.0 => ratio.powi(g as i32),
        Gamma::Finite(g) => ratio.powf(g),
    }
}

/// Connection probability of a pair with weights `(w_i, w_j)`.
///
/// Coincident positions in a geometric context give the capped value.
pub fn connection_prob(w_i: f64, w_j: f64, ctx: PairContext, params: &ModelParams) -> f64 {
    let mu = params.mu();
    let product = w_i * w_j;
    match ctx {
        PairContext::H0 => (product / (mu * params.n as f64)).min(1.0),
        PairContext::H1NonGeo => {
            params.correction_factor() * (product / (mu * params.n as f64)).min(1.0)
        }
        PairContext::H1Geo { dist } => {
            let vol = dist.powi(params.d as i32);
            let ratio = if vol > 0.0 {
                product / (mu * params.k as f64 * vol)
            } else {
                f64::INFINITY
            };
            params.correction_factor() * kernel(ratio, params.gamma)
        }
        PairContext::H1SparseGeo { dist } => {
            let vol = dist.powi(params.d as i32);
            let ratio = if vol > 0.0 {
                product / (mu * params.n as f64 * vol)
            } else {
                f64::INFINITY
            };
            kernel(ratio, params.gamma)
        }
    }
}

/// Community membership and positions of an alternative-model sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    k: usize,
    positions: Vec<TorusPoint>,
}

impl GroundTruth {
    pub fn k(&self) -> usize {
        self.k
    }

    /// The community is `0..k` by construction.
    pub fn community(&self) -> std::ops::Range<u32> {
        0..self.k as u32
    }

    pub fn is_community(&self, v: usize) -> bool {
        v < self.k
    }

    pub fn position(&self, v: usize) -> Option<&TorusPoint> {
        self.positions.get(v)
    }

    pub fn positions(&self) -> &[TorusPoint] {
        &self.positions
    }

    pub fn types(&self, n: usize) -> Vec<VertexType> {
        (0..n)
            .map(|v| {
                if self.is_community(v) {
                    VertexType::B
                } else {
                    VertexType::A
                }
            })
            .collect()
    }
}

/// Edge sampler for the weight-only rule `factor(u, v) * min(w_u w_v / scale, 1)`.
///
/// Vertices are visited in decreasing weight order; for each source the
/// envelope `min(w_u w_v / scale, 1)` is non-increasing along the order, so
/// candidates are reached by geometric jumps and thinned by
/// `factor * q / p`. Expected work is `O(n + edges of the envelope)`.
fn skip_sample<F>(weights: &[f64], scale: f64, seed: u64, factor: F) -> Vec<(u32, u32)>
where
    F: Fn(u32, u32) -> f64 + Sync,
{
    let n = weights.len();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by(|&a, &b| {
        weights[b as usize]
            .total_cmp(&weights[a as usize])
            .then(a.cmp(&b))
    });
    let sorted: Vec<f64> = order.iter().map(|&v| weights[v as usize]).collect();
    let envelope = |i: usize, j: usize| (sorted[i] * sorted[j] / scale).min(1.0);

    let mut edges: Vec<(u32, u32)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|ui| {
            let mut r = rng::stream(seed, Domain::Edges, ui as u64);
            let mut out = Vec::new();
            let mut vi = ui + 1;
            if vi >= n {
                return out.into_iter();
            }
            let mut p = envelope(ui, vi);
            while vi < n && p > 0.0 {
                if p < 1.0 {
                    let jump = rng::open_unit(&mut r).ln() / (-p).ln_1p();
                    if jump >= (n - vi) as f64 {
                        break;
                    }
                    vi += jump as usize;
                }
                let q = envelope(ui, vi);
                let (a, b) = (order[ui], order[vi]);
                let accept = factor(a, b) * q / p;
                if r.gen::<f64>() < accept {
                    out.push((a.min(b), a.max(b)));
                }
                p = q;
                vi += 1;
            }
            out.into_iter()
        })
        .collect();
    edges.par_sort_unstable();
    edges
}

/// Community-internal pairs, all `k (k - 1) / 2` of them, one uniform draw per pair.
fn community_edges(
    weights: &[f64],
    positions: &[TorusPoint],
    params: &ModelParams,
) -> Vec<(u32, u32)> {
    let k = positions.len();
    (0..k)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut r = rng::stream(params.seed, Domain::CommunityEdges, i as u64);
            let xi = positions[i].coords();
            let wi = weights[i];
            let mut out = Vec::new();
            for j in i + 1..k {
                let dist = torus_distance_raw(xi, positions[j].coords());
                let ctx = if params.sparse_mode {
                    PairContext::H1SparseGeo { dist }
                } else {
                    PairContext::H1Geo { dist }
                };
                let p = connection_prob(wi, weights[j], ctx, params);
                if r.gen::<f64>() < p {
                    out.push((i as u32, j as u32));
                }
            }
            out.into_iter()
        })
        .collect()
}

/// Samples the null model on `ws`.
pub fn sample_h0(ws: &WeightSequence, params: &ModelParams) -> Result<Graph> {
    params.validate()?;
    if ws.len() != params.n {
        return Err(Error::invalid(
            "weights",
            format!("length {} != n = {}", ws.len(), params.n),
        ));
    }
    let scale = params.mu() * params.n as f64;
    let edges = skip_sample(ws.values(), scale, params.seed, |_, _| 1.0);
    Ok(Graph::from_canonical(params.n, &edges))
}

/// Samples the alternative model. Community vertices get ids `0..k`.
pub fn sample_h1(
    ws_community: &WeightSequence,
    ws_rest: &WeightSequence,
    params: &ModelParams,
) -> Result<(Graph, GroundTruth)> {
    params.validate()?;
    let k = params.k;
    if k == 0 {
        return Err(Error::invalid(
            "k",
            "community size is 0; sample the null model with sample_h0 instead",
        ));
    }
    if ws_community.len() != k || ws_rest.len() != params.n - k {
        return Err(Error::invalid(
            "weights",
            format!(
                "expected {k} community and {} other weights, got {} and {}",
                params.n - k,
                ws_community.len(),
                ws_rest.len()
            ),
        ));
    }
    let mut weights = Vec::with_capacity(params.n);
    weights.extend_from_slice(ws_community.values());
    weights.extend_from_slice(ws_rest.values());

    let positions: Vec<TorusPoint> = (0..k)
        .into_par_iter()
        .map(|i| TorusPoint::random(params.seed, i as u64, params.d))
        .collect();

    let corrected = params.correction_factor();
    let k32 = k as u32;
    let scale = params.mu() * params.n as f64;
    // Pairs with both endpoints outside the community follow the null rule,
    // mixed pairs are corrected, and community pairs are sampled separately.
    let mut edges = skip_sample(&weights, scale, params.seed, |a, b| {
        match (a < k32, b < k32) {
            (true, true) => 0.0,
            (false, false) => 1.0,
            _ => corrected,
        }
    });
    edges.extend(community_edges(&weights, &positions, params));
    edges.par_sort_unstable();

    let graph = Graph::from_canonical(params.n, &edges);
    Ok((graph, GroundTruth { k, positions }))
}

/// A generated sample: weights, graph and (under the alternative) ground truth.
#[derive(Debug, Clone)]
pub struct Sample {
    pub params: ModelParams,
    pub weights: WeightSequence,
    pub graph: Graph,
    pub truth: Option<GroundTruth>,
}

impl Sample {
    /// Draws weights per `params` and samples the corresponding hypothesis.
    pub fn generate(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        match params.hypothesis() {
            Hypothesis::H0 => {
                let ws = weights::generate_in_domain(
                    params.n,
                    params.tau,
                    params.w0,
                    params.weight_mode,
                    params.seed,
                    Domain::Weights,
                )?;
                let graph = sample_h0(&ws, params)?;
                Ok(Self {
                    params: params.clone(),
                    weights: ws,
                    graph,
                    truth: None,
                })
            }
            Hypothesis::H1 => {
                let community = weights::generate_in_domain(
                    params.k,
                    params.tau,
                    params.w0,
                    params.weight_mode,
                    params.seed,
                    Domain::CommunityWeights,
                )?;
                let rest = if params.n > params.k {
                    weights::generate_in_domain(
                        params.n - params.k,
                        params.tau,
                        params.w0,
                        params.weight_mode,
                        params.seed,
                        Domain::Weights,
                    )?
                } else {
                    WeightSequence::empty(params.tau, params.w0)?
                };
                let (graph, truth) = sample_h1(&community, &rest, params)?;
                Ok(Self {
                    params: params.clone(),
                    weights: community.concat(&rest)?,
                    graph,
                    truth: Some(truth),
                })
            }
        }
    }

    /// Weights file contents, with types when ground truth exists.
    pub fn render_weights(&self) -> String {
        let header = format!("{} params: {}", crate::FORMAT_TAG, self.params.canonical());
        let types = self.truth.as_ref().map(|t| t.types(self.params.n));
        render_weights(self.weights.values(), types.as_deref(), None, &header)
    }

    /// Ground-truth file contents: weights-file columns plus positions of
    /// community members. `None` under the null model.
    pub fn render_ground_truth(&self) -> Option<String> {
        let truth = self.truth.as_ref()?;
        let header = format!("{} params: {}", crate::FORMAT_TAG, self.params.canonical());
        let types = truth.types(self.params.n);
        let pos = |v: usize| truth.position(v).map(|p| p.coords().to_vec());
        Some(render_weights(
            self.weights.values(),
            Some(&types),
            Some(&pos),
            &header,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[f64]) -> TorusPoint {
        TorusPoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn circular_distance() {
        assert!((torus_distance(&pt(&[0.1]), &pt(&[0.9])).unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(torus_distance(&pt(&[0.3, 0.7]), &pt(&[0.3, 0.7])).unwrap(), 0.0);
        assert_eq!(torus_distance(&pt(&[0.0, 0.0]), &pt(&[0.5, 0.1])).unwrap(), 0.5);
        assert!(matches!(
            torus_distance(&pt(&[0.1]), &pt(&[0.1, 0.2])),
            Err(Error::DimensionMismatch { left: 1, right: 2 })
        ));
        assert!(TorusPoint::new(vec![1.0]).is_err());
    }

    #[test]
    fn connection_probabilities() {
        let p = ModelParams::new(100, 2.5, 1.0).with_k(100);
        assert!((connection_prob(1.0, 1.0, PairContext::H0, &p) - 1.0 / 300.0).abs() < 1e-15);
        assert_eq!(connection_prob(30.0, 30.0, PairContext::H0, &p), 1.0);

        // d = 2, gamma = 5: C1 = (1 + 1/4) * 4 = 5.
        assert!((p.c1() - 5.0).abs() < 1e-12);
        let nongeo = connection_prob(1.0, 1.0, PairContext::H1NonGeo, &p);
        assert!((nongeo - 1.0 / 1800.0).abs() < 1e-15);

        // Threshold rule: C1 = 2^d = 4, p = 1/5 inside the ball, 0 outside.
        let t = p.clone().with_geometry(2, Gamma::Infinite);
        assert_eq!(t.c1(), 4.0);
        let inside = connection_prob(1.0, 1.0, PairContext::H1Geo { dist: 0.05 }, &t);
        assert!((inside - 0.2).abs() < 1e-15);
        let outside = connection_prob(1.0, 1.0, PairContext::H1Geo { dist: 0.06 }, &t);
        assert_eq!(outside, 0.0);

        // Coincident positions are capped, never a division fault.
        assert!((connection_prob(1.0, 1.0, PairContext::H1Geo { dist: 0.0 }, &p) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(connection_prob(1.0, 1.0, PairContext::H1SparseGeo { dist: 0.0 }, &p), 1.0);

        // Finite gamma, uncapped: (1/6) * (1/(3 * 100 * 0.01))^5.
        let geo = connection_prob(1.0, 1.0, PairContext::H1Geo { dist: 0.1 }, &p);
        assert!((geo - (1.0 / 6.0) * (1.0f64 / 3.0).powi(5)).abs() < 1e-15);
        let sparse = connection_prob(1.0, 1.0, PairContext::H1SparseGeo { dist: 0.1 }, &p);
        assert!((sparse - (1.0f64 / 3.0).powi(5)).abs() < 1e-15);
    }

    #[test]
    fn gamma_parsing() {
        assert_eq!("inf".parse::<Gamma>().unwrap(), Gamma::Infinite);
        assert_eq!("5".parse::<Gamma>().unwrap(), Gamma::Finite(5.0));
        let mut p = ModelParams::new(10, 2.5, 1.0);
        p.gamma = Gamma::Finite(1.0);
        assert!(p.validate().is_err());
    }

    #[test]
    fn huge_weights_give_complete_graph() {
        let ws = WeightSequence::from_values(vec![1e6; 12], 2.5, 1.0).unwrap();
        let p = ModelParams::new(12, 2.5, 1.0);
        let g = sample_h0(&ws, &p).unwrap();
        assert_eq!(g.m(), 12 * 11 / 2);
    }

    #[test]
    fn h1_rejects_empty_community() {
        let ws = WeightSequence::from_values(vec![1.0; 4], 2.5, 1.0).unwrap();
        let p = ModelParams::new(4, 2.5, 1.0);
        let err = sample_h1(&ws, &ws, &p).unwrap_err();
        assert!(err.to_string().contains("sample_h0"), "{err}");
    }

    #[test]
    fn h1_full_community_threshold_triangle() {
        // k = n = 3 with unit weights under the threshold rule: every pair
        // within the ball connects with probability exactly 1 / (1 + C1).
        let mut p = ModelParams::new(3, 2.5, 1.0)
            .with_k(3)
            .with_geometry(2, Gamma::Infinite);
        let ws = WeightSequence::from_values(vec![1.0; 3], 2.5, 1.0).unwrap();
        let rest = WeightSequence::empty(2.5, 1.0).unwrap();
        let reps = 20_000;
        let mut tri = 0usize;
        let mut eligible = 0usize;
        let radius = (1.0 / (p.mu() * 3.0)).sqrt();
        for s in 0..reps {
            p.seed = s;
            let (g, truth) = sample_h1(&ws, &rest, &p).unwrap();
            let close = (0..3).all(|i| {
                (i + 1..3).all(|j| {
                    torus_distance(truth.position(i).unwrap(), truth.position(j).unwrap()).unwrap()
                        <= radius
                })
            });
            if close {
                eligible += 1;
                tri += usize::from(g.m() == 3);
            }
        }
        let target = 0.2f64.powi(3);
        let phat = tri as f64 / eligible as f64;
        let se = (target * (1.0 - target) / eligible as f64).sqrt();
        assert!(eligible > 1000, "eligible {eligible}");
        assert!((phat - target).abs() <= 3.0 * se, "{phat} vs {target}");
    }

    #[test]
    fn generated_sample_is_simple_and_reproducible() {
        let p = ModelParams::new(2_000, 2.5, 1.0).with_k(200).with_seed(11);
        let a = Sample::generate(&p).unwrap();
        let b = Sample::generate(&p).unwrap();
        a.graph.validate().unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.truth.as_ref().unwrap().k(), 200);
    }
}
