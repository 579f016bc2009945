//! Replicated runs behind the `experiment` subcommand.
//!
//! Replica `r` of a run with base seed `s` uses seed `s ^ r`. Replicas are
//! evaluated in parallel and collected in index order, so every table is
//! independent of the thread schedule.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::generators::{Hypothesis, ModelParams, Sample};
use crate::inference::{
    calibrate_constant, detect, detection_risk, estimate_k, identification_threshold, identify,
    Calibration, Decision, FMode, IdentificationQuality,
};
use crate::rng::replica_seed;
use crate::triangles::{triangle_statistics, weighted_triangles};

/// Replica values in index order plus the failures that were dropped.
#[derive(Debug, Clone)]
pub struct Replicated<T> {
    pub values: Vec<(u64, T)>,
    pub failures: Vec<(u64, String)>,
}

/// Runs `f` on replica indices `range` in parallel.
pub fn run_replicas<T, F>(range: std::ops::Range<u64>, f: F) -> Replicated<T>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let results: Vec<(u64, Result<T>)> = range.into_par_iter().map(|r| (r, f(r))).collect();
    let mut values = Vec::new();
    let mut failures = Vec::new();
    for (r, res) in results {
        match res {
            Ok(v) => values.push((r, v)),
            Err(e) => failures.push((r, e.to_string())),
        }
    }
    Replicated { values, failures }
}

/// `params` with the seed of replica `r` derived from its own seed.
pub fn replica_params(params: &ModelParams, r: u64) -> ModelParams {
    let mut p = params.clone();
    p.seed = replica_seed(params.seed, r);
    p
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

// ---------------------------------------------------------------- fig1

/// One `W(G)` sample.
#[derive(Debug, Clone, Serialize)]
pub struct WRecord {
    pub hypothesis: Hypothesis,
    pub k: usize,
    pub replica: u64,
    pub seed: u64,
    #[serde(rename = "W")]
    pub w: f64,
    pub triangles: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupSummary {
    pub hypothesis: Hypothesis,
    pub k: usize,
    pub replicas: usize,
    pub mean_w: f64,
    pub sd_w: f64,
    pub reject_rate: f64,
    /// Risk of the test against the null group; absent for the null group.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub risk: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Fig1Output {
    pub threshold: f64,
    pub groups: Vec<GroupSummary>,
    pub failures: usize,
    #[serde(skip)]
    pub records: Vec<WRecord>,
}

impl Fig1Output {
    pub fn values(&self, hypothesis: Hypothesis, k: usize) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.hypothesis == hypothesis && r.k == k)
            .map(|r| r.w)
            .collect()
    }

    pub fn group(&self, hypothesis: Hypothesis, k: usize) -> Option<&GroupSummary> {
        self.groups.iter().find(|g| g.hypothesis == hypothesis && g.k == k)
    }
}

/// `W(G)` under the null model and under the alternative for each `k`.
/// Null replicas use indices `0..R`; community size `ks[j]` uses
/// `(j + 1) R..(j + 2) R`.
pub fn fig1(base: &ModelParams, ks: &[usize], replicas: usize, f_mode: FMode) -> Result<Fig1Output> {
    base.validate()?;
    let threshold = f_mode.threshold(base.n)?;
    let r = replicas as u64;
    let mut records = Vec::new();
    let mut failures = 0;
    let mut groups = Vec::new();
    let mut h0_values = Vec::new();
    for (j, k) in std::iter::once(0).chain(ks.iter().copied()).enumerate() {
        let template = base.clone().with_k(k);
        template.validate()?;
        let start = j as u64 * r;
        let run = run_replicas(start..start + r, |idx| {
            let p = replica_params(&template, idx);
            let s = Sample::generate(&p)?;
            let stats = triangle_statistics(&s.graph, &s.weights)?;
            Ok((p.seed, stats.w_global, stats.triangle_count))
        });
        failures += run.failures.len();
        let hypothesis = template.hypothesis();
        let values: Vec<f64> = run.values.iter().map(|(_, v)| v.1).collect();
        for (idx, (seed, w, triangles)) in run.values {
            records.push(WRecord {
                hypothesis,
                k,
                replica: idx,
                seed,
                w,
                triangles,
            });
        }
        let (mean_w, sd_w) = mean_sd(&values);
        let rejects = values
            .iter()
            .map(|&w| detect(w, base.n, f_mode).map(|d| d.decision == Decision::RejectH0))
            .collect::<Result<Vec<bool>>>()?;
        let reject_rate = rejects.iter().filter(|&&x| x).count() as f64 / values.len().max(1) as f64;
        let risk = if k == 0 {
            h0_values = values.clone();
            None
        } else {
            detection_risk(&h0_values, &values, threshold).ok()
        };
        groups.push(GroupSummary {
            hypothesis,
            k,
            replicas: values.len(),
            mean_w,
            sd_w,
            reject_rate,
            risk,
        });
    }
    Ok(Fig1Output {
        threshold,
        groups,
        failures,
        records,
    })
}

impl Fig1Output {
    pub fn csv(&self, header: &str) -> String {
        let mut out = format!("# {header}\nhypothesis,k,replica,seed,W,triangles\n");
        for r in &self.records {
            let h = match r.hypothesis {
                Hypothesis::H0 => "H0",
                Hypothesis::H1 => "H1",
            };
            let _ = writeln!(out, "{h},{},{},{},{},{}", r.k, r.replica, r.seed, r.w, r.triangles);
        }
        out
    }
}

// ---------------------------------------------------------------- fig2

/// Calibrates the identification constant on replica 0 of `params`.
pub fn calibrate_on_replica(params: &ModelParams, t_n: f64) -> Result<Calibration> {
    let p = replica_params(params, 0);
    let s = Sample::generate(&p)?;
    let stats = triangle_statistics(&s.graph, &s.weights)?;
    let truth = truth_labels(&s);
    calibrate_constant(&stats.per_vertex, s.weights.values(), &truth, p.n, t_n)
}

fn truth_labels(s: &Sample) -> Vec<bool> {
    (0..s.params.n)
        .map(|v| s.truth.as_ref().is_some_and(|t| t.is_community(v)))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct VertexRecord {
    pub vertex: u32,
    pub weight: f64,
    #[serde(rename = "W_a")]
    pub w_a: f64,
    pub truth: bool,
    pub flag: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplicaQuality {
    pub replica: u64,
    pub seed: u64,
    pub identified: usize,
    pub quality: IdentificationQuality,
}

#[derive(Debug, Clone, Serialize)]
pub struct Fig2Output {
    pub constant: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<Calibration>,
    pub t_n: f64,
    pub replicas: Vec<ReplicaQuality>,
    pub mean_recall: f64,
    pub mean_precision: f64,
    pub mean_risk: f64,
    pub failures: usize,
    /// Per-vertex table of the first fresh replica.
    #[serde(skip)]
    pub table: Vec<VertexRecord>,
    /// `(x, C n / (x sqrt(log n)))` on a logarithmic grid.
    #[serde(skip)]
    pub curve: Vec<(f64, f64)>,
}

/// Identification on fresh replicas `1..=replicas` with the constant either
/// given or calibrated on replica 0.
pub fn fig2(params: &ModelParams, t_n: f64, constant: Option<f64>, replicas: usize) -> Result<Fig2Output> {
    params.validate()?;
    let calibration = match constant {
        Some(_) => None,
        None => Some(calibrate_on_replica(params, t_n)?),
    };
    let c = constant.unwrap_or_else(|| calibration.as_ref().map_or(1.0, |cal| cal.constant));
    let n = params.n;
    let run = run_replicas(1..replicas as u64 + 1, |idx| {
        let p = replica_params(params, idx);
        let s = Sample::generate(&p)?;
        let stats = triangle_statistics(&s.graph, &s.weights)?;
        let truth = truth_labels(&s);
        let report = identify(&stats.per_vertex, &s.weights, n, c, t_n, Some(&truth))?;
        let table = if idx == 1 {
            report
                .rows
                .iter()
                .map(|r| VertexRecord {
                    vertex: r.vertex,
                    weight: r.weight,
                    w_a: r.w_a,
                    truth: r.truth.unwrap_or(false),
                    flag: r.flag,
                })
                .collect()
        } else {
            Vec::new()
        };
        let quality = report.quality.clone().expect("truth supplied");
        Ok((
            ReplicaQuality {
                replica: idx,
                seed: p.seed,
                identified: report.identified.len(),
                quality,
            },
            table,
        ))
    });
    let mut qualities = Vec::new();
    let mut table = Vec::new();
    let mut max_weight = params.w0;
    for (_, (q, t)) in run.values {
        if !t.is_empty() {
            max_weight = t.iter().map(|r| r.weight).fold(max_weight, f64::max);
            table = t;
        }
        qualities.push(q);
    }
    let mean_of = |f: &dyn Fn(&ReplicaQuality) -> Option<f64>| {
        let xs: Vec<f64> = qualities.iter().filter_map(f).collect();
        mean_sd(&xs).0
    };
    let mean_recall = mean_of(&|q| Some(q.quality.recall));
    let mean_precision = mean_of(&|q| Some(q.quality.precision));
    let mean_risk = mean_of(&|q| q.quality.risk);
    let curve = threshold_curve(n, c, params.w0, max_weight.max(params.w0 * 2.0), 200);
    Ok(Fig2Output {
        constant: c,
        calibration,
        t_n,
        replicas: qualities,
        mean_recall,
        mean_precision,
        mean_risk,
        failures: run.failures.len(),
        table,
        curve,
    })
}

/// The identification threshold sampled at `points` log-spaced weights.
pub fn threshold_curve(n: usize, constant: f64, lo: f64, hi: f64, points: usize) -> Vec<(f64, f64)> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| {
            let x = (a + (b - a) * i as f64 / (points.max(2) - 1) as f64).exp();
            (x, identification_threshold(n, x, constant))
        })
        .collect()
}

impl Fig2Output {
    pub fn table_csv(&self, header: &str) -> String {
        let mut out = format!("# {header}\nvertex,weight,W_a,truth,flag\n");
        for r in &self.table {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.vertex,
                r.weight,
                r.w_a,
                if r.truth { "B" } else { "A" },
                u8::from(r.flag)
            );
        }
        out
    }

    pub fn curve_csv(&self, header: &str) -> String {
        let mut out = format!("# {header}\nweight,threshold\n");
        for (x, y) in &self.curve {
            let _ = writeln!(out, "{x},{y}");
        }
        out
    }
}

// ---------------------------------------------------------------- fig3

#[derive(Debug, Clone, Serialize)]
pub struct Fig3Output {
    pub k: usize,
    pub constant: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<Calibration>,
    pub t_n: f64,
    pub m_max: usize,
    /// Across-replica mean of `k^_m`, `m = 1..M`.
    pub means: Vec<f64>,
    /// Median over `m >= 5` of `mean(k^_m) / k`.
    pub median_ratio: f64,
    pub failures: usize,
    /// Replica index, seed and its `k^_1..k^_M`.
    #[serde(skip)]
    pub per_replica: Vec<(u64, u64, Vec<f64>)>,
}

/// Size estimates from the identified weights on fresh replicas
/// `1..=replicas`; the constant is calibrated on replica 0 unless given.
pub fn fig3(
    params: &ModelParams,
    t_n: f64,
    constant: Option<f64>,
    m_max: usize,
    replicas: usize,
) -> Result<Fig3Output> {
    params.validate()?;
    let calibration = match constant {
        Some(_) => None,
        None => Some(calibrate_on_replica(params, t_n)?),
    };
    let c = constant.unwrap_or_else(|| calibration.as_ref().map_or(1.0, |cal| cal.constant));
    let run = run_replicas(1..replicas as u64 + 1, |idx| {
        let p = replica_params(params, idx);
        let s = Sample::generate(&p)?;
        let stats = triangle_statistics(&s.graph, &s.weights)?;
        let report = identify(&stats.per_vertex, &s.weights, p.n, c, t_n, None)?;
        let est = estimate_k(&report.identified_weights(), p.tau, m_max)?;
        Ok((p.seed, est.estimates))
    });
    let per_replica: Vec<(u64, u64, Vec<f64>)> =
        run.values.into_iter().map(|(i, (seed, e))| (i, seed, e)).collect();
    let means: Vec<f64> = (0..m_max)
        .map(|m| {
            let xs: Vec<f64> = per_replica.iter().filter_map(|(_, _, e)| e.get(m).copied()).collect();
            mean_sd(&xs).0
        })
        .collect();
    let mut ratios: Vec<f64> = means
        .iter()
        .skip(4)
        .filter(|x| x.is_finite())
        .map(|x| x / params.k as f64)
        .collect();
    ratios.sort_by(f64::total_cmp);
    let median_ratio = match ratios.len() {
        0 => f64::NAN,
        l if l % 2 == 1 => ratios[l / 2],
        l => 0.5 * (ratios[l / 2 - 1] + ratios[l / 2]),
    };
    Ok(Fig3Output {
        k: params.k,
        constant: c,
        calibration,
        t_n,
        m_max,
        means,
        median_ratio,
        failures: run.failures.len(),
        per_replica,
    })
}

impl Fig3Output {
    pub fn estimates_csv(&self, header: &str) -> String {
        let mut out = format!("# {header}\nreplica,seed,m,k_hat\n");
        for (idx, seed, est) in &self.per_replica {
            for (m, e) in est.iter().enumerate() {
                let _ = writeln!(out, "{idx},{seed},{},{e}", m + 1);
            }
        }
        out
    }

    pub fn means_csv(&self, header: &str) -> String {
        let mut out = format!("# {header}\nm,mean_k_hat,ratio\n");
        for (m, e) in self.means.iter().enumerate() {
            let _ = writeln!(out, "{},{e},{}", m + 1, e / self.k as f64);
        }
        out
    }
}

// ---------------------------------------------------------------- custom

#[derive(Debug, Clone, Serialize)]
pub struct CustomOutput {
    pub threshold: f64,
    pub mean_w: f64,
    pub sd_w: f64,
    pub reject_rate: f64,
    pub failures: usize,
    #[serde(skip)]
    pub records: Vec<(u64, u64, f64, bool)>,
}

/// `W(G)` and the detection decision on `replicas` samples of `params`.
pub fn custom(params: &ModelParams, replicas: usize, f_mode: FMode) -> Result<CustomOutput> {
    params.validate()?;
    let threshold = f_mode.threshold(params.n)?;
    let run = run_replicas(0..replicas as u64, |idx| {
        let p = replica_params(params, idx);
        let s = Sample::generate(&p)?;
        let w = weighted_triangles(&s.graph, &s.weights)?;
        Ok((p.seed, w))
    });
    let records: Vec<(u64, u64, f64, bool)> = run
        .values
        .into_iter()
        .map(|(i, (seed, w))| (i, seed, w, w >= threshold))
        .collect();
    let ws: Vec<f64> = records.iter().map(|r| r.2).collect();
    let (mean_w, sd_w) = mean_sd(&ws);
    let reject_rate = records.iter().filter(|r| r.3).count() as f64 / records.len().max(1) as f64;
    Ok(CustomOutput {
        threshold,
        mean_w,
        sd_w,
        reject_rate,
        failures: run.failures.len(),
        records,
    })
}

impl CustomOutput {
    pub fn csv(&self, header: &str) -> String {
        let mut out = format!("# {header}\nreplica,seed,W,reject_h0\n");
        for (i, seed, w, rej) in &self.records {
            let _ = writeln!(out, "{i},{seed},{w},{}", u8::from(*rej));
        }
        out
    }
}
