//! Detection, identification and community-size estimation.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::{check_tau, WeightSequence};

/// Detection threshold `f(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FMode {
    #[default]
    LogN,
    SqrtN,
    Custom(f64),
}

impl FMode {
    pub fn threshold(self, n: usize) -> Result<f64> {
        match self {
            FMode::LogN => Ok((n as f64).ln()),
            FMode::SqrtN => Ok((n as f64).sqrt()),
            FMode::Custom(c) if c > 0.0 && c.is_finite() => Ok(c),
            FMode::Custom(c) => Err(Error::invalid(
                "f_mode",
                format!("custom threshold {c} must be positive"),
            )),
        }
    }
}

impl FromStr for FMode {
    type Err = Error;

    /// `log_n`, `sqrt_n`, or a positive number for a custom threshold.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log_n" | "log" => Ok(FMode::LogN),
            "sqrt_n" | "sqrt" => Ok(FMode::SqrtN),
            other => {
                let c = other
                    .strip_prefix("custom:")
                    .unwrap_or(other)
                    .parse::<f64>()
                    .map_err(|_| {
                        Error::invalid(
                            "f_mode",
                            format!("expected log_n, sqrt_n or a number, got `{s}`"),
                        )
                    })?;
                FMode::Custom(c).threshold(0)?;
                Ok(FMode::Custom(c))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    RejectH0,
    KeepH0,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub w_value: f64,
    pub threshold: f64,
    pub decision: Decision,
}

/// Weighted-triangle test: reject the null model when `W >= f(n)`.
pub fn detect(w_value: f64, n: usize, f_mode: FMode) -> Result<DetectionReport> {
    if !(w_value >= 0.0) {
        return Err(Error::invalid("w_value", format!("{w_value} must be >= 0")));
    }
    let threshold = f_mode.threshold(n)?;
    let decision = if w_value >= threshold {
        Decision::RejectH0
    } else {
        Decision::KeepH0
    };
    Ok(DetectionReport {
        w_value,
        threshold,
        decision,
    })
}

/// Empirical risk of the test at `threshold`: the fraction of null samples
/// rejected plus the fraction of alternative samples kept.
pub fn detection_risk(h0_values: &[f64], h1_values: &[f64], threshold: f64) -> Result<f64> {
    if h0_values.is_empty() || h1_values.is_empty() {
        return Err(Error::invalid("replicas", "both hypotheses need at least one sample"));
    }
    let type1 = h0_values.iter().filter(|&&w| w >= threshold).count() as f64 / h0_values.len() as f64;
    let type2 = h1_values.iter().filter(|&&w| w < threshold).count() as f64 / h1_values.len() as f64;
    Ok(type1 + type2)
}

/// Identification threshold `C n / (w_a sqrt(log n))`.
pub fn identification_threshold(n: usize, weight: f64, constant: f64) -> f64 {
    constant * n as f64 / (weight * (n as f64).ln().sqrt())
}

/// Score `W_a w_a sqrt(log n) / n`; vertex `a` is identified iff its score
/// exceeds the constant.
pub fn identification_score(n: usize, weight: f64, w_a: f64) -> f64 {
    w_a * weight * (n as f64).ln().sqrt() / n as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationRow {
    pub vertex: u32,
    pub weight: f64,
    #[serde(rename = "W_a")]
    pub w_a: f64,
    pub flag: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<bool>,
}

/// Scores of an identification against ground truth on the restricted set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationQuality {
    pub restricted_identified: usize,
    pub restricted_truth: usize,
    pub true_positives: usize,
    pub recall: f64,
    pub precision: f64,
    /// `|V^ Δ V_C| / (2 |V_C|)` on the restricted sets; `None` when
    /// the restricted community is empty.
    pub risk: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationReport {
    pub threshold_constant: f64,
    pub t_n: f64,
    pub n: usize,
    /// All vertices flagged, regardless of weight.
    pub identified: Vec<u32>,
    /// Flagged vertices with weight at least `t_n`.
    pub restricted: Vec<u32>,
    #[serde(skip)]
    pub rows: Vec<IdentificationRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quality: Option<IdentificationQuality>,
    /// Set when detection kept the null model.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub caveat_keep_h0: bool,
}

impl IdentificationReport {
    /// Weights of the identified vertices (unrestricted), in vertex order.
    pub fn identified_weights(&self) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.flag)
            .map(|r| r.weight)
            .collect()
    }
}

/// Flags vertex `a` when `W_a > C n / (w_a sqrt(log n))` (strict; ties stay
/// unflagged). `truth[a]` marks community members when known.
pub fn identify(
    per_vertex: &[f64],
    ws: &WeightSequence,
    n: usize,
    constant: f64,
    t_n: f64,
    truth: Option<&[bool]>,
) -> Result<IdentificationReport> {
    if n < 3 {
        return Err(Error::invalid("n", format!("{n} < 3 makes log n scaling degenerate")));
    }
    if !(constant > 0.0 && constant.is_finite()) {
        return Err(Error::invalid("C", format!("{constant} must be positive")));
    }
    if !(t_n >= ws.w0()) {
        return Err(Error::invalid(
            "t_n",
            format!("{t_n} is below the minimum weight {}", ws.w0()),
        ));
    }
    if per_vertex.len() != ws.len() {
        return Err(Error::invalid(
            "per_vertex",
            format!("{} statistics for {} weights", per_vertex.len(), ws.len()),
        ));
    }
    if let Some(t) = truth {
        if t.len() != ws.len() {
            return Err(Error::invalid("truth", "label count differs from weight count"));
        }
    }

    let rows: Vec<IdentificationRow> = per_vertex
        .iter()
        .zip(ws.values())
        .enumerate()
        .map(|(v, (&w_a, &weight))| IdentificationRow {
            vertex: v as u32,
            weight,
            w_a,
            flag: w_a > identification_threshold(n, weight, constant),
            truth: truth.map(|t| t[v]),
        })
        .collect();
    let identified: Vec<u32> = rows.iter().filter(|r| r.flag).map(|r| r.vertex).collect();
    let restricted: Vec<u32> = rows
        .iter()
        .filter(|r| r.flag && r.weight >= t_n)
        .map(|r| r.vertex)
        .collect();

    let quality = truth.map(|t| {
        let truth_ids: Vec<u32> = (0..t.len() as u32).filter(|&v| t[v as usize]).collect();
        quality(&identified, &truth_ids, ws.values(), t_n)
    });

    Ok(IdentificationReport {
        threshold_constant: constant,
        t_n,
        n,
        identified,
        restricted,
        rows,
        quality,
        caveat_keep_h0: false,
    })
}

fn restrict(ids: &[u32], weights: &[f64], cutoff: f64) -> Vec<u32> {
    let mut out: Vec<u32> = ids
        .iter()
        .copied()
        .filter(|&v| weights[v as usize] >= cutoff)
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

fn intersection_size(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

fn quality(identified: &[u32], truth: &[u32], weights: &[f64], cutoff: f64) -> IdentificationQuality {
    let id = restrict(identified, weights, cutoff);
    let tr = restrict(truth, weights, cutoff);
    let tp = intersection_size(&id, &tr);
    let ratio = |num: usize, den: usize| if den == 0 { f64::NAN } else { num as f64 / den as f64 };
    IdentificationQuality {
        restricted_identified: id.len(),
        restricted_truth: tr.len(),
        true_positives: tp,
        recall: ratio(tp, tr.len()),
        precision: ratio(tp, id.len()),
        risk: risk_metrics(identified, truth, weights, cutoff).ok(),
    }
}

/// Normalized symmetric difference `|V^ Δ V_C| / (2 |V_C|)` after keeping
/// only vertices with weight at least `cutoff`. Zero when both restricted
/// sets are empty; not applicable when only the community side is empty.
pub fn risk_metrics(
    identified: &[u32],
    ground_truth: &[u32],
    weights: &[f64],
    cutoff: f64,
) -> Result<f64> {
    if let Some(&v) = identified
        .iter()
        .chain(ground_truth)
        .find(|&&v| v as usize >= weights.len())
    {
        return Err(Error::VertexOutOfRange {
            vertex: v as u64,
            n: weights.len(),
        });
    }
    let id = restrict(identified, weights, cutoff);
    let tr = restrict(ground_truth, weights, cutoff);
    if tr.is_empty() {
        if id.is_empty() {
            return Ok(0.0);
        }
        return Err(Error::NotApplicable(format!(
            "no community vertex has weight >= {cutoff}"
        )));
    }
    let common = intersection_size(&id, &tr);
    let sym = id.len() + tr.len() - 2 * common;
    Ok(sym as f64 / (2 * tr.len()) as f64)
}

/// Bounds of the admissible weight-cutoff window:
/// `(n log n / k)^(1/tau) << t_n << k^(1/(tau-1))`.
pub fn t_n_bounds(n: usize, k: usize, tau: f64) -> (f64, f64) {
    let nf = n as f64;
    let lower = (nf * nf.ln() / k as f64).powf(1.0 / tau);
    let upper = (k as f64).powf(1.0 / (tau - 1.0));
    (lower, upper)
}

/// Default weight cutoff: the geometric mean of the window bounds when `k`
/// is known, else `2 (n log n)^(1/tau)`.
pub fn default_t_n(n: usize, k: Option<usize>, tau: f64) -> Result<f64> {
    if n < 3 {
        return Err(Error::invalid("n", format!("{n} < 3")));
    }
    check_tau(tau)?;
    match k {
        Some(0) => Err(Error::invalid("k", "community size must be positive")),
        Some(k) => {
            let (lower, upper) = t_n_bounds(n, k, tau);
            if lower >= upper {
                return Err(Error::InfeasibleWindow { lower, upper });
            }
            Ok((lower * upper).sqrt())
        }
        None => {
            let nf = n as f64;
            Ok(2.0 * (nf * nf.ln()).powf(1.0 / tau))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeEstimateReport {
    /// `k^_m = m X_(m)^(tau - 1)` for `m = 1..m_used`.
    pub estimates: Vec<f64>,
    /// Identified weights in non-increasing order, `X_(1) >= X_(2) >= ...`.
    pub order_stats: Vec<f64>,
    pub m_used: usize,
    /// Fewer than the requested `M` vertices were identified.
    pub truncated: bool,
}

/// Community-size estimates from the `M` largest identified weights.
pub fn estimate_k(identified_weights: &[f64], tau: f64, m_max: usize) -> Result<SizeEstimateReport> {
    check_tau(tau)?;
    if m_max == 0 {
        return Err(Error::invalid("M", "must be at least 1"));
    }
    let mut sorted = identified_weights.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let m_used = m_max.min(sorted.len());
    sorted.truncate(m_used);
    let estimates = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| (i + 1) as f64 * x.powf(tau - 1.0))
        .collect();
    Ok(SizeEstimateReport {
        estimates,
        order_stats: sorted,
        m_used,
        truncated: m_used < m_max,
    })
}

/// Result of fitting the identification constant on a labeled sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub constant: f64,
    pub errors: usize,
    pub candidates: usize,
}

/// Fits the constant `C` on labeled data: among vertices with weight at
/// least `t_n`, chooses the cut on the score `W_a w_a sqrt(log n) / n` with
/// the fewest misclassifications, breaking ties by the widest log-gap
/// between neighboring scores.
pub fn calibrate_constant(
    per_vertex: &[f64],
    weights: &[f64],
    truth: &[bool],
    n: usize,
    t_n: f64,
) -> Result<Calibration> {
    if n < 3 {
        return Err(Error::invalid("n", format!("{n} < 3")));
    }
    if per_vertex.len() != weights.len() || truth.len() != weights.len() {
        return Err(Error::invalid("per_vertex", "length mismatch"));
    }
    let mut scored: Vec<(f64, bool)> = (0..weights.len())
        .filter(|&v| weights[v] >= t_n)
        .map(|v| (identification_score(n, weights[v], per_vertex[v]), truth[v]))
        .collect();
    if scored.is_empty() {
        return Err(Error::NotApplicable(format!("no vertex has weight >= {t_n}")));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total_b = scored.iter().filter(|s| s.1).count();

    // A cut between positions i-1 and i flags scored[i..]. Errors are the
    // type-A vertices flagged plus the type-B vertices not flagged.
    let mut best: Option<(usize, f64, f64)> = None;
    let mut b_below = 0usize;
    let mut a_below = 0usize;
    let total_a = scored.len() - total_b;
    for i in 0..=scored.len() {
        if i > 0 {
            if scored[i - 1].1 {
                b_below += 1;
            } else {
                a_below += 1;
            }
        }
        let lo = if i == 0 { 0.0 } else { scored[i - 1].0 };
        let hi = scored.get(i).map(|s| s.0);
        // Cuts must separate distinct scores and stay positive.
        if let Some(h) = hi {
            if h <= lo || h <= 0.0 {
                continue;
            }
        }
        let errors = b_below + (total_a - a_below);
        let (cut, gap) = match hi {
            Some(h) if lo > 0.0 => ((lo * h).sqrt(), (h / lo).ln()),
            Some(h) => (h / 2.0, f64::INFINITY),
            None if lo > 0.0 => (2.0 * lo, 2f64.ln()),
            None => (1.0, 0.0),
        };
        let better = match best {
            None => true,
            Some((e, _, g)) => errors < e || (errors == e && gap > g),
        };
        if better {
            best = Some((errors, cut, gap));
        }
    }
    let (errors, constant, _) = best.expect("at least one cut");
    Ok(Calibration {
        constant,
        errors,
        candidates: scored.len(),
    })
}
