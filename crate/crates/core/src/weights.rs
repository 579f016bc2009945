//! Power-law vertex weights.
//!
//! Weights follow a Pareto tail `P(X > x) = (w0 / x)^(tau - 1)` for `x >= w0`,
//! i.e. tail constant `C = w0^(tau - 1)`, which makes the distribution proper.
//! Two generators are provided: the deterministic quantile sequence
//! `w_i = w0 * (count / i)^(1 / (tau - 1))`, whose empirical tail matches the
//! target at every scale, and i.i.d. Pareto draws.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Domain};
use crate::sum::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    DeterministicQuantile,
    #[default]
    IidPareto,
}

impl WeightMode {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightMode::DeterministicQuantile => "deterministic_quantile",
            WeightMode::IidPareto => "iid_pareto",
        }
    }
}

impl std::str::FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deterministic_quantile" | "deterministic" => Ok(WeightMode::DeterministicQuantile),
            "iid_pareto" | "iid" | "pareto" => Ok(WeightMode::IidPareto),
            other => Err(Error::invalid(
                "weight_mode",
                format!("unknown mode `{other}` (expected deterministic_quantile or iid_pareto)"),
            )),
        }
    }
}

/// Vertex weights together with the tail parameters they were drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    values: Vec<f64>,
    tau: f64,
    w0: f64,
}

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 2.0 && tau < 3.0) {
        return Err(Error::invalid("tau", format!("{tau} is outside (2, 3)")));
    }
    Ok(())
}

pub(crate) fn check_w0(w0: f64) -> Result<()> {
    if !(w0 > 0.0 && w0.is_finite()) {
        return Err(Error::invalid("w0", format!("{w0} must be a positive finite number")));
    }
    Ok(())
}

impl WeightSequence {
    /// Wraps explicit weights. Every value must be finite and at least `w0`.
    pub fn from_values(values: Vec<f64>, tau: f64, w0: f64) -> Result<Self> {
        check_tau(tau)?;
        check_w0(w0)?;
        if values.is_empty() {
            return Err(Error::invalid("values", "weight sequence must be nonempty"));
        }
        if let Some((i, w)) = values
            .iter()
            .enumerate()
            .find(|(_, &w)| !(w.is_finite() && w >= w0))
        {
            return Err(Error::invalid(
                "values",
                format!("weight {w} at vertex {i} is below w0 = {w0} or not finite"),
            ));
        }
        Ok(Self { values, tau, w0 })
    }

    /// Zero-length sequence, only meaningful as the type-A part when `k = n`.
    pub fn empty(tau: f64, w0: f64) -> Result<Self> {
        check_tau(tau)?;
        check_w0(w0)?;
        Ok(Self {
            values: Vec::new(),
            tau,
            w0,
        })
    }

    /// Concatenates two sequences with identical tail parameters.
    pub fn concat(&self, other: &WeightSequence) -> Result<Self> {
        if self.tau != other.tau || self.w0 != other.w0 {
            return Err(Error::invalid(
                "weights",
                "cannot concatenate sequences with different (tau, w0)",
            ));
        }
        let mut values = Vec::with_capacity(self.len() + other.len());
        values.extend_from_slice(&self.values);
        values.extend_from_slice(&other.values);
        Ok(Self {
            values,
            tau: self.tau,
            w0: self.w0,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn w0(&self) -> f64 {
        self.w0
    }

    /// Tail constant `C = w0^(tau - 1)`.
    pub fn c_const(&self) -> f64 {
        self.w0.powf(self.tau - 1.0)
    }

    /// Empirical tail `1 - F_n(x)`, the fraction of weights strictly above `x`.
    pub fn empirical_tail(&self, x: f64) -> f64 {
        let above = self.values.iter().filter(|&&w| w > x).count();
        above as f64 / self.values.len() as f64
    }

    /// Relative deviation `(1 - F_n(x)) x^(tau - 1) / C - 1` of the empirical
    /// tail from the Pareto target.
    pub fn tail_deviation(&self, x: f64) -> f64 {
        self.empirical_tail(x) * x.powf(self.tau - 1.0) / self.c_const() - 1.0
    }
}

/// Generates `count` weights with tail exponent `tau` and minimum `w0`.
pub fn generate_weights(
    count: usize,
    tau: f64,
    w0: f64,
    mode: WeightMode,
    seed: u64,
) -> Result<WeightSequence> {
    generate_in_domain(count, tau, w0, mode, seed, Domain::Weights)
}

pub(crate) fn generate_in_domain(
    count: usize,
    tau: f64,
    w0: f64,
    mode: WeightMode,
    seed: u64,
    domain: Domain,
) -> Result<WeightSequence> {
    check_tau(tau)?;
    check_w0(w0)?;
    if count == 0 {
        return Err(Error::invalid("count", "must be at least 1"));
    }
    let exponent = 1.0 / (tau - 1.0);
    let values = match mode {
        WeightMode::DeterministicQuantile => {
            let n = count as f64;
            (1..=count)
                .map(|rank| w0 * (n / rank as f64).powf(exponent))
                .collect()
        }
        WeightMode::IidPareto => {
            // One stream per index: the draw for vertex i is fixed by (seed, i).
            (0..count)
                .map(|i| {
                    let mut r = rng::stream(seed, domain, i as u64);
                    let u = rng::open_unit(&mut r);
                    w0 * u.powf(-exponent)
                })
                .collect()
        }
    };
    Ok(WeightSequence { values, tau, w0 })
}

/// Mean weight `mu` and mean inverse weight `nu` of the Pareto law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentConstants {
    pub mu: f64,
    pub nu: f64,
}

/// Analytic moments with `C = w0^(tau - 1)`:
/// `mu = w0 (tau - 1) / (tau - 2)` and `nu = (tau - 1) / (tau w0)`.
pub fn moments(tau: f64, w0: f64) -> Result<MomentConstants> {
    check_tau(tau)?;
    check_w0(w0)?;
    Ok(MomentConstants {
        mu: w0 * (tau - 1.0) / (tau - 2.0),
        nu: (tau - 1.0) / (tau * w0),
    })
}

pub fn empirical_moments(ws: &WeightSequence) -> MomentConstants {
    let n = ws.len() as f64;
    let sum: CompensatedSum = ws.values().iter().copied().collect();
    let inv: CompensatedSum = ws.values().iter().map(|w| 1.0 / w).collect();
    MomentConstants {
        mu: sum.value() / n,
        nu: inv.value() / n,
    }
}

/// Ground-truth vertex type: `A` outside the community, `B` inside.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VertexType {
    A,
    B,
}

impl VertexType {
    pub fn as_str(self) -> &'static str {
        match self {
            VertexType::A => "A",
            VertexType::B => "B",
        }
    }
}

/// Contents of a weights (or ground-truth) file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightsFile {
    pub values: Vec<f64>,
    pub types: Option<Vec<VertexType>>,
    /// Positions of type-B rows, indexed by vertex id.
    pub positions: Vec<Option<Vec<f64>>>,
    pub header: Option<String>,
}

impl WeightsFile {
    pub fn into_sequence(self, tau: f64, w0: Option<f64>) -> Result<WeightSequence> {
        let w0 = match w0 {
            Some(w0) => w0,
            None => self
                .values
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min),
        };
        WeightSequence::from_values(self.values, tau, w0)
    }

    /// Community ids, when the file carries types.
    pub fn community(&self) -> Option<Vec<u32>> {
        self.types.as_ref().map(|types| {
            types
                .iter()
                .enumerate()
                .filter(|(_, t)| **t == VertexType::B)
                .map(|(i, _)| i as u32)
                .collect()
        })
    }
}

/// Renders a weights file: `vertex_id<TAB>weight[<TAB>A|B[<TAB>x_1 ... x_d]]`.
pub fn render_weights(
    values: &[f64],
    types: Option<&[VertexType]>,
    positions: Option<&dyn Fn(usize) -> Option<Vec<f64>>>,
    header: &str,
) -> String {
    let mut out = String::with_capacity(values.len() * 24 + header.len() + 2);
    let _ = writeln!(out, "# {header}");
    for (i, w) in values.iter().enumerate() {
        let _ = write!(out, "{i}\t{w}");
        if let Some(types) = types {
            let _ = write!(out, "\t{}", types[i].as_str());
            if let Some(pos) = positions.and_then(|f| f(i)) {
                for x in pos {
                    let _ = write!(out, "\t{x}");
                }
            }
        }
        out.push('\n');
    }
    out
}

pub fn save_weights(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Parses a weights or ground-truth file. Ids must be `0..n` in any order,
/// each exactly once.
pub fn load_weights(path: &Path) -> Result<WeightsFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_weights(path, &text)
}

pub(crate) fn parse_weights(path: &Path, text: &str) -> Result<WeightsFile> {
    let mut header = None;
    let mut rows: Vec<(usize, usize, f64, Option<VertexType>, Option<Vec<f64>>)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if header.is_none() {
                header = Some(rest.trim().to_string());
            }
            continue;
        }
        let mut cols = line.split('\t');
        let id: usize = cols
            .next()
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| Error::parse(path, lineno, "expected integer vertex id"))?;
        let w: f64 = cols
            .next()
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| Error::parse(path, lineno, "expected decimal weight"))?;
        let ty = match cols.next().map(str::trim) {
            None => None,
            Some("A") => Some(VertexType::A),
            Some("B") => Some(VertexType::B),
            Some(other) => {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("type column must be A or B, got `{other}`"),
                ))
            }
        };
        let coords: Vec<f64> = cols
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::parse(path, lineno, format!("bad coordinate `{c}`")))
            })
            .collect::<Result<_>>()?;
        let pos = (!coords.is_empty()).then_some(coords);
        rows.push((lineno, id, w, ty, pos));
    }
    let n = rows.len();
    let mut values = vec![f64::NAN; n];
    let mut types = vec![None; n];
    let mut positions = vec![None; n];
    for (lineno, id, w, ty, pos) in rows {
        if id >= n || !values[id].is_nan() {
            return Err(Error::parse(
                path,
                lineno,
                format!("vertex id {id} duplicated or outside 0..{n}"),
            ));
        }
        values[id] = w;
        types[id] = ty;
        positions[id] = pos;
    }
    let types = if types.iter().all(Option::is_some) && n > 0 {
        Some(types.into_iter().map(Option::unwrap).collect())
    } else if types.iter().all(Option::is_none) {
        None
    } else {
        return Err(Error::parse(
            path,
            0,
            "type column present on some rows but not others",
        ));
    };
    Ok(WeightsFile {
        values,
        types,
        positions,
        header,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_sequence_small() {
        let ws = generate_weights(4, 2.5, 1.0, WeightMode::DeterministicQuantile, 0).unwrap();
        assert!((ws.get(0) - 4f64.powf(2.0 / 3.0)).abs() < 1e-12);
        assert!((ws.get(0) - 2.5198).abs() < 1e-4);
        assert_eq!(ws.get(3), 1.0);
        assert!(ws.values().windows(2).all(|p| p[0] >= p[1]));

        let single = generate_weights(1, 2.7, 2.0, WeightMode::DeterministicQuantile, 0).unwrap();
        assert_eq!(single.values(), &[2.0]);
    }

    #[test]
    fn rejects_bad_parameters() {
        for tau in [2.0, 3.0, 1.5, f64::NAN] {
            assert!(generate_weights(10, tau, 1.0, WeightMode::IidPareto, 0).is_err());
        }
        assert!(generate_weights(10, 2.5, 0.0, WeightMode::IidPareto, 0).is_err());
        assert!(generate_weights(10, 2.5, -1.0, WeightMode::IidPareto, 0).is_err());
        assert!(generate_weights(0, 2.5, 1.0, WeightMode::IidPareto, 0).is_err());
        assert!(moments(3.5, 1.0).is_err());
    }

    #[test]
    fn pareto_tail_fraction() {
        let ws = generate_weights(100_000, 2.5, 1.0, WeightMode::IidPareto, 7).unwrap();
        let p = 10f64.powf(-1.5);
        let observed = ws.empirical_tail(10.0);
        let se = (p * (1.0 - p) / 100_000.0).sqrt();
        assert!((observed - p).abs() <= 3.0 * se, "{observed} vs {p}");
        assert!(ws.values().iter().all(|&w| w >= 1.0));
    }

    #[test]
    fn pareto_is_reproducible() {
        let a = generate_weights(1000, 2.3, 1.5, WeightMode::IidPareto, 99).unwrap();
        let b = generate_weights(1000, 2.3, 1.5, WeightMode::IidPareto, 99).unwrap();
        let c = generate_weights(1000, 2.3, 1.5, WeightMode::IidPareto, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        // Prefixes agree: the draw for vertex i only depends on (seed, i).
        let short = generate_weights(10, 2.3, 1.5, WeightMode::IidPareto, 99).unwrap();
        assert_eq!(short.values(), &a.values()[..10]);
    }

    #[test]
    fn analytic_moments() {
        let m = moments(2.5, 1.0).unwrap();
        assert!((m.mu - 3.0).abs() < 1e-12);
        assert!((m.nu - 0.6).abs() < 1e-12);
        let m = moments(2.5, 2.0).unwrap();
        assert!((m.mu - 6.0).abs() < 1e-12);
        assert!((m.nu - 0.3).abs() < 1e-12);
    }

    #[test]
    fn direct_empirical_moments() {
        let ws = WeightSequence::from_values(vec![1.0, 2.0, 4.0], 2.5, 1.0).unwrap();
        let m = empirical_moments(&ws);
        assert!((m.mu - 7.0 / 3.0).abs() < 1e-15);
        assert!((m.nu - 1.75 / 3.0).abs() < 1e-15);

        let ws = WeightSequence::from_values(vec![3.5], 2.5, 1.0).unwrap();
        let m = empirical_moments(&ws);
        assert_eq!(m.mu, 3.5);
        assert_eq!(m.nu, 1.0 / 3.5);
    }

    #[test]
    fn deterministic_mean_near_mu() {
        let ws = generate_weights(10_000, 2.5, 1.0, WeightMode::DeterministicQuantile, 0).unwrap();
        let m = empirical_moments(&ws);
        assert!((m.mu / 3.0 - 1.0).abs() < 0.05, "mu = {}", m.mu);
    }

    #[test]
    fn empirical_mu_error_shrinks_with_n() {
        let errs: Vec<f64> = [1_000, 10_000, 100_000]
            .iter()
            .map(|&n| {
                let ws = generate_weights(n, 2.5, 1.0, WeightMode::DeterministicQuantile, 0).unwrap();
                (empirical_moments(&ws).mu / 3.0 - 1.0).abs()
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    fn tail_scan(n: usize, tau: f64) -> f64 {
        let ws = generate_weights(n, tau, 1.0, WeightMode::DeterministicQuantile, 0).unwrap();
        let hi = (n as f64).powf(1.0 / (tau - 1.0)) / (n as f64).ln();
        let mut worst: f64 = 0.0;
        let steps = 400;
        for s in 0..=steps {
            let x = 2.0 * (hi / 2.0).powf(s as f64 / steps as f64);
            worst = worst.max(ws.tail_deviation(x).abs());
        }
        worst
    }

    #[test]
    fn quantile_sequence_satisfies_tail_assumption() {
        // Also covers the community sub-sequence: the same law on length k,
        // scanned on the stricter range up to k^(1/(tau-1)) / log k.
        for n in [10_000, 100_000] {
            for tau in [2.5, 2.8] {
                let worst = tail_scan(n, tau);
                assert!(worst <= 0.05, "n={n} tau={tau}: {worst}");
            }
        }
    }

    #[test]
    fn weights_file_parse() {
        let text = "# geodetect v1 params: n=3\n1\t2.5\tB\t0.1\t0.2\n0\t1\tA\n2\t7\tA\n";
        let f = parse_weights(Path::new("w.tsv"), text).unwrap();
        assert_eq!(f.values, vec![1.0, 2.5, 7.0]);
        assert_eq!(f.community(), Some(vec![1]));
        assert_eq!(f.positions[1], Some(vec![0.1, 0.2]));
        assert_eq!(f.header.as_deref(), Some("geodetect v1 params: n=3"));

        let err = parse_weights(Path::new("w.tsv"), "0\t1\n1\tx\n").unwrap_err();
        assert!(err.to_string().contains("w.tsv:2"), "{err}");
    }
}
