//! Triangle enumeration and weighted-triangle statistics.
//!
//! Triangles are enumerated with the forward algorithm: vertices are ranked
//! by `(degree, id)`, every edge is oriented towards the higher rank, and each
//! triangle is found exactly once at its lowest-ranked corner by intersecting
//! oriented neighbor lists.
//!
//! Summation contract: the enumerated triangles are put in lexicographic order
//! of their sorted ids. `W(G)` sums, per smallest corner `a` in id order, the
//! terms `1 / (w_a w_b w_c)` over `(b, c)` in ascending order; `W(a)` sums
//! `1 / (w_b w_c)` over the pairs at corner `a` in the same global order. Every
//! partial sum is compensated, so results are independent of thread count.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sum::CompensatedSum;
use crate::weights::WeightSequence;

/// Oriented adjacency: for each vertex, its neighbors of higher rank,
/// sorted by rank.
struct Oriented {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    /// `rank_to_id[r]` is the vertex with rank `r`.
    rank_to_id: Vec<u32>,
}

impl Oriented {
    fn new(g: &Graph) -> Self {
        let n = g.n();
        let mut rank_to_id: Vec<u32> = (0..n as u32).collect();
        rank_to_id.par_sort_unstable_by_key(|&v| (g.degree(v as usize), v));
        let mut rank = vec![0u32; n];
        for (r, &v) in rank_to_id.iter().enumerate() {
            rank[v as usize] = r as u32;
        }
        // Lists are indexed by rank and store ranks.
        let lists: Vec<Vec<u32>> = rank_to_id
            .par_iter()
            .map(|&v| {
                let rv = rank[v as usize];
                let mut out: Vec<u32> = g
                    .neighbors(v as usize)
                    .iter()
                    .map(|&u| rank[u as usize])
                    .filter(|&ru| ru > rv)
                    .collect();
                out.sort_unstable();
                out
            })
            .collect();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut acc = 0;
        for l in &lists {
            acc += l.len();
            offsets.push(acc);
        }
        let mut targets = Vec::with_capacity(acc);
        for l in lists {
            targets.extend(l);
        }
        Self {
            offsets,
            targets,
            rank_to_id,
        }
    }

    #[inline]
    fn out(&self, r: usize) -> &[u32] {
        &self.targets[self.offsets[r]..self.offsets[r + 1]]
    }

    /// Triangles found at rank `r`, as sorted vertex-id triples.
    fn triangles_at(&self, r: usize, out: &mut Vec<[u32; 3]>) {
        let a = self.out(r);
        for (i, &s) in a.iter().enumerate() {
            let b = self.out(s as usize);
            let (mut x, mut y) = (i + 1, 0);
            while x < a.len() && y < b.len() {
                match a[x].cmp(&b[y]) {
                    std::cmp::Ordering::Less => x += 1,
                    std::cmp::Ordering::Greater => y += 1,
                    std::cmp::Ordering::Equal => {
                        let mut t = [
                            self.rank_to_id[r],
                            self.rank_to_id[s as usize],
                            self.rank_to_id[a[x] as usize],
                        ];
                        t.sort_unstable();
                        out.push(t);
                        x += 1;
                        y += 1;
                    }
                }
            }
        }
    }

    fn count_at(&self, r: usize) -> u64 {
        let a = self.out(r);
        let mut count = 0;
        for (i, &s) in a.iter().enumerate() {
            let b = self.out(s as usize);
            let (mut x, mut y) = (i + 1, 0);
            while x < a.len() && y < b.len() {
                match a[x].cmp(&b[y]) {
                    std::cmp::Ordering::Less => x += 1,
                    std::cmp::Ordering::Greater => y += 1,
                    std::cmp::Ordering::Equal => {
                        count += 1;
                        x += 1;
                        y += 1;
                    }
                }
            }
        }
        count
    }
}

/// Every triangle exactly once, as a sorted id triple, in lexicographic order.
pub fn enumerate_triangles(g: &Graph) -> Vec<[u32; 3]> {
    let o = Oriented::new(g);
    let mut tris: Vec<[u32; 3]> = (0..g.n())
        .into_par_iter()
        .fold(Vec::new, |mut acc, r| {
            o.triangles_at(r, &mut acc);
            acc
        })
        .reduce(Vec::new, |mut a, mut b| {
            if a.len() < b.len() {
                std::mem::swap(&mut a, &mut b);
            }
            a.extend(b);
            a
        });
    tris.par_sort_unstable();
    tris
}

pub fn triangle_count(g: &Graph) -> u64 {
    let o = Oriented::new(g);
    (0..g.n()).into_par_iter().map(|r| o.count_at(r)).sum()
}

fn check_weights(g: &Graph, ws: &WeightSequence) -> Result<()> {
    if ws.len() != g.n() {
        return Err(Error::invalid(
            "weights",
            format!("length {} != graph order {}", ws.len(), g.n()),
        ));
    }
    Ok(())
}

/// `W(G)` from a lexicographically sorted triangle list.
fn weighted_from_sorted(tris: &[[u32; 3]], w: &[f64]) -> f64 {
    // Group boundaries by smallest corner.
    let mut starts = Vec::new();
    for (i, t) in tris.iter().enumerate() {
        if i == 0 || tris[i - 1][0] != t[0] {
            starts.push(i);
        }
    }
    starts.push(tris.len());
    let partials: Vec<f64> = starts
        .par_windows(2)
        .map(|s| {
            let group = &tris[s[0]..s[1]];
            let wa = w[group[0][0] as usize];
            let mut acc = CompensatedSum::new();
            for t in group {
                acc.add(1.0 / (wa * w[t[1] as usize] * w[t[2] as usize]));
            }
            acc.value()
        })
        .collect();
    partials.into_iter().collect::<CompensatedSum>().value()
}

/// `W(G)`: each unordered triangle `{a, b, c}` contributes `1 / (w_a w_b w_c)`.
pub fn weighted_triangles(g: &Graph, ws: &WeightSequence) -> Result<f64> {
    check_weights(g, ws)?;
    Ok(weighted_from_sorted(&enumerate_triangles(g), ws.values()))
}

/// `W(a) = (n / w_a^2) * sum over triangles {a, b, c} of 1 / (w_b w_c)`.
pub fn localized_weighted_triangles(g: &Graph, ws: &WeightSequence, a: usize) -> Result<f64> {
    check_weights(g, ws)?;
    if a >= g.n() {
        return Err(Error::VertexOutOfRange {
            vertex: a as u64,
            n: g.n(),
        });
    }
    let w = ws.values();
    let na = g.neighbors(a);
    let mut acc = CompensatedSum::new();
    // Pairs (b, c), b < c, in lexicographic order.
    for (i, &b) in na.iter().enumerate() {
        let nb = g.neighbors(b as usize);
        let (mut x, mut y) = (i + 1, 0);
        while x < na.len() && y < nb.len() {
            match na[x].cmp(&nb[y]) {
                std::cmp::Ordering::Less => x += 1,
                std::cmp::Ordering::Greater => y += 1,
                std::cmp::Ordering::Equal => {
                    acc.add(1.0 / (w[b as usize] * w[na[x] as usize]));
                    x += 1;
                    y += 1;
                }
            }
        }
    }
    Ok(localized_scale(g.n(), w[a], acc.value()))
}

#[inline]
fn localized_scale(n: usize, wa: f64, pair_sum: f64) -> f64 {
    n as f64 / (wa * wa) * pair_sum
}

/// Corner incidences of a sorted triangle list: for every vertex, the
/// positions of the triangles containing it, in list order.
fn corner_index(tris: &[[u32; 3]], n: usize) -> (Vec<usize>, Vec<u32>) {
    let mut offsets = vec![0usize; n + 1];
    for t in tris {
        for &v in t {
            offsets[v as usize + 1] += 1;
        }
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut cursor = offsets[..n].to_vec();
    let mut incidences = vec![0u32; 3 * tris.len()];
    for (ti, t) in tris.iter().enumerate() {
        for &v in t {
            incidences[cursor[v as usize]] = ti as u32;
            cursor[v as usize] += 1;
        }
    }
    (offsets, incidences)
}

fn localized_from_sorted(tris: &[[u32; 3]], w: &[f64], n: usize) -> Vec<f64> {
    let (offsets, incidences) = corner_index(tris, n);
    (0..n)
        .into_par_iter()
        .map(|a| {
            let mut acc = CompensatedSum::new();
            for &ti in &incidences[offsets[a]..offsets[a + 1]] {
                let t = tris[ti as usize];
                let (b, c) = match t.iter().position(|&v| v as usize == a) {
                    Some(0) => (t[1], t[2]),
                    Some(1) => (t[0], t[2]),
                    _ => (t[0], t[1]),
                };
                acc.add(1.0 / (w[b as usize] * w[c as usize]));
            }
            localized_scale(n, w[a], acc.value())
        })
        .collect()
}

/// `W(a)` for every vertex from a single enumeration pass.
pub fn all_localized(g: &Graph, ws: &WeightSequence) -> Result<Vec<f64>> {
    check_weights(g, ws)?;
    let tris = enumerate_triangles(g);
    Ok(localized_from_sorted(&tris, ws.values(), g.n()))
}

#[derive(Debug, Clone, Serialize)]
pub struct TriangleStatistics {
    pub n: usize,
    pub m: usize,
    pub triangle_count: u64,
    #[serde(rename = "W")]
    pub w_global: f64,
    #[serde(skip)]
    pub per_vertex: Vec<f64>,
    pub runtime_ms: u64,
}

/// Enumeration, `W(G)` and all `W(a)` from one triangle list.
pub fn triangle_statistics(g: &Graph, ws: &WeightSequence) -> Result<TriangleStatistics> {
    check_weights(g, ws)?;
    let start = Instant::now();
    let tris = enumerate_triangles(g);
    let w_global = weighted_from_sorted(&tris, ws.values());
    let per_vertex = localized_from_sorted(&tris, ws.values(), g.n());
    Ok(TriangleStatistics {
        n: g.n(),
        m: g.m(),
        triangle_count: tris.len() as u64,
        w_global,
        per_vertex,
        runtime_ms: start.elapsed().as_millis() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(n: u32) -> Graph {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        Graph::from_edge_list(n as usize, edges).unwrap()
    }

    fn unit(n: usize) -> WeightSequence {
        WeightSequence::from_values(vec![1.0; n], 2.5, 1.0).unwrap()
    }

    #[test]
    fn small_graphs() {
        let k4 = complete(4);
        assert_eq!(enumerate_triangles(&k4).len(), 4);
        assert_eq!(triangle_count(&k4), 4);
        let star = Graph::from_edge_list(6, (1..6).map(|v| (0, v))).unwrap();
        assert!(enumerate_triangles(&star).is_empty());
        assert_eq!(weighted_triangles(&star, &unit(6)).unwrap(), 0.0);
    }

    #[test]
    fn weighted_values() {
        let k3 = complete(3);
        assert_eq!(weighted_triangles(&k3, &unit(3)).unwrap(), 1.0);
        let ws = WeightSequence::from_values(vec![1.0, 2.0, 4.0], 2.5, 1.0).unwrap();
        assert_eq!(weighted_triangles(&k3, &ws).unwrap(), 0.125);
        assert_eq!(weighted_triangles(&complete(4), &unit(4)).unwrap(), 4.0);
    }

    #[test]
    fn localized_values() {
        let k3 = complete(3);
        assert_eq!(localized_weighted_triangles(&k3, &unit(3), 0).unwrap(), 3.0);
        assert_eq!(all_localized(&k3, &unit(3)).unwrap(), vec![3.0; 3]);

        let g = Graph::from_edge_list(4, [(0, 1), (1, 2), (0, 2), (2, 3)]).unwrap();
        assert_eq!(localized_weighted_triangles(&g, &unit(4), 3).unwrap(), 0.0);
        assert!(localized_weighted_triangles(&g, &unit(4), 4).is_err());

        let empty = Graph::from_edge_list(5, []).unwrap();
        assert_eq!(all_localized(&empty, &unit(5)).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn statistics_consistent() {
        let g = complete(5);
        let ws = WeightSequence::from_values(vec![1.0, 1.5, 2.0, 3.0, 7.0], 2.5, 1.0).unwrap();
        let s = triangle_statistics(&g, &ws).unwrap();
        assert_eq!(s.triangle_count, 10);
        assert_eq!(s.w_global, weighted_triangles(&g, &ws).unwrap());
        // Corner term 1/(w_b w_c) equals w_a/(w_a w_b w_c), hence
        // sum_a w_a W(a) = 3 n W(G).
        let corner: f64 = (0..5).map(|a| ws.get(a) * s.per_vertex[a]).sum();
        assert!((corner - 3.0 * 5.0 * s.w_global).abs() <= 1e-12 * corner);
    }

    #[test]
    fn weight_length_checked() {
        assert!(weighted_triangles(&complete(3), &unit(4)).is_err());
    }
}
