//! Random subgraphs `Q_{n,p}` of the `d`-dimensional hypercube.
//!
//! Vertices are the labels `0..2^d`. The retained edges at `v` are stored as a
//! `d`-bit direction mask: bit `k` set means the edge `{v, v ^ (1 << k)}` is
//! present. Each undirected edge is decided once, at its smaller endpoint, and
//! the outcome is written to both endpoints.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{param, Error, Result};
use crate::rng::{rng_from_seed, RNG_NAME};

pub const MAX_SAMPLE_DIM: u32 = 30;

/// Serialization format name and version of [`HypercubeSubgraph`] files.
pub const INSTANCE_FORMAT: &str = "hypercover-instance";
pub const INSTANCE_FORMAT_VERSION: u32 = 1;

/// A probability carried as the exact decimal text it was given in, together
/// with its parsed value. Equality and serialization use the text.
#[derive(Clone, Debug)]
pub struct Probability {
    text: String,
    value: f64,
}

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        // `{}` on f64 prints the shortest string that parses back to `value`.
        format!("{value}").parse()
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    /// `ε = 2p − 1`.
    pub fn epsilon(&self) -> f64 {
        2.0 * self.value - 1.0
    }
}

impl FromStr for Probability {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let text = s.trim();
        let value: f64 = text
            .parse()
            .map_err(|_| param(format!("probability {text:?} is not a decimal number")))?;
        if !(0.0..=1.0).contains(&value) {
            return Err(param(format!("probability {text} outside [0, 1]")));
        }
        Ok(Self {
            text: text.to_string(),
            value,
        })
    }
}

impl PartialEq for Probability {
    fn eq(&self, other: &Self) -> bool {
        self.text == other.text
    }
}

impl Eq for Probability {}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl Serialize for Probability {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for Probability {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One sampled percolation instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HypercubeSubgraph {
    d: u32,
    p: Probability,
    seed: u64,
    masks: Vec<u32>,
}

/// `counts[i]` is the number of vertices of degree `i`, for `i` in `0..=d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeHistogram {
    pub counts: Vec<u64>,
}

impl DegreeHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `Σ i·counts[i]`, which equals `2m`.
    pub fn degree_sum(&self) -> u64 {
        self.counts.iter().enumerate().map(|(i, &c)| i as u64 * c).sum()
    }
}

/// Graph distance capped at a search depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Distance {
    Finite(u32),
    /// Farther than the cap, or in a different component.
    ExceedsCap,
}

impl Distance {
    pub fn finite(self) -> Option<u32> {
        match self {
            Distance::Finite(x) => Some(x),
            Distance::ExceedsCap => None,
        }
    }
}

/// Graph in which a distance is measured.
#[derive(Clone, Copy, Debug)]
pub enum Topology<'a> {
    FullCube { d: u32 },
    Subgraph(&'a HypercubeSubgraph),
}

/// Outcome of [`HypercubeSubgraph::low_degree_spacing_ok`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpacingCheck {
    pub ok: bool,
    /// Number of vertices with degree at most the cap.
    pub low_degree_count: u64,
    /// `(u, v, dist)` for one violating pair.
    pub witness: Option<(u32, u32, u32)>,
}

/// `(L, h)` with `L = 100d / ln d` and `h = d / (2 ln d)`, natural logs.
pub fn spacing_parameters(d: u32) -> (f64, f64) {
    let d = d as f64;
    (100.0 * d / d.ln(), d / (2.0 * d.ln()))
}

/// Connectivity threshold `p_c = (1 + θ ln d / d) / 2`.
pub fn connectivity_threshold(d: u32, theta: f64) -> f64 {
    let d = d as f64;
    0.5 * (1.0 + theta * d.ln() / d)
}

/// The integer degrees meant by "degree `x`" for a real target `x`: `floor(x)`
/// and `ceil(x)`, deduplicated.
pub fn degrees_near(x: f64) -> Vec<u32> {
    let lo = x.floor().max(0.0) as u32;
    let hi = x.ceil().max(0.0) as u32;
    if lo == hi {
        vec![lo]
    } else {
        vec![lo, hi]
    }
}

fn check_dim(d: u32) -> Result<()> {
    if d == 0 || d > MAX_SAMPLE_DIM {
        return Err(Error::Capacity {
            what: "hypercube dimension",
            got: d as u64,
            limit: MAX_SAMPLE_DIM as u64,
        });
    }
    Ok(())
}

impl HypercubeSubgraph {
    /// Retain each of the `d·2^(d−1)` edges independently with probability `p`.
    pub fn sample(d: u32, p: Probability, seed: u64) -> Result<Self> {
        check_dim(d)?;
        let n = 1usize << d;
        let mut masks = vec![0u32; n];
        let mut rng = rng_from_seed(seed);
        let pv = p.value();
        for v in 0..n {
            for k in 0..d {
                let bit = 1usize << k;
                if v & bit != 0 {
                    continue;
                }
                if rng.gen_bool(pv) {
                    masks[v] |= 1 << k;
                    masks[v | bit] |= 1 << k;
                }
            }
        }
        Ok(Self { d, p, seed, masks })
    }

    pub fn sample_f64(d: u32, p: f64, seed: u64) -> Result<Self> {
        Self::sample(d, Probability::new(p)?, seed)
    }

    /// The complete hypercube `Q_n`.
    pub fn full(d: u32) -> Result<Self> {
        check_dim(d)?;
        let all = (1u32 << d) - 1;
        Ok(Self {
            d,
            p: "1".parse()?,
            seed: 0,
            masks: vec![all; 1 << d],
        })
    }

    /// The hypercube vertex set with no edges.
    pub fn empty(d: u32) -> Result<Self> {
        check_dim(d)?;
        Ok(Self {
            d,
            p: "0".parse()?,
            seed: 0,
            masks: vec![0; 1 << d],
        })
    }

    /// Build from explicit masks, validating width and edge symmetry.
    pub fn from_masks(d: u32, p: Probability, seed: u64, masks: Vec<u32>) -> Result<Self> {
        check_dim(d)?;
        if masks.len() != 1usize << d {
            return Err(Error::Format(format!(
                "expected {} masks for d = {d}, found {}",
                1usize << d,
                masks.len()
            )));
        }
        let g = Self { d, p, seed, masks };
        if let Some((v, k)) = g.symmetry_violation() {
            return Err(Error::Format(format!(
                "edge symmetry broken at vertex {v}, direction {k}"
            )));
        }
        Ok(g)
    }

    fn symmetry_violation(&self) -> Option<(u32, u32)> {
        let width = (1u32 << self.d) - 1;
        for (v, &mask) in self.masks.iter().enumerate() {
            if mask & !width != 0 {
                return Some((v as u32, mask.trailing_zeros()));
            }
            for k in 0..self.d {
                let u = v ^ (1 << k);
                if (mask >> k) & 1 != (self.masks[u] >> k) & 1 {
                    return Some((v as u32, k));
                }
            }
        }
        None
    }

    pub fn dim(&self) -> u32 {
        self.d
    }

    pub fn n(&self) -> usize {
        self.masks.len()
    }

    pub fn p(&self) -> &Probability {
        &self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn masks(&self) -> &[u32] {
        &self.masks
    }

    #[inline]
    pub fn mask(&self, v: u32) -> u32 {
        self.masks[v as usize]
    }

    fn check_vertex(&self, v: u32) -> Result<()> {
        if (v as usize) < self.masks.len() {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange { vertex: v, d: self.d })
        }
    }

    pub fn degree(&self, v: u32) -> Result<u32> {
        self.check_vertex(v)?;
        Ok(self.masks[v as usize].count_ones())
    }

    /// Degree without a range check; panics on an out-of-range label.
    #[inline]
    pub fn degree_of(&self, v: u32) -> u32 {
        self.masks[v as usize].count_ones()
    }

    pub fn neighbors(&self, v: u32) -> impl Iterator<Item = u32> + '_ {
        let mut mask = self.masks[v as usize];
        std::iter::from_fn(move || {
            if mask == 0 {
                return None;
            }
            let k = mask.trailing_zeros();
            mask &= mask - 1;
            Some(v ^ (1 << k))
        })
    }

    pub fn edge_count(&self) -> u64 {
        self.masks.iter().map(|m| m.count_ones() as u64).sum::<u64>() / 2
    }

    pub fn degree_histogram(&self) -> DegreeHistogram {
        let mut counts = vec![0u64; self.d as usize + 1];
        for m in &self.masks {
            counts[m.count_ones() as usize] += 1;
        }
        DegreeHistogram { counts }
    }

    pub fn min_degree(&self) -> u32 {
        self.masks.iter().map(|m| m.count_ones()).min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> u32 {
        self.masks.iter().map(|m| m.count_ones()).max().unwrap_or(0)
    }

    /// Vertices whose degree is in `degrees`, in label order.
    pub fn vertices_with_degree(&self, degrees: &[u32]) -> Vec<u32> {
        (0..self.n() as u32)
            .filter(|&v| degrees.contains(&self.degree_of(v)))
            .collect()
    }

    /// Component label of every vertex, numbered in order of first appearance.
    pub fn components(&self) -> Vec<u32> {
        let n = self.n();
        let mut label = vec![u32::MAX; n];
        let mut queue = VecDeque::new();
        let mut next = 0;
        for s in 0..n as u32 {
            if label[s as usize] != u32::MAX {
                continue;
            }
            label[s as usize] = next;
            queue.push_back(s);
            while let Some(x) = queue.pop_front() {
                for y in self.neighbors(x) {
                    if label[y as usize] == u32::MAX {
                        label[y as usize] = next;
                        queue.push_back(y);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut stack = vec![0u32];
        seen[0] = true;
        let mut count = 1usize;
        while let Some(x) = stack.pop() {
            for y in self.neighbors(x) {
                if !seen[y as usize] {
                    seen[y as usize] = true;
                    count += 1;
                    stack.push(y);
                }
            }
        }
        count == n
    }

    /// Distances from `source` to every vertex within `cap` steps;
    /// unreached vertices hold `u32::MAX`.
    pub fn bfs_layers(&self, source: u32, cap: u32) -> Result<Vec<u32>> {
        self.check_vertex(source)?;
        let mut dist = vec![u32::MAX; self.n()];
        let mut scratch = BfsScratch::new(self.n());
        scratch.run(self, source, cap, |v, k| dist[v as usize] = k);
        Ok(dist)
    }

    /// No two distinct vertices of degree `≤ degree_cap` lie within graph
    /// distance `h` of each other. Vertices in different components are at
    /// infinite distance.
    pub fn low_degree_spacing_ok(&self, degree_cap: u32, h: u32) -> SpacingCheck {
        let low: Vec<u32> = (0..self.n() as u32)
            .filter(|&v| self.degree_of(v) <= degree_cap)
            .collect();
        let mut scratch = BfsScratch::new(self.n());
        for &u in &low {
            let mut hit = None;
            scratch.run(self, u, h, |v, k| {
                if hit.is_none() && v != u && self.degree_of(v) <= degree_cap {
                    hit = Some((v, k));
                }
            });
            if let Some((v, k)) = hit {
                return SpacingCheck {
                    ok: false,
                    low_degree_count: low.len() as u64,
                    witness: Some((u.min(v), u.max(v), k)),
                };
            }
        }
        SpacingCheck {
            ok: true,
            low_degree_count: low.len() as u64,
            witness: None,
        }
    }
}

/// Distance between `u` and `v`, or [`Distance::ExceedsCap`] if it is larger
/// than `cap` (including different components). In the full cube this is the
/// Hamming distance.
pub fn bfs_distance(topology: Topology<'_>, u: u32, v: u32, cap: u32) -> Result<Distance> {
    match topology {
        Topology::FullCube { d } => {
            check_dim(d)?;
            let n = 1u64 << d;
            for x in [u, v] {
                if x as u64 >= n {
                    return Err(Error::VertexOutOfRange { vertex: x, d });
                }
            }
            let h = (u ^ v).count_ones();
            Ok(if h <= cap {
                Distance::Finite(h)
            } else {
                Distance::ExceedsCap
            })
        }
        Topology::Subgraph(g) => {
            g.check_vertex(u)?;
            g.check_vertex(v)?;
            if u == v {
                return Ok(Distance::Finite(0));
            }
            let mut found = Distance::ExceedsCap;
            let mut scratch = BfsScratch::new(g.n());
            scratch.run(g, u, cap, |x, k| {
                if x == v {
                    found = Distance::Finite(k);
                }
            });
            Ok(found)
        }
    }
}

/// Reusable depth-limited BFS with generation stamps.
struct BfsScratch {
    stamp: Vec<u32>,
    generation: u32,
    frontier: Vec<u32>,
    next: Vec<u32>,
}

impl BfsScratch {
    fn new(n: usize) -> Self {
        Self {
            stamp: vec![0; n],
            generation: 0,
            frontier: Vec::new(),
            next: Vec::new(),
        }
    }

    /// Calls `visit(vertex, depth)` once per vertex within `cap` of `source`.
    fn run(&mut self, g: &HypercubeSubgraph, source: u32, cap: u32, mut visit: impl FnMut(u32, u32)) {
        self.generation += 1;
        let gen = self.generation;
        self.frontier.clear();
        self.frontier.push(source);
        self.stamp[source as usize] = gen;
        visit(source, 0);
        let mut depth = 0;
        while !self.frontier.is_empty() && depth < cap {
            depth += 1;
            self.next.clear();
            for &x in &self.frontier {
                for y in g.neighbors(x) {
                    if self.stamp[y as usize] != gen {
                        self.stamp[y as usize] = gen;
                        visit(y, depth);
                        self.next.push(y);
                    }
                }
            }
            std::mem::swap(&mut self.frontier, &mut self.next);
        }
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    format: String,
    version: u32,
    d: u32,
    p: Probability,
    seed: u64,
    rng: String,
    masks: Vec<u32>,
}

impl HypercubeSubgraph {
    /// JSON container: header (format, version, d, p, seed, rng) and masks.
    pub fn to_json(&self) -> String {
        let file = InstanceFile {
            format: INSTANCE_FORMAT.to_string(),
            version: INSTANCE_FORMAT_VERSION,
            d: self.d,
            p: self.p.clone(),
            seed: self.seed,
            rng: RNG_NAME.to_string(),
            masks: self.masks.clone(),
        };
        serde_json::to_string(&file).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        if file.format != INSTANCE_FORMAT {
            return Err(Error::Format(format!("unknown format {:?}", file.format)));
        }
        if file.version != INSTANCE_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported instance version {}", file.version)));
        }
        Self::from_masks(file.d, file.p, file.seed, file.masks)
    }
}
