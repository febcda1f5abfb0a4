//! Closeness and significance of regions, and the tiered linking graph.

use crate::geometry::{BoundingGeometry, BoundingSpec, BoundaryCurve, BoundarySample, Configuration, Vec2};
use crate::integrals::{neighborhood_volumes, region_volume_weyl, IntegralError, NeighborhoodVolumes};
use crate::linking::{link_configuration, region_decomposition, LinkingError, LinkingStructure, Target};
use crate::medial::MedialGraph;
use crate::scene::Scene;
use nalgebra::Rotation2;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InvariantError {
    #[error("region {from} has zero linked volume towards {to} but a nonzero region volume")]
    Inconsistent { from: u32, to: u32 },
    #[error("scale must be positive, got {0}")]
    Scale(f64),
    #[error(transparent)]
    Integral(#[from] IntegralError),
    #[error(transparent)]
    Linking(#[from] LinkingError),
    #[error(transparent)]
    Scene(#[from] crate::scene::SceneError),
}

/// Linked volumes of every ordered pair, plus region areas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeTable {
    pub regions: Vec<u32>,
    pub areas: BTreeMap<u32, f64>,
    pub pairs: Vec<(u32, u32, NeighborhoodVolumes)>,
    /// Largest change of a directed closeness when recomputed from flow polygons.
    pub estimator_error: f64,
}

impl VolumeTable {
    pub fn get(&self, i: u32, j: u32) -> Option<&NeighborhoodVolumes> {
        self.pairs.iter().find(|p| p.0 == i && p.1 == j).map(|p| &p.2)
    }
}

pub fn compute_volumes(structure: &LinkingStructure, axes: &[MedialGraph]) -> Result<VolumeTable, InvariantError> {
    let regions: Vec<u32> = structure.regions.iter().map(|r| r.region).collect();
    let areas = axes.iter().map(|a| (a.owner, region_volume_weyl(a))).collect();
    let decomp = region_decomposition(structure);
    let mut pairs = Vec::new();
    let mut estimator_error: f64 = 0.0;
    for &i in &regions {
        for &j in &regions {
            if i == j {
                continue;
            }
            let v = neighborhood_volumes(structure, i, Target::Region(j))?;
            let piece = decomp.iter().find(|d| d.region == i).and_then(|d| d.piece(Target::Region(j)));
            if let Some(p) = piece {
                let quad_r = p.interior_area + p.exterior_area;
                if quad_r > 0.0 && v.r > 0.0 {
                    estimator_error = estimator_error.max((v.omega / v.r - p.interior_area / quad_r).abs());
                }
            }
            pairs.push((i, j, v));
        }
    }
    Ok(VolumeTable { regions, areas, pairs, estimator_error })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectedCloseness {
    pub from: u32,
    pub to: u32,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCloseness {
    pub a: u32,
    pub b: u32,
    /// `c_{a→b}·c_{b→a}`.
    pub product: f64,
    /// Pooled ratio of both directions.
    pub additive: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Significance {
    pub region: u32,
    pub s: f64,
    /// `s` times the region area.
    pub s_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub c_dir: Vec<DirectedCloseness>,
    pub c_pair: Vec<PairCloseness>,
    pub significance: Vec<Significance>,
    pub estimator_error: f64,
}

impl InvariantReport {
    pub fn c(&self, i: u32, j: u32) -> f64 {
        if i == j {
            return 1.0;
        }
        self.c_dir.iter().find(|c| c.from == i && c.to == j).map_or(0.0, |c| c.value)
    }

    fn pair(&self, i: u32, j: u32) -> Option<&PairCloseness> {
        self.c_pair.iter().find(|p| (p.a, p.b) == (i.min(j), i.max(j)))
    }

    pub fn c_pair(&self, i: u32, j: u32) -> f64 {
        if i == j {
            1.0
        } else {
            self.pair(i, j).map_or(0.0, |p| p.product)
        }
    }

    pub fn c_add(&self, i: u32, j: u32) -> f64 {
        if i == j {
            1.0
        } else {
            self.pair(i, j).map_or(0.0, |p| p.additive)
        }
    }

    pub fn s(&self, i: u32) -> f64 {
        self.significance.iter().find(|s| s.region == i).map_or(0.0, |s| s.s)
    }

    pub fn s_abs(&self, i: u32) -> f64 {
        self.significance.iter().find(|s| s.region == i).map_or(0.0, |s| s.s_abs)
    }
}

fn ratio(omega: f64, r: f64, from: u32, to: u32) -> Result<f64, InvariantError> {
    if r > 0.0 {
        Ok((omega / r).clamp(0.0, 1.0))
    } else if omega > 0.0 {
        Err(InvariantError::Inconsistent { from, to })
    } else {
        Ok(0.0)
    }
}

pub fn compute_closeness(volumes: &VolumeTable) -> Result<(Vec<DirectedCloseness>, Vec<PairCloseness>), InvariantError> {
    let mut dir = Vec::new();
    for &(i, j, v) in &volumes.pairs {
        dir.push(DirectedCloseness { from: i, to: j, value: ratio(v.omega, v.r, i, j)? });
    }
    let find = |i: u32, j: u32| dir.iter().find(|c: &&DirectedCloseness| c.from == i && c.to == j).map_or(0.0, |c| c.value);
    let mut pairs = Vec::new();
    for (a_idx, &a) in volumes.regions.iter().enumerate() {
        for &b in &volumes.regions[a_idx + 1..] {
            let (va, vb) = (volumes.get(a, b).copied(), volumes.get(b, a).copied());
            let (omega, r) = [va, vb].iter().flatten().fold((0.0, 0.0), |acc, v| (acc.0 + v.omega, acc.1 + v.r));
            pairs.push(PairCloseness {
                a: a.min(b),
                b: a.max(b),
                product: find(a, b) * find(b, a),
                additive: ratio(omega, r, a, b)?,
            });
        }
    }
    Ok((dir, pairs))
}

pub fn compute_significance(volumes: &VolumeTable) -> Result<Vec<Significance>, InvariantError> {
    volumes
        .regions
        .iter()
        .map(|&i| {
            let (omega, r) = volumes
                .pairs
                .iter()
                .filter(|p| p.0 == i && p.1 != i)
                .fold((0.0, 0.0), |acc, p| (acc.0 + p.2.omega, acc.1 + p.2.r));
            let s = ratio(omega, r, i, i)?;
            Ok(Significance { region: i, s, s_abs: s * volumes.areas.get(&i).copied().unwrap_or(0.0) })
        })
        .collect()
}

pub fn invariant_report(volumes: &VolumeTable) -> Result<InvariantReport, InvariantError> {
    let (c_dir, c_pair) = compute_closeness(volumes)?;
    let significance = compute_significance(volumes)?;
    Ok(InvariantReport { c_dir, c_pair, significance, estimator_error: volumes.estimator_error })
}

/// Whole pipeline from a configuration to its invariants.
pub fn compute_invariants(config: &Configuration) -> Result<(LinkingStructure, VolumeTable, InvariantReport), InvariantError> {
    let (axes, structure) = link_configuration(config)?;
    let volumes = compute_volumes(&structure, &axes)?;
    let report = invariant_report(&volumes)?;
    Ok((structure, volumes, report))
}

/// `Σa / Σb` and `Σ(a/b)` for positive `b`.
pub fn ratio_lemma(a: &[f64], b: &[f64]) -> (f64, f64) {
    let lhs = a.iter().sum::<f64>() / b.iter().sum::<f64>();
    let rhs = a.iter().zip(b).map(|(x, y)| x / y).sum();
    (lhs, rhs)
}

/// Consequences of the ratio lemma that fail beyond `1e-9` plus twice the estimator error.
pub fn check_ratio_inequalities(report: &InvariantReport) -> Vec<String> {
    let slack = 1e-9 + 2.0 * report.estimator_error;
    let mut out = Vec::new();
    for p in &report.c_pair {
        let bound = report.c(p.a, p.b) + report.c(p.b, p.a);
        if p.additive > bound + slack {
            out.push(format!("pooled closeness of ({}, {}) is {:.6} > {:.6}", p.a, p.b, p.additive, bound));
        }
    }
    for s in &report.significance {
        let bound: f64 = report.c_dir.iter().filter(|c| c.from == s.region).map(|c| c.value).sum();
        if s.s > bound + slack {
            out.push(format!("significance of {} is {:.6} > {:.6}", s.region, s.s, bound));
        }
    }
    out
}

/// Rotate by `theta`, scale by `scale` and translate by `shift`, including the bounding region
/// and any threshold. Samples are mapped, not resampled.
pub fn apply_similarity(
    config: &Configuration,
    theta: f64,
    shift: Vec2,
    scale: f64,
) -> Result<Configuration, InvariantError> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(InvariantError::Scale(scale));
    }
    let rot = Rotation2::new(theta);
    let map = |p: &Vec2| rot * p * scale + shift;
    let regions = config
        .regions
        .iter()
        .map(|c| BoundaryCurve {
            region_id: c.region_id,
            samples: c
                .samples
                .iter()
                .map(|s| BoundarySample {
                    position: map(&s.position),
                    normal: rot * s.normal,
                    curvature: s.curvature / scale,
                    weight: s.weight * scale,
                })
                .collect(),
        })
        .collect();
    let mut bounding = config.bounding.clone();
    bounding.geometry = match &config.bounding.geometry {
        BoundingGeometry::None => BoundingGeometry::None,
        BoundingGeometry::Polygon(p) => BoundingGeometry::Polygon(p.iter().map(map).collect()),
        BoundingGeometry::Disk { center, radius } => BoundingGeometry::Disk { center: map(center), radius: radius * scale },
    };
    bounding.spec = match &config.bounding.spec {
        BoundingSpec::AbsoluteThreshold { tau } => BoundingSpec::AbsoluteThreshold { tau: tau * scale },
        BoundingSpec::TruncatedThreshold { tau } => BoundingSpec::TruncatedThreshold { tau: tau * scale },
        BoundingSpec::Intrinsic { polygon } => BoundingSpec::Intrinsic {
            polygon: polygon
                .iter()
                .map(|p| {
                    let q = map(&Vec2::new(p[0], p[1]));
                    [q.x, q.y]
                })
                .collect(),
        },
        other => other.clone(),
    };
    Ok(Configuration { regions, bounding })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightChoice {
    Product,
    Additive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TieredEdge {
    pub a: u32,
    pub b: u32,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TieredGraph {
    pub vertices: Vec<(u32, f64)>,
    pub edges: Vec<TieredEdge>,
    pub weight_choice: WeightChoice,
}

/// Vertices weighted by significance, edges between linked regions weighted by closeness.
pub fn build_tiered_graph(report: &InvariantReport, weight_choice: WeightChoice) -> TieredGraph {
    let vertices = report.significance.iter().map(|s| (s.region, s.s)).collect();
    let edges = report
        .c_pair
        .iter()
        .filter(|p| report.c(p.a, p.b) > 0.0 || report.c(p.b, p.a) > 0.0)
        .map(|p| TieredEdge {
            a: p.a,
            b: p.b,
            weight: match weight_choice {
                WeightChoice::Product => p.product,
                WeightChoice::Additive => p.additive,
            },
        })
        .collect();
    TieredGraph { vertices, edges, weight_choice }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholded {
    /// Edges with weight at least `b`, all vertices kept.
    pub gamma_b: TieredGraph,
    /// Vertices with weight at least `a` and the edges among them.
    pub gamma_a: TieredGraph,
    /// Connected components of `gamma_b`.
    pub components: Vec<Vec<u32>>,
}

pub fn threshold_subgraphs(graph: &TieredGraph, b: f64, a: f64) -> Thresholded {
    let gamma_b = TieredGraph {
        vertices: graph.vertices.clone(),
        edges: graph.edges.iter().copied().filter(|e| e.weight >= b).collect(),
        weight_choice: graph.weight_choice,
    };
    let kept: Vec<(u32, f64)> = graph.vertices.iter().copied().filter(|v| v.1 >= a).collect();
    let has = |id: u32| kept.iter().any(|v| v.0 == id);
    let gamma_a = TieredGraph {
        edges: graph.edges.iter().copied().filter(|e| has(e.a) && has(e.b)).collect(),
        vertices: kept.clone(),
        weight_choice: graph.weight_choice,
    };
    let components = components(&gamma_b);
    Thresholded { gamma_b, gamma_a, components }
}

fn components(g: &TieredGraph) -> Vec<Vec<u32>> {
    let ids: Vec<u32> = g.vertices.iter().map(|v| v.0).collect();
    let mut label: Vec<usize> = (0..ids.len()).collect();
    let idx = |id: u32| ids.iter().position(|&x| x == id);
    loop {
        let mut changed = false;
        for e in &g.edges {
            if let (Some(i), Some(j)) = (idx(e.a), idx(e.b)) {
                let m = label[i].min(label[j]);
                if label[i] != m || label[j] != m {
                    label[i] = m;
                    label[j] = m;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut groups: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    for (i, &l) in label.iter().enumerate() {
        groups.entry(l).or_default().push(ids[i]);
    }
    groups.into_values().collect()
}

pub fn to_dot(g: &TieredGraph) -> String {
    let mut s = String::from("graph tiered {\n");
    for (id, w) in &g.vertices {
        let _ = writeln!(s, "  r{id} [label=\"{id} ({w:.4})\"];");
    }
    for e in &g.edges {
        let _ = writeln!(s, "  r{} -- r{} [label=\"{:.4}\"];", e.a, e.b, e.weight);
    }
    s.push_str("}\n");
    s
}

/// Closeness and significance over a grid of truncated-threshold values, as CSV.
pub fn tau_sweep(scene: &Scene, n: usize, taus: &[f64]) -> Result<String, InvariantError> {
    let mut csv = String::from("tau,kind,a,b,value\n");
    for &tau in taus {
        let config = scene.clone().with_bounding(BoundingSpec::TruncatedThreshold { tau }).build(n)?;
        let (_, _, report) = compute_invariants(&config)?;
        for c in &report.c_dir {
            let _ = writeln!(csv, "{tau},closeness,{},{},{:.8}", c.from, c.to, c.value);
        }
        for s in &report.significance {
            let _ = writeln!(csv, "{tau},significance,{},,{:.8}", s.region, s.s);
        }
    }
    Ok(csv)
}
