//! Brute-force ground truth on grids and point samples.
//!
//! Nothing here uses the medial or linking machinery: areas come from cell counts, ridges from a
//! brute-force distance transform and linking targets from growing tangent disks.

use crate::geometry::{bbox_of, closest_on_segment, BoundingSpec, Configuration, Vec2};
use crate::linking::Target;
use crate::medial::{MedialGraph, NodeKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rstar::primitives::GeomWithData;
use rstar::RTree;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("point ({0}, {1}) is not in the bounded exterior")]
    NotExterior(f64, f64),
    #[error("invalid oracle parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellLabel {
    Exterior,
    Region(u32),
    Wall,
}

/// Cell-centre labelling of a configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterGrid {
    pub origin: Vec2,
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
    pub cells: Vec<CellLabel>,
}

impl RasterGrid {
    pub fn new(config: &Configuration, cell: f64) -> Result<Self, OracleError> {
        check_cell(cell)?;
        let (lo, hi) = window(config);
        let nx = ((hi.x - lo.x) / cell).ceil() as usize;
        let ny = ((hi.y - lo.y) / cell).ceil() as usize;
        let mut grid = RasterGrid { origin: lo, cell, nx, ny, cells: Vec::new() };
        grid.cells = (0..ny)
            .into_par_iter()
            .flat_map_iter(|j| {
                let g = &grid;
                (0..nx).map(move |i| {
                    let p = g.center(i, j);
                    match config.region_containing(&p) {
                        Some(k) => CellLabel::Region(config.regions[k].region_id),
                        None if config.bounding.contains(&p) => CellLabel::Exterior,
                        None => CellLabel::Wall,
                    }
                })
            })
            .collect();
        Ok(grid)
    }

    pub fn center(&self, i: usize, j: usize) -> Vec2 {
        self.origin + Vec2::new((i as f64 + 0.5) * self.cell, (j as f64 + 0.5) * self.cell)
    }

    pub fn label(&self, i: usize, j: usize) -> CellLabel {
        self.cells[j * self.nx + i]
    }

    pub fn count(&self, label: CellLabel) -> usize {
        self.cells.iter().filter(|&&c| c == label).count()
    }

    pub fn cell_area(&self) -> f64 {
        self.cell * self.cell
    }
}

fn check_cell(cell: f64) -> Result<(), OracleError> {
    if cell.is_finite() && cell > 0.0 {
        Ok(())
    } else {
        Err(OracleError::Parameter(format!("cell must be positive, got {cell}")))
    }
}

/// Raster window: the wall outline, or the regions grown by the threshold (a quarter of the
/// diameter when unbounded).
pub fn window(config: &Configuration) -> (Vec2, Vec2) {
    if let Some(outline) = config.bounding.outline(256) {
        return bbox_of(outline.into_iter());
    }
    let (lo, hi) = config.bbox();
    let grow = match config.bounding.spec {
        BoundingSpec::AbsoluteThreshold { tau } | BoundingSpec::TruncatedThreshold { tau } => tau * 1.05,
        _ => 0.25 * config.diameter(),
    };
    let g = Vec2::new(grow, grow);
    (lo - g, hi + g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaEstimate {
    pub value: f64,
    pub error: f64,
}

/// Cell-count area over `[lo, hi]`. Cells tile the window exactly; the error bound counts cells
/// whose inside/outside state differs from a 4-neighbour.
pub fn raster_area(pred: impl Fn(Vec2) -> bool + Sync, lo: Vec2, hi: Vec2, cell: f64) -> Result<AreaEstimate, OracleError> {
    check_cell(cell)?;
    if !(hi.x > lo.x && hi.y > lo.y) {
        return Err(OracleError::Parameter("empty window".into()));
    }
    let nx = ((hi.x - lo.x) / cell).ceil() as usize;
    let ny = ((hi.y - lo.y) / cell).ceil() as usize;
    let (cx, cy) = ((hi.x - lo.x) / nx as f64, (hi.y - lo.y) / ny as f64);
    let inside: Vec<bool> = (0..ny)
        .into_par_iter()
        .flat_map_iter(|j| {
            let pred = &pred;
            (0..nx).map(move |i| pred(lo + Vec2::new((i as f64 + 0.5) * cx, (j as f64 + 0.5) * cy)))
        })
        .collect();
    let at = |i: usize, j: usize| inside[j * nx + i];
    let mut count = 0usize;
    let mut mixed = 0usize;
    for j in 0..ny {
        for i in 0..nx {
            let v = at(i, j);
            count += v as usize;
            let differs = (i > 0 && at(i - 1, j) != v)
                || (i + 1 < nx && at(i + 1, j) != v)
                || (j > 0 && at(i, j - 1) != v)
                || (j + 1 < ny && at(i, j + 1) != v);
            mixed += differs as usize;
        }
    }
    Ok(AreaEstimate { value: count as f64 * cx * cy, error: mixed as f64 * cx * cy })
}

/// Hit-or-miss area with a three-sigma error, deterministic given the seed.
pub fn monte_carlo_area(pred: impl Fn(Vec2) -> bool, lo: Vec2, hi: Vec2, samples: usize, seed: u64) -> AreaEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let box_area = (hi.x - lo.x) * (hi.y - lo.y);
    let hits = (0..samples)
        .filter(|_| {
            let p = Vec2::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
            pred(p)
        })
        .count();
    let p = hits as f64 / samples.max(1) as f64;
    AreaEstimate { value: p * box_area, error: 3.0 * box_area * (p * (1.0 - p) / samples.max(1) as f64).sqrt() }
}

/// Distance from `p` to the polylines of the given regions.
fn polyline_distance(config: &Configuration, regions: &[usize], p: &Vec2) -> f64 {
    let mut best = f64::INFINITY;
    for &ri in regions {
        let c = &config.regions[ri];
        let n = c.len();
        for k in 0..n {
            let (a, b) = (c.samples[k].position, c.samples[(k + 1) % n].position);
            let (q, _) = closest_on_segment(&a, &b, p);
            best = best.min((q - p).norm());
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RidgeDomain {
    Interior(u32),
    Exterior,
}

/// Kinks of the Euclidean distance to the boundary.
///
/// A cell is a ridge cell when, along one of four grid directions, the distance has a local
/// maximum there whose second difference is at least `sin(min_angle/2)` times the step, which
/// keeps kinks whose two contacts subtend at least `min_angle`. Cells closer than two cells to the
/// boundary are skipped. Near focal points the ridge thickens to a few cells.
pub fn distance_transform_ridge(
    config: &Configuration,
    domain: RidgeDomain,
    cell: f64,
    min_angle: f64,
) -> Result<Vec<Vec2>, OracleError> {
    check_cell(cell)?;
    let (sources, (lo, hi)): (Vec<usize>, (Vec2, Vec2)) = match domain {
        RidgeDomain::Interior(id) => {
            let ri = config
                .region_index(id)
                .ok_or_else(|| OracleError::Parameter(format!("no region {id}")))?;
            (vec![ri], config.regions[ri].bbox())
        }
        RidgeDomain::Exterior => ((0..config.regions.len()).collect(), window(config)),
    };
    let pad = Vec2::new(2.0 * cell, 2.0 * cell);
    let lo = lo - pad;
    let nx = ((hi.x - lo.x + 2.0 * cell) / cell).ceil() as usize;
    let ny = ((hi.y - lo.y + 2.0 * cell) / cell).ceil() as usize;
    let center = |i: usize, j: usize| lo + Vec2::new((i as f64 + 0.5) * cell, (j as f64 + 0.5) * cell);
    let dist: Vec<f64> = (0..ny)
        .into_par_iter()
        .flat_map_iter(|j| {
            let sources = &sources;
            (0..nx).map(move |i| polyline_distance(config, sources, &center(i, j)))
        })
        .collect();
    let in_domain = |p: &Vec2| match domain {
        RidgeDomain::Interior(id) => config.region(id).is_some_and(|c| c.contains(p)),
        RidgeDomain::Exterior => config.region_containing(p).is_none() && config.bounding.contains(p),
    };
    let slope = (min_angle / 2.0).sin();
    let dirs: [(isize, isize); 4] = [(1, 0), (0, 1), (1, 1), (1, -1)];
    let mut out = Vec::new();
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let d = dist[j * nx + i];
            if d < 2.0 * cell {
                continue;
            }
            let p = center(i, j);
            if !in_domain(&p) {
                continue;
            }
            let kink = dirs.iter().any(|&(di, dj)| {
                let a = dist[(j as isize - dj) as usize * nx + (i as isize - di) as usize];
                let b = dist[(j as isize + dj) as usize * nx + (i as isize + di) as usize];
                let step = cell * ((di * di + dj * dj) as f64).sqrt();
                d >= a && d >= b && 2.0 * d - a - b >= slope * step
            });
            if kink {
                out.push(p);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearContact {
    pub region: u32,
    pub point: Vec2,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteLink {
    /// Nearest boundary point of each of the two closest regions.
    pub contacts: Vec<NearContact>,
    /// Whether the two distances agree within the tolerance.
    pub equidistant: bool,
}

/// Nearest contacts of an exterior point on the two closest regions.
pub fn brute_force_link(config: &Configuration, x: &Vec2, tol: f64) -> Result<BruteLink, OracleError> {
    if config.region_containing(x).is_some() || !config.bounding.contains(x) {
        return Err(OracleError::NotExterior(x.x, x.y));
    }
    let mut contacts: Vec<NearContact> = config
        .regions
        .iter()
        .map(|c| {
            let n = c.len();
            let mut best = NearContact { region: c.region_id, point: *x, distance: f64::INFINITY };
            for k in 0..n {
                let (q, _) = closest_on_segment(&c.samples[k].position, &c.samples[(k + 1) % n].position, x);
                let d = (q - x).norm();
                if d < best.distance {
                    best.point = q;
                    best.distance = d;
                }
            }
            best
        })
        .collect();
    contacts.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    contacts.truncate(2);
    let equidistant = contacts.len() == 2 && (contacts[0].distance - contacts[1].distance).abs() <= tol;
    Ok(BruteLink { contacts, equidistant })
}

/// Linking target and exterior length of a boundary sample from the largest empty disk tangent
/// on its outer side, found by bisection over the disk radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleLink {
    pub target: Target,
    /// Exterior length; infinite when no boundary point ever enters the disk.
    pub length: f64,
}

pub fn oracle_links(config: &Configuration) -> Vec<Vec<OracleLink>> {
    let tree = sample_tree(config, None);
    // Near-tangent rays meet a distant region far out.
    let reach = 1e3 * config.diameter().max(window_diameter(config));
    let tol = 1e-9 * config.diameter();
    config
        .regions
        .iter()
        .map(|c| {
            c.samples
                .par_iter()
                .map(|s| {
                    let violator = |t: f64| -> Option<u32> {
                        let q = s.position + s.normal * t;
                        let hit = tree.nearest_neighbor(&[q.x, q.y]).expect("samples exist");
                        let z = hit.geom();
                        let d = (Vec2::new(z[0], z[1]) - q).norm();
                        (d < t - tol).then(|| config.regions[hit.data.0].region_id)
                    };
                    if violator(reach).is_none() {
                        return OracleLink { target: Target::Infinity, length: f64::INFINITY };
                    }
                    let (mut a, mut b) = (0.0, reach);
                    for _ in 0..80 {
                        let m = 0.5 * (a + b);
                        if violator(m).is_some() {
                            b = m;
                        } else {
                            a = m;
                        }
                    }
                    let id = violator(b).expect("upper end violates");
                    let target = if id == c.region_id { Target::SelfLink } else { Target::Region(id) };
                    OracleLink { target, length: a }
                })
                .collect()
        })
        .collect()
}

type SampleTree = RTree<GeomWithData<[f64; 2], (usize, usize)>>;

/// Boundary samples keyed by (region index, sample index); one region or all of them.
fn sample_tree(config: &Configuration, region: Option<usize>) -> SampleTree {
    let items = config
        .regions
        .iter()
        .enumerate()
        .filter(|(ri, _)| region.is_none_or(|r| r == *ri))
        .flat_map(|(ri, c)| {
            c.samples.iter().enumerate().map(move |(k, s)| GeomWithData::new([s.position.x, s.position.y], (ri, k)))
        })
        .collect();
    RTree::bulk_load(items)
}

fn window_diameter(config: &Configuration) -> f64 {
    let (lo, hi) = window(config);
    (hi - lo).norm()
}

/// Cell-count volumes of `Ω_{i→j}` and `N_{i→j}`, keyed by (region, target).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterVolumes {
    pub cell: f64,
    pub omega: BTreeMap<(u32, Target), f64>,
    pub n: BTreeMap<(u32, Target), f64>,
    /// Half the area of cells on the edge of each bucket, a bound on the cell-count error.
    pub omega_error: BTreeMap<(u32, Target), f64>,
    pub n_error: BTreeMap<(u32, Target), f64>,
}

impl RasterVolumes {
    /// `Ω/(Ω+N)` for one bucket, zero when empty.
    pub fn closeness(&self, region: u32, target: Target) -> f64 {
        let o = self.omega.get(&(region, target)).copied().unwrap_or(0.0);
        let n = self.n.get(&(region, target)).copied().unwrap_or(0.0);
        if o + n > 0.0 {
            o / (o + n)
        } else {
            0.0
        }
    }

    /// Bound on the error of [`closeness`](Self::closeness) from the edge cells of both volumes.
    pub fn closeness_error(&self, region: u32, target: Target) -> f64 {
        let get = |m: &BTreeMap<(u32, Target), f64>| m.get(&(region, target)).copied().unwrap_or(0.0);
        let (o, n) = (get(&self.omega), get(&self.n));
        let r = o + n;
        if r > 0.0 {
            (n * get(&self.omega_error) + o * get(&self.n_error)) / (r * r)
        } else {
            0.0
        }
    }
}

/// Assigns every cell to the bucket of its nearest boundary sample: interior cells to their own
/// region's nearest sample, exterior cells to the nearest sample overall when within its linking
/// length and inside the bounding region.
pub fn raster_linking_volumes(config: &Configuration, cell: f64) -> Result<RasterVolumes, OracleError> {
    let grid = RasterGrid::new(config, cell)?;
    let links = oracle_links(config);
    let tau = config.bounding.tau();
    let absolute = matches!(config.bounding.spec, BoundingSpec::AbsoluteThreshold { .. });
    let effective: Vec<Vec<(Target, f64)>> = links
        .iter()
        .map(|ls| {
            ls.iter()
                .map(|l| match tau {
                    Some(t) if absolute && l.length > t => (Target::Infinity, 0.0),
                    Some(t) => (l.target, l.length.min(t)),
                    None => (l.target, l.length),
                })
                .collect()
        })
        .collect();
    let all = sample_tree(config, None);
    let own: Vec<SampleTree> = (0..config.regions.len()).map(|ri| sample_tree(config, Some(ri))).collect();
    let nearest = |tree: &SampleTree, p: &Vec2| -> (usize, usize) {
        let hit = tree.nearest_neighbor(&[p.x, p.y]).expect("samples exist");
        hit.data
    };
    // Cells equidistant from several samples, such as those on a mirror line, are shared.
    let tie = 1e-9 * cell;
    let per_cell: Vec<Vec<(bool, u32, Target, f64)>> = (0..grid.ny)
        .into_par_iter()
        .flat_map_iter(|j| {
            let (grid, effective, nearest, all, own) = (&grid, &effective, &nearest, &all, &own);
            (0..grid.nx).map(move |i| {
                let p = grid.center(i, j);
                match grid.label(i, j) {
                    CellLabel::Wall => Vec::new(),
                    CellLabel::Region(id) => match config.region_index(id) {
                        Some(ri) => vec![(true, id, effective[ri][nearest(&own[ri], &p).1].0, 1.0)],
                        None => Vec::new(),
                    },
                    CellLabel::Exterior => {
                        let q = [p.x, p.y];
                        let mut hits = all.nearest_neighbor_iter_with_distance_2(&q);
                        let Some((first, d2)) = hits.next() else { return Vec::new() };
                        let d = d2.sqrt();
                        let mut tied = vec![first.data];
                        tied.extend(hits.take_while(|(_, e2)| e2.sqrt() <= d + tie).map(|(h, _)| h.data));
                        let w = 1.0 / tied.len() as f64;
                        tied.into_iter()
                            .filter_map(|(ri, k)| {
                                let (t, len) = effective[ri][k];
                                (d <= len).then_some((false, config.regions[ri].region_id, t, w))
                            })
                            .collect()
                    }
                }
            })
        })
        .collect();
    let key = |i: usize, j: usize| per_cell[j * grid.nx + i].first().map(|&(inside, id, t, _)| (inside, id, t));
    let mut out = RasterVolumes {
        cell,
        omega: BTreeMap::new(),
        n: BTreeMap::new(),
        omega_error: BTreeMap::new(),
        n_error: BTreeMap::new(),
    };
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let Some(k) = key(i, j) else { continue };
            let edge = [(i.wrapping_sub(1), j), (i + 1, j), (i, j.wrapping_sub(1)), (i, j + 1)]
                .iter()
                .any(|&(a, b)| a >= grid.nx || b >= grid.ny || key(a, b) != Some(k));
            if edge {
                let map = if k.0 { &mut out.omega_error } else { &mut out.n_error };
                *map.entry((k.1, k.2)).or_insert(0.0) += 0.5 * grid.cell_area();
            }
        }
    }
    for (inside, id, t, w) in per_cell.into_iter().flatten() {
        let map = if inside { &mut out.omega } else { &mut out.n };
        *map.entry((id, t)).or_insert(0.0) += w * grid.cell_area();
    }
    Ok(out)
}

/// Signed circumcircle curvature at each vertex; positive where a counter-clockwise curve turns
/// left. Open polylines have no value at their ends.
pub fn polyline_curvature(pts: &[Vec2], closed: bool) -> Vec<Option<f64>> {
    let n = pts.len();
    (0..n)
        .map(|k| {
            if !closed && (k == 0 || k + 1 == n) || n < 3 {
                return None;
            }
            let (a, b, c) = (pts[(k + n - 1) % n], pts[k], pts[(k + 1) % n]);
            let (ab, bc, ca) = ((b - a).norm(), (c - b).norm(), (a - c).norm());
            let den = ab * bc * ca;
            (den > 0.0).then(|| 2.0 * crate::geometry::cross(&(b - a), &(c - b)) / den)
        })
        .collect()
}

/// Radius around a focal point or collapse centre within which the ridge oracle thickens: the
/// distance cone there has second difference `step²/δ`, which passes the kink test while
/// `δ ≤ step / sin(min_angle/2)` for diagonal steps.
pub fn focal_blur(cell: f64, min_angle: f64) -> f64 {
    std::f64::consts::SQRT_2 * cell / (min_angle / 2.0).sin()
}

/// One-sided distances between an axis and a ridge oracle computed with the same `min_angle`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RidgeComparison {
    /// Worst distance from an axis sample the oracle can see to the ridge.
    pub axis_to_ridge: f64,
    /// Worst distance from a ridge cell to the axis polylines, outside the focal blur.
    pub ridge_to_axis: f64,
    pub compared_axis: usize,
    pub compared_ridge: usize,
}

impl RidgeComparison {
    pub fn hausdorff(&self) -> f64 {
        self.axis_to_ridge.max(self.ridge_to_axis)
    }
}

/// Pruning-matched comparison of an axis with its ridge oracle.
///
/// Only samples whose contacts subtend at least `min_angle` must appear in the ridge; ridge cells
/// are measured against the axis as polylines, skipping the blur radius around `A₃` and collapse
/// nodes.
pub fn compare_with_ridge(axis: &MedialGraph, ridge: &[Vec2], cell: f64, min_angle: f64) -> RidgeComparison {
    let visible: Vec<Vec2> = axis
        .chains
        .iter()
        .flat_map(|c| c.samples.iter())
        .filter(|s| axis.sheet(s.sheet).and_then(|sh| sh.object_angle()).is_some_and(|a| a >= min_angle))
        .map(|s| s.x)
        .collect();
    let mut segments: Vec<(Vec2, Vec2)> = Vec::new();
    for c in &axis.chains {
        let mut line: Vec<Vec2> = Vec::with_capacity(c.samples.len() + 2);
        let ends = |i: usize| axis.nodes.get(i).filter(|n| n.kind != NodeKind::Open).map(|n| n.position);
        line.extend(ends(c.start));
        line.extend(c.samples.iter().map(|s| s.x));
        line.extend(ends(c.end));
        segments.extend(line.windows(2).map(|w| (w[0], w[1])));
    }
    let singular: Vec<Vec2> = axis
        .nodes
        .iter()
        .filter(|n| matches!(n.kind, NodeKind::A3 | NodeKind::Collapsed))
        .map(|n| n.position)
        .collect();
    let points: Vec<Vec2> = axis.nodes.iter().filter(|n| n.kind != NodeKind::Open).map(|n| n.position).collect();
    let blur = focal_blur(cell, min_angle);
    let kept: Vec<Vec2> = ridge.iter().copied().filter(|p| singular.iter().all(|q| (p - q).norm() > blur)).collect();
    let to_axis = |p: &Vec2| {
        let seg = segments.iter().map(|(a, b)| (closest_on_segment(a, b, p).0 - p).norm());
        let pts = points.iter().map(|q| (q - p).norm());
        seg.chain(pts).fold(f64::INFINITY, f64::min)
    };
    let ridge_to_axis = kept.par_iter().map(to_axis).reduce(|| 0.0, f64::max);
    RidgeComparison {
        axis_to_ridge: directed_hausdorff(&visible, ridge),
        ridge_to_axis,
        compared_axis: visible.len(),
        compared_ridge: kept.len(),
    }
}

/// Largest distance from a point of `a` to the set `b`.
pub fn directed_hausdorff(a: &[Vec2], b: &[Vec2]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.par_iter()
        .map(|p| b.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
        .reduce(|| 0.0, f64::max)
}

pub fn hausdorff(a: &[Vec2], b: &[Vec2]) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene;
    use std::f64::consts::PI;

    #[test]
    fn raster_disk_and_trivial_windows() {
        let (lo, hi) = (Vec2::new(-1.1, -1.1), Vec2::new(1.1, 1.1));
        let disk = raster_area(|p| p.norm() <= 1.0, lo, hi, 0.005).unwrap();
        assert!((disk.value - PI).abs() < 0.002 * PI);
        assert!((disk.value - PI).abs() <= disk.error);
        assert_eq!(raster_area(|_| false, lo, hi, 0.01).unwrap().value, 0.0);
        let full = raster_area(|_| true, lo, Vec2::new(1.0, 0.7), 0.03).unwrap();
        assert!((full.value - 2.1 * 1.8).abs() < 1e-12);
        assert_eq!(full.error, 0.0);
        assert!(raster_area(|_| true, lo, hi, 0.0).is_err());
    }

    #[test]
    fn monte_carlo_is_seeded() {
        let (lo, hi) = (Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0));
        let a = monte_carlo_area(|p| p.norm() <= 1.0, lo, hi, 100_000, 7);
        let b = monte_carlo_area(|p| p.norm() <= 1.0, lo, hi, 100_000, 7);
        assert_eq!(a, b);
        assert!((a.value - PI).abs() <= a.error);
    }

    #[test]
    fn ellipse_ridge_is_the_focal_segment() {
        let c = scene::ellipse().build(512).unwrap();
        let cell = 0.02;
        let ridge = distance_transform_ridge(&c, RidgeDomain::Interior(1), cell, 0.7).unwrap();
        assert!(!ridge.is_empty());
        for p in &ridge {
            let x = p.x.clamp(-1.5, 1.5);
            assert!(((p.x - x).powi(2) + p.y * p.y).sqrt() <= 2.0 * cell, "{p}");
        }
        let xs: Vec<f64> = ridge.iter().map(|p| p.x).collect();
        assert!(xs.iter().cloned().fold(f64::INFINITY, f64::min) < -1.4);
        assert!(xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) > 1.4);
    }

    #[test]
    fn disk_ridge_is_central() {
        let c = scene::two_disks().build(256).unwrap();
        let ridge = distance_transform_ridge(&c, RidgeDomain::Interior(1), 0.02, 0.7).unwrap();
        assert!(!ridge.is_empty());
        assert!(ridge.iter().all(|p| (p - Vec2::new(-3.0, 0.0)).norm() < 0.1));
    }

    #[test]
    fn two_disk_exterior_ridge_is_the_bisector() {
        let c = scene::two_disks().build(256).unwrap();
        let ridge = distance_transform_ridge(&c, RidgeDomain::Exterior, 0.02, 0.7).unwrap();
        assert!(ridge.len() > 50);
        assert!(ridge.iter().all(|p| p.x.abs() <= 0.04));
    }

    #[test]
    fn brute_link() {
        let c = scene::two_disks().build(256).unwrap();
        let l = brute_force_link(&c, &Vec2::new(0.0, 0.3), 1e-6).unwrap();
        assert!(l.equidistant);
        assert_ne!(l.contacts[0].region, l.contacts[1].region);
        assert!(!brute_force_link(&c, &Vec2::new(1.5, 0.0), 1e-6).unwrap().equidistant);
        assert_eq!(brute_force_link(&c, &Vec2::new(3.0, 0.0), 1e-6), Err(OracleError::NotExterior(3.0, 0.0)));
    }

    #[test]
    fn oracle_links_of_two_disks() {
        let c = scene::two_disks().build(128).unwrap();
        let links = oracle_links(&c);
        let facing = links[0][0];
        assert_eq!(facing.target, Target::Region(2));
        assert!((facing.length - 2.0).abs() < 1e-3);
        assert_eq!(links[0][64].target, Target::Infinity);
    }

    #[test]
    fn circumcircle_curvature() {
        let pts: Vec<Vec2> = (0..100).map(|k| Vec2::new(2.0 * (k as f64 * 0.0628).cos(), 2.0 * (k as f64 * 0.0628).sin())).collect();
        let k = polyline_curvature(&pts, false);
        assert!(k[0].is_none() && k[99].is_none());
        assert!((k[50].unwrap() - 0.5).abs() < 1e-9);
        assert_eq!(hausdorff(&pts, &pts), 0.0);
    }
}
