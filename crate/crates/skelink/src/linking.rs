//! Exterior linking axis, linking functions, correspondences and the region decomposition.
//!
//! Each interior sheet is parametrised by its boundary contact `y = x + r·u`. Its linking
//! length is found by casting `x + t·u` (t ≥ r) against the polylines traced by the exterior
//! disk centres. Unlinked sheets are decided by the height-function test.

use crate::geometry::{
    convex_hull, cross, point_in_polygon, polygon_area, ray_segment, segments_cross, BoundingGeometry, BoundingRegion,
    BoundingSpec, Configuration, Tolerances, Vec2,
};
use crate::medial::{
    compute_all_axes, exterior_graph, exterior_tours, BreakKind, MedialError, MedialGraph, MedialParams, NodeKind,
    Sheet, SheetRef, Tour,
};
use crate::operators::{chi, evolve_under_linking, FlowSchedule, OperatorError, OperatorState};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkingError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("sheet {index} of region {region} has unbounded linking length; choose a bounding mode")]
    Unbounded { region: u32, index: usize },
    #[error(transparent)]
    Medial(#[from] MedialError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Target {
    Region(u32),
    SelfLink,
    Infinity,
}

/// How the linking vector of a sheet ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkEnd {
    /// On the linking axis.
    Axis,
    /// Truncated at the bounding wall.
    Wall,
    /// Truncated by the threshold `τ`.
    Threshold,
    /// No linking: unbounded, or dropped by an absolute threshold.
    Unlinked,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkedSheet {
    pub sheet: Sheet,
    /// Effective linking length used by flows and integrals.
    pub ell: f64,
    /// Distance along the ray to the unclipped linking axis; infinite when unlinked.
    pub ell_raw: f64,
    /// Bucket of the decomposition.
    pub target: Target,
    /// Target before bounding was applied.
    pub raw_target: Target,
    pub end: LinkEnd,
    pub stratum: usize,
    pub ray_infinity: bool,
    pub height_infinity: bool,
}

impl LinkedSheet {
    pub fn r(&self) -> f64 {
        self.sheet.r
    }

    pub fn endpoint(&self) -> Vec2 {
        self.sheet.x + self.sheet.u * self.ell
    }

    pub fn raw_endpoint(&self) -> Vec2 {
        self.sheet.x + self.sheet.u * self.ell_raw
    }

    pub fn sheet_ref(&self) -> SheetRef {
        SheetRef { region: self.sheet.region, index: self.sheet.index }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionLinks {
    pub region: u32,
    pub sheets: Vec<LinkedSheet>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkKind {
    Between,
    SelfLink,
    Partial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub a: SheetRef,
    pub b: SheetRef,
    /// Fractional index of the second contact on `b`'s boundary.
    pub b_param: f64,
    pub kind: LinkKind,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkingStructure {
    pub m0: MedialGraph,
    pub regions: Vec<RegionLinks>,
    pub correspondences: Vec<Correspondence>,
    pub bounding: BoundingRegion,
    pub clip_points: Vec<Vec2>,
    /// Fraction of sheets where the ray cast and the height test agree on linking to infinity.
    pub infinity_agreement: f64,
    pub eps_link: f64,
    pub diagnostics: Vec<String>,
}

impl LinkingStructure {
    pub fn region(&self, id: u32) -> Option<&RegionLinks> {
        self.regions.iter().find(|r| r.region == id)
    }

    pub fn sheet(&self, s: SheetRef) -> Option<&LinkedSheet> {
        self.region(s.region).and_then(|r| r.sheets.get(s.index))
    }

    pub fn all_sheets(&self) -> impl Iterator<Item = &LinkedSheet> {
        self.regions.iter().flat_map(|r| r.sheets.iter())
    }

    /// Regions `j ≠ i` that some sheet of `i` links to.
    pub fn neighbours(&self, i: u32) -> Vec<u32> {
        let mut s = BTreeSet::new();
        if let Some(r) = self.region(i) {
            for l in &r.sheets {
                if let Target::Region(j) = l.target {
                    s.insert(j);
                }
            }
        }
        s.into_iter().collect()
    }
}

/// Exterior linking axis `M₀`, clipped to the bounding wall.
pub fn compute_linking_axis(config: &Configuration, params: &MedialParams) -> MedialGraph {
    let tours = exterior_tours(config, params.eps_h);
    let bounding = &config.bounding;
    let breaks: Vec<Vec<Option<BreakKind>>> = tours
        .iter()
        .map(|t| {
            t.sheets
                .iter()
                .map(|s| {
                    if !s.r.is_finite() {
                        Some(BreakKind::Infinite)
                    } else if bounding.has_wall() && !bounding.contains(&s.x) {
                        Some(BreakKind::OutOfBounds)
                    } else {
                        None
                    }
                })
                .collect()
        })
        .collect();
    let mut graph = exterior_graph(tours, breaks, params.theta_min);
    relocate_clips(&mut graph, bounding);
    graph
}

/// Move wall-clip nodes onto the wall along the chain direction, warning on grazing clips.
fn relocate_clips(graph: &mut MedialGraph, bounding: &BoundingRegion) {
    for ni in 0..graph.nodes.len() {
        if graph.nodes[ni].kind != NodeKind::WallClip {
            continue;
        }
        let end = graph.chains.iter().enumerate().find_map(|(ci, c)| {
            let n = c.samples.len();
            if n < 2 {
                None
            } else if c.end == ni {
                Some((ci, c.samples[n - 1].x, c.samples[n - 2].x))
            } else if c.start == ni {
                Some((ci, c.samples[0].x, c.samples[1].x))
            } else {
                None
            }
        });
        let Some((ci, last, prev)) = end else { continue };
        let d = last - prev;
        if d.norm() == 0.0 {
            continue;
        }
        let d = d.normalize();
        if let Some(w) = bounding.wall_distance(&last, &d) {
            let clip = last + d * w;
            graph.nodes[ni].position = clip;
            if let BoundingGeometry::Polygon(poly) = &bounding.geometry {
                let m = poly.len();
                let edge = (0..m)
                    .min_by(|&a, &b| {
                        let da = crate::geometry::closest_on_segment(&poly[a], &poly[(a + 1) % m], &clip).0 - clip;
                        let db = crate::geometry::closest_on_segment(&poly[b], &poly[(b + 1) % m], &clip).0 - clip;
                        da.norm().total_cmp(&db.norm())
                    })
                    .unwrap();
                let e = (poly[(edge + 1) % m] - poly[edge]).normalize();
                if cross(&e, &d).abs() < 0.1 {
                    graph.diagnostics.push(format!("grazing wall clip of chain {ci} at ({:.4}, {:.4})", clip.x, clip.y));
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: Vec2,
    b: Vec2,
    tour: usize,
    index: usize,
    next: usize,
}

/// Polylines of consecutive finite exterior disk centres, plus their vertices.
fn axis_polylines(tours: &[Tour], jump: f64) -> (Vec<Segment>, Vec<(Vec2, usize, usize)>) {
    let mut segs = Vec::new();
    let mut verts = Vec::new();
    for (ti, t) in tours.iter().enumerate() {
        let m = t.sheets.len();
        for k in 0..m {
            let s = &t.sheets[k];
            if !s.r.is_finite() {
                continue;
            }
            verts.push((s.x, ti, k));
            let n = &t.sheets[(k + 1) % m];
            if n.r.is_finite() && (n.x - s.x).norm() <= jump {
                segs.push(Segment { a: s.x, b: n.x, tour: ti, index: k, next: (k + 1) % m });
            }
        }
    }
    (segs, verts)
}

fn hit_target(tours: &[Tour], own: u32, tour: usize, index: usize) -> Target {
    let t = &tours[tour];
    let p = t.sheets[index].partner.map(|p| p.region).unwrap_or(t.region);
    if t.region == own {
        if p == own {
            Target::SelfLink
        } else {
            Target::Region(p)
        }
    } else {
        Target::Region(t.region)
    }
}

/// First crossing of `y + t·dir` (t ≥ 0) with the axis polylines; ties go to the most
/// perpendicular incidence.
fn cast(
    y: &Vec2,
    dir: &Vec2,
    segs: &[Segment],
    verts: &[(Vec2, usize, usize)],
    tie: f64,
) -> Option<(f64, usize, usize)> {
    let mut hits: Vec<(f64, f64, usize, usize)> = Vec::new();
    for s in segs {
        if let Some(t) = ray_segment(y, dir, &s.a, &s.b, 1e-9) {
            if t >= -tie {
                let e = s.b - s.a;
                let incidence = 1.0 - (cross(dir, &e) / e.norm()).abs();
                let (ti, k) = if (y + dir * t - s.b).norm() < (y + dir * t - s.a).norm() {
                    (s.tour, s.next)
                } else {
                    (s.tour, s.index)
                };
                hits.push((t.max(0.0), incidence, ti, k));
            }
        }
    }
    for &(v, ti, k) in verts {
        let w = v - y;
        let t = w.dot(dir);
        if t >= -tie && cross(dir, &w).abs() <= tie {
            hits.push((t.max(0.0), -1.0, ti, k));
        }
    }
    let tmin = hits.iter().map(|h| h.0).fold(f64::INFINITY, f64::min);
    hits.into_iter()
        .filter(|h| h.0 <= tmin + tie)
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)))
        .map(|h| (h.0, h.2, h.3))
}

/// Height-function test: the sample is the unique maximiser of the height in its normal direction.
pub fn height_unique_max(config: &Configuration, region: usize, k: usize, eps_h: f64) -> bool {
    let c = &config.regions[region];
    let s = &c.samples[k];
    let h0 = s.normal.dot(&s.position);
    config.regions.iter().enumerate().all(|(ri, other)| {
        other
            .samples
            .iter()
            .enumerate()
            .all(|(j, z)| (ri == region && j == k) || s.normal.dot(&z.position) <= h0 + eps_h)
    })
}

/// Linking functions of every interior sheet against `M₀`.
pub fn compute_linking_function(
    config: &Configuration,
    axes: &[MedialGraph],
    m0: MedialGraph,
    tol: &Tolerances,
) -> Result<LinkingStructure, LinkingError> {
    let diameter = config.diameter();
    let tie = 1e-7 * diameter;
    let (segs, verts) = axis_polylines(&m0.tours, diameter);
    let bounding = &config.bounding;
    let mut diagnostics = Vec::new();
    let mut regions = Vec::new();
    let mut agree = 0usize;
    let mut total = 0usize;
    for (ri, c) in config.regions.iter().enumerate() {
        let axis = axes
            .iter()
            .find(|a| a.owner == c.region_id)
            .ok_or(LinkingError::Medial(MedialError::MissingRegion(c.region_id)))?;
        let tour = &axis.tours[0];
        let ext = m0.tour(c.region_id).ok_or(LinkingError::Medial(MedialError::MissingRegion(c.region_id)))?;
        let sheets: Vec<LinkedSheet> = tour
            .sheets
            .par_iter()
            .enumerate()
            .map(|(k, s)| {
                let y = s.contact;
                let height_infinity = height_unique_max(config, ri, k, tol.eps_h);
                let hit = cast(&y, &s.u, &segs, &verts, tie);
                let ray_infinity = hit.is_none();
                let (raw_target, ell_raw) = if height_infinity {
                    (Target::Infinity, f64::INFINITY)
                } else if let Some((t, ti, j)) = hit {
                    (hit_target(&m0.tours, c.region_id, ti, j), s.r + t)
                } else {
                    let e = &ext.sheets[k];
                    let p = e.partner.map(|p| p.region).unwrap_or(c.region_id);
                    let target = if p == c.region_id { Target::SelfLink } else { Target::Region(p) };
                    (target, s.r + e.r)
                };
                let (ell, end, target) = apply_bounding(bounding, s, ell_raw, raw_target);
                LinkedSheet {
                    sheet: *s,
                    ell,
                    ell_raw,
                    target,
                    raw_target,
                    end,
                    stratum: 0,
                    ray_infinity,
                    height_infinity,
                }
            })
            .collect();
        for l in &sheets {
            total += 1;
            if l.ray_infinity == l.height_infinity {
                agree += 1;
            }
        }
        regions.push(RegionLinks { region: c.region_id, sheets });
    }
    assign_strata(&mut regions);
    let infinity_agreement = if total == 0 { 1.0 } else { agree as f64 / total as f64 };
    if infinity_agreement < 0.99 {
        diagnostics.push(format!("ray and height tests agree on only {:.2}% of sheets", 100.0 * infinity_agreement));
    }
    let clip_points = m0.nodes.iter().filter(|n| n.kind == NodeKind::WallClip).map(|n| n.position).collect();
    let mut structure = LinkingStructure {
        m0,
        regions,
        correspondences: Vec::new(),
        bounding: bounding.clone(),
        clip_points,
        infinity_agreement,
        eps_link: tol.eps_link,
        diagnostics,
    };
    let (pairs, unmatched) = linked_correspondences(&structure);
    if unmatched > 0.05 {
        structure
            .diagnostics
            .push(format!("{:.1}% of linked sheets found no partner; sampling may be too coarse", 100.0 * unmatched));
    }
    structure.correspondences = pairs;
    Ok(structure)
}

fn apply_bounding(bounding: &BoundingRegion, s: &Sheet, ell_raw: f64, raw: Target) -> (f64, LinkEnd, Target) {
    match bounding.spec {
        BoundingSpec::Unbounded => {
            if ell_raw.is_finite() {
                (ell_raw, LinkEnd::Axis, raw)
            } else {
                (f64::INFINITY, LinkEnd::Unlinked, Target::Infinity)
            }
        }
        BoundingSpec::AbsoluteThreshold { tau } => {
            if ell_raw - s.r > tau {
                (s.r, LinkEnd::Unlinked, Target::Infinity)
            } else {
                (ell_raw, LinkEnd::Axis, raw)
            }
        }
        BoundingSpec::TruncatedThreshold { tau } => {
            if ell_raw - s.r > tau {
                (s.r + tau, LinkEnd::Threshold, raw)
            } else {
                (ell_raw, LinkEnd::Axis, raw)
            }
        }
        _ => {
            let wall = bounding.wall_distance(&s.contact, &s.u).map(|w| s.r + w).unwrap_or(s.r);
            if wall < ell_raw {
                (wall, LinkEnd::Wall, raw)
            } else {
                (ell_raw, LinkEnd::Axis, raw)
            }
        }
    }
}

/// Stratum ids: maximal runs of equal target along each boundary.
fn assign_strata(regions: &mut [RegionLinks]) {
    let mut next = 0;
    for r in regions.iter_mut() {
        let n = r.sheets.len();
        if n == 0 {
            continue;
        }
        let start = (0..n).find(|&k| r.sheets[k].target != r.sheets[(k + n - 1) % n].target).unwrap_or(0);
        for step in 0..n {
            let k = (start + step) % n;
            if step > 0 && r.sheets[k].target != r.sheets[(k + n - 1) % n].target {
                next += 1;
            }
            r.sheets[k].stratum = next;
        }
        next += 1;
    }
}

/// Pairs of sheets whose unclipped flows end at a common point of `M₀`, and the unmatched fraction.
pub fn linked_correspondences(structure: &LinkingStructure) -> (Vec<Correspondence>, f64) {
    let mut pairs: BTreeSet<(u32, usize, u32, usize)> = BTreeSet::new();
    let mut found: Vec<(SheetRef, SheetRef, f64, f64)> = Vec::new();
    let mut candidates = 0usize;
    let mut matched = 0usize;
    for r in &structure.regions {
        let Some(ext) = structure.m0.tour(r.region) else { continue };
        for l in &r.sheets {
            if !l.ell_raw.is_finite() {
                continue;
            }
            candidates += 1;
            let Some(p) = ext.sheets[l.sheet.index].partner else { continue };
            let Some(other) = structure.region(p.region) else { continue };
            let m = other.sheets.len();
            let pa = l.raw_endpoint();
            let centre = p.index.round() as isize;
            let best = (-3..=3)
                .map(|d| (centre + d).rem_euclid(m as isize) as usize)
                .filter(|&j| !(p.region == r.region && j == l.sheet.index))
                .filter(|&j| other.sheets[j].ell_raw.is_finite())
                .map(|j| (j, (other.sheets[j].raw_endpoint() - pa).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((j, gap)) = best {
                if gap <= structure.eps_link {
                    matched += 1;
                    let a = l.sheet_ref();
                    let b = SheetRef { region: p.region, index: j };
                    let key = if (a.region, a.index) <= (b.region, b.index) {
                        (a.region, a.index, b.region, b.index)
                    } else {
                        (b.region, b.index, a.region, a.index)
                    };
                    if pairs.insert(key) {
                        found.push((a, b, p.index, gap));
                    }
                }
            }
        }
    }
    let out = found
        .into_iter()
        .map(|(a, b, b_param, gap)| {
            let la = structure.sheet(a).unwrap();
            let lb = structure.sheet(b).unwrap();
            let kind = if a.region == b.region {
                LinkKind::SelfLink
            } else if la.end == LinkEnd::Axis && lb.end == LinkEnd::Axis {
                LinkKind::Between
            } else {
                LinkKind::Partial
            };
            Correspondence { a, b, b_param, kind, gap }
        })
        .collect();
    let unmatched = if candidates == 0 { 0.0 } else { 1.0 - matched as f64 / candidates as f64 };
    (out, unmatched)
}

/// Whole pipeline: interior axes, `M₀` and linking functions.
pub fn link_configuration(config: &Configuration) -> Result<(Vec<MedialGraph>, LinkingStructure), LinkingError> {
    link_configuration_with(config, &Tolerances::for_config(config))
}

pub fn link_configuration_with(
    config: &Configuration,
    tol: &Tolerances,
) -> Result<(Vec<MedialGraph>, LinkingStructure), LinkingError> {
    let params = MedialParams { theta_min: tol.theta_min, eps_geom: tol.eps_geom, eps_h: tol.eps_h };
    let axes = compute_all_axes(config, &params)?;
    let m0 = compute_linking_axis(config, &params);
    let structure = compute_linking_function(config, &axes, m0, tol)?;
    Ok((axes, structure))
}

/// Piecewise-linear-in-χ flow: boundary at `t = ½`, linking axis at `t = 1`.
pub fn linking_flow(sheet: &LinkedSheet, t: f64) -> Result<Vec2, LinkingError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(LinkingError::Parameter(format!("flow time {t} outside [0, 1]")));
    }
    if !sheet.ell.is_finite() {
        return Err(LinkingError::Unbounded { region: sheet.sheet.region, index: sheet.sheet.index });
    }
    Ok(sheet.sheet.x + sheet.sheet.u * chi(sheet.sheet.r, sheet.ell, t))
}

pub fn elementary_linking_flow(sheet: &LinkedSheet, t: f64) -> Result<Vec2, LinkingError> {
    if !(0.0..=sheet.ell).contains(&t) {
        return Err(LinkingError::Parameter(format!("flow length {t} outside [0, {}]", sheet.ell)));
    }
    Ok(sheet.sheet.x + sheet.sheet.u * t)
}

/// Curvature of the level curve through `λ_t` at a sheet (convex positive), from the
/// Möbius evolution of the radial curvature. `None` where the sheet has no radial curvature.
pub fn evolved_level_curvature(sheet: &LinkedSheet, t: f64) -> Result<Option<f64>, LinkingError> {
    let Some(k) = sheet.sheet.kappa_r() else { return Ok(None) };
    let schedule = FlowSchedule::new(sheet.sheet.r, sheet.ell)?;
    let s = evolve_under_linking(&OperatorState::scalar(k), &schedule, t)?;
    Ok(Some(-s.matrix[(0, 0)]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SphericalKind {
    Bitangent,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalPoint {
    /// Direction of the supporting line's outward normal, in `[0, 2π)`.
    pub theta: f64,
    pub kind: SphericalKind,
    pub contacts: Vec<SheetRef>,
    /// Support value `h(θ)`.
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub region: u32,
    pub first: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalAxis {
    pub points: Vec<SphericalPoint>,
    /// Boundary arcs on the convex hull.
    pub b_infinity_arcs: Vec<Arc>,
}

/// Supporting-line sweep around the convex hull: bridges give bitangent directions, flat
/// supports give degenerate ones.
pub fn compute_spherical_axis(config: &Configuration) -> SphericalAxis {
    let hull = convex_hull(config);
    let n = hull.len();
    let mut points = Vec::new();
    let mut arcs: Vec<Arc> = Vec::new();
    let eps = 1e-6 * config.diameter();
    for i in 0..n {
        let a = hull[i];
        let b = hull[(i + 1) % n];
        let c = config.region(a.region_id).unwrap();
        let m = c.len();
        let same = a.region_id == b.region_id;
        let gap = if same { (b.index + m - a.index) % m } else { 0 };
        if same && gap == 1 {
            match arcs.last_mut() {
                Some(arc) if arc.region == a.region_id && (arc.first + arc.len) % m == b.index => arc.len += 1,
                _ => arcs.push(Arc { region: a.region_id, first: a.index, len: 2 }),
            }
            continue;
        }
        let d = b.point - a.point;
        let normal = Vec2::new(d.y, -d.x).normalize();
        let theta = normal.y.atan2(normal.x).rem_euclid(std::f64::consts::TAU);
        let flat = same && (1..gap).all(|g| normal.dot(&(c.samples[(a.index + g) % m].position - a.point)).abs() <= eps);
        points.push(SphericalPoint {
            theta,
            kind: if flat { SphericalKind::Degenerate } else { SphericalKind::Bitangent },
            contacts: vec![
                SheetRef { region: a.region_id, index: a.index },
                SheetRef { region: b.region_id, index: b.index },
            ],
            height: normal.dot(&a.point),
        });
    }
    // Join an arc that wraps around the hull start.
    if arcs.len() >= 2 {
        let (first, last) = (arcs[0], *arcs.last().unwrap());
        let m = config.region(last.region).unwrap().len();
        if first.region == last.region && (last.first + last.len - 1) % m == first.first {
            arcs[0] = Arc { region: last.region, first: last.first, len: last.len + first.len - 1 };
            arcs.pop();
        }
    }
    points.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    SphericalAxis { points, b_infinity_arcs: arcs }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BInfinity {
    /// Per region, per boundary sample.
    pub membership: Vec<Vec<bool>>,
    pub arcs: Vec<Arc>,
    /// Fraction of hull-arc samples that pass the height test.
    pub hull_agreement: f64,
}

/// Boundary samples whose height in their own normal direction is a unique global maximum.
pub fn compute_b_infinity(config: &Configuration, spherical: &SphericalAxis) -> BInfinity {
    let eps_h = Tolerances::for_config(config).eps_h;
    let membership: Vec<Vec<bool>> = config
        .regions
        .iter()
        .enumerate()
        .map(|(ri, c)| (0..c.len()).into_par_iter().map(|k| height_unique_max(config, ri, k, eps_h)).collect())
        .collect();
    let mut arcs = Vec::new();
    for (ri, c) in config.regions.iter().enumerate() {
        let m = c.len();
        let mem = &membership[ri];
        if mem.iter().all(|&b| b) {
            arcs.push(Arc { region: c.region_id, first: 0, len: m });
            continue;
        }
        let Some(start) = (0..m).find(|&k| !mem[k]) else { continue };
        let mut k = 0;
        while k < m {
            let i = (start + k) % m;
            if mem[i] {
                let mut len = 0;
                while mem[(i + len) % m] {
                    len += 1;
                }
                arcs.push(Arc { region: c.region_id, first: i, len });
                k += len;
            } else {
                k += 1;
            }
        }
    }
    let mut hits = 0usize;
    let mut count = 0usize;
    for arc in &spherical.b_infinity_arcs {
        let ri = config.region_index(arc.region).unwrap();
        let m = config.regions[ri].len();
        for j in 0..arc.len {
            count += 1;
            if membership[ri][(arc.first + j) % m] {
                hits += 1;
            }
        }
    }
    let hull_agreement = if count == 0 { 1.0 } else { hits as f64 / count as f64 };
    BInfinity { membership, arcs, hull_agreement }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionPiece {
    pub target: Target,
    pub sheets: Vec<usize>,
    /// Interior flow quads `(y_k, y_k+1, x_k+1, x_k)`.
    pub interior_quads: Vec<[Vec2; 4]>,
    /// Exterior flow quads `(y_k, y_k+1, e_k+1, e_k)` with `e = x + ℓ·u`.
    pub exterior_quads: Vec<[Vec2; 4]>,
    /// Area of `Ω_{i→target}`.
    pub interior_area: f64,
    /// Area of `N_{i→target}`; infinite when a sheet is unbounded.
    pub exterior_area: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionDecomposition {
    pub region: u32,
    pub pieces: Vec<DecompositionPiece>,
    /// Boundary polygon area.
    pub area: f64,
}

impl RegionDecomposition {
    pub fn piece(&self, target: Target) -> Option<&DecompositionPiece> {
        self.pieces.iter().find(|p| p.target == target)
    }

    pub fn interior_total(&self) -> f64 {
        self.pieces.iter().map(|p| p.interior_area).sum()
    }
}

fn lerp(a: &Vec2, b: &Vec2, s: f64) -> Vec2 {
    a + (b - a) * s
}

/// Split every region into flow-swept pieces by linking target.
pub fn region_decomposition(structure: &LinkingStructure) -> Vec<RegionDecomposition> {
    structure
        .regions
        .iter()
        .map(|r| {
            let n = r.sheets.len();
            let mut pieces: Vec<DecompositionPiece> = Vec::new();
            let piece_of = |t: Target, pieces: &mut Vec<DecompositionPiece>| -> usize {
                match pieces.iter().position(|p| p.target == t) {
                    Some(i) => i,
                    None => {
                        pieces.push(DecompositionPiece {
                            target: t,
                            sheets: Vec::new(),
                            interior_quads: Vec::new(),
                            exterior_quads: Vec::new(),
                            interior_area: 0.0,
                            exterior_area: 0.0,
                        });
                        pieces.len() - 1
                    }
                }
            };
            for k in 0..n {
                let a = &r.sheets[k];
                let b = &r.sheets[(k + 1) % n];
                let ia = piece_of(a.target, &mut pieces);
                pieces[ia].sheets.push(k);
                let (ya, yb) = (a.sheet.contact, b.sheet.contact);
                let (xa, xb) = (a.sheet.x, b.sheet.x);
                let bounded = a.ell.is_finite() && b.ell.is_finite();
                let (ea, eb) = if bounded { (a.endpoint(), b.endpoint()) } else { (ya, yb) };
                let spans: Vec<(Target, f64, f64)> = if a.target == b.target {
                    vec![(a.target, 0.0, 1.0)]
                } else {
                    vec![(a.target, 0.0, 0.5), (b.target, 0.5, 1.0)]
                };
                for (t, s0, s1) in spans {
                    let i = piece_of(t, &mut pieces);
                    let quad_in = [lerp(&ya, &yb, s0), lerp(&ya, &yb, s1), lerp(&xa, &xb, s1), lerp(&xa, &xb, s0)];
                    let quad_ex = [lerp(&ya, &yb, s0), lerp(&ya, &yb, s1), lerp(&ea, &eb, s1), lerp(&ea, &eb, s0)];
                    pieces[i].interior_area += polygon_area(&quad_in);
                    pieces[i].interior_quads.push(quad_in);
                    if bounded {
                        pieces[i].exterior_area += -polygon_area(&quad_ex);
                        pieces[i].exterior_quads.push(quad_ex);
                    } else {
                        pieces[i].exterior_area = f64::INFINITY;
                    }
                }
            }
            let ys: Vec<Vec2> = r.sheets.iter().map(|l| l.sheet.contact).collect();
            RegionDecomposition { region: r.region, pieces, area: polygon_area(&ys) }
        })
        .collect()
}

/// Whether `p` lies in any of the quads (either orientation).
pub fn quads_contain(quads: &[[Vec2; 4]], p: &Vec2) -> bool {
    quads.iter().any(|q| point_in_polygon(q, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelCrossing {
    pub region: u32,
    pub level_a: f64,
    pub level_b: f64,
    pub segment_a: usize,
    pub segment_b: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkingConditionReport {
    /// Sheets with `κ_r > 0` and `ℓ·κ_r ≥ 1`.
    pub violations: Vec<SheetRef>,
    /// Sheets where some level curve of the flow reverses orientation.
    pub fold_sheets: Vec<SheetRef>,
    pub crossings: Vec<LevelCrossing>,
    pub levels: Vec<f64>,
}

impl LinkingConditionReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }

    /// Whether the curvature test and the sampled audit flag the same sheets.
    pub fn consistent(&self) -> bool {
        self.violations == self.fold_sheets
    }
}

pub const AUDIT_LEVELS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// Level polyline `B_t` of one region, broken where the flow is undefined.
pub fn level_polyline(sheets: &[LinkedSheet], t: f64) -> Vec<Option<Vec2>> {
    sheets.iter().map(|l| linking_flow(l, t).ok()).collect()
}

/// Curvature condition with `ℓ` in place of `r`, and a sampled audit of the flow's level sets.
pub fn check_linking_conditions(structure: &LinkingStructure) -> LinkingConditionReport {
    let mut violations = Vec::new();
    let mut folds = Vec::new();
    let mut crossings = Vec::new();
    for r in &structure.regions {
        for l in &r.sheets {
            if let Some(k) = l.sheet.kappa_r() {
                if k > 0.0 && l.ell.is_finite() && l.ell * k >= 1.0 {
                    violations.push(l.sheet_ref());
                }
            }
        }
        let n = r.sheets.len();
        let levels: Vec<Vec<Option<Vec2>>> = AUDIT_LEVELS.iter().map(|&t| level_polyline(&r.sheets, t)).collect();
        for k in 0..n {
            let l = &r.sheets[k];
            let mass = l.sheet.mass;
            if mass.abs() <= 1e-12 {
                continue;
            }
            let folded = levels.iter().any(|lv| match (lv[(k + n - 1) % n], lv[(k + 1) % n]) {
                (Some(a), Some(b)) => cross(&l.sheet.u, &(b - a)) * mass.signum() <= 0.0,
                _ => false,
            });
            if folded {
                folds.push(l.sheet_ref());
            }
        }
        let segs: Vec<(usize, usize, Vec2, Vec2)> = levels
            .iter()
            .enumerate()
            .flat_map(|(li, lv)| {
                (0..n).filter_map(move |k| match (lv[k], lv[(k + 1) % n]) {
                    (Some(a), Some(b)) if (b - a).norm() > 0.0 => Some((li, k, a, b)),
                    _ => None,
                })
            })
            .collect();
        let tol = 1e-12 * structure.eps_link.max(1e-300);
        let found: Vec<LevelCrossing> = (0..segs.len())
            .into_par_iter()
            .flat_map_iter(|i| {
                let (li, ki, a, b) = segs[i];
                let segs = &segs;
                (i + 1..segs.len()).filter_map(move |j| {
                    let (lj, kj, c, d) = segs[j];
                    if li == lj {
                        let adjacent = (ki + 1) % n == kj || (kj + 1) % n == ki;
                        if adjacent || AUDIT_LEVELS[li] >= 1.0 {
                            return None;
                        }
                    }
                    if segments_cross(&a, &b, &c, &d, tol) {
                        Some(LevelCrossing {
                            region: r.region,
                            level_a: AUDIT_LEVELS[li],
                            level_b: AUDIT_LEVELS[lj],
                            segment_a: ki,
                            segment_b: kj,
                        })
                    } else {
                        None
                    }
                })
            })
            .collect();
        crossings.extend(found);
    }
    violations.sort_by_key(|s| (s.region, s.index));
    folds.sort_by_key(|s| (s.region, s.index));
    LinkingConditionReport { violations, fold_sheets: folds, crossings, levels: AUDIT_LEVELS.to_vec() }
}
