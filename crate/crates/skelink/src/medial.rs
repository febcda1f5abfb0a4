//! Blum axes by the shrinking-ball construction.
//!
//! Every boundary sample `y` with normal `n` gets the largest empty disk tangent at `y`
//! (inside the region for the interior axis, outside every region for the exterior axis
//! `M₀`). The disk centre is a medial point and the sample is one sheet of the double.
//! Walking the samples in boundary order visits every chain of the axis twice, once per
//! side, so the graph is recovered from the tour: tips show up as blocks of small object
//! angle, junctions as jumps of the partner contact.

use crate::geometry::{cross, BoundaryCurve, Configuration, Vec2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MedialError {
    #[error("region {region} is too thin for the sampling density: {detail}")]
    Resolution { region: u32, detail: String },
    #[error("region {0} not found")]
    MissingRegion(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MedialParams {
    /// Object-angle pruning threshold (radians).
    pub theta_min: f64,
    pub eps_geom: f64,
    pub eps_h: f64,
}

impl MedialParams {
    pub fn for_config(config: &Configuration) -> Self {
        let tol = crate::geometry::Tolerances::for_config(config);
        MedialParams { theta_min: tol.theta_min, eps_geom: tol.eps_geom, eps_h: tol.eps_h }
    }
}

/// Second contact of a maximal disk: a fractional sample index on some boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    pub region: u32,
    pub index: f64,
    pub point: Vec2,
}

/// One sheet of the double, parametrised by its boundary contact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sheet {
    pub region: u32,
    pub index: usize,
    pub x: Vec2,
    /// Radial length; infinite for exterior disks that never close up.
    pub r: f64,
    /// Unit radial direction from `x` towards `contact`.
    pub u: Vec2,
    pub contact: Vec2,
    pub partner: Option<Contact>,
    /// Medial measure `ρ·dV` carried by the sheet.
    pub mass: f64,
    /// `κ_r·ρ·dV`.
    pub curv_mass: f64,
}

impl Sheet {
    pub fn is_finite(&self) -> bool {
        self.r.is_finite()
    }

    /// Principal radial curvature, or `None` where the sheet carries no length (focal collapse).
    pub fn kappa_r(&self) -> Option<f64> {
        let bound = 1e-9 * self.curv_mass.abs().max(1e-300);
        if self.mass.abs() <= bound.max(1e-14 * self.r.max(1.0)) {
            None
        } else {
            Some(self.curv_mass / self.mass)
        }
    }

    /// Angle at `x` between the two contacts.
    pub fn object_angle(&self) -> Option<f64> {
        let p = self.partner?;
        if !self.r.is_finite() {
            return None;
        }
        let a = self.contact - self.x;
        let b = p.point - self.x;
        Some(cross(&a, &b).atan2(a.dot(&b)).abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tour {
    pub region: u32,
    pub sheets: Vec<Sheet>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SheetRef {
    pub region: u32,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    /// Free end of a chain (`A₃`).
    A3,
    /// `A₁ᵏ` junction with `k ≥ 3` chains.
    Junction(usize),
    /// Degree-two point inside a chain.
    Interior,
    /// Chain clipped by the bounding wall.
    WallClip,
    /// Chain running off to infinity.
    Open,
    /// Axis collapsed to a point (round disks).
    Collapsed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub position: Vec2,
    pub kind: NodeKind,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
    /// The single limit sheet at a free end.
    Edge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSample {
    pub x: Vec2,
    pub r: f64,
    pub u_plus: Vec2,
    pub u_minus: Vec2,
    pub kappa_r_plus: Option<f64>,
    pub kappa_r_minus: Option<f64>,
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub weight: f64,
    /// Compatibility residual `dr/ds + u·t`, absent at chain ends.
    pub eta: Option<f64>,
    pub sheet: SheetRef,
    pub mate: Option<SheetRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub samples: Vec<ChainSample>,
    pub start: usize,
    pub end: usize,
    /// Regions of the two contacts, smaller id first.
    pub label: (u32, u32),
}

impl Chain {
    pub fn length(&self) -> f64 {
        self.samples.windows(2).map(|w| (w[1].x - w[0].x).norm()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TipBlock {
    pub region: u32,
    pub first: usize,
    pub len: usize,
    /// Whether the block closes a branch; otherwise it is a pruned spur.
    pub real: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedialGraph {
    /// Region id, or 0 for the exterior linking axis.
    pub owner: u32,
    pub nodes: Vec<Node>,
    pub chains: Vec<Chain>,
    pub tours: Vec<Tour>,
    pub tip_blocks: Vec<TipBlock>,
    pub diagnostics: Vec<String>,
}

impl MedialGraph {
    pub fn a3_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind == NodeKind::A3).count()
    }

    /// Degrees of the `A₁ᵏ` junctions.
    pub fn junctions(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n.kind {
                NodeKind::Junction(k) => Some(k),
                _ => None,
            })
            .collect()
    }

    pub fn is_collapsed(&self) -> bool {
        self.nodes.iter().any(|n| n.kind == NodeKind::Collapsed)
    }

    pub fn tour(&self, region: u32) -> Option<&Tour> {
        self.tours.iter().find(|t| t.region == region)
    }

    pub fn sheet(&self, s: SheetRef) -> Option<&Sheet> {
        self.tour(s.region).and_then(|t| t.sheets.get(s.index))
    }

    /// Chain samples and node positions: the point set of the axis.
    pub fn points(&self) -> Vec<Vec2> {
        let mut pts: Vec<Vec2> = self.chains.iter().flat_map(|c| c.samples.iter().map(|s| s.x)).collect();
        pts.extend(
            self.nodes
                .iter()
                .filter(|n| !matches!(n.kind, NodeKind::Open))
                .map(|n| n.position),
        );
        pts
    }

    pub fn degree(&self, node: usize) -> usize {
        self.chains.iter().map(|c| (c.start == node) as usize + (c.end == node) as usize).sum()
    }
}

/// Largest empty disk tangent at a boundary sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub radius: f64,
    pub partner: Option<Contact>,
}

fn ball_value(y: &Vec2, d: &Vec2, z: &Vec2, eps_h: f64) -> Option<f64> {
    let w = z - y;
    let den = d.dot(&w);
    if den > eps_h {
        Some(w.norm_squared() / (2.0 * den))
    } else {
        None
    }
}

/// Shrink a disk tangent at `y` with centre on `y + t·d` until it touches another sample.
/// `own` is excluded from the candidates.
pub fn shrink_ball(y: &Vec2, d: &Vec2, own: (u32, usize), curves: &[&BoundaryCurve], eps_h: f64) -> Ball {
    let mut best: Option<(f64, usize, usize)> = None;
    for (ci, c) in curves.iter().enumerate() {
        let same = c.region_id == own.0;
        for (j, s) in c.samples.iter().enumerate() {
            if same && j == own.1 {
                continue;
            }
            if let Some(v) = ball_value(y, d, &s.position, eps_h) {
                if best.is_none_or(|b| v < b.0) {
                    best = Some((v, ci, j));
                }
            }
        }
    }
    let Some((f0, ci, j)) = best else {
        return Ball { radius: f64::INFINITY, partner: None };
    };
    let c = curves[ci];
    let m = c.len();
    let (jm, jp) = ((j + m - 1) % m, (j + 1) % m);
    let (z0, zm, zp) = (c.samples[j].position, c.samples[jm].position, c.samples[jp].position);
    let own_hit = c.region_id == own.0 && (jm == own.1 || jp == own.1);
    let fm = ball_value(y, d, &zm, eps_h);
    let fp = ball_value(y, d, &zp, eps_h);
    let (radius, delta) = match (own_hit, fm, fp) {
        (false, Some(fm), Some(fp)) if fm - 2.0 * f0 + fp > 0.0 => {
            let delta = ((fm - fp) / (2.0 * (fm - 2.0 * f0 + fp))).clamp(-0.5, 0.5);
            (f0 - 0.25 * (fm - fp) * delta, delta)
        }
        _ => (f0, 0.0),
    };
    let point = z0 + (zp - zm) * (0.5 * delta) + (zp - z0 * 2.0 + zm) * (0.5 * delta * delta);
    let index = (j as f64 + delta).rem_euclid(m as f64);
    Ball { radius, partner: Some(Contact { region: c.region_id, index, point }) }
}

/// Discrete medial measure along a tour: `(ρ·dV, κ_r·ρ·dV)` per sheet from centred differences.
pub fn tour_measure(x: &[Vec2], u: &[Vec2]) -> Vec<(f64, f64)> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let (kp, km) = ((k + 1) % n, (k + n - 1) % n);
            let mass = 0.5 * cross(&u[k], &(x[kp] - x[km]));
            let curv = -0.5 * cross(&u[k], &(u[kp] - u[km]));
            (mass, curv)
        })
        .collect()
}

/// Interior sheets of one region, in boundary order.
pub fn interior_sheets(region: &BoundaryCurve, eps_h: f64) -> Vec<Sheet> {
    let curves = [region];
    let mut sheets: Vec<Sheet> = region
        .samples
        .par_iter()
        .enumerate()
        .map(|(k, s)| {
            let d = -s.normal;
            let ball = shrink_ball(&s.position, &d, (region.region_id, k), &curves, eps_h);
            let x = s.position + d * ball.radius;
            Sheet {
                region: region.region_id,
                index: k,
                x,
                r: ball.radius,
                u: s.normal,
                contact: s.position,
                partner: ball.partner,
                mass: 0.0,
                curv_mass: 0.0,
            }
        })
        .collect();
    let xs: Vec<Vec2> = sheets.iter().map(|s| s.x).collect();
    let us: Vec<Vec2> = sheets.iter().map(|s| s.u).collect();
    for (s, (m, c)) in sheets.iter_mut().zip(tour_measure(&xs, &us)) {
        s.mass = m;
        s.curv_mass = c;
    }
    sheets
}

/// Exterior sheets of every region: disks outside all regions, tangent at each sample.
pub fn exterior_tours(config: &Configuration, eps_h: f64) -> Vec<Tour> {
    let curves: Vec<&BoundaryCurve> = config.regions.iter().collect();
    config
        .regions
        .iter()
        .map(|c| {
            let sheets = c
                .samples
                .par_iter()
                .enumerate()
                .map(|(k, s)| {
                    let ball = shrink_ball(&s.position, &s.normal, (c.region_id, k), &curves, eps_h);
                    let x = if ball.radius.is_finite() {
                        s.position + s.normal * ball.radius
                    } else {
                        Vec2::new(f64::INFINITY, f64::INFINITY)
                    };
                    Sheet {
                        region: c.region_id,
                        index: k,
                        x,
                        r: ball.radius,
                        u: -s.normal,
                        contact: s.position,
                        partner: ball.partner,
                        mass: 0.0,
                        curv_mass: 0.0,
                    }
                })
                .collect();
            Tour { region: c.region_id, sheets }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BreakKind {
    Infinite,
    OutOfBounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Normal,
    Tip,
    Break(BreakKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bound {
    Event,
    Tip(usize),
    Break(BreakKind),
}

#[derive(Debug, Clone)]
struct Run {
    tour: usize,
    samples: Vec<usize>,
    start: Bound,
    end: Bound,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut c = i;
        while self.0[c] != r {
            let next = self.0[c];
            self.0[c] = r;
            c = next;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn cyc(a: f64, m: usize) -> f64 {
    a.rem_euclid(m as f64)
}

struct TopologyInput<'a> {
    tours: &'a [Tour],
    breaks: Vec<Vec<Option<BreakKind>>>,
    theta_min: f64,
}

struct Topology {
    nodes: Vec<Node>,
    chains: Vec<Chain>,
    tip_blocks: Vec<TipBlock>,
    diagnostics: Vec<String>,
}

fn tour_of(tours: &[Tour], region: u32) -> Option<usize> {
    tours.iter().position(|t| t.region == region)
}

/// Recover nodes and chains from sheets listed in boundary order.
fn build_topology(input: &TopologyInput) -> Topology {
    let tours = input.tours;
    let mut diagnostics = Vec::new();
    let angles: Vec<Vec<Option<f64>>> =
        tours.iter().map(|t| t.sheets.iter().map(|s| s.object_angle()).collect()).collect();
    let slots: Vec<Vec<Slot>> = tours
        .iter()
        .enumerate()
        .map(|(ti, t)| {
            (0..t.sheets.len())
                .map(|k| match input.breaks[ti][k] {
                    Some(b) => Slot::Break(b),
                    None => match angles[ti][k] {
                        None => Slot::Break(BreakKind::Infinite),
                        Some(a) if a < input.theta_min => Slot::Tip,
                        Some(_) => Slot::Normal,
                    },
                })
                .collect()
        })
        .collect();

    // Blocks of small object angle; `real` ones close a branch.
    let mut blocks: Vec<TipBlock> = Vec::new();
    let mut block_of: Vec<Vec<Option<usize>>> = tours.iter().map(|t| vec![None; t.sheets.len()]).collect();
    for (ti, t) in tours.iter().enumerate() {
        let m = t.sheets.len();
        let s = &slots[ti];
        if s.iter().all(|x| *x == Slot::Tip) {
            continue;
        }
        let start = (0..m).find(|&k| s[k] != Slot::Tip).unwrap();
        let mut k = 0;
        while k < m {
            let i = (start + k) % m;
            if s[i] == Slot::Tip {
                let first = i;
                let mut len = 0;
                while s[(first + len) % m] == Slot::Tip {
                    len += 1;
                }
                let prev = (first + m - 1) % m;
                let next = (first + len) % m;
                let real = s[prev] == Slot::Normal
                    && s[next] == Slot::Normal
                    && t.sheets[prev].partner.is_some_and(|p| {
                        p.region == t.region && {
                            let d = cyc(p.index - next as f64, m);
                            d.min(m as f64 - d) <= (len as f64 * 0.5).max(3.0)
                        }
                    });
                let id = blocks.len();
                blocks.push(TipBlock { region: t.region, first, len, real });
                for j in 0..len {
                    block_of[ti][(first + j) % m] = Some(id);
                }
                k += len;
            } else {
                k += 1;
            }
        }
    }
    let tip_centres: Vec<Vec<f64>> = tours
        .iter()
        .map(|t| {
            blocks
                .iter()
                .filter(|b| b.real && b.region == t.region)
                .map(|b| cyc(b.first as f64 + 0.5 * (b.len as f64 - 1.0), t.sheets.len()))
                .collect()
        })
        .collect();
    let break_idx: Vec<Vec<usize>> =
        slots.iter().map(|s| (0..s.len()).filter(|&k| matches!(s[k], Slot::Break(_))).collect()).collect();

    let event_between = |ti: usize, k: usize, kn: usize| -> bool {
        let a = &tours[ti].sheets[k];
        let b = &tours[ti].sheets[kn];
        let (Some(pa), Some(pb)) = (a.partner, b.partner) else {
            return true;
        };
        if pa.region != pb.region {
            return true;
        }
        if let (Some(ta), Some(tb)) = (angles[ti][k], angles[ti][kn]) {
            if (ta - tb).abs() > input.theta_min {
                return true;
            }
        }
        let Some(qi) = tour_of(tours, pa.region) else {
            return true;
        };
        let m = tours[qi].sheets.len();
        let fwd = cyc(pb.index - pa.index, m);
        if fwd <= 3.0 {
            return false;
        }
        let back = cyc(pa.index - pb.index, m);
        let inside = |c: f64| cyc(c - pb.index, m) <= back;
        tip_centres[qi].iter().any(|&c| inside(c)) || break_idx[qi].iter().any(|&c| inside(c as f64))
    };

    // Split every tour into runs of ordinary samples.
    let mut runs: Vec<Run> = Vec::new();
    for (ti, t) in tours.iter().enumerate() {
        let m = t.sheets.len();
        // Cyclic item list with pruned blocks removed.
        #[derive(Clone, Copy)]
        enum Item {
            Normal(usize),
            Tip(usize),
            Break(BreakKind),
        }
        let mut items: Vec<Item> = Vec::new();
        let mut k = 0;
        while k < m {
            match slots[ti][k] {
                Slot::Normal => items.push(Item::Normal(k)),
                Slot::Break(b) => items.push(Item::Break(b)),
                Slot::Tip => {
                    let id = block_of[ti][k].expect("tip slots belong to blocks");
                    if blocks[id].real && !matches!(items.last(), Some(Item::Tip(j)) if *j == id) {
                        items.push(Item::Tip(id));
                    }
                }
            }
            k += 1;
        }
        if items.is_empty() {
            continue;
        }
        // Boundary before each item: a bound, or none if it continues the previous run.
        let n = items.len();
        let mut bound_before: Vec<Option<Bound>> = vec![None; n];
        for i in 0..n {
            let prev = items[(i + n - 1) % n];
            let cur = items[i];
            bound_before[i] = match (prev, cur) {
                (Item::Normal(a), Item::Normal(b)) => {
                    if n > 1 && event_between(ti, a, b) {
                        Some(Bound::Event)
                    } else {
                        None
                    }
                }
                (Item::Tip(id), _) | (_, Item::Tip(id)) => Some(Bound::Tip(id)),
                (Item::Break(b), _) | (_, Item::Break(b)) => Some(Bound::Break(b)),
            };
        }
        let Some(origin) = (0..n).find(|&i| bound_before[i].is_some() && matches!(items[i], Item::Normal(_))) else {
            if items.iter().any(|i| matches!(i, Item::Normal(_))) {
                // A closed chain with no boundary: cut it at an arbitrary sample.
                let samples: Vec<usize> =
                    items.iter().filter_map(|i| if let Item::Normal(k) = i { Some(*k) } else { None }).collect();
                runs.push(Run { tour: ti, samples, start: Bound::Event, end: Bound::Event });
                diagnostics.push(format!("region {}: closed chain cut at an arbitrary sample", t.region));
            }
            continue;
        };
        let mut current: Option<Run> = None;
        for step in 0..n {
            let i = (origin + step) % n;
            if let Some(b) = bound_before[i] {
                if let Some(mut r) = current.take() {
                    r.end = b;
                    runs.push(r);
                }
            }
            if let Item::Normal(k) = items[i] {
                match current.as_mut() {
                    Some(r) => r.samples.push(k),
                    None => {
                        let start = bound_before[i].unwrap_or(Bound::Event);
                        current = Some(Run { tour: ti, samples: vec![k], start, end: Bound::Event });
                    }
                }
            }
        }
        if let Some(mut r) = current.take() {
            r.end = bound_before[origin].unwrap_or(Bound::Event);
            runs.push(r);
        }
    }

    // Sample -> run lookup and mates by majority vote of partner contacts.
    let mut run_of: Vec<Vec<Option<usize>>> = tours.iter().map(|t| vec![None; t.sheets.len()]).collect();
    for (ri, r) in runs.iter().enumerate() {
        for &k in &r.samples {
            run_of[r.tour][k] = Some(ri);
        }
    }
    let mates: Vec<Option<usize>> = runs
        .iter()
        .enumerate()
        .map(|(ri, r)| {
            let mut votes: Vec<(usize, usize)> = Vec::new();
            for &k in &r.samples {
                let Some(p) = tours[r.tour].sheets[k].partner else { continue };
                let Some(qi) = tour_of(tours, p.region) else { continue };
                let m = tours[qi].sheets.len();
                let j = (p.index.round() as usize) % m;
                if let Some(rj) = run_of[qi][j] {
                    if rj == ri {
                        continue;
                    }
                    match votes.iter_mut().find(|v| v.0 == rj) {
                        Some(v) => v.1 += 1,
                        None => votes.push((rj, 1)),
                    }
                }
            }
            votes.into_iter().max_by_key(|v| (v.1, usize::MAX - v.0)).map(|v| v.0)
        })
        .collect();

    // Endpoint classes: 2·run for the start, 2·run + 1 for the end.
    let mut uf = UnionFind::new(2 * runs.len());
    let mut chains_runs: Vec<(usize, Option<usize>)> = Vec::new();
    for (ri, mate) in mates.iter().enumerate() {
        match mate {
            Some(rj) if mates[*rj] == Some(ri) => {
                if ri < *rj {
                    uf.union(2 * ri, 2 * rj + 1);
                    uf.union(2 * ri + 1, 2 * rj);
                    chains_runs.push((ri, Some(*rj)));
                }
            }
            _ => chains_runs.push((ri, None)),
        }
    }
    // Consecutive runs of a tour meet at the node between them.
    for ti in 0..tours.len() {
        let ids: Vec<usize> = (0..runs.len()).filter(|&r| runs[r].tour == ti).collect();
        let c = ids.len();
        for (pos, &ri) in ids.iter().enumerate() {
            let next = ids[(pos + 1) % c];
            if matches!(runs[ri].end, Bound::Event | Bound::Tip(_)) && (c > 1 || next != ri) {
                uf.union(2 * ri + 1, 2 * next);
            } else if c == 1 && matches!(runs[ri].end, Bound::Tip(_)) {
                uf.union(2 * ri + 1, 2 * ri);
            }
        }
    }

    let endpoint_pos = |e: usize| -> Vec2 {
        let r = &runs[e / 2];
        let k = if e % 2 == 0 { r.samples[0] } else { *r.samples.last().unwrap() };
        tours[r.tour].sheets[k].x
    };
    let endpoint_bound = |e: usize| -> Bound {
        let r = &runs[e / 2];
        if e % 2 == 0 {
            r.start
        } else {
            r.end
        }
    };
    let mut class_node: Vec<Option<usize>> = vec![None; 2 * runs.len()];
    let mut nodes: Vec<Node> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for e in 0..2 * runs.len() {
        let root = uf.find(e);
        let id = match class_node[root] {
            Some(id) => id,
            None => {
                let id = nodes.len();
                class_node[root] = Some(id);
                nodes.push(Node { position: Vec2::zeros(), kind: NodeKind::Interior, radius: 0.0 });
                members.push(Vec::new());
                id
            }
        };
        members[id].push(e);
    }
    for (id, ms) in members.iter().enumerate() {
        let bounds: Vec<Bound> = ms.iter().map(|&e| endpoint_bound(e)).collect();
        let tip = bounds.iter().find_map(|b| if let Bound::Tip(t) = b { Some(*t) } else { None });
        let brk = bounds.iter().find_map(|b| if let Bound::Break(k) = b { Some(*k) } else { None });
        let (position, radius) = if let Some(t) = tip {
            let b = &blocks[t];
            let ti = tour_of(tours, b.region).unwrap();
            let m = tours[ti].sheets.len();
            let s = &tours[ti].sheets[(b.first + b.len / 2) % m];
            (s.x, s.r)
        } else {
            let p = ms.iter().map(|&e| endpoint_pos(e)).sum::<Vec2>() / ms.len() as f64;
            let rr = ms
                .iter()
                .map(|&e| {
                    let r = &runs[e / 2];
                    let k = if e % 2 == 0 { r.samples[0] } else { *r.samples.last().unwrap() };
                    tours[r.tour].sheets[k].r
                })
                .sum::<f64>()
                / ms.len() as f64;
            (p, rr)
        };
        nodes[id].position = position;
        nodes[id].radius = radius;
        nodes[id].kind = match brk {
            Some(BreakKind::OutOfBounds) => NodeKind::WallClip,
            Some(BreakKind::Infinite) => NodeKind::Open,
            None => NodeKind::Interior,
        };
    }

    let mut chains: Vec<Chain> = chains_runs
        .iter()
        .map(|&(ri, mate)| {
            let r = &runs[ri];
            let t = &tours[r.tour];
            let start = class_node[uf.find(2 * ri)].unwrap();
            let end = class_node[uf.find(2 * ri + 1)].unwrap();
            let other = mate
                .map(|m| tours[runs[m].tour].region)
                .or_else(|| t.sheets[r.samples[0]].partner.map(|p| p.region))
                .unwrap_or(t.region);
            let label = (t.region.min(other), t.region.max(other));
            let samples = r
                .samples
                .iter()
                .map(|&k| {
                    let s = &t.sheets[k];
                    ChainSample {
                        x: s.x,
                        r: s.r,
                        u_plus: s.u,
                        u_minus: s.u,
                        kappa_r_plus: s.kappa_r(),
                        kappa_r_minus: None,
                        rho_plus: 0.0,
                        rho_minus: 0.0,
                        weight: 0.0,
                        eta: None,
                        sheet: SheetRef { region: t.region, index: k },
                        mate: None,
                    }
                })
                .collect();
            Chain { samples, start, end, label }
        })
        .collect();

    // Degrees and node kinds.
    let degree = |chains: &[Chain], n: usize| -> usize {
        chains.iter().map(|c| (c.start == n) as usize + (c.end == n) as usize).sum()
    };
    for (id, ms) in members.iter().enumerate() {
        if nodes[id].kind != NodeKind::Interior {
            continue;
        }
        let has_tip = ms.iter().any(|&e| matches!(endpoint_bound(e), Bound::Tip(_)));
        nodes[id].kind = match degree(&chains, id) {
            0 | 1 if has_tip => NodeKind::A3,
            0 | 1 => NodeKind::A3,
            2 => NodeKind::Interior,
            k => NodeKind::Junction(k),
        };
    }
    merge_interior_nodes(&mut nodes, &mut chains);
    for c in chains.iter_mut() {
        finish_chain(c, tours);
    }
    Topology { nodes, chains, tip_blocks: blocks, diagnostics }
}

/// Concatenate chains through degree-two nodes and drop the nodes left unused.
fn merge_interior_nodes(nodes: &mut Vec<Node>, chains: &mut Vec<Chain>) {
    loop {
        let mut merged = false;
        for n in 0..nodes.len() {
            if nodes[n].kind != NodeKind::Interior {
                continue;
            }
            let ends: Vec<(usize, bool)> = chains
                .iter()
                .enumerate()
                .flat_map(|(i, c)| {
                    let mut v = Vec::new();
                    if c.start == n {
                        v.push((i, true));
                    }
                    if c.end == n {
                        v.push((i, false));
                    }
                    v
                })
                .collect();
            if ends.len() != 2 || ends[0].0 == ends[1].0 {
                continue;
            }
            let (a, a_start) = ends[0];
            let (b, b_start) = ends[1];
            let mut ca = chains[a].clone();
            let mut cb = chains[b].clone();
            if a_start {
                reverse_chain(&mut ca);
            }
            if !b_start {
                reverse_chain(&mut cb);
            }
            ca.samples.extend(cb.samples);
            ca.end = cb.end;
            if ca.label != cb.label {
                ca.label = (ca.label.0.min(cb.label.0), ca.label.1.max(cb.label.1));
            }
            let (hi, lo) = (a.max(b), a.min(b));
            chains.remove(hi);
            chains[lo] = ca;
            merged = true;
            break;
        }
        if !merged {
            break;
        }
    }
    // Renumber nodes that are still referenced or informative.
    let used: Vec<bool> = (0..nodes.len())
        .map(|n| nodes[n].kind != NodeKind::Interior || chains.iter().any(|c| c.start == n || c.end == n))
        .collect();
    let mut remap = vec![usize::MAX; nodes.len()];
    let mut kept = Vec::new();
    for (i, node) in nodes.iter().enumerate() {
        if used[i] {
            remap[i] = kept.len();
            kept.push(*node);
        }
    }
    for c in chains.iter_mut() {
        c.start = remap[c.start];
        c.end = remap[c.end];
    }
    *nodes = kept;
}

fn reverse_chain(c: &mut Chain) {
    c.samples.reverse();
    std::mem::swap(&mut c.start, &mut c.end);
}

/// Fill side-resolved radial data, densities, weights and the compatibility residual.
fn finish_chain(c: &mut Chain, tours: &[Tour]) {
    let n = c.samples.len();
    let xs: Vec<Vec2> = c.samples.iter().map(|s| s.x).collect();
    for j in 0..n {
        let s = tours
            .iter()
            .find(|t| t.region == c.samples[j].sheet.region)
            .map(|t| t.sheets[c.samples[j].sheet.index])
            .expect("chain samples reference tour sheets");
        let ua = s.u;
        let (ub, kb, mate) = match s.partner {
            Some(p) => {
                let ub = (p.point - s.x).normalize();
                let mate_tour = tours.iter().find(|t| t.region == p.region);
                let (kb, mate) = match mate_tour {
                    Some(t) => {
                        let i = (p.index.round() as usize) % t.sheets.len();
                        (t.sheets[i].kappa_r(), Some(SheetRef { region: p.region, index: i }))
                    }
                    None => (None, None),
                };
                (ub, kb, mate)
            }
            None => (ua, None, None),
        };
        let ka = s.kappa_r();
        let tangent = if n >= 2 {
            let (i0, i1) = (j.saturating_sub(1), (j + 1).min(n - 1));
            let d = xs[i1] - xs[i0];
            if d.norm() > 0.0 {
                d.normalize()
            } else {
                Vec2::zeros()
            }
        } else {
            Vec2::zeros()
        };
        let diff = ua - ub;
        let rho = if diff.norm() > 0.0 { ua.dot(&diff.normalize()).abs() } else { 0.0 };
        let a_plus = cross(&tangent, &ua) >= 0.0;
        let cs = &mut c.samples[j];
        cs.mate = mate;
        if a_plus {
            (cs.u_plus, cs.u_minus, cs.kappa_r_plus, cs.kappa_r_minus) = (ua, ub, ka, kb);
        } else {
            (cs.u_plus, cs.u_minus, cs.kappa_r_plus, cs.kappa_r_minus) = (ub, ua, kb, ka);
        }
        cs.rho_plus = rho;
        cs.rho_minus = if diff.norm() > 0.0 { ub.dot(&diff.normalize()).abs() } else { 0.0 };
        let back = if j > 0 { (xs[j] - xs[j - 1]).norm() } else { 0.0 };
        let fwd = if j + 1 < n { (xs[j + 1] - xs[j]).norm() } else { 0.0 };
        cs.weight = 0.5 * (back + fwd);
    }
    let rs: Vec<f64> = c.samples.iter().map(|s| s.r).collect();
    for j in 0..n {
        let cs = &mut c.samples[j];
        cs.eta = None;
        if j > 0 && j + 1 < n {
            let ds = (xs[j + 1] - xs[j - 1]).norm();
            if ds > 0.0 {
                let t = (xs[j + 1] - xs[j - 1]) / ds;
                cs.eta = Some((rs[j + 1] - rs[j - 1]) / ds + 0.5 * (cs.u_plus.dot(&t) + cs.u_minus.dot(&t)));
            }
        }
    }
}

/// Blum axis of one region: shrinking-ball sheets, then tour stratification.
pub fn compute_medial_axis(region: &BoundaryCurve, params: &MedialParams) -> Result<MedialGraph, MedialError> {
    let sheets = interior_sheets(region, params.eps_h);
    let n = sheets.len();
    let centroid = sheets.iter().map(|s| s.x).sum::<Vec2>() / n as f64;
    let spread = sheets.iter().map(|s| (s.x - centroid).norm()).fold(0.0, f64::max);
    let tours = vec![Tour { region: region.region_id, sheets }];
    if spread <= params.eps_geom {
        let radius = tours[0].sheets.iter().map(|s| s.r).sum::<f64>() / n as f64;
        return Ok(MedialGraph {
            owner: region.region_id,
            nodes: vec![Node { position: centroid, kind: NodeKind::Collapsed, radius }],
            chains: Vec::new(),
            tours,
            tip_blocks: Vec::new(),
            diagnostics: vec![format!("axis collapsed to a point within {spread:.3e}")],
        });
    }
    let input = TopologyInput { tours: &tours, breaks: vec![vec![None; n]], theta_min: params.theta_min };
    let topo = build_topology(&input);
    if topo.chains.is_empty() {
        return Err(MedialError::Resolution {
            region: region.region_id,
            detail: format!("no sample has object angle above {:.3} rad; the axis was pruned away", params.theta_min),
        });
    }
    let graph = MedialGraph {
        owner: region.region_id,
        nodes: topo.nodes,
        chains: topo.chains,
        tours,
        tip_blocks: topo.tip_blocks,
        diagnostics: topo.diagnostics,
    };
    Ok(classify_strata(graph))
}

/// Axes of every region of a configuration, computed concurrently.
pub fn compute_all_axes(config: &Configuration, params: &MedialParams) -> Result<Vec<MedialGraph>, MedialError> {
    config.regions.par_iter().map(|c| compute_medial_axis(c, params)).collect()
}

/// Exterior axis `M₀` from precomputed exterior sheets; `breaks` marks unusable samples.
pub(crate) fn exterior_graph(tours: Vec<Tour>, breaks: Vec<Vec<Option<BreakKind>>>, theta_min: f64) -> MedialGraph {
    let input = TopologyInput { tours: &tours, breaks, theta_min };
    let topo = build_topology(&input);
    let graph = MedialGraph {
        owner: 0,
        nodes: topo.nodes,
        chains: topo.chains,
        tours: tours.clone(),
        tip_blocks: topo.tip_blocks,
        diagnostics: topo.diagnostics,
    };
    classify_strata(graph)
}

/// Label nodes from chain degree, merging degree-two nodes into their chains.
pub fn classify_strata(mut axis: MedialGraph) -> MedialGraph {
    for n in 0..axis.nodes.len() {
        let d = axis.degree(n);
        axis.nodes[n].kind = match axis.nodes[n].kind {
            NodeKind::WallClip | NodeKind::Open | NodeKind::Collapsed => axis.nodes[n].kind,
            _ => match d {
                0 | 1 => NodeKind::A3,
                2 => NodeKind::Interior,
                k => NodeKind::Junction(k),
            },
        };
    }
    let (mut nodes, mut chains) = (std::mem::take(&mut axis.nodes), std::mem::take(&mut axis.chains));
    let before = chains.len();
    merge_interior_nodes(&mut nodes, &mut chains);
    if chains.len() != before {
        for c in chains.iter_mut() {
            finish_chain(c, &axis.tours);
        }
    }
    axis.nodes = nodes;
    axis.chains = chains;
    axis
}

/// Entry of the double: one side of a chain sample, or the limit sheet at a free end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleSheet {
    pub chain: Option<usize>,
    pub sample: usize,
    pub side: Side,
    pub x: Vec2,
    pub r: f64,
    pub u: Vec2,
    pub kappa_r: Option<f64>,
    pub rho: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubledMedial {
    pub sheets: Vec<DoubleSheet>,
    /// Index of the medial point each sheet projects to (chain samples first, then free ends).
    pub projection: Vec<usize>,
    pub point_count: usize,
}

pub fn build_double(axis: &MedialGraph) -> DoubledMedial {
    let mut sheets = Vec::new();
    let mut projection = Vec::new();
    let mut point = 0;
    for (ci, c) in axis.chains.iter().enumerate() {
        for (j, s) in c.samples.iter().enumerate() {
            for side in [Side::Plus, Side::Minus] {
                let (u, kappa_r, rho) = match side {
                    Side::Plus => (s.u_plus, s.kappa_r_plus, s.rho_plus),
                    _ => (s.u_minus, s.kappa_r_minus, s.rho_minus),
                };
                sheets.push(DoubleSheet { chain: Some(ci), sample: j, side, x: s.x, r: s.r, u, kappa_r, rho, weight: s.weight });
                projection.push(point);
            }
            point += 1;
        }
    }
    for (ni, n) in axis.nodes.iter().enumerate() {
        if n.kind == NodeKind::A3 {
            let u = axis
                .chains
                .iter()
                .find_map(|c| {
                    if c.start == ni {
                        c.samples.first().map(|s| (s.u_plus + s.u_minus).normalize())
                    } else if c.end == ni {
                        c.samples.last().map(|s| (s.u_plus + s.u_minus).normalize())
                    } else {
                        None
                    }
                })
                .unwrap_or(Vec2::x());
            sheets.push(DoubleSheet {
                chain: None,
                sample: ni,
                side: Side::Edge,
                x: n.position,
                r: n.radius,
                u,
                kappa_r: None,
                rho: 1.0,
                weight: 0.0,
            });
            projection.push(point);
            point += 1;
        }
    }
    DoubledMedial { sheets, projection, point_count: point }
}

/// Side-resolved principal radial curvature of a chain sample.
pub fn radial_curvature(sample: &ChainSample, side: Side) -> Option<f64> {
    match side {
        Side::Plus => sample.kappa_r_plus,
        Side::Minus => sample.kappa_r_minus,
        Side::Edge => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletalReport {
    /// Sheets with `κ_r > 0` and `r·κ_r ≥ 1`.
    pub radial_violations: Vec<SheetRef>,
    pub max_eta: f64,
    pub eta_samples: usize,
}

pub fn radial_violations(sheets: &[Sheet]) -> Vec<SheetRef> {
    sheets
        .iter()
        .filter(|s| s.kappa_r().is_some_and(|k| k > 0.0 && s.r * k >= 1.0))
        .map(|s| SheetRef { region: s.region, index: s.index })
        .collect()
}

pub fn check_skeletal_conditions(axis: &MedialGraph) -> SkeletalReport {
    let radial_violations = axis.tours.iter().flat_map(|t| radial_violations(&t.sheets)).collect();
    let etas: Vec<f64> = axis.chains.iter().flat_map(|c| c.samples.iter().filter_map(|s| s.eta)).collect();
    SkeletalReport {
        radial_violations,
        max_eta: etas.iter().fold(0.0, |m, e| m.max(e.abs())),
        eta_samples: etas.len(),
    }
}

/// Sheets rebuilt from modified radial lengths, keeping boundary contacts fixed.
pub fn sheets_with_radii(sheets: &[Sheet], radii: &[f64]) -> Vec<Sheet> {
    let mut out: Vec<Sheet> = sheets
        .iter()
        .zip(radii)
        .map(|(s, &r)| Sheet { x: s.contact - s.u * r, r, ..*s })
        .collect();
    let xs: Vec<Vec2> = out.iter().map(|s| s.x).collect();
    let us: Vec<Vec2> = out.iter().map(|s| s.u).collect();
    for (s, (m, c)) in out.iter_mut().zip(tour_measure(&xs, &us)) {
        s.mass = m;
        s.curv_mass = c;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sample_boundary, Primitive};

    fn params_for(c: &BoundaryCurve) -> MedialParams {
        let (lo, hi) = c.bbox();
        let d = (hi - lo).norm();
        MedialParams { theta_min: 0.35, eps_geom: 1e-3 * d, eps_h: 1e-9 * d }
    }

    fn ellipse(n: usize) -> BoundaryCurve {
        sample_boundary(&Primitive::Ellipse { center: [0.0, 0.0], a: 2.0, b: 1.0, rotation: 0.0 }, n, 1).unwrap()
    }

    #[test]
    fn ball_on_unit_circle_is_the_centre() {
        let c = sample_boundary(&Primitive::Circle { center: [0.0, 0.0], radius: 1.0 }, 64, 1).unwrap();
        let s = &c.samples[5];
        let b = shrink_ball(&s.position, &-s.normal, (1, 5), &[&c], 1e-12);
        assert!((b.radius - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ellipse_axis_is_a_segment() {
        let c = ellipse(512);
        let g = compute_medial_axis(&c, &params_for(&c)).unwrap();
        assert_eq!(g.a3_count(), 2);
        assert!(g.junctions().is_empty());
        assert_eq!(g.chains.len(), 1);
        for p in g.points() {
            assert!(p.y.abs() < 0.02 && p.x.abs() < 1.52, "stray medial point {p:?}");
        }
        let ends: Vec<f64> = g.nodes.iter().filter(|n| n.kind == NodeKind::A3).map(|n| n.position.x).collect();
        assert!(ends.iter().any(|x| (x - 1.5).abs() < 0.02) && ends.iter().any(|x| (x + 1.5).abs() < 0.02));
    }

    #[test]
    fn ellipse_centre_radial_curvature() {
        let c = ellipse(512);
        let sheets = interior_sheets(&c, 1e-12);
        let top = sheets.iter().min_by(|a, b| (a.contact - Vec2::new(0.0, 1.0)).norm().total_cmp(&(b.contact - Vec2::new(0.0, 1.0)).norm())).unwrap();
        let k = top.kappa_r().unwrap();
        // Convex contact: radial curvature is negative with magnitude κ/(1 − rκ), κ = b/a².
        let expected = 0.25 / (1.0 - top.r * 0.25);
        assert!((-k - expected).abs() / expected < 0.05, "kappa_r {k}");
    }

    #[test]
    fn double_counts_and_densities() {
        let c = ellipse(512);
        let g = compute_medial_axis(&c, &params_for(&c)).unwrap();
        let d = build_double(&g);
        let chain_samples: usize = g.chains.iter().map(|c| c.samples.len()).sum();
        assert_eq!(d.sheets.len(), 2 * chain_samples + g.a3_count());
        for s in g.chains.iter().flat_map(|c| c.samples.iter()) {
            assert!((s.rho_plus - s.rho_minus).abs() < 1e-6);
            assert!(s.rho_plus > 0.0 && s.rho_plus <= 1.0);
            assert!(s.u_plus.dot(&s.u_minus) < 1.0);
        }
        let mut counts = vec![0; d.point_count];
        for &p in &d.projection {
            counts[p] += 1;
        }
        assert!(counts.iter().all(|&c| c == 1 || c == 2));
    }

    #[test]
    fn ellipse_conditions_hold_and_inflation_breaks_them() {
        let c = ellipse(512);
        let g = compute_medial_axis(&c, &params_for(&c)).unwrap();
        let rep = check_skeletal_conditions(&g);
        assert!(rep.radial_violations.is_empty());
        assert!(rep.max_eta <= 0.02, "max eta {}", rep.max_eta);
        let sheets = &g.tours[0].sheets;
        let inflated: Vec<f64> = sheets.iter().map(|s| s.r * 1.1).collect();
        assert!(!radial_violations(&sheets_with_radii(sheets, &inflated)).is_empty());
    }

    #[test]
    fn circle_collapses() {
        let c = sample_boundary(&Primitive::Circle { center: [0.3, 0.2], radius: 1.0 }, 512, 1).unwrap();
        let g = compute_medial_axis(&c, &params_for(&c)).unwrap();
        assert!(g.is_collapsed());
        let spread = g.tours[0].sheets.iter().map(|s| (s.x - Vec2::new(0.3, 0.2)).norm()).fold(0.0, f64::max);
        assert!(spread < 0.025);
        assert!(g.tours[0].sheets.iter().all(|s| (s.r - 1.0).abs() < 1e-6));
    }

    #[test]
    fn strip_has_flat_radial_curvature() {
        // Stadium: straight sides give constant radial directions.
        let mut verts = Vec::new();
        for k in 0..=40 {
            let th = -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * k as f64 / 40.0;
            verts.push([3.0 + th.cos(), th.sin()]);
        }
        for k in 0..=40 {
            let th = std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * k as f64 / 40.0;
            verts.push([-3.0 + th.cos(), th.sin()]);
        }
        let c = sample_boundary(&Primitive::Polygon { vertices: verts }, 512, 1).unwrap();
        let sheets = interior_sheets(&c, 1e-12);
        let mid = sheets.iter().find(|s| s.contact.x.abs() < 0.5 && s.contact.y > 0.0).unwrap();
        assert!(mid.kappa_r().unwrap().abs() < 1e-9);
    }
}
