//! Boundary curves, sampling, convex hulls and bounding regions.

use nalgebra::{DMatrix, DVector, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec2 = Vector2<f64>;

/// Turning angle above which a polygon vertex counts as a corner.
pub const CORNER_ANGLE: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("sample count {0} is below the minimum of 16")]
    TooFewSamples(usize),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("curve self-intersects between segments {0} and {1}")]
    SelfIntersection(usize, usize),
    #[error("polygon has a corner at vertex {vertex} (turning {angle:.3} rad)")]
    Corner { vertex: usize, angle: f64 },
    #[error("regions {0} and {1} are not disjoint")]
    Overlap(u32, u32),
    #[error("invalid or duplicate region id {0}")]
    RegionId(u32),
    #[error("region {0} is not strictly inside the bounding region")]
    Containment(u32),
}

pub fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

pub fn perp(a: &Vec2) -> Vec2 {
    Vec2::new(-a.y, a.x)
}

pub fn v2(p: [f64; 2]) -> Vec2 {
    Vec2::new(p[0], p[1])
}

/// Height of `x` in direction `v`.
pub fn height_function(x: &Vec2, v: &Vec2) -> f64 {
    x.dot(v)
}

pub fn distance_sq(x: &Vec2, u: &Vec2) -> f64 {
    (x - u).norm_squared()
}

/// Signed shoelace area, positive for counterclockwise order.
pub fn polygon_area(pts: &[Vec2]) -> f64 {
    let n = pts.len();
    let mut s = 0.0;
    for i in 0..n {
        s += cross(&pts[i], &pts[(i + 1) % n]);
    }
    0.5 * s
}

/// Even-odd point containment.
pub fn point_in_polygon(pts: &[Vec2], p: &Vec2) -> bool {
    let n = pts.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (pts[i], pts[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Closest point on segment `ab` to `p`, with its parameter in [0, 1].
pub fn closest_on_segment(a: &Vec2, b: &Vec2, p: &Vec2) -> (Vec2, f64) {
    let d = b - a;
    let l2 = d.norm_squared();
    if l2 == 0.0 {
        return (*a, 0.0);
    }
    let t = ((p - a).dot(&d) / l2).clamp(0.0, 1.0);
    (a + d * t, t)
}

fn orient(a: &Vec2, b: &Vec2, c: &Vec2) -> f64 {
    cross(&(b - a), &(c - a))
}

/// Proper crossing of segments `ab` and `cd`; touching and collinear contact do not count.
pub fn segments_cross(a: &Vec2, b: &Vec2, c: &Vec2, d: &Vec2, tol: f64) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    ((d1 > tol && d2 < -tol) || (d1 < -tol && d2 > tol)) && ((d3 > tol && d4 < -tol) || (d3 < -tol && d4 > tol))
}

/// Parameter `t` where the ray `o + t·dir` meets segment `ab`, if it does.
pub fn ray_segment(o: &Vec2, dir: &Vec2, a: &Vec2, b: &Vec2, slack: f64) -> Option<f64> {
    let e = b - a;
    let den = cross(dir, &e);
    if den.abs() < 1e-14 * e.norm().max(1e-300) {
        return None;
    }
    let w = a - o;
    let t = cross(&w, &e) / den;
    let s = cross(&w, dir) / den;
    if (-slack..=1.0 + slack).contains(&s) {
        Some(t)
    } else {
        None
    }
}

/// First exit distance from a convex or simple polygon along a ray starting inside it.
pub fn ray_exit_polygon(poly: &[Vec2], o: &Vec2, dir: &Vec2) -> Option<f64> {
    let n = poly.len();
    let mut best: Option<f64> = None;
    for i in 0..n {
        if let Some(t) = ray_segment(o, dir, &poly[i], &poly[(i + 1) % n], 1e-12) {
            if t >= 0.0 && best.is_none_or(|b| t < b) {
                best = Some(t);
            }
        }
    }
    best
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Primitive {
    Circle {
        center: [f64; 2],
        radius: f64,
    },
    Ellipse {
        center: [f64; 2],
        a: f64,
        b: f64,
        #[serde(default)]
        rotation: f64,
    },
    Superellipse {
        center: [f64; 2],
        a: f64,
        b: f64,
        exponent: f64,
    },
    /// Periodic C2 cubic interpolating the control points.
    Spline { points: Vec<[f64; 2]> },
    Polygon { vertices: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct BoundarySample {
    pub position: Vec2,
    pub normal: Vec2,
    pub curvature: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BoundaryCurve {
    pub region_id: u32,
    pub samples: Vec<BoundarySample>,
}

impl BoundaryCurve {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Cyclic access.
    pub fn at(&self, k: isize) -> &BoundarySample {
        let n = self.samples.len() as isize;
        &self.samples[k.rem_euclid(n) as usize]
    }

    pub fn positions(&self) -> Vec<Vec2> {
        self.samples.iter().map(|s| s.position).collect()
    }

    /// Sum of arclength weights.
    pub fn perimeter(&self) -> f64 {
        self.samples.iter().map(|s| s.weight).sum()
    }

    pub fn polyline_length(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|k| (self.samples[(k + 1) % n].position - self.samples[k].position).norm())
            .sum()
    }

    pub fn signed_area(&self) -> f64 {
        polygon_area(&self.positions())
    }

    pub fn mean_spacing(&self) -> f64 {
        self.polyline_length() / self.len() as f64
    }

    pub fn contains(&self, p: &Vec2) -> bool {
        let pts = self.positions();
        point_in_polygon(&pts, p)
    }

    /// Distance from `p` to the closed polyline, with the segment index and parameter.
    pub fn nearest(&self, p: &Vec2) -> (f64, usize, f64) {
        let n = self.len();
        let mut best = (f64::INFINITY, 0, 0.0);
        for k in 0..n {
            let a = &self.samples[k].position;
            let b = &self.samples[(k + 1) % n].position;
            let (q, t) = closest_on_segment(a, b, p);
            let d = (q - p).norm();
            if d < best.0 {
                best = (d, k, t);
            }
        }
        best
    }

    pub fn bbox(&self) -> (Vec2, Vec2) {
        bbox_of(self.samples.iter().map(|s| s.position))
    }

    /// Index pair of the first self-intersection, if any.
    pub fn self_intersection(&self) -> Option<(usize, usize)> {
        find_self_intersection(&self.positions())
    }
}

pub fn bbox_of(pts: impl Iterator<Item = Vec2>) -> (Vec2, Vec2) {
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts {
        lo = lo.inf(&p);
        hi = hi.sup(&p);
    }
    (lo, hi)
}

fn find_self_intersection(pts: &[Vec2]) -> Option<(usize, usize)> {
    let n = pts.len();
    let scale = bbox_of(pts.iter().copied());
    let tol = 1e-14 * (scale.1 - scale.0).norm().powi(2);
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        let (lo, hi) = (a.inf(&b), a.sup(&b));
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (c, d) = (pts[j], pts[(j + 1) % n]);
            if c.x.max(d.x) < lo.x || c.x.min(d.x) > hi.x || c.y.max(d.y) < lo.y || c.y.min(d.y) > hi.y {
                continue;
            }
            if segments_cross(&a, &b, &c, &d, tol) {
                return Some((i, j));
            }
        }
    }
    None
}

struct PeriodicSpline {
    points: Vec<Vec2>,
    second: Vec<Vec2>,
}

impl PeriodicSpline {
    fn new(points: Vec<Vec2>) -> Self {
        let m = points.len();
        let mut a = DMatrix::<f64>::zeros(m, m);
        let mut bx = DVector::<f64>::zeros(m);
        let mut by = DVector::<f64>::zeros(m);
        for i in 0..m {
            let (im, ip) = ((i + m - 1) % m, (i + 1) % m);
            a[(i, im)] += 1.0;
            a[(i, i)] += 4.0;
            a[(i, ip)] += 1.0;
            let rhs = (points[ip] - points[i] * 2.0 + points[im]) * 6.0;
            bx[i] = rhs.x;
            by[i] = rhs.y;
        }
        let lu = a.lu();
        let mx = lu.solve(&bx).expect("cyclic spline system is diagonally dominant");
        let my = lu.solve(&by).expect("cyclic spline system is diagonally dominant");
        let second = (0..m).map(|i| Vec2::new(mx[i], my[i])).collect();
        PeriodicSpline { points, second }
    }

    fn eval(&self, t: f64) -> Vec2 {
        let m = self.points.len();
        let s = t.rem_euclid(1.0) * m as f64;
        let i = (s.floor() as usize).min(m - 1);
        let u = s - i as f64;
        let j = (i + 1) % m;
        let w = 1.0 - u;
        self.points[i] * w
            + self.points[j] * u
            + self.second[i] * ((w * w * w - w) / 6.0)
            + self.second[j] * ((u * u * u - u) / 6.0)
    }
}

fn rot(theta: f64, p: Vec2) -> Vec2 {
    let (s, c) = theta.sin_cos();
    Vec2::new(c * p.x - s * p.y, s * p.x + c * p.y)
}

fn check_positive(name: &str, v: f64) -> Result<(), GeometryError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(GeometryError::Parameter(format!("{name} must be positive, got {v}")))
    }
}

/// Resample a periodic curve `f: [0,1) -> R²` uniformly in arclength; returns positions and parameters.
fn resample_parametric(f: &dyn Fn(f64) -> Vec2, n: usize) -> (Vec<Vec2>, Vec<f64>) {
    let m = (64 * n).max(8192);
    let dense: Vec<Vec2> = (0..=m).map(|i| f(i as f64 / m as f64)).collect();
    let mut cum = Vec::with_capacity(m + 1);
    cum.push(0.0);
    for i in 0..m {
        let l = cum[i] + (dense[i + 1] - dense[i]).norm();
        cum.push(l);
    }
    let total = cum[m];
    let mut pts = Vec::with_capacity(n);
    let mut params = Vec::with_capacity(n);
    let mut seg = 0;
    for k in 0..n {
        let target = total * k as f64 / n as f64;
        while seg + 1 < m && cum[seg + 1] < target {
            seg += 1;
        }
        let span = cum[seg + 1] - cum[seg];
        let frac = if span > 0.0 { (target - cum[seg]) / span } else { 0.0 };
        let t = (seg as f64 + frac) / m as f64;
        pts.push(f(t));
        params.push(t);
    }
    (pts, params)
}

fn resample_polygon(verts: &[Vec2], n: usize) -> Vec<Vec2> {
    let m = verts.len();
    let lens: Vec<f64> = (0..m).map(|i| (verts[(i + 1) % m] - verts[i]).norm()).collect();
    let total: f64 = lens.iter().sum();
    let mut out = Vec::with_capacity(n);
    let (mut edge, mut start) = (0usize, 0.0);
    for k in 0..n {
        let target = total * k as f64 / n as f64;
        while edge + 1 < m && start + lens[edge] < target {
            start += lens[edge];
            edge += 1;
        }
        let frac = if lens[edge] > 0.0 { (target - start) / lens[edge] } else { 0.0 };
        out.push(verts[edge] + (verts[(edge + 1) % m] - verts[edge]) * frac);
    }
    out
}

/// Curvature from a least-squares quadratic in the local tangent/normal frame over five samples.
pub fn fitted_curvature(pts: &[Vec2], normals: &[Vec2], k: usize) -> f64 {
    let n = pts.len();
    let p = pts[k];
    let nin = -normals[k];
    let t = Vec2::new(nin.y, -nin.x);
    let (mut s2, mut s3, mut s4, mut sh, mut s2h) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for j in [-2isize, -1, 1, 2] {
        let q = pts[(k as isize + j).rem_euclid(n as isize) as usize] - p;
        let s = q.dot(&t);
        let h = q.dot(&nin);
        s2 += s * s;
        s3 += s * s * s;
        s4 += s * s * s * s;
        sh += s * h;
        s2h += s * s * h;
    }
    let det = s2 * s4 - s3 * s3;
    if det.abs() < 1e-300 {
        return 0.0;
    }
    let c1 = (s4 * sh - s3 * s2h) / det;
    let c2 = (s2 * s2h - s3 * sh) / det;
    2.0 * c2 / (1.0 + c1 * c1).powf(1.5)
}

/// Outward normals perpendicular to the centred chord, for counterclockwise points.
pub fn chord_normals(pts: &[Vec2]) -> Vec<Vec2> {
    let n = pts.len();
    (0..n)
        .map(|k| {
            let d = pts[(k + 1) % n] - pts[(k + n - 1) % n];
            Vec2::new(d.y, -d.x).normalize()
        })
        .collect()
}

pub fn arclength_weights(pts: &[Vec2]) -> Vec<f64> {
    let n = pts.len();
    (0..n)
        .map(|k| 0.5 * ((pts[(k + 1) % n] - pts[k]).norm() + (pts[k] - pts[(k + n - 1) % n]).norm()))
        .collect()
}

/// Build a curve from counterclockwise positions, fitting curvature unless `curvature` is supplied.
pub fn curve_from_points(region_id: u32, pts: Vec<Vec2>, curvature: Option<Vec<f64>>) -> BoundaryCurve {
    let normals = chord_normals(&pts);
    let weights = arclength_weights(&pts);
    let kappa = curvature.unwrap_or_else(|| (0..pts.len()).map(|k| fitted_curvature(&pts, &normals, k)).collect());
    let samples = (0..pts.len())
        .map(|k| BoundarySample { position: pts[k], normal: normals[k], curvature: kappa[k], weight: weights[k] })
        .collect();
    BoundaryCurve { region_id, samples }
}

/// Discretize a primitive into `n` arclength-uniform counterclockwise samples.
pub fn sample_boundary(primitive: &Primitive, n: usize, region_id: u32) -> Result<BoundaryCurve, GeometryError> {
    if n < 16 {
        return Err(GeometryError::TooFewSamples(n));
    }
    let tau = std::f64::consts::TAU;
    let (pts, curvature) = match primitive {
        Primitive::Circle { center, radius } => {
            check_positive("radius", *radius)?;
            let c = v2(*center);
            let pts = (0..n)
                .map(|k| {
                    let th = tau * k as f64 / n as f64;
                    c + Vec2::new(th.cos(), th.sin()) * *radius
                })
                .collect();
            (pts, Some(vec![1.0 / radius; n]))
        }
        Primitive::Ellipse { center, a, b, rotation } => {
            check_positive("a", *a)?;
            check_positive("b", *b)?;
            let (c, a, b, rotation) = (v2(*center), *a, *b, *rotation);
            let f = move |t: f64| {
                let th = tau * t;
                c + rot(rotation, Vec2::new(a * th.cos(), b * th.sin()))
            };
            let (pts, params) = resample_parametric(&f, n);
            let kappa = params
                .iter()
                .map(|t| {
                    let (s, co) = (tau * t).sin_cos();
                    a * b / (a * a * s * s + b * b * co * co).powf(1.5)
                })
                .collect();
            (pts, Some(kappa))
        }
        Primitive::Superellipse { center, a, b, exponent } => {
            check_positive("a", *a)?;
            check_positive("b", *b)?;
            if !(exponent.is_finite() && *exponent >= 2.0) {
                return Err(GeometryError::Parameter(format!(
                    "superellipse exponent must be at least 2 for a smooth boundary, got {exponent}"
                )));
            }
            let (c, a, b, e) = (v2(*center), *a, *b, 2.0 / *exponent);
            let f = move |t: f64| {
                let (s, co) = (tau * t).sin_cos();
                c + Vec2::new(a * co.signum() * co.abs().powf(e), b * s.signum() * s.abs().powf(e))
            };
            (resample_parametric(&f, n).0, None)
        }
        Primitive::Spline { points } => {
            if points.len() < 4 {
                return Err(GeometryError::Parameter("spline needs at least 4 control points".into()));
            }
            let mut ctrl: Vec<Vec2> = points.iter().map(|p| v2(*p)).collect();
            if polygon_area(&ctrl) < 0.0 {
                ctrl.reverse();
            }
            let spline = PeriodicSpline::new(ctrl);
            (resample_parametric(&|t| spline.eval(t), n).0, None)
        }
        Primitive::Polygon { vertices } => {
            if vertices.len() < 3 {
                return Err(GeometryError::Parameter("polygon needs at least 3 vertices".into()));
            }
            let mut verts: Vec<Vec2> = vertices.iter().map(|p| v2(*p)).collect();
            if polygon_area(&verts) < 0.0 {
                verts.reverse();
            }
            let m = verts.len();
            for i in 0..m {
                let e0 = verts[i] - verts[(i + m - 1) % m];
                let e1 = verts[(i + 1) % m] - verts[i];
                let angle = cross(&e0, &e1).atan2(e0.dot(&e1)).abs();
                if angle > CORNER_ANGLE {
                    return Err(GeometryError::Corner { vertex: i, angle });
                }
            }
            (resample_polygon(&verts, n), None)
        }
    };
    let mut pts: Vec<Vec2> = pts;
    let mut curvature = curvature;
    if polygon_area(&pts) < 0.0 {
        pts.reverse();
        if let Some(k) = curvature.as_mut() {
            k.reverse();
        }
    }
    if let Some((i, j)) = find_self_intersection(&pts) {
        return Err(GeometryError::SelfIntersection(i, j));
    }
    Ok(curve_from_points(region_id, pts, curvature))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct HullVertex {
    pub point: Vec2,
    pub region_id: u32,
    pub index: usize,
}

/// Counterclockwise hull by monotone chain; collinear points are dropped.
pub fn hull_indices(pts: &[Vec2]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&i, &j| pts[i].x.total_cmp(&pts[j].x).then(pts[i].y.total_cmp(&pts[j].y)));
    if idx.len() < 3 {
        return idx;
    }
    let mut lower: Vec<usize> = Vec::new();
    for &i in &idx {
        while lower.len() >= 2 && orient(&pts[lower[lower.len() - 2]], &pts[lower[lower.len() - 1]], &pts[i]) <= 0.0 {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in idx.iter().rev() {
        while upper.len() >= 2 && orient(&pts[upper[upper.len() - 2]], &pts[upper[upper.len() - 1]], &pts[i]) <= 0.0 {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

pub fn convex_hull_of(regions: &[BoundaryCurve]) -> Vec<HullVertex> {
    let mut all = Vec::new();
    for c in regions {
        for (k, s) in c.samples.iter().enumerate() {
            all.push(HullVertex { point: s.position, region_id: c.region_id, index: k });
        }
    }
    let pts: Vec<Vec2> = all.iter().map(|h| h.point).collect();
    hull_indices(&pts).into_iter().map(|i| all[i]).collect()
}

pub fn convex_hull(config: &Configuration) -> Vec<HullVertex> {
    convex_hull_of(&config.regions)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BoundingSpec {
    Unbounded,
    Box {
        #[serde(default = "default_margin")]
        margin: f64,
    },
    Disk {
        #[serde(default = "default_margin")]
        margin: f64,
    },
    ConvexHull,
    Intrinsic { polygon: Vec<[f64; 2]> },
    AbsoluteThreshold { tau: f64 },
    TruncatedThreshold { tau: f64 },
}

fn default_margin() -> f64 {
    0.1
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub enum BoundingGeometry {
    None,
    Polygon(Vec<Vec2>),
    Disk { center: Vec2, radius: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BoundingRegion {
    pub spec: BoundingSpec,
    pub geometry: BoundingGeometry,
}

impl BoundingRegion {
    pub fn tau(&self) -> Option<f64> {
        match self.spec {
            BoundingSpec::AbsoluteThreshold { tau } | BoundingSpec::TruncatedThreshold { tau } => Some(tau),
            _ => None,
        }
    }

    /// Whether every linking vector ends at a finite length.
    pub fn is_bounded(&self) -> bool {
        !matches!(self.spec, BoundingSpec::Unbounded)
    }

    pub fn has_wall(&self) -> bool {
        !matches!(self.geometry, BoundingGeometry::None)
    }

    pub fn contains(&self, p: &Vec2) -> bool {
        match &self.geometry {
            BoundingGeometry::None => true,
            BoundingGeometry::Polygon(poly) => point_in_polygon(poly, p),
            BoundingGeometry::Disk { center, radius } => (p - center).norm() <= *radius,
        }
    }

    /// Distance along a ray from an interior point to the wall.
    pub fn wall_distance(&self, o: &Vec2, dir: &Vec2) -> Option<f64> {
        match &self.geometry {
            BoundingGeometry::None => None,
            BoundingGeometry::Polygon(poly) => ray_exit_polygon(poly, o, dir),
            BoundingGeometry::Disk { center, radius } => {
                let w = o - center;
                let b = w.dot(dir);
                let c = w.norm_squared() - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    None
                } else {
                    Some((-b + disc.sqrt()).max(0.0))
                }
            }
        }
    }

    /// Wall outline as a polygon (disks are discretized), for rendering and rasters.
    pub fn outline(&self, n: usize) -> Option<Vec<Vec2>> {
        match &self.geometry {
            BoundingGeometry::None => None,
            BoundingGeometry::Polygon(p) => Some(p.clone()),
            BoundingGeometry::Disk { center, radius } => Some(
                (0..n)
                    .map(|k| {
                        let th = std::f64::consts::TAU * k as f64 / n as f64;
                        center + Vec2::new(th.cos(), th.sin()) * *radius
                    })
                    .collect(),
            ),
        }
    }
}

pub fn regions_bbox(regions: &[BoundaryCurve]) -> (Vec2, Vec2) {
    bbox_of(regions.iter().flat_map(|c| c.samples.iter().map(|s| s.position)))
}

/// Concrete clipping geometry for a bounding mode.
pub fn build_bounding(regions: &[BoundaryCurve], spec: &BoundingSpec) -> Result<BoundingRegion, GeometryError> {
    let (lo, hi) = regions_bbox(regions);
    let center = (lo + hi) * 0.5;
    let half = (hi - lo) * 0.5;
    let geometry = match spec {
        BoundingSpec::Unbounded => BoundingGeometry::None,
        BoundingSpec::Box { margin } => {
            if !(margin.is_finite() && *margin > 0.0) {
                return Err(GeometryError::Parameter(format!("box margin must be positive, got {margin}")));
            }
            let h = half * (1.0 + margin);
            BoundingGeometry::Polygon(vec![
                Vec2::new(center.x - h.x, center.y - h.y),
                Vec2::new(center.x + h.x, center.y - h.y),
                Vec2::new(center.x + h.x, center.y + h.y),
                Vec2::new(center.x - h.x, center.y + h.y),
            ])
        }
        BoundingSpec::Disk { margin } => {
            if !(margin.is_finite() && *margin > 0.0) {
                return Err(GeometryError::Parameter(format!("disk margin must be positive, got {margin}")));
            }
            let r = regions
                .iter()
                .flat_map(|c| c.samples.iter())
                .map(|s| (s.position - center).norm())
                .fold(0.0, f64::max);
            BoundingGeometry::Disk { center, radius: r * (1.0 + margin) }
        }
        BoundingSpec::ConvexHull => {
            BoundingGeometry::Polygon(convex_hull_of(regions).into_iter().map(|h| h.point).collect())
        }
        BoundingSpec::Intrinsic { polygon } => {
            if polygon.len() < 3 {
                return Err(GeometryError::Parameter("intrinsic polygon needs at least 3 vertices".into()));
            }
            let mut poly: Vec<Vec2> = polygon.iter().map(|p| v2(*p)).collect();
            if polygon_area(&poly) < 0.0 {
                poly.reverse();
            }
            for c in regions {
                for s in &c.samples {
                    if !point_in_polygon(&poly, &s.position) {
                        return Err(GeometryError::Containment(c.region_id));
                    }
                }
            }
            BoundingGeometry::Polygon(poly)
        }
        BoundingSpec::AbsoluteThreshold { tau } | BoundingSpec::TruncatedThreshold { tau } => {
            if !(tau.is_finite() && *tau > 0.0) {
                return Err(GeometryError::Parameter(format!("threshold tau must be positive, got {tau}")));
            }
            BoundingGeometry::None
        }
    };
    Ok(BoundingRegion { spec: spec.clone(), geometry })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Configuration {
    pub regions: Vec<BoundaryCurve>,
    pub bounding: BoundingRegion,
}

impl Configuration {
    pub fn new(regions: Vec<BoundaryCurve>, spec: &BoundingSpec) -> Result<Self, GeometryError> {
        let bounding = build_bounding(&regions, spec)?;
        let config = Configuration { regions, bounding };
        config.validate()?;
        Ok(config)
    }

    pub fn from_primitives(prims: &[(u32, Primitive)], n: usize, spec: &BoundingSpec) -> Result<Self, GeometryError> {
        let regions = prims
            .iter()
            .map(|(id, p)| sample_boundary(p, n, *id))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(regions, spec)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.regions.is_empty() {
            return Err(GeometryError::Parameter("configuration has no regions".into()));
        }
        let mut ids: Vec<u32> = Vec::new();
        for c in &self.regions {
            if c.region_id == 0 || ids.contains(&c.region_id) {
                return Err(GeometryError::RegionId(c.region_id));
            }
            ids.push(c.region_id);
        }
        for (i, a) in self.regions.iter().enumerate() {
            for b in &self.regions[i + 1..] {
                let (alo, ahi) = a.bbox();
                let (blo, bhi) = b.bbox();
                let apart = ahi.x < blo.x || bhi.x < alo.x || ahi.y < blo.y || bhi.y < alo.y;
                if apart {
                    continue;
                }
                let pa = a.positions();
                let pb = b.positions();
                if point_in_polygon(&pa, &pb[0]) || point_in_polygon(&pb, &pa[0]) {
                    return Err(GeometryError::Overlap(a.region_id, b.region_id));
                }
                for s in &b.samples {
                    if a.nearest(&s.position).0 <= 0.0 {
                        return Err(GeometryError::Overlap(a.region_id, b.region_id));
                    }
                }
                let (na, nb) = (pa.len(), pb.len());
                for i in 0..na {
                    for j in 0..nb {
                        if segments_cross(&pa[i], &pa[(i + 1) % na], &pb[j], &pb[(j + 1) % nb], 0.0) {
                            return Err(GeometryError::Overlap(a.region_id, b.region_id));
                        }
                    }
                }
            }
        }
        if let BoundingGeometry::Polygon(_) | BoundingGeometry::Disk { .. } = self.bounding.geometry {
            let strict = !matches!(self.bounding.spec, BoundingSpec::ConvexHull);
            for c in &self.regions {
                for s in &c.samples {
                    let inside = match &self.bounding.geometry {
                        BoundingGeometry::Polygon(poly) => {
                            let on_wall = (0..poly.len()).any(|i| {
                                let (q, _) = closest_on_segment(&poly[i], &poly[(i + 1) % poly.len()], &s.position);
                                (q - s.position).norm() < 1e-12
                            });
                            point_in_polygon(poly, &s.position) || (!strict && on_wall)
                        }
                        _ => self.bounding.contains(&s.position),
                    };
                    if !inside {
                        return Err(GeometryError::Containment(c.region_id));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn region(&self, id: u32) -> Option<&BoundaryCurve> {
        self.regions.iter().find(|c| c.region_id == id)
    }

    pub fn region_index(&self, id: u32) -> Option<usize> {
        self.regions.iter().position(|c| c.region_id == id)
    }

    pub fn region_ids(&self) -> Vec<u32> {
        self.regions.iter().map(|c| c.region_id).collect()
    }

    pub fn bbox(&self) -> (Vec2, Vec2) {
        regions_bbox(&self.regions)
    }

    /// Largest distance between two boundary samples.
    pub fn diameter(&self) -> f64 {
        let hull = convex_hull(self);
        let mut d: f64 = 0.0;
        for i in 0..hull.len() {
            for j in i + 1..hull.len() {
                d = d.max((hull[i].point - hull[j].point).norm());
            }
        }
        d
    }

    pub fn mean_spacing(&self) -> f64 {
        let total: f64 = self.regions.iter().map(|c| c.polyline_length()).sum();
        let count: usize = self.regions.iter().map(|c| c.len()).sum();
        total / count as f64
    }

    /// Index of the region whose interior contains `p`.
    pub fn region_containing(&self, p: &Vec2) -> Option<usize> {
        self.regions.iter().position(|c| {
            let (lo, hi) = c.bbox();
            p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && c.contains(p)
        })
    }
}

/// Numerical tolerances derived from a configuration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Tolerances {
    pub eps_geom: f64,
    pub eps_link: f64,
    pub eps_h: f64,
    pub theta_min: f64,
}

impl Tolerances {
    pub const DEFAULT_THETA_MIN: f64 = 0.35;

    pub fn for_config(config: &Configuration) -> Self {
        let d = config.diameter();
        Tolerances {
            eps_geom: 1e-3 * d,
            eps_link: 2.0 * config.mean_spacing(),
            eps_h: 1e-9 * d,
            theta_min: Self::DEFAULT_THETA_MIN,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ellipse(n: usize) -> BoundaryCurve {
        sample_boundary(&Primitive::Ellipse { center: [0.0, 0.0], a: 2.0, b: 1.0, rotation: 0.0 }, n, 1).unwrap()
    }

    #[test]
    fn height_and_distance() {
        assert_eq!(height_function(&Vec2::new(3.0, 4.0), &Vec2::new(1.0, 0.0)), 3.0);
        assert_eq!(height_function(&Vec2::new(3.0, 4.0), &Vec2::new(0.0, 1.0)), 4.0);
        assert_eq!(height_function(&Vec2::zeros(), &Vec2::new(0.6, 0.8)), 0.0);
        assert_eq!(distance_sq(&Vec2::zeros(), &Vec2::new(3.0, 4.0)), 25.0);
        assert_eq!(distance_sq(&Vec2::new(1.5, -2.0), &Vec2::new(1.5, -2.0)), 0.0);
        assert_eq!(distance_sq(&Vec2::new(1.0, 0.0), &Vec2::new(-1.0, 0.0)), 4.0);
    }

    #[test]
    fn circle_curvature_is_exact() {
        let c = sample_boundary(&Primitive::Circle { center: [0.5, -1.0], radius: 1.0 }, 256, 1).unwrap();
        assert!(c.samples.iter().all(|s| s.curvature == 1.0));
        assert!(c.signed_area() > 0.0);
    }

    #[test]
    fn ellipse_vertex_curvature() {
        let c = ellipse(512);
        let v = c.samples.iter().find(|s| (s.position - Vec2::new(2.0, 0.0)).norm() < 1e-9).unwrap();
        assert!((v.curvature - 2.0).abs() < 1e-9);
    }

    #[test]
    fn fitted_curvature_converges_on_ellipse() {
        let c = ellipse(512);
        let pts = c.positions();
        let normals: Vec<Vec2> = c.samples.iter().map(|s| s.normal).collect();
        let worst = (0..c.len())
            .map(|k| (fitted_curvature(&pts, &normals, k) - c.samples[k].curvature).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 0.05, "worst curvature error {worst}");
    }

    #[test]
    fn normals_are_orthogonal_and_weights_sum_to_perimeter() {
        let c = ellipse(300);
        for k in 0..c.len() as isize {
            let t = c.at(k + 1).position - c.at(k - 1).position;
            assert!(c.at(k).normal.dot(&t.normalize()).abs() < 1e-6);
        }
        assert!((c.perimeter() - c.polyline_length()).abs() < 1e-9);
        assert!(c.samples.iter().all(|s| s.weight > 0.0));
    }

    #[test]
    fn clockwise_polygon_is_reoriented() {
        let verts: Vec<[f64; 2]> = (0..40)
            .map(|k| {
                let th = -std::f64::consts::TAU * k as f64 / 40.0;
                [th.cos(), th.sin()]
            })
            .collect();
        let c = sample_boundary(&Primitive::Polygon { vertices: verts }, 64, 3).unwrap();
        assert!(c.signed_area() > 0.0);
        assert!(c.samples.iter().all(|s| s.curvature > 0.0));
    }

    #[test]
    fn rejections() {
        let square = Primitive::Polygon { vertices: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]] };
        assert!(matches!(sample_boundary(&square, 64, 1), Err(GeometryError::Corner { .. })));
        let circle = Primitive::Circle { center: [0.0, 0.0], radius: 1.0 };
        assert_eq!(sample_boundary(&circle, 15, 1), Err(GeometryError::TooFewSamples(15)));
        let bow = Primitive::Spline { points: vec![[-1.0, -1.0], [1.0, 1.0], [1.0, -1.0], [-1.0, 1.0]] };
        assert!(matches!(sample_boundary(&bow, 128, 1), Err(GeometryError::SelfIntersection(..))));
    }

    #[test]
    fn two_disk_hull_and_box() {
        let prims = [
            (1, Primitive::Circle { center: [-3.0, 0.0], radius: 1.0 }),
            (2, Primitive::Circle { center: [3.0, 0.0], radius: 1.0 }),
        ];
        let cfg = Configuration::from_primitives(&prims, 256, &BoundingSpec::Box { margin: 0.1 }).unwrap();
        let BoundingGeometry::Polygon(b) = &cfg.bounding.geometry else { panic!() };
        assert!((b[0] - Vec2::new(-4.4, -1.1)).norm() < 1e-9);
        assert!((b[2] - Vec2::new(4.4, 1.1)).norm() < 1e-9);
        let hull = convex_hull(&cfg);
        let pts: Vec<Vec2> = hull.iter().map(|h| h.point).collect();
        let area = polygon_area(&pts);
        let expected = std::f64::consts::PI + 6.0 * 2.0;
        assert!((area - expected).abs() / expected < 1e-3);
        for i in 0..pts.len() {
            let (a, b, c) = (pts[i], pts[(i + 1) % pts.len()], pts[(i + 2) % pts.len()]);
            assert!(cross(&(b - a), &(c - b)) >= -1e-12);
        }
        let hull_cfg = build_bounding(&cfg.regions, &BoundingSpec::ConvexHull).unwrap();
        assert_eq!(hull_cfg.geometry, BoundingGeometry::Polygon(pts));
    }

    #[test]
    fn bounding_errors() {
        let c = ellipse(64);
        assert!(matches!(
            build_bounding(std::slice::from_ref(&c), &BoundingSpec::AbsoluteThreshold { tau: 0.0 }),
            Err(GeometryError::Parameter(_))
        ));
        let small = BoundingSpec::Intrinsic { polygon: vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]] };
        assert_eq!(build_bounding(&[c], &small), Err(GeometryError::Containment(1)));
    }

    #[test]
    fn overlapping_regions_rejected() {
        let prims = [
            (1, Primitive::Circle { center: [0.0, 0.0], radius: 1.0 }),
            (2, Primitive::Circle { center: [1.5, 0.0], radius: 1.0 }),
        ];
        assert_eq!(
            Configuration::from_primitives(&prims, 64, &BoundingSpec::Unbounded),
            Err(GeometryError::Overlap(1, 2))
        );
    }

    #[test]
    fn wall_distance_in_disk_and_box() {
        let prims = [(1, Primitive::Circle { center: [0.0, 0.0], radius: 1.0 })];
        let cfg = Configuration::from_primitives(&prims, 64, &BoundingSpec::Disk { margin: 1.0 }).unwrap();
        let d = cfg.bounding.wall_distance(&Vec2::zeros(), &Vec2::new(0.0, 1.0)).unwrap();
        assert!((d - 2.0).abs() < 1e-9);
        let cfg = Configuration::from_primitives(&prims, 64, &BoundingSpec::Box { margin: 1.0 }).unwrap();
        let d = cfg.bounding.wall_distance(&Vec2::new(0.5, 0.0), &Vec2::new(1.0, 0.0)).unwrap();
        assert!((d - 1.5).abs() < 1e-9);
    }
}
