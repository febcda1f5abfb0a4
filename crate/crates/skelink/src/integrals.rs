//! Integrals against the medial measure.
//!
//! A sheet carries `mass = ρ·dV` and `curv_mass = κ_r·ρ·dV`, so the area element swept by
//! the radial line at length `t` is `(mass − t·curv_mass)·dt`. Every volume below is a sum of
//! `∫ (mass − t·curv_mass) dt` over a range of `t`.

use crate::geometry::{point_in_polygon, polygon_area, ray_segment, BoundingRegion, Configuration, Vec2};
use crate::linking::{region_decomposition, quads_contain, LinkedSheet, LinkingStructure, Target};
use crate::medial::{DoubledMedial, MedialGraph, Sheet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegralError {
    #[error("integrand undefined on sheets {0:?}")]
    Undefined(Vec<usize>),
    #[error("integrand has {got} values for {expected} sheets")]
    Length { expected: usize, got: usize },
    #[error("sheet {index} of region {region} is unbounded; choose a bounding mode")]
    Unbounded { region: u32, index: usize },
    #[error("linking lines miss {percent:.2}% of the integration domain")]
    Coverage { percent: f64 },
    #[error("ambient integrand is nonzero outside the bounding region")]
    Support,
    #[error("this integrand needs a linking structure")]
    NeedsLinking,
    #[error("region {0} not found")]
    MissingRegion(u32),
}

/// Scalar field sampled on a regular grid, bilinear in between and zero outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub origin: Vec2,
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major values at grid nodes `origin + (i, j)·cell`.
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn sample(origin: Vec2, cell: f64, nx: usize, ny: usize, f: impl Fn(Vec2) -> f64) -> Self {
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                values.push(f(origin + Vec2::new(i as f64, j as f64) * cell));
            }
        }
        GridFunction { origin, cell, nx, ny, values }
    }

    pub fn eval(&self, p: &Vec2) -> f64 {
        let q = (p - self.origin) / self.cell;
        if q.x < 0.0 || q.y < 0.0 {
            return 0.0;
        }
        let (i, j) = (q.x.floor() as usize, q.y.floor() as usize);
        if i + 1 >= self.nx || j + 1 >= self.ny {
            return 0.0;
        }
        let (fx, fy) = (q.x - i as f64, q.y - j as f64);
        let v = |a: usize, b: usize| self.values[b * self.nx + a];
        (1.0 - fy) * ((1.0 - fx) * v(i, j) + fx * v(i + 1, j)) + fy * ((1.0 - fx) * v(i, j + 1) + fx * v(i + 1, j + 1))
    }

    fn support_inside(&self, bounding: &BoundingRegion) -> bool {
        (0..self.ny).all(|j| {
            (0..self.nx).all(|i| {
                self.values[j * self.nx + i] == 0.0
                    || bounding.contains(&(self.origin + Vec2::new(i as f64, j as f64) * self.cell))
            })
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Integrand {
    Constant(f64),
    /// One value per sheet of the double; NaN marks undefined values.
    SheetField(Vec<f64>),
    AmbientFunction(GridFunction),
    IndicatorPolygon(Vec<Vec2>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Part {
    Interior,
    Exterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralTerm {
    pub region: u32,
    pub target: Target,
    pub part: Part,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralReport {
    pub value: f64,
    pub decomposition: Vec<IntegralTerm>,
    pub estimator_error: f64,
}

/// `∫ g dM` over the double, trapezoid along chains on both sides.
pub fn medial_integral(g: &Integrand, doubled: &DoubledMedial) -> Result<f64, IntegralError> {
    match g {
        Integrand::Constant(c) => Ok(doubled.sheets.iter().map(|s| c * s.rho * s.weight).sum()),
        Integrand::SheetField(v) => {
            if v.len() != doubled.sheets.len() {
                return Err(IntegralError::Length { expected: doubled.sheets.len(), got: v.len() });
            }
            let bad: Vec<usize> = (0..v.len()).filter(|&i| !v[i].is_finite()).collect();
            if !bad.is_empty() {
                return Err(IntegralError::Undefined(bad));
            }
            Ok(doubled.sheets.iter().zip(v).map(|(s, g)| g * s.rho * s.weight).sum())
        }
        _ => Err(IntegralError::NeedsLinking),
    }
}

/// `I(t) = t − κt²/2`.
pub fn i_poly(t: f64, kappa: f64) -> f64 {
    t - 0.5 * kappa * t * t
}

/// `∫_a^b (mass − t·curv_mass) dt` for one sheet.
pub fn swept(sheet: &Sheet, a: f64, b: f64) -> f64 {
    (b - a) * sheet.mass - 0.5 * (b * b - a * a) * sheet.curv_mass
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryMode {
    Complete,
    Partial,
}

/// Boundary length `∫ det(I − rS) dM`. Regions are disjoint, so both modes agree.
pub fn boundary_volume(axis: &MedialGraph, _mode: BoundaryMode) -> f64 {
    axis.tours.iter().flat_map(|t| t.sheets.iter()).map(|s| s.mass - s.r * s.curv_mass).sum()
}

/// Region area `∫ I(r) dM`.
pub fn region_volume_weyl(axis: &MedialGraph) -> f64 {
    axis.tours.iter().flat_map(|t| t.sheets.iter()).map(|s| swept(s, 0.0, s.r)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodVolumes {
    pub n: f64,
    pub omega: f64,
    pub r: f64,
}

fn bounded(l: &LinkedSheet) -> Result<(), IntegralError> {
    if l.ell.is_finite() {
        Ok(())
    } else {
        Err(IntegralError::Unbounded { region: l.sheet.region, index: l.sheet.index })
    }
}

/// Volumes of `N_{i→target}`, `Ω_{i→target}` and `R_{i→target}`.
pub fn neighborhood_volumes(
    structure: &LinkingStructure,
    region: u32,
    target: Target,
) -> Result<NeighborhoodVolumes, IntegralError> {
    let r = structure.region(region).ok_or(IntegralError::MissingRegion(region))?;
    let mut n = 0.0;
    let mut omega = 0.0;
    for l in r.sheets.iter().filter(|l| l.target == target) {
        bounded(l)?;
        omega += swept(&l.sheet, 0.0, l.sheet.r);
        n += swept(&l.sheet, l.sheet.r, l.ell);
    }
    Ok(NeighborhoodVolumes { n, omega, r: n + omega })
}

/// Total exterior neighbourhood of a region, `∫ I(ℓ) − I(r) dM` over all its sheets.
pub fn steiner_total_neighborhood(structure: &LinkingStructure, region: u32) -> Result<f64, IntegralError> {
    let r = structure.region(region).ok_or(IntegralError::MissingRegion(region))?;
    let mut total = 0.0;
    for l in &r.sheets {
        bounded(l)?;
        total += swept(&l.sheet, l.sheet.r, l.ell);
    }
    Ok(total)
}

/// Radial line interpolated between two neighbouring sheets, with its share of their measure.
struct SubRay {
    x: Vec2,
    u: Vec2,
    r: f64,
    ell: f64,
    mass: f64,
    curv_mass: f64,
    target: Target,
}

fn sub_rays(sheets: &[LinkedSheet], per_sheet: usize) -> Vec<SubRay> {
    let n = sheets.len();
    let mut out = Vec::with_capacity(n * per_sheet);
    for k in 0..n {
        let a = &sheets[k];
        let b = &sheets[(k + 1) % n];
        for j in 0..per_sheet {
            let s = (j as f64 + 0.5) / per_sheet as f64;
            let lerp = |p: f64, q: f64| p + (q - p) * s;
            let u = a.sheet.u + (b.sheet.u - a.sheet.u) * s;
            let u = if u.norm() > 0.0 { u.normalize() } else { a.sheet.u };
            out.push(SubRay {
                x: a.sheet.x + (b.sheet.x - a.sheet.x) * s,
                u,
                r: lerp(a.sheet.r, b.sheet.r),
                ell: lerp(a.ell, b.ell),
                mass: lerp(a.sheet.mass, b.sheet.mass) / per_sheet as f64,
                curv_mass: lerp(a.sheet.curv_mass, b.sheet.curv_mass) / per_sheet as f64,
                target: if s < 0.5 { a.target } else { b.target },
            });
        }
    }
    out
}

/// Parameter intervals of `x + t·u`, `t ∈ [lo, hi]`, inside polygon `q`.
fn clip_to_polygon(q: &[Vec2], x: &Vec2, u: &Vec2, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let m = q.len();
    let mut ts = vec![lo, hi];
    for i in 0..m {
        if let Some(t) = ray_segment(x, u, &q[i], &q[(i + 1) % m], 0.0) {
            if t > lo && t < hi {
                ts.push(t);
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.windows(2)
        .filter(|w| w[1] > w[0] && point_in_polygon(q, &(x + u * (0.5 * (w[0] + w[1])))))
        .map(|w| (w[0], w[1]))
        .collect()
}

/// Fraction of `q`'s raster cells not reached by any linking line.
fn coverage_gap(structure: &LinkingStructure, config: &Configuration, q: &[Vec2]) -> f64 {
    let (lo, hi) = crate::geometry::bbox_of(q.iter().copied());
    let steps = 48;
    let cell = ((hi - lo).x.max((hi - lo).y) / steps as f64).max(1e-12);
    let decomp = region_decomposition(structure);
    let quads: Vec<[Vec2; 4]> =
        decomp.iter().flat_map(|r| r.pieces.iter().flat_map(|p| p.exterior_quads.iter().copied())).collect();
    let (mut inside, mut missed) = (0usize, 0usize);
    let nx = ((hi.x - lo.x) / cell).ceil() as usize;
    let ny = ((hi.y - lo.y) / cell).ceil() as usize;
    for j in 0..ny {
        for i in 0..nx {
            let p = lo + Vec2::new((i as f64 + 0.5) * cell, (j as f64 + 0.5) * cell);
            if !point_in_polygon(q, &p) {
                continue;
            }
            inside += 1;
            if config.region_containing(&p).is_none() && !quads_contain(&quads, &p) {
                missed += 1;
            }
        }
    }
    if inside == 0 {
        0.0
    } else {
        missed as f64 / inside as f64
    }
}

const SUB_RAYS: usize = 8;

fn crofton_terms(structure: &LinkingStructure, q: &[Vec2], per_sheet: usize) -> Result<Vec<IntegralTerm>, IntegralError> {
    let mut terms: Vec<IntegralTerm> = Vec::new();
    for r in &structure.regions {
        for l in &r.sheets {
            bounded(l)?;
        }
        for ray in sub_rays(&r.sheets, per_sheet) {
            for (part, a, b) in [(Part::Interior, 0.0, ray.r), (Part::Exterior, ray.r, ray.ell)] {
                let v: f64 = clip_to_polygon(q, &ray.x, &ray.u, a, b)
                    .into_iter()
                    .map(|(s, t)| (t - s) * ray.mass - 0.5 * (t * t - s * s) * ray.curv_mass)
                    .sum();
                add_term(&mut terms, r.region, ray.target, part, v);
            }
        }
    }
    Ok(terms)
}

fn add_term(terms: &mut Vec<IntegralTerm>, region: u32, target: Target, part: Part, value: f64) {
    match terms.iter_mut().find(|t| t.region == region && t.target == target && t.part == part) {
        Some(t) => t.value += value,
        None => terms.push(IntegralTerm { region, target, part, value }),
    }
}

fn report(terms: Vec<IntegralTerm>, coarse: f64) -> IntegralReport {
    let value: f64 = terms.iter().map(|t| t.value).sum();
    IntegralReport { value, decomposition: terms, estimator_error: (value - coarse).abs() }
}

fn crofton_report(structure: &LinkingStructure, config: &Configuration, q: &[Vec2]) -> Result<IntegralReport, IntegralError> {
    let gap = coverage_gap(structure, config, q);
    if gap > 0.01 {
        return Err(IntegralError::Coverage { percent: 100.0 * gap });
    }
    let terms = crofton_terms(structure, q, SUB_RAYS)?;
    let coarse: f64 = crofton_terms(structure, q, SUB_RAYS / 2)?.iter().map(|t| t.value).sum();
    Ok(report(terms, coarse))
}

/// Area of a polygon `Q` as `∫ m_Q dM`, with `m_Q` the weighted length of the linking line inside `Q`.
pub fn crofton_volume(structure: &LinkingStructure, config: &Configuration, q: &[Vec2]) -> Result<f64, IntegralError> {
    Ok(crofton_report(structure, config, q)?.value)
}

const AMBIENT_STEPS: usize = 48;

fn ambient_terms(structure: &LinkingStructure, g: &GridFunction, per_sheet: usize) -> Vec<IntegralTerm> {
    let mut terms = Vec::new();
    for r in &structure.regions {
        for ray in sub_rays(&r.sheets, per_sheet) {
            for (part, a, b) in [(Part::Interior, 0.0, ray.r), (Part::Exterior, ray.r, ray.ell)] {
                let h = (b - a) / AMBIENT_STEPS as f64;
                let mut v = 0.0;
                for s in 0..AMBIENT_STEPS {
                    let t = a + (s as f64 + 0.5) * h;
                    v += g.eval(&(ray.x + ray.u * t)) * (ray.mass - t * ray.curv_mass) * h;
                }
                add_term(&mut terms, r.region, ray.target, part, v);
            }
        }
    }
    terms
}

/// `∫ g dV` as `∫ g̃ dM`, split by region, target and interior/exterior leg.
pub fn integrate_ambient(
    structure: &LinkingStructure,
    config: &Configuration,
    g: &Integrand,
) -> Result<IntegralReport, IntegralError> {
    match g {
        Integrand::IndicatorPolygon(q) => crofton_report(structure, config, q),
        Integrand::AmbientFunction(f) => {
            if !f.support_inside(&structure.bounding) {
                return Err(IntegralError::Support);
            }
            for l in structure.all_sheets() {
                bounded(l)?;
            }
            let corners: Vec<Vec2> = (0..f.ny)
                .flat_map(|j| (0..f.nx).map(move |i| (i, j)))
                .filter(|&(i, j)| f.values[j * f.nx + i] != 0.0)
                .map(|(i, j)| f.origin + Vec2::new(i as f64, j as f64) * f.cell)
                .collect();
            if !corners.is_empty() {
                let (lo, hi) = crate::geometry::bbox_of(corners.into_iter());
                let q = vec![lo, Vec2::new(hi.x, lo.y), hi, Vec2::new(lo.x, hi.y)];
                if polygon_area(&q) > 0.0 {
                    let gap = coverage_gap(structure, config, &q);
                    if gap > 0.01 {
                        return Err(IntegralError::Coverage { percent: 100.0 * gap });
                    }
                }
            }
            let terms = ambient_terms(structure, f, SUB_RAYS);
            let coarse: f64 = ambient_terms(structure, f, SUB_RAYS / 2).iter().map(|t| t.value).sum();
            Ok(report(terms, coarse))
        }
        _ => Err(IntegralError::NeedsLinking),
    }
}
