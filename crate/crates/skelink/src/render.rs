//! SVG figures of boundaries, axes, linking vectors, flows and the tiered graph.

use crate::geometry::{bbox_of, Configuration, Vec2};
use crate::invariants::TieredGraph;
use crate::linking::{level_polyline, BInfinity, LinkingStructure, SphericalAxis, SphericalKind, Target};
use crate::medial::{MedialGraph, NodeKind};
use std::fmt::Write;

/// Fraction of the scene diameter added around the drawing.
pub const MARGIN: f64 = 0.05;

/// Drawing window: the wall outline when there is one, else the regions, grown by the margin.
pub fn view_box(config: &Configuration) -> (Vec2, Vec2) {
    let (lo, hi) = match config.bounding.outline(256) {
        Some(o) => {
            let (a, b) = bbox_of(o.into_iter());
            let (c, d) = config.bbox();
            (a.inf(&c), b.sup(&d))
        }
        None => config.bbox(),
    };
    let m = MARGIN * (hi - lo).norm();
    (lo - Vec2::new(m, m), hi + Vec2::new(m, m))
}

struct Svg {
    lo: Vec2,
    hi: Vec2,
    stroke: f64,
    body: String,
}

impl Svg {
    fn new(config: &Configuration) -> Self {
        let (lo, hi) = view_box(config);
        Svg { lo, hi, stroke: (hi - lo).norm() / 600.0, body: String::new() }
    }

    fn pt(p: &Vec2) -> String {
        format!("{:.5},{:.5}", p.x, -p.y)
    }

    fn polyline(&mut self, pts: &[Vec2], closed: bool, color: &str, width: f64) {
        if pts.len() < 2 {
            return;
        }
        let tag = if closed { "polygon" } else { "polyline" };
        let coords: Vec<String> = pts.iter().map(Self::pt).collect();
        let _ = writeln!(
            self.body,
            r#"<{tag} points="{}" fill="none" stroke="{color}" stroke-width="{:.5}"/>"#,
            coords.join(" "),
            width * self.stroke
        );
    }

    fn line(&mut self, a: &Vec2, b: &Vec2, color: &str, width: f64) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{:.5}" y1="{:.5}" x2="{:.5}" y2="{:.5}" stroke="{color}" stroke-width="{:.5}"/>"#,
            a.x,
            -a.y,
            b.x,
            -b.y,
            width * self.stroke
        );
    }

    fn dot(&mut self, p: &Vec2, radius: f64, color: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{:.5}" cy="{:.5}" r="{:.5}" fill="{color}"/>"#,
            p.x,
            -p.y,
            radius * self.stroke
        );
    }

    fn text(&mut self, p: &Vec2, s: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{:.5}" y="{:.5}" font-size="{:.5}" font-family="sans-serif">{}</text>"#,
            p.x,
            -p.y,
            12.0 * self.stroke,
            escape(s)
        );
    }

    fn group(&mut self, id: &str, f: impl FnOnce(&mut Svg)) {
        let _ = writeln!(self.body, r#"<g id="{id}">"#);
        f(self);
        self.body.push_str("</g>\n");
    }

    fn finish(self) -> String {
        let (w, h) = (self.hi.x - self.lo.x, self.hi.y - self.lo.y);
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.5} {:.5} {:.5} {:.5}\">\n{}</svg>\n",
            self.lo.x, -self.hi.y, w, h, self.body
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn boundaries(svg: &mut Svg, config: &Configuration) {
    svg.group("boundaries", |svg| {
        for c in &config.regions {
            svg.polyline(&c.positions(), true, "black", 1.5);
        }
        if let Some(o) = config.bounding.outline(256) {
            svg.polyline(&o, true, "gray", 1.0);
        }
    });
}

fn axis(svg: &mut Svg, g: &MedialGraph, color: &str) {
    for c in &g.chains {
        let mut pts: Vec<Vec2> = Vec::new();
        pts.extend(g.nodes.get(c.start).filter(|n| n.kind != NodeKind::Open).map(|n| n.position));
        pts.extend(c.samples.iter().map(|s| s.x));
        pts.extend(g.nodes.get(c.end).filter(|n| n.kind != NodeKind::Open).map(|n| n.position));
        svg.polyline(&pts, false, color, 1.5);
    }
    for n in &g.nodes {
        let c = match n.kind {
            NodeKind::A3 => "red",
            NodeKind::Junction(_) => "purple",
            NodeKind::Collapsed => "blue",
            NodeKind::WallClip => "gray",
            _ => continue,
        };
        svg.dot(&n.position, 3.0, c);
    }
}

/// Boundaries, interior axes and a sparse set of radial vectors.
pub fn render_medial(config: &Configuration, axes: &[MedialGraph]) -> String {
    let mut svg = Svg::new(config);
    boundaries(&mut svg, config);
    svg.group("medial", |svg| {
        for g in axes {
            axis(svg, g, "blue");
        }
    });
    svg.group("radial", |svg| {
        for g in axes {
            for c in &g.chains {
                for s in c.samples.iter().step_by(8) {
                    svg.line(&s.x, &(s.x + s.u_plus * s.r), "lightblue", 0.5);
                    svg.line(&s.x, &(s.x + s.u_minus * s.r), "lightblue", 0.5);
                }
            }
        }
    });
    svg.finish()
}

/// Linking structure: interior axes, the linking axis, linking vectors coloured by target,
/// `B∞` arcs and flow level sets at the given times.
pub fn render_linking(
    config: &Configuration,
    axes: &[MedialGraph],
    structure: &LinkingStructure,
    b_infinity: Option<&BInfinity>,
    levels: &[f64],
) -> String {
    let mut svg = Svg::new(config);
    boundaries(&mut svg, config);
    svg.group("medial", |svg| {
        for g in axes {
            axis(svg, g, "blue");
        }
    });
    svg.group("linking-axis", |svg| axis(svg, &structure.m0, "darkgreen"));
    svg.group("linking-vectors", |svg| {
        for r in &structure.regions {
            for l in r.sheets.iter().step_by(4) {
                if !l.ell.is_finite() || l.ell <= l.r() {
                    continue;
                }
                let color = match l.target {
                    Target::Region(_) => "orange",
                    Target::SelfLink => "brown",
                    Target::Infinity => "silver",
                };
                svg.line(&l.sheet.contact, &l.endpoint(), color, 0.5);
            }
        }
    });
    if let Some(b) = b_infinity {
        svg.group("b-infinity", |svg| {
            for arc in &b.arcs {
                let Some(c) = config.region(arc.region) else { continue };
                let pts: Vec<Vec2> = (0..arc.len).map(|k| c.samples[(arc.first + k) % c.len()].position).collect();
                svg.polyline(&pts, false, "crimson", 4.0);
            }
        });
    }
    svg.group("levels", |svg| {
        for &t in levels {
            for r in &structure.regions {
                for run in runs(&level_polyline(&r.sheets, t)) {
                    svg.polyline(&run, false, "teal", 0.75);
                }
            }
        }
    });
    svg.finish()
}

/// Maximal defined stretches of a level polyline; a fully defined one is closed.
fn runs(level: &[Option<Vec2>]) -> Vec<Vec<Vec2>> {
    if level.iter().all(|p| p.is_some()) {
        let mut pts: Vec<Vec2> = level.iter().flatten().copied().collect();
        if let Some(first) = pts.first().copied() {
            pts.push(first);
        }
        return vec![pts];
    }
    let mut out = Vec::new();
    let mut cur = Vec::new();
    for p in level {
        match p {
            Some(p) => cur.push(*p),
            None if !cur.is_empty() => out.push(std::mem::take(&mut cur)),
            None => {}
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// One frame of the linking flow.
pub fn render_flow(config: &Configuration, structure: &LinkingStructure, t: f64) -> String {
    let mut svg = Svg::new(config);
    boundaries(&mut svg, config);
    svg.group("linking-axis", |svg| axis(svg, &structure.m0, "darkgreen"));
    svg.group("level", |svg| {
        for r in &structure.regions {
            for run in runs(&level_polyline(&r.sheets, t)) {
                svg.polyline(&run, false, "teal", 1.5);
            }
        }
    });
    svg.text(&Vec2::new(svg.lo.x + svg.stroke * 10.0, svg.hi.y - svg.stroke * 20.0), &format!("t = {t}"));
    svg.finish()
}

/// Supporting lines of the spherical axis with their outward normals.
pub fn render_spherical(config: &Configuration, spherical: &SphericalAxis) -> String {
    let mut svg = Svg::new(config);
    boundaries(&mut svg, config);
    let arrow = 0.1 * config.diameter();
    svg.group("spherical-axis", |svg| {
        for p in &spherical.points {
            let ends: Vec<Vec2> = p
                .contacts
                .iter()
                .filter_map(|c| config.region(c.region).map(|r| r.samples[c.index].position))
                .collect();
            if ends.len() < 2 {
                continue;
            }
            let color = if p.kind == SphericalKind::Bitangent { "darkorange" } else { "gray" };
            svg.line(&ends[0], &ends[1], color, 1.5);
            let mid = (ends[0] + ends[1]) * 0.5;
            let dir = Vec2::new(p.theta.cos(), p.theta.sin());
            svg.line(&mid, &(mid + dir * arrow), color, 1.0);
            svg.text(&(mid + dir * arrow * 1.2), &format!("{:.3}", p.theta));
        }
    });
    svg.finish()
}

/// Regions at their centroids sized by significance, edges weighted by closeness.
pub fn render_tiered_graph(config: &Configuration, graph: &TieredGraph) -> String {
    let mut svg = Svg::new(config);
    boundaries(&mut svg, config);
    let centre = |id: u32| -> Option<Vec2> {
        let c = config.region(id)?;
        Some(c.positions().iter().sum::<Vec2>() / c.len() as f64)
    };
    let wmax = graph.edges.iter().map(|e| e.weight).fold(0.0, f64::max);
    svg.group("edges", |svg| {
        for e in &graph.edges {
            if let (Some(a), Some(b)) = (centre(e.a), centre(e.b)) {
                let w = if wmax > 0.0 { 0.5 + 6.0 * e.weight / wmax } else { 0.5 };
                svg.line(&a, &b, "darkred", w);
                svg.text(&((a + b) * 0.5), &format!("{:.4}", e.weight));
            }
        }
    });
    svg.group("vertices", |svg| {
        for (id, s) in &graph.vertices {
            if let Some(p) = centre(*id) {
                svg.dot(&p, 4.0 + 8.0 * s.clamp(0.0, 1.0), "navy");
                svg.text(&p, &format!("{id}: {s:.4}"));
            }
        }
    });
    svg.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene;

    #[test]
    fn view_box_covers_wall() {
        let c = scene::two_disks().build(128).unwrap();
        let (lo, hi) = view_box(&c);
        assert!(lo.x < -4.4 && hi.x > 4.4 && lo.y < -1.1 && hi.y > 1.1);
        let svg = render_medial(&c, &[]);
        assert!(svg.starts_with("<?xml") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn level_runs() {
        let p = |x: f64| Some(Vec2::new(x, 0.0));
        assert_eq!(runs(&[p(0.0), p(1.0)])[0].len(), 3);
        let r = runs(&[p(0.0), None, p(2.0), p(3.0), None]);
        assert_eq!(r.iter().map(|x| x.len()).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(escape("a<b&\"c\""), "a&lt;b&amp;&quot;c&quot;");
    }
}
