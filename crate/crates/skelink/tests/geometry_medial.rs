use proptest::prelude::*;
use skelink::geometry::{convex_hull_of, cross, sample_boundary, BoundingSpec, Configuration, Primitive};
use skelink::medial::{compute_medial_axis, MedialParams, NodeKind};
use skelink::Vec2;

fn ellipse(a: f64, b: f64, rotation: f64) -> Primitive {
    Primitive::Ellipse { center: [0.3, -0.2], a, b, rotation }
}

fn params(curve: &skelink::geometry::BoundaryCurve) -> MedialParams {
    let c = Configuration::new(vec![curve.clone()], &BoundingSpec::Unbounded).unwrap();
    MedialParams::for_config(&c)
}

fn nearest_boundary(curve: &skelink::geometry::BoundaryCurve, p: &Vec2) -> f64 {
    let pts = curve.positions();
    (0..pts.len())
        .map(|k| skelink::geometry::closest_on_segment(&pts[k], &pts[(k + 1) % pts.len()], p).1)
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn ellipse_curvature_at_512() {
    let (a, b) = (2.0, 1.0);
    let curve = sample_boundary(&ellipse(a, b, 0.0), 512, 1).unwrap();
    let worst = curve
        .samples
        .iter()
        .map(|s| {
            // Parametric curvature with cos t = x/a and sin t = y/b.
            let p = s.position - Vec2::new(0.3, -0.2);
            let (ct, st) = (p.x / a, p.y / b);
            let k = a * b / (a * a * st * st + b * b * ct * ct).powf(1.5);
            (s.curvature - k).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst <= 0.05, "{worst}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sampled_curves_are_counter_clockwise(a in 0.6f64..3.0, ratio in 0.2f64..1.0, rot in 0.0f64..3.2, n in 64usize..400) {
        let curve = sample_boundary(&ellipse(a, a * ratio, rot), n, 1).unwrap();
        prop_assert!(curve.signed_area() > 0.0);
        // Clockwise input is reoriented; a dense outline keeps every vertex below the corner angle.
        let dense = sample_boundary(&ellipse(a, a * ratio.max(0.5), rot), 256, 1).unwrap();
        let cw: Vec<[f64; 2]> = dense.positions().iter().rev().map(|p| [p.x, p.y]).collect();
        let poly = sample_boundary(&Primitive::Polygon { vertices: cw }, n, 2).unwrap();
        prop_assert!(poly.signed_area() > 0.0);
    }

    #[test]
    fn hull_is_convex(centres in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, 0.2f64..0.6), 1..5)) {
        let curves: Vec<_> = centres
            .iter()
            .enumerate()
            .map(|(k, &(x, y, r))| sample_boundary(&Primitive::Circle { center: [x, y], radius: r }, 64, k as u32 + 1).unwrap())
            .collect();
        let hull = convex_hull_of(&curves);
        let m = hull.len();
        prop_assert!(m >= 3);
        for k in 0..m {
            let (p, q, s) = (hull[k].point, hull[(k + 1) % m].point, hull[(k + 2) % m].point);
            prop_assert!(cross(&(q - p), &(s - q)) >= -1e-12);
        }
    }

    #[test]
    fn medial_contacts_densities_and_euler(a in 1.2f64..3.0, ratio in 0.3f64..0.8, rot in 0.0f64..3.2, wobble in 0.0f64..0.25) {
        // An ellipse with a cosine ripple gives axes with junctions when the ripple is strong.
        let b = a * ratio;
        let pts: Vec<[f64; 2]> = (0..40)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / 40.0;
                let s = 1.0 + wobble * (3.0 * t).cos();
                let (x, y) = (a * s * t.cos(), b * s * t.sin());
                [x * rot.cos() - y * rot.sin(), x * rot.sin() + y * rot.cos()]
            })
            .collect();
        // Tips here reach radius 0.05; 512 samples keeps them several spacings wide.
        let curve = sample_boundary(&Primitive::Spline { points: pts }, 512, 1).unwrap();
        let p = params(&curve);
        let axis = compute_medial_axis(&curve, &p).unwrap();
        for tour in &axis.tours {
            for s in &tour.sheets {
                let gap = nearest_boundary(&curve, &(s.x + s.u * s.r));
                prop_assert!(gap <= p.eps_geom, "contact off by {gap}");
            }
        }
        for c in &axis.chains {
            for s in &c.samples {
                prop_assert!(s.rho_plus > 0.0 && s.rho_plus <= 1.0 + 1e-12);
                prop_assert!(s.rho_minus > 0.0 && s.rho_minus <= 1.0 + 1e-12);
                prop_assert!((s.rho_plus - s.rho_minus).abs() <= 1e-6);
            }
        }
        let excess: usize = axis
            .nodes
            .iter()
            .filter_map(|n| match n.kind { NodeKind::Junction(k) => Some(k - 2), _ => None })
            .sum();
        prop_assert_eq!(excess + 2, axis.a3_count());
    }
}
