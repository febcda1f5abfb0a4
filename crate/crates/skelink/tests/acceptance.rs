//! Acceptance run: one line per criterion, nonzero exit when any fails.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skelink::geometry::{BoundingSpec, Configuration, Tolerances};
use skelink::integrals::{boundary_volume, region_volume_weyl, steiner_total_neighborhood, BoundaryMode};
use skelink::invariants::{
    apply_similarity, build_tiered_graph, check_ratio_inequalities, compute_invariants, threshold_subgraphs,
    InvariantReport, WeightChoice,
};
use skelink::linking::{
    check_linking_conditions, compute_spherical_axis, evolved_level_curvature, level_polyline, link_configuration,
    linked_correspondences, region_decomposition, SphericalKind, Target,
};
use skelink::medial::MedialParams;
use skelink::operators::{eigenvalue_law_residual, mu_semigroup_check, riccati_residual, spectral_radius, Matrix};
use skelink::oracles::{
    directed_hausdorff, distance_transform_ridge, polyline_curvature, raster_area, raster_linking_volumes,
    RidgeDomain,
};
use skelink::scene::{self, Scene};
use skelink::Vec2;
use std::f64::consts::PI;
use std::time::Instant;

const N: usize = 512;

type Outcome = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn build(s: &Scene) -> Configuration {
    s.build(N).expect("scene builds")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn weyl() -> Outcome {
    let ell = build(&scene::ellipse());
    let params = MedialParams::for_config(&ell);
    let axis = skelink::medial::compute_medial_axis(&ell.regions[0], &params).map_err(|e| e.to_string())?;
    let area = region_volume_weyl(&axis);
    let e1 = rel(area, 2.0 * PI);

    let bean = build(&scene::bean());
    let params = MedialParams::for_config(&bean);
    let axis = skelink::medial::compute_medial_axis(&bean.regions[0], &params).map_err(|e| e.to_string())?;
    let curve = &bean.regions[0];
    let (lo, hi) = curve.bbox();
    let oracle = raster_area(|p| curve.contains(&p), lo, hi, 0.002).map_err(|e| e.to_string())?;
    let e2 = rel(region_volume_weyl(&axis), oracle.value);
    verdict(e1 <= 0.01 && e2 <= 0.015, format!("ellipse rel err {e1:.2e} (≤ 1e-2), bean rel err {e2:.2e} (≤ 1.5e-2)"))
}

fn boundary() -> Outcome {
    let ell = build(&scene::ellipse());
    let axis = skelink::medial::compute_medial_axis(&ell.regions[0], &MedialParams::for_config(&ell))
        .map_err(|e| e.to_string())?;
    let perimeter = boundary_volume(&axis, BoundaryMode::Complete);
    let fine: f64 = {
        let m = 200_000;
        let pt = |k: usize| {
            let t = 2.0 * PI * k as f64 / m as f64;
            Vec2::new(2.0 * t.cos(), t.sin())
        };
        (0..m).map(|k| (pt(k + 1) - pt(k)).norm()).sum()
    };
    let e = rel(perimeter, fine);
    verdict(e <= 0.005 && (fine - 9.6884).abs() < 1e-4, format!("perimeter {perimeter:.5} vs {fine:.5}, rel err {e:.2e} (≤ 5e-3)"))
}

fn steiner() -> Outcome {
    let mut worst: f64 = 0.0;
    for tau in [0.1, 0.25, 0.5] {
        let c = build(&scene::ellipse().with_bounding(BoundingSpec::TruncatedThreshold { tau }));
        let (_, s) = link_configuration(&c).map_err(|e| e.to_string())?;
        let total = steiner_total_neighborhood(&s, 1).map_err(|e| e.to_string())?;
        let expect = c.regions[0].polyline_length() * tau + PI * tau * tau;
        worst = worst.max(rel(total, expect));
    }
    verdict(worst <= 0.015, format!("worst rel err over tau {{0.1, 0.25, 0.5}}: {worst:.2e} (≤ 1.5e-2)"))
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    loop {
        let a = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let rho = spectral_radius(&a);
        if rho > 1e-6 {
            // Spectral radius 0.4 keeps t·κ below one half for t ≤ 1.2.
            return a * (0.4 / rho);
        }
    }
}

fn kernel() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut semi, mut ric, mut eig): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for n in 1..=5 {
        for _ in 0..100 {
            let a = random_matrix(&mut rng, n);
            let s = rng.random_range(0.0..0.6);
            let t = rng.random_range(0.0..0.6);
            semi = semi.max(mu_semigroup_check(&a, s, t).map_err(|e| e.to_string())?);
            ric = ric.max(riccati_residual(&a, t, 1e-4).map_err(|e| e.to_string())?);
            eig = eig.max(eigenvalue_law_residual(&a, t).map_err(|e| e.to_string())?);
        }
    }
    verdict(
        semi <= 1e-9 && ric <= 1e-5 && eig <= 1e-8,
        format!("semigroup {semi:.1e} (≤ 1e-9), riccati {ric:.1e} (≤ 1e-5), eigenvalues {eig:.1e} (≤ 1e-8)"),
    )
}

fn curvature_evolution() -> Outcome {
    let c = build(&scene::ellipse());
    let (_, s) = link_configuration(&c).map_err(|e| e.to_string())?;
    let sheets = &s.regions[0].sheets;
    let level: Vec<Vec2> = level_polyline(sheets, 0.5).into_iter().map(|p| p.expect("bounded")).collect();
    let fd = polyline_curvature(&level, true);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (k, l) in sheets.iter().enumerate() {
        let (Some(evolved), Some(f)) = (evolved_level_curvature(l, 0.5).map_err(|e| e.to_string())?, fd[k]) else {
            continue;
        };
        count += 1;
        worst = worst.max(rel(evolved, f));
    }
    verdict(
        worst <= 0.10 && count * 10 >= sheets.len() * 9,
        format!("{count}/{} sheets compared, worst rel err {worst:.2e} (≤ 0.1)", sheets.len()),
    )
}

fn linking_correctness() -> Outcome {
    let c = build(&scene::two_disks());
    let (_, s) = link_configuration(&c).map_err(|e| e.to_string())?;
    let cell = 0.02;
    let ridge = distance_transform_ridge(&c, RidgeDomain::Exterior, cell, 2.0 * Tolerances::DEFAULT_THETA_MIN)
        .map_err(|e| e.to_string())?;
    let m0 = s.m0.points();
    let h = directed_hausdorff(&m0, &ridge).max(directed_hausdorff(&ridge, &m0));
    let facing = s.regions[0]
        .sheets
        .iter()
        .min_by(|a, b| (a.sheet.contact - Vec2::new(-2.0, 0.0)).norm().total_cmp(&(b.sheet.contact - Vec2::new(-2.0, 0.0)).norm()))
        .unwrap();
    let (pairs, _) = linked_correspondences(&s);
    let blum = pairs
        .iter()
        .map(|p| {
            let (a, b) = (s.sheet(p.a).unwrap(), s.sheet(p.b).unwrap());
            ((a.ell_raw - a.r()) - (b.ell_raw - b.r())).abs()
        })
        .fold(0.0, f64::max);
    verdict(
        h <= 2.0 * cell && (facing.ell - 3.0).abs() <= 0.05 && facing.target == Target::Region(2) && !pairs.is_empty()
            && blum <= 2.0 * s.eps_link,
        format!(
            "Hausdorff {:.2} cells (≤ 2), facing ℓ {:.4}, Blum residual {blum:.2e} over {} pairs (≤ {:.2e})",
            h / cell,
            facing.ell,
            pairs.len(),
            2.0 * s.eps_link
        ),
    )
}

fn spherical() -> Outcome {
    let c = build(&scene::two_disks());
    let axis = compute_spherical_axis(&c);
    let bitangent: Vec<f64> = axis.points.iter().filter(|p| p.kind == SphericalKind::Bitangent).map(|p| p.theta).collect();
    let angular = |a: f64, b: f64| {
        let d = (a - b).rem_euclid(2.0 * PI);
        d.min(2.0 * PI - d)
    };
    let err = if bitangent.len() == 2 {
        angular(bitangent[0], PI / 2.0).max(angular(bitangent[1], 1.5 * PI))
    } else {
        f64::INFINITY
    };
    let (_, s) = link_configuration(&c).map_err(|e| e.to_string())?;
    verdict(
        err <= 0.02 && s.infinity_agreement >= 0.99,
        format!("{} bitangents, angle err {err:.2e} (≤ 0.02), ray/height agreement {:.4} (≥ 0.99)", bitangent.len(), s.infinity_agreement),
    )
}

fn decomposition() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut at = String::new();
    for (name, sc) in scene::corpus() {
        let c = build(&sc);
        let (_, s) = link_configuration(&c).map_err(|e| format!("{name}: {e}"))?;
        for d in region_decomposition(&s) {
            let curve = c.region(d.region).unwrap();
            let (lo, hi) = curve.bbox();
            let cell = (hi - lo).norm() / 1000.0;
            let oracle = raster_area(|p| curve.contains(&p), lo, hi, cell).map_err(|e| e.to_string())?;
            let e = rel(d.interior_total(), oracle.value);
            if e > worst {
                worst = e;
                at = format!("{name}/{}", d.region);
            }
        }
    }
    verdict(worst <= 0.015, format!("worst rel err {worst:.2e} at {at} (≤ 1.5e-2)"))
}

fn closeness() -> Outcome {
    let c = build(&scene::two_disks());
    let (_, _, rep) = compute_invariants(&c).map_err(|e| e.to_string())?;
    let oracle = raster_linking_volumes(&c, 0.01).map_err(|e| e.to_string())?.closeness(1, Target::Region(2));
    let e = rel(rep.c(1, 2), oracle);
    let mut broken = Vec::new();
    for (name, sc) in scene::corpus() {
        let (_, _, rep) = compute_invariants(&build(&sc)).map_err(|e| format!("{name}: {e}"))?;
        broken.extend(check_ratio_inequalities(&rep).into_iter().map(|m| format!("{name}: {m}")));
    }
    verdict(
        e <= 0.02 && broken.is_empty(),
        format!("c(1→2) {:.5} vs raster {oracle:.5}, rel err {e:.2e} (≤ 2e-2); {} inequality failures {:?}", rep.c(1, 2), broken.len(), broken),
    )
}

fn similarity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let scale = 2.0;
    let mut worst: f64 = 0.0;
    let mut worst_abs: f64 = 0.0;
    for sc in [scene::significance_near(), scene::three_clusters()] {
        let c = build(&sc);
        let theta = rng.random_range(0.0..2.0 * PI);
        let shift = Vec2::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let moved = apply_similarity(&c, theta, shift, scale).map_err(|e| e.to_string())?;
        let (_, _, a) = compute_invariants(&c).map_err(|e| e.to_string())?;
        let (_, _, b) = compute_invariants(&moved).map_err(|e| e.to_string())?;
        let close = |x: f64, y: f64| if x == 0.0 && y == 0.0 { 0.0 } else { rel(y, x) };
        for d in &a.c_dir {
            worst = worst.max(close(d.value, b.c(d.from, d.to)));
        }
        for s in &a.significance {
            worst = worst.max(close(s.s, b.s(s.region)));
            worst_abs = worst_abs.max(close(s.s_abs * scale * scale, b.s_abs(s.region)));
        }
    }
    verdict(
        worst <= 0.01 && worst_abs <= 0.01,
        format!("worst rel change of c and s {worst:.2e}, of s̃/a² {worst_abs:.2e} (≤ 1e-2)"),
    )
}

fn nested(rep: &InvariantReport, choice: WeightChoice) -> bool {
    let g = build_tiered_graph(rep, choice);
    let mut levels: Vec<f64> = g.edges.iter().map(|e| e.weight).chain(g.vertices.iter().map(|v| v.1)).collect();
    levels.extend([0.0, 1.0]);
    levels.sort_by(f64::total_cmp);
    levels.windows(2).all(|w| {
        let (lo, hi) = (threshold_subgraphs(&g, w[0], w[0]), threshold_subgraphs(&g, w[1], w[1]));
        hi.gamma_b.edges.iter().all(|e| lo.gamma_b.edges.contains(e))
            && hi.gamma_a.vertices.iter().all(|v| lo.gamma_a.vertices.contains(v))
            && hi.gamma_a.edges.iter().all(|e| lo.gamma_a.edges.contains(e))
    })
}

fn tiered() -> Outcome {
    let (_, _, rep) = compute_invariants(&build(&scene::three_clusters())).map_err(|e| e.to_string())?;
    let monotone = nested(&rep, WeightChoice::Product) && nested(&rep, WeightChoice::Additive);
    let g = build_tiered_graph(&rep, WeightChoice::Product);
    let high = threshold_subgraphs(&g, 0.01, 0.0).components;
    let low = threshold_subgraphs(&g, 0.0, 0.0).components;
    let expected = vec![vec![1, 2], vec![3, 4], vec![5, 6]];
    verdict(
        monotone && high == expected && low.len() == 1,
        format!("monotone {monotone}; components at b = 0.01: {high:?}; at b = 0: {} component(s)", low.len()),
    )
}

fn flow_nonsingularity() -> Outcome {
    let mut passing = Vec::new();
    for (name, sc) in scene::corpus() {
        let (_, s) = link_configuration(&build(&sc)).map_err(|e| format!("{name}: {e}"))?;
        let rep = check_linking_conditions(&s);
        if rep.passes() {
            passing.push((name, rep.crossings.len()));
        }
    }
    let crossings: usize = passing.iter().map(|p| p.1).sum();

    // Violating scene: the bean with every linking vector pushed a fixed distance past the
    // boundary. The concave side has focal distance about 3.5 past the boundary, so this
    // overshoots it.
    let (_, mut s) = link_configuration(&build(&scene::bean())).map_err(|e| e.to_string())?;
    let reach = 4.5;
    for l in s.regions[0].sheets.iter_mut() {
        l.ell = l.sheet.r + reach;
    }
    let rep = check_linking_conditions(&s);
    verdict(
        !passing.is_empty() && crossings == 0 && !rep.violations.is_empty() && rep.consistent(),
        format!(
            "{} passing scenes with {crossings} crossings; violating bean: {} flagged, {} folded, same sheets {}",
            passing.len(),
            rep.violations.len(),
            rep.fold_sheets.len(),
            rep.consistent()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("generalized Weyl area", weyl),
        ("boundary length", boundary),
        ("generalized Steiner", steiner),
        ("Möbius/Riccati kernel", kernel),
        ("curvature evolution", curvature_evolution),
        ("linking correctness", linking_correctness),
        ("spherical axis and B∞", spherical),
        ("decomposition audit", decomposition),
        ("closeness and significance", closeness),
        ("similarity invariance", similarity),
        ("tiered graph thresholds", tiered),
        ("flow nonsingularity", flow_nonsingularity),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = f();
        let secs = start.elapsed().as_secs_f64();
        match out {
            Ok(d) => println!("PASS {:>2} {name}: {d} [{secs:.1}s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {d} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
