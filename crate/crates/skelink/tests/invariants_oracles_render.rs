use proptest::prelude::*;
use skelink::geometry::{BoundingSpec, Configuration, Primitive};
use skelink::invariants::{
    apply_similarity, build_tiered_graph, check_ratio_inequalities, compute_invariants, ratio_lemma,
    threshold_subgraphs, TieredEdge, TieredGraph, WeightChoice,
};
use skelink::linking::{compute_b_infinity, compute_spherical_axis, link_configuration};
use skelink::oracles::{monte_carlo_area, raster_area};
use skelink::render;
use skelink::scene;
use skelink::Vec2;

fn three_disks(p: [(f64, f64); 3], n: usize) -> Configuration {
    let prims: Vec<(u32, Primitive)> = p
        .iter()
        .enumerate()
        .map(|(k, &(x, y))| (k as u32 + 1, Primitive::Circle { center: [x, y], radius: 0.8 }))
        .collect();
    Configuration::from_primitives(&prims, n, &BoundingSpec::Box { margin: 0.2 }).unwrap()
}

fn graph_strategy() -> impl Strategy<Value = TieredGraph> {
    (3usize..8).prop_flat_map(|nv| {
        (
            prop::collection::vec(0.0f64..1.0, nv),
            prop::collection::vec((0..nv as u32, 0..nv as u32, 0.0f64..1.0), 0..16),
        )
            .prop_map(|(vw, es)| TieredGraph {
                vertices: vw.iter().enumerate().map(|(k, &w)| (k as u32 + 1, w)).collect(),
                edges: es
                    .into_iter()
                    .filter(|(a, b, _)| a != b)
                    .map(|(a, b, w)| TieredEdge { a: a.min(b) + 1, b: a.max(b) + 1, weight: w })
                    .collect(),
                weight_choice: WeightChoice::Product,
            })
    })
}

fn same_component(comps: &[Vec<u32>], a: u32, b: u32) -> bool {
    comps.iter().any(|c| c.contains(&a) && c.contains(&b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn thresholds_are_monotone(g in graph_strategy(), b1 in 0.0f64..1.0, db in 0.0f64..0.5, a1 in 0.0f64..1.0, da in 0.0f64..0.5) {
        let low = threshold_subgraphs(&g, b1, a1);
        let high = threshold_subgraphs(&g, b1 + db, a1 + da);
        for e in &high.gamma_b.edges {
            prop_assert!(low.gamma_b.edges.contains(e));
        }
        for v in &high.gamma_a.vertices {
            prop_assert!(low.gamma_a.vertices.contains(v));
        }
        for e in &high.gamma_a.edges {
            prop_assert!(low.gamma_a.edges.contains(e));
        }
        // Raising b only splits components.
        for c in &high.components {
            for w in c.windows(2) {
                prop_assert!(same_component(&low.components, w[0], w[1]));
            }
        }
    }

    #[test]
    fn pooled_ratio_is_at_most_sum_of_ratios(pairs in prop::collection::vec((0.0f64..10.0, 0.01f64..10.0), 1..8)) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let (pooled, summed) = ratio_lemma(&a, &b);
        prop_assert!(pooled <= summed * (1.0 + 1e-12));
    }

    #[test]
    fn raster_area_error_bound_holds(a in 0.3f64..2.0, ratio in 0.2f64..1.0, cell in 0.01f64..0.2) {
        let b = a * ratio;
        let inside = |p: Vec2| (p.x / a).powi(2) + (p.y / b).powi(2) <= 1.0;
        let est = raster_area(inside, Vec2::new(-a - 0.1, -b - 0.1), Vec2::new(a + 0.1, b + 0.1), cell).unwrap();
        let exact = std::f64::consts::PI * a * b;
        prop_assert!((est.value - exact).abs() <= est.error, "{} vs {exact} ± {}", est.value, est.error);
    }

    #[test]
    fn monte_carlo_is_repeatable(seed in 0u64..1000) {
        let inside = |p: Vec2| p.norm() <= 1.0;
        let (lo, hi) = (Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0));
        let x = monte_carlo_area(inside, lo, hi, 20_000, seed);
        let y = monte_carlo_area(inside, lo, hi, 20_000, seed);
        prop_assert_eq!(x.value.to_bits(), y.value.to_bits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn closeness_is_bounded_and_lemma_holds(dx in 2.0f64..3.5, dy in 1.8f64..3.0, shift in -1.0f64..1.0) {
        let c = three_disks([(-dx, 0.0), (dx, 0.0), (shift, dy)], 96);
        let (_, _, rep) = compute_invariants(&c).unwrap();
        for x in &rep.c_dir {
            prop_assert!((0.0..=1.0).contains(&x.value));
        }
        for p in &rep.c_pair {
            prop_assert!((0.0..=1.0).contains(&p.product) && (0.0..=1.0).contains(&p.additive));
        }
        for s in &rep.significance {
            prop_assert!((0.0..=1.0).contains(&s.s));
        }
        prop_assert!(check_ratio_inequalities(&rep).is_empty());
    }

    #[test]
    fn similarity_keeps_closeness(theta in 0.0f64..6.3, sx in -5.0f64..5.0, sy in -5.0f64..5.0, scale in 0.5f64..3.0) {
        let c = scene::two_disks().build(128).unwrap();
        let moved = apply_similarity(&c, theta, Vec2::new(sx, sy), scale).unwrap();
        let (_, _, a) = compute_invariants(&c).unwrap();
        let (_, _, b) = compute_invariants(&moved).unwrap();
        for x in &a.c_dir {
            let y = b.c(x.from, x.to);
            prop_assert!((x.value - y).abs() <= 0.01 * x.value.max(1e-12), "{} vs {y}", x.value);
        }
        for s in &a.significance {
            let t = b.s_abs(s.region);
            prop_assert!((t - scale * scale * s.s_abs).abs() <= 0.01 * scale * scale * s.s_abs);
        }
    }
}

#[test]
fn corpus_figures_are_well_formed_and_framed() {
    for (name, sc) in scene::corpus() {
        let c = sc.build(128).unwrap();
        let (axes, s) = link_configuration(&c).unwrap();
        let sph = compute_spherical_axis(&c);
        let binf = compute_b_infinity(&c, &sph);
        let (_, _, rep) = compute_invariants(&c).unwrap();
        let graph = build_tiered_graph(&rep, WeightChoice::Product);
        let (lo, hi) = render::view_box(&c);
        let (clo, chi) = c.bbox();
        let figures = [
            render::render_medial(&c, &axes),
            render::render_linking(&c, &axes, &s, Some(&binf), &[0.25, 0.5, 0.75, 1.0]),
            render::render_flow(&c, &s, 0.75),
            render::render_spherical(&c, &sph),
            render::render_tiered_graph(&c, &graph),
        ];
        for svg in &figures {
            let doc = roxmltree::Document::parse(svg).unwrap_or_else(|e| panic!("{name}: {e}"));
            let vb: Vec<f64> =
                doc.root_element().attribute("viewBox").unwrap().split(' ').map(|v| v.parse().unwrap()).collect();
            assert!((vb[0] - lo.x).abs() < 1e-4 && (vb[1] + hi.y).abs() < 1e-4, "{name}");
            assert!((vb[2] - (hi.x - lo.x)).abs() < 1e-4 && (vb[3] - (hi.y - lo.y)).abs() < 1e-4, "{name}");
        }
        // The frame holds the regions with a margin on every side.
        assert!(lo.x < clo.x && lo.y < clo.y && hi.x > chi.x && hi.y > chi.y, "{name}");
    }
}
