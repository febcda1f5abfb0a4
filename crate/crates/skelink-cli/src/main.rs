use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use skelink::geometry::{BoundingSpec, Configuration, Tolerances};
use skelink::invariants::{
    build_tiered_graph, check_ratio_inequalities, compute_volumes, invariant_report, tau_sweep, threshold_subgraphs,
    to_dot, InvariantReport, TieredGraph, WeightChoice,
};
use skelink::linking::{
    check_linking_conditions, compute_b_infinity, compute_spherical_axis, link_configuration_with, BInfinity,
    LinkingStructure,
};
use skelink::medial::MedialGraph;
use skelink::render;
use skelink::scene::{self, Scene};
use skelink::validate::validate;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Medial and linking structures of planar multi-region scenes.
#[derive(Parser)]
#[command(name = "skelink", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Interior medial axes: JSON chains and an SVG overlay.
    Medial(Common),
    /// Linking axis, linking functions and the spherical axis.
    Linking {
        #[command(flatten)]
        common: Common,
        /// Extra truncation thresholds; one SVG per value.
        #[arg(long, value_delimiter = ',')]
        tau_sweep: Vec<f64>,
    },
    /// Closeness, significance and the tiered graph as JSON and DOT.
    Invariants {
        #[command(flatten)]
        common: Common,
        /// Truncation thresholds for a CSV sweep of the invariants.
        #[arg(long, value_delimiter = ',')]
        tau_sweep: Vec<f64>,
    },
    /// Tiered graph thresholded at edge weight `b` and vertex weight `a`.
    Graph {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.0)]
        b: f64,
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        #[arg(long, value_enum, default_value_t = Weight::Product)]
        weight: Weight,
    },
    /// Frames of the linking flow and the nonsingularity audit.
    Flow {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 0.75, 1.0])]
        t: Vec<f64>,
    },
    /// Formula-versus-oracle checks; exits 1 when any check fails.
    Validate(Common),
    /// Every figure at once.
    Render(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Scene JSON file or corpus name.
    #[arg(long)]
    scene: String,
    /// Boundary samples per region.
    #[arg(long, default_value_t = 512)]
    n: usize,
    /// unbounded, box[:margin], disk[:margin], hull, absolute or truncated.
    #[arg(long)]
    bounding: Option<String>,
    /// Threshold for the absolute and truncated modes.
    #[arg(long)]
    tau: Option<f64>,
    /// Pruning angle of the axes, in radians.
    #[arg(long)]
    theta_min: Option<f64>,
    #[arg(long, default_value = "skelink-out")]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Weight {
    Product,
    Additive,
}

fn input(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(msg.into())
}

const MIN_SAMPLES: usize = 64;

fn parse_bounding(spec: &str, tau: Option<f64>) -> Result<BoundingSpec> {
    let (name, arg) = match spec.split_once(':') {
        Some((a, b)) => (a, Some(b)),
        None => (spec, None),
    };
    let margin = match arg {
        Some(m) => m.parse::<f64>().map_err(|_| input(format!("bad margin in --bounding {spec}")))?,
        None => 0.1,
    };
    let need_tau = || tau.ok_or_else(|| input(format!("--bounding {name} needs --tau")));
    Ok(match name {
        "unbounded" => BoundingSpec::Unbounded,
        "box" => BoundingSpec::Box { margin },
        "disk" => BoundingSpec::Disk { margin },
        "hull" => BoundingSpec::ConvexHull,
        "absolute" => BoundingSpec::AbsoluteThreshold { tau: need_tau()? },
        "truncated" => BoundingSpec::TruncatedThreshold { tau: need_tau()? },
        _ => return Err(input(format!("unknown bounding mode {name}"))),
    })
}

struct Run {
    scene: Scene,
    config: Configuration,
    tol: Tolerances,
    common: Common,
}

impl Run {
    fn new(common: &Common) -> Result<Run> {
        if common.n < MIN_SAMPLES {
            return Err(input(format!("--n must be at least {MIN_SAMPLES}, got {}", common.n)));
        }
        let mut scene = load_scene(&common.scene)?;
        if let Some(b) = &common.bounding {
            scene.bounding = parse_bounding(b, common.tau)?;
        } else if let Some(t) = common.tau {
            scene.bounding = match scene.bounding {
                BoundingSpec::AbsoluteThreshold { .. } => BoundingSpec::AbsoluteThreshold { tau: t },
                _ => BoundingSpec::TruncatedThreshold { tau: t },
            };
        }
        let config = scene.build(common.n).map_err(|e| input(e.to_string()))?;
        let mut tol = Tolerances::for_config(&config);
        if let Some(t) = common.theta_min {
            if !(t > 0.0 && t < std::f64::consts::PI) {
                return Err(input("--theta-min must lie in (0, π)"));
            }
            tol.theta_min = t;
        }
        std::fs::create_dir_all(&common.out).with_context(|| format!("creating {}", common.out.display()))?;
        Ok(Run { scene, config, tol, common: common.clone() })
    }

    fn link(&self) -> Result<(Vec<MedialGraph>, LinkingStructure)> {
        if matches!(self.config.bounding.spec, BoundingSpec::Unbounded) {
            eprintln!("note: unbounded mode leaves infinite sheets out of the volumes; pick --bounding for finite invariants");
        }
        Ok(link_configuration_with(&self.config, &self.tol)?)
    }

    fn invariants(&self) -> Result<(Vec<MedialGraph>, LinkingStructure, InvariantReport, serde_json::Value)> {
        let (axes, structure) = self.link()?;
        let volumes = compute_volumes(&structure, &axes)?;
        let report = invariant_report(&volumes)?;
        let volumes = serde_json::to_value(&volumes)?;
        Ok((axes, structure, report, volumes))
    }

    fn write(&self, name: &str, text: &str) -> Result<()> {
        let path = self.common.out.join(name);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn write_json(&self, name: &str, value: &impl serde::Serialize) -> Result<()> {
        self.write(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }

    fn spherical(&self) -> (skelink::linking::SphericalAxis, BInfinity) {
        let sph = compute_spherical_axis(&self.config);
        let b = compute_b_infinity(&self.config, &sph);
        (sph, b)
    }
}

fn load_scene(name: &str) -> Result<Scene> {
    let path = Path::new(name);
    if path.exists() {
        return Scene::load(path).map_err(|e| input(e.to_string()));
    }
    scene::corpus()
        .into_iter()
        .chain([("significance_far", scene::significance_far())])
        .find(|(n, _)| *n == name)
        .map(|(_, s)| s)
        .ok_or_else(|| input(format!("no scene file or corpus scene named {name}")))
}

fn graph_json(graph: &TieredGraph, b: f64, a: f64) -> serde_json::Value {
    let th = threshold_subgraphs(graph, b, a);
    json!({ "b": b, "a": a, "graph": graph, "thresholded": th })
}

fn tau_label(t: f64) -> String {
    format!("{t}").replace('.', "p")
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Medial(c) => {
            let run = Run::new(&c)?;
            let axes = skelink::medial::compute_all_axes(
                &run.config,
                &skelink::medial::MedialParams {
                    theta_min: run.tol.theta_min,
                    eps_geom: run.tol.eps_geom,
                    eps_h: run.tol.eps_h,
                },
            )?;
            run.write_json("medial.json", &axes)?;
            run.write("medial.svg", &render::render_medial(&run.config, &axes))?;
        }
        Command::Linking { common, tau_sweep } => {
            let run = Run::new(&common)?;
            let (axes, structure) = run.link()?;
            let (sph, binf) = run.spherical();
            let conditions = check_linking_conditions(&structure);
            run.write_json(
                "linking.json",
                &json!({ "structure": structure, "spherical_axis": sph, "b_infinity": binf, "conditions": conditions }),
            )?;
            let levels = [0.25, 0.5, 0.75, 1.0];
            run.write("linking.svg", &render::render_linking(&run.config, &axes, &structure, Some(&binf), &levels))?;
            for tau in tau_sweep {
                let config = run
                    .scene
                    .clone()
                    .with_bounding(BoundingSpec::TruncatedThreshold { tau })
                    .build(common.n)
                    .map_err(|e| input(e.to_string()))?;
                let (axes, s) = link_configuration_with(&config, &run.tol)?;
                let svg = render::render_linking(&config, &axes, &s, Some(&binf), &levels);
                run.write(&format!("linking_tau_{}.svg", tau_label(tau)), &svg)?;
            }
        }
        Command::Invariants { common, tau_sweep: taus } => {
            let run = Run::new(&common)?;
            let (_, _, report, volumes) = run.invariants()?;
            let graph = build_tiered_graph(&report, WeightChoice::Product);
            let failures = check_ratio_inequalities(&report);
            run.write_json(
                "invariants.json",
                &json!({ "report": report, "volumes": volumes, "graph": graph, "inequality_failures": failures }),
            )?;
            run.write("graph.dot", &to_dot(&graph))?;
            if !taus.is_empty() {
                run.write("tau_sweep.csv", &tau_sweep(&run.scene, common.n, &taus)?)?;
            }
        }
        Command::Graph { common, b, a, weight } => {
            let run = Run::new(&common)?;
            let (_, _, report, _) = run.invariants()?;
            let choice = match weight {
                Weight::Product => WeightChoice::Product,
                Weight::Additive => WeightChoice::Additive,
            };
            let graph = build_tiered_graph(&report, choice);
            let j = graph_json(&graph, b, a);
            run.write_json("graph.json", &j)?;
            run.write("graph.dot", &to_dot(&graph))?;
            run.write("graph.svg", &render::render_tiered_graph(&run.config, &graph))?;
            let comps = &j["thresholded"]["components"];
            println!("components at b = {b}: {comps}");
        }
        Command::Flow { common, t } => {
            let run = Run::new(&common)?;
            if let Some(bad) = t.iter().find(|t| !(0.0..=1.0).contains(*t)) {
                return Err(input(format!("flow time {bad} is outside [0, 1]")));
            }
            let (_, structure) = run.link()?;
            let conditions = check_linking_conditions(&structure);
            run.write_json("flow.json", &conditions)?;
            for &time in &t {
                run.write(&format!("flow_t{}.svg", tau_label(time)), &render::render_flow(&run.config, &structure, time))?;
            }
            println!(
                "{} condition violations, {} fold sheets, {} level crossings",
                conditions.violations.len(),
                conditions.fold_sheets.len(),
                conditions.crossings.len()
            );
        }
        Command::Validate(c) => {
            let run = Run::new(&c)?;
            let report = validate(&run.scene, c.n, c.seed)?;
            print!("{}", report.table());
            run.write_json("validation.json", &report)?;
            if !report.passed() {
                println!("validation failed");
                return Ok(ExitCode::from(1));
            }
            println!("validation passed");
        }
        Command::Render(c) => {
            let run = Run::new(&c)?;
            let (axes, structure, report, _) = run.invariants()?;
            let (sph, binf) = run.spherical();
            run.write("medial.svg", &render::render_medial(&run.config, &axes))?;
            let levels = [0.25, 0.5, 0.75, 1.0];
            run.write("linking.svg", &render::render_linking(&run.config, &axes, &structure, Some(&binf), &levels))?;
            run.write("spherical.svg", &render::render_spherical(&run.config, &sph))?;
            let graph = build_tiered_graph(&report, WeightChoice::Product);
            run.write("graph.svg", &render::render_tiered_graph(&run.config, &graph))?;
            for t in levels {
                run.write(&format!("flow_t{}.svg", tau_label(t)), &render::render_flow(&run.config, &structure, t))?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounding_specs() {
        assert_eq!(parse_bounding("box:0.3", None).unwrap(), BoundingSpec::Box { margin: 0.3 });
        assert_eq!(parse_bounding("hull", None).unwrap(), BoundingSpec::ConvexHull);
        assert_eq!(
            parse_bounding("truncated", Some(1.5)).unwrap(),
            BoundingSpec::TruncatedThreshold { tau: 1.5 }
        );
        assert!(parse_bounding("absolute", None).is_err());
        assert!(parse_bounding("sphere", None).is_err());
        assert_eq!(tau_label(0.25), "0p25");
    }
}
