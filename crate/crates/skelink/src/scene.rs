//! Scene files and the built-in test corpus.

use crate::geometry::{BoundingSpec, Configuration, GeometryError, Primitive};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scene parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("cannot read scene: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneRegion {
    pub id: u32,
    pub primitive: Primitive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub regions: Vec<SceneRegion>,
    #[serde(default = "default_bounding")]
    pub bounding: BoundingSpec,
}

fn default_bounding() -> BoundingSpec {
    BoundingSpec::Box { margin: 0.1 }
}

impl Scene {
    pub fn from_json(text: &str) -> Result<Scene, SceneError> {
        serde_json::from_str(text).map_err(|e| SceneError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Scene, SceneError> {
        let text = std::fs::read_to_string(path).map_err(|e| SceneError::Io(format!("{}: {e}", path.display())))?;
        Scene::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenes serialize")
    }

    pub fn with_bounding(mut self, bounding: BoundingSpec) -> Scene {
        self.bounding = bounding;
        self
    }

    /// Sample every region with `n` points and validate the configuration.
    pub fn build(&self, n: usize) -> Result<Configuration, SceneError> {
        let prims: Vec<(u32, Primitive)> = self.regions.iter().map(|r| (r.id, r.primitive.clone())).collect();
        Ok(Configuration::from_primitives(&prims, n, &self.bounding)?)
    }
}

fn scene(regions: Vec<(u32, Primitive)>, bounding: BoundingSpec) -> Scene {
    Scene {
        regions: regions.into_iter().map(|(id, primitive)| SceneRegion { id, primitive }).collect(),
        bounding,
    }
}

fn circle(x: f64, y: f64, radius: f64) -> Primitive {
    Primitive::Circle { center: [x, y], radius }
}

fn spline_from(count: usize, f: impl Fn(f64) -> [f64; 2]) -> Primitive {
    Primitive::Spline { points: (0..count).map(|k| f(TAU * k as f64 / count as f64)).collect() }
}

pub fn ellipse() -> Scene {
    scene(
        vec![(1, Primitive::Ellipse { center: [0.0, 0.0], a: 2.0, b: 1.0, rotation: 0.0 })],
        default_bounding(),
    )
}

/// Smooth region with one shallow indentation on top.
pub fn bean_primitive() -> Primitive {
    spline_from(24, |t| [2.0 * t.cos(), t.sin() + 0.3 * (2.0 * t).cos() + 0.1 * (3.0 * t).sin()])
}

pub fn bean() -> Scene {
    scene(vec![(1, bean_primitive())], default_bounding())
}

/// Three-lobed region whose axis has one junction.
pub fn blob() -> Scene {
    scene(
        vec![(
            1,
            spline_from(36, |t| {
                let r = 1.0 + 0.25 * (3.0 * t).cos();
                [r * t.cos(), r * t.sin()]
            }),
        )],
        default_bounding(),
    )
}

pub fn two_disks() -> Scene {
    scene(vec![(1, circle(-3.0, 0.0, 1.0)), (2, circle(3.0, 0.0, 1.0))], default_bounding())
}

/// Three well-separated pairs of close disks.
pub fn three_clusters() -> Scene {
    let centres = [(0.0, 8.0), (-7.0, -4.0), (7.0, -4.0)];
    let mut regions = Vec::new();
    for (k, (cx, cy)) in centres.iter().enumerate() {
        regions.push((2 * k as u32 + 1, circle(cx - 1.25, *cy, 1.0)));
        regions.push((2 * k as u32 + 2, circle(cx + 1.25, *cy, 1.0)));
    }
    scene(regions, default_bounding())
}

fn significance_window() -> BoundingSpec {
    BoundingSpec::Intrinsic { polygon: vec![[-8.0, -5.0], [8.0, -5.0], [8.0, 9.0], [-8.0, 9.0]] }
}

/// Three disks in a triangle, sharing a fixed window.
pub fn significance_near() -> Scene {
    scene(
        vec![(1, circle(0.0, 3.0, 1.0)), (2, circle(-1.6, 0.0, 1.0)), (3, circle(1.6, 0.0, 1.0))],
        significance_window(),
    )
}

/// The same scene with region 1 moved away from the others.
pub fn significance_far() -> Scene {
    scene(
        vec![(1, circle(0.0, 7.0, 1.0)), (2, circle(-1.6, 0.0, 1.0)), (3, circle(1.6, 0.0, 1.0))],
        significance_window(),
    )
}

/// Named scenes used by tests, the acceptance run and the command-line tool.
pub fn corpus() -> Vec<(&'static str, Scene)> {
    vec![
        ("ellipse", ellipse()),
        ("bean", bean()),
        ("blob", blob()),
        ("two_disks", two_disks()),
        ("three_clusters", three_clusters()),
        ("significance_near", significance_near()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_builds() {
        for (name, s) in corpus() {
            let c = s.build(256).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(c.regions.len(), s.regions.len());
        }
        significance_far().build(256).unwrap();
    }

    #[test]
    fn json_round_trip_and_errors() {
        let s = two_disks();
        assert_eq!(Scene::from_json(&s.to_json()).unwrap(), s);
        let text = r#"{"regions":[{"id":1,"primitive":{"type":"circle","center":[0,0],"radius":1}}],"bounding":{"mode":"convex_hull"}}"#;
        assert_eq!(Scene::from_json(text).unwrap().bounding, BoundingSpec::ConvexHull);
        match Scene::from_json("{\n \"regions\": [ {\"id\": 1,\n \"primitive\": 3} ]}") {
            Err(SceneError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
