use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// A location on a triangle mesh: a vertex, a point on an edge, or a point
/// inside a face.
///
/// Edge coordinates are relative to the edge's canonical halfedge
/// (origin, tip). The textual form is `v:index`, `e:index:a,b` or
/// `f:index:a,b,c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfacePoint {
    Vertex { index: usize },
    Edge { index: usize, bary: [f64; 2] },
    Face { index: usize, bary: [f64; 3] },
}

impl SurfacePoint {
    pub fn vertex(index: usize) -> Self {
        SurfacePoint::Vertex { index }
    }

    pub fn edge(index: usize, bary: [f64; 2]) -> Self {
        SurfacePoint::Edge { index, bary }
    }

    pub fn face(index: usize, bary: [f64; 3]) -> Self {
        SurfacePoint::Face { index, bary }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SurfacePoint::Vertex { .. } => "vertex",
            SurfacePoint::Edge { .. } => "edge",
            SurfacePoint::Face { .. } => "face",
        }
    }

    pub fn index(&self) -> usize {
        match *self {
            SurfacePoint::Vertex { index }
            | SurfacePoint::Edge { index, .. }
            | SurfacePoint::Face { index, .. } => index,
        }
    }
}

impl fmt::Display for SurfacePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurfacePoint::Vertex { index } => write!(f, "v:{index}"),
            SurfacePoint::Edge { index, bary } => write!(f, "e:{index}:{},{}", bary[0], bary[1]),
            SurfacePoint::Face { index, bary } => {
                write!(f, "f:{index}:{},{},{}", bary[0], bary[1], bary[2])
            }
        }
    }
}

impl FromStr for SurfacePoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |why: &str| Error::InvalidBarycentric(format!("`{s}`: {why}"));
        let mut parts = s.trim().splitn(3, ':');
        let kind = parts.next().unwrap_or_default();
        let index: usize = parts
            .next()
            .ok_or_else(|| bad("missing element index"))?
            .parse()
            .map_err(|_| bad("element index is not an integer"))?;
        let coords: Vec<f64> = match parts.next() {
            Some(list) => list
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad("coordinate is not a number"))?,
            None => Vec::new(),
        };
        match (kind, coords.len()) {
            ("v", 0) => Ok(SurfacePoint::Vertex { index }),
            ("e", 2) => Ok(SurfacePoint::Edge {
                index,
                bary: [coords[0], coords[1]],
            }),
            ("f", 3) => Ok(SurfacePoint::Face {
                index,
                bary: [coords[0], coords[1], coords[2]],
            }),
            ("v" | "e" | "f", n) => Err(bad(&format!("wrong number of coordinates ({n})"))),
            _ => Err(bad("kind must be v, e or f")),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Record {
    kind: String,
    index: usize,
    #[serde(default)]
    bary: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Form {
    Record(Record),
    Text(String),
}

/// JSON form: `{"kind": "face", "index": 3, "bary": [a, b, c]}`. The textual
/// form is accepted on input as well.
impl Serialize for SurfacePoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let bary = match self {
            SurfacePoint::Vertex { .. } => Vec::new(),
            SurfacePoint::Edge { bary, .. } => bary.to_vec(),
            SurfacePoint::Face { bary, .. } => bary.to_vec(),
        };
        Record {
            kind: self.kind().to_string(),
            index: self.index(),
            bary,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SurfacePoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        match Form::deserialize(deserializer)? {
            Form::Text(s) => s.parse().map_err(D::Error::custom),
            Form::Record(r) => match (r.kind.as_str(), r.bary.len()) {
                ("vertex", 0) => Ok(SurfacePoint::vertex(r.index)),
                ("edge", 2) => Ok(SurfacePoint::edge(r.index, [r.bary[0], r.bary[1]])),
                ("face", 3) => Ok(SurfacePoint::face(r.index, [r.bary[0], r.bary[1], r.bary[2]])),
                (k, n) => Err(D::Error::custom(format!(
                    "surface point of kind `{k}` with {n} coordinates"
                ))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_cli_syntax() {
        let p: SurfacePoint = "f:120:0.3,0.3,0.4".parse().unwrap();
        assert_eq!(p, SurfacePoint::face(120, [0.3, 0.3, 0.4]));
        assert_eq!("v:7".parse::<SurfacePoint>().unwrap(), SurfacePoint::vertex(7));
        assert!("e:1:0.5".parse::<SurfacePoint>().is_err());
        assert!("x:1".parse::<SurfacePoint>().is_err());
    }

    #[test]
    fn json_record_form() {
        let p = SurfacePoint::face(3, [0.25, 0.25, 0.5]);
        let json = serde_json::to_value(p).unwrap();
        assert_eq!(json, serde_json::json!({"kind": "face", "index": 3, "bary": [0.25, 0.25, 0.5]}));
        let v: SurfacePoint = serde_json::from_str(r#"{"kind": "vertex", "index": 9}"#).unwrap();
        assert_eq!(v, SurfacePoint::vertex(9));
        assert!(serde_json::from_str::<SurfacePoint>(r#"{"kind": "edge", "index": 1, "bary": [1.0]}"#).is_err());
    }

    proptest! {
        #[test]
        fn text_form_round_trips(index in 0usize..100_000, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let p = SurfacePoint::face(index, [a, b, 1.0 - a - b]);
            let q: SurfacePoint = p.to_string().parse().unwrap();
            prop_assert_eq!(p, q);
            let e = SurfacePoint::edge(index, [a, 1.0 - a]);
            let json = serde_json::to_string(&e).unwrap();
            prop_assert_eq!(serde_json::from_str::<SurfacePoint>(&json).unwrap(), e);
            let text = serde_json::to_string(&e.to_string()).unwrap();
            prop_assert_eq!(serde_json::from_str::<SurfacePoint>(&text).unwrap(), e);
        }
    }
}
