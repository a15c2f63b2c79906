use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

/// Cross-section `ω ⊂ ℝ^{d−1}`. Every shape except the interval is centered
/// at the origin; the interval is centered at `offset`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum CrossSectionShape {
    Interval { length: f64, offset: f64 },
    Disk { radius: f64 },
    Annulus { inner: f64, outer: f64 },
    Rectangle { width: f64, height: f64 },
    Ellipse { semi_x: f64, semi_y: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
}

impl CrossSectionShape {
    pub fn interval(length: f64) -> Self {
        CrossSectionShape::Interval {
            length,
            offset: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            CrossSectionShape::Interval { .. } => 1,
            _ => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Input(format!(
                    "{what} must be positive and finite, got {v}"
                )))
            }
        };
        match self {
            CrossSectionShape::Interval { length, offset } => {
                positive(*length, "interval length")?;
                if !offset.is_finite() {
                    return input("interval offset must be finite");
                }
                Ok(())
            }
            CrossSectionShape::Disk { radius } => positive(*radius, "disk radius"),
            CrossSectionShape::Annulus { inner, outer } => {
                positive(*inner, "annulus inner radius")?;
                positive(*outer, "annulus outer radius")?;
                if inner >= outer {
                    return Err(Error::Input(format!(
                        "annulus needs inner < outer, got {inner} ≥ {outer}"
                    )));
                }
                Ok(())
            }
            CrossSectionShape::Rectangle { width, height } => {
                positive(*width, "rectangle width")?;
                positive(*height, "rectangle height")
            }
            CrossSectionShape::Ellipse { semi_x, semi_y } => {
                positive(*semi_x, "ellipse semi-axis")?;
                positive(*semi_y, "ellipse semi-axis")
            }
            CrossSectionShape::Polygon { vertices } => polygon_fan(vertices).map(|_| ()),
        }
    }

    /// `a = sup_{t∈ω} |t|`.
    pub fn radius_bound(&self) -> f64 {
        match self {
            CrossSectionShape::Interval { length, offset } => offset.abs() + 0.5 * length,
            CrossSectionShape::Disk { radius } => *radius,
            CrossSectionShape::Annulus { outer, .. } => *outer,
            CrossSectionShape::Rectangle { width, height } => {
                (0.25 * (width * width + height * height)).sqrt()
            }
            CrossSectionShape::Ellipse { semi_x, semi_y } => semi_x.max(*semi_y),
            CrossSectionShape::Polygon { vertices } => vertices
                .iter()
                .map(|v| (v[0] * v[0] + v[1] * v[1]).sqrt())
                .fold(0.0, f64::max),
        }
    }

    /// Disks and annuli centered at the origin are invariant under all
    /// rotations, so a twist leaves the tube congruent to the straight one.
    pub fn is_circular(&self) -> bool {
        matches!(
            self,
            CrossSectionShape::Disk { .. } | CrossSectionShape::Annulus { .. }
        )
    }

    /// Exact length or area.
    pub fn measure(&self) -> f64 {
        match self {
            CrossSectionShape::Interval { length, .. } => *length,
            CrossSectionShape::Disk { radius } => PI * radius * radius,
            CrossSectionShape::Annulus { inner, outer } => PI * (outer * outer - inner * inner),
            CrossSectionShape::Rectangle { width, height } => width * height,
            CrossSectionShape::Ellipse { semi_x, semi_y } => PI * semi_x * semi_y,
            CrossSectionShape::Polygon { vertices } => signed_area(vertices).abs(),
        }
    }
}

pub(crate) fn signed_area(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| {
            let a = v[i];
            let b = v[(i + 1) % n];
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
        * 0.5
}

/// Counter-clockwise vertices and area centroid of a polygon that is
/// star-shaped with respect to that centroid.
pub(crate) fn polygon_fan(vertices: &[[f64; 2]]) -> Result<(Vec<[f64; 2]>, [f64; 2])> {
    if vertices.len() < 3 {
        return input(format!(
            "polygon needs at least 3 vertices, got {}",
            vertices.len()
        ));
    }
    if vertices
        .iter()
        .any(|v| !v[0].is_finite() || !v[1].is_finite())
    {
        return input("polygon vertex is not finite");
    }
    let area = signed_area(vertices);
    let scale = vertices
        .iter()
        .map(|v| v[0].abs().max(v[1].abs()))
        .fold(0.0, f64::max);
    if !(area.abs() > 1e-12 * scale * scale) {
        return input("polygon is degenerate (zero area)");
    }
    let mut ccw = vertices.to_vec();
    if area < 0.0 {
        ccw.reverse();
    }
    let a = area.abs();
    let n = ccw.len();
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let p = ccw[i];
        let q = ccw[(i + 1) % n];
        let cross = p[0] * q[1] - q[0] * p[1];
        cx += (p[0] + q[0]) * cross;
        cy += (p[1] + q[1]) * cross;
    }
    let c = [cx / (6.0 * a), cy / (6.0 * a)];
    for i in 0..n {
        let p = ccw[i];
        let q = ccw[(i + 1) % n];
        let orient = (p[0] - c[0]) * (q[1] - c[1]) - (p[1] - c[1]) * (q[0] - c[0]);
        if !(orient > 1e-12 * scale * scale) {
            return input(format!(
                "polygon is degenerate or not star-shaped about its centroid (edge {i})"
            ));
        }
    }
    Ok((ccw, c))
}

impl fmt::Display for CrossSectionShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CrossSectionShape::Interval { length, offset } => {
                if *offset == 0.0 {
                    write!(f, "interval {length}")
                } else {
                    write!(f, "interval {length} {offset}")
                }
            }
            CrossSectionShape::Disk { radius } => write!(f, "disk {radius}"),
            CrossSectionShape::Annulus { inner, outer } => write!(f, "annulus {inner} {outer}"),
            CrossSectionShape::Rectangle { width, height } => {
                write!(f, "rectangle {width} {height}")
            }
            CrossSectionShape::Ellipse { semi_x, semi_y } => write!(f, "ellipse {semi_x} {semi_y}"),
            CrossSectionShape::Polygon { vertices } => {
                write!(f, "polygon")?;
                for v in vertices {
                    write!(f, " {} {}", v[0], v[1])?;
                }
                Ok(())
            }
        }
    }
}

/// Parses `"<shape> <params…>"`: `interval L [offset]`, `disk a`,
/// `annulus a0 a`, `rectangle w h`, `ellipse a b`, `polygon x1 y1 x2 y2 …`.
impl FromStr for CrossSectionShape {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut parts = text.split_whitespace();
        let name = parts
            .next()
            .ok_or_else(|| Error::Input("empty cross-section description".into()))?;
        let params: Vec<f64> = parts
            .map(|p| {
                p.parse::<f64>().map_err(|_| {
                    Error::Input(format!("bad cross-section parameter '{p}' in '{text}'"))
                })
            })
            .collect::<Result<_>>()?;
        let count = |ok: bool, expect: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Input(format!(
                    "cross-section '{name}' takes {expect}, got {} numbers",
                    params.len()
                )))
            }
        };
        let shape = match name {
            "interval" => {
                count(params.len() == 1 || params.len() == 2, "a length and an optional offset")?;
                CrossSectionShape::Interval {
                    length: params[0],
                    offset: params.get(1).copied().unwrap_or(0.0),
                }
            }
            "disk" => {
                count(params.len() == 1, "1 parameter")?;
                CrossSectionShape::Disk { radius: params[0] }
            }
            "annulus" => {
                count(params.len() == 2, "2 parameters")?;
                CrossSectionShape::Annulus {
                    inner: params[0],
                    outer: params[1],
                }
            }
            "rectangle" => {
                count(params.len() == 2, "2 parameters")?;
                CrossSectionShape::Rectangle {
                    width: params[0],
                    height: params[1],
                }
            }
            "ellipse" => {
                count(params.len() == 2, "2 parameters")?;
                CrossSectionShape::Ellipse {
                    semi_x: params[0],
                    semi_y: params[1],
                }
            }
            "polygon" => {
                count(params.len() >= 6 && params.len().is_multiple_of(2), "an even number (≥ 6) of coordinates")?;
                CrossSectionShape::Polygon {
                    vertices: params.chunks(2).map(|c| [c[0], c[1]]).collect(),
                }
            }
            other => {
                return Err(Error::Input(format!(
                    "unknown cross-section '{other}' (expected interval, disk, annulus, rectangle, ellipse, polygon)"
                )))
            }
        };
        shape.validate()?;
        Ok(shape)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangle_radius_bound_is_half_diagonal() {
        let r = CrossSectionShape::Rectangle {
            width: 0.6,
            height: 0.2,
        };
        assert!((r.radius_bound() - (0.3f64.powi(2) + 0.1f64.powi(2)).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn annulus_ordering_is_checked() {
        assert!("annulus 1 0.5".parse::<CrossSectionShape>().is_err());
        assert!("annulus 0.5 1".parse::<CrossSectionShape>().is_ok());
    }

    #[test]
    fn parse_round_trip() {
        for text in [
            "interval 1",
            "interval 1 0.5",
            "disk 2",
            "rectangle 0.6 0.2",
            "polygon 0 0 1 0 0 1",
        ] {
            let shape: CrossSectionShape = text.parse().unwrap();
            assert_eq!(shape.to_string(), text);
        }
    }

    #[test]
    fn non_star_shaped_polygon_is_rejected() {
        // A thin crescent whose centroid lies outside the polygon.
        let v = vec![
            [0.0, 0.0],
            [4.0, 0.0],
            [4.0, 4.0],
            [3.9, 4.0],
            [3.9, 0.1],
            [0.0, 0.1],
        ];
        assert!(polygon_fan(&v).is_err());
        let collinear = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        assert!(polygon_fan(&collinear).is_err());
    }

    #[test]
    fn clockwise_polygon_is_reoriented() {
        let (ccw, c) = polygon_fan(&[[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(signed_area(&ccw) > 0.0);
        assert!((c[0] - 0.5).abs() < 1e-15 && (c[1] - 0.5).abs() < 1e-15);
    }
}
