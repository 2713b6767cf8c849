//! Quadrilateral geometry for detection matching.
//!
//! Coordinates are image pixels with `y` growing downward, so a quad that
//! looks clockwise on screen has a *positive* shoelace sum. Areas are always
//! reported as magnitudes; winding only matters for diagnostics.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::GeometryError;

/// Vertex of an annotation polygon, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    fn sub(self, other: Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }
}

fn cross(a: Point, b: Point) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Twice the signed area of triangle `(a, b, c)`.
fn orient(a: Point, b: Point, c: Point) -> f64 {
    cross(b.sub(a), c.sub(a))
}

/// Winding of a quad as seen in an image (y down).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Winding {
    Clockwise,
    CounterClockwise,
    Degenerate,
}

/// A four-vertex polygon. Construction only checks that coordinates are
/// finite; simplicity and area are properties queried separately because
/// ground truth and predictions enforce them differently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 8]", try_from = "[f64; 8]")]
pub struct Quad {
    vertices: [Point; 4],
}

impl Quad {
    pub fn new(vertices: [Point; 4]) -> Result<Self, GeometryError> {
        if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Self { vertices })
    }

    /// Builds a quad from `x1,y1,...,x4,y4`.
    pub fn from_coords(c: [f64; 8]) -> Result<Self, GeometryError> {
        Self::new([
            Point::new(c[0], c[1]),
            Point::new(c[2], c[3]),
            Point::new(c[4], c[5]),
            Point::new(c[6], c[7]),
        ])
    }

    /// Builds a quad from a slice that must hold exactly eight numbers.
    pub fn from_slice(c: &[f64]) -> Result<Self, GeometryError> {
        let arr: [f64; 8] = c
            .try_into()
            .map_err(|_| GeometryError::VertexCount(c.len()))?;
        Self::from_coords(arr)
    }

    /// Axis-aligned rectangle listed clockwise from the top-left corner.
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, GeometryError> {
        Self::from_coords([x0, y0, x1, y0, x1, y1, x0, y1])
    }

    pub fn vertices(&self) -> &[Point; 4] {
        &self.vertices
    }

    pub fn coords(&self) -> [f64; 8] {
        let v = &self.vertices;
        [
            v[0].x, v[0].y, v[1].x, v[1].y, v[2].x, v[2].y, v[3].x, v[3].y,
        ]
    }

    /// Shoelace area with sign; positive means clockwise in image coordinates.
    pub fn signed_area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn area(&self) -> f64 {
        quad_area(self)
    }

    pub fn winding(&self) -> Winding {
        let a = self.signed_area();
        if a > 0.0 {
            Winding::Clockwise
        } else if a < 0.0 {
            Winding::CounterClockwise
        } else {
            Winding::Degenerate
        }
    }

    /// True when the two pairs of opposite edges do not cross.
    ///
    /// Only proper crossings count; a vertex resting on an opposite edge is
    /// accepted since the region is still well defined.
    pub fn is_simple(&self) -> bool {
        let v = &self.vertices;
        !segments_cross(v[0], v[1], v[2], v[3]) && !segments_cross(v[1], v[2], v[3], v[0])
    }

    /// True when no interior angle exceeds 180 degrees.
    pub fn is_convex(&self) -> bool {
        let v = &self.vertices;
        let mut pos = false;
        let mut neg = false;
        for i in 0..4 {
            let o = orient(v[i], v[(i + 1) % 4], v[(i + 2) % 4]);
            pos |= o > 0.0;
            neg |= o < 0.0;
        }
        !(pos && neg)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Result<Self, GeometryError> {
        Self::new(self.vertices.map(|p| Point::new(p.x + dx, p.y + dy)))
    }
}

impl From<Quad> for [f64; 8] {
    fn from(q: Quad) -> Self {
        q.coords()
    }
}

impl TryFrom<[f64; 8]> for Quad {
    type Error = GeometryError;

    fn try_from(c: [f64; 8]) -> Result<Self, Self::Error> {
        Quad::from_coords(c)
    }
}

impl fmt::Display for Quad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.coords();
        write!(
            f,
            "{},{},{},{},{},{},{},{}",
            c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]
        )
    }
}

fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        s += cross(poly[i], poly[(i + 1) % n]);
    }
    s / 2.0
}

/// Proper crossing of segments `ab` and `cd`: each segment strictly
/// separates the endpoints of the other.
fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

/// Absolute shoelace area; zero for degenerate quads.
pub fn quad_area(q: &Quad) -> f64 {
    q.signed_area().abs()
}

/// A convex piece of a quad together with its inclusion sign.
///
/// Fan triangles of a non-convex quad can lie partly outside it; the signed
/// weights make the sum of indicator functions equal the quad's indicator.
struct Piece {
    poly: Vec<Point>,
    weight: f64,
}

/// Splits a quad into convex pieces, every piece wound counter-clockwise in
/// the shoelace sense (positive area).
fn convex_pieces(q: &Quad) -> Vec<Piece> {
    let v = q.vertices;
    let total = q.signed_area();
    if q.is_convex() {
        let mut poly = v.to_vec();
        if total < 0.0 {
            poly.reverse();
        }
        return vec![Piece { poly, weight: 1.0 }];
    }
    // Fan from vertex 0.
    let mut pieces = Vec::with_capacity(2);
    for (a, b) in [(1, 2), (2, 3)] {
        let tri = [v[0], v[a], v[b]];
        let s = signed_area(&tri);
        if s == 0.0 {
            continue;
        }
        let mut poly = tri.to_vec();
        if s < 0.0 {
            poly.reverse();
        }
        let weight = if (s > 0.0) == (total > 0.0) { 1.0 } else { -1.0 };
        pieces.push(Piece { poly, weight });
    }
    pieces
}

/// Clips `subject` against the convex polygon `clip` (both positively
/// wound) by successive half-planes.
fn clip_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let mut output = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % n];
        let input = std::mem::take(&mut output);
        let m = input.len();
        for j in 0..m {
            let cur = input[j];
            let prev = input[(j + m - 1) % m];
            let dc = orient(a, b, cur);
            let dp = orient(a, b, prev);
            let cur_in = dc >= 0.0;
            let prev_in = dp >= 0.0;
            if cur_in {
                if !prev_in {
                    output.push(lerp(prev, cur, dp / (dp - dc)));
                }
                output.push(cur);
            } else if prev_in {
                output.push(lerp(prev, cur, dp / (dp - dc)));
            }
        }
    }
    output
}

fn lerp(p: Point, q: Point, t: f64) -> Point {
    Point::new(p.x + (q.x - p.x) * t, p.y + (q.y - p.y) * t)
}

fn convex_intersection_area(a: &[Point], b: &[Point]) -> f64 {
    let clipped = clip_convex(a, b);
    if clipped.len() < 3 {
        return 0.0;
    }
    signed_area(&clipped).abs()
}

/// Orders the pair canonically so that `f(a, b)` and `f(b, a)` follow the
/// same arithmetic path.
fn canonical<'q>(a: &'q Quad, b: &'q Quad) -> (&'q Quad, &'q Quad) {
    let (ca, cb) = (a.coords(), b.coords());
    for (x, y) in ca.iter().zip(cb.iter()) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return (a, b),
            std::cmp::Ordering::Greater => return (b, a),
            std::cmp::Ordering::Equal => {}
        }
    }
    (a, b)
}

/// Area of the region shared by two quads.
///
/// Both quads must be simple; a self-intersecting quad is reported as an
/// error. Zero-area quads intersect nothing.
pub fn intersection_area(a: &Quad, b: &Quad) -> Result<f64, GeometryError> {
    let (a, b) = canonical(a, b);
    for q in [a, b] {
        if !q.is_simple() {
            return Err(GeometryError::SelfIntersecting(*q));
        }
    }
    let (area_a, area_b) = (a.area(), b.area());
    if area_a == 0.0 || area_b == 0.0 {
        return Ok(0.0);
    }
    let pa = convex_pieces(a);
    let pb = convex_pieces(b);
    let mut total = 0.0;
    for x in &pa {
        for y in &pb {
            total += x.weight * y.weight * convex_intersection_area(&x.poly, &y.poly);
        }
    }
    Ok(total.max(0.0).min(area_a.min(area_b)))
}

/// Intersection over union; zero when the union is empty.
pub fn iou(a: &Quad, b: &Quad) -> Result<f64, GeometryError> {
    let (a, b) = canonical(a, b);
    let inter = intersection_area(a, b)?;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return Ok(0.0);
    }
    Ok((inter / union).clamp(0.0, 1.0))
}
