//! Exact-arithmetic planar primitives.
//!
//! Points carry arbitrary-precision rational coordinates. All predicates
//! (orientation, segment/segment and line/segment crossing, convex and
//! general position) are decided exactly; there is no floating-point fast
//! path. Internally a [`PointSet`] clears all coordinates to a common
//! denominator once at construction, so predicates reduce to integer sign
//! computations (i128 when the scaled coordinates are small enough,
//! arbitrary-precision otherwise). Both routes compute the same signs.
//!
//! Crossing semantics follow the strict definition used throughout the
//! crate: two segments cross iff they meet in exactly one point that is an
//! endpoint of neither, and a line crosses a segment iff they meet in
//! exactly one point that is not an endpoint of the segment. Touching
//! configurations therefore never count as crossings.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num::bigint::BigInt;
use num::Integer;
use num::{One, Signed, Zero};
use thiserror::Error;

use crate::coord::Coord;

/// Opaque point identifier, unique within a [`PointSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PointId(pub u32);

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Point color for red-blue instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Color {
    Red,
    Blue,
}

/// A planar point with exact rational coordinates and an optional color.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Point {
    pub id: PointId,
    pub x: Coord,
    pub y: Coord,
    pub color: Option<Color>,
}

impl Point {
    pub fn new(id: PointId, x: Coord, y: Coord) -> Self {
        Point {
            id,
            x,
            y,
            color: None,
        }
    }

    pub fn with_color(id: PointId, x: Coord, y: Coord, color: Color) -> Self {
        Point {
            id,
            x,
            y,
            color: Some(color),
        }
    }
}

/// A segment between two distinct points, stored with endpoint ids in
/// canonical (ascending) order so segment sets deduplicate deterministically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Segment {
    a: PointId,
    b: PointId,
}

impl Segment {
    /// Builds a canonical segment. Panics if `a == b`.
    pub fn new(a: PointId, b: PointId) -> Self {
        assert!(a != b, "segment endpoints must be distinct");
        if a < b {
            Segment { a, b }
        } else {
            Segment { a: b, b: a }
        }
    }

    pub fn a(&self) -> PointId {
        self.a
    }

    pub fn b(&self) -> PointId {
        self.b
    }

    pub fn endpoints(&self) -> [PointId; 2] {
        [self.a, self.b]
    }

    pub fn has_endpoint(&self, p: PointId) -> bool {
        self.a == p || self.b == p
    }

    pub fn shares_endpoint(&self, other: &Segment) -> bool {
        self.has_endpoint(other.a) || self.has_endpoint(other.b)
    }

    /// The other endpoint, given one of the segment's endpoints.
    pub fn opposite(&self, p: PointId) -> Option<PointId> {
        if p == self.a {
            Some(self.b)
        } else if p == self.b {
            Some(self.a)
        } else {
            None
        }
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.a, self.b)
    }
}

/// The supporting line through two distinct points, canonicalized like
/// [`Segment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Line {
    a: PointId,
    b: PointId,
}

impl Line {
    /// Builds a canonical line. Panics if `p == q`.
    pub fn new(p: PointId, q: PointId) -> Self {
        assert!(p != q, "line defining points must be distinct");
        if p < q {
            Line { a: p, b: q }
        } else {
            Line { a: q, b: p }
        }
    }

    pub fn p(&self) -> PointId {
        self.a
    }

    pub fn q(&self) -> PointId {
        self.b
    }
}

impl fmt::Display for Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.a, self.b)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("duplicate point id {0}")]
    DuplicatePointId(PointId),
    #[error("unknown point id {0}")]
    UnknownPoint(PointId),
    #[error("not a crossing pair: {0} and {1}")]
    NotACrossingPair(Segment, Segment),
}

/// Scaled coordinates fit the i128 fast path as long as every value stays
/// below this bound: differences then stay below 2^61 and cross products
/// below 2^123, well inside i128.
const SMALL_LIMIT: i128 = 1 << 60;

#[derive(Debug, Clone)]
enum Scaled {
    Small(Vec<[i128; 2]>),
    Big(Vec<[BigInt; 2]>),
}

/// An immutable set of points with precomputed common-denominator integer
/// coordinates. Cheap to share via [`Arc`]; all predicate entry points
/// borrow it.
#[derive(Debug, Clone)]
pub struct PointSet {
    points: Vec<Point>,
    scaled: Scaled,
}

/// Equality is by the points alone; the scaled form is derived.
impl PartialEq for PointSet {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points
    }
}

impl Eq for PointSet {}

impl PointSet {
    /// Builds a point set from points with unique ids.
    pub fn new(mut points: Vec<Point>) -> Result<Self, GeometryError> {
        points.sort_by_key(|p| p.id);
        for w in points.windows(2) {
            if w[0].id == w[1].id {
                return Err(GeometryError::DuplicatePointId(w[0].id));
            }
        }
        let scaled = Self::scale(&points);
        Ok(PointSet { points, scaled })
    }

    fn scale(points: &[Point]) -> Scaled {
        let mut denom = BigInt::one();
        for p in points {
            denom = denom.lcm(p.x.denom());
            denom = denom.lcm(p.y.denom());
        }
        let scaled: Vec<[BigInt; 2]> = points
            .iter()
            .map(|p| {
                [
                    p.x.numer() * (&denom / p.x.denom()),
                    p.y.numer() * (&denom / p.y.denom()),
                ]
            })
            .collect();
        let small: Option<Vec<[i128; 2]>> = scaled
            .iter()
            .map(|[x, y]| {
                let x = i128::try_from(x).ok()?;
                let y = i128::try_from(y).ok()?;
                (x.abs() < SMALL_LIMIT && y.abs() < SMALL_LIMIT).then_some([x, y])
            })
            .collect();
        match small {
            Some(v) => Scaled::Small(v),
            None => Scaled::Big(scaled),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Point> {
        self.points.iter()
    }

    pub fn ids(&self) -> impl Iterator<Item = PointId> + '_ {
        self.points.iter().map(|p| p.id)
    }

    pub fn contains(&self, id: PointId) -> bool {
        self.index(id).is_some()
    }

    pub fn get(&self, id: PointId) -> Option<&Point> {
        self.index(id).map(|i| &self.points[i])
    }

    /// Panics if the id is absent; use when the id is known to exist.
    pub fn point(&self, id: PointId) -> &Point {
        self.get(id)
            .unwrap_or_else(|| panic!("point id {id} not in point set"))
    }

    fn index(&self, id: PointId) -> Option<usize> {
        self.points.binary_search_by_key(&id, |p| p.id).ok()
    }

    fn idx(&self, id: PointId) -> usize {
        self.index(id)
            .unwrap_or_else(|| panic!("point id {id} not in point set"))
    }

    /// Exact orientation sign of the triple, by id.
    pub fn orient(&self, a: PointId, b: PointId, c: PointId) -> i8 {
        let (ia, ib, ic) = (self.idx(a), self.idx(b), self.idx(c));
        match &self.scaled {
            Scaled::Small(v) => {
                let [ax, ay] = v[ia];
                let [bx, by] = v[ib];
                let [cx, cy] = v[ic];
                let det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
                det.signum() as i8
            }
            Scaled::Big(v) => {
                let [ax, ay] = &v[ia];
                let [bx, by] = &v[ib];
                let [cx, cy] = &v[ic];
                let det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
                if det.is_zero() {
                    0
                } else if det.is_positive() {
                    1
                } else {
                    -1
                }
            }
        }
    }

    /// Lexicographic (x, y) coordinate comparison, by id.
    pub fn cmp_xy(&self, a: PointId, b: PointId) -> Ordering {
        let (ia, ib) = (self.idx(a), self.idx(b));
        match &self.scaled {
            Scaled::Small(v) => v[ia].cmp(&v[ib]),
            Scaled::Big(v) => v[ia].cmp(&v[ib]),
        }
    }

    pub fn same_position(&self, a: PointId, b: PointId) -> bool {
        self.cmp_xy(a, b) == Ordering::Equal
    }

    /// Shared ownership wrapper; configurations hold point sets this way.
    pub fn into_shared(self) -> Arc<PointSet> {
        Arc::new(self)
    }
}

/// Exact orientation of the ordered triple `(a, b, c)`: +1 for a left turn
/// (counterclockwise), -1 for a right turn, 0 iff collinear.
pub fn orientation(a: &Point, b: &Point, c: &Point) -> i8 {
    let det = (&b.x - &a.x) * (&c.y - &a.y) - (&b.y - &a.y) * (&c.x - &a.x);
    if det.is_zero() {
        0
    } else if det.is_positive() {
        1
    } else {
        -1
    }
}

/// True iff the two closed segments meet in exactly one point that is an
/// endpoint of neither. Under general position this is the strict interior
/// crossing test: both endpoint pairs strictly straddle the other segment.
pub fn segments_cross(ps: &PointSet, s1: Segment, s2: Segment) -> bool {
    if s1.shares_endpoint(&s2) {
        return false;
    }
    let o1 = ps.orient(s1.a, s1.b, s2.a);
    let o2 = ps.orient(s1.a, s1.b, s2.b);
    if o1 * o2 >= 0 {
        return false;
    }
    let o3 = ps.orient(s2.a, s2.b, s1.a);
    let o4 = ps.orient(s2.a, s2.b, s1.b);
    o3 * o4 < 0
}

/// True iff the infinite line meets the segment in exactly one point that is
/// not an endpoint of the segment, i.e. the segment's endpoints lie strictly
/// on opposite sides.
pub fn line_crosses_segment(ps: &PointSet, l: Line, s: Segment) -> bool {
    let o1 = ps.orient(l.a, l.b, s.a);
    let o2 = ps.orient(l.a, l.b, s.b);
    o1 * o2 < 0
}

/// Convex hull of the given points (vertices only, counterclockwise order).
/// Points interior to the hull or interior to hull edges are excluded.
pub fn convex_hull(ps: &PointSet, ids: &[PointId]) -> Vec<PointId> {
    let mut ids: Vec<PointId> = ids.to_vec();
    ids.sort();
    ids.dedup();
    ids.sort_by(|&a, &b| ps.cmp_xy(a, b));
    if ids.len() <= 2 {
        if ids.len() == 2 && ps.same_position(ids[0], ids[1]) {
            ids.pop();
        }
        return ids;
    }
    let mut lower: Vec<PointId> = Vec::new();
    for &p in &ids {
        while lower.len() >= 2
            && ps.orient(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0
        {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<PointId> = Vec::new();
    for &p in ids.iter().rev() {
        while upper.len() >= 2
            && ps.orient(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0
        {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// True iff every point of the subset is a vertex of the subset's convex
/// hull. Fewer than three points count as convex (degenerate case).
pub fn in_convex_position(ps: &PointSet, ids: &[PointId]) -> bool {
    let mut unique: Vec<PointId> = ids.to_vec();
    unique.sort();
    unique.dedup();
    if unique.len() < 3 {
        return true;
    }
    convex_hull(ps, &unique).len() == unique.len()
}

/// True iff no three distinct points of the set are collinear (exact test
/// over all triples). Sets with fewer than three points pass vacuously.
pub fn is_general_position(ps: &PointSet) -> bool {
    let ids: Vec<PointId> = ps.ids().collect();
    let n = ids.len();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                if ps.orient(ids[i], ids[j], ids[k]) == 0 {
                    return false;
                }
            }
        }
    }
    true
}

/// The two pairings of the four endpoints of a crossing pair other than the
/// pair itself. Each returned pair is mutually non-crossing and forms a
/// 4-cycle together with the removed pair. Pairs and segments come out in
/// canonical order.
pub fn replacement_pairs(
    ps: &PointSet,
    s1: Segment,
    s2: Segment,
) -> Result<[(Segment, Segment); 2], GeometryError> {
    if !segments_cross(ps, s1, s2) {
        return Err(GeometryError::NotACrossingPair(s1, s2));
    }
    let mut pairs = [
        normalize_pair(Segment::new(s1.a, s2.a), Segment::new(s1.b, s2.b)),
        normalize_pair(Segment::new(s1.a, s2.b), Segment::new(s1.b, s2.a)),
    ];
    pairs.sort();
    debug_assert!(!segments_cross(ps, pairs[0].0, pairs[0].1));
    debug_assert!(!segments_cross(ps, pairs[1].0, pairs[1].1));
    Ok(pairs)
}

/// Orders a segment pair canonically.
pub fn normalize_pair(s: Segment, t: Segment) -> (Segment, Segment) {
    if s <= t {
        (s, t)
    } else {
        (t, s)
    }
}
