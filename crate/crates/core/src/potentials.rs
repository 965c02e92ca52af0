//! Crossing and line potentials.
//!
//! Two potentials drive every termination argument in this crate:
//!
//! * `phi_x`: the number of crossing pairs of edges;
//! * `phi_line` / `phi_l`: for a line, the number of edges it crosses
//!   (with multiplicity), summed over a [`LineSet`].
//!
//! Line sets come in two kinds. `Full` takes every line through a pair of
//! points. `NearConvex` takes L1 (lines through a pair with at least one
//! point outside the designated convex subset C) united with L2 (lines
//! through hull-consecutive pairs of C).
//!
//! A flip never increases any line's potential. `line_delta` measures the
//! per-line decrease directly from the four flip segments; it depends only
//! on the flip and the line, not on the hosting configuration, which is
//! what makes `flip_drop` a well-defined quantity of the flip alone. On
//! the full line set every flip drops at least 2 (the supporting lines of
//! the two removed segments each lose a crossing), giving the termination
//! certificate used by the engine.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::config::{Configuration, Flip};
use crate::geometry::{
    convex_hull, in_convex_position, line_crosses_segment, Line, PointId, PointSet, Segment,
};

/// Which lines a [`LineSet`] contains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LineSetKind {
    /// All lines through pairs of points.
    Full,
    /// L1 (pairs with at least one point outside `convex`) plus L2
    /// (hull-consecutive pairs of `convex`).
    NearConvex { convex: Vec<PointId> },
}

/// A deduplicated, canonically ordered set of lines through point pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineSet {
    lines: Vec<Line>,
    kind: LineSetKind,
}

impl LineSet {
    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn kind(&self) -> &LineSetKind {
        &self.kind
    }

    /// An explicit line set, for tests and diagnostics.
    pub fn from_lines(lines: Vec<Line>, kind: LineSetKind) -> Self {
        let mut lines = lines;
        lines.sort();
        lines.dedup();
        LineSet { lines, kind }
    }
}

/// Per-line and total line potentials plus the crossing count of one
/// configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PotentialReport {
    pub phi_x: u64,
    pub phi_l_total: u64,
    pub per_line: BTreeMap<Line, u64>,
}

/// Per-(flip, line) taxonomy. `Dropping` and `Critical` are sufficient
/// conditions for a delta of 2 and 1 respectively; `Stable` makes no
/// claim (some Stable lines still drop, e.g. the supporting lines of the
/// removed segments). `line_delta` is always the ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineClass {
    Dropping,
    Critical,
    Stable,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PotentialError {
    #[error("designated subset is not in convex position")]
    NotConvex,
    #[error("unknown point id {0}")]
    UnknownPoint(PointId),
}

/// Number of crossing pairs of edges.
pub fn phi_x(c: &Configuration) -> u64 {
    c.crossings().len() as u64
}

/// Number of edges the line crosses, counted with multiplicity. Never
/// exceeds the configuration's edge count.
pub fn phi_line(c: &Configuration, l: Line) -> u64 {
    c.edges()
        .iter()
        .filter(|(&s, _)| line_crosses_segment(c.points(), l, s))
        .map(|(_, &m)| m as u64)
        .sum()
}

/// Builds the requested line set over the point set.
pub fn build_line_set(ps: &PointSet, kind: LineSetKind) -> Result<LineSet, PotentialError> {
    let ids: Vec<PointId> = ps.ids().collect();
    let mut lines = Vec::new();
    match &kind {
        LineSetKind::Full => {
            for i in 0..ids.len() {
                for j in (i + 1)..ids.len() {
                    lines.push(Line::new(ids[i], ids[j]));
                }
            }
        }
        LineSetKind::NearConvex { convex } => {
            let mut convex_sorted = convex.clone();
            convex_sorted.sort();
            convex_sorted.dedup();
            for &c in &convex_sorted {
                if !ps.contains(c) {
                    return Err(PotentialError::UnknownPoint(c));
                }
            }
            if !in_convex_position(ps, &convex_sorted) {
                return Err(PotentialError::NotConvex);
            }
            let in_convex = |p: PointId| convex_sorted.binary_search(&p).is_ok();
            // L1: at least one defining point outside the convex subset.
            for i in 0..ids.len() {
                for j in (i + 1)..ids.len() {
                    if !in_convex(ids[i]) || !in_convex(ids[j]) {
                        lines.push(Line::new(ids[i], ids[j]));
                    }
                }
            }
            // L2: hull-consecutive pairs of the convex subset, cyclically.
            let hull = convex_hull(ps, &convex_sorted);
            match hull.len() {
                0 | 1 => {}
                2 => lines.push(Line::new(hull[0], hull[1])),
                n => {
                    for i in 0..n {
                        lines.push(Line::new(hull[i], hull[(i + 1) % n]));
                    }
                }
            }
        }
    }
    Ok(LineSet::from_lines(lines, kind))
}

/// Sums `phi_line` over the line set and pairs it with `phi_x`.
pub fn phi_l(c: &Configuration, ls: &LineSet) -> PotentialReport {
    let per_line: BTreeMap<Line, u64> = ls
        .lines()
        .iter()
        .map(|&l| (l, phi_line(c, l)))
        .collect();
    let phi_l_total = per_line.values().sum();
    PotentialReport {
        phi_x: phi_x(c),
        phi_l_total,
        per_line,
    }
}

/// How much the line's potential falls under the flip: crossings with the
/// removed pair minus crossings with the added pair. Computed from the
/// four flip segments alone, so the value is independent of whatever
/// configuration hosts the flip. Well-formed flips yield 0, 1, or 2.
pub fn line_delta(ps: &PointSet, f: &Flip, l: Line) -> i64 {
    let count = |pair: (Segment, Segment)| -> i64 {
        let mut c = 0;
        if line_crosses_segment(ps, l, pair.0) {
            c += 1;
        }
        if line_crosses_segment(ps, l, pair.1) {
            c += 1;
        }
        c
    };
    count(f.removed()) - count(f.added())
}

/// Taxonomy of a line against a flip. Dropping: the line strictly
/// separates the two added segments (guarantees delta 2). Critical: the
/// line passes through exactly one flipped point and separates the added
/// segments otherwise (guarantees delta 1). Everything else is Stable.
pub fn classify_line(ps: &PointSet, f: &Flip, l: Line) -> LineClass {
    let (a1, a2) = f.added();
    let s = [
        ps.orient(l.p(), l.q(), a1.a()),
        ps.orient(l.p(), l.q(), a1.b()),
        ps.orient(l.p(), l.q(), a2.a()),
        ps.orient(l.p(), l.q(), a2.b()),
    ];
    let zeros = s.iter().filter(|&&x| x == 0).count();
    let strictly_separates =
        s[0] != 0 && s[0] == s[1] && s[2] == s[3] && s[2] == -s[0];
    if strictly_separates {
        return LineClass::Dropping;
    }
    if zeros == 1 {
        // Each added segment must not straddle the line, and their nonzero
        // sides must be opposite; the single on-line point contributes no
        // side of its own.
        let consistent = |u: i8, v: i8| u == 0 || v == 0 || u == v;
        let side = |u: i8, v: i8| if u != 0 { u } else { v };
        if consistent(s[0], s[1])
            && consistent(s[2], s[3])
            && side(s[0], s[1]) == -side(s[2], s[3])
        {
            return LineClass::Critical;
        }
    }
    LineClass::Stable
}

/// Total potential decrease of the flip over a line set. Independent of
/// the hosting configuration; at least 2 on the full line set of a
/// general-position point set.
pub fn flip_drop(ps: &PointSet, f: &Flip, ls: &LineSet) -> i64 {
    ls.lines().iter().map(|&l| line_delta(ps, f, l)).sum()
}

/// The four labelings of a flip as `<p1p3, p2p4 -> p1p4, p2p3>`, returned
/// as `(p1, p4, p3)`: each directed reading of an added segment fixes p1
/// and p4, and p3 is the endpoint joined to p1 by a removed segment.
pub fn flip_labelings(f: &Flip) -> [(PointId, PointId, PointId); 4] {
    let (r1, r2) = f.removed();
    let removed_mate = |p: PointId| -> PointId {
        r1.opposite(p)
            .or_else(|| r2.opposite(p))
            .expect("flip point must lie on a removed segment")
    };
    let (a1, a2) = f.added();
    [
        (a1.a(), a1.b(), removed_mate(a1.a())),
        (a1.b(), a1.a(), removed_mate(a1.b())),
        (a2.a(), a2.b(), removed_mate(a2.a())),
        (a2.b(), a2.a(), removed_mate(a2.b())),
    ]
}

/// 1-based position of `p3` among the points of the set (minus `p1`, `p4`)
/// in angular order from the ray `p1 -> p4`, sweeping toward the side of
/// the line through p1, p4 that contains p3. Requires general position
/// (`p3` strictly off that line).
pub fn angular_rank(ps: &PointSet, p1: PointId, p4: PointId, p3: PointId) -> usize {
    let side = ps.orient(p1, p4, p3);
    assert!(side != 0, "p3 must lie strictly off line p1p4");
    let mut rank = 1;
    for x in ps.ids() {
        if x == p1 || x == p4 || x == p3 {
            continue;
        }
        // Same side as p3 and angularly strictly before it.
        if ps.orient(p1, p4, x) == side && ps.orient(p1, x, p3) == side {
            rank += 1;
        }
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Version;
    use crate::coord::{coord, ratio};
    use crate::geometry::Point;
    use std::sync::Arc;

    fn pt(id: u32, x: i64, y: i64) -> Point {
        Point::new(PointId(id), coord(x), coord(y))
    }

    fn seg(a: u32, b: u32) -> Segment {
        Segment::new(PointId(a), PointId(b))
    }

    fn line(a: u32, b: u32) -> Line {
        Line::new(PointId(a), PointId(b))
    }

    fn square_points() -> Arc<PointSet> {
        PointSet::new(vec![pt(1, 0, 0), pt(2, 0, 2), pt(3, 2, 2), pt(4, 2, 0)])
            .unwrap()
            .into_shared()
    }

    fn square_flip() -> Flip {
        Flip::new((seg(1, 3), seg(2, 4)), (seg(1, 2), seg(3, 4)))
    }

    #[test]
    fn phi_x_square() {
        let diagonals =
            Configuration::new(square_points(), [seg(1, 3), seg(2, 4)], Version::MM);
        assert_eq!(phi_x(&diagonals), 1);
        let sides = Configuration::new(square_points(), [seg(1, 2), seg(3, 4)], Version::MM);
        assert_eq!(phi_x(&sides), 0);
    }

    #[test]
    fn phi_line_square() {
        let diagonals =
            Configuration::new(square_points(), [seg(1, 3), seg(2, 4)], Version::MM);
        assert_eq!(phi_line(&diagonals, line(1, 3)), 1);
        assert_eq!(phi_line(&diagonals, line(1, 2)), 0);
    }

    #[test]
    fn full_line_set_counts() {
        let ps = PointSet::new((0..6).map(|i| pt(i, i as i64, (i * i) as i64)).collect())
            .unwrap();
        let ls = build_line_set(&ps, LineSetKind::Full).unwrap();
        assert_eq!(ls.len(), 15);
    }

    #[test]
    fn near_convex_line_set_counts() {
        // Five parabola points plus one interior point.
        let mut pts: Vec<Point> = (0..5).map(|i| pt(i, i as i64, (i * i) as i64)).collect();
        pts.push(pt(5, 2, 7));
        let ps = PointSet::new(pts).unwrap();
        let convex: Vec<PointId> = (0..5).map(PointId).collect();
        let ls = build_line_set(&ps, LineSetKind::NearConvex { convex }).unwrap();
        // L1: the interior point paired with each of the 5 others; L2: the
        // 5 cyclically consecutive hull pairs.
        assert_eq!(ls.len(), 10);
        let l1_count = ls
            .lines()
            .iter()
            .filter(|l| l.p() == PointId(5) || l.q() == PointId(5))
            .count();
        assert_eq!(l1_count, 5);
    }

    #[test]
    fn near_convex_all_convex_gives_hull_edges_only() {
        let ps = PointSet::new((0..5).map(|i| pt(i, i as i64, (i * i) as i64)).collect())
            .unwrap();
        let convex: Vec<PointId> = ps.ids().collect();
        let ls = build_line_set(&ps, LineSetKind::NearConvex { convex }).unwrap();
        assert_eq!(ls.len(), 5);
    }

    #[test]
    fn near_convex_rejects_non_convex_subset() {
        let ps = PointSet::new(vec![
            pt(1, 0, 0),
            pt(2, 0, 2),
            pt(3, 2, 2),
            pt(4, 2, 0),
            pt(5, 1, 1),
        ])
        .unwrap();
        let convex: Vec<PointId> = ps.ids().collect();
        let err = build_line_set(&ps, LineSetKind::NearConvex { convex }).unwrap_err();
        assert_eq!(err, PotentialError::NotConvex);
    }

    #[test]
    fn phi_l_square_full() {
        let ps = square_points();
        let ls = build_line_set(&ps, LineSetKind::Full).unwrap();
        let diagonals =
            Configuration::new(Arc::clone(&ps), [seg(1, 3), seg(2, 4)], Version::MM);
        let report = phi_l(&diagonals, &ls);
        assert_eq!(report.phi_x, 1);
        assert_eq!(report.phi_l_total, 2);
        assert_eq!(report.per_line[&line(1, 3)], 1);
        assert_eq!(report.per_line[&line(2, 4)], 1);
        assert_eq!(report.per_line[&line(1, 2)], 0);

        let sides = Configuration::new(Arc::clone(&ps), [seg(1, 2), seg(3, 4)], Version::MM);
        assert_eq!(phi_l(&sides, &ls).phi_l_total, 0);

        let empty = Configuration::new(ps, [], Version::G);
        assert_eq!(phi_l(&empty, &ls).phi_l_total, 0);
    }

    #[test]
    fn line_delta_square_flip() {
        let ps = square_points();
        let f = square_flip();
        assert_eq!(line_delta(&ps, &f, line(1, 3)), 1);
        assert_eq!(line_delta(&ps, &f, line(2, 4)), 1);
        assert_eq!(line_delta(&ps, &f, line(1, 2)), 0);
        assert_eq!(line_delta(&ps, &f, line(3, 4)), 0);
    }

    #[test]
    fn line_delta_strict_separator_drops_two() {
        // Square plus two points defining the vertical line x = 1, which
        // strictly separates the added sides x = 0 and x = 2.
        let ps = PointSet::new(vec![
            pt(1, 0, 0),
            pt(2, 0, 2),
            pt(3, 2, 2),
            pt(4, 2, 0),
            pt(5, 1, 5),
            pt(6, 1, 7),
        ])
        .unwrap();
        let f = square_flip();
        assert_eq!(line_delta(&ps, &f, line(5, 6)), 2);
        assert_eq!(classify_line(&ps, &f, line(5, 6)), LineClass::Dropping);
    }

    #[test]
    fn classify_critical_line() {
        // q sits inside the triangle formed by p1, the crossing point of
        // the diagonals, and p4; the line through q and p1 then touches
        // exactly one flipped point and separates the added sides.
        let mut pts = vec![pt(1, 0, 0), pt(2, 0, 2), pt(3, 2, 2), pt(4, 2, 0)];
        pts.push(Point::new(PointId(5), coord(1), ratio(1, 2)));
        let ps = PointSet::new(pts).unwrap();
        // Added pair p1p4 (bottom) and p2p3 (top).
        let f = Flip::new((seg(1, 3), seg(2, 4)), (seg(1, 4), seg(2, 3)));
        let l = line(1, 5);
        assert_eq!(classify_line(&ps, &f, l), LineClass::Critical);
        assert_eq!(line_delta(&ps, &f, l), 1);
    }

    #[test]
    fn classify_stable_when_all_on_one_side() {
        let ps = PointSet::new(vec![
            pt(1, 0, 0),
            pt(2, 0, 2),
            pt(3, 2, 2),
            pt(4, 2, 0),
            pt(5, 5, 0),
            pt(6, 5, 3),
        ])
        .unwrap();
        let f = square_flip();
        assert_eq!(classify_line(&ps, &f, line(5, 6)), LineClass::Stable);
        assert_eq!(line_delta(&ps, &f, line(5, 6)), 0);
    }

    #[test]
    fn supporting_line_of_removed_segment_is_stable_but_drops() {
        // Two flipped points on the line: outside the taxonomy, yet the
        // delta is 1. The taxonomy is sufficiency-only.
        let ps = square_points();
        let f = square_flip();
        assert_eq!(classify_line(&ps, &f, line(1, 3)), LineClass::Stable);
        assert_eq!(line_delta(&ps, &f, line(1, 3)), 1);
    }

    #[test]
    fn flip_drop_square_full() {
        let ps = square_points();
        let ls = build_line_set(&ps, LineSetKind::Full).unwrap();
        let f = square_flip();
        assert_eq!(flip_drop(&ps, &f, &ls), 2);
        let empty = LineSet::from_lines(vec![], LineSetKind::Full);
        assert_eq!(flip_drop(&ps, &f, &empty), 0);
    }

    #[test]
    fn flip_drop_matches_measured_difference() {
        let ps = square_points();
        let ls = build_line_set(&ps, LineSetKind::Full).unwrap();
        let c = Configuration::new(Arc::clone(&ps), [seg(1, 3), seg(2, 4)], Version::MM);
        let f = square_flip();
        let before = phi_l(&c, &ls).phi_l_total;
        let after = phi_l(&c.apply_flip(&f).unwrap(), &ls).phi_l_total;
        assert_eq!(before - after, flip_drop(&ps, &f, &ls) as u64);
    }

    #[test]
    fn angular_rank_orders_by_sweep() {
        // Apex 0 at origin, ray toward 1 on the +x axis; candidates above
        // at increasing angles.
        let ps = PointSet::new(vec![
            pt(0, 0, 0),
            pt(1, 10, 1),
            pt(2, 9, 3),
            pt(3, 5, 4),
            pt(4, 1, 5),
            pt(5, 3, -4),
        ])
        .unwrap();
        let (p1, p4) = (PointId(0), PointId(1));
        assert_eq!(angular_rank(&ps, p1, p4, PointId(2)), 1);
        assert_eq!(angular_rank(&ps, p1, p4, PointId(3)), 2);
        assert_eq!(angular_rank(&ps, p1, p4, PointId(4)), 3);
        // Other side: first on its own sweep.
        assert_eq!(angular_rank(&ps, p1, p4, PointId(5)), 1);
    }

    #[test]
    fn flip_labelings_cover_both_added_segments() {
        let f = square_flip();
        let labelings = flip_labelings(&f);
        for (p1, p4, p3) in labelings {
            // p1p4 is an added segment, p1p3 a removed one.
            let a = Segment::new(p1, p4);
            let r = Segment::new(p1, p3);
            assert!(f.added().0 == a || f.added().1 == a);
            assert!(f.removed().0 == r || f.removed().1 == r);
        }
    }
}
