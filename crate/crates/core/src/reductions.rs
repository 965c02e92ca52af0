//! Constructive reductions between configuration versions.
//!
//! Three reductions turn flip sequences of one version into flip
//! sequences of another, at a fixed length ratio:
//!
//! * `GtoMM`: a multigraph becomes a perfect matching by splitting every
//!   point of degree d > 1 into d clones, one per incident edge copy.
//!   Each copy is the source segment trimmed slightly at split endpoints
//!   and, for multiplicities, translated off the source line. One source
//!   flip maps to one target flip.
//! * `MMtoRB`: every matching point becomes a red and a blue clone, every
//!   segment two parallel red-blue translates. Each source crossing turns
//!   into exactly four target crossings, and one source flip into two
//!   disjoint target flips.
//! * `RBtoTSP`: every red point r gains a twin r' adjacent to the same
//!   blue partner, and connector edges close one Hamiltonian tour through
//!   all triples. One source flip maps to two tour flips; connectors are
//!   never flipped (their crossings are tracked, not forbidden).
//!
//! All clone placement is exact rational arithmetic at a scale epsilon
//! derived from the source's minimum clearance. Correctness of a chosen
//! epsilon is validated a posteriori (general position, version validity,
//! crossing correspondence, and sequence replay); on failure epsilon and
//! the offset tilt are halved and the construction rebuilt, up to 64
//! rounds. Exactness makes every check decisive, and all the limit
//! predicates are strict, so a small enough epsilon always exists.

use std::collections::BTreeMap;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use thiserror::Error;

use crate::config::{Configuration, Flip, Version, Violation};
use crate::coord::{coord, Coord};
use crate::geometry::{segments_cross, Color, Point, PointId, PointSet, Segment};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionKind {
    GtoMM,
    MMtoRB,
    RBtoTSP,
}

impl std::fmt::Display for ReductionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ReductionKind::GtoMM => "g-to-mm",
            ReductionKind::MMtoRB => "mm-to-rb",
            ReductionKind::RBtoTSP => "rb-to-tsp",
        };
        f.write_str(s)
    }
}

/// A validated reduction from a source configuration to a target one.
///
/// `point_map` sends each source point to its clone ids (empty for
/// dropped isolated points; for MMtoRB the order is red then blue; for
/// RBtoTSP a red point maps to `[r, r']`). `copy_sets` sends each source
/// edge to the target segments simulating its copies. `connectors` lists
/// the RBtoTSP tour-closing edges, which no transformed flip touches.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub kind: ReductionKind,
    pub source: Configuration,
    pub target: Configuration,
    pub point_map: BTreeMap<PointId, Vec<PointId>>,
    pub epsilon: Coord,
    pub connectors: Vec<Segment>,
    copy_sets: BTreeMap<Segment, Vec<Segment>>,
    round: u32,
}

impl Reduction {
    /// Target segments standing in for the given source edge's copies.
    pub fn copies_of(&self, source_edge: Segment) -> &[Segment] {
        self.copy_sets
            .get(&source_edge)
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    /// Crossings in the target that involve a connector edge. Connector
    /// crossings are legitimate (the tour must close somehow) but worth
    /// watching; clone segments alone reproduce the source crossings.
    pub fn connector_crossings(&self) -> usize {
        self.target
            .crossings()
            .iter()
            .filter(|(a, b)| self.connectors.contains(a) || self.connectors.contains(b))
            .count()
    }
}

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("source configuration invalid: {0}")]
    InvalidSource(Violation),
    #[error("reduction expects a {expected} source, got {got}")]
    WrongVersion { expected: Version, got: Version },
    #[error("flip sequence invalid on the source at step {step}: {detail}")]
    SourceSequence { step: usize, detail: String },
    #[error(
        "epsilon refinement exhausted after {attempts} rounds; first failure: {detail}"
    )]
    RefinementExhausted { attempts: u32, detail: String },
}

const MAX_ROUNDS: u32 = 64;

fn linf(a: &Coord, b: &Coord) -> Coord {
    let (a, b) = (a.abs(), b.abs());
    if a >= b {
        a
    } else {
        b
    }
}

/// Exact L-infinity distance from `p` to the closed segment `ab`. The
/// distance function max(|x(t)|, |y(t)|) over t in [0,1] is convex
/// piecewise linear, so its minimum sits at an endpoint or a kink; the
/// kinks are where either coordinate vanishes or the two coincide in
/// absolute value.
fn linf_point_segment(p: &Point, a: &Point, b: &Point) -> Coord {
    let fx = &b.x - &a.x;
    let fy = &b.y - &a.y;
    let cx = &a.x - &p.x;
    let cy = &a.y - &p.y;
    let mut candidates: Vec<Coord> = vec![coord(0), coord(1)];
    let mut solve = |num: Coord, den: Coord| {
        if !den.is_zero() {
            candidates.push(num / den);
        }
    };
    solve(&cy - &cx, &fx - &fy); // x(t) = y(t)
    solve(-(&cx + &cy), &fx + &fy); // x(t) = -y(t)
    solve(-&cx, fx.clone()); // x(t) = 0
    solve(-&cy, fy.clone()); // y(t) = 0
    let zero = coord(0);
    let one = coord(1);
    candidates
        .into_iter()
        .map(|t| t.max(zero.clone()).min(one.clone()))
        .map(|t| linf(&(&cx + &t * &fx), &(&cy + &t * &fy)))
        .min()
        .expect("candidate list is never empty")
}

/// A conservative clone displacement scale: 1/1024 of the smallest
/// L-infinity clearance between two points or between a point and a
/// non-incident edge. Scales linearly with the coordinates.
pub fn safe_epsilon(ps: &PointSet, edges: &[Segment]) -> Coord {
    let points: Vec<&Point> = ps.iter().collect();
    let mut min: Option<Coord> = None;
    let mut consider = |d: Coord| {
        if min.as_ref().map_or(true, |m| &d < m) {
            min = Some(d);
        }
    };
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d = linf(
                &(&points[i].x - &points[j].x),
                &(&points[i].y - &points[j].y),
            );
            consider(d);
        }
    }
    for &e in edges {
        let a = ps.point(e.a());
        let b = ps.point(e.b());
        for p in &points {
            if e.has_endpoint(p.id) {
                continue;
            }
            consider(linf_point_segment(p, a, b));
        }
    }
    match min {
        Some(m) => m / coord(1024),
        None => coord(1),
    }
}

/// Offset scale for build round r: epsilon halves and the perpendicular
/// tilt halves with it, so retries shrink both the absolute displacement
/// and its ratio to the trim length.
fn round_scales(base_epsilon: &Coord, round: u32) -> (Coord, Coord) {
    let half_pow = |e: u32| -> Coord {
        BigRational::new(BigInt::one(), BigInt::one() << e as usize)
    };
    let eps = base_epsilon * half_pow(round);
    let tilt = half_pow(10 + round);
    (eps, tilt)
}

/// Direction of `s` as an exact vector, from the canonical a-endpoint.
fn direction(ps: &PointSet, s: Segment) -> (Coord, Coord) {
    let a = ps.point(s.a());
    let b = ps.point(s.b());
    (&b.x - &a.x, &b.y - &a.y)
}

/// Scales a nonzero vector to L-infinity length `len`.
fn with_linf_length(v: (Coord, Coord), len: &Coord) -> (Coord, Coord) {
    let n = linf(&v.0, &v.1);
    assert!(!n.is_zero(), "cannot normalize a zero vector");
    (v.0 * len / &n, v.1 * len / &n)
}

fn validate_source(c: &Configuration, expected: Version) -> Result<(), ReductionError> {
    if c.version() != expected {
        return Err(ReductionError::WrongVersion {
            expected,
            got: c.version(),
        });
    }
    match c.validate().into_iter().next() {
        Some(v) => Err(ReductionError::InvalidSource(v)),
        None => Ok(()),
    }
}

/// The heart of reduction validity: copies of the same source edge never
/// cross, and copies of distinct source edges cross exactly when their
/// sources do. Checked against any copy-set snapshot (initial or final).
fn crossing_correspondence(
    sps: &PointSet,
    tps: &PointSet,
    copy_sets: &BTreeMap<Segment, Vec<Segment>>,
) -> Result<(), String> {
    let keys: Vec<Segment> = copy_sets.keys().copied().collect();
    for (i, &e) in keys.iter().enumerate() {
        let copies_e = &copy_sets[&e];
        for (k1, &c1) in copies_e.iter().enumerate() {
            for &c2 in &copies_e[(k1 + 1)..] {
                if segments_cross(tps, c1, c2) {
                    return Err(format!("copies of {e} cross each other"));
                }
            }
        }
        for &g in &keys[(i + 1)..] {
            let expected = segments_cross(sps, e, g);
            for &c1 in copies_e {
                for &c2 in &copy_sets[&g] {
                    if segments_cross(tps, c1, c2) != expected {
                        return Err(format!(
                            "copy crossing of ({e}, {g}) disagrees with the source"
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Checks everything that can be checked without a flip sequence: target
/// validity and general position, pairwise-distinct clone positions, and
/// the crossing correspondence between edge copies (connectors exempt).
fn static_check(red: &Reduction) -> Result<(), String> {
    if let Some(v) = red.target.validate().into_iter().next() {
        return Err(format!("target invalid: {v}"));
    }
    let tps = red.target.points();
    let ids: Vec<PointId> = tps.ids().collect();
    for i in 0..ids.len() {
        for j in (i + 1)..ids.len() {
            if tps.same_position(ids[i], ids[j]) {
                return Err(format!("clones {} and {} coincide", ids[i], ids[j]));
            }
        }
    }
    crossing_correspondence(red.source.points(), tps, &red.copy_sets)
}

fn build_with_retries(
    source: &Configuration,
    kind: ReductionKind,
    start_round: u32,
) -> Result<Reduction, ReductionError> {
    let mut first_failure: Option<String> = None;
    for round in start_round..MAX_ROUNDS {
        let red = build_round(source, kind, round);
        match static_check(&red) {
            Ok(()) => return Ok(red),
            Err(e) => first_failure.get_or_insert(e),
        };
    }
    Err(ReductionError::RefinementExhausted {
        attempts: MAX_ROUNDS - start_round,
        detail: first_failure.unwrap_or_else(|| "no round attempted".to_string()),
    })
}

fn build_round(source: &Configuration, kind: ReductionKind, round: u32) -> Reduction {
    match kind {
        ReductionKind::GtoMM => build_g_to_mm(source, round),
        ReductionKind::MMtoRB => build_mm_to_rb(source, round),
        ReductionKind::RBtoTSP => build_rb_to_tsp(source, round),
    }
}

/// Each point of degree d > 1 splits into d clones, one per incident edge
/// copy, pushed slightly along that edge; copies of a multi-edge are
/// additionally translated off the source line so they stay parallel and
/// never meet. Degree-1 points and their coordinates survive unchanged;
/// isolated points are dropped (a perfect matching has no room for them).
fn build_g_to_mm(source: &Configuration, round: u32) -> Reduction {
    let sps = source.points();
    let base = safe_epsilon(sps, &source.distinct_edges().collect::<Vec<_>>());
    let (eps, tilt) = round_scales(&base, round);
    let trim_len = &eps / coord(2);

    let mut next_id = sps.ids().map(|p| p.0).max().map_or(0, |m| m + 1);
    let mut point_map: BTreeMap<PointId, Vec<PointId>> = BTreeMap::new();
    let mut target_points: Vec<Point> = Vec::new();
    // Slot tables: for each point, its clone id per incident (edge, copy).
    let mut slot: BTreeMap<(PointId, Segment, u32), PointId> = BTreeMap::new();

    for p in sps.iter() {
        let deg = source.degree(p.id);
        if deg == 0 {
            point_map.insert(p.id, Vec::new());
            continue;
        }
        if deg == 1 {
            let (&e, _) = source
                .edges()
                .iter()
                .find(|(s, _)| s.has_endpoint(p.id))
                .expect("degree-1 point has an incident edge");
            point_map.insert(p.id, vec![p.id]);
            target_points.push(Point::new(p.id, p.x.clone(), p.y.clone()));
            slot.insert((p.id, e, 0), p.id);
            continue;
        }
        let mut clones = Vec::new();
        // Trim lengths are L-inf; the L-inf unit sphere is a square, so
        // clones of equal radius along directions sharing a dominant axis
        // would sit on one flat side, collinear at every epsilon. A
        // distinct radius per clone slot keeps them off any common line,
        // and the ratios change with the round so retries escape residual
        // coincidences.
        let mut slot_ix: i64 = 0;
        for (&e, &m) in source.edges() {
            if !e.has_endpoint(p.id) {
                continue;
            }
            let (dx, dy) = direction(sps, e);
            // Trim direction points into the segment from p's end.
            let into = if e.a() == p.id {
                (dx.clone(), dy.clone())
            } else {
                (-dx.clone(), -dy.clone())
            };
            let (tx, ty) = with_linf_length(into, &trim_len);
            let (px, py) = with_linf_length((-dy.clone(), dx.clone()), &trim_len);
            let (ax, ay) = with_linf_length((dx, dy), &trim_len);
            for k in 0..m {
                // Multiplicity copies sit on a parabola across the edge:
                // both endpoints shift by off * perp + off^2 * axis, so the
                // copies keep disjoint parallel supporting lines, and no
                // three clones are collinear at any epsilon (a purely
                // linear offset would align the copies of a triple edge
                // forever).
                let factor = coord(1) + &tilt * coord(slot_ix + 1);
                slot_ix += 1;
                let off = &tilt * coord(k as i64);
                let curve = &off * &off;
                let id = PointId(next_id);
                next_id += 1;
                target_points.push(Point::new(
                    id,
                    &p.x + &(&tx * &factor) + &off * &px + &curve * &ax,
                    &p.y + &(&ty * &factor) + &off * &py + &curve * &ay,
                ));
                clones.push(id);
                slot.insert((p.id, e, k), id);
            }
        }
        point_map.insert(p.id, clones);
    }

    let mut copy_sets: BTreeMap<Segment, Vec<Segment>> = BTreeMap::new();
    let mut target_edges: Vec<Segment> = Vec::new();
    for (&e, &m) in source.edges() {
        let mut copies = Vec::new();
        for k in 0..m {
            let ca = slot[&(e.a(), e, if source.degree(e.a()) == 1 { 0 } else { k })];
            let cb = slot[&(e.b(), e, if source.degree(e.b()) == 1 { 0 } else { k })];
            let s = Segment::new(ca, cb);
            copies.push(s);
            target_edges.push(s);
        }
        copy_sets.insert(e, copies);
    }

    let tps = PointSet::new(target_points)
        .expect("clone ids are fresh")
        .into_shared();
    let target = Configuration::new(tps, target_edges, Version::MM);
    Reduction {
        kind: ReductionKind::GtoMM,
        source: source.clone(),
        target,
        point_map,
        epsilon: eps,
        connectors: Vec::new(),
        copy_sets,
        round,
    }
}

/// Per-edge displacement vector: the perpendicular, tilted slightly along
/// the edge so that parallel source edges get non-parallel clone lines,
/// scaled to L-infinity length `eps`.
fn tilted_offset(
    ps: &PointSet,
    e: Segment,
    index: i64,
    eps: &Coord,
    tilt: &Coord,
) -> (Coord, Coord) {
    let (dx, dy) = direction(ps, e);
    let scale = tilt * coord(index + 1);
    let w = (-&dy + &scale * &dx, dx.clone() + scale * dy);
    with_linf_length(w, eps)
}

/// Every point p becomes a red clone and a blue clone at p +/- v, where v
/// is the tilted perpendicular of p's matching edge. A segment ab turns
/// into the translates (a_red, b_blue) = ab + v and (a_blue, b_red) =
/// ab - v, so the two copies never meet and each source crossing yields
/// exactly four copy crossings.
fn build_mm_to_rb(source: &Configuration, round: u32) -> Reduction {
    let sps = source.points();
    let base = safe_epsilon(sps, &source.distinct_edges().collect::<Vec<_>>());
    let (eps, tilt) = round_scales(&base, round);

    let mut point_map: BTreeMap<PointId, Vec<PointId>> = BTreeMap::new();
    let mut target_points: Vec<Point> = Vec::new();
    let mut next_id = 0u32;
    // Perfect matching: each point has exactly one incident edge.
    for (index, (&e, _)) in source.edges().iter().enumerate() {
        let v = tilted_offset(sps, e, index as i64, &eps, &tilt);
        let a = sps.point(e.a());
        let b = sps.point(e.b());
        for (p, plus_is_red) in [(a, true), (b, false)] {
            let plus = Point::with_color(
                PointId(next_id),
                &p.x + &v.0,
                &p.y + &v.1,
                if plus_is_red { Color::Red } else { Color::Blue },
            );
            let minus = Point::with_color(
                PointId(next_id + 1),
                &p.x - &v.0,
                &p.y - &v.1,
                if plus_is_red { Color::Blue } else { Color::Red },
            );
            // point_map convention: red clone first, then blue.
            let (red, blue) = if plus_is_red {
                (plus.id, minus.id)
            } else {
                (minus.id, plus.id)
            };
            point_map.insert(p.id, vec![red, blue]);
            target_points.push(plus);
            target_points.push(minus);
            next_id += 2;
        }
    }

    let clone_ids = |p: PointId| -> (PointId, PointId) {
        let v = &point_map[&p];
        (v[0], v[1])
    };
    let mut copy_sets: BTreeMap<Segment, Vec<Segment>> = BTreeMap::new();
    let mut target_edges = Vec::new();
    for &e in source.edges().keys() {
        let (ar, ab) = clone_ids(e.a());
        let (br, bb) = clone_ids(e.b());
        let copies = vec![Segment::new(ar, bb), Segment::new(ab, br)];
        target_edges.extend(copies.iter().copied());
        copy_sets.insert(e, copies);
    }

    let tps = PointSet::new(target_points)
        .expect("clone ids are fresh")
        .into_shared();
    let target = Configuration::new(tps, target_edges, Version::RB);
    Reduction {
        kind: ReductionKind::MMtoRB,
        source: source.clone(),
        target,
        point_map,
        epsilon: eps,
        connectors: Vec::new(),
        copy_sets,
        round,
    }
}

/// Red points gain a twin r' = r + v; the tour visits r, b, r' for each
/// source segment rb and closes with connectors from each r' to the next
/// segment's r. Both (r, b) and (b, r') simulate the source segment.
fn build_rb_to_tsp(source: &Configuration, round: u32) -> Reduction {
    let sps = source.points();
    let base = safe_epsilon(sps, &source.distinct_edges().collect::<Vec<_>>());
    let (eps, tilt) = round_scales(&base, round);

    let is_red = |p: PointId| sps.point(p).color == Some(Color::Red);
    // Canonical edge order fixes the tour order.
    let edges: Vec<Segment> = source.edges().keys().copied().collect();
    let mut next_id = sps.ids().map(|p| p.0).max().map_or(0, |m| m + 1);
    let mut point_map: BTreeMap<PointId, Vec<PointId>> = BTreeMap::new();
    let mut target_points: Vec<Point> = Vec::new();
    let mut reds = Vec::with_capacity(edges.len());
    let mut blues = Vec::with_capacity(edges.len());
    let mut twins = Vec::with_capacity(edges.len());
    for (index, &e) in edges.iter().enumerate() {
        let (r, b) = if is_red(e.a()) {
            (e.a(), e.b())
        } else {
            (e.b(), e.a())
        };
        let v = tilted_offset(sps, e, index as i64, &eps, &tilt);
        let rp = sps.point(r);
        let bp = sps.point(b);
        let twin = PointId(next_id);
        next_id += 1;
        // Tour points drop the red/blue coloring.
        target_points.push(Point::new(r, rp.x.clone(), rp.y.clone()));
        target_points.push(Point::new(b, bp.x.clone(), bp.y.clone()));
        target_points.push(Point::new(twin, &rp.x + &v.0, &rp.y + &v.1));
        point_map.insert(r, vec![r, twin]);
        point_map.insert(b, vec![b]);
        reds.push(r);
        blues.push(b);
        twins.push(twin);
    }

    let n = edges.len();
    let mut copy_sets: BTreeMap<Segment, Vec<Segment>> = BTreeMap::new();
    let mut target_edges = Vec::new();
    let mut connectors = Vec::new();
    for i in 0..n {
        let copies = vec![
            Segment::new(reds[i], blues[i]),
            Segment::new(blues[i], twins[i]),
        ];
        target_edges.extend(copies.iter().copied());
        copy_sets.insert(edges[i], copies);
        let conn = Segment::new(twins[i], reds[(i + 1) % n]);
        connectors.push(conn);
        target_edges.push(conn);
    }

    let tps = PointSet::new(target_points)
        .expect("clone ids are fresh")
        .into_shared();
    let target = Configuration::new(tps, target_edges, Version::TSP);
    Reduction {
        kind: ReductionKind::RBtoTSP,
        source: source.clone(),
        target,
        point_map,
        epsilon: eps,
        connectors,
        copy_sets,
        round,
    }
}

pub fn reduce_g_to_mm(c: &Configuration) -> Result<Reduction, ReductionError> {
    validate_source(c, Version::G)?;
    build_with_retries(c, ReductionKind::GtoMM, 0)
}

pub fn reduce_mm_to_rb(c: &Configuration) -> Result<Reduction, ReductionError> {
    validate_source(c, Version::MM)?;
    build_with_retries(c, ReductionKind::MMtoRB, 0)
}

pub fn reduce_rb_to_tsp(c: &Configuration) -> Result<Reduction, ReductionError> {
    validate_source(c, Version::RB)?;
    build_with_retries(c, ReductionKind::RBtoTSP, 0)
}

/// A transform failure that a smaller epsilon might fix, or a source-side
/// failure that never will.
enum TransformFailure {
    Source { step: usize, detail: String },
    Target { detail: String },
}

/// Expands a source flip sequence into the target's. GtoMM maps each flip
/// to one flip; MMtoRB and RBtoTSP map each flip to two flips on disjoint
/// segment pairs. The sequence is replayed on both sides; any target-side
/// failure rebuilds the reduction with a halved epsilon and retries from
/// scratch. Returns the reduction actually used (possibly refined) with
/// the expanded sequence.
pub fn transform_sequence(
    red: &Reduction,
    seq: &[Flip],
) -> Result<(Reduction, Vec<Flip>), ReductionError> {
    let mut current = red.clone();
    let mut first_failure: Option<String> = None;
    loop {
        match try_transform(&current, seq) {
            Ok(flips) => return Ok((current, flips)),
            Err(TransformFailure::Source { step, detail }) => {
                return Err(ReductionError::SourceSequence { step, detail });
            }
            Err(TransformFailure::Target { detail }) => {
                first_failure.get_or_insert(detail);
            }
        }
        if current.round + 1 >= MAX_ROUNDS {
            return Err(ReductionError::RefinementExhausted {
                attempts: MAX_ROUNDS - red.round,
                detail: first_failure.unwrap_or_else(|| "no attempt made".to_string()),
            });
        }
        current = build_with_retries(&red.source, red.kind, current.round + 1)?;
    }
}

fn try_transform(red: &Reduction, seq: &[Flip]) -> Result<Vec<Flip>, TransformFailure> {
    let mut src = red.source.clone();
    let mut tgt = red.target.clone();
    // GtoMM tracks which target edge currently simulates which source
    // edge; the static copy pattern of the other reductions needs no
    // bookkeeping.
    let mut sim: BTreeMap<Segment, Segment> = BTreeMap::new();
    let mut owner: BTreeMap<PointId, PointId> = BTreeMap::new();
    if red.kind == ReductionKind::GtoMM {
        for (&e, copies) in &red.copy_sets {
            for &c in copies {
                sim.insert(c, e);
            }
        }
        for (&p, clones) in &red.point_map {
            for &c in clones {
                owner.insert(c, p);
            }
        }
    }
    let mut out = Vec::new();
    for (step, f) in seq.iter().enumerate() {
        // Advancing the source first validates the flip, so expansions
        // may assume it is well formed.
        src = src.apply_flip(f).map_err(|e| TransformFailure::Source {
            step,
            detail: e.to_string(),
        })?;
        let expanded = match red.kind {
            ReductionKind::GtoMM => expand_g_to_mm(f, &mut sim, &owner, step)?,
            ReductionKind::MMtoRB => expand_two_clone(f, &red.point_map),
            ReductionKind::RBtoTSP => {
                expand_rb_to_tsp(f, &red.point_map, red.source.points(), step)?
            }
        };
        if expanded.len() == 2 {
            let a = expanded[0].segments();
            let disjoint = expanded[1].segments().iter().all(|s| !a.contains(s));
            if !disjoint {
                return Err(TransformFailure::Target {
                    detail: format!("expanded flips share a segment at step {step}"),
                });
            }
        }
        for tf in &expanded {
            tgt = tgt.apply_flip(tf).map_err(|e| TransformFailure::Target {
                detail: format!("target flip failed at step {step}: {e}"),
            })?;
        }
        out.extend(expanded);
    }
    check_final_state(red, &src, &tgt, &sim)?;
    Ok(out)
}

/// The transformed final state must be exactly the reduction of the
/// source's final state: same clone pairings, connectors untouched.
/// Crossing counts are deliberately not compared here: clone offsets are
/// frozen from the initial pairing, so the two copies of a rematched edge
/// may cross each other at any epsilon. The contract is configuration
/// equality, and it is independent of epsilon.
fn check_final_state(
    red: &Reduction,
    src: &Configuration,
    tgt: &Configuration,
    sim: &BTreeMap<Segment, Segment>,
) -> Result<(), TransformFailure> {
    let mut expected: BTreeMap<Segment, u32> = BTreeMap::new();
    match red.kind {
        ReductionKind::GtoMM => {
            let mut source_cover: BTreeMap<Segment, u32> = BTreeMap::new();
            for (&t, &s) in sim {
                *expected.entry(t).or_insert(0) += 1;
                *source_cover.entry(s).or_insert(0) += 1;
            }
            if &source_cover != src.edges() {
                return Err(TransformFailure::Target {
                    detail: "simulation map no longer covers the source edges".into(),
                });
            }
        }
        ReductionKind::MMtoRB | ReductionKind::RBtoTSP => {
            for &e in src.edges().keys() {
                for t in clone_pair(red, e) {
                    *expected.entry(t).or_insert(0) += 1;
                }
            }
            for &c in &red.connectors {
                *expected.entry(c).or_insert(0) += 1;
            }
        }
    }
    if &expected != tgt.edges() {
        return Err(TransformFailure::Target {
            detail: "final target state is not the reduced final source state".into(),
        });
    }
    Ok(())
}

/// The two target segments simulating a source edge under the static
/// clone pattern (MMtoRB or RBtoTSP), valid for any current source edge,
/// not just initial ones.
fn clone_pair(red: &Reduction, e: Segment) -> [Segment; 2] {
    match red.kind {
        ReductionKind::MMtoRB => {
            let a = &red.point_map[&e.a()];
            let b = &red.point_map[&e.b()];
            // (a_red, b_blue) and (a_blue, b_red).
            [Segment::new(a[0], b[1]), Segment::new(a[1], b[0])]
        }
        ReductionKind::RBtoTSP => {
            let (r, b) = if red.point_map[&e.a()].len() == 2 {
                (e.a(), e.b())
            } else {
                (e.b(), e.a())
            };
            let rm = &red.point_map[&r];
            [Segment::new(rm[0], b), Segment::new(b, rm[1])]
        }
        ReductionKind::GtoMM => unreachable!("GtoMM uses the dynamic simulation map"),
    }
}

/// One source flip, one target flip: pick the first simulating copy of
/// each removed edge, reconnect their freed clones per the source's added
/// pairing, and update the simulation map.
fn expand_g_to_mm(
    f: &Flip,
    sim: &mut BTreeMap<Segment, Segment>,
    owner: &BTreeMap<PointId, PointId>,
    step: usize,
) -> Result<Vec<Flip>, TransformFailure> {
    let (s1, s2) = f.removed();
    let pick = |sim: &BTreeMap<Segment, Segment>, s: Segment| -> Option<Segment> {
        sim.iter().find(|&(_, &v)| v == s).map(|(&k, _)| k)
    };
    let t1 = pick(sim, s1).ok_or_else(|| TransformFailure::Source {
        step,
        detail: format!("no copy simulates removed edge {s1}"),
    })?;
    sim.remove(&t1);
    let t2 = pick(sim, s2).ok_or_else(|| TransformFailure::Source {
        step,
        detail: format!("no copy simulates removed edge {s2}"),
    })?;
    sim.remove(&t2);
    // Clone of a given source point on a given target copy.
    let clone_on = |t: Segment, p: PointId| -> Option<PointId> {
        t.endpoints().into_iter().find(|&c| owner[&c] == p)
    };
    let mut added_target = Vec::with_capacity(2);
    for a in [f.added().0, f.added().1] {
        // One endpoint of each added edge comes from each removed edge.
        let (u, v) = (a.a(), a.b());
        let (cu, cv) = match (clone_on(t1, u), clone_on(t2, v)) {
            (Some(cu), Some(cv)) => (cu, cv),
            _ => match (clone_on(t2, u), clone_on(t1, v)) {
                (Some(cu), Some(cv)) => (cu, cv),
                _ => {
                    return Err(TransformFailure::Source {
                        step,
                        detail: format!("added edge {a} does not span the removed pair"),
                    })
                }
            },
        };
        let t = Segment::new(cu, cv);
        sim.insert(t, a);
        added_target.push(t);
    }
    Ok(vec![Flip::new((t1, t2), (added_target[0], added_target[1]))])
}

/// Shared 2-flip expansion for the clone-pair reductions. With removed
/// source edges (p, q) and (s, t) and added pairing (p, x), (q, y), the
/// first flip exchanges the "plus" copy of pq with the copy of st holding
/// x's blue clone, and the second flip the remaining two copies.
fn expand_two_clone(f: &Flip, point_map: &BTreeMap<PointId, Vec<PointId>>) -> Vec<Flip> {
    let (s1, _s2) = f.removed();
    let (p, q) = (s1.a(), s1.b());
    let mate = |u: PointId| -> PointId {
        let (a1, a2) = f.added();
        a1.opposite(u).or_else(|| a2.opposite(u)).expect("flip point on an added edge")
    };
    let (x, y) = (mate(p), mate(q));
    let red = |u: PointId| point_map[&u][0];
    let blue = |u: PointId| point_map[&u][1];
    let f1 = Flip::new(
        (Segment::new(red(p), blue(q)), Segment::new(blue(x), red(y))),
        (Segment::new(red(p), blue(x)), Segment::new(blue(q), red(y))),
    );
    let f2 = Flip::new(
        (Segment::new(blue(p), red(q)), Segment::new(red(x), blue(y))),
        (Segment::new(blue(p), red(x)), Segment::new(red(q), blue(y))),
    );
    vec![f1, f2]
}

/// RBtoTSP 2-flip expansion: with source removed edges (r_i, b_i),
/// (r_j, b_j) and forced added pairing (r_i, b_j), (r_j, b_i), flip first
/// <r_i b_i, r_j' b_j -> r_i b_j, r_j' b_i>, then
/// <r_i' b_i, r_j b_j -> r_i' b_j, r_j b_i>.
fn expand_rb_to_tsp(
    f: &Flip,
    point_map: &BTreeMap<PointId, Vec<PointId>>,
    sps: &PointSet,
    step: usize,
) -> Result<Vec<Flip>, TransformFailure> {
    let (s1, s2) = f.removed();
    let red_of = |s: Segment| -> Result<(PointId, PointId), TransformFailure> {
        let (a, b) = (s.a(), s.b());
        match (sps.point(a).color, sps.point(b).color) {
            (Some(Color::Red), Some(Color::Blue)) => Ok((a, b)),
            (Some(Color::Blue), Some(Color::Red)) => Ok((b, a)),
            _ => Err(TransformFailure::Source {
                step,
                detail: format!("removed edge {s} is not red-blue"),
            }),
        }
    };
    let (ri, bi) = red_of(s1)?;
    let (rj, bj) = red_of(s2)?;
    let twin = |r: PointId| point_map[&r][1];
    let f1 = Flip::new(
        (Segment::new(ri, bi), Segment::new(twin(rj), bj)),
        (Segment::new(ri, bj), Segment::new(twin(rj), bi)),
    );
    let f2 = Flip::new(
        (Segment::new(twin(ri), bi), Segment::new(rj, bj)),
        (Segment::new(twin(ri), bj), Segment::new(rj, bi)),
    );
    Ok(vec![f1, f2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coord::ratio;
    use crate::geometry::is_general_position;
    use std::sync::Arc;

    fn pt(id: u32, x: i64, y: i64) -> Point {
        Point::new(PointId(id), coord(x), coord(y))
    }

    fn seg(a: u32, b: u32) -> Segment {
        Segment::new(PointId(a), PointId(b))
    }

    fn square_points() -> Arc<PointSet> {
        PointSet::new(vec![pt(1, 0, 0), pt(2, 0, 2), pt(3, 2, 2), pt(4, 2, 0)])
            .unwrap()
            .into_shared()
    }

    #[test]
    fn safe_epsilon_square_diagonals() {
        let ps = square_points();
        let eps = safe_epsilon(&ps, &[seg(1, 3), seg(2, 4)]);
        assert_eq!(eps, ratio(1, 1024));
    }

    #[test]
    fn safe_epsilon_scales_with_coordinates() {
        let ps = square_points();
        let scaled = PointSet::new(vec![
            pt(1, 0, 0),
            pt(2, 0, 6),
            pt(3, 6, 6),
            pt(4, 6, 0),
        ])
        .unwrap();
        let e1 = safe_epsilon(&ps, &[seg(1, 3), seg(2, 4)]);
        let e3 = safe_epsilon(&scaled, &[seg(1, 3), seg(2, 4)]);
        assert_eq!(e3, e1 * coord(3));
    }

    #[test]
    fn linf_distance_examples() {
        let a = pt(0, 0, 0);
        let b = pt(1, 2, 2);
        let p = pt(2, 0, 2);
        assert_eq!(linf_point_segment(&p, &a, &b), coord(1));
        // Distance to an endpoint when the projection falls outside.
        let q = pt(3, -3, 0);
        assert_eq!(linf_point_segment(&q, &a, &b), coord(3));
    }

    #[test]
    fn g_to_mm_path_splits_shared_point() {
        // Two segments sharing a degree-2 point become a 2-segment
        // matching on 4 points with no crossings.
        let ps = PointSet::new(vec![pt(0, 0, 0), pt(1, 4, 1), pt(2, 8, 0)])
            .unwrap()
            .into_shared();
        let c = Configuration::new(ps, [seg(0, 1), seg(1, 2)], Version::G);
        let red = reduce_g_to_mm(&c).unwrap();
        assert_eq!(red.target.points().len(), 4);
        assert_eq!(red.target.edge_count(), 2);
        assert!(red.target.validate().is_empty());
        assert!(red.target.crossings().is_empty());
        assert_eq!(red.point_map[&PointId(1)].len(), 2);
    }

    #[test]
    fn g_to_mm_disjoint_crossing_is_identity() {
        let c = Configuration::new(square_points(), [seg(1, 3), seg(2, 4)], Version::G);
        let red = reduce_g_to_mm(&c).unwrap();
        assert_eq!(red.target.edges(), c.edges());
        for p in c.points().iter() {
            let t = red.target.points().point(p.id);
            assert_eq!((&t.x, &t.y), (&p.x, &p.y));
        }
    }

    #[test]
    fn g_to_mm_star_preserves_crossings() {
        let ps = PointSet::new(vec![
            pt(0, 0, 0),
            pt(1, 10, 1),
            pt(2, 1, 10),
            pt(3, -9, -7),
            pt(4, 5, -5),
            pt(5, 5, 9),
        ])
        .unwrap()
        .into_shared();
        assert!(is_general_position(&ps));
        let c = Configuration::new(
            Arc::clone(&ps),
            [seg(0, 1), seg(0, 2), seg(0, 3), seg(4, 5)],
            Version::G,
        );
        assert_eq!(c.crossings().len(), 1);
        let red = reduce_g_to_mm(&c).unwrap();
        assert_eq!(red.target.crossings().len(), 1);
        let src_pair = c.crossings()[0];
        let cross = red.target.crossings()[0];
        let copies0 = red.copies_of(src_pair.0);
        let copies1 = red.copies_of(src_pair.1);
        assert!(
            (copies0.contains(&cross.0) && copies1.contains(&cross.1))
                || (copies0.contains(&cross.1) && copies1.contains(&cross.0))
        );
    }

    #[test]
    fn g_to_mm_multiplicity_expands_copies() {
        let c = Configuration::new(
            square_points(),
            [seg(1, 3), seg(1, 3), seg(2, 4)],
            Version::G,
        );
        let red = reduce_g_to_mm(&c).unwrap();
        assert_eq!(red.copies_of(seg(1, 3)).len(), 2);
        assert_eq!(red.target.edge_count(), 3);
        // Each copy of the diagonal crosses the other diagonal's copy.
        assert_eq!(red.target.crossings().len(), 2);
    }

    #[test]
    fn mm_to_rb_doubles_and_quadruples() {
        let c = Configuration::new(square_points(), [seg(1, 3), seg(2, 4)], Version::MM);
        let red = reduce_mm_to_rb(&c).unwrap();
        assert_eq!(red.target.points().len(), 8);
        assert_eq!(red.target.edge_count(), 4);
        assert!(red.target.validate().is_empty());
        assert_eq!(red.target.crossings().len(), 4);
    }

    #[test]
    fn mm_to_rb_single_segment_no_crossings() {
        let ps = PointSet::new(vec![pt(0, 0, 0), pt(1, 5, 3)]).unwrap().into_shared();
        let c = Configuration::new(ps, [seg(0, 1)], Version::MM);
        let red = reduce_mm_to_rb(&c).unwrap();
        assert_eq!(red.target.edge_count(), 2);
        assert!(red.target.crossings().is_empty());
    }

    #[test]
    fn mm_to_rb_two_crossings_make_eight() {
        let ps = PointSet::new(
            (0..6)
                .map(|i| pt(i, i as i64, (i as i64) * (i as i64)))
                .collect(),
        )
        .unwrap()
        .into_shared();
        let c = Configuration::new(ps, [seg(0, 4), seg(1, 3), seg(2, 5)], Version::MM);
        assert_eq!(c.crossings().len(), 2);
        let red = reduce_mm_to_rb(&c).unwrap();
        assert_eq!(red.target.crossings().len(), 8);
    }

    #[test]
    fn rb_to_tsp_single_segment_triangle() {
        let ps = PointSet::new(vec![
            Point::with_color(PointId(0), coord(0), coord(0), Color::Red),
            Point::with_color(PointId(1), coord(5), coord(2), Color::Blue),
        ])
        .unwrap()
        .into_shared();
        let c = Configuration::new(ps, [seg(0, 1)], Version::RB);
        let red = reduce_rb_to_tsp(&c).unwrap();
        assert_eq!(red.target.points().len(), 3);
        assert_eq!(red.target.edge_count(), 3);
        assert!(red.target.validate().is_empty());
        assert_eq!(red.connectors.len(), 1);
    }

    #[test]
    fn rb_to_tsp_crossing_quadruples_among_clones() {
        let ps = PointSet::new(vec![
            Point::with_color(PointId(1), coord(0), coord(0), Color::Red),
            Point::with_color(PointId(2), coord(0), coord(2), Color::Red),
            Point::with_color(PointId(3), coord(2), coord(2), Color::Blue),
            Point::with_color(PointId(4), coord(2), coord(0), Color::Blue),
        ])
        .unwrap()
        .into_shared();
        let c = Configuration::new(ps, [seg(1, 3), seg(2, 4)], Version::RB);
        let red = reduce_rb_to_tsp(&c).unwrap();
        assert_eq!(red.target.points().len(), 6);
        assert_eq!(red.target.edge_count(), 6);
        assert!(red.target.validate().is_empty());
        let clone_crossings = red
            .target
            .crossings()
            .iter()
            .filter(|(a, b)| !red.connectors.contains(a) && !red.connectors.contains(b))
            .count();
        assert_eq!(clone_crossings, 4);
        assert_eq!(red.connectors.len(), 2);
    }

    #[test]
    fn transform_empty_sequence() {
        let c = Configuration::new(square_points(), [seg(1, 3), seg(2, 4)], Version::MM);
        let red = reduce_mm_to_rb(&c).unwrap();
        let (_, out) = transform_sequence(&red, &[]).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn transform_mm_flip_to_two_rb_flips() {
        let c = Configuration::new(square_points(), [seg(1, 3), seg(2, 4)], Version::MM);
        let f = Flip::new((seg(1, 3), seg(2, 4)), (seg(1, 2), seg(3, 4)));
        let red = reduce_mm_to_rb(&c).unwrap();
        let (red, out) = transform_sequence(&red, &[f]).unwrap();
        assert_eq!(out.len(), 2);
        // Replay lands on the duplicated final matching.
        let mut tgt = red.target.clone();
        for tf in &out {
            tgt = tgt.apply_flip(tf).unwrap();
        }
        assert!(tgt.crossings().is_empty());
        let mut expected: BTreeMap<Segment, u32> = BTreeMap::new();
        let final_src = c.apply_flip(&f).unwrap();
        for &e in final_src.edges().keys() {
            for t in clone_pair(&red, e) {
                *expected.entry(t).or_insert(0) += 1;
            }
        }
        assert_eq!(&expected, tgt.edges());
    }

    #[test]
    fn transform_rb_flip_to_two_tsp_flips() {
        let ps = PointSet::new(vec![
            Point::with_color(PointId(1), coord(0), coord(0), Color::Red),
            Point::with_color(PointId(2), coord(0), coord(2), Color::Red),
            Point::with_color(PointId(3), coord(2), coord(2), Color::Blue),
            Point::with_color(PointId(4), coord(2), coord(0), Color::Blue),
        ])
        .unwrap()
        .into_shared();
        let c = Configuration::new(ps, [seg(1, 3), seg(2, 4)], Version::RB);
        let flips = c.applicable_flips();
        assert_eq!(flips.len(), 1);
        let red = reduce_rb_to_tsp(&c).unwrap();
        let (red, out) = transform_sequence(&red, &[flips[0]]).unwrap();
        assert_eq!(out.len(), 2);
        let mut tgt = red.target.clone();
        for tf in &out {
            tgt = tgt.apply_flip(tf).unwrap();
            assert!(tgt.validate_structure().is_empty());
        }
        // Connectors survive untouched.
        for conn in &red.connectors {
            assert_eq!(tgt.multiplicity(*conn), 1);
        }
    }

    #[test]
    fn transform_g_flip_one_to_one() {
        let ps = PointSet::new(vec![
            pt(1, 0, 0),
            pt(2, 0, 2),
            pt(3, 2, 2),
            pt(4, 2, 0),
            pt(5, 9, 1),
        ])
        .unwrap()
        .into_shared();
        // Degree-2 point 1: edges to 3 and 5; plus the crossing diagonal.
        let c = Configuration::new(
            ps,
            [seg(1, 3), seg(2, 4), seg(1, 5)],
            Version::G,
        );
        let flips = c.applicable_flips();
        assert!(!flips.is_empty());
        let f = flips[0];
        let red = reduce_g_to_mm(&c).unwrap();
        let (red, out) = transform_sequence(&red, &[f]).unwrap();
        assert_eq!(out.len(), 1);
        let mut tgt = red.target.clone();
        for tf in &out {
            tgt = tgt.apply_flip(tf).unwrap();
        }
        assert!(tgt.validate_structure().is_empty());
    }
}
