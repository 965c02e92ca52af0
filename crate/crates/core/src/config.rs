//! Versioned segment configurations and flips.
//!
//! A [`Configuration`] is an edge multiset over a shared point set plus a
//! [`Version`] tag that fixes the structural property flips must preserve:
//!
//! * `MM`: a perfect matching (every point degree 1, no repeated edges);
//! * `RB`: a perfect matching where every edge joins a red and a blue point
//!   and the two color classes have equal size;
//! * `TSP`: a single Hamiltonian cycle through all points;
//! * `G`: an arbitrary multigraph (any multiset of segments).
//!
//! A [`Flip`] removes a crossing pair and inserts one of its two
//! replacement pairings on the same four points. Two flips are the same
//! exactly when they exchange the same set of four segments, so equality
//! and hashing go through [`FlipKey`], the sorted 4-segment union.

use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use thiserror::Error;

use crate::geometry::{
    is_general_position, normalize_pair, replacement_pairs, segments_cross, Color, PointId,
    PointSet, Segment,
};

/// Structural property preserved by flips.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Version {
    MM,
    RB,
    TSP,
    G,
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Version::MM => "mm",
            Version::RB => "rb",
            Version::TSP => "tsp",
            Version::G => "g",
        };
        f.write_str(s)
    }
}

/// A single validation failure; `validate` collects all of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    UnknownEndpoint { segment: Segment, point: PointId },
    NotGeneralPosition,
    DegreeNotOne { point: PointId, degree: u32 },
    DuplicateEdge { segment: Segment, multiplicity: u32 },
    MissingColor { point: PointId },
    MonochromaticEdge { segment: Segment },
    UnbalancedColors { red: usize, blue: usize },
    DegreeNotTwo { point: PointId, degree: u32 },
    NotASingleCycle,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownEndpoint { segment, point } => {
                write!(f, "edge {segment} references unknown point {point}")
            }
            Violation::NotGeneralPosition => write!(f, "points are not in general position"),
            Violation::DegreeNotOne { point, degree } => {
                write!(f, "point {point} has degree {degree}, expected 1")
            }
            Violation::DuplicateEdge {
                segment,
                multiplicity,
            } => write!(f, "edge {segment} has multiplicity {multiplicity} in a matching"),
            Violation::MissingColor { point } => write!(f, "point {point} has no color"),
            Violation::MonochromaticEdge { segment } => {
                write!(f, "monochromatic edge {segment}")
            }
            Violation::UnbalancedColors { red, blue } => {
                write!(f, "unbalanced colors: {red} red vs {blue} blue")
            }
            Violation::DegreeNotTwo { point, degree } => {
                write!(f, "point {point} has degree {degree}, expected 2")
            }
            Violation::NotASingleCycle => write!(f, "not a single cycle"),
        }
    }
}

/// Identity of a flip: the sorted set of the four segments it exchanges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlipKey([Segment; 4]);

impl FlipKey {
    pub fn segments(&self) -> [Segment; 4] {
        self.0
    }
}

impl fmt::Display for FlipKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};{};{};{}", self.0[0], self.0[1], self.0[2], self.0[3])
    }
}

/// A flip: `removed` is a crossing pair, `added` one of its two
/// non-crossing replacement pairings on the same four points. Pairs are
/// held in canonical order; equality and hashing use [`FlipKey`] set
/// semantics.
#[derive(Debug, Clone, Copy, Eq)]
pub struct Flip {
    removed: (Segment, Segment),
    added: (Segment, Segment),
}

impl Flip {
    pub fn new(removed: (Segment, Segment), added: (Segment, Segment)) -> Self {
        Flip {
            removed: normalize_pair(removed.0, removed.1),
            added: normalize_pair(added.0, added.1),
        }
    }

    pub fn removed(&self) -> (Segment, Segment) {
        self.removed
    }

    pub fn added(&self) -> (Segment, Segment) {
        self.added
    }

    pub fn segments(&self) -> [Segment; 4] {
        [self.removed.0, self.removed.1, self.added.0, self.added.1]
    }

    /// The four flipped points, sorted and deduplicated.
    pub fn points(&self) -> Vec<PointId> {
        let mut ids: Vec<PointId> = self
            .segments()
            .iter()
            .flat_map(|s| s.endpoints())
            .collect();
        ids.sort();
        ids.dedup();
        ids
    }

    pub fn key(&self) -> FlipKey {
        canonical_flip_id(self)
    }
}

impl PartialEq for Flip {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Hash for Flip {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

impl fmt::Display for Flip {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "<{},{} -> {},{}>",
            self.removed.0, self.removed.1, self.added.0, self.added.1
        )
    }
}

/// Deterministic key equal for two flips iff their 4-segment sets are
/// equal. Swapping the removed/added roles leaves the key unchanged.
pub fn canonical_flip_id(f: &Flip) -> FlipKey {
    let mut segs = f.segments();
    segs.sort();
    FlipKey(segs)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FlipError {
    #[error("segment not present: {0}")]
    NotPresent(Segment),
    #[error("removed segments do not cross: {0}, {1}")]
    NotCrossing(Segment, Segment),
    #[error("added pair is not a replacement pairing of the removed pair")]
    NotAReplacement,
    #[error("flip violates the {version} property: {first}")]
    VersionViolation { version: Version, first: Violation },
}

/// An immutable versioned configuration: shared point set plus an edge
/// multiset. `apply_flip` returns a new value; the point set is shared.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    points: Arc<PointSet>,
    edges: BTreeMap<Segment, u32>,
    version: Version,
}

impl Configuration {
    /// Builds a configuration from edge copies (duplicates accumulate
    /// multiplicity).
    pub fn new(
        points: Arc<PointSet>,
        edges: impl IntoIterator<Item = Segment>,
        version: Version,
    ) -> Self {
        let mut multiset: BTreeMap<Segment, u32> = BTreeMap::new();
        for e in edges {
            *multiset.entry(e).or_insert(0) += 1;
        }
        Configuration {
            points,
            edges: multiset,
            version,
        }
    }

    pub fn from_multiset(
        points: Arc<PointSet>,
        edges: BTreeMap<Segment, u32>,
        version: Version,
    ) -> Self {
        let edges = edges.into_iter().filter(|&(_, m)| m > 0).collect();
        Configuration {
            points,
            edges,
            version,
        }
    }

    pub fn points(&self) -> &Arc<PointSet> {
        &self.points
    }

    pub fn version(&self) -> Version {
        self.version
    }

    /// The edge multiset as a multiplicity map over canonical segments.
    pub fn edges(&self) -> &BTreeMap<Segment, u32> {
        &self.edges
    }

    /// Distinct segments, ignoring multiplicity.
    pub fn distinct_edges(&self) -> impl Iterator<Item = Segment> + '_ {
        self.edges.keys().copied()
    }

    /// Every edge copy in canonical order (multiplicities expanded).
    pub fn edge_copies(&self) -> impl Iterator<Item = Segment> + '_ {
        self.edges
            .iter()
            .flat_map(|(&s, &m)| std::iter::repeat(s).take(m as usize))
    }

    /// Total multiplicity.
    pub fn edge_count(&self) -> usize {
        self.edges.values().map(|&m| m as usize).sum()
    }

    pub fn multiplicity(&self, s: Segment) -> u32 {
        self.edges.get(&s).copied().unwrap_or(0)
    }

    /// Degree of a point, counting multiplicity.
    pub fn degree(&self, p: PointId) -> u32 {
        self.edges
            .iter()
            .filter(|(s, _)| s.has_endpoint(p))
            .map(|(_, &m)| m)
            .sum()
    }

    /// The same edges under the multigraph version (every matching or tour
    /// is in particular a multigraph).
    pub fn as_multigraph(&self) -> Configuration {
        Configuration {
            points: Arc::clone(&self.points),
            edges: self.edges.clone(),
            version: Version::G,
        }
    }

    /// All version violations plus a general-position check on the points.
    pub fn validate(&self) -> Vec<Violation> {
        let mut v = self.validate_structure();
        if !is_general_position(&self.points) {
            v.push(Violation::NotGeneralPosition);
        }
        v
    }

    /// Version violations only; skips the general-position scan. Used for
    /// per-step revalidation where the point set never changes.
    pub fn validate_structure(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        for (&s, _) in &self.edges {
            for p in s.endpoints() {
                if !self.points.contains(p) {
                    v.push(Violation::UnknownEndpoint { segment: s, point: p });
                }
            }
        }
        if !v.is_empty() {
            // Degree and cycle checks below assume resolvable endpoints.
            return v;
        }
        match self.version {
            Version::G => {}
            Version::MM => self.check_matching(&mut v),
            Version::RB => {
                self.check_matching(&mut v);
                self.check_coloring(&mut v);
            }
            Version::TSP => self.check_tour(&mut v),
        }
        v
    }

    fn check_matching(&self, v: &mut Vec<Violation>) {
        for (&s, &m) in &self.edges {
            if m > 1 {
                v.push(Violation::DuplicateEdge {
                    segment: s,
                    multiplicity: m,
                });
            }
        }
        for p in self.points.ids() {
            let d = self.degree(p);
            if d != 1 {
                v.push(Violation::DegreeNotOne { point: p, degree: d });
            }
        }
    }

    fn check_coloring(&self, v: &mut Vec<Violation>) {
        let mut red = 0usize;
        let mut blue = 0usize;
        for p in self.points.iter() {
            match p.color {
                Some(Color::Red) => red += 1,
                Some(Color::Blue) => blue += 1,
                None => v.push(Violation::MissingColor { point: p.id }),
            }
        }
        if red != blue {
            v.push(Violation::UnbalancedColors { red, blue });
        }
        for &s in self.edges.keys() {
            let ca = self.points.get(s.a()).and_then(|p| p.color);
            let cb = self.points.get(s.b()).and_then(|p| p.color);
            if let (Some(ca), Some(cb)) = (ca, cb) {
                if ca == cb {
                    v.push(Violation::MonochromaticEdge { segment: s });
                }
            }
        }
    }

    fn check_tour(&self, v: &mut Vec<Violation>) {
        let mut degree_ok = true;
        for p in self.points.ids() {
            let d = self.degree(p);
            if d != 2 {
                v.push(Violation::DegreeNotTwo { point: p, degree: d });
                degree_ok = false;
            }
        }
        if !degree_ok || self.tour_order().is_none() {
            v.push(Violation::NotASingleCycle);
        }
    }

    /// Recovers the cyclic vertex order of a tour by walking adjacencies.
    /// Returns None unless the edges form one closed cycle using every edge
    /// copy and visiting every point exactly once.
    pub fn tour_order(&self) -> Option<Vec<PointId>> {
        let n = self.points.len();
        if n == 0 || self.edge_count() != n {
            return None;
        }
        let copies: Vec<Segment> = self.edge_copies().collect();
        for p in self.points.ids() {
            if self.degree(p) != 2 {
                return None;
            }
        }
        let start = self.points.ids().next()?;
        let mut used = vec![false; copies.len()];
        let mut order = vec![start];
        let mut cur = start;
        loop {
            let next_copy = copies
                .iter()
                .enumerate()
                .find(|&(i, s)| !used[i] && s.has_endpoint(cur))?;
            let (i, s) = next_copy;
            used[i] = true;
            cur = s.opposite(cur).unwrap();
            if cur == start {
                break;
            }
            order.push(cur);
        }
        (order.len() == n && used.iter().all(|&u| u)).then_some(order)
    }

    /// All crossing pairs of distinct edges, deduplicated by canonical
    /// order. Two copies of the same segment never cross; multiplicities do
    /// not multiply the count.
    pub fn crossings(&self) -> Vec<(Segment, Segment)> {
        let segs: Vec<Segment> = self.distinct_edges().collect();
        let mut out = Vec::new();
        for i in 0..segs.len() {
            for j in (i + 1)..segs.len() {
                if segments_cross(&self.points, segs[i], segs[j]) {
                    out.push(normalize_pair(segs[i], segs[j]));
                }
            }
        }
        out
    }

    /// Every legal flip, sorted by canonical flip key. Per version: MM and
    /// G admit both replacement pairings of each crossing, RB exactly the
    /// color-respecting pairing, TSP exactly the pairing that leaves a
    /// single Hamiltonian cycle.
    pub fn applicable_flips(&self) -> Vec<Flip> {
        let mut flips = Vec::new();
        for (s1, s2) in self.crossings() {
            let pairs = replacement_pairs(&self.points, s1, s2)
                .expect("crossing pair must admit replacement pairings");
            for added in pairs {
                let f = Flip::new((s1, s2), added);
                let legal = match self.version {
                    Version::MM | Version::G => true,
                    Version::RB => self.is_bichromatic(added.0) && self.is_bichromatic(added.1),
                    Version::TSP => self
                        .apply_edges(&f)
                        .map(|c| c.tour_order().is_some())
                        .unwrap_or(false),
                };
                if legal {
                    flips.push(f);
                }
            }
        }
        flips.sort_by_key(|f| f.key());
        flips
    }

    fn is_bichromatic(&self, s: Segment) -> bool {
        let ca = self.points.get(s.a()).and_then(|p| p.color);
        let cb = self.points.get(s.b()).and_then(|p| p.color);
        matches!(
            (ca, cb),
            (Some(Color::Red), Some(Color::Blue)) | (Some(Color::Blue), Some(Color::Red))
        )
    }

    /// Multiset edit alone (no crossing or version checks).
    fn apply_edges(&self, f: &Flip) -> Result<Configuration, FlipError> {
        let mut edges = self.edges.clone();
        for s in [f.removed.0, f.removed.1] {
            match edges.get_mut(&s) {
                Some(m) if *m > 0 => {
                    *m -= 1;
                    if *m == 0 {
                        edges.remove(&s);
                    }
                }
                _ => return Err(FlipError::NotPresent(s)),
            }
        }
        for s in [f.added.0, f.added.1] {
            *edges.entry(s).or_insert(0) += 1;
        }
        Ok(Configuration {
            points: Arc::clone(&self.points),
            edges,
            version: self.version,
        })
    }

    /// Applies a flip: decrements the removed segments' multiplicities,
    /// increments the added ones, and checks the result still satisfies
    /// the version property. Point degrees are preserved by construction.
    pub fn apply_flip(&self, f: &Flip) -> Result<Configuration, FlipError> {
        if !segments_cross(&self.points, f.removed.0, f.removed.1) {
            return Err(FlipError::NotCrossing(f.removed.0, f.removed.1));
        }
        let pairs = replacement_pairs(&self.points, f.removed.0, f.removed.1)
            .expect("crossing pair must admit replacement pairings");
        if !pairs.contains(&f.added) {
            return Err(FlipError::NotAReplacement);
        }
        let next = self.apply_edges(f)?;
        if let Some(first) = next.validate_structure().into_iter().next() {
            return Err(FlipError::VersionViolation {
                version: self.version,
                first,
            });
        }
        debug_assert!(self
            .points
            .ids()
            .all(|p| self.degree(p) == next.degree(p)));
        debug_assert_eq!(self.edge_count(), next.edge_count());
        Ok(next)
    }
}
