//! Deterministic instance generators.
//!
//! All randomness flows through ChaCha8 seeded from the caller's `u64`
//! seed, so identical (spec, seed) inputs generate bit-identical outputs
//! on every platform. Convex point sets live on the parabola y = x²,
//! which is strictly convex with integer coordinates: no trigonometry and
//! no rounding anywhere. Near-convex sets add interior points as rational
//! convex combinations of three hull vertices. Every generated point set
//! is in general position (resampled until it is, within a bounded number
//! of attempts).

use std::collections::HashSet;
use std::sync::Arc;

use num::BigInt;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{Configuration, Version};
use crate::coord::{coord, Coord};
use crate::geometry::{Color, Point, PointId, PointSet, Segment};

/// What to generate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GenKind {
    /// Integer points in the box, resampled until no three are collinear.
    RandomGeneral,
    /// Points (i, i²) for distinct random integers i; ids follow x order.
    Convex,
    /// Parabola hull plus `t` interior points; hull ids precede interior
    /// ids.
    NearConvex { t: usize },
}

/// A point-generation request. Coordinates are drawn from `0..=box_size`
/// (for Convex kinds this bounds the parabola parameter i).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenSpec {
    pub kind: GenKind,
    pub n_points: usize,
    pub seed: u64,
    pub box_size: i64,
}

impl GenSpec {
    /// The ids of the generated convex-position subset: all ids for
    /// Convex, the first `n - t` for NearConvex, none for RandomGeneral.
    pub fn convex_subset(&self) -> Option<Vec<PointId>> {
        match self.kind {
            GenKind::RandomGeneral => None,
            GenKind::Convex => Some((0..self.n_points as u32).map(PointId).collect()),
            GenKind::NearConvex { t } => {
                Some((0..(self.n_points - t) as u32).map(PointId).collect())
            }
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("need at least {needed} points, requested {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("{t} interior points require at least {t} + 3 total points")]
    InteriorCountTooLarge { t: usize },
    #[error("box 0..={box_size} cannot host {needed} points in general position")]
    BoxTooSmall { needed: usize, box_size: i64 },
    #[error("resampling exhausted {0} attempts without a general-position sample")]
    AttemptsExhausted(u32),
    #[error("perfect matchings need an even point count, got {0}")]
    OddPointCount(usize),
}

const MAX_ATTEMPTS: u32 = 10_000;

fn orient_int(a: (i64, i64), b: (i64, i64), c: (i64, i64)) -> i8 {
    let det = (b.0 - a.0) as i128 * (c.1 - a.1) as i128
        - (b.1 - a.1) as i128 * (c.0 - a.0) as i128;
    det.signum() as i8
}

/// Generates a general-position point set. Deterministic in
/// (kind, n_points, seed, box_size).
pub fn gen_points(spec: &GenSpec) -> Result<PointSet, GenError> {
    if spec.n_points < 2 {
        return Err(GenError::TooFewPoints {
            needed: 2,
            got: spec.n_points,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.kind {
        GenKind::RandomGeneral => gen_random_general(spec, &mut rng),
        GenKind::Convex => {
            let xs = distinct_integers(spec.n_points, spec.box_size, &mut rng)?;
            Ok(parabola_points(&xs, 0))
        }
        GenKind::NearConvex { t } => gen_near_convex(spec, t, &mut rng),
    }
}

fn gen_random_general(spec: &GenSpec, rng: &mut ChaCha8Rng) -> Result<PointSet, GenError> {
    let mut accepted: Vec<(i64, i64)> = Vec::with_capacity(spec.n_points);
    let mut attempts = 0u32;
    while accepted.len() < spec.n_points {
        if attempts >= MAX_ATTEMPTS {
            return Err(GenError::AttemptsExhausted(MAX_ATTEMPTS));
        }
        attempts += 1;
        let cand = (
            rng.gen_range(0..=spec.box_size),
            rng.gen_range(0..=spec.box_size),
        );
        if accepted.contains(&cand) {
            continue;
        }
        let collinear = (0..accepted.len()).any(|i| {
            ((i + 1)..accepted.len())
                .any(|j| orient_int(accepted[i], accepted[j], cand) == 0)
        });
        if collinear {
            continue;
        }
        accepted.push(cand);
    }
    let points = accepted
        .into_iter()
        .enumerate()
        .map(|(k, (x, y))| Point::new(PointId(k as u32), coord(x), coord(y)))
        .collect();
    Ok(PointSet::new(points).expect("generated ids are unique"))
}

fn distinct_integers(n: usize, bound: i64, rng: &mut ChaCha8Rng) -> Result<Vec<i64>, GenError> {
    if bound < 0 || (bound as u128 + 1) < n as u128 {
        return Err(GenError::BoxTooSmall {
            needed: n,
            box_size: bound,
        });
    }
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0u32;
    while out.len() < n {
        if attempts >= MAX_ATTEMPTS {
            return Err(GenError::AttemptsExhausted(MAX_ATTEMPTS));
        }
        attempts += 1;
        let x = rng.gen_range(0..=bound);
        if seen.insert(x) {
            out.push(x);
        }
    }
    out.sort();
    Ok(out)
}

/// Points (x, x²) with ids assigned in ascending x, starting at id_base.
fn parabola_points(xs: &[i64], id_base: u32) -> PointSet {
    let points = xs
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let big = BigInt::from(x);
            Point::new(
                PointId(id_base + k as u32),
                coord(x),
                Coord::from_integer(&big * &big),
            )
        })
        .collect();
    PointSet::new(points).expect("generated ids are unique")
}

fn gen_near_convex(
    spec: &GenSpec,
    t: usize,
    rng: &mut ChaCha8Rng,
) -> Result<PointSet, GenError> {
    if spec.n_points < t + 3 {
        return Err(GenError::InteriorCountTooLarge { t });
    }
    let hull_n = spec.n_points - t;
    let xs = distinct_integers(hull_n, spec.box_size, rng)?;
    let hull: Vec<Point> = parabola_points(&xs, 0).iter().cloned().collect();
    let mut all = hull.clone();
    let mut attempts = 0u32;
    while all.len() < spec.n_points {
        if attempts >= MAX_ATTEMPTS {
            return Err(GenError::AttemptsExhausted(MAX_ATTEMPTS));
        }
        attempts += 1;
        // Convex combination of three hull vertices with small positive
        // weights: strictly inside their triangle, hence inside the hull.
        let mut idx: Vec<usize> = (0..hull_n).collect();
        idx.shuffle(rng);
        let (a, b, c) = (&hull[idx[0]], &hull[idx[1]], &hull[idx[2]]);
        let w: [i64; 3] = [
            rng.gen_range(1..=8),
            rng.gen_range(1..=8),
            rng.gen_range(1..=8),
        ];
        let total = coord(w[0] + w[1] + w[2]);
        let x = (coord(w[0]) * &a.x + coord(w[1]) * &b.x + coord(w[2]) * &c.x) / &total;
        let y = (coord(w[0]) * &a.y + coord(w[1]) * &b.y + coord(w[2]) * &c.y) / &total;
        let cand = Point::new(PointId(all.len() as u32), x, y);
        let degenerate = all.iter().any(|p| p.x == cand.x && p.y == cand.y)
            || (0..all.len()).any(|i| {
                ((i + 1)..all.len())
                    .any(|j| crate::geometry::orientation(&all[i], &all[j], &cand) == 0)
            });
        if degenerate {
            continue;
        }
        all.push(cand);
    }
    Ok(PointSet::new(all).expect("generated ids are unique"))
}

/// Builds a random valid configuration of the requested version over the
/// given points. For RB the points are given a balanced random coloring
/// (replacing any existing colors); the returned configuration owns the
/// recolored point set.
pub fn gen_configuration(
    points: &Arc<PointSet>,
    version: Version,
    seed: u64,
) -> Result<Configuration, GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = points.len();
    match version {
        Version::MM => {
            if n % 2 != 0 {
                return Err(GenError::OddPointCount(n));
            }
            let mut ids: Vec<PointId> = points.ids().collect();
            ids.shuffle(&mut rng);
            let edges = ids.chunks(2).map(|p| Segment::new(p[0], p[1]));
            Ok(Configuration::new(Arc::clone(points), edges, Version::MM))
        }
        Version::RB => {
            if n % 2 != 0 {
                return Err(GenError::OddPointCount(n));
            }
            let mut ids: Vec<PointId> = points.ids().collect();
            ids.shuffle(&mut rng);
            let (reds, blues) = ids.split_at(n / 2);
            let recolored: Vec<Point> = points
                .iter()
                .map(|p| {
                    let color = if reds.contains(&p.id) {
                        Color::Red
                    } else {
                        Color::Blue
                    };
                    Point::with_color(p.id, p.x.clone(), p.y.clone(), color)
                })
                .collect();
            let colored = PointSet::new(recolored)
                .expect("recoloring preserves ids")
                .into_shared();
            let mut reds = reds.to_vec();
            let mut blues = blues.to_vec();
            reds.shuffle(&mut rng);
            blues.shuffle(&mut rng);
            let edges = reds
                .iter()
                .zip(blues.iter())
                .map(|(&r, &b)| Segment::new(r, b));
            Ok(Configuration::new(colored, edges, Version::RB))
        }
        Version::TSP => {
            if n < 3 {
                return Err(GenError::TooFewPoints { needed: 3, got: n });
            }
            let mut ids: Vec<PointId> = points.ids().collect();
            ids.shuffle(&mut rng);
            let edges = (0..n).map(|i| Segment::new(ids[i], ids[(i + 1) % n]));
            Ok(Configuration::new(Arc::clone(points), edges, Version::TSP))
        }
        Version::G => gen_multigraph(points, seed, 3, n),
    }
}

/// Random multigraph: `n_edges` segments sampled uniformly among pairs,
/// repetitions allowed, rejecting any edge that would push an endpoint
/// past `max_degree`.
pub fn gen_multigraph(
    points: &Arc<PointSet>,
    seed: u64,
    max_degree: u32,
    n_edges: usize,
) -> Result<Configuration, GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<PointId> = points.ids().collect();
    if ids.len() < 2 {
        return Err(GenError::TooFewPoints {
            needed: 2,
            got: ids.len(),
        });
    }
    let mut degree = vec![0u32; ids.len()];
    let mut edges = Vec::with_capacity(n_edges);
    let mut attempts = 0u32;
    while edges.len() < n_edges {
        if attempts >= MAX_ATTEMPTS {
            return Err(GenError::AttemptsExhausted(MAX_ATTEMPTS));
        }
        attempts += 1;
        let i = rng.gen_range(0..ids.len());
        let j = rng.gen_range(0..ids.len());
        if i == j || degree[i] >= max_degree || degree[j] >= max_degree {
            continue;
        }
        degree[i] += 1;
        degree[j] += 1;
        edges.push(Segment::new(ids[i], ids[j]));
    }
    Ok(Configuration::new(Arc::clone(points), edges, Version::G))
}

/// 2n points in convex position matched along "long diagonals" (hull
/// position i to i + n), which pairwise cross: the crossing count starts
/// at exactly n choose 2.
pub fn gen_max_crossing_matching(n: usize, seed: u64) -> Result<Configuration, GenError> {
    if n < 2 {
        return Err(GenError::TooFewPoints { needed: 4, got: 2 * n });
    }
    let spec = GenSpec {
        kind: GenKind::Convex,
        n_points: 2 * n,
        seed,
        box_size: (4 * n as i64).max(1000),
    };
    let points = gen_points(&spec)?.into_shared();
    // Parabola ids follow hull order, so id i and id i+n interleave with
    // every other long diagonal.
    let edges =
        (0..n).map(|i| Segment::new(PointId(i as u32), PointId((i + n) as u32)));
    Ok(Configuration::new(points, edges, Version::MM))
}
