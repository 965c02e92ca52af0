//! Flip dynamics on crossing segment configurations.
//!
//! A *flip* replaces a pair of crossing segments by a pair of non-crossing
//! segments on the same four endpoints, subject to a structural property
//! (perfect matching, red-blue matching, Hamiltonian tour, or arbitrary
//! multigraph). This crate provides:
//!
//! - exact rational geometric predicates ([`geometry`]),
//! - versioned segment configurations with flip legality and application
//!   ([`config`]),
//! - crossing and line potentials with per-flip drop accounting
//!   ([`potentials`]),
//! - constructive reductions between the multigraph, matching, red-blue,
//!   and tour versions, including flip-sequence transformers
//!   ([`reductions`]),
//! - an audited flip-sequence engine with pluggable strategies and
//!   brute-force oracles for tiny instances ([`engine`]),
//! - deterministic instance generators ([`generators`]).
//!
//! All predicates are exact: coordinates are arbitrary-precision rationals
//! and no operation ever rounds. Floating point appears nowhere in this
//! crate.

pub mod config;
pub mod coord;
pub mod engine;
pub mod generators;
pub mod geometry;
pub mod potentials;
pub mod reductions;

pub use config::{canonical_flip_id, Configuration, Flip, FlipError, FlipKey, Version, Violation};
pub use coord::{coord, parse_coord, ratio, render_coord, Coord};
pub use engine::{
    audit, certified_max_steps, distinct_count, oracle_longest, oracle_shortest_untangle, run,
    AuditFailure, AuditReport, EngineError, SequenceRecord, Step, Strategy,
};
pub use generators::{
    gen_configuration, gen_max_crossing_matching, gen_multigraph, gen_points, GenError, GenKind,
    GenSpec,
};
pub use geometry::{
    convex_hull, in_convex_position, is_general_position, line_crosses_segment, orientation,
    replacement_pairs, segments_cross, Color, GeometryError, Line, Point, PointId, PointSet,
    Segment,
};
pub use potentials::{
    angular_rank, build_line_set, classify_line, flip_drop, flip_labelings, line_delta, phi_l,
    phi_line, phi_x, LineClass, LineSet, LineSetKind, PotentialError, PotentialReport,
};
pub use reductions::{
    reduce_g_to_mm, reduce_mm_to_rb, reduce_rb_to_tsp, safe_epsilon, transform_sequence,
    Reduction, ReductionError, ReductionKind,
};
