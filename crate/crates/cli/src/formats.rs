//! Instance and record file formats.
//!
//! JSON containers with exact "p/q" rational strings; unknown fields are
//! rejected so experiment-script typos surface as errors instead of
//! silently ignored knobs. Files written here re-read to the identical
//! value, and re-serializing what was read reproduces the bytes.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use untangle_core::{
    build_line_set, flip_drop, parse_coord, phi_l, phi_x, render_coord, Color,
    Configuration, Flip, LineSet, LineSetKind, Point, PointId, PointSet, SequenceRecord,
    Step, Version,
};

#[derive(Debug)]
pub struct FormatError {
    pub file: String,
    pub detail: String,
}

impl std::fmt::Display for FormatError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.file, self.detail)
    }
}

impl std::error::Error for FormatError {}

impl FormatError {
    pub fn new(file: &str, detail: impl Into<String>) -> Self {
        FormatError {
            file: file.to_string(),
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointRecord {
    pub id: u32,
    pub x: String,
    pub y: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<String>,
}

/// On-disk form of a configuration. `edges` may repeat a pair (version G
/// multiplicities); `convex_subset` names the convex-position point set
/// that near-convex line potentials are built from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub version: String,
    pub points: Vec<PointRecord>,
    pub edges: Vec<[u32; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convex_subset: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSetRecord {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convex: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlipRecord {
    pub removed: [[u32; 2]; 2],
    pub added: [[u32; 2]; 2],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepRecord {
    pub flip: FlipRecord,
    pub phi_x: u64,
    pub phi_l: u64,
    pub drop: i64,
}

/// On-disk form of an executed flip sequence: inline instance, the line
/// set the snapshots were taken against, and one snapshot per step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordFile {
    pub instance: InstanceFile,
    pub line_set: LineSetRecord,
    pub steps: Vec<StepRecord>,
    pub terminated: bool,
}

fn parse_version(s: &str, file: &str) -> Result<Version, FormatError> {
    match s {
        "mm" => Ok(Version::MM),
        "rb" => Ok(Version::RB),
        "tsp" => Ok(Version::TSP),
        "g" => Ok(Version::G),
        other => Err(FormatError::new(
            file,
            format!("version: expected mm|rb|tsp|g, got {other:?}"),
        )),
    }
}

fn parse_color(s: &str, id: u32, file: &str) -> Result<Color, FormatError> {
    match s {
        "red" => Ok(Color::Red),
        "blue" => Ok(Color::Blue),
        other => Err(FormatError::new(
            file,
            format!("point {id}: color: expected red|blue, got {other:?}"),
        )),
    }
}

/// Decodes an instance into a validated configuration plus its optional
/// convex subset.
pub fn instance_to_configuration(
    inst: &InstanceFile,
    file: &str,
) -> Result<(Configuration, Option<Vec<PointId>>), FormatError> {
    let version = parse_version(&inst.version, file)?;
    let mut points = Vec::with_capacity(inst.points.len());
    for p in &inst.points {
        let x = parse_coord(&p.x).map_err(|e| {
            FormatError::new(file, format!("point {}: x {:?}: {e}", p.id, p.x))
        })?;
        let y = parse_coord(&p.y).map_err(|e| {
            FormatError::new(file, format!("point {}: y {:?}: {e}", p.id, p.y))
        })?;
        let point = match &p.color {
            Some(c) => Point::with_color(PointId(p.id), x, y, parse_color(c, p.id, file)?),
            None => Point::new(PointId(p.id), x, y),
        };
        points.push(point);
    }
    let ps = PointSet::new(points)
        .map_err(|e| FormatError::new(file, format!("points: {e}")))?
        .into_shared();
    let mut edges = Vec::with_capacity(inst.edges.len());
    for (i, [a, b]) in inst.edges.iter().enumerate() {
        if a == b {
            return Err(FormatError::new(file, format!("edges[{i}]: degenerate [{a},{b}]")));
        }
        edges.push(untangle_core::Segment::new(PointId(*a), PointId(*b)));
    }
    let c = Configuration::new(Arc::clone(&ps), edges, version);
    if let Some(v) = c.validate().into_iter().next() {
        return Err(FormatError::new(file, format!("instance invalid: {v}")));
    }
    let convex = match &inst.convex_subset {
        None => None,
        Some(ids) => {
            for id in ids {
                if !ps.contains(PointId(*id)) {
                    return Err(FormatError::new(
                        file,
                        format!("convex_subset: unknown point {id}"),
                    ));
                }
            }
            Some(ids.iter().map(|&i| PointId(i)).collect())
        }
    };
    Ok((c, convex))
}

pub fn configuration_to_instance(
    c: &Configuration,
    convex: Option<&[PointId]>,
) -> InstanceFile {
    let points = c
        .points()
        .iter()
        .map(|p| PointRecord {
            id: p.id.0,
            x: render_coord(&p.x),
            y: render_coord(&p.y),
            color: p.color.map(|col| {
                match col {
                    Color::Red => "red",
                    Color::Blue => "blue",
                }
                .to_string()
            }),
        })
        .collect();
    let mut edges = Vec::new();
    for (&s, &m) in c.edges() {
        for _ in 0..m {
            edges.push([s.a().0, s.b().0]);
        }
    }
    InstanceFile {
        version: c.version().to_string(),
        points,
        edges,
        convex_subset: convex.map(|ids| ids.iter().map(|p| p.0).collect()),
    }
}

pub fn flip_to_record(f: &Flip) -> FlipRecord {
    let (r1, r2) = f.removed();
    let (a1, a2) = f.added();
    let pair = |s: untangle_core::Segment| [s.a().0, s.b().0];
    FlipRecord {
        removed: [pair(r1), pair(r2)],
        added: [pair(a1), pair(a2)],
    }
}

pub fn record_to_flip(r: &FlipRecord, file: &str) -> Result<Flip, FormatError> {
    let seg = |p: [u32; 2]| -> Result<untangle_core::Segment, FormatError> {
        if p[0] == p[1] {
            return Err(FormatError::new(
                file,
                format!("flip segment [{},{}] is degenerate", p[0], p[1]),
            ));
        }
        Ok(untangle_core::Segment::new(PointId(p[0]), PointId(p[1])))
    };
    Ok(Flip::new(
        (seg(r.removed[0])?, seg(r.removed[1])?),
        (seg(r.added[0])?, seg(r.added[1])?),
    ))
}

fn line_set_to_record(ls: &LineSet) -> LineSetRecord {
    match ls.kind() {
        LineSetKind::Full => LineSetRecord {
            kind: "full".to_string(),
            convex: None,
        },
        LineSetKind::NearConvex { convex } => LineSetRecord {
            kind: "nearconvex".to_string(),
            convex: Some(convex.iter().map(|p| p.0).collect()),
        },
    }
}

fn record_to_line_set(
    r: &LineSetRecord,
    ps: &PointSet,
    file: &str,
) -> Result<LineSet, FormatError> {
    let kind = match (r.kind.as_str(), &r.convex) {
        ("full", None) => LineSetKind::Full,
        ("full", Some(_)) => {
            return Err(FormatError::new(file, "line_set: full takes no convex list"))
        }
        ("nearconvex", Some(ids)) => LineSetKind::NearConvex {
            convex: ids.iter().map(|&i| PointId(i)).collect(),
        },
        ("nearconvex", None) => {
            return Err(FormatError::new(file, "line_set: nearconvex requires convex"))
        }
        (other, _) => {
            return Err(FormatError::new(
                file,
                format!("line_set.kind: expected full|nearconvex, got {other:?}"),
            ))
        }
    };
    build_line_set(ps, kind).map_err(|e| FormatError::new(file, format!("line_set: {e}")))
}

/// Encodes an executed sequence. The instance keeps the convex subset so
/// a near-convex record stays self-contained.
pub fn record_to_file(rec: &SequenceRecord) -> RecordFile {
    let convex = match rec.line_set().kind() {
        LineSetKind::Full => None,
        LineSetKind::NearConvex { convex } => Some(convex.clone()),
    };
    RecordFile {
        instance: configuration_to_instance(rec.initial(), convex.as_deref()),
        line_set: line_set_to_record(rec.line_set()),
        steps: rec
            .steps()
            .iter()
            .map(|s| StepRecord {
                flip: flip_to_record(&s.flip),
                phi_x: s.phi_x_after,
                phi_l: s.phi_l_after,
                drop: s.drop,
            })
            .collect(),
        terminated: rec.terminated(),
    }
}

/// Decodes a record file into a replayable sequence record. Snapshots are
/// taken from the file as-is; `audit` recomputes and checks them.
pub fn file_to_record(rf: &RecordFile, file: &str) -> Result<SequenceRecord, FormatError> {
    let (initial, _) = instance_to_configuration(&rf.instance, file)?;
    let line_set = record_to_line_set(&rf.line_set, initial.points(), file)?;
    let mut steps = Vec::with_capacity(rf.steps.len());
    for s in &rf.steps {
        steps.push(Step {
            flip: record_to_flip(&s.flip, file)?,
            phi_x_after: s.phi_x,
            phi_l_after: s.phi_l,
            drop: s.drop,
        });
    }
    Ok(SequenceRecord::from_parts(initial, line_set, steps, rf.terminated))
}

/// Replays `flips` from `initial`, computing honest snapshots against
/// `line_set`. Used to build records for sequences that did not come out
/// of the engine (e.g. transformed ones).
pub fn replay_record(
    initial: &Configuration,
    line_set: LineSet,
    flips: &[Flip],
    file: &str,
) -> Result<SequenceRecord, FormatError> {
    let mut state = initial.clone();
    let mut steps = Vec::with_capacity(flips.len());
    for (i, f) in flips.iter().enumerate() {
        let drop = flip_drop(state.points(), f, &line_set);
        state = state
            .apply_flip(f)
            .map_err(|e| FormatError::new(file, format!("replay step {i}: {e}")))?;
        steps.push(Step {
            flip: *f,
            phi_x_after: phi_x(&state),
            phi_l_after: phi_l(&state, &line_set).phi_l_total,
            drop,
        });
    }
    let terminated = state.crossings().is_empty();
    Ok(SequenceRecord::from_parts(
        initial.clone(),
        line_set,
        steps,
        terminated,
    ))
}

/// The CSV lines for a record: fixed header, one row per step, flip keys
/// serialized with semicolons so the row stays six columns.
pub fn record_to_csv(rec: &SequenceRecord) -> String {
    let mut out = String::from("step,flip_key,phi_x,phi_l,drop,distinct_so_far\n");
    let mut seen: BTreeSet<untangle_core::FlipKey> = BTreeSet::new();
    for (i, s) in rec.steps().iter().enumerate() {
        seen.insert(s.flip.key());
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            i + 1,
            s.flip.key(),
            s.phi_x_after,
            s.phi_l_after,
            s.drop,
            seen.len()
        ));
    }
    out
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("in-memory serialization");
    s.push('\n');
    s
}

pub fn from_json_str<'a, T: Deserialize<'a>>(
    text: &'a str,
    file: &str,
) -> Result<T, FormatError> {
    serde_json::from_str(text).map_err(|e| FormatError::new(file, e.to_string()))
}
