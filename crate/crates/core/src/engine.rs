//! Flip-sequence execution, auditing, and brute-force oracles.
//!
//! [`run`] drives a configuration with a [`Strategy`] until no crossings
//! remain, recording per-step potential snapshots and a distinct-flip
//! ledger. Termination is certified, not hoped for: every flip drops the
//! full-line-set potential by at least 2, so `phi_l(initial, Full)/2 + 1`
//! steps is a hard ceiling and exceeding it is reported as an engine bug.
//!
//! The run loop recomputes `phi_x` from scratch each step but carries
//! `phi_l` forward incrementally by the flip's drop; [`audit`] replays the
//! record and recomputes everything from scratch, so the two code paths
//! check each other.
//!
//! The oracles do exhaustive search over the configuration space of tiny
//! instances (at most 4 edges, or 6 points for tours) with the edge
//! multiset as memo key. The guard is a hard error: beyond it the state
//! space explodes and a refusal beats a silent multi-hour run.

use std::collections::{BTreeSet, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{Configuration, Flip, FlipError, FlipKey, Version, Violation};
use crate::potentials::{build_line_set, flip_drop, phi_l, phi_x, LineSet, LineSetKind};
use crate::geometry::Segment;

/// How the next flip is chosen at each step. Every strategy is
/// deterministic given its parameters.
#[derive(Debug, Clone)]
pub enum Strategy {
    /// Smallest canonical flip key among applicable flips.
    FirstLex,
    /// Uniform choice via a ChaCha8 stream seeded once per run.
    Random(u64),
    /// Maximizes the crossing-count increase (ties by flip key); exists to
    /// hunt for long sequences.
    GreedyMaxNewCrossings,
    /// Minimizes the flip drop against the given line set (ties by key).
    GreedyMinDrop(LineSet),
    /// Replays the longest sequence found by exhaustive search; subject to
    /// the oracle size guard.
    Exhaustive,
}

/// One executed flip with its after-the-fact potential snapshots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub flip: Flip,
    pub phi_x_after: u64,
    pub phi_l_after: u64,
    pub drop: i64,
}

/// An audited flip sequence: initial configuration, per-step snapshots
/// against a fixed line set, and the set of distinct flip identities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceRecord {
    initial: Configuration,
    line_set: LineSet,
    steps: Vec<Step>,
    distinct_keys: BTreeSet<FlipKey>,
    terminated: bool,
}

impl SequenceRecord {
    pub fn from_parts(
        initial: Configuration,
        line_set: LineSet,
        steps: Vec<Step>,
        terminated: bool,
    ) -> Self {
        let distinct_keys = steps.iter().map(|s| s.flip.key()).collect();
        SequenceRecord {
            initial,
            line_set,
            steps,
            distinct_keys,
            terminated,
        }
    }

    pub fn initial(&self) -> &Configuration {
        &self.initial
    }

    pub fn line_set(&self) -> &LineSet {
        &self.line_set
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn terminated(&self) -> bool {
        self.terminated
    }

    pub fn distinct_keys(&self) -> &BTreeSet<FlipKey> {
        &self.distinct_keys
    }

    /// Replays all flips from the initial configuration.
    pub fn final_configuration(&self) -> Result<Configuration, FlipError> {
        let mut c = self.initial.clone();
        for s in &self.steps {
            c = c.apply_flip(&s.flip)?;
        }
        Ok(c)
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid configuration: {}{}", .0[0], if .0.len() > 1 { " (and more)" } else { "" })]
    Invalid(Vec<Violation>),
    #[error("termination certificate violated: {0} steps did not untangle")]
    CertificateViolated(usize),
    #[error("strategy produced an inapplicable flip at step {step}: {source}")]
    StrategyFlip {
        step: usize,
        #[source]
        source: FlipError,
    },
    #[error("no applicable flip despite {crossings} crossings at step {step}")]
    NoApplicableFlip { step: usize, crossings: usize },
    #[error("oracle scale exceeded: {0}")]
    OracleScaleExceeded(String),
    #[error("depth cap {0} hit during exhaustive search")]
    DepthCapHit(usize),
    #[error("search space contains no crossing-free state (engine bug)")]
    UntangledUnreachable,
    #[error(transparent)]
    Flip(#[from] FlipError),
}

/// Hard ceiling on steps implied by the at-least-2 drop per flip on the
/// full line set.
pub fn certified_max_steps(c: &Configuration) -> usize {
    let full = build_line_set(c.points(), LineSetKind::Full)
        .expect("full line set construction cannot fail");
    (phi_l(c, &full).phi_l_total / 2 + 1) as usize
}

/// Executes flips per the strategy until no crossings remain, recording
/// snapshots against `line_set`. `max_steps` defaults to the termination
/// certificate; hitting it is an error, never a silent truncation.
pub fn run(
    c: &Configuration,
    strategy: &Strategy,
    line_set: &LineSet,
    max_steps: Option<usize>,
) -> Result<SequenceRecord, EngineError> {
    let violations = c.validate();
    if !violations.is_empty() {
        return Err(EngineError::Invalid(violations));
    }
    let cap = max_steps.unwrap_or_else(|| certified_max_steps(c));
    if let Strategy::Exhaustive = strategy {
        let (_, witness) = oracle_longest(c, cap)?;
        return replay_as_record(c, line_set, &witness);
    }
    let mut rng = match strategy {
        Strategy::Random(seed) => Some(ChaCha8Rng::seed_from_u64(*seed)),
        _ => None,
    };
    let mut state = c.clone();
    let mut steps: Vec<Step> = Vec::new();
    let mut distinct_keys = BTreeSet::new();
    let mut phi_l_running = phi_l(&state, line_set).phi_l_total as i64;
    loop {
        let crossings = state.crossings();
        if crossings.is_empty() {
            return Ok(SequenceRecord {
                initial: c.clone(),
                line_set: line_set.clone(),
                steps,
                distinct_keys,
                terminated: true,
            });
        }
        if steps.len() >= cap {
            return Err(EngineError::CertificateViolated(steps.len()));
        }
        let flips = state.applicable_flips();
        if flips.is_empty() {
            return Err(EngineError::NoApplicableFlip {
                step: steps.len(),
                crossings: crossings.len(),
            });
        }
        let chosen = match strategy {
            Strategy::FirstLex => flips[0],
            Strategy::Random(_) => {
                let rng = rng.as_mut().expect("random strategy carries an rng");
                flips[rng.gen_range(0..flips.len())]
            }
            Strategy::GreedyMaxNewCrossings => {
                let before = phi_x(&state) as i64;
                pick_by(&flips, |f| {
                    let after = state.apply_flip(f).map(|n| phi_x(&n) as i64);
                    after.map(|a| a - before)
                })?
                .ok_or(EngineError::NoApplicableFlip {
                    step: steps.len(),
                    crossings: crossings.len(),
                })?
            }
            Strategy::GreedyMinDrop(ls) => {
                pick_by(&flips, |f| Ok(-flip_drop(state.points(), f, ls)))?
                    .ok_or(EngineError::NoApplicableFlip {
                        step: steps.len(),
                        crossings: crossings.len(),
                    })?
            }
            Strategy::Exhaustive => unreachable!("handled above"),
        };
        let next = state
            .apply_flip(&chosen)
            .map_err(|source| EngineError::StrategyFlip {
                step: steps.len(),
                source,
            })?;
        let drop = flip_drop(state.points(), &chosen, line_set);
        phi_l_running -= drop;
        distinct_keys.insert(chosen.key());
        steps.push(Step {
            flip: chosen,
            phi_x_after: phi_x(&next),
            phi_l_after: phi_l_running.max(0) as u64,
            drop,
        });
        state = next;
    }
}

/// Highest score wins; ties go to the earliest flip, and `flips` arrives
/// sorted by canonical key.
fn pick_by(
    flips: &[Flip],
    mut score: impl FnMut(&Flip) -> Result<i64, FlipError>,
) -> Result<Option<Flip>, EngineError> {
    let mut best: Option<(i64, Flip)> = None;
    for f in flips {
        let s = score(f)?;
        if best.as_ref().map_or(true, |&(bs, _)| s > bs) {
            best = Some((s, *f));
        }
    }
    Ok(best.map(|(_, f)| f))
}

fn replay_as_record(
    c: &Configuration,
    line_set: &LineSet,
    flips: &[Flip],
) -> Result<SequenceRecord, EngineError> {
    let mut state = c.clone();
    let mut steps = Vec::with_capacity(flips.len());
    let mut distinct_keys = BTreeSet::new();
    let mut phi_l_running = phi_l(&state, line_set).phi_l_total as i64;
    for (i, f) in flips.iter().enumerate() {
        let next = state
            .apply_flip(f)
            .map_err(|source| EngineError::StrategyFlip { step: i, source })?;
        let drop = flip_drop(state.points(), f, line_set);
        phi_l_running -= drop;
        distinct_keys.insert(f.key());
        steps.push(Step {
            flip: *f,
            phi_x_after: phi_x(&next),
            phi_l_after: phi_l_running.max(0) as u64,
            drop,
        });
        state = next;
    }
    let terminated = state.crossings().is_empty();
    Ok(SequenceRecord {
        initial: c.clone(),
        line_set: line_set.clone(),
        steps,
        distinct_keys,
        terminated,
    })
}

fn oracle_guard(c: &Configuration) -> Result<(), EngineError> {
    match c.version() {
        Version::TSP => {
            if c.points().len() > 6 {
                return Err(EngineError::OracleScaleExceeded(format!(
                    "tour on {} points exceeds the 6-point oracle guard",
                    c.points().len()
                )));
            }
        }
        _ => {
            if c.edge_count() > 4 {
                return Err(EngineError::OracleScaleExceeded(format!(
                    "{} edges exceed the 4-edge oracle guard",
                    c.edge_count()
                )));
            }
        }
    }
    Ok(())
}

type EdgeKey = Vec<(Segment, u32)>;

fn edge_key(c: &Configuration) -> EdgeKey {
    c.edges().iter().map(|(&s, &m)| (s, m)).collect()
}

/// Longest flip sequence from `c`, by exhaustive memoized DFS. Returns the
/// length and one witness (ties resolved in canonical flip-key order).
pub fn oracle_longest(
    c: &Configuration,
    depth_cap: usize,
) -> Result<(usize, Vec<Flip>), EngineError> {
    oracle_guard(c)?;
    let mut memo: HashMap<EdgeKey, (usize, Vec<Flip>)> = HashMap::new();
    fn dfs(
        state: &Configuration,
        depth_left: usize,
        cap: usize,
        memo: &mut HashMap<EdgeKey, (usize, Vec<Flip>)>,
    ) -> Result<(usize, Vec<Flip>), EngineError> {
        let key = edge_key(state);
        if let Some(v) = memo.get(&key) {
            return Ok(v.clone());
        }
        let flips = state.applicable_flips();
        if flips.is_empty() {
            memo.insert(key, (0, Vec::new()));
            return Ok((0, Vec::new()));
        }
        if depth_left == 0 {
            return Err(EngineError::DepthCapHit(cap));
        }
        let mut best: (usize, Vec<Flip>) = (0, Vec::new());
        for f in flips {
            let next = state.apply_flip(&f)?;
            let (len, wit) = dfs(&next, depth_left - 1, cap, memo)?;
            if len + 1 > best.0 {
                let mut witness = Vec::with_capacity(len + 1);
                witness.push(f);
                witness.extend(wit);
                best = (len + 1, witness);
            }
        }
        memo.insert(key, best.clone());
        Ok(best)
    }
    dfs(c, depth_cap, depth_cap, &mut memo)
}

/// Minimum number of flips to reach a crossing-free configuration, by BFS
/// over the configuration space. Same size guard as `oracle_longest`.
pub fn oracle_shortest_untangle(c: &Configuration) -> Result<usize, EngineError> {
    oracle_guard(c)?;
    if c.crossings().is_empty() {
        return Ok(0);
    }
    let mut visited: BTreeSet<EdgeKey> = BTreeSet::new();
    let mut queue: VecDeque<(Configuration, usize)> = VecDeque::new();
    visited.insert(edge_key(c));
    queue.push_back((c.clone(), 0));
    while let Some((state, dist)) = queue.pop_front() {
        for f in state.applicable_flips() {
            let next = state.apply_flip(&f)?;
            let key = edge_key(&next);
            if !visited.insert(key) {
                continue;
            }
            if next.crossings().is_empty() {
                return Ok(dist + 1);
            }
            queue.push_back((next, dist + 1));
        }
    }
    Err(EngineError::UntangledUnreachable)
}

/// Size of the distinct-flip ledger.
pub fn distinct_count(rec: &SequenceRecord) -> usize {
    rec.distinct_keys.len()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditFailure {
    pub step: usize,
    pub problem: String,
}

/// Outcome of replaying a record: all-or-nothing pass flag, per-step
/// failures, and for each requested threshold k the split of steps into
/// drop ≥ k versus drop < k.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditReport {
    pub ok: bool,
    pub failures: Vec<AuditFailure>,
    pub steps: usize,
    pub final_phi_x: u64,
    /// (k, steps with drop >= k, steps with drop < k)
    pub threshold_split: Vec<(i64, usize, usize)>,
}

/// Replays the record from its initial configuration and recomputes every
/// snapshot from scratch: step validity, exact phi_x and phi_l values,
/// drop equality with `flip_drop` (the configuration-independence of
/// drops), monotone non-increase of phi_l, and the terminated flag.
pub fn audit(rec: &SequenceRecord, line_set: &LineSet, thresholds: &[i64]) -> AuditReport {
    let mut failures = Vec::new();
    let mut state = rec.initial().clone();
    let violations = state.validate();
    if !violations.is_empty() {
        failures.push(AuditFailure {
            step: 0,
            problem: format!("initial configuration invalid: {}", violations[0]),
        });
    }
    let mut prev_phi_l = phi_l(&state, line_set).phi_l_total;
    for (i, step) in rec.steps().iter().enumerate() {
        match state.apply_flip(&step.flip) {
            Ok(next) => state = next,
            Err(e) => {
                failures.push(AuditFailure {
                    step: i,
                    problem: format!("flip not applicable: {e}"),
                });
                break;
            }
        }
        let structure = state.validate_structure();
        if !structure.is_empty() {
            failures.push(AuditFailure {
                step: i,
                problem: format!("state invalid after flip: {}", structure[0]),
            });
        }
        let x = phi_x(&state);
        if x != step.phi_x_after {
            failures.push(AuditFailure {
                step: i,
                problem: format!("phi_x snapshot {} != recomputed {x}", step.phi_x_after),
            });
        }
        let l = phi_l(&state, line_set).phi_l_total;
        if l != step.phi_l_after {
            failures.push(AuditFailure {
                step: i,
                problem: format!("phi_l snapshot {} != recomputed {l}", step.phi_l_after),
            });
        }
        if l > prev_phi_l {
            failures.push(AuditFailure {
                step: i,
                problem: format!("phi_l increased from {prev_phi_l} to {l}"),
            });
        }
        let d = flip_drop(rec.initial().points(), &step.flip, line_set);
        if d != step.drop {
            failures.push(AuditFailure {
                step: i,
                problem: format!("recorded drop {} != flip_drop {d}", step.drop),
            });
        }
        if prev_phi_l as i64 - l as i64 != d {
            failures.push(AuditFailure {
                step: i,
                problem: format!(
                    "measured phi_l difference {} != flip_drop {d}",
                    prev_phi_l as i64 - l as i64
                ),
            });
        }
        prev_phi_l = l;
    }
    let final_phi_x = phi_x(&state);
    if rec.terminated() && final_phi_x != 0 {
        failures.push(AuditFailure {
            step: rec.steps().len(),
            problem: format!("record claims termination but {final_phi_x} crossings remain"),
        });
    }
    let ledger: BTreeSet<FlipKey> = rec.steps().iter().map(|s| s.flip.key()).collect();
    if &ledger != rec.distinct_keys() {
        failures.push(AuditFailure {
            step: rec.steps().len(),
            problem: "distinct-flip ledger does not match the steps".to_string(),
        });
    }
    let threshold_split = thresholds
        .iter()
        .map(|&k| {
            let big = rec.steps().iter().filter(|s| s.drop >= k).count();
            (k, big, rec.steps().len() - big)
        })
        .collect();
    AuditReport {
        ok: failures.is_empty(),
        failures,
        steps: rec.steps().len(),
        final_phi_x,
        threshold_split,
    }
}
