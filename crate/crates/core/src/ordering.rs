//! Sequential-time event ordering and relational-time distances.
//!
//! Subjects perceive their own events in a local sequence. Adjacent local
//! events may be declared simultaneous; messages between subjects impose
//! strict precedence. A [`UniversalOrder`] is the canonical earliest-placement
//! leveling of the resulting constraint graph. It is one consistent
//! representative, not the unique truth: unordered cross-subject pairs are
//! placed as early as the constraints allow.
//!
//! Relational distances are differences of an integer clock coordinate, so
//! antisymmetry and vanishing cycle sums hold by construction.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EventId {
    pub subject: String,
    pub index: usize,
}

impl EventId {
    pub fn new(subject: impl Into<String>, index: usize) -> Self {
        EventId { subject: subject.into(), index }
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.subject, self.index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    /// Consecutive simultaneity sets of one subject.
    Local,
    Message,
}

/// A strict precedence `from ≺ to`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub from: EventId,
    pub to: EventId,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arrow = match self.kind {
            ConstraintKind::Local => "<",
            ConstraintKind::Message => "->",
        };
        write!(f, "{} {} {}", self.from, arrow, self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub id: EventId,
    pub payload: Option<String>,
    pub present: bool,
}

#[derive(Debug, Clone, Default)]
struct Timeline {
    events: Vec<Event>,
    /// `joined[i]`: events `i` and `i + 1` share a simultaneity set.
    joined: Vec<bool>,
}

#[derive(Debug, Clone, Default)]
pub struct EventLog {
    subjects: BTreeMap<String, Timeline>,
    messages: Vec<(EventId, EventId)>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_subject(&mut self, subject: &str) {
        self.subjects.entry(subject.to_string()).or_default();
    }

    pub fn add_event(&mut self, subject: &str, payload: Option<String>, present: bool) -> EventId {
        let line = self.subjects.entry(subject.to_string()).or_default();
        let id = EventId::new(subject, line.events.len());
        if !line.events.is_empty() {
            line.joined.push(false);
        }
        line.events.push(Event { id: id.clone(), payload, present });
        id
    }

    pub fn mark_simultaneous(&mut self, a: &EventId, b: &EventId) -> Result<()> {
        self.event(a)?;
        self.event(b)?;
        if a.subject != b.subject {
            return Err(Error::CrossSubjectSimultaneity(a.clone(), b.clone()));
        }
        let (lo, hi) = if a.index < b.index { (a.index, b.index) } else { (b.index, a.index) };
        if hi != lo + 1 {
            return Err(Error::AdjacencyViolation(a.clone(), b.clone()));
        }
        self.subjects.get_mut(&a.subject).expect("checked").joined[lo] = true;
        Ok(())
    }

    pub fn add_message(&mut self, from: &EventId, to: &EventId) -> Result<()> {
        self.event(from)?;
        self.event(to)?;
        if from.subject == to.subject {
            return Err(Error::SameSubjectMessage(from.clone(), to.clone()));
        }
        self.messages.push((from.clone(), to.clone()));
        Ok(())
    }

    pub fn event(&self, id: &EventId) -> Result<&Event> {
        self.subjects
            .get(&id.subject)
            .and_then(|l| l.events.get(id.index))
            .ok_or_else(|| Error::UnknownEvent(id.clone()))
    }

    pub fn subjects(&self) -> impl Iterator<Item = &str> {
        self.subjects.keys().map(String::as_str)
    }

    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.subjects.values().flat_map(|l| l.events.iter())
    }

    pub fn subject_events(&self, subject: &str) -> &[Event] {
        self.subjects.get(subject).map(|l| l.events.as_slice()).unwrap_or(&[])
    }

    pub fn messages(&self) -> &[(EventId, EventId)] {
        &self.messages
    }

    pub fn len(&self) -> usize {
        self.subjects.values().map(|l| l.events.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Declared simultaneous neighbor pairs `(i, i + 1)`.
    pub fn simultaneous_pairs(&self) -> Vec<(EventId, EventId)> {
        let mut out = Vec::new();
        for (s, line) in &self.subjects {
            for (i, &j) in line.joined.iter().enumerate() {
                if j {
                    out.push((EventId::new(s.as_str(), i), EventId::new(s.as_str(), i + 1)));
                }
            }
        }
        out
    }

    /// Whether `a` and `b` lie in the same declared simultaneity set.
    pub fn same_set(&self, a: &EventId, b: &EventId) -> bool {
        if a.subject != b.subject {
            return false;
        }
        let Some(line) = self.subjects.get(&a.subject) else { return false };
        let (lo, hi) = (a.index.min(b.index), a.index.max(b.index));
        hi < line.events.len() && line.joined[lo..hi].iter().all(|&j| j)
    }

    /// Whether `c` is a constraint recorded in (or implied locally by) this log.
    pub fn has_constraint(&self, c: &Constraint) -> bool {
        if self.event(&c.from).is_err() || self.event(&c.to).is_err() {
            return false;
        }
        match c.kind {
            ConstraintKind::Message => self.messages.iter().any(|(f, t)| *f == c.from && *t == c.to),
            ConstraintKind::Local => {
                c.from.subject == c.to.subject && c.from.index < c.to.index && !self.same_set(&c.from, &c.to)
            }
        }
    }

    fn groups(&self) -> Groups {
        let mut g = Groups::default();
        for (s, line) in &self.subjects {
            let mut prev: Option<usize> = None;
            for (i, ev) in line.events.iter().enumerate() {
                let starts = i == 0 || !line.joined[i - 1];
                if starts {
                    let id = g.members.len();
                    g.members.push(Vec::new());
                    if let Some(p) = prev {
                        g.edges.push((p, id, ConstraintKind::Local));
                    }
                    prev = Some(id);
                }
                let id = g.members.len() - 1;
                g.members[id].push(ev.id.clone());
                g.of.insert((s.clone(), i), id);
            }
        }
        for (f, t) in &self.messages {
            let gf = g.of[&(f.subject.clone(), f.index)];
            let gt = g.of[&(t.subject.clone(), t.index)];
            g.edges.push((gf, gt, ConstraintKind::Message));
        }
        g
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for line in self.subjects.values() {
            for (i, ev) in line.events.iter().enumerate() {
                let rec = Record::Event {
                    subject: ev.id.subject.clone(),
                    index: ev.id.index,
                    payload: ev.payload.clone(),
                    present: ev.present,
                };
                writeln!(w, "{}", serde_json::to_string(&rec)?)?;
                if i > 0 && line.joined[i - 1] {
                    let rec = Record::Simultaneous { a: EventId::new(ev.id.subject.as_str(), i - 1), b: ev.id.clone() };
                    writeln!(w, "{}", serde_json::to_string(&rec)?)?;
                }
            }
        }
        for (from, to) in &self.messages {
            let rec = Record::Message { from: from.clone(), to: to.clone() };
            writeln!(w, "{}", serde_json::to_string(&rec)?)?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut log = EventLog::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record = serde_json::from_str(&line).map_err(|e| Error::Format(format!("line {}: {e}", n + 1)))?;
            match rec {
                Record::Event { subject, index, payload, present } => {
                    let id = log.add_event(&subject, payload, present);
                    if id.index != index {
                        return Err(Error::Format(format!("line {}: expected index {} for {subject}, got {index}", n + 1, id.index)));
                    }
                }
                Record::Simultaneous { a, b } => log.mark_simultaneous(&a, &b)?,
                Record::Message { from, to } => log.add_message(&from, &to)?,
            }
        }
        Ok(log)
    }
}

/// One JSON-lines record.
#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Record {
    Event { subject: String, index: usize, payload: Option<String>, present: bool },
    Simultaneous { a: EventId, b: EventId },
    Message { from: EventId, to: EventId },
}

#[derive(Default)]
struct Groups {
    members: Vec<Vec<EventId>>,
    of: BTreeMap<(String, usize), usize>,
    edges: Vec<(usize, usize, ConstraintKind)>,
}

impl Groups {
    fn constraint(&self, from: usize, to: usize, kind: ConstraintKind, log: &EventLog) -> Constraint {
        match kind {
            ConstraintKind::Local => Constraint {
                kind,
                from: self.members[from].last().expect("nonempty group").clone(),
                to: self.members[to][0].clone(),
            },
            ConstraintKind::Message => {
                let (f, t) = log
                    .messages
                    .iter()
                    .find(|(f, t)| {
                        self.of[&(f.subject.clone(), f.index)] == from && self.of[&(t.subject.clone(), t.index)] == to
                    })
                    .expect("message edge has a message");
                Constraint { kind, from: f.clone(), to: t.clone() }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniversalOrder {
    /// Class `n` holds the events at sequential time `n`, sorted.
    pub classes: Vec<Vec<EventId>>,
    level: BTreeMap<EventId, usize>,
}

impl UniversalOrder {
    pub fn class_of(&self, id: &EventId) -> Option<usize> {
        self.level.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Checks that every event appears once and every constraint is respected.
    pub fn is_sound_for(&self, log: &EventLog) -> bool {
        if self.level.len() != log.len() || self.classes.iter().map(Vec::len).sum::<usize>() != log.len() {
            return false;
        }
        for ev in log.events() {
            let Some(l) = self.class_of(&ev.id) else { return false };
            if ev.id.index > 0 {
                let prev = EventId::new(ev.id.subject.as_str(), ev.id.index - 1);
                let lp = self.class_of(&prev).unwrap_or(usize::MAX);
                let ok = if log.same_set(&prev, &ev.id) { lp == l } else { lp < l };
                if !ok {
                    return false;
                }
            }
        }
        log.messages().iter().all(|(f, t)| self.class_of(f) < self.class_of(t))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["class", "subject", "index"])?;
        for (n, class) in self.classes.iter().enumerate() {
            for id in class {
                w.write_record([n.to_string(), id.subject.clone(), id.index.to_string()])?;
            }
        }
        csv_string(w)
    }
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

/// Longest-path leveling of the constraint graph.
pub fn universal_order(log: &EventLog) -> Result<UniversalOrder> {
    let g = log.groups();
    let n = g.members.len();
    let mut indeg = vec![0usize; n];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(f, t, _) in &g.edges {
        indeg[t] += 1;
        out[f].push(t);
    }
    let mut level = vec![0usize; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut done = 0;
    while let Some(v) = queue.pop_front() {
        done += 1;
        for &t in &out[v] {
            level[t] = level[t].max(level[v] + 1);
            indeg[t] -= 1;
            if indeg[t] == 0 {
                queue.push_back(t);
            }
        }
    }
    if done < n {
        return Err(Error::InconsistentLog(witness_cycle(log, &g, &indeg)));
    }

    let depth = level.iter().map(|l| l + 1).max().unwrap_or(0);
    let mut classes: Vec<BTreeSet<EventId>> = vec![BTreeSet::new(); depth];
    let mut by_event = BTreeMap::new();
    for (gid, members) in g.members.iter().enumerate() {
        for id in members {
            classes[level[gid]].insert(id.clone());
            by_event.insert(id.clone(), level[gid]);
        }
    }
    Ok(UniversalOrder { classes: classes.into_iter().map(|c| c.into_iter().collect()).collect(), level: by_event })
}

/// Every group left with positive in-degree after Kahn's pass has a
/// predecessor that is also left, so walking predecessors must revisit a node.
fn witness_cycle(log: &EventLog, g: &Groups, indeg: &[usize]) -> Vec<Constraint> {
    let stuck = |v: usize| indeg[v] > 0;
    let mut pred: Vec<Option<(usize, ConstraintKind)>> = vec![None; indeg.len()];
    for &(f, t, kind) in &g.edges {
        if stuck(f) && stuck(t) && pred[t].is_none() {
            pred[t] = Some((f, kind));
        }
    }
    let start = (0..indeg.len()).find(|&v| stuck(v)).expect("a cycle exists");
    let mut seen = vec![false; indeg.len()];
    let mut v = start;
    while !seen[v] {
        seen[v] = true;
        v = pred[v].expect("stuck node has a stuck predecessor").0;
    }
    // v is on the cycle; collect edges walking backwards, then reverse.
    let mut edges = Vec::new();
    let first = v;
    loop {
        let (p, kind) = pred[v].expect("on cycle");
        edges.push(g.constraint(p, v, kind, log));
        v = p;
        if v == first {
            break;
        }
    }
    edges.reverse();
    edges
}

/// Checks that `cycle` is a closed chain of log constraints.
pub fn is_valid_witness(log: &EventLog, cycle: &[Constraint]) -> bool {
    if cycle.is_empty() || !cycle.iter().all(|c| log.has_constraint(c)) {
        return false;
    }
    (0..cycle.len()).all(|i| {
        let next = &cycle[(i + 1) % cycle.len()];
        let to = &cycle[i].to;
        *to == next.from || log.same_set(to, &next.from)
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    pub clock: String,
    /// Events in class order, sorted within a class.
    pub events: Vec<EventId>,
    /// Clock coordinate per event.
    pub tau: Vec<i64>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// `t_ij = τ_j − τ_i`.
    pub fn t(&self, i: usize, j: usize) -> i64 {
        self.tau[j] - self.tau[i]
    }

    pub fn position(&self, id: &EventId) -> Option<usize> {
        self.events.iter().position(|e| e == id)
    }

    pub fn between(&self, a: &EventId, b: &EventId) -> Option<i64> {
        Some(self.t(self.position(a)?, self.position(b)?))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["event".to_string()];
        header.extend(self.events.iter().map(ToString::to_string));
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut row = vec![self.events[i].to_string()];
            row.extend((0..self.len()).map(|j| self.t(i, j).to_string()));
            w.write_record(&row)?;
        }
        csv_string(w)
    }
}

/// Clock coordinate τ = number of classes at or before an event's class that
/// contain an event of `clock_subject`.
pub fn relational_distances(log: &EventLog, order: &UniversalOrder, clock_subject: &str) -> Result<DistanceMatrix> {
    if log.subject_events(clock_subject).is_empty() {
        return Err(Error::NoClock(clock_subject.to_string()));
    }
    let mut ticks = Vec::with_capacity(order.len());
    let mut count = 0i64;
    for class in &order.classes {
        if class.iter().any(|e| e.subject == clock_subject) {
            count += 1;
        }
        ticks.push(count);
    }
    let mut events = Vec::new();
    let mut tau = Vec::new();
    for (n, class) in order.classes.iter().enumerate() {
        for id in class {
            events.push(id.clone());
            tau.push(ticks[n]);
        }
    }
    Ok(DistanceMatrix { clock: clock_subject.to_string(), events, tau })
}

/// Pairs of present-flagged events that the order places apart. Co-present
/// objects should be at zero distance; a non-empty result means the flags and
/// the constraints disagree.
pub fn presentness_conflicts(log: &EventLog, m: &DistanceMatrix) -> Vec<(EventId, EventId)> {
    let present: Vec<usize> =
        (0..m.len()).filter(|&i| log.event(&m.events[i]).map(|e| e.present).unwrap_or(false)).collect();
    let mut out = Vec::new();
    for (k, &i) in present.iter().enumerate() {
        for &j in &present[k + 1..] {
            if m.t(i, j) != 0 {
                out.push((m.events[i].clone(), m.events[j].clone()));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomLogSpec {
    pub subjects: usize,
    pub events: usize,
    pub messages: usize,
    /// Probability that an event is merged with its local predecessor.
    pub simultaneity: f64,
    /// Probability that an event carries the presentness flag.
    pub presentness: f64,
}

impl Default for RandomLogSpec {
    fn default() -> Self {
        RandomLogSpec { subjects: 4, events: 30, messages: 20, simultaneity: 0.1, presentness: 0.0 }
    }
}

/// Random acyclic log: events get hidden increasing timestamps per subject
/// (equal within simultaneity sets) and messages only run forward in hidden
/// time.
pub fn random_log<R: Rng>(rng: &mut R, spec: &RandomLogSpec) -> EventLog {
    let mut log = EventLog::new();
    let subjects = spec.subjects.max(1);
    let names: Vec<String> = (0..subjects).map(|k| format!("s{k}")).collect();
    for n in &names {
        log.add_subject(n);
    }
    let mut stamps: Vec<(EventId, u64)> = Vec::with_capacity(spec.events);
    let mut clock = vec![0u64; subjects];
    for _ in 0..spec.events {
        let k = rng.gen_range(0..subjects);
        let present = rng.gen_bool(spec.presentness.clamp(0.0, 1.0));
        let id = log.add_event(&names[k], None, present);
        let merge = id.index > 0 && rng.gen_bool(spec.simultaneity.clamp(0.0, 1.0));
        if merge {
            let prev = EventId::new(names[k].as_str(), id.index - 1);
            log.mark_simultaneous(&prev, &id).expect("adjacent same-subject events");
        } else {
            clock[k] += rng.gen_range(1..=5);
        }
        stamps.push((id, clock[k]));
    }
    let mut tries = 0;
    let mut added = 0;
    while added < spec.messages && tries < spec.messages * 20 && stamps.len() > 1 {
        tries += 1;
        let a = &stamps[rng.gen_range(0..stamps.len())];
        let b = &stamps[rng.gen_range(0..stamps.len())];
        if a.0.subject != b.0.subject && a.1 < b.1 {
            log.add_message(&a.0, &b.0).expect("distinct subjects");
            added += 1;
        }
    }
    log
}
