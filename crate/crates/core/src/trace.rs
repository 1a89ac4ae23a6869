//! Weak-trace criterion: an arm counts as visited when the weak value of its
//! projector is nonzero, and the visited arms are checked for a connected
//! route from the source to the detector.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::evolution::{Node, Scenario};
use crate::exec::Execution;
use crate::qstate::Amplitude;
use crate::weakmeas::slot_weak_values;

/// Separates numerical zeros (~1e-12) from physical weak values (≥ 0.35 in
/// the reference interferometers).
pub const DEFAULT_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Presence {
    pub arm: String,
    pub boundary: usize,
    pub weak_value: Amplitude,
    pub magnitude: f64,
    pub present: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PresenceMap {
    pub threshold: f64,
    pub entries: Vec<Presence>,
}

impl PresenceMap {
    /// Builds the map from `(arm, boundary, weak value)` triples; present iff
    /// `|value| > threshold`.
    pub fn from_values<I>(threshold: f64, values: I) -> Result<PresenceMap>
    where
        I: IntoIterator<Item = (String, usize, Amplitude)>,
    {
        if !(threshold >= 0.0 && threshold.is_finite()) {
            return Err(Error::InvalidThreshold(threshold));
        }
        let entries = values
            .into_iter()
            .map(|(arm, boundary, weak_value)| {
                let magnitude = weak_value.norm();
                Presence {
                    arm,
                    boundary,
                    weak_value,
                    magnitude,
                    present: magnitude > threshold,
                }
            })
            .collect();
        Ok(PresenceMap { threshold, entries })
    }

    pub fn present_arms(&self) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|e| e.present)
            .map(|e| e.arm.as_str())
            .collect()
    }

    pub fn absent_arms(&self) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|e| !e.present)
            .map(|e| e.arm.as_str())
            .collect()
    }

    pub fn get(&self, arm: &str) -> Option<&Presence> {
        self.entries.iter().find(|e| e.arm == arm)
    }
}

/// Weak value of every canonical slot, classified against `threshold`.
pub fn presence_map(scenario: &Scenario, threshold: f64) -> Result<PresenceMap> {
    let values = slot_weak_values(scenario, Execution::default())?;
    PresenceMap::from_values(
        threshold,
        values
            .into_iter()
            .map(|wv| (wv.arm.unwrap_or_default(), wv.boundary, wv.value)),
    )
}

/// Connected set of present arms, together with the sentinels it reaches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub arms: Vec<String>,
    pub source: bool,
    pub detector: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContinuityVerdict {
    pub continuous: bool,
    pub components: Vec<Component>,
    /// Absent arms that sit between two otherwise disconnected parts of the
    /// trace (including the source and detector).
    pub gaps: Vec<String>,
}

/// Breadth-first connectivity over present arms plus the SOURCE and
/// DETECTOR sentinels. Continuous iff one component holds both sentinels
/// and every present arm.
pub fn continuity_check(presence: &PresenceMap, adjacency: &[(Node, Node)]) -> Result<ContinuityVerdict> {
    let mut graph: BTreeMap<&Node, BTreeSet<&Node>> = BTreeMap::new();
    for (a, b) in adjacency {
        graph.entry(a).or_default().insert(b);
        graph.entry(b).or_default().insert(a);
    }
    for e in &presence.entries {
        if !graph.contains_key(&Node::Arm(e.arm.clone())) {
            return Err(Error::AdjacencyMissing(e.arm.clone()));
        }
    }

    let present: BTreeSet<Node> = presence
        .present_arms()
        .into_iter()
        .map(|a| Node::Arm(a.to_string()))
        .collect();
    let active = |n: &Node| matches!(n, Node::Source | Node::Detector) || present.contains(n);

    // Label connected components of the active subgraph.
    let mut label: BTreeMap<Node, usize> = BTreeMap::new();
    let mut seeds: Vec<Node> = vec![Node::Source];
    seeds.extend(present.iter().cloned());
    seeds.push(Node::Detector);
    let mut n_comp = 0;
    for seed in seeds {
        if label.contains_key(&seed) {
            continue;
        }
        label.insert(seed.clone(), n_comp);
        let mut queue = VecDeque::from([seed]);
        while let Some(n) = queue.pop_front() {
            for &m in graph.get(&n).into_iter().flatten() {
                if active(m) && !label.contains_key(m) {
                    label.insert(m.clone(), n_comp);
                    queue.push_back(m.clone());
                }
            }
        }
        n_comp += 1;
    }

    let mut components: Vec<Component> = Vec::new();
    let mut comp_of_label: BTreeMap<usize, usize> = BTreeMap::new();
    for e in presence.entries.iter().filter(|e| e.present) {
        let l = label[&Node::Arm(e.arm.clone())];
        let idx = *comp_of_label.entry(l).or_insert_with(|| {
            components.push(Component {
                arms: Vec::new(),
                source: label[&Node::Source] == l,
                detector: label[&Node::Detector] == l,
            });
            components.len() - 1
        });
        components[idx].arms.push(e.arm.clone());
    }

    // Clusters of inactive nodes that touch two or more active components
    // bridge a break in the trace.
    let mut bridging: BTreeSet<&Node> = BTreeSet::new();
    let mut seen: BTreeSet<&Node> = BTreeSet::new();
    for &start in graph.keys() {
        if active(start) || seen.contains(start) {
            continue;
        }
        let mut cluster = vec![start];
        let mut touched = BTreeSet::new();
        seen.insert(start);
        let mut queue = VecDeque::from([start]);
        while let Some(n) = queue.pop_front() {
            for &m in &graph[n] {
                if active(m) {
                    touched.insert(label[m]);
                } else if seen.insert(m) {
                    cluster.push(m);
                    queue.push_back(m);
                }
            }
        }
        if touched.len() >= 2 {
            bridging.extend(cluster);
        }
    }
    let gaps = presence
        .entries
        .iter()
        .filter(|e| !e.present && bridging.contains(&Node::Arm(e.arm.clone())))
        .map(|e| e.arm.clone())
        .collect();

    let continuous = components.len() == 1 && components[0].source && components[0].detector;
    Ok(ContinuityVerdict {
        continuous,
        components,
        gaps,
    })
}

/// Presence map and continuity verdict of a scenario at one threshold.
pub fn trace_scenario(scenario: &Scenario, threshold: f64) -> Result<(PresenceMap, ContinuityVerdict)> {
    let map = presence_map(scenario, threshold)?;
    let verdict = continuity_check(&map, scenario.adjacency())?;
    Ok((map, verdict))
}
