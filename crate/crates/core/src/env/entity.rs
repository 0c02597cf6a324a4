use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::sim::{BlueAction, BlueActionKind, GameState};

pub const NODE_ENTITY: &str = "node";

/// Per-type entity feature lists plus the last reward and done flag.
///
/// Node `i` sits at list position `i` with features `[vulnerability, compromised]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityObservation {
    pub entities: BTreeMap<String, Vec<Vec<f64>>>,
    pub reward: f64,
    pub done: bool,
}

impl EntityObservation {
    pub fn nodes(&self) -> &[Vec<f64>] {
        self.entities.get(NODE_ENTITY).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn node_count(&self) -> usize {
        self.nodes().len()
    }

    pub fn from_node_features(features: Vec<Vec<f64>>) -> Self {
        Self {
            entities: BTreeMap::from([(NODE_ENTITY.to_string(), features)]),
            reward: 0.0,
            done: false,
        }
    }
}

pub fn entity_observe(state: &GameState, reward: f64, done: bool) -> EntityObservation {
    let features = state
        .nodes
        .iter()
        .map(|n| vec![n.vulnerability, if n.compromised { 1.0 } else { 0.0 }])
        .collect();
    EntityObservation {
        reward,
        done,
        ..EntityObservation::from_node_features(features)
    }
}

/// Description of the composite action space: a global categorical head
/// over action types and a select-entity head from the defender onto nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSpaceSpec {
    pub type_labels: Vec<&'static str>,
    pub select_actor: &'static str,
    pub select_actee: &'static str,
}

impl Default for ActionSpaceSpec {
    fn default() -> Self {
        Self {
            type_labels: BlueActionKind::ALL.iter().map(|k| k.label()).collect(),
            select_actor: "defender",
            select_actee: NODE_ENTITY,
        }
    }
}

pub fn compose_entity_action(type_choice: usize, node_choice: usize, node_count: usize) -> Result<BlueAction> {
    let kind = *BlueActionKind::ALL
        .get(type_choice)
        .ok_or_else(|| Error::invalid(format!("action type index {type_choice} out of range")))?;
    if node_choice >= node_count {
        return Err(Error::invalid(format!(
            "node {node_choice} out of range for {node_count} nodes"
        )));
    }
    Ok(BlueAction {
        kind,
        target: node_choice,
    })
}
