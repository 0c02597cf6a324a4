use crate::error::{Error, Result};
use crate::sim::{BlueAction, BlueActionKind, GameState};

/// `[v_0, c_0, v_1, c_1, ...]`.
pub fn flat_observe(state: &GameState) -> Vec<f64> {
    state
        .nodes
        .iter()
        .flat_map(|n| [n.vulnerability, if n.compromised { 1.0 } else { 0.0 }])
        .collect()
}

/// Type-major layout: indices `0..n` reduce, `n..2n` restore.
pub fn decode_flat_action(index: usize, node_count: usize) -> Result<BlueAction> {
    if index >= 2 * node_count {
        return Err(Error::invalid(format!(
            "flat action {index} out of range for {node_count} nodes"
        )));
    }
    let kind = if index < node_count {
        BlueActionKind::ReduceVulnerability
    } else {
        BlueActionKind::RestoreNode
    };
    Ok(BlueAction {
        kind,
        target: index % node_count,
    })
}

pub fn encode_flat_action(action: BlueAction, node_count: usize) -> Result<usize> {
    if action.target >= node_count {
        return Err(Error::invalid("target out of range"));
    }
    Ok(match action.kind {
        BlueActionKind::ReduceVulnerability => action.target,
        BlueActionKind::RestoreNode => node_count + action.target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::entity_observe;
    use crate::netgen::Topology;
    use crate::sim::GameState;

    #[test]
    fn layout_matches_entity_view() {
        let mut s = GameState::with_vulnerabilities(Topology::empty(10).unwrap(), &[0.4; 10]).unwrap();
        s.nodes[3].compromised = true;
        s.nodes[3].vulnerability = 0.01;
        let flat = flat_observe(&s);
        assert_eq!(flat.len(), 20);
        assert_eq!((flat[6], flat[7]), (0.01, 1.0));
        let ent = entity_observe(&s, 0.0, false);
        for (i, row) in ent.nodes().iter().enumerate() {
            assert_eq!(&flat[2 * i..2 * i + 2], row.as_slice());
        }
    }

    #[test]
    fn permutation_changes_flat_vector() {
        let vulns: Vec<f64> = (0..4).map(|i| 0.2 + 0.1 * i as f64).collect();
        let topo = Topology::from_edges(4, [(0, 1), (1, 2), (2, 3)], [0]).unwrap();
        let a = GameState::with_vulnerabilities(topo.clone(), &vulns).unwrap();
        let perm = [2, 0, 3, 1];
        let mut pv = vec![0.0; 4];
        for (i, &p) in perm.iter().enumerate() {
            pv[p] = vulns[i];
        }
        let b = GameState::with_vulnerabilities(topo.permuted(&perm).unwrap(), &pv).unwrap();
        assert_ne!(flat_observe(&a), flat_observe(&b));
    }

    #[test]
    fn decode_examples() {
        assert_eq!(
            decode_flat_action(0, 10).unwrap(),
            BlueAction {
                kind: BlueActionKind::ReduceVulnerability,
                target: 0
            }
        );
        assert_eq!(
            decode_flat_action(13, 10).unwrap(),
            BlueAction {
                kind: BlueActionKind::RestoreNode,
                target: 3
            }
        );
        assert!(decode_flat_action(20, 10).is_err());
    }

    #[test]
    fn decode_is_bijective() {
        for n in 1..15 {
            let mut seen = std::collections::HashSet::new();
            for i in 0..2 * n {
                let a = decode_flat_action(i, n).unwrap();
                assert_eq!(encode_flat_action(a, n).unwrap(), i);
                assert!(seen.insert(a));
            }
        }
    }
}
