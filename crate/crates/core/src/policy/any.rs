use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EntityPolicy, EntityPolicyConfig, MlpPolicy, MlpPolicyConfig};
use crate::error::{Error, Result};
use crate::grad::{checkpoint, ParamStore, Real};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyFamily {
    Entity,
    Mlp,
}

impl PolicyFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyFamily::Entity => "entity",
            PolicyFamily::Mlp => "mlp",
        }
    }
}

impl std::str::FromStr for PolicyFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entity" => Ok(PolicyFamily::Entity),
            "mlp" => Ok(PolicyFamily::Mlp),
            other => Err(Error::Config(format!("unknown policy family {other:?}"))),
        }
    }
}

/// Policy description stored in a checkpoint manifest's metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyManifest {
    pub family: PolicyFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity: Option<EntityPolicyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mlp: Option<MlpPolicyConfig>,
    /// Input size of an MLP; absent for entity policies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub construction_nodes: Option<usize>,
    /// Node count of the training networks.
    pub train_nodes: usize,
    #[serde(default)]
    pub env_steps: u64,
}

#[derive(Debug, Clone)]
pub enum AnyPolicy<T: Real> {
    Entity(EntityPolicy<T>),
    Mlp(MlpPolicy<T>),
}

impl<T: Real> AnyPolicy<T> {
    pub fn build(
        family: PolicyFamily,
        entity: &EntityPolicyConfig,
        mlp: &MlpPolicyConfig,
        nodes: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        Ok(match family {
            PolicyFamily::Entity => AnyPolicy::Entity(EntityPolicy::new(entity.clone(), rng)?),
            PolicyFamily::Mlp => AnyPolicy::Mlp(MlpPolicy::new(mlp.clone(), nodes, rng)?),
        })
    }

    pub fn family(&self) -> PolicyFamily {
        match self {
            AnyPolicy::Entity(_) => PolicyFamily::Entity,
            AnyPolicy::Mlp(_) => PolicyFamily::Mlp,
        }
    }

    pub fn params(&self) -> &ParamStore<T> {
        match self {
            AnyPolicy::Entity(p) => p.params(),
            AnyPolicy::Mlp(p) => super::ActorCritic::params(p),
        }
    }

    /// Whether the policy can act on networks with `nodes` nodes.
    pub fn supports_nodes(&self, nodes: usize) -> bool {
        match self {
            AnyPolicy::Entity(_) => nodes >= 1,
            AnyPolicy::Mlp(p) => p.node_count() == nodes,
        }
    }

    pub fn manifest(&self, train_nodes: usize, env_steps: u64) -> PolicyManifest {
        match self {
            AnyPolicy::Entity(p) => PolicyManifest {
                family: PolicyFamily::Entity,
                entity: Some(p.config().clone()),
                mlp: None,
                construction_nodes: None,
                train_nodes,
                env_steps,
            },
            AnyPolicy::Mlp(p) => PolicyManifest {
                family: PolicyFamily::Mlp,
                entity: None,
                mlp: Some(p.config().clone()),
                construction_nodes: Some(p.node_count()),
                train_nodes,
                env_steps,
            },
        }
    }

    pub fn save(&self, path: &Path, train_nodes: usize, env_steps: u64) -> Result<()> {
        let meta = serde_json::to_value(self.manifest(train_nodes, env_steps))?;
        checkpoint::save(path, self.params(), meta)
    }

    pub fn load(path: &Path) -> Result<(Self, PolicyManifest)> {
        let (store, manifest) = checkpoint::load::<T>(path)?;
        let meta: PolicyManifest = serde_json::from_value(manifest.metadata)
            .map_err(|e| Error::Format(format!("policy manifest: {e}")))?;
        let policy = match meta.family {
            PolicyFamily::Entity => {
                let cfg = meta.entity.clone().unwrap_or_default();
                AnyPolicy::Entity(EntityPolicy::from_params(cfg, &store)?)
            }
            PolicyFamily::Mlp => {
                let cfg = meta.mlp.clone().unwrap_or_default();
                let n = meta
                    .construction_nodes
                    .ok_or_else(|| Error::Format("mlp checkpoint lacks construction_nodes".into()))?;
                AnyPolicy::Mlp(MlpPolicy::from_params(cfg, n, &store)?)
            }
        };
        Ok((policy, meta))
    }
}
