use crate::env::NetworkEnv;
use crate::error::Result;
use crate::grad::Real;
use crate::policy::ActorCritic;
use crate::rng::Rng;

/// Plays one episode in every environment, batching the policy across all
/// of them, and returns each episode's total reward. Environments are reset
/// afterwards, so a second call plays their next episodes.
pub fn play_episodes<T: Real, P: ActorCritic<T>>(policy: &P, envs: &mut [NetworkEnv], rng: &mut Rng) -> Result<Vec<f64>> {
    let mut totals = vec![0.0; envs.len()];
    let mut active: Vec<usize> = (0..envs.len()).collect();
    while !active.is_empty() {
        let obs: Vec<P::Obs> = active.iter().map(|&i| policy.observe(&envs[i])).collect();
        let refs: Vec<&P::Obs> = obs.iter().collect();
        let decisions = policy.act(&refs, rng)?;
        let mut still = Vec::with_capacity(active.len());
        for ((&i, d), o) in active.iter().zip(&decisions).zip(&obs) {
            let r = envs[i].step(policy.to_blue(d.action, o)?)?;
            totals[i] += r.reward;
            if r.done {
                envs[i].reset()?;
            } else {
                still.push(i);
            }
        }
        active = still;
    }
    Ok(totals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvConfig, RegimeMode};
    use crate::policy::{MlpPolicy, MlpPolicyConfig};
    use crate::rng::{stream, Purpose};

    #[test]
    fn totals_bounded_and_envs_advance() {
        let p = MlpPolicy::<f32>::new(MlpPolicyConfig::default(), 10, &mut stream(0, Purpose::PolicyInit, 0, 0)).unwrap();
        let cfg = EnvConfig::new(RegimeMode::Random, 10, 1);
        let mut envs: Vec<_> = (0..5).map(|i| NetworkEnv::new(cfg.clone(), i).unwrap()).collect();
        let r = play_episodes(&p, &mut envs, &mut stream(0, Purpose::Evaluation, 0, 0)).unwrap();
        assert_eq!(r.len(), 5);
        assert!(r.iter().all(|x| (0.0..=100.0).contains(x)));
        assert!(envs.iter().all(|e| e.episode() == 1 && e.state().step == 0));
    }
}
