/// Generalised advantage estimation over `steps × envs` arrays stored
/// step-major (`index = t * envs + e`). Returns `(advantages, returns)`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: &[f64],
    envs: usize,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let steps = rewards.len() / envs.max(1);
    let mut adv = vec![0.0; rewards.len()];
    for e in 0..envs {
        let mut next_adv = 0.0;
        for t in (0..steps).rev() {
            let i = t * envs + e;
            let next_value = if t + 1 == steps { bootstrap[e] } else { values[i + envs] };
            let live = if dones[i] { 0.0 } else { 1.0 };
            let delta = rewards[i] + gamma * next_value * live - values[i];
            next_adv = delta + gamma * lambda * live * next_adv;
            adv[i] = next_adv;
        }
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}
