use crate::error::RlError;

/// Σ γ^t r_t
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc)
}

/// Generalized advantage estimation. `bootstrap_value` stands in for
/// V(s_T) after the last step and is masked out when that step is terminal.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    bootstrap_value: f64,
    dones: &[bool],
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>), RlError> {
    let n = rewards.len();
    if values.len() != n || dones.len() != n {
        return Err(RlError::LengthMismatch(format!(
            "{} rewards, {} values, {} dones",
            n,
            values.len(),
            dones.len()
        )));
    }
    let mut adv = vec![0.0; n];
    let mut next_value = bootstrap_value;
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        adv[t] = next_adv;
        next_value = values[t];
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, returns))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discounted_examples() {
        assert_eq!(discounted_return(&[1.0], 0.5), 1.0);
        assert_eq!(discounted_return(&[1.0, 1.0, 1.0], 0.0), 1.0);
        assert!((discounted_return(&[1.0, 1.0], 0.99) - 1.99).abs() < 1e-12);
    }

    #[test]
    fn gae_examples() {
        let (a, r) = compute_gae(&[1.0], &[0.0], 0.0, &[true], 0.99, 0.95).unwrap();
        assert_eq!((a, r), (vec![1.0], vec![1.0]));
        let (a, _) = compute_gae(&[1.0, 1.0], &[0.0, 0.0], 0.0, &[false, false], 1.0, 1.0).unwrap();
        assert_eq!(a, vec![2.0, 1.0]);
        let (a, _) = compute_gae(&[1.0, 1.0], &[0.0, 0.0], 0.0, &[false, false], 0.99, 0.95).unwrap();
        assert!((a[0] - 1.9405).abs() < 1e-12 && a[1] == 1.0);
    }

    #[test]
    fn bootstrap_used_unless_terminal() {
        let (a, _) = compute_gae(&[0.0], &[0.0], 10.0, &[false], 0.5, 1.0).unwrap();
        assert_eq!(a, vec![5.0]);
        let (a, _) = compute_gae(&[0.0], &[0.0], 10.0, &[true], 0.5, 1.0).unwrap();
        assert_eq!(a, vec![0.0]);
    }

    #[test]
    fn length_mismatch() {
        assert!(compute_gae(&[1.0], &[], 0.0, &[false], 0.9, 0.9).is_err());
    }
}
