/// n-step discounted returns with bootstrapping.
///
/// For step `t` the horizon is `h = min(n, len − t)`, cut short after a
/// terminal step. The return is `Σ_{i<h} γ^i r_{t+i} + γ^h V(s_{t+h})`, where
/// the bootstrap is `values[t+h]` inside the trajectory, `bootstrap` just past
/// its end, and 0 after a terminal step.
pub fn n_step_returns(
    rewards: &[f64],
    terminals: &[bool],
    values: &[f64],
    bootstrap: f64,
    gamma: f64,
    n: usize,
) -> Vec<f64> {
    let len = rewards.len();
    (0..len)
        .map(|t| {
            let (mut g, mut disc) = (0.0, 1.0);
            let mut h = 0;
            while h < n && t + h < len {
                g += disc * rewards[t + h];
                disc *= gamma;
                h += 1;
                if terminals[t + h - 1] {
                    return g;
                }
            }
            let boot = if t + h < len { values[t + h] } else { bootstrap };
            g + disc * boot
        })
        .collect()
}

/// `A_t = R_t − V(s_t)`.
pub fn compute_advantages(
    rewards: &[f64],
    terminals: &[bool],
    values: &[f64],
    bootstrap: f64,
    gamma: f64,
    n: usize,
) -> Vec<f64> {
    n_step_returns(rewards, terminals, values, bootstrap, gamma, n)
        .into_iter()
        .zip(values)
        .map(|(r, v)| r - v)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_zero_is_one_step() {
        let a = compute_advantages(&[1.0, 2.0], &[false, false], &[0.5, 0.25], 9.0, 0.0, 5);
        assert_eq!(a, vec![0.5, 1.75]);
    }

    #[test]
    fn one_step_bootstrap() {
        // r=1, γ=0.9, V(s')=2, V(s)=1
        let a = compute_advantages(&[1.0], &[false], &[1.0], 2.0, 0.9, 1);
        assert!((a[0] - 1.8).abs() < 1e-12);
    }

    #[test]
    fn terminal_stops_bootstrap() {
        let a = compute_advantages(&[3.0, 100.0], &[true, false], &[1.0, 7.0], 50.0, 0.9, 10);
        assert_eq!(a[0], 2.0);
    }

    #[test]
    fn n_limits_horizon_inside_trajectory() {
        let r = n_step_returns(&[1.0, 1.0, 1.0], &[false; 3], &[10.0, 20.0, 30.0], 40.0, 0.5, 1);
        assert_eq!(r, vec![1.0 + 0.5 * 20.0, 1.0 + 0.5 * 30.0, 1.0 + 0.5 * 40.0]);
    }
}
