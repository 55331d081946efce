//! Fixed-step classical Runge–Kutta.

use alloc::vec;
use alloc::vec::Vec;

/// One RK4 step of `ds/dt = f(s)` (autonomous) with step `dt`, which may be
/// negative for backward integration.
///
/// `f` writes the derivative of its first argument into the second.
pub fn rk4_step<F, E>(f: &mut F, state: &[f64], dt: f64) -> Result<Vec<f64>, E>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<(), E> + ?Sized,
{
    let n = state.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];

    f(state, &mut k1)?;
    for i in 0..n {
        tmp[i] = state[i] + 0.5 * dt * k1[i];
    }
    f(&tmp, &mut k2)?;
    for i in 0..n {
        tmp[i] = state[i] + 0.5 * dt * k2[i];
    }
    f(&tmp, &mut k3)?;
    for i in 0..n {
        tmp[i] = state[i] + dt * k3[i];
    }
    f(&tmp, &mut k4)?;
    Ok((0..n).map(|i| state[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_fourth_order() {
        let mut f = |s: &[f64], d: &mut [f64]| -> Result<(), ()> {
            d[0] = -s[0];
            Ok(())
        };
        type Rhs<'a> = dyn FnMut(&[f64], &mut [f64]) -> Result<(), ()> + 'a;
        let err_at = |dt: f64, f: &mut Rhs<'_>| {
            let steps = (1.0 / dt).round() as usize;
            let mut s = vec![1.0];
            for _ in 0..steps {
                s = rk4_step(f, &s, dt).unwrap();
            }
            (s[0] - libm::exp(-1.0)).abs()
        };
        let e1 = err_at(0.1, &mut f);
        let e2 = err_at(0.05, &mut f);
        let order = libm::log2(e1 / e2);
        assert!((order - 4.0).abs() < 0.2, "observed order {order}");
    }

    #[test]
    fn negative_step_runs_backward() {
        let mut f = |s: &[f64], d: &mut [f64]| -> Result<(), ()> {
            d[0] = s[0];
            Ok(())
        };
        let mut s = vec![1.0];
        for _ in 0..1000 {
            s = rk4_step(&mut f, &s, -1e-3).unwrap();
        }
        assert!((s[0] - libm::exp(-1.0)).abs() < 1e-12);
    }
}
