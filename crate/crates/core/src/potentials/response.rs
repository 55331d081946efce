//! Thermodynamic readings of first and second derivatives.
//!
//! In the entropy representation `S(U, V)` the conjugate variables are
//! `y₁ = 1/T` and `y₂ = P/T`; in the Helmholtz representation `F = −A(V)`
//! at fixed `T` the conjugate variable is the pressure.

use super::Potential;
use crate::error::Result;

/// `T = 1/(∂S/∂U)` for an entropy `S(U, V, …)` with `U` as first argument.
pub fn temperature_from_entropy(s: &Potential, x: &[f64]) -> Result<f64> {
    Ok(1.0 / s.gradient(x)?[0])
}

/// `P/T = ∂S/∂V` for an entropy `S(U, V)`.
pub fn pressure_over_temperature(s: &Potential, x: &[f64]) -> Result<f64> {
    Ok(s.gradient(x)?[1])
}

/// Heat capacity at constant `V` from an entropy `S(U, V, …)`:
/// `C = dU/dT = −(∂S/∂U)² / (∂²S/∂U²)`.
pub fn heat_capacity_from_entropy(s: &Potential, x: &[f64]) -> Result<f64> {
    let y1 = s.gradient(x)?[0];
    let h11 = s.hessian(x)?[(0, 0)];
    Ok(-(y1 * y1) / h11)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::ideal_gas_entropy;

    #[test]
    fn ideal_gas_readings() {
        let s = ideal_gas_entropy(1.0, 1.5).unwrap();
        // U = cRT
        assert_eq!(temperature_from_entropy(&s, &[3.0, 1.0]).unwrap(), 2.0);
        assert_eq!(pressure_over_temperature(&s, &[1.0, 4.0]).unwrap(), 0.25);
        assert_eq!(heat_capacity_from_entropy(&s, &[2.0, 1.0]).unwrap(), 1.5);
    }
}
