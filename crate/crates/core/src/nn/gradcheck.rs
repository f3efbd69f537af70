//! Central finite-difference gradient checking.

use super::{ParamStore, Tensor};
use crate::Result;

/// Relative error with a small floor on the denominator so that
/// near-zero gradients compare on an absolute scale.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Largest relative error between `analytic` and central differences of
/// `loss` over every element of every parameter in `store`.
pub fn check_params<F>(
    store: &mut ParamStore<f64>,
    analytic: &[(super::ParamId, Tensor<f64>)],
    h: f64,
    loss: F,
) -> Result<f64>
where
    F: Fn(&ParamStore<f64>) -> Result<f64>,
{
    let mut worst: f64 = 0.0;
    for (id, grad) in analytic {
        for i in 0..grad.len() {
            let orig = store.value(*id).data()[i];
            store.value_mut(*id).data_mut()[i] = orig + h;
            let up = loss(store)?;
            store.value_mut(*id).data_mut()[i] = orig - h;
            let down = loss(store)?;
            store.value_mut(*id).data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            worst = worst.max(relative_error(grad.data()[i], numeric));
        }
    }
    Ok(worst)
}

/// Largest relative error for the gradient with respect to a plain input.
pub fn check_input<F>(input: &Tensor<f64>, analytic: &Tensor<f64>, h: f64, loss: F) -> Result<f64>
where
    F: Fn(&Tensor<f64>) -> Result<f64>,
{
    let mut worst: f64 = 0.0;
    let mut x = input.clone();
    for i in 0..x.len() {
        let orig = x.data()[i];
        x.data_mut()[i] = orig + h;
        let up = loss(&x)?;
        x.data_mut()[i] = orig - h;
        let down = loss(&x)?;
        x.data_mut()[i] = orig;
        worst = worst.max(relative_error(analytic.data()[i], (up - down) / (2.0 * h)));
    }
    Ok(worst)
}
