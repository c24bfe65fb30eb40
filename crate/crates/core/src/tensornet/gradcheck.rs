use super::params::{Grads, ParamStore};
use crate::error::Result;
use crate::scalar::Scalar;

/// Central finite differences against analytic gradients.
///
/// `loss` evaluates the objective and its gradients at the given store. Every
/// entry of every trainable parameter is perturbed by `±eps`. Returns
/// `‖analytic − numeric‖ / max(‖analytic‖ + ‖numeric‖, 1e-8)` over all
/// entries jointly.
pub fn gradient_check<T, F>(store: &ParamStore<T>, eps: f64, mut loss: F) -> Result<f64>
where
    T: Scalar,
    F: FnMut(&ParamStore<T>) -> Result<(T, Grads<T>)>,
{
    let (_, analytic) = loss(store)?;
    let mut work = store.clone();
    let (mut diff, mut an, mut nu) = (0.0, 0.0, 0.0);
    for (id, g) in analytic.iter() {
        for k in 0..g.len() {
            let orig = work.value(id).data()[k];
            work.value_mut(id).data_mut()[k] = orig + T::lit(eps);
            let plus = loss(&work)?.0.as_f64();
            work.value_mut(id).data_mut()[k] = orig - T::lit(eps);
            let minus = loss(&work)?.0.as_f64();
            work.value_mut(id).data_mut()[k] = orig;
            let numeric = (plus - minus) / (2.0 * eps);
            let a = g.data()[k].as_f64();
            diff += (a - numeric).powi(2);
            an += a * a;
            nu += numeric * numeric;
        }
    }
    Ok(diff.sqrt() / (an.sqrt() + nu.sqrt()).max(1e-8))
}
