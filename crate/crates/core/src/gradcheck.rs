//! Central finite-difference verification of tape gradients.

use crate::autodiff::{ParamId, ParamStore, Tape, Var};
use crate::error::Result;
use crate::tensor::Tensor;

pub const DEFAULT_EPS: f64 = 1e-5;

/// Step for [`Stencil::Richardson`], where truncation error is fourth order.
pub const RICHARDSON_EPS: f64 = 1e-2;

/// Finite-difference formula used as the numeric oracle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Stencil {
    /// `(f(θ+ε) − f(θ−ε)) / 2ε`.
    #[default]
    Central,
    /// `(4·D(ε/2) − D(ε)) / 3` over central differences `D`, cancelling the
    /// `ε²` term. Resolves gradients near `1e-8` that the plain stencil
    /// cannot separate from rounding noise.
    Richardson,
}

/// Relative error with denominator `max(|a|, |b|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(1e-8);
    (analytic - numeric).abs() / denom
}

/// Outcome of a gradient check over a whole parameter store.
#[derive(Clone, Debug)]
pub struct GradCheckReport {
    /// `(parameter name, max relative error over its coordinates)`.
    pub per_param: Vec<(String, f64)>,
    pub max_rel_error: f64,
}

impl GradCheckReport {
    pub fn worst(&self) -> Option<&(String, f64)> {
        self.per_param
            .iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Compares [`Tape::backward`] against central differences
/// `(f(θ+εeᵢ) − f(θ−εeᵢ)) / 2ε` for every coordinate of every parameter.
///
/// `f` builds the scalar objective on a fresh tape over the given store.
pub fn check_store<F>(store: &ParamStore, f: F, eps: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape) -> Result<Var>,
{
    check_params(store, &store.ids().collect::<Vec<_>>(), f, eps)
}

/// As [`check_store`] with an explicit [`Stencil`].
pub fn check_store_with<F>(store: &ParamStore, f: F, eps: f64, stencil: Stencil) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape) -> Result<Var>,
{
    check_params_with(store, &store.ids().collect::<Vec<_>>(), f, eps, stencil)
}

/// As [`check_store`] but only perturbs the listed parameters.
pub fn check_params<F>(
    store: &ParamStore,
    ids: &[ParamId],
    f: F,
    eps: f64,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape) -> Result<Var>,
{
    check_params_with(store, ids, f, eps, Stencil::Central)
}

/// As [`check_params`] with an explicit [`Stencil`].
pub fn check_params_with<F>(
    store: &ParamStore,
    ids: &[ParamId],
    f: F,
    eps: f64,
    stencil: Stencil,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape) -> Result<Var>,
{
    let analytic = {
        let mut tape = Tape::new(store).with_finite_check(true);
        let out = f(&mut tape)?;
        tape.backward(out)?
    };
    let eval = |s: &ParamStore| -> Result<f64> {
        let mut tape = Tape::new(s);
        let out = f(&mut tape)?;
        Ok(tape.scalar(out))
    };

    let mut work = store.clone();
    let mut per_param = Vec::with_capacity(ids.len());
    let mut max_rel_error: f64 = 0.0;
    for &id in ids {
        let mut worst: f64 = 0.0;
        for i in 0..store.get(id).len() {
            let orig = store.get(id).data()[i];
            let mut central = |h: f64| -> Result<f64> {
                work.get_mut(id).data_mut()[i] = orig + h;
                let plus = eval(&work)?;
                work.get_mut(id).data_mut()[i] = orig - h;
                let minus = eval(&work)?;
                work.get_mut(id).data_mut()[i] = orig;
                Ok((plus - minus) / (2.0 * h))
            };
            let numeric = match stencil {
                Stencil::Central => central(eps)?,
                Stencil::Richardson => {
                    let coarse = central(eps)?;
                    (4.0 * central(eps / 2.0)? - coarse) / 3.0
                }
            };
            let err = relative_error(analytic.get(id).data()[i], numeric);
            worst = worst.max(err);
        }
        max_rel_error = max_rel_error.max(worst);
        per_param.push((store.name(id).to_string(), worst));
    }
    Ok(GradCheckReport {
        per_param,
        max_rel_error,
    })
}

/// Gradient check of a scalar function of a single tensor `θ`; returns the
/// max relative error between backprop and central differences.
pub fn finite_difference_check<F>(f: F, theta: &Tensor, eps: f64) -> Result<f64>
where
    F: Fn(&mut Tape, Var) -> Result<Var>,
{
    let mut store = ParamStore::new();
    let id = store.add("theta", theta.clone())?;
    let report = check_store(
        &store,
        |tape| {
            let x = tape.param(id);
            f(tape, x)
        },
        eps,
    )?;
    Ok(report.max_rel_error)
}
