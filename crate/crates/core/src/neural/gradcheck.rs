//! Central finite-difference verification of analytic gradients.

use rand::seq::index::sample;
use rand::Rng;

use super::param::Parameterized;

/// Gradients smaller than this are compared in absolute terms.
pub const GRAD_FLOOR: f64 = 1e-6;

/// A model with a deterministic scalar loss over fixed inputs.
pub trait Differentiable: Parameterized {
    /// Loss without touching gradients.
    fn loss(&mut self) -> f64;
    /// Zeroes gradients, then returns the loss and leaves its gradient in every parameter.
    fn loss_and_grad(&mut self) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoordCheck {
    pub param: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub coords: Vec<CoordCheck>,
    pub max_rel_error: f64,
}

impl GradCheckReport {
    pub fn worst(&self) -> Option<&CoordCheck> {
        self.coords.iter().max_by(|a, b| a.rel_error.total_cmp(&b.rel_error))
    }

    pub fn checked_params(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.coords.iter().map(|c| c.param.as_str()).collect();
        names.dedup();
        names
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRAD_FLOOR)
}

/// Compares analytic and central-difference gradients on `n_random`
/// coordinates drawn uniformly from all trainable parameters, plus every
/// coordinate of the parameters named in `always`. Frozen parameters report
/// an exact zero error; they have no analytic gradient by construction.
pub fn grad_check<M, R>(model: &mut M, h: f64, n_random: usize, always: &[&str], rng: &mut R) -> GradCheckReport
where
    M: Differentiable,
    R: Rng + ?Sized,
{
    model.loss_and_grad();
    let layout: Vec<(String, usize, bool)> = model
        .params()
        .iter()
        .map(|p| (p.name.clone(), p.len(), p.trainable))
        .collect();
    let analytic: Vec<Vec<f64>> = model.params().iter().map(|p| p.grad.clone()).collect();

    let mut chosen: Vec<(usize, usize)> = Vec::new();
    for (pi, (name, len, _)) in layout.iter().enumerate() {
        if always.contains(&name.as_str()) {
            chosen.extend((0..*len).map(|i| (pi, i)));
        }
    }
    let trainable: Vec<(usize, usize)> = layout
        .iter()
        .enumerate()
        .filter(|(_, (_, _, t))| *t)
        .flat_map(|(pi, (_, len, _))| (0..*len).map(move |i| (pi, i)))
        .collect();
    let n = n_random.min(trainable.len());
    chosen.extend(sample(rng, trainable.len(), n).into_iter().map(|k| trainable[k]));
    chosen.sort_unstable();
    chosen.dedup();

    let mut coords = Vec::with_capacity(chosen.len());
    for (pi, i) in chosen {
        let (name, _, trainable) = &layout[pi];
        if !trainable {
            coords.push(CoordCheck {
                param: name.clone(),
                index: i,
                analytic: 0.0,
                numeric: 0.0,
                rel_error: 0.0,
            });
            continue;
        }
        let original = model.params()[pi].value[i];
        model.params_mut()[pi].value[i] = original + h;
        let up = model.loss();
        model.params_mut()[pi].value[i] = original - h;
        let down = model.loss();
        model.params_mut()[pi].value[i] = original;
        let numeric = (up - down) / (2.0 * h);
        let a = analytic[pi][i];
        coords.push(CoordCheck {
            param: name.clone(),
            index: i,
            analytic: a,
            numeric,
            rel_error: relative_error(a, numeric),
        });
    }
    let max_rel_error = coords.iter().map(|c| c.rel_error).fold(0.0, f64::max);
    GradCheckReport { coords, max_rel_error }
}
