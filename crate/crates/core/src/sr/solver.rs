use super::objective::Problem;
use crate::error::Result;
use crate::image::ImageGrid;

/// Final estimate in sample units, and the objective (working units) after each iterate:
/// `noi + 1` entries, starting at `x_b`.
#[derive(Clone, Debug)]
pub struct SrOutput {
    pub image: ImageGrid,
    pub objective_trace: Vec<f64>,
}

const MAX_HALVINGS: usize = 8;

/// Projected gradient descent from the bokeh image. `on_iteration(t)` fires after iterate `t`.
pub fn super_resolve(problem: &Problem<'_>, mut on_iteration: impl FnMut(usize)) -> Result<SrOutput> {
    let params = *problem.params();
    let peak = params.intensity_scale;
    let mut x = problem.bokeh_image().map(|v| v.clamp(0.0, peak));
    let mut current = problem.objective(&x)?;
    let mut trace = Vec::with_capacity(params.noi + 1);
    trace.push(current);

    for t in 1..=params.noi {
        let grad = problem.gradient(&x)?;
        let step_from = |beta: f64| {
            let mut next = x.clone();
            for (v, g) in next.data_mut().iter_mut().zip(grad.data()) {
                *v = (*v - beta * g).clamp(0.0, peak);
            }
            next
        };
        let mut beta = params.step_size;
        let mut next = step_from(beta);
        let mut value = problem.objective(&next)?;
        if params.backtracking {
            let mut halvings = 0;
            while value > current && halvings < MAX_HALVINGS {
                beta *= 0.5;
                halvings += 1;
                next = step_from(beta);
                value = problem.objective(&next)?;
            }
            if value > current {
                // no acceptable step at this point; keep the iterate
                next = x.clone();
                value = current;
            }
        }
        x = next;
        current = value;
        trace.push(current);
        on_iteration(t);
    }
    Ok(SrOutput {
        image: x.map(|v| v / peak),
        objective_trace: trace,
    })
}
