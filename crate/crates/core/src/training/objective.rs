use super::car::{car_loss_augmented, car_node_augmented, car_node_cda};
use super::CarForm;
use crate::data::{Dataset, Task};
use crate::diffcore::{Graph, ParamSet, Value};
use crate::exec::Exec;
use crate::model::Model;
use crate::{Error, Result};

/// Composition of the per-sample loss `L_perf + λ·L_CAR`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub lambda: f64,
    /// `None` drops the CAR term; it is then reported as 0.
    pub car: Option<CarForm>,
}

impl Objective {
    pub fn plain() -> Self {
        Objective { lambda: 0.0, car: None }
    }

    pub fn car(form: CarForm, lambda: f64) -> Self {
        Objective {
            lambda,
            car: Some(form),
        }
    }

    /// True when the CAR term contributes to the gradient. With `λ = 0` the
    /// plain forward is used and `L_CAR` is only monitored.
    pub fn regularizes(&self) -> bool {
        self.car.is_some() && self.lambda > 0.0
    }
}

/// Batch means of the loss terms, plus `∂L/∂θ` when requested.
#[derive(Debug, Clone)]
pub struct BatchLoss {
    pub perf: f64,
    pub car: f64,
    pub total: f64,
    pub grads: Option<ParamSet>,
}

struct Sample {
    perf: f64,
    car: f64,
    grads: Option<ParamSet>,
}

fn perf_node(g: &mut Graph, out: Value, y: f64, task: Task) -> Result<Value> {
    match task {
        Task::Classification => g.bce_with_logits(out, &[y]),
        Task::Regression => g.mse(out, &[y]),
    }
}

fn sigma_of(model: &Model) -> Result<usize> {
    model
        .layout()
        .sigma
        .ok_or_else(|| Error::Config("CAR needs the sensitive feature in the input".into()))
}

fn car_node(
    g: &mut Graph,
    ps: &[Value],
    model: &Model,
    row: &[f64],
    attention: Value,
    form: CarForm,
) -> Result<Value> {
    match form {
        CarForm::Augmented => {
            let layout = model.layout();
            car_node_augmented(g, attention, layout.width(), sigma_of(model)?, layout.cs)
        }
        CarForm::Cda => car_node_cda(g, ps, model, row, attention),
    }
}

/// `L_CAR` of one row without building gradients.
fn monitor_car(model: &Model, row: &[f64], form: CarForm) -> Result<f64> {
    let mut g = Graph::new();
    let ps = model.bind(&mut g);
    match form {
        CarForm::Augmented => {
            let layout = model.layout();
            let sigma = sigma_of(model)?;
            let built = model.build(&mut g, &ps, row, true)?;
            let attn = g.data(built.layers[0].attention);
            car_loss_augmented(attn, layout.width(), sigma, layout.cs)
        }
        CarForm::Cda => {
            let built = model.build(&mut g, &ps, row, false)?;
            let car = car_node_cda(&mut g, &ps, model, row, built.layers[0].attention)?;
            Ok(g.scalar(car))
        }
    }
}

fn sample(model: &Model, row: &[f64], y: f64, obj: &Objective, want_grad: bool) -> Result<Sample> {
    let mut g = Graph::new();
    let ps = model.bind(&mut g);
    let reg = obj.regularizes();
    let augmented = reg && obj.car == Some(CarForm::Augmented);
    let built = model.build(&mut g, &ps, row, augmented)?;
    let perf = perf_node(&mut g, built.output, y, model.task())?;
    let mut root = perf;
    let mut car = 0.0;
    if let (true, Some(form)) = (reg, obj.car) {
        let node = car_node(&mut g, &ps, model, row, built.layers[0].attention, form)?;
        car = g.scalar(node);
        let weighted = g.scale(node, obj.lambda);
        root = g.add(perf, weighted)?;
    }
    let perf_value = g.scalar(perf);
    let grads = if want_grad {
        g.backward(root)?;
        let mut grads = model.param_set().zeros_like();
        g.accumulate_param_grads(&mut grads);
        Some(grads)
    } else {
        None
    };
    if let (false, Some(form)) = (reg, obj.car) {
        car = monitor_car(model, row, form)?;
    }
    Ok(Sample {
        perf: perf_value,
        car,
        grads,
    })
}

fn evaluate(
    model: &Model,
    ds: &Dataset,
    rows: &[usize],
    obj: &Objective,
    exec: Exec,
    want_grad: bool,
) -> Result<BatchLoss> {
    if rows.is_empty() {
        return Err(Error::Empty("empty batch".into()));
    }
    let samples = exec.map(rows, |&n| sample(model, ds.row(n), ds.y()[n], obj, want_grad));
    let mut perf = 0.0;
    let mut car = 0.0;
    let mut grads = want_grad.then(|| model.param_set().zeros_like());
    for s in samples {
        let s = s?;
        perf += s.perf;
        car += s.car;
        if let (Some(acc), Some(gs)) = (grads.as_mut(), s.grads.as_ref()) {
            acc.add_assign(gs);
        }
    }
    let inv = 1.0 / rows.len() as f64;
    if let Some(acc) = grads.as_mut() {
        acc.scale(inv);
    }
    let (perf, car) = (perf * inv, car * inv);
    Ok(BatchLoss {
        perf,
        car,
        total: perf + obj.lambda * car,
        grads,
    })
}

/// Mean loss of `rows` of a preprocessed dataset, without gradients.
pub fn batch_loss(
    model: &Model,
    ds: &Dataset,
    rows: &[usize],
    obj: &Objective,
    exec: Exec,
) -> Result<BatchLoss> {
    evaluate(model, ds, rows, obj, exec, false)
}

/// Mean loss and its gradient. Per-sample gradients may be computed in
/// parallel; they are always summed in row order.
pub fn batch_gradient(
    model: &Model,
    ds: &Dataset,
    rows: &[usize],
    obj: &Objective,
    exec: Exec,
) -> Result<BatchLoss> {
    evaluate(model, ds, rows, obj, exec, true)
}
