use std::sync::Arc;

use crate::diffcore::{Graph, Value};
use crate::model::Model;
use crate::{Error, Result};

fn column(rows: usize, side: usize, col: usize) -> Arc<[usize]> {
    (0..rows).map(|r| r * side + col).collect()
}

/// `Σ_i ‖a − b_i‖²` over the given columns, scaled by `1/n`.
fn mean_sq_distance(g: &mut Graph, anchor: Value, others: &[Value]) -> Result<Value> {
    let mut total: Option<Value> = None;
    for &other in others {
        let d = g.sub(anchor, other)?;
        let sq = g.mul(d, d)?;
        let s = g.sum(sq);
        total = Some(match total {
            Some(t) => g.add(t, s)?,
            None => s,
        });
    }
    let total = total.ok_or_else(|| Error::Contract("CAR needs at least one category".into()))?;
    Ok(g.scale(total, 1.0 / others.len() as f64))
}

/// Augmented CAR term on a first-layer post-SoftMax matrix of side `p + cs`:
/// the mean over categories of the squared distance between column `sigma`
/// and column `p + i`, restricted to the first `p` rows.
pub fn car_node_augmented(
    g: &mut Graph,
    attention: Value,
    p: usize,
    sigma: usize,
    cs: usize,
) -> Result<Value> {
    let side = p + cs;
    let shape = g.shape(attention);
    if shape.rows != side || shape.cols != side || sigma >= p {
        return Err(Error::Contract(format!(
            "augmented CAR expects a {side}×{side} matrix, got {}×{}",
            shape.rows, shape.cols
        )));
    }
    let anchor = g.gather(attention, column(p, side, sigma))?;
    let mut others = Vec::with_capacity(cs);
    for i in 0..cs {
        others.push(g.gather(attention, column(p, side, p + i))?);
    }
    mean_sq_distance(g, anchor, &others)
}

/// Value-level form of [`car_node_augmented`] on a row-major matrix.
pub fn car_loss_augmented(matrix: &[f64], p: usize, sigma: usize, cs: usize) -> Result<f64> {
    let side = p + cs;
    if matrix.len() != side * side || sigma >= p || cs == 0 {
        return Err(Error::Contract(format!(
            "augmented CAR expects side p + C^s = {side}, got {} entries",
            matrix.len()
        )));
    }
    let mut total = 0.0;
    for i in 0..cs {
        for r in 0..p {
            let d = matrix[r * side + sigma] - matrix[r * side + p + i];
            total += d * d;
        }
    }
    Ok(total / cs as f64)
}

/// Counterfactual-data-augmentation CAR term: the first-layer attention of
/// `row` is compared with the attention on each rewrite of the sensitive
/// feature, column `σ` only. `attention` is the first-layer matrix of the
/// original row, already in `g`.
pub fn car_node_cda(
    g: &mut Graph,
    ps: &[Value],
    model: &Model,
    row: &[f64],
    attention: Value,
) -> Result<Value> {
    let layout = model.layout();
    let sigma = layout
        .sigma
        .ok_or_else(|| Error::Config("CAR needs the sensitive feature in the input".into()))?;
    let k = layout.width();
    let feature = model.schema().sensitive();
    let idx = column(k, k, sigma);
    let anchor = g.gather(attention, idx.clone())?;
    let mut rewritten = row.to_vec();
    let mut others = Vec::with_capacity(layout.cs);
    for i in 0..layout.cs {
        rewritten[feature] = i as f64;
        let built = model.build(g, ps, &rewritten, false)?;
        others.push(g.gather(built.layers[0].attention, idx.clone())?);
    }
    mean_sq_distance(g, anchor, &others)
}

/// Value-level CDA CAR term for one preprocessed row.
pub fn car_loss_cda(model: &Model, row: &[f64]) -> Result<f64> {
    let mut g = Graph::new();
    let ps = model.bind(&mut g);
    let built = model.build(&mut g, &ps, row, false)?;
    let car = car_node_cda(&mut g, &ps, model, row, built.layers[0].attention)?;
    Ok(g.scalar(car))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synthetic_schema, Task};
    use crate::model::ModelConfig;
    use approx::assert_abs_diff_eq;

    #[test]
    fn augmented_examples() {
        // p = 2, cs = 2, sigma = 0
        #[rustfmt::skip]
        let equal = [
            0.2, 0.3, 0.2, 0.2,
            0.4, 0.1, 0.4, 0.4,
            0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0,
        ];
        assert_eq!(car_loss_augmented(&equal, 2, 0, 2).unwrap(), 0.0);
        let mut one_off = equal;
        // column 3 differs by d = (0.1, -0.2) over the first two rows
        one_off[3] += 0.1;
        one_off[7] -= 0.2;
        assert_abs_diff_eq!(
            car_loss_augmented(&one_off, 2, 0, 2).unwrap(),
            (0.01 + 0.04) / 2.0,
            epsilon = 1e-15
        );
        // rows past p are ignored
        let mut tail = equal;
        tail[12] = 9.0;
        tail[14] = -3.0;
        assert_eq!(car_loss_augmented(&tail, 2, 0, 2).unwrap(), 0.0);
        assert!(matches!(car_loss_augmented(&equal, 3, 0, 2), Err(Error::Contract(_))));
    }

    #[test]
    fn node_matches_value_form() {
        let mut g = Graph::new();
        let data: Vec<f64> = (0..25).map(|i| ((i * 7) % 11) as f64 / 11.0).collect();
        let m = g.constant(crate::diffcore::Tensor::new(
            crate::diffcore::Shape::matrix(5, 5),
            data.clone(),
        ));
        let node = car_node_augmented(&mut g, m, 3, 1, 2).unwrap();
        assert_abs_diff_eq!(
            g.scalar(node),
            car_loss_augmented(&data, 3, 1, 2).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn cda_binary_is_half_the_other_term() {
        let model = Model::new(synthetic_schema().into(), ModelConfig::new(Task::Classification)).unwrap();
        let row = [0.0, 1.0, 0.0];
        let attn = |r: &[f64]| model.forward(r).unwrap().1.layers[0].post_softmax.clone();
        let (a0, a1) = (attn(&row), attn(&[1.0, 1.0, 0.0]));
        let sigma = model.layout().sigma.unwrap();
        let d: f64 = (0..3).map(|r| (a0[r * 3 + sigma] - a1[r * 3 + sigma]).powi(2)).sum();
        let car = car_loss_cda(&model, &row).unwrap();
        assert!(d > 0.0);
        assert_abs_diff_eq!(car, d / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn cda_is_zero_without_sensitive_dependence() {
        let mut model =
            Model::new(synthetic_schema().into(), ModelConfig::new(Task::Classification)).unwrap();
        // stage-two weights of the sensitive block zeroed: its embedding is constant
        let slot = model.param_set().find("cat.stage2.w").unwrap();
        for j in model.layout().sigma_block().unwrap() {
            model.param_set_mut().get_mut(slot).data[j] = 0.0;
        }
        assert_eq!(car_loss_cda(&model, &[1.0, 0.0, 1.0]).unwrap(), 0.0);
    }
}
