//! Combined training objective `recon + trans + lambda * constraint` and its
//! analytic gradient.

use ndarray::{concatenate, s, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::loss::{constraint_with_grad, trans_with_grad};
use super::ExtractorParams;
use crate::error::{Error, Result};

/// One mini-batch of normalized windows with their masked views.
#[derive(Debug, Clone)]
pub struct ObjectiveBatch {
    /// `B x L` anchor windows.
    pub anchors: Array2<f64>,
    /// `B*V x L`; row `s*V + v` is view `v` of anchor `s`.
    pub views: Array2<f64>,
    pub num_views: usize,
    /// `B x B` transfer targets between the anchors' datasets.
    pub transfer: Array2<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub recon: f64,
    pub trans: f64,
    pub constraint: f64,
    pub total: f64,
}

fn relu_mask(grad: &mut Array2<f64>, pre: &Array2<f64>) {
    grad.zip_mut_with(pre, |g, &a| {
        if a <= 0.0 {
            *g = 0.0;
        }
    });
}

fn standard(a: Array2<f64>) -> Array2<f64> {
    if a.is_standard_layout() {
        a
    } else {
        a.as_standard_layout().into_owned()
    }
}

/// Loss parts and the gradient of `total` with respect to every parameter.
///
/// Reconstruction is the mean squared error between each decoded masked
/// view and its unmasked anchor, averaged over views and time points.
pub fn objective(
    params: &ExtractorParams,
    batch: &ObjectiveBatch,
    lambda: f64,
) -> Result<(Objective, ExtractorParams)> {
    let b = batch.anchors.nrows();
    let v = batch.num_views;
    let l = params.input_len();
    if batch.anchors.ncols() != l || batch.views.ncols() != l {
        return Err(Error::LengthMismatch {
            expected: l,
            actual: batch.anchors.ncols(),
        });
    }
    if batch.views.nrows() != b * v || batch.transfer.dim() != (b, b) || b == 0 || v == 0 {
        return Err(Error::ShapeMismatch(format!(
            "objective batch with {b} anchors, {v} views: views {:?}, transfer {:?}",
            batch.views.dim(),
            batch.transfer.dim()
        )));
    }

    // encoder over anchors then views
    let x = concatenate(Axis(0), &[batch.anchors.view(), batch.views.view()])
        .expect("same width");
    let a1 = x.dot(&params.w1.t()) + &params.b1;
    let h1 = a1.mapv(|z| z.max(0.0));
    let e = h1.dot(&params.w2.t()) + &params.b2;
    let e_anchor = e.slice(s![..b, ..]);
    let e_view = e.slice(s![b.., ..]);

    // decoder reconstructs each anchor from its masked views
    let a2 = e_view.dot(&params.v1.t()) + &params.c1;
    let g = a2.mapv(|z| z.max(0.0));
    let recon_out = g.dot(&params.v2.t()) + &params.c2;
    let count = (b * v * l) as f64;
    let mut d_recon = recon_out;
    for (row, mut r) in d_recon.rows_mut().into_iter().enumerate() {
        r -= &batch.anchors.row(row / v);
    }
    let recon = d_recon.iter().map(|z| z * z).sum::<f64>() / count;
    d_recon *= 2.0 / count;

    let d_v2 = standard(d_recon.t().dot(&g));
    let d_c2 = d_recon.sum_axis(Axis(0));
    let mut d_a2 = d_recon.dot(&params.v2);
    relu_mask(&mut d_a2, &a2);
    let d_v1 = standard(d_a2.t().dot(&e_view));
    let d_c1 = d_a2.sum_axis(Axis(0));
    let mut d_e = Array2::zeros(e.dim());
    d_e.slice_mut(s![b.., ..]).assign(&d_a2.dot(&params.v1));

    let (trans, d_trans) = trans_with_grad(e_anchor, batch.transfer.view());
    d_e.slice_mut(s![..b, ..]).scaled_add(1.0, &d_trans);

    let constraint = if b >= 2 {
        let (c, d_ca, d_cv) = constraint_with_grad(e_anchor, e_view, v)?;
        d_e.slice_mut(s![..b, ..]).scaled_add(lambda, &d_ca);
        d_e.slice_mut(s![b.., ..]).scaled_add(lambda, &d_cv);
        c
    } else if lambda != 0.0 {
        return Err(Error::NoNegatives);
    } else {
        0.0
    };

    let d_w2 = standard(d_e.t().dot(&h1));
    let d_b2 = d_e.sum_axis(Axis(0));
    let mut d_a1 = d_e.dot(&params.w2);
    relu_mask(&mut d_a1, &a1);
    let d_w1 = standard(d_a1.t().dot(&x));
    let d_b1 = d_a1.sum_axis(Axis(0));

    let parts = Objective {
        recon,
        trans,
        constraint,
        total: recon + trans + lambda * constraint,
    };
    let grad = ExtractorParams {
        w1: d_w1,
        b1: d_b1,
        w2: d_w2,
        b2: d_b2,
        v1: d_v1,
        c1: d_c1,
        v2: d_v2,
        c2: d_c2,
    };
    Ok((parts, grad))
}
