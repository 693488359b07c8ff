//! Series-wise contrastive constraint and transferability alignment losses.

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    cosine_grad_view(ArrayView1::from(u), ArrayView1::from(v), false).0
}

/// Cosine similarity and its gradients with respect to `u` and `v`.
pub fn cosine_grad(u: &[f64], v: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let (c, du, dv) = cosine_grad_view(ArrayView1::from(u), ArrayView1::from(v), true);
    (c, du, dv)
}

fn cosine_grad_view(u: ArrayView1<f64>, v: ArrayView1<f64>, grads: bool) -> (f64, Vec<f64>, Vec<f64>) {
    let nu = u.dot(&u).sqrt();
    let nv = v.dot(&v).sqrt();
    if nu == 0.0 || nv == 0.0 {
        let z = if grads { vec![0.0; u.len()] } else { Vec::new() };
        return (0.0, z.clone(), z);
    }
    let c = u.dot(&v) / (nu * nv);
    if !grads {
        return (c, Vec::new(), Vec::new());
    }
    let du = u
        .iter()
        .zip(v.iter())
        .map(|(a, b)| b / (nu * nv) - c * a / (nu * nu))
        .collect();
    let dv = u
        .iter()
        .zip(v.iter())
        .map(|(a, b)| a / (nu * nv) - c * b / (nv * nv))
        .collect();
    (c, du, dv)
}

fn add_row(m: &mut Array2<f64>, row: usize, g: &[f64], scale: f64) {
    for (dst, src) in m.row_mut(row).iter_mut().zip(g) {
        *dst += scale * src;
    }
}

/// One series representation with the representations of its masked views.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorViews {
    pub anchor: Vec<f64>,
    pub views: Vec<Vec<f64>>,
}

/// Mean over (anchor, view) pairs of
/// `-log(exp(sim(s, s')) / sum_{t in anchors} exp(sim(s, t)))`,
/// where the denominator runs over every anchor in the batch, `s` included.
pub fn constraint_loss(batch: &[AnchorViews]) -> Result<f64> {
    let b = batch.len();
    let v = batch.first().map_or(0, |g| g.views.len());
    let d = batch.first().map_or(0, |g| g.anchor.len());
    if batch
        .iter()
        .any(|g| g.views.len() != v || g.anchor.len() != d || g.views.iter().any(|x| x.len() != d))
    {
        return Err(Error::ShapeMismatch(
            "every anchor needs the same number of equally sized views".into(),
        ));
    }
    let anchors = Array2::from_shape_fn((b, d), |(i, j)| batch[i].anchor[j]);
    let views = Array2::from_shape_fn((b * v, d), |(i, j)| batch[i / v.max(1)].views[i % v.max(1)][j]);
    constraint_with_grad(anchors.view(), views.view(), v).map(|(loss, _, _)| loss)
}

/// Contrastive constraint with gradients for anchors (`B x d`) and views
/// (`B*V x d`, row `s*V + v` is view `v` of anchor `s`).
pub(crate) fn constraint_with_grad(
    anchors: ArrayView2<f64>,
    views: ArrayView2<f64>,
    num_views: usize,
) -> Result<(f64, Array2<f64>, Array2<f64>)> {
    let b = anchors.nrows();
    if b < 2 {
        return Err(Error::NoNegatives);
    }
    let mut d_anchors = Array2::zeros(anchors.dim());
    let mut d_views = Array2::zeros(views.dim());
    if num_views == 0 {
        return Ok((0.0, d_anchors, d_views));
    }
    let pairs = (b * num_views) as f64;
    let mut total = 0.0;

    for s in 0..b {
        let a = anchors.row(s);
        let a = a.as_slice().expect("row-major");
        // softmax denominator over all anchors; sim(s, s) is constant and has no gradient
        let sims: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..b)
            .map(|t| cosine_grad(a, anchors.row(t).as_slice().expect("row-major")))
            .collect();
        let max = sims.iter().map(|x| x.0).fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = sims.iter().map(|x| (x.0 - max).exp()).sum();
        let log_z = max + z.ln();

        for k in 0..num_views {
            let row = s * num_views + k;
            let (c, du, dv) = cosine_grad(a, views.row(row).as_slice().expect("row-major"));
            total += log_z - c;
            add_row(&mut d_anchors, s, &du, -1.0 / pairs);
            add_row(&mut d_views, row, &dv, -1.0 / pairs);
        }
        for (t, (c, du, dv)) in sims.iter().enumerate() {
            if t == s {
                continue;
            }
            let weight = num_views as f64 * (c - log_z).exp() / pairs;
            add_row(&mut d_anchors, s, du, weight);
            add_row(&mut d_anchors, t, dv, weight);
        }
    }
    Ok((total / pairs, d_anchors, d_views))
}

/// Mean over pairs of `(g - sim(e_i, e_j))^2`; 0 for an empty list.
pub fn transferability_loss(pairs: &[(&[f64], &[f64], f64)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    pairs
        .iter()
        .map(|(a, b, g)| (g - cosine(a, b)).powi(2))
        .sum::<f64>()
        / pairs.len() as f64
}

/// Transferability loss over all ordered anchor pairs `s != t`, with
/// `targets[s][t]` the transfer score between their datasets.
pub(crate) fn trans_with_grad(anchors: ArrayView2<f64>, targets: ArrayView2<f64>) -> (f64, Array2<f64>) {
    let b = anchors.nrows();
    let mut grad = Array2::zeros(anchors.dim());
    if b < 2 {
        return (0.0, grad);
    }
    let pairs = (b * (b - 1)) as f64;
    let mut total = 0.0;
    for s in 0..b {
        for t in 0..b {
            if s == t {
                continue;
            }
            let (c, du, dv) = cosine_grad(
                anchors.row(s).as_slice().expect("row-major"),
                anchors.row(t).as_slice().expect("row-major"),
            );
            let r = targets[[s, t]] - c;
            total += r * r;
            add_row(&mut grad, s, &du, -2.0 * r / pairs);
            add_row(&mut grad, t, &dv, -2.0 * r / pairs);
        }
    }
    (total / pairs, grad)
}
