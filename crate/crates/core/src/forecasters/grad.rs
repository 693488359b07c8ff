//! Forward passes and analytic gradients of the batch-mean squared error.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};

use super::{ForecasterSpec, ModelWeights};

/// Patch matrix for patch `p`: rows of `windows` restricted to the patch, zero-padded.
fn patch_inputs(windows: ArrayView2<f64>, patch_len: usize, p: usize) -> Array2<f64> {
    let t = windows.ncols();
    let start = p * patch_len;
    let end = (start + patch_len).min(t);
    let mut out = Array2::zeros((windows.nrows(), patch_len));
    out.slice_mut(s![.., ..end - start])
        .assign(&windows.slice(s![.., start..end]));
    out
}

/// Matrix products may come back column-major; weights are always row-major.
fn standard(a: Array2<f64>) -> Array2<f64> {
    if a.is_standard_layout() {
        a
    } else {
        a.as_standard_layout().into_owned()
    }
}

struct PatchForward {
    patches: Vec<Array2<f64>>,
    /// Pre-activations per patch, `batch x hidden`.
    pre: Vec<Array2<f64>>,
    hidden: Array2<f64>,
    output: Array2<f64>,
}

fn patch_forward(
    spec: &ForecasterSpec,
    embed: &Array2<f64>,
    embed_bias: &Array1<f64>,
    out: &Array2<f64>,
    out_bias: &Array1<f64>,
    windows: ArrayView2<f64>,
) -> PatchForward {
    let patch_len = embed.ncols();
    let hid = embed.nrows();
    let np = spec.num_patches();
    let mut hidden = Array2::zeros((windows.nrows(), hid * np));
    let mut patches = Vec::with_capacity(np);
    let mut pre = Vec::with_capacity(np);
    for p in 0..np {
        let xp = patch_inputs(windows, patch_len, p);
        let a = xp.dot(&embed.t()) + embed_bias;
        hidden
            .slice_mut(s![.., p * hid..(p + 1) * hid])
            .assign(&a.mapv(|v| v.max(0.0)));
        patches.push(xp);
        pre.push(a);
    }
    let output = hidden.dot(&out.t()) + out_bias;
    PatchForward {
        patches,
        pre,
        hidden,
        output,
    }
}

/// Batched forward pass for a trainable architecture.
pub fn predict_batch(spec: &ForecasterSpec, weights: &ModelWeights, windows: ArrayView2<f64>) -> Array2<f64> {
    match weights {
        ModelWeights::Linear { w, b } => windows.dot(&w.t()) + b,
        ModelWeights::PatchMlp {
            embed,
            embed_bias,
            out,
            out_bias,
        } => patch_forward(spec, embed, embed_bias, out, out_bias, windows).output,
        ModelWeights::Empty => panic!("predict_batch called on a weight-free model"),
    }
}

/// Mean over all `batch x horizon` squared errors, and its exact gradient
/// with respect to every weight tensor.
pub fn loss_and_grad(
    spec: &ForecasterSpec,
    weights: &ModelWeights,
    inputs: ArrayView2<f64>,
    targets: ArrayView2<f64>,
) -> (f64, ModelWeights) {
    let count = (targets.nrows() * targets.ncols()) as f64;
    match weights {
        ModelWeights::Linear { w, b } => {
            let pred = inputs.dot(&w.t()) + b;
            let diff = &pred - &targets;
            let loss = diff.iter().map(|d| d * d).sum::<f64>() / count;
            let d_pred = diff * (2.0 / count);
            let grad = ModelWeights::Linear {
                w: standard(d_pred.t().dot(&inputs)),
                b: d_pred.sum_axis(Axis(0)),
            };
            (loss, grad)
        }
        ModelWeights::PatchMlp {
            embed,
            embed_bias,
            out,
            out_bias,
        } => {
            let fwd = patch_forward(spec, embed, embed_bias, out, out_bias, inputs);
            let diff = &fwd.output - &targets;
            let loss = diff.iter().map(|d| d * d).sum::<f64>() / count;
            let d_out = diff * (2.0 / count);

            let g_out = standard(d_out.t().dot(&fwd.hidden));
            let g_out_bias = d_out.sum_axis(Axis(0));
            let d_hidden = d_out.dot(out);

            let hid = embed.nrows();
            let mut g_embed = Array2::zeros(embed.dim());
            let mut g_embed_bias = Array1::zeros(hid);
            for (p, (xp, a)) in fwd.patches.iter().zip(&fwd.pre).enumerate() {
                let mut d_a = d_hidden.slice(s![.., p * hid..(p + 1) * hid]).to_owned();
                d_a.zip_mut_with(a, |d, &pre| {
                    if pre <= 0.0 {
                        *d = 0.0;
                    }
                });
                g_embed += &d_a.t().dot(xp);
                g_embed_bias += &d_a.sum_axis(Axis(0));
            }
            let grad = ModelWeights::PatchMlp {
                embed: standard(g_embed),
                embed_bias: g_embed_bias,
                out: g_out,
                out_bias: g_out_bias,
            };
            (loss, grad)
        }
        ModelWeights::Empty => panic!("loss_and_grad called on a weight-free model"),
    }
}
