use ndarray::{concatenate, s, Array1, Array2, Axis};

use crate::error::{Error, Result};
use crate::vit::{BlockWeights, VitConfig, WeightSet};

/// Value plus optional forward-mode tangent. Every block below propagates
/// both, so the derivative used by the finite-difference check runs
/// through the exact code that produces the forward value; plain inference
/// simply carries no tangent.
#[derive(Debug, Clone)]
pub(crate) struct Dual {
    pub v: Array2<f64>,
    pub t: Option<Array2<f64>>,
}

impl Dual {
    pub fn plain(v: Array2<f64>) -> Self {
        Self { v, t: None }
    }

    fn map2(&self, other: &Dual, f: impl Fn(&Array2<f64>, &Array2<f64>) -> Array2<f64>) -> Dual {
        let t = match (&self.t, &other.t) {
            (None, None) => None,
            (Some(a), None) => Some(a.clone()),
            (None, Some(b)) => Some(b.clone()),
            (Some(a), Some(b)) => Some(f(a, b)),
        };
        Dual { v: f(&self.v, &other.v), t }
    }

    fn add(&self, other: &Dual) -> Dual {
        self.map2(other, |a, b| a + b)
    }
}

/// Records softmax normalization quality across a forward pass.
#[derive(Debug, Clone, Default)]
pub struct SoftmaxAudit {
    pub rows_checked: usize,
    pub max_row_error: f64,
}

impl SoftmaxAudit {
    fn observe(&mut self, probs: &Array2<f64>) {
        for row in probs.rows() {
            let sum: f64 = row.sum();
            self.rows_checked += 1;
            self.max_row_error = self.max_row_error.max((sum - 1.0).abs());
        }
    }
}

fn all_finite(m: &Array2<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// x @ w + b with a constant (unperturbed) weight.
fn linear(x: &Dual, w: &Array2<f64>, b: &Array1<f64>) -> Dual {
    Dual {
        v: x.v.dot(w) + b,
        t: x.t.as_ref().map(|t| t.dot(w)),
    }
}

/// Row-wise layer norm. Tangent follows from differentiating
/// y = gamma * (x - mean) / sqrt(var + eps) + beta per row.
fn layer_norm(x: &Dual, gamma: &Array1<f64>, beta: &Array1<f64>) -> Dual {
    const EPS: f64 = 1e-6;
    let d = x.v.ncols() as f64;
    let mut v = Array2::zeros(x.v.raw_dim());
    let mut t_out = x.t.as_ref().map(|_| Array2::zeros(x.v.raw_dim()));
    for (i, row) in x.v.rows().into_iter().enumerate() {
        let mean = row.sum() / d;
        let centered = row.mapv(|a| a - mean);
        let var = centered.mapv(|a| a * a).sum() / d;
        let sigma = (var + EPS).sqrt();
        for (j, &c) in centered.iter().enumerate() {
            v[[i, j]] = gamma[j] * c / sigma + beta[j];
        }
        if let (Some(t_in), Some(t_acc)) = (&x.t, &mut t_out) {
            let trow = t_in.row(i);
            let tmean = trow.sum() / d;
            let tcentered = trow.mapv(|a| a - tmean);
            let tsigma = centered
                .iter()
                .zip(tcentered.iter())
                .map(|(c, tc)| c * tc)
                .sum::<f64>()
                / (d * sigma);
            for (j, (&c, &tc)) in centered.iter().zip(tcentered.iter()).enumerate() {
                t_acc[[i, j]] = gamma[j] * (tc * sigma - c * tsigma) / (sigma * sigma);
            }
        }
    }
    Dual { v, t: t_out }
}

/// Row-wise softmax with max subtraction. Tangent: s_i (t_i - sum_j s_j t_j).
fn softmax_rows(x: &Dual, audit: &mut SoftmaxAudit) -> Dual {
    let mut v = x.v.clone();
    for mut row in v.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|a| (a - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|a| a / sum);
    }
    audit.observe(&v);
    let t = x.t.as_ref().map(|t_in| {
        let mut t_out = Array2::zeros(v.raw_dim());
        for i in 0..v.nrows() {
            let dot: f64 = v.row(i).iter().zip(t_in.row(i).iter()).map(|(s, t)| s * t).sum();
            for j in 0..v.ncols() {
                t_out[[i, j]] = v[[i, j]] * (t_in[[i, j]] - dot);
            }
        }
        t_out
    });
    Dual { v, t }
}

/// GELU, tanh approximation.
fn gelu(x: &Dual) -> Dual {
    const C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
    const A: f64 = 0.044_715;
    let v = x.v.mapv(|a| 0.5 * a * (1.0 + (C * (a + A * a * a * a)).tanh()));
    let t = x.t.as_ref().map(|t_in| {
        let mut t_out = t_in.clone();
        t_out.zip_mut_with(&x.v, |t, &a| {
            let u = C * (a + A * a * a * a);
            let th = u.tanh();
            let sech2 = 1.0 - th * th;
            let du = C * (1.0 + 3.0 * A * a * a);
            *t *= 0.5 * (1.0 + th) + 0.5 * a * sech2 * du;
        });
        t_out
    });
    Dual { v, t }
}

fn dual_matmul(a: &Dual, b: &Dual) -> Dual {
    let v = a.v.dot(&b.v);
    let t = match (&a.t, &b.t) {
        (None, None) => None,
        (Some(ta), None) => Some(ta.dot(&b.v)),
        (None, Some(tb)) => Some(a.v.dot(tb)),
        (Some(ta), Some(tb)) => Some(ta.dot(&b.v) + a.v.dot(tb)),
    };
    Dual { v, t }
}

fn transpose(x: &Dual) -> Dual {
    Dual {
        v: x.v.t().to_owned(),
        t: x.t.as_ref().map(|t| t.t().to_owned()),
    }
}

fn slice_cols(x: &Dual, lo: usize, hi: usize) -> Dual {
    Dual {
        v: x.v.slice(s![.., lo..hi]).to_owned(),
        t: x.t.as_ref().map(|t| t.slice(s![.., lo..hi]).to_owned()),
    }
}

/// Multi-headed self-attention: per head softmax(Q K^T / sqrt(d)) V,
/// heads concatenated and output-projected.
pub(crate) fn msa_dual(
    tokens: &Dual,
    block: &BlockWeights,
    heads: usize,
    audit: &mut SoftmaxAudit,
) -> Result<Dual> {
    if !all_finite(&tokens.v) {
        return Err(Error::NonFinite { stage: "attention input".into() });
    }
    let d_model = tokens.v.ncols();
    let d_head = d_model / heads;
    let scale = 1.0 / (d_head as f64).sqrt();

    let q = linear(tokens, &block.wq, &block.bq);
    let k = linear(tokens, &block.wk, &block.bk);
    let v = linear(tokens, &block.wv, &block.bv);

    let mut head_outputs = Vec::with_capacity(heads);
    for head in 0..heads {
        let (lo, hi) = (head * d_head, (head + 1) * d_head);
        let qh = slice_cols(&q, lo, hi);
        let kh = slice_cols(&k, lo, hi);
        let vh = slice_cols(&v, lo, hi);
        let mut logits = dual_matmul(&qh, &transpose(&kh));
        logits.v.mapv_inplace(|a| a * scale);
        if let Some(t) = &mut logits.t {
            t.mapv_inplace(|a| a * scale);
        }
        let attn = softmax_rows(&logits, audit);
        head_outputs.push(dual_matmul(&attn, &vh));
    }

    let concat_v = concatenate(
        Axis(1),
        &head_outputs.iter().map(|h| h.v.view()).collect::<Vec<_>>(),
    )
    .expect("head widths add up to the model dim");
    let concat_t = if head_outputs.iter().any(|h| h.t.is_some()) {
        let parts: Vec<Array2<f64>> = head_outputs
            .iter()
            .map(|h| h.t.clone().unwrap_or_else(|| Array2::zeros(h.v.raw_dim())))
            .collect();
        Some(
            concatenate(Axis(1), &parts.iter().map(|p| p.view()).collect::<Vec<_>>())
                .expect("head widths add up to the model dim"),
        )
    } else {
        None
    };
    Ok(linear(&Dual { v: concat_v, t: concat_t }, &block.wo, &block.bo))
}

/// One pre-norm transformer block: a = MSA(LN(s)) + s; s' = MLP(LN(a)) + a.
fn block_forward(
    tokens: &Dual,
    block: &BlockWeights,
    heads: usize,
    audit: &mut SoftmaxAudit,
) -> Result<Dual> {
    let attended = msa_dual(&layer_norm(tokens, &block.ln1_gamma, &block.ln1_beta), block, heads, audit)?;
    let a = attended.add(tokens);
    let normed = layer_norm(&a, &block.ln2_gamma, &block.ln2_beta);
    let hidden = gelu(&linear(&normed, &block.w1, &block.b1));
    let mlp = linear(&hidden, &block.w2, &block.b2);
    Ok(mlp.add(&a))
}

pub(crate) fn encoder_dual(
    s0: Dual,
    weights: &WeightSet,
    heads: usize,
    audit: &mut SoftmaxAudit,
) -> Result<Dual> {
    let mut s = s0;
    for (i, block) in weights.encoder.iter().enumerate() {
        s = block_forward(&s, block, heads, audit)?;
        if !all_finite(&s.v) {
            return Err(Error::NonFinite { stage: format!("encoder layer {i}") });
        }
    }
    Ok(s)
}

/// Append the class tokens, run the decoder blocks, then score patches
/// against the refined class tokens.
pub(crate) fn decode_dual(
    s_l: Dual,
    weights: &WeightSet,
    config: &VitConfig,
    audit: &mut SoftmaxAudit,
) -> Result<Dual> {
    let n = s_l.v.nrows();
    let k = config.classes;
    let with_classes_v = concatenate(Axis(0), &[s_l.v.view(), weights.class_tokens.view()])
        .expect("token and class widths match");
    let with_classes_t = s_l.t.as_ref().map(|t| {
        let zero = Array2::zeros((k, t.ncols()));
        concatenate(Axis(0), &[t.view(), zero.view()]).expect("token and class widths match")
    });
    let mut z = Dual { v: with_classes_v, t: with_classes_t };
    for (i, block) in weights.decoder.iter().enumerate() {
        z = block_forward(&z, block, config.decoder_heads, audit)?;
        if !all_finite(&z.v) {
            return Err(Error::NonFinite { stage: format!("decoder layer {i}") });
        }
    }
    let patches = Dual {
        v: z.v.slice(s![..n, ..]).to_owned(),
        t: z.t.as_ref().map(|t| t.slice(s![..n, ..]).to_owned()),
    };
    let classes = Dual {
        v: z.v.slice(s![n.., ..]).to_owned(),
        t: z.t.as_ref().map(|t| t.slice(s![n.., ..]).to_owned()),
    };
    Ok(dual_matmul(&patches, &transpose(&classes)))
}

/// Plain (no tangent) public entry points.
pub fn msa(tokens: &Array2<f64>, block: &BlockWeights, heads: usize) -> Result<Array2<f64>> {
    let mut audit = SoftmaxAudit::default();
    Ok(msa_dual(&Dual::plain(tokens.clone()), block, heads, &mut audit)?.v)
}

pub fn encoder_forward(
    s0: &Array2<f64>,
    weights: &WeightSet,
    heads: usize,
) -> Result<Array2<f64>> {
    let mut audit = SoftmaxAudit::default();
    Ok(encoder_dual(Dual::plain(s0.clone()), weights, heads, &mut audit)?.v)
}

pub fn decode_mask(
    s_l: &Array2<f64>,
    weights: &WeightSet,
    config: &VitConfig,
) -> Result<Array2<f64>> {
    let mut audit = SoftmaxAudit::default();
    Ok(decode_dual(Dual::plain(s_l.clone()), weights, config, &mut audit)?.v)
}
