use ndarray::{s, Array2, Zip};

use super::features::{EdgeFeatures, GraphInput};
use super::{Aggregation, AttentionMode};

/// Parameters of one multi-head attention layer.
///
/// Head `m` owns columns `m * hidden .. (m + 1) * hidden` of `w_node` and row
/// `m` of the attention vectors; likewise for the edge projection.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub heads: usize,
    pub hidden: usize,
    pub edge_dim: usize,
    /// `in_dim x (heads * hidden)`.
    pub w_node: Array2<f64>,
    /// `heads x hidden`.
    pub att_src: Array2<f64>,
    /// `heads x hidden`.
    pub att_dst: Array2<f64>,
    /// `2 x (heads * edge_dim)`; directional attention only.
    pub w_edge: Option<Array2<f64>>,
    /// `heads x edge_dim`; directional attention only.
    pub att_edge: Option<Array2<f64>>,
    /// `(heads * hidden * k) x out_dim` with `k = 2` for separate aggregation.
    pub w_out: Array2<f64>,
}

impl LayerParams {
    pub fn zeros_like(&self) -> LayerParams {
        let z = |a: &Array2<f64>| Array2::zeros(a.raw_dim());
        LayerParams {
            heads: self.heads,
            hidden: self.hidden,
            edge_dim: self.edge_dim,
            w_node: z(&self.w_node),
            att_src: z(&self.att_src),
            att_dst: z(&self.att_dst),
            w_edge: self.w_edge.as_ref().map(z),
            att_edge: self.att_edge.as_ref().map(z),
            w_out: z(&self.w_out),
        }
    }

    pub fn tensors(&self) -> Vec<(&'static str, &Array2<f64>)> {
        let mut out = vec![
            ("w_node", &self.w_node),
            ("att_src", &self.att_src),
            ("att_dst", &self.att_dst),
        ];
        if let Some(w) = &self.w_edge {
            out.push(("w_edge", w));
        }
        if let Some(a) = &self.att_edge {
            out.push(("att_edge", a));
        }
        out.push(("w_out", &self.w_out));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Array2<f64>)> {
        let mut out = vec![
            ("w_node", &mut self.w_node),
            ("att_src", &mut self.att_src),
            ("att_dst", &mut self.att_dst),
        ];
        if let Some(w) = &mut self.w_edge {
            out.push(("w_edge", w));
        }
        if let Some(a) = &mut self.att_edge {
            out.push(("att_edge", a));
        }
        out.push(("w_out", &mut self.w_out));
        out
    }

    pub fn width(&self) -> usize {
        self.heads * self.hidden
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Activation {
    Elu,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Elu if x <= 0.0 => x.exp_m1(),
            _ => x,
        }
    }

    fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Elu if x <= 0.0 => x.exp(),
            _ => 1.0,
        }
    }
}

fn leaky(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

/// Pre-activation attention logits, one column per head.
fn raw_scores(
    z: &Array2<f64>,
    params: &LayerParams,
    edge_proj: Option<&Array2<f64>>,
    input: &GraphInput,
) -> Array2<f64> {
    let (heads, hidden) = (params.heads, params.hidden);
    let n = input.n();
    let zs = z.as_slice().expect("standard layout");
    let mut s_src = vec![0.0; n * heads];
    let mut s_dst = vec![0.0; n * heads];
    for i in 0..n {
        for m in 0..heads {
            let zi = &zs[i * heads * hidden + m * hidden..][..hidden];
            s_src[i * heads + m] = dot(zi, params.att_src.row(m).as_slice().unwrap());
            s_dst[i * heads + m] = dot(zi, params.att_dst.row(m).as_slice().unwrap());
        }
    }
    let e_count = input.num_directed();
    let mut raw = Array2::zeros((e_count, heads));
    let dst = input.dst();
    {
        let r = raw.as_slice_mut().unwrap();
        for e in 0..e_count {
            let (i, j) = (input.src[e], dst[e]);
            for m in 0..heads {
                r[e * heads + m] = s_src[i * heads + m] + s_dst[j * heads + m];
            }
        }
    }
    if let (Some(proj), Some(att_edge)) = (edge_proj, params.att_edge.as_ref()) {
        let de = params.edge_dim;
        let p = proj.as_slice().unwrap();
        let r = raw.as_slice_mut().unwrap();
        for e in 0..e_count {
            for m in 0..heads {
                let s_edge = dot(
                    &p[e * heads * de + m * de..][..de],
                    att_edge.row(m).as_slice().unwrap(),
                );
                r[e * heads + m] += s_edge;
            }
        }
    }
    raw
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn edge_projection(
    params: &LayerParams,
    features: Option<&EdgeFeatures>,
    mode: AttentionMode,
) -> Option<Array2<f64>> {
    match (mode, params.w_edge.as_ref(), features) {
        (AttentionMode::Dgat, Some(w), Some(f)) => Some(f.values.dot(w)),
        _ => None,
    }
}

/// `LeakyReLU` attention scores for every directed edge of `input`, given the
/// projected node states `z = h_prev W_node`.
pub fn attention_scores(
    z: &Array2<f64>,
    params: &LayerParams,
    input: &GraphInput,
    mode: AttentionMode,
    slope: f64,
) -> Array2<f64> {
    let proj = edge_projection(params, input.features.as_ref(), mode);
    raw_scores(z, params, proj.as_ref(), input).mapv_into(|x| leaky(x, slope))
}

/// Softmax of each head's scores over every node's CSR row.
pub fn masked_softmax(scores: &Array2<f64>, offsets: &[usize]) -> Array2<f64> {
    let heads = scores.ncols();
    let mut out = Array2::zeros(scores.raw_dim());
    let s = scores.as_slice().expect("standard layout");
    let o = out.as_slice_mut().unwrap();
    for w in offsets.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        for m in 0..heads {
            let mut max = f64::NEG_INFINITY;
            for e in lo..hi {
                max = max.max(s[e * heads + m]);
            }
            let mut total = 0.0;
            for e in lo..hi {
                let x = (s[e * heads + m] - max).exp();
                o[e * heads + m] = x;
                total += x;
            }
            for e in lo..hi {
                o[e * heads + m] /= total;
            }
        }
    }
    out
}

fn aggregate(
    coef: &Array2<f64>,
    z: &Array2<f64>,
    input: &GraphInput,
    heads: usize,
    hidden: usize,
) -> Array2<f64> {
    let n = input.n();
    let width = heads * hidden;
    let mut agg = Array2::zeros((n, width));
    let a = agg.as_slice_mut().unwrap();
    let zs = z.as_slice().unwrap();
    let c = coef.as_slice().unwrap();
    let offsets = input.offsets();
    let dst = input.dst();
    for i in 0..n {
        let out = &mut a[i * width..(i + 1) * width];
        for e in offsets[i]..offsets[i + 1] {
            let zj = &zs[dst[e] * width..(dst[e] + 1) * width];
            for m in 0..heads {
                let w = c[e * heads + m];
                let range = m * hidden..(m + 1) * hidden;
                for (o, x) in out[range.clone()].iter_mut().zip(&zj[range]) {
                    *o += w * x;
                }
            }
        }
    }
    agg
}

fn combine(z: &Array2<f64>, agg: Array2<f64>, aggregation: Aggregation) -> Array2<f64> {
    match aggregation {
        Aggregation::Plain => agg,
        Aggregation::Sep => ndarray::concatenate![ndarray::Axis(1), *z, agg],
    }
}

/// Output of one layer given attention coefficients, without dropout.
/// `activation_hidden` selects ELU (hidden layers) versus identity (output
/// layer) on the per-head outputs before `w_out`.
pub fn layer_forward(
    h_prev: &Array2<f64>,
    params: &LayerParams,
    coefficients: &Array2<f64>,
    input: &GraphInput,
    aggregation: Aggregation,
    activation_hidden: bool,
) -> Array2<f64> {
    let act = if activation_hidden {
        Activation::Elu
    } else {
        Activation::Identity
    };
    let z = h_prev.dot(&params.w_node);
    let agg = aggregate(coefficients, &z, input, params.heads, params.hidden);
    let pre = combine(&z, agg, aggregation);
    pre.mapv(|x| act.apply(x)).dot(&params.w_out)
}

/// Everything the backward pass needs from one layer's forward pass.
#[derive(Debug, Clone)]
pub(crate) struct LayerCache {
    pub input: Array2<f64>,
    pub input_mask: Option<Array2<f64>>,
    pub z: Array2<f64>,
    pub edge_proj: Option<Array2<f64>>,
    pub raw: Array2<f64>,
    pub alpha: Array2<f64>,
    pub alpha_mask: Option<Array2<f64>>,
    pub alpha_used: Array2<f64>,
    pub pre: Array2<f64>,
    pub act: Array2<f64>,
}

pub(crate) struct LayerSetup<'a> {
    pub params: &'a LayerParams,
    pub input: &'a GraphInput,
    pub mode: AttentionMode,
    pub aggregation: Aggregation,
    pub activation: Activation,
    pub slope: f64,
}

impl LayerSetup<'_> {
    /// `input_mask` and `alpha_mask` hold inverted-dropout scale factors.
    pub fn forward(
        &self,
        x: &Array2<f64>,
        input_mask: Option<Array2<f64>>,
        alpha_mask: Option<Array2<f64>>,
    ) -> (Array2<f64>, LayerCache) {
        let p = self.params;
        let input = match &input_mask {
            Some(mask) => x * mask,
            None => x.clone(),
        };
        let z = input.dot(&p.w_node);
        let edge_proj = edge_projection(p, self.input.features.as_ref(), self.mode);
        let raw = raw_scores(&z, p, edge_proj.as_ref(), self.input);
        let slope = self.slope;
        let alpha = masked_softmax(&raw.mapv(|x| leaky(x, slope)), self.input.offsets());
        let alpha_used = match &alpha_mask {
            Some(mask) => &alpha * mask,
            None => alpha.clone(),
        };
        let agg = aggregate(&alpha_used, &z, self.input, p.heads, p.hidden);
        let pre = combine(&z, agg, self.aggregation);
        let act_fn = self.activation;
        let act = pre.mapv(|x| act_fn.apply(x));
        let out = act.dot(&p.w_out);
        let cache = LayerCache {
            input,
            input_mask,
            z,
            edge_proj,
            raw,
            alpha,
            alpha_mask,
            alpha_used,
            pre,
            act,
        };
        (out, cache)
    }

    /// Gradients of the layer parameters and of the layer input (before its
    /// dropout), given the gradient of the layer output.
    pub fn backward(
        &self,
        cache: &LayerCache,
        d_out: &Array2<f64>,
        need_input_grad: bool,
    ) -> (LayerParams, Option<Array2<f64>>) {
        let p = self.params;
        let (heads, hidden) = (p.heads, p.hidden);
        let width = heads * hidden;
        let n = self.input.n();
        let e_count = self.input.num_directed();
        let offsets = self.input.offsets();
        let dst = self.input.dst();
        let src = &self.input.src;
        let mut grads = p.zeros_like();

        grads.w_out = cache.act.t().dot(d_out);
        let mut d_pre = d_out.dot(&p.w_out.t());
        let act_fn = self.activation;
        Zip::from(&mut d_pre)
            .and(&cache.pre)
            .for_each(|d, &x| *d *= act_fn.derivative(x));

        let (mut d_z, d_agg) = match self.aggregation {
            Aggregation::Plain => (Array2::zeros((n, width)), d_pre),
            Aggregation::Sep => (
                d_pre.slice(s![.., ..width]).to_owned(),
                d_pre.slice(s![.., width..]).to_owned(),
            ),
        };

        // Through the aggregation.
        let mut d_alpha = Array2::<f64>::zeros((e_count, heads));
        {
            let dz = d_z.as_slice_mut().unwrap();
            let da = d_alpha.as_slice_mut().unwrap();
            let dg = d_agg.as_slice().unwrap();
            let zs = cache.z.as_slice().unwrap();
            let au = cache.alpha_used.as_slice().unwrap();
            for i in 0..n {
                let gi = &dg[i * width..(i + 1) * width];
                for e in offsets[i]..offsets[i + 1] {
                    let j = dst[e];
                    for m in 0..heads {
                        let r = m * hidden..(m + 1) * hidden;
                        da[e * heads + m] = dot(&gi[r.clone()], &zs[j * width..][r.clone()]);
                        let w = au[e * heads + m];
                        for (d, g) in dz[j * width..][r.clone()].iter_mut().zip(&gi[r]) {
                            *d += w * g;
                        }
                    }
                }
            }
        }
        if let Some(mask) = &cache.alpha_mask {
            d_alpha *= mask;
        }

        // Through the softmax and LeakyReLU.
        let mut d_raw = Array2::<f64>::zeros((e_count, heads));
        {
            let da = d_alpha.as_slice().unwrap();
            let al = cache.alpha.as_slice().unwrap();
            let raw = cache.raw.as_slice().unwrap();
            let dr = d_raw.as_slice_mut().unwrap();
            for w in offsets.windows(2) {
                for m in 0..heads {
                    let mut inner = 0.0;
                    for e in w[0]..w[1] {
                        inner += al[e * heads + m] * da[e * heads + m];
                    }
                    for e in w[0]..w[1] {
                        let k = e * heads + m;
                        let ds = al[k] * (da[k] - inner);
                        dr[k] = if raw[k] > 0.0 { ds } else { self.slope * ds };
                    }
                }
            }
        }

        // Through the node and edge score terms.
        let mut d_ssrc = vec![0.0; n * heads];
        let mut d_sdst = vec![0.0; n * heads];
        {
            let dr = d_raw.as_slice().unwrap();
            for e in 0..e_count {
                for m in 0..heads {
                    d_ssrc[src[e] * heads + m] += dr[e * heads + m];
                    d_sdst[dst[e] * heads + m] += dr[e * heads + m];
                }
            }
        }
        {
            let zs = cache.z.as_slice().unwrap();
            let dz = d_z.as_slice_mut().unwrap();
            for m in 0..heads {
                let a_src = p.att_src.row(m).to_vec();
                let a_dst = p.att_dst.row(m).to_vec();
                let mut g_src = vec![0.0; hidden];
                let mut g_dst = vec![0.0; hidden];
                for i in 0..n {
                    let (gs, gd) = (d_ssrc[i * heads + m], d_sdst[i * heads + m]);
                    let base = i * width + m * hidden;
                    for k in 0..hidden {
                        g_src[k] += gs * zs[base + k];
                        g_dst[k] += gd * zs[base + k];
                        dz[base + k] += gs * a_src[k] + gd * a_dst[k];
                    }
                }
                grads
                    .att_src
                    .row_mut(m)
                    .assign(&ndarray::Array1::from(g_src));
                grads
                    .att_dst
                    .row_mut(m)
                    .assign(&ndarray::Array1::from(g_dst));
            }
        }
        if let (Some(proj), Some(att_edge), Some(features)) = (
            &cache.edge_proj,
            p.att_edge.as_ref(),
            self.input.features.as_ref(),
        ) {
            let de = p.edge_dim;
            let mut d_proj = Array2::<f64>::zeros(proj.raw_dim());
            let mut g_att = Array2::<f64>::zeros(att_edge.raw_dim());
            {
                let dr = d_raw.as_slice().unwrap();
                let pr = proj.as_slice().unwrap();
                let dp = d_proj.as_slice_mut().unwrap();
                for e in 0..e_count {
                    for m in 0..heads {
                        let g = dr[e * heads + m];
                        let base = e * heads * de + m * de;
                        for k in 0..de {
                            g_att[[m, k]] += g * pr[base + k];
                            dp[base + k] = g * att_edge[[m, k]];
                        }
                    }
                }
            }
            grads.att_edge = Some(g_att);
            grads.w_edge = Some(features.values.t().dot(&d_proj));
        }

        grads.w_node = cache.input.t().dot(&d_z);
        let d_input = need_input_grad.then(|| {
            let mut d = d_z.dot(&p.w_node.t());
            if let Some(mask) = &cache.input_mask {
                d *= mask;
            }
            d
        });
        (grads, d_input)
    }
}
