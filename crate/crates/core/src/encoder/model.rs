//! The bundled encoder: word-hash embeddings, a small pre-LN attention
//! stack, mean pooling over real tokens, and a linear classification head.
//!
//! Parameters live in one flat `Vec<f64>` described by a [`Layout`], which
//! keeps the optimizer, freeze policies, and checkpointing trivial. Forward
//! and backward are written out by hand; `grad_check` in the tests verifies
//! every gradient against central finite differences.
//!
//! All math is f64 through `libm`, so results are bit-reproducible across
//! platforms for a fixed seed.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tokenizer::{FIRST_WORD_ID, PAD_ID};

/// Architecture of a bundled encoder family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TinyArch {
    /// Hash-bucket vocabulary size (including the three special ids).
    pub vocab: usize,
    /// Model width.
    pub dim: usize,
    /// Attention heads; must divide `dim`.
    pub heads: usize,
    /// Number of attention blocks.
    pub blocks: usize,
    /// Feed-forward inner width.
    pub ff_dim: usize,
    /// Positional capacity: the longest supported sequence.
    pub capacity: usize,
}

impl TinyArch {
    pub fn validate(&self) -> Result<(), &'static str> {
        if self.vocab <= FIRST_WORD_ID {
            return Err("vocab must exceed the reserved special ids");
        }
        if self.dim == 0 || self.heads == 0 || !self.dim.is_multiple_of(self.heads) {
            return Err("dim must be a positive multiple of heads");
        }
        if self.blocks == 0 || self.ff_dim == 0 || self.capacity < 2 {
            return Err("blocks, ff_dim, and capacity must be positive (capacity >= 2)");
        }
        Ok(())
    }
}

/// Which part of the network a parameter tensor belongs to, for freeze
/// policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ParamGroup {
    Embedding,
    Block(usize),
    FinalNorm,
    Head,
}

#[derive(Debug, Clone)]
pub(crate) struct ParamEntry {
    pub range: Range<usize>,
    pub group: ParamGroup,
    /// Whether decoupled weight decay applies (weights and embeddings yes,
    /// biases and layer norms no).
    pub decay: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct BlockLayout {
    pub ln1_gamma: Range<usize>,
    pub ln1_beta: Range<usize>,
    pub wq: Range<usize>,
    pub bq: Range<usize>,
    pub wk: Range<usize>,
    pub bk: Range<usize>,
    pub wv: Range<usize>,
    pub bv: Range<usize>,
    pub wo: Range<usize>,
    pub bo: Range<usize>,
    pub ln2_gamma: Range<usize>,
    pub ln2_beta: Range<usize>,
    pub w1: Range<usize>,
    pub b1: Range<usize>,
    pub w2: Range<usize>,
    pub b2: Range<usize>,
}

/// Offsets of every tensor inside the flat parameter vector.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub arch: TinyArch,
    pub classes: usize,
    pub tok_emb: Range<usize>,
    pub pos_emb: Range<usize>,
    pub blocks: Vec<BlockLayout>,
    pub final_gamma: Range<usize>,
    pub final_beta: Range<usize>,
    pub head_w: Range<usize>,
    pub head_b: Range<usize>,
    pub total: usize,
}

impl Layout {
    pub fn new(arch: TinyArch, classes: usize) -> Layout {
        let d = arch.dim;
        let mut cursor = 0usize;
        let mut take = |len: usize| {
            let range = cursor..cursor + len;
            cursor += len;
            range
        };

        let tok_emb = take(arch.vocab * d);
        let pos_emb = take(arch.capacity * d);
        let blocks = (0..arch.blocks)
            .map(|_| BlockLayout {
                ln1_gamma: take(d),
                ln1_beta: take(d),
                wq: take(d * d),
                bq: take(d),
                wk: take(d * d),
                bk: take(d),
                wv: take(d * d),
                bv: take(d),
                wo: take(d * d),
                bo: take(d),
                ln2_gamma: take(d),
                ln2_beta: take(d),
                w1: take(d * arch.ff_dim),
                b1: take(arch.ff_dim),
                w2: take(arch.ff_dim * d),
                b2: take(d),
            })
            .collect();
        let final_gamma = take(d);
        let final_beta = take(d);
        let head_w = take(d * classes);
        let head_b = take(classes);

        Layout {
            arch,
            classes,
            tok_emb,
            pos_emb,
            blocks,
            final_gamma,
            final_beta,
            head_w,
            head_b,
            total: cursor,
        }
    }

    /// Every tensor with its group and decay eligibility.
    pub fn entries(&self) -> Vec<ParamEntry> {
        let mut entries = vec![
            ParamEntry {
                range: self.tok_emb.clone(),
                group: ParamGroup::Embedding,
                decay: true,
            },
            ParamEntry {
                range: self.pos_emb.clone(),
                group: ParamGroup::Embedding,
                decay: true,
            },
        ];
        for (index, block) in self.blocks.iter().enumerate() {
            let group = ParamGroup::Block(index);
            let weights = [&block.wq, &block.wk, &block.wv, &block.wo, &block.w1, &block.w2];
            let plain = [
                &block.ln1_gamma,
                &block.ln1_beta,
                &block.bq,
                &block.bk,
                &block.bv,
                &block.bo,
                &block.ln2_gamma,
                &block.ln2_beta,
                &block.b1,
                &block.b2,
            ];
            for range in weights {
                entries.push(ParamEntry {
                    range: range.clone(),
                    group,
                    decay: true,
                });
            }
            for range in plain {
                entries.push(ParamEntry {
                    range: range.clone(),
                    group,
                    decay: false,
                });
            }
        }
        entries.push(ParamEntry {
            range: self.final_gamma.clone(),
            group: ParamGroup::FinalNorm,
            decay: false,
        });
        entries.push(ParamEntry {
            range: self.final_beta.clone(),
            group: ParamGroup::FinalNorm,
            decay: false,
        });
        entries.push(ParamEntry {
            range: self.head_w.clone(),
            group: ParamGroup::Head,
            decay: true,
        });
        entries.push(ParamEntry {
            range: self.head_b.clone(),
            group: ParamGroup::Head,
            decay: false,
        });
        entries
    }
}

fn sample_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; lower bound keeps log() finite.
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
}

/// Seeded initialization: N(0, 0.02) weights and embeddings, unit layer-norm
/// gains, zero biases.
pub(crate) fn init_params(layout: &Layout, seed: u64) -> Vec<f64> {
    let mut params = vec![0.0f64; layout.total];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for entry in layout.entries() {
        if entry.decay {
            for value in &mut params[entry.range] {
                *value = 0.02 * sample_normal(&mut rng);
            }
        }
    }
    for range in [&layout.final_gamma] {
        for value in &mut params[range.clone()] {
            *value = 1.0;
        }
    }
    for block in &layout.blocks {
        for range in [&block.ln1_gamma, &block.ln2_gamma] {
            for value in &mut params[range.clone()] {
                *value = 1.0;
            }
        }
    }
    params
}

const LN_EPS: f64 = 1e-5;

/// out = x . w + b over `n` rows; w is `[din, dout]` row-major.
#[allow(clippy::too_many_arguments)]
fn linear_forward(x: &[f64], w: &[f64], b: &[f64], n: usize, din: usize, dout: usize, out: &mut [f64]) {
    for i in 0..n {
        let row = &x[i * din..(i + 1) * din];
        let out_row = &mut out[i * dout..(i + 1) * dout];
        out_row.copy_from_slice(b);
        for (k, &xv) in row.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            let w_row = &w[k * dout..(k + 1) * dout];
            for (o, &wv) in w_row.iter().enumerate() {
                out_row[o] += xv * wv;
            }
        }
    }
}

/// Accumulates dx, dw, db for the linear layer above.
#[allow(clippy::too_many_arguments)]
fn linear_backward(
    x: &[f64],
    w: &[f64],
    dy: &[f64],
    n: usize,
    din: usize,
    dout: usize,
    dx: &mut [f64],
    dw: &mut [f64],
    db: &mut [f64],
) {
    for i in 0..n {
        let x_row = &x[i * din..(i + 1) * din];
        let dy_row = &dy[i * dout..(i + 1) * dout];
        let dx_row = &mut dx[i * din..(i + 1) * din];
        for (o, &g) in dy_row.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            db[o] += g;
            for k in 0..din {
                dx_row[k] += g * w[k * dout + o];
                dw[k * dout + o] += g * x_row[k];
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn layer_norm_forward(
    x: &[f64],
    gamma: &[f64],
    beta: &[f64],
    n: usize,
    d: usize,
    out: &mut [f64],
    mean: &mut [f64],
    rstd: &mut [f64],
) {
    for i in 0..n {
        let row = &x[i * d..(i + 1) * d];
        let m = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|&v| (v - m) * (v - m)).sum::<f64>() / d as f64;
        let r = 1.0 / libm::sqrt(var + LN_EPS);
        mean[i] = m;
        rstd[i] = r;
        let out_row = &mut out[i * d..(i + 1) * d];
        for k in 0..d {
            out_row[k] = gamma[k] * (row[k] - m) * r + beta[k];
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn layer_norm_backward(
    x: &[f64],
    gamma: &[f64],
    mean: &[f64],
    rstd: &[f64],
    dy: &[f64],
    n: usize,
    d: usize,
    dx: &mut [f64],
    dgamma: &mut [f64],
    dbeta: &mut [f64],
) {
    for i in 0..n {
        let row = &x[i * d..(i + 1) * d];
        let dy_row = &dy[i * d..(i + 1) * d];
        let (m, r) = (mean[i], rstd[i]);

        let mut mean_dxhat = 0.0;
        let mut mean_dxhat_xhat = 0.0;
        for k in 0..d {
            let xhat = (row[k] - m) * r;
            let dxhat = dy_row[k] * gamma[k];
            mean_dxhat += dxhat;
            mean_dxhat_xhat += dxhat * xhat;
            dgamma[k] += dy_row[k] * xhat;
            dbeta[k] += dy_row[k];
        }
        mean_dxhat /= d as f64;
        mean_dxhat_xhat /= d as f64;

        let dx_row = &mut dx[i * d..(i + 1) * d];
        for k in 0..d {
            let xhat = (row[k] - m) * r;
            let dxhat = dy_row[k] * gamma[k];
            dx_row[k] += r * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat);
        }
    }
}

/// Per-block forward caches kept for the backward pass.
struct BlockTrace {
    input: Vec<f64>,
    ln1_out: Vec<f64>,
    ln1_mean: Vec<f64>,
    ln1_rstd: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    probs: Vec<f64>,
    ctx: Vec<f64>,
    x_mid: Vec<f64>,
    ln2_out: Vec<f64>,
    ln2_mean: Vec<f64>,
    ln2_rstd: Vec<f64>,
    ff_pre: Vec<f64>,
    ff_act: Vec<f64>,
}

/// Forward activations for one batch.
pub(crate) struct Forward {
    batch: usize,
    max_len: usize,
    ids: Vec<usize>,
    lens: Vec<usize>,
    blocks: Vec<BlockTrace>,
    final_in: Vec<f64>,
    final_mean: Vec<f64>,
    final_rstd: Vec<f64>,
    pooled: Vec<f64>,
    /// Softmax class probabilities, `[batch, classes]` row-major.
    pub probs: Vec<f64>,
}

impl Forward {
    pub fn positive_scores(&self, classes: usize) -> Vec<f64> {
        (0..self.batch).map(|i| self.probs[i * classes + 1]).collect()
    }
}

/// Runs the network over a batch of id sequences.
pub(crate) fn forward(layout: &Layout, params: &[f64], seqs: &[Vec<usize>]) -> Forward {
    let arch = layout.arch;
    let (d, heads, classes) = (arch.dim, arch.heads, layout.classes);
    let hd = d / heads;
    let scale = 1.0 / libm::sqrt(hd as f64);

    let batch = seqs.len();
    let max_len = seqs.iter().map(Vec::len).max().unwrap_or(2).max(2);
    let n = batch * max_len;

    let mut ids = vec![PAD_ID; n];
    let mut lens = vec![0usize; batch];
    for (i, seq) in seqs.iter().enumerate() {
        debug_assert!(seq.len() >= 2 && seq.len() <= arch.capacity);
        lens[i] = seq.len();
        ids[i * max_len..i * max_len + seq.len()].copy_from_slice(seq);
    }

    // Embeddings.
    let tok = &params[layout.tok_emb.clone()];
    let pos = &params[layout.pos_emb.clone()];
    let mut x = vec![0.0f64; n * d];
    for i in 0..batch {
        for t in 0..max_len {
            let row = &mut x[(i * max_len + t) * d..(i * max_len + t + 1) * d];
            let id = ids[i * max_len + t];
            for k in 0..d {
                row[k] = tok[id * d + k] + pos[t * d + k];
            }
        }
    }

    let mut blocks = Vec::with_capacity(arch.blocks);
    for block in &layout.blocks {
        let input = x.clone();
        let mut ln1_out = vec![0.0; n * d];
        let mut ln1_mean = vec![0.0; n];
        let mut ln1_rstd = vec![0.0; n];
        layer_norm_forward(
            &input,
            &params[block.ln1_gamma.clone()],
            &params[block.ln1_beta.clone()],
            n,
            d,
            &mut ln1_out,
            &mut ln1_mean,
            &mut ln1_rstd,
        );

        let mut q = vec![0.0; n * d];
        let mut k = vec![0.0; n * d];
        let mut v = vec![0.0; n * d];
        linear_forward(&ln1_out, &params[block.wq.clone()], &params[block.bq.clone()], n, d, d, &mut q);
        linear_forward(&ln1_out, &params[block.wk.clone()], &params[block.bk.clone()], n, d, d, &mut k);
        linear_forward(&ln1_out, &params[block.wv.clone()], &params[block.bv.clone()], n, d, d, &mut v);

        // Attention: keys/values masked to the real tokens of each sequence.
        let mut probs = vec![0.0f64; batch * heads * max_len * max_len];
        let mut ctx = vec![0.0f64; n * d];
        for i in 0..batch {
            let len = lens[i];
            for h in 0..heads {
                let off = h * hd;
                for t in 0..max_len {
                    let q_row = &q[(i * max_len + t) * d + off..(i * max_len + t) * d + off + hd];
                    let p_row = &mut probs
                        [((i * heads + h) * max_len + t) * max_len..((i * heads + h) * max_len + t + 1) * max_len];
                    let mut max_score = f64::NEG_INFINITY;
                    for j in 0..len {
                        let k_row = &k[(i * max_len + j) * d + off..(i * max_len + j) * d + off + hd];
                        let score = scale * q_row.iter().zip(k_row).map(|(a, b)| a * b).sum::<f64>();
                        p_row[j] = score;
                        max_score = max_score.max(score);
                    }
                    let mut total = 0.0;
                    for value in p_row.iter_mut().take(len) {
                        *value = libm::exp(*value - max_score);
                        total += *value;
                    }
                    for value in p_row.iter_mut().take(len) {
                        *value /= total;
                    }

                    let ctx_row = &mut ctx[(i * max_len + t) * d + off..(i * max_len + t) * d + off + hd];
                    for j in 0..len {
                        let p = p_row[j];
                        if p == 0.0 {
                            continue;
                        }
                        let v_row = &v[(i * max_len + j) * d + off..(i * max_len + j) * d + off + hd];
                        for c in 0..hd {
                            ctx_row[c] += p * v_row[c];
                        }
                    }
                }
            }
        }

        let mut attn_out = vec![0.0; n * d];
        linear_forward(&ctx, &params[block.wo.clone()], &params[block.bo.clone()], n, d, d, &mut attn_out);
        let mut x_mid = input.clone();
        for (value, add) in x_mid.iter_mut().zip(&attn_out) {
            *value += add;
        }

        let mut ln2_out = vec![0.0; n * d];
        let mut ln2_mean = vec![0.0; n];
        let mut ln2_rstd = vec![0.0; n];
        layer_norm_forward(
            &x_mid,
            &params[block.ln2_gamma.clone()],
            &params[block.ln2_beta.clone()],
            n,
            d,
            &mut ln2_out,
            &mut ln2_mean,
            &mut ln2_rstd,
        );

        let mut ff_pre = vec![0.0; n * arch.ff_dim];
        linear_forward(&ln2_out, &params[block.w1.clone()], &params[block.b1.clone()], n, d, arch.ff_dim, &mut ff_pre);
        let ff_act: Vec<f64> = ff_pre.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
        let mut ff_out = vec![0.0; n * d];
        linear_forward(&ff_act, &params[block.w2.clone()], &params[block.b2.clone()], n, arch.ff_dim, d, &mut ff_out);

        let mut x_next = x_mid.clone();
        for (value, add) in x_next.iter_mut().zip(&ff_out) {
            *value += add;
        }

        blocks.push(BlockTrace {
            input,
            ln1_out,
            ln1_mean,
            ln1_rstd,
            q,
            k,
            v,
            probs,
            ctx,
            x_mid,
            ln2_out,
            ln2_mean,
            ln2_rstd,
            ff_pre,
            ff_act,
        });
        x = x_next;
    }

    let final_in = x;
    let mut final_out = vec![0.0; n * d];
    let mut final_mean = vec![0.0; n];
    let mut final_rstd = vec![0.0; n];
    layer_norm_forward(
        &final_in,
        &params[layout.final_gamma.clone()],
        &params[layout.final_beta.clone()],
        n,
        d,
        &mut final_out,
        &mut final_mean,
        &mut final_rstd,
    );

    // Mean pooling over real tokens.
    let mut pooled = vec![0.0f64; batch * d];
    for i in 0..batch {
        let len = lens[i];
        let row = &mut pooled[i * d..(i + 1) * d];
        for t in 0..len {
            for k in 0..d {
                row[k] += final_out[(i * max_len + t) * d + k];
            }
        }
        for value in row.iter_mut() {
            *value /= len as f64;
        }
    }

    let mut logits = vec![0.0f64; batch * classes];
    linear_forward(&pooled, &params[layout.head_w.clone()], &params[layout.head_b.clone()], batch, d, classes, &mut logits);

    let mut probs = logits;
    for i in 0..batch {
        let row = &mut probs[i * classes..(i + 1) * classes];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for value in row.iter_mut() {
            *value = libm::exp(*value - max);
            total += *value;
        }
        for value in row.iter_mut() {
            *value /= total;
        }
    }

    Forward {
        batch,
        max_len,
        ids,
        lens,
        blocks,
        final_in,

        final_mean,
        final_rstd,
        pooled,
        probs,
    }
}

/// Mean cross-entropy of the batch.
pub(crate) fn batch_loss(fwd: &Forward, classes: usize, targets: &[usize]) -> f64 {
    debug_assert_eq!(targets.len(), fwd.batch);
    let mut loss = 0.0;
    for (i, &target) in targets.iter().enumerate() {
        let p = fwd.probs[i * classes + target].max(1e-300);
        loss -= libm::log(p);
    }
    loss / fwd.batch as f64
}

/// Backpropagates the mean cross-entropy; returns gradients with the same
/// layout as the parameters.
pub(crate) fn backward(layout: &Layout, params: &[f64], fwd: &Forward, targets: &[usize]) -> Vec<f64> {
    let arch = layout.arch;
    let (d, heads, classes) = (arch.dim, arch.heads, layout.classes);
    let hd = d / heads;
    let scale = 1.0 / libm::sqrt(hd as f64);
    let (batch, max_len) = (fwd.batch, fwd.max_len);
    let n = batch * max_len;

    let mut grads = vec![0.0f64; layout.total];

    // d loss / d logits for softmax + mean cross-entropy.
    let mut dlogits = fwd.probs.clone();
    for (i, &target) in targets.iter().enumerate() {
        dlogits[i * classes + target] -= 1.0;
    }
    for value in dlogits.iter_mut() {
        *value /= batch as f64;
    }

    // Head.
    let mut dpooled = vec![0.0f64; batch * d];
    {
        let mut dw = vec![0.0; d * classes];
        let mut db = vec![0.0; classes];
        linear_backward(
            &fwd.pooled,
            &params[layout.head_w.clone()],
            &dlogits,
            batch,
            d,
            classes,
            &mut dpooled,
            &mut dw,
            &mut db,
        );
        grads[layout.head_w.clone()].copy_from_slice(&dw);
        grads[layout.head_b.clone()].copy_from_slice(&db);
    }

    // Un-pool: every real token of a sequence shares the pooled gradient.
    let mut dx = vec![0.0f64; n * d];
    for i in 0..batch {
        let len = fwd.lens[i] as f64;
        for t in 0..fwd.lens[i] {
            for k in 0..d {
                dx[(i * max_len + t) * d + k] = dpooled[i * d + k] / len;
            }
        }
    }

    // Final layer norm.
    let mut dfinal_in = vec![0.0f64; n * d];
    {
        let mut dgamma = vec![0.0; d];
        let mut dbeta = vec![0.0; d];
        layer_norm_backward(
            &fwd.final_in,
            &params[layout.final_gamma.clone()],
            &fwd.final_mean,
            &fwd.final_rstd,
            &dx,
            n,
            d,
            &mut dfinal_in,
            &mut dgamma,
            &mut dbeta,
        );
        grads[layout.final_gamma.clone()].copy_from_slice(&dgamma);
        grads[layout.final_beta.clone()].copy_from_slice(&dbeta);
    }

    let mut dx = dfinal_in;
    for (block, trace) in layout.blocks.iter().zip(&fwd.blocks).rev() {
        // Feed-forward sub-layer: x_next = x_mid + W2 relu(W1 ln2(x_mid)).
        let mut dff_act = vec![0.0; n * arch.ff_dim];
        {
            let mut dw2 = vec![0.0; arch.ff_dim * d];
            let mut db2 = vec![0.0; d];
            linear_backward(&trace.ff_act, &params[block.w2.clone()], &dx, n, arch.ff_dim, d, &mut dff_act, &mut dw2, &mut db2);
            grads[block.w2.clone()].copy_from_slice(&dw2);
            grads[block.b2.clone()].copy_from_slice(&db2);
        }
        for (g, &pre) in dff_act.iter_mut().zip(&trace.ff_pre) {
            if pre <= 0.0 {
                *g = 0.0;
            }
        }
        let mut dln2_out = vec![0.0; n * d];
        {
            let mut dw1 = vec![0.0; d * arch.ff_dim];
            let mut db1 = vec![0.0; arch.ff_dim];
            linear_backward(&trace.ln2_out, &params[block.w1.clone()], &dff_act, n, d, arch.ff_dim, &mut dln2_out, &mut dw1, &mut db1);
            grads[block.w1.clone()].copy_from_slice(&dw1);
            grads[block.b1.clone()].copy_from_slice(&db1);
        }
        // Residual: gradient flows both through the FFN branch and directly.
        let mut dx_mid = dx.clone();
        {
            let mut dgamma = vec![0.0; d];
            let mut dbeta = vec![0.0; d];
            layer_norm_backward(
                &trace.x_mid,
                &params[block.ln2_gamma.clone()],
                &trace.ln2_mean,
                &trace.ln2_rstd,
                &dln2_out,
                n,
                d,
                &mut dx_mid,
                &mut dgamma,
                &mut dbeta,
            );
            grads[block.ln2_gamma.clone()].copy_from_slice(&dgamma);
            grads[block.ln2_beta.clone()].copy_from_slice(&dbeta);
        }

        // Attention sub-layer: x_mid = input + Wo ctx.
        let mut dctx = vec![0.0; n * d];
        {
            let mut dwo = vec![0.0; d * d];
            let mut dbo = vec![0.0; d];
            linear_backward(&trace.ctx, &params[block.wo.clone()], &dx_mid, n, d, d, &mut dctx, &mut dwo, &mut dbo);
            grads[block.wo.clone()].copy_from_slice(&dwo);
            grads[block.bo.clone()].copy_from_slice(&dbo);
        }

        let mut dq = vec![0.0; n * d];
        let mut dk = vec![0.0; n * d];
        let mut dv = vec![0.0; n * d];
        for i in 0..batch {
            let len = fwd.lens[i];
            for h in 0..heads {
                let off = h * hd;
                for t in 0..max_len {
                    let p_row = &trace.probs
                        [((i * heads + h) * max_len + t) * max_len..((i * heads + h) * max_len + t + 1) * max_len];
                    let dctx_row = &dctx[(i * max_len + t) * d + off..(i * max_len + t) * d + off + hd];

                    // dP and the softmax Jacobian row sum.
                    let mut dp = vec![0.0f64; len];
                    let mut row_dot = 0.0;
                    for (j, dp_j) in dp.iter_mut().enumerate() {
                        let v_row = &trace.v[(i * max_len + j) * d + off..(i * max_len + j) * d + off + hd];
                        *dp_j = dctx_row.iter().zip(v_row).map(|(a, b)| a * b).sum::<f64>();
                        row_dot += *dp_j * p_row[j];
                    }

                    let q_row = &trace.q[(i * max_len + t) * d + off..(i * max_len + t) * d + off + hd];
                    for j in 0..len {
                        let p = p_row[j];
                        if p == 0.0 {
                            continue;
                        }
                        let ds = p * (dp[j] - row_dot) * scale;
                        let k_row = &trace.k[(i * max_len + j) * d + off..(i * max_len + j) * d + off + hd];
                        for c in 0..hd {
                            dq[(i * max_len + t) * d + off + c] += ds * k_row[c];
                            dk[(i * max_len + j) * d + off + c] += ds * q_row[c];
                            dv[(i * max_len + j) * d + off + c] += p * dctx_row[c];
                        }
                    }
                }
            }
        }

        let mut dln1_out = vec![0.0; n * d];
        for (w, b, input_grad) in [
            (&block.wq, &block.bq, &dq),
            (&block.wk, &block.bk, &dk),
            (&block.wv, &block.bv, &dv),
        ] {
            let mut dw = vec![0.0; d * d];
            let mut db = vec![0.0; d];
            linear_backward(&trace.ln1_out, &params[w.clone()], input_grad, n, d, d, &mut dln1_out, &mut dw, &mut db);
            grads[w.clone()].copy_from_slice(&dw);
            grads[b.clone()].copy_from_slice(&db);
        }

        // Residual into the block input.
        let mut dinput = dx_mid;
        {
            let mut dgamma = vec![0.0; d];
            let mut dbeta = vec![0.0; d];
            layer_norm_backward(
                &trace.input,
                &params[block.ln1_gamma.clone()],
                &trace.ln1_mean,
                &trace.ln1_rstd,
                &dln1_out,
                n,
                d,
                &mut dinput,
                &mut dgamma,
                &mut dbeta,
            );
            grads[block.ln1_gamma.clone()].copy_from_slice(&dgamma);
            grads[block.ln1_beta.clone()].copy_from_slice(&dbeta);
        }
        dx = dinput;
    }

    // Embeddings.
    {
        let tok_base = layout.tok_emb.start;
        let pos_base = layout.pos_emb.start;
        for i in 0..batch {
            for t in 0..max_len {
                let id = fwd.ids[i * max_len + t];
                for k in 0..d {
                    let g = dx[(i * max_len + t) * d + k];
                    if g == 0.0 {
                        continue;
                    }
                    grads[tok_base + id * d + k] += g;
                    grads[pos_base + t * d + k] += g;
                }
            }
        }
    }

    grads
}
