//! The two decoupled scoring pathways and the scalar fusion gate.
//!
//! A batch is processed with the candidates of all its samples stacked into
//! one row block, so every affine layer runs as a single matrix product.

use rand::Rng;

use super::config::{ModelConfig, PoseCategory, TextCategory};
use super::sample::Sample;
use crate::error::{Error, Result};
use crate::neural::affine::glorot_limit;
use crate::neural::ops::{dropout, dropout_backward, relu_backward, relu_inplace, ZNORM_EPS};
use crate::neural::{
    sigmoid, softmax_ce, znorm, znorm_backward, Affine, CategoryBranch, EmbeddingTable, Mode, Param, Parameterized,
    ZNorm,
};

/// Category information the model is built against.
#[derive(Debug, Clone, Copy)]
pub struct CategoryInputs<'a> {
    pub num_categories: usize,
    /// Frozen semantic vector per category row, required by frozen modes.
    pub frozen: Option<&'a [Vec<f64>]>,
}

/// Pose pathway: `[features; E_pose[c]]` -> 2-layer encoder -> 2-layer scorer.
#[derive(Debug, Clone, PartialEq)]
pub struct PosePathway {
    pub enc1: Affine,
    pub enc1_cat: Option<CategoryBranch>,
    pub enc2: Affine,
    pub sc1: Affine,
    pub sc2: Affine,
}

/// Text pathway: projected utterance broadcast over objects, concatenated
/// with `E_text[c]`, then a 2-layer scorer. Sees no geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct TextPathway {
    pub proj: Affine,
    pub sc1: Affine,
    pub sc1_cat: Option<CategoryBranch>,
    pub sc2: Affine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionModel {
    pub config: ModelConfig,
    pub pose: Option<PosePathway>,
    pub text: Option<TextPathway>,
    /// Gate logit `w`; `alpha = sigmoid(w)` weights the pose pathway.
    pub gate: Param,
}

/// Category-row projections, valid until the next parameter update.
#[derive(Debug, Clone, Default)]
pub struct Projections {
    pose: Option<Vec<f64>>,
    text: Option<Vec<f64>>,
}

/// Per-category gradients w.r.t. the projected rows.
#[derive(Debug, Clone, Default)]
struct CategoryGrads {
    pose: Option<Vec<f64>>,
    text: Option<Vec<f64>>,
}

/// Samples with their candidates stacked row-wise.
#[derive(Debug, Clone)]
pub struct StackedBatch<'a> {
    pub samples: &'a [&'a Sample],
    /// Row offset of each sample; `offsets[i]..offsets[i + 1]` are its candidates.
    pub offsets: Vec<usize>,
    pose_features: Vec<f64>,
    category_ids: Vec<usize>,
    utterances: Vec<f64>,
}

impl<'a> StackedBatch<'a> {
    pub fn new(samples: &'a [&'a Sample]) -> Self {
        let mut offsets = Vec::with_capacity(samples.len() + 1);
        offsets.push(0);
        let (mut pose_features, mut category_ids, mut utterances) = (Vec::new(), Vec::new(), Vec::new());
        for s in samples {
            pose_features.extend_from_slice(&s.pose_features);
            category_ids.extend_from_slice(&s.category_ids);
            utterances.extend_from_slice(&s.utterance);
            offsets.push(category_ids.len());
        }
        Self {
            samples,
            offsets,
            pose_features,
            category_ids,
            utterances,
        }
    }

    pub fn rows(&self) -> usize {
        self.category_ids.len()
    }

    pub fn range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }
}

/// ReLU + dropout output and the dropout multipliers.
#[derive(Debug, Clone)]
struct Hidden {
    out: Vec<f64>,
    mask: Option<Vec<f64>>,
}

impl Hidden {
    fn new<R: Rng + ?Sized>(mut pre: Vec<f64>, p: f64, mode: Mode, rng: &mut R) -> Self {
        relu_inplace(&mut pre);
        let mask = dropout(&mut pre, p, mode, rng);
        Self { out: pre, mask }
    }

    /// Dropout then ReLU backward. A unit is live iff its output is positive:
    /// dropped units and inactive units both have output 0.
    fn backward(&self, d: &mut [f64]) {
        dropout_backward(self.mask.as_deref(), d);
        relu_backward(&self.out, d);
    }
}

#[derive(Debug, Clone)]
struct PoseTape {
    h1: Hidden,
    h2: Hidden,
    h3: Hidden,
    scores: Vec<f64>,
}

#[derive(Debug, Clone)]
struct TextTape {
    /// Projected utterances, one row per sample.
    u: Hidden,
    /// Scorer hidden layer: one row per candidate, or per sample when broadcast.
    h: Hidden,
    /// Scores were computed once per sample and broadcast (no category input).
    broadcast: bool,
    scores: Vec<f64>,
}

/// Everything the backward pass needs from one forward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    pose: Option<PoseTape>,
    text: Option<TextTape>,
    /// Per-sample normalization of each pathway (fused configs only).
    z: Vec<(ZNorm, ZNorm)>,
    alpha: f64,
    /// Final scores, stacked like the batch.
    pub scores: Vec<f64>,
}

impl Tape {
    pub fn pose_scores(&self) -> Option<&[f64]> {
        self.pose.as_ref().map(|t| t.scores.as_slice())
    }

    pub fn text_scores(&self) -> Option<&[f64]> {
        self.text.as_ref().map(|t| t.scores.as_slice())
    }
}

fn add_category_rows(pre: &mut [f64], proj: &[f64], ids: &[usize], width: usize) {
    for (row, &c) in pre.chunks_exact_mut(width).zip(ids) {
        for (a, b) in row.iter_mut().zip(&proj[c * width..(c + 1) * width]) {
            *a += b;
        }
    }
}

fn accumulate_category_rows(grads: &mut [f64], d: &[f64], ids: &[usize], width: usize) {
    for (row, &c) in d.chunks_exact(width).zip(ids) {
        for (g, v) in grads[c * width..(c + 1) * width].iter_mut().zip(row) {
            *g += v;
        }
    }
}

fn check_ids(batch: &StackedBatch<'_>, table: &EmbeddingTable) -> Result<()> {
    let rows = table.num_rows();
    for s in batch.samples {
        if let Some(c) = s.category_ids.iter().find(|&&c| c >= rows) {
            return Err(Error::invalid(&s.ref_id, format!("category id {c} outside table of {rows} rows")));
        }
    }
    Ok(())
}

fn category_table<R: Rng + ?Sized>(
    name: &str,
    learned: bool,
    frozen: bool,
    learned_dim: usize,
    cats: CategoryInputs<'_>,
    rng: &mut R,
) -> Result<Option<EmbeddingTable>> {
    if learned {
        return Ok(Some(EmbeddingTable::learned(name, cats.num_categories, learned_dim, rng)));
    }
    if !frozen {
        return Ok(None);
    }
    let vectors = cats
        .frozen
        .ok_or_else(|| Error::Config(format!("{name}: frozen category vectors required")))?;
    if vectors.len() != cats.num_categories {
        return Err(Error::Config(format!(
            "{name}: {} frozen category vectors for {} categories",
            vectors.len(),
            cats.num_categories
        )));
    }
    let dim = vectors.first().map_or(0, Vec::len);
    if dim == 0 || vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::Config(format!("{name}: frozen vectors must share a non-zero dimension")));
    }
    Ok(Some(EmbeddingTable::frozen(name, vectors, dim)))
}

impl PosePathway {
    fn new<R: Rng + ?Sized>(config: &ModelConfig, cats: CategoryInputs<'_>, rng: &mut R) -> Result<Self> {
        let h = config.hidden;
        let table = category_table(
            "pose.cat_table",
            config.pose_cat == PoseCategory::Learned16,
            config.pose_cat == PoseCategory::FrozenSemantic,
            config.learned_cat_dim,
            cats,
            rng,
        )?;
        let fan_in = config.pose_feat_dim + table.as_ref().map_or(0, EmbeddingTable::dim);
        let enc1 = Affine::uniform("pose.enc1", config.pose_feat_dim, h, true, glorot_limit(fan_in, h), rng);
        let enc1_cat = table.map(|t| CategoryBranch::new("pose.enc1_cat", t, h, fan_in, rng));
        Ok(Self {
            enc1,
            enc1_cat,
            enc2: Affine::glorot("pose.enc2", h, h, true, rng),
            sc1: Affine::glorot("pose.sc1", h, h, true, rng),
            sc2: Affine::glorot("pose.sc2", h, 1, true, rng),
        })
    }

    fn forward<R: Rng + ?Sized>(
        &self,
        proj: Option<&[f64]>,
        batch: &StackedBatch<'_>,
        p: f64,
        mode: Mode,
        rng: &mut R,
    ) -> Result<PoseTape> {
        let mut a1 = self.enc1.forward(&batch.pose_features)?;
        if let (Some(branch), Some(proj)) = (&self.enc1_cat, proj) {
            check_ids(batch, &branch.table)?;
            add_category_rows(&mut a1, proj, &batch.category_ids, self.enc1.out_dim());
        }
        let h1 = Hidden::new(a1, p, mode, rng);
        let h2 = Hidden::new(self.enc2.forward(&h1.out)?, p, mode, rng);
        let h3 = Hidden::new(self.sc1.forward(&h2.out)?, p, mode, rng);
        let scores = self.sc2.forward(&h3.out)?;
        Ok(PoseTape { h1, h2, h3, scores })
    }

    fn backward(
        &mut self,
        tape: &PoseTape,
        batch: &StackedBatch<'_>,
        d_scores: &[f64],
        cat_grads: Option<&mut Vec<f64>>,
    ) -> Result<()> {
        let mut d3 = self.sc2.backward(&tape.h3.out, d_scores, true)?.expect("input grad");
        tape.h3.backward(&mut d3);
        let mut d2 = self.sc1.backward(&tape.h2.out, &d3, true)?.expect("input grad");
        tape.h2.backward(&mut d2);
        let mut d1 = self.enc2.backward(&tape.h1.out, &d2, true)?.expect("input grad");
        tape.h1.backward(&mut d1);
        self.enc1.backward(&batch.pose_features, &d1, false)?;
        if let Some(g) = cat_grads {
            accumulate_category_rows(g, &d1, &batch.category_ids, self.enc1.out_dim());
        }
        Ok(())
    }
}

impl TextPathway {
    fn new<R: Rng + ?Sized>(config: &ModelConfig, cats: CategoryInputs<'_>, rng: &mut R) -> Result<Self> {
        let h = config.hidden;
        let table = category_table(
            "text.cat_table",
            config.text_cat == TextCategory::Learned16,
            config.text_cat == TextCategory::FrozenSemantic,
            config.learned_cat_dim,
            cats,
            rng,
        )?;
        let proj = Affine::glorot("text.proj", config.text_emb_dim, h, config.projector_bias, rng);
        let fan_in = h + table.as_ref().map_or(0, EmbeddingTable::dim);
        let sc1 = Affine::uniform("text.sc1", h, h, true, glorot_limit(fan_in, h), rng);
        let sc1_cat = table.map(|t| CategoryBranch::new("text.sc1_cat", t, h, fan_in, rng));
        Ok(Self {
            proj,
            sc1,
            sc1_cat,
            sc2: Affine::glorot("text.sc2", h, 1, true, rng),
        })
    }

    fn forward<R: Rng + ?Sized>(
        &self,
        proj: Option<&[f64]>,
        batch: &StackedBatch<'_>,
        config: &ModelConfig,
        mode: Mode,
        rng: &mut R,
    ) -> Result<TextTape> {
        let p = config.dropout;
        let width = self.sc1.out_dim();
        let mut u = self.proj.forward(&batch.utterances)?;
        let u_mask = if config.projector_dropout { dropout(&mut u, p, mode, rng) } else { None };
        let u = Hidden { out: u, mask: u_mask };
        let b = self.sc1.forward(&u.out)?;
        match (&self.sc1_cat, proj) {
            (Some(branch), Some(proj)) => {
                check_ids(batch, &branch.table)?;
                let mut a = Vec::with_capacity(batch.rows() * width);
                for (i, row) in b.chunks_exact(width).enumerate() {
                    for _ in batch.range(i) {
                        a.extend_from_slice(row);
                    }
                }
                add_category_rows(&mut a, proj, &batch.category_ids, width);
                let h = Hidden::new(a, p, mode, rng);
                let scores = self.sc2.forward(&h.out)?;
                Ok(TextTape {
                    u,
                    h,
                    broadcast: false,
                    scores,
                })
            }
            _ => {
                let h = Hidden::new(b, p, mode, rng);
                let per_sample = self.sc2.forward(&h.out)?;
                let mut scores = Vec::with_capacity(batch.rows());
                for (i, &s) in per_sample.iter().enumerate() {
                    scores.extend(std::iter::repeat_n(s, batch.range(i).len()));
                }
                Ok(TextTape {
                    u,
                    h,
                    broadcast: true,
                    scores,
                })
            }
        }
    }

    fn backward(
        &mut self,
        tape: &TextTape,
        batch: &StackedBatch<'_>,
        d_scores: &[f64],
        cat_grads: Option<&mut Vec<f64>>,
    ) -> Result<()> {
        let width = self.sc1.out_dim();
        let db = if tape.broadcast {
            let per_sample: Vec<f64> = (0..batch.samples.len())
                .map(|i| d_scores[batch.range(i)].iter().sum())
                .collect();
            let mut dh = self.sc2.backward(&tape.h.out, &per_sample, true)?.expect("input grad");
            tape.h.backward(&mut dh);
            dh
        } else {
            let mut dh = self.sc2.backward(&tape.h.out, d_scores, true)?.expect("input grad");
            tape.h.backward(&mut dh);
            if let Some(g) = cat_grads {
                accumulate_category_rows(g, &dh, &batch.category_ids, width);
            }
            let mut db = vec![0.0; batch.samples.len() * width];
            for (i, out) in db.chunks_exact_mut(width).enumerate() {
                let r = batch.range(i);
                for row in dh[r.start * width..r.end * width].chunks_exact(width) {
                    for (s, v) in out.iter_mut().zip(row) {
                        *s += v;
                    }
                }
            }
            db
        };
        let mut du = self.sc1.backward(&tape.u.out, &db, true)?.expect("input grad");
        dropout_backward(tape.u.mask.as_deref(), &mut du);
        self.proj.backward(&batch.utterances, &du, false)?;
        Ok(())
    }
}

fn znorm_grad(z: &ZNorm, d: &[f64], stop_gradient: bool) -> Vec<f64> {
    if stop_gradient {
        let denom = z.std + ZNORM_EPS;
        d.iter().map(|g| g / denom).collect()
    } else {
        znorm_backward(z, d)
    }
}

impl FusionModel {
    /// Builds a freshly initialized model. Parameters are drawn from `rng` in
    /// a fixed order: pose pathway, then text pathway.
    pub fn new<R: Rng + ?Sized>(config: ModelConfig, cats: CategoryInputs<'_>, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let pose = config.use_pose.then(|| PosePathway::new(&config, cats, rng)).transpose()?;
        let text = config.use_text.then(|| TextPathway::new(&config, cats, rng)).transpose()?;
        let gate = Param::new("gate.w", vec![1], vec![0.0], config.is_fused());
        Ok(Self { config, pose, text, gate })
    }

    pub fn alpha(&self) -> f64 {
        sigmoid(self.gate.value[0])
    }

    /// Category projections for the current parameters.
    pub fn projections(&self) -> Projections {
        Projections {
            pose: self.pose.as_ref().and_then(|p| p.enc1_cat.as_ref()).map(CategoryBranch::project_all),
            text: self.text.as_ref().and_then(|t| t.sc1_cat.as_ref()).map(CategoryBranch::project_all),
        }
    }

    fn category_grads(&self) -> CategoryGrads {
        let zeros = |b: &CategoryBranch| vec![0.0; b.table.num_rows() * b.out_dim()];
        CategoryGrads {
            pose: self.pose.as_ref().and_then(|p| p.enc1_cat.as_ref()).map(zeros),
            text: self.text.as_ref().and_then(|t| t.sc1_cat.as_ref()).map(zeros),
        }
    }

    fn apply_category_grads(&mut self, grads: &CategoryGrads) {
        if let (Some(b), Some(g)) = (self.pose.as_mut().and_then(|p| p.enc1_cat.as_mut()), &grads.pose) {
            b.accumulate(g);
        }
        if let (Some(b), Some(g)) = (self.text.as_mut().and_then(|t| t.sc1_cat.as_mut()), &grads.text) {
            b.accumulate(g);
        }
    }

    pub fn forward<R: Rng + ?Sized>(
        &self,
        proj: &Projections,
        batch: &StackedBatch<'_>,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Tape> {
        let pose = self
            .pose
            .as_ref()
            .map(|p| p.forward(proj.pose.as_deref(), batch, self.config.dropout, mode, rng))
            .transpose()?;
        let text = self
            .text
            .as_ref()
            .map(|t| t.forward(proj.text.as_deref(), batch, &self.config, mode, rng))
            .transpose()?;
        let alpha = self.alpha();
        let mut z = Vec::new();
        let scores = match (&pose, &text) {
            (Some(p), Some(t)) => {
                let mut scores = Vec::with_capacity(batch.rows());
                for i in 0..batch.samples.len() {
                    let r = batch.range(i);
                    let zp = znorm(&p.scores[r.clone()]);
                    let zt = znorm(&t.scores[r]);
                    scores.extend(zp.output.iter().zip(&zt.output).map(|(a, b)| alpha * a + (1.0 - alpha) * b));
                    z.push((zp, zt));
                }
                scores
            }
            (Some(p), None) => p.scores.clone(),
            (None, Some(t)) => t.scores.clone(),
            (None, None) => unreachable!("validated config has a pathway"),
        };
        Ok(Tape {
            pose,
            text,
            z,
            alpha,
            scores,
        })
    }

    /// Accumulates parameter gradients for the upstream gradient `d_scores`
    /// (stacked like the batch). Category gradients are flushed at the end.
    pub fn backward(&mut self, tape: &Tape, batch: &StackedBatch<'_>, d_scores: &[f64]) -> Result<()> {
        let mut cat_grads = self.category_grads();
        let stop = self.config.znorm_stop_gradient;
        let (d_pose, d_text) = if tape.z.is_empty() {
            (
                tape.pose.is_some().then(|| d_scores.to_vec()),
                tape.text.is_some().then(|| d_scores.to_vec()),
            )
        } else {
            let a = tape.alpha;
            let mut d_alpha = 0.0;
            let mut dp = Vec::with_capacity(d_scores.len());
            let mut dt = Vec::with_capacity(d_scores.len());
            for (i, (zp, zt)) in tape.z.iter().enumerate() {
                let g = &d_scores[batch.range(i)];
                d_alpha += g
                    .iter()
                    .zip(zp.output.iter().zip(&zt.output))
                    .map(|(g, (p, t))| g * (p - t))
                    .sum::<f64>();
                let gp: Vec<f64> = g.iter().map(|v| a * v).collect();
                let gt: Vec<f64> = g.iter().map(|v| (1.0 - a) * v).collect();
                dp.extend(znorm_grad(zp, &gp, stop));
                dt.extend(znorm_grad(zt, &gt, stop));
            }
            self.gate.grad[0] += d_alpha * a * (1.0 - a);
            (Some(dp), Some(dt))
        };
        if let (Some(p), Some(t), Some(d)) = (self.pose.as_mut(), tape.pose.as_ref(), d_pose) {
            p.backward(t, batch, &d, cat_grads.pose.as_mut())?;
        }
        if let (Some(p), Some(t), Some(d)) = (self.text.as_mut(), tape.text.as_ref(), d_text) {
            p.backward(t, batch, &d, cat_grads.text.as_mut())?;
        }
        self.apply_category_grads(&cat_grads);
        Ok(())
    }

    fn eval_tape(&self, proj: &Projections, sample: &Sample) -> Result<Tape> {
        let samples = [sample];
        let batch = StackedBatch::new(&samples);
        self.forward(proj, &batch, Mode::Eval, &mut rand::rngs::mock::StepRng::new(0, 0))
    }

    /// Final scores for `sample`, dropout off.
    pub fn score(&self, proj: &Projections, sample: &Sample) -> Result<Vec<f64>> {
        Ok(self.eval_tape(proj, sample)?.scores)
    }

    /// Raw pose-pathway scores, dropout off.
    pub fn pose_scores(&self, proj: &Projections, sample: &Sample) -> Result<Vec<f64>> {
        self.eval_tape(proj, sample)?
            .pose
            .map(|t| t.scores)
            .ok_or_else(|| Error::Config(format!("{}: pose pathway disabled", self.config.name)))
    }

    /// Raw text-pathway scores, dropout off.
    pub fn text_scores(&self, proj: &Projections, sample: &Sample) -> Result<Vec<f64>> {
        self.eval_tape(proj, sample)?
            .text
            .map(|t| t.scores)
            .ok_or_else(|| Error::Config(format!("{}: text pathway disabled", self.config.name)))
    }

    /// Ranked candidate indices for `sample`, dropout off.
    pub fn predict(&self, proj: &Projections, sample: &Sample) -> Result<Vec<usize>> {
        Ok(rank_candidates(&self.score(proj, sample)?))
    }

    /// Mean softmax cross-entropy over `samples`, accumulating its gradient.
    /// Gradients are not zeroed first.
    pub fn accumulate_batch<R: Rng + ?Sized>(&mut self, samples: &[&Sample], mode: Mode, rng: &mut R) -> Result<f64> {
        let proj = self.projections();
        let batch = StackedBatch::new(samples);
        let tape = self.forward(&proj, &batch, mode, rng)?;
        let scale = 1.0 / samples.len() as f64;
        let mut total = 0.0;
        let mut d = Vec::with_capacity(batch.rows());
        for (i, sample) in samples.iter().enumerate() {
            let (loss, g) = softmax_ce(&tape.scores[batch.range(i)], sample.target);
            total += loss;
            d.extend(g.into_iter().map(|v| v * scale));
        }
        self.backward(&tape, &batch, &d)?;
        Ok(total * scale)
    }

    /// Mean loss without gradients, dropout off.
    pub fn batch_loss(&self, samples: &[&Sample]) -> Result<f64> {
        let proj = self.projections();
        let batch = StackedBatch::new(samples);
        let tape = self.forward(&proj, &batch, Mode::Eval, &mut rand::rngs::mock::StepRng::new(0, 0))?;
        let total: f64 = samples
            .iter()
            .enumerate()
            .map(|(i, s)| softmax_ce(&tape.scores[batch.range(i)], s.target).0)
            .sum();
        Ok(total / samples.len() as f64)
    }
}

impl Parameterized for PosePathway {
    fn params(&self) -> Vec<&Param> {
        let mut v = self.enc1.params();
        if let Some(b) = &self.enc1_cat {
            v.extend(b.params());
        }
        v.extend(self.enc2.params());
        v.extend(self.sc1.params());
        v.extend(self.sc2.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = self.enc1.params_mut();
        if let Some(b) = &mut self.enc1_cat {
            v.extend(b.params_mut());
        }
        v.extend(self.enc2.params_mut());
        v.extend(self.sc1.params_mut());
        v.extend(self.sc2.params_mut());
        v
    }
}

impl Parameterized for TextPathway {
    fn params(&self) -> Vec<&Param> {
        let mut v = self.proj.params();
        v.extend(self.sc1.params());
        if let Some(b) = &self.sc1_cat {
            v.extend(b.params());
        }
        v.extend(self.sc2.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = self.proj.params_mut();
        v.extend(self.sc1.params_mut());
        if let Some(b) = &mut self.sc1_cat {
            v.extend(b.params_mut());
        }
        v.extend(self.sc2.params_mut());
        v
    }
}

impl Parameterized for FusionModel {
    fn params(&self) -> Vec<&Param> {
        let mut v = Vec::new();
        if let Some(p) = &self.pose {
            v.extend(p.params());
        }
        if let Some(t) = &self.text {
            v.extend(t.params());
        }
        v.push(&self.gate);
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = Vec::new();
        if let Some(p) = &mut self.pose {
            v.extend(p.params_mut());
        }
        if let Some(t) = &mut self.text {
            v.extend(t.params_mut());
        }
        v.push(&mut self.gate);
        v
    }
}

/// Candidate indices by descending score; ties go to the lower index.
pub fn rank_candidates(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// 1-based rank of `target` under [`rank_candidates`], without sorting.
pub fn rank_of(scores: &[f64], target: usize) -> usize {
    let t = scores[target];
    1 + scores
        .iter()
        .enumerate()
        .filter(|&(i, s)| match s.total_cmp(&t) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Equal => i < target,
            std::cmp::Ordering::Less => false,
        })
        .count()
}

/// Fixed-input view of a model for finite-difference checks, dropout off.
pub struct GradProbe<'a> {
    pub model: &'a mut FusionModel,
    pub samples: &'a [&'a Sample],
}

impl Parameterized for GradProbe<'_> {
    fn params(&self) -> Vec<&Param> {
        self.model.params()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.model.params_mut()
    }
}

impl crate::neural::Differentiable for GradProbe<'_> {
    fn loss(&mut self) -> f64 {
        self.model.batch_loss(self.samples).expect("probe samples are valid")
    }

    fn loss_and_grad(&mut self) -> f64 {
        self.model.zero_grad();
        self.model
            .accumulate_batch(self.samples, Mode::Eval, &mut rand::rngs::mock::StepRng::new(0, 0))
            .expect("probe samples are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{RefType, Tier};
    use crate::neural::grad_check;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn sample(rng: &mut ChaCha8Rng, n: usize, dim: usize, cats: usize) -> Sample {
        Sample {
            ref_id: "r".into(),
            room_id: "room".into(),
            pose_features: (0..n * 6).map(|_| rng.gen_range(0.0..1.0)).collect(),
            utterance: Arc::from((0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>()),
            category_ids: (0..n).map(|_| rng.gen_range(0..cats)).collect(),
            target: rng.gen_range(0..n),
            tier: Tier::T1,
            ref_type: RefType::ExactNp,
        }
    }

    #[test]
    fn ranking_ties_and_order() {
        assert_eq!(rank_candidates(&[0.1, 0.9, 0.5]), vec![1, 2, 0]);
        assert_eq!(rank_candidates(&[1.0; 4]), vec![0, 1, 2, 3]);
        assert_eq!(rank_of(&[1.0; 4], 2), 3);
        assert_eq!(rank_of(&[0.1, 0.9, 0.5], 0), 3);
    }

    #[test]
    fn broadcast_text_scores_are_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut config = ModelConfig::preset("PT_nocat", 8).unwrap();
        config.hidden = 16;
        let cats = CategoryInputs { num_categories: 4, frozen: None };
        let model = FusionModel::new(config, cats, &mut rng).unwrap();
        let s = sample(&mut rng, 7, 8, 4);
        let t = model.text_scores(&model.projections(), &s).unwrap();
        assert!(t.iter().all(|&v| v == t[0]));
    }

    #[test]
    fn batched_equals_single() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut config = ModelConfig::preset("PT", 8).unwrap();
        config.hidden = 16;
        let cats = CategoryInputs { num_categories: 4, frozen: None };
        let model = FusionModel::new(config, cats, &mut rng).unwrap();
        let samples: Vec<Sample> = (0..3).map(|i| sample(&mut rng, 3 + i, 8, 4)).collect();
        let refs: Vec<&Sample> = samples.iter().collect();
        let batch = StackedBatch::new(&refs);
        let proj = model.projections();
        let tape = model.forward(&proj, &batch, Mode::Eval, &mut rng).unwrap();
        for (i, s) in samples.iter().enumerate() {
            let single = model.score(&proj, s).unwrap();
            for (a, b) in tape.scores[batch.range(i)].iter().zip(&single) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn full_model_gradients_pass_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut config = ModelConfig::preset("PT_minilm_both", 8).unwrap();
        config.hidden = 12;
        let frozen: Vec<Vec<f64>> = (0..4).map(|_| (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let cats = CategoryInputs { num_categories: 4, frozen: Some(&frozen) };
        let mut model = FusionModel::new(config, cats, &mut rng).unwrap();
        model.gate.value[0] = 0.3;
        let samples: Vec<Sample> = (0..3).map(|_| sample(&mut rng, 5, 8, 4)).collect();
        let refs: Vec<&Sample> = samples.iter().collect();
        let mut probe = GradProbe { model: &mut model, samples: &refs };
        let report = grad_check(&mut probe, 1e-5, 200, &["gate.w"], &mut rng);
        assert!(report.max_rel_error < 1e-4, "{:?}", report.worst());
    }
}
