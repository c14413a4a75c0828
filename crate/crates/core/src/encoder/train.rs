//! In-batch-negative contrastive training with analytic gradients.
//!
//! For queries `q_i` with positives `d_i`, the candidate pool holds every
//! distinct positive and explicit negative document of the batch and
//!
//! ```text
//! L = -(1/B) Σ_i log softmax_j( cos(q_i, p_j) / τ )[target_i]
//! ```
//!
//! Gradients are pushed through the cosine and the L2-normalised features
//! into the columns of `W` the batch touches; updates are plain gradient
//! descent.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{dot, norm, EncoderParams, SparseFeatures};
use crate::corpus::{Document, TrainingTriple};
use crate::hashing::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub temperature: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 30, batch_size: 32, learning_rate: 0.1, temperature: 0.05, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("no training triples")]
    NoTriples,
    #[error("triple for query `{qid}` refers to unknown document `{docno}`")]
    UnknownDoc { qid: String, docno: String },
    #[error("invalid training configuration: {0}")]
    Config(&'static str),
    #[error("non-finite loss {loss} at epoch {epoch}, batch {batch} (first qid `{qid}`)")]
    NonFinite { epoch: usize, batch: usize, qid: String, loss: f64 },
}

/// One contrastive batch: query features, the deduplicated document pool and
/// the pool index of each query's positive.
#[derive(Debug, Clone, Default)]
pub struct Batch {
    pub queries: Vec<SparseFeatures>,
    pub pool: Vec<SparseFeatures>,
    pub targets: Vec<usize>,
}

impl Batch {
    /// Build from triples; documents are resolved by docno and deduplicated.
    pub fn from_triples(
        params: &EncoderParams,
        triples: &[&TrainingTriple],
        docs: &HashMap<&str, &str>,
    ) -> Result<Self, TrainError> {
        let mut batch = Batch::default();
        let mut pool_ids: HashMap<&str, usize> = HashMap::new();
        let mut add = |docno: &str, qid: &str, batch: &mut Batch| -> Result<usize, TrainError> {
            if let Some(&i) = pool_ids.get(docno) {
                return Ok(i);
            }
            let (key, text) = docs
                .get_key_value(docno)
                .ok_or_else(|| TrainError::UnknownDoc { qid: qid.to_string(), docno: docno.to_string() })?;
            batch.pool.push(params.featurize(text));
            pool_ids.insert(key, batch.pool.len() - 1);
            Ok(batch.pool.len() - 1)
        };
        for t in triples {
            let target = add(&t.pos_docno, &t.qid, &mut batch)?;
            batch.targets.push(target);
            batch.queries.push(params.featurize(&t.query_text));
        }
        for t in triples {
            add(&t.neg_docno, &t.qid, &mut batch)?;
        }
        Ok(batch)
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }
}

/// Embedding of one text plus what the backward pass needs.
struct Encoded {
    features: Vec<(u32, f64)>,
    unit: Vec<f64>,
    norm: f64,
}

fn encode(params: &EncoderParams, f: &SparseFeatures) -> Encoded {
    let features = f.normalized();
    let mut e = vec![0.0; params.emb_dim];
    for &(b, w) in &features {
        for (acc, v) in e.iter_mut().zip(params.column(b as usize)) {
            *acc += w * v;
        }
    }
    let n = norm(&e);
    if n > 0.0 {
        e.iter_mut().for_each(|x| *x /= n);
    }
    Encoded { features, unit: e, norm: n }
}

struct Forward {
    loss: f64,
    queries: Vec<Encoded>,
    pool: Vec<Encoded>,
    /// dL/dcos, same shape as `cos`.
    dcos: Vec<Vec<f64>>,
}

fn forward(params: &EncoderParams, batch: &Batch, temperature: f64) -> Forward {
    let queries: Vec<Encoded> = batch.queries.iter().map(|f| encode(params, f)).collect();
    let pool: Vec<Encoded> = batch.pool.iter().map(|f| encode(params, f)).collect();
    let b = queries.len() as f64;
    let mut loss = 0.0;
    let mut dcos = Vec::with_capacity(queries.len());
    for (q, &target) in queries.iter().zip(&batch.targets) {
        let row: Vec<f64> = pool.iter().map(|p| dot(&q.unit, &p.unit)).collect();
        let logits: Vec<f64> = row.iter().map(|c| c / temperature).collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        loss += z.ln() + max - logits[target];
        let grad_row = exps
            .iter()
            .enumerate()
            .map(|(j, e)| (e / z - if j == target { 1.0 } else { 0.0 }) / (b * temperature))
            .collect();
        dcos.push(grad_row);
    }
    Forward { loss: loss / b, queries, pool, dcos }
}

/// Mean contrastive loss of a batch; 0 for an empty batch.
pub fn batch_loss(params: &EncoderParams, batch: &Batch, temperature: f64) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    forward(params, batch, temperature).loss
}

/// Loss and sparse gradient (bucket → column gradient).
pub(crate) fn loss_and_grad(params: &EncoderParams, batch: &Batch, temperature: f64) -> (f64, BTreeMap<u32, Vec<f64>>) {
    let mut grads: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    if batch.is_empty() {
        return (0.0, grads);
    }
    let fw = forward(params, batch, temperature);
    let dim = params.emb_dim;
    let mut push = |enc: &Encoded, g_unit: &[f64]| {
        if enc.norm == 0.0 {
            return;
        }
        // d unit / d e = (I - u uᵀ) / |e|
        let proj = dot(g_unit, &enc.unit);
        let g_e: Vec<f64> = g_unit.iter().zip(&enc.unit).map(|(g, u)| (g - proj * u) / enc.norm).collect();
        for &(bucket, w) in &enc.features {
            let col = grads.entry(bucket).or_insert_with(|| vec![0.0; dim]);
            for (c, g) in col.iter_mut().zip(&g_e) {
                *c += w * g;
            }
        }
    };
    let mut pool_grad = vec![vec![0.0; dim]; fw.pool.len()];
    for (i, q) in fw.queries.iter().enumerate() {
        let mut g_q = vec![0.0; dim];
        for (j, p) in fw.pool.iter().enumerate() {
            let g = fw.dcos[i][j];
            if g == 0.0 {
                continue;
            }
            for k in 0..dim {
                g_q[k] += g * p.unit[k];
                pool_grad[j][k] += g * q.unit[k];
            }
        }
        push(q, &g_q);
    }
    for (p, g) in fw.pool.iter().zip(&pool_grad) {
        push(p, g);
    }
    (fw.loss, grads)
}

/// Finite-difference check of the analytic gradient; see [`grad_check_scaled`].
pub fn grad_check(params: &EncoderParams, batch: &Batch, temperature: f64, h: f64) -> f64 {
    grad_check_scaled(params, batch, temperature, h, 1.0)
}

/// Compare central differences with `scale ×` the analytic gradient on
/// entries of `W` in columns the batch uses (at least 100 when available).
///
/// Returns the largest `|g_fd − g_an| / max(1e-8, |g_fd| + |g_an|)`; an
/// empty batch returns 0.
pub fn grad_check_scaled(params: &EncoderParams, batch: &Batch, temperature: f64, h: f64, scale: f64) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    let (_, grads) = loss_and_grad(params, batch, temperature);
    let active: Vec<u32> = batch
        .queries
        .iter()
        .chain(&batch.pool)
        .flat_map(|f| f.entries().iter().map(|&(b, _)| b))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if active.is_empty() {
        return 0.0;
    }
    let mut rng = SplitMix64::new(params.seed ^ 0x6772_6164);
    let n_checks = 100.max(active.len().min(200));
    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    for _ in 0..n_checks {
        let col = active[rng.below(active.len() as u64) as usize] as usize;
        let row = rng.below(params.emb_dim as u64) as usize;
        let orig = params.get(row, col);
        probe.set(row, col, orig + h);
        let up = batch_loss(&probe, batch, temperature);
        probe.set(row, col, orig - h);
        let down = batch_loss(&probe, batch, temperature);
        probe.set(row, col, orig);
        let fd = (up - down) / (2.0 * h);
        let an = scale * grads.get(&(col as u32)).map_or(0.0, |g| g[row]);
        let err = (fd - an).abs() / (fd.abs() + an.abs()).max(1e-8);
        worst = worst.max(err);
    }
    worst
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub params: EncoderParams,
    /// Mean batch loss of each epoch, measured before that batch's update.
    pub epoch_losses: Vec<f64>,
}

impl TrainReport {
    /// `epoch<TAB>mean_loss` lines, epochs numbered from 1.
    pub fn log(&self) -> String {
        self.epoch_losses.iter().enumerate().map(|(i, l)| format!("{}\t{l:.6}\n", i + 1)).collect()
    }
}

/// Train `params` on `triples`. Single-threaded so that the result is fixed
/// bit-for-bit by (seed, config, data).
pub fn train(
    triples: &[TrainingTriple],
    docs: &[Document],
    mut params: EncoderParams,
    config: &TrainConfig,
) -> Result<TrainReport, TrainError> {
    if triples.is_empty() {
        return Err(TrainError::NoTriples);
    }
    if config.batch_size == 0 {
        return Err(TrainError::Config("batch_size must be positive"));
    }
    if !(config.temperature > 0.0 && config.temperature.is_finite()) {
        return Err(TrainError::Config("temperature must be positive"));
    }
    if !(config.learning_rate >= 0.0 && config.learning_rate.is_finite()) {
        return Err(TrainError::Config("learning_rate must be non-negative"));
    }
    let doc_text: HashMap<&str, &str> = docs.iter().map(|d| (d.docno.as_str(), d.text.as_str())).collect();
    for t in triples {
        for docno in [&t.pos_docno, &t.neg_docno] {
            if !doc_text.contains_key(docno.as_str()) {
                return Err(TrainError::UnknownDoc { qid: t.qid.clone(), docno: docno.clone() });
            }
        }
    }

    // Features do not depend on the weights; compute them once.
    let mut feature_cache: HashMap<&str, SparseFeatures> = HashMap::new();
    for t in triples {
        for docno in [&t.pos_docno, &t.neg_docno] {
            feature_cache.entry(docno.as_str()).or_insert_with(|| params.featurize(doc_text[docno.as_str()]));
        }
    }
    let query_features: Vec<SparseFeatures> = triples.iter().map(|t| params.featurize(&t.query_text)).collect();

    let mut rng = SplitMix64::new(config.seed);
    let mut order: Vec<usize> = (0..triples.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        rng.shuffle(&mut order);
        let mut total = 0.0;
        let mut n_batches = 0;
        for (bi, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch = cached_batch(chunk, triples, &query_features, &feature_cache);
            let (loss, grads) = loss_and_grad(&params, &batch, config.temperature);
            if !loss.is_finite() {
                return Err(TrainError::NonFinite {
                    epoch: epoch + 1,
                    batch: bi,
                    qid: triples[chunk[0]].qid.clone(),
                    loss,
                });
            }
            total += loss;
            n_batches += 1;
            if config.learning_rate > 0.0 {
                for (bucket, g) in grads {
                    for (w, gv) in params.column_mut(bucket as usize).iter_mut().zip(&g) {
                        *w -= config.learning_rate * gv;
                    }
                }
            }
        }
        epoch_losses.push(total / n_batches as f64);
    }
    Ok(TrainReport { params, epoch_losses })
}

fn cached_batch(
    chunk: &[usize],
    triples: &[TrainingTriple],
    query_features: &[SparseFeatures],
    docs: &HashMap<&str, SparseFeatures>,
) -> Batch {
    let mut batch = Batch::default();
    let mut pool_ids: HashMap<&str, usize> = HashMap::new();
    let mut add = |docno: &str, batch: &mut Batch| -> usize {
        if let Some(&i) = pool_ids.get(docno) {
            return i;
        }
        let (key, f) = docs.get_key_value(docno).expect("validated docno");
        batch.pool.push(f.clone());
        pool_ids.insert(key, batch.pool.len() - 1);
        batch.pool.len() - 1
    };
    for &i in chunk {
        let target = add(&triples[i].pos_docno, &mut batch);
        batch.targets.push(target);
        batch.queries.push(query_features[i].clone());
    }
    for &i in chunk {
        add(&triples[i].neg_docno, &mut batch);
    }
    batch
}
