//! Cosine-similarity label index with an optional coarse partition.
//!
//! Approximate mode runs seeded spherical k-means over the label vectors and
//! answers top-k queries by scanning only the `n_probe` clusters whose
//! centroids are closest to the query. Threshold queries always scan
//! everything.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::types::{OccupationTaxonomy, SkillTaxonomy};
use crate::encoder::Encoder;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IndexMode {
    Exact,
    Approximate {
        /// Defaults to ceil(sqrt(n)).
        clusters: Option<usize>,
        n_probe: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone)]
struct Partition {
    centroids: Vec<f64>,
    members: Vec<Vec<usize>>,
    assignment: Vec<usize>,
    n_probe: usize,
}

/// Immutable matrix of unit-norm label embeddings, ordered by label id.
#[derive(Debug, Clone)]
pub struct SkillIndex {
    ids: Vec<String>,
    dim: usize,
    vectors: Vec<f64>,
    partition: Option<Partition>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> Result<()> {
    let n = dot(v, v).sqrt();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::UndefinedSimilarity("zero-norm label vector".into()));
    }
    v.iter_mut().for_each(|x| *x /= n);
    Ok(())
}

/// Descending score, then ascending position.
fn by_score(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0))
}

impl SkillIndex {
    /// Builds an index from `(id, vector)` entries; vectors are normalized and
    /// entries sorted by id.
    pub fn from_vectors(mut entries: Vec<(String, Vec<f64>)>, mode: IndexMode) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("cannot index an empty label set"));
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid(format!("duplicate label id `{}`", w[0].0)));
        }
        let dim = entries[0].1.len();
        let mut ids = Vec::with_capacity(entries.len());
        let mut vectors = Vec::with_capacity(entries.len() * dim);
        for (id, mut v) in entries {
            if v.len() != dim {
                return Err(Error::Shape {
                    tensor: format!("label vector `{id}`"),
                    expected: dim.to_string(),
                    found: v.len().to_string(),
                });
            }
            normalize(&mut v)?;
            ids.push(id);
            vectors.extend(v);
        }
        let mut index = Self {
            ids,
            dim,
            vectors,
            partition: None,
        };
        if let IndexMode::Approximate {
            clusters,
            n_probe,
            seed,
        } = mode
        {
            let n = index.len();
            let k = clusters
                .unwrap_or_else(|| (n as f64).sqrt().ceil() as usize)
                .clamp(1, n);
            index.partition = Some(index.kmeans(k, n_probe.clamp(1, k), seed)?);
        }
        Ok(index)
    }

    /// Embeds every skill's label and description.
    pub fn build(taxonomy: &SkillTaxonomy, encoder: &Encoder, mode: IndexMode) -> Result<Self> {
        if taxonomy.is_empty() {
            return Err(Error::invalid("empty skill taxonomy"));
        }
        let entries = taxonomy
            .skills
            .iter()
            .map(|(id, s)| Ok((id.clone(), encoder.encode_text(&s.text())?.0)))
            .collect::<Result<_>>()?;
        Self::from_vectors(entries, mode)
    }

    /// Embeds occupation titles only.
    pub fn over_titles(taxonomy: &OccupationTaxonomy, encoder: &Encoder) -> Result<Self> {
        if taxonomy.is_empty() {
            return Err(Error::invalid("empty occupation taxonomy"));
        }
        let entries = taxonomy
            .occupations
            .iter()
            .map(|(id, o)| Ok((id.clone(), encoder.encode_text(&o.title)?.0)))
            .collect::<Result<_>>()?;
        Self::from_vectors(entries, IndexMode::Exact)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, pos: usize) -> &str {
        &self.ids[pos]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.ids.binary_search_by(|p| p.as_str().cmp(id)).ok()
    }

    pub fn vector(&self, pos: usize) -> &[f64] {
        &self.vectors[pos * self.dim..][..self.dim]
    }

    /// Cluster of each label in approximate mode.
    pub fn assignment(&self) -> Option<&[usize]> {
        self.partition.as_ref().map(|p| p.assignment.as_slice())
    }

    pub fn is_approximate(&self) -> bool {
        self.partition.is_some()
    }

    /// Similarity of `query` to every label, by position.
    pub fn scores(&self, query: &[f64]) -> Vec<f64> {
        self.vectors.chunks_exact(self.dim).map(|v| dot(v, query)).collect()
    }

    /// Exhaustive top-k.
    pub fn top_k_exact(&self, query: &[f64], k: usize) -> Vec<(usize, f64)> {
        let scored: Vec<(usize, f64)> = self.scores(query).into_iter().enumerate().collect();
        select_top(scored, k)
    }

    /// Top-k in the configured mode.
    pub fn top_k(&self, query: &[f64], k: usize) -> Vec<(usize, f64)> {
        let Some(part) = &self.partition else {
            return self.top_k_exact(query, k);
        };
        let cscores: Vec<(usize, f64)> = part
            .centroids
            .chunks_exact(self.dim)
            .map(|c| dot(c, query))
            .enumerate()
            .collect();
        let probes = select_top(cscores, part.n_probe);
        let scored: Vec<(usize, f64)> = probes
            .iter()
            .flat_map(|&(c, _)| part.members[c].iter())
            .map(|&i| (i, dot(self.vector(i), query)))
            .collect();
        select_top(scored, k)
    }

    /// All labels with similarity >= `tau`, best first.
    pub fn above(&self, query: &[f64], tau: f64) -> Vec<(usize, f64)> {
        let mut hits: Vec<(usize, f64)> = self
            .scores(query)
            .into_iter()
            .enumerate()
            .filter(|&(_, s)| s >= tau)
            .collect();
        hits.sort_by(by_score);
        hits
    }

    fn kmeans(&self, k: usize, n_probe: usize, seed: u64) -> Result<Partition> {
        let n = self.len();
        let d = self.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        // k-means++ seeding on cosine distance
        let mut centroids = Vec::with_capacity(k * d);
        let first = rng.gen_range(0..n);
        centroids.extend_from_slice(self.vector(first));
        let mut best: Vec<f64> = (0..n).map(|i| 1.0 - dot(self.vector(i), self.vector(first))).collect();
        for _ in 1..k {
            let total: f64 = best.iter().map(|v| v.max(0.0)).sum();
            let pick = if total > 0.0 {
                let mut r = rng.gen_range(0.0..total);
                let mut chosen = n - 1;
                for (i, v) in best.iter().enumerate() {
                    r -= v.max(0.0);
                    if r < 0.0 {
                        chosen = i;
                        break;
                    }
                }
                chosen
            } else {
                rng.gen_range(0..n)
            };
            let c = self.vector(pick).to_vec();
            for (i, b) in best.iter_mut().enumerate() {
                *b = b.min(1.0 - dot(self.vector(i), &c));
            }
            centroids.extend(c);
        }

        let mut assignment = vec![usize::MAX; n];
        for _ in 0..50 {
            let mut changed = false;
            for i in 0..n {
                let v = self.vector(i);
                let mut arg = 0;
                let mut top = f64::NEG_INFINITY;
                for (c, cent) in centroids.chunks_exact(d).enumerate() {
                    let s = dot(v, cent);
                    if s > top {
                        top = s;
                        arg = c;
                    }
                }
                if assignment[i] != arg {
                    assignment[i] = arg;
                    changed = true;
                }
            }
            let mut sums = vec![0.0; k * d];
            let mut counts = vec![0usize; k];
            for i in 0..n {
                let c = assignment[i];
                counts[c] += 1;
                for (s, x) in sums[c * d..][..d].iter_mut().zip(self.vector(i)) {
                    *s += x;
                }
            }
            for c in 0..k {
                let cent = &mut sums[c * d..][..d];
                if counts[c] == 0 || normalize(cent).is_err() {
                    // keep the previous centroid for an empty cluster
                    cent.copy_from_slice(&centroids[c * d..][..d]);
                }
            }
            centroids = sums;
            if !changed {
                break;
            }
        }
        let mut members = vec![Vec::new(); k];
        for (i, &c) in assignment.iter().enumerate() {
            members[c].push(i);
        }
        Ok(Partition {
            centroids,
            members,
            assignment,
            n_probe,
        })
    }
}

fn select_top(mut scored: Vec<(usize, f64)>, k: usize) -> Vec<(usize, f64)> {
    if k < scored.len() {
        scored.select_nth_unstable_by(k, by_score);
        scored.truncate(k);
    }
    scored.sort_by(by_score);
    scored
}
