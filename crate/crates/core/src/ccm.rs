//! Cluster-based classification.
//!
//! Training clusters the standardized feature vectors with k-means, turns
//! single-author clusters into pure leaves, merges clusters that are too
//! small to train on (fewer members than twice their author count) into
//! their most similar sibling, and trains a linear classifier in every
//! remaining cluster. A classifier that beats its parent's accuracy becomes
//! a leaf; otherwise the cluster is re-clustered and the process recurses,
//! up to a depth cap where the best classifier seen so far is kept.
//!
//! Prediction routes a vector to the nearest root centroid, descends
//! internal nodes by nearest child centroid, and answers with the leaf's
//! author or its classifier's argmax.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::content::Codebook;
use crate::corpus::{CleanedEmail, Corpus};
use crate::error::{Error, Result};
use crate::kmeans::{kmeans, mean_of, squared_distance};
use crate::num::Scalar;
use crate::scale::Scaler;
use crate::seeding::derive_seed;
use crate::stylometry::{assemble_vector, FeatureGroup, FeatureSchema, FeatureVector, StyloConfig};
use crate::svm::{train_linear_svm, LinearClassifier, SvmHyper};

/// Major version of the model file format; loading a different major is an
/// error. The minor version is informational.
pub const MODEL_FORMAT_MAJOR: u32 = 1;
pub const MODEL_FORMAT_MINOR: u32 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CcmHyper<F> {
    /// Cluster-count override; the default rule is `ceil(sqrt(#authors))`.
    pub k_override: Option<usize>,
    pub max_depth: usize,
    pub seed: u64,
    pub svm_c: F,
    pub svm_epochs: usize,
    /// Build-time merge threshold: sibling clusters whose author sets have a
    /// Jaccard similarity above this are merged before anything else.
    pub merge_jaccard: F,
}

impl<F: Scalar> Default for CcmHyper<F> {
    fn default() -> Self {
        CcmHyper {
            k_override: None,
            max_depth: 5,
            seed: 42,
            svm_c: F::one(),
            svm_epochs: 10,
            merge_jaccard: F::of_f64(0.5),
        }
    }
}

/// Cluster count: the override when given, else `max(1, ceil(sqrt(m)))`.
pub fn choose_k(n_authors: usize, k_override: Option<usize>) -> Result<usize> {
    if n_authors == 0 {
        return Err(Error::validation("choose_k needs at least one author"));
    }
    match k_override {
        Some(0) => Err(Error::validation("cluster count override must be at least 1")),
        Some(k) => Ok(k),
        None => Ok(((n_authors as f64).sqrt().ceil() as usize).max(1)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NodeKind<F> {
    PureLeaf {
        author: String,
    },
    ClassifierLeaf {
        classifier: LinearClassifier<F>,
    },
    Internal {
        children: Vec<ClusterNode<F>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterNode<F> {
    pub id: u32,
    /// Centroid in standardized feature space.
    pub centroid: Vec<F>,
    /// Training email ids reachable through this node.
    pub member_ids: Vec<String>,
    /// Distinct authors among members, sorted.
    pub authors: Vec<String>,
    pub depth: usize,
    pub kind: NodeKind<F>,
}

impl<F: Scalar> ClusterNode<F> {
    pub fn is_leaf(&self) -> bool {
        !matches!(self.kind, NodeKind::Internal { .. })
    }

    fn leaves<'a>(&'a self, out: &mut Vec<&'a ClusterNode<F>>) {
        match &self.kind {
            NodeKind::Internal { children } => {
                for c in children {
                    c.leaves(out);
                }
            }
            _ => out.push(self),
        }
    }
}

/// Jaccard similarity of two nodes' author sets.
pub fn cluster_similarity<F: Scalar>(a: &ClusterNode<F>, b: &ClusterNode<F>) -> F {
    jaccard(&a.authors, &b.authors)
}

fn jaccard<F: Scalar>(a: &[String], b: &[String]) -> F {
    if a.is_empty() && b.is_empty() {
        return F::zero();
    }
    let mut inter = 0usize;
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    F::ratio(inter, a.len() + b.len() - inter)
}

fn cosine<F: Scalar>(a: &[F], b: &[F]) -> F {
    let dot: F = a.iter().zip(b).map(|(x, y)| *x * *y).sum();
    let na: F = a.iter().map(|x| *x * *x).sum::<F>().sqrt();
    let nb: F = b.iter().map(|x| *x * *x).sum::<F>().sqrt();
    if na == F::zero() || nb == F::zero() {
        F::zero()
    } else {
        dot / (na * nb)
    }
}

/// Sparse slice of one training email's content-feature values; fed to the
/// unknown-author test without reloading the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector<F> {
    pub indices: Vec<u32>,
    pub values: Vec<F>,
}

impl<F: Scalar> SparseVector<F> {
    pub fn from_dense(dense: &[F]) -> Self {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (i, v) in dense.iter().enumerate() {
            if *v != F::zero() {
                indices.push(i as u32);
                values.push(*v);
            }
        }
        SparseVector { indices, values }
    }

    pub fn to_dense(&self, len: usize) -> Vec<F> {
        let mut out = vec![F::zero(); len];
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            out[i as usize] = v;
        }
        out
    }
}

/// A trained cluster-based classification model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcmModel<F> {
    pub schema: FeatureSchema,
    pub codebook: Codebook<F>,
    pub stylo: StyloConfig,
    pub scaler: Scaler<F>,
    pub roots: Vec<ClusterNode<F>>,
    pub hyper: CcmHyper<F>,
    /// Holdout accuracy of the flat classifier over the whole training
    /// corpus: the root's parent baseline.
    pub baseline_accuracy: F,
    pub corpus_fingerprint: String,
    /// Per author, the content-feature slice of each training email.
    pub author_profiles: BTreeMap<String, Vec<SparseVector<F>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<F> {
    pub author: String,
    pub leaf: u32,
    pub score: F,
}

struct Builder<'a, F> {
    vectors: &'a [Vec<F>],
    email_ids: &'a [String],
    labels: &'a [usize],
    authors: &'a [String],
    hyper: &'a CcmHyper<F>,
    next_id: u32,
    counter: u64,
}

struct WorkCluster<F> {
    members: Vec<usize>,
    centroid: Vec<F>,
    /// Sorted distinct author ids.
    author_ids: Vec<usize>,
}

impl<'a, F: Scalar> Builder<'a, F> {
    fn svm_hyper(&mut self) -> SvmHyper<F> {
        self.counter += 1;
        SvmHyper {
            c: self.hyper.svm_c,
            epochs: self.hyper.svm_epochs,
            seed: derive_seed(self.hyper.seed, &[1, self.counter]),
            holdout: Some(F::of_f64(0.2)),
        }
    }

    fn fresh_id(&mut self) -> u32 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn author_names(&self, c: &WorkCluster<F>) -> Vec<String> {
        c.author_ids.iter().map(|&a| self.authors[a].clone()).collect()
    }

    fn work_cluster(&self, members: Vec<usize>, centroid: Vec<F>) -> WorkCluster<F> {
        let mut author_ids: Vec<usize> = members.iter().map(|&i| self.labels[i]).collect();
        author_ids.sort();
        author_ids.dedup();
        WorkCluster {
            members,
            centroid,
            author_ids,
        }
    }

    fn merged(&self, a: &WorkCluster<F>, b: &WorkCluster<F>) -> WorkCluster<F> {
        let mut members = a.members.clone();
        members.extend_from_slice(&b.members);
        members.sort();
        let centroid = mean_of(self.vectors, &members);
        self.work_cluster(members, centroid)
    }

    fn jaccard_ids(&self, a: &WorkCluster<F>, b: &WorkCluster<F>) -> F {
        let inter = a
            .author_ids
            .iter()
            .filter(|x| b.author_ids.binary_search(x).is_ok())
            .count();
        F::ratio(inter, a.author_ids.len() + b.author_ids.len() - inter)
    }

    /// Preferred merge partner for `i`: maximal Jaccard, ties decided by
    /// higher centroid cosine, then lower index.
    fn best_partner(&self, clusters: &[WorkCluster<F>], i: usize) -> Option<usize> {
        let mut best: Option<(usize, F, F)> = None;
        for j in 0..clusters.len() {
            if j == i {
                continue;
            }
            let sim = self.jaccard_ids(&clusters[i], &clusters[j]);
            let cos = cosine(&clusters[i].centroid, &clusters[j].centroid);
            let better = match best {
                None => true,
                Some((_, bs, bc)) => sim > bs || (sim == bs && cos > bc),
            };
            if better {
                best = Some((j, sim, cos));
            }
        }
        best.map(|(j, _, _)| j)
    }

    /// Alg-4-style build step: cluster, then merge sibling pairs whose
    /// author-set similarity exceeds the threshold.
    fn build_clusters(&mut self, members: &[usize], depth: usize) -> Result<Vec<WorkCluster<F>>> {
        let mut author_ids: Vec<usize> = members.iter().map(|&i| self.labels[i]).collect();
        author_ids.sort();
        author_ids.dedup();
        let k = choose_k(author_ids.len(), self.hyper.k_override)?.min(members.len());
        self.counter += 1;
        let seed = derive_seed(self.hyper.seed, &[0, self.counter, depth as u64]);
        let local: Vec<Vec<F>> = members.iter().map(|&i| self.vectors[i].clone()).collect();
        let result = kmeans(&local, k, seed)?;
        let mut clusters: Vec<WorkCluster<F>> = result
            .clusters()
            .into_iter()
            .zip(result.centroids)
            .filter(|(m, _)| !m.is_empty())
            .map(|(m, centroid)| {
                let global: Vec<usize> = m.into_iter().map(|i| members[i]).collect();
                self.work_cluster(global, centroid)
            })
            .collect();

        let th = self.hyper.merge_jaccard;
        loop {
            if clusters.len() < 2 {
                break;
            }
            let mut best: Option<(usize, usize, F, F)> = None;
            for i in 0..clusters.len() {
                for j in i + 1..clusters.len() {
                    let sim = self.jaccard_ids(&clusters[i], &clusters[j]);
                    if sim <= th {
                        continue;
                    }
                    let cos = cosine(&clusters[i].centroid, &clusters[j].centroid);
                    let better = match best {
                        None => true,
                        Some((_, _, bs, bc)) => sim > bs || (sim == bs && cos > bc),
                    };
                    if better {
                        best = Some((i, j, sim, cos));
                    }
                }
            }
            match best {
                None => break,
                Some((i, j, _, _)) => {
                    let m = self.merged(&clusters[i], &clusters[j]);
                    clusters[i] = m;
                    clusters.remove(j);
                }
            }
        }
        Ok(clusters)
    }

    fn build_level(
        &mut self,
        members: &[usize],
        depth: usize,
        parent_ac: F,
        best: &(F, LinearClassifier<F>),
    ) -> Result<Vec<ClusterNode<F>>> {
        let mut clusters = self.build_clusters(members, depth)?;

        // Pure clusters become leaves immediately (Alg 5's first test).
        let mut pure: Vec<WorkCluster<F>> = Vec::new();
        let mut impure: Vec<WorkCluster<F>> = Vec::new();
        for c in clusters.drain(..) {
            if c.author_ids.len() == 1 {
                pure.push(c);
            } else {
                impure.push(c);
            }
        }

        // Small-cluster merging: |c| < mu with mu = 2 * |authors(c)|. Runs
        // to a fixpoint; a lone violating cluster with no sibling to merge
        // into falls through to classifier training.
        loop {
            if impure.len() < 2 {
                break;
            }
            let violating = impure
                .iter()
                .position(|c| c.members.len() < 2 * c.author_ids.len());
            let Some(i) = violating else { break };
            let Some(j) = self.best_partner(&impure, i) else { break };
            let m = self.merged(&impure[i], &impure[j]);
            let keep = i.min(j);
            let drop = i.max(j);
            impure[keep] = m;
            impure.remove(drop);
        }

        let mut nodes = Vec::new();
        for c in pure {
            let id = self.fresh_id();
            nodes.push(ClusterNode {
                id,
                centroid: c.centroid.clone(),
                member_ids: c.members.iter().map(|&i| self.email_ids[i].clone()).collect(),
                authors: self.author_names(&c),
                depth,
                kind: NodeKind::PureLeaf {
                    author: self.authors[c.author_ids[0]].clone(),
                },
            });
        }

        for c in impure {
            let id = self.fresh_id();
            let local: Vec<Vec<F>> = c.members.iter().map(|&i| self.vectors[i].clone()).collect();
            let local_labels: Vec<&str> = c
                .members
                .iter()
                .map(|&i| self.authors[self.labels[i]].as_str())
                .collect();
            let svm = self.svm_hyper();
            let clf = train_linear_svm(&local, &local_labels, &svm)?;
            let ac = clf.holdout_accuracy;
            let best_here = if ac > best.0 {
                (ac, clf.clone())
            } else {
                best.clone()
            };
            let kind = if ac > parent_ac {
                NodeKind::ClassifierLeaf { classifier: clf }
            } else if depth < self.hyper.max_depth {
                NodeKind::Internal {
                    children: self.build_level(&c.members, depth + 1, ac, &best_here)?,
                }
            } else {
                NodeKind::ClassifierLeaf {
                    classifier: best_here.1.clone(),
                }
            };
            nodes.push(ClusterNode {
                id,
                centroid: c.centroid.clone(),
                member_ids: c.members.iter().map(|&i| self.email_ids[i].clone()).collect(),
                authors: self.author_names(&c),
                depth,
                kind,
            });
        }
        Ok(nodes)
    }
}

/// Train a cluster-based classification model.
pub fn train_ccm<F: Scalar>(
    corpus: &Corpus,
    schema: &FeatureSchema,
    codebook: &Codebook<F>,
    config: &StyloConfig,
    hyper: &CcmHyper<F>,
) -> Result<CcmModel<F>> {
    if corpus.is_empty() {
        return Err(Error::validation("cannot train on an empty corpus"));
    }

    let raw_vectors: Vec<FeatureVector<F>> = corpus
        .emails
        .par_iter()
        .map(|e| assemble_vector(e, schema, Some(codebook), config))
        .collect::<Result<_>>()?;
    let raw_values: Vec<Vec<F>> = raw_vectors.iter().map(|v| v.values.clone()).collect();

    let scaler = Scaler::fit(&raw_values)?;
    let vectors = scaler.transform_all(&raw_values);
    let labels = corpus.label_indices();
    let email_ids: Vec<String> = corpus.emails.iter().map(|e| e.id.clone()).collect();

    let content_range = schema.group_range(FeatureGroup::Content);
    let mut author_profiles: BTreeMap<String, Vec<SparseVector<F>>> = BTreeMap::new();
    for (email, raw) in corpus.emails.iter().zip(&raw_values) {
        author_profiles
            .entry(email.author.clone())
            .or_default()
            .push(SparseVector::from_dense(&raw[content_range.clone()]));
    }

    let mut builder = Builder {
        vectors: &vectors,
        email_ids: &email_ids,
        labels: &labels,
        authors: &corpus.authors,
        hyper,
        next_id: 0,
        counter: 0,
    };

    let all: Vec<usize> = (0..corpus.len()).collect();
    let (roots, baseline_accuracy) = if corpus.authors.len() == 1 {
        // Degenerate single-author corpus: one pure leaf over everything.
        let centroid = mean_of(&vectors, &all);
        let node = ClusterNode {
            id: 0,
            centroid,
            member_ids: email_ids.clone(),
            authors: corpus.authors.clone(),
            depth: 0,
            kind: NodeKind::PureLeaf {
                author: corpus.authors[0].clone(),
            },
        };
        (vec![node], F::one())
    } else {
        let label_refs: Vec<&str> = corpus.emails.iter().map(|e| e.author.as_str()).collect();
        let svm = builder.svm_hyper();
        let baseline = train_linear_svm(&vectors, &label_refs, &svm)?;
        let ac = baseline.holdout_accuracy;
        let roots = builder.build_level(&all, 0, ac, &(ac, baseline))?;
        (roots, ac)
    };

    Ok(CcmModel {
        schema: schema.clone(),
        codebook: codebook.clone(),
        stylo: config.clone(),
        scaler,
        roots,
        hyper: *hyper,
        baseline_accuracy,
        corpus_fingerprint: corpus.fingerprint(),
        author_profiles,
    })
}

impl<F: Scalar> CcmModel<F> {
    /// All leaves, in id order of appearance.
    pub fn leaves(&self) -> Vec<&ClusterNode<F>> {
        let mut out = Vec::new();
        for r in &self.roots {
            r.leaves(&mut out);
        }
        out
    }

    /// Assemble the model's feature vector for an email.
    pub fn vector_for(&self, email: &CleanedEmail) -> Result<FeatureVector<F>> {
        assemble_vector(email, &self.schema, Some(&self.codebook), &self.stylo)
    }

    /// Predict the author for a raw feature vector of schema width.
    pub fn predict(&self, values: &[F]) -> Result<Prediction<F>> {
        if values.len() != self.schema.len() {
            return Err(Error::validation(format!(
                "vector width {} does not match schema width {}",
                values.len(),
                self.schema.len()
            )));
        }
        let x = self.scaler.transform(values);
        let mut node = nearest_node(&self.roots, &x)
            .ok_or_else(|| Error::validation("model has no clusters"))?;
        loop {
            match &node.kind {
                NodeKind::Internal { children } => {
                    node = nearest_node(children, &x).expect("internal nodes have children");
                }
                NodeKind::PureLeaf { author } => {
                    return Ok(Prediction {
                        author: author.clone(),
                        leaf: node.id,
                        score: F::one(),
                    });
                }
                NodeKind::ClassifierLeaf { classifier } => {
                    let (author, score) = classifier.predict(&x);
                    return Ok(Prediction {
                        author: author.to_string(),
                        leaf: node.id,
                        score,
                    });
                }
            }
        }
    }

    /// Featurize and predict one cleaned email.
    pub fn predict_email(&self, email: &CleanedEmail) -> Result<Prediction<F>> {
        let v = self.vector_for(email)?;
        self.predict(&v.values)
    }

    /// Width of the content-feature section.
    pub fn content_width(&self) -> usize {
        self.schema.group_range(FeatureGroup::Content).len()
    }

    /// Content-feature slice of an email, in codebook order.
    pub fn content_values(&self, email: &CleanedEmail) -> Result<Vec<F>> {
        let v = self.vector_for(email)?;
        let r = self.schema.group_range(FeatureGroup::Content);
        Ok(v.values[r].to_vec())
    }

    pub fn to_json_bytes(&self) -> Result<Vec<u8>> {
        let file = ModelFile {
            format_major: MODEL_FORMAT_MAJOR,
            format_minor: MODEL_FORMAT_MINOR,
            model: self,
        };
        Ok(serde_json::to_vec(&file)?)
    }

    pub fn from_json_bytes(bytes: &[u8]) -> Result<CcmModel<F>> {
        let probe: VersionProbe = serde_json::from_slice(bytes)?;
        if probe.format_major != MODEL_FORMAT_MAJOR {
            return Err(Error::ModelVersion {
                found: probe.format_major,
                supported: MODEL_FORMAT_MAJOR,
            });
        }
        let file: ModelFileOwned<F> = serde_json::from_slice(bytes)?;
        Ok(file.model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<CcmModel<F>> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        CcmModel::from_json_bytes(&bytes)
    }
}

fn nearest_node<'a, F: Scalar>(
    nodes: &'a [ClusterNode<F>],
    x: &[F],
) -> Option<&'a ClusterNode<F>> {
    nodes
        .iter()
        .map(|n| (n, squared_distance(&n.centroid, x)))
        .min_by(|(_, a), (_, b)| a.partial_cmp(b).expect("finite distance"))
        .map(|(n, _)| n)
}

#[derive(Serialize)]
struct ModelFile<'a, F> {
    format_major: u32,
    format_minor: u32,
    model: &'a CcmModel<F>,
}

#[derive(Deserialize)]
struct ModelFileOwned<F> {
    #[allow(dead_code)]
    format_major: u32,
    #[allow(dead_code)]
    format_minor: u32,
    model: CcmModel<F>,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_major: u32,
}
