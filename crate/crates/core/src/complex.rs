//! Enumeration of feasible labeled interactions up to a truncation level.
//!
//! An interaction is a set of points with pairwise-distinct labels that fit
//! in a common closed ε-ball. Feasibility is downward closed, so size-k
//! interactions are found by joining two size-(k−1) interactions that share
//! k−2 members. Joins are discovered through a hash index keyed on each
//! (k−2)-subset, so only actually-overlapping pairs are ever compared.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::LabeledPointCloud;
use crate::error::{invalid, Error, Result};
use crate::metric::{common_ball_witness, within_budget, Metric};

pub const DEFAULT_MAX_INTERACTIONS: usize = 5_000_000;

/// One (class, point) pair. `point` is the global index into the cloud.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Member {
    pub class: usize,
    pub point: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Interaction {
    /// Sorted by strictly increasing class.
    pub members: Vec<Member>,
    pub witness: Vec<f64>,
}

impl Interaction {
    pub fn order(&self) -> usize {
        self.members.len()
    }

    pub fn label_set(&self) -> LabelSet {
        LabelSet(self.members.iter().map(|m| m.class).collect())
    }

    pub fn contains_class(&self, class: usize) -> bool {
        self.members.iter().any(|m| m.class == class)
    }
}

/// Sorted set of class labels. Ordered by size first, then lexicographically,
/// which fixes the canonical column order of the complex.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LabelSet(pub Vec<usize>);

impl Ord for LabelSet {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for LabelSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ComplexOptions {
    pub max_interactions: usize,
    /// 1 runs the deterministic single-threaded path.
    pub threads: usize,
}

impl Default for ComplexOptions {
    fn default() -> Self {
        Self {
            max_interactions: DEFAULT_MAX_INTERACTIONS,
            threads: 1,
        }
    }
}

/// The downward-closed family I_L, grouped by label set into the F_A.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionComplex {
    level: usize,
    eps: f64,
    metric: Metric,
    num_points: usize,
    num_classes: usize,
    groups: BTreeMap<LabelSet, Vec<Interaction>>,
    total_count: usize,
}

impl InteractionComplex {
    /// Assemble a complex from an arbitrary interaction list. Members are
    /// canonicalized and groups sorted; duplicates are rejected.
    pub fn from_interactions(
        level: usize,
        eps: f64,
        metric: Metric,
        num_points: usize,
        num_classes: usize,
        interactions: Vec<Interaction>,
    ) -> Result<Self> {
        let mut groups: BTreeMap<LabelSet, Vec<Interaction>> = BTreeMap::new();
        let total_count = interactions.len();
        for mut it in interactions {
            it.members.sort();
            if it.members.is_empty() {
                return Err(Error::ComplexMismatch("empty interaction".into()));
            }
            if it.members.windows(2).any(|w| w[0].class == w[1].class) {
                return Err(Error::ComplexMismatch(format!(
                    "interaction {:?} repeats a class",
                    it.members
                )));
            }
            if let Some(m) = it
                .members
                .iter()
                .find(|m| m.point >= num_points || m.class >= num_classes)
            {
                return Err(Error::ComplexMismatch(format!("member {m:?} out of range")));
            }
            groups.entry(it.label_set()).or_default().push(it);
        }
        for list in groups.values_mut() {
            list.sort_by(|a, b| a.members.cmp(&b.members));
            if list.windows(2).any(|w| w[0].members == w[1].members) {
                return Err(Error::ComplexMismatch("duplicate interaction".into()));
            }
        }
        Ok(Self {
            level,
            eps,
            metric,
            num_points,
            num_classes,
            groups,
            total_count,
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn total_count(&self) -> usize {
        self.total_count
    }

    pub fn groups(&self) -> &BTreeMap<LabelSet, Vec<Interaction>> {
        &self.groups
    }

    /// F_A for the given label set (empty when no interaction has those labels).
    pub fn group(&self, labels: &[usize]) -> &[Interaction] {
        self.groups
            .get(&LabelSet(labels.to_vec()))
            .map_or(&[], Vec::as_slice)
    }

    /// All interactions in canonical column order: (order, label set, members).
    pub fn iter(&self) -> impl Iterator<Item = &Interaction> + '_ {
        self.groups.values().flatten()
    }

    pub fn count_by_order(&self) -> BTreeMap<usize, usize> {
        count_by_order(self)
    }

    pub fn contains(&self, members: &[Member]) -> bool {
        let mut key = members.to_vec();
        key.sort();
        let labels = LabelSet(key.iter().map(|m| m.class).collect());
        self.groups
            .get(&labels)
            .is_some_and(|list| list.binary_search_by(|it| it.members.as_slice().cmp(&key)).is_ok())
    }

    /// Member lists as a set, for comparisons between complexes.
    pub fn member_sets(&self) -> BTreeSet<Vec<Member>> {
        self.iter().map(|it| it.members.clone()).collect()
    }

    pub fn to_document(&self) -> ComplexDocument {
        ComplexDocument {
            eps: self.eps,
            metric: self.metric,
            level: self.level,
            groups: self
                .iter()
                .map(|it| InteractionRecord {
                    labels: it.members.iter().map(|m| m.class).collect(),
                    members: it.members.iter().map(|m| [m.class, m.point]).collect(),
                    witness: it.witness.clone(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_document())?)
    }

    /// Rebuild from the JSON document; point and class counts are inferred
    /// from the singletons, which every complex contains.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ComplexDocument = serde_json::from_str(text)?;
        let num_points = doc.groups.iter().filter(|g| g.members.len() == 1).count();
        let num_classes = doc
            .groups
            .iter()
            .flat_map(|g| g.labels.iter())
            .max()
            .map_or(0, |c| c + 1);
        let interactions = doc
            .groups
            .into_iter()
            .map(|g| Interaction {
                members: g
                    .members
                    .into_iter()
                    .map(|[class, point]| Member { class, point })
                    .collect(),
                witness: g.witness,
            })
            .collect();
        Self::from_interactions(doc.level, doc.eps, doc.metric, num_points, num_classes, interactions)
    }
}

/// Serialized form: one record per interaction, in canonical order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComplexDocument {
    pub eps: f64,
    pub metric: Metric,
    pub level: usize,
    pub groups: Vec<InteractionRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub labels: Vec<usize>,
    pub members: Vec<[usize; 2]>,
    pub witness: Vec<f64>,
}

pub fn count_by_order(complex: &InteractionComplex) -> BTreeMap<usize, usize> {
    let mut counts = BTreeMap::new();
    for (labels, list) in &complex.groups {
        *counts.entry(labels.0.len()).or_insert(0) += list.len();
    }
    counts
}

/// Enumerate every feasible interaction of size at most `level`.
pub fn build_complex(
    cloud: &LabeledPointCloud,
    eps: f64,
    metric: Metric,
    level: usize,
    options: &ComplexOptions,
) -> Result<InteractionComplex> {
    if eps <= 0.0 || !eps.is_finite() {
        return Err(invalid("eps", format!("must be positive and finite, got {eps}")));
    }
    if level == 0 {
        return Err(invalid("level", "must be at least 1"));
    }
    if options.threads == 0 {
        return Err(invalid("threads", "must be at least 1"));
    }
    let level = level.min(cloud.num_classes());
    let runner = Runner::new(options.threads)?;

    let mut all: Vec<Interaction> = (0..cloud.len())
        .map(|i| Interaction {
            members: vec![Member {
                class: cloud.label(i),
                point: i,
            }],
            witness: cloud.point(i).to_vec(),
        })
        .collect();
    check_budget(all.len(), options)?;

    if level >= 2 {
        let mut current = seed_pairs(cloud, eps, metric, &runner);
        check_budget(all.len() + current.len(), options)?;
        for _k in 3..=level {
            if current.is_empty() {
                break;
            }
            let next = join_level(cloud, &current, eps, metric, &runner, all.len() + current.len(), options)?;
            all.append(&mut current);
            current = next;
            check_budget(all.len() + current.len(), options)?;
        }
        all.append(&mut current);
    }
    InteractionComplex::from_interactions(level, eps, metric, cloud.len(), cloud.num_classes(), all)
}

fn check_budget(count: usize, options: &ComplexOptions) -> Result<()> {
    if count > options.max_interactions {
        return Err(Error::InteractionBudget {
            count,
            limit: options.max_interactions,
        });
    }
    Ok(())
}

/// Either inline sequential execution or a dedicated rayon pool.
struct Runner {
    pool: Option<rayon::ThreadPool>,
}

impl Runner {
    fn new(threads: usize) -> Result<Self> {
        let pool = if threads > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .map_err(|e| invalid("threads", e.to_string()))?,
            )
        } else {
            None
        };
        Ok(Self { pool })
    }

    /// Order-preserving filter-map.
    fn filter_map<T, U, F>(&self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> Option<U> + Sync + Send,
    {
        match &self.pool {
            None => items.iter().filter_map(f).collect(),
            Some(pool) => pool.install(|| items.par_iter().filter_map(f).collect()),
        }
    }
}

fn seed_pairs(cloud: &LabeledPointCloud, eps: f64, metric: Metric, runner: &Runner) -> Vec<Interaction> {
    let rows: Vec<usize> = (0..cloud.len()).collect();
    let per_row: Vec<Vec<Interaction>> = runner.filter_map(&rows, |&p| {
        let mut found = Vec::new();
        for q in p + 1..cloud.len() {
            if cloud.label(p) == cloud.label(q) {
                continue;
            }
            let d = metric.dist_unchecked(cloud.point(p), cloud.point(q));
            if !within_budget(0.5 * d, eps) {
                continue;
            }
            let w = common_ball_witness(&[cloud.point(p), cloud.point(q)], eps, metric)
                .expect("validated eps and equal dimensions");
            if let Some(witness) = w.witness {
                let mut members = vec![
                    Member { class: cloud.label(p), point: p },
                    Member { class: cloud.label(q), point: q },
                ];
                members.sort();
                found.push(Interaction { members, witness });
            }
        }
        (!found.is_empty()).then_some(found)
    });
    per_row.into_iter().flatten().collect()
}

/// Produce all feasible size-(k) interactions from the size-(k−1) list.
fn join_level(
    cloud: &LabeledPointCloud,
    prev: &[Interaction],
    eps: f64,
    metric: Metric,
    runner: &Runner,
    existing: usize,
    options: &ComplexOptions,
) -> Result<Vec<Interaction>> {
    // (k−2)-subset -> members completing it to a feasible (k−1)-interaction
    let mut buckets: HashMap<Vec<Member>, Vec<Member>> = HashMap::new();
    for it in prev {
        for skip in 0..it.members.len() {
            let mut key = it.members.clone();
            let dropped = key.remove(skip);
            buckets.entry(key).or_default().push(dropped);
        }
    }
    let prev_set: HashSet<&[Member]> = prev.iter().map(|it| it.members.as_slice()).collect();

    let mut seen: HashSet<Vec<Member>> = HashSet::new();
    let mut candidates: Vec<Vec<Member>> = Vec::new();
    let two_eps_ok = |a: &Member, b: &Member| {
        within_budget(0.5 * metric.dist_unchecked(cloud.point(a.point), cloud.point(b.point)), eps)
    };
    for (base, extras) in &buckets {
        for (i, a) in extras.iter().enumerate() {
            for b in &extras[i + 1..] {
                if a.class == b.class || !two_eps_ok(a, b) {
                    continue;
                }
                let mut cand = base.clone();
                cand.push(*a);
                cand.push(*b);
                cand.sort();
                // every (k−1)-face must already be feasible
                let closed = (0..cand.len()).all(|skip| {
                    let mut face = cand.clone();
                    face.remove(skip);
                    prev_set.contains(face.as_slice())
                });
                if closed && seen.insert(cand.clone()) {
                    candidates.push(cand);
                    check_budget(existing + candidates.len(), options)?;
                }
            }
        }
    }
    candidates.sort();
    Ok(runner.filter_map(&candidates, |members| {
        let pts: Vec<&[f64]> = members.iter().map(|m| cloud.point(m.point)).collect();
        let w = common_ball_witness(&pts, eps, metric).expect("validated eps and equal dimensions");
        w.witness.map(|witness| Interaction {
            members: members.clone(),
            witness,
        })
    }))
}
