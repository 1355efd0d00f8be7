//! Exact fixed-point process analytics.
//!
//! For a pattern group P and its level-n truncated groups G_n, the process
//! Y_k(g) counts the level-k words fixed by a uniformly random element of
//! G_n. Everything here is computed with exact rationals over unbounded
//! integers; there is no floating point in this module. The headline
//! quantities are the joint distribution of (Y_1, ..., Y_n), conditional
//! expectations E(Y_k | history), the maximal martingale deviation, the
//! fixed-point proportion P(Y_k >= 1), and the average fixed-point lifting
//! check (each element's lifts must average exactly its own fixed-point
//! count for the process to be a martingale).
//!
//! The distribution recursion exploits the section decomposition: a word
//! `x w` is fixed iff the root fixes `x` and the section at `x` fixes `w`,
//! so the level-k vector below a vertex with label s is a point mass at
//! `#Fix(s)` followed by the sum over fixed children of independent copies
//! of the level-(k-1) vector. Constant fiber sizes make the vertexwise
//! uniform choices equivalent to the uniform measure on G_n; the recursion
//! refuses non-uniform patterns.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::pattern::{FiberRows, PatternGroup};
use crate::perm::Perm;
use crate::tree::TreePortrait;

/// Default maximum number of levels for the exact recursion.
pub const DEFAULT_MAX_LEVELS: usize = 4;

/// Guard on the sparse support size of intermediate distributions.
const SUPPORT_CAP: usize = 4_000_000;

type Support = BTreeMap<Vec<u64>, BigRational>;

/// Exact joint distribution of `(Y_1, ..., Y_n)` under the uniform measure
/// on the level-n group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointFixDistribution {
    arity: usize,
    levels: usize,
    weights: Support,
}

impl JointFixDistribution {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Support vectors with their exact probabilities, in lexicographic
    /// order.
    pub fn weights(&self) -> &BTreeMap<Vec<u64>, BigRational> {
        &self.weights
    }

    pub fn probability(&self, vector: &[u64]) -> BigRational {
        self.weights
            .get(vector)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    /// `E(Y_level)` as an exact rational.
    pub fn expectation(&self, level: usize) -> Result<BigRational> {
        self.check_level(level)?;
        let mut total = BigRational::zero();
        for (v, w) in &self.weights {
            total += w * BigRational::from_integer(BigInt::from(v[level - 1]));
        }
        Ok(total)
    }

    /// Fixed-point proportion at a level: `P(Y_level >= 1)`.
    pub fn fpp(&self, level: usize) -> Result<BigRational> {
        self.check_level(level)?;
        let mut none_fixed = BigRational::zero();
        for (v, w) in &self.weights {
            if v[level - 1] == 0 {
                none_fixed += w;
            }
        }
        Ok(BigRational::one() - none_fixed)
    }

    /// `E(Y_{l+1} | Y_1 = t_1, ..., Y_l = t_l)` for a history of length
    /// `l < levels`. The history must have positive probability.
    pub fn conditional_expectation(&self, history: &[u64]) -> Result<BigRational> {
        if history.is_empty() || history.len() >= self.levels {
            return Err(Error::LevelOutOfRange {
                got: history.len(),
                min: 1,
                max: self.levels.saturating_sub(1),
            });
        }
        let mut mass = BigRational::zero();
        let mut weighted = BigRational::zero();
        for (v, w) in &self.weights {
            if &v[..history.len()] == history {
                mass += w;
                weighted += w * BigRational::from_integer(BigInt::from(v[history.len()]));
            }
        }
        if mass.is_zero() {
            return Err(Error::ZeroProbabilityHistory);
        }
        Ok(weighted / mass)
    }

    /// All positive-probability histories of the given length, with their
    /// masses, in lexicographic order.
    pub fn histories(&self, length: usize) -> Vec<(Vec<u64>, BigRational)> {
        let mut out: BTreeMap<Vec<u64>, BigRational> = BTreeMap::new();
        for (v, w) in &self.weights {
            if length <= v.len() {
                *out.entry(v[..length].to_vec())
                    .or_insert_with(BigRational::zero) += w;
            }
        }
        out.into_iter().collect()
    }

    /// Maximal martingale violation: the largest `|E(Y_{l+1} | history) -
    /// t_l|` over all positive-probability histories of every length
    /// `1 <= l < levels`. Zero iff the truncated process is a martingale.
    pub fn martingale_deviation(&self) -> Result<BigRational> {
        if self.levels < 2 {
            return Err(Error::LevelOutOfRange {
                got: self.levels,
                min: 2,
                max: DEFAULT_MAX_LEVELS,
            });
        }
        let mut worst = BigRational::zero();
        for l in 1..self.levels {
            // Aggregate mass and the weighted next coordinate per prefix.
            let mut agg: BTreeMap<&[u64], (BigRational, BigRational)> = BTreeMap::new();
            for (v, w) in &self.weights {
                let entry = agg
                    .entry(&v[..l])
                    .or_insert_with(|| (BigRational::zero(), BigRational::zero()));
                entry.0 += w;
                entry.1 += w * BigRational::from_integer(BigInt::from(v[l]));
            }
            for (prefix, (mass, weighted)) in agg {
                let conditional = weighted / mass;
                let target = BigRational::from_integer(BigInt::from(prefix[l - 1]));
                let deviation = if conditional >= target {
                    conditional - target
                } else {
                    target - conditional
                };
                if deviation > worst {
                    worst = deviation;
                }
            }
        }
        Ok(worst)
    }

    fn check_level(&self, level: usize) -> Result<()> {
        if level == 0 || level > self.levels {
            return Err(Error::LevelOutOfRange {
                got: level,
                min: 1,
                max: self.levels,
            });
        }
        Ok(())
    }
}

impl fmt::Display for JointFixDistribution {
    /// One record per support vector: the vector entries, then the exact
    /// probability as `numerator/denominator`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (v, w) in &self.weights {
            let entries: Vec<String> = v.iter().map(|y| y.to_string()).collect();
            writeln!(f, "{}: {}", entries.join(" "), w)?;
        }
        Ok(())
    }
}

/// Exact joint distribution of `(Y_1, ..., Y_levels)` by the sparse dynamic
/// program. Requires the pattern to verify as a group with uniform fibers
/// (and, at depth 2, self-replication); `levels` is capped at
/// [`DEFAULT_MAX_LEVELS`].
pub fn exact_joint_distribution(
    pattern: &PatternGroup,
    levels: usize,
) -> Result<JointFixDistribution> {
    if levels == 0 || levels > DEFAULT_MAX_LEVELS {
        return Err(Error::LevelOutOfRange {
            got: levels,
            min: 1,
            max: DEFAULT_MAX_LEVELS,
        });
    }
    let report = pattern.verify();
    if !report.group_axioms_hold() {
        return Err(Error::UnverifiedPattern(
            "the element set is not a group".into(),
        ));
    }
    if pattern.pattern_depth() == 2 && !report.self_replicating {
        return Err(Error::UnverifiedPattern(
            "pattern is not self-replicating; its truncations are not captured by the stored set"
                .into(),
        ));
    }
    if !report.uniform_fibers {
        return Err(Error::NonUniformFibers(
            "the uniform measure needs every root to have equally many completions".into(),
        ));
    }

    let d = pattern.arity();
    let roots = pattern.root_perms();
    // state distributions F_m(s), reused across levels.
    let mut current: BTreeMap<Perm, Support> = roots
        .iter()
        .map(|s| {
            let mut w = Support::new();
            w.insert(vec![s.count_fixed_points() as u64], BigRational::one());
            (s.clone(), w)
        })
        .collect();

    for m in 2..=levels {
        // Child vectors cover levels 1..m-1; a root with no fixed points
        // contributes the zero vector there, not the empty one.
        let child_len = m - 1;
        let mut next: BTreeMap<Perm, Support> = BTreeMap::new();
        // Mixture distributions are shared between roots with the same label
        // list, so cache them by list.
        let mut mixture_cache: BTreeMap<Vec<Perm>, Vec<Support>> = BTreeMap::new();
        for s in &roots {
            let fix: Vec<usize> = (1..=d).filter(|&x| s.apply(x) == x).collect();
            let dist = match pattern.fiber_rows(s)? {
                FiberRows::Free { perms } => {
                    let powers =
                        mixture_powers(&mut mixture_cache, perms, &current, fix.len(), child_len)?;
                    prepend(s.count_fixed_points() as u64, &powers[fix.len()])
                }
                FiberRows::Product { labels } => {
                    let powers =
                        mixture_powers(&mut mixture_cache, labels, &current, fix.len(), child_len)?;
                    prepend(s.count_fixed_points() as u64, &powers[fix.len()])
                }
                FiberRows::Rows { rows } => {
                    // Aggregate the fiber by the labels over fixed vertices.
                    let mut projections: BTreeMap<Vec<&Perm>, u64> = BTreeMap::new();
                    let total = rows.len() as u64;
                    for row in &rows {
                        let key: Vec<&Perm> = fix.iter().map(|&v| &row[v - 1]).collect();
                        *projections.entry(key).or_insert(0) += 1;
                    }
                    let mut acc = Support::new();
                    for (key, count) in projections {
                        let mut product = point_mass(vec![0; child_len]);
                        for label in key {
                            product = convolve(&product, &current[label])?;
                        }
                        let scale = BigRational::new(BigInt::from(count), BigInt::from(total));
                        accumulate(
                            &mut acc,
                            &prepend(s.count_fixed_points() as u64, &product),
                            &scale,
                        );
                    }
                    acc
                }
            };
            next.insert(s.clone(), dist);
        }
        current = next;
    }

    // Constant fibers make the root marginal uniform over occurring roots.
    let mut weights = Support::new();
    let share = BigRational::new(BigInt::one(), BigInt::from(roots.len()));
    for s in &roots {
        accumulate(&mut weights, &current[s], &share);
    }
    Ok(JointFixDistribution {
        arity: d,
        levels,
        weights,
    })
}

/// Convolution powers 0..=max of the uniform mixture of the state
/// distributions over `labels`, cached by label list. The zeroth power is
/// the point mass at the zero vector of the child length.
fn mixture_powers<'c>(
    cache: &'c mut BTreeMap<Vec<Perm>, Vec<Support>>,
    labels: &[Perm],
    states: &BTreeMap<Perm, Support>,
    max_power: usize,
    child_len: usize,
) -> Result<&'c Vec<Support>> {
    let key = labels.to_vec();
    if !cache.contains_key(&key) || cache[&key].len() <= max_power {
        let mut mixture = Support::new();
        let share = BigRational::new(BigInt::one(), BigInt::from(labels.len()));
        for label in labels {
            accumulate(&mut mixture, &states[label], &share);
        }
        let mut powers = vec![point_mass(vec![0; child_len])];
        for k in 1..=max_power {
            let next = convolve(&powers[k - 1], &mixture)?;
            powers.push(next);
        }
        cache.insert(key.clone(), powers);
    }
    Ok(&cache[&key])
}

fn point_mass(vector: Vec<u64>) -> Support {
    let mut w = Support::new();
    w.insert(vector, BigRational::one());
    w
}

/// Distribution of the componentwise sum of two independent vectors.
fn convolve(a: &Support, b: &Support) -> Result<Support> {
    let mut out = Support::new();
    for (va, wa) in a {
        for (vb, wb) in b {
            debug_assert_eq!(va.len(), vb.len());
            let key: Vec<u64> = va.iter().zip(vb).map(|(x, y)| x + y).collect();
            *out.entry(key).or_insert_with(BigRational::zero) += wa * wb;
        }
    }
    if out.len() > SUPPORT_CAP {
        return Err(Error::CapExceeded(SUPPORT_CAP as u128));
    }
    Ok(out)
}

fn prepend(head: u64, tail: &Support) -> Support {
    let mut out = Support::new();
    for (v, w) in tail {
        let mut key = Vec::with_capacity(v.len() + 1);
        key.push(head);
        key.extend_from_slice(v);
        out.insert(key, w.clone());
    }
    out
}

fn accumulate(into: &mut Support, from: &Support, scale: &BigRational) {
    for (v, w) in from {
        *into.entry(v.clone()).or_insert_with(BigRational::zero) += w * scale;
    }
}

/// Brute-force joint distribution: iterates every element of the level-n
/// group and tallies its fixed-word vector. Independent of the recursion
/// above; serves as its oracle wherever the level-n group is enumerable.
pub fn enumeration_joint_distribution(
    pattern: &PatternGroup,
    levels: usize,
    cap: usize,
) -> Result<JointFixDistribution> {
    if levels == 0 {
        return Err(Error::LevelOutOfRange {
            got: 0,
            min: 1,
            max: DEFAULT_MAX_LEVELS,
        });
    }
    let mut tally: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
    let mut total: u64 = 0;
    pattern.for_each_level_element(levels, cap, |g| {
        let vector: Vec<u64> = (1..=levels)
            .map(|k| g.fixed_words(k).expect("level within depth"))
            .collect();
        *tally.entry(vector).or_insert(0) += 1;
        total += 1;
    })?;
    let weights = tally
        .into_iter()
        .map(|(v, count)| {
            (
                v,
                BigRational::new(BigInt::from(count), BigInt::from(total)),
            )
        })
        .collect();
    Ok(JointFixDistribution {
        arity: pattern.arity(),
        levels,
        weights,
    })
}

/// Result of the average fixed-point lifting check at one level.
#[derive(Clone, Debug)]
pub struct AfplpReport {
    pub level: usize,
    /// True iff every level-(n-1) element's lifts average exactly its own
    /// fixed-point count.
    pub holds: bool,
    /// Number of level-(n-1) elements checked.
    pub checked: usize,
    /// Element with the largest violation (first in portrait order on
    /// ties), its own fixed count, and the exact lift average.
    pub worst: Option<AfplpWitness>,
}

#[derive(Clone, Debug)]
pub struct AfplpWitness {
    pub base: TreePortrait,
    pub base_fixed: u64,
    pub lift_count: u64,
    pub lift_average: BigRational,
}

/// Checks the average fixed-point lifting property at level `n >= 2`: for
/// every `g` in the level-(n-1) group, the mean of `Y_n` over the lifts of
/// `g` (computed by filtering the enumerated level-n group, no coset
/// shortcuts) must equal `Y_{n-1}(g)` exactly.
pub fn afplp_check(pattern: &PatternGroup, level: usize, cap: usize) -> Result<AfplpReport> {
    if level < 2 {
        return Err(Error::LevelOutOfRange {
            got: level,
            min: 2,
            max: DEFAULT_MAX_LEVELS,
        });
    }
    let mut buckets: BTreeMap<TreePortrait, (u64, u64)> = BTreeMap::new();
    pattern.for_each_level_element(level, cap, |g| {
        let base = g.restrict(level - 1).expect("restriction below depth");
        let fixed = g.fixed_words(level).expect("level within depth");
        let entry = buckets.entry(base).or_insert((0, 0));
        entry.0 += 1;
        entry.1 += fixed;
    })?;
    let mut holds = true;
    let mut worst: Option<(BigRational, AfplpWitness)> = None;
    let checked = buckets.len();
    for (base, (count, sum)) in buckets {
        let average = BigRational::new(BigInt::from(sum), BigInt::from(count));
        let base_fixed = base.fixed_words(level - 1).expect("level within depth");
        let expected = BigRational::from_integer(BigInt::from(base_fixed));
        let deviation = if average >= expected {
            average.clone() - expected
        } else {
            expected - average.clone()
        };
        if !deviation.is_zero() {
            holds = false;
        }
        let replace = match &worst {
            None => true,
            Some((best, _)) => deviation > *best,
        };
        if replace {
            worst = Some((
                deviation,
                AfplpWitness {
                    base,
                    base_fixed,
                    lift_count: count,
                    lift_average: average,
                },
            ));
        }
    }
    Ok(AfplpReport {
        level,
        holds,
        checked,
        worst: worst.map(|(_, w)| w),
    })
}
