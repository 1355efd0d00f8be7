//! Pattern groups of depth 1 and 2: finite sets of tree-automorphism
//! portraits closed under composition, which define recurrent groups of
//! finite type acting on the infinite d-ary tree.
//!
//! Three constructions are provided. `wreath_pattern` turns a permutation
//! group into a depth-1 pattern (its recurrent group is the infinite wreath
//! power). `explicit_wreath` builds the two-level wreath product of two
//! groups of equal degree. `build_theorem12` takes a transitive group with a
//! (transitive, intransitive) pair of index-p normal subgroups and produces
//! the depth-2 pattern whose elements are `(a N1; sigma(a) N2, ..., sigma(a)
//! N2)`; its recurrent group has a non-martingale fixed-point process.
//!
//! Coset-product patterns are stored by their blocks, not by enumeration, so
//! structural checks (kernels, martingale criterion) stay cheap even when
//! the element count is astronomically large. Operations that genuinely need
//! the element list enforce the enumeration cap.

use std::collections::{BTreeSet, HashSet};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::group::{FiniteGroup, SubgroupPair, DEFAULT_CAP};
use crate::perm::Perm;
use crate::tree::TreePortrait;

/// A finite set of depth-k portraits (k = 1 or 2) treated as a pattern
/// group.
///
/// Constructors guarantee the group structure; hand-built sets from
/// [`PatternGroup::from_elements`] may violate it, which [`PatternGroup::verify`]
/// reports as verdicts rather than errors.
#[derive(Clone, Debug)]
pub struct PatternGroup {
    arity: usize,
    depth: usize,
    store: Store,
    /// Verification is pure and the group is immutable, so run it once.
    verified: OnceLock<PatternReport>,
}

#[derive(Clone, Debug)]
enum Store {
    /// Depth-1 pattern: elements are these permutations as depth-1
    /// portraits. Sorted.
    Depth1 { perms: Vec<Perm> },
    /// Depth-2 union of product blocks: element = (root in `roots`; each of
    /// the d labels independently in `labels`). Root sets are pairwise
    /// disjoint across blocks.
    Blocks { blocks: Vec<PatternBlock> },
    /// Arbitrary enumerated depth-2 set. Sorted and deduplicated.
    Explicit { elements: Vec<TreePortrait> },
}

/// One product block of a depth-2 pattern.
#[derive(Clone, Debug)]
pub struct PatternBlock {
    pub roots: Vec<Perm>,
    pub labels: Vec<Perm>,
}

/// Verdicts of the structural verification. All checks are reported, none
/// throw: a failed verdict is a result about the input set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternReport {
    /// Every product of two elements is again an element.
    pub closure: bool,
    /// Every inverse is an element.
    pub inverses: bool,
    /// The identity portrait is an element.
    pub contains_identity: bool,
    /// The set of root labels is itself closed under product and inverse.
    pub roots_form_group: bool,
    /// The root labels act transitively on `{1, ..., d}`.
    pub root_transitive: bool,
    /// Every first-level label occurring anywhere also occurs as a root, so
    /// every partial portrait extends downward (self-replication).
    pub self_replicating: bool,
    /// Every occurring root has the same number of elements above it.
    pub uniform_fibers: bool,
    /// For every first-level vertex v, the labels at v of elements whose
    /// root fixes v exhaust the whole root set: the finite-depth surrogate
    /// of recurrence (stabilizer sections are onto).
    pub recurrent_at_depth: bool,
}

impl PatternReport {
    pub fn group_axioms_hold(&self) -> bool {
        self.closure && self.inverses && self.contains_identity
    }

    pub fn all_hold(&self) -> bool {
        self.group_axioms_hold()
            && self.roots_form_group
            && self.root_transitive
            && self.self_replicating
            && self.uniform_fibers
            && self.recurrent_at_depth
    }

    pub fn verdicts(&self) -> Vec<(&'static str, bool)> {
        vec![
            ("closure", self.closure),
            ("inverses", self.inverses),
            ("contains_identity", self.contains_identity),
            ("roots_form_group", self.roots_form_group),
            ("root_transitive", self.root_transitive),
            ("self_replicating", self.self_replicating),
            ("uniform_fibers", self.uniform_fibers),
            ("recurrent_at_depth", self.recurrent_at_depth),
        ]
    }
}

/// Restriction-kernel summary: the elements restricting to the identity one
/// level up, and the orbit partition they induce on the children of every
/// first-level vertex.
#[derive(Clone, Debug)]
pub struct KernelReport {
    pub size: u128,
    /// Materialized kernel elements, present when `size` fits the cap.
    pub elements: Option<Vec<TreePortrait>>,
    /// Per first-level vertex (index 0 is vertex 1): sorted label set of the
    /// kernel at that vertex.
    pub label_sets: Vec<Vec<Perm>>,
    /// Per first-level vertex: orbit partition of the children under the
    /// kernel labels.
    pub per_child_orbits: Vec<Vec<Vec<usize>>>,
}

/// Outcome of the kernel-transitivity criterion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MartingaleVerdict {
    /// Kernels act transitively at every level examined. For depth-1
    /// patterns the product structure repeats at every level, so the
    /// verdict decides all levels; for depth-2 patterns levels beyond 3 are
    /// not checked.
    Martingale {
        levels_checked: Vec<usize>,
        decides_all_levels: bool,
    },
    /// The kernel at `level` acts intransitively on the subtree at the
    /// witness vertex (lexicographically least failing vertex, 1-based
    /// letters; the empty word is the root).
    NonMartingale { level: usize, vertex: Vec<usize> },
}

impl PatternGroup {
    fn assemble(arity: usize, depth: usize, store: Store) -> PatternGroup {
        PatternGroup {
            arity,
            depth,
            store,
            verified: OnceLock::new(),
        }
    }

    /// Depth-1 pattern whose elements are exactly the permutations of the
    /// given group. Its recurrent group of finite type is the infinite
    /// wreath power. An intransitive input is accepted (`verify` flags it).
    pub fn wreath_pattern(p1: &FiniteGroup) -> PatternGroup {
        let mut perms = p1.elements().to_vec();
        perms.sort();
        PatternGroup::assemble(p1.degree(), 1, Store::Depth1 { perms })
    }

    /// Two-level wreath product `top[bottom]` of two permutation groups of
    /// the same degree: all portraits with root in `top` and every
    /// first-level label in `bottom`.
    pub fn explicit_wreath(top: &FiniteGroup, bottom: &FiniteGroup) -> Result<PatternGroup> {
        if top.degree() != bottom.degree() {
            return Err(Error::DegreeMismatch(top.degree(), bottom.degree()));
        }
        let mut roots = top.elements().to_vec();
        roots.sort();
        let mut labels = bottom.elements().to_vec();
        labels.sort();
        Ok(PatternGroup::assemble(
            top.degree(),
            2,
            Store::Blocks {
                blocks: vec![PatternBlock { roots, labels }],
            },
        ))
    }

    /// The depth-2 pattern of the non-martingale construction: the union
    /// over cosets `a N1` of all portraits with root in `a N1` and every
    /// first-level label independently in `sigma(a) N2`. Its size is
    /// `|G| * |N2|^d`.
    pub fn build_theorem12(ambient: &FiniteGroup, pair: &SubgroupPair) -> Result<PatternGroup> {
        pair.validate(ambient)?;
        let mut blocks = Vec::with_capacity(pair.p);
        for i in 0..pair.p {
            let mut roots = pair.n1_coset_elements(i);
            roots.sort();
            let mut labels = pair.sigma_coset_elements(i);
            labels.sort();
            blocks.push(PatternBlock { roots, labels });
        }
        Ok(PatternGroup::assemble(
            ambient.degree(),
            2,
            Store::Blocks { blocks },
        ))
    }

    /// Depth-2 pattern assembled from product blocks: an element has its
    /// root in some block's `roots` and each of the d first-level labels
    /// independently in that block's `labels`. Root sets must be disjoint
    /// across blocks. No group structure is assumed (use `verify`); the
    /// block form keeps verification at coset level even when the element
    /// count is huge.
    pub fn from_blocks(arity: usize, blocks: Vec<PatternBlock>) -> Result<PatternGroup> {
        if arity == 0 {
            return Err(Error::InvalidParams("arity must be >= 1".into()));
        }
        if blocks.is_empty() {
            return Err(Error::InvalidParams(
                "a pattern needs at least one block".into(),
            ));
        }
        let mut seen_roots: BTreeSet<Perm> = BTreeSet::new();
        let mut normalized = Vec::with_capacity(blocks.len());
        for block in blocks {
            if block.roots.is_empty() || block.labels.is_empty() {
                return Err(Error::InvalidParams(
                    "blocks need nonempty root and label sets".into(),
                ));
            }
            for p in block.roots.iter().chain(block.labels.iter()) {
                if p.degree() != arity {
                    return Err(Error::DegreeMismatch(arity, p.degree()));
                }
            }
            let mut roots = block.roots;
            roots.sort();
            roots.dedup();
            for r in &roots {
                if !seen_roots.insert(r.clone()) {
                    return Err(Error::InvalidParams(format!(
                        "root {r} appears in two blocks"
                    )));
                }
            }
            let mut labels = block.labels;
            labels.sort();
            labels.dedup();
            normalized.push(PatternBlock { roots, labels });
        }
        Ok(PatternGroup::assemble(arity, 2, Store::Blocks { blocks: normalized }))
    }

    /// Wraps an arbitrary set of equal-shape portraits of depth 1 or 2.
    /// The set is deduplicated; nothing about the group structure is
    /// assumed (use `verify`).
    pub fn from_elements(elements: &[TreePortrait]) -> Result<PatternGroup> {
        let first = elements
            .first()
            .ok_or_else(|| Error::InvalidParams("a pattern needs at least one element".into()))?;
        let (arity, depth) = (first.arity(), first.depth());
        if depth != 1 && depth != 2 {
            return Err(Error::WrongDepth {
                got: depth,
                expected: 2,
            });
        }
        for e in elements {
            if e.arity() != arity || e.depth() != depth {
                return Err(Error::ShapeMismatch(
                    "pattern elements must share arity and depth".into(),
                ));
            }
        }
        if depth == 1 {
            let mut perms: Vec<Perm> = elements.iter().map(|e| e.root().clone()).collect();
            perms.sort();
            perms.dedup();
            Ok(PatternGroup::assemble(arity, depth, Store::Depth1 { perms }))
        } else {
            let mut sorted = elements.to_vec();
            sorted.sort();
            sorted.dedup();
            Ok(PatternGroup::assemble(arity, depth, Store::Explicit { elements: sorted }))
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn pattern_depth(&self) -> usize {
        self.depth
    }

    /// Number of elements. Exact even when the pattern is not materialized.
    pub fn size(&self) -> u128 {
        match &self.store {
            Store::Depth1 { perms } => perms.len() as u128,
            Store::Blocks { blocks } => blocks
                .iter()
                .map(|b| {
                    let fiber = (b.labels.len() as u128).pow(self.arity as u32);
                    b.roots.len() as u128 * fiber
                })
                .sum(),
            Store::Explicit { elements } => elements.len() as u128,
        }
    }

    /// Sorted set of occurring root labels (the level-1 projection of the
    /// pattern).
    pub fn root_perms(&self) -> Vec<Perm> {
        let mut out: Vec<Perm> = match &self.store {
            Store::Depth1 { perms } => perms.clone(),
            Store::Blocks { blocks } => blocks.iter().flat_map(|b| b.roots.clone()).collect(),
            Store::Explicit { elements } => elements.iter().map(|e| e.root().clone()).collect(),
        };
        out.sort();
        out.dedup();
        out
    }

    /// The group generated by the root labels. When `verify` reports
    /// `roots_form_group`, this equals the root set.
    pub fn root_group(&self) -> Result<FiniteGroup> {
        FiniteGroup::generate(self.arity, &self.root_perms(), DEFAULT_CAP)
    }

    /// Number of elements with the given root label.
    pub fn fiber_size(&self, root: &Perm) -> u128 {
        match &self.store {
            Store::Depth1 { perms } => {
                if perms.contains(root) {
                    1
                } else {
                    0
                }
            }
            Store::Blocks { blocks } => blocks
                .iter()
                .find(|b| b.roots.contains(root))
                .map(|b| (b.labels.len() as u128).pow(self.arity as u32))
                .unwrap_or(0),
            Store::Explicit { elements } => {
                elements.iter().filter(|e| e.root() == root).count() as u128
            }
        }
    }

    /// (root, fiber size) for every occurring root, sorted by root.
    pub fn fiber_sizes(&self) -> Vec<(Perm, u128)> {
        self.root_perms()
            .into_iter()
            .map(|r| {
                let n = self.fiber_size(&r);
                (r, n)
            })
            .collect()
    }

    /// Sorted set of depth-1 section values occurring in any element (the
    /// first-level labels). Meaningful for depth-2 patterns.
    pub fn section_values(&self) -> Vec<Perm> {
        let mut out: Vec<Perm> = match &self.store {
            Store::Depth1 { perms } => perms.clone(),
            Store::Blocks { blocks } => blocks.iter().flat_map(|b| b.labels.clone()).collect(),
            Store::Explicit { elements } => elements
                .iter()
                .flat_map(|e| e.level_one_labels().to_vec())
                .collect(),
        };
        out.sort();
        out.dedup();
        out
    }

    pub fn contains(&self, portrait: &TreePortrait) -> bool {
        if portrait.arity() != self.arity || portrait.depth() != self.depth {
            return false;
        }
        match &self.store {
            Store::Depth1 { perms } => perms.binary_search(portrait.root()).is_ok(),
            Store::Blocks { blocks } => blocks.iter().any(|b| {
                b.roots.contains(portrait.root())
                    && portrait
                        .level_one_labels()
                        .iter()
                        .all(|l| b.labels.contains(l))
            }),
            Store::Explicit { elements } => elements.binary_search(portrait).is_ok(),
        }
    }

    /// Streams every element in a deterministic order without materializing
    /// the whole set; refuses when the size exceeds `cap`.
    pub fn for_each_element<F: FnMut(&TreePortrait)>(&self, cap: usize, mut f: F) -> Result<()> {
        if self.size() > cap as u128 {
            return Err(Error::CapExceeded(cap as u128));
        }
        match &self.store {
            Store::Depth1 { perms } => {
                for p in perms {
                    f(&TreePortrait::from_perm(p));
                }
            }
            Store::Blocks { blocks } => {
                let d = self.arity;
                for block in blocks {
                    for root in &block.roots {
                        let mut picks = vec![0usize; d];
                        loop {
                            let sections: Vec<Perm> =
                                picks.iter().map(|&i| block.labels[i].clone()).collect();
                            let e = TreePortrait::from_root_and_sections(root, &sections)
                                .expect("block shapes are validated at construction");
                            f(&e);
                            if !advance_odometer(&mut picks, block.labels.len()) {
                                break;
                            }
                        }
                    }
                }
            }
            Store::Explicit { elements } => {
                for e in elements {
                    f(e);
                }
            }
        }
        Ok(())
    }

    /// Full element list, sorted; refuses above the cap.
    pub fn materialize(&self, cap: usize) -> Result<Vec<TreePortrait>> {
        let mut out = Vec::new();
        self.for_each_element(cap, |e| out.push(e.clone()))?;
        out.sort();
        Ok(out)
    }

    /// Streams the level-n truncated group defined by this pattern.
    ///
    /// For a depth-1 pattern this is the n-th wreath power: every internal
    /// vertex labeled independently. For a depth-2 pattern only n <= 2 is
    /// enumerable (level 1 streams the roots, level 2 the elements); deeper
    /// levels exceed any cap and report `CapExceeded`.
    pub fn for_each_level_element<F: FnMut(&TreePortrait)>(
        &self,
        n: usize,
        cap: usize,
        mut f: F,
    ) -> Result<()> {
        if n == 0 {
            return Err(Error::LevelOutOfRange {
                got: 0,
                min: 1,
                max: usize::MAX,
            });
        }
        match &self.store {
            Store::Depth1 { perms } => {
                let d = self.arity as u128;
                let mut vertex_count = 0u128;
                let mut width = 1u128;
                for _ in 0..n {
                    vertex_count += width;
                    width *= d;
                }
                let mut total = 1u128;
                for _ in 0..vertex_count {
                    total = total.saturating_mul(perms.len() as u128);
                    if total > cap as u128 {
                        return Err(Error::CapExceeded(cap as u128));
                    }
                }
                let vertex_count = vertex_count as usize;
                let mut picks = vec![0usize; vertex_count];
                loop {
                    let mut portrait = TreePortrait::identity(self.arity, n);
                    let mut cursor = 0usize;
                    for level in 0..n {
                        let mut word = vec![1usize; level];
                        loop {
                            portrait = portrait
                                .with_label(&word, &perms[picks[cursor]])
                                .expect("vertex enumeration stays in range");
                            cursor += 1;
                            if !advance_word(&mut word, self.arity) {
                                break;
                            }
                        }
                    }
                    f(&portrait);
                    if !advance_odometer(&mut picks, perms.len()) {
                        break;
                    }
                }
                Ok(())
            }
            Store::Blocks { .. } | Store::Explicit { .. } => match n {
                1 => {
                    for r in self.root_perms() {
                        f(&TreePortrait::from_perm(&r));
                    }
                    Ok(())
                }
                2 => self.for_each_element(cap, f),
                _ => Err(Error::CapExceeded(cap as u128)),
            },
        }
    }

    /// First-level label rows available above a given root, for sampling
    /// and the exact distribution recursion.
    pub(crate) fn fiber_rows(&self, root: &Perm) -> Result<FiberRows<'_>> {
        match &self.store {
            Store::Depth1 { perms } => Ok(FiberRows::Free { perms }),
            Store::Blocks { blocks } => blocks
                .iter()
                .find(|b| b.roots.contains(root))
                .map(|b| FiberRows::Product { labels: &b.labels })
                .ok_or_else(|| Error::NonUniformFibers(format!("no element has root {root}"))),
            Store::Explicit { elements } => {
                let rows: Vec<&[Perm]> = elements
                    .iter()
                    .filter(|e| e.root() == root)
                    .map(|e| e.level_one_labels())
                    .collect();
                if rows.is_empty() {
                    return Err(Error::NonUniformFibers(format!(
                        "no element has root {root}"
                    )));
                }
                Ok(FiberRows::Rows { rows })
            }
        }
    }

    /// Sorted kernel label set per first-level vertex: the labels occurring
    /// at that vertex among elements with identity root. Depth-2 only.
    pub fn kernel_label_sets(&self) -> Result<Vec<Vec<Perm>>> {
        if self.depth != 2 {
            return Err(Error::WrongDepth {
                got: self.depth,
                expected: 2,
            });
        }
        let id = Perm::identity(self.arity);
        match &self.store {
            Store::Depth1 { .. } => unreachable!("depth checked above"),
            Store::Blocks { blocks } => {
                let labels = blocks
                    .iter()
                    .find(|b| b.roots.contains(&id))
                    .map(|b| b.labels.clone())
                    .unwrap_or_default();
                Ok(vec![labels; self.arity])
            }
            Store::Explicit { elements } => {
                let mut sets: Vec<BTreeSet<Perm>> = vec![BTreeSet::new(); self.arity];
                for e in elements.iter().filter(|e| e.root().is_identity()) {
                    for (v, l) in e.level_one_labels().iter().enumerate() {
                        sets[v].insert(l.clone());
                    }
                }
                Ok(sets.into_iter().map(|s| s.into_iter().collect()).collect())
            }
        }
    }

    /// Verifies the pattern-group axioms and the structural properties used
    /// downstream. Verdicts, not exceptions. Computed once per pattern.
    pub fn verify(&self) -> PatternReport {
        self.verified.get_or_init(|| self.compute_verify()).clone()
    }

    fn compute_verify(&self) -> PatternReport {
        let root_perms = self.root_perms();
        let roots_form_group = perm_set_is_group(&root_perms);
        let root_transitive = point_orbit_count(self.arity, &root_perms) == 1;
        match &self.store {
            Store::Depth1 { perms } => {
                let set: BTreeSet<&Perm> = perms.iter().collect();
                let closure = perms
                    .iter()
                    .all(|a| perms.iter().all(|b| set.contains(&a.compose_same(b))));
                let inverses = perms.iter().all(|a| set.contains(&a.inverse()));
                let contains_identity = set.contains(&Perm::identity(self.arity));
                PatternReport {
                    closure,
                    inverses,
                    contains_identity,
                    roots_form_group,
                    root_transitive,
                    // Depth-1 sections are unconstrained below every vertex.
                    self_replicating: true,
                    uniform_fibers: true,
                    recurrent_at_depth: true,
                }
            }
            Store::Blocks { blocks } => {
                let (closure, inverses, contains_identity) = verify_blocks(self.arity, blocks);
                let root_set: BTreeSet<&Perm> = root_perms.iter().collect();
                let self_replicating = self.section_values().iter().all(|s| root_set.contains(s));
                let uniform_fibers = blocks
                    .windows(2)
                    .all(|w| w[0].labels.len() == w[1].labels.len());
                let recurrent_at_depth = (1..=self.arity).all(|v| {
                    let mut reachable: BTreeSet<&Perm> = BTreeSet::new();
                    for b in blocks {
                        if b.roots.iter().any(|r| r.apply(v) == v) {
                            reachable.extend(b.labels.iter());
                        }
                    }
                    reachable == root_set
                });
                PatternReport {
                    closure,
                    inverses,
                    contains_identity,
                    roots_form_group,
                    root_transitive,
                    self_replicating,
                    uniform_fibers,
                    recurrent_at_depth,
                }
            }
            Store::Explicit { elements } => {
                let set: HashSet<&TreePortrait> = elements.iter().collect();
                let closure = elements.iter().all(|a| {
                    elements
                        .iter()
                        .all(|b| set.contains(&a.compose(b).expect("equal shapes")))
                });
                let inverses = elements.iter().all(|a| set.contains(&a.inverse()));
                let contains_identity =
                    set.contains(&TreePortrait::identity(self.arity, self.depth));
                let root_set: BTreeSet<&Perm> = root_perms.iter().collect();
                let self_replicating = self.section_values().iter().all(|s| root_set.contains(s));
                let fiber_counts: Vec<u128> =
                    self.fiber_sizes().into_iter().map(|(_, n)| n).collect();
                let uniform_fibers = fiber_counts.windows(2).all(|w| w[0] == w[1]);
                let recurrent_at_depth = (1..=self.arity).all(|v| {
                    let mut reachable: BTreeSet<&Perm> = BTreeSet::new();
                    for e in elements {
                        if e.root().apply(v) == v {
                            reachable.insert(&e.level_one_labels()[v - 1]);
                        }
                    }
                    reachable == root_set
                });
                PatternReport {
                    closure,
                    inverses,
                    contains_identity,
                    roots_form_group,
                    root_transitive,
                    self_replicating,
                    uniform_fibers,
                    recurrent_at_depth,
                }
            }
        }
    }

    /// Kernel of the restriction map to depth 1: the elements with identity
    /// root, and the orbit partitions they induce on each first-level
    /// subtree. Depth-2 patterns only.
    pub fn restriction_kernel(&self, cap: usize) -> Result<KernelReport> {
        let label_sets = self.kernel_label_sets()?;
        let d = self.arity;
        let size: u128 = match &self.store {
            Store::Depth1 { .. } => unreachable!(),
            Store::Blocks { blocks } => blocks
                .iter()
                .find(|b| b.roots.contains(&Perm::identity(d)))
                .map(|b| (b.labels.len() as u128).pow(d as u32))
                .unwrap_or(0),
            Store::Explicit { elements } => {
                elements.iter().filter(|e| e.root().is_identity()).count() as u128
            }
        };
        let elements = if size <= cap as u128 {
            let mut kernel = Vec::new();
            match &self.store {
                Store::Depth1 { .. } => unreachable!(),
                Store::Blocks { blocks } => {
                    let id = Perm::identity(d);
                    if let Some(b) = blocks.iter().find(|b| b.roots.contains(&id)) {
                        let mut picks = vec![0usize; d];
                        loop {
                            let sections: Vec<Perm> =
                                picks.iter().map(|&i| b.labels[i].clone()).collect();
                            kernel.push(
                                TreePortrait::from_root_and_sections(&id, &sections)
                                    .expect("validated shapes"),
                            );
                            if !advance_odometer(&mut picks, b.labels.len()) {
                                break;
                            }
                        }
                    }
                }
                Store::Explicit { elements } => {
                    kernel.extend(elements.iter().filter(|e| e.root().is_identity()).cloned());
                }
            }
            kernel.sort();
            Some(kernel)
        } else {
            None
        };
        let per_child_orbits = label_sets
            .iter()
            .map(|set| point_orbits_of(d, set))
            .collect();
        Ok(KernelReport {
            size,
            elements,
            label_sets,
            per_child_orbits,
        })
    }

    /// Kernel-transitivity criterion: the fixed-point process of the
    /// recurrent group is a martingale iff every restriction kernel acts
    /// transitively on every one-level subtree. Checks level 1 (the root
    /// action), and for depth-2 patterns levels 2 and 3; the level-3 kernel
    /// is assembled from sections of identity-restricting elements, without
    /// enumerating the level-3 group.
    ///
    /// Requires the pattern to verify as a self-replicating group.
    pub fn martingale_check(&self) -> Result<MartingaleVerdict> {
        let report = self.verify();
        if !report.group_axioms_hold() || !report.self_replicating {
            let failed: Vec<&str> = report
                .verdicts()
                .into_iter()
                .filter(|(name, ok)| {
                    !ok && matches!(
                        *name,
                        "closure" | "inverses" | "contains_identity" | "self_replicating"
                    )
                })
                .map(|(name, _)| name)
                .collect();
            return Err(Error::UnverifiedPattern(failed.join(", ")));
        }
        if !report.root_transitive {
            return Ok(MartingaleVerdict::NonMartingale {
                level: 1,
                vertex: Vec::new(),
            });
        }
        if self.depth == 1 {
            // The level-n kernel of a wreath power is the full product of
            // copies of the pattern over the level above, so transitivity at
            // the root settles every level.
            return Ok(MartingaleVerdict::Martingale {
                levels_checked: vec![1, 2, 3],
                decides_all_levels: true,
            });
        }
        let label_sets = self.kernel_label_sets()?;
        for v in 1..=self.arity {
            if point_orbit_count(self.arity, &label_sets[v - 1]) != 1 {
                return Ok(MartingaleVerdict::NonMartingale {
                    level: 2,
                    vertex: vec![v],
                });
            }
        }
        // Level 3: the kernel of res_3 restricts, below first-level vertex
        // i, to sections that are exactly the identity-rooted elements, so
        // the labels at vertex (i, j) form the same set as at j.
        for i in 1..=self.arity {
            for j in 1..=self.arity {
                if point_orbit_count(self.arity, &label_sets[j - 1]) != 1 {
                    return Ok(MartingaleVerdict::NonMartingale {
                        level: 3,
                        vertex: vec![i, j],
                    });
                }
            }
        }
        Ok(MartingaleVerdict::Martingale {
            levels_checked: vec![1, 2, 3],
            decides_all_levels: false,
        })
    }
}

/// Label rows available above a root.
pub(crate) enum FiberRows<'a> {
    /// Depth-1 patterns: every label is free, independently uniform.
    Free { perms: &'a [Perm] },
    /// Product block: each of the d labels independently uniform on this
    /// list.
    Product { labels: &'a [Perm] },
    /// Explicit fiber: uniformly one of these complete label rows.
    Rows { rows: Vec<&'a [Perm]> },
}

fn verify_blocks(arity: usize, blocks: &[PatternBlock]) -> (bool, bool, bool) {
    let id = Perm::identity(arity);
    let find_block_of_root = |r: &Perm| blocks.iter().find(|b| b.roots.contains(r));

    let mut closure = true;
    'pairs: for bi in blocks {
        for bj in blocks {
            let mut label_products: BTreeSet<Perm> = BTreeSet::new();
            for u in &bi.labels {
                for v in &bj.labels {
                    label_products.insert(u.compose_same(v));
                }
            }
            for ri in &bi.roots {
                for rj in &bj.roots {
                    let rr = ri.compose_same(rj);
                    match find_block_of_root(&rr) {
                        Some(bk) => {
                            if !label_products.iter().all(|l| bk.labels.contains(l)) {
                                closure = false;
                                break 'pairs;
                            }
                        }
                        None => {
                            closure = false;
                            break 'pairs;
                        }
                    }
                }
            }
        }
    }

    let mut inverses = true;
    'inv: for b in blocks {
        let inverted_labels: Vec<Perm> = b.labels.iter().map(|l| l.inverse()).collect();
        for r in &b.roots {
            match find_block_of_root(&r.inverse()) {
                Some(bk) => {
                    if !inverted_labels.iter().all(|l| bk.labels.contains(l)) {
                        inverses = false;
                        break 'inv;
                    }
                }
                None => {
                    inverses = false;
                    break 'inv;
                }
            }
        }
    }

    let contains_identity = blocks
        .iter()
        .any(|b| b.roots.contains(&id) && b.labels.contains(&id));
    (closure, inverses, contains_identity)
}

fn perm_set_is_group(perms: &[Perm]) -> bool {
    if perms.is_empty() {
        return false;
    }
    let set: BTreeSet<&Perm> = perms.iter().collect();
    perms.iter().all(|a| set.contains(&a.inverse()))
        && perms
            .iter()
            .all(|a| perms.iter().all(|b| set.contains(&a.compose_same(b))))
}

/// Orbit partition of `{1, ..., d}` under a set of permutations (1-based).
pub(crate) fn point_orbits_of(degree: usize, perms: &[Perm]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; degree];
    let mut orbits = Vec::new();
    for start in 0..degree {
        if seen[start] {
            continue;
        }
        let mut orbit = vec![start];
        seen[start] = true;
        let mut head = 0;
        while head < orbit.len() {
            let x = orbit[head];
            for g in perms {
                let y = g.apply0(x);
                if !seen[y] {
                    seen[y] = true;
                    orbit.push(y);
                }
            }
            head += 1;
        }
        orbit.sort_unstable();
        orbits.push(orbit.iter().map(|&x| x + 1).collect());
    }
    orbits
}

fn point_orbit_count(degree: usize, perms: &[Perm]) -> usize {
    point_orbits_of(degree, perms).len()
}

fn advance_odometer(picks: &mut [usize], base: usize) -> bool {
    for slot in picks.iter_mut().rev() {
        *slot += 1;
        if *slot < base {
            return true;
        }
        *slot = 0;
    }
    false
}

fn advance_word(word: &mut [usize], arity: usize) -> bool {
    for slot in word.iter_mut().rev() {
        *slot += 1;
        if *slot <= arity {
            return true;
        }
        *slot = 1;
    }
    false
}

/// Parses the pattern specification format:
///
/// ```text
/// group: square.group
/// family: theorem12
/// p: 2
/// sigma: (2 4) => (1 2 3 4)
/// ```
///
/// `family` is `wreath` or `theorem12`; `p` and the optional `sigma`
/// override apply to `theorem12` only. The group file is resolved by the
/// caller, so this returns the raw fields.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternSpec {
    pub group_path: String,
    pub family: PatternFamily,
    pub p: Option<usize>,
    pub sigma: Option<(String, String)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatternFamily {
    Wreath,
    Theorem12,
}

pub fn parse_pattern_spec(text: &str) -> Result<PatternSpec> {
    let mut group_path = None;
    let mut family = None;
    let mut p = None;
    let mut sigma = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected 'key: value', got {line:?}")))?;
        let value = value.trim();
        match key.trim() {
            "group" => group_path = Some(value.to_string()),
            "family" => {
                family = Some(match value {
                    "wreath" => PatternFamily::Wreath,
                    "theorem12" => PatternFamily::Theorem12,
                    other => {
                        return Err(Error::Parse(format!(
                            "unknown family {other:?}; expected wreath or theorem12"
                        )))
                    }
                })
            }
            "p" => {
                p =
                    Some(value.parse::<usize>().map_err(|_| {
                        Error::Parse(format!("bad prime {value:?} in pattern spec"))
                    })?)
            }
            "sigma" => {
                let (a, b) = value.split_once("=>").ok_or_else(|| {
                    Error::Parse("sigma line must look like 'sigma: <perm> => <perm>'".into())
                })?;
                sigma = Some((a.trim().to_string(), b.trim().to_string()));
            }
            other => {
                return Err(Error::Parse(format!(
                    "unknown key {other:?} in pattern spec"
                )));
            }
        }
    }
    Ok(PatternSpec {
        group_path: group_path
            .ok_or_else(|| Error::Parse("pattern spec is missing the group line".into()))?,
        family: family
            .ok_or_else(|| Error::Parse("pattern spec is missing the family line".into()))?,
        p,
        sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::DEFAULT_CAP;

    fn perm(text: &str, degree: usize) -> Perm {
        Perm::parse(text, degree).unwrap()
    }

    fn group(gens: &[&str], degree: usize) -> FiniteGroup {
        let gens: Vec<Perm> = gens.iter().map(|g| perm(g, degree)).collect();
        FiniteGroup::generate(degree, &gens, DEFAULT_CAP).unwrap()
    }

    fn d4() -> FiniteGroup {
        group(&["(1 2 3 4)", "(2 4)"], 4)
    }

    fn d4_theorem12_pattern() -> PatternGroup {
        let d4 = d4();
        let pairs = d4.find_index_p_normal_pairs(2, DEFAULT_CAP).unwrap();
        let pair = pairs
            .iter()
            .find(|p| p.n1.contains(&perm("(1 2 3 4)", 4)))
            .unwrap();
        PatternGroup::build_theorem12(&d4, pair).unwrap()
    }

    #[test]
    fn wreath_pattern_sizes() {
        assert_eq!(
            PatternGroup::wreath_pattern(&group(&["(1 2)"], 2)).size(),
            2
        );
        let w = PatternGroup::wreath_pattern(&d4());
        assert_eq!(w.size(), 8);
        assert_eq!(w.root_group().unwrap().order(), 8);
        assert_eq!(
            PatternGroup::wreath_pattern(&FiniteGroup::trivial(3)).size(),
            1
        );
    }

    #[test]
    fn theorem12_pattern_counts() {
        let p = d4_theorem12_pattern();
        assert_eq!(p.size(), 2048); // |G| * |N2|^d = 8 * 4^4
        assert_eq!(p.root_perms().len(), 8);
        assert!(p.fiber_sizes().iter().all(|(_, n)| *n == 256));
    }

    #[test]
    fn theorem12_pattern_verifies() {
        let p = d4_theorem12_pattern();
        let report = p.verify();
        assert!(
            report.all_hold(),
            "failed verdicts: {:?}",
            report.verdicts()
        );
    }

    #[test]
    fn theorem12_materialized_set_is_closed() {
        // The coset-level closure argument should agree with brute force.
        let p = d4_theorem12_pattern();
        let elements = p.materialize(DEFAULT_CAP).unwrap();
        assert_eq!(elements.len(), 2048);
        let as_explicit = PatternGroup::from_elements(&elements).unwrap();
        let report = as_explicit.verify();
        assert!(
            report.all_hold(),
            "failed verdicts: {:?}",
            report.verdicts()
        );
    }

    #[test]
    fn wreath_pattern_verifies() {
        let report = PatternGroup::wreath_pattern(&d4()).verify();
        assert!(report.all_hold());
    }

    #[test]
    fn non_group_label_set_fails_closure() {
        // Root id with label rows drawn from {(1 2), (1 3)}: products leave
        // the set.
        let mut elements = Vec::new();
        for l in ["(1 2)", "(1 3)"] {
            let label = perm(l, 4);
            elements.push(
                TreePortrait::from_root_and_sections(&Perm::identity(4), &vec![label.clone(); 4])
                    .unwrap(),
            );
        }
        let p = PatternGroup::from_elements(&elements).unwrap();
        let report = p.verify();
        assert!(!report.closure);
        assert!(!report.contains_identity);
    }

    #[test]
    fn restriction_kernel_of_theorem12() {
        let p = d4_theorem12_pattern();
        let kernel = p.restriction_kernel(DEFAULT_CAP).unwrap();
        assert_eq!(kernel.size, 256); // 4^4
        assert_eq!(kernel.elements.as_ref().unwrap().len(), 256);
        for orbits in &kernel.per_child_orbits {
            assert_eq!(orbits, &vec![vec![1, 3], vec![2, 4]]);
        }
    }

    #[test]
    fn restriction_kernel_of_full_wreath() {
        let w = PatternGroup::explicit_wreath(&d4(), &d4()).unwrap();
        assert_eq!(w.size(), 32768); // 8^5
        let kernel = w.restriction_kernel(DEFAULT_CAP).unwrap();
        assert_eq!(kernel.size, 4096);
        for orbits in &kernel.per_child_orbits {
            assert_eq!(orbits, &vec![vec![1, 2, 3, 4]]);
        }
    }

    #[test]
    fn restriction_kernel_trivial() {
        let c4 = group(&["(1 2 3 4)"], 4);
        let w = PatternGroup::explicit_wreath(&c4, &FiniteGroup::trivial(4)).unwrap();
        let kernel = w.restriction_kernel(DEFAULT_CAP).unwrap();
        assert_eq!(kernel.size, 1);
        assert!(kernel.elements.unwrap()[0]
            .restrict(1)
            .unwrap()
            .root()
            .is_identity());
        for orbits in &kernel.per_child_orbits {
            assert_eq!(orbits.len(), 4);
        }
        assert!(kernel
            .per_child_orbits
            .iter()
            .all(|o| o.iter().all(|b| b.len() == 1)));
    }

    #[test]
    fn restriction_kernel_needs_depth_two() {
        let w = PatternGroup::wreath_pattern(&d4());
        assert!(matches!(
            w.restriction_kernel(DEFAULT_CAP),
            Err(Error::WrongDepth { .. })
        ));
    }

    #[test]
    fn martingale_verdicts() {
        let w = PatternGroup::wreath_pattern(&d4());
        assert!(matches!(
            w.martingale_check().unwrap(),
            MartingaleVerdict::Martingale {
                decides_all_levels: true,
                ..
            }
        ));

        let c4 = group(&["(1 2 3 4)"], 4);
        assert!(matches!(
            PatternGroup::wreath_pattern(&c4)
                .martingale_check()
                .unwrap(),
            MartingaleVerdict::Martingale { .. }
        ));

        let p = d4_theorem12_pattern();
        assert_eq!(
            p.martingale_check().unwrap(),
            MartingaleVerdict::NonMartingale {
                level: 2,
                vertex: vec![1]
            }
        );
    }

    #[test]
    fn intransitive_depth_one_pattern_fails_at_the_root() {
        let flip = group(&["(1 2)"], 3);
        let w = PatternGroup::wreath_pattern(&flip);
        assert_eq!(
            w.martingale_check().unwrap(),
            MartingaleVerdict::NonMartingale {
                level: 1,
                vertex: vec![]
            }
        );
    }

    #[test]
    fn full_wreath_is_martingale_theorem12_is_not_at_level_two() {
        let w = PatternGroup::explicit_wreath(&d4(), &d4()).unwrap();
        assert!(matches!(
            w.martingale_check().unwrap(),
            MartingaleVerdict::Martingale {
                decides_all_levels: false,
                ..
            }
        ));
    }

    #[test]
    fn level_group_streaming_counts() {
        let c2 = group(&["(1 2)"], 2);
        let w = PatternGroup::wreath_pattern(&c2);
        let mut count = 0u64;
        w.for_each_level_element(2, DEFAULT_CAP, |_| count += 1)
            .unwrap();
        assert_eq!(count, 8); // 2^(1 + 2)
        count = 0;
        w.for_each_level_element(3, DEFAULT_CAP, |_| count += 1)
            .unwrap();
        assert_eq!(count, 128); // 2^(1 + 2 + 4)

        let p = d4_theorem12_pattern();
        count = 0;
        p.for_each_level_element(2, DEFAULT_CAP, |_| count += 1)
            .unwrap();
        assert_eq!(count, 2048);
        assert!(matches!(
            p.for_each_level_element(3, DEFAULT_CAP, |_| ()),
            Err(Error::CapExceeded(_))
        ));
    }

    #[test]
    fn explicit_wreath_of_unequal_degrees_is_rejected() {
        let c2 = group(&["(1 2)"], 2);
        let c3 = group(&["(1 2 3)"], 3);
        assert!(matches!(
            PatternGroup::explicit_wreath(&c2, &c3),
            Err(Error::DegreeMismatch(2, 3))
        ));
    }

    #[test]
    fn self_replication_fails_for_mismatched_wreath() {
        // Top <(1 2)> inside S3, bottom C3: sections (1 2 3) never occur as
        // roots.
        let top = group(&["(1 2)"], 3);
        let bottom = group(&["(1 2 3)"], 3);
        let w = PatternGroup::explicit_wreath(&top, &bottom).unwrap();
        assert_eq!(w.size(), 54); // 2 * 3^3
        let report = w.verify();
        assert!(report.group_axioms_hold());
        assert!(!report.self_replicating);
    }

    #[test]
    fn pattern_spec_parsing() {
        let spec = parse_pattern_spec(
            "group: square.group\nfamily: theorem12\np: 2\nsigma: (2 4) => (1 2 3 4)\n",
        )
        .unwrap();
        assert_eq!(spec.group_path, "square.group");
        assert_eq!(spec.family, PatternFamily::Theorem12);
        assert_eq!(spec.p, Some(2));
        assert_eq!(spec.sigma, Some(("(2 4)".into(), "(1 2 3 4)".into())));
        assert!(parse_pattern_spec("family: wreath\n").is_err());
    }
}
