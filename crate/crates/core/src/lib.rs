//! Exact analysis of fixed-point processes for groups acting on rooted
//! d-ary trees.
//!
//! The crate builds finite and level-truncated groups of tree
//! automorphisms — wreath powers of a permutation group, two-level wreath
//! products, and depth-2 coset-product patterns assembled from a
//! (transitive, intransitive) pair of prime-index normal subgroups — and
//! analyzes the process Y_n counting the level-n words fixed by a uniformly
//! random element. Everything probabilistic is computed with exact
//! rationals; a seeded Monte Carlo sampler cross-checks the exact values at
//! levels the recursion does not reach.
//!
//! The headline construction lives in [`pattern::PatternGroup::build_theorem12`]:
//! given a transitive group with a transitive normal subgroup N1 and an
//! intransitive normal subgroup N2 of the same prime index, the pattern
//! whose elements are `(a N1; sigma(a) N2, ..., sigma(a) N2)` defines a
//! recurrent group whose fixed-point process fails the martingale property
//! at level 2: conditioned on every level-1 word being fixed, the expected
//! number of fixed level-2 words strictly exceeds the degree. For the
//! symmetries of the square this gives E(Y_2 | Y_1 = 4) = 8 and a
//! fixed-point proportion of exactly 255/2048 at level 2.
//!
//! Modules:
//! - [`perm`]: permutations with cycle-notation I/O.
//! - [`group`]: generated finite permutation groups, orbits, normality,
//!   cosets, primitivity, and the prime-index normal pair search.
//! - [`tree`]: depth-n automorphism portraits, sections, fixed-word counts.
//! - [`pattern`]: pattern groups, structural verification, restriction
//!   kernels, and the kernel-transitivity martingale criterion.
//! - [`process`]: exact joint distributions, conditional expectations,
//!   martingale deviation, fixed-point proportions, and the average
//!   fixed-point lifting check.
//! - [`sampler`]: reproducible seeded Monte Carlo estimates.
//! - [`families`]: cyclic, dihedral, symmetric and alternating groups with
//!   their designated subgroup pairs, plus the finite symmetry catalog.
//! - [`cli`]: the command-line surface and the verification battery.

pub mod cli;
pub mod error;
pub mod families;
pub mod group;
pub mod pattern;
pub mod perm;
pub mod process;
pub mod sampler;
pub mod tree;
