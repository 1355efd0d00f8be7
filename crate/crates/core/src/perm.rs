//! Permutations of `{1, ..., d}` with composition, inversion and
//! fixed-point analysis.
//!
//! Points are 1-indexed in all input/output (cycle notation, fixed-point
//! sets) to match the usual cycle conventions; storage is 0-based.
//! Composition is a left action throughout the crate: `p.compose(q)` is the
//! map `x -> p(q(x))`, i.e. `q` is applied first.

use std::fmt;

use crate::error::{Error, Result};

/// A bijection of `{1, ..., d}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm {
    /// `images[i]` is the 0-based image of the 0-based point `i`.
    images: Vec<usize>,
}

impl Perm {
    /// Identity permutation of the given degree.
    ///
    /// Degree 0 is rejected; the empty symmetric group has no carrier here.
    pub fn identity(degree: usize) -> Perm {
        assert!(degree >= 1, "degree must be >= 1");
        Perm {
            images: (0..degree).collect(),
        }
    }

    /// Builds a permutation from 1-based images: `images[i]` is the image of
    /// point `i + 1`. Fails unless the entries are a bijection of `1..=d`.
    pub fn from_images_one_based(images: &[usize]) -> Result<Perm> {
        let d = images.len();
        if d == 0 {
            return Err(Error::Parse("a permutation needs degree >= 1".into()));
        }
        let mut seen = vec![false; d];
        let mut out = Vec::with_capacity(d);
        for &x in images {
            if x == 0 || x > d {
                return Err(Error::LetterOutOfRange {
                    letter: x,
                    arity: d,
                });
            }
            if seen[x - 1] {
                return Err(Error::Parse(format!("image {x} repeated; not a bijection")));
            }
            seen[x - 1] = true;
            out.push(x - 1);
        }
        Ok(Perm { images: out })
    }

    /// Builds a permutation of `degree` points from disjoint cycles
    /// (1-based). Rejects overlapping cycles and out-of-range points.
    pub fn from_cycles(degree: usize, cycles: &[Vec<usize>]) -> Result<Perm> {
        if degree == 0 {
            return Err(Error::Parse("a permutation needs degree >= 1".into()));
        }
        let mut images: Vec<usize> = (0..degree).collect();
        let mut used = vec![false; degree];
        for cycle in cycles {
            for &pt in cycle {
                if pt == 0 || pt > degree {
                    return Err(Error::LetterOutOfRange {
                        letter: pt,
                        arity: degree,
                    });
                }
                if used[pt - 1] {
                    return Err(Error::Parse(format!(
                        "point {pt} appears in two cycles; cycles must be disjoint"
                    )));
                }
                used[pt - 1] = true;
            }
            for i in 0..cycle.len() {
                let from = cycle[i] - 1;
                let to = cycle[(i + 1) % cycle.len()] - 1;
                images[from] = to;
            }
        }
        Ok(Perm { images })
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    /// Image of a 1-based point.
    pub fn apply(&self, point: usize) -> usize {
        self.images[point - 1] + 1
    }

    /// Image of a 0-based point; internal hot path.
    #[inline]
    pub(crate) fn apply0(&self, point: usize) -> usize {
        self.images[point]
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &x)| i == x)
    }

    /// Left-action composition: the result maps `x` to `self(other(x))`
    /// (`other` is applied first).
    pub fn compose(&self, other: &Perm) -> Result<Perm> {
        if self.degree() != other.degree() {
            return Err(Error::DegreeMismatch(self.degree(), other.degree()));
        }
        Ok(self.compose_same(other))
    }

    /// Composition without the degree check, for callers that already
    /// guarantee equal degrees.
    #[inline]
    pub(crate) fn compose_same(&self, other: &Perm) -> Perm {
        debug_assert_eq!(self.degree(), other.degree());
        Perm {
            images: other.images.iter().map(|&x| self.images[x]).collect(),
        }
    }

    pub fn inverse(&self) -> Perm {
        let mut images = vec![0; self.degree()];
        for (i, &x) in self.images.iter().enumerate() {
            images[x] = i;
        }
        Perm { images }
    }

    /// The set `{x : p(x) = x}`, 1-based and sorted.
    pub fn fixed_points(&self) -> Vec<usize> {
        self.images
            .iter()
            .enumerate()
            .filter(|&(i, &x)| i == x)
            .map(|(i, _)| i + 1)
            .collect()
    }

    pub fn count_fixed_points(&self) -> usize {
        self.images
            .iter()
            .enumerate()
            .filter(|&(i, &x)| i == x)
            .count()
    }

    /// Multiset of disjoint-cycle lengths including 1-cycles, sorted in
    /// decreasing order. The lengths sum to the degree.
    pub fn cycle_type(&self) -> Vec<usize> {
        let mut lengths: Vec<usize> = self.cycles_with_fixed().iter().map(|c| c.len()).collect();
        lengths.sort_unstable_by(|a, b| b.cmp(a));
        lengths
    }

    /// Disjoint cycles (1-based), including 1-cycles, each cycle starting at
    /// its smallest point, cycles ordered by smallest point.
    fn cycles_with_fixed(&self) -> Vec<Vec<usize>> {
        let d = self.degree();
        let mut seen = vec![false; d];
        let mut cycles = Vec::new();
        for start in 0..d {
            if seen[start] {
                continue;
            }
            let mut cycle = vec![start + 1];
            seen[start] = true;
            let mut x = self.images[start];
            while x != start {
                seen[x] = true;
                cycle.push(x + 1);
                x = self.images[x];
            }
            cycles.push(cycle);
        }
        cycles
    }

    /// Parses whitespace-insensitive cycle notation like `"(1 2 3 4)(5 6)"`,
    /// or `"id"` for the identity. Cycles must be disjoint. Points beyond
    /// `degree` are rejected.
    pub fn parse(text: &str, degree: usize) -> Result<Perm> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(Error::Parse("empty permutation".into()));
        }
        if trimmed == "id" || trimmed == "()" || trimmed == "e" {
            if degree == 0 {
                return Err(Error::Parse("a permutation needs degree >= 1".into()));
            }
            return Ok(Perm::identity(degree));
        }
        let mut cycles: Vec<Vec<usize>> = Vec::new();
        let mut rest = trimmed;
        while !rest.is_empty() {
            rest = rest.trim_start();
            if rest.is_empty() {
                break;
            }
            if !rest.starts_with('(') {
                return Err(Error::Parse(format!(
                    "expected '(' in permutation: {text:?}"
                )));
            }
            let close = rest
                .find(')')
                .ok_or_else(|| Error::Parse(format!("unclosed cycle in {text:?}")))?;
            let inside = &rest[1..close];
            let mut cycle = Vec::new();
            for token in inside.split(|c: char| c.is_whitespace() || c == ',') {
                if token.is_empty() {
                    continue;
                }
                let pt: usize = token
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad point {token:?} in {text:?}")))?;
                cycle.push(pt);
            }
            if cycle.is_empty() {
                return Err(Error::Parse(format!("empty cycle in {text:?}")));
            }
            cycles.push(cycle);
            rest = &rest[close + 1..];
        }
        Perm::from_cycles(degree, &cycles)
    }
}

impl fmt::Display for Perm {
    /// Disjoint-cycle notation with fixed points omitted; `id` for the
    /// identity.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles: Vec<Vec<usize>> = self
            .cycles_with_fixed()
            .into_iter()
            .filter(|c| c.len() > 1)
            .collect();
        if cycles.is_empty() {
            return write!(f, "id");
        }
        for cycle in cycles {
            write!(f, "(")?;
            for (i, pt) in cycle.iter().enumerate() {
                if i > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{pt}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Perm[{self}]")
    }
}
