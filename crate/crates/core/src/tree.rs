//! Automorphisms of the depth-n truncated d-ary tree, stored as portraits:
//! one permutation per internal vertex.
//!
//! Vertices are words over the alphabet `{1, ..., d}`; the root is the empty
//! word. A portrait `g` acts by descending along the *source* path:
//! the i-th output letter is the label at the length-(i-1) prefix of the
//! input word applied to the i-th input letter, so that
//! `g(vx) = g(v) g_v(x)` with `g_v` the section of `g` at `v`.

use std::fmt;

use crate::error::{Error, Result};
use crate::perm::Perm;

/// A depth-n automorphism portrait over a d-ary alphabet.
///
/// `levels[l]` holds the labels of all `d^l` vertices at level `l`, in
/// lexicographic word order; `levels.len()` is the depth.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreePortrait {
    arity: usize,
    levels: Vec<Vec<Perm>>,
}

impl TreePortrait {
    /// Identity automorphism of the depth-n d-ary tree.
    pub fn identity(arity: usize, depth: usize) -> TreePortrait {
        assert!(arity >= 1 && depth >= 1, "arity and depth must be >= 1");
        let mut levels = Vec::with_capacity(depth);
        let mut count = 1usize;
        for _ in 0..depth {
            levels.push(vec![Perm::identity(arity); count]);
            count *= arity;
        }
        TreePortrait { arity, levels }
    }

    /// Depth-1 portrait of a single permutation.
    pub fn from_perm(root: &Perm) -> TreePortrait {
        TreePortrait {
            arity: root.degree(),
            levels: vec![vec![root.clone()]],
        }
    }

    /// Depth-2 portrait from a root label and the `d` first-level labels in
    /// vertex order.
    pub fn from_root_and_sections(root: &Perm, sections: &[Perm]) -> Result<TreePortrait> {
        let d = root.degree();
        if sections.len() != d {
            return Err(Error::ShapeMismatch(format!(
                "expected {d} first-level labels, got {}",
                sections.len()
            )));
        }
        for s in sections {
            if s.degree() != d {
                return Err(Error::DegreeMismatch(d, s.degree()));
            }
        }
        Ok(TreePortrait {
            arity: d,
            levels: vec![vec![root.clone()], sections.to_vec()],
        })
    }

    /// Replaces the label at the given vertex (1-based letters), returning
    /// the modified portrait.
    pub fn with_label(mut self, word: &[usize], label: &Perm) -> Result<TreePortrait> {
        if word.len() >= self.depth() {
            return Err(Error::WordTooLong {
                got: word.len(),
                max: self.depth() - 1,
            });
        }
        if label.degree() != self.arity {
            return Err(Error::DegreeMismatch(self.arity, label.degree()));
        }
        let idx = self.encode(word)?;
        self.levels[word.len()][idx] = label.clone();
        Ok(self)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Label at a vertex given by 1-based letters.
    pub fn label(&self, word: &[usize]) -> Result<&Perm> {
        if word.len() >= self.depth() {
            return Err(Error::WordTooLong {
                got: word.len(),
                max: self.depth() - 1,
            });
        }
        let idx = self.encode(word)?;
        Ok(&self.levels[word.len()][idx])
    }

    /// Root label.
    pub fn root(&self) -> &Perm {
        &self.levels[0][0]
    }

    /// First-level labels in vertex order (only meaningful for depth >= 2).
    pub(crate) fn level_one_labels(&self) -> &[Perm] {
        &self.levels[1]
    }

    fn encode(&self, word: &[usize]) -> Result<usize> {
        let mut idx = 0usize;
        for &letter in word {
            if letter == 0 || letter > self.arity {
                return Err(Error::LetterOutOfRange {
                    letter,
                    arity: self.arity,
                });
            }
            idx = idx * self.arity + (letter - 1);
        }
        Ok(idx)
    }

    fn decode(&self, level: usize, mut idx: usize) -> Vec<usize> {
        let mut word = vec![0usize; level];
        for slot in word.iter_mut().rev() {
            *slot = idx % self.arity;
            idx /= self.arity;
        }
        word
    }

    /// Image of a word of length <= depth (letters 1-based).
    pub fn act(&self, word: &[usize]) -> Result<Vec<usize>> {
        if word.len() > self.depth() {
            return Err(Error::WordTooLong {
                got: word.len(),
                max: self.depth(),
            });
        }
        let mut zero_based = Vec::with_capacity(word.len());
        for &letter in word {
            if letter == 0 || letter > self.arity {
                return Err(Error::LetterOutOfRange {
                    letter,
                    arity: self.arity,
                });
            }
            zero_based.push(letter - 1);
        }
        Ok(self.act0(&zero_based).iter().map(|&x| x + 1).collect())
    }

    /// Action on 0-based words; internal hot path.
    fn act0(&self, word: &[usize]) -> Vec<usize> {
        let mut out = Vec::with_capacity(word.len());
        let mut idx = 0usize;
        for (l, &x) in word.iter().enumerate() {
            out.push(self.levels[l][idx].apply0(x));
            idx = idx * self.arity + x;
        }
        out
    }

    /// Left-action composition: `self.compose(other)` first applies `other`,
    /// then `self`. The label of the result at a source vertex `v` is
    /// `self[other(v)] . other[v]`.
    pub fn compose(&self, other: &TreePortrait) -> Result<TreePortrait> {
        if self.arity != other.arity || self.depth() != other.depth() {
            return Err(Error::ShapeMismatch(format!(
                "cannot compose a depth-{} {}-ary portrait with a depth-{} {}-ary one",
                self.depth(),
                self.arity,
                other.depth(),
                other.arity
            )));
        }
        let d = self.arity;
        let mut levels = Vec::with_capacity(self.depth());
        // Image vertex indices under `other`, maintained level by level.
        let mut image_idx: Vec<usize> = vec![0];
        for l in 0..self.depth() {
            let mut level = Vec::with_capacity(other.levels[l].len());
            for (idx, h_label) in other.levels[l].iter().enumerate() {
                let g_label = &self.levels[l][image_idx[idx]];
                level.push(g_label.compose_same(h_label));
            }
            if l + 1 < self.depth() {
                let mut next = vec![0usize; other.levels[l + 1].len()];
                for (idx, h_label) in other.levels[l].iter().enumerate() {
                    for x in 0..d {
                        next[idx * d + x] = image_idx[idx] * d + h_label.apply0(x);
                    }
                }
                image_idx = next;
            }
            levels.push(level);
        }
        Ok(TreePortrait { arity: d, levels })
    }

    /// Inverse automorphism: the label of the inverse at `g(v)` is the
    /// inverse of the label of `g` at `v`.
    pub fn inverse(&self) -> TreePortrait {
        let d = self.arity;
        let mut levels: Vec<Vec<Perm>> = self
            .levels
            .iter()
            .map(|lv| vec![Perm::identity(d); lv.len()])
            .collect();
        let mut image_idx: Vec<usize> = vec![0];
        #[allow(clippy::needless_range_loop)] // l indexes two level arrays plus a look-ahead
        for l in 0..self.depth() {
            for (idx, label) in self.levels[l].iter().enumerate() {
                levels[l][image_idx[idx]] = label.inverse();
            }
            if l + 1 < self.depth() {
                let mut next = vec![0usize; self.levels[l + 1].len()];
                for (idx, label) in self.levels[l].iter().enumerate() {
                    for x in 0..d {
                        next[idx * d + x] = image_idx[idx] * d + label.apply0(x);
                    }
                }
                image_idx = next;
            }
        }
        TreePortrait { arity: d, levels }
    }

    /// Section of the portrait at a vertex `v` (1-based letters): the
    /// depth-(n - |v|) portrait acting on the subtree hanging at `v`, so that
    /// `g(vx) = g(v) g_v(x)`.
    pub fn section(&self, word: &[usize]) -> Result<TreePortrait> {
        if word.len() >= self.depth() {
            return Err(Error::WordTooLong {
                got: word.len(),
                max: self.depth() - 1,
            });
        }
        let base = self.encode(word)?;
        let mut levels = Vec::with_capacity(self.depth() - word.len());
        let mut width = 1usize;
        for l in word.len()..self.depth() {
            let start = base * width;
            levels.push(self.levels[l][start..start + width].to_vec());
            width *= self.arity;
        }
        Ok(TreePortrait {
            arity: self.arity,
            levels,
        })
    }

    /// Number of words of the given length fixed by the portrait, computed
    /// recursively: `x w` is fixed iff the local label fixes `x` and the
    /// section at `x` fixes `w`.
    pub fn fixed_words(&self, level: usize) -> Result<u64> {
        if level == 0 || level > self.depth() {
            return Err(Error::LevelOutOfRange {
                got: level,
                min: 1,
                max: self.depth(),
            });
        }
        Ok(self.fixed_words_below(0, 0, level))
    }

    fn fixed_words_below(&self, l: usize, idx: usize, remaining_to: usize) -> u64 {
        let label = &self.levels[l][idx];
        if l + 1 == remaining_to {
            return label.count_fixed_points() as u64;
        }
        let mut total = 0u64;
        for x in 0..self.arity {
            if label.apply0(x) == x {
                total += self.fixed_words_below(l + 1, idx * self.arity + x, remaining_to);
            }
        }
        total
    }

    /// Truncation to the first `m` levels.
    pub fn restrict(&self, m: usize) -> Result<TreePortrait> {
        if m == 0 || m > self.depth() {
            return Err(Error::LevelOutOfRange {
                got: m,
                min: 1,
                max: self.depth(),
            });
        }
        Ok(TreePortrait {
            arity: self.arity,
            levels: self.levels[..m].to_vec(),
        })
    }

    /// Parses the one-line-per-vertex debug format produced by `Display`:
    /// `<word or (epsilon sign)>: <cycle notation>`, e.g.
    ///
    /// ```text
    /// ε: (1 2 3 4)
    /// 1: (1 3)
    /// 2: id
    /// ```
    pub fn parse(text: &str) -> Result<TreePortrait> {
        let mut entries: Vec<(Vec<usize>, String)> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (word_part, perm_part) = line
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("expected '<word>: <perm>', got {line:?}")))?;
            let word_part = word_part.trim();
            let word: Vec<usize> = if word_part == "ε" || word_part.is_empty() {
                Vec::new()
            } else {
                word_part
                    .split_whitespace()
                    .map(|t| {
                        t.parse::<usize>()
                            .map_err(|_| Error::Parse(format!("bad letter {t:?} in {line:?}")))
                    })
                    .collect::<Result<_>>()?
            };
            entries.push((word, perm_part.trim().to_string()));
        }
        if !entries.iter().any(|(w, _)| w.is_empty()) {
            return Err(Error::Parse("portrait needs a root line (ε: ...)".into()));
        }
        // Infer the arity as the largest point mentioned in any word or
        // cycle; identity labels alone cannot raise it.
        let mut arity = 1usize;
        for (word, perm_text) in &entries {
            for &letter in word {
                arity = arity.max(letter);
            }
            for token in perm_text.split(|c: char| !c.is_ascii_digit()) {
                if let Ok(pt) = token.parse::<usize>() {
                    arity = arity.max(pt);
                }
            }
        }
        let depth = entries.iter().map(|(w, _)| w.len()).max().unwrap_or(0) + 1;
        let mut portrait = TreePortrait::identity(arity, depth);
        let mut seen = vec![false; (0..depth).map(|l| arity.pow(l as u32)).sum()];
        let mut offset = 0usize;
        let offsets: Vec<usize> = (0..depth)
            .map(|l| {
                let o = offset;
                offset += arity.pow(l as u32);
                o
            })
            .collect();
        for (word, perm_text) in &entries {
            let perm = Perm::parse(perm_text, arity)?;
            let idx = portrait.encode(word)?;
            let flat = offsets[word.len()] + idx;
            if seen[flat] {
                return Err(Error::Parse(format!("vertex {word:?} labeled twice")));
            }
            seen[flat] = true;
            portrait = portrait.with_label(word, &perm)?;
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::Parse(
                "portrait is missing labels for some internal vertices".into(),
            ));
        }
        Ok(portrait)
    }
}

impl fmt::Display for TreePortrait {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in 0..self.depth() {
            for idx in 0..self.levels[l].len() {
                let word = self.decode(l, idx);
                if word.is_empty() {
                    write!(f, "ε")?;
                } else {
                    for (i, x) in word.iter().enumerate() {
                        if i > 0 {
                            write!(f, " ")?;
                        }
                        write!(f, "{}", x + 1)?;
                    }
                }
                writeln!(f, ": {}", self.levels[l][idx])?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for TreePortrait {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TreePortrait(d={}, n={})", self.arity, self.depth())
    }
}
