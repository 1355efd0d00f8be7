//! Generated finite permutation groups: breadth-first enumeration, orbits,
//! transitivity, normality, cosets, primitivity, and the search for
//! (transitive, intransitive) pairs of normal subgroups of prime index.
//!
//! Elements are enumerated in generator-word order: breadth-first over words
//! in the generators, shortest first, ties broken by generator index read
//! left to right. Every deterministic choice downstream (coset
//! representatives, the canonical coset isomorphism of a [`SubgroupPair`])
//! leans on that order.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::perm::Perm;

/// Default cap on element enumeration. Computations that would need more
/// elements than this refuse with [`Error::CapExceeded`] rather than degrade.
pub const DEFAULT_CAP: usize = 2_000_000;

/// A finite permutation group with its full element list.
#[derive(Clone)]
pub struct FiniteGroup {
    degree: usize,
    generators: Vec<Perm>,
    /// All elements in generator-word (BFS) order; `elements[0]` is the
    /// identity.
    elements: Vec<Perm>,
    index: HashMap<Perm, usize>,
}

impl FiniteGroup {
    /// Breadth-first closure of the generators under composition.
    ///
    /// An empty generator list yields the trivial group. Errors out with
    /// `CapExceeded` as soon as the closure passes `cap` elements.
    pub fn generate(degree: usize, generators: &[Perm], cap: usize) -> Result<FiniteGroup> {
        if degree == 0 {
            return Err(Error::InvalidParams("degree must be >= 1".into()));
        }
        if cap == 0 {
            return Err(Error::InvalidParams("cap must be >= 1".into()));
        }
        for g in generators {
            if g.degree() != degree {
                return Err(Error::DegreeMismatch(degree, g.degree()));
            }
        }
        let id = Perm::identity(degree);
        let mut elements = vec![id.clone()];
        let mut index = HashMap::new();
        index.insert(id, 0usize);
        let mut cursor = 0;
        while cursor < elements.len() {
            for g in generators {
                let candidate = elements[cursor].compose_same(g);
                if !index.contains_key(&candidate) {
                    if elements.len() + 1 > cap {
                        return Err(Error::CapExceeded(cap as u128));
                    }
                    index.insert(candidate.clone(), elements.len());
                    elements.push(candidate);
                }
            }
            cursor += 1;
        }
        Ok(FiniteGroup {
            degree,
            generators: generators.to_vec(),
            elements,
            index,
        })
    }

    /// Trivial group of the given degree.
    pub fn trivial(degree: usize) -> FiniteGroup {
        FiniteGroup::generate(degree, &[], 1).expect("trivial group")
    }

    /// Rebuilds a group from a known element set, choosing a small
    /// generating set greedily in the given element order.
    fn from_element_list(degree: usize, members: &[Perm], cap: usize) -> Result<FiniteGroup> {
        let mut gens: Vec<Perm> = Vec::new();
        let mut have = FiniteGroup::trivial(degree);
        for e in members {
            if !have.contains(e) {
                gens.push(e.clone());
                have = FiniteGroup::generate(degree, &gens, cap)?;
            }
        }
        debug_assert_eq!(have.order(), members.len());
        Ok(have)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn generators(&self) -> &[Perm] {
        &self.generators
    }

    /// Elements in generator-word order; index 0 is the identity.
    pub fn elements(&self) -> &[Perm] {
        &self.elements
    }

    pub fn contains(&self, p: &Perm) -> bool {
        self.index.contains_key(p)
    }

    pub fn is_subgroup_of(&self, ambient: &FiniteGroup) -> bool {
        self.degree == ambient.degree && self.elements.iter().all(|e| ambient.contains(e))
    }

    /// Orbit partition of `{1, ..., d}` under the group action. Each orbit is
    /// sorted; orbits are ordered by smallest point.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let d = self.degree;
        let mut seen = vec![false; d];
        let mut orbits = Vec::new();
        for start in 0..d {
            if seen[start] {
                continue;
            }
            let mut orbit = vec![start];
            seen[start] = true;
            let mut head = 0;
            while head < orbit.len() {
                let x = orbit[head];
                for g in &self.generators {
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

    pub fn is_transitive(&self) -> bool {
        self.orbits().len() == 1
    }

    /// True iff `g h g^-1 = h` for every generator `g` of `self`; requires
    /// `h` to be a subgroup of `self`.
    pub fn is_normal(&self, h: &FiniteGroup) -> Result<bool> {
        if !h.is_subgroup_of(self) {
            return Err(Error::NotASubgroup(
                "normality check: candidate is not contained in the group".into(),
            ));
        }
        for g in &self.generators {
            let g_inv = g.inverse();
            for x in h.generators_or_identity() {
                let conj = g.compose_same(&x.compose_same(&g_inv));
                if !h.contains(&conj) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    fn generators_or_identity(&self) -> Vec<Perm> {
        if self.generators.is_empty() {
            vec![Perm::identity(self.degree)]
        } else {
            self.generators.clone()
        }
    }

    /// Left cosets `gH`, each as (representative, elements). Representatives
    /// are the first uncovered elements in enumeration order, so the first
    /// coset is `H` itself.
    pub fn cosets(&self, h: &FiniteGroup) -> Result<Vec<Coset>> {
        if !h.is_subgroup_of(self) {
            return Err(Error::NotASubgroup(
                "coset decomposition: candidate is not contained in the group".into(),
            ));
        }
        let mut covered = vec![false; self.elements.len()];
        let mut out = Vec::new();
        for (i, rep) in self.elements.iter().enumerate() {
            if covered[i] {
                continue;
            }
            let mut members = Vec::with_capacity(h.order());
            for x in h.elements() {
                let m = rep.compose_same(x);
                let j = *self
                    .index
                    .get(&m)
                    .ok_or_else(|| Error::NotASubgroup("coset left the ambient group".into()))?;
                covered[j] = true;
                members.push(m);
            }
            out.push(Coset {
                representative: rep.clone(),
                elements: members,
            });
        }
        debug_assert_eq!(out.len() * h.order(), self.order());
        Ok(out)
    }

    /// Primitivity via minimal block systems: the group is primitive iff for
    /// every point `x != 1` the smallest block containing `{1, x}` is the
    /// whole point set. Errors with `NotTransitive` on intransitive input.
    pub fn is_primitive(&self) -> Result<bool> {
        if !self.is_transitive() {
            return Err(Error::NotTransitive);
        }
        let d = self.degree;
        for x in 1..d {
            if self.minimal_block_size(0, x) < d {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Size of the smallest block containing the two 0-based points: refine
    /// the partition seeded with `a ~ b` until every generator maps classes
    /// into classes.
    fn minimal_block_size(&self, a: usize, b: usize) -> usize {
        let d = self.degree;
        let mut class: Vec<usize> = (0..d).collect();
        fn find(class: &mut [usize], mut x: usize) -> usize {
            while class[x] != x {
                class[x] = class[class[x]];
                x = class[x];
            }
            x
        }
        class[b] = a;
        let mut changed = true;
        while changed {
            changed = false;
            for g in &self.generators {
                for x in 0..d {
                    for y in (x + 1)..d {
                        if find(&mut class, x) == find(&mut class, y) {
                            let gx = find(&mut class, g.apply0(x));
                            let gy = find(&mut class, g.apply0(y));
                            if gx != gy {
                                class[gx.max(gy)] = gx.min(gy);
                                changed = true;
                            }
                        }
                    }
                }
            }
        }
        let root = find(&mut class, a);
        (0..d).filter(|&x| find(&mut class, x) == root).count()
    }

    /// All (transitive N1, intransitive N2) ordered pairs of normal
    /// subgroups of prime index `p`, each with the canonical coset
    /// isomorphism.
    ///
    /// Normal subgroups of index p are exactly the preimages of hyperplanes
    /// of the elementary abelian quotient G/K with K generated by
    /// commutators and p-th powers; the search enumerates those hyperplanes.
    pub fn find_index_p_normal_pairs(&self, p: usize, cap: usize) -> Result<Vec<SubgroupPair>> {
        if !is_prime(p) {
            return Err(Error::InvalidParams(format!("{p} is not prime")));
        }
        if !self.is_transitive() {
            return Err(Error::NotTransitive);
        }
        let k = self.commutator_p_power_subgroup(p, cap)?;
        let cosets = self.cosets(&k)?;
        let q = cosets.len();
        if q == 1 {
            return Ok(Vec::new());
        }
        // G/K must be elementary abelian of exponent p.
        let mut power_of_p = q;
        while power_of_p % p == 0 {
            power_of_p /= p;
        }
        assert_eq!(
            power_of_p, 1,
            "quotient by commutators and p-th powers not a p-group"
        );

        // Index every group element by its coset.
        let mut coset_of: HashMap<Perm, usize> = HashMap::new();
        for (ci, coset) in cosets.iter().enumerate() {
            for e in &coset.elements {
                coset_of.insert(e.clone(), ci);
            }
        }
        let mult = |c1: usize, c2: usize| -> usize {
            let prod = cosets[c1]
                .representative
                .compose_same(&cosets[c2].representative);
            coset_of[&prod]
        };

        // Greedy F_p-basis of the quotient, recording coordinates.
        let mut basis: Vec<usize> = Vec::new();
        let mut coords: HashMap<usize, Vec<usize>> = HashMap::new();
        coords.insert(0, Vec::new());
        for c in 1..q {
            if coords.contains_key(&c) {
                continue;
            }
            basis.push(c);
            let snapshot: Vec<(usize, Vec<usize>)> =
                coords.iter().map(|(a, v)| (*a, v.clone())).collect();
            for (known, mut vec) in snapshot {
                vec.push(0);
                let mut acc = known;
                for e in 1..p {
                    acc = mult(acc, c);
                    let mut v = vec.clone();
                    *v.last_mut().unwrap() = e;
                    coords.insert(acc, v);
                }
            }
            // Pad earlier coordinate vectors to the new basis length.
            for v in coords.values_mut() {
                while v.len() < basis.len() {
                    v.push(0);
                }
            }
        }
        let dim = basis.len();
        assert_eq!(coords.len(), q, "basis does not span the quotient");

        // Enumerate normalized nonzero functionals (leading coefficient 1):
        // one per hyperplane, (p^dim - 1)/(p - 1) in total.
        let mut subgroups: Vec<FiniteGroup> = Vec::new();
        for lead in 0..dim {
            let tail = dim - lead - 1;
            let mut counter = vec![0usize; tail];
            loop {
                let mut lambda = vec![0usize; dim];
                lambda[lead] = 1;
                lambda[lead + 1..].copy_from_slice(&counter);
                let mut members: Vec<Perm> = Vec::new();
                for (ci, coset) in cosets.iter().enumerate() {
                    let v = &coords[&ci];
                    let dot: usize = lambda.iter().zip(v).map(|(a, b)| a * b).sum();
                    if dot.is_multiple_of(p) {
                        members.extend(coset.elements.iter().cloned());
                    }
                }
                // Keep ambient enumeration order for deterministic generators.
                let member_set: HashMap<&Perm, ()> = members.iter().map(|m| (m, ())).collect();
                let ordered: Vec<Perm> = self
                    .elements
                    .iter()
                    .filter(|e| member_set.contains_key(e))
                    .cloned()
                    .collect();
                let n = FiniteGroup::from_element_list(self.degree, &ordered, cap)?;
                debug_assert_eq!(n.order() * p, self.order());
                subgroups.push(n);
                // Advance the mixed-radix counter over trailing coefficients.
                let mut pos = tail;
                loop {
                    if pos == 0 {
                        break;
                    }
                    counter[pos - 1] += 1;
                    if counter[pos - 1] < p {
                        break;
                    }
                    counter[pos - 1] = 0;
                    pos -= 1;
                }
                if tail == 0 || counter.iter().all(|&c| c == 0) {
                    break;
                }
            }
        }

        let mut pairs = Vec::new();
        for n1 in subgroups.iter().filter(|n| n.is_transitive()) {
            for n2 in subgroups.iter().filter(|n| !n.is_transitive()) {
                pairs.push(SubgroupPair::with_canonical_sigma(
                    self,
                    n1.clone(),
                    n2.clone(),
                    p,
                )?);
            }
        }
        Ok(pairs)
    }

    /// The subgroup generated by all commutators and all p-th powers: the
    /// kernel of the universal map onto an elementary abelian p-quotient.
    fn commutator_p_power_subgroup(&self, p: usize, cap: usize) -> Result<FiniteGroup> {
        let id = Perm::identity(self.degree);
        let mut gens: Vec<Perm> = Vec::new();
        for a in &self.generators {
            for b in &self.generators {
                let c = a
                    .compose_same(b)
                    .compose_same(&a.inverse())
                    .compose_same(&b.inverse());
                if c != id && !gens.contains(&c) {
                    gens.push(c);
                }
            }
        }
        // Normal closure of the generator commutators gives [G, G].
        let mut h = FiniteGroup::generate(self.degree, &gens, cap)?;
        loop {
            let mut grew = false;
            'outer: for g in &self.generators {
                let g_inv = g.inverse();
                for x in h.elements() {
                    let conj = g.compose_same(&x.compose_same(&g_inv));
                    if !h.contains(&conj) {
                        gens.push(conj);
                        h = FiniteGroup::generate(self.degree, &gens, cap)?;
                        grew = true;
                        break 'outer;
                    }
                }
            }
            if !grew {
                break;
            }
        }
        // Modulo [G, G] the p-th powers are generated by generator powers.
        for g in &self.generators {
            let gp = perm_pow(g, p);
            if !h.contains(&gp) {
                gens.push(gp);
                h = FiniteGroup::generate(self.degree, &gens, cap)?;
            }
        }
        Ok(h)
    }
}

impl std::fmt::Debug for FiniteGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "FiniteGroup(degree {}, order {}, <{}>)",
            self.degree,
            self.order(),
            self.generators
                .iter()
                .map(|g| g.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        )
    }
}

/// One left coset `gH`.
#[derive(Clone, Debug)]
pub struct Coset {
    pub representative: Perm,
    pub elements: Vec<Perm>,
}

/// A (transitive, intransitive) pair of normal subgroups of prime index,
/// together with a coset isomorphism `sigma: G/N1 -> G/N2` given by a
/// representative pairing. `pairing[i] = (a^i, b^i)` encodes
/// `sigma(a^i N1) = b^i N2`; entry 0 is the identity pair.
#[derive(Clone, Debug)]
pub struct SubgroupPair {
    pub n1: FiniteGroup,
    pub n2: FiniteGroup,
    pub p: usize,
    pub pairing: Vec<(Perm, Perm)>,
}

impl SubgroupPair {
    /// Canonical sigma: `a` is the first element of `ambient` in
    /// generator-word order outside N1, `b` the first outside N2, and
    /// `sigma(a^i N1) = b^i N2` extended multiplicatively.
    pub fn with_canonical_sigma(
        ambient: &FiniteGroup,
        n1: FiniteGroup,
        n2: FiniteGroup,
        p: usize,
    ) -> Result<SubgroupPair> {
        let a = ambient
            .elements()
            .iter()
            .find(|e| !n1.contains(e))
            .ok_or_else(|| Error::InvalidPair("N1 is the whole group".into()))?
            .clone();
        let b = ambient
            .elements()
            .iter()
            .find(|e| !n2.contains(e))
            .ok_or_else(|| Error::InvalidPair("N2 is the whole group".into()))?
            .clone();
        SubgroupPair::with_sigma(ambient, n1, n2, p, a, b)
    }

    /// Sigma from an explicit coset pairing `sigma(a N1) = b N2`. Since both
    /// quotients are cyclic of prime order, the pair (a, b) determines the
    /// isomorphism.
    pub fn with_sigma(
        ambient: &FiniteGroup,
        n1: FiniteGroup,
        n2: FiniteGroup,
        p: usize,
        a: Perm,
        b: Perm,
    ) -> Result<SubgroupPair> {
        if !ambient.contains(&a) || !ambient.contains(&b) {
            return Err(Error::InvalidPair(
                "sigma representatives must lie in the ambient group".into(),
            ));
        }
        if n1.contains(&a) {
            return Err(Error::InvalidPair(
                "sigma source representative lies in N1; it must generate G/N1".into(),
            ));
        }
        if n2.contains(&b) {
            return Err(Error::InvalidPair(
                "sigma image representative lies in N2; it must generate G/N2".into(),
            ));
        }
        let mut pairing = Vec::with_capacity(p);
        let id = Perm::identity(ambient.degree());
        let mut ai = id.clone();
        let mut bi = id;
        for _ in 0..p {
            pairing.push((ai.clone(), bi.clone()));
            ai = ai.compose_same(&a);
            bi = bi.compose_same(&b);
        }
        let pair = SubgroupPair { n1, n2, p, pairing };
        pair.validate(ambient)?;
        Ok(pair)
    }

    /// Index `i` such that `g` lies in the coset `a^i N1`.
    pub fn coset_index(&self, g: &Perm) -> Result<usize> {
        for (i, (ai, _)) in self.pairing.iter().enumerate() {
            if self.n1.contains(&ai.inverse().compose_same(g)) {
                return Ok(i);
            }
        }
        Err(Error::InvalidPair(
            "element lies in no coset of N1; is it in the ambient group?".into(),
        ))
    }

    /// Elements of the coset `a^i N1`, in N1 enumeration order.
    pub fn n1_coset_elements(&self, i: usize) -> Vec<Perm> {
        let rep = &self.pairing[i].0;
        self.n1
            .elements()
            .iter()
            .map(|x| rep.compose_same(x))
            .collect()
    }

    /// Elements of the coset `sigma(a^i N1) = b^i N2`, in N2 enumeration
    /// order.
    pub fn sigma_coset_elements(&self, i: usize) -> Vec<Perm> {
        let rep = &self.pairing[i].1;
        self.n2
            .elements()
            .iter()
            .map(|x| rep.compose_same(x))
            .collect()
    }

    /// Checks every structural invariant of the pair: both subgroups normal
    /// of index p in `ambient`, N1 transitive, N2 intransitive, and the
    /// pairing entries lying in the claimed cosets.
    pub fn validate(&self, ambient: &FiniteGroup) -> Result<()> {
        if self.n1.order() * self.p != ambient.order() {
            return Err(Error::InvalidPair("N1 does not have index p".into()));
        }
        if self.n2.order() * self.p != ambient.order() {
            return Err(Error::InvalidPair("N2 does not have index p".into()));
        }
        if !ambient.is_normal(&self.n1)? {
            return Err(Error::InvalidPair("N1 is not normal".into()));
        }
        if !ambient.is_normal(&self.n2)? {
            return Err(Error::InvalidPair("N2 is not normal".into()));
        }
        if !self.n1.is_transitive() {
            return Err(Error::InvalidPair("N1 is not transitive".into()));
        }
        if self.n2.is_transitive() {
            return Err(Error::InvalidPair("N2 is transitive".into()));
        }
        if self.pairing.len() != self.p {
            return Err(Error::InvalidPair("pairing must list p cosets".into()));
        }
        if !self.pairing[0].0.is_identity() || !self.pairing[0].1.is_identity() {
            return Err(Error::InvalidPair(
                "pairing entry 0 must be the identity".into(),
            ));
        }
        // Distinct cosets on both sides: a^i N1 pairwise disjoint, same for b.
        for i in 0..self.p {
            for j in (i + 1)..self.p {
                let (ai, bi) = &self.pairing[i];
                let (aj, bj) = &self.pairing[j];
                if self.n1.contains(&ai.inverse().compose_same(aj)) {
                    return Err(Error::InvalidPair("sigma source cosets collide".into()));
                }
                if self.n2.contains(&bi.inverse().compose_same(bj)) {
                    return Err(Error::InvalidPair("sigma image cosets collide".into()));
                }
            }
        }
        Ok(())
    }
}

/// Parses the group specification text format:
///
/// ```text
/// degree: 4
/// generators: (1 2 3 4), (2 4)
/// ```
///
/// Blank lines and lines starting with `#` are skipped. Generators are
/// separated by commas outside parentheses; `id` is accepted.
pub fn parse_group_spec(text: &str) -> Result<(usize, Vec<Perm>)> {
    let mut degree: Option<usize> = None;
    let mut generators: Option<Vec<Perm>> = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected 'key: value', got {line:?}")))?;
        match key.trim() {
            "degree" => {
                let d: usize = value
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad degree {:?}", value.trim())))?;
                degree = Some(d);
            }
            "generators" => {
                let d = degree.ok_or_else(|| {
                    Error::Parse("the degree line must precede the generators line".into())
                })?;
                let mut gens = Vec::new();
                for part in split_top_level_commas(value) {
                    let part = part.trim();
                    if part.is_empty() {
                        continue;
                    }
                    gens.push(Perm::parse(part, d)?);
                }
                generators = Some(gens);
            }
            other => {
                return Err(Error::Parse(format!("unknown key {other:?} in group spec")));
            }
        }
    }
    let degree = degree.ok_or_else(|| Error::Parse("missing degree line".into()))?;
    let generators = generators.ok_or_else(|| Error::Parse("missing generators line".into()))?;
    Ok((degree, generators))
}

/// Splits on commas at parenthesis depth zero, so cycle notation survives.
pub(crate) fn split_top_level_commas(text: &str) -> Vec<String> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut current = String::new();
    for c in text.chars() {
        match c {
            '(' => {
                depth += 1;
                current.push(c);
            }
            ')' => {
                depth = depth.saturating_sub(1);
                current.push(c);
            }
            ',' if depth == 0 => {
                parts.push(std::mem::take(&mut current));
            }
            _ => current.push(c),
        }
    }
    parts.push(current);
    parts
}

pub(crate) fn perm_pow(p: &Perm, mut k: usize) -> Perm {
    let mut acc = Perm::identity(p.degree());
    let mut base = p.clone();
    while k > 0 {
        if k & 1 == 1 {
            acc = acc.compose_same(&base);
        }
        base = base.compose_same(&base);
        k >>= 1;
    }
    acc
}

pub(crate) fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}
