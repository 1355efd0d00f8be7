//! Built-in group constructors in their natural actions, with designated
//! subgroup pairs where the construction provides one.
//!
//! Dihedral groups come with generators `r = (1 2 ... m)` and `s` the
//! reflection through vertex 1 (and vertex m/2 + 1 for even m), so that at
//! m = 4 the intransitive normal subgroup `<r^2, s>` is exactly
//! `<(1 3), (2 4)>`. For even m the build also returns the pair
//! (N1 = `<r>` by default or `<r^2, rs>` on request, N2 = `<r^2, s>`); odd m
//! admits no such pair.

use crate::error::{Error, Result};
use crate::group::{FiniteGroup, SubgroupPair, DEFAULT_CAP};
use crate::perm::Perm;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Cyclic,
    Dihedral,
    Symmetric,
    Alternating,
    KleinCatalog,
}

/// A family name with its integer parameters, e.g. `dihedral:6`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilySpec {
    pub family: Family,
    pub params: Vec<usize>,
}

impl FamilySpec {
    /// Parses `name:params` shorthand, e.g. `dihedral:4`, `cyclic:5`,
    /// `dihedral:6:alt` (alternative transitive subgroup `<r^2, rs>`).
    pub fn parse(text: &str) -> Result<FamilySpec> {
        let mut parts = text.split(':');
        let name = parts.next().unwrap_or_default().trim();
        let family = match name {
            "cyclic" => Family::Cyclic,
            "dihedral" => Family::Dihedral,
            "symmetric" => Family::Symmetric,
            "alternating" => Family::Alternating,
            "klein_catalog" => Family::KleinCatalog,
            other => {
                return Err(Error::Parse(format!(
                    "unknown family {other:?}; expected cyclic, dihedral, symmetric, alternating or klein_catalog"
                )))
            }
        };
        let mut params = Vec::new();
        for part in parts {
            let part = part.trim();
            if part == "alt" {
                params.push(usize::MAX); // marker resolved in build
                continue;
            }
            params.push(
                part.parse::<usize>().map_err(|_| {
                    Error::Parse(format!("bad family parameter {part:?} in {text:?}"))
                })?,
            );
        }
        Ok(FamilySpec { family, params })
    }
}

/// A constructed family member.
#[derive(Clone, Debug)]
pub struct FamilyBuild {
    pub name: String,
    pub group: FiniteGroup,
    /// The designated (transitive, intransitive) normal pair, when the
    /// family provides one (even dihedral groups).
    pub pair: Option<SubgroupPair>,
}

/// Builds a family member in its natural action.
pub fn build_family(spec: &FamilySpec) -> Result<FamilyBuild> {
    match spec.family {
        Family::Cyclic => {
            let n = single_param(spec, "cyclic")?;
            Ok(FamilyBuild {
                name: format!("cyclic({n})"),
                group: cyclic(n)?,
                pair: None,
            })
        }
        Family::Symmetric => {
            let n = single_param(spec, "symmetric")?;
            Ok(FamilyBuild {
                name: format!("symmetric({n})"),
                group: symmetric(n)?,
                pair: None,
            })
        }
        Family::Alternating => {
            let n = single_param(spec, "alternating")?;
            Ok(FamilyBuild {
                name: format!("alternating({n})"),
                group: alternating(n)?,
                pair: None,
            })
        }
        Family::Dihedral => {
            let (m, alternative) = match spec.params.as_slice() {
                [m] => (*m, false),
                [m, marker] if *marker == usize::MAX || *marker == 1 => (*m, true),
                _ => {
                    return Err(Error::InvalidParams(
                        "dihedral takes one parameter, optionally followed by :alt".into(),
                    ))
                }
            };
            let build = dihedral(m, alternative)?;
            Ok(build)
        }
        Family::KleinCatalog => Err(Error::InvalidParams(
            "klein_catalog enumerates a list of groups; use the catalog listing".into(),
        )),
    }
}

fn single_param(spec: &FamilySpec, name: &str) -> Result<usize> {
    match spec.params.as_slice() {
        [n] => Ok(*n),
        _ => Err(Error::InvalidParams(format!(
            "{name} takes exactly one parameter"
        ))),
    }
}

/// `C_n` acting on n points.
pub fn cyclic(n: usize) -> Result<FiniteGroup> {
    if n == 0 {
        return Err(Error::InvalidParams("cyclic needs n >= 1".into()));
    }
    if n == 1 {
        return Ok(FiniteGroup::trivial(1));
    }
    let cycle: Vec<usize> = (1..=n).collect();
    let r = Perm::from_cycles(n, &[cycle])?;
    FiniteGroup::generate(n, &[r], DEFAULT_CAP)
}

/// `S_n` in its natural action.
pub fn symmetric(n: usize) -> Result<FiniteGroup> {
    if n == 0 {
        return Err(Error::InvalidParams("symmetric needs n >= 1".into()));
    }
    if n == 1 {
        return Ok(FiniteGroup::trivial(1));
    }
    let swap = Perm::from_cycles(n, &[vec![1, 2]])?;
    if n == 2 {
        return FiniteGroup::generate(n, &[swap], DEFAULT_CAP);
    }
    let cycle: Vec<usize> = (1..=n).collect();
    let r = Perm::from_cycles(n, &[cycle])?;
    FiniteGroup::generate(n, &[swap, r], DEFAULT_CAP)
}

/// `A_n` in its natural action (trivial for n <= 2).
pub fn alternating(n: usize) -> Result<FiniteGroup> {
    if n == 0 {
        return Err(Error::InvalidParams("alternating needs n >= 1".into()));
    }
    if n <= 2 {
        return Ok(FiniteGroup::trivial(n));
    }
    let three_cycle = Perm::from_cycles(n, &[vec![1, 2, 3]])?;
    if n == 3 {
        return FiniteGroup::generate(n, &[three_cycle], DEFAULT_CAP);
    }
    let long: Vec<usize> = if n % 2 == 1 {
        (1..=n).collect()
    } else {
        (2..=n).collect()
    };
    let rotation = Perm::from_cycles(n, &[long])?;
    FiniteGroup::generate(n, &[three_cycle, rotation], DEFAULT_CAP)
}

/// Dihedral group of order 2m. For m >= 3 this is the symmetry group of the
/// m-gon on its vertices; m = 2 uses the faithful degree-4 realization
/// `<(1 2), (3 4)>` since the 2-gon action is not faithful. For even
/// m >= 4 the designated subgroup pair is attached.
pub fn dihedral(m: usize, alternative_n1: bool) -> Result<FamilyBuild> {
    if m < 2 {
        return Err(Error::InvalidParams("dihedral needs m >= 2".into()));
    }
    if m == 2 {
        let a = Perm::from_cycles(4, &[vec![1, 2]])?;
        let b = Perm::from_cycles(4, &[vec![3, 4]])?;
        return Ok(FamilyBuild {
            name: "dihedral(2)".into(),
            group: FiniteGroup::generate(4, &[a, b], DEFAULT_CAP)?,
            pair: None,
        });
    }
    let (r, s) = dihedral_generators(m)?;
    let group = FiniteGroup::generate(m, &[r.clone(), s.clone()], DEFAULT_CAP)?;
    debug_assert_eq!(group.order(), 2 * m);
    let pair = if m.is_multiple_of(2) {
        let r2 = r.compose(&r)?;
        let n1 = if alternative_n1 {
            let rs = r.compose(&s)?;
            FiniteGroup::generate(m, &[r2.clone(), rs], DEFAULT_CAP)?
        } else {
            FiniteGroup::generate(m, std::slice::from_ref(&r), DEFAULT_CAP)?
        };
        let n2 = FiniteGroup::generate(m, &[r2, s.clone()], DEFAULT_CAP)?;
        Some(SubgroupPair::with_canonical_sigma(&group, n1, n2, 2)?)
    } else {
        None
    };
    Ok(FamilyBuild {
        name: format!("dihedral({m})"),
        group,
        pair,
    })
}

/// Rotation `(1 2 ... m)` and the reflection fixing vertex 1:
/// `s(i) = 2 - i (mod m)`.
pub fn dihedral_generators(m: usize) -> Result<(Perm, Perm)> {
    let cycle: Vec<usize> = (1..=m).collect();
    let r = Perm::from_cycles(m, &[cycle])?;
    let images: Vec<usize> = (1..=m)
        .map(|i| if i == 1 { 1 } else { m + 2 - i })
        .collect();
    let s = Perm::from_images_one_based(&images)?;
    Ok((r, s))
}

/// The catalog of finite rotation-sphere symmetry types: cyclic and
/// dihedral families up to the bound, plus the three exceptional groups.
pub fn klein_catalog(max_n: usize) -> Result<Vec<FamilyBuild>> {
    if max_n < 2 {
        return Err(Error::InvalidParams(
            "klein_catalog needs a bound >= 2".into(),
        ));
    }
    let mut out = Vec::new();
    for n in 1..=max_n {
        out.push(FamilyBuild {
            name: format!("C{n}"),
            group: cyclic(n)?,
            pair: None,
        });
    }
    for n in 2..=max_n {
        let mut build = dihedral(n, false)?;
        build.name = format!("D{n}");
        out.push(build);
    }
    out.push(FamilyBuild {
        name: "A4".into(),
        group: alternating(4)?,
        pair: None,
    });
    out.push(FamilyBuild {
        name: "S4".into(),
        group: symmetric(4)?,
        pair: None,
    });
    out.push(FamilyBuild {
        name: "A5".into(),
        group: alternating(5)?,
        pair: None,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::DEFAULT_CAP;
    use std::collections::BTreeSet;

    fn perm(text: &str, degree: usize) -> Perm {
        Perm::parse(text, degree).unwrap()
    }

    #[test]
    fn family_orders() {
        assert_eq!(cyclic(4).unwrap().order(), 4);
        assert_eq!(symmetric(4).unwrap().order(), 24);
        assert_eq!(alternating(4).unwrap().order(), 12);
        assert_eq!(alternating(5).unwrap().order(), 60);
        assert_eq!(dihedral(7, false).unwrap().group.order(), 14);
    }

    #[test]
    fn dihedral_four_pair_matches_the_named_subgroups() {
        let build = dihedral(4, false).unwrap();
        assert_eq!(build.group.order(), 8);
        let pair = build.pair.unwrap();
        // N1 = <r>, N2 = <(1 3), (2 4)>.
        assert!(pair.n1.contains(&perm("(1 2 3 4)", 4)));
        assert_eq!(pair.n1.order(), 4);
        let n2: BTreeSet<String> = pair.n2.elements().iter().map(|e| e.to_string()).collect();
        let expected: BTreeSet<String> = ["id", "(1 3)", "(2 4)", "(1 3)(2 4)"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(n2, expected);
    }

    #[test]
    fn dihedral_four_alternative_pair() {
        let build = dihedral(4, true).unwrap();
        let pair = build.pair.unwrap();
        // N1 = <r^2, rs> = {id, (1 3)(2 4), (1 2)(3 4), (1 4)(2 3)}.
        assert_eq!(pair.n1.order(), 4);
        assert!(pair.n1.contains(&perm("(1 2)(3 4)", 4)));
        assert!(!pair.n1.contains(&perm("(1 2 3 4)", 4)));
        assert!(pair.n1.is_transitive());
    }

    #[test]
    fn dihedral_six_intransitive_subgroup_orbits() {
        let build = dihedral(6, false).unwrap();
        assert_eq!(build.group.order(), 12);
        let pair = build.pair.unwrap();
        assert_eq!(pair.n2.orbits(), vec![vec![1, 3, 5], vec![2, 4, 6]]);
    }

    #[test]
    fn odd_dihedral_groups_have_no_pair() {
        for m in [3, 5, 7, 9, 11] {
            let build = dihedral(m, false).unwrap();
            assert!(build.pair.is_none());
            // The exhaustive search agrees.
            assert!(build
                .group
                .find_index_p_normal_pairs(2, DEFAULT_CAP)
                .unwrap()
                .is_empty());
        }
    }

    #[test]
    fn family_spec_parsing() {
        let spec = FamilySpec::parse("dihedral:6").unwrap();
        assert_eq!(spec.family, Family::Dihedral);
        assert_eq!(spec.params, vec![6]);
        assert!(FamilySpec::parse("frieze:7").is_err());
        let build = build_family(&FamilySpec::parse("dihedral:4:alt").unwrap()).unwrap();
        assert!(build.pair.unwrap().n1.contains(&perm("(1 2)(3 4)", 4)));
        assert!(build_family(&FamilySpec::parse("klein_catalog:4").unwrap()).is_err());
    }

    #[test]
    fn catalog_contents() {
        let catalog = klein_catalog(5).unwrap();
        let names: Vec<&str> = catalog.iter().map(|b| b.name.as_str()).collect();
        assert_eq!(
            names,
            vec!["C1", "C2", "C3", "C4", "C5", "D2", "D3", "D4", "D5", "A4", "S4", "A5"]
        );
        // Only the even dihedral entry carries a pair.
        for build in &catalog {
            match build.name.as_str() {
                "D4" => assert!(build.pair.is_some()),
                _ => assert!(build.pair.is_none(), "{} has a pair", build.name),
            }
        }
    }

    /// Normal subgroups enumerated from unions of conjugacy classes;
    /// independent of `find_index_p_normal_pairs`.
    fn normal_subgroups(g: &FiniteGroup) -> Vec<Vec<Perm>> {
        // Conjugacy classes.
        let mut classes: Vec<Vec<Perm>> = Vec::new();
        let mut assigned: BTreeSet<Perm> = BTreeSet::new();
        for e in g.elements() {
            if assigned.contains(e) {
                continue;
            }
            let mut class: BTreeSet<Perm> = BTreeSet::new();
            for c in g.elements() {
                let conj = c.compose(e).unwrap().compose(&c.inverse()).unwrap();
                class.insert(conj);
            }
            assigned.extend(class.iter().cloned());
            classes.push(class.into_iter().collect());
        }
        // Unions of classes containing the identity that form subgroups.
        let id_class = classes
            .iter()
            .position(|c| c.iter().any(|p| p.is_identity()))
            .unwrap();
        let rest: Vec<usize> = (0..classes.len()).filter(|&i| i != id_class).collect();
        let mut out = Vec::new();
        for mask in 0..(1u32 << rest.len()) {
            let mut members: BTreeSet<Perm> = classes[id_class].iter().cloned().collect();
            for (bit, &ci) in rest.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    members.extend(classes[ci].iter().cloned());
                }
            }
            let closed = members.iter().all(|a| {
                members
                    .iter()
                    .all(|b| members.contains(&a.compose(b).unwrap()))
            });
            if closed {
                out.push(members.into_iter().collect());
            }
        }
        out
    }

    #[test]
    fn exceptional_catalog_entries_admit_no_intransitive_normal_subgroups() {
        for name in ["A4", "S4", "A5"] {
            let g = match name {
                "A4" => alternating(4).unwrap(),
                "S4" => symmetric(4).unwrap(),
                _ => alternating(5).unwrap(),
            };
            for members in normal_subgroups(&g) {
                if members.len() == 1 || members.len() == g.order() {
                    continue;
                }
                let sub = FiniteGroup::generate(g.degree(), &members, DEFAULT_CAP).unwrap();
                assert!(
                    sub.is_transitive(),
                    "{name} has a nontrivial intransitive normal subgroup"
                );
            }
        }
    }
}
