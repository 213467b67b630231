//! Finite groups given by Cayley tables, and finite transitive G-spaces.
//!
//! Elements are the integers `0..order` with `0` the identity.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, GroupLaw, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroup {
    cayley: Vec<Vec<usize>>,
    inverse: Vec<usize>,
}

impl FiniteGroup {
    pub fn order(&self) -> usize {
        self.cayley.len()
    }

    pub fn identity(&self) -> usize {
        0
    }

    pub fn mul(&self, g: usize, h: usize) -> usize {
        self.cayley[g][h]
    }

    pub fn inv(&self, g: usize) -> usize {
        self.inverse[g]
    }

    pub fn cayley(&self) -> &[Vec<usize>] {
        &self.cayley
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.order()
    }

    pub fn is_abelian(&self) -> bool {
        self.elements().all(|g| self.elements().all(|h| self.mul(g, h) == self.mul(h, g)))
    }

    /// Normalized Haar measure of a subset.
    pub fn haar(&self, subset: &BTreeSet<usize>) -> f64 {
        subset.len() as f64 / self.order() as f64
    }

    /// `X^{-1} = { g : g^{-1} ∈ X }`
    pub fn inverse_subset(&self, subset: &BTreeSet<usize>) -> BTreeSet<usize> {
        subset.iter().map(|&g| self.inv(g)).collect()
    }
}

/// Check the group axioms for a Cayley table whose index 0 is the identity.
pub fn verify_group(cayley: Vec<Vec<usize>>) -> Result<FiniteGroup> {
    let n = cayley.len();
    if n == 0 {
        return Err(Error::NotAGroup { law: GroupLaw::Identity, witness: vec![] });
    }
    for (g, row) in cayley.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Malformed(format!("row {g} has {} entries, expected {n}", row.len())));
        }
        if let Some(h) = row.iter().position(|&x| x >= n) {
            return Err(Error::NotAGroup { law: GroupLaw::Closure, witness: vec![g, h] });
        }
    }
    for (g, row) in cayley.iter().enumerate() {
        if cayley[0][g] != g || row[0] != g {
            return Err(Error::NotAGroup { law: GroupLaw::Identity, witness: vec![g] });
        }
    }
    let mut inverse = Vec::with_capacity(n);
    for (g, row) in cayley.iter().enumerate() {
        match row.iter().position(|&x| x == 0) {
            Some(h) if cayley[h][g] == 0 => inverse.push(h),
            _ => return Err(Error::NotAGroup { law: GroupLaw::Inverse, witness: vec![g] }),
        }
    }
    for g in 0..n {
        for h in 0..n {
            for k in 0..n {
                if cayley[cayley[g][h]][k] != cayley[g][cayley[h][k]] {
                    return Err(Error::NotAGroup { law: GroupLaw::Associativity, witness: vec![g, h, k] });
                }
            }
        }
    }
    Ok(FiniteGroup { cayley, inverse })
}

/// Named group constructions selectable from the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupPreset {
    Cyclic(usize),
    Dihedral(usize),
    Symmetric3,
    Quaternion8,
}

impl fmt::Display for GroupPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupPreset::Cyclic(n) => write!(f, "Z{n}"),
            GroupPreset::Dihedral(n) => write!(f, "D{n}"),
            GroupPreset::Symmetric3 => f.write_str("S3"),
            GroupPreset::Quaternion8 => f.write_str("Q8"),
        }
    }
}

impl FromStr for GroupPreset {
    type Err = Error;

    /// Accepts `Z3`, `cyclic(3)`, `D4`, `dihedral(4)`, `S3`, `Q8` (case-insensitive).
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let num = |rest: &str| -> Result<usize> {
            rest.trim_start_matches('(')
                .trim_end_matches(')')
                .parse::<usize>()
                .map_err(|_| Error::UnsupportedPreset(s.to_string()))
        };
        match t.as_str() {
            "s3" | "symmetric3" => Ok(GroupPreset::Symmetric3),
            "q8" | "quaternion8" => Ok(GroupPreset::Quaternion8),
            _ if t.starts_with("cyclic") => Ok(GroupPreset::Cyclic(num(&t[6..])?)),
            _ if t.starts_with("dihedral") => Ok(GroupPreset::Dihedral(num(&t[8..])?)),
            _ if t.starts_with('z') => Ok(GroupPreset::Cyclic(num(&t[1..])?)),
            _ if t.starts_with('d') => Ok(GroupPreset::Dihedral(num(&t[1..])?)),
            _ => Err(Error::UnsupportedPreset(s.to_string())),
        }
    }
}

pub fn make_preset(preset: GroupPreset) -> Result<FiniteGroup> {
    let table = match preset {
        GroupPreset::Cyclic(0) | GroupPreset::Dihedral(0) => {
            return Err(Error::UnsupportedPreset(format!("{preset} needs n >= 1")))
        }
        GroupPreset::Cyclic(n) => (0..n).map(|g| (0..n).map(|h| (g + h) % n).collect()).collect(),
        GroupPreset::Dihedral(n) => dihedral_table(n),
        GroupPreset::Symmetric3 => symmetric3_table(),
        GroupPreset::Quaternion8 => quaternion_table(),
    };
    verify_group(table)
}

// r^a s^f encoded as a + n f; s r s = r^{-1}.
fn dihedral_table(n: usize) -> Vec<Vec<usize>> {
    let decode = |x: usize| (x % n, x / n);
    (0..2 * n)
        .map(|x| {
            let (a, f) = decode(x);
            (0..2 * n)
                .map(|y| {
                    let (b, g) = decode(y);
                    let rot = if f == 0 { (a + b) % n } else { (a + n - b) % n };
                    rot + n * ((f + g) % 2)
                })
                .collect()
        })
        .collect()
}

// Permutations of {0,1,2} in lexicographic order; product is composition (g h)(x) = g(h(x)).
fn symmetric3_table() -> Vec<Vec<usize>> {
    let perms: Vec<[usize; 3]> = vec![[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let index = |p: [usize; 3]| perms.iter().position(|q| *q == p).unwrap();
    perms.iter().map(|g| perms.iter().map(|h| index([g[h[0]], g[h[1]], g[h[2]]])).collect()).collect()
}

// Elements: sign * unit with unit in {1, i, j, k}; index = unit + 4 * (sign < 0).
fn quaternion_table() -> Vec<Vec<usize>> {
    // unit products as (unit, negated)
    const UNITS: [[(usize, bool); 4]; 4] = [
        [(0, false), (1, false), (2, false), (3, false)],
        [(1, false), (0, true), (3, false), (2, true)],
        [(2, false), (3, true), (0, true), (1, false)],
        [(3, false), (2, false), (1, true), (0, true)],
    ];
    (0..8)
        .map(|x| {
            (0..8)
                .map(|y| {
                    let (u, neg) = UNITS[x % 4][y % 4];
                    let sign = (x >= 4) ^ (y >= 4) ^ neg;
                    u + if sign { 4 } else { 0 }
                })
                .collect()
        })
        .collect()
}

/// A finite set of points with a transitive left action of a finite group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GSpace {
    group: FiniteGroup,
    action: Vec<Vec<usize>>,
}

impl GSpace {
    /// Validate an action table `action[g][x] = g.x`.
    pub fn new(group: FiniteGroup, action: Vec<Vec<usize>>) -> Result<Self> {
        if action.len() != group.order() {
            return Err(Error::DimensionMismatch { expected: group.order(), found: action.len() });
        }
        let n = action[0].len();
        if n == 0 || action.iter().any(|row| row.len() != n || row.iter().any(|&x| x >= n)) {
            return Err(Error::Malformed("action rows must be equal-length maps into the point set".into()));
        }
        if (0..n).any(|x| action[0][x] != x) {
            return Err(Error::InvariantViolation { name: "identity_action".into(), residual: 1.0 });
        }
        for g in group.elements() {
            for h in group.elements() {
                if (0..n).any(|x| action[g][action[h][x]] != action[group.mul(g, h)][x]) {
                    return Err(Error::InvariantViolation { name: "action_compatibility".into(), residual: 1.0 });
                }
            }
        }
        let orbit: BTreeSet<usize> = group.elements().map(|g| action[g][0]).collect();
        if orbit.len() != n {
            return Err(Error::InvariantViolation { name: "transitivity".into(), residual: (n - orbit.len()) as f64 });
        }
        Ok(Self { group, action })
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn n_points(&self) -> usize {
        self.action[0].len()
    }

    pub fn act(&self, g: usize, x: usize) -> usize {
        self.action[g][x]
    }

    pub fn orbit(&self, x: usize) -> BTreeSet<usize> {
        self.group.elements().map(|g| self.act(g, x)).collect()
    }

    /// `g.X`
    pub fn transform_subset(&self, g: usize, subset: &BTreeSet<usize>) -> Result<BTreeSet<usize>> {
        if g >= self.group.order() {
            return Err(Error::UnknownPoint(g));
        }
        subset
            .iter()
            .map(|&x| if x < self.n_points() { Ok(self.act(g, x)) } else { Err(Error::UnknownPoint(x)) })
            .collect()
    }

    /// Uniform probability measure on the points.
    pub fn measure(&self, subset: &BTreeSet<usize>) -> f64 {
        subset.len() as f64 / self.n_points() as f64
    }

    /// True when the points are the group itself acting by left multiplication.
    pub fn is_principal(&self) -> bool {
        self.n_points() == self.group.order() && self.action == self.group.cayley
    }
}

/// G acting on itself by left multiplication.
pub fn left_self_space(group: &FiniteGroup) -> GSpace {
    GSpace { action: group.cayley.clone(), group: group.clone() }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupJson {
    pub order: usize,
    pub cayley: Vec<Vec<usize>>,
}

impl From<&FiniteGroup> for GroupJson {
    fn from(g: &FiniteGroup) -> Self {
        GroupJson { order: g.order(), cayley: g.cayley.clone() }
    }
}

impl TryFrom<GroupJson> for FiniteGroup {
    type Error = Error;
    fn try_from(j: GroupJson) -> Result<Self> {
        if j.cayley.len() != j.order {
            return Err(Error::DimensionMismatch { expected: j.order, found: j.cayley.len() });
        }
        verify_group(j.cayley)
    }
}

impl Serialize for FiniteGroup {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GroupJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteGroup {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        FiniteGroup::try_from(GroupJson::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}
