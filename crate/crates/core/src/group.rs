//! Finite groups stored as Cayley tables, with subgroups and left coset spaces.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{QrfError, Result};

/// Element of a [`FiniteGroup`], identified by its dense index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupElement(pub usize);

impl GroupElement {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroup {
    order: usize,
    cayley: Vec<usize>,
    identity: usize,
    inverse: Vec<usize>,
    labels: Option<Vec<String>>,
}

impl FiniteGroup {
    /// Validates a Cayley table and derives identity and inverses.
    pub fn from_cayley_table(table: Vec<Vec<usize>>, labels: Option<Vec<String>>) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(QrfError::Construction("cayley table is empty".into()));
        }
        for (i, row) in table.iter().enumerate() {
            if row.len() != n {
                return Err(QrfError::Construction(format!(
                    "cayley row {i} has length {} but the table has {n} rows",
                    row.len()
                )));
            }
            if let Some(&bad) = row.iter().find(|&&x| x >= n) {
                return Err(QrfError::Construction(format!(
                    "cayley row {i} contains out-of-range entry {bad}"
                )));
            }
        }
        let mut seen = vec![false; n];
        for (i, row) in table.iter().enumerate() {
            seen.iter_mut().for_each(|s| *s = false);
            for &x in row {
                if seen[x] {
                    return Err(QrfError::Construction(format!("cayley row {i} not a permutation")));
                }
                seen[x] = true;
            }
        }
        for j in 0..n {
            seen.iter_mut().for_each(|s| *s = false);
            for row in &table {
                if seen[row[j]] {
                    return Err(QrfError::Construction(format!("cayley column {j} not a permutation")));
                }
                seen[row[j]] = true;
            }
        }
        let cayley: Vec<usize> = table.into_iter().flatten().collect();
        let at = |a: usize, b: usize| cayley[a * n + b];

        let identity = (0..n)
            .find(|&e| (0..n).all(|g| at(e, g) == g && at(g, e) == g))
            .ok_or_else(|| QrfError::Construction("no two-sided identity".into()))?;

        for a in 0..n {
            for b in 0..n {
                let ab = at(a, b);
                for c in 0..n {
                    if at(ab, c) != at(a, at(b, c)) {
                        return Err(QrfError::Construction(format!(
                            "associativity fails at ({a}, {b}, {c})"
                        )));
                    }
                }
            }
        }

        let mut inverse = vec![0; n];
        for (g, inv) in inverse.iter_mut().enumerate() {
            *inv = (0..n)
                .find(|&h| at(g, h) == identity && at(h, g) == identity)
                .ok_or_else(|| QrfError::Construction(format!("element {g} has no two-sided inverse")))?;
        }

        if let Some(l) = &labels {
            if l.len() != n {
                return Err(QrfError::Construction(format!(
                    "{} labels supplied for a group of order {n}",
                    l.len()
                )));
            }
        }

        Ok(Self { order: n, cayley, identity, inverse, labels })
    }

    fn from_mul_fn(n: usize, f: impl Fn(usize, usize) -> usize, labels: Vec<String>) -> Self {
        let table = (0..n).map(|a| (0..n).map(|b| f(a, b)).collect()).collect();
        Self::from_cayley_table(table, Some(labels)).expect("built-in family is a group")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(self.identity)
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, g: usize) -> String {
        match &self.labels {
            Some(l) => l[g].clone(),
            None => g.to_string(),
        }
    }

    pub fn element(&self, index: usize) -> Result<GroupElement> {
        if index < self.order {
            Ok(GroupElement(index))
        } else {
            Err(QrfError::Argument(format!(
                "element index {index} out of range for group of order {}",
                self.order
            )))
        }
    }

    pub fn element_by_label(&self, label: &str) -> Option<GroupElement> {
        self.labels.as_ref()?.iter().position(|l| l == label).map(GroupElement)
    }

    pub fn elements(&self) -> impl Iterator<Item = GroupElement> {
        (0..self.order).map(GroupElement)
    }

    pub fn mul(&self, g: GroupElement, h: GroupElement) -> Result<GroupElement> {
        self.element(g.0)?;
        self.element(h.0)?;
        Ok(GroupElement(self.op(g.0, h.0)))
    }

    pub fn inv(&self, g: GroupElement) -> Result<GroupElement> {
        self.element(g.0)?;
        Ok(GroupElement(self.inverse[g.0]))
    }

    /// Index-level product. Panics on out-of-range indices.
    #[inline]
    pub fn op(&self, a: usize, b: usize) -> usize {
        self.cayley[a * self.order + b]
    }

    /// Index-level inverse. Panics on out-of-range indices.
    #[inline]
    pub fn inverse_of(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn e(&self) -> usize {
        self.identity
    }

    pub fn cayley_rows(&self) -> Vec<Vec<usize>> {
        self.cayley.chunks(self.order).map(<[usize]>::to_vec).collect()
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order).all(|a| (0..self.order).all(|b| self.op(a, b) == self.op(b, a)))
    }

    /// Order of the element `g`.
    pub fn element_order(&self, g: usize) -> usize {
        let mut k = 1;
        let mut x = g;
        while x != self.identity {
            x = self.op(x, g);
            k += 1;
        }
        k
    }

    /// Smallest subgroup containing `g`.
    pub fn cyclic_subgroup(&self, g: usize) -> Subgroup {
        let mut members = vec![self.identity];
        let mut x = g;
        while x != self.identity {
            members.push(x);
            x = self.op(x, g);
        }
        members.sort_unstable();
        Subgroup { parent: self.clone(), members }
    }

    /// Smallest subgroup containing every element of `gens`.
    pub fn generated_subgroup(&self, gens: &[usize]) -> Subgroup {
        let mut inside = vec![false; self.order];
        inside[self.identity] = true;
        let mut members = vec![self.identity];
        let mut k = 0;
        while k < members.len() {
            let x = members[k];
            for &g in gens {
                let y = self.op(x, g);
                if !inside[y] {
                    inside[y] = true;
                    members.push(y);
                }
            }
            k += 1;
        }
        members.sort_unstable();
        Subgroup { parent: self.clone(), members }
    }

    pub fn trivial_subgroup(&self) -> Subgroup {
        Subgroup { parent: self.clone(), members: vec![self.identity] }
    }

    pub fn whole(&self) -> Subgroup {
        Subgroup { parent: self.clone(), members: (0..self.order).collect() }
    }
}

/// Z_n with element k standing for k mod n.
pub fn cyclic_group(n: usize) -> Result<FiniteGroup> {
    if n == 0 {
        return Err(QrfError::Argument("cyclic group order must be at least 1".into()));
    }
    Ok(FiniteGroup::from_mul_fn(n, |a, b| (a + b) % n, (0..n).map(|k| k.to_string()).collect()))
}

/// Dihedral group of order 2n; index `k + n*f` stands for r^k s^f.
pub fn dihedral_group(n: usize) -> Result<FiniteGroup> {
    if n == 0 {
        return Err(QrfError::Argument("dihedral group parameter must be at least 1".into()));
    }
    let decode = |i: usize| (i % n, i / n);
    let mul = |a: usize, b: usize| {
        let (k1, f1) = decode(a);
        let (k2, f2) = decode(b);
        // s r^k = r^{-k} s
        let k = if f1 == 0 { k1 + k2 } else { k1 + n - k2 } % n;
        k + n * ((f1 + f2) % 2)
    };
    let labels = (0..2 * n)
        .map(|i| {
            let (k, f) = decode(i);
            match (k, f) {
                (0, 0) => "e".to_string(),
                (k, 0) => format!("r{k}"),
                (0, _) => "s".to_string(),
                (k, _) => format!("r{k}s"),
            }
        })
        .collect();
    Ok(FiniteGroup::from_mul_fn(2 * n, mul, labels))
}

/// Symmetric group on `n ≤ 5` points, permutations listed lexicographically.
///
/// The product `σ∘τ` applies `τ` first. Labels use 1-based cycle notation.
pub fn symmetric_group(n: usize) -> Result<FiniteGroup> {
    if n == 0 || n > 5 {
        return Err(QrfError::Argument(format!("symmetric_group supports 1 ≤ n ≤ 5, got {n}")));
    }
    let perms = permutations(n);
    let index = |p: &[usize]| perms.iter().position(|q| q == p).expect("closed under composition");
    let mul = |a: usize, b: usize| {
        let (s, t) = (&perms[a], &perms[b]);
        let comp: Vec<usize> = (0..n).map(|i| s[t[i]]).collect();
        index(&comp)
    };
    let labels = perms.iter().map(|p| cycle_label(p)).collect();
    Ok(FiniteGroup::from_mul_fn(perms.len(), mul, labels))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

fn cycle_label(p: &[usize]) -> String {
    let mut seen = vec![false; p.len()];
    let mut s = String::new();
    for start in 0..p.len() {
        if seen[start] || p[start] == start {
            continue;
        }
        s.push('(');
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            s.push_str(&(i + 1).to_string());
            i = p[i];
        }
        s.push(')');
    }
    if s.is_empty() {
        "e".into()
    } else {
        s
    }
}

/// Quaternion group {±1, ±i, ±j, ±k}.
pub fn quaternion_group() -> FiniteGroup {
    // index = 2*unit + sign, unit in {1,i,j,k}
    const TABLE: [[(usize, bool); 4]; 4] = [
        [(0, false), (1, false), (2, false), (3, false)],
        [(1, false), (0, true), (3, false), (2, true)],
        [(2, false), (3, true), (0, true), (1, false)],
        [(3, false), (2, false), (1, true), (0, true)],
    ];
    let mul = |a: usize, b: usize| {
        let (u, v) = (a / 2, b / 2);
        let (w, neg) = TABLE[u][v];
        let sign = (a % 2) ^ (b % 2) ^ usize::from(neg);
        2 * w + sign
    };
    let names = ["1", "i", "j", "k"];
    let labels = (0..8)
        .map(|x| if x % 2 == 0 { names[x / 2].to_string() } else { format!("-{}", names[x / 2]) })
        .collect();
    FiniteGroup::from_mul_fn(8, mul, labels)
}

/// Resolves a built-in name: `z1..z8`, `d3..d5`, `s3`, `s4`, `q8` (an optional `builtin:` prefix is accepted).
pub fn builtin_group(name: &str) -> Result<FiniteGroup> {
    let name = name.strip_prefix("builtin:").unwrap_or(name);
    let bad = || QrfError::Argument(format!("unknown built-in group '{name}'"));
    let (family, rest) = name.split_at(name.char_indices().nth(1).map_or(name.len(), |(i, _)| i));
    if family == "q" {
        return if rest == "8" { Ok(quaternion_group()) } else { Err(bad()) };
    }
    let n: usize = rest.parse().map_err(|_| bad())?;
    match (family, n) {
        ("z", 1..=8) => cyclic_group(n),
        ("d", 3..=5) => dihedral_group(n),
        ("s", 3..=4) => symmetric_group(n),
        _ => Err(bad()),
    }
}

pub const BUILTIN_GROUPS: &[&str] =
    &["z1", "z2", "z3", "z4", "z5", "z6", "z7", "z8", "d3", "d4", "d5", "s3", "s4", "q8"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subgroup {
    parent: FiniteGroup,
    members: Vec<usize>,
}

impl Subgroup {
    pub fn new(parent: &FiniteGroup, members: &[usize]) -> Result<Self> {
        let n = parent.order();
        if let Some(&bad) = members.iter().find(|&&m| m >= n) {
            return Err(QrfError::Construction(format!("subgroup member {bad} is not in the group")));
        }
        let mut members = members.to_vec();
        members.sort_unstable();
        members.dedup();
        if members.binary_search(&parent.e()).is_err() {
            return Err(QrfError::Construction("subgroup does not contain the identity".into()));
        }
        for &a in &members {
            if members.binary_search(&parent.inverse_of(a)).is_err() {
                return Err(QrfError::Construction(format!("subgroup not closed under inverse at {a}")));
            }
            for &b in &members {
                if members.binary_search(&parent.op(a, b)).is_err() {
                    return Err(QrfError::Construction(format!(
                        "subgroup not closed under multiplication at ({a}, {b})"
                    )));
                }
            }
        }
        Ok(Self { parent: parent.clone(), members })
    }

    pub fn parent(&self) -> &FiniteGroup {
        &self.parent
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn order(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, g: usize) -> bool {
        self.members.binary_search(&g).is_ok()
    }

    pub fn is_trivial(&self) -> bool {
        self.members.len() == 1
    }
}

/// Left cosets G/H with the action g.(kH) = (gk)H.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CosetSpace {
    subgroup: Subgroup,
    reps: Vec<usize>,
    coset_of: Vec<usize>,
    action: Vec<usize>,
}

impl CosetSpace {
    pub fn new(subgroup: &Subgroup) -> Self {
        let g = subgroup.parent();
        let n = g.order();
        let mut coset_of = vec![usize::MAX; n];
        let mut reps = Vec::new();
        for k in 0..n {
            if coset_of[k] != usize::MAX {
                continue;
            }
            let c = reps.len();
            reps.push(k);
            for &h in subgroup.members() {
                coset_of[g.op(k, h)] = c;
            }
        }
        let m = reps.len();
        let mut action = vec![0; n * m];
        for x in 0..n {
            for (c, &r) in reps.iter().enumerate() {
                action[x * m + c] = coset_of[g.op(x, r)];
            }
        }
        Self { subgroup: subgroup.clone(), reps, coset_of, action }
    }

    pub fn parent(&self) -> &FiniteGroup {
        self.subgroup.parent()
    }

    pub fn subgroup(&self) -> &Subgroup {
        &self.subgroup
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn reps(&self) -> &[usize] {
        &self.reps
    }

    pub fn coset_of(&self, g: usize) -> usize {
        self.coset_of[g]
    }

    /// Members of coset `c`.
    pub fn members(&self, c: usize) -> Vec<usize> {
        (0..self.coset_of.len()).filter(|&g| self.coset_of[g] == c).collect()
    }

    #[inline]
    pub fn act(&self, g: usize, c: usize) -> usize {
        self.action[g * self.reps.len() + c]
    }
}

/// Wire format for groups.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    pub cayley: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl GroupJson {
    pub fn into_group(self) -> Result<FiniteGroup> {
        if let Some(order) = self.order.filter(|&n| n != self.cayley.len()) {
            return Err(QrfError::Construction(format!(
                "declared order {order} but cayley has {} rows",
                self.cayley.len()
            )));
        }
        FiniteGroup::from_cayley_table(self.cayley, self.labels)
    }
}

impl From<&FiniteGroup> for GroupJson {
    fn from(g: &FiniteGroup) -> Self {
        Self { order: Some(g.order()), cayley: g.cayley_rows(), labels: g.labels.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z4_addition() {
        let g = cyclic_group(4).unwrap();
        assert_eq!(g.mul(GroupElement(1), GroupElement(3)).unwrap(), GroupElement(0));
        for x in g.elements() {
            assert_eq!(g.mul(g.identity(), x).unwrap(), x);
        }
        assert!(g.mul(GroupElement(4), GroupElement(0)).is_err());
    }

    #[test]
    fn s3_composition_matches_permutation_oracle() {
        let g = symmetric_group(3).unwrap();
        let perms = permutations(3);
        for a in 0..6 {
            for b in 0..6 {
                let expect: Vec<usize> = (0..3).map(|i| perms[a][perms[b][i]]).collect();
                assert_eq!(perms[g.op(a, b)], expect);
            }
        }
        let s12 = g.element_by_label("(12)").unwrap();
        let s23 = g.element_by_label("(23)").unwrap();
        assert_eq!(g.label(g.mul(s12, s23).unwrap().0), "(123)");
    }

    #[test]
    fn family_orders() {
        assert_eq!(cyclic_group(1).unwrap().order(), 1);
        let d4 = dihedral_group(4).unwrap();
        assert_eq!(d4.order(), 8);
        assert!(!d4.is_abelian());
        assert_eq!(symmetric_group(4).unwrap().order(), 24);
        let q8 = quaternion_group();
        assert!(!q8.is_abelian());
        assert_eq!((0..8).filter(|&x| q8.element_order(x) == 4).count(), 6);
        for name in BUILTIN_GROUPS {
            builtin_group(name).unwrap();
        }
        let s4 = builtin_group("s4").unwrap();
        let a = (0..24).find(|&g| s4.element_order(g) == 3).unwrap();
        let b = (0..24).find(|&g| s4.element_order(g) == 3 && !s4.cyclic_subgroup(a).contains(g)).unwrap();
        let gens = [a, b];
        let a4 = s4.generated_subgroup(&gens);
        assert_eq!(a4.order(), 12);
        assert_eq!(s4.generated_subgroup(&[gens[0]]), s4.cyclic_subgroup(gens[0]));
        assert!(builtin_group("z9").is_err());
        assert!(builtin_group("builtin:s3").is_ok());
    }

    #[test]
    fn dihedral_relations() {
        let n = 5;
        let g = dihedral_group(n).unwrap();
        let (r, s) = (1, n);
        assert_eq!(g.element_order(r), n);
        assert_eq!(g.element_order(s), 2);
        // s r s = r^{-1}
        assert_eq!(g.op(g.op(s, r), s), g.inverse_of(r));
    }

    #[test]
    fn rejects_non_latin_table() {
        let err = FiniteGroup::from_cayley_table(vec![vec![0, 1], vec![1, 1]], None).unwrap_err();
        assert_eq!(err.to_string(), "cayley row 1 not a permutation");
    }

    #[test]
    fn rejects_non_associative_latin_square() {
        // Latin square with identity 0 that is not associative.
        let t = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 4, 0, 1, 3],
            vec![3, 2, 4, 0, 1],
            vec![4, 3, 1, 2, 0],
        ];
        let err = FiniteGroup::from_cayley_table(t, None).unwrap_err();
        assert!(err.to_string().starts_with("associativity fails at"), "{err}");
    }

    #[test]
    fn subgroup_validation() {
        let g = cyclic_group(4).unwrap();
        assert!(Subgroup::new(&g, &[0, 2]).is_ok());
        assert!(Subgroup::new(&g, &[0, 1]).is_err());
        assert!(Subgroup::new(&g, &[2]).is_err());
    }

    #[test]
    fn coset_space_examples() {
        let g = cyclic_group(4).unwrap();
        let cs = CosetSpace::new(&Subgroup::new(&g, &[0, 2]).unwrap());
        assert_eq!(cs.len(), 2);
        assert_eq!(cs.act(1, 0), 1);
        assert_eq!(cs.act(1, 1), 0);
        assert_eq!(cs.members(0), vec![0, 2]);

        let whole = CosetSpace::new(&g.whole());
        assert_eq!(whole.len(), 1);
        assert!((0..4).all(|x| whole.act(x, 0) == 0));

        let triv = CosetSpace::new(&g.trivial_subgroup());
        assert_eq!(triv.len(), 4);
        for x in 0..4 {
            for c in 0..4 {
                assert_eq!(triv.reps()[triv.act(x, c)], g.op(x, triv.reps()[c]));
            }
        }
    }

    #[test]
    fn group_json_roundtrip() {
        let g = symmetric_group(3).unwrap();
        let s = serde_json::to_string(&GroupJson::from(&g)).unwrap();
        let back: GroupJson = serde_json::from_str(&s).unwrap();
        assert_eq!(back.into_group().unwrap(), g);
    }
}
