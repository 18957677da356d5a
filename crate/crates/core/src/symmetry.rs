//! Permutation operators and symmetry projectors on three systems.
//!
//! Every system is `C^d` with `d = d_a * d_b`. A global basis index is
//! `i0*d^2 + i1*d + i2`, and each system index splits as `i_k = a_k*d_b + b_k`
//! into Alice's and Bob's digits. Party-local operators act on the triple
//! `(a0, a1, a2)` (or `(b0, b1, b2)`) in the same row-major convention.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{c64, ComplexMatrix, C64};

/// Number of systems: the input (0) and the two references (1, 2).
pub const SYSTEMS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn tag(self) -> &'static str {
        match self {
            Party::Alice => "a",
            Party::Bob => "b",
        }
    }

    pub fn other(self) -> Party {
        match self {
            Party::Alice => Party::Bob,
            Party::Bob => Party::Alice,
        }
    }
}

/// Isotypic component of three-fold tensor space under system permutations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SectorLabel {
    TotallySymmetric,
    MixedSymmetric,
    TotallyAntisymmetric,
}

impl SectorLabel {
    pub const ALL: [SectorLabel; 3] = [
        SectorLabel::TotallySymmetric,
        SectorLabel::MixedSymmetric,
        SectorLabel::TotallyAntisymmetric,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            SectorLabel::TotallySymmetric => "S",
            SectorLabel::MixedSymmetric => "M",
            SectorLabel::TotallyAntisymmetric => "A",
        }
    }
}

#[derive(Debug)]
struct Interleave {
    /// global index -> (Alice triple index, Bob triple index)
    to_parties: Vec<(usize, usize)>,
    /// `alice * d_b^3 + bob` -> global index
    from_parties: Vec<usize>,
}

/// Local dimensions of the two parties. Cheap to clone; the index
/// interleaving between the global and the party-product ordering is built
/// once in [`SpaceSpec::new`] and shared.
#[derive(Clone, Debug)]
pub struct SpaceSpec {
    d_a: usize,
    d_b: usize,
    layout: Arc<Interleave>,
}

impl PartialEq for SpaceSpec {
    fn eq(&self, other: &Self) -> bool {
        self.d_a == other.d_a && self.d_b == other.d_b
    }
}

impl Eq for SpaceSpec {}

impl SpaceSpec {
    pub fn new(d_a: usize, d_b: usize) -> Result<Self> {
        if d_a == 0 {
            return Err(Error::InvalidDimension(d_a));
        }
        if d_b == 0 {
            return Err(Error::InvalidDimension(d_b));
        }
        let d = d_a * d_b;
        let n = d * d * d;
        let nb = d_b * d_b * d_b;
        let mut to_parties = Vec::with_capacity(n);
        let mut from_parties = vec![0; n];
        for g in 0..n {
            let digits = [g / (d * d), (g / d) % d, g % d];
            let (mut a, mut b) = (0, 0);
            for i in digits {
                a = a * d_a + i / d_b;
                b = b * d_b + i % d_b;
            }
            to_parties.push((a, b));
            from_parties[a * nb + b] = g;
        }
        Ok(Self {
            d_a,
            d_b,
            layout: Arc::new(Interleave {
                to_parties,
                from_parties,
            }),
        })
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    /// Single-system dimension `d_a * d_b`.
    pub fn d(&self) -> usize {
        self.d_a * self.d_b
    }

    pub fn party_dim(&self, party: Party) -> usize {
        match party {
            Party::Alice => self.d_a,
            Party::Bob => self.d_b,
        }
    }

    /// Dimension of the global three-system space, `d^3`.
    pub fn global_dim(&self) -> usize {
        self.d().pow(3)
    }

    /// Dimension of a party's three-system space, `d_p^3`.
    pub fn party_space_dim(&self, party: Party) -> usize {
        self.party_dim(party).pow(3)
    }

    /// Alice's and Bob's triple indices of a global basis index.
    #[inline]
    pub fn split_index(&self, global: usize) -> (usize, usize) {
        self.layout.to_parties[global]
    }

    #[inline]
    pub fn join_index(&self, alice: usize, bob: usize) -> usize {
        self.layout.from_parties[alice * self.party_space_dim(Party::Bob) + bob]
    }
}

/// Symmetric-subspace and sector dimensions for a single system of dimension `d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DimensionTable {
    pub d: u64,
    /// `d_n = C(n + d - 1, d - 1)` for `n = 1, 2, 3`.
    pub symmetric_powers: [u64; 3],
    pub symmetric: u64,
    pub antisymmetric: u64,
    pub mixed: u64,
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

impl DimensionTable {
    pub fn new(d: u64) -> Self {
        let symmetric_powers = [1, 2, 3].map(|n| {
            if d == 0 {
                0
            } else {
                binomial(n + d - 1, d - 1)
            }
        });
        let symmetric = d * (d + 1) * (d + 2) / 6;
        let antisymmetric = if d < 3 { 0 } else { d * (d - 1) * (d - 2) / 6 };
        let mixed = if d < 2 { 0 } else { 2 * d * (d * d - 1) / 3 };
        Self {
            d,
            symmetric_powers,
            symmetric,
            antisymmetric,
            mixed,
        }
    }

    pub fn sector(&self, label: SectorLabel) -> u64 {
        match label {
            SectorLabel::TotallySymmetric => self.symmetric,
            SectorLabel::MixedSymmetric => self.mixed,
            SectorLabel::TotallyAntisymmetric => self.antisymmetric,
        }
    }
}

/// Both sides of the mixed-sector dimension identity, doubled so the
/// `1/2 * dim V_M^a * dim V_M^b` term stays integral.
pub fn dimension_identity_sides(d_a: u64, d_b: u64) -> (u64, u64) {
    let a = DimensionTable::new(d_a);
    let b = DimensionTable::new(d_b);
    let global = DimensionTable::new(d_a * d_b);
    let rhs = 2
        * (a.symmetric * b.mixed
            + a.antisymmetric * b.mixed
            + a.mixed * b.antisymmetric
            + a.mixed * b.symmetric)
        + a.mixed * b.mixed;
    (2 * global.mixed, rhs)
}

pub fn dimension_identity_holds(d_a: u64, d_b: u64) -> bool {
    let (lhs, rhs) = dimension_identity_sides(d_a, d_b);
    lhs == rhs
}

/// All permutations of `0..n` with their signs.
pub fn permutations_with_sign(n: usize) -> Vec<(Vec<usize>, i32)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                rec(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut perms = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut perms);
    perms
        .into_iter()
        .map(|p| {
            let inversions = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .filter(|&(i, j)| p[i] > p[j])
                .count();
            let sign = if inversions % 2 == 0 { 1 } else { -1 };
            (p, sign)
        })
        .collect()
}

/// Adds `weight * P` to `acc`, where `P` moves the content of factor `k`
/// to factor `images[k]` on `(C^d)^{⊗n}`.
fn accumulate_permutation(acc: &mut ComplexMatrix, images: &[usize], d: usize, weight: f64) {
    let n = images.len();
    let total = d.pow(n as u32);
    let mut src_digits = vec![0usize; n];
    let mut dst_digits = vec![0usize; n];
    for x in 0..total {
        let mut rest = x;
        for k in (0..n).rev() {
            src_digits[k] = rest % d;
            rest /= d;
        }
        for k in 0..n {
            dst_digits[images[k]] = src_digits[k];
        }
        let y = dst_digits.iter().fold(0, |acc, &digit| acc * d + digit);
        let current = acc.get(y, x);
        acc.set(y, x, current + c64(weight, 0.0));
    }
}

fn is_permutation(images: &[usize]) -> bool {
    let mut seen = vec![false; images.len()];
    images
        .iter()
        .all(|&k| k < seen.len() && !std::mem::replace(&mut seen[k], true))
}

/// Permutation operator on `(C^d)^{⊗n}` with `n = images.len()`, sending
/// the content of factor `k` to factor `images[k]`.
///
/// Panics if `images` is not a permutation of `0..n`.
pub fn permutation_operator(images: &[usize], d: usize) -> ComplexMatrix {
    assert!(is_permutation(images), "not a permutation: {images:?}");
    let mut m = ComplexMatrix::zeros(d.pow(images.len() as u32));
    accumulate_permutation(&mut m, images, d, 1.0);
    m
}

fn check_pair(i: usize, j: usize) -> Result<()> {
    if i == j || i >= SYSTEMS || j >= SYSTEMS {
        return Err(Error::BadSystemIndex(i, j));
    }
    Ok(())
}

/// Exchange operator of systems `i` and `j` on `(C^d)^{⊗3}`.
pub fn transposition(i: usize, j: usize, d: usize) -> Result<ComplexMatrix> {
    check_pair(i, j)?;
    let mut images = [0, 1, 2];
    images.swap(i, j);
    Ok(permutation_operator(&images, d))
}

/// Projector onto the totally symmetric subspace of `(C^d)^{⊗n}`.
pub fn symmetric_projector(n: usize, d: usize) -> ComplexMatrix {
    let perms = permutations_with_sign(n);
    let weight = 1.0 / perms.len() as f64;
    let mut acc = ComplexMatrix::zeros(d.pow(n as u32));
    for (p, _) in &perms {
        accumulate_permutation(&mut acc, p, d, weight);
    }
    acc
}

fn antisymmetric_projector(n: usize, d: usize) -> ComplexMatrix {
    let perms = permutations_with_sign(n);
    let weight = 1.0 / perms.len() as f64;
    let mut acc = ComplexMatrix::zeros(d.pow(n as u32));
    for (p, sign) in &perms {
        accumulate_permutation(&mut acc, p, d, weight * *sign as f64);
    }
    acc
}

/// The three sector projectors on `(C^d)^{⊗3}`.
#[derive(Clone, Debug)]
pub struct SectorProjectors {
    pub symmetric: ComplexMatrix,
    pub mixed: ComplexMatrix,
    pub antisymmetric: ComplexMatrix,
}

impl SectorProjectors {
    pub fn sector(&self, label: SectorLabel) -> &ComplexMatrix {
        match label {
            SectorLabel::TotallySymmetric => &self.symmetric,
            SectorLabel::MixedSymmetric => &self.mixed,
            SectorLabel::TotallyAntisymmetric => &self.antisymmetric,
        }
    }
}

pub fn young_projectors(d: usize) -> SectorProjectors {
    let symmetric = symmetric_projector(SYSTEMS, d);
    let antisymmetric = antisymmetric_projector(SYSTEMS, d);
    let mixed = ComplexMatrix::identity(d.pow(3)) - &symmetric - &antisymmetric;
    SectorProjectors {
        symmetric,
        mixed,
        antisymmetric,
    }
}

/// Symmetric and antisymmetric projectors of a pair of systems.
#[derive(Clone, Debug)]
pub struct PairProjectors {
    pub symmetric: ComplexMatrix,
    pub antisymmetric: ComplexMatrix,
}

pub fn pair_projectors(i: usize, j: usize, d: usize) -> Result<PairProjectors> {
    let swap = transposition(i, j, d)?;
    let id = ComplexMatrix::identity(d.pow(3));
    Ok(PairProjectors {
        symmetric: (&id + &swap).scale(0.5),
        antisymmetric: (&id - &swap).scale(0.5),
    })
}

/// Half-difference and half-sum of the input-reference exchanges:
/// `difference = (T(01) - T(02)) / 2`, `average = (T(01) + T(02)) / 2`.
#[derive(Clone, Debug)]
pub struct SwapCombinations {
    pub difference: ComplexMatrix,
    pub average: ComplexMatrix,
}

pub fn swap_combinations(d: usize) -> SwapCombinations {
    let t01 = transposition(0, 1, d).expect("valid pair");
    let t02 = transposition(0, 2, d).expect("valid pair");
    SwapCombinations {
        difference: (&t01 - &t02).scale(0.5),
        average: (&t01 + &t02).scale(0.5),
    }
}

/// Every permutation-symmetry operator used by the measurement builders,
/// for one space `(C^d)^{⊗3}` (global, or one party's factor).
#[derive(Clone, Debug)]
pub struct SymmetryOperators {
    pub d: usize,
    pub sectors: SectorProjectors,
    pub pair01: PairProjectors,
    pub pair02: PairProjectors,
    pub swap12: ComplexMatrix,
    pub swaps: SwapCombinations,
}

impl SymmetryOperators {
    pub fn new(d: usize) -> Self {
        Self {
            d,
            sectors: young_projectors(d),
            pair01: pair_projectors(0, 1, d).expect("valid pair"),
            pair02: pair_projectors(0, 2, d).expect("valid pair"),
            swap12: transposition(1, 2, d).expect("valid pair"),
            swaps: swap_combinations(d),
        }
    }

    pub fn dim(&self) -> usize {
        self.d.pow(3)
    }

    pub fn identity(&self) -> ComplexMatrix {
        ComplexMatrix::identity(self.dim())
    }
}

fn check_party_operator(op: &ComplexMatrix, party: Party, spec: &SpaceSpec) -> Result<()> {
    let expected = spec.party_space_dim(party);
    if op.dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            actual: op.dim(),
        });
    }
    Ok(())
}

/// `O^(p) ⊗ I` placed on the global space with factors interleaved.
pub fn embed_party_operator(
    op: &ComplexMatrix,
    party: Party,
    spec: &SpaceSpec,
) -> Result<ComplexMatrix> {
    check_party_operator(op, party, spec)?;
    let n = spec.global_dim();
    let local = spec.party_space_dim(party);
    let mut out = ComplexMatrix::zeros(n);
    for g in 0..n {
        let (a, b) = spec.split_index(g);
        for k in 0..local {
            let (row, h) = match party {
                Party::Alice => (a, spec.join_index(k, b)),
                Party::Bob => (b, spec.join_index(a, k)),
            };
            let value = op.get(row, k);
            if value != C64::default() {
                out.set(g, h, value);
            }
        }
    }
    Ok(out)
}

/// `O^(a) ⊗ O^(b)` placed on the global space.
pub fn embed_local_product(
    alice: &ComplexMatrix,
    bob: &ComplexMatrix,
    spec: &SpaceSpec,
) -> Result<ComplexMatrix> {
    check_party_operator(alice, Party::Alice, spec)?;
    check_party_operator(bob, Party::Bob, spec)?;
    let n = spec.global_dim();
    Ok(ComplexMatrix::from_fn(n, |g, h| {
        let (ga, gb) = spec.split_index(g);
        let (ha, hb) = spec.split_index(h);
        alice.get(ga, ha) * bob.get(gb, hb)
    }))
}

/// Applies a party-local operator to a global state vector without
/// materializing the embedded operator.
pub fn apply_party_operator(
    op: &ComplexMatrix,
    party: Party,
    spec: &SpaceSpec,
    v: &[C64],
) -> Result<Vec<C64>> {
    check_party_operator(op, party, spec)?;
    let n = spec.global_dim();
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: v.len(),
        });
    }
    let local = spec.party_space_dim(party);
    let mut out = vec![C64::default(); n];
    for (g, slot) in out.iter_mut().enumerate() {
        let (a, b) = spec.split_index(g);
        let mut acc = C64::default();
        for k in 0..local {
            let (row, h) = match party {
                Party::Alice => (a, spec.join_index(k, b)),
                Party::Bob => (b, spec.join_index(a, k)),
            };
            acc += op.get(row, k) * v[h];
        }
        *slot = acc;
    }
    Ok(out)
}

/// The interleave permutation `Π` with `Π|g> = |alice(g) * d_b^3 + bob(g)>`,
/// so that embedding `O^(a)` equals `Π^† (O ⊗ I) Π`.
pub fn interleave_permutation(spec: &SpaceSpec) -> ComplexMatrix {
    let n = spec.global_dim();
    let nb = spec.party_space_dim(Party::Bob);
    let mut m = ComplexMatrix::zeros(n);
    for g in 0..n {
        let (a, b) = spec.split_index(g);
        m.set(a * nb + b, g, c64(1.0, 0.0));
    }
    m
}
