//! Theta characteristics as exact bit vectors.
//!
//! A characteristic `a = (a', a'')` in degree `g` is stored through its
//! representative in `{0, 1/2}^{2g}`, i.e. as the bit vectors `2a'` and
//! `2a''`. The packed index reads `(top ‖ bottom)` as a big-endian `2g`-bit
//! integer, so `"100/000"` has index 32 in degree three. That index is the
//! canonical order used by every search in this module.
//!
//! Sums of representatives that are *not* reduced mod 2 (needed for the
//! reduced values of Frobenius' theta function) are carried by
//! [`HalfIntVector`].

use std::fmt;
use std::ops::BitXor;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest supported degree; `2g` bits must fit in the packed index.
pub const MAX_GENUS: usize = 15;

/// A theta characteristic class in `(1/2 Z^g x 1/2 Z^g) / (Z^g x Z^g)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Characteristic {
    g: u8,
    bits: u32,
}

impl Characteristic {
    pub fn new(top: &[u8], bottom: &[u8]) -> Result<Self> {
        let g = top.len();
        if bottom.len() != g {
            return Err(Error::DimensionMismatch { expected: g, got: bottom.len() });
        }
        if g == 0 || g > MAX_GENUS {
            return Err(Error::InvalidCharacteristic(format!("degree {g} out of range")));
        }
        let mut bits = 0u32;
        for &b in top.iter().chain(bottom) {
            if b > 1 {
                return Err(Error::InvalidCharacteristic(format!("entry {b} not in {{0,1}}")));
            }
            bits = (bits << 1) | b as u32;
        }
        Ok(Self { g: g as u8, bits })
    }

    /// Characteristic with the given canonical index.
    pub fn from_index(g: usize, index: u32) -> Self {
        assert!(g >= 1 && g <= MAX_GENUS, "degree {g} out of range");
        assert!(index < 1u32 << (2 * g), "index {index} out of range for degree {g}");
        Self { g: g as u8, bits: index }
    }

    pub fn zero(g: usize) -> Self {
        Self::from_index(g, 0)
    }

    /// All `4^g` classes in canonical order.
    pub fn all(g: usize) -> impl Iterator<Item = Characteristic> {
        (0..1u32 << (2 * g)).map(move |i| Self::from_index(g, i))
    }

    pub fn genus(&self) -> usize {
        self.g as usize
    }

    pub fn index(&self) -> u32 {
        self.bits
    }

    /// `2a'` as a `g`-bit mask; coordinate `i` sits at bit `g - 1 - i`.
    pub fn top_mask(&self) -> u32 {
        self.bits >> self.g
    }

    /// `2a''` as a `g`-bit mask, same bit layout as [`Self::top_mask`].
    pub fn bottom_mask(&self) -> u32 {
        self.bits & ((1 << self.g) - 1)
    }

    pub fn top_bit(&self, i: usize) -> u8 {
        ((self.top_mask() >> (self.genus() - 1 - i)) & 1) as u8
    }

    pub fn bottom_bit(&self, i: usize) -> u8 {
        ((self.bottom_mask() >> (self.genus() - 1 - i)) & 1) as u8
    }

    pub fn top(&self) -> Vec<u8> {
        (0..self.genus()).map(|i| self.top_bit(i)).collect()
    }

    pub fn bottom(&self) -> Vec<u8> {
        (0..self.genus()).map(|i| self.bottom_bit(i)).collect()
    }

    /// `a'` as reals in `{0, 1/2}`.
    pub fn top_half(&self) -> Vec<f64> {
        self.top().into_iter().map(|b| 0.5 * b as f64).collect()
    }

    /// `a''` as reals in `{0, 1/2}`.
    pub fn bottom_half(&self) -> Vec<f64> {
        self.bottom().into_iter().map(|b| 0.5 * b as f64).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }

    /// `(a) = exp(4 pi i a'.a'')`: `+1` for even, `-1` for odd.
    pub fn parity_sign(&self) -> i8 {
        dot_sign(self.top_mask() & self.bottom_mask())
    }

    pub fn is_even(&self) -> bool {
        self.parity_sign() == 1
    }

    pub fn is_odd(&self) -> bool {
        !self.is_even()
    }

    /// Group law: coordinatewise addition mod 1, i.e. XOR of the bits.
    pub fn add(&self, other: &Characteristic) -> Result<Characteristic> {
        if self.g != other.g {
            return Err(Error::DimensionMismatch { expected: self.genus(), got: other.genus() });
        }
        Ok(Self { g: self.g, bits: self.bits ^ other.bits })
    }

    pub fn to_half_int(&self) -> HalfIntVector {
        let twice = self.top().into_iter().chain(self.bottom()).map(i64::from).collect();
        HalfIntVector { g: self.genus(), twice }
    }
}

impl BitXor for Characteristic {
    type Output = Characteristic;

    fn bitxor(self, rhs: Characteristic) -> Characteristic {
        self.add(&rhs).expect("characteristics of different degree")
    }
}

impl fmt::Display for Characteristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.top() {
            write!(f, "{b}")?;
        }
        f.write_str("/")?;
        for b in self.bottom() {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Characteristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Characteristic({self})")
    }
}

impl FromStr for Characteristic {
    type Err = Error;

    /// Parses the textual form `"t1..tg/b1..bg"`, e.g. `"100/100"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidCharacteristic(s.to_string());
        let (top, bottom) = s.trim().split_once('/').ok_or_else(bad)?;
        let digits = |part: &str| -> Result<Vec<u8>> {
            part.chars()
                .map(|c| match c {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    _ => Err(bad()),
                })
                .collect()
        };
        let (top, bottom) = (digits(top)?, digits(bottom)?);
        if top.is_empty() || top.len() != bottom.len() {
            return Err(bad());
        }
        Characteristic::new(&top, &bottom)
    }
}

fn dot_sign(mask: u32) -> i8 {
    if mask.count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// `(a)`, the parity sign.
pub fn parity_sign(a: &Characteristic) -> i8 {
    a.parity_sign()
}

/// `(a, b) = exp(4 pi i a''.b')`.
pub fn pair_sign(a: &Characteristic, b: &Characteristic) -> i8 {
    dot_sign(a.bottom_mask() & b.top_mask())
}

/// `((a, b)) = (a, b)(b, a)`.
pub fn pairing_sign(a: &Characteristic, b: &Characteristic) -> i8 {
    pair_sign(a, b) * pair_sign(b, a)
}

/// `(((a, b, c))) = ((b, c))((c, a))((a, b))`; `-1` means azygetic.
pub fn triple_sign(a: &Characteristic, b: &Characteristic, c: &Characteristic) -> Result<i8> {
    if a.genus() != b.genus() || a.genus() != c.genus() {
        return Err(Error::DimensionMismatch { expected: a.genus(), got: b.genus().max(c.genus()) });
    }
    if a == b || b == c || a == c {
        return Err(Error::NonDistinct);
    }
    Ok(pairing_sign(b, c) * pairing_sign(c, a) * pairing_sign(a, b))
}

/// Even and odd classes of degree `g`, each list in canonical order.
pub fn enumerate_by_parity(g: usize) -> (Vec<Characteristic>, Vec<Characteristic>) {
    Characteristic::all(g).partition(|a| a.is_even())
}

/// Number of pairs `(o, e)` with `o` odd, `e` even and `o + e = a`.
pub fn difference_representation_count(a: &Characteristic) -> usize {
    Characteristic::all(a.genus())
        .filter(|o| o.is_odd() && (*o ^ *a).is_even())
        .count()
}

/// A vector in `1/2 Z^{2g}` stored exactly as twice its value.
///
/// Used for unreduced sums of representatives, where the lattice part
/// matters: `theta_{c+m} = exp(2 pi i c'.m'') theta_c` for integral `m`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct HalfIntVector {
    g: usize,
    twice: Vec<i64>,
}

impl HalfIntVector {
    pub fn from_twice(g: usize, twice: Vec<i64>) -> Result<Self> {
        if twice.len() != 2 * g {
            return Err(Error::DimensionMismatch { expected: 2 * g, got: twice.len() });
        }
        Ok(Self { g, twice })
    }

    pub fn zero(g: usize) -> Self {
        Self { g, twice: vec![0; 2 * g] }
    }

    pub fn genus(&self) -> usize {
        self.g
    }

    pub fn twice(&self) -> &[i64] {
        &self.twice
    }

    pub fn twice_top(&self) -> &[i64] {
        &self.twice[..self.g]
    }

    pub fn twice_bottom(&self) -> &[i64] {
        &self.twice[self.g..]
    }

    pub fn add(&self, other: &HalfIntVector) -> HalfIntVector {
        assert_eq!(self.g, other.g, "half-integer vectors of different degree");
        let twice = self.twice.iter().zip(&other.twice).map(|(a, b)| a + b).collect();
        HalfIntVector { g: self.g, twice }
    }

    pub fn add_char(&self, c: &Characteristic) -> HalfIntVector {
        self.add(&c.to_half_int())
    }

    /// The class mod `Z^g x Z^g`.
    pub fn class(&self) -> Characteristic {
        let top: Vec<u8> = self.twice_top().iter().map(|v| v.rem_euclid(2) as u8).collect();
        let bottom: Vec<u8> = self.twice_bottom().iter().map(|v| v.rem_euclid(2) as u8).collect();
        Characteristic::new(&top, &bottom).expect("valid degree")
    }

    /// Integral vector `m = self - class representative`.
    pub fn lattice_part(&self) -> Vec<i64> {
        self.twice.iter().map(|v| (v - v.rem_euclid(2)) / 2).collect()
    }

    /// Half of this vector, if that is again a half-integer vector.
    pub fn halve(&self) -> Option<HalfIntVector> {
        if self.twice.iter().all(|v| v % 2 == 0) {
            Some(HalfIntVector { g: self.g, twice: self.twice.iter().map(|v| v / 2).collect() })
        } else {
            None
        }
    }

    /// `(a, b) = exp(4 pi i a''.b')` evaluated on these exact representatives.
    pub fn pair_sign(&self, other: &HalfIntVector) -> i8 {
        let s: i64 = self.twice_bottom().iter().zip(other.twice_top()).map(|(a, b)| a * b).sum();
        if s.rem_euclid(2) == 0 {
            1
        } else {
            -1
        }
    }

    /// Sign relating `theta` at this representative to `theta` at the
    /// reduced one: `theta_self = sign * theta_class`.
    pub fn representative_sign(&self) -> i8 {
        let class = self.class();
        let m = self.lattice_part();
        let s: i64 = (0..self.g).map(|i| class.top_bit(i) as i64 * m[self.g + i]).sum();
        if s.rem_euclid(2) == 0 {
            1
        } else {
            -1
        }
    }
}

impl fmt::Debug for HalfIntVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HalfIntVector(2x = {:?})", self.twice)
    }
}

/// Number of members of a fundamental system in degree three.
pub const SYSTEM_SIZE: usize = 8;

/// Eight characteristics in degree three with every triple azygetic.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FundamentalSystem {
    members: Vec<Characteristic>,
    j: HalfIntVector,
    k: Characteristic,
    odd_count: usize,
}

/// Why a list of characteristics fails to be a fundamental system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SystemDefect {
    Repeated(usize, usize),
    Syzygetic(usize, usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemCheck {
    pub valid: bool,
    pub defect: Option<SystemDefect>,
}

pub fn is_fundamental_system(members: &[Characteristic]) -> Result<SystemCheck> {
    if members.len() != SYSTEM_SIZE {
        return Err(Error::WrongCount { expected: SYSTEM_SIZE, got: members.len() });
    }
    if let Some(a) = members.iter().find(|a| a.genus() != 3) {
        return Err(Error::DimensionMismatch { expected: 3, got: a.genus() });
    }
    for i in 0..SYSTEM_SIZE {
        for j in i + 1..SYSTEM_SIZE {
            if members[i] == members[j] {
                return Ok(SystemCheck { valid: false, defect: Some(SystemDefect::Repeated(i, j)) });
            }
        }
    }
    for (i, j, l) in triples(SYSTEM_SIZE) {
        if triple_sign(&members[i], &members[j], &members[l])? != -1 {
            return Ok(SystemCheck { valid: false, defect: Some(SystemDefect::Syzygetic(i, j, l)) });
        }
    }
    Ok(SystemCheck { valid: true, defect: None })
}

fn triples(n: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).flat_map(move |j| (j + 1..n).map(move |l| (i, j, l))))
}

/// The 70 four-element position subsets of an 8-element system, in
/// lexicographic order.
pub fn four_subsets() -> impl Iterator<Item = [usize; 4]> {
    (0..8).flat_map(|a| {
        (a + 1..8).flat_map(move |b| {
            (b + 1..8).flat_map(move |c| (c + 1..8).map(move |d| [a, b, c, d]))
        })
    })
}

impl FundamentalSystem {
    /// Validates the members and derives `j`, `k` and the odd count.
    pub fn from_members(members: Vec<Characteristic>) -> Result<Self> {
        let check = is_fundamental_system(&members)?;
        if !check.valid {
            return Err(Error::InvalidCharacteristic(format!(
                "not a fundamental system: {:?}",
                check.defect
            )));
        }
        let sum = members.iter().fold(HalfIntVector::zero(3), |acc, m| acc.add_char(m));
        let j = sum.halve().ok_or_else(|| {
            Error::InvalidCharacteristic("representative sum is not integral".into())
        })?;
        let odd: Vec<&Characteristic> = members.iter().filter(|m| m.is_odd()).collect();
        let k = odd.iter().fold(Characteristic::zero(3), |acc, m| acc ^ **m);
        Ok(Self { odd_count: odd.len(), members, j, k })
    }

    pub fn members(&self) -> &[Characteristic] {
        &self.members
    }

    /// `j`, half the sum of the fixed member representatives.
    pub fn j(&self) -> &HalfIntVector {
        &self.j
    }

    /// Class of the sum of the odd members.
    pub fn k(&self) -> Characteristic {
        self.k
    }

    pub fn odd_count(&self) -> usize {
        self.odd_count
    }

    /// Unreduced sum of the odd members' representatives.
    pub fn odd_sum_raw(&self) -> HalfIntVector {
        self.members
            .iter()
            .filter(|m| m.is_odd())
            .fold(HalfIntVector::zero(3), |acc, m| acc.add_char(m))
    }

    /// The translate `aF`, members kept in position order.
    pub fn translate(&self, a: &Characteristic) -> Result<FundamentalSystem> {
        let members = self.members.iter().map(|m| m.add(a)).collect::<Result<Vec<_>>>()?;
        FundamentalSystem::from_members(members)
    }
}

/// Lexicographically first fundamental system in degree three, found by
/// backtracking over the 64 classes in canonical order.
pub fn build_fundamental_system() -> Result<FundamentalSystem> {
    fn extend(chosen: &mut Vec<Characteristic>, start: u32) -> bool {
        if chosen.len() == SYSTEM_SIZE {
            return true;
        }
        for idx in start..64 {
            let c = Characteristic::from_index(3, idx);
            let azygetic = (0..chosen.len()).all(|i| {
                (i + 1..chosen.len())
                    .all(|j| triple_sign(&chosen[i], &chosen[j], &c) == Ok(-1))
            });
            if azygetic {
                chosen.push(c);
                if extend(chosen, idx + 1) {
                    return true;
                }
                chosen.pop();
            }
        }
        false
    }

    let mut chosen = Vec::with_capacity(SYSTEM_SIZE);
    if !extend(&mut chosen, 0) {
        return Err(Error::SearchFailed);
    }
    FundamentalSystem::from_members(chosen)
}

#[derive(Clone, Debug)]
pub struct PencilStatistics {
    /// `aF` for the 64 characteristics `a` in canonical order.
    pub translates: Vec<FundamentalSystem>,
    pub seven_odd_count: usize,
    pub three_odd_count: usize,
    pub k_class: Characteristic,
}

pub fn pencil_statistics(system: &FundamentalSystem) -> Result<PencilStatistics> {
    let translates = Characteristic::all(3)
        .map(|a| system.translate(&a))
        .collect::<Result<Vec<_>>>()?;
    let count = |n: usize| translates.iter().filter(|f| f.odd_count() == n).count();
    Ok(PencilStatistics {
        seven_odd_count: count(7),
        three_odd_count: count(3),
        k_class: system.k(),
        translates,
    })
}

/// One system from each of the 36 pencils, ordered by the canonical index of
/// their odd sums `k`.
///
/// For a four-subset `{alpha, beta, gamma, delta}` with product `a`, the
/// system `{alpha a, beta a, gamma a, delta a, kappa, lambda, mu, nu}` has odd
/// sum `ka`; the first subset (lexicographically) realizing each `ka` is used.
pub fn pencil_representatives(system: &FundamentalSystem) -> Result<Vec<FundamentalSystem>> {
    let k = system.k();
    let mut by_k: Vec<Option<FundamentalSystem>> = vec![None; 64];
    by_k[k.index() as usize] = Some(system.clone());
    for quad in four_subsets() {
        let a = quad.iter().fold(Characteristic::zero(3), |acc, &p| acc ^ system.members()[p]);
        let target = (k ^ a).index() as usize;
        if by_k[target].is_some() {
            continue;
        }
        let mut members = system.members().to_vec();
        for &p in &quad {
            members[p] = members[p] ^ a;
        }
        let rep = FundamentalSystem::from_members(members)?;
        if rep.k().index() as usize != target {
            return Err(Error::CoverageFailure);
        }
        by_k[target] = Some(rep);
    }
    let reps: Vec<FundamentalSystem> = by_k.into_iter().flatten().collect();
    if reps.len() != 36 || reps.iter().any(|f| f.k().is_odd()) {
        return Err(Error::CoverageFailure);
    }
    Ok(reps)
}

/// A split `F = {alpha, beta, gamma, delta} u {kappa, lambda, mu, nu}` with
/// `alpha beta gamma delta = a`.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub system: FundamentalSystem,
    pub quad: [Characteristic; 4],
    pub rest: [Characteristic; 4],
    pub j: HalfIntVector,
}

/// All splits of the representative with odd sum `k` whose four-subset
/// product is `a`; there are two (a subset and its complement) when the
/// preconditions hold.
pub fn decompositions(
    a: &Characteristic,
    k: &Characteristic,
    reps: &[FundamentalSystem],
) -> Vec<Decomposition> {
    let Some(system) = reps.iter().find(|f| f.k() == *k) else {
        return Vec::new();
    };
    let m = system.members();
    four_subsets()
        .filter(|quad| quad.iter().fold(Characteristic::zero(3), |acc, &p| acc ^ m[p]) == *a)
        .map(|quad| {
            let rest: Vec<usize> = (0..8).filter(|p| !quad.contains(p)).collect();
            Decomposition {
                system: system.clone(),
                quad: quad.map(|p| m[p]),
                rest: [m[rest[0]], m[rest[1]], m[rest[2]], m[rest[3]]],
                j: system.j().clone(),
            }
        })
        .collect()
}

pub fn decompose_for(
    a: &Characteristic,
    k: &Characteristic,
    reps: &[FundamentalSystem],
) -> Result<Decomposition> {
    decompositions(a, k, reps)
        .into_iter()
        .next()
        .ok_or_else(|| Error::NoDecomposition { a: a.to_string(), k: k.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> Characteristic {
        s.parse().unwrap()
    }

    #[test]
    fn parity_examples() {
        assert_eq!(parity_sign(&c("100/100")), -1);
        assert_eq!(parity_sign(&c("000/000")), 1);
        let (even, odd) = enumerate_by_parity(3);
        assert_eq!((even.len(), odd.len()), (36, 28));
        let total: i32 = Characteristic::all(3).map(|a| a.parity_sign() as i32).sum();
        assert_eq!(total, 8);
    }

    #[test]
    fn parity_counts_small_degrees() {
        for (g, even, odd) in [(1, 3, 1), (2, 10, 6), (3, 36, 28), (4, 136, 120)] {
            let (e, o) = enumerate_by_parity(g);
            assert_eq!((e.len(), o.len()), (even, odd), "g = {g}");
        }
    }

    #[test]
    fn textual_form_roundtrip() {
        let a = c("101/011");
        assert_eq!(a.to_string(), "101/011");
        assert_eq!(a.index(), 0b101011);
        assert_eq!(a.top(), vec![1, 0, 1]);
        assert_eq!(a.bottom(), vec![0, 1, 1]);
        assert!("10/011".parse::<Characteristic>().is_err());
        assert!("102/011".parse::<Characteristic>().is_err());
        assert!("".parse::<Characteristic>().is_err());
    }

    #[test]
    fn group_law() {
        let a = c("110/011");
        let zero = Characteristic::zero(3);
        assert_eq!(a.add(&zero).unwrap(), a);
        assert_eq!(a.add(&a).unwrap(), zero);
        assert!(a.add(&Characteristic::zero(2)).is_err());
    }

    #[test]
    fn pairing_identity_all_pairs() {
        for a in Characteristic::all(3) {
            for b in Characteristic::all(3) {
                assert_eq!(pairing_sign(&a, &b), a.parity_sign() * b.parity_sign() * (a ^ b).parity_sign());
                assert_eq!(pair_sign(&a, &b) * pair_sign(&a, &b), 1);
            }
        }
    }

    #[test]
    fn triple_sign_rejects_duplicates() {
        let a = c("100/000");
        let b = c("010/000");
        assert_eq!(triple_sign(&a, &a, &b), Err(Error::NonDistinct));
        assert_eq!(triple_sign(&a, &b, &b), Err(Error::NonDistinct));
    }

    #[test]
    fn difference_counts() {
        for a in Characteristic::all(3) {
            let expected = if a.is_zero() { 0 } else { 16 };
            assert_eq!(difference_representation_count(&a), expected);
        }
        for a in Characteristic::all(2).filter(|a| !a.is_zero()) {
            assert_eq!(difference_representation_count(&a), 4);
        }
    }

    #[test]
    fn half_int_representatives() {
        let v = HalfIntVector::from_twice(3, vec![1, 2, 3, -1, 0, 2]).unwrap();
        assert_eq!(v.class(), c("101/100"));
        assert_eq!(v.lattice_part(), vec![0, 1, 1, -1, 0, 1]);
        // class top (1,0,1) against m'' = (-1,0,1): 1*(-1) + 1*1 = 0 -> even
        assert_eq!(v.representative_sign(), 1);
        let w = HalfIntVector::from_twice(3, vec![1, 0, 0, 2, 0, 0]).unwrap();
        assert_eq!(w.representative_sign(), -1);
        assert!(v.halve().is_none());
    }

    #[test]
    fn wrong_count_is_an_error() {
        let m = vec![Characteristic::zero(3); 7];
        assert_eq!(is_fundamental_system(&m), Err(Error::WrongCount { expected: 8, got: 7 }));
    }

    #[test]
    fn base_system_properties() {
        let f = build_fundamental_system().unwrap();
        assert!(is_fundamental_system(f.members()).unwrap().valid);
        assert!(f.k().is_even());
        assert!(matches!(f.odd_count(), 3 | 7));
        // Canonical first system.
        let idx: Vec<u32> = f.members().iter().map(|m| m.index()).collect();
        assert_eq!(idx, vec![0, 1, 8, 11, 25, 31, 59, 63]);
        for (i, j, l) in triples(8) {
            assert_eq!(triple_sign(&f.members()[i], &f.members()[j], &f.members()[l]), Ok(-1));
        }
    }

    #[test]
    fn repeated_member_is_rejected() {
        let f = build_fundamental_system().unwrap();
        let mut m = f.members().to_vec();
        m[7] = m[0];
        let check = is_fundamental_system(&m).unwrap();
        assert!(!check.valid);
        assert_eq!(check.defect, Some(SystemDefect::Repeated(0, 7)));
    }

    #[test]
    fn odd_characteristics_from_pairs() {
        // k alpha beta over the 28 pairs gives each odd characteristic once.
        let f = build_fundamental_system().unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for i in 0..8 {
            for j in i + 1..8 {
                let x = f.k() ^ f.members()[i] ^ f.members()[j];
                assert!(x.is_odd());
                seen.insert(x);
            }
        }
        assert_eq!(seen.len(), 28);
    }

    #[test]
    fn even_characteristics_from_quads() {
        let f = build_fundamental_system().unwrap();
        let mut counts = std::collections::BTreeMap::new();
        for quad in four_subsets() {
            let x = quad.iter().fold(f.k(), |acc, &p| acc ^ f.members()[p]);
            *counts.entry(x).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 35);
        assert!(counts.iter().all(|(x, n)| x.is_even() && *x != f.k() && *n == 2));
    }
}
