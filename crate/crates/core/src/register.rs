//! Computational-basis labels of a qubit register and the pointer variables
//! that gate control noise couples to.
//!
//! A qubit is labelled by its Pauli-Z eigenvalue `m_j = ±1`, so the total spin
//! `M = Σ_j m_j` is an integer in `[-L, L]` with the parity of `L`. All
//! Hamiltonians in this crate are diagonal, which is why basis labels (rather
//! than state vectors) are all that is needed.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GcnError, Result};

/// Largest register length accepted by [`enumerate_labels`].
pub const MAX_ENUMERATION_LEN: usize = 12;

/// A basis label `(m_0, …, m_{L-1})` with every entry `±1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct RegisterLabel {
    spins: Vec<i8>,
}

impl RegisterLabel {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if spins.is_empty() {
            return Err(GcnError::InvalidLabel("register length must be >= 1".into()));
        }
        if let Some(bad) = spins.iter().find(|&&m| m != 1 && m != -1) {
            return Err(GcnError::InvalidLabel(format!(
                "spin values must be +1 or -1, found {bad}"
            )));
        }
        Ok(Self { spins })
    }

    /// All spins equal to `m`.
    pub fn uniform(len: usize, up: bool) -> Result<Self> {
        Self::new(vec![if up { 1 } else { -1 }; len])
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn spin(&self, j: usize) -> i8 {
        self.spins[j]
    }

    /// Global spin flip `m → -m`.
    pub fn flipped(&self) -> Self {
        Self {
            spins: self.spins.iter().map(|m| -m).collect(),
        }
    }

    /// Copy with the listed qubits flipped.
    pub fn with_flips(&self, qubits: &[usize]) -> Result<Self> {
        let mut spins = self.spins.clone();
        for &j in qubits {
            let len = spins.len();
            let m = spins
                .get_mut(j)
                .ok_or(GcnError::InvalidIndex { j, k: j, len })?;
            *m = -*m;
        }
        Ok(Self { spins })
    }
}

impl fmt::Display for RegisterLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &m in &self.spins {
            f.write_str(if m > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl FromStr for RegisterLabel {
    type Err = GcnError;

    /// Parses `'+'` / `'-'` strings; the Unicode minus sign `'−'` is accepted too.
    fn from_str(s: &str) -> Result<Self> {
        let spins = s
            .trim()
            .chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' | '\u{2212}' => Ok(-1),
                other => Err(GcnError::InvalidLabel(format!(
                    "unexpected character {other:?} in label {s:?}"
                ))),
            })
            .collect::<Result<Vec<i8>>>()?;
        Self::new(spins)
    }
}

impl TryFrom<String> for RegisterLabel {
    type Error = GcnError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<RegisterLabel> for String {
    fn from(label: RegisterLabel) -> String {
        label.to_string()
    }
}

/// The `(m, m′)` labels of one off-diagonal density-matrix element.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CoherencePair {
    left: RegisterLabel,
    right: RegisterLabel,
}

impl CoherencePair {
    pub fn new(left: RegisterLabel, right: RegisterLabel) -> Result<Self> {
        if left.len() != right.len() {
            return Err(GcnError::LengthMismatch {
                what: "right label",
                got: right.len(),
                expected: left.len(),
            });
        }
        Ok(Self { left, right })
    }

    pub fn parse(left: &str, right: &str) -> Result<Self> {
        Self::new(left.parse()?, right.parse()?)
    }

    pub fn left(&self) -> &RegisterLabel {
        &self.left
    }

    pub fn right(&self) -> &RegisterLabel {
        &self.right
    }

    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    /// `M` of the left label.
    pub fn total_spin_left(&self) -> i64 {
        total_spin(&self.left)
    }

    /// `M′` of the right label.
    pub fn total_spin_right(&self) -> i64 {
        total_spin(&self.right)
    }

    pub fn hamming_distance(&self) -> usize {
        self.left
            .spins
            .iter()
            .zip(&self.right.spins)
            .filter(|(a, b)| a != b)
            .count()
    }

    pub fn swapped(&self) -> Self {
        Self {
            left: self.right.clone(),
            right: self.left.clone(),
        }
    }

    pub fn flipped(&self) -> Self {
        Self {
            left: self.left.flipped(),
            right: self.right.flipped(),
        }
    }
}

/// Nominal control signals `φ_j` applied to the bus couplers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GateDrive {
    phi: Vec<f64>,
}

impl GateDrive {
    pub fn new(phi: Vec<f64>) -> Result<Self> {
        if phi.is_empty() {
            return Err(GcnError::InvalidParameter {
                name: "drive",
                reason: "drive must have at least one entry".into(),
            });
        }
        if let Some(bad) = phi.iter().find(|p| !p.is_finite()) {
            return Err(GcnError::InvalidParameter {
                name: "drive",
                reason: format!("non-finite control value {bad}"),
            });
        }
        Ok(Self { phi })
    }

    /// All gates idle.
    pub fn idle(len: usize) -> Result<Self> {
        Self::new(vec![0.0; len])
    }

    /// A single active gate on qubits `a` and `b` with amplitude `amplitude`.
    pub fn active_pair(len: usize, a: usize, b: usize, amplitude: f64) -> Result<Self> {
        if a == b || a >= len || b >= len {
            return Err(GcnError::InvalidIndex { j: a, k: b, len });
        }
        let mut phi = vec![0.0; len];
        phi[a] = amplitude;
        phi[b] = amplitude;
        Self::new(phi)
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// True when the drive describes a legal bus state: either all gates are
    /// idle or exactly one pair is active.
    pub fn is_nominal(&self) -> bool {
        matches!(self.phi.iter().filter(|&&p| p != 0.0).count(), 0 | 2)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            phi: self.phi.iter().map(|p| c * p).collect(),
        }
    }

    /// `Σ_j φ_j m_j`.
    pub fn projection(&self, label: &RegisterLabel) -> Result<f64> {
        check_len("drive", self.len(), label.len())?;
        Ok(self
            .phi
            .iter()
            .zip(label.spins())
            .map(|(p, &m)| p * f64::from(m))
            .sum())
    }
}

fn check_len(what: &'static str, got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(GcnError::LengthMismatch {
            what,
            got,
            expected,
        })
    }
}

/// `M = Σ_j m_j`.
pub fn total_spin(label: &RegisterLabel) -> i64 {
    label.spins.iter().map(|&m| i64::from(m)).sum()
}

/// Number of qubits whose left and right labels differ.
pub fn hamming_distance(left: &RegisterLabel, right: &RegisterLabel) -> Result<usize> {
    Ok(CoherencePair::new(left.clone(), right.clone())?.hamming_distance())
}

/// Pointer of the fully switched array under a single central noise source,
/// `Q = M²/2`.
pub fn pointer_fsa_uniform(label: &RegisterLabel) -> f64 {
    let m = total_spin(label) as f64;
    m * m / 2.0
}

/// Pointer of the gate between qubits `j < k` under independent noise,
/// `Q_jk = m_j m_k / 2`.
pub fn pointer_fsa_pair(label: &RegisterLabel, j: usize, k: usize) -> Result<f64> {
    let len = label.len();
    if j >= k || k >= len {
        return Err(GcnError::InvalidIndex { j, k, len });
    }
    Ok(f64::from(label.spin(j) * label.spin(k)) / 2.0)
}

/// Bus pointer during gate operation, `Q = M · Σ_j φ_j m_j`.
pub fn pointer_bus(label: &RegisterLabel, drive: &GateDrive) -> Result<f64> {
    Ok(total_spin(label) as f64 * drive.projection(label)?)
}

/// All `2^L` labels, `'+'` before `'-'` with qubit 0 most significant.
pub fn enumerate_labels(len: usize) -> Result<Vec<RegisterLabel>> {
    if len == 0 || len > MAX_ENUMERATION_LEN {
        return Err(GcnError::GuardExceeded {
            what: "register length",
            value: len,
            max: MAX_ENUMERATION_LEN,
        });
    }
    Ok((0..1usize << len)
        .map(|bits| RegisterLabel {
            spins: (0..len)
                .map(|j| if bits >> (len - 1 - j) & 1 == 0 { 1 } else { -1 })
                .collect(),
        })
        .collect())
}

/// Unordered label pairs `(m, m′)` with `m` not after `m′` in enumeration order,
/// diagonal included: `2^L (2^L + 1) / 2` pairs.
pub fn enumerate_unordered_pairs(len: usize) -> Result<Vec<CoherencePair>> {
    let labels = enumerate_labels(len)?;
    let mut pairs = Vec::with_capacity(labels.len() * (labels.len() + 1) / 2);
    for (i, a) in labels.iter().enumerate() {
        for b in &labels[i..] {
            pairs.push(CoherencePair {
                left: a.clone(),
                right: b.clone(),
            });
        }
    }
    Ok(pairs)
}

/// All ordered label pairs, `4^L` of them.
pub fn enumerate_ordered_pairs(len: usize) -> Result<Vec<CoherencePair>> {
    let labels = enumerate_labels(len)?;
    Ok(labels
        .iter()
        .flat_map(|a| {
            labels.iter().map(move |b| CoherencePair {
                left: a.clone(),
                right: b.clone(),
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn label(s: &str) -> RegisterLabel {
        s.parse().unwrap()
    }

    #[test]
    fn total_spin_examples() {
        assert_eq!(total_spin(&label("++-")), 1);
        assert_eq!(total_spin(&label("++")), 2);
        assert_eq!(total_spin(&label("-----")), -5);
    }

    #[test]
    fn label_rejects_bad_input() {
        assert!(RegisterLabel::new(vec![]).is_err());
        assert!(RegisterLabel::new(vec![1, 0]).is_err());
        assert!("+x".parse::<RegisterLabel>().is_err());
        assert_eq!(label("+\u{2212}+"), label("+-+"));
        assert_eq!(label("+-+").to_string(), "+-+");
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(hamming_distance(&label("++"), &label("+-")).unwrap(), 1);
        assert_eq!(hamming_distance(&label("+-+"), &label("+-+")).unwrap(), 0);
        assert_eq!(hamming_distance(&label("++++"), &label("----")).unwrap(), 4);
        assert!(matches!(
            hamming_distance(&label("++"), &label("+++")),
            Err(GcnError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn fsa_pointers() {
        assert_eq!(pointer_fsa_uniform(&label("++")), 2.0);
        assert_eq!(pointer_fsa_uniform(&label("+-")), 0.0);
        assert_eq!(pointer_fsa_uniform(&label("--")), 2.0);
        assert_eq!(pointer_fsa_pair(&label("++"), 0, 1).unwrap(), 0.5);
        assert_eq!(pointer_fsa_pair(&label("+-"), 0, 1).unwrap(), -0.5);
        assert!(pointer_fsa_pair(&label("++"), 0, 2).is_err());
        assert!(pointer_fsa_pair(&label("++"), 1, 1).is_err());
        assert!(pointer_fsa_pair(&label("++"), 1, 0).is_err());
    }

    #[test]
    fn bus_pointer() {
        let drive = GateDrive::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(pointer_bus(&label("++"), &drive).unwrap(), 4.0);
        assert_eq!(pointer_bus(&label("+-"), &drive).unwrap(), 0.0);
        let idle = GateDrive::idle(2).unwrap();
        assert_eq!(pointer_bus(&label("++"), &idle).unwrap(), 0.0);
        assert!(pointer_bus(&label("+++"), &drive).is_err());
    }

    #[test]
    fn nominal_drive_flag() {
        assert!(GateDrive::idle(4).unwrap().is_nominal());
        assert!(GateDrive::active_pair(4, 1, 3, 0.7).unwrap().is_nominal());
        assert!(!GateDrive::new(vec![1.0, 0.0, 0.0]).unwrap().is_nominal());
        assert!(!GateDrive::new(vec![1.0, 1.0, 1.0]).unwrap().is_nominal());
    }

    #[test]
    fn enumeration() {
        let one = enumerate_labels(1).unwrap();
        assert_eq!(one, vec![label("+"), label("-")]);
        let two = enumerate_labels(2).unwrap();
        assert_eq!(two.len(), 4);
        assert_eq!(two[1], label("+-"));
        assert!(enumerate_labels(13).is_err());
        assert!(enumerate_labels(0).is_err());
        assert_eq!(enumerate_unordered_pairs(2).unwrap().len(), 10);
        assert_eq!(enumerate_ordered_pairs(2).unwrap().len(), 16);
    }

    fn arb_label(max_len: usize) -> impl Strategy<Value = RegisterLabel> {
        prop::collection::vec(prop::bool::ANY, 1..=max_len).prop_map(|bits| {
            RegisterLabel::new(bits.into_iter().map(|b| if b { 1 } else { -1 }).collect())
                .unwrap()
        })
    }

    fn arb_pair(max_len: usize) -> impl Strategy<Value = CoherencePair> {
        (1..=max_len).prop_flat_map(|len| {
            let bits = prop::collection::vec(prop::bool::ANY, len);
            (bits.clone(), bits).prop_map(|(a, b)| {
                let to = |v: Vec<bool>| {
                    RegisterLabel::new(v.into_iter().map(|b| if b { 1 } else { -1 }).collect())
                        .unwrap()
                };
                CoherencePair::new(to(a), to(b)).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn uniform_pointer_flip_symmetric(m in arb_label(16)) {
            prop_assert_eq!(pointer_fsa_uniform(&m), pointer_fsa_uniform(&m.flipped()));
        }

        #[test]
        fn hamming_is_symmetric_and_definite(p in arb_pair(16)) {
            let d = p.hamming_distance();
            prop_assert_eq!(d, p.swapped().hamming_distance());
            prop_assert_eq!(d == 0, p.left() == p.right());
            prop_assert!(d <= p.len());
        }

        #[test]
        fn pair_pointers_square_to_quarter(m in arb_label(12)) {
            let len = m.len();
            let mut sum = 0.0;
            for j in 0..len {
                for k in j + 1..len {
                    let q = pointer_fsa_pair(&m, j, k).unwrap();
                    sum += 4.0 * q * q;
                }
            }
            prop_assert_eq!(sum, (len * (len - 1) / 2) as f64);
        }

        #[test]
        fn bus_pointer_is_linear_in_drive(
            m in arb_label(8),
            c in -10.0f64..10.0,
            raw in prop::collection::vec(-3.0f64..3.0, 8),
        ) {
            let drive = GateDrive::new(raw[..m.len()].to_vec()).unwrap();
            let q = pointer_bus(&m, &drive).unwrap();
            let qc = pointer_bus(&m, &drive.scaled(c)).unwrap();
            prop_assert!((qc - c * q).abs() <= 1e-12 * (1.0 + q.abs() * c.abs()));
        }

        #[test]
        fn label_string_round_trip(m in arb_label(20)) {
            prop_assert_eq!(m.to_string().parse::<RegisterLabel>().unwrap(), m);
        }
    }
}
