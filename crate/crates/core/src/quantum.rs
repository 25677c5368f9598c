//! Nine-qubit statevector simulation of the feature circuit.
//!
//! Basis index bit `q` holds qubit `q`, so qubit 0 is the least-significant bit.
//! Rotations use the half-angle forms `Rx(θ) = exp(-iθX/2)` and so on.

use std::fmt;

use num_complex::Complex64;
use rand_core::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::scaling::{AngleVector, RotationAxis, ANGLE_COUNT};
use crate::{Error, Result};

pub const QUBITS: usize = 9;
pub const STATES: usize = 1 << QUBITS;
pub const DEFAULT_SHOTS: u64 = 8192;
pub const BIT_ORDER: &str = "qubit0_lsb";

const INTRA_GROUP_CNOTS: [(usize, usize); 6] = [(0, 1), (1, 2), (3, 4), (4, 5), (6, 7), (7, 8)];
const CROSS_GROUP_CNOTS: [(usize, usize); 4] = [(2, 3), (1, 4), (0, 6), (5, 7)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantumMode {
    /// The circuit as published: measurement directly after the CNOT layers.
    #[default]
    Faithful,
    /// Appends a Hadamard on every qubit before measurement.
    Interference,
}

impl fmt::Display for QuantumMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QuantumMode::Faithful => "faithful",
            QuantumMode::Interference => "interference",
        })
    }
}

impl std::str::FromStr for QuantumMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "faithful" => Ok(QuantumMode::Faithful),
            "interference" => Ok(QuantumMode::Interference),
            other => Err(Error::InvalidParameter(format!("unknown quantum mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "lowercase")]
pub enum Gate {
    H { qubit: usize },
    Rx { qubit: usize, theta: f64 },
    Ry { qubit: usize, theta: f64 },
    Rz { qubit: usize, theta: f64 },
    Cnot { control: usize, target: usize },
}

impl Gate {
    /// 2×2 matrix `[[a, b], [c, d]]` of a single-qubit gate.
    pub fn matrix(&self) -> Option<[[Complex64; 2]; 2]> {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        match *self {
            Gate::H { .. } => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                Some([[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]])
            }
            Gate::Rx { theta, .. } => {
                let (sn, cs) = (theta / 2.0).sin_cos();
                Some([[c(cs, 0.0), c(0.0, -sn)], [c(0.0, -sn), c(cs, 0.0)]])
            }
            Gate::Ry { theta, .. } => {
                let (sn, cs) = (theta / 2.0).sin_cos();
                Some([[c(cs, 0.0), c(-sn, 0.0)], [c(sn, 0.0), c(cs, 0.0)]])
            }
            Gate::Rz { theta, .. } => {
                let (sn, cs) = (theta / 2.0).sin_cos();
                Some([[c(cs, -sn), c(0.0, 0.0)], [c(0.0, 0.0), c(cs, sn)]])
            }
            Gate::Cnot { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub gates: Vec<Gate>,
    pub mode: QuantumMode,
}

pub fn build_circuit(angles: &AngleVector, mode: QuantumMode) -> CircuitSpec {
    let mut gates: Vec<Gate> = (0..QUBITS).map(|qubit| Gate::H { qubit }).collect();
    for (qubit, (&theta, axis)) in angles.angles.iter().zip(angles.axes()).enumerate() {
        gates.push(match axis {
            RotationAxis::Rx => Gate::Rx { qubit, theta },
            RotationAxis::Ry => Gate::Ry { qubit, theta },
            RotationAxis::Rz => Gate::Rz { qubit, theta },
        });
    }
    for (control, target) in INTRA_GROUP_CNOTS.into_iter().chain(CROSS_GROUP_CNOTS) {
        gates.push(Gate::Cnot { control, target });
    }
    if mode == QuantumMode::Interference {
        gates.extend((0..QUBITS).map(|qubit| Gate::H { qubit }));
    }
    CircuitSpec { gates, mode }
}

/// Builds a circuit from raw angles, checking arity and range.
pub fn build_circuit_from_slice(angles: &[f64], mode: QuantumMode) -> Result<CircuitSpec> {
    Ok(build_circuit(&AngleVector::from_slice(angles)?, mode))
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    pub amplitudes: Vec<Complex64>,
}

impl QuantumState {
    pub fn ground() -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); STATES];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        QuantumState { amplitudes }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply(&mut self, gate: &Gate) {
        match *gate {
            Gate::Cnot { control, target } => {
                let (cm, tm) = (1usize << control, 1usize << target);
                for i in 0..STATES {
                    if i & cm != 0 && i & tm == 0 {
                        self.amplitudes.swap(i, i | tm);
                    }
                }
            }
            Gate::H { qubit } | Gate::Rx { qubit, .. } | Gate::Ry { qubit, .. } | Gate::Rz { qubit, .. } => {
                let m = gate.matrix().expect("single-qubit gate");
                let mask = 1usize << qubit;
                for i in (0..STATES).filter(|i| i & mask == 0) {
                    let (a0, a1) = (self.amplitudes[i], self.amplitudes[i | mask]);
                    self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                    self.amplitudes[i | mask] = m[1][0] * a0 + m[1][1] * a1;
                }
            }
        }
    }
}

pub fn simulate(spec: &CircuitSpec) -> QuantumState {
    let mut state = QuantumState::ground();
    for gate in &spec.gates {
        state.apply(gate);
    }
    state
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementDistribution {
    pub probabilities: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<Vec<u64>>,
    pub shots: u64,
    pub seed: u64,
}

impl MeasurementDistribution {
    pub fn from_probabilities(probabilities: Vec<f64>) -> Self {
        MeasurementDistribution { probabilities, counts: None, shots: 0, seed: 0 }
    }

    pub fn uniform() -> Self {
        Self::from_probabilities(vec![1.0 / STATES as f64; STATES])
    }

    /// Basis index with the highest probability (lowest index on ties).
    pub fn mode_index(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probabilities.iter().enumerate() {
            if p > self.probabilities[best] {
                best = i;
            }
        }
        best
    }
}

/// Bitstring of a basis index with qubit 8 leftmost.
pub fn bitstring(index: usize) -> String {
    format!("{index:0width$b}", width = QUBITS)
}

pub fn exact_probabilities(state: &QuantumState) -> Result<MeasurementDistribution> {
    let norm = state.norm_sqr();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(norm));
    }
    Ok(MeasurementDistribution::from_probabilities(state.amplitudes.iter().map(|a| a.norm_sqr()).collect()))
}

/// Uniform deviate in `[0, 1)` from the top 53 bits of a PCG-64 output.
fn next_unit(rng: &mut Pcg64) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Draws `shots` outcomes by inverse-CDF sampling from a PCG-64 (XSL-RR 128/64)
/// stream seeded with `seed`. The result holds the counts and their relative
/// frequencies.
pub fn sample(dist: &MeasurementDistribution, shots: u64, seed: u64) -> Result<MeasurementDistribution> {
    if shots == 0 {
        return Err(Error::InvalidShots);
    }
    let mut cdf = Vec::with_capacity(dist.probabilities.len());
    let mut acc = 0.0;
    for &p in &dist.probabilities {
        acc += p;
        cdf.push(acc);
    }
    let last_nonzero = dist.probabilities.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let mut rng = Pcg64::seed_from_u64(seed);
    let mut counts = vec![0u64; dist.probabilities.len()];
    for _ in 0..shots {
        let u = next_unit(&mut rng) * acc;
        let idx = cdf.partition_point(|&c| c <= u).min(last_nonzero);
        counts[idx] += 1;
    }
    let probabilities = counts.iter().map(|&c| c as f64 / shots as f64).collect();
    Ok(MeasurementDistribution { probabilities, counts: Some(counts), shots, seed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumSignature {
    pub mode: QuantumMode,
    pub bit_order: String,
    pub exact: MeasurementDistribution,
    pub sampled: MeasurementDistribution,
}

pub fn quantum_signature(angles: &AngleVector, mode: QuantumMode, shots: u64, seed: u64) -> Result<QuantumSignature> {
    let exact = exact_probabilities(&simulate(&build_circuit(angles, mode)))?;
    let sampled = sample(&exact, shots, seed)?;
    Ok(QuantumSignature { mode, bit_order: BIT_ORDER.to_string(), exact, sampled })
}

/// Convenience for callers holding raw angles.
pub fn exact_distribution(angles: &[f64], mode: QuantumMode) -> Result<Vec<f64>> {
    if angles.len() != ANGLE_COUNT {
        return Err(Error::WrongArity { expected: ANGLE_COUNT, got: angles.len() });
    }
    let spec = build_circuit_from_slice(angles, mode)?;
    Ok(exact_probabilities(&simulate(&spec))?.probabilities)
}


#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, TAU};

    fn random_angles(seed: u64) -> AngleVector {
        let mut rng = Pcg64::seed_from_u64(seed);
        AngleVector { angles: std::array::from_fn(|_| next_unit(&mut rng) * TAU) }
    }

    fn probs(angles: &AngleVector, mode: QuantumMode) -> Vec<f64> {
        exact_probabilities(&simulate(&build_circuit(angles, mode))).unwrap().probabilities
    }

    fn js(p: &[f64], q: &[f64]) -> f64 {
        crate::compare::js_divergence_slices(p, q).unwrap()
    }

    #[test]
    fn gate_counts_and_order() {
        let spec = build_circuit(&AngleVector::zeros(), QuantumMode::Faithful);
        assert_eq!(spec.gates.len(), 28);
        assert!(spec.gates[..9].iter().enumerate().all(|(i, g)| *g == Gate::H { qubit: i }));
        assert_eq!(spec.gates[9], Gate::Rx { qubit: 0, theta: 0.0 });
        assert_eq!(spec.gates[12], Gate::Ry { qubit: 3, theta: 0.0 });
        assert_eq!(spec.gates[17], Gate::Rz { qubit: 8, theta: 0.0 });
        let cnots: Vec<_> = spec.gates[18..]
            .iter()
            .map(|g| match g {
                Gate::Cnot { control, target } => (*control, *target),
                _ => panic!("expected cnot"),
            })
            .collect();
        assert_eq!(cnots, vec![(0, 1), (1, 2), (3, 4), (4, 5), (6, 7), (7, 8), (2, 3), (1, 4), (0, 6), (5, 7)]);
        assert_eq!(build_circuit(&AngleVector::zeros(), QuantumMode::Interference).gates.len(), 37);
    }

    #[test]
    fn single_angle_changes_single_gate() {
        let mut a = AngleVector::zeros();
        a.angles[3] = FRAC_PI_2;
        let (zero, one) = (build_circuit(&AngleVector::zeros(), QuantumMode::Faithful), build_circuit(&a, QuantumMode::Faithful));
        let diffs: Vec<usize> = (0..28).filter(|&i| zero.gates[i] != one.gates[i]).collect();
        assert_eq!(diffs, vec![12]);
    }

    #[test]
    fn wrong_arity_is_rejected() {
        assert!(matches!(
            build_circuit_from_slice(&[0.0; 10], QuantumMode::Faithful),
            Err(Error::WrongArity { expected: 9, got: 10 })
        ));
    }

    #[test]
    fn zero_angles_are_uniform() {
        for p in probs(&AngleVector::zeros(), QuantumMode::Faithful) {
            assert!((p - 1.0 / 512.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ry_quarter_turn_matches_oracle() {
        let mut a = AngleVector::zeros();
        a.angles[3] = FRAC_PI_2;
        let spec = build_circuit(&a, QuantumMode::Faithful);
        let fast = probs(&a, QuantumMode::Faithful);
        let slow = oracle::probabilities(&spec);
        for (x, y) in fast.iter().zip(&slow) {
            assert!((x - y).abs() < 1e-10);
        }
        assert!(js(&fast, &MeasurementDistribution::uniform().probabilities) > 0.0);
    }

    #[test]
    fn random_angles_match_oracle_both_modes() {
        for seed in 0..4 {
            for mode in [QuantumMode::Faithful, QuantumMode::Interference] {
                let a = random_angles(seed);
                let fast = probs(&a, mode);
                let slow = oracle::probabilities(&build_circuit(&a, mode));
                for (x, y) in fast.iter().zip(&slow) {
                    assert!((x - y).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn normalization_holds_after_every_gate() {
        let spec = build_circuit(&random_angles(9), QuantumMode::Interference);
        let mut state = QuantumState::ground();
        for g in &spec.gates {
            state.apply(g);
            assert!((state.norm_sqr() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn cnot_layers_permute_magnitudes() {
        let mut state = simulate(&CircuitSpec {
            gates: build_circuit(&random_angles(3), QuantumMode::Faithful).gates[..18].to_vec(),
            mode: QuantumMode::Faithful,
        });
        let mut before: Vec<f64> = state.amplitudes.iter().map(|a| a.norm()).collect();
        for (control, target) in INTRA_GROUP_CNOTS.into_iter().chain(CROSS_GROUP_CNOTS) {
            state.apply(&Gate::Cnot { control, target });
        }
        let mut after: Vec<f64> = state.amplitudes.iter().map(|a| a.norm()).collect();
        before.sort_by(f64::total_cmp);
        after.sort_by(f64::total_cmp);
        assert_eq!(before, after);
    }

    #[test]
    fn faithful_mode_ignores_rx_and_rz_groups() {
        for seed in 0..100 {
            let a = random_angles(seed);
            let mut only_ry = a;
            for i in (0..3).chain(6..9) {
                only_ry.angles[i] = 0.0;
            }
            let (p, q) = (probs(&a, QuantumMode::Faithful), probs(&only_ry, QuantumMode::Faithful));
            for (x, y) in p.iter().zip(&q) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ry_difference_changes_faithful_distribution() {
        let a = random_angles(11);
        let mut b = a;
        b.angles[4] = (b.angles[4] + 1.0) % TAU;
        assert!(js(&probs(&a, QuantumMode::Faithful), &probs(&b, QuantumMode::Faithful)) > 0.0);
    }

    #[test]
    fn interference_mode_sees_ry_and_rz_groups() {
        for seed in 100..110 {
            let base = random_angles(seed);
            let p = probs(&base, QuantumMode::Interference);
            for i in 3..ANGLE_COUNT {
                let mut b = base;
                b.angles[i] = (b.angles[i] + FRAC_PI_2) % TAU;
                assert!(js(&p, &probs(&b, QuantumMode::Interference)) > 1e-4, "seed {seed} angle {i}");
            }
        }
    }

    #[test]
    fn rx_group_is_a_global_phase_in_both_modes() {
        // Rx acts on H|0> = |+>, one of its eigenvectors.
        for seed in 200..220 {
            let base = random_angles(seed);
            let mut b = base;
            b.angles[..3].copy_from_slice(&[0.0; 3]);
            for mode in [QuantumMode::Faithful, QuantumMode::Interference] {
                for (x, y) in probs(&base, mode).iter().zip(&probs(&b, mode)) {
                    assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn exact_probabilities_rejects_unnormalized() {
        let mut s = QuantumState::ground();
        s.amplitudes[1] = Complex64::new(1.0, 0.0);
        assert!(matches!(exact_probabilities(&s), Err(Error::NotNormalized(_))));
        let ground = exact_probabilities(&QuantumState::ground()).unwrap();
        assert_eq!(ground.probabilities[0], 1.0);
        assert_eq!(ground.shots, 0);
        assert!(ground.counts.is_none());
    }

    #[test]
    fn sampling_is_deterministic_and_exact_on_spikes() {
        let mut spike = vec![0.0; STATES];
        spike[37] = 1.0;
        let d = sample(&MeasurementDistribution::from_probabilities(spike), 1000, 1).unwrap();
        assert_eq!(d.counts.as_ref().unwrap()[37], 1000);
        let u = MeasurementDistribution::uniform();
        assert_eq!(sample(&u, 8192, 5).unwrap(), sample(&u, 8192, 5).unwrap());
        assert_ne!(sample(&u, 8192, 5).unwrap().counts, sample(&u, 8192, 6).unwrap().counts);
        let s = sample(&u, 8192, 5).unwrap();
        assert_eq!(s.counts.unwrap().iter().sum::<u64>(), 8192);
        assert!((s.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(matches!(sample(&u, 0, 1), Err(Error::InvalidShots)));
    }

    #[test]
    fn sampling_close_to_uniform() {
        let u = MeasurementDistribution::uniform();
        let good = (0..100).filter(|&seed| js(&sample(&u, 8192, seed).unwrap().probabilities, &u.probabilities) < 0.05).count();
        assert!(good >= 95);
    }

    #[test]
    fn bitstrings_put_qubit_zero_last() {
        assert_eq!(bitstring(1), "000000001");
        assert_eq!(bitstring(256), "100000000");
    }

    #[test]
    fn mode_parsing_round_trips() {
        for m in [QuantumMode::Faithful, QuantumMode::Interference] {
            assert_eq!(m.to_string().parse::<QuantumMode>().unwrap(), m);
        }
        assert!("noisy".parse::<QuantumMode>().is_err());
    }
}
