//! Haar-random reference states and Monte Carlo estimates of the mean
//! success and error probabilities.
//!
//! Randomness contract: sample `i` of a run seeded with `seed` draws from
//! its own ChaCha20 stream, `ChaCha20Rng::seed_from_u64(seed)` with stream
//! id `i`. Results therefore do not depend on how samples are spread over
//! worker threads. Complex Gaussian amplitudes use the Box-Muller transform,
//! consuming two uniform draws per amplitude (real and imaginary part).

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::linalg::{c64, kron_vec, operator_norm, ComplexMatrix, C64};
use crate::povm::{Outcome, Povm};
use crate::symmetry::{symmetric_projector, DimensionTable};

/// Independent random stream for sample `index` of a run seeded by `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Two independent standard normal deviates from two uniform draws.
pub fn gaussian_pair<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    // (0, 1] keeps the logarithm finite.
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    let radius = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (TAU * u2).sin_cos();
    (radius * c, radius * s)
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let (re, im) = gaussian_pair(rng);
    c64(re, im)
}

/// Unit vector in `C^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// Normalizes `amplitudes`; fails on an empty or zero vector.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if amplitudes.is_empty() || norm == 0.0 {
            return Err(Error::InvalidDimension(0));
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|z| z / norm).collect(),
        })
    }

    pub fn basis(d: usize, k: usize) -> Self {
        let mut amplitudes = vec![C64::default(); d];
        amplitudes[k] = c64(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn density_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes).expect("same length")
    }
}

/// Unitarily invariant random pure state on `C^d`.
pub fn haar_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> StateVector {
    assert!(d >= 1, "dimension must be positive");
    loop {
        let amplitudes: Vec<C64> = (0..d).map(|_| complex_gaussian(rng)).collect();
        if let Ok(state) = StateVector::normalized(amplitudes) {
            return state;
        }
    }
}

/// Haar-random unitary on `C^d` (QR of a complex Ginibre matrix with the
/// phases of `R`'s diagonal moved into `Q`).
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let ginibre = DMatrix::from_fn(d, d, |_, _| complex_gaussian(rng));
    let qr = ginibre.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases: Vec<C64> = (0..d)
        .map(|k| {
            let x = r[(k, k)];
            if x.norm() == 0.0 {
                c64(1.0, 0.0)
            } else {
                x / x.norm()
            }
        })
        .collect();
    ComplexMatrix::from_fn(d, |i, j| q[(i, j)] * phases[j])
}

/// `input ⊗ first ⊗ second` as a vector on `(C^d)^{⊗3}`.
pub fn product_state(input: &StateVector, first: &StateVector, second: &StateVector) -> Vec<C64> {
    kron_vec(
        input.amplitudes(),
        &kron_vec(first.amplitudes(), second.amplitudes()),
    )
}

/// Per-instance outcome probabilities, averaged over which reference the
/// input equals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InstanceProbabilities {
    pub success: f64,
    pub error: f64,
    pub inconclusive: f64,
}

impl InstanceProbabilities {
    pub fn total(&self) -> f64 {
        self.success + self.error + self.inconclusive
    }
}

pub fn instance_probabilities(
    p: &Povm,
    first: &StateVector,
    second: &StateVector,
) -> Result<InstanceProbabilities> {
    for phi in [first, second] {
        if phi.dim() != p.d() {
            return Err(Error::DimensionMismatch {
                expected: p.d(),
                actual: phi.dim(),
            });
        }
    }
    let input_first = product_state(first, first, second);
    let input_second = product_state(second, first, second);
    let sandwich = |o: Outcome, v: &[C64]| p.element(o).expectation(v);
    Ok(InstanceProbabilities {
        success: 0.5
            * (sandwich(Outcome::First, &input_first) + sandwich(Outcome::Second, &input_second)),
        error: 0.5
            * (sandwich(Outcome::First, &input_second) + sandwich(Outcome::Second, &input_first)),
        inconclusive: 0.5
            * (sandwich(Outcome::Inconclusive, &input_first)
                + sandwich(Outcome::Inconclusive, &input_second)),
    })
}

/// Runs `f(0..n)` on `workers` threads, worker `w` taking indices `≡ w mod
/// workers`, and returns the results in index order.
pub fn map_indexed<T, F>(n: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = workers.clamp(1, n.max(1));
    if workers == 1 {
        return (0..n).map(f).collect();
    }
    let per_worker: Vec<Vec<T>> = std::thread::scope(|scope| {
        let f = &f;
        let handles: Vec<_> = (0..workers)
            .map(|w| scope.spawn(move || (w..n).step_by(workers).map(f).collect::<Vec<T>>()))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    let mut streams: Vec<_> = per_worker.into_iter().map(Vec::into_iter).collect();
    (0..n)
        .map(|i| streams[i % workers].next().expect("one result per index"))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct McReport {
    pub n_samples: usize,
    pub seed: u64,
    pub mean_success: f64,
    /// Sample standard deviation over `sqrt(n_samples)`.
    pub stderr_success: f64,
    pub mean_error: f64,
    pub max_error_sample: f64,
    pub mean_inconclusive: f64,
    /// Smallest and largest single outcome probability seen.
    pub probability_range: (f64, f64),
    /// Largest `|success + error + inconclusive - 1|` over samples.
    pub max_total_residual: f64,
}

/// The two Haar reference states of sample `index`.
pub fn sample_references(d: usize, seed: u64, index: u64) -> (StateVector, StateVector) {
    let mut rng = sample_rng(seed, index);
    let first = haar_state(d, &mut rng);
    let second = haar_state(d, &mut rng);
    (first, second)
}

pub fn run_monte_carlo(p: &Povm, n_samples: usize, seed: u64, workers: usize) -> Result<McReport> {
    if n_samples == 0 {
        return Err(Error::ZeroSamples);
    }
    let d = p.d();
    let samples = map_indexed(n_samples, workers, |i| {
        let (first, second) = sample_references(d, seed, i as u64);
        instance_probabilities(p, &first, &second).expect("dimensions checked")
    });

    let n = n_samples as f64;
    let mean_success = samples.iter().map(|s| s.success).sum::<f64>() / n;
    let mean_error = samples.iter().map(|s| s.error).sum::<f64>() / n;
    let mean_inconclusive = samples.iter().map(|s| s.inconclusive).sum::<f64>() / n;
    let variance = if n_samples > 1 {
        samples
            .iter()
            .map(|s| (s.success - mean_success).powi(2))
            .sum::<f64>()
            / (n - 1.0)
    } else {
        0.0
    };
    let max_error_sample = samples
        .iter()
        .map(|s| s.error)
        .fold(f64::NEG_INFINITY, f64::max);
    let probability_range =
        samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                let values = [s.success, s.error, s.inconclusive];
                (
                    values.iter().copied().fold(lo, f64::min),
                    values.iter().copied().fold(hi, f64::max),
                )
            });
    let max_total_residual = samples
        .iter()
        .map(|s| (s.total() - 1.0).abs())
        .fold(0.0, f64::max);

    Ok(McReport {
        n_samples,
        seed,
        mean_success,
        stderr_success: (variance / n).sqrt(),
        mean_error,
        max_error_sample,
        mean_inconclusive,
        probability_range,
        max_total_residual,
    })
}

/// Empirical `<rho^{⊗n}>` over `n_samples` Haar states.
pub fn empirical_moment(
    n_copies: usize,
    d: usize,
    n_samples: usize,
    seed: u64,
) -> Result<ComplexMatrix> {
    if !(1..=3).contains(&n_copies) {
        return Err(Error::UnsupportedCopies(n_copies));
    }
    if n_samples == 0 {
        return Err(Error::ZeroSamples);
    }
    let dim = d.pow(n_copies as u32);
    let mut acc = vec![C64::default(); dim * dim];
    for i in 0..n_samples {
        let mut rng = sample_rng(seed, i as u64);
        let phi = haar_state(d, &mut rng);
        let mut v = phi.amplitudes().to_vec();
        for _ in 1..n_copies {
            v = kron_vec(&v, phi.amplitudes());
        }
        for r in 0..dim {
            for c in 0..dim {
                acc[r * dim + c] += v[r] * v[c].conj();
            }
        }
    }
    let scale = 1.0 / n_samples as f64;
    ComplexMatrix::from_row_major(dim, acc.into_iter().map(|z| z * scale).collect())
}

/// `||<rho^{⊗n}>_empirical - S_n / d_n||`.
pub fn moment_check(n_copies: usize, d: usize, n_samples: usize, seed: u64) -> Result<f64> {
    let empirical = empirical_moment(n_copies, d, n_samples, seed)?;
    let d_n = DimensionTable::new(d as u64).symmetric_powers[n_copies - 1] as f64;
    let exact = symmetric_projector(n_copies, d).scale(1.0 / d_n);
    Ok(operator_norm(&(empirical - exact)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eig;
    use crate::povm::global_optimal_povm;

    #[test]
    fn haar_states_are_normalized() {
        for d in 1..=6 {
            for seed in 0..20 {
                let mut rng = sample_rng(seed, 3);
                let phi = haar_state(d, &mut rng);
                assert!((phi.norm() - 1.0).abs() <= 1e-12);
            }
        }
        let phi = haar_state(1, &mut sample_rng(9, 0));
        assert!((phi.amplitudes()[0].norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn substreams_are_reproducible_and_distinct() {
        let a = sample_references(3, 11, 5);
        let b = sample_references(3, 11, 5);
        let c = sample_references(3, 11, 6);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn mean_state_is_maximally_mixed() {
        // n = 1 moment is <|phi><phi|> = I/d.
        let residual = moment_check(1, 2, 100_000, 1).unwrap();
        assert!(residual <= 0.02, "{residual}");
    }

    #[test]
    fn second_moment_projector_has_unit_trace() {
        let s2 = symmetric_projector(2, 2).scale(1.0 / 3.0);
        assert!((s2.trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn moment_arguments() {
        assert_eq!(
            moment_check(4, 2, 10, 0).unwrap_err(),
            Error::UnsupportedCopies(4)
        );
        assert_eq!(moment_check(2, 2, 0, 0).unwrap_err(), Error::ZeroSamples);
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = sample_rng(4, 0);
        for d in 1..=5 {
            let u = haar_unitary(d, &mut rng);
            let gram = &u.adjoint() * &u;
            assert!(operator_norm(&(gram - ComplexMatrix::identity(d))) < 1e-12);
        }
    }

    #[test]
    fn equal_references_give_equal_success_and_error() {
        let p = global_optimal_povm(3).unwrap();
        let phi = haar_state(3, &mut sample_rng(2, 0));
        let probs = instance_probabilities(&p, &phi, &phi).unwrap();
        assert!((probs.success - probs.error).abs() < 1e-14);
    }

    #[test]
    fn trivial_measurement_is_always_inconclusive() {
        let p = Povm::trivial(2).unwrap();
        let (a, b) = sample_references(2, 0, 0);
        let probs = instance_probabilities(&p, &a, &b).unwrap();
        assert_eq!(probs.success, 0.0);
        assert_eq!(probs.error, 0.0);
        assert!((probs.inconclusive - 1.0).abs() < 1e-14);
    }

    #[test]
    fn orthogonal_references_are_never_confused() {
        let p = global_optimal_povm(2).unwrap();
        let probs =
            instance_probabilities(&p, &StateVector::basis(2, 0), &StateVector::basis(2, 1))
                .unwrap();
        assert!(probs.error.abs() <= 1e-12);
        assert!((probs.total() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = global_optimal_povm(2).unwrap();
        let (a, _) = sample_references(3, 0, 0);
        let (b, _) = sample_references(2, 0, 0);
        assert!(matches!(
            instance_probabilities(&p, &a, &b),
            Err(Error::DimensionMismatch {
                expected: 2,
                actual: 3
            })
        ));
    }

    #[test]
    fn zero_samples_rejected() {
        let p = Povm::trivial(2).unwrap();
        assert_eq!(
            run_monte_carlo(&p, 0, 0, 1).unwrap_err(),
            Error::ZeroSamples
        );
    }

    #[test]
    fn map_indexed_preserves_order() {
        for workers in [1, 2, 3, 7, 50] {
            let out = map_indexed(23, workers, |i| i * i);
            assert_eq!(out, (0..23).map(|i| i * i).collect::<Vec<_>>());
        }
        assert!(map_indexed(0, 4, |i| i).is_empty());
    }

    #[test]
    fn report_is_independent_of_worker_count() {
        let p = global_optimal_povm(2).unwrap();
        let one = run_monte_carlo(&p, 2_000, 17, 1).unwrap();
        let four = run_monte_carlo(&p, 2_000, 17, 4).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn density_matrix_is_rank_one_projector() {
        let (phi, _) = sample_references(4, 3, 1);
        let rho = phi.density_matrix();
        let eig = hermitian_eig(&rho).unwrap();
        assert_eq!(eig.multiplicity(1.0, 1e-12), 1);
        assert_eq!(eig.multiplicity(0.0, 1e-12), 3);
    }
}
