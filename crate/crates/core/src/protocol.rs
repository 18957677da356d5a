//! Two-party measurement protocol realizing the optimal separable
//! measurement with local operations and one-way classical messages.
//!
//! Both parties first measure the permutation sector of their own three
//! subsystems. Depending on the pair of sectors:
//!
//! | Alice | Bob | continuation                                         |
//! |-------|-----|------------------------------------------------------|
//! | S     | S   | inconclusive                                         |
//! | A     | A   | inconclusive                                         |
//! | S / A | A / S | inconclusive, never reached on valid inputs        |
//! | S     | M   | Bob measures `e`, his outcome is the answer          |
//! | A     | M   | Bob measures `e'`                                    |
//! | M     | S   | Alice measures `e`                                   |
//! | M     | A   | Alice measures `e'`                                  |
//! | M     | M   | Alice measures `e_{a1 a2}`, Bob measures `f` (a1 = 1) or `f'` (a1 = 2); answer `a1` if `a2 = b`, else inconclusive |
//!
//! Runs update the global state with the square-root instrument
//! `psi -> sqrt(E) psi / ||sqrt(E) psi||`. All elements met along one branch
//! commute, so the outcome statistics equal those of [`induced_povm`].

use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, operator_norm, psd_sqrt, ComplexMatrix, C64};
use crate::montecarlo::{
    haar_state, map_indexed, product_state, sample_rng, McReport, StateVector,
};
use crate::povm::{
    closed_form_separable, exact_success_probability, optimal_separable_povm, Outcome, Povm,
};
use crate::symmetry::{
    apply_party_operator, embed_local_product, pair_projectors, Party, SectorLabel, SpaceSpec,
    SymmetryOperators,
};

/// Outcomes whose probability falls below this are never sampled.
pub const PROBABILITY_FLOOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    Projective,
    General,
}

#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub name: String,
    pub element: ComplexMatrix,
    /// Kraus operator `sqrt(element)` used for the state update.
    instrument: ComplexMatrix,
}

/// One local measurement by one party. Elements act on the party's own
/// three-system space and sum to `support`.
#[derive(Clone, Debug)]
pub struct MeasurementStep {
    pub id: &'static str,
    pub party: Party,
    pub kind: StepKind,
    pub support: ComplexMatrix,
    pub outcomes: Vec<StepOutcome>,
}

impl MeasurementStep {
    fn new(
        id: &'static str,
        party: Party,
        kind: StepKind,
        support: ComplexMatrix,
        elements: Vec<(String, ComplexMatrix)>,
    ) -> Result<Self> {
        let outcomes = elements
            .into_iter()
            .map(|(name, element)| {
                let instrument = match kind {
                    StepKind::Projective => element.clone(),
                    StepKind::General => psd_sqrt(&element)?,
                };
                Ok(StepOutcome {
                    name,
                    element,
                    instrument,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            id,
            party,
            kind,
            support,
            outcomes,
        })
    }

    pub fn completeness_residual(&self) -> f64 {
        let sum = self
            .outcomes
            .iter()
            .fold(ComplexMatrix::zeros(self.support.dim()), |acc, o| {
                acc + &o.element
            });
        operator_norm(&(sum - &self.support))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.outcomes
            .iter()
            .map(|o| {
                hermitian_eig(&o.element)
                    .map(|e| e.min_eigenvalue())
                    .unwrap_or(f64::NAN)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// For projective steps, the largest `||P_i P_j - delta_ij P_i||`.
    pub fn orthogonality_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, p) in self.outcomes.iter().enumerate() {
            for (j, q) in self.outcomes.iter().enumerate() {
                let product = &p.element * &q.element;
                let target = if i == j {
                    p.element.clone()
                } else {
                    ComplexMatrix::zeros(p.element.dim())
                };
                worst = worst.max(operator_norm(&(product - target)));
            }
        }
        worst
    }

    pub fn outcome(&self, name: &str) -> Option<&StepOutcome> {
        self.outcomes.iter().find(|o| o.name == name)
    }
}

#[derive(Clone, Debug)]
pub enum Node {
    /// A measurement; `children[k]` continues after outcome `k`.
    Measure {
        step: Arc<MeasurementStep>,
        children: Vec<Node>,
    },
    /// Final answer. `reachable` is false for the sector pairs that valid
    /// inputs never produce.
    Leaf { label: Outcome, reachable: bool },
}

#[derive(Clone, Debug)]
pub struct ProtocolTree {
    spec: SpaceSpec,
    root: Node,
}

/// Product of the elements met along one root-to-leaf path, kept as the
/// two party-local factors.
#[derive(Clone, Debug)]
pub struct LeafOperator {
    pub path: Vec<(Party, &'static str, String)>,
    pub label: Outcome,
    pub reachable: bool,
    pub alice: ComplexMatrix,
    pub bob: ComplexMatrix,
}

impl LeafOperator {
    pub fn branch_path(&self) -> String {
        format_path(self.path.iter().map(|(p, s, o)| (*p, *s, o.as_str())))
    }

    pub fn global(&self, spec: &SpaceSpec) -> ComplexMatrix {
        embed_local_product(&self.alice, &self.bob, spec).expect("party dimensions match")
    }
}

fn format_path<'a>(entries: impl Iterator<Item = (Party, &'a str, &'a str)>) -> String {
    let mut out = String::new();
    for (k, (party, step, outcome)) in entries.enumerate() {
        if k > 0 {
            out.push('/');
        }
        let _ = write!(out, "{}:{}:{}", party.tag(), step, outcome);
    }
    out
}

impl ProtocolTree {
    pub fn spec(&self) -> &SpaceSpec {
        &self.spec
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Every distinct step instance, in depth-first order.
    pub fn steps(&self) -> Vec<Arc<MeasurementStep>> {
        fn walk(node: &Node, out: &mut Vec<Arc<MeasurementStep>>) {
            if let Node::Measure { step, children } = node {
                if !out.iter().any(|s| Arc::ptr_eq(s, step)) {
                    out.push(step.clone());
                }
                for child in children {
                    walk(child, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    pub fn leaves(&self) -> Vec<LeafOperator> {
        fn walk(
            node: &Node,
            path: &mut Vec<(Party, &'static str, String)>,
            alice: &ComplexMatrix,
            bob: &ComplexMatrix,
            out: &mut Vec<LeafOperator>,
        ) {
            match node {
                Node::Leaf { label, reachable } => out.push(LeafOperator {
                    path: path.clone(),
                    label: *label,
                    reachable: *reachable,
                    alice: alice.clone(),
                    bob: bob.clone(),
                }),
                Node::Measure { step, children } => {
                    for (outcome, child) in step.outcomes.iter().zip(children) {
                        path.push((step.party, step.id, outcome.name.clone()));
                        match step.party {
                            Party::Alice => {
                                walk(child, path, &(alice * &outcome.element), bob, out)
                            }
                            Party::Bob => walk(child, path, alice, &(bob * &outcome.element), out),
                        }
                        path.pop();
                    }
                }
            }
        }
        let alice = ComplexMatrix::identity(self.spec.party_space_dim(Party::Alice));
        let bob = ComplexMatrix::identity(self.spec.party_space_dim(Party::Bob));
        let mut out = Vec::new();
        walk(&self.root, &mut Vec::new(), &alice, &bob, &mut out);
        out
    }

    /// Largest commutator norm between two elements met on a common branch.
    ///
    /// Elements of different parties commute identically once embedded, and
    /// embedding `X ⊗ 1` preserves the norm of a same-party commutator, so
    /// the local computation equals the embedded one.
    pub fn max_branch_commutator(&self) -> f64 {
        fn walk<'a>(node: &'a Node, seen: &mut Vec<(Party, &'a ComplexMatrix)>, worst: &mut f64) {
            if let Node::Measure { step, children } = node {
                for (outcome, child) in step.outcomes.iter().zip(children) {
                    for (party, earlier) in seen.iter() {
                        if *party == step.party {
                            *worst =
                                worst.max(operator_norm(&earlier.commutator(&outcome.element)));
                        }
                    }
                    seen.push((step.party, &outcome.element));
                    walk(child, seen, worst);
                    seen.pop();
                }
            }
        }
        let mut worst = 0.0;
        walk(&self.root, &mut Vec::new(), &mut worst);
        worst
    }
}

fn named(elements: Vec<(&str, ComplexMatrix)>) -> Vec<(String, ComplexMatrix)> {
    elements
        .into_iter()
        .map(|(n, m)| (n.to_string(), m))
        .collect()
}

fn sector_step(ops: &SymmetryOperators, party: Party) -> Result<MeasurementStep> {
    let elements = SectorLabel::ALL
        .iter()
        .map(|&label| (label.symbol(), ops.sectors.sector(label).clone()))
        .collect();
    MeasurementStep::new(
        "sector",
        party,
        StepKind::Projective,
        ops.identity(),
        named(elements),
    )
}

/// `{e0, e1, e2}` (`primed = false`) or `{e'0, e'1, e'2}` on the mixed sector.
fn answer_step(ops: &SymmetryOperators, party: Party, primed: bool) -> Result<MeasurementStep> {
    let mixed = &ops.sectors.mixed;
    let (p02, p01, sign, id) = if primed {
        (
            &ops.pair02.symmetric,
            &ops.pair01.symmetric,
            -2.0,
            "e_prime",
        )
    } else {
        (
            &ops.pair02.antisymmetric,
            &ops.pair01.antisymmetric,
            2.0,
            "e",
        )
    };
    let shifted = ops.identity() + &ops.swaps.average.scale(sign);
    let elements = vec![
        ("0", (mixed * &shifted).scale(1.0 / 3.0)),
        ("1", (mixed * p02).scale(2.0 / 3.0)),
        ("2", (mixed * p01).scale(2.0 / 3.0)),
    ];
    MeasurementStep::new(id, party, StepKind::General, mixed.clone(), named(elements))
}

/// Four-outcome `e_{a1 a2}` on the leading party's mixed sector.
fn pair_step(ops: &SymmetryOperators, party: Party) -> Result<MeasurementStep> {
    let mixed = &ops.sectors.mixed;
    let elements = vec![
        ("11", (mixed * &ops.pair02.antisymmetric).scale(0.5)),
        ("12", (mixed * &ops.pair02.symmetric).scale(0.5)),
        ("21", (mixed * &ops.pair01.antisymmetric).scale(0.5)),
        ("22", (mixed * &ops.pair01.symmetric).scale(0.5)),
    ];
    MeasurementStep::new(
        "e_pair",
        party,
        StepKind::General,
        mixed.clone(),
        named(elements),
    )
}

/// The follower's `{f1, f2}` (pair 02, after `a1 = 1`) or `{f'1, f'2}` (pair 01).
fn conditional_step(
    ops: &SymmetryOperators,
    party: Party,
    primed: bool,
) -> Result<MeasurementStep> {
    let mixed = &ops.sectors.mixed;
    let (pair, id) = if primed {
        (&ops.pair01, "f_prime")
    } else {
        (&ops.pair02, "f")
    };
    let elements = vec![
        ("1", mixed * &pair.symmetric),
        ("2", mixed * &pair.antisymmetric),
    ];
    MeasurementStep::new(
        id,
        party,
        StepKind::Projective,
        mixed.clone(),
        named(elements),
    )
}

fn answer_leaves() -> Vec<Node> {
    Outcome::ALL
        .iter()
        .map(|&label| Node::Leaf {
            label,
            reachable: true,
        })
        .collect()
}

/// Protocol tree in which Alice leads when both parties land in the mixed
/// sector.
pub fn build_protocol(spec: &SpaceSpec) -> Result<ProtocolTree> {
    build_protocol_with_leader(spec, Party::Alice)
}

/// Protocol tree with `leader` measuring the pair step on the mixed/mixed
/// branch and the other party answering with the conditional step.
pub fn build_protocol_with_leader(spec: &SpaceSpec, leader: Party) -> Result<ProtocolTree> {
    use SectorLabel::*;

    let a = SymmetryOperators::new(spec.d_a());
    let b = SymmetryOperators::new(spec.d_b());

    let sector_a = Arc::new(sector_step(&a, Party::Alice)?);
    let sector_b = Arc::new(sector_step(&b, Party::Bob)?);
    let e_a = Arc::new(answer_step(&a, Party::Alice, false)?);
    let e_prime_a = Arc::new(answer_step(&a, Party::Alice, true)?);
    let e_b = Arc::new(answer_step(&b, Party::Bob, false)?);
    let e_prime_b = Arc::new(answer_step(&b, Party::Bob, true)?);
    let (lead_ops, follow_ops) = match leader {
        Party::Alice => (&a, &b),
        Party::Bob => (&b, &a),
    };
    let pair = Arc::new(pair_step(lead_ops, leader)?);
    let f = Arc::new(conditional_step(follow_ops, leader.other(), false)?);
    let f_prime = Arc::new(conditional_step(follow_ops, leader.other(), true)?);

    let both_mixed = || {
        let children = [(1u8, 1u8), (1, 2), (2, 1), (2, 2)]
            .iter()
            .map(|&(a1, a2)| {
                let step = if a1 == 1 { f.clone() } else { f_prime.clone() };
                let children = [1u8, 2]
                    .iter()
                    .map(|&reply| {
                        let label = if a2 == reply {
                            Outcome::from_label(a1).expect("1 or 2")
                        } else {
                            Outcome::Inconclusive
                        };
                        Node::Leaf {
                            label,
                            reachable: true,
                        }
                    })
                    .collect();
                Node::Measure { step, children }
            })
            .collect();
        Node::Measure {
            step: pair.clone(),
            children,
        }
    };
    let answer = |step: &Arc<MeasurementStep>| Node::Measure {
        step: step.clone(),
        children: answer_leaves(),
    };

    let branch = |alice: SectorLabel, bob: SectorLabel| match (alice, bob) {
        (TotallySymmetric, TotallySymmetric) | (TotallyAntisymmetric, TotallyAntisymmetric) => {
            Node::Leaf {
                label: Outcome::Inconclusive,
                reachable: true,
            }
        }
        (TotallySymmetric, TotallyAntisymmetric) | (TotallyAntisymmetric, TotallySymmetric) => {
            Node::Leaf {
                label: Outcome::Inconclusive,
                reachable: false,
            }
        }
        (TotallySymmetric, MixedSymmetric) => answer(&e_b),
        (TotallyAntisymmetric, MixedSymmetric) => answer(&e_prime_b),
        (MixedSymmetric, TotallySymmetric) => answer(&e_a),
        (MixedSymmetric, TotallyAntisymmetric) => answer(&e_prime_a),
        (MixedSymmetric, MixedSymmetric) => both_mixed(),
    };

    let root = Node::Measure {
        step: sector_a,
        children: SectorLabel::ALL
            .iter()
            .map(|&alice| Node::Measure {
                step: sector_b.clone(),
                children: SectorLabel::ALL
                    .iter()
                    .map(|&bob| branch(alice, bob))
                    .collect(),
            })
            .collect(),
    };
    Ok(ProtocolTree {
        spec: spec.clone(),
        root,
    })
}

/// Global measurement effected by the protocol: each leaf contributes the
/// product of its path's elements, summed per final label.
pub fn induced_povm(tree: &ProtocolTree) -> Result<Povm> {
    let spec = tree.spec();
    let n = spec.global_dim();
    let mut sums = [
        ComplexMatrix::zeros(n),
        ComplexMatrix::zeros(n),
        ComplexMatrix::zeros(n),
    ];
    for leaf in tree.leaves() {
        let slot = &mut sums[leaf.label.label() as usize];
        *slot = std::mem::replace(slot, ComplexMatrix::zeros(0)) + &leaf.global(spec);
    }
    Povm::new(spec.d(), sums)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub party: Party,
    pub step: &'static str,
    pub outcome: String,
}

/// Classical record of one protocol run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
    pub final_label: Outcome,
    pub reached_unreachable: bool,
}

impl Transcript {
    /// `party:step:outcome` records joined by `/`, e.g. `a:sector:M/b:sector:S/a:e:1`.
    pub fn branch_path(&self) -> String {
        format_path(
            self.entries
                .iter()
                .map(|e| (e.party, e.step, e.outcome.as_str())),
        )
    }
}

/// One run of the protocol on `input ⊗ first ⊗ second`.
pub fn simulate_run<R: Rng + ?Sized>(
    tree: &ProtocolTree,
    input: &StateVector,
    first: &StateVector,
    second: &StateVector,
    rng: &mut R,
) -> Result<Transcript> {
    let spec = tree.spec();
    for phi in [input, first, second] {
        if phi.dim() != spec.d() {
            return Err(Error::DimensionMismatch {
                expected: spec.d(),
                actual: phi.dim(),
            });
        }
    }
    let mut state = product_state(input, first, second);
    let mut entries = Vec::new();
    let mut node = tree.root();
    loop {
        match node {
            Node::Leaf { label, reachable } => {
                return Ok(Transcript {
                    entries,
                    final_label: *label,
                    reached_unreachable: !reachable,
                });
            }
            Node::Measure { step, children } => {
                let branches = step
                    .outcomes
                    .iter()
                    .map(|o| {
                        let v = apply_party_operator(&o.instrument, step.party, spec, &state)?;
                        let p: f64 = v.iter().map(C64::norm_sqr).sum();
                        Ok((v, if p >= PROBABILITY_FLOOR { p } else { 0.0 }))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let total: f64 = branches.iter().map(|(_, p)| p).sum();
                if total == 0.0 {
                    return Err(Error::NumericalUnderflow(step.id.to_string()));
                }
                let target = rng.random::<f64>() * total;
                let mut cumulative = 0.0;
                let mut chosen = branches
                    .iter()
                    .rposition(|(_, p)| *p > 0.0)
                    .expect("total > 0");
                for (k, (_, p)) in branches.iter().enumerate() {
                    cumulative += p;
                    if *p > 0.0 && target < cumulative {
                        chosen = k;
                        break;
                    }
                }
                let (v, p) = &branches[chosen];
                let scale = 1.0 / p.sqrt();
                state = v.iter().map(|z| z * scale).collect();
                entries.push(TranscriptEntry {
                    party: step.party,
                    step: step.id,
                    outcome: step.outcomes[chosen].name.clone(),
                });
                node = &children[chosen];
            }
        }
    }
}

/// Residuals between the protocol and the optimal separable measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport {
    /// `||induced E_mu - E_mu^L||` by outcome label.
    pub element_residuals: [f64; 3],
    /// Trace-form success probability of the induced measurement minus the closed form.
    pub probability_difference: f64,
    /// `||sum of leaf operators - 1||`.
    pub leaf_completeness_residual: f64,
    /// Largest `||sum of step elements - support||` over all steps.
    pub step_completeness_residual: f64,
    /// Smallest eigenvalue of any step element.
    pub min_step_eigenvalue: f64,
    /// Largest commutator between elements on a common branch.
    pub max_commutator: f64,
    /// Largest `||L S(01)||`, `||L S(02)||` over unreachable leaves `L`.
    pub unreachable_weight: f64,
}

impl EquivalenceReport {
    pub fn max_element_residual(&self) -> f64 {
        self.element_residuals.iter().copied().fold(0.0, f64::max)
    }
}

pub fn verify_equivalence(tree: &ProtocolTree) -> Result<EquivalenceReport> {
    let spec = tree.spec();
    let induced = induced_povm(tree)?;
    let closed = optimal_separable_povm(spec)?;
    let element_residuals = induced.element_distances(&closed)?;
    let probability_difference = exact_success_probability(&induced)
        - closed_form_separable(spec.d_a() as u64, spec.d_b() as u64);

    let leaves = tree.leaves();
    let n = spec.global_dim();
    let mut total = ComplexMatrix::zeros(n);
    let mut unreachable_weight = 0.0f64;
    let s01 = pair_projectors(0, 1, spec.d())?.symmetric;
    let s02 = pair_projectors(0, 2, spec.d())?.symmetric;
    for leaf in &leaves {
        let global = leaf.global(spec);
        if !leaf.reachable {
            unreachable_weight = unreachable_weight
                .max(operator_norm(&(&global * &s01)))
                .max(operator_norm(&(&global * &s02)));
        }
        total = total + &global;
    }
    let leaf_completeness_residual = operator_norm(&(total - ComplexMatrix::identity(n)));

    let steps = tree.steps();
    let step_completeness_residual = steps
        .iter()
        .map(|s| s.completeness_residual())
        .fold(0.0, f64::max);
    let min_step_eigenvalue = steps
        .iter()
        .map(|s| s.min_eigenvalue())
        .fold(f64::INFINITY, f64::min);

    Ok(EquivalenceReport {
        element_residuals,
        probability_difference,
        leaf_completeness_residual,
        step_completeness_residual,
        min_step_eigenvalue,
        max_commutator: tree.max_branch_commutator(),
        unreachable_weight,
    })
}

/// One simulated identification round: fresh Haar references, the input
/// set to one of them with probability 1/2, then a protocol run.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolRun {
    pub index: usize,
    pub input_is_first: bool,
    pub transcript: Transcript,
}

impl ProtocolRun {
    /// Answer names the reference the input was not equal to.
    pub fn is_misidentification(&self) -> bool {
        matches!(
            (self.input_is_first, self.transcript.final_label),
            (true, Outcome::Second) | (false, Outcome::First)
        )
    }

    pub fn is_success(&self) -> bool {
        matches!(
            (self.input_is_first, self.transcript.final_label),
            (true, Outcome::First) | (false, Outcome::Second)
        )
    }
}

/// `n_runs` independent rounds; run `i` uses stream `i` of `seed`, so the
/// result does not depend on `workers`.
pub fn run_protocol(
    tree: &ProtocolTree,
    n_runs: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<ProtocolRun>> {
    if n_runs == 0 {
        return Err(Error::ZeroSamples);
    }
    let d = tree.spec().d();
    map_indexed(n_runs, workers, |index| {
        let mut rng = sample_rng(seed, index as u64);
        let first = haar_state(d, &mut rng);
        let second = haar_state(d, &mut rng);
        let input_is_first = rng.random::<bool>();
        let input = if input_is_first { &first } else { &second };
        let transcript = simulate_run(tree, input, &first, &second, &mut rng)?;
        Ok(ProtocolRun {
            index,
            input_is_first,
            transcript,
        })
    })
    .into_iter()
    .collect()
}

/// Monte Carlo summary of sampled runs, with per-run success, error and
/// inconclusive indicators in place of exact instance probabilities.
pub fn summarize_runs(runs: &[ProtocolRun], seed: u64) -> Result<McReport> {
    if runs.is_empty() {
        return Err(Error::ZeroSamples);
    }
    let n = runs.len() as f64;
    let successes = runs.iter().filter(|r| r.is_success()).count() as f64;
    let errors = runs.iter().filter(|r| r.is_misidentification()).count() as f64;
    let inconclusive = runs
        .iter()
        .filter(|r| r.transcript.final_label == Outcome::Inconclusive)
        .count() as f64;
    let mean_success = successes / n;
    let stderr_success = if runs.len() > 1 {
        (successes * (1.0 - mean_success).powi(2) + (n - successes) * mean_success.powi(2))
            / (n - 1.0)
    } else {
        0.0
    }
    .sqrt()
        / n.sqrt();
    Ok(McReport {
        n_samples: runs.len(),
        seed,
        mean_success,
        stderr_success,
        mean_error: errors / n,
        max_error_sample: if errors > 0.0 { 1.0 } else { 0.0 },
        mean_inconclusive: inconclusive / n,
        probability_range: (0.0, 1.0),
        max_total_residual: 0.0,
    })
}

/// Parsed transcript-file line `run_index,branch,final_label`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TranscriptRecord {
    pub run_index: usize,
    pub branch: String,
    pub final_label: Outcome,
}

pub fn transcript_line(run_index: usize, transcript: &Transcript) -> String {
    format!(
        "{},{},{}",
        run_index,
        transcript.branch_path(),
        transcript.final_label.label()
    )
}

pub fn parse_transcript_line(line: &str) -> Result<TranscriptRecord> {
    let malformed = || Error::MalformedTranscript(line.to_string());
    let mut fields = line.trim_end().split(',');
    let (Some(index), Some(branch), Some(label), None) =
        (fields.next(), fields.next(), fields.next(), fields.next())
    else {
        return Err(malformed());
    };
    let run_index = index.parse().map_err(|_| malformed())?;
    let final_label = label
        .parse::<u8>()
        .ok()
        .and_then(Outcome::from_label)
        .ok_or_else(malformed)?;
    Ok(TranscriptRecord {
        run_index,
        branch: branch.to_string(),
        final_label,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::sample_references;
    use crate::symmetry::embed_party_operator;

    fn find_leaf<'a>(leaves: &'a [LeafOperator], path: &str) -> &'a LeafOperator {
        leaves
            .iter()
            .find(|l| l.branch_path() == path)
            .unwrap_or_else(|| panic!("no leaf {path}"))
    }

    #[test]
    fn qubit_parties_have_no_antisymmetric_sector() {
        let tree = build_protocol(&SpaceSpec::new(2, 2).unwrap()).unwrap();
        let steps = tree.steps();
        let sector_a = steps
            .iter()
            .find(|s| s.id == "sector" && s.party == Party::Alice)
            .unwrap();
        assert_eq!(operator_norm(&sector_a.outcome("A").unwrap().element), 0.0);
        for leaf in tree.leaves().iter().filter(|l| l.path[0].2 == "A") {
            assert_eq!(operator_norm(&leaf.alice), 0.0);
        }
    }

    #[test]
    fn leading_party_does_not_change_induced_measurement() {
        for (d_a, d_b) in [(2, 2), (2, 3)] {
            let spec = SpaceSpec::new(d_a, d_b).unwrap();
            let alice =
                induced_povm(&build_protocol_with_leader(&spec, Party::Alice).unwrap()).unwrap();
            let bob_tree = build_protocol_with_leader(&spec, Party::Bob).unwrap();
            assert!(bob_tree
                .leaves()
                .iter()
                .any(|l| l.branch_path().contains("b:e_pair")));
            let bob = induced_povm(&bob_tree).unwrap();
            for outcome in Outcome::ALL {
                let diff = operator_norm(&(alice.element(outcome) - bob.element(outcome)));
                assert!(diff <= 1e-10, "({d_a},{d_b}) {outcome:?}: {diff:.2e}");
            }
        }
    }

    #[test]
    fn steps_are_complete_and_positive() {
        for (d_a, d_b) in [(2, 2), (2, 3), (1, 2)] {
            let tree = build_protocol(&SpaceSpec::new(d_a, d_b).unwrap()).unwrap();
            let steps = tree.steps();
            assert_eq!(steps.len(), 9);
            for step in steps {
                assert!(
                    step.completeness_residual() <= 1e-12,
                    "{} {:?}",
                    step.id,
                    step.party
                );
                assert!(step.min_eigenvalue() >= -1e-12);
                if step.kind == StepKind::Projective {
                    assert!(step.orthogonality_residual() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn conditional_steps_are_orthogonal_projectors_on_mixed_sector() {
        let tree = build_protocol(&SpaceSpec::new(2, 2).unwrap()).unwrap();
        for id in ["f", "f_prime"] {
            let step = tree.steps().into_iter().find(|s| s.id == id).unwrap();
            assert!(step.orthogonality_residual() <= 1e-12);
            assert!(step.completeness_residual() <= 1e-12);
            assert!(
                operator_norm(&(&step.support - &SymmetryOperators::new(2).sectors.mixed)) == 0.0
            );
        }
    }

    #[test]
    fn symmetric_mixed_branch_reproduces_first_ansatz_term() {
        let spec = SpaceSpec::new(2, 2).unwrap();
        let tree = build_protocol(&spec).unwrap();
        let leaves = tree.leaves();
        let leaf = find_leaf(&leaves, "a:sector:S/b:sector:M/b:e:1");
        assert_eq!(leaf.label, Outcome::First);
        let ops = SymmetryOperators::new(2);
        let expected = embed_local_product(
            &ops.sectors.symmetric,
            &(&ops.sectors.mixed * &ops.pair02.antisymmetric).scale(2.0 / 3.0),
            &spec,
        )
        .unwrap();
        assert!(operator_norm(&(leaf.global(&spec) - expected)) <= 1e-12);
    }

    #[test]
    fn mixed_mixed_labels_follow_agreement_rule() {
        let tree = build_protocol(&SpaceSpec::new(2, 2).unwrap()).unwrap();
        let leaves = tree.leaves();
        let cases = [
            ("a:e_pair:11/b:f:1", Outcome::First),
            ("a:e_pair:11/b:f:2", Outcome::Inconclusive),
            ("a:e_pair:12/b:f:2", Outcome::First),
            ("a:e_pair:21/b:f_prime:1", Outcome::Second),
            ("a:e_pair:22/b:f_prime:1", Outcome::Inconclusive),
            ("a:e_pair:22/b:f_prime:2", Outcome::Second),
        ];
        for (suffix, label) in cases {
            let leaf = find_leaf(&leaves, &format!("a:sector:M/b:sector:M/{suffix}"));
            assert_eq!(leaf.label, label, "{suffix}");
        }
    }

    #[test]
    fn induced_measurement_matches_optimal_separable() {
        let spec = SpaceSpec::new(2, 2).unwrap();
        let tree = build_protocol(&spec).unwrap();
        let induced = induced_povm(&tree).unwrap();
        let closed = optimal_separable_povm(&spec).unwrap();
        for r in induced.element_distances(&closed).unwrap() {
            assert!(r <= 1e-10, "{r}");
        }
        let report = verify_equivalence(&tree).unwrap();
        assert!(report.leaf_completeness_residual <= 1e-10);
        assert!(report.max_commutator <= 1e-12);
        assert!(report.probability_difference.abs() <= 1e-10);
    }

    #[test]
    fn degenerate_party_still_matches() {
        let tree = build_protocol(&SpaceSpec::new(1, 2).unwrap()).unwrap();
        let report = verify_equivalence(&tree).unwrap();
        assert!(report.max_element_residual() <= 1e-10);
        assert!(report.probability_difference.abs() <= 1e-10);
    }

    #[test]
    fn unreachable_sector_pairs_carry_no_weight_on_valid_inputs() {
        let tree = build_protocol(&SpaceSpec::new(3, 3).unwrap()).unwrap();
        let unreachable: Vec<_> = tree.leaves().into_iter().filter(|l| !l.reachable).collect();
        assert_eq!(unreachable.len(), 2);
        // With d_p = 3 both antisymmetric sectors are nonzero, so these are real operators.
        assert!(unreachable
            .iter()
            .all(|l| operator_norm(&l.global(tree.spec())) > 0.5));
        let s01 = pair_projectors(0, 1, 9).unwrap().symmetric;
        let s02 = pair_projectors(0, 2, 9).unwrap().symmetric;
        for leaf in &unreachable {
            let global = leaf.global(tree.spec());
            assert!((&global * &s01).max_abs() <= 1e-12);
            assert!((&global * &s02).max_abs() <= 1e-12);
        }
    }

    #[test]
    fn embedded_commutators_on_a_branch_vanish() {
        let spec = SpaceSpec::new(2, 2).unwrap();
        let tree = build_protocol(&spec).unwrap();
        let steps = tree.steps();
        let pair = steps.iter().find(|s| s.id == "e_pair").unwrap();
        let f = steps.iter().find(|s| s.id == "f").unwrap();
        let sector_a = steps
            .iter()
            .find(|s| s.id == "sector" && s.party == Party::Alice)
            .unwrap();
        let m_a =
            embed_party_operator(&sector_a.outcome("M").unwrap().element, Party::Alice, &spec)
                .unwrap();
        for o in &pair.outcomes {
            let e = embed_party_operator(&o.element, Party::Alice, &spec).unwrap();
            assert!(operator_norm(&m_a.commutator(&e)) <= 1e-12);
            for g in &f.outcomes {
                let fg = embed_party_operator(&g.element, Party::Bob, &spec).unwrap();
                assert!(operator_norm(&e.commutator(&fg)) <= 1e-12);
            }
        }
    }

    #[test]
    fn simulated_run_records_consistent_path() {
        let spec = SpaceSpec::new(2, 2).unwrap();
        let tree = build_protocol(&spec).unwrap();
        let (first, second) = sample_references(4, 5, 0);
        let mut rng = sample_rng(5, 1);
        for _ in 0..200 {
            let t = simulate_run(&tree, &first, &first, &second, &mut rng).unwrap();
            assert_ne!(t.final_label, Outcome::Second);
            assert!(!t.reached_unreachable);
            assert_eq!(t.entries[0].step, "sector");
            assert_eq!(t.entries[1].step, "sector");
            let leaves = tree.leaves();
            let leaf = find_leaf(&leaves, &t.branch_path());
            assert_eq!(leaf.label, t.final_label);
        }
    }

    #[test]
    fn simulate_rejects_wrong_dimension() {
        let tree = build_protocol(&SpaceSpec::new(2, 2).unwrap()).unwrap();
        let (a, b) = sample_references(3, 0, 0);
        let err = simulate_run(&tree, &a, &a, &b, &mut sample_rng(0, 0)).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 4,
                actual: 3
            }
        );
    }

    #[test]
    fn transcript_line_round_trip() {
        let t = Transcript {
            entries: vec![
                TranscriptEntry {
                    party: Party::Alice,
                    step: "sector",
                    outcome: "M".into(),
                },
                TranscriptEntry {
                    party: Party::Bob,
                    step: "sector",
                    outcome: "S".into(),
                },
                TranscriptEntry {
                    party: Party::Alice,
                    step: "e",
                    outcome: "2".into(),
                },
            ],
            final_label: Outcome::Second,
            reached_unreachable: false,
        };
        let line = transcript_line(42, &t);
        assert_eq!(line, "42,a:sector:M/b:sector:S/a:e:2,2");
        let record = parse_transcript_line(&line).unwrap();
        assert_eq!(record.run_index, 42);
        assert_eq!(record.branch, t.branch_path());
        assert_eq!(record.final_label, Outcome::Second);
        for bad in ["", "1,x", "x,a:sector:S,0", "1,a,7", "1,a,0,extra"] {
            assert!(parse_transcript_line(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn protocol_runs_are_independent_of_workers() {
        let tree = build_protocol(&SpaceSpec::new(2, 2).unwrap()).unwrap();
        let one = run_protocol(&tree, 500, 3, 1).unwrap();
        let four = run_protocol(&tree, 500, 3, 4).unwrap();
        assert_eq!(one, four);
        assert!(one.iter().all(|r| !r.is_misidentification()));
        assert_eq!(
            run_protocol(&tree, 0, 3, 1).unwrap_err(),
            Error::ZeroSamples
        );
    }

    #[test]
    fn run_summary_counts_labels() {
        let tree = build_protocol(&SpaceSpec::new(2, 2).unwrap()).unwrap();
        let runs = run_protocol(&tree, 2000, 11, 2).unwrap();
        let report = summarize_runs(&runs, 11).unwrap();
        let total = report.mean_success + report.mean_error + report.mean_inconclusive;
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(report.mean_error, 0.0);
        assert!(report.mean_inconclusive > 0.0);
        let p = report.mean_success;
        assert!(
            (report.stderr_success - (p * (1.0 - p) * 2000.0 / 1999.0 / 2000.0).sqrt()).abs()
                < 1e-12
        );
    }
}
