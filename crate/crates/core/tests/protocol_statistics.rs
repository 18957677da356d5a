use pureid_core::montecarlo::{haar_state, map_indexed, product_state, sample_references};
use pureid_core::{
    build_protocol, closed_form_separable, induced_povm, sample_rng, simulate_run, Outcome,
    ProtocolTree, SpaceSpec, StateVector,
};

const RUNS: usize = 100_000;
const WORKERS: usize = 4;

fn two_qubit_tree() -> ProtocolTree {
    build_protocol(&SpaceSpec::new(2, 2).unwrap()).unwrap()
}

fn label_counts(
    tree: &ProtocolTree,
    input: &StateVector,
    first: &StateVector,
    second: &StateVector,
    seed: u64,
) -> [usize; 3] {
    let labels = map_indexed(RUNS, WORKERS, |i| {
        let mut rng = sample_rng(seed, i as u64);
        simulate_run(tree, input, first, second, &mut rng)
            .unwrap()
            .final_label
    });
    let mut counts = [0; 3];
    for label in labels {
        counts[label.label() as usize] += 1;
    }
    counts
}

fn within_four_sigma(count: usize, p: f64, n: usize) -> bool {
    let freq = count as f64 / n as f64;
    if p < 1e-12 {
        return count == 0;
    }
    (freq - p).abs() <= 4.0 * (p * (1.0 - p) / n as f64).sqrt()
}

#[test]
fn fixed_reference_pairs_follow_induced_measurement() {
    let tree = two_qubit_tree();
    let induced = induced_povm(&tree).unwrap();
    for pair in 0..5u64 {
        let (first, second) = sample_references(4, 1_000, pair);
        for (input_is_first, input) in [(true, &first), (false, &second)] {
            let counts = label_counts(&tree, input, &first, &second, 77 + pair);
            let psi = product_state(input, &first, &second);
            for outcome in Outcome::ALL {
                let p = induced.element(outcome).expectation(&psi);
                let count = counts[outcome.label() as usize];
                assert!(
                    within_four_sigma(count, p, RUNS),
                    "pair {pair}, input first = {input_is_first}, {outcome:?}: {count} vs p = {p}"
                );
            }
            let wrong = if input_is_first {
                Outcome::Second
            } else {
                Outcome::First
            };
            assert_eq!(counts[wrong.label() as usize], 0);
        }
    }
}

#[test]
fn identical_references_are_never_named() {
    // phi ⊗ phi ⊗ phi lies in the range of both pair projectors, so both
    // answers are excluded and labels 1 and 2 are equally likely: never.
    let tree = two_qubit_tree();
    let labels = map_indexed(RUNS, WORKERS, |i| {
        let mut rng = sample_rng(31, i as u64);
        let phi = haar_state(4, &mut rng);
        simulate_run(&tree, &phi, &phi, &phi, &mut rng)
            .unwrap()
            .final_label
    });
    assert!(labels.iter().all(|&l| l == Outcome::Inconclusive));
}

#[test]
fn answers_are_symmetric_under_exchanging_references() {
    let tree = two_qubit_tree();
    let named = |input_is_first: bool, target: Outcome| {
        map_indexed(RUNS, WORKERS, |i| {
            let (first, second) = sample_references(4, 55 + input_is_first as u64, i as u64);
            let input = if input_is_first { &first } else { &second };
            let mut rng = sample_rng(56, i as u64);
            simulate_run(&tree, input, &first, &second, &mut rng)
                .unwrap()
                .final_label
                == target
        })
        .into_iter()
        .filter(|&hit| hit)
        .count() as f64
    };
    let ones = named(true, Outcome::First);
    let twos = named(false, Outcome::Second);
    let n = RUNS as f64;
    let variance = ones * (1.0 - ones / n) + twos * (1.0 - twos / n);
    assert!(
        (ones - twos).abs() <= 4.0 * variance.sqrt(),
        "{ones} vs {twos}"
    );
}

#[test]
fn first_reference_input_is_named_at_separable_rate() {
    let tree = two_qubit_tree();
    let induced = induced_povm(&tree).unwrap();
    let results = map_indexed(RUNS, WORKERS, |i| {
        let (first, second) = sample_references(4, 2_024, i as u64);
        let mut rng = sample_rng(2_025, i as u64);
        let label = simulate_run(&tree, &first, &first, &second, &mut rng)
            .unwrap()
            .final_label;
        let exact = induced
            .element(Outcome::First)
            .expectation(&product_state(&first, &first, &second));
        (label, exact)
    });
    let named = results.iter().filter(|(l, _)| *l == Outcome::First).count();
    let wrong = results
        .iter()
        .filter(|(l, _)| *l == Outcome::Second)
        .count();
    assert_eq!(wrong, 0);

    let target = closed_form_separable(2, 2);
    assert!(
        within_four_sigma(named, target, RUNS),
        "{named} vs {target}"
    );
    let exact_mean = results.iter().map(|(_, p)| p).sum::<f64>() / RUNS as f64;
    assert!(
        within_four_sigma(named, exact_mean, RUNS),
        "{named} vs {exact_mean}"
    );
}
