//! Dictionary encoding, rotation and lookup against independent oracles.

mod common;

use common::{code_oracle, random_grid};
use evmarker::dictionary::{bits_to_code, generate_dictionary, render_marker, rotate_grid, BitGrid, MarkerDictionary, Rotation};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rows(g: &BitGrid) -> Vec<Vec<u8>> {
    g.rows().map(|r| r.to_vec()).collect()
}

/// Index-based clockwise rotation, written independently of the library.
fn rotate_oracle(rows: &[Vec<u8>]) -> Vec<Vec<u8>> {
    let n = rows.len();
    (0..n).map(|r| (0..n).map(|c| rows[n - 1 - c][r]).collect()).collect()
}

#[test]
fn every_rotated_entry_is_found_with_its_rotation() {
    let dict = MarkerDictionary::builtin();
    for id in 0..dict.len() {
        let mut g = dict.grid(id).unwrap();
        for k in 0..4 {
            let m = dict.lookup(&g).unwrap_or_else(|| panic!("entry {id} rotated {k} times not found"));
            assert_eq!((m.id, m.rotation), (id, Rotation::from_quarters(k)));
            assert_eq!(m.rotation.degrees(), 90 * k as u32);
            g = rotate_grid(&g);
        }
    }
}

#[test]
fn code_packing_matches_string_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..10_000 {
        let n = 1 + trial % 8;
        let g = random_grid(&mut rng, n);
        let want = code_oracle(&g);
        assert_eq!(bits_to_code(&g), want, "{g:?}");
        assert_eq!(BitGrid::from_code(want, n), g);
    }
}

#[test]
fn random_grids_rarely_hit_the_dictionary() {
    let dict = MarkerDictionary::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let hits = (0..100_000)
        .filter(|_| dict.lookup(&random_grid(&mut rng, dict.code_size())).is_some())
        .count();
    // 4 * 16 / 2^36 per grid: the expected count over 1e5 trials is ~1e-4
    assert!(hits < 5, "{hits} hits");
}

#[test]
fn builtin_dictionary_orbit_distance() {
    let dict = MarkerDictionary::builtin();
    assert_eq!((dict.len(), dict.code_size()), (16, 6));
    assert!(dict.min_orbit_distance() >= 10);
    let regenerated = generate_dictionary(16, 6, 10, 20210611, 2_000_000).unwrap();
    assert_eq!(regenerated.codes(), dict.codes());
}

#[test]
fn rendered_markers_read_back_exactly() {
    let dict = MarkerDictionary::builtin();
    let cell = 12;
    for id in 0..dict.len() {
        let r = render_marker(id, &dict, cell).unwrap();
        let n = dict.code_size() + 2;
        assert_eq!(r.image.width(), n * cell);
        let sample = |row: usize, col: usize| r.image.at(col * cell + cell / 2, row * cell + cell / 2);
        for k in 0..n {
            for edge in [(0, k), (n - 1, k), (k, 0), (k, n - 1)] {
                assert_eq!(sample(edge.0, edge.1), 0, "border cell {edge:?} of marker {id}");
            }
        }
        let rows: Vec<Vec<u8>> = (1..n - 1).map(|row| (1..n - 1).map(|col| sample(row, col)).collect()).collect();
        assert_eq!(BitGrid::from_rows(&rows), dict.grid(id).unwrap(), "marker {id}");
    }
}

proptest! {
    #[test]
    fn rotation_matches_index_oracle(seed in any::<u64>(), n in 1usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_grid(&mut rng, n);
        prop_assert_eq!(rows(&rotate_grid(&g)), rotate_oracle(&rows(&g)));
        let four = (0..4).fold(g.clone(), |acc, _| rotate_grid(&acc));
        prop_assert_eq!(four, g);
    }

    #[test]
    fn hamming_is_a_metric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b, c) = (random_grid(&mut rng, 6), random_grid(&mut rng, 6), random_grid(&mut rng, 6));
        prop_assert_eq!(a.hamming(&a), 0);
        prop_assert_eq!(a.hamming(&b), b.hamming(&a));
        prop_assert!(a.hamming(&c) <= a.hamming(&b) + b.hamming(&c));
        prop_assert_eq!(a.hamming(&b), rotate_grid(&a).hamming(&rotate_grid(&b)));
    }
}
