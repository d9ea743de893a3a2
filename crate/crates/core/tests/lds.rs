#[path = "common/lds_checks.rs"]
mod checks;

use popf_core::lds::{star_discrepancy_1d, star_discrepancy_grid, StreamKind, StreamSpec};
use checks::*;
use proptest::prelude::*;

#[test]
fn sobol_matches_bit_oracle() {
    checks::sobol_matches_bit_oracle();
}

#[test]
fn first_sobol_points() {
    checks::first_sobol_points();
}

#[test]
fn bundled_table_checksum() {
    checks::bundled_table_checksum();
}

#[test]
fn one_d_discrepancy_examples() {
    checks::one_d_discrepancy_examples();
}

#[test]
fn single_centre_point_in_two_d() {
    checks::single_centre_point_in_two_d();
}

#[test]
fn grid_rejects_empty_and_high_dimension() {
    checks::grid_rejects_empty_and_high_dimension();
}

#[test]
fn sobol_128_beats_srs_in_two_d() {
    checks::sobol_128_beats_srs_in_two_d();
}

#[test]
fn lhs_examples() {
    checks::lhs_examples();
}

#[test]
fn every_coordinate_is_in_unit_interval() {
    checks::every_coordinate_is_in_unit_interval();
}

#[test]
fn chacha_block_matches_rfc_vector() {
    checks::chacha_block_matches_rfc_vector();
}

#[test]
fn prng_matches_independent_chacha20() {
    checks::prng_matches_independent_chacha20();
}

#[test]
fn sobol_discrepancy_decay() {
    checks::sobol_discrepancy_decay();
}

#[test]
fn sobol_beats_mean_srs() {
    checks::sobol_beats_mean_srs();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn closed_form_agrees_with_grid_sup(xs in prop::collection::vec(0.0f64..1.0, 1..40)) {
        let exact = star_discrepancy_1d(&xs).unwrap();
        let grid = grid_sup_1d(&xs, 1e-3);
        prop_assert!((exact - grid).abs() < 1e-12, "closed form {} vs grid {}", exact, grid);
    }

    #[test]
    fn bracket_contains_dense_grid_value(pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..25)) {
        let p: Vec<[f64; 2]> = pts.iter().map(|&(a, b)| [a, b]).collect();
        let b = star_discrepancy_grid(&p, 32).unwrap();
        let dense = dense_grid_2d(&p, 200);
        prop_assert!(b.lower <= b.upper);
        prop_assert!(dense <= b.upper + 1e-12, "dense {} above upper {}", dense, b.upper);
    }

    #[test]
    fn streams_are_reproducible(kind in prop::sample::select(vec![StreamKind::Srs, StreamKind::Lhs, StreamKind::Sobol]),
                                dim in 1usize..6, seed in any::<u64>(), skip in 0u64..500, shift in any::<bool>()) {
        let spec = StreamSpec::new(kind, dim, seed).with_skip(skip).with_digital_shift(shift && kind == StreamKind::Sobol).with_lhs_block(64, true);
        let a = spec.build().unwrap().take_points(150).unwrap();
        let b = spec.build().unwrap().take_points(150).unwrap();
        prop_assert_eq!(a, b);
    }
}
