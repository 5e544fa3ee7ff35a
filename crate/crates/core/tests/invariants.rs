use std::collections::HashSet;

use num_complex::Complex64;
use proptest::prelude::*;

use polysemigroup::families::{figure1_example, sy_example};
use polysemigroup::raster::{escape_classify, julia_backward_sample, CellState, Frame, DEFAULT_MAX_ROUNDS};
use polysemigroup::semigroup::{
    postcritical_orbit, verify_trapping_disk, Budget, PcbCertificate, PcbVerdict, TOL_DEDUP,
};
use polysemigroup::{Generator, GeneratorSet, Polynomial};

const SMALL_BUDGET: Budget = Budget {
    max_depth: 12,
    max_points: 20_000,
};

fn complex(bound: f64) -> impl Strategy<Value = Complex64> {
    (-bound..bound, -bound..bound).prop_map(|(re, im)| Complex64::new(re, im))
}

fn quadratic() -> impl Strategy<Value = Polynomial> {
    (complex(1.5), complex(0.8)).prop_filter_map("leading coefficient", |(a, c)| {
        (a.norm() > 0.3).then(|| Polynomial::new(vec![c, Complex64::new(0.0, 0.0), a]).unwrap())
    })
}

fn quadratic_pair() -> impl Strategy<Value = GeneratorSet> {
    (quadratic(), quadratic()).prop_map(|(p, q)| GeneratorSet::from_polynomials(vec![p, q]).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn escape_witness_replays(gens in quadratic_pair()) {
        let (_, report) = postcritical_orbit(&gens, SMALL_BUDGET).unwrap();
        if report.verdict == PcbVerdict::Escaped {
            let word = report.witness_word.clone().unwrap();
            let value = gens.evaluate_word(&word, report.witness_start.unwrap()).unwrap();
            prop_assert!(value.norm() > report.escape_radius);
        }
    }

    #[test]
    fn trapping_disks_are_forward_invariant(gens in quadratic_pair()) {
        let (_, report) = postcritical_orbit(&gens, SMALL_BUDGET).unwrap();
        if report.certificate == PcbCertificate::TrappingDisk {
            prop_assert!(verify_trapping_disk(&gens, report.trapping_disk.unwrap()));
        }
    }

    #[test]
    fn orbit_cloud_is_forward_invariant(gens in quadratic_pair(), depth in 2usize..7) {
        let budget = |max_depth| Budget { max_depth, max_points: 1_000_000 };
        let (cloud, _) = postcritical_orbit(&gens, budget(depth)).unwrap();
        let (next, report) = postcritical_orbit(&gens, budget(depth + 1)).unwrap();
        prop_assume!(report.verdict != PcbVerdict::Escaped);
        let reach = 2.0 * TOL_DEDUP;
        for h in gens.generators() {
            for &z in &cloud {
                let w = h.eval(z);
                prop_assert!(
                    w.norm() > report.escape_radius || next.iter().any(|&p| (p - w).norm() <= reach),
                    "{} left the cloud", w
                );
            }
        }
    }

    #[test]
    fn generator_json_round_trips(polys in prop::collection::vec(quadratic(), 1..4), iterations in 1u32..20) {
        let mut generators: Vec<Generator> = polys.iter().cloned().map(Generator::new).collect();
        generators.push(Generator::iterate(polys[0].clone(), iterations).unwrap());
        let gens = GeneratorSet::new(generators).unwrap();
        let text = gens.to_json().unwrap();
        prop_assert_eq!(GeneratorSet::from_json(&text).unwrap(), gens);
    }
}

#[test]
fn backward_sample_is_backward_invariant_at_raster_scale() {
    let gens = figure1_example();
    let frame = Frame::for_generators(&gens, 128);
    let sample = julia_backward_sample(&gens, 200_000, 100, 3).unwrap();
    let occupied: HashSet<(i64, i64)> = sample.points.iter().map(|&z| frame.coords(z)).collect();
    let near = |z: Complex64| {
        let (x, y) = frame.coords(z);
        (-1..=1).any(|dx| (-1..=1).any(|dy| occupied.contains(&(x + dx, y + dy))))
    };
    for &s in sample.points.iter().step_by(400) {
        for h in gens.generators() {
            for z in h.preimages(s).unwrap() {
                assert!(near(z), "preimage {z} of {s} is far from the sample");
            }
        }
    }
}

#[test]
fn doubling_resolution_keeps_trapped_centers() {
    for gens in [sy_example(), figure1_example()] {
        let coarse = escape_classify(&gens, 128, DEFAULT_MAX_ROUNDS);
        let fine = escape_classify(&gens, 256, DEFAULT_MAX_ROUNDS);
        let mut trapped = 0;
        for (idx, state) in coarse.cells.iter().enumerate() {
            if *state == CellState::Trapped {
                trapped += 1;
                let z = coarse.frame.cell_center(idx);
                assert_ne!(fine.state_at(z), Some(CellState::Escaping), "trapped center {z} escapes when refined");
            }
        }
        assert!(trapped > 0);
    }
}
