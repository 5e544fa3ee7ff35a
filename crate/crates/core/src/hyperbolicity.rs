//! Numeric evidence for hyperbolicity: the planar postcritical set should
//! stay a positive distance away from the Julia set.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::raster::{Frame, JuliaSample};
use crate::semigroup::{GeneratorSet, Tri};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum HyperbolicVerdict {
    Evidence { margin: f64 },
    Violated { witness: Complex64 },
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicityReport {
    /// `None` when the postcritical cloud or the Julia sample is empty.
    pub min_separation: Option<f64>,
    /// Postcritical point realising the minimum.
    pub closest_point: Option<Complex64>,
    pub margin: f64,
    pub verdict: HyperbolicVerdict,
    pub pcb_verdict: Tri,
}

/// Default margin: two cell diagonals.
pub fn default_margin(frame: &Frame) -> f64 {
    2.0 * frame.cell_diagonal()
}

/// Occupancy mask of a point cloud.
pub fn occupied_cells(frame: &Frame, points: &[Complex64]) -> Vec<bool> {
    let mut occ = vec![false; frame.len()];
    for &p in points {
        if let Some(i) = frame.locate(p) {
            occ[i] = true;
        }
    }
    occ
}

fn rect_distance(frame: &Frame, idx: usize, z: Complex64) -> f64 {
    let (x, y) = frame.xy(idx);
    let a = frame.lattice_point(x as f64, y as f64 + 1.0);
    let b = frame.lattice_point(x as f64 + 1.0, y as f64);
    let dx = (a.re - z.re).max(0.0).max(z.re - b.re);
    let dy = (a.im - z.im).max(0.0).max(z.im - b.im);
    dx.hypot(dy)
}

/// Euclidean distance from `z` to the nearest occupied cell (0 inside one),
/// by ring search around `z`'s cell.
pub fn distance_to_occupied(frame: &Frame, occ: &[bool], z: Complex64) -> Option<f64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return None;
    }
    let n = frame.resolution as i64;
    let (x, y) = frame.coords(z);
    let (cx, cy) = (x.clamp(0, n - 1), y.clamp(0, n - 1));
    let cell = frame.cell_width().min(frame.cell_height());
    let mut best = f64::INFINITY;
    for r in 0..=n {
        if best.is_finite() && (r - 1) as f64 * cell > best {
            break;
        }
        for dy in -r..=r {
            for dx in -r..=r {
                if dx.abs() != r && dy.abs() != r {
                    continue;
                }
                let (a, b) = (cx + dx, cy + dy);
                if !(0..n).contains(&a) || !(0..n).contains(&b) {
                    continue;
                }
                let idx = b as usize * frame.resolution + a as usize;
                if occ[idx] {
                    best = best.min(rect_distance(frame, idx, z));
                }
            }
        }
    }
    best.is_finite().then_some(best)
}

/// Separation of the postcritical cloud from the occupied cells of the
/// Julia sample on the standard frame at `resolution`.
pub fn hyperbolic_check(
    gens: &GeneratorSet,
    julia: &JuliaSample,
    pc_cloud: &[Complex64],
    margin: f64,
    resolution: usize,
    pcb_verdict: Tri,
) -> HyperbolicityReport {
    let frame = Frame::for_generators(gens, resolution);
    hyperbolic_check_on(&frame, julia, pc_cloud, margin, pcb_verdict)
}

pub fn hyperbolic_check_on(
    frame: &Frame,
    julia: &JuliaSample,
    pc_cloud: &[Complex64],
    margin: f64,
    pcb_verdict: Tri,
) -> HyperbolicityReport {
    let occ = occupied_cells(frame, &julia.points);
    let closest = pc_cloud
        .par_iter()
        .filter_map(|&p| distance_to_occupied(frame, &occ, p).map(|d| (d, p)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.re.total_cmp(&b.1.re)).then(a.1.im.total_cmp(&b.1.im)));
    let verdict = match closest {
        None => HyperbolicVerdict::Evidence { margin },
        Some((d, _)) if d > margin => HyperbolicVerdict::Evidence { margin },
        Some((d, p)) if d == 0.0 => HyperbolicVerdict::Violated { witness: p },
        Some(_) => HyperbolicVerdict::Undecided,
    };
    HyperbolicityReport {
        min_separation: closest.map(|c| c.0),
        closest_point: closest.map(|c| c.1),
        margin,
        verdict,
        pcb_verdict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Polynomial;
    use crate::raster::julia_backward_sample;
    use crate::semigroup::{postcritical_orbit, Budget};
    use proptest::prelude::*;

    fn set(c: &[f64]) -> GeneratorSet {
        GeneratorSet::from_polynomials(vec![Polynomial::from_real(c).unwrap()]).unwrap()
    }

    #[test]
    fn square_map_has_evidence() {
        let gens = set(&[0.0, 0.0, 1.0]);
        let sample = julia_backward_sample(&gens, 20_000, 10, 0).unwrap();
        let (cloud, pcb) = postcritical_orbit(&gens, Budget::default()).unwrap();
        assert_eq!(cloud, vec![Complex64::new(0.0, 0.0)]);
        let frame = Frame::for_generators(&gens, 256);
        let margin = default_margin(&frame);
        let rep = hyperbolic_check(&gens, &sample, &cloud, margin, 256, pcb.verdict.into());
        let d = rep.min_separation.unwrap();
        assert!(d > 1.0 - frame.cell_diagonal() && d <= 1.0);
        assert_eq!(rep.verdict, HyperbolicVerdict::Evidence { margin });
        assert!(margin < 1.0);
    }

    #[test]
    fn chebyshev_map_is_violated() {
        let gens = set(&[-2.0, 0.0, 1.0]);
        let sample = julia_backward_sample(&gens, 50_000, 10, 0).unwrap();
        let (cloud, _) = postcritical_orbit(&gens, Budget::default()).unwrap();
        let rep = hyperbolic_check(&gens, &sample, &cloud, 0.1, 512, Tri::Yes);
        match rep.verdict {
            HyperbolicVerdict::Violated { witness } => assert!((witness.norm() - 2.0).abs() < 1e-9),
            v => panic!("expected a violation, got {v:?}"),
        }
    }

    #[test]
    fn ring_search_matches_brute_force() {
        let frame = Frame::square(Complex64::new(0.0, 0.0), 1.0, 64);
        let mut occ = vec![false; frame.len()];
        for &i in &[5usize, 700, 2047, 4000] {
            occ[i] = true;
        }
        for &z in &[Complex64::new(0.3, -0.2), Complex64::new(-0.99, 0.99), Complex64::new(3.0, 0.0)] {
            let brute = (0..frame.len())
                .filter(|&i| occ[i])
                .map(|i| rect_distance(&frame, i, z))
                .fold(f64::INFINITY, f64::min);
            assert!((distance_to_occupied(&frame, &occ, z).unwrap() - brute).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn enlarging_the_sample_never_increases_separation(seed in 0u64..50, cut in 10usize..400) {
            let gens = set(&[-1.0, 0.0, 1.0]);
            let sample = julia_backward_sample(&gens, 400, 10, seed).unwrap();
            let small = JuliaSample { points: sample.points[..cut].to_vec(), ..sample.clone() };
            let cloud = [Complex64::new(0.0, 0.0), Complex64::new(-1.0, 0.0)];
            let frame = Frame::for_generators(&gens, 128);
            let a = hyperbolic_check_on(&frame, &small, &cloud, 0.1, Tri::Yes).min_separation.unwrap();
            let b = hyperbolic_check_on(&frame, &sample, &cloud, 0.1, Tri::Yes).min_separation.unwrap();
            prop_assert!(b <= a);
        }
    }
}
